//! Scalar root bracketing and bisection.

/// Bisection on `[a, b]` where `f(a)` and `f(b)` have opposite signs.
/// Stops once the bracket is narrower than `tol` or an exact zero is hit.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Index pairs `(i, j)` with `i < j` bracketing each strict sign change of
/// `values`. Samples with `|value| <= floor` count as zero and are skipped;
/// touches and sub-floor noise produce no bracket.
pub fn sign_change_brackets(values: &[f64], floor: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    for (i, &v) in values.iter().enumerate() {
        if !(v.abs() > floor) {
            continue;
        }
        let positive = v > 0.0;
        if let Some((j, prev)) = last {
            if prev != positive {
                out.push((j, i));
            }
        }
        last = Some((i, positive));
    }
    out
}

/// `n` evenly spaced points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn brackets_skip_touches_and_noise() {
        let v = [1.0, 0.5, 0.0, 0.4, -0.2, -1e-14, 1e-14, -0.3, 0.1];
        assert_eq!(sign_change_brackets(&v, 1e-12), vec![(3, 4), (7, 8)]);
    }

    #[test]
    fn linspace_hits_endpoints() {
        let x = linspace(-50.0, 50.0, 7);
        assert_eq!(x[0], -50.0);
        assert_eq!(x[6], 50.0);
        assert_eq!(x.len(), 7);
    }
}
