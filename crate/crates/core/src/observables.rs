//! Entanglement and correlation measures for the two-site system.
//!
//! Local-basis matrices are ordered (both occupied, A occupied, B occupied,
//! empty), which is the tensor-product order `|1⟩,|0⟩ ⊗ |1⟩,|0⟩`. Entropies are in bits.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::twosite::{global_to_local_unchecked, TwoSiteState};

const HERMITIAN_TOL: f64 = 1e-8;
const TRACE_TOL: f64 = 1e-6;
const CLAMP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    A,
    B,
}

fn check_density(m: &DMatrix<Complex64>) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let skew = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if skew > HERMITIAN_TOL {
        return Err(Error::NotADensityMatrix(format!("not Hermitian (deviation {skew:.3e})")));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::NotADensityMatrix(format!("trace is {tr}")));
    }
    Ok(())
}

fn to_dynamic(m: &Matrix4<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(4, 4, m.as_slice())
}

/// Joint von Neumann entropy of a site-basis density matrix, in bits.
pub fn joint_entropy(rho_local: &Matrix4<Complex64>) -> Result<f64> {
    von_neumann_entropy(&to_dynamic(rho_local))
}

/// `2·max(0, |ρ₂₃ˡ| − √(ρ₁₁ˡ ρ₄₄ˡ))` on a site-basis density matrix.
pub fn concurrence_local(rho_local: &Matrix4<Complex64>) -> Result<f64> {
    check_density(&to_dynamic(rho_local))?;
    let corner = (rho_local[(0, 0)].re * rho_local[(3, 3)].re).max(0.0);
    Ok(2.0 * (rho_local[(1, 2)].norm() - corner.sqrt()).max(0.0))
}

/// Eigenbasis shortcut `2·max(0, ½|ρ₂₂ − ρ₃₃| − √(ρ₁₁ρ₄₄))`, valid only without coherence.
pub fn concurrence_eigenbasis(state: &TwoSiteState) -> Result<f64> {
    if state.coherence.norm() != 0.0 {
        return Err(Error::OutOfDomain(
            "eigenbasis concurrence assumes a vanishing coherence; use the local form".into(),
        ));
    }
    let [p1, p2, p3, p4] = state.populations;
    Ok(2.0 * (0.5 * (p2 - p3).abs() - (p1 * p4).max(0.0).sqrt()).max(0.0))
}

/// `−Σ p log₂ p` over the eigenvalues; eigenvalues down to `−10⁻⁸` are clamped to 0.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> Result<f64> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(Error::NotADensityMatrix("matrix must be square and nonempty".into()));
    }
    check_density(rho)?;
    let hermitian = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let eigs = hermitian.symmetric_eigenvalues();
    let mut s = 0.0;
    for &p in eigs.iter() {
        if p < -CLAMP_TOL {
            return Err(Error::NotADensityMatrix(format!("negative eigenvalue {p:.3e}")));
        }
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Partial trace onto one site; the 2×2 result is ordered (occupied, empty).
pub fn reduced_state(rho_local: &Matrix4<Complex64>, site: Site) -> Result<Matrix2<Complex64>> {
    check_density(&to_dynamic(rho_local))?;
    let r = rho_local;
    Ok(match site {
        Site::A => Matrix2::new(
            r[(0, 0)] + r[(1, 1)],
            r[(0, 2)] + r[(1, 3)],
            r[(2, 0)] + r[(3, 1)],
            r[(2, 2)] + r[(3, 3)],
        ),
        Site::B => Matrix2::new(
            r[(0, 0)] + r[(2, 2)],
            r[(0, 1)] + r[(2, 3)],
            r[(1, 0)] + r[(3, 2)],
            r[(1, 1)] + r[(3, 3)],
        ),
    })
}

/// `S(ρᴬ) + S(ρᴮ) − S(ρᴬᴮ)` in bits.
pub fn quantum_mutual_information(rho_local: &Matrix4<Complex64>) -> Result<f64> {
    let a = reduced_state(rho_local, Site::A)?;
    let b = reduced_state(rho_local, Site::B)?;
    let sa = von_neumann_entropy(&DMatrix::from_column_slice(2, 2, a.as_slice()))?;
    let sb = von_neumann_entropy(&DMatrix::from_column_slice(2, 2, b.as_slice()))?;
    let sab = von_neumann_entropy(&to_dynamic(rho_local))?;
    Ok((sa + sb - sab).max(0.0))
}

/// Concurrence, mutual information and joint entropy of an eigenbasis state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateObservables {
    pub concurrence: f64,
    pub mutual_information: f64,
    pub entropy: f64,
}

/// Observables of a symmetric-site state, routed through the site basis.
pub fn state_observables(state: &TwoSiteState) -> Result<StateObservables> {
    let local = global_to_local_unchecked(state);
    Ok(StateObservables {
        concurrence: concurrence_local(&local)?,
        mutual_information: quantum_mutual_information(&local)?,
        entropy: von_neumann_entropy(&to_dynamic(&local))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag4(p: [f64; 4]) -> Matrix4<Complex64> {
        Matrix4::from_diagonal(&nalgebra::Vector4::from(p.map(c)))
    }

    fn bell() -> Matrix4<Complex64> {
        let mut m = diag4([0.0, 0.5, 0.5, 0.0]);
        m[(1, 2)] = c(0.5);
        m[(2, 1)] = c(0.5);
        m
    }

    fn kron(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
        Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
    }

    #[test]
    fn concurrence_examples() {
        assert_eq!(concurrence_local(&diag4([0.25; 4])).unwrap(), 0.0);
        assert_abs_diff_eq!(concurrence_local(&bell()).unwrap(), 1.0, epsilon = 1e-15);
        let s = TwoSiteState::diagonal([0.0, 0.2, 0.7, 0.1]).unwrap();
        assert_abs_diff_eq!(concurrence_local(&global_to_local_unchecked(&s)).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn eigenbasis_concurrence_examples() {
        let pure = TwoSiteState::diagonal([0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(concurrence_eigenbasis(&pure).unwrap(), 1.0, epsilon = 1e-15);
        let even = TwoSiteState::diagonal([0.2, 0.3, 0.3, 0.2]).unwrap();
        assert_eq!(concurrence_eigenbasis(&even).unwrap(), 0.0);
        let fig = TwoSiteState::diagonal([0.1, 0.65, 0.1, 0.15]).unwrap();
        assert_abs_diff_eq!(concurrence_eigenbasis(&fig).unwrap(), 2.0 * (0.275 - 0.015f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(concurrence_eigenbasis(&fig).unwrap(), 0.30505, epsilon = 1e-5);
        let coherent = TwoSiteState::new([0.1, 0.25, 0.65, 0.0], Complex64::new(0.2, 0.0)).unwrap();
        assert!(matches!(concurrence_eigenbasis(&coherent), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn entropy_examples() {
        let pure = DMatrix::from_fn(2, 2, |_, _| c(0.5));
        assert_abs_diff_eq!(von_neumann_entropy(&pure).unwrap(), 0.0, epsilon = 1e-12);
        let mixed = DMatrix::from_diagonal_element(2, 2, c(0.5));
        assert_abs_diff_eq!(von_neumann_entropy(&mixed).unwrap(), 1.0, epsilon = 1e-15);
        let dyadic = to_dynamic(&diag4([0.5, 0.25, 0.125, 0.125]));
        assert_abs_diff_eq!(von_neumann_entropy(&dyadic).unwrap(), 1.75, epsilon = 1e-14);
    }

    #[test]
    fn entropy_rejects_invalid_input() {
        let neg = to_dynamic(&diag4([0.6, 0.5, -0.1, 0.0]));
        assert!(matches!(von_neumann_entropy(&neg), Err(Error::NotADensityMatrix(_))));
        let mut skew = to_dynamic(&diag4([0.25; 4]));
        skew[(0, 1)] = c(0.1);
        assert!(von_neumann_entropy(&skew).is_err());
        let short = to_dynamic(&diag4([0.25, 0.25, 0.25, 0.0]));
        assert!(von_neumann_entropy(&short).is_err());
    }

    #[test]
    fn reduced_state_examples() {
        let a = Matrix2::new(c(0.3), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), c(0.7));
        let b = Matrix2::new(c(0.6), c(0.05), c(0.05), c(0.4));
        let prod = kron(&a, &b);
        assert!((reduced_state(&prod, Site::A).unwrap() - a).iter().all(|z| z.norm() < 1e-15));
        assert!((reduced_state(&prod, Site::B).unwrap() - b).iter().all(|z| z.norm() < 1e-15));

        let half = Matrix2::from_diagonal_element(c(0.5));
        assert!((reduced_state(&bell(), Site::A).unwrap() - half).iter().all(|z| z.norm() < 1e-15));

        // occupied-A weight is the sum of the doubly occupied and A-only entries
        let s = TwoSiteState::diagonal([0.4, 0.1, 0.2, 0.3]).unwrap();
        let local = global_to_local_unchecked(&s);
        let ra = reduced_state(&local, Site::A).unwrap();
        assert_abs_diff_eq!(ra[(0, 0)].re, 0.4 + 0.15, epsilon = 1e-15);
    }

    #[test]
    fn mutual_information_examples() {
        let a = Matrix2::new(c(0.3), c(0.1), c(0.1), c(0.7));
        let b = Matrix2::new(c(0.6), c(0.0), c(0.0), c(0.4));
        assert_abs_diff_eq!(quantum_mutual_information(&kron(&a, &b)).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantum_mutual_information(&bell()).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quantum_mutual_information(&diag4([0.25; 4])).unwrap(), 0.0, epsilon = 1e-12);
    }

    fn diagonal_state() -> impl Strategy<Value = TwoSiteState> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.001f64..1.0).prop_map(|(a, b, cc, d)| {
            let t = a + b + cc + d;
            TwoSiteState::diagonal([a / t, b / t, cc / t, d / t]).unwrap()
        })
    }

    fn coherent_state() -> impl Strategy<Value = TwoSiteState> {
        (diagonal_state(), 0.0f64..0.999, 0.0f64..std::f64::consts::TAU).prop_map(|(s, frac, phase)| {
            let r = frac * (s.populations[1] * s.populations[2]).sqrt();
            TwoSiteState::new(s.populations, Complex64::from_polar(r, phase)).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn measures_stay_in_range(s in coherent_state()) {
            let o = state_observables(&s).unwrap();
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&o.concurrence));
            prop_assert!((-1e-9..=2.0 + 1e-9).contains(&o.mutual_information));
            prop_assert!((-1e-9..=2.0 + 1e-9).contains(&o.entropy));
        }

        #[test]
        fn eigenbasis_route_matches_local_route(s in diagonal_state()) {
            let local = concurrence_local(&global_to_local_unchecked(&s)).unwrap();
            prop_assert!((concurrence_eigenbasis(&s).unwrap() - local).abs() < 1e-12);
        }

        #[test]
        fn entropy_is_basis_independent(s in coherent_state()) {
            let global = DMatrix::from_column_slice(4, 4, s.density_matrix().as_slice());
            let local = to_dynamic(&global_to_local_unchecked(&s));
            let a = von_neumann_entropy(&global).unwrap();
            let b = von_neumann_entropy(&local).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
