//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of dimension at most 16. The eigensolver
//! returns a biorthonormal pair of eigenvector matrices for mode-by-mode
//! propagation, `x(t) = R exp(diag(λ) t) L x(0)`. The fixed-step RK4
//! integrator shares no code with the spectral route.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;

/// Largest matrix dimension accepted by [`ComplexMatrix`].
pub const MAX_DIM: usize = 16;

/// Absolute tolerance on `‖MR − RΛ‖` and `‖LR − I‖`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Eigenvalues closer than this (relative to the matrix scale) are treated as
/// one degenerate cluster.
const CLUSTER_TOL: f64 = 1e-8;

/// Ordering ties on real/imaginary parts are resolved with this tolerance.
const ORDER_TOL: f64 = 1e-10;

/// Largest singular value accepted as "zero" when extracting an eigenspace.
const NULL_TOL: f64 = 1e-7;

/// Default step of the RK4 oracle, in units of 1/Γ.
pub const DEFAULT_RK4_STEP: f64 = 1e-3;

/// Dense square complex matrix with finite entries and `1 <= dim <= 16`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 || m.nrows() > MAX_DIM {
            return Err(Error::InvalidDimension(m.nrows()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    /// Builds a real-valued matrix from row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    /// Matrix-vector product. Panics if `v` has the wrong length.
    pub fn apply(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    /// Column sums restricted to the first `rows` rows.
    pub fn partial_column_sums(&self, rows: usize) -> Vec<Complex64> {
        (0..self.dim())
            .map(|j| (0..rows.min(self.dim())).map(|i| self.0[(i, j)]).sum())
            .collect()
    }
}

/// Eigenvalues with biorthonormal right (columns) and left (rows) eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<Complex64>,
    right: DMatrix<Complex64>,
    left: DMatrix<Complex64>,
    residual: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Columns are right eigenvectors, in eigenvalue order.
    pub fn right_vectors(&self) -> &DMatrix<Complex64> {
        &self.right
    }

    /// Rows are left eigenvectors, scaled so that `L·R = I`.
    pub fn left_vectors(&self) -> &DMatrix<Complex64> {
        &self.left
    }

    /// Larger of `‖MR − RΛ‖_max` and `‖LR − I‖_max` at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    fn check_dim(&self, v: &CVector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn mode_coefficients(&self, state0: &CVector) -> Result<ModeCoefficients> {
        self.check_dim(state0)?;
        let alphas = &self.left * state0;
        Ok(ModeCoefficients {
            alphas: alphas.iter().copied().collect(),
        })
    }

    /// `Σ_i e^{λ_i t} α_i v_i`. Returns `state0` unchanged at `t = 0`.
    pub fn propagate(&self, state0: &CVector, t: f64) -> Result<CVector> {
        self.check_dim(state0)?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidTimes(format!("time {t} must be finite and nonnegative")));
        }
        if t == 0.0 {
            return Ok(state0.clone());
        }
        let alphas = &self.left * state0;
        Ok(self.propagate_coefficients(&alphas, t))
    }

    /// Propagates precomputed mode coefficients `α = L·x(0)` to time `t`.
    pub fn propagate_coefficients(&self, alphas: &CVector, t: f64) -> CVector {
        let weighted = CVector::from_iterator(
            self.dim(),
            self.eigenvalues
                .iter()
                .zip(alphas.iter())
                .map(|(lambda, a)| (lambda * t).exp() * a),
        );
        &self.right * weighted
    }

    /// Propagates `state0` to each entry of `times` (nonnegative, any order).
    pub fn propagate_many(&self, state0: &CVector, times: &[f64]) -> Result<Vec<CVector>> {
        self.check_dim(state0)?;
        let alphas = &self.left * state0;
        times
            .iter()
            .map(|&t| {
                if !(t >= 0.0) || !t.is_finite() {
                    Err(Error::InvalidTimes(format!("time {t} must be finite and nonnegative")))
                } else if t == 0.0 {
                    Ok(state0.clone())
                } else {
                    Ok(self.propagate_coefficients(&alphas, t))
                }
            })
            .collect()
    }
}

/// Coefficients of a state in the right-eigenvector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub alphas: Vec<Complex64>,
}

impl ModeCoefficients {
    /// `Σ_i α_i v_i`.
    pub fn reconstruct(&self, decomp: &SpectralDecomposition) -> CVector {
        decomp.right_vectors() * CVector::from_column_slice(&self.alphas)
    }
}

/// Eigendecomposition via complex Schur form plus per-cluster null spaces.
///
/// Eigenvalues come out sorted by descending real part, then ascending
/// imaginary part, then original Schur position. Degenerate clusters get a
/// canonical basis of their eigenspace (identity on pivot rows), so a diagonal
/// input returns identity eigenvector matrices.
pub fn eigendecompose(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let n = m.dim();
    let a = m.as_matrix();
    let scale = max_abs(a).max(1.0);

    let max_iter = 200 * n.max(1);
    let schur = Schur::try_new(a.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::NonConvergence { iterations: max_iter })?;
    let (_, t) = schur.unpack();
    let raw: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let order = sort_order(&raw, ORDER_TOL * scale);
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| raw[i]).collect();

    let mut right = DMatrix::<Complex64>::zeros(n, n);
    for cluster in clusters(&eigenvalues, CLUSTER_TOL * scale) {
        let mean = cluster.iter().map(|&i| eigenvalues[i]).sum::<Complex64>() / cluster.len() as f64;
        let basis = eigenspace(a, mean, cluster.len(), NULL_TOL * scale)?;
        for (slot, &col) in cluster.iter().enumerate() {
            right.set_column(col, &basis.column(slot));
        }
    }

    let left = right
        .clone()
        .try_inverse()
        .ok_or(Error::DefectiveMatrix { residual: f64::INFINITY })?;

    let lambda = DMatrix::from_diagonal(&CVector::from_column_slice(&eigenvalues));
    let eigen_residual = max_abs(&(a * &right - &right * &lambda));
    let biorth_residual = max_abs(&(&left * &right - DMatrix::identity(n, n)));
    let residual = eigen_residual.max(biorth_residual);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::DefectiveMatrix { residual });
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        right,
        left,
        residual,
    })
}

/// Right eigenvector of the (near-)zero eigenvalue, scaled to unit component sum.
pub fn null_vector(m: &ComplexMatrix) -> Result<CVector> {
    let decomp = eigendecompose(m)?;
    let (idx, min_abs) = decomp
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("decomposition has at least one eigenvalue");
    if min_abs > 1e-9 {
        return Err(Error::NoNullSpace { min_abs });
    }
    let v = decomp.right_vectors().column(idx).into_owned();
    let total: Complex64 = v.iter().sum();
    if total.norm() < 1e-12 {
        return Err(Error::InconsistentEigensystem(
            "null vector has vanishing component sum".into(),
        ));
    }
    Ok(v / total)
}

/// Classical fixed-step RK4 for `dx/dt = G x`; the last step is shortened so
/// the integration lands exactly on `t_end`.
pub fn rk4_integrate<F>(apply: F, state0: &CVector, t_end: f64, dt: f64) -> Result<CVector>
where
    F: Fn(&CVector) -> CVector,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidStep(dt));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidTimes(format!("end time {t_end} must be finite and nonnegative")));
    }
    let mut x = state0.clone();
    rk4_advance(&apply, &mut x, t_end, dt);
    Ok(x)
}

/// RK4 through a nondecreasing list of sample times starting from `t = 0`.
pub fn rk4_trajectory<F>(apply: F, state0: &CVector, times: &[f64], dt: f64) -> Result<Vec<CVector>>
where
    F: Fn(&CVector) -> CVector,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidStep(dt));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut x = state0.clone();
    let mut now = 0.0;
    for &t in times {
        if !(t >= now) || !t.is_finite() {
            return Err(Error::InvalidTimes("sample times must be nonnegative and nondecreasing".into()));
        }
        rk4_advance(&apply, &mut x, t - now, dt);
        now = t;
        out.push(x.clone());
    }
    Ok(out)
}

fn rk4_advance<F>(apply: &F, x: &mut CVector, span: f64, dt: f64)
where
    F: Fn(&CVector) -> CVector,
{
    if span <= 0.0 {
        return;
    }
    let full_steps = (span / dt).floor() as u64;
    let remainder = span - full_steps as f64 * dt;
    for _ in 0..full_steps {
        rk4_step(apply, x, dt);
    }
    if remainder > 1e-12 * dt {
        rk4_step(apply, x, remainder);
    }
}

fn rk4_step<F>(apply: &F, x: &mut CVector, h: f64)
where
    F: Fn(&CVector) -> CVector,
{
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let k1 = apply(x);
    let k2 = apply(&(&*x + &k1 * half));
    let k3 = apply(&(&*x + &k2 * half));
    let k4 = apply(&(&*x + &k3 * full));
    let sixth = Complex64::new(h / 6.0, 0.0);
    *x += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * sixth;
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest componentwise modulus of `a − b`.
pub fn max_abs_diff(a: &CVector, b: &CVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Stable ordering: descending real part, ascending imaginary part, original
/// index. Parts within `tol` of each other count as ties.
fn sort_order(values: &[Complex64], tol: f64) -> Vec<usize> {
    let mut by_re: Vec<usize> = (0..values.len()).collect();
    by_re.sort_by(|&a, &b| values[b].re.total_cmp(&values[a].re).then(a.cmp(&b)));

    let mut order = Vec::with_capacity(values.len());
    let mut start = 0;
    while start < by_re.len() {
        let mut end = start + 1;
        while end < by_re.len() && values[by_re[end - 1]].re - values[by_re[end]].re <= tol {
            end += 1;
        }
        let mut group: Vec<usize> = by_re[start..end].to_vec();
        group.sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im).then(a.cmp(&b)));
        // ties on the imaginary part fall back to the original index
        let mut s = 0;
        while s < group.len() {
            let mut e = s + 1;
            while e < group.len() && values[group[e]].im - values[group[e - 1]].im <= tol {
                e += 1;
            }
            group[s..e].sort_unstable();
            s = e;
        }
        order.extend(group);
        start = end;
    }
    order
}

/// Single-linkage clusters of (already ordered) eigenvalue positions.
fn clusters(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (from, to) = (label[j].max(label[i]), label[j].min(label[i]));
                for l in label.iter_mut() {
                    if *l == from {
                        *l = to;
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match groups.iter_mut().find(|g| label[g[0]] == label[i]) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Canonical basis of the `k`-dimensional (near-)null space of `A − λI`.
fn eigenspace(a: &DMatrix<Complex64>, lambda: Complex64, k: usize, tol: f64) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let shifted = a - DMatrix::<Complex64>::identity(n, n) * lambda;
    let svd = SVD::try_new(shifted, false, true, f64::EPSILON, 200 * n.max(1))
        .ok_or(Error::NonConvergence { iterations: 200 * n.max(1) })?;
    let v_t = svd.v_t.expect("right singular vectors were requested");

    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]).then(i.cmp(&j)));
    let worst = svd.singular_values[idx[k - 1]];
    if worst > tol {
        return Err(Error::DefectiveMatrix { residual: worst });
    }

    let mut basis = DMatrix::<Complex64>::zeros(n, k);
    for (slot, &i) in idx.iter().take(k).enumerate() {
        basis.set_column(slot, &v_t.row(i).adjoint());
    }
    let mut basis = canonical_basis(basis)?;
    for mut col in basis.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |best, (i, z)| if z.norm() > best.1 + 1e-12 { (i, z.norm()) } else { best })
            .0;
        let phase = col[pivot] / col[pivot].norm();
        let norm = col.norm();
        col /= phase * norm;
    }
    Ok(basis)
}

/// Re-expresses the columns of `basis` so they equal the identity on a set of
/// greedily chosen pivot rows.
fn canonical_basis(basis: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let (n, k) = basis.shape();
    if k == 1 {
        return Ok(basis);
    }
    let mut work = basis.clone();
    let mut pivots: Vec<usize> = Vec::with_capacity(k);
    for j in 0..k {
        let mut best = None;
        let mut best_abs = 0.0;
        for i in (0..n).filter(|i| !pivots.contains(i)) {
            let v = work[(i, j)].norm();
            if v > best_abs + 1e-12 {
                best_abs = v;
                best = Some(i);
            }
        }
        let r = best.ok_or(Error::DefectiveMatrix { residual: 0.0 })?;
        pivots.push(r);
        let p = work[(r, j)];
        for jj in (j + 1)..k {
            let factor = work[(r, jj)] / p;
            let pivot_col = work.column(j).into_owned();
            let mut target = work.column_mut(jj);
            target -= pivot_col * factor;
        }
    }
    let square = DMatrix::from_fn(k, k, |i, j| basis[(pivots[i], j)]);
    let inv = square
        .try_inverse()
        .ok_or(Error::DefectiveMatrix { residual: f64::INFINITY })?;
    Ok(basis * inv)
}
