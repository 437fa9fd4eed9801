//! Four-state quantum dot between two fermionic reservoirs.
//!
//! States are ordered (doubly occupied, spin up, spin down, empty). In the
//! wide-band limit the density matrix stays diagonal, so the dynamics reduce
//! to a 4×4 rate matrix built from the occupation sums
//! `f⁽ʲ⁾ = n_L(ε₀ + jU) + n_R(ε₀ + jU)`.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CVector, ComplexMatrix};
use crate::roots;

/// Guard used for the closed-form denominators.
pub const OCCUPATION_GUARD: f64 = 1e-12;

/// Upper end of the crossing-time search, in units of 1/Γ.
pub const CROSSING_HORIZON: f64 = 50.0;

const CROSSING_SAMPLES: usize = 2000;
const CROSSING_TOL: f64 = 1e-9;
const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathPair {
    pub mu_left: f64,
    pub mu_right: f64,
    pub t_left: f64,
    pub t_right: f64,
}

impl BathPair {
    pub fn new(mu_left: f64, mu_right: f64, t_left: f64, t_right: f64) -> Result<Self> {
        for t in [t_left, t_right] {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::NonPositiveTemperature(t));
            }
        }
        if !mu_left.is_finite() || !mu_right.is_finite() {
            return Err(Error::InvalidParameter("chemical potentials must be finite".into()));
        }
        Ok(Self {
            mu_left,
            mu_right,
            t_left,
            t_right,
        })
    }

    /// Both baths at the same temperature, `μ_L = mean + bias`, `μ_R = mean − bias`.
    pub fn biased(mean: f64, bias: f64, temperature: f64) -> Result<Self> {
        Self::new(mean + bias, mean - bias, temperature, temperature)
    }

    pub fn with_mus(&self, mu_left: f64, mu_right: f64) -> Result<Self> {
        Self::new(mu_left, mu_right, self.t_left, self.t_right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotParams {
    pub epsilon0: f64,
    pub u: f64,
    pub gamma: f64,
    pub relax_baths: BathPair,
}

impl DotParams {
    pub fn new(epsilon0: f64, u: f64, gamma: f64, relax_baths: BathPair) -> Result<Self> {
        if !epsilon0.is_finite() {
            return Err(Error::InvalidParameter("epsilon0 must be finite".into()));
        }
        if !(u >= 0.0) || !u.is_finite() {
            return Err(Error::InvalidParameter(format!("u must be nonnegative, got {u}")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self {
            epsilon0,
            u,
            gamma,
            relax_baths,
        })
    }

    pub fn with_relax_baths(&self, relax_baths: BathPair) -> Self {
        Self { relax_baths, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationFactors {
    pub f0: f64,
    pub f1: f64,
}

impl OccupationFactors {
    pub fn new(f0: f64, f1: f64) -> Result<Self> {
        for f in [f0, f1] {
            if !(0.0..=2.0).contains(&f) {
                return Err(Error::InvalidParameter(format!("occupation sum {f} outside [0, 2]")));
            }
        }
        Ok(Self { f0, f1 })
    }
}

fn fermi(energy: f64, mu: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + ((energy - mu) / temperature).exp())
}

/// Sum of the two baths' Fermi factors at `energy`.
pub fn fermi_sum(energy: f64, baths: &BathPair) -> Result<f64> {
    for t in [baths.t_left, baths.t_right] {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTemperature(t));
        }
    }
    Ok(fermi(energy, baths.mu_left, baths.t_left) + fermi(energy, baths.mu_right, baths.t_right))
}

pub fn occupation_factors(params: &DotParams, baths: &BathPair) -> Result<OccupationFactors> {
    let f0 = fermi_sum(params.epsilon0, baths)?;
    let f1 = fermi_sum(params.epsilon0 + params.u, baths)?;
    Ok(OccupationFactors { f0, f1 })
}

/// Rate matrix at Γ = 1. Every column sums to zero.
pub fn build_transition_matrix(f: &OccupationFactors) -> ComplexMatrix {
    real_to_complex(&real_transition_matrix(f))
}

fn real_to_complex(m: &Matrix4<f64>) -> ComplexMatrix {
    ComplexMatrix::from_real(&DMatrix::from_column_slice(4, 4, m.as_slice())).expect("4x4 finite matrix")
}

fn real_transition_matrix(f: &OccupationFactors) -> Matrix4<f64> {
    let (f0, f1) = (f.f0, f.f1);
    Matrix4::new(
        -2.0 * (2.0 - f1), f1, f1, 0.0,
        2.0 - f1, -2.0 + f0 - f1, 0.0, f0,
        2.0 - f1, 0.0, -2.0 + f0 - f1, f0,
        0.0, 2.0 - f0, 2.0 - f0, -2.0 * f0,
    )
}

/// Which closed form to use for the third right eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RightVectorConvention {
    /// Column consistent with `M·R = R·Λ` and `L·R = I`.
    #[default]
    Consistent,
    /// Column as commonly printed, with `(2 − f0 − f1)` in the spin rows.
    /// Not an eigenvector of `M`; useful only to reproduce published curves.
    Printed,
}

/// Closed-form spectrum and eigenvector matrices at Γ = 1.
///
/// Mode order: `λ = 0`, `−(2 − f0 + f1)` (spin-antisymmetric), `−(2 + f0 − f1)`, `−4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotSpectralData {
    pub eigenvalues: [f64; 4],
    /// Columns are right eigenvectors.
    pub right: Matrix4<f64>,
    /// Rows are left eigenvectors.
    pub left: Matrix4<f64>,
}

impl DotSpectralData {
    pub fn eigen_residual(&self, f: &OccupationFactors) -> f64 {
        let m = real_transition_matrix(f);
        let lambda = Matrix4::from_diagonal(&Vector4::from(self.eigenvalues));
        (m * self.right - self.right * lambda).abs().max()
    }

    pub fn left_residual(&self, f: &OccupationFactors) -> f64 {
        let m = real_transition_matrix(f);
        let lambda = Matrix4::from_diagonal(&Vector4::from(self.eigenvalues));
        (self.left * m - lambda * self.left).abs().max()
    }

    pub fn biorthogonality_residual(&self) -> f64 {
        (self.left * self.right - Matrix4::identity()).abs().max()
    }
}

fn check_guards(f: &OccupationFactors) -> Result<()> {
    let d = f.f0 - f.f1;
    let guarded = [f.f0, f.f1, 4.0 + 2.0 * d, 4.0 - 2.0 * d, 4.0 - d * d];
    if !(f.f0 > OCCUPATION_GUARD && f.f1 > OCCUPATION_GUARD && d.abs() < 2.0 - OCCUPATION_GUARD)
        || guarded.iter().any(|x| x.abs() <= OCCUPATION_GUARD)
    {
        return Err(Error::SingularOccupation { f0: f.f0, f1: f.f1 });
    }
    Ok(())
}

fn closed_forms(f: &OccupationFactors, convention: RightVectorConvention) -> (Matrix4<f64>, Matrix4<f64>) {
    let (f0, f1) = (f.f0, f.f1);
    let d = f0 - f1;
    let plus = 4.0 + 2.0 * d;
    let minus = 4.0 - 2.0 * d;
    let sq = d * d - 4.0;
    let spin = match convention {
        RightVectorConvention::Consistent => -f0 * (f0 + f1 - 2.0) / sq,
        RightVectorConvention::Printed => -f0 * (2.0 - f0 - f1) / sq,
    };
    let right = Matrix4::new(
        f0 * f1 / plus, 0.0, 2.0 * f0 * f1 / sq, f0 * f1 / minus,
        f0 * (2.0 - f1) / plus, -0.5, spin, -f0 * f1 / minus,
        f0 * (2.0 - f1) / plus, 0.5, spin, -f0 * f1 / minus,
        (2.0 - f0) * (2.0 - f1) / plus, 0.0, 2.0 * f0 * (f0 - 2.0) / sq, f0 * f1 / minus,
    );
    let s = (2.0 - f0 - f1) / (2.0 * f0);
    let left = Matrix4::new(
        1.0, 1.0, 1.0, 1.0,
        0.0, -1.0, 1.0, 0.0,
        -(2.0 - f1) / f0, -s, -s, 1.0,
        (2.0 - f0) * (2.0 - f1) / (f0 * f1), -(2.0 - f0) / f0, -(2.0 - f0) / f0, 1.0,
    );
    (right, left)
}

/// Closed-form eigensystem with rows of `L` rescaled so that `L·R = I`.
pub fn analytic_spectral_data(f: &OccupationFactors) -> Result<DotSpectralData> {
    check_guards(f)?;
    let (right, left) = closed_forms(f, RightVectorConvention::Consistent);
    let d = left * right;
    let off_diag = (0..4)
        .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)].abs())
        .fold(0.0, f64::max);
    if off_diag > 1e-9 {
        return Err(Error::InconsistentEigensystem(format!(
            "L·R has off-diagonal entries up to {off_diag:.3e}"
        )));
    }
    let mut left = left;
    for i in 0..4 {
        let scale = d[(i, i)];
        if scale.abs() <= OCCUPATION_GUARD {
            return Err(Error::InconsistentEigensystem(format!("L·R diagonal entry {i} vanishes")));
        }
        left.row_mut(i).scale_mut(1.0 / scale);
    }
    Ok(DotSpectralData {
        eigenvalues: dot_eigenvalues(f),
        right,
        left,
    })
}

/// Closed forms exactly as printed, without any normalization.
pub fn printed_spectral_data(f: &OccupationFactors) -> Result<DotSpectralData> {
    check_guards(f)?;
    let (right, left) = closed_forms(f, RightVectorConvention::Printed);
    Ok(DotSpectralData {
        eigenvalues: dot_eigenvalues(f),
        right,
        left,
    })
}

pub fn dot_eigenvalues(f: &OccupationFactors) -> [f64; 4] {
    [0.0, -(2.0 - f.f0 + f.f1), -(2.0 + f.f0 - f.f1), -4.0]
}

/// Populations (doubly occupied, spin up, spin down, empty).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotState {
    pub populations: [f64; 4],
}

impl DotState {
    pub fn new(populations: [f64; 4]) -> Result<Self> {
        if populations.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        if populations.iter().any(|&p| p < -STATE_TOL || p > 1.0 + STATE_TOL) {
            return Err(Error::NotADensityMatrix(format!("population outside [0, 1]: {populations:?}")));
        }
        let total: f64 = populations.iter().sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::NotADensityMatrix(format!("populations sum to {total}")));
        }
        Ok(Self { populations })
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::from(self.populations)
    }

    pub fn to_cvector(&self) -> CVector {
        CVector::from_iterator(4, self.populations.iter().map(|&p| Complex64::new(p, 0.0)))
    }

    pub fn trace(&self) -> f64 {
        self.populations.iter().sum()
    }
}

/// Stationary populations for the given baths: the `λ = 0` right eigenvector.
pub fn steady_state(params: &DotParams, baths: &BathPair) -> Result<DotState> {
    let f = occupation_factors(params, baths)?;
    let data = analytic_spectral_data(&f)?;
    let col = data.right.column(0);
    let total = col.sum();
    Ok(DotState {
        populations: [col[0] / total, col[1] / total, col[2] / total, col[3] / total],
    })
}

/// Initial condition: steady state of the preparing baths.
pub fn prepare_initial_state(params: &DotParams, preparing_baths: &BathPair) -> Result<DotState> {
    steady_state(params, preparing_baths)
}

/// Dot parameters together with the closed-form eigensystem of the relaxation baths.
#[derive(Debug, Clone, PartialEq)]
pub struct DotModel {
    params: DotParams,
    factors: OccupationFactors,
    data: DotSpectralData,
}

impl DotModel {
    pub fn new(params: DotParams) -> Result<Self> {
        let factors = occupation_factors(&params, &params.relax_baths)?;
        let data = analytic_spectral_data(&factors)?;
        Ok(Self { params, factors, data })
    }

    pub fn params(&self) -> &DotParams {
        &self.params
    }

    pub fn factors(&self) -> OccupationFactors {
        self.factors
    }

    pub fn spectral_data(&self) -> &DotSpectralData {
        &self.data
    }

    /// Eigenvalues in physical time units (scaled by Γ).
    pub fn rates(&self) -> [f64; 4] {
        self.data.eigenvalues.map(|l| l * self.params.gamma)
    }

    /// The Γ-scaled rate matrix.
    pub fn generator(&self) -> ComplexMatrix {
        real_to_complex(&(real_transition_matrix(&self.factors) * self.params.gamma))
    }

    pub fn mode_coefficients(&self, state: &DotState) -> [f64; 4] {
        (self.data.left * state.as_vector()).into()
    }

    /// `ρ_α(t) = Σ_n e^{λ_n t} R_{αn} a_n` with `a = L·ρ(0)`.
    pub fn populations_at(&self, state: &DotState, t: f64) -> [f64; 4] {
        if t == 0.0 {
            return state.populations;
        }
        let a = self.data.left * state.as_vector();
        let rates = self.rates();
        let weighted = Vector4::from_fn(|n, _| (rates[n] * t).exp() * a[n]);
        (self.data.right * weighted).into()
    }

    /// `ρ_n^I(t) − ρ_n^II(t)` for a zero-based component index.
    pub fn population_difference(&self, a: &DotState, b: &DotState, component: usize, t: f64) -> f64 {
        let diff = DotState {
            populations: std::array::from_fn(|i| a.populations[i] - b.populations[i]),
        };
        self.populations_at(&diff, t)[component]
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidTimes("times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes("times must be strictly increasing".into()));
    }
    Ok(())
}

pub fn evolve_dot(model: &DotModel, rho0: &DotState, times: &[f64]) -> Result<Vec<DotState>> {
    check_times(times)?;
    Ok(times
        .iter()
        .map(|&t| DotState {
            populations: model.populations_at(rho0, t),
        })
        .collect())
}

/// Value of the two-mode criterion and whether it lies in the open regime `(−1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpembaCriterion {
    pub value: f64,
    pub in_regime: bool,
}

/// Numerator `R_{n,3}Δa₃` and denominator `R_{n,4}Δa₄` of the criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionParts {
    pub numerator: f64,
    pub denominator: f64,
}

fn check_component(n: usize) -> Result<usize> {
    if (1..=4).contains(&n) {
        Ok(n - 1)
    } else {
        Err(Error::InvalidParameter(format!("population index {n} outside 1..=4")))
    }
}

/// Raw criterion terms for the one-based population index `n`.
pub fn criterion_parts(
    model: &DotModel,
    rho_i: &DotState,
    rho_ii: &DotState,
    n: usize,
    convention: RightVectorConvention,
) -> Result<CriterionParts> {
    let row = check_component(n)?;
    let data = match convention {
        RightVectorConvention::Consistent => model.data,
        RightVectorConvention::Printed => printed_spectral_data(&model.factors)?,
    };
    let delta = rho_i.as_vector() - rho_ii.as_vector();
    let a = data.left * delta;
    Ok(CriterionParts {
        numerator: data.right[(row, 2)] * a[2],
        denominator: data.right[(row, 3)] * a[3],
    })
}

/// `S_n = R_{n,3}Δa₃ / (R_{n,4}Δa₄)` with `Δa = L·(ρᴵ − ρᴵᴵ)`.
pub fn mpemba_criterion(
    model: &DotModel,
    rho_i: &DotState,
    rho_ii: &DotState,
    n: usize,
    convention: RightVectorConvention,
) -> Result<MpembaCriterion> {
    let parts = criterion_parts(model, rho_i, rho_ii, n, convention)?;
    let tiny = OCCUPATION_GUARD;
    if parts.numerator.abs() < tiny && parts.denominator.abs() < tiny {
        return Err(Error::DegenerateDifference);
    }
    if is_boundary_difference(rho_i, rho_ii) {
        return Err(Error::DegenerateDifference);
    }
    if parts.denominator.abs() < tiny {
        return Err(Error::DivisionBlocked);
    }
    let value = parts.numerator / parts.denominator;
    Ok(MpembaCriterion {
        value,
        in_regime: value > -1.0 && value < 0.0,
    })
}

/// Whether `ρᴵ − ρᴵᴵ` is a multiple of `(−1, 1, 1, −1)`, the regime boundary.
fn is_boundary_difference(a: &DotState, b: &DotState) -> bool {
    let delta = a.as_vector() - b.as_vector();
    let v = Vector4::new(-1.0, 1.0, 1.0, -1.0);
    let along = delta.dot(&v) / 4.0;
    along.abs() > OCCUPATION_GUARD && (delta - v * along).abs().max() <= OCCUPATION_GUARD
}

/// First time at which `ρ_n^I(t) = ρ_n^II(t)`, or `None` if the trajectories do
/// not cross in `(0, 50/Γ]`.
///
/// Spin-symmetric differences (`Δa₂ = 0`) use the two-mode closed form
/// `t* = ln(−1/S_n)/(λ₃ − λ₄)`; anything else is bracketed on a grid and bisected.
pub fn dot_crossing_time(model: &DotModel, rho_i: &DotState, rho_ii: &DotState, n: usize) -> Result<Option<f64>> {
    let criterion = mpemba_criterion(model, rho_i, rho_ii, n, RightVectorConvention::Consistent)?;
    let a = model.data.left * (rho_i.as_vector() - rho_ii.as_vector());
    if a[1].abs() <= OCCUPATION_GUARD {
        if !criterion.in_regime {
            return Ok(None);
        }
        let rates = model.rates();
        let t = (-1.0 / criterion.value).ln() / (rates[2] - rates[3]);
        return Ok((t <= CROSSING_HORIZON / model.params.gamma).then_some(t));
    }
    Ok(bisect_crossing(model, rho_i, rho_ii, n - 1))
}

/// Grid-and-bisection search for the first sign change of `ρ_n^I − ρ_n^II`.
pub fn bisect_crossing(model: &DotModel, rho_i: &DotState, rho_ii: &DotState, component: usize) -> Option<f64> {
    let horizon = CROSSING_HORIZON / model.params.gamma;
    let times = roots::linspace(0.0, horizon, CROSSING_SAMPLES + 1);
    let diff = |t: f64| model.population_difference(rho_i, rho_ii, component, t);
    let values: Vec<f64> = times.iter().map(|&t| diff(t)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (i, j) = *roots::sign_change_brackets(&values[1..], 1e-10 * scale).first()?;
    Some(roots::bisect(diff, times[i + 1], times[j + 1], CROSSING_TOL))
}
