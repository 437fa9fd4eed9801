//! Two tunnel-coupled fermionic sites, each attached to its own reservoir.
//!
//! The state lives in the eigenbasis of the system Hamiltonian: four populations
//! plus the single coherence `ρ₂₃` between the two one-particle modes. The
//! secular (Lindblad) generator only moves populations; the Redfield generator
//! also couples populations to `ρ₂₃` and `ρ₃₂ = ρ₂₃*`.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, ComplexMatrix, ModeCoefficients, SpectralDecomposition};

const STATE_TRACE_TOL: f64 = 1e-9;
const STATE_BOUND_TOL: f64 = 1e-6;
const STRONG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteBath {
    pub temperature: f64,
    pub mu: f64,
}

impl SiteBath {
    pub fn new(temperature: f64, mu: f64) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::NonPositiveTemperature(temperature));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("chemical potential must be finite".into()));
        }
        Ok(Self { temperature, mu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSiteParams {
    pub omega1: f64,
    pub omega2: f64,
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub bath1: SiteBath,
    pub bath2: SiteBath,
}

impl TwoSiteParams {
    pub fn new(
        omega1: f64,
        omega2: f64,
        delta: f64,
        gamma1: f64,
        gamma2: f64,
        bath1: SiteBath,
        bath2: SiteBath,
    ) -> Result<Self> {
        if ![omega1, omega2, delta].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("site energies and tunneling must be finite".into()));
        }
        for g in [gamma1, gamma2] {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::InvalidParameter(format!("decay rate must be positive, got {g}")));
            }
        }
        Ok(Self {
            omega1,
            omega2,
            delta,
            gamma1,
            gamma2,
            bath1,
            bath2,
        })
    }

    /// Equal site energies and equal decay rates.
    pub fn symmetric(omega: f64, delta: f64, gamma: f64, bath1: SiteBath, bath2: SiteBath) -> Result<Self> {
        Self::new(omega, omega, delta, gamma, gamma, bath1, bath2)
    }

    /// Both baths at temperature `t` with `μ₁ = mean + bias`, `μ₂ = mean − bias`.
    pub fn with_bias(&self, mean: f64, bias: f64) -> Result<Self> {
        Ok(Self {
            bath1: SiteBath::new(self.bath1.temperature, mean + bias)?,
            bath2: SiteBath::new(self.bath2.temperature, mean - bias)?,
            ..*self
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.omega1 == self.omega2 && self.gamma1 == self.gamma2
    }
}

/// Mixing angle and one-particle eigenenergies.
///
/// Mode 1 is the mode that reduces to site 1 as `Δ → 0` with `ω₂ > ω₁`, i.e. the
/// lower level `½(ω₁ + ω₂ − r)`; mode 2 is the upper level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedAngles {
    pub theta: f64,
    pub omega_prime1: f64,
    pub omega_prime2: f64,
}

impl DerivedAngles {
    fn half_sin_cos(&self) -> (f64, f64) {
        ((0.5 * self.theta).sin(), (0.5 * self.theta).cos())
    }
}

pub fn derive_angles(params: &TwoSiteParams) -> Result<DerivedAngles> {
    let split = params.omega1 - params.omega2;
    if split == 0.0 && params.delta == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let r = (split * split + 4.0 * params.delta * params.delta).sqrt();
    let cos_theta = ((params.omega2 - params.omega1) / r).clamp(-1.0, 1.0);
    let mean = 0.5 * (params.omega1 + params.omega2);
    Ok(DerivedAngles {
        theta: cos_theta.acos(),
        omega_prime1: mean - 0.5 * r,
        omega_prime2: mean + 0.5 * r,
    })
}

/// `n[k][i]`: Fermi factor of bath `i` at the energy of mode `k` (zero-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationTable {
    pub n: [[f64; 2]; 2],
}

fn fermi(energy: f64, bath: &SiteBath) -> f64 {
    1.0 / (1.0 + ((energy - bath.mu) / bath.temperature).exp())
}

pub fn occupation_table(params: &TwoSiteParams) -> Result<OccupationTable> {
    for b in [params.bath1, params.bath2] {
        if !(b.temperature > 0.0) {
            return Err(Error::NonPositiveTemperature(b.temperature));
        }
    }
    let angles = derive_angles(params)?;
    let energies = [angles.omega_prime1, angles.omega_prime2];
    Ok(OccupationTable {
        n: energies.map(|e| [fermi(e, &params.bath1), fermi(e, &params.bath2)]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorMode {
    Lindblad,
    Redfield,
}

impl GeneratorMode {
    pub fn dim(self) -> usize {
        match self {
            GeneratorMode::Lindblad => 4,
            GeneratorMode::Redfield => 6,
        }
    }
}

/// Rate matrix on `(ρ₁₁, ρ₂₂, ρ₃₃, ρ₄₄)` or `(ρ₁₁, ρ₂₂, ρ₃₃, ρ₄₄, ρ₂₃, ρ₃₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteGenerator {
    mode: GeneratorMode,
    matrix: ComplexMatrix,
    decomposition: SpectralDecomposition,
}

impl TwoSiteGenerator {
    pub fn mode(&self) -> GeneratorMode {
        self.mode
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        self.decomposition.eigenvalues()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        self.matrix.apply(v)
    }

    pub fn steady_state(&self) -> Result<TwoSiteState> {
        let v = linalg::null_vector(&self.matrix)?;
        Ok(TwoSiteState::from_vector(&v))
    }
}

/// Population block shared by both modes.
fn population_block(params: &TwoSiteParams, angles: &DerivedAngles, occ: &OccupationTable) -> Matrix4<f64> {
    let (s, c) = angles.half_sin_cos();
    let (g1, g2) = (params.gamma1, params.gamma2);
    let n1 = s * s * occ.n[0][0] + c * c * occ.n[0][1];
    let n2 = c * c * occ.n[1][0] + s * s * occ.n[1][1];
    let m11_22 = 2.0 * g1 * (1.0 - n1);
    let m11_33 = 2.0 * g2 * (1.0 - n2);
    Matrix4::new(
        -2.0 * (g1 * n1 + g2 * n2), m11_22, m11_33, 0.0,
        2.0 * g1 * n1, -m11_22 - 2.0 * g2 * n2, 0.0, m11_33,
        2.0 * g2 * n2, 0.0, -2.0 * g1 * n1 - m11_33, m11_22,
        0.0, 2.0 * g2 * n2, 2.0 * g1 * n1, -m11_22 - m11_33,
    )
}

/// Population-to-coherence coupling; vanishes for identical baths.
fn coherence_coupling(params: &TwoSiteParams, angles: &DerivedAngles, occ: &OccupationTable) -> f64 {
    let (s, c) = angles.half_sin_cos();
    -s * c * (params.gamma1 * (occ.n[0][0] - occ.n[0][1]) + params.gamma2 * (occ.n[1][0] - occ.n[1][1]))
}

pub fn build_generator(params: &TwoSiteParams, mode: GeneratorMode) -> Result<TwoSiteGenerator> {
    let angles = derive_angles(params)?;
    let occ = occupation_table(params)?;
    let pop = population_block(params, &angles, &occ);
    let dim = mode.dim();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = Complex64::new(pop[(i, j)], 0.0);
        }
    }
    if mode == GeneratorMode::Redfield {
        let k = Complex64::new(coherence_coupling(params, &angles, &occ), 0.0);
        for col in [4, 5] {
            m[(0, col)] = k;
            m[(1, col)] = -k;
            m[(2, col)] = -k;
            m[(3, col)] = k;
        }
        for row in [4, 5] {
            for col in 0..4 {
                m[(row, col)] = -k;
            }
        }
        let decay = Complex64::new(
            -(params.gamma1 + params.gamma2),
            angles.omega_prime2 - angles.omega_prime1,
        );
        m[(4, 4)] = decay;
        m[(5, 5)] = decay.conj();
    }
    let matrix = ComplexMatrix::new(m)?;
    let decomposition = linalg::eigendecompose(&matrix)?;
    Ok(TwoSiteGenerator {
        mode,
        matrix,
        decomposition,
    })
}

/// Populations `(ρ₁₁, ρ₂₂, ρ₃₃, ρ₄₄)` and coherence `ρ₂₃` in the energy eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSiteState {
    pub populations: [f64; 4],
    pub coherence: Complex64,
}

impl TwoSiteState {
    pub fn new(populations: [f64; 4], coherence: Complex64) -> Result<Self> {
        if populations.iter().any(|p| !p.is_finite()) || !coherence.re.is_finite() || !coherence.im.is_finite() {
            return Err(Error::NonFinite);
        }
        let total: f64 = populations.iter().sum();
        if (total - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::NotADensityMatrix(format!("populations sum to {total}")));
        }
        if populations.iter().any(|&p| p < -STATE_BOUND_TOL || p > 1.0 + STATE_BOUND_TOL) {
            return Err(Error::NotADensityMatrix(format!("population outside [0, 1]: {populations:?}")));
        }
        let bound = (populations[1].max(0.0) * populations[2].max(0.0)).sqrt() + STATE_BOUND_TOL;
        if coherence.norm() > bound {
            return Err(Error::NotADensityMatrix(format!(
                "|ρ23| = {} exceeds sqrt(ρ22 ρ33)",
                coherence.norm()
            )));
        }
        Ok(Self { populations, coherence })
    }

    pub fn diagonal(populations: [f64; 4]) -> Result<Self> {
        Self::new(populations, Complex64::new(0.0, 0.0))
    }

    /// Reads a 4- or 6-component generator vector; imaginary parts of the
    /// populations are dropped.
    pub fn from_vector(v: &CVector) -> Self {
        let coherence = if v.len() >= 6 { v[4] } else { Complex64::new(0.0, 0.0) };
        Self {
            populations: [v[0].re, v[1].re, v[2].re, v[3].re],
            coherence,
        }
    }

    pub fn to_vector(&self, mode: GeneratorMode) -> CVector {
        let mut v: Vec<Complex64> = self.populations.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        if mode == GeneratorMode::Redfield {
            v.push(self.coherence);
            v.push(self.coherence.conj());
        }
        CVector::from_vec(v)
    }

    pub fn trace(&self) -> f64 {
        self.populations.iter().sum()
    }

    /// Full 4×4 density matrix in the energy eigenbasis.
    pub fn density_matrix(&self) -> Matrix4<Complex64> {
        let mut m = Matrix4::from_diagonal(&Vector4::from(self.populations.map(|p| Complex64::new(p, 0.0))));
        m[(1, 2)] = self.coherence;
        m[(2, 1)] = self.coherence.conj();
        m
    }

    /// Smallest eigenvalue of the density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let [p1, p2, p3, p4] = self.populations;
        let mean = 0.5 * (p2 + p3);
        let radius = (0.25 * (p2 - p3) * (p2 - p3) + self.coherence.norm_sqr()).sqrt();
        p1.min(p4).min(mean - radius)
    }

    pub fn purity(&self) -> f64 {
        self.populations.iter().map(|p| p * p).sum::<f64>() + 2.0 * self.coherence.norm_sqr()
    }
}

/// Sampled trajectory plus positivity bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<TwoSiteState>,
    /// Set when a nonzero initial coherence was dropped by the Lindblad generator.
    pub coherence_ignored: bool,
    /// Largest `max(0, −λ_min(ρ(t)))` over the samples.
    pub worst_positivity_violation: f64,
}

pub fn evolve_two_site(gen: &TwoSiteGenerator, state0: &TwoSiteState, times: &[f64]) -> Result<TwoSiteTrajectory> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes("times must be nonnegative and strictly increasing".into()));
    }
    let coherence_ignored = gen.mode == GeneratorMode::Lindblad && state0.coherence.norm() > 0.0;
    let x0 = state0.to_vector(gen.mode);
    let states: Vec<TwoSiteState> = gen
        .decomposition
        .propagate_many(&x0, times)?
        .iter()
        .map(TwoSiteState::from_vector)
        .collect();
    let states: Vec<TwoSiteState> = if coherence_ignored {
        states
            .into_iter()
            .map(|s| TwoSiteState {
                coherence: Complex64::new(0.0, 0.0),
                ..s
            })
            .collect()
    } else {
        states
    };
    let worst_positivity_violation = states.iter().map(|s| (-s.min_eigenvalue()).max(0.0)).fold(0.0, f64::max);
    Ok(TwoSiteTrajectory {
        times: times.to_vec(),
        states,
        coherence_ignored,
        worst_positivity_violation,
    })
}

/// Closed-form left-eigenvector rows of the symmetric Lindblad generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaMatrix {
    pub rows: Matrix4<f64>,
    /// Eigenvalue paired with each row, found numerically.
    pub eigenvalues: [f64; 4],
}

impl DeltaMatrix {
    /// Right eigenvectors as columns, `V = δ⁻¹`.
    pub fn right_vectors(&self) -> Result<Matrix4<f64>> {
        self.rows
            .try_inverse()
            .ok_or_else(|| Error::InconsistentEigensystem("delta matrix is singular".into()))
    }
}

fn require_symmetric(params: &TwoSiteParams, what: &str) -> Result<()> {
    if !params.is_symmetric() {
        return Err(Error::OutOfDomain(format!("{what} requires equal site energies and decay rates")));
    }
    Ok(())
}

pub fn delta_matrix(params: &TwoSiteParams) -> Result<DeltaMatrix> {
    require_symmetric(params, "delta matrix")?;
    let occ = occupation_table(params)?;
    let a = occ.n[0][0] + occ.n[0][1];
    let b = occ.n[1][0] + occ.n[1][1];
    let rows = Matrix4::new(
        a * b / 4.0, (a - 2.0) * b / 4.0, a * (b - 2.0) / 4.0, (a - 2.0) * (b - 2.0) / 4.0,
        -a * b / 2.0, -(a - 1.0) * b / 2.0, -a * (b - 1.0) / 2.0, (-a * b + a + b) / 2.0,
        (a - 1.0) * b / 2.0, (a - 2.0) * b / 2.0, (a * (b - 1.0) - b + 2.0) / 2.0, (a - 2.0) * (b - 1.0) / 2.0,
        a * b / 4.0, a * b / 4.0, a * b / 4.0, a * b / 4.0,
    );
    let angles = derive_angles(params)?;
    let m = population_block(params, &angles, &occ);
    let mut eigenvalues = [0.0; 4];
    for (i, lambda) in eigenvalues.iter_mut().enumerate() {
        let row = rows.row(i);
        let image = row * m;
        *lambda = image.dot(&row) / row.dot(&row);
        let residual = (image - row * *lambda).abs().max();
        if residual > 1e-9 {
            return Err(Error::InconsistentEigensystem(format!(
                "delta row {i} is not a left eigenvector (residual {residual:.3e})"
            )));
        }
    }
    Ok(DeltaMatrix { rows, eigenvalues })
}

/// Mode coefficients `α_i = ⟨δ_i, ρ(0)⟩` and the strong-effect predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongMpemba {
    pub coefficients: ModeCoefficients,
    /// Both slow-mode coefficients (rows 2 and 3, rate −2Γ) vanish.
    pub strong: bool,
}

pub fn strong_mpemba_coefficients(params: &TwoSiteParams, state0: &TwoSiteState) -> Result<StrongMpemba> {
    let delta = delta_matrix(params)?;
    let alphas = delta.rows * Vector4::from(state0.populations);
    Ok(StrongMpemba {
        coefficients: ModeCoefficients {
            alphas: alphas.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        },
        strong: alphas[1].abs() <= STRONG_TOL && alphas[2].abs() <= STRONG_TOL,
    })
}

/// Eigenbasis state to the site basis, ordered (both occupied, A, B, empty).
///
/// Real parts follow the standard symmetric-site rotation; the imaginary part of
/// `ρ₂₃` is carried as the imaginary part of the Hermitian off-diagonal pair.
pub fn global_to_local(params: &TwoSiteParams, state: &TwoSiteState) -> Result<Matrix4<Complex64>> {
    if params.omega1 != params.omega2 {
        return Err(Error::OutOfDomain("local-basis transform requires equal site energies".into()));
    }
    Ok(global_to_local_unchecked(state))
}

pub(crate) fn global_to_local_unchecked(state: &TwoSiteState) -> Matrix4<Complex64> {
    let [p1, p2, p3, p4] = state.populations;
    let re = state.coherence.re;
    let im = state.coherence.im;
    let mean = 0.5 * (p2 + p3);
    let off = Complex64::new(-0.5 * (p2 - p3), im);
    let mut m = Matrix4::<Complex64>::zeros();
    m[(0, 0)] = Complex64::new(p1, 0.0);
    m[(1, 1)] = Complex64::new(mean - re, 0.0);
    m[(2, 2)] = Complex64::new(mean + re, 0.0);
    m[(3, 3)] = Complex64::new(p4, 0.0);
    m[(1, 2)] = off;
    m[(2, 1)] = off.conj();
    m
}

/// Inverse of [`global_to_local`].
pub fn local_to_global(local: &Matrix4<Complex64>) -> TwoSiteState {
    let l22 = local[(1, 1)].re;
    let l33 = local[(2, 2)].re;
    let off = local[(1, 2)];
    let diff = -2.0 * off.re;
    let sum = l22 + l33;
    TwoSiteState {
        populations: [local[(0, 0)].re, 0.5 * (sum + diff), 0.5 * (sum - diff), local[(3, 3)].re],
        coherence: Complex64::new(0.5 * (l33 - l22), off.im),
    }
}
