//! Crossing detection and parameter scans.
//!
//! Grid scans run in parallel with results collected by node index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::qdot::{self, BathPair, DotModel, DotParams, DotState, RightVectorConvention};
use crate::roots;
use crate::twosite::{self, GeneratorMode, TwoSiteGenerator, TwoSiteParams, TwoSiteState};
use crate::observables;

/// Default search horizon in units of 1/Γ.
pub const HORIZON_GAMMA_UNITS: f64 = 50.0;
/// Default number of uniform samples before refinement.
pub const DEFAULT_SAMPLES: usize = 2000;
/// Bracketing range for the preparing-bath chemical potential μ̃₄.
pub const MU4_RANGE: (f64, f64) = (-50.0, 50.0);
/// Allowed criterion mismatch at a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-6;

const NOISE_FLOOR: f64 = 1e-10;
const MU4_SAMPLES: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    /// `+1` when `A − B` goes from negative to positive, `−1` otherwise.
    pub direction: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        Ok(Self { times, values })
    }

    pub fn sample<F: Fn(f64) -> f64>(times: Vec<f64>, f: F) -> Self {
        let values = times.iter().map(|&t| f(t)).collect();
        Self { times, values }
    }
}

/// Time-step tolerance of the bisection refinement.
fn refine_tol(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

fn crossings_from_samples<F: Fn(f64) -> f64>(times: &[f64], diff: &[f64], scale: f64, difference: F) -> Vec<Crossing> {
    roots::sign_change_brackets(diff, NOISE_FLOOR * scale)
        .into_iter()
        .map(|(i, j)| {
            let time = roots::bisect(&difference, times[i], times[j], refine_tol(times[j]));
            Crossing {
                time,
                direction: if diff[j] > 0.0 { 1 } else { -1 },
            }
        })
        .filter(|c| c.time > 0.0)
        .collect()
}

/// Every sign change of `A − B` on the common grid, refined by bisection on
/// `difference` (the continuous-time `A − B`). Touches, sub-noise wiggles and
/// crossings at `t = 0` are not reported.
pub fn detect_crossings<F: Fn(f64) -> f64>(a: &TimeSeries, b: &TimeSeries, difference: F) -> Result<Vec<Crossing>> {
    if a.times != b.times || a.times.len() < 2 || a.values.len() != a.times.len() || b.values.len() != b.times.len() {
        return Err(Error::GridMismatch);
    }
    if a.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridMismatch);
    }
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let scale = a.values.iter().chain(&b.values).fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(crossings_from_samples(&a.times, &diff, scale, difference))
}

/// First time at which a nonnegative observable reaches exactly zero after
/// being positive, refined by bisection on `value(t) > 0`.
pub fn sudden_death_time<F: Fn(f64) -> f64>(series: &TimeSeries, value: F) -> Option<f64> {
    let first_positive = series.values.iter().position(|&v| v > 0.0)?;
    let dead = (first_positive + 1..series.values.len()).find(|&i| series.values[i] <= 0.0)?;
    let (mut lo, mut hi) = (series.times[dead - 1], series.times[dead]);
    while hi - lo > refine_tol(hi) {
        let mid = 0.5 * (lo + hi);
        if value(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send, F: FnOnce() -> T + Send>(threads: Option<usize>, f: F) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Both trajectories of a pair, evaluated through a shared spectral decomposition.
pub struct TrajectoryPair<'a> {
    gen: &'a TwoSiteGenerator,
    alpha_a: CVector,
    alpha_b: CVector,
    a0: TwoSiteState,
    b0: TwoSiteState,
}

impl<'a> TrajectoryPair<'a> {
    pub fn new(gen: &'a TwoSiteGenerator, a0: &TwoSiteState, b0: &TwoSiteState) -> Result<Self> {
        let d = gen.decomposition();
        let alpha_a = d.left_vectors() * a0.to_vector(gen.mode());
        let alpha_b = d.left_vectors() * b0.to_vector(gen.mode());
        Ok(Self {
            gen,
            alpha_a,
            alpha_b,
            a0: *a0,
            b0: *b0,
        })
    }

    pub fn states_at(&self, t: f64) -> (TwoSiteState, TwoSiteState) {
        if t == 0.0 {
            return (self.a0, self.b0);
        }
        let d = self.gen.decomposition();
        (
            TwoSiteState::from_vector(&d.propagate_coefficients(&self.alpha_a, t)),
            TwoSiteState::from_vector(&d.propagate_coefficients(&self.alpha_b, t)),
        )
    }

    /// Samples an observable of both trajectories.
    pub fn sample<F>(&self, times: &[f64], observable: &F) -> Result<(TimeSeries, TimeSeries)>
    where
        F: Fn(&TwoSiteState) -> Result<f64>,
    {
        let mut va = Vec::with_capacity(times.len());
        let mut vb = Vec::with_capacity(times.len());
        for &t in times {
            let (sa, sb) = self.states_at(t);
            va.push(observable(&sa)?);
            vb.push(observable(&sb)?);
        }
        Ok((
            TimeSeries { times: times.to_vec(), values: va },
            TimeSeries { times: times.to_vec(), values: vb },
        ))
    }

    pub fn crossings<F>(&self, times: &[f64], observable: &F) -> Result<Vec<Crossing>>
    where
        F: Fn(&TwoSiteState) -> Result<f64>,
    {
        let (a, b) = self.sample(times, observable)?;
        detect_crossings(&a, &b, |t| {
            let (sa, sb) = self.states_at(t);
            match (observable(&sa), observable(&sb)) {
                (Ok(x), Ok(y)) => x - y,
                _ => f64::NAN,
            }
        })
    }
}

/// Uniform grid over `(0, horizon]` including `t = 0`.
pub fn uniform_times(horizon: f64, samples: usize) -> Vec<f64> {
    roots::linspace(0.0, horizon, samples + 1)
}

pub fn concurrence(state: &TwoSiteState) -> Result<f64> {
    observables::concurrence_local(&twosite::global_to_local_unchecked(state))
}

pub fn mutual_information(state: &TwoSiteState) -> Result<f64> {
    observables::quantum_mutual_information(&twosite::global_to_local_unchecked(state))
}

/// Concurrence race between two initial states.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementRace {
    pub initial: [f64; 2],
    pub crossings: Vec<Crossing>,
    /// Sudden-death time of each trajectory, if it happens within the horizon.
    pub death_times: [Option<f64>; 2],
}

pub fn entanglement_race(
    gen: &TwoSiteGenerator,
    state_i: &TwoSiteState,
    state_ii: &TwoSiteState,
    horizon: f64,
    samples: usize,
) -> Result<EntanglementRace> {
    let pair = TrajectoryPair::new(gen, state_i, state_ii)?;
    let times = uniform_times(horizon, samples);
    let (a, b) = pair.sample(&times, &concurrence)?;
    let crossings = pair.crossings(&times, &concurrence)?;
    let value = |which: usize| {
        let pair = &pair;
        move |t: f64| {
            let (sa, sb) = pair.states_at(t);
            concurrence(if which == 0 { &sa } else { &sb }).unwrap_or(f64::NAN)
        }
    };
    Ok(EntanglementRace {
        initial: [a.values[0], b.values[0]],
        crossings,
        death_times: [sudden_death_time(&a, value(0)), sudden_death_time(&b, value(1))],
    })
}

/// First concurrence crossing under the symmetric Lindblad generator with
/// `μ₁ = mean + bias`, `μ₂ = mean − bias`; `None` if none within `50/Γ`.
pub fn entanglement_crossing_time(
    template: &TwoSiteParams,
    state_i: &TwoSiteState,
    state_ii: &TwoSiteState,
    bias: f64,
    mean: f64,
) -> Result<Option<f64>> {
    let params = template.with_bias(mean, bias)?;
    let gen = twosite::build_generator(&params, GeneratorMode::Lindblad)?;
    let horizon = HORIZON_GAMMA_UNITS / params.gamma1.min(params.gamma2);
    let pair = TrajectoryPair::new(&gen, state_i, state_ii)?;
    let crossings = pair.crossings(&uniform_times(horizon, DEFAULT_SAMPLES), &concurrence)?;
    Ok(crossings.first().map(|c| c.time))
}

/// `(Δμ, t*)` rows of a crossing-time curve at fixed mean potential.
pub fn crossing_time_curve(
    template: &TwoSiteParams,
    state_i: &TwoSiteState,
    state_ii: &TwoSiteState,
    mean: f64,
    biases: &[f64],
) -> Result<Vec<(f64, Option<f64>)>> {
    biases
        .par_iter()
        .map(|&bias| Ok((bias, entanglement_crossing_time(template, state_i, state_ii, bias, mean)?)))
        .collect()
}

/// Population-crossing flags over a `(Δμ, μ̄)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub biases: Vec<f64>,
    pub means: Vec<f64>,
    /// `redfield[m][b]` for `means[m]`, `biases[b]`.
    pub redfield: Vec<Vec<bool>>,
    pub lindblad: Vec<Vec<bool>>,
}

/// Whether `ρ₃₃` of the two states cross at least once within `(0, 50/Γ]`.
pub fn population_crossing(gen: &TwoSiteGenerator, a: &TwoSiteState, b: &TwoSiteState, component: usize) -> Result<bool> {
    let gamma = gen.eigenvalues().iter().map(|z| -z.re).filter(|r| *r > 1e-12).fold(f64::INFINITY, f64::min);
    let horizon = HORIZON_GAMMA_UNITS / (0.5 * gamma);
    let pair = TrajectoryPair::new(gen, a, b)?;
    let crossings = pair.crossings(&uniform_times(horizon, DEFAULT_SAMPLES), &|s: &TwoSiteState| Ok(s.populations[component]))?;
    Ok(!crossings.is_empty())
}

/// Evaluates the `ρ₃₃` crossing flag under both generators at every grid node.
pub fn coherence_region_map(
    template: &TwoSiteParams,
    biases: &[f64],
    means: &[f64],
    state_i: &TwoSiteState,
    state_ii: &TwoSiteState,
) -> Result<RegionMap> {
    let nodes: Vec<(usize, usize)> = (0..means.len()).flat_map(|m| (0..biases.len()).map(move |b| (m, b))).collect();
    let flags: Vec<(bool, bool)> = nodes
        .par_iter()
        .map(|&(m, b)| {
            let params = template.with_bias(means[m], biases[b])?;
            let red = twosite::build_generator(&params, GeneratorMode::Redfield)?;
            let lin = twosite::build_generator(&params, GeneratorMode::Lindblad)?;
            Ok((
                population_crossing(&red, state_i, state_ii, 2)?,
                population_crossing(&lin, state_i, state_ii, 2)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut redfield = vec![vec![false; biases.len()]; means.len()];
    let mut lindblad = redfield.clone();
    for (&(m, b), &(r, l)) in nodes.iter().zip(&flags) {
        redfield[m][b] = r;
        lindblad[m][b] = l;
    }
    Ok(RegionMap {
        biases: biases.to_vec(),
        means: means.to_vec(),
        redfield,
        lindblad,
    })
}

/// Preparing-bath family for the quantum dot: state I from baths `(μ̃₁, μ̃₂)`,
/// state II from `(μ̃₃, μ̃₄)`, relaxation baths at `mean ± bias`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotScanConfig {
    pub epsilon0: f64,
    pub u: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub mean: f64,
    pub mu1_tilde: f64,
    pub mu3_tilde: f64,
    /// One-based population index of the observable.
    pub component: usize,
    pub convention: RightVectorConvention,
}

impl DotScanConfig {
    pub fn model(&self, bias: f64) -> Result<DotModel> {
        let baths = BathPair::biased(self.mean, bias, self.temperature)?;
        DotModel::new(DotParams::new(self.epsilon0, self.u, self.gamma, baths)?)
    }

    pub fn states(&self, model: &DotModel, mu2: f64, mu4: f64) -> Result<(DotState, DotState)> {
        let t = self.temperature;
        Ok((
            qdot::prepare_initial_state(model.params(), &BathPair::new(self.mu1_tilde, mu2, t, t)?)?,
            qdot::prepare_initial_state(model.params(), &BathPair::new(self.mu3_tilde, mu4, t, t)?)?,
        ))
    }

    pub fn criterion(&self, bias: f64, mu2: f64, mu4: f64) -> Result<f64> {
        let model = self.model(bias)?;
        let (a, b) = self.states(&model, mu2, mu4)?;
        Ok(qdot::mpemba_criterion(&model, &a, &b, self.component, self.convention)?.value)
    }

    /// `N − target·D`, smooth in μ̃₄ (no poles), zero wherever `S = target`.
    fn residual(&self, model: &DotModel, target: f64, mu2: f64, mu4: f64) -> Result<f64> {
        let (a, b) = self.states(model, mu2, mu4)?;
        let p = qdot::criterion_parts(model, &a, &b, self.component, self.convention)?;
        Ok(p.numerator - target * p.denominator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub mu2: f64,
    pub mu4: f64,
}

/// All solutions of `S(μ̃₂, μ̃₄) = target` over a μ̃₂ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub target: f64,
    pub bias: f64,
    /// Ordered by μ̃₂, then μ̃₄.
    pub points: Vec<BoundaryPoint>,
    /// μ̃₂ samples with no solution in the μ̃₄ bracketing range.
    pub unsolved: Vec<f64>,
    /// First μ̃₂ of the trailing run of unsolved samples, when the curve had
    /// solutions before it.
    pub diverged_beyond: Option<f64>,
}

impl BoundaryCurve {
    pub fn roots_at(&self, mu2: f64) -> Vec<f64> {
        self.points.iter().filter(|p| p.mu2 == mu2).map(|p| p.mu4).collect()
    }
}

/// Roots in μ̃₄ at one μ̃₂ sample.
pub fn boundary_roots(config: &DotScanConfig, model: &DotModel, target: f64, mu2: f64) -> Result<Vec<f64>> {
    let grid = roots::linspace(MU4_RANGE.0, MU4_RANGE.1, MU4_SAMPLES);
    let h = |mu4: f64| config.residual(model, target, mu2, mu4).unwrap_or(f64::NAN);
    let values: Vec<f64> = grid.iter().map(|&x| h(x)).collect();
    let mut out = Vec::new();
    for (i, j) in roots::sign_change_brackets(&values, 0.0) {
        let root = roots::bisect(h, grid[i], grid[j], 1e-12);
        let (a, b) = config.states(model, mu2, root)?;
        let p = qdot::criterion_parts(model, &a, &b, config.component, config.convention)?;
        if p.denominator.abs() > qdot::OCCUPATION_GUARD && (p.numerator / p.denominator - target).abs() <= BOUNDARY_TOL {
            out.push(root);
        }
    }
    Ok(out)
}

/// Traces `S = target` over the μ̃₂ samples.
pub fn trace_boundary(config: &DotScanConfig, target: f64, mu2_values: &[f64], bias: f64) -> Result<BoundaryCurve> {
    let model = config.model(bias)?;
    let per_sample: Vec<Vec<f64>> = mu2_values
        .par_iter()
        .map(|&mu2| boundary_roots(config, &model, target, mu2))
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    let mut unsolved = Vec::new();
    for (&mu2, rs) in mu2_values.iter().zip(&per_sample) {
        if rs.is_empty() {
            unsolved.push(mu2);
        }
        points.extend(rs.iter().map(|&mu4| BoundaryPoint { mu2, mu4 }));
    }
    let trailing = per_sample.iter().rev().take_while(|r| r.is_empty()).count();
    let diverged_beyond = (trailing > 0 && trailing < per_sample.len()).then(|| mu2_values[per_sample.len() - trailing]);
    Ok(BoundaryCurve {
        target,
        bias,
        points,
        unsolved,
        diverged_beyond,
    })
}

/// Crossings of two boundary curves traced on the same μ̃₂ grid.
///
/// At each μ̃₂ the closest pair of roots is taken as the local branch pair; a
/// sign change of their separation between neighbouring samples marks an
/// intersection, located by linear interpolation.
pub fn curve_intersections(a: &BoundaryCurve, b: &BoundaryCurve, max_gap: f64) -> Vec<BoundaryPoint> {
    let mut grid: Vec<f64> = a.points.iter().chain(&b.points).map(|p| p.mu2).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let gaps: Vec<Option<(f64, f64)>> = grid
        .iter()
        .map(|&mu2| {
            let (ra, rb) = (a.roots_at(mu2), b.roots_at(mu2));
            ra.iter()
                .flat_map(|&x| rb.iter().map(move |&y| (x, x - y)))
                .min_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
        })
        .collect();
    let mut out = Vec::new();
    for k in 1..grid.len() {
        if let (Some((x0, d0)), Some((x1, d1))) = (gaps[k - 1], gaps[k]) {
            if d0.abs() <= max_gap && d1.abs() <= max_gap && (d0 < 0.0) != (d1 < 0.0) && d0 != 0.0 {
                let w = d0 / (d0 - d1);
                out.push(BoundaryPoint {
                    mu2: grid[k - 1] + w * (grid[k] - grid[k - 1]),
                    mu4: x0 + w * (x1 - x0),
                });
            }
        }
    }
    out
}

/// Whether `S = target` has a solution in μ̃₄ at fixed μ̃₂ and bias.
pub fn boundary_solvable(config: &DotScanConfig, target: f64, mu2: f64, bias: f64) -> Result<bool> {
    let model = config.model(bias)?;
    Ok(!boundary_roots(config, &model, target, mu2)?.is_empty())
}

/// Smallest bias at which the `S = target` boundary at fixed μ̃₂ stops having a
/// finite μ̃₄ solution, bisected to `10⁻³` within `Δμ ∈ [0, 20]`.
pub fn threshold_bias(config: &DotScanConfig, target: f64, mu2: f64) -> Result<f64> {
    const MAX_BIAS: f64 = 20.0;
    const STEP: f64 = 0.25;
    if !boundary_solvable(config, target, mu2, 0.0)? {
        return Err(Error::NotFound(format!("boundary has no solution at zero bias for mu2 = {mu2}")));
    }
    let mut lo = 0.0;
    let mut hi = None;
    let mut bias = STEP;
    while bias <= MAX_BIAS + 1e-12 {
        if boundary_solvable(config, target, mu2, bias)? {
            lo = bias;
        } else {
            hi = Some(bias);
            break;
        }
        bias += STEP;
    }
    let mut hi = hi.ok_or_else(|| Error::NotFound("boundary stays finite up to the largest bias".into()))?;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if boundary_solvable(config, target, mu2, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sign changes of `ρ_n^I − ρ_n^II` for the dot, refined to `10⁻¹²`.
pub fn dot_population_crossings(
    model: &DotModel,
    a: &DotState,
    b: &DotState,
    component: usize,
    horizon: f64,
    samples: usize,
) -> Result<Vec<Crossing>> {
    let times = uniform_times(horizon, samples);
    let sa = TimeSeries::sample(times.clone(), |t| model.populations_at(a, t)[component]);
    let sb = TimeSeries::sample(times, |t| model.populations_at(b, t)[component]);
    detect_crossings(&sa, &sb, |t| model.population_difference(a, b, component, t))
}
