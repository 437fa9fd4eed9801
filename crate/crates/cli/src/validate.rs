//! Invariant suite: spectral residuals, conservation laws and oracle agreement.

use anyhow::Result;
use mpemba_core::linalg::{self, CVector, DEFAULT_RK4_STEP};
use mpemba_core::qdot::{self, DotModel, DotState};
use mpemba_core::scan::uniform_times;
use mpemba_core::twosite::{self, GeneratorMode, TwoSiteParams, TwoSiteState};
use nalgebra::Vector4;
use num_complex::Complex64;

use crate::build;
use crate::config::{DotSection, ExperimentConfig, ModelKind, TwoSiteSection};
use crate::output::{Cell, Table};

pub const SPECTRAL_TOL: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-4;
/// Oracle comparison window in units of `1/Γ`.
pub const ORACLE_WINDOW: f64 = 20.0;
const ORACLE_SAMPLES: usize = 20;

pub struct Report {
    pub table: Table,
    pub failures: usize,
}

impl Report {
    fn new() -> Self {
        Self {
            table: Table::new(["check", "value", "tolerance", "status"]),
            failures: 0,
        }
    }

    fn check(&mut self, name: &str, value: f64, tol: f64) {
        let ok = value <= tol;
        if !ok {
            self.failures += 1;
        }
        self.table.push(vec![
            Cell::Text(name.into()),
            Cell::Num(value),
            Cell::Num(tol),
            Cell::Text(if ok { "pass" } else { "fail" }.into()),
        ]);
    }

    fn info(&mut self, name: &str, value: f64) {
        self.table
            .push(vec![Cell::Text(name.into()), Cell::Num(value), Cell::Missing, Cell::Text("info".into())]);
    }
}

fn default_dot() -> DotSection {
    DotSection {
        epsilon0: 2.0,
        u: 1.25,
        gamma: 1.0,
        temperature: 1.0,
        mu_left: 3.0,
        mu_right: 3.0,
        convention: Default::default(),
    }
}

fn default_two_site() -> TwoSiteSection {
    TwoSiteSection {
        omega1: 1.0,
        omega2: 1.0,
        delta: 0.2,
        gamma: 0.05,
        temperature1: 1.0,
        temperature2: 1.0,
        mu1: 3.5,
        mu2: 2.5,
    }
}

/// Runs the suite for whichever models the config describes; with no config
/// both models are checked at default parameters.
pub fn run(cfg: Option<&ExperimentConfig>) -> Result<Report> {
    let mut r = Report::new();
    let (dot, two) = match cfg {
        None => (Some(default_dot()), Some(default_two_site())),
        Some(c) => match c.model {
            ModelKind::Qdot => (Some(c.dot()?.clone()), None),
            ModelKind::TwoSite => (None, Some(c.two_site()?.clone())),
        },
    };
    if let Some(d) = dot {
        dot_checks(&mut r, &d, cfg)?;
    }
    if let Some(t) = two {
        two_site_checks(&mut r, &t, cfg)?;
    }
    Ok(r)
}

fn max_abs_diff_real(a: &[f64], b: &CVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (Complex64::new(*x, 0.0) - y).norm()).fold(0.0, f64::max)
}

fn dot_states(d: &DotSection, model: &DotModel, cfg: Option<&ExperimentConfig>) -> Result<Vec<DotState>> {
    let from_cfg: Vec<DotState> = match cfg {
        Some(c) => c.initial.iter().enumerate().map(|(i, s)| build::dot_state(d, model, s, i)).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    if !from_cfg.is_empty() {
        return Ok(from_cfg);
    }
    Ok(vec![
        DotState::new([1.0, 0.0, 0.0, 0.0])?,
        DotState::new([0.1, 0.2, 0.3, 0.4])?,
        qdot::prepare_initial_state(model.params(), &build::dot_baths(d, 2.0, 0.0)?)?,
    ])
}

fn dot_checks(r: &mut Report, d: &DotSection, cfg: Option<&ExperimentConfig>) -> Result<()> {
    let model = build::dot_model(d)?;
    let f = model.factors();
    let data = model.spectral_data();
    r.check("dot.right_eigen_residual", data.eigen_residual(&f), SPECTRAL_TOL);
    r.check("dot.left_eigen_residual", data.left_residual(&f), SPECTRAL_TOL);
    r.check("dot.biorthogonality", data.biorthogonality_residual(), SPECTRAL_TOL);

    let numeric = linalg::eigendecompose(&qdot::build_transition_matrix(&f))?;
    let mut num: Vec<f64> = numeric.eigenvalues().iter().map(|z| z.re).collect();
    num.sort_by(|a, b| b.total_cmp(a));
    let mut ana = qdot::dot_eigenvalues(&f).to_vec();
    ana.sort_by(|a, b| b.total_cmp(a));
    let gap = num.iter().zip(&ana).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check("dot.analytic_vs_numeric_eigenvalues", gap, SPECTRAL_TOL);
    r.info(
        "dot.left_times_boundary_vector",
        (data.left * Vector4::new(-1.0, 1.0, 1.0, -1.0)).amax(),
    );

    let gen = model.generator();
    let horizon = ORACLE_WINDOW / d.gamma;
    let times = uniform_times(horizon, ORACLE_SAMPLES);
    let fine = uniform_times(horizon, 2000);
    let (mut oracle, mut trace, mut range, mut spin) = (0.0f64, 0.0f64, 0.0f64, None::<f64>);
    for s in dot_states(d, &model, cfg)? {
        let rk = linalg::rk4_trajectory(|v| gen.apply(v), &s.to_cvector(), &times, DEFAULT_RK4_STEP)?;
        for (t, y) in times.iter().zip(&rk) {
            oracle = oracle.max(max_abs_diff_real(&model.populations_at(&s, *t), y));
        }
        let symmetric = (s.populations[1] - s.populations[2]).abs() == 0.0;
        for t in &fine {
            let p = model.populations_at(&s, *t);
            trace = trace.max((p.iter().sum::<f64>() - 1.0).abs());
            range = range.max(p.iter().map(|x| (-x).max(x - 1.0)).fold(0.0, f64::max));
            if symmetric {
                spin = Some(spin.unwrap_or(0.0).max((p[1] - p[2]).abs()));
            }
        }
    }
    r.check("dot.spectral_vs_rk4", oracle, ORACLE_TOL);
    r.check("dot.trace_drift", trace, TRACE_TOL);
    r.check("dot.population_range_excess", range.max(0.0), TRACE_TOL);
    if let Some(s) = spin {
        r.check("dot.spin_symmetry", s, 1e-10);
    }
    Ok(())
}

fn two_site_states(cfg: Option<&ExperimentConfig>) -> Result<Vec<TwoSiteState>> {
    if let Some(c) = cfg {
        if !c.initial.is_empty() {
            return c.initial.iter().enumerate().map(|(i, s)| build::two_site_state(s, i)).collect();
        }
    }
    Ok(vec![
        TwoSiteState::diagonal([0.0, 0.2, 0.7, 0.1])?,
        TwoSiteState::new([0.1, 0.25, 0.65, 0.0], Complex64::new(0.2, 0.0))?,
    ])
}

fn expected_spectrum(p: &TwoSiteParams, mode: GeneratorMode) -> Result<Vec<Complex64>> {
    let g = p.gamma1;
    let a = twosite::derive_angles(p)?;
    let split = a.omega_prime2 - a.omega_prime1;
    let mut v: Vec<Complex64> = [0.0, -2.0 * g, -2.0 * g, -4.0 * g].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    if mode == GeneratorMode::Redfield {
        v.push(Complex64::new(-2.0 * g, split));
        v.push(Complex64::new(-2.0 * g, -split));
    }
    Ok(v)
}

/// Largest distance from each expected eigenvalue to its nearest computed one.
fn spectrum_gap(expected: &[Complex64], got: &[Complex64]) -> f64 {
    let one_way = |a: &[Complex64], b: &[Complex64]| {
        a.iter()
            .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if expected.len() != got.len() {
        return f64::INFINITY;
    }
    one_way(expected, got).max(one_way(got, expected))
}

fn two_site_checks(r: &mut Report, t: &TwoSiteSection, cfg: Option<&ExperimentConfig>) -> Result<()> {
    let params = build::two_site_params(t)?;
    let states = two_site_states(cfg)?;
    for mode in [GeneratorMode::Lindblad, GeneratorMode::Redfield] {
        let tag = if mode == GeneratorMode::Lindblad { "lindblad" } else { "redfield" };
        let gen = twosite::build_generator(&params, mode)?;
        r.check(&format!("two_site.{tag}.decomposition_residual"), gen.decomposition().residual(), SPECTRAL_TOL);
        if params.is_symmetric() {
            let gap = spectrum_gap(&expected_spectrum(&params, mode)?, gen.eigenvalues());
            r.check(&format!("two_site.{tag}.closed_form_spectrum"), gap, SPECTRAL_TOL);
        }
        let horizon = ORACLE_WINDOW / params.gamma1;
        let times = uniform_times(horizon, ORACLE_SAMPLES);
        let fine = uniform_times(horizon, 2000);
        let (mut oracle, mut trace, mut positivity) = (0.0f64, 0.0f64, 0.0f64);
        for s in &states {
            let x0 = s.to_vector(mode);
            let rk = linalg::rk4_trajectory(|v| gen.apply(v), &x0, &times, DEFAULT_RK4_STEP)?;
            let sp = gen.decomposition().propagate_many(&x0, &times)?;
            for (a, b) in rk.iter().zip(&sp) {
                oracle = oracle.max(linalg::max_abs_diff(a, b));
            }
            let traj = twosite::evolve_two_site(&gen, s, &fine)?;
            trace = traj.states.iter().map(|x| (x.trace() - 1.0).abs()).fold(trace, f64::max);
            positivity = positivity.max(traj.worst_positivity_violation);
        }
        r.check(&format!("two_site.{tag}.spectral_vs_rk4"), oracle, ORACLE_TOL);
        r.check(&format!("two_site.{tag}.trace_drift"), trace, TRACE_TOL);
        r.check(&format!("two_site.{tag}.positivity_violation"), positivity, POSITIVITY_TOL);
    }
    Ok(())
}
