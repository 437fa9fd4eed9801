use anyhow::{bail, Context, Result};
use mpemba_core::observables;
use mpemba_core::qdot;
use mpemba_core::scan::{self, BoundaryCurve};
use mpemba_core::twosite::{self, TwoSiteState};
use serde_json::{json, Value};

use crate::build;
use crate::config::{ConfigError, ExperimentConfig, ModelKind, ScanKind};
use crate::output::{Cell, Table};

pub struct RunOutput {
    pub table: Table,
    pub summary: Option<Value>,
}

fn require_states(cfg: &ExperimentConfig, n: usize) -> Result<()> {
    if cfg.initial.len() < n {
        return Err(ConfigError::field("initial", format!("needs at least {n} [[initial]] entries, found {}", cfg.initial.len())).into());
    }
    Ok(())
}

pub fn evolve(cfg: &ExperimentConfig) -> Result<RunOutput> {
    require_states(cfg, 1)?;
    let time = cfg.time()?;
    let times = scan::uniform_times(time.t_max, time.samples);
    match cfg.model {
        ModelKind::Qdot => evolve_dot(cfg, &times),
        ModelKind::TwoSite => evolve_two_site(cfg, &times),
    }
}

fn evolve_dot(cfg: &ExperimentConfig, times: &[f64]) -> Result<RunOutput> {
    let d = cfg.dot()?;
    let model = build::dot_model(d)?;
    let mut columns = vec!["t".to_string()];
    let mut series = Vec::new();
    for (i, s) in cfg.initial.iter().enumerate() {
        let state = build::dot_state(d, &model, s, i)?;
        columns.extend((1..=4).map(|k| format!("{}_rho{k}", s.label)));
        series.push(qdot::evolve_dot(&model, &state, times).with_context(|| format!("evolving initial[{i}]"))?);
    }
    let mut table = Table::new(columns);
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        for s in &series {
            row.extend(s[k].populations.iter().map(|&p| Cell::Num(p)));
        }
        table.push(row);
    }
    Ok(RunOutput { table, summary: None })
}

fn evolve_two_site(cfg: &ExperimentConfig, times: &[f64]) -> Result<RunOutput> {
    let params = build::two_site_params(cfg.two_site()?)?;
    let gen = build::two_site_generator(&params, cfg.mode)?;
    let mut columns = vec!["t".to_string()];
    let mut series = Vec::new();
    let mut notes = Vec::new();
    for (i, s) in cfg.initial.iter().enumerate() {
        let state = build::two_site_state(s, i)?;
        for name in ["p1", "p2", "p3", "p4", "coh_re", "coh_im", "concurrence", "qmi", "entropy"] {
            columns.push(format!("{}_{name}", s.label));
        }
        let traj = twosite::evolve_two_site(&gen, &state, times).with_context(|| format!("evolving initial[{i}]"))?;
        notes.push(json!({
            "label": s.label,
            "coherence_ignored": traj.coherence_ignored,
            "worst_positivity_violation": traj.worst_positivity_violation,
        }));
        series.push(traj.states);
    }
    let mut table = Table::new(columns);
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        for s in &series {
            row.extend(state_cells(&params, &s[k])?);
        }
        table.push(row);
    }
    Ok(RunOutput {
        table,
        summary: Some(json!({ "trajectories": notes })),
    })
}

fn state_cells(params: &twosite::TwoSiteParams, s: &TwoSiteState) -> Result<Vec<Cell>> {
    let local = twosite::global_to_local(params, s)?;
    let entropy = observables::joint_entropy(&local)?;
    let mut cells: Vec<Cell> = s.populations.iter().map(|&p| Cell::Num(p)).collect();
    cells.push(Cell::Num(s.coherence.re));
    cells.push(Cell::Num(s.coherence.im));
    cells.push(Cell::Num(observables::concurrence_local(&local)?));
    cells.push(Cell::Num(observables::quantum_mutual_information(&local)?));
    cells.push(Cell::Num(entropy));
    Ok(cells)
}

pub fn run_scan(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sc = cfg.scan()?;
    let needs = |model: ModelKind, what: &str| -> Result<()> {
        if cfg.model != model {
            bail!(ConfigError::field("scan.kind", format!("{what} scans need model = \"{}\"", if model == ModelKind::Qdot { "qdot" } else { "two-site" })));
        }
        Ok(())
    };
    match sc.kind {
        ScanKind::Boundary => {
            needs(ModelKind::Qdot, "boundary")?;
            boundary_scan(cfg)
        }
        ScanKind::Threshold => {
            needs(ModelKind::Qdot, "threshold")?;
            threshold_scan(cfg)
        }
        ScanKind::CrossingTime => {
            needs(ModelKind::TwoSite, "crossing-time")?;
            crossing_time_scan(cfg)
        }
        ScanKind::RegionMap => {
            needs(ModelKind::TwoSite, "region-map")?;
            region_map_scan(cfg)
        }
    }
}

fn dot_scan_config(cfg: &ExperimentConfig) -> Result<mpemba_core::scan::DotScanConfig> {
    let sc = cfg.scan()?;
    let mu1 = sc.mu1_tilde.ok_or_else(|| ConfigError::field("scan.mu1_tilde", "is required"))?;
    let mu3 = sc.mu3_tilde.ok_or_else(|| ConfigError::field("scan.mu3_tilde", "is required"))?;
    if !(1..=4).contains(&sc.component) {
        bail!(ConfigError::field("scan.component", "must be within 1..=4"));
    }
    build::dot_scan_config(cfg.dot()?, mu1, mu3, sc.component)
}

fn dot_biases(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let b = cfg.scan()?.bias_values();
    if b.is_empty() {
        let d = cfg.dot()?;
        return Ok(vec![0.5 * (d.mu_left - d.mu_right)]);
    }
    Ok(b)
}

fn boundary_scan(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sc = cfg.scan()?;
    let dsc = dot_scan_config(cfg)?;
    let mu2 = sc.mu2.ok_or_else(|| ConfigError::field("scan.mu2", "axis is required"))?.values();
    let targets = if sc.targets.is_empty() { vec![0.0, -1.0] } else { sc.targets.clone() };
    let mut table = Table::new(["bias", "target", "mu2", "mu4"]);
    let mut curves_json = Vec::new();
    let mut intersections = Vec::new();
    for bias in dot_biases(cfg)? {
        let curves: Vec<BoundaryCurve> = targets
            .iter()
            .map(|&t| scan::trace_boundary(&dsc, t, &mu2, bias))
            .collect::<mpemba_core::Result<_>>()?;
        for c in &curves {
            for p in &c.points {
                table.push(vec![Cell::Num(bias), Cell::Num(c.target), Cell::Num(p.mu2), Cell::Num(p.mu4)]);
            }
            curves_json.push(json!({
                "bias": bias,
                "target": c.target,
                "points": c.points.len(),
                "unsolved": c.unsolved,
                "diverged_beyond": c.diverged_beyond,
            }));
        }
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                for p in scan::curve_intersections(&curves[i], &curves[j], 0.5) {
                    intersections.push(json!({
                        "bias": bias,
                        "targets": [curves[i].target, curves[j].target],
                        "mu2": p.mu2,
                        "mu4": p.mu4,
                    }));
                }
            }
        }
    }
    Ok(RunOutput {
        table,
        summary: Some(json!({ "curves": curves_json, "intersections": intersections })),
    })
}

fn threshold_scan(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sc = cfg.scan()?;
    let dsc = dot_scan_config(cfg)?;
    let mu2 = sc.mu2_fixed.ok_or_else(|| ConfigError::field("scan.mu2_fixed", "is required"))?;
    let target = sc.targets.first().copied().unwrap_or(-1.0);
    let bias = scan::threshold_bias(&dsc, target, mu2).context("threshold search")?;
    let mut table = Table::new(["mu2", "target", "threshold_bias"]);
    table.push(vec![Cell::Num(mu2), Cell::Num(target), Cell::Num(bias)]);
    Ok(RunOutput { table, summary: None })
}

fn two_states(cfg: &ExperimentConfig) -> Result<(TwoSiteState, TwoSiteState)> {
    require_states(cfg, 2)?;
    Ok((build::two_site_state(&cfg.initial[0], 0)?, build::two_site_state(&cfg.initial[1], 1)?))
}

fn crossing_time_scan(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sc = cfg.scan()?;
    let params = build::two_site_params(cfg.two_site()?)?;
    let (a, b) = two_states(cfg)?;
    let means = sc.mean_values();
    let biases = sc.bias_values();
    if means.is_empty() {
        bail!(ConfigError::field("scan.means", "needs at least one mean potential"));
    }
    if biases.is_empty() {
        bail!(ConfigError::field("scan.biases", "needs at least one bias"));
    }
    let mut table = Table::new(["mean", "bias", "t_star"]);
    for &mean in &means {
        for (bias, t) in scan::crossing_time_curve(&params, &a, &b, mean, &biases)? {
            table.push(vec![Cell::Num(mean), Cell::Num(bias), Cell::from(t)]);
        }
    }
    Ok(RunOutput { table, summary: None })
}

fn region_map_scan(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sc = cfg.scan()?;
    let params = build::two_site_params(cfg.two_site()?)?;
    let (a, b) = two_states(cfg)?;
    let (biases, means) = (sc.bias_values(), sc.mean_values());
    if biases.is_empty() || means.is_empty() {
        bail!(ConfigError::field("scan", "region maps need bias and mean axes"));
    }
    let map = scan::coherence_region_map(&params, &biases, &means, &a, &b)?;
    let mut table = Table::new(["bias", "mean", "flag", "lindblad_flag"]);
    for (m, &mean) in means.iter().enumerate() {
        for (k, &bias) in biases.iter().enumerate() {
            table.push(vec![Cell::Num(bias), Cell::Num(mean), Cell::Bool(map.redfield[m][k]), Cell::Bool(map.lindblad[m][k])]);
        }
    }
    Ok(RunOutput { table, summary: None })
}
