//! Turns config sections into core model objects, naming the offending field
//! on failure.

use anyhow::{Context, Result};
use mpemba_core::qdot::{self, BathPair, DotModel, DotParams, DotState, RightVectorConvention};
use mpemba_core::scan::DotScanConfig;
use mpemba_core::twosite::{self, GeneratorMode, SiteBath, TwoSiteGenerator, TwoSiteParams, TwoSiteState};
use num_complex::Complex64;

use crate::config::{Convention, DotSection, InitialState, Mode, TwoSiteSection};

fn field(name: &str) -> String {
    format!("config field `{name}`")
}

pub fn convention(c: Convention) -> RightVectorConvention {
    match c {
        Convention::Consistent => RightVectorConvention::Consistent,
        Convention::Printed => RightVectorConvention::Printed,
    }
}

pub fn generator_mode(m: Mode) -> GeneratorMode {
    match m {
        Mode::Lindblad => GeneratorMode::Lindblad,
        Mode::Redfield => GeneratorMode::Redfield,
    }
}

pub fn dot_baths(d: &DotSection, mu_left: f64, mu_right: f64) -> Result<BathPair> {
    BathPair::new(mu_left, mu_right, d.temperature, d.temperature).with_context(|| field("dot.temperature"))
}

pub fn dot_model(d: &DotSection) -> Result<DotModel> {
    let baths = dot_baths(d, d.mu_left, d.mu_right)?;
    let params = DotParams::new(d.epsilon0, d.u, d.gamma, baths).with_context(|| field("dot.epsilon0, dot.u, dot.gamma"))?;
    DotModel::new(params).context("dot model")
}

pub fn dot_state(d: &DotSection, model: &DotModel, s: &InitialState, index: usize) -> Result<DotState> {
    if let Some(p) = &s.populations {
        return DotState::new([p[0], p[1], p[2], p[3]]).with_context(|| field(&format!("initial[{index}].populations")));
    }
    let [l, r] = s.preparing.expect("validated: populations or preparing");
    let baths = dot_baths(d, l, r)?;
    qdot::prepare_initial_state(model.params(), &baths).with_context(|| field(&format!("initial[{index}].preparing")))
}

pub fn dot_scan_config(d: &DotSection, mu1_tilde: f64, mu3_tilde: f64, component: usize) -> Result<DotScanConfig> {
    dot_baths(d, d.mu_left, d.mu_right)?;
    Ok(DotScanConfig {
        epsilon0: d.epsilon0,
        u: d.u,
        gamma: d.gamma,
        temperature: d.temperature,
        mean: 0.5 * (d.mu_left + d.mu_right),
        mu1_tilde,
        mu3_tilde,
        component,
        convention: convention(d.convention),
    })
}

pub fn two_site_params(t: &TwoSiteSection) -> Result<TwoSiteParams> {
    let b1 = SiteBath::new(t.temperature1, t.mu1).with_context(|| field("two_site.temperature1"))?;
    let b2 = SiteBath::new(t.temperature2, t.mu2).with_context(|| field("two_site.temperature2"))?;
    let p = TwoSiteParams::new(t.omega1, t.omega2, t.delta, t.gamma, t.gamma, b1, b2).with_context(|| field("two_site.gamma"))?;
    twosite::derive_angles(&p).with_context(|| field("two_site.omega1, two_site.omega2, two_site.delta"))?;
    Ok(p)
}

pub fn two_site_generator(p: &TwoSiteParams, mode: Mode) -> Result<TwoSiteGenerator> {
    twosite::build_generator(p, generator_mode(mode)).context("two-site generator")
}

pub fn two_site_state(s: &InitialState, index: usize) -> Result<TwoSiteState> {
    let p = s.populations.as_ref().expect("validated: populations");
    let c = s.coherence.map_or(Complex64::new(0.0, 0.0), |[re, im]| Complex64::new(re, im));
    TwoSiteState::new([p[0], p[1], p[2], p[3]], c).with_context(|| field(&format!("initial[{index}]")))
}
