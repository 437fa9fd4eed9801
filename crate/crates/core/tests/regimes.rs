use mpemba_core::qdot::{self, RightVectorConvention};
use mpemba_core::roots::linspace;
use mpemba_core::scan::*;
use mpemba_core::twosite::*;
use num_complex::Complex64;

fn entanglement_template(temperature: f64, mu: f64) -> TwoSiteParams {
    let b = SiteBath::new(temperature, mu).unwrap();
    TwoSiteParams::symmetric(1.0, 0.2, 0.05, b, b).unwrap()
}

fn dot_config(convention: RightVectorConvention) -> DotScanConfig {
    DotScanConfig {
        epsilon0: 2.0,
        u: 1.25,
        gamma: 1.0,
        temperature: 1.0,
        mean: 3.0,
        mu1_tilde: 2.0,
        mu3_tilde: 1.0,
        component: 2,
        convention,
    }
}

#[test]
fn more_entangled_state_dies_first_after_one_crossing() {
    let gen = build_generator(&entanglement_template(1.0, 3.0), GeneratorMode::Lindblad).unwrap();
    let a = TwoSiteState::diagonal([0.0, 0.2, 0.7, 0.1]).unwrap();
    let b = TwoSiteState::diagonal([0.1, 0.7, 0.1, 0.1]).unwrap();
    let race = entanglement_race(&gen, &a, &b, 1000.0, 2000).unwrap();
    assert!(race.initial[0] > race.initial[1]);
    let (da, db) = (race.death_times[0].unwrap(), race.death_times[1].unwrap());
    assert!(da < db);
    let before: Vec<_> = race.crossings.iter().filter(|c| c.time < da).collect();
    assert_eq!(before.len(), 1);
}

#[test]
fn crossing_time_trend_depends_on_mean_potential() {
    let a = TwoSiteState::diagonal([0.0, 0.2, 0.7, 0.1]).unwrap();
    let b = TwoSiteState::diagonal([0.1, 0.7, 0.1, 0.1]).unwrap();
    let template = entanglement_template(1.0, 3.0);
    let high = crossing_time_curve(&template, &a, &b, 3.0, &[0.0, 2.0]).unwrap();
    let low = crossing_time_curve(&template, &a, &b, 0.5, &[0.0, 2.0]).unwrap();
    assert!(high[1].1.unwrap() < high[0].1.unwrap());
    assert!(low[1].1.unwrap() > low[0].1.unwrap());
}

#[test]
fn mutual_information_crosses_for_both_parameter_sets() {
    let cases = [
        ((1.0, 3.0), [0.1, 0.1, 0.7, 0.1], [0.1, 0.65, 0.1, 0.15]),
        ((0.1, 1.2), [0.4, 0.1, 0.2, 0.3], [0.3, 0.3, 0.2, 0.2]),
    ];
    for ((temperature, mu), pa, pb) in cases {
        let gen = build_generator(&entanglement_template(temperature, mu), GeneratorMode::Lindblad).unwrap();
        let pair = TrajectoryPair::new(&gen, &TwoSiteState::diagonal(pa).unwrap(), &TwoSiteState::diagonal(pb).unwrap()).unwrap();
        let c = pair.crossings(&uniform_times(1000.0, 2000), &mutual_information).unwrap();
        assert!(!c.is_empty() && c[0].time > 0.0);
    }
}

#[test]
fn coherence_enables_population_crossing() {
    let params = TwoSiteParams::symmetric(
        1.0,
        0.05,
        0.05,
        SiteBath::new(1.0, 0.1).unwrap(),
        SiteBath::new(1.0, 3.0).unwrap(),
    )
    .unwrap();
    let a = TwoSiteState::new([0.1, 0.25, 0.65, 0.0], Complex64::new(0.2, 0.0)).unwrap();
    let b = TwoSiteState::new([0.1, 0.2, 0.6, 0.1], Complex64::new(-0.1, 0.0)).unwrap();
    let red = build_generator(&params, GeneratorMode::Redfield).unwrap();
    let lin = build_generator(&params, GeneratorMode::Lindblad).unwrap();
    assert!(population_crossing(&red, &a, &b, 2).unwrap());
    assert!(!population_crossing(&lin, &a, &b, 2).unwrap());
}

#[test]
fn zero_level_boundary_matches_across_bias_on_full_grid() {
    let cfg = dot_config(RightVectorConvention::Consistent);
    let mu2 = linspace(-3.0, 3.0, 50);
    let eq = trace_boundary(&cfg, 0.0, &mu2, 0.0).unwrap();
    let neq = trace_boundary(&cfg, 0.0, &mu2, 4.0).unwrap();
    assert_eq!(eq.points.len(), neq.points.len());
    assert!(eq.points.len() >= 40);
    for (p, q) in eq.points.iter().zip(&neq.points) {
        assert_eq!(p.mu2, q.mu2);
        assert!((p.mu4 - q.mu4).abs() <= 1e-6);
    }
}

#[test]
fn boundary_points_reevaluate_to_target() {
    let cfg = dot_config(RightVectorConvention::Consistent);
    let mu2 = linspace(-3.0, 3.0, 20);
    for target in [0.0, -1.0] {
        let curve = trace_boundary(&cfg, target, &mu2, 4.0).unwrap();
        let model = cfg.model(4.0).unwrap();
        for p in &curve.points {
            let (a, b) = cfg.states(&model, p.mu2, p.mu4).unwrap();
            let parts = qdot::criterion_parts(&model, &a, &b, 2, cfg.convention).unwrap();
            assert!((parts.numerator / parts.denominator - target).abs() <= BOUNDARY_TOL);
        }
        assert!(curve.points.windows(2).all(|w| w[0].mu2 <= w[1].mu2));
    }
}

#[test]
fn printed_convention_threshold_is_near_three() {
    let t = threshold_bias(&dot_config(RightVectorConvention::Printed), -1.0, 2.0).unwrap();
    assert!(t > 3.0 && t < 3.5, "{t}");
    assert!(threshold_bias(&dot_config(RightVectorConvention::Consistent), -1.0, 2.0).is_err());
}

#[test]
fn region_map_matches_sequential_evaluation() {
    let template = TwoSiteParams::symmetric(1.0, 0.05, 0.05, SiteBath::new(1.0, 0.0).unwrap(), SiteBath::new(1.0, 0.0).unwrap()).unwrap();
    let a = TwoSiteState::new([0.1, 0.25, 0.65, 0.0], Complex64::new(0.2, 0.0)).unwrap();
    let b = TwoSiteState::new([0.1, 0.2, 0.6, 0.1], Complex64::new(-0.1, 0.0)).unwrap();
    let biases = [0.5, 1.5, 2.5];
    let means = [1.55, 2.5];
    let map = with_threads(Some(3), || coherence_region_map(&template, &biases, &means, &a, &b)).unwrap().unwrap();
    for (m, &mean) in means.iter().enumerate() {
        for (k, &bias) in biases.iter().enumerate() {
            let p = template.with_bias(mean, bias).unwrap();
            let red = build_generator(&p, GeneratorMode::Redfield).unwrap();
            assert_eq!(map.redfield[m][k], population_crossing(&red, &a, &b, 2).unwrap());
        }
    }
}
