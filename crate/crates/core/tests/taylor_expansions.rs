use proptest::prelude::*;
use stochtaylor::fields::{FieldSource, Lattice, Scenario, ScenarioId, ScenarioParams};
use stochtaylor::fit::fit_loglog;
use stochtaylor::paths::sample_path;
use stochtaylor::taylor::{
    coefficients, expand, forward_backward_gap, residual_scan, wick_form_check, x_collection_residual,
    BasePointRule, CoefficientForms, Direction, FieldProvider, Increment, Normalizer, ScanConfig,
};

const SEED: u64 = 0x7a71_0e00;

fn scenario(id: ScenarioId) -> Scenario {
    Scenario::build(id, &ScenarioParams::default()).unwrap()
}

fn fine_lattice() -> Lattice {
    Lattice::new(2.0, 4097)
}

#[test]
fn additive_temporal_expansion_is_exact() {
    let sc = scenario(ScenarioId::S1Additive);
    for dir in [Direction::Forward, Direction::Backward] {
        let mut cfg = ScanConfig::new(SEED, 20, 10, Increment::temporal(2, 10));
        cfg.direction = dir;
        let rep = residual_scan(&sc.system, FieldProvider::Exact(sc.exact().unwrap()), &cfg).unwrap();
        assert!(rep.rows.iter().all(|r| r.raw.abs() <= 1e-12), "{dir}");
        assert!(rep.slope.is_none() || rep.mean_raw.iter().all(|m| *m <= 1e-12));
    }
}

#[test]
fn additive_mixed_residual_is_the_cubic_taylor_error() {
    let sc = scenario(ScenarioId::S1Additive);
    let mut cfg = ScanConfig::new(SEED, 5, 10, Increment::mixed(2, 10, fine_lattice().dx()));
    cfg.normalizer = Normalizer::Mixed;
    cfg.lattice = fine_lattice();
    let rep = residual_scan(&sc.system, FieldProvider::Exact(sc.exact().unwrap()), &cfg).unwrap();
    for r in &rep.rows {
        let (y, k) = (r.y, r.k);
        let cubic = (y + k).sin() - y.sin() - y.cos() * k + 0.5 * y.sin() * k * k;
        assert!((r.raw - cubic).abs() <= 1e-12, "{r:?}");
    }
}

#[test]
fn temporal_residual_decays_at_order_three_halves() {
    for id in [ScenarioId::S2Hermite, ScenarioId::S3Transport] {
        let sc = scenario(id);
        let cfg = ScanConfig::new(SEED, 100, 14, Increment::temporal(6, 14));
        let rep = residual_scan(&sc.system, FieldProvider::Exact(sc.exact().unwrap()), &cfg).unwrap();
        let slope = rep.slope.unwrap();
        assert!(slope >= 1.40, "{id}: slope {slope}, means {:?}", rep.mean_raw);
    }
}

#[test]
fn backward_temporal_residual_decays_too() {
    let sc = scenario(ScenarioId::S2Hermite);
    let mut cfg = ScanConfig::new(SEED, 50, 14, Increment::temporal(6, 14));
    cfg.direction = Direction::Backward;
    let rep = residual_scan(&sc.system, FieldProvider::Exact(sc.exact().unwrap()), &cfg).unwrap();
    assert!(rep.slope.unwrap() >= 1.40, "{:?}", rep.slope);
}

#[test]
fn mixed_normalized_sup_is_stable() {
    let sc = scenario(ScenarioId::S2Hermite);
    let lat = fine_lattice();
    let mut cfg = ScanConfig::new(SEED, 100, 14, Increment::mixed(4, 14, lat.dx()));
    cfg.normalizer = Normalizer::Mixed;
    cfg.lattice = lat;
    let rep = residual_scan(&sc.system, FieldProvider::Exact(sc.exact().unwrap()), &cfg).unwrap();
    let sup_above = |hmin: f64| {
        rep.rows.iter().filter(|r| r.h >= hmin).fold(0.0f64, |m, r| m.max(r.normalized.abs()))
    };
    let ratio = sup_above(2f64.powi(-14)) / sup_above(2f64.powi(-13));
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
    assert!(rep.sup_normalized.is_finite() && rep.path_sup_moments[0] > 0.0);
}

#[test]
fn residual_sups_agree_across_base_point_rules() {
    let sc = scenario(ScenarioId::S2Hermite);
    let mut cfg = ScanConfig::new(SEED, 100, 12, Increment::temporal(4, 12));
    cfg.rules = BasePointRule::universality();
    let rep = residual_scan(&sc.system, FieldProvider::Exact(sc.exact().unwrap()), &cfg).unwrap();
    assert_eq!(rep.rule_sup.len(), 5);
    assert!(rep.universality_ratio() <= 10.0, "{:?}", rep.rule_sup);
}

#[test]
fn forward_and_backward_predictions_cancel() {
    let sc = scenario(ScenarioId::S2Hermite);
    let ex = sc.exact().unwrap();
    let forms = CoefficientForms::new(&sc.system).unwrap();
    let mut pts = Vec::new();
    for j in 4..=12u32 {
        let hs = 1usize << (14 - j);
        let mut sum = 0.0;
        let mut n = 0;
        for s in 0..40u64 {
            let p = sample_path(SEED ^ 3, s, 14, 1.0).unwrap();
            let src = ex.bind(&p);
            for (t, y) in [(5000usize, -0.6), (9000, 0.2), (13000, 1.1)] {
                sum += forward_backward_gap(&forms, &src, t, hs, y).unwrap().abs();
                n += 1;
            }
        }
        pts.push((hs as f64 / 16384.0, sum / n as f64));
    }
    let fit = fit_loglog(&pts).unwrap();
    assert!(fit.slope >= 1.3, "{pts:?}");
}

#[test]
fn degenerate_diffusion_gives_classical_taylor_remainder() {
    let params = ScenarioParams { sigma: 0.0, zeta0: "exp(sin(y))".into(), ..Default::default() };
    let sc = Scenario::build(ScenarioId::S1Additive, &params).unwrap();
    let mut cfg = ScanConfig::new(SEED, 4, 8, Increment::spatial(2, 8));
    cfg.normalizer = Normalizer::Mixed;
    let rep = residual_scan(&sc.system, FieldProvider::Exact(sc.exact().unwrap()), &cfg).unwrap();
    assert!(rep.slope.unwrap() >= 2.7, "{:?}", rep.mean_raw);
}

#[test]
fn simulated_scan_is_flagged() {
    let sc = scenario(ScenarioId::S4Sine);
    let mut cfg = ScanConfig::new(SEED, 2, 10, Increment::temporal(5, 8));
    cfg.lattice = Lattice::new(2.0, 33);
    let rep = residual_scan(&sc.system, FieldProvider::Simulated(&sc.system), &cfg).unwrap();
    assert!(rep.lower_confidence);
    assert!(rep.rows.iter().all(|r| r.raw.is_finite()));
    let csv = rep.to_csv();
    assert!(csv.starts_with("path,rule,t,y,h,k,raw_residual,normalized_residual\n"));
    assert_eq!(csv.lines().count(), rep.rows.len() + 1);
    assert!(rep.summary().contains("\"lower_confidence\": true"));
}

#[test]
fn scan_rejects_bad_settings() {
    let sc = scenario(ScenarioId::S2Hermite);
    let ex = FieldProvider::Exact(sc.exact().unwrap());
    let mut cfg = ScanConfig::new(SEED, 2, 8, Increment::temporal(2, 8));
    cfg.alpha = 0.3;
    assert!(residual_scan(&sc.system, ex, &cfg).is_err());
    let cfg = ScanConfig::new(SEED, 2, 8, vec![Increment { h: 0.001, k: 0.0 }]);
    assert!(residual_scan(&sc.system, ex, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn backward_flips_only_the_drift(stream in 0u64..1000, t in 0usize..=1024, node in 3usize..126) {
        for id in [ScenarioId::S2Hermite, ScenarioId::S3Transport] {
            let sc = scenario(id);
            let forms = CoefficientForms::new(&sc.system).unwrap();
            let p = sample_path(SEED, stream, 10, 1.0).unwrap();
            let src = sc.exact().unwrap().bind(&p);
            let y = Lattice::default().node(node);
            let f = coefficients(&forms, &src, t, y, Direction::Forward).unwrap();
            let b = coefficients(&forms, &src, t, y, Direction::Backward).unwrap();
            prop_assert_eq!(b.a.to_bits(), (-f.a).to_bits());
            for (u, v) in [(f.b, b.b), (f.c, b.c), (f.p, b.p), (f.q, b.q), (f.x, b.x)] {
                prop_assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn wick_bookkeeping_agrees(stream in 0u64..1000, t in 0usize..900, hs in 0usize..120, y in -1.5f64..1.5) {
        for id in [ScenarioId::S1Additive, ScenarioId::S2Hermite, ScenarioId::S3Transport] {
            let sc = scenario(id);
            let forms = CoefficientForms::new(&sc.system).unwrap();
            let p = sample_path(SEED, stream, 10, 1.0).unwrap();
            let src = sc.exact().unwrap().bind(&p);
            let tc = coefficients(&forms, &src, t, y, Direction::Forward).unwrap();
            prop_assert!(wick_form_check(&tc, &p, hs).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn hessian_terms_collect(a in -10.0f64..10.0, gz in -5.0f64..5.0, db in -2.0f64..2.0, k in -1.0f64..1.0) {
        prop_assert!(x_collection_residual(a, gz, db, k).abs() <= 1e-12);
    }

    #[test]
    fn spatial_only_prediction_is_second_order_polynomial(stream in 0u64..100, t in 0usize..1024, k in -0.5f64..0.5) {
        let sc = scenario(ScenarioId::S2Hermite);
        let forms = CoefficientForms::new(&sc.system).unwrap();
        let p = sample_path(SEED, stream, 10, 1.0).unwrap();
        let src = sc.exact().unwrap().bind(&p);
        let tc = coefficients(&forms, &src, t, 0.25, Direction::Forward).unwrap();
        let e = expand(&tc, &p, 0, k).unwrap();
        let d1 = src.dzeta(1, 1, t, 0.25).unwrap().values[0];
        let d2 = src.dzeta(1, 2, t, 0.25).unwrap().values[0];
        prop_assert!((e - d1 * k - 0.5 * d2 * k * k).abs() <= 1e-12);
    }
}
