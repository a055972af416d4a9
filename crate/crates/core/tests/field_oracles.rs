use rayon::prelude::*;
use stochtaylor::expr::{parse, CompiledExpr, Expr};
use stochtaylor::fields::{
    ito_lift, simulate_system, FieldSource, Lattice, Scenario, ScenarioId, ScenarioParams,
};
use stochtaylor::fit::fit_loglog;
use stochtaylor::iterint::{iterated_integral, unit_spec};
use stochtaylor::paths::sample_path;

const SEED: u64 = 0xf1e1_d500;

fn scenario(id: ScenarioId) -> Scenario {
    Scenario::build(id, &ScenarioParams::default()).unwrap()
}

#[test]
fn additive_simulation_is_exact() {
    let params = ScenarioParams { zeta0: "y^2".into(), ..Default::default() };
    let sc = Scenario::build(ScenarioId::S1Additive, &params).unwrap();
    let p = sample_path(SEED, 0, 10, 1.0).unwrap();
    let lat = Lattice::new(2.0, 33);
    let sim = simulate_system(&sc.system, &p, lat, 32).unwrap();
    let ex = sc.exact().unwrap().materialize(&p, lat, 32).unwrap();
    for (a, b) in sim.values[0][0].iter().zip(&ex.values[0][0]) {
        assert!((a - b).abs() < 1e-12);
    }
    // quadratic initial data: the 5-point second difference is exact
    for r in [0, 7, 32] {
        let d2 = sim.spatial_derivative(1, 2, r * 32, lat.node(10)).unwrap();
        assert!((d2[0] - 2.0).abs() < 1e-8);
    }
}

#[test]
fn constant_in_y_has_zero_derivative() {
    let params = ScenarioParams { zeta0: "3.5".into(), ..Default::default() };
    let sc = Scenario::build(ScenarioId::S1Additive, &params).unwrap();
    let p = sample_path(SEED, 1, 10, 1.0).unwrap();
    let f = simulate_system(&sc.system, &p, Lattice::default(), 256).unwrap();
    for k in 2..127 {
        let y = f.lattice.node(k);
        assert!(f.spatial_derivative(1, 1, 512, y).unwrap()[0].abs() < 1e-12);
        assert!(f.spatial_derivative(1, 2, 512, y).unwrap()[0].abs() < 1e-12);
    }
    assert!(f.spatial_derivative(1, 1, 512, f.lattice.node(1)).is_err());
}

#[test]
fn transport_first_derivative_is_fourth_order() {
    let sc = scenario(ScenarioId::S3Transport);
    let ex = sc.exact().unwrap();
    let p = sample_path(SEED, 2, 8, 1.0).unwrap();
    let mut pts = Vec::new();
    for nodes in [17usize, 33, 65, 129] {
        let lat = Lattice::new(2.0, nodes);
        let f = ex.materialize(&p, lat, 64).unwrap();
        let mut err = 0.0f64;
        for r in 0..f.records() {
            let n = r * 64;
            let b = p.values[n];
            for k in 2..nodes - 2 {
                let y = lat.node(k);
                let d = f.spatial_derivative(1, 1, n, y).unwrap()[0];
                err = err.max((d - (y + 0.8 * b).cos()).abs());
            }
        }
        pts.push((lat.dx(), err));
    }
    let fit = fit_loglog(&pts).unwrap();
    assert!(fit.slope >= 3.7, "order {} from {pts:?}", fit.slope);
    // exact sources also answer symbolically
    let d = ex.bind(&p).dzeta(1, 1, 100, 0.3).unwrap();
    assert!(d.symbolic);
    assert!((d.values[0] - (0.3 + 0.8 * p.values[100]).cos()).abs() < 1e-14);
}

#[test]
fn hermite_cascade_matches_iterated_integrals() {
    let sc = scenario(ScenarioId::S2Hermite);
    let ex = sc.exact().unwrap();
    let at = |e: &Expr, y: f64| e.evaluate_with(&["y"], &[y]).unwrap();
    let init = &sc.system.init;
    let g3 = &sc.system.top[0];
    let lat = Lattice::new(1.0, 5);
    let (mut gap_sim, mut gap_exact, mut norm) = (0.0f64, 0.0f64, 0.0f64);
    for s in 0..4u64 {
        let p = sample_path(SEED, 10 + s, 18, 1.0).unwrap();
        let x: Vec<f64> = (1..=3)
            .map(|n| iterated_integral(&p, &unit_spec(n), 1, n, 0.0, 1.0, 0.0).unwrap())
            .collect();
        let sim = simulate_system(&sc.system, &p, lat, p.steps()).unwrap();
        for k in 0..lat.nodes {
            let y = lat.node(k);
            let z0 = at(&init[0][0], y);
            let chaos = at(&init[1][0], y) * x[0] + at(&init[2][0], y) * x[1] + at(g3, y) * x[2];
            let simulated = sim.get(1, 0, 1, k) - z0;
            let exact = ex.evaluate(&p, 1.0, y).unwrap()[0][0] - z0;
            gap_sim = gap_sim.max((simulated - chaos).abs());
            gap_exact += (exact - chaos).powi(2);
            norm += exact.powi(2);
        }
    }
    // left-point Euler steps on this cascade are the iterated sums themselves
    assert!(gap_sim <= 1e-9, "simulated gap {gap_sim}");
    let rel = (gap_exact / norm).sqrt();
    assert!(rel <= 2e-2, "closed-form gap {rel}");
}

fn sup_gap(id: ScenarioId, stream: u64, level: u32) -> f64 {
    let sc = scenario(id);
    let coarse = sample_path(SEED ^ 5, stream, 11, 1.0).unwrap();
    let p = if level > 11 { coarse.refine(level).unwrap() } else { coarse };
    let lat = Lattice::new(1.5, 13);
    let every = 1usize << (level - 6);
    let sim = simulate_system(&sc.system, &p, lat, every).unwrap();
    let ex = sc.exact().unwrap().materialize(&p, lat, every).unwrap();
    sim.values[0][0]
        .iter()
        .zip(&ex.values[0][0])
        .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()))
}

#[test]
fn simulation_converges_at_strong_order_half() {
    for id in [ScenarioId::S2Hermite, ScenarioId::S3Transport] {
        let mean = |level| {
            let g: Vec<f64> = (0..40u64).into_par_iter().map(|s| sup_gap(id, s, level)).collect();
            g.iter().sum::<f64>() / g.len() as f64
        };
        let (g12, g13) = (mean(12), mean(13));
        let c12 = g12 / 2f64.powi(-12).sqrt();
        let ratio = g13 / g12;
        assert!(
            (ratio - 0.5f64.sqrt()).abs() <= 0.3 * 0.5f64.sqrt(),
            "{id}: gaps {g12:e} -> {g13:e}, ratio {ratio}, fitted C {c12}"
        );
    }
}

#[test]
fn regularity_quantiles_are_stable() {
    let lat = Lattice::new(2.0, 33);
    for id in ScenarioId::ALL {
        let sc = scenario(id);
        let maxima: Vec<f64> = (0..200u64)
            .into_par_iter()
            .map(|s| {
                let p = sample_path(SEED ^ 9, s, 10, 1.0).unwrap();
                let f = match &sc.exact {
                    Some(ex) => ex.materialize(&p, lat, 32).unwrap(),
                    None => simulate_system(&sc.system, &p, lat, 32).unwrap(),
                };
                let mut m = 0.0f64;
                for r in 0..f.records() {
                    for k in 2..lat.nodes - 2 {
                        for level in 1..=4 {
                            for order in 1..=3 {
                                for v in f.spatial_derivative(level, order, r * 32, lat.node(k)).unwrap() {
                                    m = m.max(v.abs());
                                }
                            }
                        }
                    }
                }
                m
            })
            .collect();
        assert!(maxima.iter().all(|m| m.is_finite()));
        let q = |n: usize| {
            let mut v = maxima[..n].to_vec();
            v.sort_by(f64::total_cmp);
            v[((n - 1) as f64 * 0.99).round() as usize]
        };
        let (q100, q200) = (q(100), q(200));
        assert!((q200 / q100 - 1.0).abs() <= 0.3, "{id}: {q100} vs {q200}");
    }
}

#[test]
fn lift_obeys_product_rule() {
    for id in [ScenarioId::S2Hermite, ScenarioId::S3Transport, ScenarioId::S4Sine] {
        let sc = scenario(id);
        for level in 1..=2 {
            let d = sc.system.dims[level];
            let zs = stochtaylor::fields::arg_names("z", d);
            let (phi, psi) = if d == 1 {
                ("sin(z) * y + z^2".to_string(), "exp(-z*z) + cos(y)".to_string())
            } else {
                (format!("sin({}) * {} + y", zs[0], zs[d - 1]), format!("{}^2 - {}", zs[d - 1], zs[0]))
            };
            let mut vars: Vec<&str> = vec!["y"];
            vars.extend(zs.iter().map(String::as_str));
            let phi = parse(&phi, &vars).unwrap();
            let psi = parse(&psi, &vars).unwrap();
            let lp = ito_lift(&phi, level, &sc.system).unwrap();
            let ls = ito_lift(&psi, level, &sc.system).unwrap();
            let lprod = ito_lift(&(phi.clone() * psi.clone()), level, &sc.system).unwrap();
            let rhs = phi.clone() * ls.drift.clone() + psi.clone() * lp.drift.clone() + lp.diffusion.clone() * ls.diffusion.clone();
            let names = lprod.vars();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let a = CompiledExpr::new(&lprod.drift, &refs).unwrap();
            let b = CompiledExpr::new(&rhs, &refs).unwrap();
            let mut rng = stochtaylor::rng::StreamRng::new(SEED, level as u64);
            for _ in 0..200 {
                let pt: Vec<f64> = (0..refs.len()).map(|_| 4.0 * rng.uniform() - 2.0).collect();
                let (u, v) = (a.eval(&pt).unwrap(), b.eval(&pt).unwrap());
                assert!((u - v).abs() <= 1e-10 * (1.0 + u.abs()), "{id} level {level}: {u} vs {v}");
            }
        }
    }
}

#[test]
fn lifted_sde_tracks_the_field_pathwise() {
    // Φ = G_1 of each scenario, integrated as its own Itô process
    for id in [ScenarioId::S2Hermite, ScenarioId::S3Transport] {
        let sc = scenario(id);
        let ex = sc.exact().unwrap();
        let phi = sc.system.levels[0].diffusion[0].clone();
        let lift = ito_lift(&phi, 1, &sc.system).unwrap();
        let names = lift.vars();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let drift = CompiledExpr::new(&lift.drift, &refs).unwrap();
        let diff = CompiledExpr::new(&lift.diffusion, &refs).unwrap();
        let mut zvars = vec!["y".to_string()];
        zvars.extend(stochtaylor::fields::arg_names("z", sc.system.dims[1]));
        let zrefs: Vec<&str> = zvars.iter().map(String::as_str).collect();
        let phic = CompiledExpr::new(&phi, &zrefs).unwrap();
        let p = sample_path(SEED ^ 11, 0, 16, 1.0).unwrap();
        let src = ex.bind(&p);
        let y = 0.35;
        let arg = |n: usize| -> Vec<f64> {
            let mut v = vec![y];
            v.extend(src.zeta(2, n, y).unwrap());
            v
        };
        let mut integrated = phic.eval(&arg(0)).unwrap();
        let mut worst = 0.0f64;
        for n in 0..p.steps() {
            let mut v = arg(n);
            v.extend(src.zeta(3, n, y).unwrap());
            integrated += drift.eval(&v).unwrap() * p.dt() + diff.eval(&v).unwrap() * (p.values[n + 1] - p.values[n]);
            worst = worst.max((integrated - phic.eval(&arg(n + 1)).unwrap()).abs());
        }
        assert!(worst <= 5.0 * p.dt().sqrt(), "{id}: {worst}");
    }
}
