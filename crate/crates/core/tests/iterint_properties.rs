use proptest::prelude::*;
use stochtaylor::expr::Expr;
use stochtaylor::iterint::{catalog, chaining_check, iterated_integral, unit_spec, IntegrandSpec, Integrator};
use stochtaylor::paths::sample_path;

const SEED: u64 = 0xc4a1_0001;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chaining_is_exact(
        stream in 0u64..1000,
        n in 1usize..=4,
        which in 0usize..3,
        mut idx in prop::array::uniform3(0usize..=1024),
        x in -1.0f64..1.0,
    ) {
        let p = sample_path(SEED, stream, 10, 1.0).unwrap();
        let spec = &catalog(n)[which];
        idx.sort_unstable();
        let [a, b, c] = idx.map(|i| p.time(i));
        let r = chaining_check(&p, spec, a, b, c, x).unwrap();
        prop_assert!(r.residual.abs() <= 1e-10 * r.scale, "{} residual {} scale {}", spec.name, r.residual, r.scale);
    }

    #[test]
    fn linear_in_outer_integrand(
        stream in 0u64..1000,
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
        n in 1usize..=3,
    ) {
        let p = sample_path(SEED ^ 7, stream, 9, 1.0).unwrap();
        let base = catalog(n)[1].clone();
        let f = stochtaylor::expr::parse("cos(t*x) + x", &["t", "x"]).unwrap();
        let g = stochtaylor::expr::parse("exp(-t) * sin(x)", &["t", "x"]).unwrap();
        let combo = Expr::Const(alpha) * f.clone() + Expr::Const(beta) * g.clone();
        let val = |s: &IntegrandSpec| iterated_integral(&p, s, 1, n, 0.0, 1.0, 0.4).unwrap();
        let lhs = val(&base.with_outer(combo));
        let rhs = alpha * val(&base.with_outer(f)) + beta * val(&base.with_outer(g));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())), "{lhs} vs {rhs}");
    }
}

#[test]
fn boundary_triples_have_zero_residual() {
    let p = sample_path(SEED, 1, 10, 1.0).unwrap();
    for spec in catalog(3) {
        let a = chaining_check(&p, &spec, 0.25, 0.25, 0.75, 0.1).unwrap();
        let b = chaining_check(&p, &spec, 0.25, 0.75, 0.75, 0.1).unwrap();
        assert!(a.residual.abs() <= 1e-14 * a.scale);
        assert!(b.residual.abs() <= 1e-14 * b.scale);
    }
}

#[test]
fn mixed_kinds_scale_with_time() {
    // a pure time integral of 1 over [t, s] is s - t; the double one is (s-t)^2/2
    let p = sample_path(SEED, 2, 8, 1.0).unwrap();
    let e = (Expr::Const(1.0), Integrator::Lebesgue);
    let spec = IntegrandSpec::new("time2", vec![e.clone(), e]).unwrap();
    let one = iterated_integral(&p, &spec, 1, 1, 0.25, 0.75, 0.0).unwrap();
    let two = iterated_integral(&p, &spec, 1, 2, 0.25, 0.75, 0.0).unwrap();
    assert!((one - 0.5).abs() < 1e-14);
    // left-endpoint sum: dt^2 * m(m-1)/2 with m = 128 steps
    let dt = p.dt();
    assert!((two - dt * dt * 128.0 * 127.0 / 2.0).abs() < 1e-14);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    0.5 * (v[(n - 1) / 2] + v[n / 2])
}

#[test]
fn refinement_gaps_shrink() {
    for n in [2, 3] {
        let spec = unit_spec(n);
        let mut medians = Vec::new();
        for level in [10u32, 12, 14, 16] {
            let gaps: Vec<f64> = (0..50u64)
                .map(|s| {
                    let p = sample_path(SEED ^ 3, s, level, 1.0).unwrap();
                    let q = p.refine(level + 2).unwrap();
                    let a = iterated_integral(&p, &spec, 1, n, 0.0, 1.0, 0.0).unwrap();
                    let b = iterated_integral(&q, &spec, 1, n, 0.0, 1.0, 0.0).unwrap();
                    (a - b).abs()
                })
                .collect();
            medians.push(median(gaps));
        }
        assert!(medians.windows(2).all(|w| w[1] < w[0]), "N={n}: {medians:?}");
    }
}

#[test]
fn hermite_closed_forms_match_explicit_polynomials() {
    use stochtaylor::iterint::hermite_closed_form;
    for &(b, t) in &[(0.3, 1.0), (-1.7, 0.5), (2.2, 2.0)] {
        let f = |n| hermite_closed_form(n, b, t);
        assert!((f(1) - b).abs() < 1e-14);
        assert!((f(2) - 0.5 * (b * b - t)).abs() < 1e-14);
        assert!((f(3) - (b * b * b - 3.0 * t * b) / 6.0).abs() < 1e-13);
    }
}

#[test]
fn iterated_unit_integrals_approach_hermite_forms() {
    use stochtaylor::iterint::hermite_gap;
    let g1 = hermite_gap(77, 10, 1, 12, 1.0).unwrap();
    assert!(g1[0] < 1e-12 && g1[1] < 1e-12);
    for n in 2..=3 {
        let [coarse, fine] = hermite_gap(77, 30, n, 12, 1.0).unwrap();
        assert!(coarse < 0.1 && fine < coarse, "N = {n}: {coarse} -> {fine}");
    }
}
