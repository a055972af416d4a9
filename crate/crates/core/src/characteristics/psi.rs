use crate::expr::{parse, CompiledExpr, Expr};
use crate::fields::stencil;
use crate::paths::BrownianGrid;

use super::{CharError, CharSystem, GForms, Scheme, SpdeScenario};

/// Largest `|t - τ|` accepted by [`build_psi`], as a fraction of `T`.
pub const PSI_WINDOW: f64 = 1.0 / 64.0;

/// Data of a second-order test field at one base point `(τ, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionBase {
    pub xi: f64,
    pub value: f64,
    pub theta: f64,
    pub p: f64,
    pub a: f64,
}

/// `φ(τ+Δt, x)` from the second-order expansion around `(τ, ξ)`:
/// `φ + θ Δt + g ΔB + ½(g_z g_x + g_z² A) ΔB² + p (x-ξ)
/// + (g_x + g_z A)(x-ξ) ΔB + ½ A (x-ξ)²`, with `g` and its derivatives at
/// `(ξ, p)`.
pub fn expansion_value(gf: &GForms, base: &ExpansionBase, dt: f64, db: f64, x: f64) -> Result<f64, CharError> {
    let at = [base.xi, base.p];
    let (g, gx, gz) = (gf.g.eval(&at)?, gf.gx.eval(&at)?, gf.gz.eval(&at)?);
    let dx = x - base.xi;
    Ok(base.value
        + base.theta * dt
        + g * db
        + 0.5 * (gz * gx + gz * gz * base.a) * db * db
        + base.p * dx
        + (gx + gz * base.a) * dx * db
        + 0.5 * base.a * dx * dx)
}

/// Test field given by `φ(τ, ·)` and `θ(τ, ·)`, both over `x`.
#[derive(Debug, Clone)]
pub struct TestField {
    pub phi: Expr,
    pub theta: Expr,
    compiled: [CompiledExpr; 4],
}

impl TestField {
    pub fn new(phi: &str, theta: &str) -> Result<Self, CharError> {
        let phi = parse(phi, &["x"])?;
        let theta = parse(theta, &["x"])?;
        let d1 = phi.differentiate("x");
        let d2 = d1.differentiate("x");
        let c = |e: &Expr| CompiledExpr::new(e, &["x"]);
        let compiled = [c(&phi)?, c(&d1)?, c(&d2)?, c(&theta)?];
        Ok(TestField { phi, theta, compiled })
    }

    pub fn base(&self, x: f64) -> Result<ExpansionBase, CharError> {
        let v = |i: usize| self.compiled[i].eval(&[x]);
        Ok(ExpansionBase { xi: x, value: v(0)?, p: v(1)?, a: v(2)?, theta: v(3)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiOptions {
    pub damping: f64,
    pub max_iter: usize,
    /// Stop once the implicit-relation residual is below this.
    pub tol: f64,
    pub scheme: Scheme,
}

impl Default for PsiOptions {
    fn default() -> Self {
        PsiOptions { damping: 0.5, max_iter: 200, tol: 1e-12, scheme: Scheme::StratonovichHeun }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiResult {
    pub xs: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub iterations: usize,
    /// `max |ψ - [φ(t, φ_t(x, Dψ)) - η_t(x, 0, Dψ)]|`.
    pub residual: f64,
    /// `φ(τ, x) + θ(τ, x)(t - τ)`.
    pub first_order: Vec<f64>,
    /// `max |ψ - first_order|` over nodes at least two from either end.
    pub gap: f64,
}

/// Derivative on a uniform grid: five-point central differences inside,
/// second-order one-sided differences at the two outer nodes.
fn grid_derivative(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                stencil([v[i - 2], v[i - 1], v[i], v[i + 1], v[i + 2]], dx, 1).expect("order 1")
            } else if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
            } else if i + 1 == n {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

/// Solve `φ(t, φ_t(x, Dψ)) = η_t(x, ψ, Dψ)` for `ψ(t, ·)` on the uniform
/// nodes `xs` by damped fixed-point iteration, `φ(t, ·)` being the test
/// field's expansion around `(τ, x)`.
pub fn build_psi(
    sc: &SpdeScenario,
    test: &TestField,
    path: &BrownianGrid,
    tau_idx: usize,
    t_idx: usize,
    xs: &[f64],
    opts: PsiOptions,
) -> Result<PsiResult, CharError> {
    if xs.len() < 5 {
        return Err(CharError::Config("psi needs at least five nodes".into()));
    }
    if tau_idx > path.steps() || t_idx > path.steps() {
        return Err(CharError::OffGrid(tau_idx.max(t_idx)));
    }
    let dt = path.time(t_idx) - path.time(tau_idx);
    if dt.abs() > PSI_WINDOW * path.horizon + 1e-15 {
        return Err(CharError::WindowExceeded(dt.abs()));
    }
    let db = path.values[t_idx] - path.values[tau_idx];
    let gf = GForms::new(&sc.g)?;
    let sys = CharSystem::new(&sc.g)?;
    let dx = xs[1] - xs[0];
    let bases: Vec<ExpansionBase> = xs.iter().map(|&x| test.base(x)).collect::<Result<_, _>>()?;
    let first_order: Vec<f64> = bases.iter().map(|b| b.value + b.theta * dt).collect();

    let image = |psi: &[f64]| -> Result<(Vec<f64>, Vec<f64>), CharError> {
        let dpsi = grid_derivative(psi, dx);
        let out = bases
            .iter()
            .zip(&dpsi)
            .map(|(b, &z)| {
                let [phi_t, eta_t, _] = sys.flow(path, tau_idx, t_idx, [b.xi, 0.0, z], opts.scheme)?;
                Ok(expansion_value(&gf, b, dt, db, phi_t)? - eta_t)
            })
            .collect::<Result<Vec<f64>, CharError>>()?;
        Ok((out, dpsi))
    };

    let mut psi: Vec<f64> = bases.iter().map(|b| b.value).collect();
    let mut iterations = 0;
    let (mut residual, mut dpsi);
    loop {
        let (next, d) = image(&psi)?;
        dpsi = d;
        residual = psi.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if residual <= opts.tol {
            break;
        }
        if iterations == opts.max_iter {
            return Err(CharError::NoConvergence { iterations, residual });
        }
        for (p, n) in psi.iter_mut().zip(&next) {
            *p += opts.damping * (n - *p);
        }
        iterations += 1;
    }
    let n = psi.len();
    let gap = (2..n - 2).fold(0.0f64, |m, i| m.max((psi[i] - first_order[i]).abs()));
    Ok(PsiResult { xs: xs.to_vec(), psi, dpsi, iterations, residual, first_order, gap })
}
