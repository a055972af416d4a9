//! First-order SPDEs `du = f(x, u, Du, D²u) dt + g(x, Du) ∘ dB` and their
//! stochastic characteristics.
//!
//! With `l = -g_z`, `h = g - z g_z`, `k = g_x` the characteristics started
//! at time `τ` solve `dφ = l ∘ dB`, `dη = h ∘ dB`, `dχ = k ∘ dB`, all
//! coefficients evaluated at `(φ, χ)`.

mod mol;
mod psi;
mod viscosity;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::expr::{parse, CompiledExpr, Expr, ExprError};
use crate::fields::FieldError;
use crate::paths::{BrownianGrid, PathError};
use crate::rng::StreamRng;
use crate::taylor::{Direction, TaylorCoefficients};

pub use mol::{solve_mol, MolSolution};
pub use psi::{build_psi, expansion_value, ExpansionBase, PsiOptions, PsiResult, TestField, PSI_WINDOW};
pub use viscosity::{
    check_triplet, sample_triplets, viscosity_check, Side, Triplet, ViscosityConfig, ViscosityEvent,
    ViscosityReport,
};

pub const F_VARS: [&str; 4] = ["x", "u", "p", "A"];
pub const G_VARS: [&str; 2] = ["x", "z"];
pub const SOLUTION_VARS: [&str; 3] = ["t", "x", "b"];

#[derive(Debug, thiserror::Error)]
pub enum CharError {
    #[error("non-finite characteristic state at step {step}")]
    NonFinite { step: usize },
    #[error("time index {0} outside the path")]
    OffGrid(usize),
    #[error("unknown SPDE scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario `{0}` has no closed-form solution")]
    NoExactSolution(String),
    #[error("f is decreasing in A: d f/dA = {slope} at {at:?}")]
    NotProper { slope: f64, at: [f64; 4] },
    #[error("|t - tau| = {0} exceeds the psi window")]
    WindowExceeded(f64),
    #[error("psi iteration did not converge in {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("x = {0} is not a node of the solution lattice")]
    NotOnLattice(f64),
    #[error("scan neighbourhood leaves the grid at t index {0}")]
    Neighbourhood(usize),
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpdeId {
    /// `f = A`, `g = σ`.
    HeatAdditive,
    /// `f = 0`, `g = H z`.
    TransportH,
    /// `f = 0`, `g = V(x) z`.
    TransportVx,
    /// `f = ½ A`, `g = sin z`.
    NonlinearSin,
}

impl SpdeId {
    pub const ALL: [SpdeId; 4] = [SpdeId::HeatAdditive, SpdeId::TransportH, SpdeId::TransportVx, SpdeId::NonlinearSin];

    pub fn code(self) -> &'static str {
        match self {
            SpdeId::HeatAdditive => "heat-additive",
            SpdeId::TransportH => "transport-H",
            SpdeId::TransportVx => "transport-Vx",
            SpdeId::NonlinearSin => "nonlinear-sin",
        }
    }
}

impl fmt::Display for SpdeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SpdeId {
    type Err = CharError;
    fn from_str(s: &str) -> Result<Self, CharError> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "heat-additive" | "heat" => SpdeId::HeatAdditive,
            "transport-h" => SpdeId::TransportH,
            "transport-vx" => SpdeId::TransportVx,
            "nonlinear-sin" | "sine" | "s4" => SpdeId::NonlinearSin,
            _ => return Err(CharError::UnknownScenario(s.to_string())),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SpdeScenario {
    pub id: SpdeId,
    /// Over `(x, u, p, A)`.
    pub f: Expr,
    /// Over `(x, z)`.
    pub g: Expr,
    /// Over `x`.
    pub u0: Expr,
    /// Closed-form solution over `(t, x, b)` with `b = B_t`.
    pub exact: Option<Expr>,
}

pub const SIGMA: f64 = 0.5;
pub const TRANSPORT_H: f64 = 0.8;

/// Constants of the SPDE catalog; `velocity` is an expression over `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdeParams {
    pub sigma: f64,
    pub transport: f64,
    pub velocity: String,
}

impl Default for SpdeParams {
    fn default() -> Self {
        SpdeParams { sigma: SIGMA, transport: TRANSPORT_H, velocity: "0.5 + 0.25*cos(x)".into() }
    }
}

impl SpdeScenario {
    pub fn new(id: SpdeId, f: &str, g: &str, u0: &str, exact: Option<&str>) -> Result<Self, CharError> {
        Ok(SpdeScenario {
            id,
            f: parse(f, &F_VARS)?,
            g: parse(g, &G_VARS)?,
            u0: parse(u0, &["x"])?,
            exact: exact.map(|e| parse(e, &SOLUTION_VARS)).transpose()?,
        })
    }

    pub fn build(id: SpdeId) -> Result<Self, CharError> {
        Self::build_with(id, &SpdeParams::default())
    }

    pub fn build_with(id: SpdeId, params: &SpdeParams) -> Result<Self, CharError> {
        let SpdeParams { sigma, transport, velocity } = params;
        match id {
            SpdeId::HeatAdditive => Self::new(
                id,
                "A",
                &format!("({sigma})"),
                "sin(x)",
                Some(&format!("exp(-t)*sin(x) + ({sigma})*b")),
            ),
            SpdeId::TransportH => Self::new(
                id,
                "0",
                &format!("({transport})*z"),
                "sin(x)",
                Some(&format!("sin(x + ({transport})*b)")),
            ),
            SpdeId::TransportVx => Self::new(id, "0", &format!("({velocity})*z"), "sin(x)", None),
            SpdeId::NonlinearSin => Self::new(id, "0.5*A", "sin(z)", "sin(x)", None),
        }
    }

    pub fn exact_solution(&self) -> Result<ExactSolution, CharError> {
        let e = self.exact.as_ref().ok_or_else(|| CharError::NoExactSolution(self.id.to_string()))?;
        ExactSolution::new(e)
    }

    /// Sampled check that `f` is non-decreasing in `A` on `[-2, 2]^4`.
    pub fn check_proper(&self, samples: usize, seed: u64) -> Result<(), CharError> {
        let dfa = CompiledExpr::new(&self.f.differentiate("A"), &F_VARS)?;
        let mut rng = StreamRng::new(seed, 0);
        for _ in 0..samples {
            let at = [0; 4].map(|_| 4.0 * rng.uniform() - 2.0);
            let slope = dfa.eval(&at)?;
            if slope < -1e-8 {
                return Err(CharError::NotProper { slope, at });
            }
        }
        Ok(())
    }
}

/// Itô form of the Stratonovich term: diffusion `g` and drift correction
/// `½ g_z (g_x + g_z A)` over `(x, z, A)`, `A` standing for `D²u`.
#[derive(Debug, Clone)]
pub struct ItoForm {
    pub diffusion: Expr,
    pub correction: Expr,
}

pub fn strat_to_ito(sc: &SpdeScenario) -> ItoForm {
    let g = &sc.g;
    let gz = g.differentiate("z");
    let gx = g.differentiate("x");
    let inner = gx + gz.clone() * Expr::var("A");
    ItoForm { diffusion: g.clone(), correction: Expr::constant(0.5) * gz * inner }
}

/// `g` and its first and second derivatives, compiled over `(x, z)`.
#[derive(Debug, Clone)]
pub struct GForms {
    pub g: CompiledExpr,
    pub gx: CompiledExpr,
    pub gz: CompiledExpr,
    pub gxz: CompiledExpr,
    pub gzz: CompiledExpr,
    pub gxx: CompiledExpr,
}

impl GForms {
    pub fn new(g: &Expr) -> Result<Self, CharError> {
        let c = |e: &Expr| CompiledExpr::new(e, &G_VARS);
        let gx = g.differentiate("x");
        let gz = g.differentiate("z");
        Ok(GForms {
            g: c(g)?,
            gxz: c(&gx.differentiate("z"))?,
            gxx: c(&gx.differentiate("x"))?,
            gzz: c(&gz.differentiate("z"))?,
            gx: c(&gx)?,
            gz: c(&gz)?,
        })
    }
}

/// Solution of an SPDE on one path.
pub trait SolutionField: Sync {
    fn path(&self) -> &BrownianGrid;
    fn value(&self, t_idx: usize, x: f64) -> Result<f64, CharError>;
    /// `D_x^order u` for `order` in 1..=2.
    fn derivative(&self, order: usize, t_idx: usize, x: f64) -> Result<f64, CharError>;
}

/// Closed-form solution `u(t, x, B_t)` with symbolic x-derivatives.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub expr: Expr,
    compiled: [CompiledExpr; 3],
}

impl ExactSolution {
    pub fn new(e: &Expr) -> Result<Self, CharError> {
        let d1 = e.differentiate("x");
        let d2 = d1.differentiate("x");
        Ok(ExactSolution {
            expr: e.clone(),
            compiled: [
                CompiledExpr::new(e, &SOLUTION_VARS)?,
                CompiledExpr::new(&d1, &SOLUTION_VARS)?,
                CompiledExpr::new(&d2, &SOLUTION_VARS)?,
            ],
        })
    }

    pub fn eval(&self, order: usize, t: f64, x: f64, b: f64) -> Result<f64, CharError> {
        Ok(self.compiled[order].eval(&[t, x, b])?)
    }

    pub fn bind<'a>(&'a self, path: &'a BrownianGrid) -> BoundSolution<'a> {
        BoundSolution { exact: self, path }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundSolution<'a> {
    pub exact: &'a ExactSolution,
    pub path: &'a BrownianGrid,
}

impl SolutionField for BoundSolution<'_> {
    fn path(&self) -> &BrownianGrid {
        self.path
    }

    fn value(&self, t_idx: usize, x: f64) -> Result<f64, CharError> {
        let b = *self.path.values.get(t_idx).ok_or(CharError::OffGrid(t_idx))?;
        self.exact.eval(0, self.path.time(t_idx), x, b)
    }

    fn derivative(&self, order: usize, t_idx: usize, x: f64) -> Result<f64, CharError> {
        if !(1..=2).contains(&order) {
            return Err(CharError::Field(FieldError::Order(order)));
        }
        let b = *self.path.values.get(t_idx).ok_or(CharError::OffGrid(t_idx))?;
        self.exact.eval(order, self.path.time(t_idx), x, b)
    }
}

/// Expansion coefficients of an SPDE solution at `(t, x)`:
/// `a = f`, `b = g`, `c = g_z (g_x + g_z D²u)`, `p = Du`, `X = D²u`,
/// `q = g_x + D²u g_z`; `drift` is the Itô drift `f + ½ c`.
pub fn spde_taylor_coefficients<U: SolutionField + ?Sized>(
    sc: &SpdeScenario,
    u: &U,
    t_idx: usize,
    x: f64,
) -> Result<TaylorCoefficients, CharError> {
    let f = CompiledExpr::new(&sc.f, &F_VARS)?;
    let gf = GForms::new(&sc.g)?;
    let v = u.value(t_idx, x)?;
    let p = u.derivative(1, t_idx, x)?;
    let a2 = u.derivative(2, t_idx, x)?;
    let at = [x, p];
    let (gx, gz) = (gf.gx.eval(&at)?, gf.gz.eval(&at)?);
    let c = gz * (gx + gz * a2);
    let a = f.eval(&[x, v, p, a2])?;
    Ok(TaylorCoefficients {
        a,
        b: gf.g.eval(&at)?,
        c,
        p,
        q: gx + a2 * gz,
        x: a2,
        drift: a + 0.5 * c,
        t_idx,
        t: u.path().time(t_idx),
        y: x,
        direction: Direction::Forward,
    })
}

/// `l, h, k` over `(x, z)` with their gradients over `(x, y, z)`.
#[derive(Debug, Clone)]
pub struct CharCoefficients {
    pub l: Expr,
    pub h: Expr,
    pub k: Expr,
    /// `[∇l, ∇h, ∇k]`, each `(D_x, D_y, D_z)`.
    pub grad: [[Expr; 3]; 3],
}

impl CharCoefficients {
    pub fn new(g: &Expr) -> Self {
        let gz = g.differentiate("z");
        let l = -gz.clone();
        let h = g.clone() - Expr::var("z") * gz;
        let k = g.differentiate("x");
        let grad = [&l, &h, &k].map(|e| [e.differentiate("x"), e.differentiate("y"), e.differentiate("z")]);
        CharCoefficients { l, h, k, grad }
    }

    /// `⟨∇γ, Θ⟩ = D_xγ l + D_yγ h + D_zγ k` for `γ = l, h, k` (index 0..3).
    pub fn theta_derivative(&self, which: usize) -> Expr {
        let [dx, dy, dz] = self.grad[which].clone();
        dx * self.l.clone() + dy * self.h.clone() + dz * self.k.clone()
    }

    /// `h ≡ 0` by the normal-form zero test.
    pub fn h_vanishes(&self) -> bool {
        self.h.is_identically_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Predictor-corrector on `∘ dB`.
    StratonovichHeun,
    /// Euler step with the Itô correction `½⟨∇v, Θ⟩ dt` plus the Milstein
    /// term `½⟨∇v, Θ⟩ (ΔB² - dt)`.
    ItoMilstein,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::StratonovichHeun => "stratonovich-heun",
            Scheme::ItoMilstein => "ito-milstein",
        })
    }
}

/// Compiled `l, h, k` and `⟨∇·, Θ⟩` over `(x, z)`.
#[derive(Debug, Clone)]
pub struct CharSystem {
    v: [CompiledExpr; 3],
    dv: [CompiledExpr; 3],
}

impl CharSystem {
    pub fn new(g: &Expr) -> Result<Self, CharError> {
        let cc = CharCoefficients::new(g);
        let c = |e: &Expr| CompiledExpr::new(e, &G_VARS);
        Ok(CharSystem {
            v: [c(&cc.l)?, c(&cc.h)?, c(&cc.k)?],
            dv: [c(&cc.theta_derivative(0))?, c(&cc.theta_derivative(1))?, c(&cc.theta_derivative(2))?],
        })
    }

    fn field(&self, x: f64, z: f64) -> Result<[f64; 3], CharError> {
        let a = [x, z];
        Ok([self.v[0].eval(&a)?, self.v[1].eval(&a)?, self.v[2].eval(&a)?])
    }

    fn correction(&self, x: f64, z: f64) -> Result<[f64; 3], CharError> {
        let a = [x, z];
        Ok([self.dv[0].eval(&a)?, self.dv[1].eval(&a)?, self.dv[2].eval(&a)?])
    }

    /// `(φ, η, χ)` at path index `to`, started from `(x, y, z)` at `from`.
    /// Either direction is allowed.
    pub fn flow(
        &self,
        path: &BrownianGrid,
        from: usize,
        to: usize,
        start: [f64; 3],
        scheme: Scheme,
    ) -> Result<[f64; 3], CharError> {
        let mut last = start;
        self.walk(path, from, to, start, scheme, |_, s| last = s)?;
        Ok(last)
    }

    fn walk(
        &self,
        path: &BrownianGrid,
        from: usize,
        to: usize,
        start: [f64; 3],
        scheme: Scheme,
        mut visit: impl FnMut(usize, [f64; 3]),
    ) -> Result<(), CharError> {
        for idx in [from, to] {
            if idx > path.steps() {
                return Err(CharError::OffGrid(idx));
            }
        }
        let mut s = start;
        visit(from, s);
        let mut i = from;
        while i != to {
            let j = if to > i { i + 1 } else { i - 1 };
            let db = path.values[j] - path.values[i];
            let v = self.field(s[0], s[2])?;
            match scheme {
                Scheme::StratonovichHeun => {
                    let p = [0, 1, 2].map(|c| s[c] + v[c] * db);
                    let w = self.field(p[0], p[2])?;
                    for c in 0..3 {
                        s[c] += 0.5 * (v[c] + w[c]) * db;
                    }
                }
                Scheme::ItoMilstein => {
                    let dt = path.time(j) - path.time(i);
                    let d = self.correction(s[0], s[2])?;
                    for c in 0..3 {
                        s[c] += v[c] * db + 0.5 * d[c] * dt + 0.5 * d[c] * (db * db - dt);
                    }
                }
            }
            if !s.iter().all(|v| v.is_finite()) {
                return Err(CharError::NonFinite { step: j });
            }
            visit(j, s);
            i = j;
        }
        Ok(())
    }
}

/// Discrete characteristics from `τ` to `t` for one start point.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicsTriple {
    pub start: [f64; 3],
    pub scheme: Scheme,
    pub t_idx: Vec<usize>,
    pub phi: Vec<f64>,
    pub eta: Vec<f64>,
    pub chi: Vec<f64>,
}

impl CharacteristicsTriple {
    pub fn last(&self) -> [f64; 3] {
        let n = self.phi.len() - 1;
        [self.phi[n], self.eta[n], self.chi[n]]
    }

    /// Columns `t_idx, phi, eta, chi`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_idx,phi,eta,chi\n");
        for i in 0..self.phi.len() {
            let _ = writeln!(s, "{},{:e},{:e},{:e}", self.t_idx[i], self.phi[i], self.eta[i], self.chi[i]);
        }
        s
    }
}

pub fn solve_characteristics(
    sc: &SpdeScenario,
    path: &BrownianGrid,
    tau_idx: usize,
    t_idx: usize,
    start: [f64; 3],
    scheme: Scheme,
) -> Result<CharacteristicsTriple, CharError> {
    let sys = CharSystem::new(&sc.g)?;
    let mut out = CharacteristicsTriple { start, scheme, t_idx: vec![], phi: vec![], eta: vec![], chi: vec![] };
    sys.walk(path, tau_idx, t_idx, start, scheme, |i, s| {
        out.t_idx.push(i);
        out.phi.push(s[0]);
        out.eta.push(s[1]);
        out.chi.push(s[2]);
    })?;
    Ok(out)
}

/// Largest absolute values of `-½ g_z g_x + ½ z⟨∇l, Θ⟩ - ½⟨∇h, Θ⟩` and of
/// `D_z h + z g_zz` over the sample points `(x, z)`.
pub fn cancellation_check(g: &Expr, points: &[(f64, f64)]) -> Result<(f64, f64), CharError> {
    let cc = CharCoefficients::new(g);
    let z = Expr::var("z");
    let gz = g.differentiate("z");
    let half = Expr::constant(0.5);
    let first = -(half.clone() * gz.clone() * g.differentiate("x"))
        + half.clone() * z.clone() * cc.theta_derivative(0)
        - half * cc.theta_derivative(1);
    let second = cc.h.differentiate("z") + z * gz.differentiate("z");
    let (r1, r2) = (CompiledExpr::new(&first, &G_VARS)?, CompiledExpr::new(&second, &G_VARS)?);
    let mut worst = (0.0f64, 0.0f64);
    for &(x, zv) in points {
        worst.0 = worst.0.max(r1.eval(&[x, zv])?.abs());
        worst.1 = worst.1.max(r2.eval(&[x, zv])?.abs());
    }
    Ok(worst)
}

/// Diffusion coefficients exercised by the cancellation identities.
pub fn g_catalog() -> Vec<(String, Expr)> {
    let mut v: Vec<(String, Expr)> = SpdeId::ALL
        .iter()
        .map(|&id| (id.code().to_string(), SpdeScenario::build(id).expect("catalog parses").g))
        .collect();
    for extra in ["sin(x)*z^2", "z^3 + cos(x)*z", "exp(-z*z)*tanh(x)"] {
        v.push((extra.to_string(), parse(extra, &G_VARS).expect("catalog parses")));
    }
    v
}
