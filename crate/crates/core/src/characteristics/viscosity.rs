use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::expr::CompiledExpr;
use crate::paths::sample_path;
use crate::rng::{derive_seed, StreamRng};

use super::psi::{expansion_value, ExpansionBase};
use super::{CharError, ExactSolution, GForms, SolutionField, SpdeScenario, F_VARS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `u - φ` has a left-local maximum; expects `β ≤ f`.
    Sub,
    /// `u - φ` has a left-local minimum; expects `β ≥ f`.
    Super,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Sub => "sub",
            Side::Super => "super",
        })
    }
}

/// A test field at `(τ, ξ)`: `φ(τ, ξ) = u(τ, ξ)`, time slope `β`, slope `p`,
/// curvature `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub tau_idx: usize,
    pub xi: f64,
    pub beta: f64,
    pub p: f64,
    pub a: f64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityConfig {
    pub seed: u64,
    pub paths: usize,
    pub triplets: usize,
    pub level: u32,
    pub horizon: f64,
    /// Left-neighbourhood radius in time and space.
    pub rho: f64,
    /// Spatial scan step; `ξ` is a multiple of it.
    pub dx: f64,
    /// `tol = c_tol (dx² + dt^½)`.
    pub c_tol: f64,
    pub tie_tol: f64,
    /// `A = D²u ± (a_bias + U a_spread)`, `+` for sub and `-` for super.
    pub a_bias: f64,
    pub a_spread: f64,
    /// `β = f(ξ, u, Du, D²u) + (2U - 1) beta_spread`.
    pub beta_spread: f64,
}

impl Default for ViscosityConfig {
    fn default() -> Self {
        ViscosityConfig {
            seed: 0,
            paths: 50,
            triplets: 20,
            level: 12,
            horizon: 1.0,
            rho: 1.0 / 32.0,
            dx: 1.0 / 512.0,
            c_tol: 10.0,
            tie_tol: 1e-12,
            a_bias: 0.0,
            a_spread: 0.2,
            beta_spread: 0.3,
        }
    }
}

impl ViscosityConfig {
    pub fn tolerance(&self) -> f64 {
        let dt = self.horizon / (1u64 << self.level) as f64;
        self.c_tol * (self.dx * self.dx + dt.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityEvent {
    pub path: usize,
    pub tau: f64,
    pub xi: f64,
    pub rho: f64,
    pub triplet: Triplet,
    /// `β - f(ξ, u(τ, ξ), p, A)`.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityReport {
    pub events: Vec<ViscosityEvent>,
    pub triplets: usize,
    pub tolerance: f64,
}

impl ViscosityReport {
    pub fn violations(&self) -> usize {
        self.events.iter().filter(|e| !e.passed).count()
    }

    pub fn count(&self, side: Side) -> usize {
        self.events.iter().filter(|e| e.triplet.side == side).count()
    }

    /// Columns `path, tau, xi, side, margin, rho, passed`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("path,tau,xi,side,margin,rho,passed\n");
        for e in &self.events {
            let _ = writeln!(s, "{},{},{},{},{:e},{},{}", e.path, e.tau, e.xi, e.triplet.side, e.margin, e.rho, e.passed);
        }
        s
    }
}

/// Draw `cfg.triplets` test fields on one path, alternating sub and super.
pub fn sample_triplets<U: SolutionField + ?Sized>(
    sc: &SpdeScenario,
    u: &U,
    cfg: &ViscosityConfig,
    path_idx: usize,
) -> Result<Vec<Triplet>, CharError> {
    let f = CompiledExpr::new(&sc.f, &F_VARS)?;
    let path = u.path();
    let rho_steps = (cfg.rho / path.dt()).round() as usize;
    if rho_steps == 0 || rho_steps > path.steps() {
        return Err(CharError::Config(format!("rho = {} does not fit the path", cfg.rho)));
    }
    let mut rng = StreamRng::new(derive_seed(cfg.seed, 0x7195), path_idx as u64);
    (0..cfg.triplets)
        .map(|i| {
            let tau_idx = rho_steps + (rng.uniform() * (path.steps() - rho_steps + 1) as f64) as usize;
            let tau_idx = tau_idx.min(path.steps());
            let xi = ((-1.0 + 2.0 * rng.uniform()) / cfg.dx).round() * cfg.dx;
            let side = if i % 2 == 0 { Side::Sub } else { Side::Super };
            let sign = if side == Side::Sub { 1.0 } else { -1.0 };
            let v = u.value(tau_idx, xi)?;
            let p = u.derivative(1, tau_idx, xi)?;
            let a2 = u.derivative(2, tau_idx, xi)?;
            let a = a2 + sign * (cfg.a_bias + rng.uniform() * cfg.a_spread);
            let beta = f.eval(&[xi, v, p, a2])? + (2.0 * rng.uniform() - 1.0) * cfg.beta_spread;
            Ok(Triplet { tau_idx, xi, beta, p, a, side })
        })
        .collect()
}

/// Scan the left neighbourhood of `(τ, ξ)` for the triplet's extremum
/// event; returns the event if it holds.
pub fn check_triplet<U: SolutionField + ?Sized>(
    sc: &SpdeScenario,
    u: &U,
    tr: &Triplet,
    cfg: &ViscosityConfig,
    path_idx: usize,
) -> Result<Option<ViscosityEvent>, CharError> {
    let gf = GForms::new(&sc.g)?;
    let f = CompiledExpr::new(&sc.f, &F_VARS)?;
    let path = u.path();
    let rho_steps = (cfg.rho / path.dt()).round() as usize;
    let first = (tr.tau_idx + 1).checked_sub(rho_steps).ok_or(CharError::Neighbourhood(tr.tau_idx))?;
    let reach = (cfg.rho / cfg.dx + 1e-9).floor() as i64;
    let u_tau = u.value(tr.tau_idx, tr.xi)?;
    let base = ExpansionBase { xi: tr.xi, value: u_tau, theta: tr.beta, p: tr.p, a: tr.a };
    let (t0, b0) = (path.time(tr.tau_idx), path.values[tr.tau_idx]);
    for n in first..=tr.tau_idx {
        let (dt, db) = (path.time(n) - t0, path.values[n] - b0);
        for j in -reach..=reach {
            let x = tr.xi + j as f64 * cfg.dx;
            let diff = u.value(n, x)? - expansion_value(&gf, &base, dt, db, x)?;
            let broken = match tr.side {
                Side::Sub => diff > cfg.tie_tol,
                Side::Super => diff < -cfg.tie_tol,
            };
            if broken {
                return Ok(None);
            }
        }
    }
    let margin = tr.beta - f.eval(&[tr.xi, u_tau, tr.p, tr.a])?;
    let tol = cfg.tolerance();
    let passed = match tr.side {
        Side::Sub => margin <= tol,
        Side::Super => margin >= -tol,
    };
    Ok(Some(ViscosityEvent { path: path_idx, tau: t0, xi: tr.xi, rho: cfg.rho, triplet: *tr, margin, passed }))
}

/// Sample paths `sample_path(seed, i, level, horizon)`, draw triplets on
/// each and record every detected event.
pub fn viscosity_check(sc: &SpdeScenario, exact: &ExactSolution, cfg: &ViscosityConfig) -> Result<ViscosityReport, CharError> {
    let per_path: Vec<Vec<ViscosityEvent>> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(cfg.seed, i as u64, cfg.level, cfg.horizon)?;
            let u = exact.bind(&path);
            let mut out = Vec::new();
            for tr in sample_triplets(sc, &u, cfg, i)? {
                if let Some(e) = check_triplet(sc, &u, &tr, cfg, i)? {
                    out.push(e);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, CharError>>()?;
    Ok(ViscosityReport {
        events: per_path.into_iter().flatten().collect(),
        triplets: cfg.paths * cfg.triplets,
        tolerance: cfg.tolerance(),
    })
}
