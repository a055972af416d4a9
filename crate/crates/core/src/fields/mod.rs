//! Random-field cascades `ζ_1, ..., ζ_4` driven by one Brownian path.
//!
//! Level `i` (1..=3) evolves by
//! `dζ_i = F_i(y, ζ_{i+1}) dt + G_i(y, ζ_{i+1}) dB` from `ζ_{i,0}(y)`, and the
//! top level `ζ_4` is a closed form in `(t, y, b)` with `b = B_t`. The state
//! at level `i` has `d_i` components; `d_1 = 1` and the spatial variable `y`
//! is scalar.

mod exact;
mod lift;
mod scenarios;

use std::fmt::Write as _;

use crate::expr::{CompiledExpr, Expr, ExprError};
use crate::paths::{BrownianGrid, PathError};

pub use exact::{ExactField, ExactSource};
pub use lift::{ito_lift, ItoLift};
pub use scenarios::{Scenario, ScenarioId, ScenarioParams};

pub const LEVELS: usize = 3;
pub const TOP_VARS: [&str; 3] = ["t", "y", "b"];

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("non-finite value at level {level}, t = {t}, y = {y}")]
    NonFinite { level: usize, t: f64, y: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("y = {y} is within {margin} nodes of the lattice boundary")]
    Boundary { y: f64, margin: usize },
    #[error("y = {0} is not a lattice node")]
    NotOnLattice(f64),
    #[error("time index {0} was not recorded")]
    NotRecorded(usize),
    #[error("level {0} out of range")]
    LevelOutOfRange(usize),
    #[error("derivative order {0} not supported")]
    Order(usize),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario `{0}` has no closed form")]
    NoExactForm(String),
    #[error("path level {0} too coarse: need step <= T 2^-10")]
    TooCoarse(u32),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Argument names for a block of `d` components: `z` or `z1..zd`.
pub fn arg_names(prefix: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=d).map(|k| format!("{prefix}{k}")).collect()
    }
}

/// `["y", z...]` for a function whose argument block has `d` components.
pub fn level_vars(d: usize) -> Vec<String> {
    let mut v = vec!["y".to_string()];
    v.extend(arg_names("z", d));
    v
}

fn as_refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Drift and diffusion of one level.
#[derive(Debug, Clone)]
pub struct Level {
    pub drift: Vec<Expr>,
    pub diffusion: Vec<Expr>,
}

#[derive(Debug, Clone)]
pub struct CoefficientSystem {
    pub name: String,
    /// `d_1..d_4`.
    pub dims: [usize; 4],
    /// `F_i, G_i` for `i = 1..=3`, over `level_vars(d_{i+1})`.
    pub levels: Vec<Level>,
    /// `ζ_{i,0}` for `i = 1..=3`, over `y`.
    pub init: Vec<Vec<Expr>>,
    /// `ζ_4` over `(t, y, b)`.
    pub top: Vec<Expr>,
}

fn check_vars(e: &Expr, allowed: &[String], what: &str) -> Result<(), FieldError> {
    for v in e.variables() {
        if !allowed.contains(&v) {
            return Err(FieldError::DimensionMismatch(format!("{what} uses undeclared variable `{v}`")));
        }
    }
    Ok(())
}

impl CoefficientSystem {
    pub fn new(
        name: &str,
        dims: [usize; 4],
        levels: Vec<Level>,
        init: Vec<Vec<Expr>>,
        top: Vec<Expr>,
    ) -> Result<Self, FieldError> {
        if dims[0] != 1 {
            return Err(FieldError::DimensionMismatch("d_1 must be 1".into()));
        }
        if dims.contains(&0) {
            return Err(FieldError::DimensionMismatch("zero dimension in chain".into()));
        }
        if levels.len() != LEVELS || init.len() != LEVELS {
            return Err(FieldError::DimensionMismatch("need exactly three levels".into()));
        }
        for (i, lv) in levels.iter().enumerate() {
            let vars = level_vars(dims[i + 1]);
            if lv.drift.len() != dims[i] || lv.diffusion.len() != dims[i] {
                return Err(FieldError::DimensionMismatch(format!(
                    "F_{0}/G_{0} must have {1} components",
                    i + 1,
                    dims[i]
                )));
            }
            for e in lv.drift.iter().chain(&lv.diffusion) {
                check_vars(e, &vars, &format!("level {}", i + 1))?;
            }
            if init[i].len() != dims[i] {
                return Err(FieldError::DimensionMismatch(format!("ζ_{},0 has wrong length", i + 1)));
            }
            for e in &init[i] {
                check_vars(e, &["y".to_string()], "initial field")?;
            }
        }
        if top.len() != dims[3] {
            return Err(FieldError::DimensionMismatch("ζ_4 has wrong length".into()));
        }
        let tv: Vec<String> = TOP_VARS.iter().map(|s| s.to_string()).collect();
        for e in &top {
            check_vars(e, &tv, "top field")?;
        }
        Ok(CoefficientSystem { name: name.into(), dims, levels, init, top })
    }

    /// Variables of `F_i`, `G_i` (1-based `i`).
    pub fn vars(&self, i: usize) -> Vec<String> {
        level_vars(self.dims[i])
    }
}

/// Uniform spatial lattice on `[-m, m]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub m: f64,
    pub nodes: usize,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice { m: 2.0, nodes: 129 }
    }
}

impl Lattice {
    pub fn new(m: f64, nodes: usize) -> Self {
        assert!(m > 0.0 && nodes >= 5, "lattice needs m > 0 and at least 5 nodes");
        Lattice { m, nodes }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.m / (self.nodes - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.m + k as f64 * self.dx()
    }

    pub fn index_of(&self, y: f64) -> Result<usize, FieldError> {
        let x = (y + self.m) / self.dx();
        let r = x.round();
        if r < 0.0 || r > (self.nodes - 1) as f64 || (x - r).abs() > 1e-9 * (1.0 + r) {
            return Err(FieldError::NotOnLattice(y));
        }
        Ok(r as usize)
    }

    pub fn nearest(&self, y: f64) -> usize {
        (((y + self.m) / self.dx()).round().max(0.0) as usize).min(self.nodes - 1)
    }

    /// Node index of `y`, refusing nodes within `margin` of either end.
    pub fn interior_index(&self, y: f64, margin: usize) -> Result<usize, FieldError> {
        let k = self.index_of(y)?;
        if k < margin || k + margin >= self.nodes {
            return Err(FieldError::Boundary { y, margin });
        }
        Ok(k)
    }
}

pub const STENCIL_MARGIN: usize = 2;

/// Central differences on five equally spaced samples `f[-2..=2]`:
/// fourth order for the first two derivatives, second order for the third.
pub fn stencil(f: [f64; 5], dx: f64, order: usize) -> Result<f64, FieldError> {
    let [m2, m1, c, p1, p2] = f;
    Ok(match order {
        0 => c,
        1 => (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * dx),
        2 => (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * dx * dx),
        3 => (-m2 + 2.0 * m1 - 2.0 * p1 + p2) / (2.0 * dx * dx * dx),
        o => return Err(FieldError::Order(o)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Simulated,
    Exact,
}

/// Spatial derivative together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub values: Vec<f64>,
    pub symbolic: bool,
}

/// Read access to a realized cascade at grid times of its path.
pub trait FieldSource: Sync {
    fn path(&self) -> &BrownianGrid;
    fn dims(&self) -> [usize; 4];
    /// Components of `ζ_level` (1-based) at path index `t_idx`.
    fn zeta(&self, level: usize, t_idx: usize, y: f64) -> Result<Vec<f64>, FieldError>;
    /// `D_y^order ζ_level` for `order` in 1..=3.
    fn dzeta(&self, level: usize, order: usize, t_idx: usize, y: f64) -> Result<Derivative, FieldError>;
}

/// `ζ_1..ζ_4` on a lattice at the recorded times `t_idx = r * record_every`.
#[derive(Debug, Clone)]
pub struct LatticeField {
    pub path: BrownianGrid,
    pub lattice: Lattice,
    pub record_every: usize,
    pub dims: [usize; 4],
    pub provenance: Provenance,
    /// `values[level - 1][comp]` is row-major over (record, node).
    pub values: Vec<Vec<Vec<f64>>>,
}

impl LatticeField {
    fn empty(path: &BrownianGrid, lattice: Lattice, record_every: usize, dims: [usize; 4], provenance: Provenance) -> Self {
        assert!(record_every >= 1 && path.steps() % record_every == 0);
        let records = path.steps() / record_every + 1;
        let values = dims
            .iter()
            .map(|&d| vec![vec![0.0; records * lattice.nodes]; d])
            .collect();
        LatticeField { path: path.clone(), lattice, record_every, dims, provenance, values }
    }

    pub fn records(&self) -> usize {
        self.path.steps() / self.record_every + 1
    }

    pub fn record_of(&self, t_idx: usize) -> Result<usize, FieldError> {
        if t_idx % self.record_every != 0 || t_idx > self.path.steps() {
            return Err(FieldError::NotRecorded(t_idx));
        }
        Ok(t_idx / self.record_every)
    }

    pub fn get(&self, level: usize, comp: usize, rec: usize, node: usize) -> f64 {
        self.values[level - 1][comp][rec * self.lattice.nodes + node]
    }

    fn level_ok(&self, level: usize) -> Result<(), FieldError> {
        if (1..=4).contains(&level) {
            Ok(())
        } else {
            Err(FieldError::LevelOutOfRange(level))
        }
    }

    /// Lattice stencil derivative of every component of `ζ_level`.
    pub fn spatial_derivative(&self, level: usize, order: usize, t_idx: usize, y: f64) -> Result<Vec<f64>, FieldError> {
        self.level_ok(level)?;
        if !(1..=3).contains(&order) {
            return Err(FieldError::Order(order));
        }
        let rec = self.record_of(t_idx)?;
        let k = self.lattice.interior_index(y, STENCIL_MARGIN)?;
        let dx = self.lattice.dx();
        (0..self.dims[level - 1])
            .map(|c| {
                let f = [0, 1, 2, 3, 4].map(|o| self.get(level, c, rec, k + o - 2));
                stencil(f, dx, order)
            })
            .collect()
    }

    /// CSV with columns `t, y, zeta1, zeta2_1, ...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,y");
        for (l, &d) in self.dims.iter().enumerate() {
            for c in 0..d {
                if d == 1 {
                    let _ = write!(s, ",zeta{}", l + 1);
                } else {
                    let _ = write!(s, ",zeta{}_{}", l + 1, c + 1);
                }
            }
        }
        s.push('\n');
        for r in 0..self.records() {
            let t = self.path.time(r * self.record_every);
            for k in 0..self.lattice.nodes {
                let _ = write!(s, "{t:e},{:e}", self.lattice.node(k));
                for (l, &d) in self.dims.iter().enumerate() {
                    for c in 0..d {
                        let _ = write!(s, ",{:e}", self.get(l + 1, c, r, k));
                    }
                }
                s.push('\n');
            }
        }
        s
    }
}

impl FieldSource for LatticeField {
    fn path(&self) -> &BrownianGrid {
        &self.path
    }

    fn dims(&self) -> [usize; 4] {
        self.dims
    }

    fn zeta(&self, level: usize, t_idx: usize, y: f64) -> Result<Vec<f64>, FieldError> {
        self.level_ok(level)?;
        let rec = self.record_of(t_idx)?;
        let k = self.lattice.index_of(y)?;
        Ok((0..self.dims[level - 1]).map(|c| self.get(level, c, rec, k)).collect())
    }

    fn dzeta(&self, level: usize, order: usize, t_idx: usize, y: f64) -> Result<Derivative, FieldError> {
        Ok(Derivative { values: self.spatial_derivative(level, order, t_idx, y)?, symbolic: false })
    }
}

struct CompiledLevel {
    drift: Vec<CompiledExpr>,
    diffusion: Vec<CompiledExpr>,
}

/// Euler–Maruyama in time, independently at every lattice node.
///
/// The path must resolve at least `T 2^-10`; values are kept every
/// `record_every` steps.
pub fn simulate_system(
    cs: &CoefficientSystem,
    path: &BrownianGrid,
    lattice: Lattice,
    record_every: usize,
) -> Result<LatticeField, FieldError> {
    if path.level < 10 {
        return Err(FieldError::TooCoarse(path.level));
    }
    let compiled: Vec<CompiledLevel> = cs
        .levels
        .iter()
        .enumerate()
        .map(|(i, lv)| {
            let vars = cs.vars(i + 1);
            let names = as_refs(&vars);
            let c = |es: &[Expr]| es.iter().map(|e| CompiledExpr::new(e, &names)).collect::<Result<Vec<_>, _>>();
            Ok(CompiledLevel { drift: c(&lv.drift)?, diffusion: c(&lv.diffusion)? })
        })
        .collect::<Result<_, ExprError>>()?;
    let init: Vec<Vec<CompiledExpr>> = cs
        .init
        .iter()
        .map(|es| es.iter().map(|e| CompiledExpr::new(e, &["y"])).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let top: Vec<CompiledExpr> = cs
        .top
        .iter()
        .map(|e| CompiledExpr::new(e, &TOP_VARS))
        .collect::<Result<_, _>>()?;

    let mut out = LatticeField::empty(path, lattice, record_every, cs.dims, Provenance::Simulated);
    let dt = path.dt();
    let nodes = lattice.nodes;
    for k in 0..nodes {
        let y = lattice.node(k);
        // state[l] = ζ_{l+1}, l = 0..3 (the last one from the closed form)
        let mut state: Vec<Vec<f64>> = init
            .iter()
            .map(|cs| cs.iter().map(|c| c.eval(&[y])).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        state.push(vec![0.0; cs.dims[3]]);
        let mut args = Vec::with_capacity(8);
        let mut next: Vec<Vec<f64>> = state.clone();
        for n in 0..=path.steps() {
            let t = path.time(n);
            for (c, e) in top.iter().enumerate() {
                state[3][c] = e.eval(&[t, y, path.values[n]])?;
            }
            if n % record_every == 0 {
                let rec = n / record_every;
                for (l, comps) in state.iter().enumerate() {
                    for (c, v) in comps.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(FieldError::NonFinite { level: l + 1, t, y });
                        }
                        out.values[l][c][rec * nodes + k] = *v;
                    }
                }
            }
            if n == path.steps() {
                break;
            }
            let db = path.values[n + 1] - path.values[n];
            for l in 0..LEVELS {
                args.clear();
                args.push(y);
                args.extend_from_slice(&state[l + 1]);
                for c in 0..cs.dims[l] {
                    let f = compiled[l].drift[c].eval(&args)?;
                    let g = compiled[l].diffusion[c].eval(&args)?;
                    next[l][c] = state[l][c] + f * dt + g * db;
                }
            }
            for l in 0..LEVELS {
                state[l].copy_from_slice(&next[l]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_path;

    #[test]
    fn stencils_are_exact_on_low_degree() {
        let dx = 0.1;
        let y0 = 0.3;
        let f = |p: fn(f64) -> f64| [-2.0, -1.0, 0.0, 1.0, 2.0].map(|o| p(y0 + o * dx));
        assert!((stencil(f(|_| 5.0), dx, 1).unwrap()).abs() < 1e-12);
        assert!((stencil(f(|y| y * y), dx, 2).unwrap() - 2.0).abs() < 1e-10);
        assert!((stencil(f(|y| y.powi(4)), dx, 1).unwrap() - 4.0 * y0.powi(3)).abs() < 1e-10);
        assert!((stencil(f(|y| y.powi(3)), dx, 3).unwrap() - 6.0).abs() < 1e-8);
        assert!(stencil(f(|y| y), dx, 4).is_err());
    }

    #[test]
    fn lattice_indexing() {
        let l = Lattice::default();
        assert_eq!(l.nodes, 129);
        assert_eq!(l.index_of(-2.0).unwrap(), 0);
        assert_eq!(l.index_of(0.0).unwrap(), 64);
        assert!(l.index_of(0.01).is_err());
        assert!(matches!(l.interior_index(l.node(1), 2), Err(FieldError::Boundary { .. })));
        assert!(l.interior_index(l.node(2), 2).is_ok());
    }

    #[test]
    fn zero_system_stays_zero() {
        let zero = || Level { drift: vec![Expr::Const(0.0)], diffusion: vec![Expr::Const(0.0)] };
        let cs = CoefficientSystem::new(
            "zero",
            [1, 1, 1, 1],
            vec![zero(), zero(), zero()],
            vec![vec![Expr::Const(0.0)]; 3],
            vec![Expr::Const(0.0)],
        )
        .unwrap();
        let p = sample_path(1, 0, 10, 1.0).unwrap();
        let f = simulate_system(&cs, &p, Lattice::new(1.0, 9), 64).unwrap();
        assert!(f.values.iter().flatten().flatten().all(|v| *v == 0.0));
        let coarse = sample_path(1, 0, 9, 1.0).unwrap();
        assert!(matches!(simulate_system(&cs, &coarse, Lattice::default(), 1), Err(FieldError::TooCoarse(9))));
    }

    #[test]
    fn rejects_bad_chains() {
        let lv = || Level { drift: vec![Expr::var("z")], diffusion: vec![Expr::var("w")] };
        let r = CoefficientSystem::new(
            "bad",
            [1, 1, 1, 1],
            vec![lv(), lv(), lv()],
            vec![vec![Expr::Const(0.0)]; 3],
            vec![Expr::Const(0.0)],
        );
        assert!(matches!(r, Err(FieldError::DimensionMismatch(_))));
    }
}
