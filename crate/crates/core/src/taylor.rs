//! Second-order pathwise expansions of a cascade's first level.
//!
//! Around a base point `(t, y)` the increment of `ζ = ζ_1` is predicted by
//! `a h + b ΔB + ½ c ΔB² + p k + ½ X k² + q k ΔB`, with `ΔB = B_{t+h} - B_t`
//! forward and `ΔB = B_{t-h} - B_t` backward (where `a` flips sign).

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::expr::{CompiledExpr, ExprError};
use crate::fields::{
    level_vars, CoefficientSystem, ExactField, FieldError, FieldSource, Lattice, STENCIL_MARGIN,
};
use crate::fit::{fit_loglog, FitError};
use crate::paths::{sample_path, BrownianGrid, PathError};

#[derive(Debug, thiserror::Error)]
pub enum TaylorError {
    #[error("non-finite coefficient `{what}` at t = {t}, y = {y}")]
    NonFinite { what: &'static str, t: f64, y: f64 },
    #[error("increment of {h_steps} steps from index {t_idx} leaves [0, T]")]
    OffGrid { t_idx: usize, h_steps: usize },
    #[error("h = {0} is not a positive multiple of the path step")]
    BadIncrement(f64),
    #[error("alpha = {0} outside (1/3, 1/2)")]
    AlphaOutOfRange(f64),
    #[error("scan has no base points or increments")]
    EmptyScan,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// `F_1, G_1` with the derivatives of `G_1`, and `G_2`, compiled once.
#[derive(Debug, Clone)]
pub struct CoefficientForms {
    drift: CompiledExpr,
    diffusion: CompiledExpr,
    dg_dy: CompiledExpr,
    dg_dz: Vec<CompiledExpr>,
    next_diffusion: Vec<CompiledExpr>,
    d2: usize,
}

impl CoefficientForms {
    pub fn new(cs: &CoefficientSystem) -> Result<Self, TaylorError> {
        let v1 = level_vars(cs.dims[1]);
        let n1: Vec<&str> = v1.iter().map(String::as_str).collect();
        let v2 = level_vars(cs.dims[2]);
        let n2: Vec<&str> = v2.iter().map(String::as_str).collect();
        let g = &cs.levels[0].diffusion[0];
        Ok(CoefficientForms {
            drift: CompiledExpr::new(&cs.levels[0].drift[0], &n1)?,
            diffusion: CompiledExpr::new(g, &n1)?,
            dg_dy: CompiledExpr::new(&g.differentiate("y"), &n1)?,
            dg_dz: n1[1..]
                .iter()
                .map(|z| CompiledExpr::new(&g.differentiate(z), &n1))
                .collect::<Result<_, _>>()?,
            next_diffusion: cs.levels[1]
                .diffusion
                .iter()
                .map(|e| CompiledExpr::new(e, &n2))
                .collect::<Result<_, _>>()?,
            d2: cs.dims[1],
        })
    }
}

/// Coefficients of the expansion at one base point. `d = 1`, so `p`, `q`
/// and `X` are scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub q: f64,
    pub x: f64,
    /// `F_1` at the base point, kept for the Wick bookkeeping.
    pub drift: f64,
    pub t_idx: usize,
    pub t: f64,
    pub y: f64,
    pub direction: Direction,
}

fn finite(v: f64, what: &'static str, t: f64, y: f64) -> Result<f64, TaylorError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(TaylorError::NonFinite { what, t, y })
    }
}

pub fn coefficients<S: FieldSource + ?Sized>(
    forms: &CoefficientForms,
    field: &S,
    t_idx: usize,
    y: f64,
    direction: Direction,
) -> Result<TaylorCoefficients, TaylorError> {
    let t = field.path().time(t_idx);
    let mut arg1 = vec![y];
    arg1.extend(field.zeta(2, t_idx, y)?);
    let mut arg2 = vec![y];
    arg2.extend(field.zeta(3, t_idx, y)?);
    let dz2 = field.dzeta(2, 1, t_idx, y)?.values;
    let p = field.dzeta(1, 1, t_idx, y)?.values[0];
    let x = field.dzeta(1, 2, t_idx, y)?.values[0];

    let f = forms.drift.eval(&arg1)?;
    let g = forms.diffusion.eval(&arg1)?;
    let (mut c, mut q) = (0.0, forms.dg_dy.eval(&arg1)?);
    for j in 0..forms.d2 {
        let gz = forms.dg_dz[j].eval(&arg1)?;
        c += gz * forms.next_diffusion[j].eval(&arg2)?;
        q += gz * dz2[j];
    }
    let a = f - 0.5 * c;
    let a = match direction {
        Direction::Forward => a,
        Direction::Backward => -a,
    };
    Ok(TaylorCoefficients {
        a: finite(a, "a", t, y)?,
        b: finite(g, "b", t, y)?,
        c: finite(c, "c", t, y)?,
        p: finite(p, "p", t, y)?,
        q: finite(q, "q", t, y)?,
        x: finite(x, "X", t, y)?,
        drift: f,
        t_idx,
        t,
        y,
        direction,
    })
}

/// Brownian increment away from the base point in the coefficient direction.
pub fn brownian_increment(tc: &TaylorCoefficients, path: &BrownianGrid, h_steps: usize) -> Result<f64, TaylorError> {
    let off = TaylorError::OffGrid { t_idx: tc.t_idx, h_steps };
    let j = match tc.direction {
        Direction::Forward => tc.t_idx.checked_add(h_steps).filter(|&j| j <= path.steps()).ok_or(off)?,
        Direction::Backward => tc.t_idx.checked_sub(h_steps).ok_or(off)?,
    };
    Ok(path.values[j] - path.values[tc.t_idx])
}

/// Predicted `ζ(t ± h, y + k) - ζ(t, y)`, with `h = h_steps · dt ≥ 0`.
pub fn expand(tc: &TaylorCoefficients, path: &BrownianGrid, h_steps: usize, k: f64) -> Result<f64, TaylorError> {
    let db = brownian_increment(tc, path, h_steps)?;
    let h = h_steps as f64 * path.dt();
    Ok(tc.a * h + tc.b * db + 0.5 * tc.c * db * db + tc.p * k + 0.5 * tc.x * k * k + tc.q * k * db)
}

/// `a h + ½ c ΔB² - [F h + ½ c (ΔB² - h)]`, which vanishes identically.
pub fn wick_form_check(tc: &TaylorCoefficients, path: &BrownianGrid, h_steps: usize) -> Result<f64, TaylorError> {
    let db = brownian_increment(tc, path, h_steps)?;
    let h = h_steps as f64 * path.dt();
    let wick = db * db - h;
    Ok((tc.a * h + 0.5 * tc.c * db * db) - (tc.drift * h + 0.5 * tc.c * wick))
}

/// Difference between the three Hessian terms `½ A g_z² ΔB² + A g_z k ΔB +
/// ½ A k²` and the collected form `½ A (g_z ΔB + k)²`.
pub fn x_collection_residual(hessian: f64, gz: f64, db: f64, k: f64) -> f64 {
    let spread = 0.5 * hessian * gz * gz * db * db + hessian * gz * k * db + 0.5 * hessian * k * k;
    let w = gz * db + k;
    spread - 0.5 * hessian * w * w
}

/// Sum of the forward prediction from `t - h` to `t` and the backward
/// prediction from `t` back to `t - h`; both at spatial point `y`, `k = 0`.
pub fn forward_backward_gap<S: FieldSource + ?Sized>(
    forms: &CoefficientForms,
    field: &S,
    t_idx: usize,
    h_steps: usize,
    y: f64,
) -> Result<f64, TaylorError> {
    let start = t_idx.checked_sub(h_steps).ok_or(TaylorError::OffGrid { t_idx, h_steps })?;
    let fwd = coefficients(forms, field, start, y, Direction::Forward)?;
    let bwd = coefficients(forms, field, t_idx, y, Direction::Backward)?;
    Ok(expand(&fwd, field.path(), h_steps, 0.0)? + expand(&bwd, field.path(), h_steps, 0.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalizer {
    /// `h^{1+α}`.
    Temporal,
    /// `(h + k²)^{3α}`.
    Mixed,
}

impl Normalizer {
    pub fn eval(self, alpha: f64, h: f64, k: f64) -> f64 {
        match self {
            Normalizer::Temporal => h.powf(1.0 + alpha),
            Normalizer::Mixed => (h.abs() + k * k).powf(3.0 * alpha),
        }
    }
}

impl fmt::Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalizer::Temporal => "h^(1+alpha)",
            Normalizer::Mixed => "(h+k^2)^(3alpha)",
        })
    }
}

/// How base points are picked on each path. Times are clipped into the
/// window where every increment stays on the grid; space points are lattice
/// nodes clipped away from the boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum BasePointRule {
    /// `count` deterministic points spread over the window and `[-1, 1]`.
    Fixed { count: usize },
    /// `τ = argmax B`, `ξ = 0`. Not a stopping time.
    ArgmaxB,
    /// `τ = argmin B`, `ξ = 0`.
    ArgminB,
    /// First grid time with `B ≥ level` (window end if none), `ξ = 0`.
    FirstCrossing { level: f64 },
    /// Fixed fraction of the window for `τ`, `ξ` nearest node to `B_τ`.
    FixedTimeBrownianSpace { frac: f64 },
}

impl BasePointRule {
    pub fn name(&self) -> String {
        match self {
            BasePointRule::Fixed { count } => format!("fixed{count}"),
            BasePointRule::ArgmaxB => "argmax_b".into(),
            BasePointRule::ArgminB => "argmin_b".into(),
            BasePointRule::FirstCrossing { level } => format!("crossing{level}"),
            BasePointRule::FixedTimeBrownianSpace { frac } => format!("time{frac}_space_b"),
        }
    }

    /// Default sampler: 8 fixed points and three path-dependent rules.
    pub fn defaults() -> Vec<BasePointRule> {
        vec![
            BasePointRule::Fixed { count: 8 },
            BasePointRule::ArgmaxB,
            BasePointRule::FirstCrossing { level: 0.5 },
            BasePointRule::FixedTimeBrownianSpace { frac: 0.5 },
        ]
    }

    /// Five rules, two of them not stopping times.
    pub fn universality() -> Vec<BasePointRule> {
        let mut v = Self::defaults();
        v.push(BasePointRule::ArgminB);
        v
    }

    /// Base points as `(t_idx, y)` with `t_idx ∈ [lo, hi]` and `|y| ≤ ymax`.
    pub fn points(&self, path: &BrownianGrid, lo: usize, hi: usize, lattice: Lattice, ymax: f64) -> Vec<(usize, f64)> {
        let snap = |y: f64| lattice.node(lattice.nearest(y.clamp(-ymax, ymax)));
        let window = &path.values[lo..=hi];
        let argext = |better: fn(f64, f64) -> bool| {
            let mut best = 0;
            for (i, &v) in window.iter().enumerate() {
                if better(v, window[best]) {
                    best = i;
                }
            }
            lo + best
        };
        match *self {
            BasePointRule::Fixed { count } => (0..count)
                .map(|i| {
                    let u = (i as f64 + 0.5) / count as f64;
                    let t = lo + ((hi - lo) as f64 * u).round() as usize;
                    // a fixed permutation so time and space are not aligned
                    let v = ((i * 5 + 3) % count) as f64 + 0.5;
                    (t, snap(-1.0 + 2.0 * v / count as f64))
                })
                .collect(),
            BasePointRule::ArgmaxB => vec![(argext(|a, b| a > b), snap(0.0))],
            BasePointRule::ArgminB => vec![(argext(|a, b| a < b), snap(0.0))],
            BasePointRule::FirstCrossing { level } => {
                let t = window.iter().position(|&v| v >= level).map_or(hi, |i| lo + i);
                vec![(t, snap(0.0))]
            }
            BasePointRule::FixedTimeBrownianSpace { frac } => {
                let t = lo + ((hi - lo) as f64 * frac.clamp(0.0, 1.0)).round() as usize;
                vec![(t, snap(path.values[t]))]
            }
        }
    }
}

/// One increment of the scan, `h ≥ 0` in time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub h: f64,
    pub k: f64,
}

impl Increment {
    /// Size used for decay fits: `h` for temporal, `|k|` for spatial,
    /// `h + k²` for mixed increments.
    pub fn scale(&self) -> f64 {
        if self.k == 0.0 {
            self.h
        } else if self.h == 0.0 {
            self.k.abs()
        } else {
            self.h + self.k * self.k
        }
    }

    /// `h ∈ {2^-hi, ..., 2^-lo}` with `k = 0`.
    pub fn temporal(lo: u32, hi: u32) -> Vec<Increment> {
        (lo..=hi).rev().map(|j| Increment { h: 2f64.powi(-(j as i32)), k: 0.0 }).collect()
    }

    /// `h = 2^-j`, `k = 2^-j/2` rounded to a multiple of `dx`.
    pub fn mixed(lo: u32, hi: u32, dx: f64) -> Vec<Increment> {
        (lo..=hi)
            .rev()
            .map(|j| {
                let h = 2f64.powi(-(j as i32));
                let k = ((h.sqrt() / dx).round().max(1.0)) * dx;
                Increment { h, k }
            })
            .collect()
    }

    /// `h = 0`, `k ∈ {2^-hi, ..., 2^-lo}`.
    pub fn spatial(lo: u32, hi: u32) -> Vec<Increment> {
        (lo..=hi).rev().map(|j| Increment { h: 0.0, k: 2f64.powi(-(j as i32)) }).collect()
    }
}

/// Where the field values come from on each sampled path.
#[derive(Debug, Clone, Copy)]
pub enum FieldProvider<'a> {
    Exact(&'a ExactField),
    /// Euler–Maruyama on the lattice, recorded at every step.
    Simulated(&'a CoefficientSystem),
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub seed: u64,
    pub paths: usize,
    pub level: u32,
    pub horizon: f64,
    pub alpha: f64,
    pub direction: Direction,
    pub normalizer: Normalizer,
    pub rules: Vec<BasePointRule>,
    pub increments: Vec<Increment>,
    pub lattice: Lattice,
}

impl ScanConfig {
    pub fn new(seed: u64, paths: usize, level: u32, increments: Vec<Increment>) -> Self {
        ScanConfig {
            seed,
            paths,
            level,
            horizon: 1.0,
            alpha: 0.45,
            direction: Direction::Forward,
            normalizer: Normalizer::Temporal,
            rules: BasePointRule::defaults(),
            increments,
            lattice: Lattice::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub path: usize,
    pub rule: usize,
    pub t: f64,
    pub y: f64,
    pub h: f64,
    pub k: f64,
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone)]
pub struct ExpansionResidualReport {
    pub direction: Direction,
    pub normalizer: Normalizer,
    pub alpha: f64,
    pub rules: Vec<String>,
    pub increments: Vec<Increment>,
    pub rows: Vec<ResidualRow>,
    /// `sup |R̂|` over everything.
    pub sup_normalized: f64,
    /// `sup |R̂|` restricted to each rule.
    pub rule_sup: Vec<f64>,
    /// Mean of `|raw|` per increment, in increment order.
    pub mean_raw: Vec<f64>,
    /// Fit of `log mean|raw|` against `log scale`; `None` if any mean is 0.
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    /// Mean and standard deviation of the per-path `sup |R̂|`.
    pub path_sup_moments: [f64; 2],
    /// Simulated field with `dt > min h / 64`.
    pub lower_confidence: bool,
}

impl ExpansionResidualReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("path,rule,t,y,h,k,raw_residual,normalized_residual\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:e},{:e}",
                r.path, self.rules[r.rule], r.t, r.y, r.h, r.k, r.raw, r.normalized
            );
        }
        s
    }

    /// Brace-delimited summary of the aggregate statistics.
    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("null".to_string(), |x| format!("{x}"));
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"direction\": \"{}\",", self.direction);
        let _ = writeln!(s, "  \"normalizer\": \"{}\",", self.normalizer);
        let _ = writeln!(s, "  \"alpha\": {},", self.alpha);
        let _ = writeln!(s, "  \"rows\": {},", self.rows.len());
        let _ = writeln!(s, "  \"sup_normalized\": {:e},", self.sup_normalized);
        let _ = writeln!(s, "  \"slope\": {},", opt(self.slope));
        let _ = writeln!(s, "  \"r2\": {},", opt(self.r2));
        let _ = writeln!(s, "  \"path_sup_mean\": {:e},", self.path_sup_moments[0]);
        let _ = writeln!(s, "  \"path_sup_std\": {:e},", self.path_sup_moments[1]);
        let rules: Vec<String> = self
            .rules
            .iter()
            .zip(&self.rule_sup)
            .map(|(n, v)| format!("\"{n}\": {v:e}"))
            .collect();
        let _ = writeln!(s, "  \"rule_sup\": {{{}}},", rules.join(", "));
        let _ = writeln!(s, "  \"lower_confidence\": {}", self.lower_confidence);
        s.push_str("}\n");
        s
    }

    /// `max / min` of the per-rule sups.
    pub fn universality_ratio(&self) -> f64 {
        let max = self.rule_sup.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.rule_sup.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }
}

fn scan_path<S: FieldSource>(
    forms: &CoefficientForms,
    field: &S,
    cfg: &ScanConfig,
    path_idx: usize,
    h_steps: &[usize],
) -> Result<Vec<ResidualRow>, TaylorError> {
    let path = field.path();
    let n = path.steps();
    let hmax = *h_steps.iter().max().unwrap_or(&0);
    let (lo, hi) = match cfg.direction {
        Direction::Forward => (0, n.checked_sub(hmax).ok_or(TaylorError::OffGrid { t_idx: 0, h_steps: hmax })?),
        Direction::Backward => (hmax.min(n), n),
    };
    let kmax = cfg.increments.iter().map(|i| i.k.abs()).fold(0.0, f64::max);
    let lat = cfg.lattice;
    let ymax = lat.m - (STENCIL_MARGIN + 1) as f64 * lat.dx() - kmax;
    let mut rows = Vec::new();
    for (ri, rule) in cfg.rules.iter().enumerate() {
        for (t_idx, y) in rule.points(path, lo, hi, lat, ymax) {
            let tc = coefficients(forms, field, t_idx, y, cfg.direction)?;
            let z = field.zeta(1, t_idx, y)?[0];
            for (inc, &hs) in cfg.increments.iter().zip(h_steps) {
                let j = match cfg.direction {
                    Direction::Forward => t_idx + hs,
                    Direction::Backward => t_idx - hs,
                };
                let actual = field.zeta(1, j, y + inc.k)?[0] - z;
                let raw = actual - expand(&tc, path, hs, inc.k)?;
                let norm = cfg.normalizer.eval(cfg.alpha, inc.h, inc.k);
                rows.push(ResidualRow {
                    path: path_idx,
                    rule: ri,
                    t: tc.t,
                    y,
                    h: inc.h,
                    k: inc.k,
                    raw,
                    normalized: if norm > 0.0 { raw / norm } else { 0.0 },
                });
            }
        }
    }
    Ok(rows)
}

/// Monte Carlo scan of expansion residuals over paths, base points and
/// increments. Paths are `sample_path(seed, i, level, horizon)`.
pub fn residual_scan(
    cs: &CoefficientSystem,
    provider: FieldProvider<'_>,
    cfg: &ScanConfig,
) -> Result<ExpansionResidualReport, TaylorError> {
    if !(cfg.alpha > 1.0 / 3.0 && cfg.alpha < 0.5) {
        return Err(TaylorError::AlphaOutOfRange(cfg.alpha));
    }
    if cfg.rules.is_empty() || cfg.increments.is_empty() || cfg.paths == 0 {
        return Err(TaylorError::EmptyScan);
    }
    let dt = cfg.horizon / (1u64 << cfg.level) as f64;
    let h_steps: Vec<usize> = cfg
        .increments
        .iter()
        .map(|inc| {
            let s = inc.h / dt;
            if inc.h < 0.0 || (s - s.round()).abs() > 1e-9 {
                Err(TaylorError::BadIncrement(inc.h))
            } else {
                Ok(s.round() as usize)
            }
        })
        .collect::<Result<_, _>>()?;
    let forms = CoefficientForms::new(cs)?;
    let per_path: Vec<Vec<ResidualRow>> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(cfg.seed, i as u64, cfg.level, cfg.horizon)?;
            match provider {
                FieldProvider::Exact(ex) => scan_path(&forms, &ex.bind(&path), cfg, i, &h_steps),
                FieldProvider::Simulated(sys) => {
                    let f = crate::fields::simulate_system(sys, &path, cfg.lattice, 1)?;
                    scan_path(&forms, &f, cfg, i, &h_steps)
                }
            }
        })
        .collect::<Result<_, _>>()?;

    let rows: Vec<ResidualRow> = per_path.iter().flatten().cloned().collect();
    let mut rule_sup = vec![0.0f64; cfg.rules.len()];
    let mut sum_raw = vec![0.0f64; cfg.increments.len()];
    let mut count = vec![0usize; cfg.increments.len()];
    for (i, r) in rows.iter().enumerate() {
        rule_sup[r.rule] = rule_sup[r.rule].max(r.normalized.abs());
        let j = i % cfg.increments.len();
        sum_raw[j] += r.raw.abs();
        count[j] += 1;
    }
    let mean_raw: Vec<f64> = sum_raw.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect();
    let pts: Vec<(f64, f64)> = cfg.increments.iter().map(Increment::scale).zip(mean_raw.iter().cloned()).collect();
    let fit = if pts.len() >= 4 && pts.iter().all(|&(x, y)| x > 0.0 && y > 0.0) {
        Some(fit_loglog(&pts)?)
    } else {
        None
    };
    let sups: Vec<f64> = per_path
        .iter()
        .map(|rs| rs.iter().fold(0.0f64, |m, r| m.max(r.normalized.abs())))
        .collect();
    let mean = sups.iter().sum::<f64>() / sups.len() as f64;
    let var = sups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (sups.len().max(2) - 1) as f64;
    let min_h = cfg.increments.iter().map(|i| i.h).filter(|&h| h > 0.0).fold(f64::MAX, f64::min);
    Ok(ExpansionResidualReport {
        direction: cfg.direction,
        normalizer: cfg.normalizer,
        alpha: cfg.alpha,
        rules: cfg.rules.iter().map(BasePointRule::name).collect(),
        increments: cfg.increments.clone(),
        sup_normalized: rule_sup.iter().cloned().fold(0.0, f64::max),
        rule_sup,
        mean_raw,
        slope: fit.as_ref().map(|f| f.slope),
        r2: fit.as_ref().map(|f| f.r2),
        path_sup_moments: [mean, var.sqrt()],
        lower_confidence: matches!(provider, FieldProvider::Simulated(_)) && dt > min_h / 64.0,
        rows,
    })
}
