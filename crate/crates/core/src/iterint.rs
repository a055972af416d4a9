//! Discrete iterated Itô integrals on a realized path.
//!
//! `X^{k,l}_{t,s}(x)` is the left-endpoint sum over grid indices
//! `t <= u_k < ... < u_l < s` of `prod f_j(u_j, x) dA_j(u_j)`, with the empty
//! product `X^{k,k-1} = 1`. On a grid these sums satisfy Chen's relation
//! exactly, which is what [`chaining_check`] measures.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::expr::{parse, CompiledExpr, Expr, ExprError};
use crate::fit::{fit_loglog, FitError};
use crate::paths::{sample_path, BrownianGrid, PathError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Brownian,
    Lebesgue,
}

impl Integrator {
    /// Scaling exponent of one increment.
    pub fn order(self) -> f64 {
        match self {
            Integrator::Brownian => 0.5,
            Integrator::Lebesgue => 1.0,
        }
    }
}

/// Integrands `f_1..f_N` over `(t, x)` and their integrators.
#[derive(Debug, Clone)]
pub struct IntegrandSpec {
    pub name: String,
    pub entries: Vec<(Expr, Integrator)>,
}

#[derive(Debug, thiserror::Error)]
pub enum IterError {
    #[error("integrand list is empty")]
    Empty,
    #[error("indices k={k}, l={l} out of range for N={n}")]
    IndexOutOfRange { k: usize, l: usize, n: usize },
    #[error("need t <= s, got t={t}, s={s}")]
    Reversed { t: f64, s: f64 },
    #[error("h grid: {0}")]
    BadHGrid(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

pub const INTEGRAND_VARS: [&str; 2] = ["t", "x"];

impl IntegrandSpec {
    pub fn new(name: &str, entries: Vec<(Expr, Integrator)>) -> Result<Self, IterError> {
        if entries.is_empty() {
            return Err(IterError::Empty);
        }
        Ok(IntegrandSpec { name: name.into(), entries })
    }

    /// Parse `(text, kind)` pairs over the variables `t`, `x`.
    pub fn parse(name: &str, entries: &[(&str, Integrator)]) -> Result<Self, IterError> {
        let parsed = entries
            .iter()
            .map(|(s, k)| Ok((parse(s, &INTEGRAND_VARS)?, *k)))
            .collect::<Result<Vec<_>, ExprError>>()?;
        Self::new(name, parsed)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn depends_on_x(&self) -> bool {
        self.entries.iter().any(|(e, _)| e.depends_on("x"))
    }

    /// `sum_j order(A_j)`: N/2 for all-Brownian, `l1 + l2/2` when mixed.
    pub fn target_exponent(&self) -> f64 {
        self.entries.iter().map(|(_, k)| k.order()).sum()
    }

    /// The same integrands with `f_N` replaced.
    pub fn with_outer(&self, f: Expr) -> Self {
        let mut s = self.clone();
        s.entries.last_mut().expect("nonempty").0 = f;
        s
    }
}

/// `f_j ≡ 1`, all Brownian.
pub fn unit_spec(n: usize) -> IntegrandSpec {
    let e = (Expr::Const(1.0), Integrator::Brownian);
    IntegrandSpec::new(&format!("unit{n}"), vec![e; n]).expect("n >= 1")
}

/// Smooth, bounded, x-dependent Brownian integrands.
pub fn smooth_spec(n: usize) -> IntegrandSpec {
    let entries: Vec<(String, Integrator)> = (1..=n)
        .map(|j| (format!("1 + 0.5*sin({j}*x + t)"), Integrator::Brownian))
        .collect();
    let refs: Vec<(&str, Integrator)> = entries.iter().map(|(s, k)| (s.as_str(), *k)).collect();
    IntegrandSpec::parse(&format!("smooth{n}"), &refs).expect("catalog parses")
}

/// Alternating time and Brownian integrators, starting with time.
pub fn mixed_spec(n: usize) -> IntegrandSpec {
    let entries: Vec<(String, Integrator)> = (1..=n)
        .map(|j| {
            let kind = if j % 2 == 1 { Integrator::Lebesgue } else { Integrator::Brownian };
            (format!("cos(x) + 2 + t*{j}"), kind)
        })
        .collect();
    let refs: Vec<(&str, Integrator)> = entries.iter().map(|(s, k)| (s.as_str(), *k)).collect();
    IntegrandSpec::parse(&format!("mixed{n}"), &refs).expect("catalog parses")
}

/// Constant integrands: `l1` time integrals followed by `l2` Brownian ones.
pub fn unit_mixed_spec(l1: usize, l2: usize) -> IntegrandSpec {
    let mut entries = vec![(Expr::Const(1.0), Integrator::Lebesgue); l1];
    entries.extend(vec![(Expr::Const(1.0), Integrator::Brownian); l2]);
    IntegrandSpec::new(&format!("unit_mixed{l1}{l2}"), entries).expect("l1 + l2 >= 1")
}

/// Catalog entries of depth `n`, in a fixed order.
pub fn catalog(n: usize) -> Vec<IntegrandSpec> {
    vec![unit_spec(n), smooth_spec(n), mixed_spec(n)]
}

/// `f_j(t_i, x) dA_j(t_i)` for every grid step `i` and entry `j`.
struct Weights {
    w: Vec<Vec<f64>>,
}

impl Weights {
    fn new(p: &BrownianGrid, spec: &IntegrandSpec, x: f64, range: (usize, usize)) -> Result<Self, IterError> {
        let dt = p.dt();
        let mut w = Vec::with_capacity(spec.len());
        for (e, kind) in &spec.entries {
            let c = CompiledExpr::new(e, &INTEGRAND_VARS)?;
            let constant = e.as_const();
            let mut row = Vec::with_capacity(range.1 - range.0);
            for i in range.0..range.1 {
                let f = match constant {
                    Some(v) => v,
                    None => c.eval(&[p.time(i), x])?,
                };
                let da = match kind {
                    Integrator::Brownian => p.values[i + 1] - p.values[i],
                    Integrator::Lebesgue => dt,
                };
                row.push(f * da);
            }
            w.push(row);
        }
        Ok(Weights { w })
    }
}

/// One forward sweep: returns `X^{k,j}_{t,s}` for `j = k-1..=l` (1-based `k`, `l`).
fn sweep(w: &Weights, offset: usize, k: usize, l: usize, i0: usize, i1: usize) -> Vec<f64> {
    // cur[m] holds X^{k, k-1+m}
    let mut cur = vec![0.0; l - k + 2];
    cur[0] = 1.0;
    for i in i0..i1 {
        for m in (1..cur.len()).rev() {
            cur[m] += w.w[k + m - 2][i - offset] * cur[m - 1];
        }
    }
    cur
}

fn check_indices(spec: &IntegrandSpec, k: usize, l: usize) -> Result<(), IterError> {
    let n = spec.len();
    // l = k - 1 is the empty product
    if k < 1 || l + 1 < k || l > n {
        return Err(IterError::IndexOutOfRange { k, l, n });
    }
    Ok(())
}

fn check_times(p: &BrownianGrid, t: f64, s: f64) -> Result<(usize, usize), IterError> {
    let i = p.index_of(t)?;
    let j = p.index_of(s)?;
    if i > j {
        return Err(IterError::Reversed { t, s });
    }
    Ok((i, j))
}

/// `X^{k,l}_{t,s}(x)` by a direct sweep, `O(l n)`.
pub fn iterated_integral(
    p: &BrownianGrid,
    spec: &IntegrandSpec,
    k: usize,
    l: usize,
    t: f64,
    s: f64,
    x: f64,
) -> Result<f64, IterError> {
    check_indices(spec, k, l)?;
    let (i, j) = check_times(p, t, s)?;
    if l + 1 == k {
        return Ok(1.0);
    }
    let w = Weights::new(p, spec, x, (i, j))?;
    Ok(*sweep(&w, i, k, l, i, j).last().expect("nonempty"))
}

/// All `X^{k,l}_{t,s}` for `1 <= k <= l+1`, `0 <= l <= N`, as an upper
/// unitriangular matrix `m[k-1][l]`.
pub fn chen_matrix(p: &BrownianGrid, spec: &IntegrandSpec, t: f64, s: f64, x: f64) -> Result<Vec<Vec<f64>>, IterError> {
    let (i, j) = check_times(p, t, s)?;
    let n = spec.len();
    let w = Weights::new(p, spec, x, (i, j))?;
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    for k in 1..=n + 1 {
        m[k - 1][k - 1] = 1.0;
        if k <= n {
            let row = sweep(&w, i, k, n, i, j);
            for (d, v) in row.into_iter().enumerate() {
                m[k - 1][k - 1 + d] = v;
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainingResidual {
    pub residual: f64,
    /// `1 + max |term|` over the terms of the decomposition.
    pub scale: f64,
}

/// `X^{1,N}_{r1,r3} - [X^{1,N}_{r1,r2} + sum_{n0} Y^N_{n0} + X^{1,N}_{r2,r3}]`
/// with `Y^N_{n0} = X^{N-n0,N}_{r2,r3} X^{1,N-n0-1}_{r1,r2}`.
pub fn chaining_check(
    p: &BrownianGrid,
    spec: &IntegrandSpec,
    r1: f64,
    r2: f64,
    r3: f64,
    x: f64,
) -> Result<ChainingResidual, IterError> {
    let n = spec.len();
    check_times(p, r1, r2)?;
    check_times(p, r2, r3)?;
    let whole = iterated_integral(p, spec, 1, n, r1, r3, x)?;
    let left = iterated_integral(p, spec, 1, n, r1, r2, x)?;
    let right = iterated_integral(p, spec, 1, n, r2, r3, x)?;
    let mut terms = vec![whole, left, right];
    let mut sum = left + right;
    for n0 in 0..n.saturating_sub(1) {
        let y = iterated_integral(p, spec, n - n0, n, r2, r3, x)?
            * iterated_integral(p, spec, 1, n - n0 - 1, r1, r2, x)?;
        terms.push(y);
        sum += y;
    }
    let scale = 1.0 + terms.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(ChainingResidual { residual: whole - sum, scale })
}

/// Prefix data for `X^{1,N}_{t,s}` at every grid pair:
/// `X_{t,s} = sum_j inv[t][j] * col[s][j]` where `col[s][j] = X^{j+1,N}_{0,s}`
/// and `inv[t]` is the first row of the inverse of the Chen matrix on `[0,t]`.
pub struct ChenPrefix {
    n: usize,
    inv: Vec<f64>,
    col: Vec<f64>,
}

impl ChenPrefix {
    pub fn new(p: &BrownianGrid, spec: &IntegrandSpec, x: f64) -> Result<Self, IterError> {
        let n = spec.len();
        let steps = p.steps();
        let w = Weights::new(p, spec, x, (0, steps))?;
        let dim = n + 1;
        let mut m = vec![0.0; dim * dim];
        let mut minv = vec![0.0; dim * dim];
        for a in 0..dim {
            m[a * dim + a] = 1.0;
            minv[a * dim + a] = 1.0;
        }
        let mut inv = Vec::with_capacity((steps + 1) * dim);
        let mut col = Vec::with_capacity((steps + 1) * dim);
        let push = |m: &[f64], minv: &[f64], inv: &mut Vec<f64>, col: &mut Vec<f64>| {
            for j in 0..dim {
                inv.push(minv[j]);
                col.push(m[j * dim + n]);
            }
        };
        push(&m, &minv, &mut inv, &mut col);
        let mut e = vec![0.0; dim];
        for i in 0..steps {
            // E = I + sum_b e[b] E_{b-1,b}
            for b in 1..dim {
                e[b] = w.w[b - 1][i];
            }
            // M <- M E, column b picks up e[b] * column b-1 (descending b)
            for b in (1..dim).rev() {
                for a in 0..b {
                    m[a * dim + b] += e[b] * m[a * dim + b - 1];
                }
            }
            // Minv <- E^{-1} Minv by back substitution on rows
            for a in (0..dim - 1).rev() {
                for c in 0..dim {
                    minv[a * dim + c] -= e[a + 1] * minv[(a + 1) * dim + c];
                }
            }
            push(&m, &minv, &mut inv, &mut col);
        }
        Ok(ChenPrefix { n, inv, col })
    }

    /// `X^{1,N}` between grid indices `i <= j`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let dim = self.n + 1;
        let a = &self.inv[i * dim..(i + 1) * dim];
        let b = &self.col[j * dim..(j + 1) * dim];
        a.iter().zip(b).map(|(u, v)| u * v).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub spec: String,
    pub level: u32,
    pub paths: usize,
    /// Strictly decreasing.
    pub h: Vec<f64>,
    pub sup: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub target: f64,
    /// Exponent at which the normalized sup `zeta_beta` was sampled.
    pub beta: f64,
    /// First, second and fourth sample moments of `zeta_beta` across paths.
    pub zeta_moments: [f64; 3],
}

impl RateReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,sup_value,log2_h,log2_sup\n");
        for (h, v) in self.h.iter().zip(&self.sup) {
            let _ = writeln!(s, "{h:e},{v:e},{},{}", h.log2(), v.log2());
        }
        let _ = writeln!(s, "slope,{}", self.slope);
        let _ = writeln!(s, "r2,{}", self.r2);
        let _ = writeln!(s, "target,{}", self.target);
        s
    }
}

/// Dyadic `h` values `2^-hi ..= 2^-lo` (times `horizon`), decreasing.
pub fn dyadic_h_grid(horizon: f64, lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|e| horizon * 2f64.powi(-(e as i32))).collect()
}

/// Uniform lattice of `count` points on `[-m, m]`.
pub fn x_samples(m: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|i| -m + 2.0 * m * i as f64 / (count - 1) as f64)
        .collect()
}

pub const X_POINTS: usize = 33;

/// Per-path `sup_{t, x} |X^N_{t,t+h}(x)|` for each `h`.
pub fn path_sups(p: &BrownianGrid, spec: &IntegrandSpec, h_steps: &[usize], xs: &[f64]) -> Result<Vec<f64>, IterError> {
    let mut sup = vec![0.0f64; h_steps.len()];
    for &x in xs {
        let chen = ChenPrefix::new(p, spec, x)?;
        for (slot, &k) in sup.iter_mut().zip(h_steps) {
            for i in 0..=p.steps() - k {
                *slot = slot.max(chen.value(i, i + k).abs());
            }
        }
    }
    Ok(sup)
}

/// Monte Carlo sup of `|X^N_{t,t+h}(x)|` over paths `0..paths`, grid times
/// and `|x| <= m`, followed by a log-log fit against `h`.
///
/// The per-h statistic is the maximum of the per-path sups.
pub fn rate_estimate(
    seed: u64,
    paths: usize,
    spec: &IntegrandSpec,
    level: u32,
    horizon: f64,
    h_grid: &[f64],
    m: f64,
) -> Result<RateReport, IterError> {
    if h_grid.len() < 4 {
        return Err(FitError::Underdetermined(h_grid.len()).into());
    }
    if h_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(IterError::BadHGrid("h values must be strictly decreasing".into()));
    }
    if h_grid[0] > horizon / 4.0 {
        return Err(IterError::BadHGrid(format!("max h {} exceeds T/4", h_grid[0])));
    }
    let dt = horizon / (1u64 << level) as f64;
    let h_steps = h_grid
        .iter()
        .map(|&h| {
            let k = h / dt;
            let r = k.round();
            let dyadic = r >= 1.0 && (k - r).abs() < 1e-9 * r && (r as u64).is_power_of_two();
            if dyadic {
                Ok(r as usize)
            } else {
                Err(IterError::BadHGrid(format!("h = {h} is not a dyadic multiple of the step")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let xs = if spec.depends_on_x() { x_samples(m, X_POINTS) } else { vec![0.0] };
    let per_path: Vec<Vec<f64>> = (0..paths as u64)
        .into_par_iter()
        .map(|stream| {
            let p = sample_path(seed, stream, level, horizon)?;
            path_sups(&p, spec, &h_steps, &xs)
        })
        .collect::<Result<_, _>>()?;
    let sup: Vec<f64> = (0..h_grid.len())
        .map(|c| per_path.iter().fold(0.0f64, |a, r| a.max(r[c])))
        .collect();
    let points: Vec<(f64, f64)> = h_grid.iter().copied().zip(sup.iter().copied()).collect();
    let fit = fit_loglog(&points)?;
    let target = spec.target_exponent();
    let beta = (target - 0.1).max(0.05);
    let zeta: Vec<f64> = per_path
        .iter()
        .map(|r| r.iter().zip(h_grid).fold(0.0f64, |a, (v, h)| a.max(v / h.powf(beta))))
        .collect();
    let moment = |q: i32| zeta.iter().map(|z| z.powi(q)).sum::<f64>() / zeta.len().max(1) as f64;
    Ok(RateReport {
        spec: spec.name.clone(),
        level,
        paths,
        h: h_grid.to_vec(),
        sup,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        target,
        beta,
        zeta_moments: [moment(1), moment(2), moment(4)],
    })
}

/// `T^{N/2} He_N(b / sqrt T) / N!`, the closed form of `X^N_{0,T}` for unit
/// Brownian integrands.
pub fn hermite_closed_form(n: usize, b: f64, horizon: f64) -> f64 {
    let x = b / horizon.sqrt();
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    horizon.powf(n as f64 / 2.0) * cur / fact
}

/// RMS of `X^N_{0,T} - closed form` relative to the RMS of the closed form,
/// over paths `0..paths`, at `level` and at `level + 2` on the refined path.
pub fn hermite_gap(seed: u64, paths: usize, n: usize, level: u32, horizon: f64) -> Result<[f64; 2], IterError> {
    let spec = unit_spec(n);
    let rows: Vec<[f64; 3]> = (0..paths as u64)
        .into_par_iter()
        .map(|stream| {
            let p = sample_path(seed, stream, level, horizon)?;
            let fine = p.refine(level + 2)?;
            let b = p.values[p.steps()];
            let exact = hermite_closed_form(n, b, horizon);
            let coarse = iterated_integral(&p, &spec, 1, n, 0.0, horizon, 0.0)?;
            let refined = iterated_integral(&fine, &spec, 1, n, 0.0, horizon, 0.0)?;
            Ok([(coarse - exact).powi(2), (refined - exact).powi(2), exact * exact])
        })
        .collect::<Result<_, IterError>>()?;
    let sum = |c: usize| rows.iter().map(|r| r[c]).sum::<f64>();
    let norm = sum(2);
    Ok([(sum(0) / norm).sqrt(), (sum(1) / norm).sqrt()])
}
