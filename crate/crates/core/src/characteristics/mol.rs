use std::f64::consts::TAU;

use crate::expr::CompiledExpr;
use crate::fields::stencil;
use crate::paths::BrownianGrid;

use super::{CharError, SolutionField, SpdeScenario, F_VARS, G_VARS};

/// Method-of-lines solution on the periodic grid `x_k = 2π k / nodes`,
/// stepped by Heun in time (Stratonovich sense).
#[derive(Debug, Clone)]
pub struct MolSolution {
    pub path: BrownianGrid,
    pub nodes: usize,
    pub record_every: usize,
    /// Row-major over (record, node).
    pub values: Vec<f64>,
}

impl MolSolution {
    pub fn dx(&self) -> f64 {
        TAU / self.nodes as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dx()
    }

    fn index_of(&self, x: f64) -> Result<usize, CharError> {
        let r = x.rem_euclid(TAU) / self.dx();
        let k = r.round();
        if (r - k).abs() > 1e-6 {
            return Err(CharError::NotOnLattice(x));
        }
        Ok(k as usize % self.nodes)
    }

    fn record(&self, t_idx: usize) -> Result<&[f64], CharError> {
        if t_idx % self.record_every != 0 || t_idx > self.path.steps() {
            return Err(CharError::OffGrid(t_idx));
        }
        let r = t_idx / self.record_every;
        Ok(&self.values[r * self.nodes..(r + 1) * self.nodes])
    }
}

fn periodic(v: &[f64], k: usize, dx: f64, order: usize) -> f64 {
    let n = v.len();
    let f = [n - 2, n - 1, 0, 1, 2].map(|o| v[(k + o) % n]);
    stencil(f, dx, order).expect("orders 1 and 2")
}

pub fn solve_mol(sc: &SpdeScenario, path: &BrownianGrid, nodes: usize, record_every: usize) -> Result<MolSolution, CharError> {
    if nodes < 8 || record_every == 0 || path.steps() % record_every != 0 {
        return Err(CharError::Config("need >= 8 nodes and record_every dividing the step count".into()));
    }
    let f = CompiledExpr::new(&sc.f, &F_VARS)?;
    let g = CompiledExpr::new(&sc.g, &G_VARS)?;
    let u0 = CompiledExpr::new(&sc.u0, &["x"])?;
    let dx = TAU / nodes as f64;
    let xs: Vec<f64> = (0..nodes).map(|k| k as f64 * dx).collect();
    let rhs = |u: &[f64], drift: &mut [f64], noise: &mut [f64]| -> Result<(), CharError> {
        for k in 0..nodes {
            let p = periodic(u, k, dx, 1);
            let a = periodic(u, k, dx, 2);
            drift[k] = f.eval(&[xs[k], u[k], p, a])?;
            noise[k] = g.eval(&[xs[k], p])?;
        }
        Ok(())
    };
    let mut u: Vec<f64> = xs.iter().map(|&x| u0.eval(&[x])).collect::<Result<_, _>>()?;
    let mut values = Vec::with_capacity((path.steps() / record_every + 1) * nodes);
    values.extend_from_slice(&u);
    let (mut d0, mut n0, mut d1, mut n1) = (vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]);
    let mut pred = vec![0.0; nodes];
    let dt = path.dt();
    for i in 0..path.steps() {
        let db = path.values[i + 1] - path.values[i];
        rhs(&u, &mut d0, &mut n0)?;
        for k in 0..nodes {
            pred[k] = u[k] + d0[k] * dt + n0[k] * db;
        }
        rhs(&pred, &mut d1, &mut n1)?;
        for k in 0..nodes {
            u[k] += 0.5 * (d0[k] + d1[k]) * dt + 0.5 * (n0[k] + n1[k]) * db;
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(CharError::NonFinite { step: i + 1 });
        }
        if (i + 1) % record_every == 0 {
            values.extend_from_slice(&u);
        }
    }
    Ok(MolSolution { path: path.clone(), nodes, record_every, values })
}

impl SolutionField for MolSolution {
    fn path(&self) -> &BrownianGrid {
        &self.path
    }

    fn value(&self, t_idx: usize, x: f64) -> Result<f64, CharError> {
        Ok(self.record(t_idx)?[self.index_of(x)?])
    }

    fn derivative(&self, order: usize, t_idx: usize, x: f64) -> Result<f64, CharError> {
        if !(1..=2).contains(&order) {
            return Err(CharError::Field(crate::fields::FieldError::Order(order)));
        }
        Ok(periodic(self.record(t_idx)?, self.index_of(x)?, self.dx(), order))
    }
}
