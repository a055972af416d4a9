use super::{Derivative, FieldError, FieldSource, Lattice, LatticeField, Provenance, TOP_VARS};
use crate::expr::{CompiledExpr, Expr};
use crate::paths::BrownianGrid;

/// Closed forms of `ζ_1..ζ_4` as functions of `(t, y, b)` with `b = B_t`.
#[derive(Debug, Clone)]
pub struct ExactField {
    pub name: String,
    pub dims: [usize; 4],
    pub levels: Vec<Vec<Expr>>,
    /// `compiled[level][comp][order]` for `D_y^order`, order 0..=3.
    compiled: Vec<Vec<Vec<CompiledExpr>>>,
}

pub const MAX_ORDER: usize = 3;

impl ExactField {
    pub fn new(name: &str, levels: Vec<Vec<Expr>>) -> Result<Self, FieldError> {
        if levels.len() != 4 {
            return Err(FieldError::DimensionMismatch("closed form needs four levels".into()));
        }
        let dims = [levels[0].len(), levels[1].len(), levels[2].len(), levels[3].len()];
        let compiled = levels
            .iter()
            .map(|comps| {
                comps
                    .iter()
                    .map(|e| {
                        let mut d = e.clone();
                        let mut out = Vec::with_capacity(MAX_ORDER + 1);
                        for _ in 0..=MAX_ORDER {
                            out.push(CompiledExpr::new(&d, &TOP_VARS)?);
                            d = d.differentiate("y");
                        }
                        Ok(out)
                    })
                    .collect::<Result<Vec<_>, FieldError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExactField { name: name.into(), dims, levels, compiled })
    }

    /// `D_y^order ζ_level` at `(t, y)` given `b = B_t`.
    pub fn eval(&self, level: usize, order: usize, t: f64, b: f64, y: f64) -> Result<Vec<f64>, FieldError> {
        if !(1..=4).contains(&level) {
            return Err(FieldError::LevelOutOfRange(level));
        }
        if order > MAX_ORDER {
            return Err(FieldError::Order(order));
        }
        self.compiled[level - 1]
            .iter()
            .map(|c| Ok(c[order].eval(&[t, y, b])?))
            .collect()
    }

    /// All four levels at a grid time of `p`.
    pub fn evaluate(&self, p: &BrownianGrid, t: f64, y: f64) -> Result<Vec<Vec<f64>>, FieldError> {
        let b = p.at(t)?;
        (1..=4).map(|l| self.eval(l, 0, t, b, y)).collect()
    }

    pub fn bind<'a>(&'a self, path: &'a BrownianGrid) -> ExactSource<'a> {
        ExactSource { exact: self, path }
    }

    /// Sample the closed form onto a lattice.
    pub fn materialize(&self, path: &BrownianGrid, lattice: Lattice, record_every: usize) -> Result<LatticeField, FieldError> {
        let mut out = LatticeField::empty(path, lattice, record_every, self.dims, Provenance::Exact);
        for r in 0..out.records() {
            let n = r * record_every;
            let (t, b) = (path.time(n), path.values[n]);
            for k in 0..lattice.nodes {
                let y = lattice.node(k);
                for l in 0..4 {
                    for (c, comp) in self.compiled[l].iter().enumerate() {
                        out.values[l][c][r * lattice.nodes + k] = comp[0].eval(&[t, y, b])?;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// A closed form paired with one realized path.
#[derive(Debug, Clone, Copy)]
pub struct ExactSource<'a> {
    pub exact: &'a ExactField,
    pub path: &'a BrownianGrid,
}

impl FieldSource for ExactSource<'_> {
    fn path(&self) -> &BrownianGrid {
        self.path
    }

    fn dims(&self) -> [usize; 4] {
        self.exact.dims
    }

    fn zeta(&self, level: usize, t_idx: usize, y: f64) -> Result<Vec<f64>, FieldError> {
        self.exact.eval(level, 0, self.path.time(t_idx), self.path.values[t_idx], y)
    }

    fn dzeta(&self, level: usize, order: usize, t_idx: usize, y: f64) -> Result<Derivative, FieldError> {
        if order == 0 {
            return Err(FieldError::Order(0));
        }
        let values = self.exact.eval(level, order, self.path.time(t_idx), self.path.values[t_idx], y)?;
        Ok(Derivative { values, symbolic: true })
    }
}
