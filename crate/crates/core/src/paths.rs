//! Scalar Brownian paths on dyadic grids.

use std::io::{self, Read, Write};

use crate::rng::{derive_seed, StreamRng};

pub const MAX_LEVEL: u32 = 26;
const MAGIC: &[u8; 6] = b"BPATH1";
/// Relative slack when mapping a time to a grid index.
const GRID_SLACK: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum PathError {
    #[error("level {0} exceeds the cap of {MAX_LEVEL}")]
    LevelOverflow(u32),
    #[error("refinement must increase the level (have {have}, asked {asked})")]
    NotStrictRefinement { have: u32, asked: u32 },
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("time {0} is not a grid point")]
    OffGrid(f64),
    #[error("alpha {0} outside [0, 1/2)")]
    AlphaOutOfRange(f64),
    #[error("not a path dump (bad magic)")]
    BadMagic,
    #[error("path dump length does not match its header")]
    Truncated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One realized Brownian path sampled on `{i * T * 2^-L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    pub horizon: f64,
    pub level: u32,
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

/// Draw a path with i.i.d. N(0, Δ) increments from stream `stream`.
pub fn sample_path(seed: u64, stream: u64, level: u32, horizon: f64) -> Result<BrownianGrid, PathError> {
    if level > MAX_LEVEL {
        return Err(PathError::LevelOverflow(level));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(PathError::BadHorizon(horizon));
    }
    let n = 1usize << level;
    let sd = (horizon / n as f64).sqrt();
    let mut rng = StreamRng::new(seed, stream);
    let mut values = Vec::with_capacity(n + 1);
    let mut b = 0.0;
    values.push(b);
    for _ in 0..n {
        b += sd * rng.gaussian();
        values.push(b);
    }
    Ok(BrownianGrid { horizon, level, values, seed, stream })
}

impl BrownianGrid {
    /// Wrap arbitrary values (length must be `2^level + 1`); used for
    /// synthetic paths.
    pub fn from_values(horizon: f64, values: Vec<f64>) -> Self {
        let n = values.len() - 1;
        assert!(n.is_power_of_two(), "grid length must be 2^L + 1");
        BrownianGrid {
            horizon,
            level: n.trailing_zeros(),
            values,
            seed: 0,
            stream: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// Grid index of time `t`, or an error if `t` is off the grid.
    pub fn index_of(&self, t: f64) -> Result<usize, PathError> {
        let x = t / self.dt();
        let r = x.round();
        if !(r >= 0.0 && r <= self.steps() as f64) || (x - r).abs() > GRID_SLACK * (1.0 + r) {
            return Err(PathError::OffGrid(t));
        }
        Ok(r as usize)
    }

    pub fn at(&self, t: f64) -> Result<f64, PathError> {
        Ok(self.values[self.index_of(t)?])
    }

    /// Insert Brownian-bridge midpoints until `new_level` is reached.
    ///
    /// The midpoints for each level come from a stream keyed by that level,
    /// so refining in one call or in several gives the same values.
    pub fn refine(&self, new_level: u32) -> Result<BrownianGrid, PathError> {
        if new_level <= self.level {
            return Err(PathError::NotStrictRefinement { have: self.level, asked: new_level });
        }
        if new_level > MAX_LEVEL {
            return Err(PathError::LevelOverflow(new_level));
        }
        let mut values = self.values.clone();
        for lvl in self.level + 1..=new_level {
            let coarse_dt = self.horizon / (1u64 << (lvl - 1)) as f64;
            let sd = 0.5 * coarse_dt.sqrt();
            let mut rng = StreamRng::new(derive_seed(self.seed, lvl as u64), self.stream);
            let mut next = Vec::with_capacity(2 * values.len() - 1);
            for w in values.windows(2) {
                next.push(w[0]);
                next.push(0.5 * (w[0] + w[1]) + sd * rng.gaussian());
            }
            next.push(*values.last().expect("nonempty"));
            values = next;
        }
        Ok(BrownianGrid { level: new_level, values, ..self.clone() })
    }

    /// Every second value: the same realization at level `L - 1`.
    pub fn coarsen(&self) -> BrownianGrid {
        assert!(self.level > 0, "cannot coarsen level 0");
        BrownianGrid {
            level: self.level - 1,
            values: self.values.iter().step_by(2).copied().collect(),
            ..self.clone()
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), PathError> {
        w.write_all(MAGIC)?;
        w.write_all(&self.horizon.to_le_bytes())?;
        w.write_all(&self.level.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.stream.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<BrownianGrid, PathError> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(PathError::BadMagic);
        }
        let mut b8 = [0u8; 8];
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b8)?;
        let horizon = f64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let level = u32::from_le_bytes(b4);
        if level > MAX_LEVEL {
            return Err(PathError::LevelOverflow(level));
        }
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let stream = u64::from_le_bytes(b8);
        let n = (1usize << level) + 1;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8).map_err(|_| PathError::Truncated)?;
            values.push(f64::from_le_bytes(b8));
        }
        if r.read(&mut b8)? != 0 {
            return Err(PathError::Truncated);
        }
        Ok(BrownianGrid { horizon, level, values, seed, stream })
    }
}

/// `(B_s - B_t)^2 - |s - t|`.
pub fn wick_square(p: &BrownianGrid, t: f64, s: f64) -> Result<f64, PathError> {
    let i = p.index_of(t)?;
    let j = p.index_of(s)?;
    Ok(wick_square_idx(p, i, j))
}

pub fn wick_square_idx(p: &BrownianGrid, i: usize, j: usize) -> f64 {
    let db = p.values[j] - p.values[i];
    db * db - p.dt() * i.abs_diff(j) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderSpans {
    /// Every pair of grid points.
    All,
    /// Only spans `h = 2^k Δ`.
    Dyadic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    pub alpha: f64,
    pub sup_ratio: f64,
    /// Grid times `(t, t + h)` where the sup is attained.
    pub argmax: (f64, f64),
}

/// `sup |B_{t+h} - B_t| / h^alpha` over grid pairs.
pub fn holder_sup(p: &BrownianGrid, alpha: f64, spans: HolderSpans) -> Result<HolderReport, PathError> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(PathError::AlphaOutOfRange(alpha));
    }
    let n = p.steps();
    let v = &p.values;
    let dt = p.dt();
    // h^-alpha for every span length, in units of steps
    let weight: Vec<f64> = (0..=n).map(|k| ((k as f64) * dt).powf(-alpha)).collect();
    let mut best = 0.0f64;
    let mut arg = (0usize, 1usize);
    let mut k = 1;
    while k <= n {
        for i in 0..=n - k {
            let r = (v[i + k] - v[i]).abs() * weight[k];
            if r > best {
                best = r;
                arg = (i, i + k);
            }
        }
        k *= 2;
    }
    if spans == HolderSpans::All {
        // suffix extremes bound every increment that starts at i
        let mut suf_max = v.clone();
        let mut suf_min = v.clone();
        for j in (0..n).rev() {
            suf_max[j] = suf_max[j].max(suf_max[j + 1]);
            suf_min[j] = suf_min[j].min(suf_min[j + 1]);
        }
        for i in 0..n {
            for k in 1..=n - i {
                let reach = (suf_max[i + k] - v[i]).max(v[i] - suf_min[i + k]);
                // no later span from i can beat the current best
                if reach * weight[k] <= best {
                    break;
                }
                let r = (v[i + k] - v[i]).abs() * weight[k];
                if r > best {
                    best = r;
                    arg = (i, i + k);
                }
            }
        }
    }
    Ok(HolderReport {
        alpha,
        sup_ratio: best,
        argmax: (p.time(arg.0), p.time(arg.1)),
    })
}
