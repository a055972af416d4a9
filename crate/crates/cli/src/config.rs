//! Sectioned `key = value` configuration.
//!
//! Lines are `[section]` headers, `key = value` pairs or blank; `#` starts a
//! comment. Keys before the first header belong to `[run]`. Lists are
//! comma-separated; numbers may be written as `2^-5` or `1/32`.
//!
//! | section | keys |
//! |---|---|
//! | `run` | `scenario`, `seed`, `paths`, `level`, `alpha`, `out` |
//! | `scenario` | `sigma`, `transport`, `zeta0`, `zeta20`, `zeta30`, `g3`, `u0`, `m`, `nodes`, `spde_sigma`, `spde_transport`, `velocity` |
//! | `rates` | `paths`, `level`, `h`, `orders`, `m`, `hermite_paths`, `hermite_level`, `chaining_triples`, `chaining_level` |
//! | `taylor` | `h` (default `2^-6 .. 2^-level`), `mixed_h` (default `2^-4 .. 2^-level`), `mixed_nodes`, `coefficient_points`, `s4_paths`, `s4_level` |
//! | `char` | `gap_paths`, `gap_level`, `psi_paths`, `psi_level`, `psi_nodes`, `cancellation_points` |
//! | `viscosity` | `paths`, `triplets`, `level`, `c_tol`, `rho`, `dx` |

use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use stochtaylor::characteristics::SpdeParams;
use stochtaylor::expr::parse;
use stochtaylor::fields::{Lattice, ScenarioId, ScenarioParams};
use stochtaylor::paths::MAX_LEVEL;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

impl ConfigError {
    pub fn violations(&self) -> &[String] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

const SECTIONS: [&str; 6] = ["run", "scenario", "rates", "taylor", "char", "viscosity"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub scenarios: Vec<ScenarioId>,
    pub seed: u64,
    pub paths: usize,
    pub level: u32,
    pub alpha: Vec<f64>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSection {
    pub params: ScenarioParams,
    pub spde: SpdeParams,
    /// Half-width of the spatial lattice.
    pub m: f64,
    pub nodes: usize,
}

impl ScenarioSection {
    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.m, self.nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatesSection {
    pub paths: usize,
    pub level: u32,
    /// Strictly decreasing after loading.
    pub h: Vec<f64>,
    pub orders: Vec<usize>,
    pub m: f64,
    pub hermite_paths: usize,
    pub hermite_level: u32,
    pub chaining_triples: usize,
    pub chaining_level: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSection {
    pub h: Vec<f64>,
    pub mixed_h: Vec<f64>,
    pub mixed_nodes: usize,
    pub coefficient_points: usize,
    pub s4_paths: usize,
    pub s4_level: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharSection {
    pub gap_paths: usize,
    /// Gaps are compared at this level and the next.
    pub gap_level: u32,
    pub psi_paths: usize,
    pub psi_level: u32,
    pub psi_nodes: usize,
    pub cancellation_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscositySection {
    pub paths: usize,
    pub triplets: usize,
    pub level: u32,
    pub c_tol: f64,
    pub rho: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub run: RunSection,
    pub scenario: ScenarioSection,
    pub rates: RatesSection,
    pub taylor: TaylorSection,
    pub chars: CharSection,
    pub viscosity: ViscositySection,
}

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(-e)).collect()
}

impl Default for Config {
    fn default() -> Self {
        Config {
            run: RunSection {
                scenarios: ScenarioId::ALL.to_vec(),
                seed: 0,
                paths: 100,
                level: 14,
                alpha: vec![0.45],
                out: PathBuf::from("results"),
            },
            scenario: ScenarioSection {
                params: ScenarioParams::default(),
                spde: SpdeParams::default(),
                m: 2.0,
                nodes: 129,
            },
            rates: RatesSection {
                paths: 200,
                level: 16,
                h: dyadic(5, 12),
                orders: vec![1, 2, 3],
                m: 1.0,
                hermite_paths: 50,
                hermite_level: 18,
                chaining_triples: 20,
                chaining_level: 10,
            },
            taylor: TaylorSection {
                h: dyadic(6, 14),
                mixed_h: dyadic(4, 14),
                mixed_nodes: 4097,
                coefficient_points: 100,
                s4_paths: 4,
                s4_level: 10,
            },
            chars: CharSection {
                gap_paths: 20,
                gap_level: 10,
                psi_paths: 4,
                psi_level: 14,
                psi_nodes: 65,
                cancellation_points: 1000,
            },
            viscosity: ViscositySection {
                paths: 50,
                triplets: 20,
                level: 12,
                c_tol: 10.0,
                rho: 1.0 / 32.0,
                dx: 1.0 / 512.0,
            },
        }
    }
}

/// Command-line values that replace keys of `[run]`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub level: Option<u32>,
    pub alpha: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut section = "run".to_string();
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Parse { line, msg: format!("unterminated section header `{s}`") })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::Parse { line, msg: format!("unknown section `[{name}]`") });
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line, msg: format!("expected `key = value`, found `{s}`") })?;
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::Parse { line, msg: "empty key".into() });
        }
        if let Some(prev) = out.iter().find(|e| e.section == section && e.key == key) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("duplicate key `{section}.{key}` (first set on line {})", prev.line),
            });
        }
        out.push(Entry { line, section: section.clone(), key: key.to_string(), value: v.trim().to_string() });
    }
    Ok(out)
}

/// Accepts plain decimals, `a^b` and `a/b`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    if let Some((b, e)) = s.split_once('^') {
        Ok(num(b)?.powf(num(e)?))
    } else if let Some((n, d)) = s.split_once('/') {
        Ok(num(n)? / num(d)?)
    } else {
        num(s)
    }
}

fn parse_list<T, F: Fn(&str) -> Result<T, String>>(s: &str, item: F) -> Result<Vec<T>, String> {
    let v: Vec<T> = s.split(',').map(|x| item(x.trim())).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

fn parse_int<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

pub fn parse_alpha_list(s: &str) -> Result<Vec<f64>, String> {
    parse_list(s, parse_number)
}

impl Config {
    /// Defaults, then the file (if any), then `overrides`; validated as a whole.
    pub fn load(file: Option<&Path>, overrides: &Overrides) -> Result<Config, ConfigError> {
        let text = match file {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?,
            None => String::new(),
        };
        Self::from_text(&text, overrides)
    }

    pub fn from_text(text: &str, overrides: &Overrides) -> Result<Config, ConfigError> {
        let entries = parse_entries(text)?;
        let mut cfg = Config::default();
        let mut errs = Vec::new();
        for e in &entries {
            if let Err(msg) = cfg.set(&e.section, &e.key, &e.value) {
                errs.push(format!("line {}: {}.{}: {msg}", e.line, e.section, e.key));
            }
        }
        if let Some(v) = overrides.seed {
            cfg.run.seed = v;
        }
        if let Some(v) = overrides.paths {
            cfg.run.paths = v;
        }
        if let Some(v) = overrides.level {
            cfg.run.level = v;
        }
        if let Some(a) = &overrides.alpha {
            match parse_alpha_list(a) {
                Ok(v) => cfg.run.alpha = v,
                Err(msg) => errs.push(format!("--alpha: {msg}")),
            }
        }
        if let Some(o) = &overrides.out {
            cfg.run.out = o.clone();
        }
        // unset taylor grids run down to the path step
        let finest = cfg.run.level as i32;
        if !entries.iter().any(|e| e.section == "taylor" && e.key == "h") {
            cfg.taylor.h = dyadic(6, finest);
        }
        if !entries.iter().any(|e| e.section == "taylor" && e.key == "mixed_h") {
            cfg.taylor.mixed_h = dyadic(4, finest);
        }
        for grid in [&mut cfg.rates.h, &mut cfg.taylor.h, &mut cfg.taylor.mixed_h] {
            grid.sort_by(|a, b| b.total_cmp(a));
            grid.dedup();
        }
        errs.extend(cfg.violations());
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), String> {
        let num = parse_number;
        let level = |s: &str| parse_int::<u32>(s);
        let count = |s: &str| parse_int::<usize>(s);
        match (section, key) {
            ("run", "scenario") => {
                self.run.scenarios = parse_list(v, |s| ScenarioId::from_str(s).map_err(|e| e.to_string()))?
            }
            ("run", "seed") => self.run.seed = parse_int(v)?,
            ("run", "paths") => self.run.paths = count(v)?,
            ("run", "level") => self.run.level = level(v)?,
            ("run", "alpha") => self.run.alpha = parse_alpha_list(v)?,
            ("run", "out") => self.run.out = PathBuf::from(v),
            ("scenario", "sigma") => self.scenario.params.sigma = num(v)?,
            ("scenario", "transport") => self.scenario.params.transport = num(v)?,
            ("scenario", "zeta0") => self.scenario.params.zeta0 = v.to_string(),
            ("scenario", "zeta20") => self.scenario.params.zeta20 = v.to_string(),
            ("scenario", "zeta30") => self.scenario.params.zeta30 = v.to_string(),
            ("scenario", "g3") => self.scenario.params.g3 = v.to_string(),
            ("scenario", "u0") => self.scenario.params.u0 = v.to_string(),
            ("scenario", "m") => self.scenario.m = num(v)?,
            ("scenario", "nodes") => self.scenario.nodes = count(v)?,
            ("scenario", "spde_sigma") => self.scenario.spde.sigma = num(v)?,
            ("scenario", "spde_transport") => self.scenario.spde.transport = num(v)?,
            ("scenario", "velocity") => self.scenario.spde.velocity = v.to_string(),
            ("rates", "paths") => self.rates.paths = count(v)?,
            ("rates", "level") => self.rates.level = level(v)?,
            ("rates", "h") => self.rates.h = parse_list(v, num)?,
            ("rates", "orders") => self.rates.orders = parse_list(v, count)?,
            ("rates", "m") => self.rates.m = num(v)?,
            ("rates", "hermite_paths") => self.rates.hermite_paths = count(v)?,
            ("rates", "hermite_level") => self.rates.hermite_level = level(v)?,
            ("rates", "chaining_triples") => self.rates.chaining_triples = count(v)?,
            ("rates", "chaining_level") => self.rates.chaining_level = level(v)?,
            ("taylor", "h") => self.taylor.h = parse_list(v, num)?,
            ("taylor", "mixed_h") => self.taylor.mixed_h = parse_list(v, num)?,
            ("taylor", "mixed_nodes") => self.taylor.mixed_nodes = count(v)?,
            ("taylor", "coefficient_points") => self.taylor.coefficient_points = count(v)?,
            ("taylor", "s4_paths") => self.taylor.s4_paths = count(v)?,
            ("taylor", "s4_level") => self.taylor.s4_level = level(v)?,
            ("char", "gap_paths") => self.chars.gap_paths = count(v)?,
            ("char", "gap_level") => self.chars.gap_level = level(v)?,
            ("char", "psi_paths") => self.chars.psi_paths = count(v)?,
            ("char", "psi_level") => self.chars.psi_level = level(v)?,
            ("char", "psi_nodes") => self.chars.psi_nodes = count(v)?,
            ("char", "cancellation_points") => self.chars.cancellation_points = count(v)?,
            ("viscosity", "paths") => self.viscosity.paths = count(v)?,
            ("viscosity", "triplets") => self.viscosity.triplets = count(v)?,
            ("viscosity", "level") => self.viscosity.level = level(v)?,
            ("viscosity", "c_tol") => self.viscosity.c_tol = num(v)?,
            ("viscosity", "rho") => self.viscosity.rho = num(v)?,
            ("viscosity", "dx") => self.viscosity.dx = num(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Every constraint the loaded values break.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        for &a in &self.run.alpha {
            need(a > 1.0 / 3.0 && a < 0.5, format!("alpha outside (1/3,1/2): {a}"));
        }
        let levels = [
            ("run.level", self.run.level, 4),
            ("rates.level", self.rates.level, 4),
            ("rates.hermite_level", self.rates.hermite_level, 2),
            ("rates.chaining_level", self.rates.chaining_level, 2),
            ("taylor.s4_level", self.taylor.s4_level, 4),
            ("char.gap_level", self.chars.gap_level, 9),
            ("char.psi_level", self.chars.psi_level, 11),
            ("viscosity.level", self.viscosity.level, 4),
        ];
        for (name, l, lo) in levels {
            let hi = if name == "rates.hermite_level" || name == "char.gap_level" { MAX_LEVEL - 2 } else { MAX_LEVEL };
            need((lo..=hi).contains(&l), format!("{name} = {l} outside [{lo}, {hi}]"));
        }
        let counts = [
            ("run.paths", self.run.paths),
            ("rates.paths", self.rates.paths),
            ("rates.hermite_paths", self.rates.hermite_paths),
            ("rates.chaining_triples", self.rates.chaining_triples),
            ("taylor.coefficient_points", self.taylor.coefficient_points),
            ("taylor.s4_paths", self.taylor.s4_paths),
            ("char.gap_paths", self.chars.gap_paths),
            ("char.psi_paths", self.chars.psi_paths),
            ("char.cancellation_points", self.chars.cancellation_points),
            ("viscosity.paths", self.viscosity.paths),
            ("viscosity.triplets", self.viscosity.triplets),
        ];
        for (name, c) in counts {
            need(c > 0, format!("{name} must be positive"));
        }
        need(!self.run.scenarios.is_empty(), "run.scenario must name at least one scenario".into());
        let grids = [
            ("rates.h", &self.rates.h, self.rates.level),
            ("taylor.h", &self.taylor.h, self.run.level),
            ("taylor.mixed_h", &self.taylor.mixed_h, self.run.level),
        ];
        for (name, grid, level) in grids {
            for &h in grid.iter() {
                let e = h.log2();
                need(h > 0.0 && (e - e.round()).abs() < 1e-12, format!("h grid must be dyadic: {name} contains {h}"));
            }
            need(grid.len() >= 4, format!("{name} needs at least 4 values, has {}", grid.len()));
            let (max, min) = (grid.first().copied().unwrap_or(0.0), grid.last().copied().unwrap_or(0.0));
            need(max <= 0.25, format!("{name}: largest h {max} exceeds 1/4"));
            need(min >= 2f64.powi(-(level as i32)), format!("{name}: smallest h {min} is below the path step 2^-{level}"));
        }
        for &n in &self.rates.orders {
            need((1..=4).contains(&n), format!("rates.orders: {n} outside 1..=4"));
        }
        let sp = &self.scenario.params;
        for (name, e) in [("zeta0", &sp.zeta0), ("zeta20", &sp.zeta20), ("zeta30", &sp.zeta30), ("g3", &sp.g3), ("u0", &sp.u0)] {
            if let Err(err) = parse(e, &["y"]) {
                need(false, format!("scenario.{name} does not parse: {err}"));
            }
        }
        if let Err(err) = parse(&self.scenario.spde.velocity, &["x"]) {
            need(false, format!("scenario.velocity does not parse: {err}"));
        }
        let reals = [
            ("scenario.sigma", sp.sigma),
            ("scenario.transport", sp.transport),
            ("scenario.spde_sigma", self.scenario.spde.sigma),
            ("scenario.spde_transport", self.scenario.spde.transport),
        ];
        for (name, x) in reals {
            need(x.is_finite(), format!("{name} must be finite"));
        }
        let positive = [
            ("scenario.m", self.scenario.m),
            ("rates.m", self.rates.m),
            ("viscosity.c_tol", self.viscosity.c_tol),
            ("viscosity.rho", self.viscosity.rho),
            ("viscosity.dx", self.viscosity.dx),
        ];
        for (name, x) in positive {
            need(x > 0.0 && x.is_finite(), format!("{name} must be positive"));
        }
        need(self.scenario.nodes >= 9, "scenario.nodes must be at least 9".into());
        need(self.taylor.mixed_nodes >= 9, "taylor.mixed_nodes must be at least 9".into());
        need(self.chars.psi_nodes >= 9, "char.psi_nodes must be at least 9".into());
        let vdt = 2f64.powi(-(self.viscosity.level as i32));
        need(
            self.viscosity.rho >= vdt && self.viscosity.rho <= 0.25,
            format!("viscosity.rho must lie in [2^-{}, 1/4]", self.viscosity.level),
        );
        need(self.viscosity.dx <= self.viscosity.rho, "viscosity.dx must not exceed viscosity.rho".into());
        v
    }

    /// SHA-256 over every setting except the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run.out = PathBuf::new();
        let digest = Sha256::digest(format!("{c:?}").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
