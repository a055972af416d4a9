use std::fmt;
use std::str::FromStr;

use super::{arg_names, CoefficientSystem, ExactField, FieldError, Level};
use crate::expr::{parse, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    /// `ζ = ζ_0(y) + σ B_t`.
    S1Additive,
    /// `G_i(y, z) = z`, `F_i = 0`, top field `g_3(y)`: Hermite polynomials in `B_t`.
    S2Hermite,
    /// `u_0(y + H B_t)` written as a cascade of its y-derivatives.
    S3Transport,
    /// `G_1(y, z) = sin z` over the S2 cascade; no closed form.
    S4Sine,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [
        ScenarioId::S1Additive,
        ScenarioId::S2Hermite,
        ScenarioId::S3Transport,
        ScenarioId::S4Sine,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ScenarioId::S1Additive => "S1",
            ScenarioId::S2Hermite => "S2",
            ScenarioId::S3Transport => "S3",
            ScenarioId::S4Sine => "S4",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ScenarioId {
    type Err = FieldError;
    fn from_str(s: &str) -> Result<Self, FieldError> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "s1" | "additive" => ScenarioId::S1Additive,
            "s2" | "hermite" => ScenarioId::S2Hermite,
            "s3" | "transport" => ScenarioId::S3Transport,
            "s4" | "sine" | "nonlinear" => ScenarioId::S4Sine,
            _ => return Err(FieldError::UnknownScenario(s.to_string())),
        })
    }
}

/// Constants of the catalog. Expressions are over `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub sigma: f64,
    pub transport: f64,
    pub zeta0: String,
    pub zeta20: String,
    pub zeta30: String,
    pub g3: String,
    pub u0: String,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            sigma: 0.7,
            transport: 0.8,
            zeta0: "sin(y)".into(),
            zeta20: "cos(y)".into(),
            zeta30: "0.5 + 0.25*sin(y)".into(),
            g3: "1 + 0.5*cos(y)".into(),
            u0: "sin(y)".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: ScenarioId,
    pub params: ScenarioParams,
    pub system: CoefficientSystem,
    pub exact: Option<ExactField>,
}

fn py(s: &str) -> Result<Expr, FieldError> {
    Ok(parse(s, &["y"])?)
}

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn zero_level() -> Level {
    Level { drift: vec![c(0.0)], diffusion: vec![c(0.0)] }
}

fn identity_level() -> Level {
    Level { drift: vec![c(0.0)], diffusion: vec![Expr::var("z")] }
}

impl Scenario {
    pub fn build(id: ScenarioId, params: &ScenarioParams) -> Result<Self, FieldError> {
        let b = Expr::var("b");
        let t = Expr::var("t");
        let (system, exact) = match id {
            ScenarioId::S1Additive => {
                let z0 = py(&params.zeta0)?;
                let sys = CoefficientSystem::new(
                    "S1",
                    [1, 1, 1, 1],
                    vec![
                        Level { drift: vec![c(0.0)], diffusion: vec![c(params.sigma)] },
                        zero_level(),
                        zero_level(),
                    ],
                    vec![vec![z0.clone()], vec![c(0.0)], vec![c(0.0)]],
                    vec![c(0.0)],
                )?;
                let ex = ExactField::new(
                    "S1",
                    vec![vec![z0 + c(params.sigma) * b], vec![c(0.0)], vec![c(0.0)], vec![c(0.0)]],
                )?;
                (sys, Some(ex))
            }
            ScenarioId::S2Hermite | ScenarioId::S4Sine => {
                let (z0, z20, z30, g3) = (py(&params.zeta0)?, py(&params.zeta20)?, py(&params.zeta30)?, py(&params.g3)?);
                let first = if id == ScenarioId::S2Hermite {
                    identity_level()
                } else {
                    Level { drift: vec![c(0.0)], diffusion: vec![parse("sin(z)", &["z"])?] }
                };
                let sys = CoefficientSystem::new(
                    id.code(),
                    [1, 1, 1, 1],
                    vec![first, identity_level(), identity_level()],
                    vec![vec![z0.clone()], vec![z20.clone()], vec![z30.clone()]],
                    vec![g3.clone()],
                )?;
                let ex = if id == ScenarioId::S2Hermite {
                    let b2 = b.clone() * b.clone();
                    let h2 = c(0.5) * (b2.clone() - t.clone());
                    let h3 = b2 * b.clone() / c(6.0) - c(0.5) * t.clone() * b.clone();
                    let zeta3 = z30.clone() + g3.clone() * b.clone();
                    let zeta2 = z20.clone() + z30.clone() * b.clone() + g3.clone() * h2.clone();
                    let zeta1 = z0 + z20 * b + z30 * h2 + g3.clone() * h3;
                    Some(ExactField::new("S2", vec![vec![zeta1], vec![zeta2], vec![zeta3], vec![g3]])?)
                } else {
                    None
                };
                (sys, ex)
            }
            ScenarioId::S3Transport => {
                let hh = params.transport;
                let u0 = py(&params.u0)?;
                let mut derivs = vec![u0];
                for k in 1..=6 {
                    let next = derivs[k - 1].differentiate("y");
                    derivs.push(next);
                }
                let shift = Expr::var("y") + c(hh) * b;
                let at = |k: usize| derivs[k].substitute("y", &shift);
                // level i carries u^(i-1)..u^(2i-2); ζ_4 carries u'''..u^(6)
                let block = |d: usize| -> Level {
                    let z = arg_names("z", d + 1);
                    Level {
                        drift: (0..d).map(|j| c(0.5 * hh * hh) * Expr::var(&z[j + 1])).collect(),
                        diffusion: (0..d).map(|j| c(hh) * Expr::var(&z[j])).collect(),
                    }
                };
                let init = |from: usize, d: usize| -> Vec<Expr> { (from..from + d).map(|k| derivs[k].clone()).collect() };
                let sys = CoefficientSystem::new(
                    "S3",
                    [1, 2, 3, 4],
                    vec![block(1), block(2), block(3)],
                    vec![init(0, 1), init(1, 2), init(2, 3)],
                    (3..=6).map(at).collect(),
                )?;
                let ex = ExactField::new(
                    "S3",
                    vec![
                        vec![at(0)],
                        (1..=2).map(at).collect(),
                        (2..=4).map(at).collect(),
                        (3..=6).map(at).collect(),
                    ],
                )?;
                (sys, Some(ex))
            }
        };
        Ok(Scenario { id, params: params.clone(), system, exact })
    }

    pub fn exact(&self) -> Result<&ExactField, FieldError> {
        self.exact.as_ref().ok_or_else(|| FieldError::NoExactForm(self.id.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::BrownianGrid;

    #[test]
    fn ids_parse() {
        assert_eq!("S2".parse::<ScenarioId>().unwrap(), ScenarioId::S2Hermite);
        assert_eq!("transport".parse::<ScenarioId>().unwrap(), ScenarioId::S3Transport);
        assert!("S9".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn s2_at_zero_brownian_value() {
        let sc = Scenario::build(ScenarioId::S2Hermite, &ScenarioParams::default()).unwrap();
        let p = BrownianGrid::from_values(1.0, vec![0.0, 0.3, 0.0, -0.1, 0.2]);
        let y = 0.4f64;
        let v = sc.exact().unwrap().evaluate(&p, 0.5, y).unwrap();
        let expect = y.sin() - 0.5 * 0.5 * (0.5 + 0.25 * y.sin());
        assert!((v[0][0] - expect).abs() < 1e-14);
    }

    #[test]
    fn s3_linear_data() {
        let params = ScenarioParams { u0: "y".into(), ..Default::default() };
        let sc = Scenario::build(ScenarioId::S3Transport, &params).unwrap();
        let p = BrownianGrid::from_values(1.0, vec![0.0, 0.3, -0.2]);
        let v = sc.exact().unwrap().evaluate(&p, 1.0, 0.7).unwrap();
        assert!((v[0][0] - (0.7 - 0.8 * 0.2)).abs() < 1e-14);
        assert_eq!(v[1], vec![1.0, 0.0]);
        assert_eq!(sc.system.dims, [1, 2, 3, 4]);
    }

    #[test]
    fn exact_forms_start_at_initial_data() {
        let p = BrownianGrid::from_values(1.0, vec![0.0, 0.5]);
        for id in [ScenarioId::S1Additive, ScenarioId::S2Hermite, ScenarioId::S3Transport] {
            let sc = Scenario::build(id, &ScenarioParams::default()).unwrap();
            for &y in &[-1.3, 0.0, 0.9] {
                let v = sc.exact().unwrap().evaluate(&p, 0.0, y).unwrap();
                for l in 0..3 {
                    for (c, e) in sc.system.init[l].iter().enumerate() {
                        let want = e.evaluate_with(&["y"], &[y]).unwrap();
                        assert!((v[l][c] - want).abs() < 1e-12, "{id} level {} comp {c}", l + 1);
                    }
                }
            }
        }
        assert!(Scenario::build(ScenarioId::S4Sine, &ScenarioParams::default()).unwrap().exact().is_err());
    }
}
