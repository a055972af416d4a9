use super::{arg_names, CoefficientSystem, FieldError};
use crate::expr::Expr;

/// Itô differential of `t -> Φ(y, ζ_{i+1}(t, y))`.
///
/// Both parts are expressions in `y`, the block `z` standing for
/// `ζ_{i+1}` and the block `w` standing for `ζ_{i+2}`.
#[derive(Debug, Clone)]
pub struct ItoLift {
    pub level: usize,
    pub drift: Expr,
    pub diffusion: Expr,
    pub z: Vec<String>,
    pub w: Vec<String>,
}

impl ItoLift {
    /// Variable order `y, z.., w..`.
    pub fn vars(&self) -> Vec<String> {
        let mut v = vec!["y".to_string()];
        v.extend(self.z.iter().cloned());
        v.extend(self.w.iter().cloned());
        v
    }
}

/// Lift `Φ(y, z)` through level `i + 1` of `cs` (`i` in 1..=2):
/// drift `D_zΦ·F_{i+1} + ½ tr[G_{i+1}G_{i+1}ᵀ D_z²Φ]`, diffusion `D_zΦ·G_{i+1}`.
pub fn ito_lift(phi: &Expr, level: usize, cs: &CoefficientSystem) -> Result<ItoLift, FieldError> {
    if !(1..=2).contains(&level) {
        return Err(FieldError::LevelOutOfRange(level));
    }
    let dz = cs.dims[level];
    let dw = cs.dims[level + 1];
    let z = arg_names("z", dz);
    let w = arg_names("w", dw);
    for v in phi.variables() {
        if v != "y" && !z.contains(&v) {
            return Err(FieldError::Arity(format!(
                "Φ uses `{v}` but level {level} lifts over {dz} argument(s)"
            )));
        }
    }
    // F_{i+1}, G_{i+1} with their own z renamed to w
    let src = arg_names("z", dw);
    let map: Vec<(&str, &str)> = src.iter().map(String::as_str).zip(w.iter().map(String::as_str)).collect();
    let next = &cs.levels[level];
    let f: Vec<Expr> = next.drift.iter().map(|e| e.rename(&map)).collect();
    let g: Vec<Expr> = next.diffusion.iter().map(|e| e.rename(&map)).collect();

    let grad: Vec<Expr> = z.iter().map(|v| phi.differentiate(v)).collect();
    let mut drift = Expr::Const(0.0);
    let mut diffusion = Expr::Const(0.0);
    for a in 0..dz {
        drift = drift + grad[a].clone() * f[a].clone();
        diffusion = diffusion + grad[a].clone() * g[a].clone();
        for b in 0..dz {
            let h = grad[a].differentiate(&z[b]);
            drift = drift + Expr::Const(0.5) * g[a].clone() * g[b].clone() * h;
        }
    }
    Ok(ItoLift { level, drift, diffusion, z, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Scenario, ScenarioId, ScenarioParams};

    #[test]
    fn identity_and_constant_maps() {
        let sc = Scenario::build(ScenarioId::S2Hermite, &ScenarioParams::default()).unwrap();
        let id = ito_lift(&Expr::var("z"), 1, &sc.system).unwrap();
        assert!(id.drift.is_const(0.0));
        assert_eq!(id.diffusion, Expr::var("w"));
        let k = ito_lift(&crate::expr::parse("cos(y)", &["y"]).unwrap(), 1, &sc.system).unwrap();
        assert!(k.drift.is_const(0.0) && k.diffusion.is_const(0.0));
        assert!(ito_lift(&Expr::var("z"), 3, &sc.system).is_err());
        let s3 = Scenario::build(ScenarioId::S3Transport, &ScenarioParams::default()).unwrap();
        assert!(matches!(ito_lift(&Expr::var("z3"), 1, &s3.system), Err(FieldError::Arity(_))));
    }
}
