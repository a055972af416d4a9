//! Least-squares slope on log-log data.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 4 points, got {0}")]
    Underdetermined(usize),
    #[error("point {index} is not strictly positive")]
    NonPositive { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `log2 y` on `log2 x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit, FitError> {
    if points.len() < 4 {
        return Err(FitError::Underdetermined(points.len()));
    }
    if let Some(index) = points.iter().position(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(FitError::NonPositive { index });
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::Underdetermined(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(LogLogFit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn exact_power_and_constant() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| (2f64.powi(-k), 2f64.powi(-2 * k))).collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| (2f64.powi(-k), 3.0)).collect();
        assert!(fit_loglog(&pts).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_synthetic_slope() {
        let mut rng = StreamRng::new(2024, 0);
        let pts: Vec<(f64, f64)> = (1..=8)
            .map(|k| {
                let x = 2f64.powi(-k);
                (x, x.powf(1.45) * (1.0 + 0.05 * (2.0 * rng.uniform() - 1.0)))
            })
            .collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((1.35..=1.55).contains(&f.slope), "{}", f.slope);
    }

    #[test]
    fn refuses_bad_input() {
        assert_eq!(fit_loglog(&[(1.0, 1.0); 3]), Err(FitError::Underdetermined(3)));
        let pts = [(1.0, 1.0), (0.5, 0.0), (0.25, 1.0), (0.125, 1.0)];
        assert_eq!(fit_loglog(&pts), Err(FitError::NonPositive { index: 1 }));
    }
}
