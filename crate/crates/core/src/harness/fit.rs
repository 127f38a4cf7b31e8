use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through `(ln c, ln value)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the fit residuals in `ln value`.
    pub residual: f64,
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    /// Fits `value ≈ exp(intercept) c^slope`; needs at least 4 positive pairs.
    pub fn fit(c: &[f64], values: &[f64]) -> Result<Self> {
        if c.len() != values.len() || c.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "rate fit needs at least 4 matching points, got {} and {}",
                c.len(),
                values.len()
            )));
        }
        if let Some(v) = c.iter().chain(values).find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("rate fit needs positive values, got {v}")));
        }
        let points: Vec<(f64, f64)> = c.iter().zip(values).map(|(a, b)| (a.ln(), b.ln())).collect();
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            return Err(Error::InvalidParameter("rate fit needs distinct c values".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
        Ok(RateFit { slope, intercept, residual, points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let c = [10.0f64, 100.0, 1e3, 1e4];
        let v: Vec<f64> = c.iter().map(|c| 3.0 * c.powf(-2.0)).collect();
        let fit = RateFit::fit(&c, &v).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn residual_sees_noise() {
        let c = [1.0, 2.0, 4.0, 8.0];
        let v = [1.0, 0.5 * 1.1, 0.25, 0.125 / 1.1];
        let fit = RateFit::fit(&c, &v).unwrap();
        assert!(fit.residual > 0.01);
    }

    #[test]
    fn rejects_short_or_nonpositive_input() {
        assert!(RateFit::fit(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(RateFit::fit(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(RateFit::fit(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }
}
