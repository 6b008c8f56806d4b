//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};

/// Default perturbation for central differences.
pub const DEFAULT_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Coordinate where the maximum was attained.
    pub worst_coordinate: usize,
    /// Analytic and numeric values at the worst coordinate.
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    /// Largest `|a − n|` over all coordinates.
    pub max_absolute_error: f64,
    pub coordinates: usize,
}

impl GradCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error <= tolerance
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares `analytic` against `(f(x+h·e_i) − f(x−h·e_i)) / 2h` for every
/// coordinate `i` of `point`.
pub fn grad_check<O>(point: &[f64], analytic: &[f64], h: f64, mut objective: O) -> Result<GradCheck>
where
    O: FnMut(&[f64]) -> f64,
{
    if point.len() != analytic.len() {
        return Err(Error::Shape {
            op: "grad_check",
            expected: vec![point.len()],
            found: vec![analytic.len()],
        });
    }
    let mut x = point.to_vec();
    let mut report = GradCheck {
        max_relative_error: 0.0,
        worst_coordinate: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        max_absolute_error: 0.0,
        coordinates: point.len(),
    };
    for i in 0..x.len() {
        let original = x[i];
        x[i] = original + h;
        let plus = objective(&x);
        x[i] = original - h;
        let minus = objective(&x);
        x[i] = original;
        let numeric = (plus - minus) / (2.0 * h);
        if numeric.is_nan() || analytic[i].is_nan() {
            return Err(Error::GradCheckNan { index: i });
        }
        report.max_absolute_error = report.max_absolute_error.max((analytic[i] - numeric).abs());
        let err = relative_error(analytic[i], numeric);
        if err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst_coordinate = i;
            report.worst_analytic = analytic[i];
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gradient_of_cubic_passes() {
        let f = |x: &[f64]| x[0].powi(3) + 2.0 * x[0] * x[1];
        let p = [0.7, -1.3];
        let g = [3.0 * 0.49 + 2.0 * -1.3, 2.0 * 0.7];
        let r = grad_check(&p, &g, DEFAULT_STEP, f).unwrap();
        assert!(r.passes(1e-6), "{r:?}");
    }

    #[test]
    fn doubled_gradient_is_flagged() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let p = [0.5, 1.5, -2.0];
        let wrong: Vec<f64> = p.iter().map(|v| 2.0 * 2.0 * v).collect();
        let r = grad_check(&p, &wrong, DEFAULT_STEP, f).unwrap();
        assert!((r.max_relative_error - 0.5).abs() < 1e-6);
        assert!(!r.passes(1e-5));
    }

    #[test]
    fn nan_objective_reports_coordinate() {
        let f = |x: &[f64]| if x[1] > 1.0 { f64::NAN } else { x[0] };
        let err = grad_check(&[0.0, 1.0], &[1.0, 0.0], 1e-3, f).unwrap_err();
        assert!(matches!(err, Error::GradCheckNan { index: 1 }));
    }
}
