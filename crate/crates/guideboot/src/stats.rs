//! Small summary-statistics helpers used by the harness and the
//! acceptance checks.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid_input("mean over empty slice"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation with divisor `max(1, s - 1)`; a single value
/// has standard deviation 0.
pub fn sample_std(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    let denom = (values.len() as f64 - 1.0).max(1.0);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / denom).sqrt())
}

/// One-sided paired t-test for the hypothesis mean(a) < mean(b).
/// Returns the p-value of the observed difference under the null of equal
/// means; small p supports a < b.
pub fn paired_t_test_less(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid_input(format!(
            "paired test needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::invalid_input("paired test needs at least 2 pairs"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let d_mean = mean(&diffs)?;
    let d_std = sample_std(&diffs)?;
    let n = diffs.len() as f64;
    if d_std == 0.0 {
        // Degenerate: all differences identical.
        return Ok(if d_mean < 0.0 { 0.0 } else { 1.0 });
    }
    let t = d_mean / (d_std / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::invalid_state(e.to_string()))?;
    Ok(dist.cdf(t))
}
