use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 1.1;

/// Per-sample ratios in ascending order, so that downstream sums do not
/// depend on sample order.
fn sorted_ratios(predicted: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if predicted.len() != reference.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} references",
            predicted.len(),
            reference.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Metric("no samples".into()));
    }
    let mut ratios = Vec::with_capacity(predicted.len());
    for (i, (&p, &r)) in predicted.iter().zip(reference).enumerate() {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Metric(format!(
                "reference cost {r} at sample {i} is not positive"
            )));
        }
        if p.is_nan() || p < 0.0 {
            return Err(Error::Metric(format!("predicted cost {p} at sample {i} is invalid")));
        }
        ratios.push(p / r);
    }
    ratios.sort_by(f64::total_cmp);
    Ok(ratios)
}

pub fn average_cost_ratio(predicted: &[f64], reference: &[f64]) -> Result<f64> {
    let ratios = sorted_ratios(predicted, reference)?;
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Fraction of samples whose cost ratio is strictly below `threshold`.
pub fn cost_accuracy_rate(predicted: &[f64], reference: &[f64], threshold: f64) -> Result<f64> {
    let ratios = sorted_ratios(predicted, reference)?;
    let hits = ratios.iter().filter(|&&r| r < threshold).count();
    Ok(hits as f64 / ratios.len() as f64)
}
