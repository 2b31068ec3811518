use crate::error::{Error, Result};

/// Central-difference gradient of `f` at `params`.
///
/// `f` is evaluated at `params ± eps·e_k` for every coordinate `k`; the point
/// itself is restored before returning.
pub fn finite_difference_gradient<F>(mut f: F, params: &mut [f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {eps}")));
    }
    let mut grad = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let original = params[k];
        params[k] = original + eps;
        let plus = f(params);
        params[k] = original - eps;
        let minus = f(params);
        params[k] = original;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Evaluation(k));
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}
