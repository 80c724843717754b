//! Finite-difference gradient verification.
//!
//! Central differences against analytic gradients, with the relative error
//! normalised by the larger magnitude so tiny gradients do not blow up the
//! ratio. Used by the op tests and by the full-model acceptance check.

use crate::error::{AdrnetError, Result};
use crate::neural::adam::ParamBlock;

/// A model (or single op wrapped as one) whose gradients can be checked.
///
/// `loss` must be a pure function of the current parameter values: calling it
/// repeatedly without touching parameters returns bitwise-identical results.
/// `backward` computes the loss, accumulates parameter gradients, and leaves
/// the parameter values themselves untouched.
pub trait GradCheckTarget {
    fn param_count(&self) -> usize;
    fn param_mut(&mut self, idx: usize) -> &mut ParamBlock;
    fn loss(&mut self) -> Result<f64>;
    /// Clears gradients, runs forward + backward once.
    fn backward(&mut self) -> Result<()>;
}

/// One flattened-coordinate comparison.
#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub param_name: String,
    pub flat_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// Worst-coordinate summary of a full check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: Option<GradCheckEntry>,
}

/// Relative error with a floor so near-zero pairs compare absolutely.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Checks every coordinate of every parameter with step `h`.
///
/// Fails with a Numeric error if any perturbed loss is non-finite. The caller
/// decides what max_rel_error is acceptable.
pub fn grad_check<T: GradCheckTarget>(target: &mut T, h: f64) -> Result<GradCheckReport> {
    target.backward()?;
    let analytic: Vec<Vec<f64>> = (0..target.param_count())
        .map(|p| target.param_mut(p).grad.values().to_vec())
        .collect();

    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };

    for p in 0..target.param_count() {
        for idx in 0..analytic[p].len() {
            let orig = target.param_mut(p).value.values()[idx];

            target.param_mut(p).value.values_mut()[idx] = orig + h;
            let loss_plus = target.loss()?;
            target.param_mut(p).value.values_mut()[idx] = orig - h;
            let loss_minus = target.loss()?;
            target.param_mut(p).value.values_mut()[idx] = orig;

            if !loss_plus.is_finite() || !loss_minus.is_finite() {
                return Err(AdrnetError::Numeric(format!(
                    "grad check: non-finite loss near {}[{}]",
                    target.param_mut(p).name,
                    idx
                )));
            }

            let numeric = (loss_plus - loss_minus) / (2.0 * h);
            let err = rel_error(analytic[p][idx], numeric);
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some(GradCheckEntry {
                    param_name: target.param_mut(p).name.clone(),
                    flat_index: idx,
                    analytic: analytic[p][idx],
                    numeric,
                    rel_error: err,
                });
            }
        }
    }
    Ok(report)
}
