use log::warn;

use crate::error::{Error, Result};
use crate::Money;

/// `(optimal - robust) / optimal`, clamped to `[0, 1]`.
///
/// A robust revenue above the per-instance optimum means the optimum was not
/// computed over the same toll set; it is clamped to zero regret and logged.
pub fn relative_regret(optimal_revenue: Money, robust_revenue: Money) -> Result<f64> {
    if optimal_revenue <= 0.0 {
        return Err(Error::DegenerateInstance);
    }
    if robust_revenue < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "robust revenue {robust_revenue} is negative"
        )));
    }
    let regret = (optimal_revenue - robust_revenue) / optimal_revenue;
    if regret < -1e-12 {
        warn!(
            "robust revenue {robust_revenue} exceeds optimal revenue {optimal_revenue}; clamping regret to 0"
        );
    }
    Ok(regret.clamp(0.0, 1.0))
}
