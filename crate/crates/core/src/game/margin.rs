//! Bribe margins per tally policy.
//!
//! * full disclosure: the adversary sees the ballot, `alpha = 1`;
//! * winner only: paying on a yes win gives `alpha = Delta`;
//! * corrected noised: upper bound `Delta + (1 - Delta) * TV`, where
//!   `TV = 1 - exp(-w / (2b))` is the total variation distance between
//!   `Laplace(0, b)` and its shift by the voter's weight;
//! * DP noised: upper bound `1 - exp(-epsilon)`.

use crate::error::{Error, Result};

use super::TallyPolicy;

/// Pivotality below which `alpha * b / Delta` is treated as divergent.
pub const PIVOTALITY_FLOOR: f64 = 1e-12;

/// Total variation between Laplace noise and its shift by `weight`.
fn laplace_shift_tv(weight: f64, scale: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else if scale == 0.0 {
        1.0
    } else {
        -(-weight / (2.0 * scale)).exp_m1()
    }
}

fn check(delta: f64, weight: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::param("pivotality", format!("{delta} is outside [0, 1]")));
    }
    if !(weight >= 0.0) {
        return Err(Error::param("weight", format!("{weight} is negative")));
    }
    Ok(())
}

/// Bribe margin (exact or upper bound) for a voter of the given pivotality
/// and weight. A zero noise scale is accepted as the no-noise limit.
pub fn bribe_margin(policy: &TallyPolicy, delta: f64, weight: f64) -> Result<f64> {
    check(delta, weight)?;
    Ok(match policy {
        TallyPolicy::FullDisclosure => 1.0,
        TallyPolicy::WinnerOnly => delta,
        TallyPolicy::CorrectedNoised { noise } => delta + (1.0 - delta) * laplace_shift_tv(weight, noise.scale()),
        TallyPolicy::DpNoised { epsilon } => {
            if !(*epsilon > 0.0) {
                return Err(Error::param("epsilon", format!("{epsilon} must be positive")));
            }
            (-(-epsilon).exp_m1()).min(1.0)
        }
    })
}

/// Utility threshold `alpha * b / Delta` below which the voter votes yes.
///
/// The ratio `alpha / Delta` is formed per policy so winner-only stays at
/// exactly `b` as `Delta -> 0`. When `Delta` is below [`PIVOTALITY_FLOOR`]
/// and the margin does not vanish with it, a positive bribe gives an
/// infinite threshold.
pub fn vote_threshold(policy: &TallyPolicy, delta: f64, weight: f64, bribe: f64) -> Result<f64> {
    let alpha = bribe_margin(policy, delta, weight)?;
    if bribe == 0.0 {
        return Ok(0.0);
    }
    // margin left over once the pivotal part (which scales with Delta) is removed
    let residual = match policy {
        TallyPolicy::WinnerOnly => 0.0,
        TallyPolicy::CorrectedNoised { noise } => laplace_shift_tv(weight, noise.scale()),
        TallyPolicy::FullDisclosure | TallyPolicy::DpNoised { .. } => alpha,
    };
    if delta < PIVOTALITY_FLOOR {
        return Ok(if residual > 0.0 { f64::INFINITY } else { bribe });
    }
    Ok(alpha * bribe / delta)
}
