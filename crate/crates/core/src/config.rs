//! Numerical tolerances shared by every analysis.
//!
//! All thresholds live in one record so that reports can embed the exact
//! values used and property tests can pin them.

use serde::{Deserialize, Serialize};

/// Kernel rows must sum to one within this tolerance.
pub const TOL_STOCHASTIC: f64 = 1e-12;
/// Maximum residual of `πQ - π` accepted for a stationary law.
pub const TOL_FIXED: f64 = 1e-10;
/// Observable π-means below this are considered already centered.
pub const TOL_MEAN: f64 = 1e-10;
/// Normality and reversibility defects at or below this count as zero.
pub const TOL_NORMAL: f64 = 1e-10;
/// Distance of the fitted tail slope from the critical slope required for a verdict.
pub const CLASSIFIER_MARGIN: f64 = 0.15;
/// Target variances below this switch the CLT check to the degenerate rule.
pub const TOL_DEGENERATE_TARGET: f64 = 1e-12;
/// Above this state count the stationary law is found by power iteration.
pub const DIRECT_SOLVE_MAX_STATES: usize = 2000;
/// Default caps for dense bridge and mixingale computations.
pub const BRIDGE_MAX_STATES: usize = 512;
pub const BRIDGE_MAX_HORIZON: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub stochastic: f64,
    pub fixed: f64,
    pub mean: f64,
    pub normal: f64,
    pub classifier_margin: f64,
    pub degenerate_target: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stochastic: TOL_STOCHASTIC,
            fixed: TOL_FIXED,
            mean: TOL_MEAN,
            normal: TOL_NORMAL,
            classifier_margin: CLASSIFIER_MARGIN,
            degenerate_target: TOL_DEGENERATE_TARGET,
        }
    }
}
