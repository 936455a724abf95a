use serde::Serialize;

use super::correlate::CorrelationResult;

/// Offset and round-trip recovered from the two correlation peaks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OffsetEstimate {
    pub delta_hat_s: f64,
    pub roundtrip_hat_s: f64,
    /// `delta_hat - delta_true`, when the truth is known.
    pub error_s: Option<f64>,
    pub success: Option<bool>,
}

impl OffsetEstimate {
    /// Scores the estimate against the true offset.
    pub fn judged(mut self, delta_true_s: f64, threshold_s: f64) -> Self {
        let err = self.delta_hat_s - delta_true_s;
        self.error_s = Some(err);
        self.success = Some(err.abs() < threshold_s);
        self
    }
}

/// Combines the peak lags of the A-to-B and B-to-A correlations.
pub fn estimate_from_lags(tau_ab_s: f64, tau_ba_s: f64) -> OffsetEstimate {
    OffsetEstimate {
        delta_hat_s: 0.5 * (tau_ab_s - tau_ba_s),
        roundtrip_hat_s: tau_ab_s + tau_ba_s,
        error_s: None,
        success: None,
    }
}

pub fn estimate_offset(c_ab: &CorrelationResult, c_ba: &CorrelationResult) -> OffsetEstimate {
    estimate_from_lags(c_ab.peak_lag_s, c_ba.peak_lag_s)
}
