use serde::{Deserialize, Serialize};

use super::series::TimestampSeries;
use crate::error::{QcsError, Result};

/// A free-running clock with a constant offset and fractional frequency error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    /// Reading minus true time at the epoch.
    pub offset_s: f64,
    /// Fractional frequency offset.
    pub skew: f64,
    pub epoch_s: f64,
}

impl ClockModel {
    pub fn ideal() -> Self {
        ClockModel::default()
    }

    pub fn new(offset_s: f64, skew: f64) -> Self {
        ClockModel { offset_s, skew, epoch_s: 0.0 }
    }

    /// Local reading of the true time `t`.
    #[inline]
    pub fn read(&self, t: f64) -> f64 {
        (1.0 + self.skew) * (t - self.epoch_s) + self.epoch_s + self.offset_s
    }

    /// True time at which the clock shows `reading`.
    pub fn true_time(&self, reading: f64) -> f64 {
        (reading - self.epoch_s - self.offset_s) / (1.0 + self.skew) + self.epoch_s
    }
}

/// Rescales local timestamps about `epoch_s` to undo an assumed skew.
pub fn apply_skew_compensation(
    series: &TimestampSeries,
    assumed_skew: f64,
    epoch_s: f64,
) -> Result<TimestampSeries> {
    if !(assumed_skew.abs() < 1e-6) {
        return Err(QcsError::Config(format!(
            "assumed skew {assumed_skew} outside (-1e-6, 1e-6)"
        )));
    }
    if assumed_skew == 0.0 {
        return Ok(series.clone());
    }
    let res = series.resolution_s;
    let scale = 1.0 / (1.0 + assumed_skew);
    let ticks = series
        .ticks
        .iter()
        .map(|&k| {
            let t = k as f64 * res;
            (((t - epoch_s) * scale + epoch_s) / res).round() as i64
        })
        .collect();
    // a monotone map keeps the order
    Ok(TimestampSeries { ticks, ..series.clone_header() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn read_and_invert() {
        let c = ClockModel { offset_s: 3e-7, skew: 3e-10, epoch_s: 0.1 };
        let t = 0.2371;
        assert!((c.true_time(c.read(t)) - t).abs() < 1e-15);
        assert_eq!(ClockModel::ideal().read(t), t);
    }
}
