//! Cross-correlation of two timestamp series over a lag window.
//!
//! Both paths optionally fold the time axis onto a frame of `frame_ticks`
//! bins, i.e. they compute the circular correlation a frame-length transform
//! would give. The sparse path walks sorted timestamps; the dense path bins
//! everything and goes through an FFT, and is kept to cross-check the first.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use super::series::{DetectorId, TimestampSeries};
use crate::error::{QcsError, Result};

/// Bins on either side of the peak left out of the background statistics.
pub const PEAK_EXCLUSION_BINS: i64 = 3;

/// Which exchange a correlation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Route {
    /// Photons from A's source: A1 locally, B2 remotely.
    AB,
    /// Photons from B's source: B1 locally, A2 remotely.
    BA,
    Unlabelled,
}

impl Route {
    pub fn of(local: DetectorId, remote: DetectorId) -> Route {
        match (local, remote) {
            (DetectorId::A1, DetectorId::B2) => Route::AB,
            (DetectorId::B1, DetectorId::A2) => Route::BA,
            _ => Route::Unlabelled,
        }
    }
}

/// Lag window (remote minus local, in ticks) and optional folding frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Correlator {
    pub lag_min: i64,
    pub lag_max: i64,
    pub frame_ticks: Option<i64>,
}

impl Correlator {
    pub fn new(lag_min: i64, lag_max: i64, frame_ticks: Option<i64>) -> Result<Self> {
        if lag_max < lag_min {
            return Err(QcsError::Config(format!("empty lag window [{lag_min}, {lag_max}]")));
        }
        if let Some(m) = frame_ticks {
            if m <= lag_max - lag_min {
                return Err(QcsError::Config(format!(
                    "folding frame of {m} bins must exceed the lag window width {}",
                    lag_max - lag_min + 1
                )));
            }
        }
        Ok(Correlator { lag_min, lag_max, frame_ticks })
    }

    /// Window `[lag_min_s, lag_max_s]` expressed on a grid of `bin_s`.
    pub fn from_seconds(lag_min_s: f64, lag_max_s: f64, bin_s: f64, frame_s: Option<f64>) -> Result<Self> {
        let frame = frame_s.map(|f| (f / bin_s).round() as i64);
        Self::new((lag_min_s / bin_s).floor() as i64, (lag_max_s / bin_s).ceil() as i64, frame)
    }

    pub fn n_bins(&self) -> usize {
        (self.lag_max - self.lag_min + 1) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub route: Route,
    pub peak_lag_s: f64,
    pub peak_lag_ticks: i64,
    pub peak_height: u32,
    pub snr: f64,
    /// Lag of `histogram[0]`, in ticks.
    pub first_lag_ticks: i64,
    pub bin_s: f64,
    #[serde(skip)]
    pub histogram: Vec<u32>,
}

fn check_inputs(local: &TimestampSeries, remote: &TimestampSeries) -> Result<()> {
    if local.resolution_s != remote.resolution_s {
        return Err(QcsError::Config(format!(
            "series resolutions differ: {} vs {}",
            local.resolution_s, remote.resolution_s
        )));
    }
    if local.is_empty() || remote.is_empty() {
        return Err(QcsError::NoPeak("empty timestamp series".into()));
    }
    Ok(())
}

/// Histogram of `remote - local` differences over the window, walking the
/// sorted local series once per remote event and frame.
pub fn correlation_histogram(local: &[i64], remote: &[i64], corr: &Correlator) -> Vec<u32> {
    let mut hist = vec![0u32; corr.n_bins()];
    let (Some(&a_min), Some(&a_max)) = (local.first(), local.last()) else {
        return hist;
    };
    let m = corr.frame_ticks.unwrap_or(0);
    for &b in remote {
        let (k_lo, k_hi) = if m > 0 {
            (
                (b - corr.lag_max - a_max).div_euclid(m) + i64::from((b - corr.lag_max - a_max).rem_euclid(m) != 0),
                (b - corr.lag_min - a_min).div_euclid(m),
            )
        } else {
            (0, 0)
        };
        for k in k_lo..=k_hi {
            let shift = k * m;
            let lo = b - corr.lag_max - shift;
            let hi = b - corr.lag_min - shift;
            let start = local.partition_point(|&a| a < lo);
            for &a in local[start..].iter().take_while(|&&a| a <= hi) {
                hist[(b - a - shift - corr.lag_min) as usize] += 1;
            }
        }
    }
    hist
}

/// Same histogram as [`correlation_histogram`], computed from dense binned
/// series with an FFT. Memory grows with the frame (or the series span when
/// not folding), so this is meant for small instances.
pub fn correlation_histogram_dense(local: &[i64], remote: &[i64], corr: &Correlator) -> Vec<u32> {
    let mut hist = vec![0u32; corr.n_bins()];
    if local.is_empty() || remote.is_empty() {
        return hist;
    }
    let (n, base) = match corr.frame_ticks {
        Some(m) => (m as usize, 0i64),
        None => {
            let lo = local[0].min(remote[0]);
            let a_span = local[local.len() - 1] - local[0];
            let b_span = remote[remote.len() - 1] - remote[0];
            let need = a_span + b_span + corr.lag_max - corr.lag_min + 2;
            ((need.max(1) as usize).next_power_of_two(), lo)
        }
    };
    let n_i = n as i64;
    let mut fa = vec![Complex::new(0.0, 0.0); n];
    let mut fb = vec![Complex::new(0.0, 0.0); n];
    for &a in local {
        fa[(a - base).rem_euclid(n_i) as usize].re += 1.0;
    }
    for &b in remote {
        fb[(b - base).rem_euclid(n_i) as usize].re += 1.0;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut fa);
    planner.plan_fft_forward(n).process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    planner.plan_fft_inverse(n).process(&mut fa);
    for (i, lag) in (corr.lag_min..=corr.lag_max).enumerate() {
        let v = fa[lag.rem_euclid(n_i) as usize].re / n as f64;
        hist[i] = v.round().max(0.0) as u32;
    }
    hist
}

/// Peak, height and SNR of a histogram. Ties resolve to the smallest lag.
pub fn analyse_histogram(hist: &[u32]) -> Result<(usize, u32, f64)> {
    let (mut peak, mut height) = (0usize, 0u32);
    let mut low = u32::MAX;
    for (i, &v) in hist.iter().enumerate() {
        if v > height {
            peak = i;
            height = v;
        }
        low = low.min(v);
    }
    if hist.is_empty() || height == low {
        return Err(QcsError::NoPeak("flat correlation histogram".into()));
    }
    let (mut n, mut sum, mut sum_sq) = (0usize, 0.0f64, 0.0f64);
    for (i, &v) in hist.iter().enumerate() {
        if (i as i64 - peak as i64).abs() > PEAK_EXCLUSION_BINS {
            let v = f64::from(v);
            n += 1;
            sum += v;
            sum_sq += v * v;
        }
    }
    if n < 2 {
        return Err(QcsError::NoPeak("lag window too narrow for background statistics".into()));
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let excess = f64::from(height) - mean;
    let snr = if var > 0.0 { excess / var.sqrt() } else { f64::INFINITY };
    Ok((peak, height, snr.max(0.0)))
}

fn finish(local: &TimestampSeries, remote: &TimestampSeries, corr: &Correlator, hist: Vec<u32>) -> Result<CorrelationResult> {
    let (peak, height, snr) = analyse_histogram(&hist)?;
    let peak_lag_ticks = corr.lag_min + peak as i64;
    Ok(CorrelationResult {
        route: Route::of(local.detector, remote.detector),
        peak_lag_s: peak_lag_ticks as f64 * local.resolution_s,
        peak_lag_ticks,
        peak_height: height,
        snr,
        first_lag_ticks: corr.lag_min,
        bin_s: local.resolution_s,
        histogram: hist,
    })
}

/// Correlates two series with the sparse path.
pub fn cross_correlate(local: &TimestampSeries, remote: &TimestampSeries, corr: &Correlator) -> Result<CorrelationResult> {
    check_inputs(local, remote)?;
    let hist = correlation_histogram(&local.ticks, &remote.ticks, corr);
    finish(local, remote, corr, hist)
}

/// Correlates two series with the dense transform path.
pub fn cross_correlate_dense(local: &TimestampSeries, remote: &TimestampSeries, corr: &Correlator) -> Result<CorrelationResult> {
    check_inputs(local, remote)?;
    let hist = correlation_histogram_dense(&local.ticks, &remote.ticks, corr);
    finish(local, remote, corr, hist)
}
