use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::clock::ClockModel;
use super::series::{DetectorId, TimestampSeries};
use crate::error::{QcsError, Result};
use crate::link::db_to_transmittance;

/// FWHM of a Gaussian divided by its standard deviation.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
/// Jitter draws are truncated at this many standard deviations.
pub const JITTER_TRUNCATION: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_fwhm_s: f64,
    pub resolution_s: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { efficiency: 0.5, dark_rate_hz: 1000.0, jitter_fwhm_s: 0.0, resolution_s: 50e-12 }
    }
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_rate_hz: f64, jitter_fwhm_s: f64, resolution_s: f64) -> Result<Self> {
        let d = DetectorModel { efficiency, dark_rate_hz, jitter_fwhm_s, resolution_s };
        d.validate()?;
        Ok(d)
    }

    /// Detector whose jitter is given as a standard deviation.
    pub fn with_jitter_sigma(efficiency: f64, dark_rate_hz: f64, sigma_s: f64, resolution_s: f64) -> Result<Self> {
        Self::new(efficiency, dark_rate_hz, sigma_s * FWHM_PER_SIGMA, resolution_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(QcsError::Config(format!("detector efficiency {} outside (0, 1]", self.efficiency)));
        }
        if !(self.dark_rate_hz >= 0.0 && self.dark_rate_hz.is_finite()) {
            return Err(QcsError::Config(format!("dark rate {} must be >= 0", self.dark_rate_hz)));
        }
        if !(self.jitter_fwhm_s >= 0.0 && self.jitter_fwhm_s.is_finite()) {
            return Err(QcsError::Config(format!("jitter {} must be >= 0", self.jitter_fwhm_s)));
        }
        if !(self.resolution_s > 0.0) {
            return Err(QcsError::Config(format!("resolution {} must be > 0", self.resolution_s)));
        }
        Ok(())
    }

    pub fn jitter_sigma_s(&self) -> f64 {
        self.jitter_fwhm_s / FWHM_PER_SIGMA
    }

    #[inline]
    pub fn quantize(&self, t: f64) -> i64 {
        (t / self.resolution_s).round() as i64
    }

    fn jitter<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sigma = self.jitter_sigma_s();
        if sigma == 0.0 {
            return 0.0;
        }
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() <= JITTER_TRUNCATION {
                return z * sigma;
            }
        }
    }
}

/// Birth times of a homogeneous Poisson process on `[0, acquisition_s)`.
/// The returned list is sorted.
pub fn generate_pair_events<R: Rng + ?Sized>(rate: f64, acquisition_s: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(QcsError::Config(format!("pair rate must be > 0, got {rate}")));
    }
    if !(acquisition_s > 0.0) {
        return Ok(Vec::new());
    }
    let gaps = Exp::new(rate).map_err(|e| QcsError::Config(e.to_string()))?;
    let mut out = Vec::with_capacity((rate * acquisition_s * 1.01 + 16.0) as usize);
    let mut t = gaps.sample(rng);
    while t < acquisition_s {
        out.push(t);
        t += gaps.sample(rng);
    }
    Ok(out)
}

/// One detection chain: channel loss, detector and the clock that stamps it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Receiver {
    pub id: DetectorId,
    pub loss_db: f64,
    pub detector: DetectorModel,
    pub clock: ClockModel,
    /// Travel time from the source to this detector.
    pub delay_s: f64,
}

impl Receiver {
    fn survival(&self) -> f64 {
        if self.loss_db.is_infinite() {
            0.0
        } else {
            db_to_transmittance(self.loss_db) * self.detector.efficiency
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.loss_db >= 0.0) {
            return Err(QcsError::Config(format!("loss must be >= 0 dB, got {}", self.loss_db)));
        }
        self.detector.validate()
    }

    fn stamp(&self, t: f64) -> i64 {
        self.detector.quantize(self.clock.read(t))
    }

    fn window_ticks(&self, acquisition_s: f64) -> i64 {
        self.detector.quantize(acquisition_s)
    }

    fn detect<R: Rng + ?Sized>(&self, birth: f64, rng: &mut R) -> i64 {
        self.stamp(birth + self.delay_s + self.detector.jitter(rng))
    }

    /// Signal ticks plus dark counts, restricted to the window, sorted.
    fn finish<R: Rng + ?Sized>(&self, mut ticks: Vec<i64>, acquisition_s: f64, rng: &mut R) -> Result<TimestampSeries> {
        let mut darks = dark_counts(&self.detector, acquisition_s, rng)?
            .into_iter()
            .map(|t| self.stamp(t))
            .collect::<Vec<_>>();
        darks.sort_unstable();
        if !ticks.windows(2).all(|w| w[0] <= w[1]) {
            // jitter can swap neighbours; the stable sort is linear on nearly sorted input
            ticks.sort();
        }
        let limit = self.window_ticks(acquisition_s);
        let mut merged = Vec::with_capacity(ticks.len() + darks.len());
        let (mut i, mut j) = (0, 0);
        while i < ticks.len() || j < darks.len() {
            let take_signal = j == darks.len() || (i < ticks.len() && ticks[i] <= darks[j]);
            let v = if take_signal {
                i += 1;
                ticks[i - 1]
            } else {
                j += 1;
                darks[j - 1]
            };
            if (0..=limit).contains(&v) {
                merged.push(v);
            }
        }
        Ok(TimestampSeries::new(self.id, self.detector.resolution_s, acquisition_s, merged))
    }
}

fn dark_counts<R: Rng + ?Sized>(detector: &DetectorModel, acquisition_s: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mean = detector.dark_rate_hz * acquisition_s;
    if !(mean > 0.0) {
        return Ok(Vec::new());
    }
    let n: f64 = Poisson::new(mean).map_err(|e| QcsError::Config(e.to_string()))?.sample(rng);
    Ok((0..n as usize).map(|_| rng.gen::<f64>() * acquisition_s).collect())
}

/// Pushes pair events through one detection chain.
pub fn transmit_and_detect<R: Rng + ?Sized>(
    events: &[f64],
    receiver: &Receiver,
    acquisition_s: f64,
    rng: &mut R,
) -> Result<TimestampSeries> {
    receiver.validate()?;
    let p = receiver.survival();
    let mut ticks = Vec::with_capacity((events.len() as f64 * p * 1.1) as usize + 8);
    for &birth in events {
        if rng.gen::<f64>() < p {
            ticks.push(receiver.detect(birth, rng));
        }
    }
    receiver.finish(ticks, acquisition_s, rng)
}

/// Both halves of a pair stream: the photon kept at the source and the
/// photon sent over the link.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDetection {
    pub local: TimestampSeries,
    pub remote: TimestampSeries,
    /// Pairs detected at both ends.
    pub coincidences: usize,
}

/// Detects both photons of every pair, tracking which pairs survive at both
/// ends. Equivalent in distribution to two independent
/// [`transmit_and_detect`] calls on the same events.
pub fn detect_pairs<R: Rng + ?Sized>(
    events: &[f64],
    local: &Receiver,
    remote: &Receiver,
    acquisition_s: f64,
    rng: &mut R,
) -> Result<PairDetection> {
    local.validate()?;
    remote.validate()?;
    let p_local = local.survival();
    let p_remote = remote.survival();
    let mut local_ticks = Vec::with_capacity((events.len() as f64 * p_local * 1.1) as usize + 8);
    let mut remote_ticks = Vec::with_capacity((events.len() as f64 * p_remote * 1.5) as usize + 8);
    let mut coincidences = 0;
    for &birth in events {
        let hit_local = rng.gen::<f64>() < p_local;
        let hit_remote = rng.gen::<f64>() < p_remote;
        if hit_local {
            local_ticks.push(local.detect(birth, rng));
        }
        if hit_remote {
            remote_ticks.push(remote.detect(birth, rng));
            coincidences += usize::from(hit_local);
        }
    }
    Ok(PairDetection {
        local: local.finish(local_ticks, acquisition_s, rng)?,
        remote: remote.finish(remote_ticks, acquisition_s, rng)?,
        coincidences,
    })
}
