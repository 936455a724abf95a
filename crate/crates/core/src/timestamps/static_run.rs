//! Repeated two-way exchanges over a fixed-loss link.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clock::ClockModel;
use super::correlate::{cross_correlate, Correlator};
use super::detector::{detect_pairs, generate_pair_events, DetectorModel, PairDetection, Receiver};
use super::estimate::{estimate_offset, OffsetEstimate};
use super::series::{DetectorId, TimestampSeries};
use crate::error::{QcsError, Result};

/// Default number of frames an acquisition is folded into before
/// correlating: a 250 ms acquisition stamped at 50 ps folds into frames of
/// 2^28 bins.
pub const DEFAULT_FOLDS: f64 = 5e9 / 268_435_456.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewMode {
    /// `±skew`, sign drawn per instance.
    #[default]
    RandomSign,
    /// Uniform in `[-skew, skew]` per instance.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaticScenario {
    pub pair_rate: f64,
    /// Link loss for the A-to-B and B-to-A exchanges.
    pub link_loss_db: [f64; 2],
    /// Loss between each source and its own detector.
    pub local_loss_db: f64,
    /// Detectors in `DetectorId::ALL` order.
    pub detectors: [DetectorModel; 4],
    pub skew: f64,
    pub skew_mode: SkewMode,
    /// True offsets are drawn uniformly from `[0, max_offset_s)`.
    pub max_offset_s: f64,
    pub propagation_delay_s: f64,
    pub acquisition_s: f64,
    pub n_instances: usize,
    pub seed: u64,
    pub success_threshold_s: f64,
    /// Half-width of the lag search window around the propagation delay.
    pub lag_margin_s: f64,
    /// `None` correlates the acquisition unfolded.
    pub folds: Option<f64>,
}

impl StaticScenario {
    /// Symmetric link loss with four identical detectors.
    pub fn new(link_loss_db: f64, detector: DetectorModel, seed: u64) -> Self {
        StaticScenario {
            pair_rate: 1e7,
            link_loss_db: [link_loss_db; 2],
            local_loss_db: 0.0,
            detectors: [detector; 4],
            skew: 3e-10,
            skew_mode: SkewMode::RandomSign,
            max_offset_s: 1e-6,
            propagation_delay_s: 0.0,
            acquisition_s: 0.25,
            n_instances: 100,
            seed,
            success_threshold_s: 1e-9,
            lag_margin_s: 2e-6,
            folds: Some(DEFAULT_FOLDS),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(QcsError::Config("n_instances must be >= 1".into()));
        }
        if !(self.pair_rate > 0.0) || !(self.acquisition_s > 0.0) {
            return Err(QcsError::Config("pair rate and acquisition time must be > 0".into()));
        }
        for d in &self.detectors {
            d.validate()?;
            if d.resolution_s != self.detectors[0].resolution_s {
                return Err(QcsError::Config("all detectors must share one resolution".into()));
            }
        }
        if self.link_loss_db.iter().any(|l| !(*l >= 0.0)) || !(self.local_loss_db >= 0.0) {
            return Err(QcsError::Config("losses must be >= 0 dB".into()));
        }
        if !(self.skew.abs() < 1e-6) {
            return Err(QcsError::Config(format!("skew {} outside (-1e-6, 1e-6)", self.skew)));
        }
        if !(self.max_offset_s >= 0.0) || !(self.lag_margin_s > 0.0) || !(self.success_threshold_s > 0.0) {
            return Err(QcsError::Config("offset range, lag margin and success threshold must be positive".into()));
        }
        if let Some(f) = self.folds {
            if !(f >= 1.0) {
                return Err(QcsError::Config(format!("folds must be >= 1, got {f}")));
            }
        }
        Ok(())
    }

    pub fn resolution_s(&self) -> f64 {
        self.detectors[0].resolution_s
    }

    fn detector(&self, id: DetectorId) -> DetectorModel {
        self.detectors[id.code() as usize]
    }

    pub fn correlator(&self) -> Result<Correlator> {
        let d = self.propagation_delay_s;
        Correlator::from_seconds(
            d - self.lag_margin_s,
            d + self.lag_margin_s,
            self.resolution_s(),
            self.folds.map(|f| self.acquisition_s / f),
        )
    }

    /// Coincidence rate implied by the losses and detector efficiencies.
    pub fn expected_ebit_rate(&self, route: usize) -> f64 {
        let (local, remote) = match route {
            0 => (DetectorId::A1, DetectorId::B2),
            _ => (DetectorId::B1, DetectorId::A2),
        };
        self.pair_rate
            * crate::link::db_to_transmittance(self.link_loss_db[route] + self.local_loss_db)
            * self.detector(local).efficiency
            * self.detector(remote).efficiency
    }

    /// Generator for instance `index`: the scenario seed with a per-instance stream.
    pub fn instance_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Everything recorded about one simulated exchange.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub index: usize,
    pub offset_s: f64,
    pub skew: f64,
    pub estimate: Option<OffsetEstimate>,
    pub success: bool,
    pub snr: [Option<f64>; 2],
    pub coincidences: [usize; 2],
}

impl InstanceOutcome {
    pub fn error_s(&self) -> Option<f64> {
        self.estimate.and_then(|e| e.error_s)
    }
}

/// Raw data of one exchange: the true clock error and both routes' detections.
#[derive(Clone, Debug, PartialEq)]
pub struct Exchange {
    pub offset_s: f64,
    pub skew: f64,
    /// A-to-B then B-to-A.
    pub routes: [PairDetection; 2],
}

impl Exchange {
    /// The four series in `DetectorId::ALL` order.
    pub fn series(&self) -> [&TimestampSeries; 4] {
        [&self.routes[0].local, &self.routes[1].remote, &self.routes[1].local, &self.routes[0].remote]
    }
}

/// Simulates the timestamps of instance `index` without correlating them.
pub fn simulate_exchange(sc: &StaticScenario, index: usize) -> Result<Exchange> {
    let mut rng = sc.instance_rng(index);
    let offset_s = rng.gen::<f64>() * sc.max_offset_s;
    let skew = match sc.skew_mode {
        SkewMode::RandomSign => {
            if rng.gen::<bool>() {
                sc.skew
            } else {
                -sc.skew
            }
        }
        SkewMode::Uniform => (2.0 * rng.gen::<f64>() - 1.0) * sc.skew,
    };
    let clock_a = ClockModel::ideal();
    let clock_b = ClockModel::new(offset_s, skew);

    let receiver = |id: DetectorId, loss_db: f64, clock: ClockModel, delay_s: f64| Receiver {
        id,
        loss_db,
        detector: sc.detector(id),
        clock,
        delay_s,
    };
    let delay = sc.propagation_delay_s;
    let plan = [
        (
            receiver(DetectorId::A1, sc.local_loss_db, clock_a, 0.0),
            receiver(DetectorId::B2, sc.link_loss_db[0], clock_b, delay),
        ),
        (
            receiver(DetectorId::B1, sc.local_loss_db, clock_b, 0.0),
            receiver(DetectorId::A2, sc.link_loss_db[1], clock_a, delay),
        ),
    ];
    let mut detect = |local: &Receiver, remote: &Receiver| -> Result<PairDetection> {
        let births = generate_pair_events(sc.pair_rate, sc.acquisition_s, &mut rng)?;
        detect_pairs(&births, local, remote, sc.acquisition_s, &mut rng)
    };
    let ab = detect(&plan[0].0, &plan[0].1)?;
    let ba = detect(&plan[1].0, &plan[1].1)?;
    Ok(Exchange { offset_s, skew, routes: [ab, ba] })
}

/// Runs instance `index` of the scenario.
pub fn run_instance(sc: &StaticScenario, index: usize) -> Result<InstanceOutcome> {
    let corr = sc.correlator()?;
    let ex = simulate_exchange(sc, index)?;
    let mut peaks = Vec::with_capacity(2);
    let mut snr = [None; 2];
    for (r, det) in ex.routes.iter().enumerate() {
        match cross_correlate(&det.local, &det.remote, &corr) {
            Ok(c) => {
                snr[r] = Some(c.snr);
                peaks.push(c);
            }
            Err(QcsError::NoPeak(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let estimate = match peaks.as_slice() {
        [ab, ba] => Some(estimate_offset(ab, ba).judged(ex.offset_s, sc.success_threshold_s)),
        _ => None,
    };
    Ok(InstanceOutcome {
        index,
        offset_s: ex.offset_s,
        skew: ex.skew,
        success: estimate.and_then(|e| e.success).unwrap_or(false),
        estimate,
        snr,
        coincidences: [ex.routes[0].coincidences, ex.routes[1].coincidences],
    })
}

/// Aggregate row in the column order of the summary CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticSummary {
    pub loss_db: f64,
    pub success_pct: f64,
    pub mean_ebit_rate: f64,
    pub snr_mean: f64,
    pub snr_sd: f64,
    pub err_mean_ps: f64,
    pub err_sd_ps: f64,
    pub err_success_mean_ps: f64,
    pub err_success_sd_ps: f64,
    pub acquisition_s: f64,
    pub instances: usize,
}

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "loss_db",
    "success_pct",
    "mean_ebit_rate",
    "snr_mean",
    "snr_sd",
    "err_mean_ps",
    "err_sd_ps",
    "err_success_mean_ps",
    "err_success_sd_ps",
    "acquisition_s",
    "instances",
];

impl StaticSummary {
    pub fn record(&self) -> Vec<String> {
        [
            self.loss_db,
            self.success_pct,
            self.mean_ebit_rate,
            self.snr_mean,
            self.snr_sd,
            self.err_mean_ps,
            self.err_sd_ps,
            self.err_success_mean_ps,
            self.err_success_sd_ps,
            self.acquisition_s,
        ]
        .iter()
        .map(|v| v.to_string())
        .chain(std::iter::once(self.instances.to_string()))
        .collect()
    }
}

/// Sample mean and standard deviation; NaN for an empty sample.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Reduces instance outcomes to a summary row. Error statistics use the
/// magnitude of the offset error, in picoseconds.
pub fn summarize(sc: &StaticScenario, outcomes: &[InstanceOutcome]) -> StaticSummary {
    let n = outcomes.len();
    let successes = outcomes.iter().filter(|o| o.success).count();
    let total_coinc: usize = outcomes.iter().map(|o| o.coincidences[0] + o.coincidences[1]).sum();
    let snrs: Vec<f64> = outcomes.iter().flat_map(|o| o.snr.iter().flatten().copied()).collect();
    let errs: Vec<f64> = outcomes.iter().filter_map(|o| o.error_s()).map(|e| e.abs() * 1e12).collect();
    let ok_errs: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.success)
        .filter_map(|o| o.error_s())
        .map(|e| e.abs() * 1e12)
        .collect();
    let (snr_mean, snr_sd) = mean_sd(&snrs);
    let (err_mean_ps, err_sd_ps) = mean_sd(&errs);
    let (err_success_mean_ps, err_success_sd_ps) = mean_sd(&ok_errs);
    StaticSummary {
        loss_db: 0.5 * (sc.link_loss_db[0] + sc.link_loss_db[1]),
        success_pct: 100.0 * successes as f64 / n.max(1) as f64,
        mean_ebit_rate: total_coinc as f64 / (2.0 * n.max(1) as f64 * sc.acquisition_s),
        snr_mean,
        snr_sd,
        err_mean_ps,
        err_sd_ps,
        err_success_mean_ps,
        err_success_sd_ps,
        acquisition_s: sc.acquisition_s,
        instances: n,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaticRun {
    pub summary: StaticSummary,
    pub outcomes: Vec<InstanceOutcome>,
}

/// Runs every instance (in parallel) and summarizes them in index order.
pub fn run_static_scenario(sc: &StaticScenario) -> Result<StaticRun> {
    sc.validate()?;
    let outcomes = (0..sc.n_instances)
        .into_par_iter()
        .map(|i| run_instance(sc, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(StaticRun { summary: summarize(sc, &outcomes), outcomes })
}
