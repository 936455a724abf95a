//! Photon-level simulation of the two-way offset exchange.
//!
//! Each party runs a pair source, keeps one photon on a local detector and
//! sends the other to the partner. Correlating local against remote
//! timestamps in both directions yields two peak lags whose half-difference
//! is the clock offset and whose sum is the round-trip time.

pub mod clock;
pub mod correlate;
pub mod detector;
pub mod estimate;
pub mod series;
pub mod static_run;

pub use clock::{apply_skew_compensation, ClockModel};
pub use correlate::{cross_correlate, cross_correlate_dense, CorrelationResult, Correlator, Route};
pub use detector::{detect_pairs, generate_pair_events, transmit_and_detect, DetectorModel, PairDetection, Receiver};
pub use estimate::{estimate_from_lags, estimate_offset, OffsetEstimate};
pub use series::{read_dump, write_dump, DetectorId, TimestampSeries};
pub use static_run::{run_instance, run_static_scenario, simulate_exchange, Exchange, SkewMode, StaticRun, StaticScenario, StaticSummary, DEFAULT_FOLDS};
