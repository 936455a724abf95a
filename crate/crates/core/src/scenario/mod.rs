//! Scenario files: a strict TOML schema describing geometry, channel,
//! network, static Monte Carlo, sweep and shadow experiments, plus the
//! runners that turn a scenario into CSV/JSON tables.
//!
//! Unknown keys anywhere in the file are rejected so typos never silently
//! fall back to defaults.

mod run;
mod table;

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{QcsError, Result};
use crate::geo::{CircularOrbit, Constellation, GroundStation};
use crate::link::ChannelParams;
use crate::timestamps::detector::FWHM_PER_SIGMA;
use crate::timestamps::{DetectorModel, SkewMode, StaticScenario, DEFAULT_FOLDS};
use crate::traces::{LossAveraging, SweepSettings};

pub use run::{
    derive_seed, read_fom_csv, run_fom, run_shadow, run_static, run_sweep, run_sync, run_trace, AltitudeFit,
    Command, FomReport, RunOutput, StaticReport, SweepReport, FOM_COLUMNS,
};
pub use table::{Cell, Table};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub altitude_km: f64,
    /// Rotation of the plane away from polar, degrees.
    #[serde(default)]
    pub tilt_deg: f64,
    #[serde(default)]
    pub raan_deg: f64,
    #[serde(default)]
    pub phase_deg: f64,
    pub n_satellites: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    pub stations: Vec<GroundStation>,
    #[serde(default)]
    pub orbits: Vec<OrbitConfig>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub cutoffs: Vec<f64>,
    pub taus_s: Vec<f64>,
    pub span_s: f64,
    pub step_s: f64,
    /// Station pairs by name; all pairs in station order when empty.
    pub pairs: Vec<[String; 2]>,
    pub loss_averaging: LossAveraging,
    /// Also write the full trajectory dump from the `trace` command.
    pub trajectory: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            cutoffs: vec![200.0],
            taus_s: vec![100.0],
            span_s: 172_800.0,
            step_s: 1.0,
            pairs: Vec::new(),
            loss_averaging: LossAveraging::MeanOfDb,
            trajectory: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticConfig {
    pub name: String,
    pub losses_db: Vec<f64>,
    /// One run per acquisition time and loss.
    pub acquisition_s: Vec<f64>,
    pub pair_rate: f64,
    pub local_loss_db: f64,
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    /// Per-detector timing jitter, as a standard deviation. Mutually
    /// exclusive with `jitter_fwhm_ps`.
    pub jitter_sigma_ps: Option<f64>,
    pub jitter_fwhm_ps: Option<f64>,
    pub resolution_ps: f64,
    pub skew: f64,
    pub skew_mode: SkewMode,
    pub max_offset_s: f64,
    pub propagation_delay_s: f64,
    pub instances: usize,
    pub success_threshold_s: f64,
    pub lag_margin_s: f64,
    /// Frames the acquisition is folded into; 0 disables folding.
    pub folds: f64,
    /// Write the four timestamp series of instance 0 for every row.
    pub dump_timestamps: bool,
}

impl Default for StaticConfig {
    fn default() -> Self {
        StaticConfig {
            name: "static".into(),
            losses_db: Vec::new(),
            acquisition_s: vec![0.25],
            pair_rate: 1e7,
            local_loss_db: 0.0,
            efficiency: 0.5,
            dark_rate_hz: 1000.0,
            jitter_sigma_ps: None,
            jitter_fwhm_ps: None,
            resolution_ps: 50.0,
            skew: 3e-10,
            skew_mode: SkewMode::RandomSign,
            max_offset_s: 1e-6,
            propagation_delay_s: 0.0,
            instances: 100,
            success_threshold_s: 1e-9,
            lag_margin_s: 2e-6,
            folds: DEFAULT_FOLDS,
            dump_timestamps: false,
        }
    }
}

impl StaticConfig {
    pub fn detector(&self) -> Result<DetectorModel> {
        let fwhm_ps = match (self.jitter_sigma_ps, self.jitter_fwhm_ps) {
            (Some(_), Some(_)) => {
                return Err(QcsError::Config(format!(
                    "static block {}: give jitter_sigma_ps or jitter_fwhm_ps, not both",
                    self.name
                )))
            }
            (Some(s), None) => s * FWHM_PER_SIGMA,
            (None, Some(f)) => f,
            (None, None) => 0.0,
        };
        DetectorModel::new(self.efficiency, self.dark_rate_hz, fwhm_ps * 1e-12, self.resolution_ps * 1e-12)
    }

    /// The scenario for one (acquisition, loss) cell.
    pub fn scenario(&self, loss_db: f64, acquisition_s: f64, seed: u64) -> Result<StaticScenario> {
        let detector = self.detector()?;
        let sc = StaticScenario {
            pair_rate: self.pair_rate,
            link_loss_db: [loss_db; 2],
            local_loss_db: self.local_loss_db,
            detectors: [detector; 4],
            skew: self.skew,
            skew_mode: self.skew_mode,
            max_offset_s: self.max_offset_s,
            propagation_delay_s: self.propagation_delay_s,
            acquisition_s,
            n_instances: self.instances,
            seed,
            success_threshold_s: self.success_threshold_s,
            lag_margin_s: self.lag_margin_s,
            folds: (self.folds > 0.0).then_some(self.folds),
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub altitudes_km: Vec<f64>,
    pub separations_km: Vec<f64>,
    pub cutoff: f64,
    pub tau_s: f64,
    pub step_s: f64,
    pub span_s: f64,
    /// Resolution of the critical-separation search; 0 skips it.
    pub critical_tolerance_km: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            altitudes_km: vec![500.0],
            separations_km: Vec::new(),
            cutoff: 200.0,
            tau_s: 0.0,
            step_s: 1.0,
            span_s: 86_400.0,
            critical_tolerance_km: 10.0,
        }
    }
}

impl SweepConfig {
    pub fn settings(&self) -> SweepSettings {
        SweepSettings { cutoff: self.cutoff, tau_s: self.tau_s, step_s: self.step_s, span_s: self.span_s }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowConfig {
    pub altitudes_km: Vec<f64>,
    pub cutoffs: Vec<f64>,
    pub taus_s: Vec<f64>,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig { altitudes_km: vec![500.0], cutoffs: vec![200.0], taus_s: vec![0.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), json: false }
    }
}

/// A parsed scenario file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default, rename = "static")]
    pub static_runs: Vec<StaticConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub shadow: ShadowConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Scenario {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| QcsError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            QcsError::Config(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        for gs in &self.geometry.stations {
            gs.validate()?;
        }
        let mut names: Vec<&str> = self.geometry.stations.iter().map(|g| g.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(QcsError::Config("station names must be unique".into()));
        }
        self.constellation()?;
        self.pairs()?;
        let n = &self.network;
        if !(n.step_s > 0.0) || !(n.span_s >= n.step_s) {
            return Err(QcsError::Config("network: need step_s > 0 and span_s >= step_s".into()));
        }
        if n.taus_s.iter().any(|t| !(*t >= 0.0)) || n.cutoffs.iter().any(|c| !(*c >= 0.0)) {
            return Err(QcsError::Config("network: cut-offs and holdover times must be >= 0".into()));
        }
        for s in &self.static_runs {
            for &ta in &s.acquisition_s {
                for &loss in &s.losses_db {
                    s.scenario(loss, ta, 0)?;
                }
            }
        }
        if !(self.sweep.step_s > 0.0) || !(self.sweep.span_s >= self.sweep.step_s) {
            return Err(QcsError::Config("sweep: need step_s > 0 and span_s >= step_s".into()));
        }
        Ok(())
    }

    pub fn constellation(&self) -> Result<Constellation> {
        let orbits = self
            .geometry
            .orbits
            .iter()
            .map(|o| CircularOrbit::new(o.altitude_km * 1e3, o.tilt_deg, o.raan_deg, o.phase_deg, o.n_satellites))
            .collect::<Result<Vec<_>>>()?;
        Constellation::new(orbits)
    }

    pub fn station(&self, name: &str) -> Result<&GroundStation> {
        self.geometry
            .stations
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| QcsError::UnknownStation(name.to_string()))
    }

    /// Station index pairs to analyse.
    pub fn pairs(&self) -> Result<Vec<(usize, usize)>> {
        let st = &self.geometry.stations;
        if self.network.pairs.is_empty() {
            return Ok((0..st.len()).flat_map(|i| (i + 1..st.len()).map(move |j| (i, j))).collect());
        }
        self.network
            .pairs
            .iter()
            .map(|[a, b]| {
                let i = st.iter().position(|g| &g.name == a);
                let j = st.iter().position(|g| &g.name == b);
                match (i, j) {
                    (Some(i), Some(j)) if i != j => Ok((i, j)),
                    (Some(_), Some(_)) => Err(QcsError::Config(format!("pair {a}/{b} repeats a station"))),
                    (None, _) => Err(QcsError::UnknownStation(a.clone())),
                    (_, None) => Err(QcsError::UnknownStation(b.clone())),
                }
            })
            .collect()
    }
}
