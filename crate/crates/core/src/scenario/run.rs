use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::table::{Cell, Table};
use super::Scenario;
use crate::error::{QcsError, Result};
use crate::geo;
use crate::timestamps::{self, run_static_scenario, simulate_exchange, StaticSummary};
use crate::traces::{self, ConnectionTrace, FiguresOfMerit, ShadowSpec, SweepPoint};

/// The tool's subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Trace,
    Sync,
    Fom,
    Static,
    Sweep,
    Shadow,
}

/// Tables, raw files and warnings produced by one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub files: Vec<(String, Vec<u8>)>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn save(&self, dir: &Path, json: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            t.save(dir, json)?;
        }
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

impl Command {
    pub fn run(self, sc: &Scenario) -> Result<RunOutput> {
        match self {
            Command::Trace => run_trace(sc),
            Command::Sync => run_sync(sc),
            Command::Fom => run_fom(sc).map(|r| r.output),
            Command::Static => run_static(sc).map(|r| r.output),
            Command::Sweep => run_sweep(sc).map(|r| r.output),
            Command::Shadow => run_shadow(sc).map(|(_, out)| out),
        }
    }
}

fn label(v: f64) -> String {
    v.to_string()
}

/// Uplink and downlink traces for every station in the scenario.
fn station_traces(sc: &Scenario) -> Result<Vec<(ConnectionTrace, ConnectionTrace)>> {
    let constellation = sc.constellation()?;
    sc.geometry
        .stations
        .iter()
        .map(|gs| {
            traces::build_up_down_traces(&constellation, gs, &sc.channel, sc.network.span_s, sc.network.step_s)
        })
        .collect()
}

fn empty_warning(sc: &Scenario, out: &mut RunOutput) -> Result<()> {
    if sc.constellation()?.is_empty() {
        out.warnings.push("constellation is empty; every trace is zero".into());
    }
    Ok(())
}

/// Connection traces per station and direction, plus a connectivity summary.
pub fn run_trace(sc: &Scenario) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    empty_warning(sc, &mut out)?;
    let per_station = station_traces(sc)?;
    let days = sc.network.span_s / 86_400.0;
    let mut summary = Table::new(
        "trace_summary",
        &["station", "direction", "cutoff", "percent_connected", "connected_min_per_day"],
    );
    for (up, down) in &per_station {
        for tr in [up, down] {
            let mut t = Table::new(format!("trace_{}_{}", tr.station, tr.direction.as_str()), &["t_s", "sat_id", "rate"]);
            for k in 0..tr.n_samples {
                for (j, &r) in tr.sample(k).iter().enumerate() {
                    if r > 0.0 {
                        t.push(vec![tr.time(k).into(), j.into(), r.into()]);
                    }
                }
            }
            out.tables.push(t);
            for &cutoff in &sc.network.cutoffs {
                let f = tr.connected_fraction(cutoff);
                summary.push(vec![
                    tr.station.as_str().into(),
                    tr.direction.as_str().into(),
                    cutoff.into(),
                    (100.0 * f).into(),
                    (f * sc.network.span_s / 60.0 / days).into(),
                ]);
            }
        }
    }
    out.tables.push(summary);
    if sc.network.trajectory {
        let mut buf = Vec::new();
        geo::write_trajectory_csv(
            &mut buf,
            &sc.constellation()?,
            &sc.geometry.stations,
            sc.network.span_s,
            sc.network.step_s,
            sc.channel.max_zenith_rad(),
        )?;
        out.files.push(("trajectory.csv".into(), buf));
    }
    Ok(out)
}

/// Sync traces for every pair, cut-off and holdover time.
pub fn run_sync(sc: &Scenario) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    empty_warning(sc, &mut out)?;
    let per_station = station_traces(sc)?;
    for (i, j) in sc.pairs()? {
        for &cutoff in &sc.network.cutoffs {
            for &tau in &sc.network.taus_s {
                let s = traces::build_sync_trace(&per_station[i].0, &per_station[j].0, tau, cutoff)?;
                let mut t = Table::new(
                    format!("sync_{}_{}_rc{}_tau{}", s.gs1, s.gs2, label(cutoff), label(tau)),
                    &["t_s", "q1", "sat1", "q2", "sat2"],
                );
                let sat = |v: Option<usize>| v.map_or(Cell::Int(-1), Cell::from);
                for k in (0..s.n_samples()).filter(|&k| s.connected(k)) {
                    t.push(vec![s.time(k).into(), s.q1[k].into(), sat(s.sat1[k]), s.q2[k].into(), sat(s.sat2[k])]);
                }
                out.tables.push(t);
            }
        }
    }
    Ok(out)
}

pub const FOM_COLUMNS: [&str; 9] = [
    "cutoff",
    "tau_s",
    "pair",
    "up_loss_db_1",
    "up_loss_db_2",
    "down_loss_db_1",
    "down_loss_db_2",
    "percent_connected",
    "longest_gap_h",
];

pub struct FomReport {
    pub rows: Vec<FiguresOfMerit>,
    pub output: RunOutput,
}

impl FomReport {
    pub fn get(&self, gs1: &str, gs2: &str, cutoff: f64, tau_s: f64) -> Option<&FiguresOfMerit> {
        self.rows
            .iter()
            .find(|r| r.gs1 == gs1 && r.gs2 == gs2 && r.cutoff == cutoff && r.tau_s == tau_s)
    }
}

/// Figures of merit for every pair, cut-off and holdover time.
pub fn run_fom(sc: &Scenario) -> Result<FomReport> {
    let mut output = RunOutput::default();
    empty_warning(sc, &mut output)?;
    let per_station = station_traces(sc)?;
    let mut rows = Vec::new();
    let mut table = Table::new("fom", &FOM_COLUMNS);
    for &cutoff in &sc.network.cutoffs {
        for &tau in &sc.network.taus_s {
            for (i, j) in sc.pairs()? {
                let (up_i, down_i) = &per_station[i];
                let (up_j, down_j) = &per_station[j];
                let s = traces::build_sync_trace(up_i, up_j, tau, cutoff)?;
                let f = traces::figures_of_merit(
                    &s,
                    [up_i, up_j],
                    [down_i, down_j],
                    sc.channel.source_rate,
                    sc.network.loss_averaging,
                )?;
                table.push(vec![
                    cutoff.into(),
                    tau.into(),
                    f.pair_label().into(),
                    f.avg_uplink_loss_db[0].into(),
                    f.avg_uplink_loss_db[1].into(),
                    f.avg_downlink_loss_db[0].into(),
                    f.avg_downlink_loss_db[1].into(),
                    f.percent_connected().into(),
                    f.longest_gap_h().into(),
                ]);
                rows.push(f);
            }
        }
    }
    output.tables.push(table);
    Ok(FomReport { rows, output })
}

/// Seed of cell `cell` in static block `block`, derived from the scenario seed.
pub fn derive_seed(seed: u64, block: usize, cell: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((block as u64) << 32) | cell as u64);
    rng.next_u64()
}

pub struct StaticReport {
    /// One entry per static block: its name and summary rows.
    pub blocks: Vec<(String, Vec<StaticSummary>)>,
    pub output: RunOutput,
}

/// Runs every static block; one summary row per (acquisition, loss) cell.
pub fn run_static(sc: &Scenario) -> Result<StaticReport> {
    let mut output = RunOutput::default();
    let mut blocks = Vec::new();
    for (b, cfg) in sc.static_runs.iter().enumerate() {
        let mut table = Table::new(format!("static_{}", cfg.name), &timestamps::static_run::SUMMARY_COLUMNS);
        let mut rows = Vec::new();
        let cells = cfg.acquisition_s.iter().flat_map(|&ta| cfg.losses_db.iter().map(move |&l| (ta, l)));
        for (c, (ta, loss)) in cells.enumerate() {
            let run = cfg.scenario(loss, ta, derive_seed(sc.seed, b, c))?;
            let res = run_static_scenario(&run)?;
            table.push(res.summary.record().into_iter().map(Cell::Text).collect());
            if cfg.dump_timestamps {
                let ex = simulate_exchange(&run, 0)?;
                let mut buf = Vec::new();
                timestamps::write_dump(&mut buf, &ex.series())?;
                output.files.push((format!("timestamps_{}_{}dB_{}s.bin", cfg.name, label(loss), label(ta)), buf));
            }
            rows.push(res.summary);
        }
        output.tables.push(table);
        blocks.push((cfg.name.clone(), rows));
    }
    if blocks.is_empty() {
        output.warnings.push("scenario has no [[static]] blocks".into());
    }
    Ok(StaticReport { blocks, output })
}

/// Per-altitude fit of connected ratio against separation.
#[derive(Clone, Debug, PartialEq)]
pub struct AltitudeFit {
    pub altitude_m: f64,
    pub slope_per_km: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Points with a nonzero ratio that entered the fit.
    pub points: usize,
    pub critical_m: Option<f64>,
}

pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub fits: Vec<AltitudeFit>,
    pub output: RunOutput,
}

/// Separation sweep with per-altitude line fits and critical separations.
pub fn run_sweep(sc: &Scenario) -> Result<SweepReport> {
    let cfg = &sc.sweep;
    let settings = cfg.settings();
    let alts: Vec<f64> = cfg.altitudes_km.iter().map(|h| h * 1e3).collect();
    let seps: Vec<f64> = cfg.separations_km.iter().map(|d| d * 1e3).collect();
    let points = traces::sweep_separation(&alts, &seps, &sc.channel, &settings)?;

    let mut grid = Table::new("sweep", &["altitude_km", "separation_km", "mean_rate_product", "connected_ratio"]);
    for p in &points {
        grid.push(vec![
            (p.altitude_m / 1e3).into(),
            (p.separation_m / 1e3).into(),
            p.mean_rate_product.into(),
            p.connected_ratio.into(),
        ]);
    }

    let mut fits = Vec::new();
    let mut fit_table =
        Table::new("sweep_fit", &["altitude_km", "slope_per_km", "intercept", "r2", "points", "critical_km"]);
    for &h in &alts {
        let (x, y): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.altitude_m == h && p.connected_ratio > 0.0)
            .map(|p| (p.separation_m / 1e3, p.connected_ratio))
            .unzip();
        let (slope, intercept, r2) = traces::linear_fit(&x, &y).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        let critical_m = if cfg.critical_tolerance_km > 0.0 {
            Some(traces::critical_separation(&sc.channel, h, &settings, cfg.critical_tolerance_km * 1e3)?)
        } else {
            None
        };
        fit_table.push(vec![
            (h / 1e3).into(),
            slope.into(),
            intercept.into(),
            r2.into(),
            x.len().into(),
            critical_m.map_or(f64::NAN, |c| c / 1e3).into(),
        ]);
        fits.push(AltitudeFit { altitude_m: h, slope_per_km: slope, intercept, r2, points: x.len(), critical_m });
    }
    let output = RunOutput { tables: vec![grid, fit_table], ..RunOutput::default() };
    Ok(SweepReport { points, fits, output })
}

/// Shadow diameters and elongations over the configured grid.
pub fn run_shadow(sc: &Scenario) -> Result<(Vec<ShadowSpec>, RunOutput)> {
    let cfg = &sc.shadow;
    let mut specs = Vec::new();
    let mut t = Table::new("shadow", &["altitude_km", "cutoff", "tau_s", "diameter_deg", "elongated_deg"]);
    for &h in &cfg.altitudes_km {
        for &c in &cfg.cutoffs {
            for &tau in &cfg.taus_s {
                let s = traces::shadow(&sc.channel, h * 1e3, c, tau)?;
                t.push(vec![h.into(), c.into(), tau.into(), s.diameter_deg.into(), s.elongated_deg.into()]);
                specs.push(s);
            }
        }
    }
    Ok((specs, RunOutput { tables: vec![t], ..RunOutput::default() }))
}

/// Reads a figures-of-merit CSV back into rows.
pub fn read_fom_csv(text: &str) -> Result<Vec<FiguresOfMerit>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| QcsError::Config(format!("bad number in column {}", FOM_COLUMNS[i])))
        };
        let pair = rec.get(2).unwrap_or_default();
        let (gs1, gs2) = pair
            .split_once('/')
            .ok_or_else(|| QcsError::Config(format!("bad pair label {pair}")))?;
        let percent = num(7)?;
        let gap_h = num(8)?;
        rows.push(FiguresOfMerit {
            gs1: gs1.into(),
            gs2: gs2.into(),
            cutoff: num(0)?,
            tau_s: num(1)?,
            avg_uplink_loss_db: [num(3)?, num(4)?],
            avg_downlink_loss_db: [num(5)?, num(6)?],
            connected_fraction: percent / 100.0,
            longest_gap_s: gap_h * 3600.0,
            span_s: f64::NAN,
        });
    }
    Ok(rows)
}
