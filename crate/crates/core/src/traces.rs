//! Connection traces, holdover-windowed sync traces, network figures of merit,
//! satellite shadows and the separation sweep.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QcsError, Result};
use crate::geo::{self, CircularOrbit, Constellation, GroundStation, EARTH_RADIUS_M};
use crate::link::{self, ChannelParams, Direction};

/// Per-satellite ebit rates seen by one station on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionTrace {
    pub station: String,
    pub direction: Direction,
    pub t0_s: f64,
    pub step_s: f64,
    pub n_samples: usize,
    pub n_sats: usize,
    /// Sample-major: `rates[k * n_sats + j]` is satellite `j` at sample `k`.
    pub rates: Vec<f64>,
}

impl ConnectionTrace {
    pub fn time(&self, k: usize) -> f64 {
        self.t0_s + k as f64 * self.step_s
    }

    pub fn rate(&self, k: usize, sat: usize) -> f64 {
        self.rates[k * self.n_sats + sat]
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.rates[k * self.n_sats..(k + 1) * self.n_sats]
    }

    pub fn span_s(&self) -> f64 {
        self.n_samples as f64 * self.step_s
    }

    /// Fraction of samples where at least one satellite exceeds `cutoff`.
    pub fn connected_fraction(&self, cutoff: f64) -> f64 {
        let on = (0..self.n_samples)
            .filter(|&k| self.sample(k).iter().any(|&r| r > cutoff))
            .count();
        on as f64 / self.n_samples as f64
    }

    fn same_grid(&self, other: &ConnectionTrace) -> Result<()> {
        if self.n_samples != other.n_samples
            || self.n_sats != other.n_sats
            || self.step_s != other.step_s
            || self.t0_s != other.t0_s
        {
            return Err(QcsError::GridMismatch(format!(
                "{} ({} samples x {} sats, step {}) vs {} ({} samples x {} sats, step {})",
                self.station,
                self.n_samples,
                self.n_sats,
                self.step_s,
                other.station,
                other.n_samples,
                other.n_sats,
                other.step_s
            )));
        }
        Ok(())
    }
}

fn check_grid(span_s: f64, step_s: f64) -> Result<()> {
    if !(step_s > 0.0) || !(span_s >= step_s) {
        return Err(QcsError::Config(format!(
            "need step > 0 and span >= step, got span {span_s} step {step_s}"
        )));
    }
    Ok(())
}

/// Samples the rate between `gs` and every satellite over `[0, span_s)`.
pub fn build_connection_trace(
    constellation: &Constellation,
    gs: &GroundStation,
    params: &ChannelParams,
    span_s: f64,
    step_s: f64,
    direction: Direction,
) -> Result<ConnectionTrace> {
    build_connection_trace_from(constellation, gs, params, 0.0, span_s, step_s, direction)
}

/// As [`build_connection_trace`] with the grid starting at `t0_s`.
pub fn build_connection_trace_from(
    constellation: &Constellation,
    gs: &GroundStation,
    params: &ChannelParams,
    t0_s: f64,
    span_s: f64,
    step_s: f64,
    direction: Direction,
) -> Result<ConnectionTrace> {
    let [trace] = build_traces(constellation, gs, params, t0_s, span_s, step_s, [direction])?;
    Ok(trace)
}

/// Uplink and downlink traces for one station, sharing the geometry pass.
pub fn build_up_down_traces(
    constellation: &Constellation,
    gs: &GroundStation,
    params: &ChannelParams,
    span_s: f64,
    step_s: f64,
) -> Result<(ConnectionTrace, ConnectionTrace)> {
    let [up, down] =
        build_traces(constellation, gs, params, 0.0, span_s, step_s, [Direction::Up, Direction::Down])?;
    Ok((up, down))
}

fn build_traces<const D: usize>(
    constellation: &Constellation,
    gs: &GroundStation,
    params: &ChannelParams,
    t0_s: f64,
    span_s: f64,
    step_s: f64,
    directions: [Direction; D],
) -> Result<[ConnectionTrace; D]> {
    check_grid(span_s, step_s)?;
    params.validate()?;
    let n_samples = geo::sample_count(span_s, step_s);
    let n_sats = constellation.n_satellites();
    let mask = params.max_zenith_rad();

    let mut buffers: Vec<Vec<f64>> = (0..D).map(|_| vec![0.0; n_samples * n_sats]).collect();
    if n_sats > 0 {
        let per_sample: Vec<Vec<[f64; D]>> = (0..n_samples)
            .into_par_iter()
            .map(|k| {
                let t = t0_s + k as f64 * step_s;
                let gpos = gs.position(t);
                constellation
                    .positions(t)
                    .iter()
                    .map(|sp| {
                        let g = geo::link_geometry_between(sp, &gpos, mask);
                        directions.map(|d| link::ebit_rate(&g, params, d))
                    })
                    .collect()
            })
            .collect();
        for (k, row) in per_sample.iter().enumerate() {
            for (j, rates) in row.iter().enumerate() {
                for d in 0..D {
                    buffers[d][k * n_sats + j] = rates[d];
                }
            }
        }
    }

    let mut buffers = buffers.into_iter();
    Ok(directions.map(|direction| ConnectionTrace {
        station: gs.name.clone(),
        direction,
        t0_s,
        step_s,
        n_samples,
        n_sats,
        rates: buffers.next().unwrap_or_default(),
    }))
}

/// Holdover-windowed sync trace for a station pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SyncTrace {
    pub gs1: String,
    pub gs2: String,
    pub tau_s: f64,
    pub cutoff: f64,
    pub t0_s: f64,
    pub step_s: f64,
    pub q1: Vec<f64>,
    pub sat1: Vec<Option<usize>>,
    pub q2: Vec<f64>,
    pub sat2: Vec<Option<usize>>,
}

impl SyncTrace {
    pub fn n_samples(&self) -> usize {
        self.q1.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0_s + k as f64 * self.step_s
    }

    /// Sample `k` counts as connected when either station holds a sync link.
    pub fn connected(&self, k: usize) -> bool {
        self.q1[k] > 0.0 || self.q2[k] > 0.0
    }
}

/// Half-width of the holdover window in samples. Infinite holdover covers
/// the whole trace.
fn window_samples(tau_s: f64, step_s: f64, n: usize) -> usize {
    if tau_s.is_infinite() {
        return n;
    }
    let w = (tau_s / step_s + 1e-9).floor();
    if w >= n as f64 {
        n
    } else {
        w as usize
    }
}

/// `own` keeps a satellite's rate when it clears `cutoff` and the partner
/// clears `cutoff` on the same satellite somewhere within `±w` samples.
fn windowed_max(
    own: &ConnectionTrace,
    partner: &ConnectionTrace,
    w: usize,
    cutoff: f64,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = own.n_samples;
    let m = own.n_sats;
    // prefix[j][k] = number of partner samples < k above cutoff on satellite j
    let prefix: Vec<Vec<u32>> = (0..m)
        .map(|j| {
            let mut p = Vec::with_capacity(n + 1);
            let mut acc = 0u32;
            p.push(0);
            for k in 0..n {
                acc += u32::from(partner.rate(k, j) > cutoff);
                p.push(acc);
            }
            p
        })
        .collect();

    let mut q = vec![0.0; n];
    let mut sat = vec![None; n];
    for k in 0..n {
        let lo = k.saturating_sub(w);
        let hi = (k + w + 1).min(n);
        let mut best = 0.0;
        let mut best_j = None;
        for (j, p) in prefix.iter().enumerate() {
            let r = own.rate(k, j);
            // strict comparison keeps the lowest index on ties
            if r > cutoff && r > best && p[hi] > p[lo] {
                best = r;
                best_j = Some(j);
            }
        }
        q[k] = best;
        sat[k] = best_j;
    }
    (q, sat)
}

/// Applies the common-satellite rule with holdover `tau_s` and cut-off rate.
pub fn build_sync_trace(
    trace1: &ConnectionTrace,
    trace2: &ConnectionTrace,
    tau_s: f64,
    cutoff: f64,
) -> Result<SyncTrace> {
    trace1.same_grid(trace2)?;
    if !(tau_s >= 0.0) {
        return Err(QcsError::Config(format!("holdover must be >= 0, got {tau_s}")));
    }
    let w = window_samples(tau_s, trace1.step_s, trace1.n_samples);
    let (q1, sat1) = windowed_max(trace1, trace2, w, cutoff);
    let (q2, sat2) = windowed_max(trace2, trace1, w, cutoff);
    Ok(SyncTrace {
        gs1: trace1.station.clone(),
        gs2: trace2.station.clone(),
        tau_s,
        cutoff,
        t0_s: trace1.t0_s,
        step_s: trace1.step_s,
        q1,
        sat1,
        q2,
        sat2,
    })
}

/// How per-sample losses are combined into a single figure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossAveraging {
    /// Arithmetic mean of the per-sample dB values.
    #[default]
    MeanOfDb,
    /// dB of the arithmetic mean rate.
    DbOfMean,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiguresOfMerit {
    pub gs1: String,
    pub gs2: String,
    pub cutoff: f64,
    pub tau_s: f64,
    pub avg_uplink_loss_db: [f64; 2],
    pub avg_downlink_loss_db: [f64; 2],
    pub connected_fraction: f64,
    pub longest_gap_s: f64,
    pub span_s: f64,
}

impl FiguresOfMerit {
    pub fn percent_connected(&self) -> f64 {
        100.0 * self.connected_fraction
    }

    pub fn longest_gap_h(&self) -> f64 {
        self.longest_gap_s / 3600.0
    }

    pub fn pair_label(&self) -> String {
        format!("{}/{}", self.gs1, self.gs2)
    }
}

fn average_loss(rates: &[f64], source_rate: f64, mode: LossAveraging) -> f64 {
    if rates.is_empty() {
        return f64::INFINITY;
    }
    match mode {
        LossAveraging::MeanOfDb => {
            rates.iter().map(|&r| link::loss_db(r, source_rate)).sum::<f64>() / rates.len() as f64
        }
        LossAveraging::DbOfMean => {
            link::loss_db(rates.iter().sum::<f64>() / rates.len() as f64, source_rate)
        }
    }
}

/// Station-level losses over the samples where that station holds a sync link.
fn station_losses(
    q: &[f64],
    sat: &[Option<usize>],
    down: &ConnectionTrace,
    source_rate: f64,
    mode: LossAveraging,
) -> (f64, f64) {
    let mut ups = Vec::new();
    let mut downs = Vec::new();
    for (k, (&r, s)) in q.iter().zip(sat).enumerate() {
        if let Some(j) = *s {
            ups.push(r);
            downs.push(down.rate(k, j));
        }
    }
    (average_loss(&ups, source_rate, mode), average_loss(&downs, source_rate, mode))
}

/// Figures of merit for one pair. `uplinks`/`downlinks` hold the two stations'
/// traces in pair order; the sync trace must have been built from the uplinks.
pub fn figures_of_merit(
    sync: &SyncTrace,
    uplinks: [&ConnectionTrace; 2],
    downlinks: [&ConnectionTrace; 2],
    source_rate: f64,
    mode: LossAveraging,
) -> Result<FiguresOfMerit> {
    let n = sync.n_samples();
    for tr in uplinks.iter().chain(downlinks.iter()) {
        if tr.n_samples != n || tr.step_s != sync.step_s {
            return Err(QcsError::GridMismatch(format!(
                "trace {} does not match sync trace {}/{}",
                tr.station, sync.gs1, sync.gs2
            )));
        }
    }
    let (up1, down1) = station_losses(&sync.q1, &sync.sat1, downlinks[0], source_rate, mode);
    let (up2, down2) = station_losses(&sync.q2, &sync.sat2, downlinks[1], source_rate, mode);

    let mut connected = 0usize;
    let mut run = 0usize;
    let mut longest = 0usize;
    for k in 0..n {
        if sync.connected(k) {
            connected += 1;
            run = 0;
        } else {
            run += 1;
            longest = longest.max(run);
        }
    }

    Ok(FiguresOfMerit {
        gs1: sync.gs1.clone(),
        gs2: sync.gs2.clone(),
        cutoff: sync.cutoff,
        tau_s: sync.tau_s,
        avg_uplink_loss_db: [up1, up2],
        avg_downlink_loss_db: [down1, down2],
        connected_fraction: connected as f64 / n as f64,
        longest_gap_s: longest as f64 * sync.step_s,
        span_s: n as f64 * sync.step_s,
    })
}

/// Ground footprint where a satellite delivers at least the cut-off rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShadowSpec {
    pub altitude_m: f64,
    pub cutoff: f64,
    pub tau_s: f64,
    pub diameter_deg: f64,
    pub elongated_deg: f64,
}

/// Ground-track angular rate of the satellite, degrees per second.
pub fn track_rate_deg_s(altitude_m: f64) -> f64 {
    360.0 / geo::period_at_altitude(altitude_m)
}

fn min_rate_at(params: &ChannelParams, altitude_m: f64, gamma: f64) -> f64 {
    let up = link::rate_at_central_angle(params, altitude_m, gamma, Direction::Up);
    let down = link::rate_at_central_angle(params, altitude_m, gamma, Direction::Down);
    up.min(down)
}

/// Central-angle radius (rad) where `rate_fn` drops to `cutoff`. The rate is
/// non-increasing in central angle, so bisection on the predicate is exact up
/// to floating-point resolution.
fn edge_radius(cutoff: f64, rate_fn: impl Fn(f64) -> f64) -> Option<f64> {
    if !(rate_fn(0.0) > cutoff) {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate_fn(mid) > cutoff {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Some(lo)
}

pub fn shadow(params: &ChannelParams, altitude_m: f64, cutoff: f64, tau_s: f64) -> Result<ShadowSpec> {
    params.validate()?;
    let radius = edge_radius(cutoff, |g| min_rate_at(params, altitude_m, g)).ok_or_else(|| {
        QcsError::EmptyShadow { cutoff, zenith_rate: min_rate_at(params, altitude_m, 0.0) }
    })?;
    let diameter_deg = 2.0 * radius.to_degrees();
    Ok(ShadowSpec {
        altitude_m,
        cutoff,
        tau_s,
        diameter_deg,
        elongated_deg: diameter_deg + track_rate_deg_s(altitude_m) * tau_s,
    })
}

/// One cell of the altitude/separation sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub altitude_m: f64,
    pub separation_m: f64,
    /// Time-average of the product of the two stations' sync-trace rates.
    pub mean_rate_product: f64,
    /// Connected time over one orbital period centred on the overhead pass,
    /// divided by that period.
    pub connected_ratio: f64,
}

/// Settings shared by every cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub cutoff: f64,
    pub tau_s: f64,
    pub step_s: f64,
    /// Averaging span for the rate product.
    pub span_s: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { cutoff: 200.0, tau_s: 0.0, step_s: 1.0, span_s: 86_400.0 }
    }
}

/// Two equatorial stations straddling longitude 0.
pub fn equatorial_pair(separation_m: f64) -> [GroundStation; 2] {
    let half = (separation_m / EARTH_RADIUS_M).to_degrees() / 2.0;
    [
        GroundStation { name: "west".into(), lat_deg: 0.0, lon_deg: -half, altitude_m: 0.0 },
        GroundStation { name: "east".into(), lat_deg: 0.0, lon_deg: half, altitude_m: 0.0 },
    ]
}

fn pair_sync(
    constellation: &Constellation,
    stations: &[GroundStation; 2],
    params: &ChannelParams,
    settings: &SweepSettings,
    t0_s: f64,
    span_s: f64,
) -> Result<SyncTrace> {
    let a = build_connection_trace_from(
        constellation, &stations[0], params, t0_s, span_s, settings.step_s, Direction::Up,
    )?;
    let b = build_connection_trace_from(
        constellation, &stations[1], params, t0_s, span_s, settings.step_s, Direction::Up,
    )?;
    build_sync_trace(&a, &b, settings.tau_s, settings.cutoff)
}

/// Time-averaged rate product for two equatorial stations and one equatorial satellite.
pub fn mean_rate_product(
    params: &ChannelParams,
    altitude_m: f64,
    separation_m: f64,
    settings: &SweepSettings,
) -> Result<f64> {
    let constellation = Constellation::new(vec![CircularOrbit::equatorial(altitude_m, 0.0)?])?;
    let stations = equatorial_pair(separation_m);
    let sync = pair_sync(&constellation, &stations, params, settings, 0.0, settings.span_s)?;
    let total: f64 = sync.q1.iter().zip(&sync.q2).map(|(a, b)| a * b).sum();
    Ok(total / sync.n_samples() as f64)
}

/// Connected-time ratio over one orbital period centred on the moment the
/// satellite is above the stations' midpoint.
pub fn pass_connected_ratio(
    params: &ChannelParams,
    altitude_m: f64,
    separation_m: f64,
    settings: &SweepSettings,
) -> Result<f64> {
    let orbit = CircularOrbit::equatorial(altitude_m, 0.0)?;
    let period = orbit.period_s();
    let constellation = Constellation::new(vec![orbit])?;
    let stations = equatorial_pair(separation_m);
    let sync = pair_sync(&constellation, &stations, params, settings, -period / 2.0, period)?;
    let on = (0..sync.n_samples()).filter(|&k| sync.connected(k)).count();
    Ok(on as f64 * settings.step_s / period)
}

pub fn sweep_separation(
    altitudes_m: &[f64],
    separations_m: &[f64],
    params: &ChannelParams,
    settings: &SweepSettings,
) -> Result<Vec<SweepPoint>> {
    let cells: Vec<(f64, f64)> = altitudes_m
        .iter()
        .flat_map(|&h| separations_m.iter().map(move |&d| (h, d)))
        .collect();
    cells
        .into_par_iter()
        .map(|(h, d)| {
            Ok(SweepPoint {
                altitude_m: h,
                separation_m: d,
                mean_rate_product: mean_rate_product(params, h, d, settings)?,
                connected_ratio: pass_connected_ratio(params, h, d, settings)?,
            })
        })
        .collect()
}

/// Smallest separation (to within `tolerance_m`) beyond which the averaged
/// rate product vanishes, found by bisection on the simulated average.
pub fn critical_separation(
    params: &ChannelParams,
    altitude_m: f64,
    settings: &SweepSettings,
    tolerance_m: f64,
) -> Result<f64> {
    let positive = |d: f64| mean_rate_product(params, altitude_m, d, settings).map(|v| v > 0.0);
    if !positive(0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = EARTH_RADIUS_M * std::f64::consts::PI;
    while hi - lo > tolerance_m {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Least-squares line through `(x, y)`; returns slope, intercept and R^2.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, intercept, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(name: &str, rows: &[&[f64]]) -> ConnectionTrace {
        ConnectionTrace {
            station: name.into(),
            direction: Direction::Up,
            t0_s: 0.0,
            step_s: 1.0,
            n_samples: rows.len(),
            n_sats: rows[0].len(),
            rates: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    #[test]
    fn simultaneous_link_passes_through() {
        let a = trace("a", &[&[0.0], &[300.0], &[0.0]]);
        let b = trace("b", &[&[0.0], &[250.0], &[0.0]]);
        let s = build_sync_trace(&a, &b, 0.0, 200.0).unwrap();
        assert_eq!(s.q1, vec![0.0, 300.0, 0.0]);
        assert_eq!(s.q2, vec![0.0, 250.0, 0.0]);
    }

    #[test]
    fn holdover_bridges_gap() {
        let a = trace("a", &[&[300.0], &[0.0], &[0.0]]);
        let b = trace("b", &[&[0.0], &[0.0], &[300.0]]);
        assert!(build_sync_trace(&a, &b, 1.0, 200.0).unwrap().q1.iter().all(|&q| q == 0.0));
        let s = build_sync_trace(&a, &b, 2.0, 200.0).unwrap();
        assert_eq!(s.q1[0], 300.0);
        assert_eq!(s.q2[2], 300.0);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let a = trace("a", &[&[300.0, 300.0]]);
        let b = trace("b", &[&[300.0, 300.0]]);
        let s = build_sync_trace(&a, &b, 0.0, 200.0).unwrap();
        assert_eq!(s.sat1[0], Some(0));
    }

    #[test]
    fn mismatched_grids() {
        let a = trace("a", &[&[1.0], &[1.0]]);
        let b = trace("b", &[&[1.0]]);
        assert!(matches!(build_sync_trace(&a, &b, 0.0, 0.5), Err(QcsError::GridMismatch(_))));
    }

    #[test]
    fn fit_of_line_is_exact() {
        let (m, c, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
