//! End-to-end acceptance gate, run without the test harness so its report
//! is never captured. Prints one PASS/FAIL line per criterion and
//! fails only when the set of failing criteria differs from the known set
//! below, so a regression on a passing criterion is caught and a fixed one
//! is noticed too.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qcs_sim::scenario::{self, Command, Scenario};
use qcs_sim::timestamps::{
    correlate, detect_pairs, generate_pair_events, run_instance, ClockModel, Correlator, DetectorId, DetectorModel,
    Receiver, StaticScenario, StaticSummary,
};
use qcs_sim::traces;

/// Criteria the model does not reach; the analysis lives in the project notes.
const KNOWN_FAILING: &[u32] = &[3, 5];

struct Gate {
    results: Vec<(u32, bool)>,
}

impl Gate {
    fn report(&mut self, id: u32, pass: bool, detail: String) {
        let tag = match (pass, KNOWN_FAILING.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("C{id:<2} {tag:<12} {detail}");
        self.results.push((id, pass));
    }
}

fn load(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&path).unwrap()
}

fn static_rows(name: &str) -> Vec<StaticSummary> {
    let report = scenario::run_static(&load(name)).unwrap();
    report.blocks.into_iter().next().unwrap().1
}

fn within(rows: &[StaticSummary], want: &[f64], tol: f64) -> (bool, String) {
    let mut ok = rows.len() == want.len();
    let mut parts = Vec::new();
    for (r, w) in rows.iter().zip(want) {
        let good = (r.success_pct - w).abs() <= tol;
        ok &= good;
        parts.push(format!("{}dB {:.0}/{:.0}{}", r.loss_db, r.success_pct, w, if good { "" } else { "!" }));
    }
    (ok, parts.join(" "))
}

fn ebit_accounting(gate: &mut Gate, rows: &[StaticSummary]) {
    let want = [995.0, 628.0, 396.0, 250.0, 158.0, 100.0, 63.0];
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, w) in rows.iter().zip(want) {
        let analytic = 1e7 * 10f64.powf(-r.loss_db / 10.0) * 0.25;
        let exposure = 2.0 * r.instances as f64 * r.acquisition_s;
        let sigma = (analytic * exposure).sqrt() / exposure;
        let good = (r.mean_ebit_rate - analytic).abs() <= 5.0 * sigma && (analytic - w).abs() < 1.0;
        ok &= good;
        parts.push(format!("{:.1}/{w}", r.mean_ebit_rate));
    }
    gate.report(1, ok && rows.len() == 7, format!("measured/tabulated rate: {}", parts.join(" ")));
}

fn no_jitter_suite(gate: &mut Gate, rows: &[StaticSummary]) {
    let (ok, detail) = within(rows, &[100.0, 100.0, 100.0, 100.0, 100.0, 97.0, 54.0], 6.0);
    let worst = rows
        .iter()
        .filter(|r| r.loss_db <= 42.0)
        .map(|r| r.err_success_mean_ps)
        .fold(0.0, f64::max);
    gate.report(2, ok && worst <= 60.0, format!("{detail}; worst success error {worst:.1} ps"));
}

fn jitter_suite(gate: &mut Gate, rows: &[StaticSummary]) {
    let (ok, detail) = within(rows, &[100.0, 100.0, 100.0, 80.0, 67.0, 35.0, 1.0], 10.0);
    let snr_want = [23.2, 18.8, 14.5, 11.3, 10.4, 9.8, 9.2];
    let mut snr_ok = true;
    let mut snr = Vec::new();
    for (r, w) in rows.iter().zip(snr_want) {
        let good = ((r.snr_mean - w) / w).abs() <= 0.3;
        snr_ok &= good;
        snr.push(format!("{:.1}/{w}{}", r.snr_mean, if good { "" } else { "!" }));
    }
    gate.report(3, ok && snr_ok, format!("{detail}; snr {}", snr.join(" ")));
}

fn coarse_suite(gate: &mut Gate, rows: &[StaticSummary]) {
    let (ok, detail) = within(rows, &[100.0, 100.0, 98.0, 54.0, 26.0, 10.0, 2.0], 10.0);
    gate.report(4, ok, detail);
}

fn acquisition_suite(gate: &mut Gate, rows: &[StaticSummary]) {
    let want = [13.0, 30.0, 42.0, 67.0, 96.0];
    let mut ok = rows.len() == want.len();
    let mut parts = Vec::new();
    for (r, w) in rows.iter().zip(want) {
        let good = (r.success_pct - w).abs() <= 12.0;
        ok &= good;
        parts.push(format!("{}ms {:.0}/{w}{}", r.acquisition_s * 1e3, r.success_pct, if good { "" } else { "!" }));
    }
    let monotone = rows.windows(2).all(|w| w[1].success_pct >= w[0].success_pct);
    gate.report(5, ok && monotone, format!("{}; monotone {monotone}", parts.join(" ")));
}

fn two_way_algebra(gate: &mut Gate) {
    let bin = 50e-12;
    let det = DetectorModel::new(1.0, 0.0, 0.0, bin).unwrap();
    let mut base = StaticScenario::new(20.0, det, 61);
    base.skew = 0.0;
    base.acquisition_s = 0.01;
    let mut delayed = base.clone();
    delayed.propagation_delay_s = 2.5e-3;

    let mut worst: f64 = 0.0;
    let mut shift: f64 = 0.0;
    for i in 0..100 {
        let a = run_instance(&base, i).unwrap();
        worst = worst.max(a.error_s().map_or(f64::INFINITY, f64::abs));
        let b = run_instance(&delayed, i).unwrap();
        let (ea, eb) = (a.estimate.unwrap(), b.estimate.unwrap());
        shift = shift.max((ea.delta_hat_s - eb.delta_hat_s).abs());
    }
    gate.report(
        6,
        worst <= bin && shift <= bin,
        format!("worst error {:.1} ps, delay-induced offset shift {:.1} ps", worst * 1e12, shift * 1e12),
    );
}

fn correlator_equivalence(gate: &mut Gate) {
    let bin = 50e-12;
    let mut agree = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let det = DetectorModel::new(0.5, rng.gen_range(0.0..2e4), rng.gen_range(0.0..300e-12), bin).unwrap();
        let ta = rng.gen_range(2e-5..2e-4);
        let births = generate_pair_events(rng.gen_range(1e6..2e7), ta, &mut rng).unwrap();
        let local = Receiver { id: DetectorId::A1, loss_db: 0.0, detector: det, clock: ClockModel::ideal(), delay_s: 0.0 };
        let remote = Receiver {
            id: DetectorId::B2,
            loss_db: rng.gen_range(0.0..10.0),
            detector: det,
            clock: ClockModel::new(rng.gen_range(0.0..1e-6), 3e-10),
            delay_s: 0.0,
        };
        let pair = detect_pairs(&births, &local, &remote, ta, &mut rng).unwrap();
        let corr = Correlator::from_seconds(-2e-6, 2e-6, bin, Some(ta / 3.3)).unwrap();
        let sparse = correlate::correlation_histogram(&pair.local.ticks, &pair.remote.ticks, &corr);
        let dense = correlate::correlation_histogram_dense(&pair.local.ticks, &pair.remote.ticks, &corr);
        agree += usize::from(sparse == dense && pair.local.len() + pair.remote.len() <= 20_000);
    }
    gate.report(7, agree == 50, format!("{agree}/50 instances bin-for-bin identical"));
}

fn shadow(gate: &mut Gate) {
    let (specs, _) = scenario::run_shadow(&load("shadow.toml")).unwrap();
    let base = &specs[0];
    let step_deg = traces::track_rate_deg_s(base.altitude_m);
    let mut ok = (base.diameter_deg - 35.0).abs() <= 5.0;
    let mut parts = vec![format!("diameter {:.2} deg", base.diameter_deg)];
    for s in &specs[1..] {
        let want = step_deg * s.tau_s;
        let got = s.elongated_deg - base.elongated_deg;
        ok &= (got - want).abs() <= step_deg;
        parts.push(format!("tau {} -> {:.2} deg", s.tau_s, s.elongated_deg));
    }
    gate.report(8, ok, parts.join(", "));
}

fn separation(gate: &mut Gate) {
    let report = scenario::run_sweep(&load("separation_sweep.toml")).unwrap();
    let leo: Vec<_> = report.points.iter().filter(|p| p.altitude_m == 500e3).collect();
    let far_zero = leo.iter().filter(|p| p.separation_m >= 3500e3).all(|p| p.mean_rate_product == 0.0);
    let near_pos = leo.iter().filter(|p| p.separation_m <= 2500e3).all(|p| p.mean_rate_product > 0.0);
    let crit: Vec<f64> = report.fits.iter().map(|f| f.critical_m.unwrap()).collect();
    let nondecreasing = crit.windows(2).all(|w| w[1] >= w[0]);
    let crit_km: Vec<String> = crit.iter().map(|c| format!("{:.0}", c / 1e3)).collect();
    gate.report(
        9,
        far_zero && near_pos && nondecreasing,
        format!("zero beyond 3500 km {far_zero}, positive within 2500 km {near_pos}, critical km {}", crit_km.join("/")),
    );

    let r2: Vec<f64> = report.fits.iter().map(|f| f.r2).collect();
    let ok = report.fits.iter().all(|f| f.points >= 3 && f.r2 >= 0.95);
    let shown: Vec<String> = r2.iter().map(|r| format!("{r:.4}")).collect();
    gate.report(10, ok, format!("R^2 per altitude {}", shown.join("/")));
}

fn network_trends(gate: &mut Gate) {
    let leo_sc = load("table1_leo.toml");
    let step = leo_sc.network.step_s;
    let leo = scenario::run_fom(&leo_sc).unwrap();
    let meo = scenario::run_fom(&load("table2_meo.toml")).unwrap();

    let mut ok = true;
    let mut notes = Vec::new();
    let names: Vec<&str> = leo_sc.geometry.stations.iter().map(|g| g.name.as_str()).collect();
    for (i, j) in leo_sc.pairs().unwrap() {
        let (a, b) = (names[i], names[j]);
        for &c in &leo_sc.network.cutoffs {
            let rows: Vec<_> = leo_sc.network.taus_s.iter().map(|&t| leo.get(a, b, c, t).unwrap()).collect();
            for w in rows.windows(2) {
                ok &= w[1].connected_fraction >= w[0].connected_fraction;
                ok &= w[1].longest_gap_s <= w[0].longest_gap_s + step;
            }
        }
        for &t in &leo_sc.network.taus_s {
            ok &= leo.get(a, b, 500.0, t).unwrap().connected_fraction
                <= leo.get(a, b, 200.0, t).unwrap().connected_fraction;
        }
        let l = leo.get(a, b, 200.0, 100.0).unwrap();
        let m = meo.get(a, b, 200.0, 100.0).unwrap();
        ok &= m.connected_fraction > l.connected_fraction;
        notes.push(format!("{a}/{b} {:.1}%<{:.1}%", l.percent_connected(), m.percent_connected()));
    }
    gate.report(11, ok, format!("holdover and cut-off monotone, LEO<MEO: {}", notes.join(" ")));

    let soft = leo.get("NYC", "ATL", 200.0, 100.0).unwrap().percent_connected();
    println!("    soft target NYC/ATL LEO {soft:.1}% (11-29% band): {}", if (11.0..=29.0).contains(&soft) { "inside" } else { "outside" });
}

fn determinism(gate: &mut Gate) {
    let csv = |cmd: Command, sc: &Scenario| -> Vec<Vec<u8>> {
        cmd.run(sc)
            .unwrap()
            .tables
            .iter()
            .map(|t| {
                let mut buf = Vec::new();
                t.write_csv(&mut buf).unwrap();
                buf
            })
            .collect()
    };
    let mut stat = load("table3_no_jitter.toml");
    stat.static_runs[0].instances = 10;
    let fig = load("fig3_trace.toml");
    let ok = csv(Command::Static, &stat) == csv(Command::Static, &stat)
        && csv(Command::Trace, &fig) == csv(Command::Trace, &fig)
        && csv(Command::Sync, &fig) == csv(Command::Sync, &fig);
    gate.report(12, ok, "repeated static, trace and sync runs byte-identical".into());
}

fn main() {
    let mut gate = Gate { results: Vec::new() };

    let table3 = static_rows("table3_no_jitter.toml");
    ebit_accounting(&mut gate, &table3);
    no_jitter_suite(&mut gate, &table3);
    jitter_suite(&mut gate, &static_rows("table4_jitter_100ps.toml"));
    coarse_suite(&mut gate, &static_rows("table5_coarse.toml"));
    acquisition_suite(&mut gate, &static_rows("acquisition_sweep.toml"));
    two_way_algebra(&mut gate);
    correlator_equivalence(&mut gate);
    shadow(&mut gate);
    separation(&mut gate);
    network_trends(&mut gate);
    determinism(&mut gate);

    let failing: Vec<u32> = gate.results.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect();
    println!("failing: {failing:?}, known: {KNOWN_FAILING:?}");
    assert_eq!(gate.results.len(), 12);
    if failing != KNOWN_FAILING {
        eprintln!("acceptance outcome changed");
        std::process::exit(1);
    }
}
