//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use kdv_actions::actions::ActionOptions;
use kdv_actions::hill::{gap_is_open, BandStructure};
use kdv_actions::kdv::{cascade_experiment, evolve, order_check, single_mode, FlowConfig, Trajectory};
use kdv_actions::verify::{
    check_flow_bounds, run_battery, Battery, BatteryRun, CheckSelection, EstimateReport, STATED_CONSTANT,
};
use kdv_actions::TrigPotential;

struct Gate {
    lines: Vec<(usize, bool, String)>,
}

impl Gate {
    fn record(&mut self, criterion: usize, pass: bool, detail: String) {
        self.lines.push((criterion, pass, detail));
    }
}

fn reports<'a>(run: &'a BatteryRun, id: &str) -> Vec<&'a EstimateReport> {
    run.reports.iter().filter(|r| r.id == id).collect()
}

fn worst(rs: &[&EstimateReport], f: impl Fn(&EstimateReport) -> f64) -> f64 {
    rs.iter().map(|r| f(r)).fold(f64::NEG_INFINITY, f64::max)
}

fn lowest_margin(rs: &[&EstimateReport]) -> f64 {
    rs.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
}

fn battery_criteria(gate: &mut Gate, members: &[TrigPotential]) -> BatteryRun {
    let start = Instant::now();
    let run = run_battery(&Battery::default(), CheckSelection::all(), &ActionOptions::default()).expect("battery runs");
    let elapsed = start.elapsed();
    let n = members.len();
    let shape_ok = n == 50 && members.iter().all(|m| m.modes() <= 8 && m.norm() <= 2.0 + 1e-12);
    let complete = run.summary.failures.is_empty();

    // 1: |psi|^2 = 4 P_1
    let ids = reports(&run, "norm-action-identity");
    let rel = worst(&ids, |r| r.margin / r.lhs);
    gate.record(
        1,
        shape_ok && complete && ids.len() == n && rel <= 1e-6 && elapsed <= Duration::from_secs(300),
        format!(
            "norm identity: worst relative error {rel:.2e} over {} members, {:.1} s",
            ids.len(),
            elapsed.as_secs_f64()
        ),
    );

    // 2: Q_0 = |p|^2 / 2 and the two real-line forms of Q_0
    let half = reports(&run, "q0-vs-half-p-norm");
    let forms = reports(&run, "q0-gap-vs-weighted");
    let half_ok = half.iter().all(|r| r.margin <= 1e-6 * r.lhs.max(1e-10));
    let forms_ok = forms.iter().all(|r| r.margin <= 1e-8 * r.lhs.max(1e-12));
    gate.record(
        2,
        complete && half.len() == n && forms.len() == n && half_ok && forms_ok,
        format!(
            "Q0 vs |p|^2/2: worst scaled error {:.2e}; gap vs weighted form: worst scaled error {:.2e}",
            worst(&half, |r| r.margin / r.lhs.max(1e-10)),
            worst(&forms, |r| r.margin / r.lhs.max(1e-12)),
        ),
    );

    // 3: H^-1 norm against P_-1 both ways, plus the empirical constant
    let upper = reports(&run, "h-1-by-p-1");
    let lower = reports(&run, "p-1-by-h-1");
    let c = &run.summary.constant;
    let flag = if c.within_stated() {
        "within the stated constant"
    } else if c.flagged() {
        "FLAGGED: above the stated constant, within the proof constant"
    } else {
        "above the proof constant"
    };
    gate.record(
        3,
        complete
            && upper.len() == n
            && lower.len() == n
            && lowest_margin(&upper) >= -1e-9
            && lowest_margin(&lower) >= -1e-9,
        format!(
            "min margins {:.3e} / {:.3e}; constant tracker max {:.5} (stated {STATED_CONSTANT}) {flag}",
            lowest_margin(&upper),
            lowest_margin(&lower),
            c.max_ratio
        ),
    );

    // 4: Riccati roundtrip, forward and inverse bounds, q0 = |p|^2
    let roundtrip = reports(&run, "riccati-roundtrip");
    let forward = reports(&run, "riccati-forward-bound");
    let inverse = reports(&run, "riccati-inverse-bound");
    let consistency = reports(&run, "q0-normalization-vs-p-norm");
    gate.record(
        4,
        complete
            && [&roundtrip, &forward, &inverse, &consistency]
                .iter()
                .all(|v| v.len() == n)
            && worst(&roundtrip, |r| r.lhs) <= 1e-7
            && lowest_margin(&forward) >= -1e-9
            && lowest_margin(&inverse) >= -1e-9
            && worst(&consistency, |r| r.margin) <= 1e-8,
        format!(
            "roundtrip {:.2e}; bound margins {:.3e} / {:.3e}; |q0 - |p|^2| {:.2e}",
            worst(&roundtrip, |r| r.lhs),
            lowest_margin(&forward),
            lowest_margin(&inverse),
            worst(&consistency, |r| r.margin)
        ),
    );

    // 5: |p|^2 <= P_-1, and the heights-times-gaps bound under both gap measures
    let chain = reports(&run, "p-norm-by-p-1");
    let lambda = reports(&run, "p-1-by-heights-lambda-gaps");
    let momentum = reports(&run, "p-1-by-heights-momentum-gaps");
    let violated = momentum.iter().filter(|r| !r.pass).count();
    gate.record(
        5,
        complete && chain.len() == n && lowest_margin(&chain) >= -1e-9 && lambda.len() == n && momentum.len() == n,
        format!(
            "|p|^2 <= P_-1 min margin {:.3e}; reported bound: lambda-gap reading min margin {:.3e} ({} violations), momentum-gap reading min margin {:.3e} ({violated} violations)",
            lowest_margin(&chain),
            lowest_margin(&lambda),
            lambda.iter().filter(|r| !r.pass).count(),
            lowest_margin(&momentum),
        ),
    );

    // 10: pointwise gap geometry on every open gap
    let open: usize = members
        .iter()
        .map(|m| {
            kdv_actions::actions::ActionSpectrum::compute(m, &ActionOptions::default())
                .map(|s| s.band.gaps.iter().filter(|g| g.open).count())
                .unwrap_or(usize::MAX)
        })
        .sum();
    let above = reports(&run, "v-above-edge-profile");
    let concave = reports(&run, "v-concave");
    gate.record(
        10,
        complete && above.len() == open && concave.len() == open && above.iter().chain(&concave).all(|r| r.pass),
        format!(
            "{open} open gaps scanned at 100 points; lower-bound failures {}, concavity failures {}",
            above.iter().filter(|r| !r.pass).count(),
            concave.iter().filter(|r| !r.pass).count()
        ),
    );
    run
}

fn cross_validation(gate: &mut Gate, members: &[TrigPotential]) {
    let mut worst_dev: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    let mut unresolved = 0;
    let mut interlaced = true;
    let mut checked = 0;
    let mut ok = true;
    for m in members {
        let band = match BandStructure::compute(m, 16) {
            Ok(b) => b,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        let edges = band.edges();
        // 0 = lambda_0^+ < lambda_1^- <= lambda_1^+ < lambda_2^- <= ...
        interlaced &= edges
            .windows(2)
            .enumerate()
            .all(|(i, w)| if i % 2 == 0 { w[0] < w[1] } else { w[0] <= w[1] });
        interlaced &= band.gaps.iter().all(|g| g.open == gap_is_open(g.lower, g.upper));
        match band.cross_validate(16) {
            Ok(checks) => {
                ok &= checks.len() == 33;
                for c in &checks {
                    checked += 1;
                    ok &= c.agrees(1e-8) && c.wronskian_drift <= 1e-10;
                    worst_res = worst_res.max(c.residual);
                    worst_drift = worst_drift.max(c.wronskian_drift);
                    match c.deviation() {
                        Some(d) => worst_dev = worst_dev.max(d),
                        None => unresolved += 1,
                    }
                }
            }
            Err(_) => ok = false,
        }
    }
    gate.record(
        6,
        ok && interlaced,
        format!(
            "{checked} edges: matrix vs monodromy root {worst_dev:.2e} relative ({unresolved} edges of closed gaps checked by residual only), |delta - (-1)^n| {worst_res:.2e}, wronskian drift {worst_drift:.2e}, interlacing {}",
            if interlaced { "strict" } else { "violated" }
        ),
    );
}

fn isospectral_flow(gate: &mut Gate) -> Trajectory {
    let psi0 = TrigPotential::cosine(1, 0.5);
    let cfg = FlowConfig {
        modes: 256,
        dt: 5e-5,
        t_end: 0.5,
        record_every: 500,
        action_gaps: 8,
        ..FlowConfig::default()
    };
    let start = Instant::now();
    let traj = evolve(&psi0, &cfg).expect("flow runs");
    let d = &traj.diagnostics;
    let a1 = d.records[0].actions[0];
    let action = d.action_drift();
    let norm = d.relative_drift(|r| r.norm * r.norm);
    let ham = d.relative_drift(|r| r.hamiltonian);
    // Step halving from dt = 1e-4 keeps both runs above the roundoff floor.
    let oc = order_check(
        &psi0,
        &FlowConfig {
            dt: 1e-4,
            ..cfg.clone()
        },
    )
    .expect("order check runs");
    let elapsed = start.elapsed();
    let order_ok = (16.0 / 1.5..=16.0 * 1.5).contains(&oc.error_ratio()) && oc.drift_ratio() >= 16.0 / 1.5;
    gate.record(
        7,
        action <= 1e-5 * a1.max(1e-12)
            && norm <= 1e-8
            && ham <= 1e-7
            && order_ok
            && d.records.iter().all(|r| r.actions.len() == 8)
            && elapsed <= Duration::from_secs(600),
        format!(
            "action drift {action:.2e} (A1 = {a1:.4e}), |psi|^2 drift {norm:.2e}, H drift {ham:.2e}; halving dt: state error /{:.1} (order {:.2}), invariant drift /{:.1}; {:.1} s",
            oc.error_ratio(),
            oc.order(),
            oc.drift_ratio(),
            elapsed.as_secs_f64()
        ),
    );
    traj
}

fn h_minus_1_along_flow(gate: &mut Gate, traj: &Trajectory) {
    let rs = check_flow_bounds(traj);
    let growth: Vec<_> = rs.iter().filter(|r| r.id == "flow-h-1-growth").collect();
    let recovery: Vec<_> = rs.iter().filter(|r| r.id == "flow-h-1-recovery").collect();
    let times = traj.snapshots.len();
    gate.record(
        8,
        growth.len() == times && recovery.len() == times && rs.iter().all(|r| r.margin >= -1e-9),
        format!(
            "{times} recorded times; min margins growth {:.3e}, recovery {:.3e}",
            lowest_margin(&growth),
            lowest_margin(&recovery)
        ),
    );
}

fn cascade(gate: &mut Gate) {
    let psi0 = single_mode(16, 1.0);
    // dt (2 pi 16)^3 = 0.25: the forcing of mode 32 is resolved in time.
    let cfg = FlowConfig {
        modes: 128,
        dt: 2.5e-7,
        t_end: 0.5,
        record_every: 20_000,
        ..FlowConfig::default()
    };
    let start = Instant::now();
    let (report, traj) = cascade_experiment(&psi0, 2, &cfg).expect("cascade runs");
    let norm = traj.diagnostics.relative_drift(|r| r.norm * r.norm);
    let bound_low = 6.0 * 2.0 * std::f64::consts::PI * 2.0 * report.epsilon;
    let h1_ok = report.series.iter().all(|s| s.1 <= 6.0 * report.epsilon);
    let low_ok = report.series.iter().all(|s| s.2 <= bound_low);
    let end = report.series.last().map_or(0.0, |s| s.0);
    gate.record(
        9,
        report.epsilon <= 0.25 && h1_ok && low_ok && report.series.len() == 101 && (end - 0.5).abs() < 1e-12,
        format!(
            "epsilon {:.4e}; margins |psi|_-1 {:.4e}, |P_2 psi| {:.4e}, energy split {:.4e}; {} records to t = {end}; |psi|^2 drift {norm:.1e}; {:.1} s",
            report.epsilon,
            report.h_minus_1_margin,
            report.projection_margin,
            report.energy_split_margin,
            report.series.len(),
            start.elapsed().as_secs_f64()
        ),
    );
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_kdv-actions"))
        .args(args)
        .current_dir(dir)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Relative path to contents with the first line removed.
fn snapshot(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let text = std::fs::read_to_string(&path).unwrap();
                let rest = text.split_once('\n').map_or("", |(_, r)| r).to_string();
                out.insert(path.strip_prefix(root).unwrap().display().to_string(), rest);
            }
        }
    }
    out
}

fn determinism(gate: &mut Gate) {
    const CONFIG: &str = "\
potential = cos:1:0.4 + sin:2:0.15 + cos:3:0.05
seed = 11
battery.count = 4
battery.max_modes = 4
flow.modes = 64
flow.dt = 1e-4
flow.t_end = 0.01
flow.record_every = 20
flow.action_gaps = 4
verify.sweep = true
out = results
";
    let commands = ["spectrum", "actions", "riccati", "evolve", "verify", "plotdata"];
    let mut runs = Vec::new();
    let mut ok = true;
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.conf"), CONFIG).unwrap();
        for c in commands {
            ok &= run_cli(dir.path(), &[c, "--config", "run.conf"]);
        }
        // A battery run: the inline potential is dropped.
        std::fs::write(
            dir.path().join("battery.conf"),
            CONFIG
                .lines()
                .filter(|l| !l.starts_with("potential"))
                .collect::<Vec<_>>()
                .join("\n")
                .replace("out = results", "out = battery"),
        )
        .unwrap();
        ok &= run_cli(dir.path(), &["verify", "--config", "battery.conf"]);
        runs.push((snapshot(dir.path()), dir));
    }
    let (a, b) = (&runs[0].0, &runs[1].0);
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    let results = a
        .keys()
        .filter(|k| k.ends_with(".tsv") || k.ends_with(".jsonl") || k.ends_with(".txt"))
        .count();
    gate.record(
        11,
        ok && a.len() == b.len() && differing.is_empty() && results > 20,
        format!(
            "{} commands run twice, {} files compared, {} differ beyond the timestamp line",
            commands.len() + 1,
            a.len(),
            differing.len()
        ),
    );
}

fn main() {
    let mut gate = Gate { lines: Vec::new() };
    let members = Battery::default().members();
    battery_criteria(&mut gate, &members);
    cross_validation(&mut gate, &members);
    let traj = isospectral_flow(&mut gate);
    h_minus_1_along_flow(&mut gate, &traj);
    cascade(&mut gate);
    determinism(&mut gate);

    gate.lines.sort_by_key(|l| l.0);
    for (criterion, pass, detail) in &gate.lines {
        println!(
            "criterion {criterion:>2}: {} {detail}",
            if *pass { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<usize> = gate.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    println!(
        "acceptance: {} of {} criteria pass",
        gate.lines.len() - failed.len(),
        gate.lines.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
