use std::path::Path;

use kdv_actions::actions::{gap_v, ActionSpectrum};
use kdv_actions::format::{parse_potential, KeyValues, Table};
use kdv_actions::hill::{BandStructure, EdgeSide};
use kdv_actions::kdv::{cascade_experiment, evolve, single_mode, FlowDiagnostics, Trajectory, PHASE_WARNING};
use kdv_actions::riccati::{forward, inverse};
use kdv_actions::verify::{
    check_all, check_cascade, check_flow_bounds, constant_sweep, h_minus_1_constant, run_battery, Analysis,
    BatterySummary, CheckKind, CheckSelection, EstimateReport, PROOF_CONSTANT, STATED_CONSTANT,
};
use kdv_actions::{Error, TrigPotential};

use crate::config::{RiccatiInput, RunConfig};
use crate::output::{num, Writer};

/// Failure of a command, mapped to the process exit status.
#[derive(Debug)]
pub enum Failure {
    /// Some check failed; the results were written.
    Checks(String),
    Core(Error),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) | Failure::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Checks(m) => write!(f, "check failure: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<(), Failure>;

fn kv(pairs: &[(&str, String)]) -> KeyValues {
    let mut k = KeyValues::default();
    for (a, b) in pairs {
        k.set(a, b.clone());
    }
    k
}

fn apply_tolerance(reports: &mut [EstimateReport], tol: Option<f64>) {
    let Some(tol) = tol else { return };
    for r in reports.iter_mut().filter(|r| r.kind != CheckKind::Identity) {
        r.tolerance = tol;
        r.pass = r.margin >= -tol;
    }
}

fn failed(reports: &[EstimateReport]) -> usize {
    reports.iter().filter(|r| !r.pass && r.binding()).count()
}

fn default_n_max(cfg: &RunConfig, psi: &TrigPotential) -> usize {
    cfg.n_max.unwrap_or_else(|| cfg.n_min.max(2 * psi.modes() + 8))
}

pub fn spectrum(cfg: &RunConfig, w: &mut Writer) -> Outcome {
    let psi = cfg.potential()?;
    w.potential("potential.txt", &psi)?;
    let band = BandStructure::compute(&psi, default_n_max(cfg, &psi))?;
    let mut t = Table::new(&[
        "n",
        "lambda_lower",
        "lambda_upper",
        "lambda_crit",
        "height",
        "gap_length",
        "open",
    ]);
    for g in &band.gaps {
        t.push(vec![
            g.n as f64,
            g.lower,
            g.upper,
            g.crit,
            g.height,
            if g.open { g.length() } else { 0.0 },
            if g.open { 1.0 } else { 0.0 },
        ]);
    }
    let meta = [
        format!("q0 = {}", num(band.q0)),
        format!("half_width = {}", band.half_width),
    ];
    w.table("spectrum.tsv", t, &meta)?;

    let checks = band.cross_validate(band.n_max().min(16))?;
    let mut c = Table::new(&[
        "n",
        "side",
        "matrix",
        "root",
        "residual",
        "wronskian_drift",
        "deviation",
    ]);
    for e in &checks {
        c.push(vec![
            e.n as f64,
            if e.side == EdgeSide::Lower { -1.0 } else { 1.0 },
            e.matrix,
            e.root.unwrap_or(f64::NAN),
            e.residual,
            e.wronskian_drift,
            e.deviation().unwrap_or(f64::NAN),
        ]);
    }
    w.table("edge_check.tsv", c, &[])?;
    let open = band.gaps.iter().filter(|g| g.open).count();
    println!("q0 = {}; {open} of {} gaps open", num(band.q0), band.n_max());
    let bad = checks
        .iter()
        .filter(|e| !e.agrees(1e-8) || e.wronskian_drift > 1e-10)
        .count();
    if bad > 0 {
        return Err(Failure::Checks(format!(
            "{bad} band edges disagree between the two routes"
        )));
    }
    Ok(())
}

pub fn actions(cfg: &RunConfig, w: &mut Writer) -> Outcome {
    let psi = cfg.potential()?;
    w.potential("potential.txt", &psi)?;
    let s = ActionSpectrum::compute(&psi, &cfg.action_options())?;
    let mut t = Table::new(&["n", "z_lower", "z_upper", "action", "v_integral", "v_over_z", "nodes"]);
    for g in &s.gaps {
        t.push(vec![
            g.n as f64,
            g.z_lower,
            g.z_upper,
            g.action,
            g.v_integral,
            g.v_over_z,
            g.nodes as f64,
        ]);
    }
    w.table("actions.tsv", t, &[format!("q0 = {}", num(s.band.q0))])?;
    let l2 = psi.norm().powi(2);
    let identity = if l2 > 0.0 {
        (l2 - 4.0 * s.p1.value).abs() / l2
    } else {
        (4.0 * s.p1.value).abs()
    };
    let mut summary = kv(&[
        ("n_max", s.n_max().to_string()),
        ("edge_converged", s.edge_converged.to_string()),
        ("q0", num(s.band.q0)),
        ("Q0_gap", num(s.q0_gap)),
        ("Q0_weighted", num(s.q0_weighted)),
        ("norm_sq", num(l2)),
        ("four_P1", num(4.0 * s.p1.value)),
        ("norm_identity_rel_error", num(identity)),
    ]);
    let mut warnings = Vec::new();
    for m in [s.p_minus1, s.p1, s.p3] {
        summary.set(&format!("P{}", m.j), num(m.value));
        summary.set(&format!("P{}_tail", m.j), num(m.tail));
        if m.warning() {
            warnings.push(format!("P{} tail {} exceeds 1e-8 of its value", m.j, num(m.tail)));
        }
    }
    w.summary("actions_summary.txt", &summary)?;
    for m in &warnings {
        eprintln!("warning: {m}");
    }
    println!(
        "n_max = {}; |psi|^2 = {}, 4 P1 = {} (relative error {})",
        s.n_max(),
        num(l2),
        num(4.0 * s.p1.value),
        num(identity)
    );
    Ok(())
}

pub fn riccati(cfg: &RunConfig, w: &mut Writer) -> Outcome {
    let given = cfg.potential()?;
    let (p_in, q) = match cfg.riccati_input {
        RiccatiInput::P => {
            let pair = forward(&given);
            (Some(given.clone()), pair.q)
        }
        RiccatiInput::Q => (None, given.clone()),
    };
    let inv = inverse(&q)?;
    let pair = forward(&inv.p);
    w.potential("riccati_p.txt", &inv.p)?;
    w.potential("riccati_q.txt", &q)?;
    let mut t = Table::new(&["x", "w"]);
    let m = pair.w_samples.len();
    for (j, v) in pair.w_samples.iter().enumerate() {
        t.push(vec![j as f64 / m as f64, *v]);
    }
    w.table("riccati_w.tsv", t, &[])?;
    let (pn, qn) = (inv.p.norm(), q.norm());
    let forward_margin = pn * (1.0 + 2.0 * pn) - qn;
    let inverse_margin = 2f64.sqrt() * qn * (1.0 + 2.0 * qn) - pn;
    let mut summary = kv(&[
        ("q0", num(pair.q0)),
        ("ground_energy", num(inv.ground_energy)),
        ("p_norm", num(pn)),
        ("q_norm", num(qn)),
        ("roundtrip", num(inv.roundtrip)),
        ("truncation", num(inv.truncation)),
        ("forward_bound_margin", num(forward_margin)),
        ("inverse_bound_margin", num(inverse_margin)),
    ]);
    if let Some(p) = &p_in {
        summary.set("p_recovery_error", num((&inv.p - p).norm()));
    }
    w.summary("riccati_summary.txt", &summary)?;
    println!(
        "roundtrip {}; |q| <= |p|(1 + 2|p|) margin {}; |p| <= sqrt2 |q|(1 + 2|q|) margin {}",
        num(inv.roundtrip),
        num(forward_margin),
        num(inverse_margin)
    );
    if forward_margin < -1e-9 || inverse_margin < -1e-9 {
        return Err(Failure::Checks("Riccati norm bounds violated".into()));
    }
    Ok(())
}

fn diagnostics_table(d: &FlowDiagnostics, cutoffs: &[usize]) -> Table {
    let n_actions = d.records.first().map_or(0, |r| r.actions.len());
    let mut cols: Vec<String> = ["time", "mean", "norm", "norm_h_minus_1", "hamiltonian"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(cutoffs.iter().map(|n| format!("proj_{n}")));
    cols.extend((1..=n_actions).map(|n| format!("A_{n}")));
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for r in &d.records {
        let mut row = vec![r.time, r.mean, r.norm, r.norm_h_minus_1, r.hamiltonian];
        row.extend(&r.projections);
        row.extend(&r.actions);
        t.push(row);
    }
    t
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(&["time", "n", "re", "im"]);
    for (time, psi) in &traj.snapshots {
        for (i, c) in psi.coeffs().iter().enumerate() {
            t.push(vec![*time, (i + 1) as f64, c.re, c.im]);
        }
    }
    t
}

pub fn evolve_cmd(cfg: &RunConfig, w: &mut Writer) -> Outcome {
    let psi0 = match &cfg.cascade {
        Some(c) if !cfg.has_potential() => single_mode(c.n0, c.amplitude),
        _ => cfg.potential()?,
    };
    w.potential("potential.txt", &psi0)?;
    let phase = cfg.flow.phase_per_step(&psi0);
    if phase > PHASE_WARNING {
        eprintln!(
            "warning: the top initial mode turns {phase:.3} rad per step; invariants will drift, reduce flow.dt below {}",
            num(cfg.flow.dt * PHASE_WARNING / phase)
        );
    }
    let mut reports;
    let traj = match &cfg.cascade {
        Some(c) => {
            let (report, traj) = cascade_experiment(&psi0, c.cutoff, &cfg.flow).map_err(|e| on_blow_up(e, w))?;
            let mut t = Table::new(&["time", "norm_h_minus_1", "low_norm", "high_norm_sq"]);
            for s in &report.series {
                t.push(vec![s.0, s.1, s.2, s.3]);
            }
            let meta = [
                format!("epsilon = {}", num(report.epsilon)),
                format!("energy_scale = {}", num(report.energy_scale)),
                format!("cutoff = {}", report.cutoff),
                format!("delta = {}", num(report.delta)),
                format!("h_minus_1_margin = {}", num(report.h_minus_1_margin)),
                format!("projection_margin = {}", num(report.projection_margin)),
                format!("energy_split_margin = {}", num(report.energy_split_margin)),
            ];
            w.table("cascade.tsv", t, &meta)?;
            reports = check_cascade(&report, &traj);
            println!(
                "epsilon = {}; margins: |psi|_-1 {}, |P_N psi| {}, energy split {}",
                num(report.epsilon),
                num(report.h_minus_1_margin),
                num(report.projection_margin),
                num(report.energy_split_margin)
            );
            traj
        }
        None => {
            reports = Vec::new();
            evolve(&psi0, &cfg.flow).map_err(|e| on_blow_up(e, w))?
        }
    };
    reports.extend(check_flow_bounds(&traj));
    apply_tolerance(&mut reports, cfg.tol);
    let d = &traj.diagnostics;
    w.table("diagnostics.tsv", diagnostics_table(d, &cfg.flow.projections), &[])?;
    w.table("trajectory.tsv", trajectory_table(&traj), &[])?;
    w.jsonl("flow_reports.jsonl", &reports)?;
    let a1 = d
        .records
        .first()
        .and_then(|r| r.actions.first().copied())
        .unwrap_or(0.0);
    let summary = kv(&[
        ("steps", cfg.flow.steps().to_string()),
        ("phase_per_step", num(phase)),
        ("records", d.records.len().to_string()),
        ("norm_sq_drift", num(d.relative_drift(|r| r.norm * r.norm))),
        ("hamiltonian_drift", num(d.relative_drift(|r| r.hamiltonian))),
        ("action_drift", num(d.action_drift())),
        ("A1_initial", num(a1)),
        (
            "max_abs_mean",
            num(d.records.iter().map(|r| r.mean.abs()).fold(0.0, f64::max)),
        ),
    ]);
    w.summary("evolve_summary.txt", &summary)?;
    println!(
        "{} steps; drift |psi|^2 {}, H {}, actions {}",
        cfg.flow.steps(),
        summary.get("norm_sq_drift").unwrap_or(""),
        summary.get("hamiltonian_drift").unwrap_or(""),
        summary.get("action_drift").unwrap_or("")
    );
    match failed(&reports) {
        0 => Ok(()),
        n => Err(Failure::Checks(format!("{n} flow bounds violated"))),
    }
}

fn on_blow_up(e: Error, w: &mut Writer) -> Failure {
    if let Error::BlowUp { last_good, .. } = &e {
        if let Err(io) = w.potential("blowup_state.txt", last_good) {
            return Failure::Io(io);
        }
    }
    Failure::Core(e)
}

fn summary_text(s: &BatterySummary) -> String {
    let mut out = format!("members {}\n", s.members);
    out.push_str("id\tworst_margin\ttolerance\tpassed\tfailed\tfingerprint\n");
    for (id, w) in &s.worst {
        out.push_str(&format!(
            "{id}\t{}\t{}\t{}\t{}\t{}\n",
            num(w.margin),
            num(w.tolerance),
            w.passed,
            w.failed,
            w.fingerprint
        ));
    }
    let c = &s.constant;
    out.push_str(&format!(
        "constant_max_ratio {} ({}); within {STATED_CONSTANT}: {}; flagged in ({STATED_CONSTANT}, {PROOF_CONSTANT}]: {}\n",
        num(c.max_ratio),
        c.fingerprint,
        c.within_stated(),
        c.flagged()
    ));
    for f in &s.failures {
        out.push_str(&format!("member {} ({}) failed: {}\n", f.index, f.fingerprint, f.error));
    }
    out
}

pub fn verify(cfg: &RunConfig, w: &mut Writer) -> Outcome {
    let sel = CheckSelection::all();
    let (mut reports, summary) = if cfg.has_potential() {
        let psi = cfg.potential()?;
        w.potential("potential.txt", &psi)?;
        let a = Analysis::new(&psi, &cfg.action_options())?;
        let reports = check_all(&a, sel)?;
        let ratio = h_minus_1_constant(&a);
        println!("(|psi|_-1^2 / (P_-1 (1 + P_-1))) = {}", num(ratio));
        (reports, None)
    } else {
        let run = run_battery(&cfg.battery, sel, &cfg.action_options())?;
        (run.reports, Some(run.summary))
    };
    apply_tolerance(&mut reports, cfg.tol);
    w.jsonl("verify.jsonl", &reports)?;
    if let Some(s) = &summary {
        w.text("verify_summary.txt", &summary_text(s))?;
        for f in &s.failures {
            eprintln!("member {} failed: {}", f.index, f.error);
        }
    }
    if cfg.sweep {
        let amps: Vec<f64> = (0..40).map(|i| 0.01 + (2.0 - 0.01) * i as f64 / 39.0).collect();
        let sweep = constant_sweep(&amps)?;
        let mut t = Table::new(&["c", "ratio"]);
        for (c, r) in &sweep {
            t.push(vec![*c, *r]);
        }
        let max = sweep.iter().map(|s| s.1).fold(0.0, f64::max);
        w.table("constant_sweep.tsv", t, &[format!("max_ratio = {}", num(max))])?;
        println!("cosine sweep: max |psi|_-1^2 / (P_-1 (1 + P_-1)) = {}", num(max));
    }
    let n_failed = failed(&reports);
    let hard = summary.as_ref().map_or(0, |s| s.failures.len());
    println!("{} reports, {n_failed} failed, {hard} members errored", reports.len());
    if n_failed + hard > 0 {
        return Err(Failure::Checks(format!(
            "{n_failed} reports failed, {hard} members errored"
        )));
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<Option<Table>, Failure> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(Some(Table::parse(&text)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn series(w: &mut Writer, name: &str, x: &str, y: &str, points: impl IntoIterator<Item = (f64, f64)>) -> Outcome {
    let mut t = Table::new(&[x, y]);
    for (a, b) in points {
        t.push(vec![a, b]);
    }
    w.table(name, t, &[])?;
    Ok(())
}

/// Reads result files from `input` and writes `(x, y)` series through `w`.
pub fn plotdata(cfg: &RunConfig, input: &Path, w: &mut Writer) -> Outcome {
    if let Some(t) = read_table(&input.join("spectrum.tsv"))? {
        let n = t.column("n").unwrap_or_default();
        let gl = t.column("gap_length").unwrap_or_default();
        let h = t.column("height").unwrap_or_default();
        series(w, "gap_lengths.tsv", "n", "gap_length", n.iter().copied().zip(gl))?;
        series(w, "heights.tsv", "n", "height", n.iter().copied().zip(h))?;
        if let Ok(text) = std::fs::read_to_string(input.join("potential.txt")) {
            let psi = parse_potential(&text)?;
            let band = BandStructure::compute(&psi, n.len().max(1))?;
            for g in band.gaps.iter().filter(|g| g.open).take_while(|g| g.n <= cfg.plot_gaps) {
                let (lo, hi) = g.z_edges();
                let m = cfg.plot_points;
                let pts = (0..m)
                    .map(|i| {
                        let z = if i + 1 == m {
                            hi
                        } else {
                            lo + (hi - lo) * i as f64 / (m - 1) as f64
                        };
                        Ok((z, gap_v(&band, g.n, z)?))
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                series(w, &format!("v_profile_{}.tsv", g.n), "z", "v", pts)?;
            }
        }
    }
    if let Some(t) = read_table(&input.join("diagnostics.tsv"))? {
        let time = t.column("time").unwrap_or_default();
        let cols: Vec<Vec<f64>> = t
            .columns
            .iter()
            .filter(|c| c.starts_with("A_"))
            .filter_map(|c| t.column(c))
            .collect();
        if !cols.is_empty() && !time.is_empty() {
            let drift = (0..time.len()).map(|i| {
                let d = cols.iter().map(|c| (c[i] - c[0]).abs()).fold(0.0, f64::max);
                (time[i], d)
            });
            series(
                w,
                "action_drift.tsv",
                "time",
                "max_action_drift",
                drift.collect::<Vec<_>>(),
            )?;
        }
    }
    match std::fs::read_to_string(input.join("verify.jsonl")) {
        Ok(text) => {
            let mut by_id: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
            for line in text.lines().skip(2) {
                let r: EstimateReport = serde_json::from_str(line).map_err(|e| Error::Parse {
                    line: 0,
                    message: format!("verify.jsonl: {e}"),
                })?;
                by_id.entry(r.id).or_default().push(r.margin);
            }
            for (id, margins) in by_id {
                series(
                    w,
                    &format!("margins_{id}.tsv"),
                    "index",
                    "margin",
                    margins
                        .into_iter()
                        .enumerate()
                        .map(|(i, m)| (i as f64, m))
                        .collect::<Vec<_>>(),
                )?;
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(e.into()),
    }
    println!("{} series written to {}", w.written().len(), w.dir().display());
    Ok(())
}
