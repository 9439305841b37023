//! Both sides of the norm/action identities and inequalities, evaluated on
//! single potentials, trajectories and seeded random batteries.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{scan_gap, ActionOptions, ActionSpectrum};
use crate::error::{Error, Result};
use crate::fourier::TrigPotential;
use crate::kdv::{CascadeReport, Trajectory};
use crate::riccati::{forward, inverse, RiccatiInverse};

/// Absolute slack on inequality margins.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Relative tolerance on identities.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Relative tolerance on agreement of the two real-line forms of `Q_0`.
pub const Q0_FORMS_TOL: f64 = 1e-8;
/// Absolute tolerance on `q_0 - |p|^2`.
pub const Q0_CONSISTENCY_TOL: f64 = 1e-8;
/// Constant of the `H^-1` upper bound as stated.
pub const STATED_CONSTANT: f64 = 3.0;
/// Constant produced by the argument behind it.
pub const PROOF_CONSTANT: f64 = 5.0;
/// Points per gap in pointwise scans.
pub const SCAN_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `|lhs - rhs| <= tolerance`.
    Identity,
    /// `rhs - lhs >= -tolerance`.
    Inequality,
    /// One of several readings of an ambiguous bound; reported but not binding.
    Reading,
}

/// One evaluated identity or inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for inequalities, `|lhs - rhs|` for identities.
    pub margin: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EstimateReport {
    pub fn inequality(id: &str, lhs: f64, rhs: f64, tolerance: f64, fingerprint: &str) -> Self {
        let margin = rhs - lhs;
        EstimateReport {
            id: id.to_string(),
            kind: CheckKind::Inequality,
            lhs,
            rhs,
            margin,
            pass: margin >= -tolerance,
            tolerance,
            fingerprint: fingerprint.to_string(),
            time: None,
            note: None,
        }
    }

    pub fn identity(id: &str, lhs: f64, rhs: f64, tolerance: f64, fingerprint: &str) -> Self {
        let margin = (lhs - rhs).abs();
        EstimateReport {
            kind: CheckKind::Identity,
            margin,
            pass: margin <= tolerance,
            ..Self::inequality(id, lhs, rhs, tolerance, fingerprint)
        }
    }

    fn reading(mut self) -> Self {
        self.kind = CheckKind::Reading;
        self
    }

    fn at(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Whether a failure of this report fails the run.
    pub fn binding(&self) -> bool {
        self.kind != CheckKind::Reading
    }

    pub fn verdict(&self) -> &'static str {
        match (self.pass, self.kind) {
            (true, _) => "pass",
            (false, CheckKind::Identity) => "identity mismatch",
            (false, CheckKind::Inequality) => "inequality violation",
            (false, CheckKind::Reading) => "reading violated",
        }
    }
}

/// Everything the static checks need for one potential.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub psi: TrigPotential,
    pub fingerprint: String,
    pub spectrum: ActionSpectrum,
    /// `p` with `R(p) = antiderivative(psi)`.
    pub riccati: RiccatiInverse,
}

impl Analysis {
    pub fn new(psi: &TrigPotential, opts: &ActionOptions) -> Result<Self> {
        let spectrum = ActionSpectrum::compute(psi, opts)?;
        let riccati = inverse(&psi.antiderivative())?;
        Ok(Analysis {
            psi: psi.clone(),
            fingerprint: psi.fingerprint(),
            spectrum,
            riccati,
        })
    }

    fn p_minus1(&self) -> f64 {
        self.spectrum.p_minus1.value
    }

    /// `(sum |gamma_n|^2 (2 pi n)^{2m})^{1/2}` with lambda-plane gap lengths.
    pub fn gap_norm(&self, m: f64) -> f64 {
        weighted_norm(&self.spectrum.band.gap_lengths(), m)
    }

    /// As [`Analysis::gap_norm`] with momentum-gap lengths `z_n^+ - z_n^-`.
    pub fn momentum_gap_norm(&self, m: f64) -> f64 {
        let lengths: Vec<f64> = self
            .spectrum
            .band
            .gaps
            .iter()
            .map(|g| {
                let (lo, hi) = g.z_edges();
                if g.open {
                    hi - lo
                } else {
                    0.0
                }
            })
            .collect();
        weighted_norm(&lengths, m)
    }

    pub fn height_norm(&self) -> f64 {
        weighted_norm(&self.spectrum.band.heights(), 0.0)
    }
}

fn weighted_norm(seq: &[f64], m: f64) -> f64 {
    seq.iter()
        .enumerate()
        .map(|(i, x)| (2.0 * PI * (i + 1) as f64).powf(2.0 * m) * x * x)
        .sum::<f64>()
        .sqrt()
}

fn relative(tol: f64, scale: f64, floor: f64) -> f64 {
    tol * scale.abs().max(floor)
}

/// `|psi|^2 = 4 P_1`.
pub fn check_norm_identity(a: &Analysis) -> EstimateReport {
    let lhs = a.psi.norm().powi(2);
    let p1 = a.spectrum.p1;
    EstimateReport::identity(
        "norm-action-identity",
        lhs,
        4.0 * p1.value,
        relative(IDENTITY_TOL, lhs, 1e-300),
        &a.fingerprint,
    )
    .with_note(format!("n_max {} tail {:.3e}", a.spectrum.n_max(), 4.0 * p1.tail))
}

/// `8 P_3 - 8 P_1 P_-1 <= H <= 8 P_3`.
pub fn check_hamiltonian_bounds(a: &Analysis) -> [EstimateReport; 2] {
    let h = a.psi.hamiltonian();
    let p3 = a.spectrum.p3.value;
    let lower = 8.0 * p3 - 8.0 * a.spectrum.p1.value * a.p_minus1();
    let tol = relative(INEQUALITY_TOL, p3, 1.0);
    let mut upper = EstimateReport::inequality("hamiltonian-upper", h, 8.0 * p3, tol, &a.fingerprint);
    if a.spectrum.p3.warning() {
        upper = upper.with_note(format!("P3 tail {:.3e}", a.spectrum.p3.tail));
    }
    [
        EstimateReport::inequality("hamiltonian-lower", lower, h, tol, &a.fingerprint),
        upper,
    ]
}

/// `|psi|_{-1}^2` over `P_-1 (1 + P_-1)`; zero for the zero potential.
pub fn h_minus_1_constant(a: &Analysis) -> f64 {
    let p = a.p_minus1();
    let den = p * (1.0 + p);
    if den > 0.0 {
        a.psi.norm_h_minus_1().powi(2) / den
    } else {
        0.0
    }
}

/// The two-sided comparison of `|psi|_{-1}` and `P_-1`, with the upper bound
/// evaluated for both candidate constants.
pub fn check_h_minus_1_bounds(a: &Analysis) -> [EstimateReport; 3] {
    let n = a.psi.norm_h_minus_1();
    let p = a.p_minus1();
    let c = h_minus_1_constant(a);
    [
        EstimateReport::inequality(
            "h-1-by-p-1",
            n * n,
            STATED_CONSTANT * p * (1.0 + p),
            INEQUALITY_TOL,
            &a.fingerprint,
        )
        .with_note(format!("constant {c:.6}")),
        EstimateReport::inequality(
            "h-1-by-p-1-proof-constant",
            n * n,
            PROOF_CONSTANT * p * (1.0 + p),
            INEQUALITY_TOL,
            &a.fingerprint,
        ),
        EstimateReport::inequality(
            "p-1-by-h-1",
            p,
            n * n * (1.0 + n).powf(1.5),
            INEQUALITY_TOL,
            &a.fingerprint,
        ),
    ]
}

/// Two-sided gap-length, height and `L^2` gap estimates.
pub fn check_prior_estimates(a: &Analysis) -> Vec<EstimateReport> {
    let n = a.psi.norm_h_minus_1();
    let l2 = a.psi.norm();
    let g1 = a.gap_norm(-1.0);
    let g0 = a.gap_norm(0.0);
    let h = a.height_norm();
    let f = &a.fingerprint;
    let t = INEQUALITY_TOL;
    vec![
        EstimateReport::inequality("gap-h-1-by-h-1", g1, 2f64.sqrt() * n * (1.0 + n), t, f),
        EstimateReport::inequality("h-1-by-gap-h-1", n, 8.0 * PI * g1 * (1.0 + g1), t, f),
        EstimateReport::inequality("heights-lower", (PI / 8.0).sqrt() * n, h, t, f),
        EstimateReport::inequality("heights-upper", h, PI / 2.0 * n * (1.0 + n).sqrt(), t, f),
        EstimateReport::inequality("l2-by-gap-l2", l2, 2.0 * g0 * (1.0 + g0.cbrt()), t, f),
        EstimateReport::inequality("gap-l2-by-l2", g0, 2.0 * l2 * (1.0 + l2.cbrt()), t, f),
    ]
}

/// `Q_0` from the gap integrals against the weighted form and against `|p|^2 / 2`.
pub fn check_q0_identities(a: &Analysis) -> [EstimateReport; 3] {
    let s = &a.spectrum;
    let q0 = s.q0_gap;
    let p2 = a.riccati.p.norm().powi(2);
    [
        EstimateReport::identity(
            "q0-gap-vs-weighted",
            q0,
            s.q0_weighted,
            relative(Q0_FORMS_TOL, q0, 1e-12),
            &a.fingerprint,
        ),
        EstimateReport::identity(
            "q0-vs-half-p-norm",
            q0,
            p2 / 2.0,
            relative(IDENTITY_TOL, q0, 1e-10),
            &a.fingerprint,
        ),
        EstimateReport::identity(
            "q0-normalization-vs-p-norm",
            s.band.q0,
            p2,
            Q0_CONSISTENCY_TOL,
            &a.fingerprint,
        ),
    ]
}

/// Riccati bounds, roundtrip, `|p|^2 <= P_-1` and the height/gap bound on `P_-1`
/// under both gap measures.
pub fn check_riccati_chain(a: &Analysis) -> Vec<EstimateReport> {
    let p = a.riccati.p.norm();
    let q = a.psi.norm_h_minus_1();
    let q_forward = forward(&a.riccati.p).q.norm();
    let f = &a.fingerprint;
    let t = INEQUALITY_TOL;
    let pm1 = a.p_minus1();
    let h = a.height_norm();
    vec![
        EstimateReport::inequality("riccati-forward-bound", q_forward, p * (1.0 + 2.0 * p), t, f),
        EstimateReport::inequality("riccati-inverse-bound", p, 2f64.sqrt() * q * (1.0 + 2.0 * q), t, f),
        EstimateReport::inequality(
            "riccati-roundtrip",
            a.riccati.roundtrip,
            0.0,
            crate::riccati::ROUNDTRIP_TOL,
            f,
        ),
        EstimateReport::inequality("p-norm-by-p-1", p * p, pm1, t, f),
        EstimateReport::inequality("p-1-by-heights-lambda-gaps", pm1, 4.0 / PI * h * a.gap_norm(-1.0), t, f)
            .with_note("lambda-plane gap lengths"),
        EstimateReport::inequality(
            "p-1-by-heights-momentum-gaps",
            pm1,
            4.0 / PI * h * a.momentum_gap_norm(-1.0),
            t,
            f,
        )
        .with_note("momentum-gap lengths")
        .reading(),
    ]
}

/// Lower bound and concavity of `v`, and `A_n <= (4 / pi) h_n int_{g_n} z dz`, on every open gap.
pub fn check_gap_geometry(a: &Analysis, points: usize) -> Result<Vec<EstimateReport>> {
    let band = &a.spectrum.band;
    let open: Vec<usize> = band.gaps.iter().filter(|g| g.open).map(|g| g.n).collect();
    let scans = open
        .iter()
        .map(|&n| scan_gap(band, n, points))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(3 * scans.len());
    for s in scans {
        let g = &band.gaps[s.n - 1];
        // int_{g_n} z dz = (lambda^+ - lambda^-) / 2
        let action = a.spectrum.gaps[s.n - 1].action;
        let chain = 4.0 / PI * g.height * 0.5 * g.length();
        out.push(
            EstimateReport::inequality(
                "action-by-height-momentum-area",
                action,
                chain,
                INEQUALITY_TOL,
                &a.fingerprint,
            )
            .with_note(format!("gap {}", s.n)),
        );
        out.push(
            EstimateReport::inequality(
                "v-above-edge-profile",
                0.0,
                s.lower_bound_margin,
                s.lower_bound_tolerance,
                &a.fingerprint,
            )
            .with_note(format!("gap {}", s.n)),
        );
        out.push(
            EstimateReport::inequality(
                "v-concave",
                s.max_second_difference,
                0.0,
                s.concavity_tolerance,
                &a.fingerprint,
            )
            .with_note(format!("gap {}", s.n)),
        );
    }
    Ok(out)
}

/// Growth and recovery of `|psi(t)|_{-1}` at every recorded time.
pub fn check_flow_bounds(traj: &Trajectory) -> Vec<EstimateReport> {
    let Some((_, psi0)) = traj.snapshots.first() else {
        return Vec::new();
    };
    let f = psi0.fingerprint();
    let e0 = psi0.norm_h_minus_1();
    let mut out = Vec::with_capacity(2 * traj.snapshots.len());
    for (t, psi) in &traj.snapshots {
        let e = psi.norm_h_minus_1();
        out.push(
            EstimateReport::inequality(
                "flow-h-1-growth",
                e,
                3.0 * e0 * (1.0 + e0).powf(2.5),
                INEQUALITY_TOL,
                &f,
            )
            .at(*t),
        );
        out.push(
            EstimateReport::inequality("flow-h-1-recovery", e0, 14.0 * e.max(e.powf(2.5)), INEQUALITY_TOL, &f).at(*t),
        );
    }
    out
}

/// The no-inverse-cascade bounds at every recorded time.
pub fn check_cascade(report: &CascadeReport, traj: &Trajectory) -> Vec<EstimateReport> {
    let f = traj.snapshots.first().map(|s| s.1.fingerprint()).unwrap_or_default();
    let c2 = report.energy_scale.powi(2);
    let d2 = report.delta.powi(2);
    let mut out = Vec::with_capacity(3 * report.series.len());
    for &(t, h1, low, high) in &report.series {
        out.push(EstimateReport::inequality("cascade-h-1", h1, 6.0 * report.epsilon, INEQUALITY_TOL, &f).at(t));
        out.push(
            EstimateReport::inequality("cascade-low-modes", low, report.delta, INEQUALITY_TOL, &f)
                .at(t)
                .with_note(format!("cutoff {}", report.cutoff)),
        );
        out.push(EstimateReport::inequality("cascade-energy-split", c2 - d2, high, INEQUALITY_TOL, &f).at(t));
    }
    out
}

/// `(c, |psi|_{-1}^2 / (P_-1 (1 + P_-1)))` for `psi = 2 c cos(2 pi x)`.
pub fn constant_sweep(amplitudes: &[f64]) -> Result<Vec<(f64, f64)>> {
    amplitudes
        .par_iter()
        .map(|&c| {
            let a = Analysis::new(&TrigPotential::cosine(1, 2.0 * c), &ActionOptions::default())?;
            Ok((c, h_minus_1_constant(&a)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// `|c_n| ~ n^-alpha`.
    Power(f64),
    /// `|c_n| ~ exp(-beta n)`.
    Exponential(f64),
}

impl Decay {
    fn weight(&self, n: usize) -> f64 {
        match *self {
            Decay::Power(a) => (n as f64).powf(-a),
            Decay::Exponential(b) => (-b * n as f64).exp(),
        }
    }
}

/// Seeded family of random real zero-mean trigonometric polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub seed: u64,
    pub count: usize,
    /// Each member has between 1 and `max_modes` modes.
    pub max_modes: usize,
    pub decay: Decay,
    /// Range of `|psi|`.
    pub norm_range: (f64, f64),
}

impl Default for Battery {
    fn default() -> Self {
        Battery {
            seed: 1,
            count: 50,
            max_modes: 8,
            decay: Decay::Power(1.0),
            norm_range: (0.05, 2.0),
        }
    }
}

impl Battery {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.norm_range;
        if self.max_modes == 0 || !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "battery needs max_modes >= 1 and 0 < norm_min <= norm_max, got {} and ({lo}, {hi})",
                self.max_modes
            )));
        }
        match self.decay {
            Decay::Power(x) | Decay::Exponential(x) if x.is_finite() && x >= 0.0 => Ok(()),
            d => Err(Error::Config(format!("invalid decay law {d:?}"))),
        }
    }

    pub fn members(&self) -> Vec<TrigPotential> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let modes = rng.random_range(1..=self.max_modes);
                let raw = TrigPotential::new(
                    (1..=modes)
                        .map(|n| {
                            let w = self.decay.weight(n);
                            Complex64::new(w * rng.random_range(-1.0..1.0), w * rng.random_range(-1.0..1.0))
                        })
                        .collect(),
                );
                let target = if self.norm_range.0 < self.norm_range.1 {
                    rng.random_range(self.norm_range.0..=self.norm_range.1)
                } else {
                    self.norm_range.0
                };
                let norm = raw.norm();
                if norm > 0.0 {
                    raw.scale(target / norm)
                } else {
                    raw
                }
            })
            .collect()
    }
}

/// Which families of checks [`run_battery`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckSelection {
    pub identities: bool,
    pub norm_bounds: bool,
    pub prior: bool,
    pub riccati: bool,
    pub geometry: bool,
}

impl CheckSelection {
    pub fn all() -> Self {
        CheckSelection {
            identities: true,
            norm_bounds: true,
            prior: true,
            riccati: true,
            geometry: true,
        }
    }
}

/// Every report for one potential.
pub fn check_all(a: &Analysis, sel: CheckSelection) -> Result<Vec<EstimateReport>> {
    let mut out = Vec::new();
    if sel.identities {
        out.push(check_norm_identity(a));
        out.extend(check_q0_identities(a));
    }
    if sel.norm_bounds {
        out.extend(check_hamiltonian_bounds(a));
        out.extend(check_h_minus_1_bounds(a));
    }
    if sel.prior {
        out.extend(check_prior_estimates(a));
    }
    if sel.riccati {
        out.extend(check_riccati_chain(a));
    }
    if sel.geometry {
        out.extend(check_gap_geometry(a, SCAN_POINTS)?);
    }
    Ok(out)
}

/// A battery member whose evaluation raised an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberFailure {
    pub index: usize,
    pub fingerprint: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub margin: f64,
    pub tolerance: f64,
    pub fingerprint: String,
    pub passed: usize,
    pub failed: usize,
}

/// Largest observed `|psi|_{-1}^2 / (P_-1 (1 + P_-1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantTracker {
    pub max_ratio: f64,
    pub fingerprint: String,
}

impl ConstantTracker {
    pub fn within_stated(&self) -> bool {
        self.max_ratio <= STATED_CONSTANT
    }

    /// Above the stated constant but within the one from the proof.
    pub fn flagged(&self) -> bool {
        self.max_ratio > STATED_CONSTANT && self.max_ratio <= PROOF_CONSTANT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySummary {
    pub members: usize,
    /// Worst margin per report id; identities report `tolerance - margin`.
    pub worst: BTreeMap<String, Worst>,
    pub constant: ConstantTracker,
    pub failures: Vec<MemberFailure>,
}

impl BatterySummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.worst.values().all(|w| w.failed == 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryRun {
    /// Sorted by fingerprint, then by the order of the checks.
    pub reports: Vec<EstimateReport>,
    pub summary: BatterySummary,
}

impl BatteryRun {
    pub fn passed(&self) -> bool {
        self.summary.passed()
    }
}

/// Evaluates the selected checks on every member; members that error are recorded and skipped.
pub fn run_battery(b: &Battery, sel: CheckSelection, opts: &ActionOptions) -> Result<BatteryRun> {
    b.validate()?;
    let members = b.members();
    let results: Vec<MemberResult> = members
        .par_iter()
        .enumerate()
        .map(|(i, psi)| {
            let out = Analysis::new(psi, opts)
                .and_then(|a| Ok((check_all(&a, sel)?, h_minus_1_constant(&a))))
                .map_err(|e| e.to_string());
            (i, psi.fingerprint(), out)
        })
        .collect();
    Ok(summarize(results))
}

type MemberResult = (usize, String, std::result::Result<(Vec<EstimateReport>, f64), String>);

fn summarize(mut results: Vec<MemberResult>) -> BatteryRun {
    results.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut constant = ConstantTracker {
        max_ratio: 0.0,
        fingerprint: String::new(),
    };
    for (index, fingerprint, r) in &results {
        match r {
            Ok((reps, ratio)) => {
                if *ratio > constant.max_ratio {
                    constant = ConstantTracker {
                        max_ratio: *ratio,
                        fingerprint: fingerprint.clone(),
                    };
                }
                reports.extend(reps.iter().cloned());
            }
            Err(e) => failures.push(MemberFailure {
                index: *index,
                fingerprint: fingerprint.clone(),
                error: e.clone(),
            }),
        }
    }
    let mut worst: BTreeMap<String, Worst> = BTreeMap::new();
    for r in &reports {
        // Slack left before the report fails; comparable across kinds.
        let slack = match r.kind {
            CheckKind::Identity => r.tolerance - r.margin,
            _ => r.margin + r.tolerance,
        };
        let w = worst.entry(r.id.clone()).or_insert(Worst {
            margin: r.margin,
            tolerance: r.tolerance,
            fingerprint: r.fingerprint.clone(),
            passed: 0,
            failed: 0,
        });
        let current = match r.kind {
            CheckKind::Identity => w.tolerance - w.margin,
            _ => w.margin + w.tolerance,
        };
        if slack < current {
            w.margin = r.margin;
            w.tolerance = r.tolerance;
            w.fingerprint = r.fingerprint.clone();
        }
        if r.pass {
            w.passed += 1;
        } else if r.binding() {
            w.failed += 1;
        }
    }
    BatteryRun {
        summary: BatterySummary {
            members: results.len(),
            worst,
            constant,
            failures,
        },
        reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analyze(psi: &TrigPotential) -> Analysis {
        Analysis::new(psi, &ActionOptions::default()).unwrap()
    }

    #[test]
    fn zero_potential_is_trivially_consistent() {
        let a = analyze(&TrigPotential::zero());
        let reps = check_all(&a, CheckSelection::all()).unwrap();
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
        assert!(reps.iter().all(|r| r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12));
        assert_eq!(h_minus_1_constant(&a), 0.0);
    }

    #[test]
    fn small_cosine_satisfies_norm_identity() {
        let a = analyze(&TrigPotential::cosine(1, 0.1));
        let r = check_norm_identity(&a);
        assert!((r.lhs - 0.005).abs() < 1e-15);
        assert!(r.pass && r.margin <= 1e-6 * 0.005, "{r:?}");
    }

    #[test]
    fn cosine_checks_pass() {
        for psi in [
            TrigPotential::cosine(1, 0.2),
            TrigPotential::cosine(1, 0.5),
            &TrigPotential::cosine(1, 0.3) + &TrigPotential::cosine(2, 0.1),
        ] {
            let a = analyze(&psi);
            for r in check_all(&a, CheckSelection::all()).unwrap() {
                assert!(r.pass || !r.binding(), "{r:?}");
            }
            let [lo, hi] = check_hamiltonian_bounds(&a);
            assert!(lo.margin > 0.0 && hi.margin > 0.0);
        }
    }

    #[test]
    fn report_pass_matches_margin() {
        let r = EstimateReport::inequality("x", 1.0, 1.0 - 5e-10, 1e-9, "f");
        assert!(r.pass);
        let r = EstimateReport::inequality("x", 1.0, 1.0 - 2e-9, 1e-9, "f");
        assert!(!r.pass);
        assert_eq!(r.verdict(), "inequality violation");
        let r = EstimateReport::identity("x", 1.0, 1.0 + 2e-9, 1e-9, "f");
        assert_eq!(r.verdict(), "identity mismatch");
    }

    #[test]
    fn battery_is_reproducible_and_bounded() {
        let b = Battery {
            count: 12,
            ..Battery::default()
        };
        let m1 = b.members();
        assert_eq!(m1, b.members());
        assert_eq!(m1.len(), 12);
        for psi in &m1 {
            assert!(psi.modes() >= 1 && psi.modes() <= 8);
            let n = psi.norm();
            assert!((0.05 - 1e-12..=2.0 + 1e-12).contains(&n));
        }
        let other = Battery { seed: 2, ..b.clone() }.members();
        assert_ne!(m1, other);
    }

    #[test]
    fn empty_battery_has_empty_summary() {
        let b = Battery {
            count: 0,
            ..Battery::default()
        };
        let run = run_battery(&b, CheckSelection::all(), &ActionOptions::default()).unwrap();
        assert!(run.reports.is_empty() && run.summary.worst.is_empty() && run.passed());
        assert_eq!(run.summary.members, 0);
    }

    #[test]
    fn invalid_battery_is_a_configuration_error() {
        let b = Battery {
            norm_range: (1.0, 0.5),
            ..Battery::default()
        };
        assert!(matches!(b.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn summary_records_hard_failures() {
        let results = vec![
            (0, "b".to_string(), Err("boom".to_string())),
            (
                1,
                "a".to_string(),
                Ok((vec![EstimateReport::inequality("x", 2.0, 1.0, 1e-9, "a")], 0.5)),
            ),
        ];
        let run = summarize(results);
        assert_eq!(run.summary.failures.len(), 1);
        assert_eq!(run.summary.worst["x"].failed, 1);
        assert!(!run.passed());
        assert_eq!(run.summary.constant.max_ratio, 0.5);
    }
}
