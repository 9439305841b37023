use kdv_actions::kdv::{cascade_experiment, evolve, order_check, single_mode, FlowConfig};
use kdv_actions::verify::check_flow_bounds;
use kdv_actions::TrigPotential;
use num_complex::Complex64;

#[test]
fn actions_are_conserved_along_a_two_mode_flow() {
    let psi0 = &TrigPotential::cosine(1, 0.6) + &TrigPotential::sine(2, 0.3);
    let cfg = FlowConfig {
        modes: 128,
        dt: 2.5e-5,
        t_end: 0.1,
        record_every: 1000,
        action_gaps: 6,
        ..FlowConfig::default()
    };
    let traj = evolve(&psi0, &cfg).unwrap();
    let d = &traj.diagnostics;
    let a1 = d.records[0].actions[0];
    assert!(d.action_drift() <= 1e-6 * a1, "{} vs {a1}", d.action_drift());
    assert!(
        d.relative_drift(|r| r.norm * r.norm) < 1e-9,
        "{}",
        d.relative_drift(|r| r.norm * r.norm)
    );
    assert!(
        d.relative_drift(|r| r.hamiltonian) < 1e-9,
        "{}",
        d.relative_drift(|r| r.hamiltonian)
    );
    assert!(check_flow_bounds(&traj).iter().all(|r| r.pass));
    // The profile itself moves.
    let last = &traj.snapshots.last().unwrap().1;
    assert!((last - &psi0).norm() > 0.1);
}

#[test]
fn fourth_order_convergence() {
    let cfg = FlowConfig {
        modes: 128,
        dt: 2e-4,
        t_end: 0.1,
        ..FlowConfig::default()
    };
    let oc = order_check(&TrigPotential::cosine(1, 0.5), &cfg).unwrap();
    assert!(oc.order() > 3.5 && oc.order() < 4.6, "{oc:?}");
}

#[test]
fn neighbouring_high_modes_feed_low_modes_only_weakly() {
    // Interactions of modes 15..17 reach modes 1 and 2 through differences.
    let raw = TrigPotential::from_modes([
        (15, Complex64::new(0.5, 0.0)),
        (16, Complex64::new(0.5, 0.0)),
        (17, Complex64::new(0.0, 0.5)),
    ]);
    let psi0 = raw.scale(1.0 / raw.norm());
    let cfg = FlowConfig {
        modes: 256,
        dt: 5e-5,
        t_end: 0.05,
        record_every: 100,
        ..FlowConfig::default()
    };
    let (report, _) = cascade_experiment(&psi0, 2, &cfg).unwrap();
    assert!(report.holds(), "{report:?}");
    assert!(report.series.iter().any(|s| s.2 > 1e-8));
}

#[test]
fn zero_data_trivially_satisfies_the_cascade_bounds() {
    let cfg = FlowConfig {
        modes: 64,
        dt: 1e-4,
        t_end: 0.01,
        record_every: 10,
        ..FlowConfig::default()
    };
    let (report, _) = cascade_experiment(&TrigPotential::zero(), 2, &cfg).unwrap();
    assert!(report.holds());
    assert_eq!(report.delta, 0.0);
}

#[test]
fn projector_is_identity_inside_the_cutoff() {
    let psi0 = single_mode(16, 1.0);
    assert_eq!(psi0.project(16).norm(), psi0.norm());
    assert_eq!(psi0.project(15).norm(), 0.0);
}
