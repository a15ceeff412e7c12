use super::*;
use crate::constitutive::MaterialParams;
use crate::dynamics::{initial_data, simulate, Integrator, RunConfig};
use crate::fields::ScalarField;
use proptest::prelude::*;

fn params() -> MaterialParams {
    MaterialParams {
        gamma: 1.4,
        pressure_coeff: 1.0,
        inertia_j: 0.05,
        k1: 0.01,
        k2: 0.008,
        k3: 0.012,
        mu1: 0.001,
        mu2: -0.004,
        mu3: 0.006,
        mu4: 0.01,
        mu5: 0.003,
        mu6: 0.005,
        lambda1: -0.01,
        lambda2: -0.002,
    }
}

fn config(preset: &str, n: usize, extra: &[String]) -> RunConfig {
    let p = serde_json::to_string(&params()).unwrap();
    let text = format!(
        r#"{{"grid":{{"n":[{n},{n},{n}],"l":[1,1,1]}},"params":{p},
            "initial":{{"preset":"{preset}"}},"t_end":1.0,"snapshot_every":1000}}"#
    );
    RunConfig::from_json_with_overrides(&text, extra).unwrap()
}

fn state(preset: &str, n: usize, seed: u64) -> State {
    initial_data(&config(preset, n, &[format!("seed={seed}")])).unwrap()
}

#[test]
fn quiescent_energy_is_internal_only() {
    let s = state("quiescent", 12, 0);
    let p = params();
    let r = functionals(&s, &p, Coupling::Full).unwrap();
    assert_eq!(r.e_kinetic, 0.0);
    assert_eq!(r.e_rotational, 0.0);
    assert_eq!(r.e_elastic, 0.0);
    assert_eq!(r.e_total, r.e_internal);
    let dv = s.grid().volume_element();
    let direct: f64 = s.rho.values().iter().map(|r| r.powf(p.gamma)).sum::<f64>() * dv * p.pressure_coeff
        / (p.gamma - 1.0);
    assert!((r.e_internal / direct - 1.0).abs() < 1e-13);
}

#[test]
fn uniform_density_with_gamma_two() {
    let mut s = state("static", 8, 0);
    let g = *s.grid();
    s.rho = ScalarField::constant(g, 1.7);
    let p = MaterialParams { gamma: 2.0, pressure_coeff: 1.0, ..params() };
    let r = functionals(&s, &p, Coupling::Full).unwrap();
    assert!((r.e_internal - 1.7 * 1.7 * g.volume()).abs() < 1e-13);
    assert!((r.mass - 1.7 * g.volume()).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn components_and_dissipations_have_their_signs(seed in 0u64..10_000) {
        let s = state("periodic", 8, seed);
        let p = params();
        let r = functionals(&s, &p, Coupling::Full).unwrap();
        prop_assert!(r.e_kinetic >= 0.0 && r.e_internal >= 0.0);
        prop_assert!(r.e_rotational >= 0.0 && r.e_elastic >= 0.0);
        prop_assert_eq!(r.e_total, r.e_kinetic + r.e_internal + r.e_rotational + r.e_elastic);
        prop_assert!(r.mass > 0.0);
        prop_assert!(r.d1 >= 0.0 && r.d2 >= 0.0 && r.d_div >= 0.0 && r.d3 >= 0.0);
        prop_assert!(r.d_n <= 0.0);
        let bound = 2.0 * (-p.lambda1 * (p.mu5 + p.mu6)).sqrt() * r.n_sq.sqrt() * r.ad_sq.sqrt();
        prop_assert!(r.d_cross.abs() <= bound * (1.0 + 1e-12));
        // admissible parameters: the dissipation part of the rate is non-positive
        prop_assert!(r.energy_rate() <= 1e-15);
    }
}

#[test]
fn navier_stokes_mode_drops_director_dissipation() {
    let s = state("periodic", 8, 4);
    let full = functionals(&s, &params(), Coupling::Full).unwrap();
    let ns = functionals(&s, &params(), Coupling::NavierStokes).unwrap();
    assert_eq!((ns.d1, ns.d3, ns.d_n, ns.d_cross), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(ns.d2, full.d2);
    assert_eq!(ns.e_total, full.e_total);
}

#[test]
fn static_equilibrium_has_zero_residual() {
    let traj = simulate(&config("static", 8, &["max_steps=20".into()])).unwrap();
    assert_eq!(traj.reports.len(), 21);
    let r = energy_identity_residual(&traj.reports).unwrap();
    assert_eq!(r.max_abs, 0.0);
}

#[test]
fn residual_rejects_mixed_grids_and_short_series() {
    let a = functionals(&state("periodic", 8, 1), &params(), Coupling::Full).unwrap();
    let mut b = functionals(&state("periodic", 6, 1), &params(), Coupling::Full).unwrap();
    b.t = 1.0;
    assert!(matches!(energy_identity_residual(&[a, b]), Err(DiagnosticsError::GridMismatch(..))));
    assert!(matches!(energy_identity_residual(&[a]), Err(DiagnosticsError::TooFew(2))));
    assert!(matches!(energy_identity_residual(&[a, a]), Err(DiagnosticsError::NonIncreasing(_))));
}

#[test]
fn corrupted_cell_is_located() {
    let mut s = state("periodic", 8, 2);
    let g = *s.grid();
    let idx = g.index(3, 5, 1);
    let d = s.d.values()[idx];
    s.d.values_mut()[idx] = vec3::scale(1.1, d);
    let rep = invariant_report(&s, (1e-6, 1e-6));
    assert!(rep.breached());
    assert_eq!(rep.drift_d_cell, [3, 5, 1]);
    assert!((rep.drift_d - 0.1).abs() < 1e-12);
    assert!(rep.breaches[0].contains("[3, 5, 1]"));
    assert_eq!(rep.breaches.len(), 1);
}

#[test]
fn initial_drifts_vanish() {
    for preset in ["static", "quiescent", "certified", "ns-reduction", "periodic"] {
        let extra = if preset == "periodic" { vec![] } else { vec!["grid.l=[2,2,2]".to_string()] };
        let s = initial_data(&config(preset, 12, &extra)).unwrap();
        let rep = invariant_report(&s, (1e-15, 1e-15));
        assert!(!rep.breached(), "{preset}: {:?}", rep.breaches);
    }
}

#[test]
fn sphere_drift_after_fixed_time_is_fourth_order() {
    let s = state("periodic", 8, 7);
    let p = params();
    let drift = |steps: usize| {
        let mut it = Integrator::new(p, 1e-3, Coupling::Full);
        let mut cur = s.clone();
        let dt = 0.2 / steps as f64;
        for _ in 0..steps {
            cur = it.step(&cur, dt, false).unwrap();
        }
        invariant_report(&cur, (1.0, 1.0)).drift_d
    };
    let (a, b) = (drift(25), drift(50));
    assert!(b > 1e-14, "drift {b} below roundoff");
    assert!((a / b).log2() > 3.5, "{a} {b}");
}

#[test]
fn support_margin_of_compact_and_empty_fields() {
    let g = Grid::cube(16, 1.0).unwrap();
    let mut mom = vec![[0.0; 3]; g.cells()];
    assert_eq!(support_margin(&g, &mom), 0.5);
    mom[g.index(8, 8, 8)] = [1.0, 0.0, 0.0];
    mom[g.index(4, 8, 8)] = [0.0, 1e-7, 0.0];
    assert_eq!(support_margin(&g, &mom), 0.5);
    mom[g.index(4, 8, 8)] = [0.0, 1e-3, 0.0];
    assert_eq!(support_margin(&g, &mom), 0.25);
}

#[test]
fn csv_round_trip_is_exact() {
    let traj = simulate(&config("periodic", 8, &["max_steps=5".into()])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diagnostics.csv");
    write_csv(&path, &traj.config_hash, &traj.reports).unwrap();
    let (hash, back) = read_csv(&path).unwrap();
    assert_eq!(hash, traj.config_hash);
    assert_eq!(back, traj.reports);
    let again = dir.path().join("again.csv");
    write_csv(&again, &hash, &back).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn csv_without_hash_line_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, CSV_COLUMNS.join(",") + "\n").unwrap();
    assert!(matches!(read_csv(&path), Err(DiagnosticsError::Table(_))));
}

#[test]
fn audit_of_an_admissible_run() {
    let traj = simulate(&config("periodic", 8, &["max_steps=30".into()])).unwrap();
    let a = energy_audit(&traj.config_hash, &traj.reports).unwrap();
    assert!(a.law_violations.is_empty(), "{:?}", a.law_violations);
    assert_eq!(a.intervals, 30);
    assert!(a.mass_drift_rel <= 1e-14);
    assert!(a.momentum_drift_abs.iter().all(|x| *x <= 1e-15));
    assert!(a.residual_budget >= 0.0);
}

#[test]
fn refinement_orders_of_a_power_law() {
    let h = [0.1, 0.05, 0.025];
    let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
    for o in refinement_orders(&h, &e) {
        assert!((o - 2.0).abs() < 1e-12);
    }
}
