use super::*;
use crate::dynamics::{initial_data, simulate};
use crate::fields::{Field, Grid, ScalarField, VectorField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Sharp constant in closed form, `(Γ(3)/Γ(3/2))^{2/3}/(3π)`.
fn c1_closed_form() -> f64 {
    (4.0 / PI.sqrt()).powf(2.0 / 3.0) / (3.0 * PI)
}

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
        mu4: 0.005,
        mu5: 0.003,
        mu6: 0.005,
        lambda1: -0.01,
        lambda2: -0.002,
    }
}

fn certified(extra: &[&str]) -> RunConfig {
    let p = serde_json::to_string(&params()).unwrap();
    let text = format!(
        r#"{{"grid":{{"n":[16,16,16],"l":[2,2,2]}},"params":{p},
            "initial":{{"preset":"certified","rho_background":1.0,"rho_radius":0.45,
                        "momentum_radius":0.4,"omega_radius":0.4}},
            "dt":{{"policy":"cfl","safety":0.3,"dt_max":0.05}},
            "t_end":1.0,"max_steps":4,"snapshot_every":2,"request_certificate":true}}"#
    );
    RunConfig::from_json_with_overrides(&text, extra).unwrap()
}

fn refusal(cfg: &RunConfig) -> Vec<Hypothesis> {
    let traj = simulate(cfg).unwrap();
    match certify((&traj).into(), SobolevMethod::Talenti) {
        Err(CertificateError::Refused(h)) => h,
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn talenti_matches_closed_form_and_converges() {
    let exact = c1_closed_form();
    let est: Vec<TalentiEstimate> = [1e2, 1e3, 1e4].iter().map(|&r| talenti(r).unwrap()).collect();
    for e in &est {
        assert!((e.ratio / exact - 1.0).abs() < 1e-13, "{} vs {exact}", e.ratio);
        assert!(e.i6_tail > 0.0 && e.ig_tail > 0.0);
    }
    // truncation alone approaches the limit from one side
    let diffs: Vec<f64> = est.iter().map(|e| (e.truncated - exact).abs()).collect();
    assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2]);
    assert!((est[2].ratio / est[1].ratio - 1.0).abs() <= 1e-6);
    assert_eq!(talenti_c1().unwrap(), est[2].ratio);
}

#[test]
fn talenti_refuses_a_tiny_radius() {
    assert!(matches!(talenti(1.2), Err(CertificateError::Quadrature(_))));
}

#[test]
fn rayleigh_search_agrees_from_below() {
    let r = rayleigh_search(24, 500).unwrap();
    let c1 = talenti_c1().unwrap();
    assert!(r.seed_ratio < r.ratio);
    assert!(r.ratio <= c1 * (1.0 + 1e-12));
    assert!((r.ratio / c1 - 1.0).abs() < 1e-3, "{} vs {c1}", r.ratio);
}

/// Sum of a few smooth compactly supported bumps inside the unit box.
fn random_compact_field(rng: &mut ChaCha8Rng, n: usize) -> VectorField {
    let g = Grid::cube(n, 1.0).unwrap();
    let bumps: Vec<([f64; 3], f64, [f64; 3])> = (0..rng.gen_range(1..4))
        .map(|_| {
            let r = rng.gen_range(0.12..0.3);
            let c = std::array::from_fn(|_| rng.gen_range(r + 0.05..1.0 - r - 0.05));
            let a = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            (c, r, a)
        })
        .collect();
    VectorField::from_fn(g, |x| {
        let mut v = [0.0; 3];
        for (c, r, a) in &bumps {
            let q = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (r * r);
            if q < 1.0 {
                let b = (1.0 - q).powi(3);
                v = vec3::add(v, vec3::scale(b, *a));
            }
        }
        v
    })
}

#[test]
fn no_compact_field_beats_the_sharp_constant() {
    let c1 = talenti_c1().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = random_compact_field(&mut rng, 24);
        let r = embedding_ratio(&u);
        assert!(r <= c1 * (1.0 + 1e-9), "ratio {r}");
        worst = worst.max(r);
    }
    assert!(worst > 0.0);
}

fn random_density(rng: &mut ChaCha8Rng, g: Grid) -> ScalarField {
    let vals = (0..g.cells()).map(|_| rng.gen_range(0.0..2.0f64).powi(3)).collect();
    ScalarField::new(g, vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jensen_holds_for_random_densities(seed in any::<u64>(), gi in 0usize..4) {
        let gamma = [1.2, 1.4, 5.0 / 3.0, 2.0][gi];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, Grid::cube(4, 1.0).unwrap());
        let p = MaterialParams { gamma, ..params() };
        prop_assert!(jensen_check(&rho, &p).unwrap() >= -1e-12);
    }

    #[test]
    fn holder_holds_for_random_pairs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::cube(4, 1.0).unwrap();
        let rho = random_density(&mut rng, g);
        let vals = (0..g.cells()).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let u = VectorField::new(g, vals).unwrap();
        prop_assert!(holder_check(&rho, &u) >= -1e-12);
    }
}

#[test]
fn jensen_equality_cases() {
    let g = Grid::cube(6, 1.0).unwrap();
    for gamma in [1.2, 1.4, 5.0 / 3.0, 2.0] {
        let p = MaterialParams { gamma, ..params() };
        let s = jensen_check(&ScalarField::constant(g, 0.7), &p).unwrap();
        assert!(s.abs() < 1e-14, "gamma {gamma}: {s}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_density(&mut rng, g);
    let s = jensen_check(&rho, &MaterialParams { gamma: 1.2, ..params() }).unwrap();
    assert!(s.abs() < 1e-14);
    assert!(matches!(
        jensen_check(&ScalarField::constant(g, 0.0), &params()),
        Err(CertificateError::ZeroMass)
    ));
}

#[test]
fn holder_equality_cases() {
    let g = Grid::cube(8, 1.0).unwrap();
    let rho = ScalarField::constant(g, 1.3);
    assert_eq!(holder_check(&rho, &VectorField::constant(g, [0.0; 3])), 0.0);
    // ρ ∝ |u|⁵ with a one-signed single component
    let f = |x: [f64; 3]| 1.0 + 0.5 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos();
    let u = VectorField::from_fn(g, |x| [0.0, f(x), 0.0]);
    let rho = ScalarField::from_fn(g, |x| 0.4 * f(x).powi(5));
    let s = holder_check(&rho, &u);
    let scale: f64 = rho.values().iter().zip(u.values()).map(|(r, v)| r * v[1]).sum::<f64>() / g.cells() as f64;
    assert!(s.abs() < 1e-14 * scale, "{s}");
}

#[test]
fn chain_is_sharp_for_uniform_density_and_velocity() {
    let g = Grid::cube(8, 1.0).unwrap();
    for gamma in [1.2, 1.4, 2.0] {
        let p = MaterialParams { gamma, pressure_coeff: 0.8, ..params() };
        let rho = ScalarField::constant(g, 1.5);
        let u = [0.3, -0.2, 0.1];
        let s = State {
            t: 0.0,
            rho: rho.clone(),
            mom: VectorField::constant(g, vec3::scale(1.5, u)),
            d: VectorField::constant(g, [0.0, 0.0, 1.0]),
            omega: VectorField::constant(g, [0.0; 3]),
        };
        let m = 1.5 * g.volume();
        let p_norm = 1.5 * vec3::norm_sq(u).sqrt() * g.volume();
        let lemma = lemma_constant(m, p_norm, &p, talenti_c1().unwrap()).unwrap();
        let rec = lemma_check(0, &s, &p, &lemma, 0.0).unwrap();
        assert!(rec.chain_slack.abs() < 1e-13 * p_norm, "gamma {gamma}: {}", rec.chain_slack);
        assert!(rec.jensen_slack.abs() < 1e-14);
        assert!(rec.holder_slack.abs() < 1e-13 * p_norm);
    }
}

#[test]
fn c2_scales_with_mass() {
    for gamma in [1.2, 1.4, 5.0 / 3.0, 2.0] {
        let p = MaterialParams { gamma, ..params() };
        let factor = 4f64.powf(5.0 / 6.0) * 4f64.powf(-1.0 / (6.0 * (gamma - 1.0)));
        let (a, b) = (c2_constant(0.3, &p), c2_constant(1.2, &p));
        assert!((b / a / factor - 1.0).abs() < 1e-13);
        let la = lemma_constant(0.3, 0.2, &p, 0.18).unwrap();
        let lb = lemma_constant(1.2, 0.2, &p, 0.18).unwrap();
        assert!((la.derived / lb.derived / (factor * factor) - 1.0).abs() < 1e-13);
        assert!(la.c2 > 0.0 && la.derived > 0.0 && la.printed_form > 0.0);
    }
    // 5(γ−1) = 1 at γ = 6/5: C₂ = m^{5/6}(1/(5mA))^{5/6}
    let p = MaterialParams { gamma: 1.2, pressure_coeff: 2.0, ..params() };
    let direct = 0.7f64.powf(5.0 / 6.0) * (1.0f64 / (5.0 * 0.7 * 2.0)).powf(5.0 / 6.0);
    assert!((c2_constant(0.7, &p) / direct - 1.0).abs() < 1e-14);
}

#[test]
fn lemma_constant_preconditions() {
    assert!(matches!(
        lemma_constant(1.0, 0.0, &params(), 0.18),
        Err(CertificateError::Refused(h)) if h == vec![Hypothesis::NonzeroMomentum]
    ));
    let p = MaterialParams { gamma: 1.1, ..params() };
    assert!(matches!(
        lemma_constant(1.0, 0.1, &p, 0.18),
        Err(CertificateError::Refused(h)) if matches!(h[0], Hypothesis::AdiabaticExponent { .. })
    ));
}

#[test]
fn lifespan_formula() {
    let p = MaterialParams { gamma: 2.0, ..params() };
    let l = lifespan_bound(0.8, 3.0, &p);
    assert!((l.exponent - 4.0 / 3.0).abs() < 1e-15);
    let expected = 2.0 * 0.8f64.powf(4.0 / 3.0) / (p.mu4 * 3.0);
    assert!((l.t_star / expected - 1.0).abs() < 1e-14);
    assert!((l.t_star_literal * 2.0 / l.t_star - 1.0).abs() < 1e-14);
    assert!((l.envelope(l.t_star)).abs() < 1e-14);
    let doubled = lifespan_bound(0.8, 3.0, &MaterialParams { mu4: 2.0 * p.mu4, ..p });
    assert_eq!(doubled.t_star, 0.5 * l.t_star);
    assert!(lifespan_bound(0.0, 3.0, &p).degenerate);
}

#[test]
fn lifespan_is_monotone() {
    let p = params();
    let t = |e0: f64, c: f64, mu4: f64| lifespan_bound(e0, c, &MaterialParams { mu4, ..p }).t_star;
    for k in 1..20 {
        let x = k as f64 * 0.1;
        assert!(t(x + 0.1, 1.0, 0.1) > t(x, 1.0, 0.1));
        assert!(t(1.0, x + 0.1, 0.1) < t(1.0, x, 0.1));
        assert!(t(1.0, 1.0, x + 0.1) < t(1.0, 1.0, x));
    }
}

#[test]
fn scaling_u_raises_the_slack() {
    let cfg = certified(&[]);
    let s = initial_data(&cfg).unwrap();
    let p = cfg.params;
    let dv = s.grid().volume_element();
    let m = dv * s.rho.values().iter().sum::<f64>();
    let pm: Vec<f64> = (0..3).map(|a| dv * s.mom.values().iter().map(|v| v[a]).sum::<f64>()).collect();
    let lemma = lemma_constant(m, (pm[0] * pm[0] + pm[1] * pm[1] + pm[2] * pm[2]).sqrt(), &p, 0.18).unwrap();
    let a = lemma_check(0, &s, &p, &lemma, 0.0).unwrap();
    let mut s2 = s.clone();
    for v in s2.mom.values_mut() {
        *v = vec3::scale(2.0, *v);
    }
    let b = lemma_check(0, &s2, &p, &lemma, 0.0).unwrap();
    assert!((b.grad_u_sq / a.grad_u_sq - 4.0).abs() < 1e-12);
    assert_eq!(a.e_internal, b.e_internal);
    assert!(b.slack > a.slack);
}

#[test]
fn gating_names_each_hypothesis() {
    let g = refusal(&certified(&["params.gamma=1.1"]));
    assert!(g.iter().any(|h| matches!(h, Hypothesis::AdiabaticExponent { .. })));
    assert!(g.iter().any(|h| h.to_string().contains("gamma >= 6/5")));

    let g = refusal(&certified(&["request_certificate=false", "initial.momentum_amplitude=0"]));
    assert_eq!(g, vec![Hypothesis::NonzeroMomentum]);

    let g = refusal(&certified(&["require_admissible=false", "params.lambda1=0.01", "params.mu2=0.006", "params.mu3=-0.004"]));
    assert!(g.iter().any(|h| h.to_string().contains("lambda1 < 0")), "{g:?}");

    // |λ₂ − (μ₂+μ₃)| = 0.2 against 2√(0.01·0.008) ≈ 0.018
    let g = refusal(&certified(&["require_admissible=false", "params.lambda2=0.198", "params.mu5=-0.1", "params.mu6=0.108"]));
    assert!(g.iter().any(|h| matches!(h, Hypothesis::CrossCoupling { .. })), "{g:?}");
    assert!(g.iter().all(|h| !matches!(h, Hypothesis::AdiabaticExponent { .. })));
}

#[test]
fn cross_coupling_equality_is_admissible() {
    // with Parodi the cross coefficient is 2λ₂; equality needs λ₂² = −λ₁(μ₅+μ₆)
    let p = MaterialParams::from_independent(1.4, 1.0, 0.05, [0.01; 3], 0.001, 0.005, -0.003, -0.001, 0.006);
    assert_eq!((p.mu6, p.lambda1, p.lambda2), (0.002, -0.002, 0.004));
    assert!((p.cross_coeff().abs() - p.cross_bound()).abs() < 1e-15);
    assert!(parameter_hypotheses(&p).is_empty(), "{:?}", parameter_hypotheses(&p));
    let worse = MaterialParams { lambda1: -0.00199, mu2: -0.002995, mu3: -0.001005, ..p };
    assert!(parameter_hypotheses(&worse).iter().any(|h| matches!(h, Hypothesis::CrossCoupling { .. })));
}

#[test]
fn admissible_run_is_certified() {
    let traj = simulate(&certified(&[])).unwrap();
    let c = certify((&traj).into(), SobolevMethod::Talenti).unwrap();
    assert!(c.holds, "{}", c.verdict);
    assert!(c.verdict.starts_with("certificate holds on [0, "));
    assert_eq!(c.lemma_violations, 0);
    assert!(c.envelope_max_excess <= 0.0);
    assert!(c.lifespan.t_star.is_finite() && c.lifespan.t_star > 0.0);
    assert!(c.c1 > 0.0 && c.c2 > 0.0 && c.c_lemma > 0.0);
    assert!(c.notes.iter().any(|n| n.contains("printed form")));
    assert_eq!(c.records.len(), traj.snapshots.len());
    assert!(c.records.iter().all(|r| r.norms.finite()));
}
