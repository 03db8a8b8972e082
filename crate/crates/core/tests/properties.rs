use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use qlame::bethe::bethe_b;
use qlame::config::{RunConfig, DEFAULT_TOLERANCES};
use qlame::diffop::{DifferenceOperator, SampleSet, POLE_GUARD};
use qlame::elliptic::{theta1, ModularData, SeriesConfig};
use qlame::family::{make_l, make_m, make_n};
use qlame::report::{CheckEntry, Report};
use qlame::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

fn md() -> Arc<ModularData> {
    Arc::new(ModularData::default_params())
}

fn samples(ops: &[&DifferenceOperator], seed: u64) -> SampleSet {
    SampleSet::for_operators(&md(), 12, seed, ops)
}

fn label() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, -0.8..0.8f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_is_odd_and_quasi_periodic(
        zr in -1.0..1.0f64, zi in -0.5..0.5f64,
        tr in -0.5..0.5f64, ti in 0.6..2.0f64,
    ) {
        let (z, tau) = (Complex64::new(zr, zi), Complex64::new(tr, ti));
        let cfg = SeriesConfig::default();
        let t = theta1(z, tau, &cfg).unwrap();
        prop_assume!(t.norm() > 1e-6);
        prop_assert!(rel(theta1(-z, tau, &cfg).unwrap(), -t) < 1e-12);
        prop_assert!(rel(theta1(z + 1.0, tau, &cfg).unwrap(), -t) < 1e-12);
        let factor = -(-I * PI * tau - 2.0 * I * PI * z).exp();
        prop_assert!(rel(theta1(z + tau, tau, &cfg).unwrap(), factor * t) < 1e-10);
    }

    #[test]
    fn bracket_relations(a in 0.0..1.0f64, b in -0.5..0.5f64) {
        let md = md();
        let x = md.from_lattice_coords(a, b);
        prop_assume!(md.lattice_distance(x) > 1e-2);
        let (r1, r2) = md.shift_check(x).unwrap();
        prop_assert!(r1 < 1e-10 && r2 < 1e-10);
        prop_assert!(rel(md.bracket(-x), -md.bracket(x)) < 1e-12);
        prop_assert!(rel(md.bracket(Complex64::new(1.0, 0.0)), Complex64::new(1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn composition_is_associative(l in label(), k in label(), m in 0u32..3, seed in any::<u64>()) {
        let (md, lop) = (md(), make_l(m, &md()));
        let (ml, mk) = (make_m(l, m, &md), make_m(k, m, &md));
        let left = lop.compose(&ml).compose(&mk);
        let right = lop.compose(&ml.compose(&mk));
        let rep = left.equal_on(&right, &samples(&[&left, &right], seed), 1e-10);
        prop_assert!(rep.pass, "residual {}", rep.max_residual);
    }

    #[test]
    fn reflections_are_involutions(l in label(), m in 0u32..4, seed in any::<u64>()) {
        let md = md();
        let op = make_m(l, m, &md);
        let back = op.conj_s().conj_s();
        prop_assert!(op.equal_on(&back, &samples(&[&op, &back], seed), 1e-12).pass);
        let round = op.conj_u().conj_u_inv();
        prop_assert!(op.equal_on(&round, &samples(&[&op, &round], seed), 1e-12).pass);
        let phase = (-I * PI * (l - m as f64)).exp();
        let u = op.conj_u();
        let expected = op.scale(phase);
        let rep = u.equal_on(&expected, &samples(&[&u, &expected], seed), 1e-10);
        prop_assert!(rep.pass, "residual {}", rep.max_residual);
    }

    #[test]
    fn scale_distributes_over_add(l in label(), kr in -2.0..2.0f64, ki in -2.0..2.0f64, seed in any::<u64>()) {
        let md = md();
        let k = Complex64::new(kr, ki);
        let (a, b) = (make_l(1, &md), make_m(l, 1, &md));
        let lhs = a.add(&b).scale(k);
        let rhs = a.scale(k).add(&b.scale(k));
        prop_assert!(lhs.equal_on(&rhs, &samples(&[&lhs, &rhs], seed), 1e-12).pass);
        let zero = a.sub(&a);
        prop_assert!(zero.is_empty());
    }

    #[test]
    fn n_is_antisymmetric_under_reflection(m in 0u32..4, seed in any::<u64>()) {
        let n = make_n(m, &md());
        let lhs = n.conj_s();
        let rhs = n.scale(Complex64::new(-1.0, 0.0));
        prop_assert!(lhs.equal_on(&rhs, &samples(&[&lhs, &rhs], seed), 1e-10).pass);
    }

    #[test]
    fn lattice_acts_on_bethe_functions(
        coords in proptest::collection::vec((0.05..0.95f64, -0.45..0.45f64), 2..4),
        idx in 0usize..4,
    ) {
        let md = md();
        let m = coords.len() as u32;
        let t: Vec<Complex64> = coords.iter().map(|&(a, b)| md.from_lattice_coords(a, b)).collect();
        let idx = idx % t.len();
        let base: Result<Vec<_>, _> = (0..t.len()).map(|i| bethe_b(i, &t, m, &md)).collect();
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let phase = (4.0 * PI * I * md.gamma).exp();
        let mut by_omega = t.clone();
        by_omega[idx] += md.omega;
        let mut by_omega_prime = t.clone();
        by_omega_prime[idx] += md.omega_prime;
        for (i, &b) in base.iter().enumerate() {
            prop_assert!(rel(bethe_b(i, &by_omega, m, &md).unwrap(), b) < 1e-10);
            prop_assert!(rel(bethe_b(i, &by_omega_prime, m, &md).unwrap(), phase * b) < 1e-10);
        }
    }

    #[test]
    fn samples_avoid_poles(seed in any::<u64>(), m in 1u32..4) {
        let md = md();
        let op = make_l(m, &md);
        let s = SampleSet::for_operators(&md, 30, seed, &[&op]);
        for x in &s.points {
            for p in op.pole_classes() {
                prop_assert!(md.lattice_distance(x - p) > POLE_GUARD);
            }
        }
    }

    #[test]
    fn tolerance_settings_round_trip(idx in 0usize..DEFAULT_TOLERANCES.len(), exp in -14.0..-2.0f64) {
        let (name, _) = DEFAULT_TOLERANCES[idx];
        let value = 10f64.powf(exp);
        let mut cfg = RunConfig::default();
        cfg.apply_text(&format!("tol.{name} = {value:e}\nseed={idx}\n"), "test").unwrap();
        prop_assert_eq!(cfg.tolerances.get(name), value);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn report_is_sorted_and_counted(residuals in proptest::collection::vec((0usize..5, 0.0..2.0f64), 0..20)) {
        let entries: Vec<CheckEntry> = residuals
            .iter()
            .map(|&(n, r)| CheckEntry::new(format!("check.{n}"), format!("r={r}"), r, 1.0))
            .collect();
        let expected_pass = entries.iter().filter(|e| e.pass).count();
        let report = Report::new(serde_json::Value::Null, entries);
        prop_assert!(report.entries.windows(2).all(|w| (&w[0].name, &w[0].params) <= (&w[1].name, &w[1].params)));
        prop_assert_eq!(report.summary.passed, expected_pass);
        prop_assert_eq!(report.overall_pass, expected_pass == residuals.len());
    }
}
