//! The q-Lamé operator `L`, the commuting family `M_l` and the antisymmetric
//! generator `N`, together with numerical checks of their identities.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffop::{format_complex, CoefficientFn, DifferenceOperator, SampleSet, POLE_GUARD};
use crate::elliptic::ModularData;
use crate::error::{Error, Result};
use crate::report::CheckEntry;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// How many points to sample, and from which seed, when a check needs a
/// guarded sample set for its operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub count: usize,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan { count: 50, seed: 20_240_601 }
    }
}

impl SamplePlan {
    pub fn samples_for(&self, md: &ModularData, ops: &[&DifferenceOperator]) -> SampleSet {
        SampleSet::for_operators(md, self.count, self.seed, ops)
    }
}

/// `L = ([x−m]/[x]) T₁ + ([x+m]/[x]) T₋₁`.
pub fn make_l(m: u32, md: &Arc<ModularData>) -> DifferenceOperator {
    let mf = m as f64;
    let (a, b) = (md.clone(), md.clone());
    let zero = vec![c(0.0)];
    DifferenceOperator::from_terms(
        md.clone(),
        vec![
            (
                c(1.0),
                CoefficientFn::new(format!("[x-{m}]/[x]"), zero.clone(), move |x| {
                    if m == 0 {
                        c(1.0)
                    } else {
                        a.bracket(x - mf) / a.bracket(x)
                    }
                }),
            ),
            (
                c(-1.0),
                CoefficientFn::new(format!("[x+{m}]/[x]"), zero, move |x| {
                    if m == 0 {
                        c(1.0)
                    } else {
                        b.bracket(x + mf) / b.bracket(x)
                    }
                }),
            ),
        ],
    )
}

/// Coefficient `A^l_{l−m+2k}(x)` of `M_l`:
///
/// `(−1)^k [m k] ∏_{j<m−k} [l+m−j][x+m−j]/[x+l+k−j] · ∏_{j<k} [l−m+j][x−m+j]/[x+l−m+k+j]`.
pub fn coeff_a(l: Complex64, k: u32, m: u32, md: &Arc<ModularData>) -> CoefficientFn {
    assert!(k <= m, "coefficient index k = {k} exceeds m = {m}");
    let mf = m as f64;
    let kf = k as f64;
    let upper = m - k;

    let mut constant = md.ell_binom(c(mf), k);
    if k % 2 == 1 {
        constant = -constant;
    }
    for j in 0..upper {
        constant *= md.bracket(l + mf - j as f64);
    }
    for j in 0..k {
        constant *= md.bracket(l - mf + j as f64);
    }

    let mut poles = Vec::with_capacity(m as usize);
    for j in 0..upper {
        poles.push(-(l + kf - j as f64));
    }
    for j in 0..k {
        poles.push(-(l - mf + kf + j as f64));
    }

    let md = md.clone();
    let expr = format!(
        "A^{{{}}}_{{{}}}(x) [m={m}, k={k}]",
        format_complex(l),
        format_complex(l - mf + 2.0 * kf)
    );
    CoefficientFn::new(expr, poles, move |x| {
        let mut v = constant;
        for j in 0..upper {
            let j = j as f64;
            v *= md.bracket(x + mf - j) / md.bracket(x + l + kf - j);
        }
        for j in 0..k {
            let j = j as f64;
            v *= md.bracket(x - mf + j) / md.bracket(x + l - mf + kf + j);
        }
        v
    })
}

/// `M_l = Σ_{k=0}^m A^l_{l−m+2k}(x) T_{l−m+2k}`, identically vanishing
/// coefficients pruned.
pub fn make_m(l: Complex64, m: u32, md: &Arc<ModularData>) -> DifferenceOperator {
    let terms = (0..=m)
        .map(|k| (l - m as f64 + 2.0 * k as f64, coeff_a(l, k, m, md)))
        .collect();
    DifferenceOperator::from_terms(md.clone(), terms)
}

/// `N = M_{m+1} − S M_{m+1} S`.
pub fn make_n(m: u32, md: &Arc<ModularData>) -> DifferenceOperator {
    let top = make_m(c(m as f64 + 1.0), m, md);
    top.sub(&top.conj_s())
}

/// `[2m]!/[m]!`, the scalar value of `M_m`.
pub fn scalar_of_m_m(m: u32, md: &ModularData) -> Complex64 {
    md.ell_fact(2 * m) / md.ell_fact(m)
}

/// Draw a label `l` with `[l]`, `[l−m]`, `[l+m]` bounded away from zero.
pub fn generic_label<R: Rng>(rng: &mut R, m: u32, md: &ModularData) -> Complex64 {
    let span = m as f64 + 2.0;
    loop {
        let l = Complex64::new(rng.random_range(-span..span), rng.random_range(-1.0..1.0));
        let mf = m as f64;
        let ok = [l, l - mf, l + mf]
            .iter()
            .all(|&y| md.lattice_distance(y) > 0.05);
        if ok {
            return l;
        }
    }
}

fn compare(
    name: &str,
    params: String,
    lhs: &DifferenceOperator,
    rhs: &DifferenceOperator,
    plan: &SamplePlan,
    tol: f64,
) -> CheckEntry {
    let samples = plan.samples_for(lhs.modular(), &[lhs, rhs]);
    let rep = lhs.equal_on(rhs, &samples, tol);
    CheckEntry::new(name, params, rep.max_residual, tol)
}

/// `M_m = ([2m]!/[m]!) Id` and, for `m ≥ 1`, `M_{m−1} = ([2m−1]!/[m−1]!) L`.
pub fn verify_special_members(m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tol: f64) -> Vec<CheckEntry> {
    let mut out = Vec::new();
    let id = DifferenceOperator::identity(md.clone()).scale(scalar_of_m_m(m, md));
    let mm = make_m(c(m as f64), m, md);
    out.push(compare("family.m_m_scalar", format!("m={m}"), &mm, &id, plan, tol));
    if m >= 1 {
        let factor = md.ell_fact(2 * m - 1) / md.ell_fact(m - 1);
        let rhs = make_l(m, md).scale(factor);
        let lhs = make_m(c(m as f64 - 1.0), m, md);
        out.push(compare("family.m_m_minus_1_is_l", format!("m={m}"), &lhs, &rhs, plan, tol));
    }
    out
}

/// `L M_l = M_l L` on samples.
pub fn verify_commutation(l: Complex64, m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tol: f64) -> CheckEntry {
    let lop = make_l(m, md);
    let ml = make_m(l, m, md);
    compare(
        "family.commute_l_ml",
        format!("m={m} l={}", format_complex(l)),
        &lop.compose(&ml),
        &ml.compose(&lop),
        plan,
        tol,
    )
}

/// `M_l M_k = M_k M_l` on samples.
pub fn verify_pair_commutation(
    l: Complex64,
    k: Complex64,
    m: u32,
    md: &Arc<ModularData>,
    plan: &SamplePlan,
    tol: f64,
) -> CheckEntry {
    let ml = make_m(l, m, md);
    let mk = make_m(k, m, md);
    compare(
        "family.commute_ml_mk",
        format!("m={m} l={} k={}", format_complex(l), format_complex(k)),
        &ml.compose(&mk),
        &mk.compose(&ml),
        plan,
        tol,
    )
}

/// `L M_l = ([l+m]/[l]) M_{l−1} + ([l−m]/[l]) M_{l+1}`.
pub fn verify_recurrence(
    l: Complex64,
    m: u32,
    md: &Arc<ModularData>,
    plan: &SamplePlan,
    tol: f64,
) -> Result<CheckEntry> {
    let bl = md.bracket(l);
    if !(bl.norm() >= POLE_GUARD) {
        return Err(Error::DegenerateParameter(format!("[l] vanishes at l = {l}")));
    }
    let mf = m as f64;
    let lhs = make_l(m, md).compose(&make_m(l, m, md));
    let down = make_m(l - 1.0, m, md).scale(md.bracket(l + mf) / bl);
    let up = make_m(l + 1.0, m, md).scale(md.bracket(l - mf) / bl);
    Ok(compare(
        "family.recurrence",
        format!("m={m} l={}", format_complex(l)),
        &lhs,
        &down.add(&up),
        plan,
        tol,
    ))
}

/// `M_l M_k = Σ_j A^l_j(k) M_{k+j}`, `j = l−m+2r`.
pub fn verify_product_rule(
    l: Complex64,
    k: Complex64,
    m: u32,
    md: &Arc<ModularData>,
    plan: &SamplePlan,
    tol: f64,
) -> CheckEntry {
    let lhs = make_m(l, m, md).compose(&make_m(k, m, md));
    let mut rhs = DifferenceOperator::zero(md.clone());
    for r in 0..=m {
        let j = l - m as f64 + 2.0 * r as f64;
        let weight = coeff_a(l, r, m, md).eval(k);
        rhs = rhs.add(&make_m(k + j, m, md).scale(weight));
    }
    compare(
        "family.product_rule",
        format!("m={m} l={} k={}", format_complex(l), format_complex(k)),
        &lhs,
        &rhs,
        plan,
        tol,
    )
}

/// `M_{l+ω} = M_l T_ω`.
pub fn verify_omega_shift(l: Complex64, m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tol: f64) -> CheckEntry {
    let lhs = make_m(l + md.omega, m, md);
    let rhs = make_m(l, m, md).compose(&DifferenceOperator::shift(md.clone(), md.omega));
    compare(
        "family.omega_shift",
        format!("m={m} l={}", format_complex(l)),
        &lhs,
        &rhs,
        plan,
        tol,
    )
}

/// `φ(x)/φ(x+1) = [x−m]/[x]` and `φ(−x)/φ(1−x) = [x+m]/[x]`, i.e.
/// `L = φ T₁ φ⁻¹ + φ(−x) T₋₁ φ(−x)⁻¹`.
pub fn verify_phi_factorization(m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tol: f64) -> CheckEntry {
    let mf = m as i64;
    let zeros: Vec<Complex64> = (-mf - 1..=mf + 1).map(|k| c(k as f64)).collect();
    let samples = SampleSet::generate(md, plan.count, plan.seed, POLE_GUARD, &zeros);
    let l = make_l(m, md);
    let up = l.coefficient_at(c(1.0)).expect("L has a T_1 term");
    let down = l.coefficient_at(c(-1.0)).expect("L has a T_-1 term");
    let residual = samples
        .points
        .iter()
        .map(|&x| {
            let first = md.phi(x, m) / md.phi(x + 1.0, m);
            let second = md.phi(-x, m) / md.phi(1.0 - x, m);
            let (e1, e2) = (up.eval(x), down.eval(x));
            let r1 = (first - e1).norm() / e1.norm().max(1.0);
            let r2 = (second - e2).norm() / e2.norm().max(1.0);
            r1.max(r2)
        })
        .fold(0.0, f64::max);
    CheckEntry::new("family.phi_factorization", format!("m={m}"), residual, tol)
}

/// Expected `(degree, length)` of `M_l` for integer `l`.
///
/// For `|l| ≥ m+1` every coefficient survives; for `|l| ≤ m` the vanishing
/// factors `[l+m−j]`, `[l−m+j]` leave shifts `−(m−|l|) … m−|l|`.
pub fn expected_degree_length(l: i64, m: u32) -> (f64, f64) {
    let m = m as i64;
    if l.abs() > m {
        ((l + m) as f64, (2 * m) as f64)
    } else {
        let d = m - l.abs();
        (d as f64, (2 * d) as f64)
    }
}

/// Degree/length of `M_l` for integer `l ∈ {−m−2, …, m+2}` from surviving
/// coefficients, plus `N` (degree `2m+1`, length `4m+2`).
pub fn verify_degree_table(m: u32, md: &Arc<ModularData>) -> Vec<CheckEntry> {
    let mut out = Vec::new();
    let mi = m as i64;
    for l in -mi - 2..=mi + 2 {
        let op = make_m(c(l as f64), m, md);
        let expected = expected_degree_length(l, m);
        let got = op.degree().ok().zip(op.length().ok());
        out.push(CheckEntry::exact(
            "family.degree_length",
            format!("m={m} l={l}"),
            got == Some(expected),
        ));
    }
    let n = make_n(m, md);
    let got = n.degree().ok().zip(n.length().ok());
    let expected = ((2 * m + 1) as f64, (4 * m + 2) as f64);
    out.push(CheckEntry::exact(
        "family.degree_length_n",
        format!("m={m}"),
        got == Some(expected),
    ));
    out
}

/// `S N S = −N` and `N = M_{m+1} − M_{−m−1}`.
pub fn verify_n_structure(m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tol: f64) -> Vec<CheckEntry> {
    let n = make_n(m, md);
    let alt = make_m(c(m as f64 + 1.0), m, md).sub(&make_m(c(-(m as f64) - 1.0), m, md));
    vec![
        compare(
            "family.n_antisymmetric",
            format!("m={m}"),
            &n.conj_s(),
            &n.scale(c(-1.0)),
            plan,
            tol,
        ),
        compare("family.n_cross_check", format!("m={m}"), &n, &alt, plan, tol),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn md() -> Arc<ModularData> {
        Arc::new(ModularData::default_params())
    }

    fn plan() -> SamplePlan {
        SamplePlan { count: 30, seed: 11 }
    }

    #[test]
    fn l_at_m_zero_is_sum_of_translations() {
        let md = md();
        let l = make_l(0, &md);
        let t = DifferenceOperator::shift(md.clone(), c(1.0))
            .add(&DifferenceOperator::shift(md.clone(), c(-1.0)));
        let s = plan().samples_for(&md, &[&l]);
        assert!(l.equal_on(&t, &s, 1e-15).pass);
    }

    #[test]
    fn l_coefficient_values() {
        let md = md();
        let l = make_l(1, &md);
        let x = c(0.7);
        let got = l.coefficient_at(c(1.0)).unwrap().eval(x);
        let expected = md.bracket(c(-0.3)) / md.bracket(c(0.7));
        assert!((got - expected).norm() < 1e-14);
        let s = plan().samples_for(&md, &[&l]);
        assert!(l.conj_s().equal_on(&l, &s, 1e-12).pass);
    }

    #[test]
    fn coefficient_a_special_values() {
        let md = md();
        // A^m_0 is the constant [2m]!/[m]!.
        let a = coeff_a(c(2.0), 0, 2, &md);
        let expected = scalar_of_m_m(2, &md);
        for x in [c(0.3), Complex64::new(1.1, 0.7)] {
            assert!((a.eval(x) - expected).norm() < 1e-12 * expected.norm());
        }
        // The [l−m] factor kills k ≥ 1 at l = m.
        let z = coeff_a(c(2.0), 1, 2, &md);
        assert!(z.eval(c(0.3)).norm() < 1e-14);
        // A^0_1 at m = 1 is L's T₁ coefficient.
        let a01 = coeff_a(c(0.0), 1, 1, &md).eval(c(0.7));
        let l1 = md.bracket(c(-0.3)) / md.bracket(c(0.7));
        assert!((a01 - l1).norm() < 1e-13);
    }

    #[test]
    fn special_members_for_small_m() {
        let md = md();
        for m in 0..=2 {
            for e in verify_special_members(m, &md, &plan(), 1e-10) {
                assert!(e.pass, "{}", e.line());
            }
        }
    }

    #[test]
    fn m_two_one_shifts() {
        let md = md();
        let op = make_m(c(2.0), 1, &md);
        assert_eq!(op.shifts(), vec![c(1.0), c(3.0)]);
        assert_eq!(op.degree().unwrap(), 3.0);
        assert_eq!(op.length().unwrap(), 2.0);
    }

    #[test]
    fn degree_table_and_n() {
        let md = md();
        for m in 0..=2 {
            for e in verify_degree_table(m, &md) {
                assert!(e.pass, "{}", e.line());
            }
        }
        let n = make_n(1, &md);
        assert_eq!(n.degree().unwrap(), 3.0);
        assert_eq!(n.length().unwrap(), 6.0);
    }

    #[test]
    fn n_structure() {
        let md = md();
        for m in 1..=2 {
            for e in verify_n_structure(m, &md, &plan(), 1e-10) {
                assert!(e.pass, "{}", e.line());
            }
        }
    }

    #[test]
    fn commutation_examples() {
        let md = md();
        assert!(verify_commutation(c(1.0), 1, &md, &plan(), 1e-8).pass);
        for m in 1..=2 {
            let e = verify_commutation(c(m as f64 + 1.0), m, &md, &plan(), 1e-8);
            assert!(e.pass, "{}", e.line());
        }
        let e = verify_commutation(Complex64::new(1.37, 0.4), 2, &md, &plan(), 1e-8);
        assert!(e.pass, "{}", e.line());
    }

    #[test]
    fn commutator_of_l_and_m2_vanishes() {
        let md = md();
        let l = make_l(1, &md);
        let m2 = make_m(c(2.0), 1, &md);
        assert!(l.commutator(&m2).is_empty());
    }

    #[test]
    fn conjugation_lemmas_for_complex_label() {
        let md = md();
        let l = c(2.3);
        let m = 1;
        let ml = make_m(l, m, &md);
        let s = plan().samples_for(&md, &[&ml]);
        let reflected = make_m(-l, m, &md);
        assert!(ml.conj_s().equal_on(&reflected, &s, 1e-10).pass);
        let i = Complex64::new(0.0, 1.0);
        let phase = (-i * std::f64::consts::PI * (l - m as f64)).exp();
        let rep = ml.conj_u().equal_on(&ml.scale(phase), &s, 1e-12);
        assert!(rep.pass, "{rep:?}");
        let lop = make_l(m, &md);
        assert!(lop.conj_u().equal_on(&lop.scale(c(-1.0)), &s, 1e-12).pass);
    }

    #[test]
    fn recurrence_examples() {
        let md = md();
        assert!(verify_recurrence(c(2.6), 1, &md, &plan(), 1e-8).unwrap().pass);
        assert!(verify_recurrence(Complex64::new(1.1, 0.3), 2, &md, &plan(), 1e-8).unwrap().pass);
        assert!(verify_recurrence(c(1.0), 1, &md, &plan(), 1e-8).unwrap().pass);
        assert!(matches!(
            verify_recurrence(c(0.0), 1, &md, &plan(), 1e-8),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn product_rule_examples() {
        let md = md();
        assert!(verify_product_rule(c(1.0), c(0.4), 1, &md, &plan(), 1e-8).pass);
        assert!(verify_product_rule(c(0.0), c(2.3), 1, &md, &plan(), 1e-8).pass);
        let e = verify_product_rule(c(2.2), c(-1.7), 2, &md, &plan(), 1e-8);
        assert!(e.pass, "{}", e.line());
    }

    #[test]
    fn omega_shift_examples() {
        let md = md();
        assert!(verify_omega_shift(c(1.3), 1, &md, &plan(), 1e-8).pass);
        assert!(verify_omega_shift(c(1.0), 1, &md, &plan(), 1e-8).pass);
        assert!(verify_omega_shift(Complex64::new(0.4, 0.2), 2, &md, &plan(), 1e-8).pass);
    }

    #[test]
    fn phi_factorization() {
        let md = md();
        for m in [0, 1, 3] {
            let e = verify_phi_factorization(m, &md, &SamplePlan { count: 20, seed: 5 }, 1e-10);
            assert!(e.pass, "{}", e.line());
        }
        let x = c(0.7);
        let ratio = md.phi(x, 1) / md.phi(x + 1.0, 1);
        let l1 = md.bracket(x - 1.0) / md.bracket(x);
        assert!((ratio - l1).norm() < 1e-14);
    }

    #[test]
    fn generic_labels_avoid_degenerate_values() {
        let md = md();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let l = generic_label(&mut rng, 2, &md);
            assert!(md.bracket(l).norm() > 1e-3);
        }
    }
}
