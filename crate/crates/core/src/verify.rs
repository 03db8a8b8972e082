//! Verification suites: each returns report entries, `cmd_verify` runs them
//! all for a [`RunConfig`].

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bethe::{
    baker_akhiezer, bethe_b_raw, bethe_residual, ellipticity_residuals, eps_family, eps_l, eps_n,
    min_separation, residual_transformed_eq, solve_given_c, BethePoint, SolverConfig,
};
use crate::config::{RunConfig, Tolerances};
use crate::diffop::{format_complex, CoefficientFn, DifferenceOperator, SampleSet, POLE_GUARD};
use crate::elliptic::ModularData;
use crate::error::{Error, Result};
use crate::family::{self, coeff_a, generic_label, make_l, make_m, make_n, SamplePlan};
use crate::report::{CheckEntry, Report};
use crate::spectral::{
    coefficient_agreement, collect_samples, fit_p, odd_part_ratio, verify_operator_involutions,
    verify_operator_relation, verify_sample_involutions, CWindow, SpectralSample,
};

/// Multipliers used for the Bethe checks.
pub const BETHE_C_VALUES: [(f64, f64); 5] = [(0.25, 0.0), (0.3, 0.0), (0.8, 0.5), (1.5, -0.7), (2.0, 3.0)];

pub fn bethe_c_values() -> Vec<Complex64> {
    BETHE_C_VALUES.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let r = (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Worst relative defects of the theta and `[x]` symmetries at random
/// off-lattice points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelResiduals {
    pub theta_odd: f64,
    pub theta_period_one: f64,
    pub theta_period_tau: f64,
    pub bracket_odd: f64,
    pub bracket_omega: f64,
    pub bracket_omega_prime: f64,
}

impl KernelResiduals {
    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("kernel.theta_odd", self.theta_odd),
            ("kernel.theta_period_one", self.theta_period_one),
            ("kernel.theta_period_tau", self.theta_period_tau),
            ("kernel.bracket_odd", self.bracket_odd),
            ("kernel.bracket_omega", self.bracket_omega),
            ("kernel.bracket_omega_prime", self.bracket_omega_prime),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().fold(0.0, |a, &(_, v)| a.max(v))
    }
}

pub fn kernel_residuals(md: &ModularData, count: usize, seed: u64) -> KernelResiduals {
    let samples = SampleSet::generate(md, count, seed, 1e-2, &[Complex64::new(0.0, 0.0)]);
    let i = Complex64::new(0.0, 1.0);
    let pi = std::f64::consts::PI;
    let th = |z: Complex64| md.theta(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let mut r = KernelResiduals {
        theta_odd: 0.0,
        theta_period_one: 0.0,
        theta_period_tau: 0.0,
        bracket_odd: 0.0,
        bracket_omega: 0.0,
        bracket_omega_prime: 0.0,
    };
    for &x in &samples.points {
        let z = md.gamma * x;
        let t = th(z);
        r.theta_odd = r.theta_odd.max(rel(th(-z), -t));
        r.theta_period_one = r.theta_period_one.max(rel(th(z + 1.0), -t));
        let factor = -(-i * pi * md.tau - 2.0 * i * pi * z).exp();
        r.theta_period_tau = r.theta_period_tau.max(rel(th(z + md.tau), factor * t));
        let b = md.bracket(x);
        r.bracket_odd = r.bracket_odd.max(rel(md.bracket(-x), -b));
        r.bracket_omega = r.bracket_omega.max(rel(md.bracket(x + md.omega), -b));
        let f = -(-(i * pi / md.omega) * (md.omega_prime + 2.0 * x)).exp();
        r.bracket_omega_prime = r.bracket_omega_prime.max(rel(md.bracket(x + md.omega_prime), f * b));
    }
    r
}

pub fn kernel_checks(md: &ModularData, count: usize, seed: u64, tol: f64) -> Vec<CheckEntry> {
    kernel_residuals(md, count, seed)
        .named()
        .iter()
        .map(|&(name, v)| CheckEntry::new(name, format!("points={count}"), v, tol))
        .collect()
}

/// `max_x |(op ψ)(x) − ε ψ(x)| / |ψ(x)|` over `count` points avoiding the
/// poles of `op` and the zeros of `ψ`.
pub fn eigen_residual(
    op: &DifferenceOperator,
    point: &BethePoint,
    eps: Complex64,
    md: &ModularData,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let mut avoid = op.pole_classes();
    avoid.extend(point.t.iter().map(|&t| -t));
    let samples = SampleSet::generate(md, count, seed, POLE_GUARD, &avoid);
    let mut worst: f64 = 0.0;
    for &x in &samples.points {
        let psi = |y: Complex64| baker_akhiezer(&point.t, point.c, y, md).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let lhs = op.apply(psi, x)?;
        let p = psi(x);
        let r = (lhs - eps * p).norm() / p.norm();
        worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    Ok(worst)
}

fn or_fail(name: &str, params: &str, tol: f64, r: Result<f64>) -> CheckEntry {
    match r {
        Ok(v) => CheckEntry::new(name, params, v, tol),
        Err(_) => CheckEntry::failed(name, params, tol),
    }
}

/// Label `l` away from the poles of `ψ(t; ·)` normalisation and with
/// generic `[l]`, `[l ± m]`.
fn label_for_point<R: Rng>(rng: &mut R, point: &BethePoint, md: &ModularData) -> Complex64 {
    loop {
        let l = generic_label(rng, point.m, md);
        if point.t.iter().all(|&t| md.lattice_distance(l + t) > 0.05) {
            return l;
        }
    }
}

/// All checks on one accepted Bethe point.
pub fn bethe_point_checks(
    point: &BethePoint,
    md: &Arc<ModularData>,
    tols: &Tolerances,
    seed: u64,
    params: &str,
) -> Vec<CheckEntry> {
    let m = point.m;
    let mf = m as f64;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    out.push(CheckEntry::new(
        "bethe.residual",
        params,
        bethe_residual(&point.t, point.c, m, md),
        tols.get("bethe_residual"),
    ));
    out.push(CheckEntry::exact(
        "bethe.separation",
        params,
        min_separation(&point.t, md) > POLE_GUARD,
    ));

    let l_op = make_l(m, md);
    let n_op = make_n(m, md);
    let e_l = eps_l(point, md);
    let e_n = eps_n(point, md);
    let eig = tols.get("eigen");
    out.push(or_fail(
        "bethe.eigen_l",
        params,
        eig,
        e_l.as_ref()
            .map_err(|_| Error::Domain("ε_L".into()))
            .and_then(|&e| eigen_residual(&l_op, point, e, md, 20, seed)),
    ));
    out.push(or_fail(
        "bethe.eigen_n",
        params,
        eig,
        e_n.as_ref()
            .map_err(|_| Error::Domain("ε_N".into()))
            .and_then(|&e| eigen_residual(&n_op, point, e, md, 20, seed)),
    ));

    let fam = tols.get("eigen_family");
    let mut worst_family: Result<f64> = Ok(0.0);
    for _ in 0..5 {
        let l = label_for_point(&mut rng, point, md);
        let r = eps_family(point, l, md).and_then(|e| eigen_residual(&make_m(l, m, md), point, e, md, 20, seed));
        worst_family = match (worst_family, r) {
            (Ok(a), Ok(b)) => Ok(a.max(b)),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
    }
    out.push(or_fail("bethe.eigen_family", params, fam, worst_family));

    let mut worst_product: Result<f64> = Ok(0.0);
    for _ in 0..3 {
        let l = label_for_point(&mut rng, point, md);
        let k = label_for_point(&mut rng, point, md);
        let r = (|| -> Result<f64> {
            let lhs = eps_family(point, l, md)? * eps_family(point, k, md)?;
            let mut rhs = Complex64::new(0.0, 0.0);
            let mut scale = lhs.norm();
            for r in 0..=m {
                let j = l - mf + 2.0 * r as f64;
                let term = coeff_a(l, r, m, md).eval(k) * eps_family(point, k + j, md)?;
                scale = scale.max(term.norm());
                rhs += term;
            }
            Ok((lhs - rhs).norm() / scale)
        })();
        worst_product = match (worst_product, r) {
            (Ok(a), Ok(b)) => Ok(a.max(b)),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
    }
    out.push(or_fail("bethe.eigen_product_rule", params, fam, worst_product));

    let cross = (|| -> Result<f64> {
        let en = eps_n(point, md)?;
        let diff = eps_family(point, Complex64::new(mf + 1.0, 0.0), md)?
            - eps_family(point, Complex64::new(-mf - 1.0, 0.0), md)?;
        let mut r = rel(en, diff);
        if m >= 1 {
            let f = md.ell_fact(2 * m - 1) / md.ell_fact(m - 1);
            r = r.max(rel(eps_family(point, Complex64::new(mf - 1.0, 0.0), md)?, f * eps_l(point, md)?));
        }
        Ok(r)
    })();
    out.push(or_fail("bethe.eigen_cross_check", params, fam, cross));

    let tr = tols.get("transformed");
    let transformed = e_l.as_ref().map_err(|_| Error::Domain("ε_L".into())).and_then(|&e| {
        let mut avoid: Vec<Complex64> = (0..=m + 1).map(|k| Complex64::new(k as f64, 0.0)).collect();
        avoid.extend(point.t.iter().flat_map(|&t| [-t, -t - 1.0, -t + 1.0]));
        let xs = SampleSet::generate(md, 20, seed ^ 0x5eed, POLE_GUARD, &avoid);
        xs.points
            .iter()
            .map(|&x| residual_transformed_eq(point, e, x, md))
            .try_fold(0.0_f64, |a, r| r.map(|v| a.max(v)))
    });
    out.push(or_fail("bethe.transformed_equation", params, tr, transformed));

    out.push(CheckEntry::new(
        "bethe.ellipticity",
        params,
        ellipticity_residuals(point, md, 20, seed).max(),
        tols.get("ellipticity"),
    ));

    // Γ-action on the roots and the ℤ-action on c.
    if m >= 1 {
        let base: Vec<Complex64> = (0..point.t.len()).map(|i| bethe_b_raw(i, &point.t, m, md)).collect();
        let phase = (Complex64::new(0.0, 4.0 * std::f64::consts::PI) * md.gamma).exp();
        let mut shifted = point.t.clone();
        shifted[0] += md.omega;
        let mut shifted_p = point.t.clone();
        shifted_p[0] += md.omega_prime;
        let mut r: f64 = 0.0;
        for (i, &b) in base.iter().enumerate() {
            r = r.max(rel(bethe_b_raw(i, &shifted, m, md), b));
            r = r.max(rel(bethe_b_raw(i, &shifted_p, m, md), phase * b));
        }
        out.push(CheckEntry::new("bethe.lattice_action", params, r, tols.get("bethe_residual")));
    }
    let partner = point.half_period_partner(md);
    let z_action = (|| -> Result<f64> {
        Ok(bethe_residual(&partner.t, partner.c, m, md).max(rel(eps_l(&partner, md)?, -eps_l(point, md)?)))
    })();
    out.push(or_fail("bethe.half_period_action", params, tols.get("eigen"), z_action));
    out
}

/// Family identities for one `m`.
pub fn family_checks(m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tols: &Tolerances, seed: u64) -> Vec<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (m as u64).wrapping_mul(0x9e37_79b9));
    let mut out = Vec::new();
    let comm = tols.get("commutation");
    let rec = tols.get("recurrence");
    out.extend(family::verify_special_members(m, md, plan, tols.get("identity")));
    out.push(family::verify_phi_factorization(m, md, plan, tols.get("identity")));
    out.extend(family::verify_degree_table(m, md));
    out.extend(family::verify_n_structure(m, md, plan, tols.get("identity")));

    let mi = m as i64;
    let mut labels: Vec<Complex64> = (-mi - 1..=mi + 1).map(|l| Complex64::new(l as f64, 0.0)).collect();
    for _ in 0..3 {
        labels.push(generic_label(&mut rng, m, md));
    }
    for &l in &labels {
        out.push(family::verify_commutation(l, m, md, plan, comm));
    }
    for _ in 0..3 {
        let l = generic_label(&mut rng, m, md);
        let k = generic_label(&mut rng, m, md);
        out.push(family::verify_pair_commutation(l, k, m, md, plan, comm));
        out.push(family::verify_product_rule(l, k, m, md, plan, comm));
    }
    for _ in 0..5 {
        let l = generic_label(&mut rng, m, md);
        out.push(match family::verify_recurrence(l, m, md, plan, rec) {
            Ok(e) => e,
            Err(_) => CheckEntry::failed("family.recurrence", format!("m={m} l={}", format_complex(l)), rec),
        });
        out.push(family::verify_omega_shift(l, m, md, plan, rec));
    }
    out
}

/// Bethe solutions at the standard multipliers and all per-point checks.
pub fn bethe_checks(m: u32, md: &Arc<ModularData>, tols: &Tolerances, seed: u64) -> Vec<CheckEntry> {
    let cfg = SolverConfig { seed, ..SolverConfig::default() };
    let mut out = Vec::new();
    for c in bethe_c_values() {
        let params = format!("m={m} c={}", format_complex(c));
        match solve_given_c(c, m, md, &cfg) {
            Ok(points) => {
                out.push(CheckEntry::exact("bethe.solutions_found", params.clone(), !points.is_empty()));
                for (k, p) in points.iter().enumerate() {
                    let pp = format!("{params} sol={k}");
                    out.extend(bethe_point_checks(p, md, tols, seed.wrapping_add(k as u64), &pp));
                }
            }
            Err(_) => out.push(CheckEntry::exact("bethe.solutions_found", params, false)),
        }
    }
    out
}

/// Curve fits on the two standard windows, their agreement, the operator
/// relation and the involutions.
pub fn curve_checks(
    m: u32,
    md: &Arc<ModularData>,
    plan: &SamplePlan,
    tols: &Tolerances,
    count: usize,
    seed: u64,
) -> Vec<CheckEntry> {
    let cfg = SolverConfig { seed, ..SolverConfig::default() };
    let params = format!("m={m}");
    let mut out = Vec::new();
    let mut fits = Vec::new();
    let mut pooled: Vec<SpectralSample> = Vec::new();
    for (w, window) in CWindow::defaults().iter().enumerate() {
        let wp = format!("m={m} window={w}");
        let fit = collect_samples(m, md, count, window, &cfg).and_then(|s| {
            let f = fit_p(&s, m)?;
            pooled.extend(s.iter().cloned());
            out.extend(verify_sample_involutions(&s, &f, md, tols.get("involution"), tols.get("partner_curve")).into_iter().map(|mut e| {
                e.params = wp.clone();
                e
            }));
            Ok(f)
        });
        match fit {
            Ok(f) => {
                out.push(CheckEntry::exact(
                    "curve.degree",
                    wp.clone(),
                    f.coeffs.len() == 2 * m as usize + 2,
                ));
                out.push(CheckEntry::new(
                    "curve.validation",
                    wp,
                    f.validation_residual,
                    tols.get("curve_validation"),
                ));
                fits.push(f);
            }
            Err(_) => {
                out.push(CheckEntry::exact("curve.degree", wp.clone(), false));
                out.push(CheckEntry::failed("curve.validation", wp, tols.get("curve_validation")));
            }
        }
    }
    let agree = tols.get("window_agreement");
    let rel_tol = if m >= 2 { tols.get("operator_relation_deep") } else { tols.get("operator_relation") };
    if let [a, b] = fits.as_slice() {
        out.push(CheckEntry::new("curve.window_agreement", params.clone(), coefficient_agreement(a, b), agree));
        out.extend(verify_operator_relation(a, md, plan, rel_tol));
        out.push(or_fail("curve.odd_part", &params, tols.get("odd_part"), odd_part_ratio(&pooled, m)));
    } else {
        out.push(CheckEntry::failed("curve.window_agreement", params.clone(), agree));
        out.push(CheckEntry::failed("curve.operator_relation", params.clone(), rel_tol));
    }
    out.extend(verify_operator_involutions(m, md, plan, tols.get("involution")));
    out
}

/// Perturb the coefficient of `op` at its first shift by the factor `1 + eps`.
pub fn perturb_first_coefficient(op: &DifferenceOperator, eps: f64) -> DifferenceOperator {
    let terms: Vec<(Complex64, CoefficientFn)> = op
        .terms()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let c = if i == 0 { t.coeff.scaled(Complex64::new(1.0 + eps, 0.0)) } else { t.coeff.clone() };
            (t.shift, c)
        })
        .collect();
    DifferenceOperator::from_terms_unpruned(op.modular().clone(), terms)
}

/// Negative controls: a perturbed commutator and a random `(t, c)` must
/// both fail their checks. Residuals are the control's own measurements;
/// the entry passes when they exceed the thresholds.
pub fn control_checks(m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tols: &Tolerances, seed: u64) -> Vec<CheckEntry> {
    let mut out = Vec::new();
    let m = m.max(1);
    let l_op = make_l(m, md);
    let ml = perturb_first_coefficient(&make_m(Complex64::new(m as f64 + 1.5, 0.3), m, md), 1e-3);
    let samples = plan.samples_for(md, &[&l_op, &ml]);
    let rep = l_op.compose(&ml).equal_on(&ml.compose(&l_op), &samples, tols.get("commutation"));
    out.push(CheckEntry::exact(
        "control.perturbed_commutation_fails",
        format!("m={m} residual={:.2e}", rep.max_residual),
        !rep.pass,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<Complex64> = (0..m)
        .map(|_| md.from_lattice_coords(rng.random_range(0.1..0.9), rng.random_range(-0.4..0.4)))
        .collect();
    let c = Complex64::new(rng.random_range(0.1..1.0), rng.random_range(-0.5..0.5));
    let fake = BethePoint { m, t, c, residual: f64::NAN };
    let r = eps_l(&fake, md).and_then(|e| eigen_residual(&l_op, &fake, e, md, 20, seed));
    let fails = match r {
        Ok(v) => !(v < tols.get("eigen")),
        Err(_) => true,
    };
    out.push(CheckEntry::exact(
        "control.random_point_eigen_fails",
        format!("m={m} residual={:.2e}", r.unwrap_or(f64::INFINITY)),
        fails,
    ));
    out
}

/// Run every suite for every `m` in the configuration.
pub fn cmd_verify(config: &RunConfig) -> Result<Report> {
    let md = Arc::new(config.modular()?);
    let plan = SamplePlan { count: config.sample_count, seed: config.seed };
    let tols = &config.tolerances;
    let mut entries = kernel_checks(&md, 100, config.seed, tols.get("kernel"));
    for &m in &config.m_list {
        entries.extend(family_checks(m, &md, &plan, tols, config.seed));
        entries.extend(bethe_checks(m, &md, tols, config.seed));
        entries.extend(curve_checks(m, &md, &plan, tols, config.curve_samples, config.seed));
        entries.extend(control_checks(m, &md, &plan, tols, config.seed));
    }
    Ok(Report::new(serde_json::to_value(config)?, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_tight() {
        let md = ModularData::default_params();
        let r = kernel_residuals(&md, 100, 1);
        assert!(r.max() < 1e-10, "{r:?}");
    }

    #[test]
    fn perturbation_changes_one_coefficient() {
        let md = Arc::new(ModularData::default_params());
        let l = make_l(1, &md);
        let p = perturb_first_coefficient(&l, 1e-3);
        let x = Complex64::new(0.3, 0.2);
        let a = l.terms()[0].coeff.eval(x);
        let b = p.terms()[0].coeff.eval(x);
        assert!((b / a - 1.001).norm() < 1e-12);
        assert_eq!(l.terms()[1].coeff.eval(x), p.terms()[1].coeff.eval(x));
    }

    #[test]
    fn controls_fail_as_designed() {
        let md = Arc::new(ModularData::default_params());
        let tols = Tolerances::default();
        for e in control_checks(1, &md, &SamplePlan::default(), &tols, 3) {
            assert!(e.pass, "{}", e.line());
        }
    }
}
