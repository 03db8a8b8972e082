//! The spectral curve `Y² = P(X²)` of the commuting pair `(L, N)`:
//! sampling along Bethe branches, least-squares fitting of `P`, and the
//! operator identity `N² = P(L²)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bethe::{eps_l, eps_n, trace_curve, BethePoint, SolverConfig};
use crate::diffop::DifferenceOperator;
use crate::elliptic::ModularData;
use crate::error::{Error, Result};
use crate::family::{make_l, make_n, SamplePlan};
use crate::report::CheckEntry;

/// Largest accepted condition estimate of the scaled least-squares system.
pub const MAX_CONDITION: f64 = 1e10;
/// Minimum pairwise `X²` distance, relative to the spread of `X²`.
pub const SEPARATION_FRACTION: f64 = 1e-6;
/// Smallest admissible `|leading| / max |p_k|`.
pub const LEADING_FRACTION: f64 = 1e-8;
const DROP_PERCENTILE: f64 = 0.95;

/// Normalization recorded with every fit.
pub const NORMALIZATION: &str = "N = M_{m+1} - M_{-m-1}, no rescaling";

/// A point `(X, Y) = (ε_L, ε_N)` on the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub x: Complex64,
    pub y: Complex64,
    pub source: BethePoint,
    /// True for the `(−t, −c)` partner of a traced point.
    pub partner: bool,
}

/// A straight segment of multipliers `c`, optionally reached by continuation
/// from `approach`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CWindow {
    pub start: Complex64,
    pub end: Complex64,
    pub approach: Option<Complex64>,
}

impl CWindow {
    pub fn new(start: Complex64, end: Complex64) -> Self {
        CWindow { start, end, approach: None }
    }

    pub fn approached_from(mut self, c: Complex64) -> Self {
        self.approach = Some(c);
        self
    }

    /// Two disjoint windows on the line `Re c = 4`, reached from `c = 0.3`.
    pub fn defaults() -> [CWindow; 2] {
        let from = Complex64::new(0.3, 0.0);
        [
            CWindow::new(Complex64::new(4.0, 0.0), Complex64::new(4.0, 11.0)).approached_from(from),
            CWindow::new(Complex64::new(4.0, 11.5), Complex64::new(4.0, 22.0)).approached_from(from),
        ]
    }

    pub fn grid(&self, count: usize) -> Vec<Complex64> {
        match count {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.end - self.start) * (k as f64 / (n - 1) as f64))
                .collect(),
        }
    }
}

fn sample_of(point: BethePoint, partner: bool, md: &ModularData) -> Result<SpectralSample> {
    let x = eps_l(&point, md)?;
    let y = eps_n(&point, md)?;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::PoleProximity {
            x: point.c,
            detail: "eigenvalue is not finite".into(),
        });
    }
    Ok(SpectralSample { x, y, source: point, partner })
}

/// Pairwise-separated subset size of `zs` (greedy), and the spread.
fn distinct_count(zs: &[Complex64]) -> (usize, f64) {
    let spread = spread(zs);
    let mut kept: Vec<Complex64> = Vec::new();
    for &z in zs {
        if kept.iter().all(|&k| (k - z).norm() > SEPARATION_FRACTION * spread) {
            kept.push(z);
        }
    }
    (kept.len(), spread)
}

fn spread(zs: &[Complex64]) -> f64 {
    let mut s: f64 = 0.0;
    for (i, a) in zs.iter().enumerate() {
        for b in &zs[i + 1..] {
            s = s.max((a - b).norm());
        }
    }
    s
}

/// Trace one Bethe branch over `count` equispaced multipliers in `window`
/// and return the traced samples followed by their `(−t, −c)` partners.
pub fn collect_samples(
    m: u32,
    md: &ModularData,
    count: usize,
    window: &CWindow,
    cfg: &SolverConfig,
) -> Result<Vec<SpectralSample>> {
    let needed = 2 * m as usize + 4;
    if count < needed {
        return Err(Error::InsufficientSamples { needed, found: count });
    }
    let start = match window.approach {
        Some(a) => trace_curve(&[a, window.start], m, md, None, cfg)?.pop(),
        None => None,
    };
    let points = trace_curve(&window.grid(count), m, md, start.as_ref(), cfg)?;
    let traced: Vec<SpectralSample> = points
        .into_par_iter()
        .map(|p| sample_of(p, false, md))
        .collect::<Result<_>>()?;
    let partners: Vec<SpectralSample> = traced
        .par_iter()
        .map(|s| sample_of(s.source.negated(), true, md))
        .collect::<Result<_>>()?;
    let zs: Vec<Complex64> = traced.iter().map(|s| s.x * s.x).collect();
    let (found, _) = distinct_count(&zs);
    if found < needed {
        return Err(Error::InsufficientSamples { needed, found });
    }
    Ok(traced.into_iter().chain(partners).collect())
}

/// Least-squares fit of `Y² = Σ_{k=0}^{2m+1} p_k (X²)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFit {
    pub m: u32,
    /// `p_0, …, p_{2m+1}`.
    pub coeffs: Vec<Complex64>,
    pub fit_residual: f64,
    pub validation_residual: f64,
    pub cond_estimate: f64,
    pub n_train: usize,
    pub n_validation: usize,
    /// `|Res(P̂, P̂')|` for the monic `P̂ = P / p_{2m+1}`.
    pub discriminant_abs: f64,
}

/// Serialized fit with the modular parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub m: u32,
    pub gamma: Complex64,
    pub tau: Complex64,
    pub coeffs: Vec<Complex64>,
    pub fit_residual: f64,
    pub validation_residual: f64,
    pub cond_estimate: f64,
    pub discriminant_abs: f64,
    pub normalization: String,
}

impl SpectralFit {
    pub fn to_record(&self, md: &ModularData) -> FitRecord {
        FitRecord {
            m: self.m,
            gamma: md.gamma,
            tau: md.tau,
            coeffs: self.coeffs.clone(),
            fit_residual: self.fit_residual,
            validation_residual: self.validation_residual,
            cond_estimate: self.cond_estimate,
            discriminant_abs: self.discriminant_abs,
            normalization: NORMALIZATION.to_string(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    /// `|Y² − P(X²)| / max(|Y²|, Σ |p_k| |X²|^k)`.
    pub fn relative_residual(&self, x: Complex64, y: Complex64) -> f64 {
        let z = x * x;
        let y2 = y * y;
        let mut scale = y2.norm();
        let mut mag = 0.0;
        let mut zk = 1.0;
        for p in &self.coeffs {
            mag += p.norm() * zk;
            zk *= z.norm();
        }
        scale = scale.max(mag);
        let r = (y2 - self.eval(z)).norm() / scale;
        if r.is_nan() {
            f64::INFINITY
        } else {
            r
        }
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().expect("fit has coefficients")
    }

    /// Coefficients divided by the leading one.
    pub fn normalized(&self) -> Vec<Complex64> {
        let lead = self.leading();
        self.coeffs.iter().map(|c| c / lead).collect()
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &p| acc * z + p)
}

/// Non-partner samples with `|X|` at or below the 95th percentile.
fn fit_inputs(samples: &[SpectralSample]) -> Vec<&SpectralSample> {
    let base: Vec<&SpectralSample> = samples.iter().filter(|s| !s.partner).collect();
    if base.len() < 2 {
        return base;
    }
    let mut mods: Vec<f64> = base.iter().map(|s| s.x.norm()).collect();
    mods.sort_by(f64::total_cmp);
    let pos = DROP_PERCENTILE * (mods.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(mods.len() - 1);
    let cut = mods[lo] + (mods[hi] - mods[lo]) * (pos - lo as f64);
    base.into_iter().filter(|s| s.x.norm() <= cut).collect()
}

/// Column-scaled least squares `Σ_k q_k u_i^k ≈ v_i`, returning the
/// coefficients and the condition estimate of the scaled matrix.
fn scaled_lstsq(us: &[Complex64], vs: &[Complex64], degree: usize) -> Result<(Vec<Complex64>, f64)> {
    let n = us.len();
    let cols = degree + 1;
    let umax = us.iter().fold(0.0_f64, |a, u| a.max(u.norm())).max(f64::MIN_POSITIVE);
    let scales: Vec<f64> = (0..cols).map(|k| umax.powi(k as i32)).collect();
    let a = DMatrix::from_fn(n, cols, |i, k| us[i].powu(k as u32) / scales[k]);
    let b = DVector::from_column_slice(vs);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::RankDeficient { cond });
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
    Ok(((0..cols).map(|k| sol[k] / scales[k]).collect(), cond))
}

/// Fit `P` on an 80/20 split (every fifth usable sample held out).
pub fn fit_p(samples: &[SpectralSample], m: u32) -> Result<SpectralFit> {
    let degree = 2 * m as usize + 1;
    let needed = degree + 3;
    let usable = fit_inputs(samples);
    if usable.len() < needed {
        return Err(Error::InsufficientSamples { needed, found: usable.len() });
    }
    let zs: Vec<Complex64> = usable.iter().map(|s| s.x * s.x).collect();
    let (distinct, _) = distinct_count(&zs);
    if distinct < zs.len() {
        return Err(Error::RankDeficient { cond: f64::INFINITY });
    }

    let mut train = Vec::new();
    let mut valid = Vec::new();
    for (i, s) in usable.iter().enumerate() {
        if i % 5 == 4 {
            valid.push(*s);
        } else {
            train.push(*s);
        }
    }
    if valid.is_empty() {
        valid.push(train.pop().expect("nonempty training set"));
    }

    let us: Vec<Complex64> = train.iter().map(|s| s.x * s.x).collect();
    let vs: Vec<Complex64> = train.iter().map(|s| s.y * s.y).collect();
    let (coeffs, cond) = scaled_lstsq(&us, &vs, degree)?;

    let max_coeff = coeffs.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
    if !(coeffs[degree].norm() > LEADING_FRACTION * max_coeff) {
        return Err(Error::DegreeDeficient { expected: degree });
    }

    let mut fit = SpectralFit {
        m,
        coeffs,
        fit_residual: 0.0,
        validation_residual: 0.0,
        cond_estimate: cond,
        n_train: train.len(),
        n_validation: valid.len(),
        discriminant_abs: 0.0,
    };
    fit.fit_residual = train.iter().map(|s| fit.relative_residual(s.x, s.y)).fold(0.0, f64::max);
    fit.validation_residual = valid.iter().map(|s| fit.relative_residual(s.x, s.y)).fold(0.0, f64::max);
    fit.discriminant_abs = monic_discriminant_abs(&fit.coeffs);
    Ok(fit)
}

/// `|Res(P̂, P̂')|` via the Sylvester determinant; `1` for linear `P`.
pub fn monic_discriminant_abs(coeffs: &[Complex64]) -> f64 {
    let n = coeffs.len() - 1;
    if n < 2 {
        return 1.0;
    }
    let lead = coeffs[n];
    // Descending coefficients of P̂ and P̂'.
    let p: Vec<Complex64> = coeffs.iter().rev().map(|c| c / lead).collect();
    let dp: Vec<Complex64> = (1..=n).rev().map(|k| coeffs[k] / lead * k as f64).collect();
    let size = 2 * n - 1;
    let mut s = DMatrix::<Complex64>::zeros(size, size);
    for row in 0..n - 1 {
        for (j, &c) in p.iter().enumerate() {
            s[(row, row + j)] = c;
        }
    }
    for row in 0..n {
        for (j, &c) in dp.iter().enumerate() {
            s[(n - 1 + row, row + j)] = c;
        }
    }
    s.determinant().norm()
}

/// Largest `|a_k − b_k|` over coefficients normalized by the leading one,
/// relative to the largest normalized coefficient.
pub fn coefficient_agreement(a: &SpectralFit, b: &SpectralFit) -> f64 {
    let (na, nb) = (a.normalized(), b.normalized());
    if na.len() != nb.len() {
        return f64::INFINITY;
    }
    let scale = na.iter().chain(&nb).fold(0.0_f64, |s, c| s.max(c.norm()));
    na.iter().zip(&nb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Fit a full polynomial of degree `4m+2` in `X` and return the largest odd
/// scaled coefficient relative to the largest even one.
pub fn odd_part_ratio(samples: &[SpectralSample], m: u32) -> Result<f64> {
    let degree = 4 * m as usize + 2;
    let usable = fit_inputs(samples);
    if usable.len() < degree + 2 {
        return Err(Error::InsufficientSamples { needed: degree + 2, found: usable.len() });
    }
    let us: Vec<Complex64> = usable.iter().map(|s| s.x).collect();
    let vs: Vec<Complex64> = usable.iter().map(|s| s.y * s.y).collect();
    let (q, _) = scaled_lstsq(&us, &vs, degree)?;
    let umax = us.iter().fold(0.0_f64, |a, u| a.max(u.norm()));
    let scaled: Vec<f64> = q.iter().enumerate().map(|(k, c)| c.norm() * umax.powi(k as i32)).collect();
    let odd = scaled.iter().skip(1).step_by(2).fold(0.0_f64, |a, &v| a.max(v));
    let even = scaled.iter().step_by(2).fold(0.0_f64, |a, &v| a.max(v));
    Ok(odd / even)
}

/// `Σ_k p_k (L²)^k`.
pub fn p_of_l_squared(fit: &SpectralFit, md: &Arc<ModularData>) -> DifferenceOperator {
    let l = make_l(fit.m, md);
    let l2 = l.compose(&l);
    let mut power = DifferenceOperator::identity(md.clone());
    let mut out = DifferenceOperator::zero(md.clone());
    for (k, &p) in fit.coeffs.iter().enumerate() {
        if k > 0 {
            power = power.compose(&l2);
        }
        out = out.add(&power.scale(p));
    }
    out
}

/// `N∘N = P(L²)` on samples, plus the matching-support check
/// `deg(N∘N) = 4m+2`.
pub fn verify_operator_relation(
    fit: &SpectralFit,
    md: &Arc<ModularData>,
    plan: &SamplePlan,
    tol: f64,
) -> Vec<CheckEntry> {
    let m = fit.m;
    let n = make_n(m, md);
    let nn = n.compose(&n);
    let rhs = p_of_l_squared(fit, md);
    let samples = plan.samples_for(md, &[&nn, &rhs]);
    let rep = nn.equal_on(&rhs, &samples, tol);
    let expected_degree = (4 * m + 2) as f64;
    let support_ok = nn.degree().ok() == Some(expected_degree) && nn.shifts() == rhs.shifts();
    vec![
        CheckEntry::new("curve.operator_relation", format!("m={m}"), rep.max_residual, tol),
        CheckEntry::exact("curve.operator_support", format!("m={m}"), support_ok),
    ]
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let r = (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Operator-level symmetry checks of `L` and `N`.
pub fn verify_operator_involutions(m: u32, md: &Arc<ModularData>, plan: &SamplePlan, tol: f64) -> Vec<CheckEntry> {
    let l = make_l(m, md);
    let n = make_n(m, md);
    let nn = n.compose(&n);
    let minus = Complex64::new(-1.0, 0.0);
    let cases: [(&str, DifferenceOperator, DifferenceOperator); 5] = [
        ("involution.s_l", l.conj_s(), l.clone()),
        ("involution.s_n", n.conj_s(), n.scale(minus)),
        ("involution.u_l", l.conj_u(), l.scale(minus)),
        ("involution.u_n", n.conj_u(), n.scale(minus)),
        ("involution.u_nn", nn.conj_u(), nn.clone()),
    ];
    cases
        .into_iter()
        .map(|(name, a, b)| {
            let samples = plan.samples_for(md, &[&a, &b]);
            let rep = a.equal_on(&b, &samples, tol);
            CheckEntry::new(name, format!("m={m}"), rep.max_residual, tol)
        })
        .collect()
}

/// Eigenvalue-level symmetry checks on traced samples: `(−t, −c)` gives
/// `(X, −Y)`, `(t, c + πi/γ)` gives `(−X, −Y)`; both satisfy the fit.
pub fn verify_sample_involutions(
    samples: &[SpectralSample],
    fit: &SpectralFit,
    md: &ModularData,
    sign_tol: f64,
    curve_tol: f64,
) -> Vec<CheckEntry> {
    let m = fit.m;
    let mut sign_s: f64 = 0.0;
    let mut sign_u: f64 = 0.0;
    let mut curve: f64 = 0.0;
    let mut failed = false;
    for s in samples.iter().filter(|s| !s.partner) {
        let negated = sample_of(s.source.negated(), true, md);
        let shifted = sample_of(s.source.half_period_partner(md), true, md);
        match (negated, shifted) {
            (Ok(a), Ok(b)) => {
                sign_s = sign_s.max(rel(a.x, s.x)).max(rel(a.y, -s.y));
                sign_u = sign_u.max(rel(b.x, -s.x)).max(rel(b.y, -s.y));
                curve = curve
                    .max(fit.relative_residual(a.x, a.y))
                    .max(fit.relative_residual(b.x, b.y));
            }
            _ => failed = true,
        }
    }
    if failed {
        sign_s = f64::INFINITY;
    }
    vec![
        CheckEntry::new("involution.partner_sign_s", format!("m={m}"), sign_s, sign_tol),
        CheckEntry::new("involution.partner_sign_u", format!("m={m}"), sign_u, sign_tol),
        CheckEntry::new("involution.partner_on_curve", format!("m={m}"), curve, curve_tol),
    ]
}
