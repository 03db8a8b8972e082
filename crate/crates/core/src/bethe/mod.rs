//! Bethe ansatz: solutions `(t, c)` of the Bethe equations, the
//! Baker–Akhiezer eigenfunction `ψ` and the eigenvalues it carries.

mod solver;
mod transformed;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffop::POLE_GUARD;
use crate::elliptic::ModularData;
use crate::error::{Error, Result};

pub use solver::{solve_given_c, trace_curve, SolverConfig};
pub use transformed::{ellipticity_residuals, residual_transformed_eq, EllipticityResiduals};

/// A solution of the Bethe equations for a fixed `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BethePoint {
    pub m: u32,
    pub t: Vec<Complex64>,
    pub c: Complex64,
    /// `max_i |b_i(t) − e^{2γc}| / |e^{2γc}|`.
    pub residual: f64,
}

/// Serialized form of a [`BethePoint`] with the modular parameters it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheRecord {
    pub m: u32,
    pub gamma: Complex64,
    pub tau: Complex64,
    pub t: Vec<Complex64>,
    pub c: Complex64,
    pub residual: f64,
}

impl BethePoint {
    pub fn to_record(&self, md: &ModularData) -> BetheRecord {
        BetheRecord {
            m: self.m,
            gamma: md.gamma,
            tau: md.tau,
            t: self.t.clone(),
            c: self.c,
            residual: self.residual,
        }
    }

    pub fn from_record(r: &BetheRecord) -> Result<Self> {
        if r.t.len() != r.m as usize {
            return Err(Error::Config(format!(
                "record has {} roots for m = {}",
                r.t.len(),
                r.m
            )));
        }
        Ok(BethePoint {
            m: r.m,
            t: r.t.clone(),
            c: r.c,
            residual: r.residual,
        })
    }

    /// The point `(−t, −c)`, which solves the same equations.
    pub fn negated(&self) -> BethePoint {
        BethePoint {
            m: self.m,
            t: self.t.iter().map(|&z| -z).collect(),
            c: -self.c,
            residual: self.residual,
        }
    }

    /// The point `(t, c + πi/γ)`, which solves the same equations.
    pub fn half_period_partner(&self, md: &ModularData) -> BethePoint {
        BethePoint {
            m: self.m,
            t: self.t.clone(),
            c: self.c + Complex64::new(0.0, std::f64::consts::PI) / md.gamma,
            residual: self.residual,
        }
    }
}

/// `b_i(t) = [t_i−m]/[t_i+m] ∏_{j≠i} [t_j−t_i−1]/[t_j−t_i+1]` without pole checks.
pub(crate) fn bethe_b_raw(i: usize, t: &[Complex64], m: u32, md: &ModularData) -> Complex64 {
    let mf = m as f64;
    let ti = t[i];
    let mut v = md.bracket(ti - mf) / md.bracket(ti + mf);
    for (j, &tj) in t.iter().enumerate() {
        if j != i {
            v *= md.bracket(tj - ti - 1.0) / md.bracket(tj - ti + 1.0);
        }
    }
    v
}

/// `b_i(t)`; fails if a denominator argument lies within the pole guard of
/// the lattice.
pub fn bethe_b(i: usize, t: &[Complex64], m: u32, md: &ModularData) -> Result<Complex64> {
    if i >= t.len() {
        return Err(Error::Domain(format!("index {i} out of range for {} roots", t.len())));
    }
    let ti = t[i];
    let mut dens = vec![ti + m as f64];
    dens.extend(t.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &tj)| tj - ti + 1.0));
    for d in dens {
        if md.lattice_distance(d) < POLE_GUARD {
            return Err(Error::PoleProximity {
                x: ti,
                detail: format!("Bethe denominator argument {d} is near the lattice"),
            });
        }
    }
    Ok(bethe_b_raw(i, t, m, md))
}

/// `e^{2γc}`.
pub fn bethe_target(c: Complex64, md: &ModularData) -> Complex64 {
    (2.0 * md.gamma * c).exp()
}

/// Relative Bethe residual `max_i |b_i(t) − e^{2γc}| / |e^{2γc}|`.
pub fn bethe_residual(t: &[Complex64], c: Complex64, m: u32, md: &ModularData) -> f64 {
    let target = bethe_target(c, md);
    let scale = target.norm();
    (0..t.len())
        .map(|i| {
            let r = (bethe_b_raw(i, t, m, md) - target).norm() / scale;
            if r.is_nan() {
                f64::INFINITY
            } else {
                r
            }
        })
        .fold(0.0, f64::max)
}

fn check_normalisable(t: &[Complex64], md: &ModularData) -> Result<()> {
    for &tj in t {
        if md.lattice_distance(tj) < POLE_GUARD {
            return Err(Error::PoleProximity {
                x: tj,
                detail: "root t_j is on the lattice; ψ cannot be normalised".into(),
            });
        }
    }
    Ok(())
}

/// `ψ(t, c; x) = e^{cγx} ∏_j [x+t_j]/[t_j]`.
pub fn baker_akhiezer(t: &[Complex64], c: Complex64, x: Complex64, md: &ModularData) -> Result<Complex64> {
    check_normalisable(t, md)?;
    Ok(psi_raw(t, c, x, md))
}

pub(crate) fn psi_raw(t: &[Complex64], c: Complex64, x: Complex64, md: &ModularData) -> Complex64 {
    t.iter()
        .fold((c * md.gamma * x).exp(), |acc, &tj| acc * md.bracket(x + tj) / md.bracket(tj))
}

/// Eigenvalue of `L` on `ψ`: `e^{−γc} [2m]/[m] ∏_j [t_j+m−1]/[t_j+m]`,
/// and `2 cosh(γc)` when `m = 0`.
pub fn eps_l(point: &BethePoint, md: &ModularData) -> Result<Complex64> {
    let m = point.m;
    if m == 0 {
        return Ok(2.0 * (md.gamma * point.c).cosh());
    }
    let mf = m as f64;
    let mut v = (-md.gamma * point.c).exp() * md.bracket(Complex64::new(2.0 * mf, 0.0))
        / md.bracket(Complex64::new(mf, 0.0));
    for &tj in &point.t {
        let den = tj + mf;
        if md.lattice_distance(den) < POLE_GUARD {
            return Err(Error::PoleProximity {
                x: tj,
                detail: "[t_j+m] vanishes".into(),
            });
        }
        v *= md.bracket(tj + mf - 1.0) / md.bracket(den);
    }
    Ok(v)
}

/// Eigenvalue of `M_l` on `ψ`: `[2m]! ψ(t; l) / ([m]! ψ(t; m))`.
pub fn eps_family(point: &BethePoint, l: Complex64, md: &ModularData) -> Result<Complex64> {
    check_normalisable(&point.t, md)?;
    let m = point.m;
    let base = psi_raw(&point.t, point.c, Complex64::new(m as f64, 0.0), md);
    if !(base.norm() > 0.0) || !base.is_finite() {
        return Err(Error::PoleProximity {
            x: Complex64::new(m as f64, 0.0),
            detail: "ψ(t; m) vanishes".into(),
        });
    }
    let ratio = md.ell_fact(2 * m) / md.ell_fact(m);
    Ok(ratio * psi_raw(&point.t, point.c, l, md) / base)
}

/// Eigenvalue of `N` on `ψ`:
/// `([2m]!/[m]!) (e^{γc} ∏[m+t_j+1]/[m+t_j] − e^{−γc} ∏[m−t_j+1]/[m−t_j])`,
/// and `2 sinh(γc)` when `m = 0`.
pub fn eps_n(point: &BethePoint, md: &ModularData) -> Result<Complex64> {
    let m = point.m;
    let gc = md.gamma * point.c;
    if m == 0 {
        return Ok(2.0 * gc.sinh());
    }
    let mf = m as f64;
    let mut plus = gc.exp();
    let mut minus = (-gc).exp();
    for &tj in &point.t {
        for (den, name) in [(mf + tj, "[m+t_j]"), (mf - tj, "[m−t_j]")] {
            if md.lattice_distance(den) < POLE_GUARD {
                return Err(Error::PoleProximity {
                    x: tj,
                    detail: format!("{name} vanishes"),
                });
            }
        }
        plus *= md.bracket(mf + tj + 1.0) / md.bracket(mf + tj);
        minus *= md.bracket(mf - tj + 1.0) / md.bracket(mf - tj);
    }
    Ok(md.ell_fact(2 * m) / md.ell_fact(m) * (plus - minus))
}

/// Smallest lattice distance between distinct roots (`∞` when `m ≤ 1`).
pub fn min_separation(t: &[Complex64], md: &ModularData) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            best = best.min(md.lattice_distance(t[i] - t[j]));
        }
    }
    best
}

/// Whether two root sets agree modulo the lattice and permutations.
///
/// At a fixed multiplier two solutions can only differ by lattice shifts
/// whose `ω'` components sum to zero, and those give the same `ψ`.
pub fn same_roots(a: &[Complex64], b: &[Complex64], tol: f64, md: &ModularData) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for &x in a {
        let hit = (0..b.len())
            .filter(|&j| !used[j])
            .map(|j| (j, md.lattice_distance(x - b[j])))
            .filter(|&(_, d)| d < tol)
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match hit {
            Some((j, _)) => used[j] = true,
            None => return false,
        }
    }
    true
}
