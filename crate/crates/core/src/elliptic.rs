//! Jacobi theta function and the elliptic numbers built from it.
//!
//! Everything here works in the rescaled variable `x = λ/γ`, in which the
//! period lattice is `ωℤ + ω'ℤ` with `ω = 1/γ` and `ω' = τ/γ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncation control for the theta series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            rel_tol: 1e-16,
            max_terms: 64,
        }
    }
}

impl SeriesConfig {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(Error::Config(format!("rel_tol must be positive, got {rel_tol}")));
        }
        if max_terms < 4 {
            return Err(Error::Config(format!("max_terms must be at least 4, got {max_terms}")));
        }
        Ok(SeriesConfig { rel_tol, max_terms })
    }
}

/// Jacobi's odd theta function
/// `θ(z,τ) = −Σ_{j∈ℤ+½} exp(πij²τ + 2πij(z+½))`.
///
/// The terms `±j` are summed pairwise, which turns each pair into
/// `2(−1)^n q^{(n+½)²} sin((2n+1)πz)` with `q = e^{πiτ}`. Summation runs
/// outward from `n = 0` and stops once the Gaussian has passed its peak and
/// the newest term is below `rel_tol` times the largest term seen.
pub fn theta1(z: Complex64, tau: Complex64, cfg: &SeriesConfig) -> Result<Complex64> {
    if !(tau.im > 0.0) {
        return Err(Error::Domain(format!("Im(tau) must be positive, got tau = {tau}")));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("non-finite argument z = {z}")));
    }
    // Term modulus ~ exp(-π j² Im τ + 2π j |Im z|) peaks at j ≈ |Im z| / Im τ.
    let peak = z.im.abs() / tau.im;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut largest = 0.0_f64;
    for n in 0..cfg.max_terms {
        let j = n as f64 + 0.5;
        let gauss = (I * PI * tau * j * j).exp();
        let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
        let term = gauss * ((2.0 * j) * PI * z).sin() * sign;
        if !term.is_finite() {
            return Err(Error::NonConvergence { z, terms: n });
        }
        sum += term;
        let size = term.norm();
        largest = largest.max(size);
        if j > peak + 1.0 && size <= cfg.rel_tol * largest {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        z,
        terms: cfg.max_terms,
    })
}

/// The modular parameters `(γ, τ)` and the quantities derived from them.
#[derive(Debug, Clone, Serialize)]
pub struct ModularData {
    pub gamma: Complex64,
    pub tau: Complex64,
    pub omega: Complex64,
    pub omega_prime: Complex64,
    pub nome_q: Complex64,
    pub series: SeriesConfig,
    #[serde(skip)]
    theta_gamma: Complex64,
}

impl ModularData {
    /// Default desk-scale parameters: `γ = √2/10`, `τ = i`.
    pub fn default_params() -> Self {
        Self::new(
            Complex64::new(std::f64::consts::SQRT_2 / 10.0, 0.0),
            Complex64::new(0.0, 1.0),
        )
        .expect("default parameters are valid")
    }

    pub fn new(gamma: Complex64, tau: Complex64) -> Result<Self> {
        Self::with_series(gamma, tau, SeriesConfig::default())
    }

    pub fn with_series(gamma: Complex64, tau: Complex64, series: SeriesConfig) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(Error::Domain(format!("Im(tau) must be positive, got tau = {tau}")));
        }
        if !gamma.is_finite() || gamma.norm() == 0.0 {
            return Err(Error::DegenerateParameter(format!("gamma = {gamma}")));
        }
        let omega = gamma.inv();
        let omega_prime = tau * omega;
        let nome_q = (I * PI * tau).exp();
        let theta_gamma = theta1(gamma, tau, &series)?;
        let md = ModularData {
            gamma,
            tau,
            omega,
            omega_prime,
            nome_q,
            series,
            theta_gamma,
        };
        // γ on ℤ + τℤ means x = 1 lies on the zero lattice of [x].
        if md.lattice_distance(Complex64::new(1.0, 0.0)) < 1e-8 || theta_gamma.norm() < 1e-300 {
            return Err(Error::DegenerateParameter(format!(
                "gamma = {gamma} lies on the period lattice Z + tau Z"
            )));
        }
        Ok(md)
    }

    pub fn theta(&self, z: Complex64) -> Result<Complex64> {
        theta1(z, self.tau, &self.series)
    }

    /// `[x] = θ(γx, τ) / θ(γ, τ)`.
    pub fn ell_num(&self, x: Complex64) -> Result<Complex64> {
        Ok(self.theta(self.gamma * x)? / self.theta_gamma)
    }

    /// Infallible `[x]` for use inside coefficient closures; a failed series
    /// evaluation yields NaN, which downstream finiteness checks catch.
    #[inline]
    pub fn bracket(&self, x: Complex64) -> Complex64 {
        self.ell_num(x)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    /// Real coordinates `(a, b)` with `x = a·ω + b·ω'`.
    pub fn lattice_coords(&self, x: Complex64) -> (f64, f64) {
        let u = x * self.gamma;
        let b = u.im / self.tau.im;
        let a = u.re - b * self.tau.re;
        (a, b)
    }

    pub fn from_lattice_coords(&self, a: f64, b: f64) -> Complex64 {
        self.omega * a + self.omega_prime * b
    }

    /// Distance (in x-units) from `x` to the nearest point of `ωℤ + ω'ℤ`.
    pub fn lattice_distance(&self, x: Complex64) -> f64 {
        let (a, b) = self.lattice_coords(x);
        let (fa, fb) = (a - a.round(), b - b.round());
        let mut best = f64::INFINITY;
        for da in -1..=1 {
            for db in -1..=1 {
                let d = self.from_lattice_coords(fa + da as f64, fb + db as f64).norm();
                best = best.min(d);
            }
        }
        best
    }

    /// Translate `x` by a multiple of `ω` so that its `ω`-coordinate is in `[0, 1)`.
    pub fn reduce_mod_omega(&self, x: Complex64) -> Complex64 {
        let (a, _) = self.lattice_coords(x);
        x - self.omega * a.floor()
    }

    /// Residuals of `[x+ω] = −[x]` and `[x+ω'] = −e^{−(πi/ω)(ω'+2x)}[x]`,
    /// each relative to the larger side. `None` when `x` is on the zero lattice.
    pub fn shift_check(&self, x: Complex64) -> Option<(f64, f64)> {
        if self.lattice_distance(x) < 1e-3 {
            return None;
        }
        let base = self.bracket(x);
        let by_omega = self.bracket(x + self.omega);
        let r1 = (by_omega + base).norm() / by_omega.norm().max(base.norm());

        let factor = (-(I * PI / self.omega) * (self.omega_prime + 2.0 * x)).exp();
        let by_omega_prime = self.bracket(x + self.omega_prime);
        let expected = -factor * base;
        let r2 = (by_omega_prime - expected).norm() / by_omega_prime.norm().max(expected.norm());
        Some((r1, r2))
    }

    /// `[n]! = [1][2]⋯[n]`.
    pub fn ell_fact(&self, n: u32) -> Complex64 {
        (1..=n).fold(Complex64::new(1.0, 0.0), |acc, k| {
            acc * self.bracket(Complex64::new(k as f64, 0.0))
        })
    }

    /// Elliptic binomial `[x][x−1]⋯[x−n+1] / [n]!`.
    pub fn ell_binom(&self, x: Complex64, n: u32) -> Complex64 {
        let num = (0..n).fold(Complex64::new(1.0, 0.0), |acc, k| {
            acc * self.bracket(x - k as f64)
        });
        num / self.ell_fact(n)
    }

    /// `φ(x) = ∏_{k=1}^m [x−k]`.
    pub fn phi(&self, x: Complex64, m: u32) -> Complex64 {
        (1..=m).fold(Complex64::new(1.0, 0.0), |acc, k| {
            acc * self.bracket(x - k as f64)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn theta_vanishes_at_origin_and_is_odd() {
        let cfg = SeriesConfig::default();
        let tau = c(0.0, 1.0);
        assert!(theta1(c(0.0, 0.0), tau, &cfg).unwrap().norm() < 1e-15);
        let z = c(0.3, 0.1);
        let plus = theta1(z, tau, &cfg).unwrap();
        let minus = theta1(-z, tau, &cfg).unwrap();
        assert!((plus + minus).norm() < 1e-15 * plus.norm().max(1.0));
    }

    #[test]
    fn theta_rejects_lower_half_plane() {
        let err = theta1(c(0.1, 0.0), c(0.0, -1.0), &SeriesConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn theta_reports_non_convergence() {
        let cfg = SeriesConfig::new(1e-16, 4).unwrap();
        let err = theta1(c(0.1, 30.0), c(0.0, 1.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn series_config_validation() {
        assert!(SeriesConfig::new(0.0, 10).is_err());
        assert!(SeriesConfig::new(1e-12, 3).is_err());
        assert!(SeriesConfig::new(1e-12, 4).is_ok());
    }

    #[test]
    fn modular_data_invariants() {
        let md = ModularData::default_params();
        assert!((md.omega * md.gamma - 1.0).norm() < 1e-15);
        assert!((md.omega_prime - md.tau * md.omega).norm() < 1e-14);
        assert!(md.nome_q.norm() < 1.0);
        assert!(ModularData::new(c(0.1, 0.0), c(0.0, -1.0)).is_err());
        assert!(matches!(
            ModularData::new(c(1.0, 0.0), c(0.0, 1.0)),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn ell_num_basic_values() {
        let md = ModularData::default_params();
        assert!(md.ell_num(c(0.0, 0.0)).unwrap().norm() < 1e-15);
        assert!((md.ell_num(c(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
        let x = c(0.7, 0.0);
        let shifted = md.ell_num(x + md.omega).unwrap();
        assert!((shifted + md.ell_num(x).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn shift_check_skips_lattice_and_passes_off_lattice() {
        let md = ModularData::default_params();
        assert!(md.shift_check(c(0.0, 0.0)).is_none());
        assert!(md.shift_check(md.omega_prime).is_none());
        for x in [c(0.7, 0.0), c(1.3, 0.2)] {
            let (r1, r2) = md.shift_check(x).unwrap();
            assert!(r1 < 1e-10 && r2 < 1e-10, "{x}: {r1:e} {r2:e}");
        }
    }

    #[test]
    fn factorials_binomials_and_phi() {
        let md = ModularData::default_params();
        let one = c(1.0, 0.0);
        assert_eq!(md.ell_fact(0), one);
        assert!((md.ell_fact(1) - one).norm() < 1e-15);
        let b2 = md.bracket(c(2.0, 0.0));
        let b3 = md.bracket(c(3.0, 0.0));
        assert!((md.ell_fact(3) - b2 * b3).norm() < 1e-14);

        assert_eq!(md.ell_binom(c(0.37, 0.2), 0), one);
        assert!((md.ell_binom(c(2.0, 0.0), 2) - one).norm() < 1e-13);
        assert!((md.ell_binom(c(2.5, 0.0), 1) - md.bracket(c(2.5, 0.0))).norm() < 1e-14);

        assert_eq!(md.phi(c(0.4, 0.0), 0), one);
        assert!(md.phi(c(1.0, 0.0), 1).norm() < 1e-15);
        let expected = md.bracket(c(2.2, 0.0)) * md.bracket(c(1.2, 0.0));
        assert!((md.phi(c(3.2, 0.0), 2) - expected).norm() < 1e-13);
    }

    #[test]
    fn lattice_helpers() {
        let md = ModularData::default_params();
        let x = md.from_lattice_coords(2.25, -1.5);
        let (a, b) = md.lattice_coords(x);
        assert!((a - 2.25).abs() < 1e-12 && (b + 1.5).abs() < 1e-12);
        assert!(md.lattice_distance(md.omega * 3.0 - md.omega_prime) < 1e-12);
        let r = md.reduce_mod_omega(x);
        let (ra, _) = md.lattice_coords(r);
        assert!((0.0..1.0).contains(&ra));
    }
}
