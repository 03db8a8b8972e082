use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{psi_raw, BethePoint};
use crate::diffop::{SampleSet, POLE_GUARD};
use crate::elliptic::ModularData;
use crate::error::{Error, Result};

fn pole_error(x: Complex64, detail: &str) -> Error {
    Error::PoleProximity { x, detail: detail.to_string() }
}

/// `u₊(x) = e^{cγx} ∏_j [x+t_j]/[x−j]`, `j = 1…m`.
fn u_plus(point: &BethePoint, x: Complex64, md: &ModularData) -> Complex64 {
    point
        .t
        .iter()
        .enumerate()
        .fold((point.c * md.gamma * x).exp(), |acc, (j, &tj)| {
            acc * md.bracket(x + tj) / md.bracket(x - (j + 1) as f64)
        })
}

/// Relative residual of `u(x+1) + [x+m][x−m−1]/([x][x−1]) u(x−1) = ε u(x)`
/// with `u = ψ / ∏_{j=1}^m [x−j]`.
pub fn residual_transformed_eq(point: &BethePoint, eps: Complex64, x: Complex64, md: &ModularData) -> Result<f64> {
    let m = point.m;
    for k in 0..=m + 1 {
        if md.lattice_distance(x - k as f64) < POLE_GUARD {
            return Err(pole_error(x, "transformed equation is singular here"));
        }
    }
    for &tj in &point.t {
        if md.lattice_distance(tj) < POLE_GUARD {
            return Err(pole_error(tj, "root t_j is on the lattice"));
        }
    }
    let u = |y: Complex64| psi_raw(&point.t, point.c, y, md) / md.phi(y, m);
    let mf = m as f64;
    let coef = md.bracket(x + mf) * md.bracket(x - mf - 1.0) / (md.bracket(x) * md.bracket(x - 1.0));
    let a = u(x + 1.0);
    let b = coef * u(x - 1.0);
    let e = eps * u(x);
    let scale = a.norm().max(b.norm()).max(e.norm());
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(pole_error(x, "all terms vanish or overflow"));
    }
    Ok((a + b - e).norm() / scale)
}

/// Worst relative periodicity defects of `r(x) = u₊(x+1)/u₊(x)` and of
/// `u₊(x) u₋(x)`, `u₋(x) = u₊(−x)`, under `x ↦ x+ω` and `x ↦ x+ω'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityResiduals {
    pub ratio_omega: f64,
    pub ratio_omega_prime: f64,
    pub product_omega: f64,
    pub product_omega_prime: f64,
}

impl EllipticityResiduals {
    pub fn max(&self) -> f64 {
        self.ratio_omega
            .max(self.ratio_omega_prime)
            .max(self.product_omega)
            .max(self.product_omega_prime)
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let r = (a - b).norm() / a.norm().max(b.norm());
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

pub fn ellipticity_residuals(point: &BethePoint, md: &ModularData, count: usize, seed: u64) -> EllipticityResiduals {
    let mut avoid = Vec::new();
    for (j, &tj) in point.t.iter().enumerate() {
        let j = (j + 1) as f64;
        avoid.extend([-tj, -tj - 1.0, tj, Complex64::new(j, 0.0), Complex64::new(j - 1.0, 0.0), Complex64::new(-j, 0.0)]);
    }
    let samples = SampleSet::generate(md, count, seed, POLE_GUARD, &avoid);
    let r = |x: Complex64| u_plus(point, x + 1.0, md) / u_plus(point, x, md);
    let g = |x: Complex64| u_plus(point, x, md) * u_plus(point, -x, md);
    let mut out = EllipticityResiduals {
        ratio_omega: 0.0,
        ratio_omega_prime: 0.0,
        product_omega: 0.0,
        product_omega_prime: 0.0,
    };
    for &x in &samples.points {
        let (r0, g0) = (r(x), g(x));
        out.ratio_omega = out.ratio_omega.max(rel(r(x + md.omega), r0));
        out.ratio_omega_prime = out.ratio_omega_prime.max(rel(r(x + md.omega_prime), r0));
        out.product_omega = out.product_omega.max(rel(g(x + md.omega), g0));
        out.product_omega_prime = out.product_omega_prime.max(rel(g(x + md.omega_prime), g0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{eps_l, solve_given_c, SolverConfig};

    #[test]
    fn transformed_equation_holds_at_solutions() {
        let md = ModularData::default_params();
        for m in 1..=2 {
            let sols = solve_given_c(Complex64::new(0.8, 0.5), m, &md, &SolverConfig::default()).unwrap();
            let p = &sols[0];
            let eps = eps_l(p, &md).unwrap();
            let r = residual_transformed_eq(p, eps, Complex64::new(0.37, 0.21), &md).unwrap();
            assert!(r < 1e-10, "m = {m}: {r}");
            let wrong = residual_transformed_eq(p, eps + 1.0, Complex64::new(0.37, 0.21), &md).unwrap();
            assert!(wrong > 1e-3);
        }
    }

    #[test]
    fn transformed_equation_rejects_singular_points() {
        let md = ModularData::default_params();
        let p = BethePoint { m: 1, t: vec![Complex64::new(0.3, 0.1)], c: Complex64::new(0.2, 0.0), residual: 0.0 };
        assert!(residual_transformed_eq(&p, Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), &md).is_err());
    }

    #[test]
    fn multiplier_is_elliptic() {
        let md = ModularData::default_params();
        let p = BethePoint {
            m: 2,
            t: vec![Complex64::new(0.3, 0.1), Complex64::new(-1.2, 0.4)],
            c: Complex64::new(0.2, 0.5),
            residual: 0.0,
        };
        let r = ellipticity_residuals(&p, &md, 10, 1);
        assert!(r.max() < 1e-10, "{r:?}");
    }
}
