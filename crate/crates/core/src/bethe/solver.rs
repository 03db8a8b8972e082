use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bethe_b_raw, bethe_residual, bethe_target, min_separation, same_roots, BethePoint};
use crate::diffop::POLE_GUARD;
use crate::elliptic::ModularData;
use crate::error::{Error, Result};

/// Largest `|Re γc|` for which `e^{±2γc}` is safely representable.
const MAX_RE_GAMMA_C: f64 = 300.0;
const DEDUP_TOL: f64 = 1e-6;
const SEED_PERTURBATION: f64 = 0.05;
/// Accepted roots satisfy `|b| ≤ STRIP` in lattice coordinates `aω + bω'`.
/// Roots further out are lattice translates of roots at `c − 2πi·n`.
const STRIP: f64 = 1.0;

/// Newton, multistart and continuation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub starts: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Largest relative Bethe residual of an accepted solution.
    pub accept_residual: f64,
    /// Smallest lattice distance between roots, and from roots to the
    /// lattice, of an accepted solution.
    pub separation: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            starts: 64,
            seed: 7,
            fd_step: 1e-6,
            newton_tol: 1e-12,
            max_iter: 50,
            max_halvings: 20,
            accept_residual: 1e-10,
            separation: POLE_GUARD,
            min_step: 1e-4,
            max_step: 0.25,
        }
    }
}

fn check_c(c: Complex64, md: &ModularData) -> Result<()> {
    if !c.is_finite() {
        return Err(Error::DegenerateParameter(format!("c = {c} is not finite")));
    }
    if (md.gamma * c).re.abs() > MAX_RE_GAMMA_C {
        return Err(Error::DegenerateParameter(format!(
            "|Re(γc)| exceeds {MAX_RE_GAMMA_C} at c = {c}"
        )));
    }
    Ok(())
}

/// Scaled system `F_i(t) = b_i(t)/e^{2γc} − 1`.
fn system(t: &[Complex64], m: u32, target: Complex64, md: &ModularData) -> Vec<Complex64> {
    (0..t.len()).map(|i| bethe_b_raw(i, t, m, md) / target - 1.0).collect()
}

fn sup_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, z| {
        let n = z.norm();
        if n.is_nan() {
            f64::INFINITY
        } else {
            acc.max(n)
        }
    })
}

fn jacobian(t: &[Complex64], m: u32, target: Complex64, md: &ModularData, h: f64) -> DMatrix<Complex64> {
    let n = t.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = t.to_vec();
    for k in 0..n {
        probe[k] = t[k] + h;
        let plus = system(&probe, m, target, md);
        probe[k] = t[k] - h;
        let minus = system(&probe, m, target, md);
        probe[k] = t[k];
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

fn solve_linear(jac: DMatrix<Complex64>, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let sol = jac.lu().solve(&DVector::from_column_slice(rhs))?;
    let out: Vec<Complex64> = sol.iter().copied().collect();
    out.iter().all(|z| z.is_finite()).then_some(out)
}

/// Backtracking Newton at fixed `c`; returns the converged roots and their
/// scaled residual.
fn newton(
    mut t: Vec<Complex64>,
    c: Complex64,
    m: u32,
    md: &ModularData,
    cfg: &SolverConfig,
) -> Option<(Vec<Complex64>, f64)> {
    let target = bethe_target(c, md);
    let mut f = system(&t, m, target, md);
    let mut norm = sup_norm(&f);
    for _ in 0..cfg.max_iter {
        if !norm.is_finite() {
            return None;
        }
        if norm < cfg.newton_tol {
            return Some((t, norm));
        }
        let rhs: Vec<Complex64> = f.iter().map(|z| -z).collect();
        let step = solve_linear(jacobian(&t, m, target, md, cfg.fd_step), &rhs)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<Complex64> = t.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            let f_trial = system(&trial, m, target, md);
            let n_trial = sup_norm(&f_trial);
            if n_trial < norm {
                t = trial;
                f = f_trial;
                norm = n_trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm < cfg.accept_residual).then_some((t, norm))
}

fn in_strip(t: &[Complex64], md: &ModularData) -> bool {
    t.iter().all(|&z| md.lattice_coords(z).1.abs() <= STRIP)
}

fn admissible(t: &[Complex64], m: u32, md: &ModularData, sep: f64) -> bool {
    let mf = m as f64;
    min_separation(t, md) > sep
        && t.iter().all(|&tj| {
            [tj, tj + mf, tj - mf, tj + mf - 1.0]
                .iter()
                .all(|&y| md.lattice_distance(y) > sep)
        })
}

fn perturbed_near_degenerate(mut t: Vec<Complex64>, m: u32, md: &ModularData) -> Vec<Complex64> {
    let shift = Complex64::new(SEED_PERTURBATION, SEED_PERTURBATION);
    for tj in t.iter_mut() {
        let near = (0..m as i64)
            .flat_map(|k| [k, -k])
            .any(|k| md.lattice_distance(*tj + k as f64) < SEED_PERTURBATION);
        if near {
            *tj += shift;
        }
    }
    t
}

fn seeds(m: u32, md: &ModularData, cfg: &SolverConfig) -> Vec<Vec<Complex64>> {
    let shift = Complex64::new(SEED_PERTURBATION, SEED_PERTURBATION);
    let mut out: Vec<Vec<Complex64>> = [-1.0, 1.0]
        .iter()
        .map(|&sign| {
            (0..m)
                .map(|k| Complex64::new(sign * (m - 1 - k) as f64, 0.0) + shift)
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.starts {
        let t: Vec<Complex64> = (0..m)
            .map(|_| md.from_lattice_coords(rng.random::<f64>(), rng.random::<f64>() - 0.5))
            .collect();
        out.push(perturbed_near_degenerate(t, m, md));
    }
    out
}

fn canonical(t: Vec<Complex64>, md: &ModularData) -> Vec<Complex64> {
    let mut t: Vec<Complex64> = t.into_iter().map(|z| md.reduce_mod_omega(z)).collect();
    t.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    t
}

/// All distinct Bethe solutions for fixed `c` found from the deterministic
/// multistart. An empty list means no start converged to an admissible point.
pub fn solve_given_c(c: Complex64, m: u32, md: &ModularData, cfg: &SolverConfig) -> Result<Vec<BethePoint>> {
    check_c(c, md)?;
    if m == 0 {
        return Ok(vec![BethePoint { m, t: vec![], c, residual: 0.0 }]);
    }
    let found: Vec<Vec<Complex64>> = seeds(m, md, cfg)
        .into_par_iter()
        .filter_map(|s| newton(s, c, m, md, cfg))
        .map(|(t, _)| canonical(t, md))
        .filter(|t| in_strip(t, md) && admissible(t, m, md, cfg.separation))
        .collect();

    let mut out: Vec<BethePoint> = Vec::new();
    for t in found {
        if out.iter().any(|p| same_roots(&p.t, &t, DEDUP_TOL, md)) {
            continue;
        }
        let residual = bethe_residual(&t, c, m, md);
        out.push(BethePoint { m, t, c, residual });
    }
    out.sort_by(|a, b| {
        for (x, y) in a.t.iter().zip(&b.t) {
            let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
            if o.is_ne() {
                return o;
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(out)
}

/// One predictor-corrector step from `prev` to `c_new`.
fn continuation_step(
    prev: &BethePoint,
    c_new: Complex64,
    md: &ModularData,
    cfg: &SolverConfig,
) -> Option<BethePoint> {
    let m = prev.m;
    let target = bethe_target(prev.c, md);
    let jac = jacobian(&prev.t, m, target, md, cfg.fd_step);
    let rhs = vec![2.0 * md.gamma; prev.t.len()];
    let tangent = solve_linear(jac, &rhs)?;
    let dc = c_new - prev.c;
    let predicted: Vec<Complex64> = prev.t.iter().zip(&tangent).map(|(t, v)| t + v * dc).collect();
    let (t, _) = newton(predicted.clone(), c_new, m, md, cfg)?;
    let move_pred = sup_norm(&predicted.iter().zip(&prev.t).map(|(a, b)| a - b).collect::<Vec<_>>());
    let correction = sup_norm(&t.iter().zip(&predicted).map(|(a, b)| a - b).collect::<Vec<_>>());
    if correction > move_pred.max(SEED_PERTURBATION) || !admissible(&t, m, md, cfg.separation) {
        return None;
    }
    let residual = bethe_residual(&t, c_new, m, md);
    Some(BethePoint { m, t, c: c_new, residual })
}

fn continue_to(
    start: BethePoint,
    c_target: Complex64,
    md: &ModularData,
    cfg: &SolverConfig,
) -> Result<BethePoint> {
    check_c(c_target, md)?;
    let mut current = start;
    let mut h = cfg.max_step;
    while (c_target - current.c).norm() > 0.0 {
        let remaining = c_target - current.c;
        let c_next = if remaining.norm() <= h {
            c_target
        } else {
            current.c + remaining / remaining.norm() * h
        };
        match continuation_step(&current, c_next, md, cfg) {
            Some(p) => {
                current = p;
                h = (h * 1.5).min(cfg.max_step);
            }
            None => {
                h *= 0.5;
                if h < cfg.min_step {
                    return Err(Error::ContinuationStall {
                        c: current.c,
                        last_good: Some(Box::new(current)),
                    });
                }
            }
        }
    }
    Ok(current)
}

/// Follow one Bethe branch along `c_path`, returning one point per entry.
///
/// The branch starts at `start` (continued to `c_path[0]` if needed) or at
/// the first solution of [`solve_given_c`] at `c_path[0]`.
pub fn trace_curve(
    c_path: &[Complex64],
    m: u32,
    md: &ModularData,
    start: Option<&BethePoint>,
    cfg: &SolverConfig,
) -> Result<Vec<BethePoint>> {
    let Some(&c0) = c_path.first() else {
        return Ok(vec![]);
    };
    for &c in c_path {
        check_c(c, md)?;
    }
    if m == 0 {
        return Ok(c_path
            .iter()
            .map(|&c| BethePoint { m, t: vec![], c, residual: 0.0 })
            .collect());
    }
    let first = match start {
        Some(p) => {
            if p.m != m {
                return Err(Error::Config(format!("start point has m = {}, expected {m}", p.m)));
            }
            continue_to(p.clone(), c0, md, cfg)?
        }
        None => solve_given_c(c0, m, md, cfg)?
            .into_iter()
            .next()
            .ok_or(Error::NoSolution(c0))?,
    };
    let mut out = Vec::with_capacity(c_path.len());
    out.push(first);
    for &c in &c_path[1..] {
        let prev = out.last().expect("nonempty").clone();
        out.push(continue_to(prev, c, md, cfg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md() -> ModularData {
        ModularData::default_params()
    }

    #[test]
    fn m_zero_is_trivial() {
        let md = md();
        let sols = solve_given_c(Complex64::new(0.3, 0.0), 0, &md, &SolverConfig::default()).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(sols[0].t.is_empty());
    }

    #[test]
    fn degenerate_c_rejected() {
        let md = md();
        let cfg = SolverConfig::default();
        assert!(matches!(
            solve_given_c(Complex64::new(f64::NAN, 0.0), 1, &md, &cfg),
            Err(Error::DegenerateParameter(_))
        ));
        assert!(matches!(
            solve_given_c(Complex64::new(1e5, 0.0), 1, &md, &cfg),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn solutions_satisfy_equations() {
        let md = md();
        let cfg = SolverConfig::default();
        for m in 1..=2 {
            let sols = solve_given_c(Complex64::new(0.8, 0.5), m, &md, &cfg).unwrap();
            assert!(!sols.is_empty(), "m = {m}");
            for p in &sols {
                assert!(p.residual < 1e-10);
                assert_eq!(p.t.len(), m as usize);
            }
        }
    }

    #[test]
    fn multistart_is_deterministic() {
        let md = md();
        let cfg = SolverConfig::default();
        let c = Complex64::new(0.3, 0.0);
        let a = solve_given_c(c, 2, &md, &cfg).unwrap();
        let b = solve_given_c(c, 2, &md, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn continuation_tracks_a_branch() {
        let md = md();
        let cfg = SolverConfig::default();
        let path: Vec<Complex64> = (0..6).map(|k| Complex64::new(0.3 + 0.2 * k as f64, 0.1 * k as f64)).collect();
        let pts = trace_curve(&path, 1, &md, None, &cfg).unwrap();
        assert_eq!(pts.len(), path.len());
        for (p, c) in pts.iter().zip(&path) {
            assert_eq!(p.c, *c);
            assert!(p.residual < 1e-10);
        }
        assert!(trace_curve(&[], 1, &md, None, &cfg).unwrap().is_empty());
    }
}
