//! Difference operators `Σ_j A_j(x) T_j` with finitely many (complex) shifts.
//!
//! Coefficients are closures paired with a display string and the list of
//! their pole classes modulo the period lattice. Operator identities are
//! checked numerically on sample sets that stay a guard distance away from
//! every declared pole.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::ModularData;
use crate::error::{Error, Result};

/// Key-merging tolerance for composed shifts.
pub const SHIFT_TOL: f64 = 1e-9;
/// Relative threshold below which a coefficient counts as identically zero.
pub const PRUNE_TOL: f64 = 1e-12;
/// Vanishing threshold used when forming commutators.
pub const VANISH_TOL: f64 = 1e-10;
/// Minimum distance of sample points from coefficient poles (x-units).
pub const POLE_GUARD: f64 = 1e-3;
/// Ratio to the median coefficient modulus that signals pole proximity.
pub const OVERFLOW_GUARD: f64 = 1e12;

const PRUNE_PROBES: usize = 20;
const PRUNE_SEED: u64 = 0x0051_7a5e_ed00_0001;

type EvalFn = dyn Fn(Complex64) -> Complex64 + Send + Sync;

/// An evaluable coefficient with a human-readable formula and its pole classes.
#[derive(Clone)]
pub struct CoefficientFn {
    eval: Arc<EvalFn>,
    expr: Arc<str>,
    poles: Arc<[Complex64]>,
}

impl CoefficientFn {
    pub fn new<F>(expr: impl Into<String>, poles: Vec<Complex64>, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        CoefficientFn {
            eval: Arc::new(f),
            expr: Arc::from(truncate_expr(expr.into())),
            poles: Arc::from(poles),
        }
    }

    pub fn constant(value: Complex64) -> Self {
        Self::new(format_complex(value), Vec::new(), move |_| value)
    }

    #[inline]
    pub fn eval(&self, x: Complex64) -> Complex64 {
        (self.eval)(x)
    }

    pub fn expr(&self) -> &str {
        &self.expr
    }

    /// Pole classes: the coefficient may be singular at `p + ωℤ + ω'ℤ`.
    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    /// `x ↦ self(x + s)`.
    pub fn shifted(&self, s: Complex64) -> Self {
        let inner = self.eval.clone();
        let poles = self.poles.iter().map(|p| p - s).collect();
        Self::new(format!("({})|x→x+{}", self.expr, format_complex(s)), poles, move |x| {
            inner(x + s)
        })
    }

    /// `x ↦ self(−x)`.
    pub fn reflected(&self) -> Self {
        let inner = self.eval.clone();
        let poles = self.poles.iter().map(|p| -p).collect();
        Self::new(format!("({})|x→−x", self.expr), poles, move |x| inner(-x))
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        let inner = self.eval.clone();
        Self::new(
            format!("{}·({})", format_complex(k), self.expr),
            self.poles.to_vec(),
            move |x| k * inner(x),
        )
    }

    pub fn product(&self, other: &CoefficientFn) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let poles = self.poles.iter().chain(other.poles.iter()).copied().collect();
        Self::new(format!("({})·({})", self.expr, other.expr), poles, move |x| a(x) * b(x))
    }

    fn sum(parts: &[CoefficientFn]) -> Self {
        if parts.len() == 1 {
            return parts[0].clone();
        }
        let evals: Vec<Arc<EvalFn>> = parts.iter().map(|p| p.eval.clone()).collect();
        let expr = parts.iter().map(|p| p.expr()).collect::<Vec<_>>().join(" + ");
        let poles = parts.iter().flat_map(|p| p.poles.iter().copied()).collect();
        Self::new(expr, poles, move |x| evals.iter().map(|f| f(x)).sum())
    }
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.expr)
    }
}

const MAX_EXPR_CHARS: usize = 160;

fn truncate_expr(expr: String) -> String {
    if expr.chars().count() <= MAX_EXPR_CHARS {
        return expr;
    }
    let mut short: String = expr.chars().take(MAX_EXPR_CHARS).collect();
    short.push('…');
    short
}

pub(crate) fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("({}{:+}i)", z.re, z.im)
    }
}

/// Points in a fundamental parallelogram, each at least `guard` away from
/// every supplied pole class.
#[derive(Debug, Clone, Serialize)]
pub struct SampleSet {
    pub points: Vec<Complex64>,
    pub guard: f64,
}

impl SampleSet {
    /// Fixed irrational offset applied to every sample.
    pub fn offset() -> Complex64 {
        Complex64::new((2f64.sqrt() - 1.0) / 7.0, (3f64.sqrt() - 1.0) / 11.0)
    }

    /// Rejection-sample `count` points `offset + sω + uω'`, `s, u ∈ [0, 1)`.
    pub fn generate(
        md: &ModularData,
        count: usize,
        seed: u64,
        guard: f64,
        poles: &[Complex64],
    ) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while points.len() < count {
            attempts += 1;
            assert!(
                attempts < 1000 * count.max(1),
                "could not place {count} samples away from {} poles",
                poles.len()
            );
            let x = Self::offset() + md.from_lattice_coords(rng.random::<f64>(), rng.random::<f64>());
            if poles.iter().all(|&p| md.lattice_distance(x - p) > guard) {
                points.push(x);
            }
        }
        SampleSet { points, guard }
    }

    /// Sample set avoiding every coefficient pole of the given operators.
    pub fn for_operators(
        md: &ModularData,
        count: usize,
        seed: u64,
        ops: &[&DifferenceOperator],
    ) -> SampleSet {
        let poles: Vec<Complex64> = ops.iter().flat_map(|op| op.pole_classes()).collect();
        Self::generate(md, count, seed, POLE_GUARD, &poles)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub shift: Complex64,
    pub coeff: CoefficientFn,
}

/// A finite sum `Σ_j A_j(x) T_j`, `T_j ψ(x) = ψ(x + j)`.
///
/// Shifts are kept sorted by real then imaginary part and are pairwise
/// separated by more than [`SHIFT_TOL`].
#[derive(Clone)]
pub struct DifferenceOperator {
    terms: Vec<Term>,
    md: Arc<ModularData>,
}

/// Outcome of comparing two operators on a sample set.
#[derive(Debug, Clone, Serialize)]
pub struct EqualityReport {
    pub max_residual: f64,
    pub worst_shift: Option<Complex64>,
    pub worst_point: Option<Complex64>,
    /// Set when the worst residual comes from a shift present in only one operator.
    pub mismatched_shift: Option<Complex64>,
    pub tol: f64,
    pub pass: bool,
}

impl DifferenceOperator {
    pub fn zero(md: Arc<ModularData>) -> Self {
        DifferenceOperator {
            terms: Vec::new(),
            md,
        }
    }

    pub fn identity(md: Arc<ModularData>) -> Self {
        Self::shift(md, Complex64::new(0.0, 0.0))
    }

    /// The pure translation `T_j`.
    pub fn shift(md: Arc<ModularData>, j: Complex64) -> Self {
        DifferenceOperator {
            terms: vec![Term {
                shift: j,
                coeff: CoefficientFn::constant(Complex64::new(1.0, 0.0)),
            }],
            md,
        }
    }

    /// Build from raw terms, merging coincident shifts and pruning zeros.
    pub fn from_terms(md: Arc<ModularData>, terms: Vec<(Complex64, CoefficientFn)>) -> Self {
        Self::merge(md, terms, PRUNE_TOL)
    }

    /// Build without the zero-prune pass (shifts still merged).
    pub fn from_terms_unpruned(md: Arc<ModularData>, terms: Vec<(Complex64, CoefficientFn)>) -> Self {
        let groups = group_by_shift(terms);
        let terms = groups
            .into_iter()
            .map(|(shift, parts)| Term {
                shift,
                coeff: CoefficientFn::sum(&parts),
            })
            .collect();
        DifferenceOperator { terms, md }
    }

    pub fn modular(&self) -> &Arc<ModularData> {
        &self.md
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn shifts(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| t.shift).collect()
    }

    pub fn coefficient_at(&self, shift: Complex64) -> Option<&CoefficientFn> {
        self.terms
            .iter()
            .find(|t| (t.shift - shift).norm() <= SHIFT_TOL)
            .map(|t| &t.coeff)
    }

    /// All pole classes of all coefficients.
    pub fn pole_classes(&self) -> Vec<Complex64> {
        self.terms
            .iter()
            .flat_map(|t| t.coeff.poles().iter().copied())
            .collect()
    }

    /// `Σ_j A_j(x) f(x + j)`.
    pub fn apply<F>(&self, f: F, x: Complex64) -> Result<Complex64>
    where
        F: Fn(Complex64) -> Complex64,
    {
        if let Some(p) = self
            .pole_classes()
            .into_iter()
            .find(|&p| self.md.lattice_distance(x - p) <= POLE_GUARD)
        {
            return Err(Error::PoleProximity {
                x,
                detail: format!("coefficient pole class {p}"),
            });
        }
        let coeffs: Vec<Complex64> = self.terms.iter().map(|t| t.coeff.eval(x)).collect();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::PoleProximity {
                x,
                detail: "non-finite coefficient".into(),
            });
        }
        if coeffs.len() > 2 {
            let mut mags: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
            mags.sort_by(f64::total_cmp);
            let median = mags[mags.len() / 2];
            let largest = mags[mags.len() - 1];
            if median > 0.0 && largest > OVERFLOW_GUARD * median {
                return Err(Error::PoleProximity {
                    x,
                    detail: format!("coefficient modulus {largest:.3e} vs median {median:.3e}"),
                });
            }
        }
        Ok(self
            .terms
            .iter()
            .zip(coeffs)
            .map(|(t, c)| c * f(x + t.shift))
            .sum())
    }

    /// `(A∘B)ψ = A(Bψ)`: coefficient at `s` is `Σ_{j+k=s} A_j(x) B_k(x+j)`.
    pub fn compose(&self, other: &DifferenceOperator) -> Self {
        let mut parts = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                parts.push((a.shift + b.shift, a.coeff.product(&b.coeff.shifted(a.shift))));
            }
        }
        Self::merge(self.md.clone(), parts, PRUNE_TOL)
    }

    pub fn add(&self, other: &DifferenceOperator) -> Self {
        let parts = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|t| (t.shift, t.coeff.clone()))
            .collect();
        Self::merge(self.md.clone(), parts, PRUNE_TOL)
    }

    pub fn sub(&self, other: &DifferenceOperator) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: Complex64) -> Self {
        if k == Complex64::new(0.0, 0.0) {
            return Self::zero(self.md.clone());
        }
        DifferenceOperator {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    shift: t.shift,
                    coeff: t.coeff.scaled(k),
                })
                .collect(),
            md: self.md.clone(),
        }
    }

    /// `AB − BA`, with coefficients that cancel to within [`VANISH_TOL`] of
    /// their local scale dropped.
    pub fn commutator(&self, other: &DifferenceOperator) -> Self {
        let ab = self.compose(other);
        let ba = other.compose(self);
        let minus = Complex64::new(-1.0, 0.0);
        let parts = ab
            .terms
            .iter()
            .map(|t| (t.shift, t.coeff.clone()))
            .chain(ba.terms.iter().map(|t| (t.shift, t.coeff.scaled(minus))))
            .collect();
        Self::merge(self.md.clone(), parts, VANISH_TOL)
    }

    fn real_shifts(&self) -> Result<Vec<f64>> {
        self.terms
            .iter()
            .map(|t| {
                if t.shift.im.abs() >= SHIFT_TOL {
                    Err(Error::ComplexShift(t.shift))
                } else {
                    Ok(t.shift.re)
                }
            })
            .collect()
    }

    /// Largest shift with a surviving coefficient.
    pub fn degree(&self) -> Result<f64> {
        let shifts = self.real_shifts()?;
        shifts
            .into_iter()
            .reduce(f64::max)
            .ok_or_else(|| Error::Domain("the zero operator has no degree".into()))
    }

    /// Difference between the largest and smallest shift.
    pub fn length(&self) -> Result<f64> {
        let shifts = self.real_shifts()?;
        let hi = shifts.iter().copied().reduce(f64::max);
        let lo = shifts.iter().copied().reduce(f64::min);
        match (hi, lo) {
            (Some(hi), Some(lo)) => Ok(hi - lo),
            _ => Err(Error::Domain("the zero operator has no length".into())),
        }
    }

    /// `S∘A∘S` with `Sψ(x) = ψ(−x)`: `(j, A_j(x)) ↦ (−j, A_j(−x))`.
    pub fn conj_s(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| (-t.shift, t.coeff.reflected()))
            .collect();
        Self::from_terms_unpruned(self.md.clone(), terms)
    }

    /// `U∘A∘U⁻¹` with `Uψ(x) = e^{πix}ψ(x)`: `A_j ↦ e^{−πij} A_j`.
    pub fn conj_u(&self) -> Self {
        self.conj_u_phase(-1.0)
    }

    /// `U⁻¹∘A∘U`: `A_j ↦ e^{πij} A_j`.
    pub fn conj_u_inv(&self) -> Self {
        self.conj_u_phase(1.0)
    }

    fn conj_u_phase(&self, sign: f64) -> Self {
        let i = Complex64::new(0.0, 1.0);
        let terms = self
            .terms
            .iter()
            .map(|t| (t.shift, t.coeff.scaled((i * PI * t.shift * sign).exp())))
            .collect();
        Self::from_terms_unpruned(self.md.clone(), terms)
    }

    /// Coefficient-wise comparison on `samples`.
    ///
    /// At each point the residual of each shift is `|A_j(x) − B_j(x)|` divided
    /// by `max(1, largest coefficient modulus of either operator at x)`.
    /// A shift present in only one operator is compared against zero.
    pub fn equal_on(&self, other: &DifferenceOperator, samples: &SampleSet, tol: f64) -> EqualityReport {
        let mut shifts: Vec<Complex64> = self.shifts();
        for s in other.shifts() {
            if !shifts.iter().any(|t| (t - s).norm() <= SHIFT_TOL) {
                shifts.push(s);
            }
        }
        let per_point: Vec<(f64, usize, usize)> = samples
            .points
            .par_iter()
            .enumerate()
            .map(|(pi, &x)| {
                let values: Vec<(Option<Complex64>, Option<Complex64>)> = shifts
                    .iter()
                    .map(|&s| {
                        (
                            self.coefficient_at(s).map(|c| c.eval(x)),
                            other.coefficient_at(s).map(|c| c.eval(x)),
                        )
                    })
                    .collect();
                let scale = values
                    .iter()
                    .flat_map(|(a, b)| [a.map(|v| v.norm()), b.map(|v| v.norm())])
                    .flatten()
                    .fold(1.0_f64, f64::max);
                let mut worst = (0.0_f64, 0usize);
                for (si, (a, b)) in values.iter().enumerate() {
                    let zero = Complex64::new(0.0, 0.0);
                    let diff = a.unwrap_or(zero) - b.unwrap_or(zero);
                    let r = diff.norm() / scale;
                    let r = if r.is_nan() { f64::INFINITY } else { r };
                    if r > worst.0 {
                        worst = (r, si);
                    }
                }
                (worst.0, worst.1, pi)
            })
            .collect();

        let mut best: Option<(f64, usize, usize)> = None;
        for entry in per_point {
            if best.is_none_or(|b| entry.0 > b.0) {
                best = Some(entry);
            }
        }
        let (max_residual, worst_shift, worst_point) = match best {
            Some((r, si, pi)) if !shifts.is_empty() => (r, Some(shifts[si]), Some(samples.points[pi])),
            _ => (0.0, None, None),
        };
        let pass = max_residual < tol;
        let mismatched_shift = worst_shift.filter(|&s| {
            !pass && (self.coefficient_at(s).is_none() || other.coefficient_at(s).is_none())
        });
        EqualityReport {
            max_residual,
            worst_shift,
            worst_point,
            mismatched_shift,
            tol,
            pass,
        }
    }

    fn merge(md: Arc<ModularData>, parts: Vec<(Complex64, CoefficientFn)>, tol: f64) -> Self {
        let groups = group_by_shift(parts);
        if groups.is_empty() {
            return Self::zero(md);
        }
        let poles: Vec<Complex64> = groups
            .iter()
            .flat_map(|(_, ps)| ps.iter().flat_map(|p| p.poles().iter().copied()))
            .collect();
        let probes = SampleSet::generate(&md, PRUNE_PROBES, PRUNE_SEED, POLE_GUARD, &poles);

        // For each group and probe: |Σ parts| and max |part|.
        let evals: Vec<Vec<(f64, f64)>> = groups
            .iter()
            .map(|(_, ps)| {
                probes
                    .points
                    .iter()
                    .map(|&x| {
                        let vals: Vec<Complex64> = ps.iter().map(|p| p.eval(x)).collect();
                        let total: Complex64 = vals.iter().sum();
                        let largest = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
                        (total.norm(), largest)
                    })
                    .collect()
            })
            .collect();
        let op_scale: Vec<f64> = (0..probes.len())
            .map(|k| evals.iter().map(|g| g[k].0).fold(1.0, f64::max))
            .collect();

        let terms = groups
            .into_iter()
            .zip(&evals)
            .filter(|(_, ev)| {
                ev.iter().zip(&op_scale).any(|(&(total, largest), &scale)| {
                    !(total < tol * scale.max(largest))
                })
            })
            .map(|((shift, ps), _)| Term {
                shift,
                coeff: CoefficientFn::sum(&ps),
            })
            .collect();
        DifferenceOperator { terms, md }
    }
}

fn group_by_shift(parts: Vec<(Complex64, CoefficientFn)>) -> Vec<(Complex64, Vec<CoefficientFn>)> {
    let mut groups: Vec<(Complex64, Vec<CoefficientFn>)> = Vec::new();
    for (s, c) in parts {
        match groups.iter_mut().find(|(g, _)| (g - s).norm() <= SHIFT_TOL) {
            Some((_, v)) => v.push(c),
            None => groups.push((s, vec![c])),
        }
    }
    groups.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    groups
}

impl fmt::Debug for DifferenceOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.terms.iter().map(|t| (format_complex(t.shift), t.coeff.expr())))
            .finish()
    }
}

impl fmt::Display for DifferenceOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "[{}]·T_{}", t.coeff.expr(), format_complex(t.shift))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn md() -> Arc<ModularData> {
        Arc::new(ModularData::default_params())
    }

    fn two_term(md: &Arc<ModularData>, m: f64) -> DifferenceOperator {
        let (a, b) = (md.clone(), md.clone());
        DifferenceOperator::from_terms(
            md.clone(),
            vec![
                (
                    c(1.0, 0.0),
                    CoefficientFn::new("[x-m]/[x]", vec![c(0.0, 0.0)], move |x| {
                        a.bracket(x - m) / a.bracket(x)
                    }),
                ),
                (
                    c(-1.0, 0.0),
                    CoefficientFn::new("[x+m]/[x]", vec![c(0.0, 0.0)], move |x| {
                        b.bracket(x + m) / b.bracket(x)
                    }),
                ),
            ],
        )
    }

    #[test]
    fn apply_identity_and_shift() {
        let md = md();
        let id = DifferenceOperator::identity(md.clone());
        assert_eq!(id.apply(|x| x * x, c(1.5, 0.5)).unwrap(), c(1.5, 0.5) * c(1.5, 0.5));
        let t1 = DifferenceOperator::shift(md, c(1.0, 0.0));
        assert_eq!(t1.apply(|x| x, c(2.0, 0.0)).unwrap(), c(3.0, 0.0));
    }

    #[test]
    fn apply_two_term_operator_matches_direct_evaluation() {
        let md = md();
        let l = two_term(&md, 1.0);
        let x = c(0.7, 0.0);
        let direct = md.bracket(x - 1.0) / md.bracket(x) + md.bracket(x + 1.0) / md.bracket(x);
        let got = l.apply(|_| c(1.0, 0.0), x).unwrap();
        assert!((got - direct).norm() < 1e-14 * direct.norm());
    }

    #[test]
    fn apply_refuses_points_at_poles() {
        let md = md();
        let l = two_term(&md, 1.0);
        let err = l.apply(|_| c(1.0, 0.0), md.omega * 2.0).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
    }

    #[test]
    fn compose_with_translations() {
        let md = md();
        let id = DifferenceOperator::identity(md.clone());
        let l = two_term(&md, 1.0);
        let samples = SampleSet::for_operators(&md, 20, 1, &[&l]);
        assert!(id.compose(&l).equal_on(&l, &samples, 1e-14).pass);
        assert!(l.compose(&id).equal_on(&l, &samples, 1e-14).pass);

        let t1 = DifferenceOperator::shift(md.clone(), c(1.0, 0.0));
        let tm1 = DifferenceOperator::shift(md.clone(), c(-1.0, 0.0));
        let prod = t1.compose(&tm1);
        assert_eq!(prod.shifts(), vec![c(0.0, 0.0)]);
        assert!(prod.equal_on(&id, &samples, 1e-15).pass);
    }

    #[test]
    fn compose_two_term_square_middle_coefficient() {
        let md = md();
        let l = two_term(&md, 1.0);
        let sq = l.compose(&l);
        assert_eq!(sq.shifts(), vec![c(-2.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let x = c(0.7, 0.0);
        let b = |y: Complex64| md.bracket(y);
        let expected = b(x - 1.0) * b(x + 2.0) / (b(x) * b(x + 1.0))
            + b(x + 1.0) * b(x - 2.0) / (b(x) * b(x - 1.0));
        let got = sq.coefficient_at(c(0.0, 0.0)).unwrap().eval(x);
        assert!((got - expected).norm() < 1e-13 * expected.norm());
    }

    #[test]
    fn add_scale_and_cancellation() {
        let md = md();
        let l = two_term(&md, 1.0);
        assert!(l.add(&l.scale(c(-1.0, 0.0))).is_empty());
        assert!(l.scale(c(0.0, 0.0)).is_empty());

        let five = DifferenceOperator::identity(md.clone()).scale(c(5.0, 0.0));
        assert_eq!(five.apply(|x| x + 1.0, c(2.0, 1.0)).unwrap(), c(15.0, 5.0));

        let t1 = DifferenceOperator::shift(md.clone(), c(1.0, 0.0));
        let tm1 = DifferenceOperator::shift(md.clone(), c(-1.0, 0.0));
        let got = t1.add(&tm1).apply(|x| x.exp(), c(0.0, 0.0)).unwrap();
        let expected = 1f64.exp() + (-1f64).exp();
        assert!((got.re - expected).abs() < 1e-15 && got.im == 0.0);
    }

    #[test]
    fn commutator_of_commuting_pairs_is_empty() {
        let md = md();
        let l = two_term(&md, 1.0);
        assert!(l.commutator(&l).is_empty());
        let t1 = DifferenceOperator::shift(md.clone(), c(1.0, 0.0));
        let tm1 = DifferenceOperator::shift(md.clone(), c(-1.0, 0.0));
        assert!(t1.commutator(&tm1).is_empty());
        // L does not commute with a translation by an irrational step.
        let t = DifferenceOperator::shift(md, c(0.37, 0.0));
        assert!(!l.commutator(&t).is_empty());
    }

    #[test]
    fn degree_and_length() {
        let md = md();
        let l = two_term(&md, 2.0);
        assert_eq!(l.degree().unwrap(), 1.0);
        assert_eq!(l.length().unwrap(), 2.0);
        let id = DifferenceOperator::identity(md.clone());
        assert_eq!(id.degree().unwrap(), 0.0);
        assert_eq!(id.length().unwrap(), 0.0);
        let tc = DifferenceOperator::shift(md.clone(), c(1.0, 0.5));
        assert!(matches!(tc.degree(), Err(Error::ComplexShift(_))));
        assert!(DifferenceOperator::zero(md).degree().is_err());
    }

    #[test]
    fn conjugations() {
        let md = md();
        let l = two_term(&md, 1.0);
        let id = DifferenceOperator::identity(md.clone());
        let samples = SampleSet::for_operators(&md, 30, 2, &[&l]);
        assert!(id.conj_s().equal_on(&id, &samples, 1e-15).pass);
        assert!(id.conj_u().equal_on(&id, &samples, 1e-15).pass);
        assert!(l.conj_s().equal_on(&l, &samples, 1e-12).pass);
        let flipped = l.conj_u().equal_on(&l.scale(c(-1.0, 0.0)), &samples, 1e-12);
        assert!(flipped.pass, "{flipped:?}");
        let back = l.conj_u().conj_u_inv();
        assert!(back.equal_on(&l, &samples, 1e-14).pass);
        let twice = l.conj_s().conj_s();
        assert_eq!(twice.shifts(), l.shifts());
    }

    #[test]
    fn equal_on_reports_mismatched_shift() {
        let md = md();
        let t1 = DifferenceOperator::shift(md.clone(), c(1.0, 0.0));
        let tm1 = DifferenceOperator::shift(md.clone(), c(-1.0, 0.0));
        let samples = SampleSet::generate(&md, 10, 3, POLE_GUARD, &[]);
        let same = t1.equal_on(&t1, &samples, 1e-12);
        assert!(same.pass && same.max_residual == 0.0);
        let rep = t1.equal_on(&tm1, &samples, 1e-12);
        assert!(!rep.pass);
        assert!(rep.mismatched_shift.is_some());
    }

    #[test]
    fn samples_avoid_poles() {
        let md = md();
        let poles = vec![c(0.0, 0.0), c(1.0, 0.0), c(3.3, 2.0)];
        let s = SampleSet::generate(&md, 50, 7, 0.5, &poles);
        assert_eq!(s.len(), 50);
        for x in &s.points {
            for p in &poles {
                assert!(md.lattice_distance(x - p) > 0.5);
            }
        }
        let again = SampleSet::generate(&md, 50, 7, 0.5, &poles);
        assert_eq!(s.points, again.points);
    }
}
