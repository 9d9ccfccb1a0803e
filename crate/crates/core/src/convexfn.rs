//! Smooth convex potentials and their Fenchel conjugates.
//!
//! Three families are supported: positive-definite quadratics, scaled
//! log-sum-exp functions of atomic measures, and nonnegative combinations of
//! those. The conjugate `f*(alpha) = sup_x <alpha, x> - f(x)` is evaluated by
//! damped Newton ascent, which has a bounded maximiser exactly when `alpha`
//! lies in the interior of the gradient image of `f`.

use crate::geometry::{GeometryError, Polytope};
use crate::laplace::AtomicMeasure;
use crate::newton::{self, NewtonConfig, NewtonError, Objective};
use crate::rational::{self, Rational};
use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("scale must be positive and finite")]
    InvalidScale,
    #[error("combination needs at least one term")]
    EmptyCombination,
    #[error("combination coefficient {0} is negative")]
    NegativeCoefficient(String),
    #[error("conjugate diverged: target outside the interior of the conjugate domain")]
    Divergence,
    #[error("Hessian singular along the Newton path")]
    SingularHessian,
    #[error("no convergence within the iteration budget (gradient norm {0:.3e})")]
    MaxIterations(f64),
    #[error("probe specification is invalid: {0}")]
    InvalidProbes(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<NewtonError> for ConvexError {
    fn from(e: NewtonError) -> Self {
        match e {
            NewtonError::Divergence { .. } => ConvexError::Divergence,
            NewtonError::SingularHessian { .. } => ConvexError::SingularHessian,
            NewtonError::MaxIterations { grad_norm, .. } | NewtonError::Stalled { grad_norm } => {
                ConvexError::MaxIterations(grad_norm)
            }
        }
    }
}

/// Closure of the gradient image `d f(R^n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GradientImage {
    Everything,
    Bounded(Polytope),
}

impl GradientImage {
    /// Interior test on the exact binary value of `alpha`.
    pub fn interior_contains(&self, alpha: &[f64]) -> bool {
        match self {
            GradientImage::Everything => true,
            GradientImage::Bounded(p) => alpha
                .iter()
                .map(|&a| rational::from_f64_exact(a))
                .collect::<Option<Vec<_>>>()
                .is_some_and(|a| p.is_full_dimensional() && p.relative_interior_contains(&a)),
        }
    }
}

/// A smooth convex function. `eval` returns `+inf` off the domain.
pub trait ConvexFunction {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    fn hess(&self, x: &[f64]) -> DMatrix<f64>;
    /// Closure of the gradient image, when it is known in closed form.
    fn gradient_image(&self) -> Option<GradientImage> {
        None
    }
}

/// `f(x) = 1/2 x^T A x + b^T x` with `A` symmetric positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PdQuadraticJson", into = "PdQuadraticJson")]
pub struct PdQuadratic {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    a_f: DMatrix<f64>,
    b_f: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PdQuadraticJson {
    #[serde(with = "rational::serde_rational_mat")]
    a: Vec<Vec<Rational>>,
    #[serde(with = "rational::serde_rational_vec")]
    b: Vec<Rational>,
}

impl TryFrom<PdQuadraticJson> for PdQuadratic {
    type Error = ConvexError;
    fn try_from(j: PdQuadraticJson) -> Result<Self, ConvexError> {
        PdQuadratic::new(j.a, j.b)
    }
}

impl From<PdQuadratic> for PdQuadraticJson {
    fn from(q: PdQuadratic) -> Self {
        PdQuadraticJson { a: q.a, b: q.b }
    }
}

impl PdQuadratic {
    /// Checks symmetry and positive definiteness exactly (leading principal
    /// minors).
    pub fn new(a: Vec<Vec<Rational>>, b: Vec<Rational>) -> Result<Self, ConvexError> {
        let n = b.len();
        if n == 0 || a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(ConvexError::DimensionMismatch {
                expected: n,
                found: a.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(ConvexError::NotPositiveDefinite);
                }
            }
        }
        for k in 1..=n {
            let minor: Vec<Vec<Rational>> = a[..k].iter().map(|r| r[..k].to_vec()).collect();
            if !rational::det(&minor).is_positive() {
                return Err(ConvexError::NotPositiveDefinite);
            }
        }
        let a_f = DMatrix::from_fn(n, n, |i, j| rational::to_f64(&a[i][j]));
        let b_f = b.iter().map(rational::to_f64).collect();
        Ok(PdQuadratic { a, b, a_f, b_f })
    }

    /// `1/2 |x|^2`.
    pub fn identity(n: usize) -> Self {
        let a = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| rational::rat(i64::from(i == j)))
                    .collect()
            })
            .collect();
        Self::new(a, vec![Rational::zero(); n]).expect("identity is positive definite")
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.a
    }

    pub fn linear(&self) -> &[Rational] {
        &self.b
    }
}

/// `f(y) = (1/s) log sum_j w_j e^{s <alpha_j, y>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LogSumExpJson", into = "LogSumExpJson")]
pub struct LogSumExp {
    measure: AtomicMeasure,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
struct LogSumExpJson {
    measure: AtomicMeasure,
    #[serde(with = "rational::serde_decimal")]
    scale: f64,
}

impl TryFrom<LogSumExpJson> for LogSumExp {
    type Error = ConvexError;
    fn try_from(j: LogSumExpJson) -> Result<Self, ConvexError> {
        LogSumExp::new(j.measure, j.scale)
    }
}

impl From<LogSumExp> for LogSumExpJson {
    fn from(l: LogSumExp) -> Self {
        LogSumExpJson {
            measure: l.measure,
            scale: l.scale,
        }
    }
}

impl LogSumExp {
    pub fn new(measure: AtomicMeasure, scale: f64) -> Result<Self, ConvexError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ConvexError::InvalidScale);
        }
        Ok(LogSumExp { measure, scale })
    }

    pub fn measure(&self) -> &AtomicMeasure {
        &self.measure
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v * self.scale).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(with = "rational::serde_rational")]
    pub coef: Rational,
    pub potential: ConvexPotential,
}

/// `sum_i c_i f_i` with `c_i >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CombinationJson", into = "CombinationJson")]
pub struct Combination {
    terms: Vec<Term>,
    coefs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CombinationJson {
    terms: Vec<Term>,
}

impl TryFrom<CombinationJson> for Combination {
    type Error = ConvexError;
    fn try_from(j: CombinationJson) -> Result<Self, ConvexError> {
        Combination::new(j.terms)
    }
}

impl From<Combination> for CombinationJson {
    fn from(c: Combination) -> Self {
        CombinationJson { terms: c.terms }
    }
}

impl Combination {
    pub fn new(terms: Vec<Term>) -> Result<Self, ConvexError> {
        let Some(first) = terms.first() else {
            return Err(ConvexError::EmptyCombination);
        };
        let n = first.potential.dim();
        for t in &terms {
            if t.coef.is_negative() {
                return Err(ConvexError::NegativeCoefficient(rational::format_rational(
                    &t.coef,
                )));
            }
            if t.potential.dim() != n {
                return Err(ConvexError::DimensionMismatch {
                    expected: n,
                    found: t.potential.dim(),
                });
            }
        }
        let coefs = terms.iter().map(|t| rational::to_f64(&t.coef)).collect();
        Ok(Combination { terms, coefs })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ConvexPotential {
    #[serde(rename = "pdquad")]
    PdQuadratic(PdQuadratic),
    #[serde(rename = "lse")]
    LogSumExp(LogSumExp),
    #[serde(rename = "combo")]
    Combination(Combination),
}

impl ConvexPotential {
    pub fn lse(measure: AtomicMeasure, scale: f64) -> Result<Self, ConvexError> {
        Ok(ConvexPotential::LogSumExp(LogSumExp::new(measure, scale)?))
    }

    /// `c_1 f_1 + c_2 f_2 + ...`.
    pub fn combo(terms: Vec<(Rational, ConvexPotential)>) -> Result<Self, ConvexError> {
        Ok(ConvexPotential::Combination(Combination::new(
            terms
                .into_iter()
                .map(|(coef, potential)| Term { coef, potential })
                .collect(),
        )?))
    }
}

impl ConvexFunction for ConvexPotential {
    fn dim(&self) -> usize {
        match self {
            ConvexPotential::PdQuadratic(q) => q.b.len(),
            ConvexPotential::LogSumExp(l) => l.measure.dim(),
            ConvexPotential::Combination(c) => c.terms[0].potential.dim(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ConvexPotential::PdQuadratic(q) => {
                let n = x.len();
                let mut v = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        v += 0.5 * x[i] * q.a_f[(i, j)] * x[j];
                    }
                    v += q.b_f[i] * x[i];
                }
                v
            }
            ConvexPotential::LogSumExp(l) => {
                l.measure.log_laplace_unchecked(&l.scaled(x)) / l.scale
            }
            ConvexPotential::Combination(c) => c
                .terms
                .iter()
                .zip(&c.coefs)
                .filter(|(_, &k)| k != 0.0)
                .map(|(t, k)| k * t.potential.eval(x))
                .sum(),
        }
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexPotential::PdQuadratic(q) => (0..x.len())
                .map(|i| (0..x.len()).map(|j| q.a_f[(i, j)] * x[j]).sum::<f64>() + q.b_f[i])
                .collect(),
            ConvexPotential::LogSumExp(l) => l.measure.grad_log_laplace_unchecked(&l.scaled(x)),
            ConvexPotential::Combination(c) => {
                let mut g = vec![0.0; x.len()];
                for (t, k) in c.terms.iter().zip(&c.coefs) {
                    if *k == 0.0 {
                        continue;
                    }
                    for (gi, ti) in g.iter_mut().zip(t.potential.grad(x)) {
                        *gi += k * ti;
                    }
                }
                g
            }
        }
    }

    fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            ConvexPotential::PdQuadratic(q) => q.a_f.clone(),
            ConvexPotential::LogSumExp(l) => {
                l.measure.hess_log_laplace_unchecked(&l.scaled(x)) * l.scale
            }
            ConvexPotential::Combination(c) => {
                let n = x.len();
                let mut h = DMatrix::zeros(n, n);
                for (t, k) in c.terms.iter().zip(&c.coefs) {
                    if *k != 0.0 {
                        h += t.potential.hess(x) * *k;
                    }
                }
                h
            }
        }
    }

    /// Gradient images add under sums and scale under coefficients.
    fn gradient_image(&self) -> Option<GradientImage> {
        Some(match self {
            ConvexPotential::PdQuadratic(_) => GradientImage::Everything,
            ConvexPotential::LogSumExp(l) => GradientImage::Bounded(l.measure.support().clone()),
            ConvexPotential::Combination(c) => {
                let n = self.dim();
                let mut acc = Polytope::point(vec![Rational::zero(); n]).ok()?;
                for t in &c.terms {
                    if t.coef.is_zero() {
                        continue;
                    }
                    match t.potential.gradient_image()? {
                        GradientImage::Everything => return Some(GradientImage::Everything),
                        GradientImage::Bounded(p) => {
                            acc = acc.minkowski_sum(&p.scale(&t.coef).ok()?).ok()?;
                        }
                    }
                }
                GradientImage::Bounded(acc)
            }
        })
    }
}

/// Result of evaluating `f*(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateResult {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// `|alpha - grad f(argmax)|`.
    pub gap_certificate: f64,
}

struct Tilted<'a, F: ?Sized> {
    f: &'a F,
    alpha: &'a [f64],
}

impl<F: ConvexFunction + ?Sized> Objective for Tilted<'_, F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.f.eval(x) - dot(self.alpha, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.f.grad(x);
        g.iter_mut().zip(self.alpha).for_each(|(gi, ai)| *gi -= ai);
        g
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.f.hess(x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(expected: usize, v: &[f64]) -> Result<(), ConvexError> {
    if v.len() != expected {
        Err(ConvexError::DimensionMismatch {
            expected,
            found: v.len(),
        })
    } else {
        Ok(())
    }
}

/// `f*(alpha)` with its maximiser.
///
/// When the gradient image of `f` is known, targets outside its interior are
/// reported as [`ConvexError::Divergence`] without iterating: the supremum is
/// then either infinite or not attained.
pub fn conjugate<F: ConvexFunction + ?Sized>(
    f: &F,
    alpha: &[f64],
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<ConjugateResult, ConvexError> {
    check_len(f.dim(), alpha)?;
    check_len(f.dim(), x0)?;
    if let Some(img) = f.gradient_image() {
        if !img.interior_contains(alpha) {
            return Err(ConvexError::Divergence);
        }
    }
    let out = newton::minimize(&Tilted { f, alpha }, x0, cfg)?;
    let g = f.grad(&out.x);
    let gap = newton::norm(&g.iter().zip(alpha).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(ConjugateResult {
        value: -out.value,
        argmax: out.x,
        gap_certificate: gap,
    })
}

/// `f(x) + f*(alpha) - <alpha, x>`, nonnegative up to solver tolerance.
pub fn fenchel_gap<F: ConvexFunction + ?Sized>(
    f: &F,
    x: &[f64],
    alpha: &[f64],
    cfg: &NewtonConfig,
) -> Result<f64, ConvexError> {
    check_len(f.dim(), x)?;
    let c = conjugate(f, alpha, &vec![0.0; f.dim()], cfg)?;
    Ok(f.eval(x) + c.value - dot(alpha, x))
}

/// The conjugate `f*` as a convex function in its own right. Its gradient
/// is the inverse of `grad f` and its Hessian the inverse of `hess f` there.
pub struct Conjugate<'a, F: ?Sized> {
    f: &'a F,
    cfg: NewtonConfig,
}

impl<'a, F: ConvexFunction + ?Sized> Conjugate<'a, F> {
    pub fn new(f: &'a F, cfg: NewtonConfig) -> Self {
        Conjugate { f, cfg }
    }

    fn solve(&self, alpha: &[f64]) -> Option<ConjugateResult> {
        conjugate(self.f, alpha, &vec![0.0; self.f.dim()], &self.cfg).ok()
    }
}

impl<F: ConvexFunction + ?Sized> ConvexFunction for Conjugate<'_, F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn eval(&self, alpha: &[f64]) -> f64 {
        self.solve(alpha).map_or(f64::INFINITY, |c| c.value)
    }
    fn grad(&self, alpha: &[f64]) -> Vec<f64> {
        self.solve(alpha)
            .map_or_else(|| vec![f64::NAN; self.dim()], |c| c.argmax)
    }
    fn hess(&self, alpha: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        self.solve(alpha)
            .and_then(|c| self.f.hess(&c.argmax).try_inverse())
            .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN))
    }
    fn gradient_image(&self) -> Option<GradientImage> {
        // inverse of a gradient diffeomorphism onto an open set
        Some(GradientImage::Everything)
    }
}

/// Regular probe grid over a box, `per_axis` points per coordinate
/// including the endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub per_axis: usize,
}

impl ProbeGrid {
    pub fn cube(n: usize, radius: f64, per_axis: usize) -> Self {
        ProbeGrid {
            lo: vec![-radius; n],
            hi: vec![radius; n],
            per_axis,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let n = self.lo.len();
        let m = self.per_axis;
        let total = m.pow(n as u32);
        (0..total)
            .map(|flat| {
                let mut k = flat;
                (0..n)
                    .map(|i| {
                        let idx = k % m;
                        k /= m;
                        if m == 1 {
                            0.5 * (self.lo[i] + self.hi[i])
                        } else {
                            self.lo[i] + (self.hi[i] - self.lo[i]) * idx as f64 / (m - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Denominator used to rationalise float gradients before taking hulls.
pub const RATIONALIZE_DENOMINATOR: i64 = 1_000_000_000;

/// Hull of the gradients at the probe points: an inner approximation of the
/// closed gradient image that fills it as the probe box grows.
pub fn grad_image_hull<F: ConvexFunction + ?Sized>(
    f: &F,
    probes: &ProbeGrid,
) -> Result<Polytope, ConvexError> {
    let n = f.dim();
    if probes.lo.len() != n || probes.hi.len() != n {
        return Err(ConvexError::DimensionMismatch {
            expected: n,
            found: probes.lo.len(),
        });
    }
    if probes.per_axis == 0 {
        return Err(ConvexError::InvalidProbes("per_axis must be positive".into()));
    }
    let pts = probes
        .points()
        .iter()
        .map(|x| {
            f.grad(x)
                .iter()
                .map(|&g| rational::round_to_denominator(g, RATIONALIZE_DENOMINATOR))
                .collect()
        })
        .collect();
    Ok(Polytope::hull(pts, n)?)
}

/// Open box `prod (lo_i, hi_i)`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn whole(n: usize) -> Self {
        DomainBox {
            lo: vec![f64::NEG_INFINITY; n],
            hi: vec![f64::INFINITY; n],
        }
    }

    /// First boundary point hit from `x` along `d`, if any bound is finite
    /// in that direction.
    pub fn exit_point(&self, x: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        let mut t_exit = f64::INFINITY;
        for i in 0..x.len() {
            let t = if d[i] > 0.0 {
                (self.hi[i] - x[i]) / d[i]
            } else if d[i] < 0.0 {
                (self.lo[i] - x[i]) / d[i]
            } else {
                f64::INFINITY
            };
            t_exit = t_exit.min(t);
        }
        t_exit
            .is_finite()
            .then(|| x.iter().zip(d).map(|(a, b)| a + t_exit * b).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreProbe {
    pub domain: DomainBox,
    pub starts: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    /// Number of points on the grid `t_k = 1 - 2^-k`.
    pub steps: usize,
    /// Directional derivatives staying below this count as bounded.
    pub threshold: f64,
}

impl LegendreProbe {
    pub fn new(domain: DomainBox, starts: Vec<Vec<f64>>, directions: Vec<Vec<f64>>) -> Self {
        LegendreProbe {
            domain,
            starts,
            directions,
            steps: 40,
            threshold: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayEvidence {
    pub start: Vec<f64>,
    pub boundary_point: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub monotone: bool,
    pub exceeds_threshold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegendreVerdict {
    /// No finite boundary was reached by any probe ray.
    Vacuous,
    Legendre,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreReport {
    pub rays: Vec<RayEvidence>,
    pub verdict: LegendreVerdict,
}

/// Sampled evidence for the boundary blow-up condition of a Legendre
/// function: along each ray from an interior start to the box boundary, the
/// directional derivative must grow without bound. Only finitely many rays
/// are inspected, so a `Legendre` verdict is evidence, not proof.
pub fn check_legendre<F: ConvexFunction + ?Sized>(f: &F, probe: &LegendreProbe) -> LegendreReport {
    let mut rays = Vec::new();
    for x in &probe.starts {
        for d in &probe.directions {
            let Some(y) = probe.domain.exit_point(x, d) else {
                continue;
            };
            let dir: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
            let derivatives: Vec<f64> = (1..=probe.steps)
                .map(|k| {
                    let t = 1.0 - 0.5f64.powi(k as i32);
                    let p: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                    dot(&f.grad(&p), &dir)
                })
                .collect();
            let monotone = derivatives.windows(2).all(|w| w[1] >= w[0]);
            let exceeds_threshold = derivatives
                .iter()
                .any(|v| *v > probe.threshold || v.is_nan() || v.is_infinite());
            rays.push(RayEvidence {
                start: x.clone(),
                boundary_point: y,
                derivatives,
                monotone,
                exceeds_threshold,
            });
        }
    }
    let verdict = if rays.is_empty() {
        LegendreVerdict::Vacuous
    } else if rays.iter().all(|r| r.exceeds_threshold) {
        LegendreVerdict::Legendre
    } else {
        LegendreVerdict::Violation
    };
    LegendreReport { rays, verdict }
}
