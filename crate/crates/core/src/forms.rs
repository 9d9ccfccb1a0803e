//! Torus-invariant (1,1)-forms `omega_f = dJd f` on `C^n / i Z^n`.
//!
//! In the coordinates `z = x + i y` the form is `sum_{jk} f_jk(x) dx_j ^ dy_k`,
//! so everything reduces to the real Hessian of the potential. Tangent
//! vectors are pairs `(v, w)` of real and imaginary parts.

use crate::convexfn::{ConvexFunction, ConvexPotential, GradientImage};
use crate::geometry::Polytope;
use crate::mixedvol::{self, MixedVolError};
use crate::rational::{self, Rational};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Largest dimension for the exterior-algebra expansion.
pub const MAX_TOP_POWER_DIM: usize = 4;
pub const DEFAULT_ORDER: usize = 20;
pub const DEFAULT_START_RADIUS: f64 = 8.0;
pub const DEFAULT_MAX_RADIUS: f64 = 128.0;
/// Panel width along each axis; the panel count grows with the radius.
pub const PANEL_WIDTH: f64 = 4.0;
pub const ADAPTIVE_REL_TOL: f64 = 1e-4;
pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormsError {
    #[error("expected vectors of length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} exceeds the expansion guard of {MAX_TOP_POWER_DIM}")]
    DimensionGuard(usize),
    #[error("potential has an unbounded gradient image; its det-Hessian integral diverges")]
    UnboundedGradientImage,
    #[error("adaptive quadrature hit radius cap {radius} with relative increment {increment:.3e}")]
    NonConvergent { radius: f64, increment: f64 },
    #[error("quadrature order must be at least 1")]
    InvalidOrder,
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("Hessian has eigenvalue {eigenvalue:.3e} at {point:?}")]
    NotPositive { point: Vec<f64>, eigenvalue: f64 },
    #[error(transparent)]
    MixedVol(#[from] MixedVolError),
}

/// A tangent vector `v + i w` at a point of `C^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tangent {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl Tangent {
    pub fn new(v: Vec<f64>, w: Vec<f64>) -> Self {
        Tangent { v, w }
    }

    pub fn zero(n: usize) -> Self {
        Tangent {
            v: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    /// Multiplication by `i`: `(v, w) -> (-w, v)`.
    pub fn j(&self) -> Tangent {
        Tangent {
            v: self.w.iter().map(|a| -a).collect(),
            w: self.v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusFormField {
    potential: ConvexPotential,
}

fn quad(h: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += a[i] * h[(i, j)] * b[j];
        }
    }
    s
}

impl TorusFormField {
    pub fn new(potential: ConvexPotential) -> Self {
        TorusFormField { potential }
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn potential(&self) -> &ConvexPotential {
        &self.potential
    }

    fn check(&self, x: &[f64]) -> Result<(), FormsError> {
        if x.len() != self.dim() {
            return Err(FormsError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_tangent(&self, t: &Tangent) -> Result<(), FormsError> {
        self.check(&t.v)?;
        self.check(&t.w)
    }

    /// Verifies that the Hessian is positive semidefinite at every probe.
    pub fn check_positivity(&self, probes: &[Vec<f64>]) -> Result<(), FormsError> {
        for x in probes {
            self.check(x)?;
            let ev = self.potential.hess(x).symmetric_eigenvalues();
            let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -POSITIVITY_TOL {
                return Err(FormsError::NotPositive {
                    point: x.clone(),
                    eigenvalue: min,
                });
            }
        }
        Ok(())
    }
}

/// `omega_f(x)(a, b) = v^T H w_2 - w^T H v_2` for `a = (v, w)`, `b = (v_2, w_2)`.
pub fn form_value(f: &TorusFormField, x: &[f64], a: &Tangent, b: &Tangent) -> Result<f64, FormsError> {
    f.check(x)?;
    f.check_tangent(a)?;
    f.check_tangent(b)?;
    let h = f.potential.hess(x);
    Ok(quad(&h, &a.v, &b.w) - quad(&h, &a.w, &b.v))
}

/// `omega_f(x)(a, J a) = v^T H v + w^T H w`.
pub fn positivity_probe(f: &TorusFormField, x: &[f64], a: &Tangent) -> Result<f64, FormsError> {
    f.check(x)?;
    f.check_tangent(a)?;
    let h = f.potential.hess(x);
    Ok(quad(&h, &a.v, &a.v) + quad(&h, &a.w, &a.w))
}

/// Element of the exterior algebra on `2n` generators `dx_1, dy_1, .., dx_n, dy_n`
/// (generator `2m` is `dx_{m+1}`, `2m + 1` is `dy_{m+1}`), keyed by bitmask.
#[derive(Debug, Clone, Default, PartialEq)]
struct ExteriorForm {
    terms: BTreeMap<u32, f64>,
}

impl ExteriorForm {
    fn wedge(&self, other: &ExteriorForm) -> ExteriorForm {
        let mut out = ExteriorForm::default();
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                // sign of merging the two sorted generator lists: count pairs
                // (i in a, j in b) with i > j
                let mut swaps = 0u32;
                let mut bits = b;
                while bits != 0 {
                    let j = bits.trailing_zeros();
                    swaps += (a >> (j + 1)).count_ones();
                    bits &= bits - 1;
                }
                let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
                *out.terms.entry(a | b).or_insert(0.0) += sign * ca * cb;
            }
        }
        out
    }
}

/// Coefficient of `omega^n / n!` against `dx_1 ^ dy_1 ^ .. ^ dx_n ^ dy_n`,
/// by expanding the wedge power term by term.
pub fn top_power_density(f: &TorusFormField, x: &[f64]) -> Result<f64, FormsError> {
    f.check(x)?;
    top_power_of_hessian(&f.potential.hess(x))
}

pub fn top_power_of_hessian(h: &DMatrix<f64>) -> Result<f64, FormsError> {
    let n = h.nrows();
    if n > MAX_TOP_POWER_DIM {
        return Err(FormsError::DimensionGuard(n));
    }
    let mut omega = ExteriorForm::default();
    for j in 0..n {
        for k in 0..n {
            let mask = (1u32 << (2 * j)) | (1u32 << (2 * k + 1));
            let sign = if 2 * j < 2 * k + 1 { 1.0 } else { -1.0 };
            *omega.terms.entry(mask).or_insert(0.0) += sign * h[(j, k)];
        }
    }
    let mut power = ExteriorForm::default();
    power.terms.insert(0, 1.0);
    for _ in 0..n {
        power = power.wedge(&omega);
    }
    let top = (1u32 << (2 * n)) - 1;
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    Ok(power.terms.get(&top).copied().unwrap_or(0.0) / fact)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        // Tricomi initial guess, then Newton on P_order
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out.push((z, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadiusMode {
    Fixed(f64),
    /// Double the radius from `start` until the relative increment is small.
    Adaptive { start: f64, max: f64 },
}

impl Default for RadiusMode {
    fn default() -> Self {
        RadiusMode::Adaptive {
            start: DEFAULT_START_RADIUS,
            max: DEFAULT_MAX_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub radius: RadiusMode,
    pub order: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            radius: RadiusMode::default(),
            order: DEFAULT_ORDER,
            rel_tol: ADAPTIVE_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusStep {
    pub radius: f64,
    pub panels_per_axis: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetHessReport {
    pub value: f64,
    pub radius: f64,
    pub order: usize,
    pub panels_per_axis: usize,
    /// Relative change at the last doubling; `None` for a fixed radius.
    pub increment: Option<f64>,
    pub history: Vec<RadiusStep>,
}

fn panels_for(radius: f64) -> usize {
    ((2.0 * radius / PANEL_WIDTH).ceil() as usize).max(1)
}

/// Tensor Gauss–Legendre rule for `g` over `[-r, r]^n`.
pub fn tensor_quadrature<G>(g: G, n: usize, radius: f64, order: usize) -> (f64, usize)
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let panels = panels_for(radius);
    let width = 2.0 * radius / panels as f64;
    let rule = gauss_legendre(order);
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = -radius + (p as f64 + 0.5) * width;
            rule.iter()
                .map(move |&(z, w)| (mid + 0.5 * width * z, 0.5 * width * w))
        })
        .collect();
    let m = nodes.len();
    let total = m.pow(n as u32);
    // parallel over the first axis, serial odometer over the rest; rows are
    // summed in order so the result does not depend on the thread count
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; n];
            idx[0] = first;
            let mut x = vec![0.0; n];
            let mut acc = 0.0;
            let inner = total / m;
            for _ in 0..inner {
                let mut w = 1.0;
                for (d, &i) in idx.iter().enumerate() {
                    x[d] = nodes[i].0;
                    w *= nodes[i].1;
                }
                acc += w * g(&x);
                for d in (1..n).rev() {
                    idx[d] += 1;
                    if idx[d] < m {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            acc
        })
        .collect();
    (rows.iter().sum(), panels)
}

/// `int det(d^2 f) dx`, the volume of the gradient image.
pub fn integrate_det_hess(f: &TorusFormField, cfg: &QuadratureConfig) -> Result<DetHessReport, FormsError> {
    if cfg.order == 0 {
        return Err(FormsError::InvalidOrder);
    }
    if let Some(GradientImage::Everything) = f.potential.gradient_image() {
        return Err(FormsError::UnboundedGradientImage);
    }
    let n = f.dim();
    let det = |x: &[f64]| f.potential.hess(x).determinant();
    let mut history = Vec::new();
    match cfg.radius {
        RadiusMode::Fixed(r) => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(FormsError::InvalidRadius(r));
            }
            let (value, panels) = tensor_quadrature(det, n, r, cfg.order);
            history.push(RadiusStep {
                radius: r,
                panels_per_axis: panels,
                value,
            });
            Ok(DetHessReport {
                value,
                radius: r,
                order: cfg.order,
                panels_per_axis: panels,
                increment: None,
                history,
            })
        }
        RadiusMode::Adaptive { start, max } => {
            if !(start > 0.0 && start.is_finite()) {
                return Err(FormsError::InvalidRadius(start));
            }
            let mut r = start;
            let (mut prev, panels) = tensor_quadrature(det, n, r, cfg.order);
            history.push(RadiusStep {
                radius: r,
                panels_per_axis: panels,
                value: prev,
            });
            loop {
                let next_r = 2.0 * r;
                if next_r > max {
                    let increment = history
                        .windows(2)
                        .last()
                        .map_or(f64::INFINITY, |w| rel_change(w[0].value, w[1].value));
                    return Err(FormsError::NonConvergent { radius: r, increment });
                }
                r = next_r;
                let (value, panels) = tensor_quadrature(det, n, r, cfg.order);
                history.push(RadiusStep {
                    radius: r,
                    panels_per_axis: panels,
                    value,
                });
                let increment = rel_change(prev, value);
                if increment < cfg.rel_tol {
                    return Ok(DetHessReport {
                        value,
                        radius: r,
                        order: cfg.order,
                        panels_per_axis: panels,
                        increment: Some(increment),
                        history,
                    });
                }
                prev = value;
            }
        }
    }
}

fn rel_change(prev: f64, value: f64) -> f64 {
    let d = (value - prev).abs();
    if value == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        d / value.abs()
    }
}

/// One comparison of `int det d^2(sum t_j f_j)` with the mixed-volume polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgePoint {
    pub t: Vec<u32>,
    pub quadrature: f64,
    #[serde(with = "rational::serde_rational")]
    pub polynomial: Rational,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub table: mixedvol::MixedVolumeTable,
    pub points: Vec<BridgePoint>,
    pub max_rel_error: f64,
}

/// Evaluates `int det d^2(sum t_j f_j)` at every `t` in the degree-`n`
/// simplex and compares with `vol(sum t_j Y_j)` for the gradient images `Y_j`.
pub fn mixed_volume_bridge(
    potentials: &[ConvexPotential],
    cfg: &QuadratureConfig,
) -> Result<BridgeReport, FormsError> {
    let first = potentials.first().ok_or(MixedVolError::NoBodies)?;
    let n = first.dim();
    if n > MAX_TOP_POWER_DIM {
        return Err(FormsError::DimensionGuard(n));
    }
    let bodies: Vec<Polytope> = potentials
        .iter()
        .map(|p| match p.gradient_image() {
            Some(GradientImage::Bounded(b)) => Ok(b),
            _ => Err(FormsError::UnboundedGradientImage),
        })
        .collect::<Result<_, _>>()?;
    let table = mixedvol::mixed_volumes(&bodies)?;
    let mut points = Vec::new();
    for (idx, _) in table.entries() {
        let t: Vec<Rational> = idx.entries().iter().map(|&e| rational::rat(e as i64)).collect();
        let combo = ConvexPotential::combo(t.iter().cloned().zip(potentials.iter().cloned()).collect())
            .expect("nonnegative coefficients on equal-dimension potentials");
        let report = integrate_det_hess(&TorusFormField::new(combo), cfg)?;
        let polynomial = table.evaluate(&t);
        let exact = rational::to_f64(&polynomial);
        let rel_error = if exact == 0.0 {
            report.value.abs()
        } else {
            (report.value - exact).abs() / exact
        };
        points.push(BridgePoint {
            t: idx.entries().to_vec(),
            quadrature: report.value,
            polynomial,
            rel_error,
        });
    }
    let max_rel_error = points.iter().map(|p| p.rel_error).fold(0.0, f64::max);
    Ok(BridgeReport {
        table,
        points,
        max_rel_error,
    })
}
