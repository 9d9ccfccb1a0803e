//! Toric momentum maps on projective space.
//!
//! A torus of rank `n` acts on `C^k` through integer characters `alpha_j`.
//! The momentum map `[v] -> sum |v_j|^2 alpha_j / |v|^2` sends the closure of
//! a complexified orbit onto the polytope spanned by the supported weights;
//! [`reach_target`] inverts it via the Laplace transform of `sum |v_j|^2 delta_{alpha_j}`.

use crate::geometry::{FaceDescriptor, GeometryError, Polytope};
use crate::laplace::{self, Atom, AtomicMeasure, LaplaceError};
use crate::newton::NewtonConfig;
use crate::rational::{self, Rational};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest weight count accepted by [`stratify`].
pub const MAX_STRATIFY_WEIGHTS: usize = 12;
/// Tolerance for the skew-adjointness check of [`unitary_momentum`].
pub const SKEW_TOL: f64 = 1e-12;
pub const PROJECTIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentumError {
    #[error("weight system needs at least one weight")]
    NoWeights,
    #[error("torus rank must be positive")]
    ZeroRank,
    #[error("weight {index} has length {found}, expected rank {expected}")]
    WeightLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("{weights} weights but {amps} amplitudes")]
    LengthMismatch { weights: usize, amps: usize },
    #[error("vector has no nonzero amplitude")]
    ZeroVector,
    #[error("amplitudes must be finite")]
    NonFinite,
    #[error("expected a vector of length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not skew-adjoint (|X + X*| = {0:.3e})")]
    NotSkewAdjoint(f64),
    #[error("matrix must be square of size {expected}, got {rows}x{cols}")]
    MatrixShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("finite-difference step {0} outside [1e-6, 1e-3]")]
    StepOutOfRange(f64),
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    #[error("target residual {0:.3e} exceeds tolerance")]
    Residual(f64),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Integer characters `alpha_1 .. alpha_k` of a rank-`n` torus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WeightsJson", into = "WeightsJson")]
pub struct TorusWeightSystem {
    rank: usize,
    weights: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct WeightsJson {
    rank: usize,
    weights: Vec<Vec<i64>>,
}

impl TryFrom<WeightsJson> for TorusWeightSystem {
    type Error = MomentumError;
    fn try_from(j: WeightsJson) -> Result<Self, Self::Error> {
        TorusWeightSystem::new(j.rank, j.weights)
    }
}

impl From<TorusWeightSystem> for WeightsJson {
    fn from(w: TorusWeightSystem) -> Self {
        WeightsJson {
            rank: w.rank,
            weights: w.weights,
        }
    }
}

impl TorusWeightSystem {
    pub fn new(rank: usize, weights: Vec<Vec<i64>>) -> Result<Self, MomentumError> {
        if rank == 0 {
            return Err(MomentumError::ZeroRank);
        }
        if weights.is_empty() {
            return Err(MomentumError::NoWeights);
        }
        for (index, w) in weights.iter().enumerate() {
            if w.len() != rank {
                return Err(MomentumError::WeightLength {
                    index,
                    expected: rank,
                    found: w.len(),
                });
            }
        }
        Ok(TorusWeightSystem { rank, weights })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.weights
    }

    pub fn weight_rational(&self, j: usize) -> Vec<Rational> {
        self.weights[j].iter().map(|&a| rational::rat(a)).collect()
    }

    fn pairing(&self, j: usize, x: &[f64]) -> f64 {
        self.weights[j].iter().zip(x).map(|(&a, b)| a as f64 * b).sum()
    }

    fn check_vec(&self, x: &[f64]) -> Result<(), MomentumError> {
        if x.len() != self.rank {
            return Err(MomentumError::DimensionMismatch {
                expected: self.rank,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_len(&self, v: &ProjectiveVector) -> Result<(), MomentumError> {
        if v.len() != self.len() {
            return Err(MomentumError::LengthMismatch {
                weights: self.len(),
                amps: v.len(),
            });
        }
        Ok(())
    }
}

/// A point `[v]` of projective space, stored by a representative.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VectorJson", into = "VectorJson")]
pub struct ProjectiveVector {
    amps: Vec<Complex64>,
    support: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    amps: Vec<[String; 2]>,
}

impl TryFrom<VectorJson> for ProjectiveVector {
    type Error = String;
    fn try_from(j: VectorJson) -> Result<Self, Self::Error> {
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad decimal {s:?}: {e}"));
        let amps = j
            .amps
            .iter()
            .map(|[re, im]| Ok(Complex64::new(parse(re)?, parse(im)?)))
            .collect::<Result<Vec<_>, String>>()?;
        ProjectiveVector::new(amps).map_err(|e| e.to_string())
    }
}

impl From<ProjectiveVector> for VectorJson {
    fn from(v: ProjectiveVector) -> Self {
        VectorJson {
            amps: v
                .amps
                .iter()
                .map(|c| [format!("{}", c.re), format!("{}", c.im)])
                .collect(),
        }
    }
}

impl ProjectiveVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self, MomentumError> {
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(MomentumError::NonFinite);
        }
        let support: Vec<usize> = (0..amps.len()).filter(|&j| amps[j].norm_sqr() > 0.0).collect();
        if support.is_empty() {
            return Err(MomentumError::ZeroVector);
        }
        Ok(ProjectiveVector { amps, support })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, MomentumError> {
        Self::new(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn basis(k: usize, j: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); k];
        amps[j] = Complex64::new(1.0, 0.0);
        ProjectiveVector::new(amps).expect("basis vector is nonzero")
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: Complex64) -> Result<Self, MomentumError> {
        Self::new(self.amps.iter().map(|a| a * c).collect())
    }

    /// Representative with the first largest-modulus entry equal to 1.
    pub fn normalized(&self) -> Vec<Complex64> {
        let mut best = self.support[0];
        for &j in &self.support {
            if self.amps[j].norm() > self.amps[best].norm() {
                best = j;
            }
        }
        let pivot = self.amps[best];
        self.amps.iter().map(|a| a / pivot).collect()
    }

    pub fn projectively_eq(&self, other: &ProjectiveVector, tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        // normalise both by the same index so near-ties in modulus do not matter
        let mut best = self.support[0];
        for &j in &self.support {
            if self.amps[j].norm() > self.amps[best].norm() {
                best = j;
            }
        }
        if other.amps[best].norm() == 0.0 {
            return false;
        }
        let a: Vec<Complex64> = self.amps.iter().map(|z| z / self.amps[best]).collect();
        let b: Vec<Complex64> = other.amps.iter().map(|z| z / other.amps[best]).collect();
        a.iter().zip(&b).all(|(p, q)| (p - q).norm() <= tol)
    }

    fn as_dvector(&self) -> nalgebra::DVector<Complex64> {
        nalgebra::DVector::from_column_slice(&self.amps)
    }
}

impl PartialEq for ProjectiveVector {
    fn eq(&self, other: &Self) -> bool {
        self.projectively_eq(other, PROJECTIVE_TOL)
    }
}

pub fn momentum(w: &TorusWeightSystem, v: &ProjectiveVector) -> Result<Vec<f64>, MomentumError> {
    w.check_len(v)?;
    // scale by the largest modulus first so tiny or huge representatives
    // neither underflow nor overflow
    let m = v.support.iter().map(|&j| v.amps[j].norm()).fold(0.0, f64::max);
    let mut acc = vec![0.0; w.rank];
    let mut total = 0.0;
    for &j in &v.support {
        let p = (v.amps[j] / m).norm_sqr();
        total += p;
        for (a, &wj) in acc.iter_mut().zip(&w.weights[j]) {
            *a += p * wj as f64;
        }
    }
    Ok(acc.into_iter().map(|a| a / total).collect())
}

/// Action of `exp(x + i y)`: `v_j -> v_j e^{<alpha_j, y>} e^{-i <alpha_j, x>}`,
/// returned as a representative rescaled so the largest modulus factor is 1.
pub fn orbit_point(
    w: &TorusWeightSystem,
    v: &ProjectiveVector,
    x: &[f64],
    y: &[f64],
) -> Result<ProjectiveVector, MomentumError> {
    w.check_len(v)?;
    w.check_vec(x)?;
    w.check_vec(y)?;
    let shift = v
        .support
        .iter()
        .map(|&j| w.pairing(j, y))
        .fold(f64::NEG_INFINITY, f64::max);
    let amps = (0..v.len())
        .map(|j| {
            if v.amps[j].norm_sqr() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let modulus = (w.pairing(j, y) - shift).exp();
            let phase = w.pairing(j, x);
            v.amps[j] * Complex64::new(modulus * phase.cos(), -modulus * phase.sin())
        })
        .collect();
    ProjectiveVector::new(amps)
}

/// Momentum values along the orbit at each `(x, y)` sample.
pub fn orbit_momenta(
    w: &TorusWeightSystem,
    v: &ProjectiveVector,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<Vec<Vec<f64>>, MomentumError> {
    samples
        .par_iter()
        .map(|(x, y)| momentum(w, &orbit_point(w, v, x, y)?))
        .collect()
}

/// `P_v`, the hull of the weights on the support of `v`.
pub fn moment_polytope(w: &TorusWeightSystem, v: &ProjectiveVector) -> Result<Polytope, MomentumError> {
    w.check_len(v)?;
    let pts = v.support.iter().map(|&j| w.weight_rational(j)).collect();
    Ok(Polytope::hull(pts, w.rank)?)
}

/// `mu_v = sum_{j in supp v} |v_j|^2 delta_{alpha_j}`, with `v` rescaled so
/// its largest modulus is 1.
pub fn orbit_measure(w: &TorusWeightSystem, v: &ProjectiveVector) -> Result<AtomicMeasure, MomentumError> {
    w.check_len(v)?;
    let m = v.support.iter().map(|&j| v.amps[j].norm()).fold(0.0, f64::max);
    let atoms = v
        .support
        .iter()
        .map(|&j| Atom {
            alpha: w.weight_rational(j),
            weight: (v.amps[j] / m).norm_sqr(),
        })
        .collect();
    Ok(AtomicMeasure::new(w.rank, atoms)?)
}

/// Finds `y` with `momentum(orbit_point(v, 0, y)) = beta`.
pub fn reach_target(
    w: &TorusWeightSystem,
    v: &ProjectiveVector,
    beta: &[f64],
    cfg: &NewtonConfig,
) -> Result<Vec<f64>, MomentumError> {
    w.check_vec(beta)?;
    let mu = orbit_measure(w, v)?;
    let x = laplace::solve_moment_any(&mu, beta, cfg)?;
    let y: Vec<f64> = x.iter().map(|t| t / 2.0).collect();
    let reached = momentum(w, &orbit_point(w, v, &vec![0.0; w.rank], &y)?)?;
    let residual = reached
        .iter()
        .zip(beta)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    if residual > cfg.residual_tol {
        return Err(MomentumError::Residual(residual));
    }
    Ok(y)
}

/// One orbit type in the closure of `T_C . [v]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stratum {
    pub face: FaceDescriptor,
    /// Weight indices kept in the representative.
    pub kept: Vec<usize>,
    pub representative: ProjectiveVector,
    pub momentum: Vec<f64>,
    /// Whether the momentum passes the relative-interior test of the face.
    pub in_relative_interior: bool,
    pub slack: f64,
}

/// Face-by-face degenerations of `v`: for each face `F` of `P_v` (including
/// `P_v` itself) the amplitudes whose weights leave `F` are zeroed.
pub fn stratify(w: &TorusWeightSystem, v: &ProjectiveVector) -> Result<Vec<Stratum>, MomentumError> {
    w.check_len(v)?;
    if w.len() > MAX_STRATIFY_WEIGHTS {
        return Err(MomentumError::ResourceGuard(format!(
            "stratify accepts at most {MAX_STRATIFY_WEIGHTS} weights, got {}",
            w.len()
        )));
    }
    let p = moment_polytope(w, v)?;
    let mut faces = p.faces()?;
    faces.push(FaceDescriptor {
        dim: p.affine_dim(),
        vertices: (0..p.num_vertices()).collect(),
    });
    faces
        .into_iter()
        .map(|face| {
            let fp = p.face_polytope(&face);
            let kept: Vec<usize> = v
                .support
                .iter()
                .copied()
                .filter(|&j| fp.contains(&w.weight_rational(j)))
                .collect();
            let mut amps = vec![Complex64::new(0.0, 0.0); v.len()];
            for &j in &kept {
                amps[j] = v.amps[j];
            }
            let representative = ProjectiveVector::new(amps)?;
            let m = momentum(w, &representative)?;
            let margin = fp.relative_interior_margin(&m);
            Ok(Stratum {
                face,
                kept,
                representative,
                in_relative_interior: margin.is_interior(0.0),
                slack: margin.slack,
                momentum: m,
            })
        })
        .collect()
}

fn check_square(x: &DMatrix<Complex64>, k: usize) -> Result<(), MomentumError> {
    if x.nrows() != k || x.ncols() != k {
        return Err(MomentumError::MatrixShape {
            expected: k,
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    Ok(())
}

pub fn skew_defect(x: &DMatrix<Complex64>) -> f64 {
    (x + x.adjoint()).norm()
}

/// `i <Xv, v> / <v, v>` for skew-adjoint `X`, with `<a, b> = sum a_k conj(b_k)`.
pub fn unitary_momentum(x: &DMatrix<Complex64>, v: &ProjectiveVector) -> Result<f64, MomentumError> {
    check_square(x, v.len())?;
    let defect = skew_defect(x);
    if defect > SKEW_TOL {
        return Err(MomentumError::NotSkewAdjoint(defect));
    }
    Ok(unitary_momentum_unchecked(x, v))
}

fn unitary_momentum_unchecked(x: &DMatrix<Complex64>, v: &ProjectiveVector) -> f64 {
    let vv = v.as_dvector();
    let xv = x * &vv;
    let inner: Complex64 = xv.iter().zip(vv.iter()).map(|(a, b)| a * b.conj()).sum();
    (Complex64::i() * inner).re / v.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketResidual {
    /// Central difference of `t -> phi_Y(exp(-tX) v)` at 0.
    pub derivative: f64,
    /// `phi_{[X,Y]}(v)`.
    pub bracket: f64,
    pub residual: f64,
}

pub fn commutator(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    x * y - y * x
}

/// Compares the derivative of `phi_Y` along the flow of `X` with `phi_{[X,Y]}`.
pub fn bracket_check(
    x: &DMatrix<Complex64>,
    y: &DMatrix<Complex64>,
    v: &ProjectiveVector,
    h: f64,
) -> Result<BracketResidual, MomentumError> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(MomentumError::StepOutOfRange(h));
    }
    let k = v.len();
    check_square(x, k)?;
    check_square(y, k)?;
    for m in [x, y] {
        let defect = skew_defect(m);
        if defect > SKEW_TOL {
            return Err(MomentumError::NotSkewAdjoint(defect));
        }
    }
    let flow = |t: f64| -> Result<ProjectiveVector, MomentumError> {
        let g = (x * Complex64::new(-t, 0.0)).exp();
        ProjectiveVector::new((g * v.as_dvector()).iter().copied().collect())
    };
    let plus = unitary_momentum_unchecked(y, &flow(h)?);
    let minus = unitary_momentum_unchecked(y, &flow(-h)?);
    let derivative = (plus - minus) / (2.0 * h);
    let bracket = unitary_momentum_unchecked(&commutator(x, y), v);
    Ok(BracketResidual {
        derivative,
        bracket,
        residual: (derivative - bracket).abs(),
    })
}

/// Applies a matrix to a projective vector.
pub fn apply(g: &DMatrix<Complex64>, v: &ProjectiveVector) -> Result<ProjectiveVector, MomentumError> {
    check_square(g, v.len())?;
    ProjectiveVector::new((g * v.as_dvector()).iter().copied().collect())
}

/// Fubini–Study density `(2/|z|^2)(|u|^2 - |<z/|z|, u>|^2)`.
pub fn fs_quadratic(z: &[Complex64], u: &[Complex64]) -> Result<f64, MomentumError> {
    if z.len() != u.len() {
        return Err(MomentumError::DimensionMismatch {
            expected: z.len(),
            found: u.len(),
        });
    }
    let zz: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    if zz == 0.0 {
        return Err(MomentumError::ZeroVector);
    }
    let uu: f64 = u.iter().map(|c| c.norm_sqr()).sum();
    let zu: Complex64 = z.iter().zip(u).map(|(a, b)| a * b.conj()).sum();
    let val = 2.0 / zz * (uu - zu.norm_sqr() / zz);
    Ok(val.max(0.0))
}

/// The torus direction `xi` as the diagonal skew-adjoint matrix
/// `-i diag(<alpha_j, xi>)`.
pub fn torus_generator(w: &TorusWeightSystem, xi: &[f64]) -> Result<DMatrix<Complex64>, MomentumError> {
    w.check_vec(xi)?;
    let d: Vec<Complex64> = (0..w.len())
        .map(|j| Complex64::new(0.0, -w.pairing(j, xi)))
        .collect();
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
}

impl Serialize for BracketInputs {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixPairJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BracketInputs {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = MatrixPairJson::deserialize(d)?;
        j.try_into().map_err(serde::de::Error::custom)
    }
}

/// A pair of complex matrices and a vector, as read by the bridge check.
#[derive(Debug, Clone)]
pub struct BracketInputs {
    pub x: DMatrix<Complex64>,
    pub y: DMatrix<Complex64>,
    pub v: ProjectiveVector,
}

type ComplexRows = Vec<Vec<[String; 2]>>;

#[derive(Serialize, Deserialize)]
struct MatrixPairJson {
    x: ComplexRows,
    y: ComplexRows,
    v: ProjectiveVector,
}

fn matrix_to_json(m: &DMatrix<Complex64>) -> ComplexRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [format!("{}", m[(i, j)].re), format!("{}", m[(i, j)].im)])
                .collect()
        })
        .collect()
}

pub fn matrix_from_json_rows(rows: &[Vec<[String; 2]>]) -> Result<DMatrix<Complex64>, String> {
    let n = rows.len();
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(format!("row {i} has {} entries, expected {n}", r.len()));
        }
        for (j, [re, im]) in r.iter().enumerate() {
            let p = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad decimal {s:?}: {e}"));
            m[(i, j)] = Complex64::new(p(re)?, p(im)?);
        }
    }
    Ok(m)
}

impl From<&BracketInputs> for MatrixPairJson {
    fn from(b: &BracketInputs) -> Self {
        MatrixPairJson {
            x: matrix_to_json(&b.x),
            y: matrix_to_json(&b.y),
            v: b.v.clone(),
        }
    }
}

impl TryFrom<MatrixPairJson> for BracketInputs {
    type Error = String;
    fn try_from(j: MatrixPairJson) -> Result<Self, Self::Error> {
        Ok(BracketInputs {
            x: matrix_from_json_rows(&j.x)?,
            y: matrix_from_json_rows(&j.y)?,
            v: j.v,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn line(ws: &[i64]) -> TorusWeightSystem {
        TorusWeightSystem::new(1, ws.iter().map(|&a| vec![a]).collect()).unwrap()
    }

    fn square() -> TorusWeightSystem {
        TorusWeightSystem::new(2, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn momentum_examples() {
        let w = line(&[0, 1, 2]);
        let m = momentum(&w, &ProjectiveVector::from_real(&[1.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15);
        let m = momentum(&w, &ProjectiveVector::from_real(&[1.0, 2.0, 1.0]).unwrap()).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15);
        let m = momentum(&line(&[0, 1]), &ProjectiveVector::from_real(&[1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(m, vec![0.0]);
        assert!(matches!(
            momentum(&line(&[0, 1]), &ProjectiveVector::from_real(&[1.0]).unwrap()),
            Err(MomentumError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn orbit_examples() {
        let w = line(&[0, 1]);
        let v = ProjectiveVector::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(orbit_point(&w, &v, &[0.0], &[0.0]).unwrap(), v);
        let t = 0.7;
        let o = orbit_point(&w, &v, &[0.0], &[t]).unwrap();
        assert!(o.projectively_eq(&ProjectiveVector::from_real(&[1.0, t.exp()]).unwrap(), 1e-12));
        let phased = orbit_point(&w, &v, &[1.3], &[0.0]).unwrap();
        let a = momentum(&w, &phased).unwrap();
        let b = momentum(&w, &v).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-15);
    }

    #[test]
    fn polytope_examples() {
        let w = line(&[0, 1, 2]);
        let p = moment_polytope(&w, &ProjectiveVector::from_real(&[1.0, 0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(p, Polytope::from_ints(&[vec![0], vec![2]]).unwrap());
        let p = moment_polytope(&w, &ProjectiveVector::basis(3, 0)).unwrap();
        assert_eq!(p.num_vertices(), 1);
    }

    #[test]
    fn reach_target_examples() {
        let w = line(&[0, 1]);
        let v = ProjectiveVector::from_real(&[1.0, 1.0]).unwrap();
        let cfg = NewtonConfig::default();
        let y = reach_target(&w, &v, &[0.5], &cfg).unwrap();
        assert!(y[0].abs() < 1e-9);
        let y = reach_target(&w, &v, &[0.9], &cfg).unwrap();
        assert!((y[0] - 9f64.ln() / 2.0).abs() < 1e-9, "{y:?}");
        assert!(matches!(
            reach_target(&w, &v, &[1.0], &cfg),
            Err(MomentumError::Laplace(LaplaceError::TargetOnBoundaryOrOutside))
        ));
    }

    #[test]
    fn stratify_square() {
        let w = square();
        let v = ProjectiveVector::from_real(&[1.0; 4]).unwrap();
        let strata = stratify(&w, &v).unwrap();
        assert_eq!(strata.len(), 9);
        assert!(strata.iter().all(|s| s.in_relative_interior));
        let edge = strata.iter().find(|s| s.kept == vec![0, 1]).unwrap();
        assert!((edge.momentum[0] - 0.5).abs() < 1e-15 && edge.momentum[1] == 0.0);
    }

    #[test]
    fn stratify_line() {
        let w = line(&[0, 1, 2]);
        let v = ProjectiveVector::from_real(&[1.0, 1.0, 1.0]).unwrap();
        let strata = stratify(&w, &v).unwrap();
        assert_eq!(strata.len(), 3);
        let vertex = strata.iter().find(|s| s.kept == vec![0]).unwrap();
        assert_eq!(vertex.momentum, vec![0.0]);
        assert!(vertex.representative.projectively_eq(&ProjectiveVector::basis(3, 0), 0.0));
        let whole = strata.iter().find(|s| s.face.dim == 1).unwrap();
        assert_eq!(whole.representative, v);
    }

    #[test]
    fn unitary_examples() {
        let d = [0.5, -1.5, 2.0];
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, d.iter().map(|&t| c(0.0, t))));
        for (j, dj) in d.iter().enumerate() {
            let m = unitary_momentum(&x, &ProjectiveVector::basis(3, j)).unwrap();
            assert!((m + dj).abs() < 1e-15);
        }
        let zero = DMatrix::from_element(3, 3, c(0.0, 0.0));
        assert_eq!(unitary_momentum(&zero, &ProjectiveVector::basis(3, 1)).unwrap(), 0.0);
        let herm = DMatrix::from_element(3, 3, c(1.0, 0.0));
        assert!(matches!(
            unitary_momentum(&herm, &ProjectiveVector::basis(3, 1)),
            Err(MomentumError::NotSkewAdjoint(_))
        ));
    }

    #[test]
    fn bracket_two_by_two() {
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let y = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        let v = ProjectiveVector::basis(2, 0);
        let r = bracket_check(&x, &y, &v, 1e-4).unwrap();
        assert!((r.bracket - 2.0).abs() < 1e-12, "{r:?}");
        assert!((r.derivative - 2.0).abs() < 1e-6, "{r:?}");
        assert!(matches!(bracket_check(&x, &y, &v, 1e-2), Err(MomentumError::StepOutOfRange(_))));
    }

    #[test]
    fn fs_examples() {
        let e1 = [c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = [c(0.0, 0.0), c(1.0, 0.0)];
        assert!((fs_quadratic(&e1, &e2).unwrap() - 2.0).abs() < 1e-15);
        let z = [c(1.0, 2.0), c(-0.5, 0.3)];
        let u: Vec<Complex64> = z.iter().map(|a| a * c(0.3, -1.1)).collect();
        assert!(fs_quadratic(&z, &u).unwrap() < 1e-12);
        let u = [c(0.2, 0.1), c(1.0, -1.0)];
        let z2: Vec<Complex64> = z.iter().map(|a| a * 2.0).collect();
        let a = fs_quadratic(&z, &u).unwrap();
        let b = fs_quadratic(&z2, &u).unwrap();
        assert!((a / 4.0 - b).abs() < 1e-14);
        assert!(fs_quadratic(&[c(0.0, 0.0); 2], &u).is_err());
    }

    #[test]
    fn json_round_trip() {
        let w = square();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"rank":2,"weights":[[0,0],[1,0],[0,1],[1,1]]}"#);
        assert_eq!(serde_json::from_str::<TorusWeightSystem>(&s).unwrap(), w);
        let v = ProjectiveVector::new(vec![c(1.0, -0.5), c(0.0, 0.0)]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"amps":[["1","-0.5"],["0","0"]]}"#);
        assert_eq!(serde_json::from_str::<ProjectiveVector>(&s).unwrap(), v);
        assert!(serde_json::from_str::<ProjectiveVector>(r#"{"amps":[["0","0"]]}"#).is_err());
    }
}
