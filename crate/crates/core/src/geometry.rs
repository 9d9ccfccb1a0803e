//! Exact rational polytopes in V-representation.
//!
//! Every [`Polytope`] is built through [`Polytope::hull`], which keeps only
//! the extreme points, sorted lexicographically, so structural equality of
//! vertex lists is equality of sets. Alongside the vertices the hull keeps an
//! affine frame (the polytope's affine hull, parametrised by a subset of the
//! ambient coordinates) and the facet inequalities relative to that hull.
//! Lower-dimensional polytopes are ordinary values; their volume is zero.

use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;
use thiserror::Error;

/// Largest ambient dimension accepted by the hull.
pub const MAX_DIM: usize = 4;
/// Largest vertex count accepted by [`Polytope::faces`].
pub const MAX_FACE_VERTICES: usize = 30;
/// Tolerance for float points to count as lying on an affine hull.
pub const AFFINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("empty point set")]
    Empty,
    #[error("ambient dimension must be positive")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("negative scale factor {0}")]
    NegativeScale(String),
    #[error("resource guard exceeded: {0}")]
    ResourceGuard(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Facet inequality `<normal, x> <= offset`, valid on the affine hull.
///
/// The normal is a primitive integer vector supported on the frame's pivot
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    normal: Vec<Rational>,
    offset: Rational,
    vertices: Vec<usize>,
}

impl Facet {
    pub fn normal(&self) -> &[Rational] {
        &self.normal
    }
    pub fn offset(&self) -> &Rational {
        &self.offset
    }
    /// Indices of the canonical vertices lying on this facet.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }
}

/// Affine hull `base + span(directions)`. The direction rows are in reduced
/// echelon form, so row `i` has a 1 in column `pivots[i]` and 0 in the other
/// pivot columns.
#[derive(Debug, Clone, PartialEq)]
struct AffineFrame {
    base: Vec<Rational>,
    pivots: Vec<usize>,
    directions: Vec<Vec<Rational>>,
}

impl AffineFrame {
    fn new(points: &[Vec<Rational>]) -> Self {
        let base = points[0].clone();
        let mut rows: Vec<Vec<Rational>> =
            points[1..].iter().map(|p| rational::sub(p, &base)).collect();
        let pivots = if rows.is_empty() {
            Vec::new()
        } else {
            rational::rref(&mut rows)
        };
        rows.truncate(pivots.len());
        AffineFrame {
            base,
            pivots,
            directions: rows,
        }
    }

    fn dim(&self) -> usize {
        self.pivots.len()
    }

    fn project(&self, x: &[Rational]) -> Vec<Rational> {
        self.pivots.iter().map(|&p| x[p].clone()).collect()
    }

    fn lift(&self, y: &[Rational]) -> Vec<Rational> {
        let mut x = self.base.clone();
        for ((row, yi), &p) in self.directions.iter().zip(y).zip(&self.pivots) {
            let c = yi - &self.base[p];
            if c.is_zero() {
                continue;
            }
            for (xj, rj) in x.iter_mut().zip(row) {
                *xj += &c * rj;
            }
        }
        x
    }

    fn contains(&self, x: &[Rational]) -> bool {
        self.lift(&self.project(x)) == x
    }

    fn residual_f64(&self, x: &[f64]) -> f64 {
        let mut lifted: Vec<f64> = self.base.iter().map(rational::to_f64).collect();
        for (row, &p) in self.directions.iter().zip(&self.pivots) {
            let c = x[p] - rational::to_f64(&self.base[p]);
            for (lj, rj) in lifted.iter_mut().zip(row) {
                *lj += c * rational::to_f64(rj);
            }
        }
        lifted
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A face given by the canonical vertices it contains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceDescriptor {
    pub dim: usize,
    pub vertices: Vec<usize>,
}

/// Distance information for a float point against `algint(P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorMargin {
    /// Max-norm distance between the point and its lift onto the affine hull.
    pub affine_residual: f64,
    /// Smallest Euclidean slack over the facet inequalities, measured in the
    /// hull's pivot coordinates. `+inf` for a point polytope.
    pub slack: f64,
}

impl InteriorMargin {
    pub fn is_interior(&self, margin: f64) -> bool {
        self.affine_residual <= AFFINE_TOL && self.slack > margin
    }
}

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<Rational>>,
    frame: AffineFrame,
    facets: Vec<Facet>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vertices == other.vertices
    }
}

impl Eq for Polytope {}

impl Polytope {
    /// Convex hull of a finite point set in `R^n`, in canonical form.
    pub fn hull(points: Vec<Vec<Rational>>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if n > MAX_DIM {
            return Err(GeometryError::ResourceGuard(format!(
                "ambient dimension {n} exceeds {MAX_DIM}"
            )));
        }
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        for p in &points {
            if p.len() != n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    found: p.len(),
                });
            }
        }
        let unique: Vec<Vec<Rational>> = points
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let frame = AffineFrame::new(&unique);
        let projected: Vec<Vec<Rational>> = unique.iter().map(|p| frame.project(p)).collect();
        let (extreme, facets) = full_dim_hull(&projected, frame.dim());

        // canonical order: extreme points sorted lexicographically; `unique`
        // is already sorted, so sorting indices suffices.
        let mut extreme = extreme;
        extreme.sort_unstable();
        let mut position = vec![usize::MAX; unique.len()];
        for (new, &old) in extreme.iter().enumerate() {
            position[old] = new;
        }
        let vertices: Vec<Vec<Rational>> = extreme.iter().map(|&i| unique[i].clone()).collect();
        let facets = facets
            .into_iter()
            .map(|(h, inc)| {
                let mut normal = vec![Rational::zero(); n];
                for (a, &p) in h.normal.into_iter().zip(&frame.pivots) {
                    normal[p] = a;
                }
                let mut vs: Vec<usize> = inc.into_iter().map(|i| position[i]).collect();
                vs.sort_unstable();
                Facet {
                    normal,
                    offset: h.offset,
                    vertices: vs,
                }
            })
            .collect();
        let frame = AffineFrame {
            base: vertices[0].clone(),
            ..frame
        };
        Ok(Polytope {
            dim: n,
            vertices,
            frame,
            facets,
        })
    }

    pub fn from_ints(points: &[Vec<i64>]) -> Result<Self> {
        let n = points.first().map_or(0, Vec::len);
        Self::hull(
            points
                .iter()
                .map(|p| p.iter().map(|&x| rational::rat(x)).collect())
                .collect(),
            n,
        )
    }

    pub fn point(p: Vec<Rational>) -> Result<Self> {
        let n = p.len();
        Self::hull(vec![p], n)
    }

    pub fn unit_cube(n: usize) -> Self {
        let pts = (0..1usize << n)
            .map(|mask| (0..n).map(|i| rational::rat(((mask >> i) & 1) as i64)).collect())
            .collect();
        Self::hull(pts, n).expect("cube is well formed")
    }

    /// `conv{0, e_1, ..., e_n}`.
    pub fn standard_simplex(n: usize) -> Self {
        let mut pts = vec![vec![Rational::zero(); n]];
        for i in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[i] = Rational::one();
            pts.push(e);
        }
        Self::hull(pts, n).expect("simplex is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn affine_dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim() == self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(rational::to_f64).collect())
            .collect()
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found,
            })
        } else {
            Ok(())
        }
    }

    pub fn minkowski_sum(&self, other: &Polytope) -> Result<Polytope> {
        self.check_dim(other.dim)?;
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(rational::add(a, b));
            }
        }
        Polytope::hull(pts, self.dim)
    }

    pub fn scale(&self, t: &Rational) -> Result<Polytope> {
        if t.is_negative() {
            return Err(GeometryError::NegativeScale(rational::format_rational(t)));
        }
        if t.is_zero() {
            return Polytope::point(vec![Rational::zero(); self.dim]);
        }
        let pts = self.vertices.iter().map(|v| rational::scale(v, t)).collect();
        Polytope::hull(pts, self.dim)
    }

    pub fn translate(&self, shift: &[Rational]) -> Result<Polytope> {
        self.check_dim(shift.len())?;
        let pts = self.vertices.iter().map(|v| rational::add(v, shift)).collect();
        Polytope::hull(pts, self.dim)
    }

    /// `max_{x in P} <u, x>`.
    pub fn support(&self, u: &[Rational]) -> Result<Rational> {
        self.check_dim(u.len())?;
        Ok(self
            .vertices
            .iter()
            .map(|v| rational::dot(u, v))
            .max()
            .expect("polytopes are nonempty"))
    }

    pub fn support_f64(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.iter().zip(u).map(|(a, b)| rational::to_f64(a) * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Closed membership.
    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dim
            && self.frame.contains(x)
            && self
                .facets
                .iter()
                .all(|f| rational::dot(&f.normal, x) <= f.offset)
    }

    /// Membership in the relative interior `algint(P)`.
    pub fn relative_interior_contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dim
            && self.frame.contains(x)
            && self
                .facets
                .iter()
                .all(|f| rational::dot(&f.normal, x) < f.offset)
    }

    /// Float version of the algint test; see [`InteriorMargin::is_interior`].
    pub fn relative_interior_margin(&self, x: &[f64]) -> InteriorMargin {
        let affine_residual = self.frame.residual_f64(x);
        let slack = self
            .facets
            .iter()
            .map(|f| {
                let a: Vec<f64> = f.normal.iter().map(rational::to_f64).collect();
                let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                let ax: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
                (rational::to_f64(&f.offset) - ax) / norm
            })
            .fold(f64::INFINITY, f64::min);
        InteriorMargin {
            affine_residual,
            slack,
        }
    }

    /// Does `P` contain every vertex of `other`?
    pub fn contains_polytope(&self, other: &Polytope) -> bool {
        other.vertices.iter().all(|v| self.contains(v))
    }

    /// Exact `n`-dimensional volume; zero for lower-dimensional polytopes.
    pub fn volume(&self) -> Rational {
        if !self.is_full_dimensional() {
            return Rational::zero();
        }
        let n = self.dim;
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        let mut total = Rational::zero();
        for simplex in self.triangulate(&all, n) {
            let apex = &self.vertices[simplex[0]];
            let m: Vec<Vec<Rational>> = simplex[1..]
                .iter()
                .map(|&i| rational::sub(&self.vertices[i], apex))
                .collect();
            total += rational::det(&m).abs();
        }
        let fact: u64 = (1..=n as u64).product();
        total / rational::rat(fact as i64)
    }

    /// Pulling triangulation of the face with vertex set `face` (dimension
    /// `k`): cone from its smallest vertex over the facets of the face that
    /// miss it.
    fn triangulate(&self, face: &[usize], k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![face[0]]];
        }
        let apex = face[0];
        let mut out = Vec::new();
        for sub in self.subfacets(face, k) {
            if sub.binary_search(&apex).is_ok() {
                continue;
            }
            for mut s in self.triangulate(&sub, k - 1) {
                s.insert(0, apex);
                out.push(s);
            }
        }
        out
    }

    /// Facets of a `k`-dimensional face, as sorted vertex-index lists.
    fn subfacets(&self, face: &[usize], k: usize) -> BTreeSet<Vec<usize>> {
        let mut subs = BTreeSet::new();
        for f in &self.facets {
            let inter: Vec<usize> = face
                .iter()
                .copied()
                .filter(|i| f.vertices.binary_search(i).is_ok())
                .collect();
            if inter.len() < k || inter.len() == face.len() {
                continue;
            }
            if self.subset_dim(&inter) == k - 1 {
                subs.insert(inter);
            }
        }
        subs
    }

    fn subset_dim(&self, idx: &[usize]) -> usize {
        if idx.len() <= 1 {
            return 0;
        }
        let base = &self.vertices[idx[0]];
        let rows: Vec<Vec<Rational>> = idx[1..]
            .iter()
            .map(|&i| rational::sub(&self.vertices[i], base))
            .collect();
        rational::rank(&rows)
    }

    /// All proper nonempty faces, sorted by dimension then vertex list.
    pub fn faces(&self) -> Result<Vec<FaceDescriptor>> {
        if self.dim > MAX_DIM || self.vertices.len() > MAX_FACE_VERTICES {
            return Err(GeometryError::ResourceGuard(format!(
                "face enumeration limited to {MAX_FACE_VERTICES} vertices in dimension <= {MAX_DIM} (got {} vertices)",
                self.vertices.len()
            )));
        }
        let facet_sets: Vec<Vec<usize>> = self.facets.iter().map(|f| f.vertices.clone()).collect();
        let mut seen: BTreeSet<Vec<usize>> = facet_sets.iter().cloned().collect();
        let mut frontier: Vec<Vec<usize>> = seen.iter().cloned().collect();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for face in &frontier {
                for g in &facet_sets {
                    let inter: Vec<usize> = face
                        .iter()
                        .copied()
                        .filter(|i| g.binary_search(i).is_ok())
                        .collect();
                    if !inter.is_empty() && seen.insert(inter.clone()) {
                        next.push(inter);
                    }
                }
            }
            frontier = next;
        }
        let mut faces: Vec<FaceDescriptor> = seen
            .into_iter()
            .map(|vs| FaceDescriptor {
                dim: self.subset_dim(&vs),
                vertices: vs,
            })
            .collect();
        faces.sort();
        Ok(faces)
    }

    /// The face as a polytope in its own right.
    pub fn face_polytope(&self, face: &FaceDescriptor) -> Polytope {
        let pts = face.vertices.iter().map(|&i| self.vertices[i].clone()).collect();
        Polytope::hull(pts, self.dim).expect("faces of a valid polytope are valid")
    }

    /// Does `x` lie in the affine hull of the given vertex subset?
    pub fn subset_affine_hull_contains(&self, idx: &[usize], x: &[Rational]) -> bool {
        let pts: Vec<Vec<Rational>> = idx.iter().map(|&i| self.vertices[i].clone()).collect();
        AffineFrame::new(&pts).contains(x)
    }
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    dim: usize,
    vertices: Vec<Vec<String>>,
}

impl Serialize for Polytope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolytopeJson {
            dim: self.dim,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(rational::format_rational).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polytope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolytopeJson::deserialize(d)?;
        let pts = raw
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .map(|s| rational::parse_rational(s))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Polytope::hull(pts, raw.dim).map_err(serde::de::Error::custom)
    }
}

struct Hyperplane {
    normal: Vec<Rational>,
    offset: Rational,
}

impl Hyperplane {
    fn side(&self, p: &[Rational]) -> std::cmp::Ordering {
        rational::dot(&self.normal, p).cmp(&self.offset)
    }
}

/// Hyperplane through `points` (affinely spanning a hyperplane), oriented so
/// that `interior` is strictly below it. Normal is primitive.
fn hyperplane_through(points: &[&Vec<Rational>], interior: &[Rational], d: usize) -> Hyperplane {
    let rows: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|p| rational::sub(p, points[0]))
        .collect();
    let mut ns = rational::null_space(&rows, d);
    debug_assert_eq!(ns.len(), 1, "points must span a hyperplane");
    let mut normal = ns.swap_remove(0);
    rational::make_primitive(&mut normal);
    let mut offset = rational::dot(&normal, points[0]);
    if rational::dot(&normal, interior) > offset {
        for a in normal.iter_mut() {
            *a = -a.clone();
        }
        offset = -offset;
    }
    Hyperplane { normal, offset }
}

fn affine_rank(points: &[&Vec<Rational>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let rows: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|p| rational::sub(p, points[0]))
        .collect();
    rational::rank(&rows)
}

type FacetList = Vec<(Hyperplane, Vec<usize>)>;

/// Beneath-beyond hull of distinct points spanning `R^d`. Returns the
/// extreme point indices and the facets with their incident extreme points.
fn full_dim_hull(pts: &[Vec<Rational>], d: usize) -> (Vec<usize>, FacetList) {
    match d {
        0 => return (vec![0], Vec::new()),
        1 => {
            let lo = (0..pts.len()).min_by(|&a, &b| pts[a][0].cmp(&pts[b][0])).unwrap();
            let hi = (0..pts.len()).max_by(|&a, &b| pts[a][0].cmp(&pts[b][0])).unwrap();
            let facets = vec![
                (
                    Hyperplane {
                        normal: vec![-Rational::one()],
                        offset: -pts[lo][0].clone(),
                    },
                    vec![lo],
                ),
                (
                    Hyperplane {
                        normal: vec![Rational::one()],
                        offset: pts[hi][0].clone(),
                    },
                    vec![hi],
                ),
            ];
            return (vec![lo, hi], facets);
        }
        _ => {}
    }

    // initial simplex
    let mut simplex = vec![0usize];
    for i in 1..pts.len() {
        if simplex.len() == d + 1 {
            break;
        }
        let mut cand: Vec<&Vec<Rational>> = simplex.iter().map(|&j| &pts[j]).collect();
        cand.push(&pts[i]);
        if affine_rank(&cand) == simplex.len() {
            simplex.push(i);
        }
    }
    debug_assert_eq!(simplex.len(), d + 1);
    let mut interior = vec![Rational::zero(); d];
    for &i in &simplex {
        interior = rational::add(&interior, &pts[i]);
    }
    let denom = rational::rat((d + 1) as i64);
    interior = interior.into_iter().map(|x| x / &denom).collect();

    let mut hyperplanes: Vec<Hyperplane> = (0..=d)
        .map(|skip| {
            let ps: Vec<&Vec<Rational>> = simplex
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &i)| &pts[i])
                .collect();
            hyperplane_through(&ps, &interior, d)
        })
        .collect();
    let mut verts = simplex.clone();
    let mut incidence = incidences(&hyperplanes, &verts, pts);

    for p in 0..pts.len() {
        if simplex.contains(&p) {
            continue;
        }
        let sides: Vec<std::cmp::Ordering> = hyperplanes.iter().map(|h| h.side(&pts[p])).collect();
        if !sides.iter().any(|s| s.is_gt()) {
            continue;
        }
        let mut fresh: Vec<Hyperplane> = Vec::new();
        for (v, sv) in sides.iter().enumerate() {
            if !sv.is_gt() {
                continue;
            }
            for (w, sw) in sides.iter().enumerate() {
                if !sw.is_lt() {
                    continue;
                }
                let ridge: Vec<usize> = incidence[v]
                    .iter()
                    .copied()
                    .filter(|i| incidence[w].contains(i))
                    .collect();
                if ridge.len() < d - 1 {
                    continue;
                }
                let ridge_pts: Vec<&Vec<Rational>> = ridge.iter().map(|&i| &pts[i]).collect();
                if affine_rank(&ridge_pts) != d - 2 {
                    continue;
                }
                let mut through = ridge_pts;
                through.push(&pts[p]);
                let h = hyperplane_through(&through, &interior, d);
                if !fresh
                    .iter()
                    .any(|g| g.normal == h.normal && g.offset == h.offset)
                {
                    fresh.push(h);
                }
            }
        }
        let mut kept: Vec<Hyperplane> = hyperplanes
            .into_iter()
            .zip(&sides)
            .filter(|(_, s)| !s.is_gt())
            .map(|(h, _)| h)
            .collect();
        kept.extend(fresh);
        hyperplanes = kept;

        verts.push(p);
        let inc = incidences(&hyperplanes, &verts, pts);
        // a point stays a vertex iff the normals of its facets span R^d
        verts.retain(|&q| {
            let normals: Vec<Vec<Rational>> = hyperplanes
                .iter()
                .zip(&inc)
                .filter(|(_, vs)| vs.contains(&q))
                .map(|(h, _)| h.normal.clone())
                .collect();
            rational::rank(&normals) == d
        });
        incidence = inc
            .into_iter()
            .map(|vs| vs.into_iter().filter(|q| verts.contains(q)).collect())
            .collect();
    }
    (verts, hyperplanes.into_iter().zip(incidence).collect())
}

fn incidences(hs: &[Hyperplane], verts: &[usize], pts: &[Vec<Rational>]) -> Vec<Vec<usize>> {
    hs.iter()
        .map(|h| {
            verts
                .iter()
                .copied()
                .filter(|&q| h.side(&pts[q]).is_eq())
                .collect()
        })
        .collect()
}
