//! Mixed volumes of polytopes and the inequalities they satisfy.
//!
//! For bodies `Y_1..Y_k` in `R^n` the volume `vol(t_1 Y_1 + .. + t_k Y_k)` is a
//! homogeneous polynomial `sum_{|J|=n} b_J t^J [Y^J]` with multinomial `b_J`.
//! Evaluating it at the integer points `I` with `|I| = n` gives a square
//! linear system in the unknowns `[Y^J]`, solved here exactly.

use crate::geometry::{GeometryError, Polytope};
use crate::rational::{self, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest interpolation system built by [`interp_matrix`].
pub const MAX_INTERP_ROWS: usize = 200;
/// Slack allowed in the floating-point root form of Brunn–Minkowski.
pub const BMI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixedVolError {
    #[error("need at least one body")]
    NoBodies,
    #[error("degree and number of bodies must be positive")]
    ZeroSize,
    #[error("bodies live in different dimensions ({expected} and {found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    #[error("log-concavity grid needs at least 3 points, got {0}")]
    TooFewSteps(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        assert!(!entries.is_empty(), "multiindex needs at least one entry");
        MultiIndex { entries }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `n e_j` in `k` slots.
    pub fn pure(k: usize, j: usize, n: u32) -> Self {
        let mut e = vec![0; k];
        e[j] = n;
        MultiIndex { entries: e }
    }

    /// `prod_m i_m^{j_m}` with `0^0 = 1`.
    pub fn power(&self, j: &MultiIndex) -> BigInt {
        self.entries
            .iter()
            .zip(&j.entries)
            .map(|(&i, &e)| num_traits::pow(BigInt::from(i), e as usize))
            .product()
    }

    fn shifted(&self, plus: usize, minus: usize) -> Option<MultiIndex> {
        if self.entries[minus] == 0 {
            return None;
        }
        let mut e = self.entries.clone();
        e[minus] -= 1;
        e[plus] += 1;
        Some(MultiIndex { entries: e })
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn binomial_count(n: usize, k: usize) -> usize {
    // C(n + k - 1, k - 1), saturating
    let mut c: u128 = 1;
    for i in 0..(k - 1) {
        c = c * (n + k - 1 - i) as u128 / (i as u128 + 1);
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

/// All multiindices of length `k` and degree `n`, in descending lexicographic order.
pub fn simplex_indices(k: usize, n: u32) -> Vec<MultiIndex> {
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if cur.len() == k - 1 {
            cur.push(left);
            out.push(MultiIndex { entries: cur.clone() });
            cur.pop();
            return;
        }
        for i in (0..=left).rev() {
            cur.push(i);
            rec(k, left - i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, n, &mut Vec::with_capacity(k), &mut out);
    out
}

/// `|J|! / (j_1! .. j_k!)`.
pub fn multinomial(j: &MultiIndex) -> BigInt {
    let fact = |m: u32| -> BigInt { (1..=m).map(BigInt::from).product() };
    let mut out = fact(j.degree());
    for &e in &j.entries {
        out /= fact(e);
    }
    out
}

fn guard(k: usize, n: usize) -> Result<Vec<MultiIndex>, MixedVolError> {
    if k == 0 || n == 0 {
        return Err(MixedVolError::ZeroSize);
    }
    let rows = binomial_count(n, k);
    if rows > MAX_INTERP_ROWS {
        return Err(MixedVolError::ResourceGuard(format!(
            "{rows} interpolation nodes for k = {k}, n = {n} exceed {MAX_INTERP_ROWS}"
        )));
    }
    Ok(simplex_indices(k, n as u32))
}

/// `A[I][J] = b_J I^J` over the degree-`n` multiindices of length `k`.
pub fn interp_matrix(k: usize, n: usize) -> Result<Vec<Vec<Rational>>, MixedVolError> {
    let idx = guard(k, n)?;
    Ok(build_matrix(&idx))
}

fn build_matrix(idx: &[MultiIndex]) -> Vec<Vec<Rational>> {
    let b: Vec<BigInt> = idx.iter().map(multinomial).collect();
    idx.iter()
        .map(|i| {
            idx.iter()
                .zip(&b)
                .map(|(j, bj)| Rational::from_integer(bj * i.power(j)))
                .collect()
        })
        .collect()
}

/// Exact mixed volumes `[Y^J]` for every `|J| = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedVolumeTable {
    n: usize,
    k: usize,
    entries: Vec<(MultiIndex, Rational)>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    n: usize,
    k: usize,
    entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    #[serde(rename = "I")]
    index: Vec<u32>,
    #[serde(with = "rational::serde_rational")]
    value: Rational,
}

impl Serialize for MixedVolumeTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TableJson {
            n: self.n,
            k: self.k,
            entries: self
                .entries
                .iter()
                .map(|(i, v)| EntryJson {
                    index: i.entries.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixedVolumeTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = TableJson::deserialize(d)?;
        let entries: Vec<(MultiIndex, Rational)> = j
            .entries
            .into_iter()
            .map(|e| (MultiIndex { entries: e.index }, e.value))
            .collect();
        MixedVolumeTable::from_entries(j.n, j.k, entries).map_err(serde::de::Error::custom)
    }
}

impl MixedVolumeTable {
    /// Validates completeness and nonnegativity and puts entries in canonical order.
    pub fn from_entries(
        n: usize,
        k: usize,
        entries: Vec<(MultiIndex, Rational)>,
    ) -> Result<Self, String> {
        if n == 0 || k == 0 {
            return Err("n and k must be positive".into());
        }
        let expected = simplex_indices(k, n as u32);
        let mut map: std::collections::BTreeMap<MultiIndex, Rational> = Default::default();
        for (i, v) in entries {
            if i.len() != k || i.degree() as usize != n {
                return Err(format!("index {i} is not in the degree-{n} simplex of length {k}"));
            }
            if v.is_negative() {
                return Err(format!("negative mixed volume at {i}"));
            }
            if map.insert(i.clone(), v).is_some() {
                return Err(format!("duplicate index {i}"));
            }
        }
        if map.len() != expected.len() {
            return Err(format!("table has {} entries, expected {}", map.len(), expected.len()));
        }
        let entries = expected
            .into_iter()
            .map(|i| {
                let v = map.remove(&i).expect("all indices present");
                (i, v)
            })
            .collect();
        Ok(MixedVolumeTable { n, k, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[(MultiIndex, Rational)] {
        &self.entries
    }

    pub fn get(&self, i: &MultiIndex) -> Option<&Rational> {
        self.entries.iter().find(|(j, _)| j == i).map(|(_, v)| v)
    }

    /// `[Y_j^n] = vol(Y_j)`.
    pub fn diagonal(&self, j: usize) -> &Rational {
        self.get(&MultiIndex::pure(self.k, j, self.n as u32))
            .expect("complete table")
    }

    /// `vol(sum t_j Y_j)` from the table.
    pub fn evaluate(&self, t: &[Rational]) -> Rational {
        self.entries
            .iter()
            .map(|(j, v)| {
                let mono = j
                    .entries
                    .iter()
                    .zip(t)
                    .fold(Rational::one(), |acc, (&e, ti)| acc * rational::pow(ti, e));
                Rational::from_integer(multinomial(j)) * mono * v
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// Columns `i1..ik,value`.
    pub fn to_csv(&self) -> String {
        let mut out: Vec<String> = (1..=self.k).map(|j| format!("i{j}")).collect();
        out.push("value".into());
        let mut s = out.join(",");
        s.push('\n');
        for (i, v) in &self.entries {
            let cells: Vec<String> = i.entries.iter().map(u32::to_string).collect();
            s.push_str(&cells.join(","));
            s.push(',');
            s.push_str(&rational::format_rational(v));
            s.push('\n');
        }
        s
    }
}

fn common_dim(bodies: &[Polytope]) -> Result<usize, MixedVolError> {
    let first = bodies.first().ok_or(MixedVolError::NoBodies)?;
    for b in bodies {
        if b.dim() != first.dim() {
            return Err(MixedVolError::DimensionMismatch {
                expected: first.dim(),
                found: b.dim(),
            });
        }
    }
    Ok(first.dim())
}

/// `sum_j t_j Y_j`.
pub fn weighted_sum(bodies: &[Polytope], t: &[Rational]) -> Result<Polytope, MixedVolError> {
    let mut acc = bodies[0].scale(&t[0])?;
    for (b, tj) in bodies.iter().zip(t).skip(1) {
        acc = acc.minkowski_sum(&b.scale(tj)?)?;
    }
    Ok(acc)
}

pub fn mixed_volumes(bodies: &[Polytope]) -> Result<MixedVolumeTable, MixedVolError> {
    let n = common_dim(bodies)?;
    let k = bodies.len();
    let idx = guard(k, n)?;
    let p: Vec<Rational> = idx
        .par_iter()
        .map(|i| {
            let t: Vec<Rational> = i.entries.iter().map(|&e| rational::rat(e as i64)).collect();
            Ok(weighted_sum(bodies, &t)?.volume())
        })
        .collect::<Result<_, MixedVolError>>()?;
    let a = build_matrix(&idx);
    let x = rational::solve(&a, &p).expect("interpolation matrix is invertible");
    Ok(MixedVolumeTable {
        n,
        k,
        entries: idx.into_iter().zip(x).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The right-hand side vanishes, so the inequality holds trivially.
    Vacuous,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Vacuous => "VACUOUS",
        })
    }
}

fn status_of(margin: &Rational, rhs: &Rational) -> CheckStatus {
    if margin.is_negative() {
        CheckStatus::Fail
    } else if rhs.is_zero() {
        CheckStatus::Vacuous
    } else {
        CheckStatus::Pass
    }
}

/// `[Y^{y0}]^2 >= [Y^{y-}] [Y^{y+}]` along the line direction `e_{j1} - e_{j2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointCheck {
    pub minus: MultiIndex,
    pub mid: MultiIndex,
    pub plus: MultiIndex,
    #[serde(with = "rational::serde_rational")]
    pub margin: Rational,
    pub status: CheckStatus,
}

pub fn af_midpoint_checks(table: &MixedVolumeTable) -> Vec<MidpointCheck> {
    let mut out = Vec::new();
    for (mid, v0) in &table.entries {
        for j1 in 0..table.k {
            for j2 in (j1 + 1)..table.k {
                let (Some(plus), Some(minus)) = (mid.shifted(j1, j2), mid.shifted(j2, j1)) else {
                    continue;
                };
                let vp = table.get(&plus).expect("complete table");
                let vm = table.get(&minus).expect("complete table");
                let rhs = vm * vp;
                let margin = v0 * v0 - &rhs;
                out.push(MidpointCheck {
                    status: status_of(&margin, &rhs),
                    minus,
                    mid: mid.clone(),
                    plus,
                    margin,
                });
            }
        }
    }
    out
}

/// `[Y^I]^n >= prod vol(Y_j)^{i_j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundCheck {
    pub index: MultiIndex,
    #[serde(with = "rational::serde_rational")]
    pub margin: Rational,
    pub status: CheckStatus,
}

pub fn lower_bound_check(table: &MixedVolumeTable) -> Vec<LowerBoundCheck> {
    let vols: Vec<Rational> = (0..table.k).map(|j| table.diagonal(j).clone()).collect();
    table
        .entries
        .iter()
        .map(|(i, v)| {
            let rhs = i
                .entries
                .iter()
                .zip(&vols)
                .fold(Rational::one(), |acc, (&e, vol)| acc * rational::pow(vol, e));
            let margin = rational::pow(v, table.n as u32) - &rhs;
            LowerBoundCheck {
                index: i.clone(),
                status: status_of(&margin, &rhs),
                margin,
            }
        })
        .collect()
}

/// `t` with `b = t a + c` for some translation `c`, if one exists with `t >= 0`.
pub fn homothety_ratio(a: &Polytope, b: &Polytope) -> Option<Rational> {
    if b.num_vertices() == 1 {
        return Some(Rational::zero());
    }
    if a.num_vertices() != b.num_vertices() || a.num_vertices() == 1 {
        return None;
    }
    let (va, vb) = (a.vertices(), b.vertices());
    let c = (0..a.dim()).find(|&c| va[1][c] != va[0][c])?;
    let t = (&vb[1][c] - &vb[0][c]) / (&va[1][c] - &va[0][c]);
    if !t.is_positive() {
        return None;
    }
    let shift = rational::sub(&vb[0], &rational::scale(&va[0], &t));
    // positive homotheties preserve the lexicographic vertex order
    let ok = va
        .iter()
        .zip(vb)
        .all(|(p, q)| rational::add(&rational::scale(p, &t), &shift) == *q);
    ok.then_some(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmiReport {
    pub n: usize,
    #[serde(with = "rational::serde_rational")]
    pub vol_sum: Rational,
    #[serde(with = "rational::serde_rational")]
    pub vol1: Rational,
    #[serde(with = "rational::serde_rational")]
    pub vol2: Rational,
    /// `sum_j C(n, j) [Y_1^j Y_2^{n-j}]`.
    #[serde(with = "rational::serde_rational")]
    pub binomial_sum: Rational,
    pub binomial_identity: bool,
    pub lhs_root: f64,
    pub rhs_root: f64,
    /// `lhs_root - rhs_root`.
    pub margin: f64,
    pub inequality: CheckStatus,
    /// Ratio of `Y_2` to `Y_1` when one is a homothet of the other.
    #[serde(serialize_with = "ser_opt_rational")]
    pub homothety: Option<Rational>,
    /// Exact equality `vol(Y_1 + Y_2) = (1 + t)^n vol(Y_1)` for a homothet.
    pub equality_certified: bool,
    pub table: MixedVolumeTable,
}

fn ser_opt_rational<S: serde::Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&rational::format_rational(r)),
        None => s.serialize_none(),
    }
}

fn nth_root(r: &Rational, n: usize) -> f64 {
    rational::to_f64(r).powf(1.0 / n as f64)
}

pub fn bmi_check(y1: &Polytope, y2: &Polytope) -> Result<BmiReport, MixedVolError> {
    let n = common_dim(&[y1.clone(), y2.clone()])?;
    let table = mixed_volumes(&[y1.clone(), y2.clone()])?;
    let vol_sum = y1.minkowski_sum(y2)?.volume();
    let binomial_sum = table.evaluate(&[Rational::one(), Rational::one()]);
    let vol1 = y1.volume();
    let vol2 = y2.volume();
    let lhs_root = nth_root(&vol_sum, n);
    let rhs_root = nth_root(&vol1, n) + nth_root(&vol2, n);
    let margin = lhs_root - rhs_root;
    let homothety = homothety_ratio(y1, y2);
    let equality_certified = homothety.as_ref().is_some_and(|t| {
        vol_sum == rational::pow(&(Rational::one() + t), n as u32) * &vol1
    });
    Ok(BmiReport {
        n,
        binomial_identity: binomial_sum == vol_sum,
        inequality: if margin >= -BMI_TOL {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        vol_sum,
        vol1,
        vol2,
        binomial_sum,
        lhs_root,
        rhs_root,
        margin,
        homothety,
        equality_certified,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePoint {
    #[serde(with = "rational::serde_rational")]
    pub t: Rational,
    #[serde(with = "rational::serde_rational")]
    pub volume: Rational,
    /// `log vol(Y_t)`; absent when the volume is zero.
    pub log_volume: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogConcavityReport {
    pub profile: Vec<ProfilePoint>,
    /// Midpoint checks `vol(Y_{t_{i+1}})^2 - vol(Y_{t_i}) vol(Y_{t_{i+2}})`.
    pub checks: Vec<LogConcavityCheck>,
    pub all_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogConcavityCheck {
    pub index: usize,
    #[serde(with = "rational::serde_rational")]
    pub margin: Rational,
    pub status: CheckStatus,
}

/// Volume profile of `Y_t = (1 - t) Y_0 + t Y_1` on `t = i / (steps - 1)`.
pub fn minkowski_logconcavity(
    y0: &Polytope,
    y1: &Polytope,
    steps: usize,
) -> Result<LogConcavityReport, MixedVolError> {
    common_dim(&[y0.clone(), y1.clone()])?;
    if steps < 3 {
        return Err(MixedVolError::TooFewSteps(steps));
    }
    let denom = (steps - 1) as i64;
    let profile: Vec<ProfilePoint> = (0..steps)
        .into_par_iter()
        .map(|i| {
            let t = rational::ratio(i as i64, denom);
            let body = weighted_sum(&[y0.clone(), y1.clone()], &[Rational::one() - &t, t.clone()])?;
            let volume = body.volume();
            let log_volume = volume.is_positive().then(|| rational::to_f64(&volume).ln());
            Ok(ProfilePoint {
                t,
                volume,
                log_volume,
            })
        })
        .collect::<Result<_, MixedVolError>>()?;
    let checks: Vec<LogConcavityCheck> = (0..steps - 2)
        .map(|i| {
            let rhs = &profile[i].volume * &profile[i + 2].volume;
            let margin = &profile[i + 1].volume * &profile[i + 1].volume - &rhs;
            LogConcavityCheck {
                index: i + 1,
                status: status_of(&margin, &rhs),
                margin,
            }
        })
        .collect();
    let all_hold = checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(LogConcavityReport {
        profile,
        checks,
        all_hold,
    })
}
