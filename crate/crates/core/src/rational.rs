//! Exact rational scalars and the small amount of linear algebra the
//! polytope and mixed-volume code needs over them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::str::FromStr;

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"` or `"p"`. Rejects zero denominators.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|e| format!("bad numerator in {s:?}: {e}"))?;
        let d = BigInt::from_str(d.trim()).map_err(|e| format!("bad denominator in {s:?}: {e}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Rational::new(n, d))
    } else {
        let n = BigInt::from_str(t).map_err(|e| format!("bad rational {s:?}: {e}"))?;
        Ok(Rational::from_integer(n))
    }
}

/// Canonical text form: `"p/q"` in lowest terms, `"p"` when the denominator is 1.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator too large for a direct conversion
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact binary value of a finite float.
pub fn from_f64_exact(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Nearest rational with the given denominator.
pub fn round_to_denominator(x: f64, denom: i64) -> Rational {
    let scaled = (x * denom as f64).round();
    Rational::new(BigInt::from(scaled as i64), BigInt::from(denom))
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[Rational], t: &Rational) -> Vec<Rational> {
    a.iter().map(|x| x * t).collect()
}

/// Rescales a nonzero vector to the unique primitive integer vector on the
/// same ray. Returns the factor applied.
pub fn make_primitive(v: &mut [Rational]) -> Rational {
    let mut lcm = BigInt::one();
    for x in v.iter() {
        lcm = lcm.lcm(x.denom());
    }
    let mut g = BigInt::zero();
    for x in v.iter() {
        let n = x.numer() * (&lcm / x.denom());
        g = g.gcd(&n);
    }
    if g.is_zero() {
        return Rational::one();
    }
    let factor = Rational::new(lcm, g);
    for x in v.iter_mut() {
        *x = &*x * &factor;
    }
    factor
}

/// Row-reduces `m` in place to reduced row echelon form and returns the
/// pivot columns.
pub fn rref(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let delta = &f * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : m x = 0}`.
pub fn null_space(rows: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Determinant by fraction-preserving elimination.
pub fn det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut d = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        let inv = a[c][c].recip();
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for j in c..n {
                let delta = &f * &a[c][j];
                a[i][j] -= delta;
            }
        }
    }
    d
}

/// Solves the square system `a x = b` exactly. `None` when `a` is singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut aug: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n].clone()).collect())
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

pub fn pow(r: &Rational, e: u32) -> Rational {
    num_traits::pow(r.clone(), e as usize)
}

pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_rational_mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = m
            .iter()
            .map(|r| r.iter().map(format_rational).collect())
            .collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let strs = Vec::<Vec<String>>::deserialize(d)?;
        strs.iter()
            .map(|r| {
                r.iter()
                    .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// Floats as shortest round-tripping decimal strings.
pub mod serde_decimal {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        let x = f64::from_str(s.trim()).map_err(serde::de::Error::custom)?;
        if !x.is_finite() {
            return Err(serde::de::Error::custom(format!("non-finite decimal {s:?}")));
        }
        Ok(x)
    }
}

pub mod serde_decimal_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| {
                let x = f64::from_str(s.trim()).map_err(serde::de::Error::custom)?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(serde::de::Error::custom(format!("non-finite decimal {s:?}")))
                }
            })
            .collect()
    }
}
