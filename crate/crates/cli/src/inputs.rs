//! Input schemas, one per command. Rationals and decimals are strings;
//! every schema serialises back to a canonical form that re-parses equal.

use convex_toric::convexfn::ConvexPotential;
use convex_toric::forms::{QuadratureConfig, RadiusMode, ADAPTIVE_REL_TOL, DEFAULT_ORDER};
use convex_toric::geometry::Polytope;
use convex_toric::laplace::AtomicMeasure;
use convex_toric::mixedvol::MixedVolumeTable;
use convex_toric::momentum::{ProjectiveVector, TorusWeightSystem};
use convex_toric::rational::{self, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodiesInput {
    pub bodies: Vec<Polytope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInput {
    pub y1: Polytope,
    pub y2: Polytope,
}

pub type TableInput = MixedVolumeTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogConcavityInput {
    pub y0: Polytope,
    pub y1: Polytope,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitInput {
    pub weights: TorusWeightSystem,
    pub vector: ProjectiveVector,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Half-width of the box the imaginary parts `y` are drawn from.
    #[serde(default = "default_y_radius", with = "rational::serde_decimal")]
    pub y_radius: f64,
}

fn default_samples() -> usize {
    500
}

fn default_y_radius() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemInput {
    pub weights: TorusWeightSystem,
    pub vector: ProjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachInput {
    pub weights: TorusWeightSystem,
    pub vector: ProjectiveVector,
    #[serde(with = "rational::serde_decimal_vec")]
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateInput {
    pub potential: ConvexPotential,
    /// Slopes at which `f*` is evaluated and reported.
    #[serde(default, with = "decimal_mat")]
    pub alphas: Vec<Vec<f64>>,
    /// Random Fenchel-Young probes drawn with the seed.
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_probe_radius", with = "rational::serde_decimal")]
    pub probe_radius: f64,
}

fn default_probes() -> usize {
    100
}

fn default_probe_radius() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSolveInput {
    pub measure: AtomicMeasure,
    #[serde(with = "rational::serde_decimal_vec")]
    pub target: Vec<f64>,
}

/// Quadrature settings; a fixed `radius` switches off the adaptive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default, with = "opt_decimal")]
    pub radius: Option<f64>,
    #[serde(default = "default_start", with = "rational::serde_decimal")]
    pub start: f64,
    #[serde(default = "default_max", with = "rational::serde_decimal")]
    pub max: f64,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_start() -> f64 {
    convex_toric::forms::DEFAULT_START_RADIUS
}

fn default_max() -> f64 {
    convex_toric::forms::DEFAULT_MAX_RADIUS
}

fn default_order() -> usize {
    DEFAULT_ORDER
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radius: None,
            start: default_start(),
            max: default_max(),
            order: default_order(),
        }
    }
}

impl QuadratureSpec {
    pub fn config(&self) -> QuadratureConfig {
        QuadratureConfig {
            radius: match self.radius {
                Some(r) => RadiusMode::Fixed(r),
                None => RadiusMode::Adaptive {
                    start: self.start,
                    max: self.max,
                },
            },
            order: self.order,
            rel_tol: ADAPTIVE_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateInput {
    pub potential: ConvexPotential,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    /// Reference value; defaults to the volume of the gradient image.
    #[serde(default, with = "opt_rational")]
    pub expected: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeInput {
    pub potentials: Vec<ConvexPotential>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

mod decimal_mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|x| format!("{x}")).collect()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        #[derive(Deserialize)]
        struct Row(#[serde(with = "rational::serde_decimal_vec")] Vec<f64>);
        Ok(Vec::<Row>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

mod opt_decimal {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.map(|v| format!("{v}")).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "rational::serde_decimal")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

mod opt_rational {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        x.as_ref().map(rational::format_rational).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "rational::serde_rational")] Rational);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
