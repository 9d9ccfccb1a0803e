use crate::error::CliError;
use crate::inputs::*;
use crate::report::{decimal, digest, Check, VerificationReport};
use clap::ValueEnum;
use convex_toric::convexfn::{self, ConvexError, ConvexFunction, GradientImage};
use convex_toric::forms::{self, FormsError, TorusFormField};
use convex_toric::laplace::{self, LaplaceError};
use convex_toric::mixedvol::{self, CheckStatus, BMI_TOL};
use convex_toric::momentum::{self, MomentumError};
use convex_toric::newton::NewtonConfig;
use convex_toric::rational;
use convex_toric::samplers;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;

/// Keystone identity tolerance; float noise only.
const IDENTITY_TOL: f64 = 1e-12;
const INVERSE_TOL: f64 = 1e-6;
const FENCHEL_TOL: f64 = 1e-8;
const INTEGRATE_REL_TOL: f64 = 0.01;
const BRIDGE_REL_TOL: f64 = 0.02;
const EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    MixedVolumes,
    Bmi,
    AfCheck,
    Logconcavity,
    MomentumImage,
    Stratify,
    ReachTarget,
    Conjugate,
    MomentSolve,
    IntegrateForm,
    BridgeCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MixedVolumes => "mixed-volumes",
            Command::Bmi => "bmi",
            Command::AfCheck => "af-check",
            Command::Logconcavity => "logconcavity",
            Command::MomentumImage => "momentum-image",
            Command::Stratify => "stratify",
            Command::ReachTarget => "reach-target",
            Command::Conjugate => "conjugate",
            Command::MomentSolve => "moment-solve",
            Command::IntegrateForm => "integrate-form",
            Command::BridgeCheck => "bridge-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub seed: u64,
    /// Overrides the command's primary tolerance.
    pub tol: Option<f64>,
}

/// A finished run: the report plus an optional CSV table.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: VerificationReport,
    pub table_csv: Option<String>,
}

struct Body {
    checks: Vec<Check>,
    result: Value,
    table_csv: Option<String>,
}

impl Body {
    fn new(checks: Vec<Check>, result: Value) -> Self {
        Body {
            checks,
            result,
            table_csv: None,
        }
    }
}

pub fn parse<T: DeserializeOwned>(path: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::parse(path, &e))
}

pub fn run(cmd: Command, path: &str, text: &str, opts: &Options) -> Result<Outcome, CliError> {
    fn go<T: DeserializeOwned + Serialize>(
        cmd: Command,
        path: &str,
        text: &str,
        opts: &Options,
        f: fn(&T, &Options) -> Result<Body, CliError>,
    ) -> Result<Outcome, CliError> {
        let input: T = parse(path, text)?;
        let body = f(&input, opts)?;
        Ok(Outcome {
            report: VerificationReport::new(cmd.name(), digest(&input), opts.seed, body.checks, body.result),
            table_csv: body.table_csv,
        })
    }
    match cmd {
        Command::MixedVolumes => go(cmd, path, text, opts, mixed_volumes),
        Command::Bmi => go(cmd, path, text, opts, bmi),
        Command::AfCheck => go(cmd, path, text, opts, af_check),
        Command::Logconcavity => go(cmd, path, text, opts, logconcavity),
        Command::MomentumImage => go(cmd, path, text, opts, momentum_image),
        Command::Stratify => go(cmd, path, text, opts, stratify),
        Command::ReachTarget => go(cmd, path, text, opts, reach_target),
        Command::Conjugate => go(cmd, path, text, opts, conjugate),
        Command::MomentSolve => go(cmd, path, text, opts, moment_solve),
        Command::IntegrateForm => go(cmd, path, text, opts, integrate_form),
        Command::BridgeCheck => go(cmd, path, text, opts, bridge_check),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialise")
}

fn mixed_volumes(input: &BodiesInput, _: &Options) -> Result<Body, CliError> {
    let table = mixedvol::mixed_volumes(&input.bodies)?;
    let min = table
        .entries()
        .iter()
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("tables are never empty");
    let status = if min.1 >= rational::rat(0) {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let mut checks = vec![Check::exact("nonnegative", status, &min.1, json!({ "index": min.0.to_string() }))];
    for (j, body) in input.bodies.iter().enumerate() {
        let diff = table.diagonal(j) - body.volume();
        let status = if diff == rational::rat(0) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        checks.push(Check::exact(
            format!("diagonal-volume {}", j + 1),
            status,
            &-rational::abs(&diff),
            json!({ "volume": rational::format_rational(&body.volume()) }),
        ));
    }
    Ok(Body {
        checks,
        result: to_value(&table),
        table_csv: Some(table.to_csv()),
    })
}

fn bmi(input: &PairInput, opts: &Options) -> Result<Body, CliError> {
    let tol = opts.tol.unwrap_or(BMI_TOL);
    let r = mixedvol::bmi_check(&input.y1, &input.y2)?;
    let identity_gap = &r.vol_sum - &r.binomial_sum;
    let status = if r.binomial_identity {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let mut checks = vec![
        Check::exact(
            "binomial-identity",
            status,
            &-rational::abs(&identity_gap),
            json!({
                "vol_sum": rational::format_rational(&r.vol_sum),
                "binomial_sum": rational::format_rational(&r.binomial_sum),
            }),
        ),
        Check::from_margin(
            "brunn-minkowski",
            r.margin + tol,
            json!({ "lhs_root": r.lhs_root, "rhs_root": r.rhs_root, "root_margin": decimal(r.margin), "tol": tol }),
        ),
    ];
    match &r.homothety {
        Some(ratio) => {
            let status = if r.equality_certified && r.margin.abs() <= EQUALITY_TOL {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            checks.push(Check::new(
                "equality",
                status,
                r.margin.abs(),
                json!({ "homothety_ratio": rational::format_rational(ratio), "exact": r.equality_certified }),
            ));
        }
        None => checks.push(Check::vacuous("equality", json!({ "reason": "bodies are not homothetic" }))),
    }
    Ok(Body::new(checks, to_value(&r)))
}

fn af_check(table: &TableInput, _: &Options) -> Result<Body, CliError> {
    let mut checks = Vec::new();
    for c in mixedvol::af_midpoint_checks(table) {
        checks.push(Check::exact(
            format!("af-midpoint {} {} {}", c.minus, c.mid, c.plus),
            c.status,
            &c.margin,
            json!({}),
        ));
    }
    for c in mixedvol::lower_bound_check(table) {
        checks.push(Check::exact(format!("lower-bound {}", c.index), c.status, &c.margin, json!({})));
    }
    Ok(Body::new(checks, json!({ "n": table.n(), "k": table.k() })))
}

fn logconcavity(input: &LogConcavityInput, _: &Options) -> Result<Body, CliError> {
    let r = mixedvol::minkowski_logconcavity(&input.y0, &input.y1, input.steps)?;
    let checks = r
        .checks
        .iter()
        .map(|c| {
            let t = &r.profile[c.index].t;
            Check::exact(
                format!("log-concavity t={}", rational::format_rational(t)),
                c.status,
                &c.margin,
                json!({ "index": c.index }),
            )
        })
        .collect();
    let mut csv = String::from("t,volume,log_volume\n");
    for p in &r.profile {
        csv.push_str(&format!(
            "{},{},{}\n",
            rational::format_rational(&p.t),
            rational::format_rational(&p.volume),
            p.log_volume.map(decimal).unwrap_or_default()
        ));
    }
    Ok(Body {
        checks,
        result: to_value(&r.profile),
        table_csv: Some(csv),
    })
}

fn momentum_image(input: &OrbitInput, opts: &Options) -> Result<Body, CliError> {
    let (w, v) = (&input.weights, &input.vector);
    let tol = opts.tol.unwrap_or(1e-9);
    let p = momentum::moment_polytope(w, v)?;
    let mu = momentum::orbit_measure(w, v)?;
    let mut rng = samplers::seeded(opts.seed);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..input.samples)
        .map(|_| {
            (
                samplers::random_real_vector(&mut rng, w.rank(), PI),
                samplers::random_real_vector(&mut rng, w.rank(), input.y_radius),
            )
        })
        .collect();
    let ms = momentum::orbit_momenta(w, v, &samples)?;
    let mut min_slack = f64::INFINITY;
    let mut max_residual: f64 = 0.0;
    let mut inside = 0;
    for m in &ms {
        let margin = p.relative_interior_margin(m);
        if margin.is_interior(tol) {
            inside += 1;
        }
        min_slack = min_slack.min(margin.slack);
        max_residual = max_residual.max(margin.affine_residual);
    }
    let membership = if p.num_vertices() == 1 {
        // a single weight: the image is that point
        Check::vacuous(
            "algint-membership",
            json!({ "reason": "moment polytope is a point", "affine_residual": max_residual }),
        )
    } else {
        let status = if inside == ms.len() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Check::new(
            "algint-membership",
            status,
            min_slack - tol,
            json!({ "samples": ms.len(), "inside": inside, "min_slack": min_slack, "tol": tol }),
        )
    };
    let mut worst: f64 = 0.0;
    for (_, y) in &samples {
        let z = momentum::orbit_point(w, v, &vec![0.0; w.rank()], y)?;
        let lhs = momentum::momentum(w, &z)?;
        let y2: Vec<f64> = y.iter().map(|t| 2.0 * t).collect();
        let rhs = laplace::grad_log_laplace(&mu, &y2)?;
        worst = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    let identity = Check::from_margin(
        "log-laplace-identity",
        IDENTITY_TOL - worst,
        json!({ "max_difference": worst, "tol": IDENTITY_TOL }),
    );
    let mut csv = String::new();
    for m in &ms {
        csv.push_str(&m.iter().map(|x| decimal(*x)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    Ok(Body {
        checks: vec![membership, identity],
        result: json!({ "polytope": p, "momenta": ms }),
        table_csv: Some(csv),
    })
}

fn stratify(input: &SystemInput, _: &Options) -> Result<Body, CliError> {
    let strata = momentum::stratify(&input.weights, &input.vector)?;
    let mut checks: Vec<Check> = strata
        .iter()
        .map(|s| {
            let name = format!("stratum dim={} vertices={:?}", s.face.dim, s.face.vertices);
            if s.face.dim == 0 {
                Check::vacuous(name, json!({ "reason": "vertex stratum is a fixed point", "kept": s.kept }))
            } else {
                let status = if s.in_relative_interior {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                Check::new(name, status, s.slack, json!({ "kept": s.kept }))
            }
        })
        .collect();
    let mut min_gap = f64::INFINITY;
    for (i, a) in strata.iter().enumerate() {
        for b in &strata[i + 1..] {
            let d = a.momentum.iter().zip(&b.momentum).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            min_gap = min_gap.min(d);
        }
    }
    if strata.len() > 1 {
        checks.push(Check::from_margin(
            "distinct-momenta",
            min_gap - IDENTITY_TOL,
            json!({ "strata": strata.len(), "min_distance": min_gap }),
        ));
    }
    Ok(Body::new(checks, to_value(&strata)))
}

fn reach_target(input: &ReachInput, opts: &Options) -> Result<Body, CliError> {
    let (w, v) = (&input.weights, &input.vector);
    let cfg = NewtonConfig {
        residual_tol: opts.tol.unwrap_or(NewtonConfig::default().residual_tol),
        ..NewtonConfig::default()
    };
    let p = momentum::moment_polytope(w, v)?;
    if input.target.len() != w.rank() {
        return Err(CliError::Input(format!(
            "target has length {}, weights have rank {}",
            input.target.len(),
            w.rank()
        )));
    }
    let margin = p.relative_interior_margin(&input.target);
    let slack = if p.num_vertices() == 1 { 0.0 } else { margin.slack };
    match momentum::reach_target(w, v, &input.target, &cfg) {
        Ok(y) => {
            let z = momentum::orbit_point(w, v, &vec![0.0; w.rank()], &y)?;
            let m = momentum::momentum(w, &z)?;
            let residual = m.iter().zip(&input.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let checks = vec![
                Check::new("target-in-algint", CheckStatus::Pass, slack, json!({})),
                Check::from_margin(
                    "residual",
                    cfg.residual_tol - residual,
                    json!({ "residual": residual, "tol": cfg.residual_tol }),
                ),
            ];
            Ok(Body::new(checks, json!({ "y": y, "momentum": m })))
        }
        Err(MomentumError::Laplace(LaplaceError::TargetOnBoundaryOrOutside)) => Ok(Body::new(
            vec![Check::new(
                "target-in-algint",
                CheckStatus::Fail,
                slack.min(0.0),
                json!({ "reason": "target is on the boundary of or outside the moment polytope" }),
            )],
            Value::Null,
        )),
        Err(MomentumError::Residual(r)) => Ok(Body::new(
            vec![Check::from_margin("residual", cfg.residual_tol - r, json!({ "residual": r }))],
            Value::Null,
        )),
        Err(e) => Err(e.into()),
    }
}

fn conjugate(input: &ConjugateInput, opts: &Options) -> Result<Body, CliError> {
    let f = &input.potential;
    let n = f.dim();
    let cfg = NewtonConfig::default();
    let mut checks = Vec::new();
    let mut values = Vec::new();
    for (i, alpha) in input.alphas.iter().enumerate() {
        if alpha.len() != n {
            return Err(CliError::Input(format!("alpha {i} has length {}, expected {n}", alpha.len())));
        }
        let name = format!("conjugate alpha[{i}]");
        match convexfn::conjugate(f, alpha, &vec![0.0; n], &cfg) {
            Ok(c) => {
                checks.push(Check::from_margin(
                    name,
                    INVERSE_TOL - c.gap_certificate,
                    json!({ "gradient_residual": c.gap_certificate }),
                ));
                values.push(json!({ "alpha": alpha, "value": c.value, "argmax": c.argmax }));
            }
            Err(ConvexError::Divergence) => {
                checks.push(Check::vacuous(
                    name,
                    json!({ "reason": "alpha outside the interior of the conjugate domain; supremum not attained" }),
                ));
                values.push(json!({ "alpha": alpha, "value": null }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if input.probes > 0 {
        let tol = opts.tol.unwrap_or(FENCHEL_TOL);
        let mut rng = samplers::seeded(opts.seed);
        let mut worst_gap: f64 = 0.0;
        let mut worst_inverse: f64 = 0.0;
        for _ in 0..input.probes {
            let x = samplers::random_real_vector(&mut rng, n, input.probe_radius);
            let alpha = f.grad(&x);
            let gap = convexfn::fenchel_gap(f, &x, &alpha, &cfg)?;
            let c = convexfn::conjugate(f, &alpha, &vec![0.0; n], &cfg)?;
            worst_gap = worst_gap.max(gap.abs());
            worst_inverse = c.argmax.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(worst_inverse, f64::max);
        }
        checks.push(Check::from_margin(
            "fenchel-young",
            tol - worst_gap,
            json!({ "probes": input.probes, "max_gap": worst_gap, "tol": tol }),
        ));
        checks.push(Check::from_margin(
            "gradient-inverse",
            INVERSE_TOL - worst_inverse,
            json!({ "probes": input.probes, "max_error": worst_inverse, "tol": INVERSE_TOL }),
        ));
    }
    Ok(Body::new(checks, Value::Array(values)))
}

fn moment_solve(input: &MomentSolveInput, opts: &Options) -> Result<Body, CliError> {
    let mu = &input.measure;
    if input.target.len() != mu.dim() {
        return Err(CliError::Input(format!(
            "target has length {}, measure has dimension {}",
            input.target.len(),
            mu.dim()
        )));
    }
    let tol = opts.tol.unwrap_or(NewtonConfig::default().residual_tol);
    let slack = {
        let m = mu.support().relative_interior_margin(&input.target);
        if mu.support().num_vertices() == 1 {
            0.0
        } else {
            m.slack
        }
    };
    match laplace::solve_moment_any(mu, &input.target, &NewtonConfig::default()) {
        Ok(x) => {
            let g = laplace::grad_log_laplace(mu, &x)?;
            let residual = g.iter().zip(&input.target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let checks = vec![
                Check::new("target-in-algint", CheckStatus::Pass, slack, json!({})),
                Check::from_margin("residual", tol - residual, json!({ "residual": residual, "tol": tol })),
            ];
            Ok(Body::new(checks, json!({ "x": x, "gradient": g })))
        }
        Err(LaplaceError::TargetOnBoundaryOrOutside) => Ok(Body::new(
            vec![Check::new(
                "target-in-algint",
                CheckStatus::Fail,
                slack.min(0.0),
                json!({ "reason": "target is on the boundary of or outside the support polytope" }),
            )],
            Value::Null,
        )),
        Err(e) => Err(e.into()),
    }
}

fn integrate_form(input: &IntegrateInput, opts: &Options) -> Result<Body, CliError> {
    let tol = opts.tol.unwrap_or(INTEGRATE_REL_TOL);
    let field = TorusFormField::new(input.potential.clone());
    let reference = match (&input.expected, input.potential.gradient_image()) {
        (Some(e), _) => rational::to_f64(e),
        (None, Some(GradientImage::Bounded(p))) => rational::to_f64(&p.volume()),
        _ => return Err(FormsError::UnboundedGradientImage.into()),
    };
    match forms::integrate_det_hess(&field, &input.quadrature.config()) {
        Ok(r) => {
            let rel = (r.value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
            let checks = vec![Check::from_margin(
                "volume-match",
                tol - rel,
                json!({ "value": r.value, "reference": reference, "rel_error": rel, "tol": tol }),
            )];
            Ok(Body::new(checks, to_value(&r)))
        }
        Err(FormsError::NonConvergent { radius, increment }) => Ok(Body::new(
            vec![Check::new(
                "quadrature-convergence",
                CheckStatus::Fail,
                convex_toric::forms::ADAPTIVE_REL_TOL - increment,
                json!({ "radius": radius, "increment": increment }),
            )],
            Value::Null,
        )),
        Err(e) => Err(e.into()),
    }
}

fn bridge_check(input: &BridgeInput, opts: &Options) -> Result<Body, CliError> {
    let tol = opts.tol.unwrap_or(BRIDGE_REL_TOL);
    let r = forms::mixed_volume_bridge(&input.potentials, &input.quadrature.config())?;
    let checks = r
        .points
        .iter()
        .map(|p| {
            let t: Vec<String> = p.t.iter().map(|x| x.to_string()).collect();
            Check::from_margin(
                format!("bridge t=({})", t.join(",")),
                tol - p.rel_error,
                json!({
                    "quadrature": p.quadrature,
                    "polynomial": rational::format_rational(&p.polynomial),
                    "rel_error": p.rel_error,
                }),
            )
        })
        .collect();
    Ok(Body {
        checks,
        table_csv: Some(r.table.to_csv()),
        result: to_value(&r),
    })
}
