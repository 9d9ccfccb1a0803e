use convex_toric::mixedvol::CheckStatus;
use convex_toric::rational::{self, Rational};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// One verified claim. For inequalities `margin` is signed slack, negative
/// on failure; for equality checks it is the observed deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub margin: Option<String>,
    pub details: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, status: CheckStatus, margin: f64, details: Value) -> Self {
        Check {
            name: name.into(),
            status,
            margin: Some(decimal(margin)),
            details,
        }
    }

    /// `status` from `margin >= 0`.
    pub fn from_margin(name: impl Into<String>, margin: f64, details: Value) -> Self {
        let status = if margin >= 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Check::new(name, status, margin, details)
    }

    pub fn exact(name: impl Into<String>, status: CheckStatus, margin: &Rational, mut details: Value) -> Self {
        if let Value::Object(m) = &mut details {
            m.insert("exact_margin".into(), rational::format_rational(margin).into());
        }
        Check::new(name, status, rational::to_f64(margin), details)
    }

    pub fn vacuous(name: impl Into<String>, details: Value) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::Vacuous,
            margin: None,
            details,
        }
    }
}

pub fn decimal(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub command: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub result: Value,
    pub exit_status: i32,
}

impl VerificationReport {
    pub fn new(command: &str, digest: String, seed: u64, checks: Vec<Check>, result: Value) -> Self {
        let exit_status = if checks.iter().any(|c| c.status == CheckStatus::Fail) {
            1
        } else {
            0
        };
        VerificationReport {
            command: command.to_string(),
            inputs_digest: digest,
            seed,
            checks,
            result,
            exit_status,
        }
    }

    pub fn checks_csv(&self) -> String {
        let mut out = String::from("name,status,margin\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{}\n",
                csv_field(&c.name),
                c.status,
                c.margin.as_deref().unwrap_or("")
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// SHA-256 of the canonical JSON serialisation of a parsed input.
pub fn digest<T: Serialize>(input: &T) -> String {
    let bytes = serde_json::to_vec(input).expect("inputs serialise");
    hex::encode(Sha256::digest(bytes))
}
