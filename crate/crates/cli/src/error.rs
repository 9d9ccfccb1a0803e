use convex_toric::convexfn::ConvexError;
use convex_toric::forms::FormsError;
use convex_toric::geometry::GeometryError;
use convex_toric::laplace::LaplaceError;
use convex_toric::mixedvol::MixedVolError;
use convex_toric::momentum::MomentumError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("input rejected: {0}")]
    Input(String),
    #[error("resource guard: {0}")]
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Guard(_) => 3,
            _ => 2,
        }
    }

    pub fn parse(path: &str, e: &serde_json::Error) -> Self {
        // schema validation builds hulls, so guards can fire while parsing;
        // serde only keeps the message
        if e.is_data() && e.to_string().starts_with("resource guard") {
            return CliError::Guard(format!("{path}: {e}"));
        }
        CliError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::ResourceGuard(m) => CliError::Guard(m),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<MixedVolError> for CliError {
    fn from(e: MixedVolError) -> Self {
        match e {
            MixedVolError::ResourceGuard(m) => CliError::Guard(m),
            MixedVolError::Geometry(g) => g.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<LaplaceError> for CliError {
    fn from(e: LaplaceError) -> Self {
        match e {
            LaplaceError::Geometry(g) => g.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<MomentumError> for CliError {
    fn from(e: MomentumError) -> Self {
        match e {
            MomentumError::ResourceGuard(m) => CliError::Guard(m),
            MomentumError::Geometry(g) => g.into(),
            MomentumError::Laplace(l) => l.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<ConvexError> for CliError {
    fn from(e: ConvexError) -> Self {
        match e {
            ConvexError::Geometry(g) => g.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<FormsError> for CliError {
    fn from(e: FormsError) -> Self {
        match e {
            FormsError::DimensionGuard(_) => CliError::Guard(e.to_string()),
            FormsError::MixedVol(m) => m.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}
