use thiserror::Error;

/// Errors raised by the metric, mesh and transform operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid metric space: {0}")]
    InvalidSpace(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point {0} does not exist")]
    UnknownPoint(usize),

    #[error("point {0} is not an interior point of the domain")]
    NotInterior(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("points {0:?} are not pairwise distinct")]
    RepeatedPoints(Vec<usize>),

    #[error("correspondence is not a bijection: {0}")]
    NotBijective(String),

    /// The clearance-filtered neighbor graph over the interior falls apart.
    #[error("mesh too coarse: interior graph has {} components ({})", .components.len(), summarize_components(.components))]
    MeshTooCoarse { components: Vec<Vec<usize>> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn summarize_components(components: &[Vec<usize>]) -> String {
    let mut parts: Vec<String> = components
        .iter()
        .take(8)
        .map(|c| match c.first() {
            Some(first) => format!("{} points containing {}", c.len(), first),
            None => "empty".to_string(),
        })
        .collect();
    if components.len() > 8 {
        parts.push(format!("{} more", components.len() - 8));
    }
    parts.join("; ")
}

impl Error {
    /// Errors caused by bad input rather than by the computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::InvalidParameter(_)
        )
    }
}
