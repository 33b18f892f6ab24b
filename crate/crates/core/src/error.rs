use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid circuit: {0}")]
    InvalidSpec(String),

    #[error("current-phase relation is discontinuous at phi = {phi} (sawtooth limit)")]
    SingularPoint { phi: f64 },

    #[error("well {well} has vanished at flux {flux} (smallest curvature {min_eigenvalue})")]
    VanishedWell { well: i64, flux: f64, min_eigenvalue: f64 },

    #[error("no saddle between wells {well_a} and {well_b}: wells have merged")]
    MergedWells { well_a: i64, well_b: i64 },

    #[error("initial well {well} does not exist at flux {flux}")]
    InitialWellAbsent { well: i64, flux: f64 },

    #[error("near-degenerate levels: level {level} resonant with level {partner} of well {well} (gap {gap} GHz)")]
    Resonance {
        level: usize,
        well: i64,
        partner: usize,
        gap: f64,
    },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl Into<f64>) -> Self {
        Error::Domain {
            what,
            value: value.into(),
        }
    }

    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularPoint { .. }
                | Error::VanishedWell { .. }
                | Error::MergedWells { .. }
                | Error::Resonance { .. }
                | Error::NotFound(_)
                | Error::NotConverged(_)
        )
    }
}
