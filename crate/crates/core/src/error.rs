use std::path::PathBuf;

use thiserror::Error;

/// Largest node count for which the `2^N` activity states are enumerated.
pub const MAX_ENUMERATED_NODES: usize = 16;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{nodes} nodes exceed the state enumeration limit of {MAX_ENUMERATED_NODES}")]
    StateSpaceTooLarge { nodes: usize },

    #[error("invalid `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_enumerable(nodes: usize) -> Result<()> {
    if nodes > MAX_ENUMERATED_NODES {
        Err(Error::StateSpaceTooLarge { nodes })
    } else {
        Ok(())
    }
}
