use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("depth {depth} exceeds the maximum HTM depth {max}")]
    DepthLimit { depth: u32, max: u32 },

    #[error("invalid trixel id {0}")]
    Encoding(u64),

    #[error("malformed trixel name {0:?}")]
    NameParse(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown flag {name:?}; known flags: {known}")]
    UnknownFlag { name: String, known: String },

    #[error("range set depth {found} does not match catalog index depth {expected}")]
    DepthMismatch { expected: u32, found: u32 },

    #[error("not a catalog file: {0}")]
    Format(String),

    #[error("catalog format version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("catalog file is truncated")]
    Truncated,

    #[error("catalog digest mismatch: stored {stored:016x}, computed {computed:016x}")]
    DigestMismatch { stored: u64, computed: u64 },

    #[error("unknown load event {0}")]
    UnknownEvent(u64),

    #[error("load event {0} is already undone")]
    AlreadyUndone(u64),

    #[error("cannot undo event {event}: {detail}")]
    UndoConflict { event: u64, detail: String },

    #[error("unknown table {0:?}")]
    UnknownTable(String),

    #[error("unknown predicate {0:?}")]
    UnknownPredicate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("journal: {0}")]
    Journal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
