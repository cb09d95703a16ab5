use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}, column {column:?}: cannot parse {value:?}")]
    ParseError { row: usize, column: String, value: String },
    #[error("row {row}: every analyte is zero")]
    ZeroHandlingError { row: usize },
    #[error("geozone {zone:?} appears with groups {first} and {second}")]
    InconsistentGroup { zone: String, first: String, second: String },
    #[error("class {class} has {count} sample(s); stratified splitting needs at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error(transparent)]
    Core(#[from] logratio_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
