use std::io;
use std::path::PathBuf;

use stimulex_core::agreement::AgreementError;
use stimulex_core::analysis::AnalysisError;
use stimulex_core::corpus::CorpusError;
use stimulex_core::crf::CrfError;
use stimulex_core::eval::EvalError;
use thiserror::Error;

use crate::config::ConfigError;
use crate::format::FormatError;
use crate::ingest::InputError;
use crate::model_file::ModelFileError;
use crate::translate::TranslateError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("input file {0} does not exist")]
    MissingInput(PathBuf),
    #[error("output {0} would overwrite an input file")]
    OutputIsInput(PathBuf),
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, io::Error),
    #[error("{0}: {1}")]
    Format(PathBuf, FormatError),
    #[error("{0}: {1}")]
    Input(PathBuf, InputError),
    #[error("{0}: {1}")]
    Model(PathBuf, ModelFileError),
    #[error("invalid pattern: {0}")]
    Pattern(#[from] regex::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error("{0}; POS tags are required for this report")]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("cannot write {0}: {1}")]
    Write(PathBuf, io::Error),
}

impl Error {
    /// 1 for invalid input or configuration, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Read(..) | Error::Write(..) | Error::Translate(_) => 2,
            Error::Crf(CrfError::NonFiniteLoss { .. }) => 2,
            _ => 1,
        }
    }
}
