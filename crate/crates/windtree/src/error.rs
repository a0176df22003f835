use thiserror::Error;
use windtree_core::adic::AdicError;
use windtree_core::billiard::BilliardError;
use windtree_core::hausdorff::HausdorffError;
use windtree_core::invariant::InvariantError;
use windtree_core::rauzy::RauzyError;
use windtree_core::section::SectionError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("section: {0}")]
    Section(#[from] SectionError),
    #[error("rauzy: {0}")]
    Rauzy(#[from] RauzyError),
    #[error("spectrum: {0}")]
    Adic(#[from] AdicError),
    #[error("invariant: {0}")]
    Invariant(InvariantError),
    #[error("hausdorff: {0}")]
    Hausdorff(#[from] HausdorffError),
    #[error("billiard: {0}")]
    Billiard(#[from] BilliardError),
    #[error("certificate failed: {0}")]
    Certificate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Section(_) | CliError::Rauzy(_) => 4,
            CliError::Adic(_) => 5,
            CliError::Invariant(_) => 6,
            CliError::Hausdorff(_) => 7,
            CliError::Billiard(_) => 8,
            CliError::Certificate(_) => 9,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Section(_) | CliError::Rauzy(_) => "section",
            CliError::Adic(_) => "spectrum",
            CliError::Invariant(_) => "invariant",
            CliError::Hausdorff(_) => "hausdorff",
            CliError::Billiard(_) => "billiard",
            CliError::Certificate(_) => "certificate",
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::Adic(a) => CliError::Adic(a),
            InvariantError::Section(s) => CliError::Section(s),
            other => CliError::Invariant(other),
        }
    }
}
