use std::io;

/// Errors produced by the search engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown locus `{0}`")]
    UnknownLocus(String),

    #[error("locus {locus}: allele `{allele}` is not in the frequency table")]
    UnknownAllele { locus: String, allele: String },

    #[error("locus {locus}: invalid frequency {value} for allele `{allele}`")]
    InvalidFrequency {
        locus: String,
        allele: String,
        value: f64,
    },

    #[error("locus {locus}: frequencies sum to {sum}")]
    FrequencySum { locus: String, sum: f64 },

    #[error("locus {locus}: duplicate allele `{allele}`")]
    DuplicateAllele { locus: String, allele: String },

    #[error("duplicate profile id `{0}`")]
    DuplicateId(String),

    #[error("profile `{0}` types no loci")]
    EmptyPanel(String),

    #[error("panel `{panel}` is used with two different locus sets")]
    InconsistentPanel { panel: String },

    #[error("profiles `{target}` and `{candidate}` share no typed locus")]
    DisjointPanels { target: String, candidate: String },

    #[error("member `{id}`: {source}")]
    Member {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("exhaustive enumeration needs {combinations} genotype combinations (cap {cap})")]
    EnumerationCap { combinations: f64, cap: u64 },

    #[error("degenerate evidence: {0}")]
    Degenerate(String),

    #[error("id sets of likelihood ratios and priors differ at `{0}`")]
    IdMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("the database is empty")]
    EmptyDatabase,

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn for_member(self, id: &str) -> Self {
        Error::Member {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
