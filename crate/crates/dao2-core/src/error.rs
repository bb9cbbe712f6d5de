use crate::sharing::PartyIndex;

/// Errors surfaced by the protocol stack.
///
/// Detection-style variants (`InconsistentContribution`, `InconsistentShares`,
/// `MisbehavingParty`, `MisbehavingSigner`, `DivergentDerivation`) identify the
/// failing check and, where the check allows it, the offending party.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, serde::Serialize)]
pub enum Error {
    #[error("invalid threshold: t={t}, n={n}")]
    InvalidThreshold { t: u32, n: u32 },

    #[error("party index must be >= 1")]
    ZeroPartyIndex,

    #[error("duplicate party index {0}")]
    DuplicateIndex(PartyIndex),

    #[error("party {0} not in the evaluation subset")]
    IndexNotInSubset(PartyIndex),

    #[error("unknown party index {0}")]
    UnknownParty(PartyIndex),

    #[error("empty share list")]
    EmptyShares,

    #[error("inversion of the zero scalar")]
    ZeroInverse,

    #[error("identity point where a non-identity point is required")]
    IdentityPoint,

    #[error("no dealers left after exclusion")]
    NoQualifiedDealers,

    #[error("derivation tag already consumed")]
    TagConsumed,

    #[error("sub-threshold signer set: have {have}, need {need}")]
    SubThreshold { have: u32, need: u32 },

    #[error("signing session already produced its partial signature")]
    NonceConsumed,

    #[error("inconsistent DH contribution from party {0}")]
    InconsistentContribution(PartyIndex),

    #[error("one-time shares fail the aggregate consistency check")]
    InconsistentShares,

    #[error("misbehaving party {0}")]
    MisbehavingParty(PartyIndex),

    #[error("misbehaving signer {0}")]
    MisbehavingSigner(PartyIndex),

    #[error("degenerate session: shared secret is the identity")]
    DegenerateSession,

    #[error("divergent derivation state at party {0}")]
    DivergentDerivation(PartyIndex),

    #[error("decode error: {0}")]
    Decode(&'static str),

    #[error("incomplete session transcript: {0}")]
    IncompleteTranscript(&'static str),

    #[error("ledger: {0}")]
    Ledger(&'static str),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Short stable name used by the CLI for exit reporting.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidThreshold { .. } => "InvalidThreshold",
            Error::ZeroPartyIndex => "ZeroPartyIndex",
            Error::DuplicateIndex(_) => "DuplicateIndex",
            Error::IndexNotInSubset(_) => "IndexNotInSubset",
            Error::UnknownParty(_) => "UnknownParty",
            Error::EmptyShares => "EmptyShares",
            Error::ZeroInverse => "ZeroInverse",
            Error::IdentityPoint => "IdentityPoint",
            Error::NoQualifiedDealers => "NoQualifiedDealers",
            Error::TagConsumed => "TagConsumed",
            Error::SubThreshold { .. } => "SubThreshold",
            Error::NonceConsumed => "NonceConsumed",
            Error::InconsistentContribution(_) => "InconsistentContribution",
            Error::InconsistentShares => "InconsistentShares",
            Error::MisbehavingParty(_) => "MisbehavingParty",
            Error::MisbehavingSigner(_) => "MisbehavingSigner",
            Error::DegenerateSession => "DegenerateSession",
            Error::DivergentDerivation(_) => "DivergentDerivation",
            Error::Decode(_) => "DecodeError",
            Error::IncompleteTranscript(_) => "IncompleteTranscript",
            Error::Ledger(_) => "LedgerError",
            Error::Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
