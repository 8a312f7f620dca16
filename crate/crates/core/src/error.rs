use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("{what} has {n} qubits, the cap is {max}")]
    TooManyQubits {
        what: &'static str,
        n: usize,
        max: usize,
    },

    #[error("qubit index {index} out of range for {n} qubits")]
    InvalidIndex { index: usize, n: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid measurement basis: {0}")]
    InvalidBasis(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("requested measurement branch has zero probability")]
    ZeroProbabilityBranch,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {0} is not in the resource region")]
    NotInResource(usize),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate denominator in optimal q: b + sqrt(2 eps) = {0} >= 1 + eps")]
    DegenerateDenominator(f64),

    #[error("gap configuration is not positive: a - b - sqrt(2 eps) = {0}")]
    NegativeGap(f64),

    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("Pauli ensemble is empty (all coefficients vanish)")]
    EmptyEnsemble,

    #[error("energy promise requires e_b > e_a (got e_a = {e_a}, e_b = {e_b})")]
    InvalidPromise { e_a: f64, e_b: f64 },

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Reads and parses a JSON file, attaching the path to any failure.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let wrap = |source: Error| Error::File {
        path: path.display().to_string(),
        source: Box::new(source),
    };
    let text = std::fs::read_to_string(path).map_err(|e| wrap(Error::Io(e)))?;
    serde_json::from_str(&text).map_err(|e| wrap(Error::Parse(e.to_string())))
}
