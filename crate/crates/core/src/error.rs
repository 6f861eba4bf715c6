use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inverse of zero in GF({modulus})")]
    ZeroInverse { modulus: u32 },

    #[error("{0} is not prime")]
    NotPrime(u32),

    #[error(
        "modulus {modulus} yields only {available} evaluation points with distinct {mu}-th powers, {needed} required"
    )]
    InsufficientPoints {
        modulus: u32,
        mu: u32,
        available: usize,
        needed: usize,
    },

    #[error("invalid evaluation points: {0}")]
    InvalidPoints(String),

    #[error("matrix is singular: row {row} is linearly dependent on the rows above it")]
    Singular { row: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("k = {k} must be at least 2")]
    KTooSmall { k: usize },

    #[error("t = {t} must be at least 2 (single failures are served by the MSR reference code)")]
    TTooSmall { t: usize },

    #[error("t = {t} exceeds n - k = {bound}")]
    TTooLarge { t: usize, bound: usize },

    #[error("d = {d} is below max(2k-1-t, k) = {bound}")]
    DTooSmall { d: usize, bound: usize },

    #[error("d = {d} exceeds the {survivors} nodes that survive {t} failures")]
    DTooLarge { d: usize, t: usize, survivors: usize },

    #[error("invalid MSR parameters: {0}")]
    MsrParams(String),

    #[error("node index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("duplicate node index {0}")]
    DuplicateIndex(usize),

    #[error("need {needed} shards, got {got}")]
    NotEnoughShards { needed: usize, got: usize },

    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("symbol {value} is not a residue mod {modulus}")]
    SymbolOutOfRange { value: u32, modulus: u32 },

    #[error("invalid repair request: {0}")]
    Repair(String),

    #[error("node {0} has not completed phase 1")]
    MissingPhase1(usize),

    #[error("shard {index} is inconsistent with the systematic shards")]
    Inconsistent { index: usize },

    #[error("cannot fail {requested} more node(s): {failed} already failed, t = {t}")]
    TooManyFailures { requested: usize, failed: usize, t: usize },

    #[error("node {0} is not alive")]
    NodeNotAlive(usize),

    #[error("modulus {modulus} outside {min}..={max} required for byte-per-symbol files")]
    ModulusRange { modulus: u32, min: u32, max: u32 },

    #[error("decoded symbol {0} is not a byte")]
    NotAByte(u32),

    #[error("shard header: {0}")]
    Header(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("checksum mismatch: manifest {expected:016x}, decoded {actual:016x}")]
    Checksum { expected: u64, actual: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}
