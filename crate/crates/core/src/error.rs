use alloc::string::String;

use crate::record::NetworkKey;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node index {index} out of range for a graph with {len} nodes")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("({0}, {1}) is not an edge of the graph")]
    NotAnEdge(usize, usize),

    #[error("node {0} has no neighbors")]
    IsolatedNode(usize),

    #[error("records mix network keys {first} and {other}")]
    MixedKeys { first: NetworkKey, other: NetworkKey },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cost matrix is {rows}x{cols} but the measures need {expected_rows}x{expected_cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("cost entry ({row}, {col}) is not a finite non-negative number")]
    InvalidCost { row: usize, col: usize },

    #[error("measure is not normalized (total mass {0})")]
    NotNormalized(f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("solver did not converge within {0} iterations")]
    NotConverged(usize),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{0}` is not numeric")]
    NotNumeric(String),

    #[error("column `{0}` appears more than once")]
    DuplicateColumn(String),

    #[error("table `{table}` is missing key column `{column}`")]
    MissingKeyColumn { table: String, column: String },

    #[error("duplicate key {key} in table `{table}`")]
    DuplicateKey { table: String, key: String },

    #[error("row has {found} cells, table has {expected} columns")]
    RowWidth { expected: usize, found: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
