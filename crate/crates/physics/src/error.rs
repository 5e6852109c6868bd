use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("exact enumeration supports N <= {max}, got N = {n}")]
    NTooLarge { n: usize, max: usize },
    #[error("degenerate scaling input: {0}")]
    DegenerateInput(String),
    #[error("invalid integration parameters: {0}")]
    InvalidStep(String),
    #[error("bodies {0} and {1} are coincident")]
    CoincidentBodies(usize, usize),
    #[error("numerical blowup at t = {time} s")]
    NumericalBlowup { time: f64 },
    #[error("malformed body table: {0}")]
    BodyTable(String),
}
