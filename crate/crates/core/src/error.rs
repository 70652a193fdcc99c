//! Error types shared across the crate.

use thiserror::Error;

use crate::model::JobId;

/// Errors from chunk construction and the pure data-distribution rules.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("payload is {actual} bytes but {count} x {width}-byte elements need {expected}")]
    SizeMismatch {
        count: usize,
        width: usize,
        expected: usize,
        actual: usize,
    },
    #[error("sequence count must be >= 1, got {0}")]
    InvalidSequenceCount(usize),
    #[error("missing per-sequence output for index {0}")]
    MissingSequence(usize),
    #[error("input pool exhausted: requested {requested}, {available} left")]
    PoolExhausted { requested: usize, available: usize },
    #[error("no results known for producer {0}")]
    UnknownProducer(JobId),
    #[error("range [{start}, {end}) out of bounds for {len} chunks of {producer}")]
    RangeOutOfBounds {
        producer: JobId,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("chunk range start {start} exceeds end {end}")]
    InvalidRange { start: usize, end: usize },
}

/// Plan-level validation failures (also raised by the parser after parsing).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("duplicate job id {0}")]
    DuplicateJobId(JobId),
    #[error("{job} references {producer} which is not in a strictly earlier segment")]
    ForwardReference { job: JobId, producer: JobId },
    #[error("{job} references unknown producer {producer}")]
    UnknownReference { job: JobId, producer: JobId },
    #[error("{job} has range with start {start} > end {end}")]
    BadRange { job: JobId, start: usize, end: usize },
    #[error("{job} has a pool binding of zero chunks; use input 0 for no input")]
    EmptyPool { job: JobId },
}

/// Registry-side failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("registry is frozen once the runtime has started")]
    RegistryFrozen,
    #[error("no function registered under id {0}")]
    UnknownFunction(u32),
    #[error("user function {function_id} failed: {message}")]
    UserFunctionPanic { function_id: u32, message: String },
}

/// Failures surfaced by a whole algorithm run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("run failed at {job}: {cause}")]
    RunFailed { job: JobId, cause: String },
    #[error("plan is invalid: {0}")]
    InvalidPlan(#[from] ValidationError),
    #[error("plan uses function {0} which is not registered")]
    UnknownFunction(u32),
    #[error("{job} dispatched before producer {producer} completed")]
    UnresolvedDependency { job: JobId, producer: JobId },
    #[error("initial pool too small: {0}")]
    Pool(ModelError),
    #[error("transport failure: {0}")]
    Transport(String),
}

/// Errors raised while handling a dynamic injection request.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectError {
    #[error("injection origin {0} is not currently dispatched")]
    BadOrigin(JobId),
    #[error("injection target is not a current or later segment")]
    InvalidTarget,
    #[error("injected ref to {0} is invalid: {1}")]
    InvalidRef(JobId, String),
    #[error("injected spec invalid: {0}")]
    BadSpec(String),
    #[error("injection rejected: {0}")]
    Rejected(String),
}
