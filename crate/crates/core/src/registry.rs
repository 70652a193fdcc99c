//! Worker-side function registry.
//!
//! Users register their functions before the runtime starts; registration
//! order defines the function identifiers used in plan files, starting at 1.
//! Every worker carries the same registry, so any worker can run any job.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::chunk::{DataChunk, FunctionData};
use crate::error::{InjectError, RegistryError};
use crate::model::{JobId, ResultRef};
use crate::scheduling::InjectionRequest;

/// Failure reported by a user function. Fails the job, not the worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserFnError {
    pub message: String,
}

impl UserFnError {
    pub fn new(message: impl Into<String>) -> Self {
        UserFnError {
            message: message.into(),
        }
    }
}

impl std::fmt::Display for UserFnError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for UserFnError {}

impl From<String> for UserFnError {
    fn from(message: String) -> Self {
        UserFnError { message }
    }
}

impl From<&str> for UserFnError {
    fn from(message: &str) -> Self {
        UserFnError::new(message)
    }
}

/// Placeholder-to-assigned-id mapping returned by a dynamic injection.
pub type InjectionAck = Vec<(u64, JobId)>;

/// Capability handed to a running job for adding new jobs to the plan.
pub trait InjectPort: Sync {
    fn inject(&self, request: InjectionRequest) -> Result<InjectionAck, InjectError>;
}

/// Per-invocation context: the output accumulator plus what a job is allowed
/// to know about itself. A conforming function reads only its input and
/// appends only to this context.
pub struct FunctionCtx<'a> {
    job: JobId,
    input_refs: &'a [ResultRef],
    inject_port: Option<&'a dyn InjectPort>,
    output: Vec<DataChunk>,
}

impl<'a> FunctionCtx<'a> {
    pub fn new(
        job: JobId,
        input_refs: &'a [ResultRef],
        inject_port: Option<&'a dyn InjectPort>,
    ) -> Self {
        FunctionCtx {
            job,
            input_refs,
            inject_port,
            output: Vec::new(),
        }
    }

    /// Id of the running job.
    pub fn job_id(&self) -> JobId {
        self.job
    }

    /// The result references this job's input binding named, in order.
    /// Empty for pool-fed and chunkless jobs.
    pub fn input_refs(&self) -> &[ResultRef] {
        self.input_refs
    }

    /// Appends one output chunk.
    pub fn push(&mut self, chunk: DataChunk) {
        self.output.push(chunk);
    }

    /// Adds new jobs to the current or a later parallel segment. Blocks
    /// until the master acknowledges and returns the assigned ids.
    pub fn inject(&self, request: InjectionRequest) -> Result<InjectionAck, InjectError> {
        match self.inject_port {
            Some(port) => port.inject(request),
            None => Err(InjectError::Rejected(
                "dynamic injection is not available in this context".into(),
            )),
        }
    }

    pub fn into_output(self) -> FunctionData {
        FunctionData::new(self.output)
    }
}

/// A registered user function. Invoked once per sequence, on that sequence's
/// slice of the job's chunks; must tolerate concurrent invocations on
/// disjoint inputs.
pub type UserFunction =
    Arc<dyn Fn(&FunctionData, &mut FunctionCtx) -> Result<(), UserFnError> + Send + Sync>;

/// Function table shared by all workers. Write-only before the runtime
/// starts, read-only afterwards.
#[derive(Default)]
pub struct Registry {
    functions: Vec<(String, UserFunction)>,
    frozen: AtomicBool,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    /// Registers a function and returns its id (1-based, registration order).
    pub fn register<F>(&mut self, name: impl Into<String>, f: F) -> Result<u32, RegistryError>
    where
        F: Fn(&FunctionData, &mut FunctionCtx) -> Result<(), UserFnError> + Send + Sync + 'static,
    {
        if self.frozen.load(Ordering::Acquire) {
            return Err(RegistryError::RegistryFrozen);
        }
        self.functions.push((name.into(), Arc::new(f)));
        Ok(self.functions.len() as u32)
    }

    /// Marks the registry read-only. Called when the runtime starts.
    pub fn freeze(&self) {
        self.frozen.store(true, Ordering::Release);
    }

    pub fn contains(&self, function_id: u32) -> bool {
        function_id >= 1 && (function_id as usize) <= self.functions.len()
    }

    pub fn name(&self, function_id: u32) -> Option<&str> {
        self.functions
            .get(function_id.checked_sub(1)? as usize)
            .map(|(name, _)| name.as_str())
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    fn get(&self, function_id: u32) -> Result<&UserFunction, RegistryError> {
        self.functions
            .get(function_id.checked_sub(1).ok_or(RegistryError::UnknownFunction(0))? as usize)
            .map(|(_, f)| f)
            .ok_or(RegistryError::UnknownFunction(function_id))
    }

    /// Runs one invocation, catching panics and errors from the function.
    /// Returns the chunks the function appended, in append order.
    pub fn invoke_with_ctx(
        &self,
        function_id: u32,
        input: &FunctionData,
        mut ctx: FunctionCtx,
    ) -> Result<FunctionData, RegistryError> {
        let f = self.get(function_id)?;
        let outcome = catch_unwind(AssertUnwindSafe(|| f(input, &mut ctx)));
        match outcome {
            Ok(Ok(())) => Ok(ctx.into_output()),
            Ok(Err(e)) => Err(RegistryError::UserFunctionPanic {
                function_id,
                message: e.message,
            }),
            Err(panic) => {
                let message = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".into());
                Err(RegistryError::UserFunctionPanic {
                    function_id,
                    message,
                })
            }
        }
    }

    /// Single invocation with a bare context (no refs, no injection).
    pub fn invoke(
        &self,
        function_id: u32,
        input: &FunctionData,
    ) -> Result<FunctionData, RegistryError> {
        self.invoke_with_ctx(function_id, input, FunctionCtx::new(JobId(0), &[], None))
    }
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("functions", &self.functions.iter().map(|(n, _)| n).collect::<Vec<_>>())
            .field("frozen", &self.frozen.load(Ordering::Relaxed))
            .finish()
    }
}
