//! The algorithm model: plans made of parallel segments of jobs, input
//! bindings, and the deterministic data-distribution rules shared by the
//! scheduler, the workers and the reference interpreter.
//!
//! An algorithm is an ordered list of [`SegmentPlan`]s. All jobs inside one
//! segment may run at the same time; the next segment starts only when every
//! job of the current one (including dynamically injected ones) has finished.
//! A job fans its input chunks over a number of sequences, each executed as
//! one invocation of the registered user function.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::chunk::{DataChunk, FunctionData};
use crate::error::{ModelError, ValidationError};

/// Job identifier, unique within one algorithm run. Assigned by the master.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J{}", self.0)
    }
}

/// Half-open chunk index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChunkRange {
    pub start: u32,
    pub end: u32,
}

impl ChunkRange {
    pub fn new(start: u32, end: u32) -> Result<Self, ModelError> {
        if start > end {
            return Err(ModelError::InvalidRange {
                start: start as usize,
                end: end as usize,
            });
        }
        Ok(ChunkRange { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

impl fmt::Display for ChunkRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.start, self.end)
    }
}

/// A slice of another job's results. No range means all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResultRef {
    pub producer: JobId,
    pub range: Option<ChunkRange>,
}

impl ResultRef {
    pub fn all(producer: JobId) -> Self {
        ResultRef {
            producer,
            range: None,
        }
    }

    pub fn slice(producer: JobId, start: u32, end: u32) -> Result<Self, ModelError> {
        Ok(ResultRef {
            producer,
            range: Some(ChunkRange::new(start, end)?),
        })
    }
}

impl fmt::Display for ResultRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.producer.0)?;
        if let Some(r) = &self.range {
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// How a job names its input chunks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InputBinding {
    /// No input; the function runs once with empty data.
    #[default]
    None,
    /// Draws `count` chunks from the run's initial input pool, in plan order.
    Pool(u32),
    /// Concatenation of the referenced chunk ranges, in listed order.
    Refs(Vec<ResultRef>),
}

impl InputBinding {
    pub fn refs(&self) -> &[ResultRef] {
        match self {
            InputBinding::Refs(refs) => refs,
            _ => &[],
        }
    }
}

/// One schedulable job: a function over bound input chunks.
///
/// `threads == 0` means "as many sequences as the worker has cores";
/// any positive value means exactly that many.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSpec {
    pub id: JobId,
    pub function_id: u32,
    pub threads: u32,
    pub input: InputBinding,
    pub no_send: bool,
}

impl JobSpec {
    pub fn new(id: u64, function_id: u32, threads: u32, input: InputBinding) -> Self {
        JobSpec {
            id: JobId(id),
            function_id,
            threads,
            input,
            no_send: false,
        }
    }

    pub fn no_send(mut self) -> Self {
        self.no_send = true;
        self
    }
}

/// One parallel segment: jobs that may all run at the same time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SegmentPlan {
    pub jobs: Vec<JobSpec>,
}

impl SegmentPlan {
    pub fn new(jobs: Vec<JobSpec>) -> Self {
        SegmentPlan { jobs }
    }
}

/// The complete algorithm description, held only by the master.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlgorithmPlan {
    pub segments: Vec<SegmentPlan>,
}

impl AlgorithmPlan {
    pub fn new(segments: Vec<SegmentPlan>) -> Self {
        AlgorithmPlan { segments }
    }

    pub fn jobs(&self) -> impl Iterator<Item = &JobSpec> {
        self.segments.iter().flat_map(|s| s.jobs.iter())
    }

    pub fn n_jobs(&self) -> usize {
        self.segments.iter().map(|s| s.jobs.len()).sum()
    }

    /// Checks global id uniqueness, the strictly-earlier-segment rule for
    /// every result reference, and range sanity.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut seen: HashMap<JobId, usize> = HashMap::new();
        for (seg_idx, segment) in self.segments.iter().enumerate() {
            for job in &segment.jobs {
                if seen.insert(job.id, seg_idx).is_some() {
                    return Err(ValidationError::DuplicateJobId(job.id));
                }
                if matches!(job.input, InputBinding::Pool(0)) {
                    return Err(ValidationError::EmptyPool { job: job.id });
                }
            }
        }
        for (seg_idx, segment) in self.segments.iter().enumerate() {
            for job in &segment.jobs {
                for r in job.input.refs() {
                    match seen.get(&r.producer) {
                        None => {
                            return Err(ValidationError::UnknownReference {
                                job: job.id,
                                producer: r.producer,
                            })
                        }
                        Some(&producer_seg) if producer_seg >= seg_idx => {
                            return Err(ValidationError::ForwardReference {
                                job: job.id,
                                producer: r.producer,
                            })
                        }
                        _ => {}
                    }
                    if let Some(range) = &r.range {
                        if range.start > range.end {
                            return Err(ValidationError::BadRange {
                                job: job.id,
                                start: range.start as usize,
                                end: range.end as usize,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The chunk slice one sequence of a job processes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceAssignment {
    pub sequence_index: usize,
    /// Contiguous sub-range of the job's input chunk indices.
    pub chunk_slice: std::ops::Range<usize>,
}

/// Splits `n_chunks` into balanced contiguous slices, one per sequence.
///
/// The first `n_chunks % n_sequences` sequences get the larger share. With
/// zero chunks a single empty assignment for sequence 0 is returned, no
/// matter how many sequences were asked for.
pub fn partition_chunks(
    n_chunks: usize,
    n_sequences: usize,
) -> Result<Vec<SequenceAssignment>, ModelError> {
    if n_sequences < 1 {
        return Err(ModelError::InvalidSequenceCount(n_sequences));
    }
    if n_chunks == 0 {
        return Ok(vec![SequenceAssignment {
            sequence_index: 0,
            chunk_slice: 0..0,
        }]);
    }
    let base = n_chunks / n_sequences;
    let extra = n_chunks % n_sequences;
    let mut out = Vec::with_capacity(n_sequences);
    let mut start = 0;
    for idx in 0..n_sequences {
        let len = base + usize::from(idx < extra);
        out.push(SequenceAssignment {
            sequence_index: idx,
            chunk_slice: start..start + len,
        });
        start += len;
    }
    Ok(out)
}

/// Number of sequences a job actually runs on a worker.
///
/// `spec_threads == 0` requests one sequence per core; a positive value is
/// exact. The count is capped by the chunk count, and a chunkless job always
/// runs a single sequence.
pub fn effective_sequences(spec_threads: u32, worker_cores: u32, n_chunks: usize) -> usize {
    debug_assert!(worker_cores >= 1);
    let base = if spec_threads == 0 {
        worker_cores as usize
    } else {
        spec_threads as usize
    };
    if n_chunks == 0 {
        1
    } else {
        base.min(n_chunks)
    }
}

/// Concatenates per-sequence outputs into the job result, ordered by
/// sequence index regardless of completion order.
pub fn assemble_outputs(
    per_sequence: Vec<(usize, FunctionData)>,
) -> Result<FunctionData, ModelError> {
    let n = per_sequence.len();
    let mut slots: Vec<Option<FunctionData>> = vec![None; n];
    for (idx, data) in per_sequence {
        if idx >= n {
            return Err(ModelError::MissingSequence(
                (0..n).find(|i| slots[*i].is_none()).unwrap_or(n),
            ));
        }
        slots[idx] = Some(data);
    }
    let mut out = FunctionData::empty();
    for (idx, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(data) => out.extend(data),
            None => return Err(ModelError::MissingSequence(idx)),
        }
    }
    Ok(out)
}

/// Initial input pool with a consumption cursor.
#[derive(Debug, Clone)]
pub struct PoolCursor {
    chunks: Vec<DataChunk>,
    cursor: usize,
}

impl PoolCursor {
    pub fn new(chunks: Vec<DataChunk>) -> Self {
        PoolCursor { chunks, cursor: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.chunks.len() - self.cursor
    }

    pub fn take(&mut self, count: usize) -> Result<Vec<DataChunk>, ModelError> {
        if count > self.remaining() {
            return Err(ModelError::PoolExhausted {
                requested: count,
                available: self.remaining(),
            });
        }
        let slice = self.chunks[self.cursor..self.cursor + count].to_vec();
        self.cursor += count;
        Ok(slice)
    }
}

/// Materializes a binding into the chunk list the job will process.
///
/// `Pool` draws from the cursor (which advances); `Refs` concatenates the
/// referenced slices in listed order. Pure in its inputs: equal pool state
/// and results yield byte-identical output.
pub fn resolve_binding(
    binding: &InputBinding,
    pool: &mut PoolCursor,
    results: &BTreeMap<JobId, FunctionData>,
) -> Result<FunctionData, ModelError> {
    match binding {
        InputBinding::None => Ok(FunctionData::empty()),
        InputBinding::Pool(count) => Ok(FunctionData::new(pool.take(*count as usize)?)),
        InputBinding::Refs(refs) => {
            let mut out = FunctionData::empty();
            for r in refs {
                let produced = results
                    .get(&r.producer)
                    .ok_or(ModelError::UnknownProducer(r.producer))?;
                let (start, end) = match &r.range {
                    None => (0, produced.n_chunks()),
                    Some(range) => (range.start as usize, range.end as usize),
                };
                if end > produced.n_chunks() || start > end {
                    return Err(ModelError::RangeOutOfBounds {
                        producer: r.producer,
                        start,
                        end,
                        len: produced.n_chunks(),
                    });
                }
                for chunk in &produced.chunks()[start..end] {
                    out.push(chunk.clone());
                }
            }
            Ok(out)
        }
    }
}

/// Whether multi-job and multi-sequence parallelism coincide in a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hybridism {
    NotHybrid,
    Loose,
    Strict,
}

impl fmt::Display for Hybridism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hybridism::NotHybrid => "not hybrid",
            Hybridism::Loose => "loose hybrid",
            Hybridism::Strict => "strict hybrid",
        };
        f.write_str(s)
    }
}

/// Classifies a plan given the effective sequence count per job (computed
/// under a stated worker-core assumption).
///
/// Strict: some segment holds more than one job *and* a job with more than
/// one sequence. Loose: both kinds of parallelism exist, but never in the
/// same segment. Otherwise the plan is not hybrid.
pub fn classify_hybridism(
    plan: &AlgorithmPlan,
    sequence_counts: &HashMap<JobId, usize>,
) -> Hybridism {
    let mut any_multi_job = false;
    let mut any_multi_seq = false;
    for segment in &plan.segments {
        let multi_job = segment.jobs.len() > 1;
        let multi_seq = segment
            .jobs
            .iter()
            .any(|j| sequence_counts.get(&j.id).copied().unwrap_or(1) > 1);
        if multi_job && multi_seq {
            return Hybridism::Strict;
        }
        any_multi_job |= multi_job;
        any_multi_seq |= multi_seq;
    }
    if any_multi_job && any_multi_seq {
        Hybridism::Loose
    } else {
        Hybridism::NotHybrid
    }
}

/// Consumers per producer, as reference counts. Used for release accounting
/// by the scheduler and mirrored by the reference interpreter.
pub fn reference_counts(plan: &AlgorithmPlan) -> HashMap<JobId, usize> {
    let mut counts: HashMap<JobId, usize> = HashMap::new();
    for job in plan.jobs() {
        let mut seen: HashSet<JobId> = HashSet::new();
        for r in job.input.refs() {
            // a job consuming two ranges of one producer holds one reference
            if seen.insert(r.producer) {
                *counts.entry(r.producer).or_insert(0) += 1;
            }
        }
    }
    counts
}
