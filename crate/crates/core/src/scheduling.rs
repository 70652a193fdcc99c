//! Scheduling primitives shared by the master, the sub-schedulers and the
//! workers: cluster shape, deterministic job placement, result locations and
//! dynamic injection requests.

use std::collections::BTreeMap;

use crate::model::{ChunkRange, JobId, SegmentPlan};

/// Fixed shape of one run: how many sub-schedulers exist, how many workers
/// each may spawn, and how many cores every worker owns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterConfig {
    pub n_subschedulers: u32,
    pub workers_per_subscheduler: u32,
    pub cores_per_worker: u32,
}

impl ClusterConfig {
    pub fn new(n_subschedulers: u32, workers_per_subscheduler: u32, cores_per_worker: u32) -> Self {
        assert!(n_subschedulers >= 1, "need at least one sub-scheduler");
        assert!(workers_per_subscheduler >= 1, "need at least one worker slot");
        assert!(cores_per_worker >= 1, "workers need at least one core");
        ClusterConfig {
            n_subschedulers,
            workers_per_subscheduler,
            cores_per_worker,
        }
    }

    pub fn max_workers(&self) -> u32 {
        self.n_subschedulers * self.workers_per_subscheduler
    }

    /// Sub-scheduler owning a worker. Workers are numbered 1.. sub-major.
    pub fn sub_of_worker(&self, worker: u32) -> u32 {
        (worker - 1) / self.workers_per_subscheduler + 1
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig::new(1, 4, 4)
    }
}

/// Where a job landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub sub: u32,
    pub worker: u32,
}

/// Incremental first-fit-decreasing packer over one segment.
///
/// Kept while a segment is active so that jobs injected into the running
/// segment pack against the same worker budgets.
#[derive(Debug, Clone)]
pub struct SegmentPacker {
    config: ClusterConfig,
    /// Remaining core budget per opened worker, index 0 = worker 1.
    remaining: Vec<i64>,
}

impl SegmentPacker {
    pub fn new(config: ClusterConfig) -> Self {
        SegmentPacker {
            config,
            remaining: Vec::new(),
        }
    }

    fn demand(&self, threads: u32) -> i64 {
        if threads == 0 {
            self.config.cores_per_worker as i64
        } else {
            threads as i64
        }
    }

    /// Places jobs given as `(id, threads)` pairs. Sorts by declared demand
    /// descending (ties by ascending id), then first-fit over workers in
    /// global order, opening the next worker when no open one fits. A job
    /// demanding more than a worker's cores gets a worker to itself and
    /// oversubscribes it. When every worker slot is taken, the least-loaded
    /// worker is used.
    pub fn place(&mut self, jobs: &[(JobId, u32)]) -> BTreeMap<JobId, Placement> {
        let mut order: Vec<(JobId, i64)> =
            jobs.iter().map(|(id, t)| (*id, self.demand(*t))).collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut out = BTreeMap::new();
        for (id, demand) in order {
            let slot = self
                .remaining
                .iter()
                .position(|&rem| rem >= demand)
                .or_else(|| {
                    if (self.remaining.len() as u32) < self.config.max_workers() {
                        self.remaining.push(self.config.cores_per_worker as i64);
                        Some(self.remaining.len() - 1)
                    } else {
                        None
                    }
                })
                .unwrap_or_else(|| {
                    // all worker slots taken: pick the least-loaded one
                    self.remaining
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i)
                        .expect("at least one worker slot")
                });
            self.remaining[slot] -= demand;
            let worker = slot as u32 + 1;
            out.insert(
                id,
                Placement {
                    sub: self.config.sub_of_worker(worker),
                    worker,
                },
            );
        }
        out
    }
}

/// Deterministic placement of one segment: a pure function of the segment
/// and the cluster shape.
pub fn place_jobs(segment: &SegmentPlan, config: &ClusterConfig) -> BTreeMap<JobId, Placement> {
    let jobs: Vec<(JobId, u32)> = segment.jobs.iter().map(|j| (j.id, j.threads)).collect();
    SegmentPacker::new(*config).place(&jobs)
}

/// Who holds a completed job's result chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderKind {
    SubScheduler,
    Worker,
}

impl HolderKind {
    pub fn tag(self) -> u8 {
        match self {
            HolderKind::SubScheduler => 0,
            HolderKind::Worker => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(HolderKind::SubScheduler),
            1 => Some(HolderKind::Worker),
            _ => None,
        }
    }
}

/// Master-side record of where a result lives and how many chunks it has.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultLocation {
    pub kind: HolderKind,
    /// Sub-scheduler or worker id, depending on `kind`.
    pub holder_id: u32,
    /// Transport address of the holder, as shipped in assignments.
    pub addr: String,
    pub n_chunks: u32,
}

/// Lifecycle of a job at the master.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobState {
    Pending,
    Dispatched,
    Done,
    Failed,
}

/// Where injected jobs go, relative to the segment currently executing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionTarget {
    CurrentSegment,
    /// `offset >= 1`; an offset of 0 is rejected as targeting the past.
    FollowingSegment(u32),
    AppendSegment,
}

/// Producer named by an injected job: either a job already in the plan or a
/// placeholder resolved within the same request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateProducer {
    Existing(JobId),
    Placeholder(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemplateRef {
    pub producer: TemplateProducer,
    pub range: Option<ChunkRange>,
}

impl TemplateRef {
    pub fn existing(producer: JobId) -> Self {
        TemplateRef {
            producer: TemplateProducer::Existing(producer),
            range: None,
        }
    }

    pub fn existing_slice(producer: JobId, start: u32, end: u32) -> Self {
        TemplateRef {
            producer: TemplateProducer::Existing(producer),
            range: Some(ChunkRange { start, end }),
        }
    }

    pub fn placeholder_slice(placeholder: u64, start: u32, end: u32) -> Self {
        TemplateRef {
            producer: TemplateProducer::Placeholder(placeholder),
            range: Some(ChunkRange { start, end }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TemplateBinding {
    #[default]
    None,
    Pool(u32),
    Refs(Vec<TemplateRef>),
}

/// Job spec whose id is a request-local placeholder; the master assigns the
/// real id and rewrites placeholder refs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobTemplate {
    pub placeholder: u64,
    pub function_id: u32,
    pub threads: u32,
    pub input: TemplateBinding,
    pub no_send: bool,
}

/// A running job's request to add jobs to the plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionRequest {
    pub target: InjectionTarget,
    pub specs: Vec<JobTemplate>,
}
