//! In-memory job store and FIFO scheduler.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::ops::ControlFlow;
use std::sync::{Arc, Mutex, MutexGuard};

use eed_core::diffusion::Diffuser;
use eed_core::io::encode_png;
use eed_core::{DiffusionParams, Image};
use serde::Serialize;

use crate::ServiceConfig;

pub type JobId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Cancelled,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Cancelled | JobState::Failed)
    }
}

/// What `GET /jobs/{id}` reports.
#[derive(Debug, Clone, Serialize)]
pub struct JobStatus {
    pub id: JobId,
    pub state: JobState,
    /// Step indices with a frame available, ascending.
    pub frames: Vec<usize>,
    pub current_step: usize,
    pub steps: usize,
    pub frame_stride: usize,
    pub params: DiffusionParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Job {
    state: JobState,
    params: DiffusionParams,
    stride: usize,
    /// Taken by the worker when the job starts.
    image: Option<Image>,
    frames: BTreeMap<usize, Arc<Vec<u8>>>,
    current_step: usize,
    error: Option<String>,
}

#[derive(Default)]
struct Inner {
    next_id: JobId,
    jobs: HashMap<JobId, Job>,
    queue: VecDeque<JobId>,
    running: usize,
}

/// Shared handle; cheap to clone.
#[derive(Clone)]
pub struct JobStore {
    inner: Arc<Mutex<Inner>>,
    config: Arc<ServiceConfig>,
}

pub(crate) enum SubmitError {
    QueueFull(usize),
}

impl JobStore {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Mutex::new(Inner {
                next_id: 1,
                ..Inner::default()
            })),
            config: Arc::new(config),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // a panicking worker must not take the whole service down
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub(crate) fn submit(&self, image: Image, params: DiffusionParams, stride: usize) -> Result<JobId, SubmitError> {
        let mut inner = self.lock();
        if inner.queue.len() >= self.config.queue_capacity {
            return Err(SubmitError::QueueFull(self.config.queue_capacity));
        }
        let id = inner.next_id;
        inner.next_id += 1;
        inner.jobs.insert(
            id,
            Job {
                state: JobState::Queued,
                params,
                stride,
                image: Some(image),
                frames: BTreeMap::new(),
                current_step: 0,
                error: None,
            },
        );
        inner.queue.push_back(id);
        self.schedule(&mut inner);
        Ok(id)
    }

    /// Starts queued jobs, oldest first, while worker slots are free.
    fn schedule(&self, inner: &mut Inner) {
        while inner.running < self.config.max_running {
            let Some(id) = inner.queue.pop_front() else { break };
            let job = inner.jobs.get_mut(&id).expect("queued job exists");
            job.state = JobState::Running;
            let image = job.image.take().expect("queued job keeps its image");
            let (params, stride) = (job.params.clone(), job.stride);
            inner.running += 1;
            let store = self.clone();
            std::thread::spawn(move || store.work(id, image, params, stride));
        }
    }

    fn work(&self, id: JobId, image: Image, params: DiffusionParams, stride: usize) {
        let outcome = Diffuser::new(&params).and_then(|d| {
            if params.steps == 0 {
                self.emit(id, 0, &image)?;
            }
            d.run_with(&image, |step, u| {
                let keep_going = if step % stride == 0 || step == params.steps {
                    self.emit(id, step, u).unwrap_or(false)
                } else {
                    self.advance(id, step)
                };
                if keep_going {
                    ControlFlow::Continue(())
                } else {
                    ControlFlow::Break(())
                }
            })
            .map(|_| ())
        });
        let mut inner = self.lock();
        inner.running -= 1;
        if let Some(job) = inner.jobs.get_mut(&id) {
            if job.state == JobState::Running {
                match outcome {
                    Ok(()) => job.state = JobState::Done,
                    Err(e) => {
                        job.state = JobState::Failed;
                        job.error = Some(e.to_string());
                    }
                }
            }
        }
        self.schedule(&mut inner);
    }

    /// Records progress; false once the job was cancelled.
    fn advance(&self, id: JobId, step: usize) -> bool {
        let mut inner = self.lock();
        match inner.jobs.get_mut(&id) {
            Some(job) if job.state == JobState::Running => {
                job.current_step = step;
                true
            }
            _ => false,
        }
    }

    /// Stores a frame unless the job was cancelled in the meantime. Encoding
    /// happens outside the lock; the state check and insert happen under it,
    /// so no frame can appear after a cancel returns.
    fn emit(&self, id: JobId, step: usize, u: &Image) -> eed_core::Result<bool> {
        let png = Arc::new(encode_png(u)?);
        let mut inner = self.lock();
        match inner.jobs.get_mut(&id) {
            Some(job) if job.state == JobState::Running => {
                job.current_step = step;
                job.frames.insert(step, png);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    pub fn status(&self, id: JobId) -> Option<JobStatus> {
        let inner = self.lock();
        inner.jobs.get(&id).map(|job| JobStatus {
            id,
            state: job.state,
            frames: job.frames.keys().copied().collect(),
            current_step: job.current_step,
            steps: job.params.steps,
            frame_stride: job.stride,
            params: job.params.clone(),
            error: job.error.clone(),
        })
    }

    pub fn frame(&self, id: JobId, step: usize) -> Option<Arc<Vec<u8>>> {
        self.lock().jobs.get(&id)?.frames.get(&step).cloned()
    }

    /// Cancels a queued or running job; terminal jobs are left as they are.
    pub fn cancel(&self, id: JobId) -> Option<JobState> {
        let mut inner = self.lock();
        let job = inner.jobs.get_mut(&id)?;
        let before = job.state;
        if !before.is_terminal() {
            job.state = JobState::Cancelled;
            job.image = None;
        }
        if before == JobState::Queued {
            inner.queue.retain(|&q| q != id);
        }
        Some(inner.jobs[&id].state)
    }
}
