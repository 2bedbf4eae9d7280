//! Batch creation of diffused dataset duplicates.

pub mod discover;
pub mod job;
pub mod manifest;
pub mod sampling;

pub use discover::discover;
pub use job::{
    default_workers, input_digest, output_relative_path, run_job, run_job_with, DatasetJob,
    JobReport, RunControl, DEFAULT_PATTERN, WORKERS_ENV,
};
pub use manifest::{EntryStatus, Manifest, ManifestEntry, MANIFEST_FILE};
pub use sampling::{random_eed_sources, sampling_list, SampleEntry, SourceWeight};
