//! Dataset duplication: diffuse every matched camera image under an input
//! root and write each snapshot to `<output_root>/<step>/<relative path>.png`.
//! Label files are never touched.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::diffusion::eed_run;
use crate::error::{Error, Result};
use crate::io::{decode_bytes, write_png};
use crate::params::{preset, DiffusionParams, NamedPreset, ParamsOverride};
use crate::pipeline::discover::discover;
use crate::pipeline::manifest::{EntryStatus, Manifest, ManifestEntry, MANIFEST_FILE, MANIFEST_VERSION};

pub const DEFAULT_PATTERN: &str = "**/*.{png,jpg,jpeg,PNG,JPG,JPEG}";

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "EED_WORKERS";

#[derive(Debug, Clone)]
pub struct DatasetJob {
    pub input_root: PathBuf,
    pub output_root: PathBuf,
    pub preset: NamedPreset,
    pub pattern: String,
    pub workers: usize,
}

/// On-disk job description (TOML). Relative paths resolve against the job
/// file's directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobFile {
    input_root: PathBuf,
    output_root: PathBuf,
    pattern: Option<String>,
    workers: Option<usize>,
    preset: Option<String>,
    preset_file: Option<PathBuf>,
    #[serde(default)]
    params: ParamsOverride,
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

impl DatasetJob {
    pub fn new(input_root: impl Into<PathBuf>, output_root: impl Into<PathBuf>, preset: NamedPreset) -> Self {
        Self {
            input_root: input_root.into(),
            output_root: output_root.into(),
            preset,
            pattern: DEFAULT_PATTERN.to_string(),
            workers: 1,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config_err = |reason: String| Error::Config {
            path: path.to_path_buf(),
            reason,
        };
        let file: JobFile = toml::from_str(&text).map_err(|e| config_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base_preset = match (&file.preset, &file.preset_file) {
            (Some(name), None) => preset(name)?,
            (None, Some(p)) => {
                let p = base.join(p);
                NamedPreset {
                    name: p
                        .file_stem()
                        .map_or_else(|| "custom".into(), |s| s.to_string_lossy().into_owned()),
                    params: DiffusionParams::load(&p)?,
                }
            }
            _ => return Err(config_err("exactly one of `preset` or `preset_file` is required".into())),
        };
        let params = base_preset.params.apply(&file.params)?;
        let job = Self {
            input_root: base.join(&file.input_root),
            output_root: base.join(&file.output_root),
            preset: NamedPreset {
                name: base_preset.name,
                params,
            },
            pattern: file.pattern.unwrap_or_else(|| DEFAULT_PATTERN.to_string()),
            workers: file.workers.unwrap_or_else(default_workers),
        };
        Ok(job)
    }

    pub fn validate(&self) -> Result<()> {
        self.preset.params.validate()?;
        if !self.input_root.is_dir() {
            return Err(Error::io(
                &self.input_root,
                std::io::Error::new(std::io::ErrorKind::NotFound, "input root is not a directory"),
            ));
        }
        let input = std::fs::canonicalize(&self.input_root).map_err(|e| Error::io(&self.input_root, e))?;
        let output = std::path::absolute(&self.output_root).map_err(|e| Error::io(&self.output_root, e))?;
        let output = std::fs::canonicalize(&output).unwrap_or(output);
        if output.starts_with(&input) {
            return Err(Error::param(
                "output_root",
                "must not be the input root or lie inside it",
            ));
        }
        if self.workers == 0 {
            return Err(Error::param("workers", "must be at least 1"));
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.output_root.join(MANIFEST_FILE)
    }
}

/// Where snapshot `step` of `relative_path` is written, relative to the
/// output root.
pub fn output_relative_path(step: usize, relative_path: &str) -> String {
    let rel = Path::new(relative_path).with_extension("png");
    format!("{step}/{}", rel.to_string_lossy().replace('\\', "/"))
}

/// External control over a running job.
#[derive(Debug, Default)]
pub struct RunControl {
    stop: AtomicBool,
    /// Stop claiming new images once this many have been started.
    pub max_images: Option<usize>,
}

impl RunControl {
    pub fn stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    pub fn limited(max_images: usize) -> Self {
        Self {
            stop: AtomicBool::new(false),
            max_images: Some(max_images),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JobReport {
    pub manifest: Manifest,
    /// Images diffused in this run.
    pub processed: usize,
    /// Images already up to date.
    pub skipped: usize,
    pub failed: usize,
}

pub fn input_digest(bytes: &[u8], params: &DiffusionParams) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.update([0u8]);
    h.update(serde_json::to_vec(params).expect("params serialize"));
    hex::encode(h.finalize())
}

pub fn run_job(job: &DatasetJob) -> Result<JobReport> {
    run_job_with(job, &RunControl::default(), |_| {})
}

struct WorkItem {
    index: usize,
    path: PathBuf,
    rel: String,
}

struct WorkResult {
    index: usize,
    outcome: std::result::Result<([usize; 2], BTreeMap<usize, String>), String>,
    wall_time_ms: u64,
}

/// Runs the job, calling `on_entry` from the writer thread after each
/// image finishes.
pub fn run_job_with(
    job: &DatasetJob,
    control: &RunControl,
    mut on_entry: impl FnMut(&ManifestEntry),
) -> Result<JobReport> {
    job.validate()?;
    let params = &job.preset.params;
    let relative = discover(&job.input_root, &job.pattern)?;
    let manifest_path = job.manifest_path();

    let previous: HashMap<String, ManifestEntry> = match Manifest::load(&manifest_path) {
        Ok(m) => m.entries.into_iter().map(|e| (e.relative_path.clone(), e)).collect(),
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => HashMap::new(),
        Err(e) => {
            log::warn!("ignoring unreadable manifest: {e}");
            HashMap::new()
        }
    };

    let mut manifest = Manifest {
        version: MANIFEST_VERSION,
        preset: job.preset.name.clone(),
        params: params.clone(),
        pattern: job.pattern.clone(),
        entries: Vec::with_capacity(relative.len()),
    };
    let mut work = Vec::new();
    let mut skipped = 0;
    for rel in &relative {
        let path = job.input_root.join(rel);
        let digest = match std::fs::read(&path) {
            Ok(bytes) => input_digest(&bytes, params),
            Err(e) => {
                manifest.entries.push(failed_entry(rel, String::new(), e.to_string()));
                continue;
            }
        };
        if let Some(prev) = previous.get(rel) {
            let up_to_date = prev.status == EntryStatus::Done
                && prev.input_digest == digest
                && prev.outputs.values().all(|o| job.output_root.join(o).is_file());
            if up_to_date {
                manifest.entries.push(prev.clone());
                skipped += 1;
                continue;
            }
        }
        work.push(WorkItem {
            index: manifest.entries.len(),
            path,
            rel: rel.clone(),
        });
        manifest.entries.push(ManifestEntry {
            relative_path: rel.clone(),
            outputs: BTreeMap::new(),
            input_digest: digest,
            status: EntryStatus::Pending,
            wall_time_ms: 0,
            size: None,
            error: None,
        });
    }
    std::fs::create_dir_all(&job.output_root).map_err(|e| Error::io(&job.output_root, e))?;
    manifest.save(&manifest_path)?;

    let mut processed = 0;
    let mut failed = manifest.count(EntryStatus::Failed);
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<WorkResult>();
    let workers = job.workers.clamp(1, work.len().max(1));

    let mut write_error = None;
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (work, next) = (&work, &next);
            scope.spawn(move || loop {
                if control.stop.load(Ordering::SeqCst) {
                    break;
                }
                let ticket = next.fetch_add(1, Ordering::SeqCst);
                if ticket >= work.len() || control.max_images.is_some_and(|m| ticket >= m) {
                    break;
                }
                let item = &work[ticket];
                let started = Instant::now();
                let outcome = process_image(&item.path, &item.rel, job);
                let result = WorkResult {
                    index: item.index,
                    outcome,
                    wall_time_ms: started.elapsed().as_millis() as u64,
                };
                if tx.send(result).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // single writer: the manifest is only mutated here
        for result in rx {
            let entry = &mut manifest.entries[result.index];
            entry.wall_time_ms = result.wall_time_ms;
            match result.outcome {
                Ok((size, outputs)) => {
                    entry.status = EntryStatus::Done;
                    entry.size = Some(size);
                    entry.outputs = outputs;
                    entry.error = None;
                    processed += 1;
                }
                Err(msg) => {
                    entry.status = EntryStatus::Failed;
                    entry.error = Some(msg);
                    failed += 1;
                }
            }
            on_entry(entry);
            if let Err(e) = manifest.save(&manifest_path) {
                control.stop();
                write_error = Some(e);
                break;
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    Ok(JobReport {
        manifest,
        processed,
        skipped,
        failed,
    })
}

fn failed_entry(rel: &str, digest: String, error: String) -> ManifestEntry {
    ManifestEntry {
        relative_path: rel.to_string(),
        outputs: BTreeMap::new(),
        input_digest: digest,
        status: EntryStatus::Failed,
        wall_time_ms: 0,
        size: None,
        error: Some(error),
    }
}

fn process_image(
    path: &Path,
    rel: &str,
    job: &DatasetJob,
) -> std::result::Result<([usize; 2], BTreeMap<usize, String>), String> {
    let run = || -> Result<([usize; 2], BTreeMap<usize, String>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let img = decode_bytes(&bytes).map_err(|e| match e {
            Error::Codec(source) => Error::Decode {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })?;
        let mut outputs = BTreeMap::new();
        for snap in eed_run(&img, &job.preset.params)? {
            let out_rel = output_relative_path(snap.step, rel);
            write_png(&job.output_root.join(&out_rel), &snap.image)?;
            outputs.insert(snap.step, out_rel);
        }
        Ok(([img.height(), img.width()], outputs))
    };
    run().map_err(|e| e.to_string())
}
