//! Python module `eed`: images, parameters, the diffusion driver and a few
//! metrics. Images cross the boundary as flat row-major HWC float lists.

use std::path::PathBuf;

use eed_core::diffusion::{charbonnier as core_charbonnier, dirichlet_energy as core_dirichlet};
use eed_core::pipeline::{run_job as core_run_job, DatasetJob};
use eed_core::{builtin_presets, DiffusionParams, Error};
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::UnknownPreset(_) => PyKeyError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Image", module = "eed", from_py_object)]
#[derive(Clone)]
struct PyImage(eed_core::Image);

#[pymethods]
impl PyImage {
    /// `data` holds `height * width * channels` samples, row-major, channel last.
    #[new]
    fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> PyResult<Self> {
        if data.len() != height * width * channels {
            return Err(PyValueError::new_err(format!(
                "expected {} samples, got {}",
                height * width * channels,
                data.len()
            )));
        }
        let img = eed_core::Image::from_fn(height, width, channels, |c, i, j| data[(i * width + j) * channels + c])
            .map_err(to_py)?;
        Ok(Self(img))
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        eed_core::io::read_image(&path).map(Self).map_err(to_py)
    }

    fn write_png(&self, path: PathBuf) -> PyResult<()> {
        eed_core::io::write_png(&path, &self.0).map_err(to_py)
    }

    fn encode_png(&self) -> PyResult<Vec<u8>> {
        eed_core::io::encode_png(&self.0).map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.0.shape()
    }

    fn to_list(&self) -> Vec<f64> {
        let (h, w, c) = self.0.shape();
        let mut out = Vec::with_capacity(h * w * c);
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    out.push(self.0.get(ch, i, j));
                }
            }
        }
        out
    }

    fn channel_mean(&self, channel: usize) -> PyResult<f64> {
        if channel >= self.0.channels() {
            return Err(PyValueError::new_err(format!("no channel {channel}")));
        }
        Ok(self.0.channel_mean(channel))
    }

    fn __repr__(&self) -> String {
        let (h, w, c) = self.0.shape();
        format!("Image(height={h}, width={w}, channels={c})")
    }
}

#[pyclass(name = "Params", module = "eed", from_py_object)]
#[derive(Clone)]
struct PyParams(DiffusionParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (kappa, presmooth_sigma, presmooth_kernel, steps, *, orient_sigma=None, orient_kernel=None, tau=None, snapshots=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kappa: f64,
        presmooth_sigma: f64,
        presmooth_kernel: usize,
        steps: usize,
        orient_sigma: Option<f64>,
        orient_kernel: Option<usize>,
        tau: Option<f64>,
        snapshots: Option<Vec<usize>>,
    ) -> PyResult<Self> {
        let mut p = DiffusionParams::new(kappa, presmooth_sigma, presmooth_kernel, steps).map_err(to_py)?;
        p.orient_sigma = orient_sigma.unwrap_or(p.orient_sigma);
        p.orient_kernel = orient_kernel.unwrap_or(p.orient_kernel);
        p.tau = tau.unwrap_or(p.tau);
        p.snapshots = snapshots.unwrap_or_default();
        p.validate().map_err(to_py)?;
        Ok(Self(p))
    }

    /// A built-in preset (`P_strong`, `P_mild`), optionally with other steps/snapshots.
    #[staticmethod]
    #[pyo3(signature = (name, steps=None, snapshots=None))]
    fn preset(name: &str, steps: Option<usize>, snapshots: Option<Vec<usize>>) -> PyResult<Self> {
        let mut p = eed_core::preset(name).map_err(to_py)?.params;
        if let Some(s) = steps {
            p.steps = s;
        }
        if let Some(s) = snapshots {
            p.snapshots = s;
        }
        p.validate().map_err(to_py)?;
        Ok(Self(p))
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        DiffusionParams::from_toml_str(text).map(Self).map_err(to_py)
    }

    fn to_toml(&self) -> String {
        self.0.to_toml_string()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    #[getter]
    fn presmooth_sigma(&self) -> f64 {
        self.0.presmooth_sigma
    }

    #[getter]
    fn presmooth_kernel(&self) -> usize {
        self.0.presmooth_kernel
    }

    #[getter]
    fn orient_sigma(&self) -> f64 {
        self.0.orient_sigma
    }

    #[getter]
    fn orient_kernel(&self) -> usize {
        self.0.orient_kernel
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps
    }

    #[getter]
    fn snapshots(&self) -> Vec<usize> {
        self.0.snapshots.clone()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "Params(kappa={}, presmooth_sigma={}, presmooth_kernel={}, steps={}, tau={})",
            p.kappa, p.presmooth_sigma, p.presmooth_kernel, p.steps, p.tau
        )
    }
}

/// Runs the diffusion and returns `[(step, Image), ...]`. Releases the GIL.
#[pyfunction]
fn eed_run(py: Python<'_>, image: &PyImage, params: &PyParams) -> PyResult<Vec<(usize, PyImage)>> {
    let (img, p) = (image.0.clone(), params.0.clone());
    let snaps = py.detach(move || eed_core::eed_run(&img, &p)).map_err(to_py)?;
    Ok(snaps.into_iter().map(|s| (s.step, PyImage(s.image))).collect())
}

#[pyfunction]
fn charbonnier(s: f64, kappa: f64) -> PyResult<f64> {
    core_charbonnier(s, kappa).map_err(to_py)
}

#[pyfunction]
fn dirichlet_energy(image: &PyImage) -> f64 {
    core_dirichlet(&image.0)
}

#[pyfunction]
fn preset_names() -> Vec<String> {
    builtin_presets().into_iter().map(|p| p.name).collect()
}

#[pyfunction]
fn acc_rel(acc_clean: f64, acc_perturbed: f64) -> PyResult<f64> {
    eed_core::metrics::acc_rel(acc_clean, acc_perturbed).map_err(to_py)
}

/// Runs a dataset job; returns `(processed, skipped, failed)`.
#[pyfunction]
#[pyo3(signature = (input_root, output_root, params, workers=1, name="custom"))]
fn run_job(
    py: Python<'_>,
    input_root: PathBuf,
    output_root: PathBuf,
    params: &PyParams,
    workers: usize,
    name: &str,
) -> PyResult<(usize, usize, usize)> {
    let mut job = DatasetJob::new(
        input_root,
        output_root,
        eed_core::NamedPreset {
            name: name.to_string(),
            params: params.0.clone(),
        },
    );
    job.workers = workers;
    let report = py.detach(move || core_run_job(&job)).map_err(to_py)?;
    Ok((report.processed, report.skipped, report.failed))
}

#[pymodule]
fn eed(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(eed_run, m)?)?;
    m.add_function(wrap_pyfunction!(charbonnier, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet_energy, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(acc_rel, m)?)?;
    m.add_function(wrap_pyfunction!(run_job, m)?)?;
    Ok(())
}
