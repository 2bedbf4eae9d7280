//! HTTP routes.

use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use eed_core::params::{Stencil, DEFAULT_TAU};
use eed_core::{builtin_presets, preset, DiffusionParams, ParamsOverride};
use serde::Serialize;

use crate::jobs::{JobId, JobStatus, JobStore, SubmitError};

/// Uploads above this many bytes are refused before decoding.
const BODY_LIMIT: usize = 16 * 1024 * 1024;

pub fn router(store: JobStore) -> Router {
    Router::new()
        .route("/jobs", post(create_job))
        .route("/jobs/{id}", get(job_status))
        .route("/jobs/{id}/frames/{step}", get(job_frame))
        .route("/jobs/{id}/cancel", post(cancel_job))
        .route("/presets", get(list_presets))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(store)
}

/// JSON error body: `{"error": "...", "field": "kappa"}`.
#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        Self {
            status,
            error: error.into(),
            field: None,
        }
    }

    fn bad_request(error: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error)
    }

    fn field(field: &str, reason: impl std::fmt::Display) -> Self {
        Self {
            field: Some(field.to_string()),
            ..Self::bad_request(format!("{field}: {reason}"))
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, what)
    }
}

impl From<eed_core::Error> for ApiError {
    fn from(e: eed_core::Error) -> Self {
        match e {
            eed_core::Error::Param { field, reason } => Self::field(field, reason),
            other => Self::bad_request(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

/// Parameters from the request's JSON. Without a base preset the four core
/// keys are required; the rest take their usual defaults.
fn parse_params(json: &str, base: Option<DiffusionParams>) -> Result<DiffusionParams, ApiError> {
    let o: ParamsOverride = serde_json::from_str(json).map_err(|e| ApiError::bad_request(format!("params: {e}")))?;
    let base = match base {
        Some(b) => b,
        None => {
            fn req<T>(name: &str, v: Option<T>) -> Result<T, ApiError> {
                v.ok_or_else(|| ApiError::field(name, "is required"))
            }
            let sigma = req("presmooth_sigma", o.presmooth_sigma)?;
            let kernel = req("presmooth_kernel", o.presmooth_kernel)?;
            DiffusionParams {
                kappa: req("kappa", o.kappa)?,
                presmooth_sigma: sigma,
                presmooth_kernel: kernel,
                orient_sigma: sigma,
                orient_kernel: kernel,
                tau: DEFAULT_TAU,
                steps: req("steps", o.steps)?,
                snapshots: Vec::new(),
                stencil: Stencil::default(),
            }
        }
    };
    Ok(base.apply(&o)?)
}

fn parse_id(raw: &str) -> Result<JobId, ApiError> {
    raw.parse().map_err(|_| ApiError::not_found(format!("no job {raw}")))
}

async fn create_job(State(store): State<JobStore>, mut form: Multipart) -> Result<Response, ApiError> {
    let (mut image, mut params, mut stride, mut base) = (None, None, None, None);
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request(e.body_text()))? {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
        let text = || String::from_utf8_lossy(&bytes).trim().to_string();
        match name.as_str() {
            "image" => image = Some(bytes.clone()),
            "params" => params = Some(text()),
            "frame_stride" => {
                let s: usize = text().parse().map_err(|_| ApiError::field("frame_stride", "must be an integer"))?;
                stride = Some(s);
            }
            "preset" => base = Some(preset(&text())?.params),
            other => return Err(ApiError::bad_request(format!("unexpected form field `{other}`"))),
        }
    }
    let image = image.ok_or_else(|| ApiError::field("image", "is required"))?;
    let params = match params {
        Some(json) => parse_params(&json, base)?,
        None => base.ok_or_else(|| ApiError::field("params", "is required unless a preset is named"))?,
    };
    let stride = stride.unwrap_or(store.config().default_frame_stride);
    if stride == 0 {
        return Err(ApiError::field("frame_stride", "must be at least 1"));
    }

    let img = eed_core::io::decode_bytes(&image).map_err(|e| ApiError::field("image", e))?;
    let cfg = store.config();
    if img.width() > cfg.max_width || img.height() > cfg.max_height {
        return Err(ApiError {
            field: Some("image".into()),
            ..ApiError::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                format!(
                    "image is {}x{}, above the {}x{} size cap",
                    img.width(),
                    img.height(),
                    cfg.max_width,
                    cfg.max_height
                ),
            )
        });
    }

    match store.submit(img, params, stride) {
        Ok(id) => {
            let status = store.status(id).expect("job was just created");
            Ok((StatusCode::CREATED, Json(status)).into_response())
        }
        Err(SubmitError::QueueFull(cap)) => Err(ApiError::new(
            StatusCode::TOO_MANY_REQUESTS,
            format!("job queue is full ({cap} waiting)"),
        )),
    }
}

async fn job_status(State(store): State<JobStore>, Path(id): Path<String>) -> Result<Json<JobStatus>, ApiError> {
    let id = parse_id(&id)?;
    store.status(id).map(Json).ok_or_else(|| ApiError::not_found(format!("no job {id}")))
}

async fn job_frame(
    State(store): State<JobStore>,
    Path((id, step)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let missing = || ApiError::not_found(format!("job {id} has no frame at step {step}"));
    let step: usize = step.parse().map_err(|_| missing())?;
    let png = store.frame(id, step).ok_or_else(missing)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png.as_ref().clone()).into_response())
}

async fn cancel_job(State(store): State<JobStore>, Path(id): Path<String>) -> Result<Json<JobStatus>, ApiError> {
    let id = parse_id(&id)?;
    store.cancel(id).ok_or_else(|| ApiError::not_found(format!("no job {id}")))?;
    Ok(Json(store.status(id).expect("job exists")))
}

#[derive(Debug, Serialize)]
pub struct PresetView {
    pub name: String,
    pub params: DiffusionParams,
    /// The same parameters as a preset file accepted by batch jobs.
    pub toml: String,
}

async fn list_presets() -> Json<Vec<PresetView>> {
    Json(
        builtin_presets()
            .into_iter()
            .map(|p| PresetView {
                toml: p.params.to_toml_string(),
                name: p.name,
                params: p.params,
            })
            .collect(),
    )
}
