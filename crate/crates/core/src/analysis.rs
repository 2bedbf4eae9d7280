//! Metrics over aligned trees of ground-truth masks, predictions and
//! (optionally) the images the predictions were made on.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::diffusion::spatial_gradient;
use crate::error::{Error, Result};
use crate::io::{read_image, write_atomic};
use crate::metrics::{
    boundary_visibility_with, connected_components, prediction_diff, scatter_csv, segment_scatter,
    ClassSet, ConfusionMatrix, DiffMap, LabelMask, MetricsReport, PredictionComponents,
    ScatterRow, SegmentRow,
};
use crate::pipeline::discover;

pub const REPORT_FILE: &str = "report.json";
pub const SEGMENTS_FILE: &str = "segments.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const DIFF_DIR: &str = "diff";

#[derive(Debug, Clone)]
pub struct AnalyzeSpec {
    pub gt_root: PathBuf,
    /// One or two named prediction trees.
    pub preds: Vec<(String, PathBuf)>,
    /// Images used for boundary visibility; looked up by relative path, or
    /// by the same stem with a png/jpg/jpeg extension.
    pub images: Option<PathBuf>,
    pub classes: ClassSet,
    pub pattern: String,
}

#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub report: MetricsReport,
    /// Present when two prediction trees were given.
    pub scatter: Option<Vec<ScatterRow>>,
    pub diffs: Vec<(String, DiffMap)>,
}

fn find_image(root: &Path, rel: &str) -> Option<PathBuf> {
    let direct = root.join(rel);
    if direct.is_file() {
        return Some(direct);
    }
    ["png", "jpg", "jpeg"]
        .iter()
        .map(|ext| direct.with_extension(ext))
        .find(|p| p.is_file())
}

pub fn analyze(spec: &AnalyzeSpec) -> Result<AnalysisOutput> {
    if spec.preds.is_empty() || spec.preds.len() > 2 {
        return Err(Error::param("preds", "expected one or two prediction trees"));
    }
    let rels = discover(&spec.gt_root, &spec.pattern)?;

    let mut missing = Vec::new();
    let mut image_paths = Vec::new();
    for rel in &rels {
        for (_, root) in &spec.preds {
            if !root.join(rel).is_file() {
                missing.push(root.join(rel).display().to_string());
            }
        }
        if let Some(root) = &spec.images {
            match find_image(root, rel) {
                Some(p) => image_paths.push(p),
                None => missing.push(root.join(rel).display().to_string()),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Misaligned(missing));
    }

    let mut confusion = vec![ConfusionMatrix::new(); spec.preds.len()];
    let mut segments = Vec::new();
    let mut diffs = Vec::new();
    for (n, rel) in rels.iter().enumerate() {
        let gt = LabelMask::read_png(&spec.gt_root.join(rel))?;
        let preds = spec
            .preds
            .iter()
            .map(|(_, root)| LabelMask::read_png(&root.join(rel)))
            .collect::<Result<Vec<_>>>()?;
        for (cm, pred) in confusion.iter_mut().zip(&preds) {
            cm.accumulate(pred, &gt, &spec.classes)
                .map_err(|e| Error::Shape(format!("{rel}: {e}")))?;
        }
        let gradient = match spec.images.as_ref() {
            Some(_) => {
                let img = read_image(&image_paths[n])?;
                if img.height() != gt.height() || img.width() != gt.width() {
                    return Err(Error::Shape(format!(
                        "{rel}: image {}x{} vs mask {}x{}",
                        img.height(),
                        img.width(),
                        gt.height(),
                        gt.width()
                    )));
                }
                Some(spatial_gradient(&img))
            }
            None => None,
        };
        let components: Vec<_> = preds.iter().map(PredictionComponents::new).collect();
        for seg in connected_components(&gt) {
            let s_iou = components
                .iter()
                .map(|c| c.s_iou(&seg))
                .collect::<Result<Vec<_>>>()?;
            let visibility = gradient
                .as_ref()
                .map(|g| boundary_visibility_with(g, &seg))
                .transpose()?;
            segments.push(SegmentRow {
                image: rel.clone(),
                segment_id: seg.id,
                class: seg.class,
                area: seg.area(),
                s_iou,
                visibility,
            });
        }
        if let [a, b] = &preds[..] {
            diffs.push((rel.clone(), prediction_diff(a, b)?));
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("masks".into(), rels.len().to_string());
    metadata.insert(
        "visibility_gradient".into(),
        "central differences, norm over all channels stacked".into(),
    );
    metadata.insert("segment_connectivity".into(), "8".into());
    let report = MetricsReport {
        sources: spec.preds.iter().map(|(name, _)| name.clone()).collect(),
        class_iou: confusion.iter().map(|cm| cm.class_iou(&spec.classes)).collect(),
        segments,
        acc: None,
        metadata,
    };
    let scatter = if spec.preds.len() == 2 && spec.images.is_some() {
        Some(segment_scatter(&report.segments)?)
    } else {
        None
    };
    Ok(AnalysisOutput {
        report,
        scatter,
        diffs,
    })
}

/// Writes the report, the per-segment table and, when present, the scatter
/// table and difference maps under `out_dir`.
pub fn write_outputs(out_dir: &Path, out: &AnalysisOutput) -> Result<()> {
    write_atomic(&out_dir.join(REPORT_FILE), out.report.to_json().as_bytes())?;
    write_atomic(&out_dir.join(SEGMENTS_FILE), &out.report.segments_csv()?)?;
    if let Some(rows) = &out.scatter {
        write_atomic(&out_dir.join(SCATTER_FILE), &scatter_csv(rows)?)?;
    }
    for (rel, diff) in &out.diffs {
        let path = out_dir.join(DIFF_DIR).join(Path::new(rel).with_extension("png"));
        write_atomic(&path, &diff.encode_png()?)?;
    }
    Ok(())
}
