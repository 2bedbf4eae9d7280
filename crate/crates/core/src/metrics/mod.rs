//! Network-free analysis of segmentation outputs: ground-truth segments,
//! boundary visibility, segment-wise and class-wise IoU, prediction
//! difference maps and relative accuracy.

pub mod diff;
pub mod iou;
pub mod mask;
pub mod segments;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diff::{prediction_diff, DiffMap};
pub use iou::{class_iou, ClassIou, ClassIouTable, ConfusionMatrix};
pub use mask::{ClassEntry, ClassSet, LabelMask, IGNORE_ID};
pub use segments::{
    boundary_visibility, boundary_visibility_with, connected_components, s_iou,
    PredictionComponents, SegmentRecord,
};

/// Accuracy under perturbation relative to clean accuracy:
/// `1 - (clean - perturbed) / clean`.
pub fn acc_rel(acc_clean: f64, acc_perturbed: f64) -> Result<f64> {
    if !(acc_clean > 0.0 && acc_clean <= 1.0) {
        return Err(Error::param(
            "acc_cs",
            format!("clean accuracy must lie in (0, 1], got {acc_clean}"),
        ));
    }
    if !(0.0..=1.0).contains(&acc_perturbed) {
        return Err(Error::param(
            "acc_aa",
            format!("perturbed accuracy must lie in [0, 1], got {acc_perturbed}"),
        ));
    }
    Ok(1.0 - (acc_clean - acc_perturbed) / acc_clean)
}

/// Per-segment evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    /// Relative path of the mask the segment came from.
    pub image: String,
    pub segment_id: u32,
    pub class: u8,
    pub area: usize,
    /// One value per prediction source, in source order.
    pub s_iou: Vec<f64>,
    pub visibility: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub image: String,
    pub segment_id: u32,
    pub class: u8,
    pub visibility: f64,
    /// `s_iou[0] - s_iou[1]`.
    pub s_iou_diff: f64,
}

/// Visibility against s_IoU difference, one row per segment. Every row must
/// carry exactly two s_IoU sources and a visibility value.
pub fn segment_scatter(rows: &[SegmentRow]) -> Result<Vec<ScatterRow>> {
    rows.iter()
        .map(|r| {
            let [a, b] = r.s_iou[..] else {
                return Err(Error::Shape(format!(
                    "{} segment {}: expected 2 s_IoU sources, got {}",
                    r.image,
                    r.segment_id,
                    r.s_iou.len()
                )));
            };
            let visibility = r.visibility.ok_or_else(|| {
                Error::Shape(format!("{} segment {}: missing visibility", r.image, r.segment_id))
            })?;
            Ok(ScatterRow {
                image: r.image.clone(),
                segment_id: r.segment_id,
                class: r.class,
                visibility,
                s_iou_diff: a - b,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccBlock {
    pub acc_cs: f64,
    pub acc_aa: f64,
    pub acc_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Names of the prediction sources, in `s_iou` column order.
    pub sources: Vec<String>,
    /// Class IoU table per source.
    pub class_iou: Vec<ClassIouTable>,
    pub segments: Vec<SegmentRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<AccBlock>,
    pub metadata: BTreeMap<String, String>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn segments_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "image".to_string(),
            "segment_id".into(),
            "class".into(),
            "area".into(),
        ];
        header.extend(self.sources.iter().map(|s| format!("s_iou_{s}")));
        header.push("visibility".into());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.segments {
            let mut rec = vec![
                r.image.clone(),
                r.segment_id.to_string(),
                r.class.to_string(),
                r.area.to_string(),
            ];
            rec.extend(r.s_iou.iter().map(f64::to_string));
            rec.push(r.visibility.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Manifest(e.to_string()))
    }
}

pub fn scatter_csv(rows: &[ScatterRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Manifest(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Manifest(format!("csv: {e}"))
}
