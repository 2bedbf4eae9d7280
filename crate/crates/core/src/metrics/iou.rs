//! Dataset-global class IoU from accumulated confusion counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::mask::{ClassSet, LabelMask, IGNORE_ID};

/// `counts[gt * 256 + pred]`, ignore-labelled ground truth excluded.
/// Merging partial matrices is plain addition, so the result does not depend
/// on how the data was split or in which order parts were merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self {
            counts: vec![0; 256 * 256],
        }
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one mask pair. Ground-truth ids must be in `classes` or ignore.
    pub fn accumulate(&mut self, pred: &LabelMask, gt: &LabelMask, classes: &ClassSet) -> Result<()> {
        pred.ensure_same_shape(gt)?;
        let mut known = [false; 256];
        for e in classes.entries() {
            known[e.id as usize] = true;
        }
        for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
            if g == IGNORE_ID {
                continue;
            }
            if !known[g as usize] {
                return Err(Error::param(
                    "gt",
                    format!("ground-truth class id {g} is not in the class set"),
                ));
            }
            self.counts[g as usize * 256 + p as usize] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn get(&self, gt: u8, pred: u8) -> u64 {
        self.counts[gt as usize * 256 + pred as usize]
    }

    pub fn true_positives(&self, class: u8) -> u64 {
        self.get(class, class)
    }

    pub fn false_positives(&self, class: u8) -> u64 {
        (0..=255u8)
            .filter(|&g| g != class)
            .map(|g| self.get(g, class))
            .sum()
    }

    pub fn false_negatives(&self, class: u8) -> u64 {
        (0..=255u8)
            .filter(|&p| p != class)
            .map(|p| self.get(class, p))
            .sum()
    }

    /// Per-class IoU and their mean over defined classes.
    pub fn class_iou(&self, classes: &ClassSet) -> ClassIouTable {
        let rows: Vec<ClassIou> = classes
            .entries()
            .iter()
            .map(|e| {
                let tp = self.true_positives(e.id);
                let fp = self.false_positives(e.id);
                let fn_ = self.false_negatives(e.id);
                let denom = tp + fp + fn_;
                ClassIou {
                    id: e.id,
                    name: e.name.clone(),
                    tp,
                    fp,
                    fn_,
                    iou: (denom > 0).then(|| tp as f64 / denom as f64),
                }
            })
            .collect();
        let defined: Vec<f64> = rows.iter().filter_map(|r| r.iou).collect();
        let miou = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        let undefined = rows
            .iter()
            .filter(|r| r.iou.is_none())
            .map(|r| r.name.clone())
            .collect();
        ClassIouTable {
            classes: rows,
            miou,
            undefined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassIou {
    pub id: u8,
    pub name: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// `None` when the class is absent from both prediction and ground truth.
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassIouTable {
    pub classes: Vec<ClassIou>,
    pub miou: Option<f64>,
    /// Names of classes whose IoU is undefined; excluded from the mean.
    pub undefined: Vec<String>,
}

/// Dataset-global IoU over all `(pred, gt)` pairs.
pub fn class_iou(pairs: &[(&LabelMask, &LabelMask)], classes: &ClassSet) -> Result<ClassIouTable> {
    let mut cm = ConfusionMatrix::new();
    for (pred, gt) in pairs {
        cm.accumulate(pred, gt, classes)?;
    }
    Ok(cm.class_iou(classes))
}
