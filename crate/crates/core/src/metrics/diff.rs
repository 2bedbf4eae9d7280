use image::ExtendedColorType;

use crate::error::Result;
use crate::io::encode_raw_png;
use crate::metrics::mask::LabelMask;

/// Per-pixel disagreement between two predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffMap {
    pub height: usize,
    pub width: usize,
    pub different: Vec<bool>,
}

impl DiffMap {
    pub fn count_different(&self) -> usize {
        self.different.iter().filter(|&&d| d).count()
    }

    /// Black (0) where the predictions differ, white (255) where they agree.
    pub fn to_gray(&self) -> Vec<u8> {
        self.different.iter().map(|&d| if d { 0 } else { 255 }).collect()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        encode_raw_png(&self.to_gray(), self.width, self.height, ExtendedColorType::L8)
    }
}

pub fn prediction_diff(a: &LabelMask, b: &LabelMask) -> Result<DiffMap> {
    a.ensure_same_shape(b)?;
    Ok(DiffMap {
        height: a.height(),
        width: a.width(),
        different: a.labels().iter().zip(b.labels()).map(|(x, y)| x != y).collect(),
    })
}
