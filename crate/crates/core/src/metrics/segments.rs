//! Ground-truth segments, boundary visibility and segment-wise IoU.

use serde::Serialize;

use crate::diffusion::gradient::spatial_gradient;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::mask::{LabelMask, IGNORE_ID};

const NEIGHBORS8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];
const NEIGHBORS4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

/// One 8-connected ground-truth segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SegmentRecord {
    /// 1-based, in row-major order of each segment's first pixel.
    pub id: u32,
    pub class: u8,
    pub height: usize,
    pub width: usize,
    /// Row-major linear indices, ascending.
    pub pixels: Vec<usize>,
    /// Pixels with a 4-neighbour outside the segment or on the image border.
    pub boundary: Vec<usize>,
}

impl SegmentRecord {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.width, idx % self.width)
    }
}

/// Labels 8-connected regions of equal class into `labels` (0 = unlabelled)
/// and returns each region's pixel list. Pixels rejected by `include` stay 0.
fn label_regions(
    mask: &LabelMask,
    include: impl Fn(u8) -> bool,
    labels: &mut [u32],
) -> Vec<Vec<usize>> {
    let (h, w) = (mask.height(), mask.width());
    let classes = mask.labels();
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for start in 0..h * w {
        if labels[start] != 0 || !include(classes[start]) {
            continue;
        }
        let class = classes[start];
        let id = regions.len() as u32 + 1;
        labels[start] = id;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(k) = stack.pop() {
            pixels.push(k);
            let (i, j) = ((k / w) as isize, (k % w) as isize);
            for (di, dj) in NEIGHBORS8 {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= h as isize || nj >= w as isize {
                    continue;
                }
                let n = ni as usize * w + nj as usize;
                if labels[n] == 0 && classes[n] == class {
                    labels[n] = id;
                    stack.push(n);
                }
            }
        }
        pixels.sort_unstable();
        regions.push(pixels);
    }
    regions
}

pub fn connected_components(mask: &LabelMask) -> Vec<SegmentRecord> {
    let (h, w) = (mask.height(), mask.width());
    let mut labels = vec![0u32; h * w];
    let regions = label_regions(mask, |c| c != IGNORE_ID, &mut labels);
    regions
        .into_iter()
        .enumerate()
        .map(|(n, pixels)| {
            let id = n as u32 + 1;
            let boundary = pixels
                .iter()
                .copied()
                .filter(|&k| {
                    let (i, j) = ((k / w) as isize, (k % w) as isize);
                    NEIGHBORS4.iter().any(|&(di, dj)| {
                        let (ni, nj) = (i + di, j + dj);
                        ni < 0
                            || nj < 0
                            || ni >= h as isize
                            || nj >= w as isize
                            || labels[ni as usize * w + nj as usize] != id
                    })
                })
                .collect();
            SegmentRecord {
                id,
                class: mask.labels()[pixels[0]],
                height: h,
                width: w,
                pixels,
                boundary,
            }
        })
        .collect()
}

fn check_segment_shape(seg: &SegmentRecord, height: usize, width: usize) -> Result<()> {
    if seg.height != height || seg.width != width {
        return Err(Error::Shape(format!(
            "segment from a {}x{} mask used with {height}x{width} data",
            seg.height, seg.width
        )));
    }
    Ok(())
}

/// Mean over the segment's boundary pixels of the gradient norm, where the
/// gradient stacks the x/y central differences of every channel.
pub fn boundary_visibility(img: &Image, seg: &SegmentRecord) -> Result<f64> {
    check_segment_shape(seg, img.height(), img.width())?;
    let g = spatial_gradient(img);
    boundary_visibility_with(&g, seg)
}

/// As [`boundary_visibility`], reusing a precomputed gradient field.
pub fn boundary_visibility_with(
    g: &crate::diffusion::GradientField,
    seg: &SegmentRecord,
) -> Result<f64> {
    check_segment_shape(seg, g.height(), g.width())?;
    if seg.boundary.is_empty() {
        return Err(Error::Undefined(format!("segment {} has no boundary pixels", seg.id)));
    }
    let total: f64 = seg
        .boundary
        .iter()
        .map(|&k| {
            let (i, j) = seg.coords(k);
            g.stacked_norm(i, j)
        })
        .sum();
    Ok(total / seg.boundary.len() as f64)
}

/// 8-connected components of a prediction mask, reused across segments.
#[derive(Debug, Clone)]
pub struct PredictionComponents<'a> {
    pred: &'a LabelMask,
    labels: Vec<u32>,
    sizes: Vec<usize>,
}

impl<'a> PredictionComponents<'a> {
    pub fn new(pred: &'a LabelMask) -> Self {
        let mut labels = vec![0u32; pred.height() * pred.width()];
        let regions = label_regions(pred, |c| c != IGNORE_ID, &mut labels);
        Self {
            pred,
            labels,
            sizes: regions.iter().map(Vec::len).collect(),
        }
    }

    /// IoU of `seg` against the union of predicted components of its class
    /// that intersect it.
    pub fn s_iou(&self, seg: &SegmentRecord) -> Result<f64> {
        check_segment_shape(seg, self.pred.height(), self.pred.width())?;
        let classes = self.pred.labels();
        let mut hit: Vec<u32> = Vec::new();
        let mut intersection = 0usize;
        for &k in &seg.pixels {
            if classes[k] == seg.class {
                intersection += 1;
                hit.push(self.labels[k]);
            }
        }
        if intersection == 0 {
            return Ok(0.0);
        }
        hit.sort_unstable();
        hit.dedup();
        let predicted: usize = hit.iter().map(|&id| self.sizes[id as usize - 1]).sum();
        let union = seg.area() + predicted - intersection;
        Ok(intersection as f64 / union as f64)
    }
}

pub fn s_iou(pred: &LabelMask, seg: &SegmentRecord) -> Result<f64> {
    PredictionComponents::new(pred).s_iou(seg)
}
