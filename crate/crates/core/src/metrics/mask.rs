//! Label masks and class sets.

use std::fmt::Write as _;
use std::path::Path;

use image::ExtendedColorType;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::check_dims;
use crate::io::{encode_raw_png, write_atomic};

/// Class id excluded from every count.
pub const IGNORE_ID: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    height: usize,
    width: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(height: usize, width: usize, labels: Vec<u8>) -> Result<Self> {
        check_dims(height, width, 1)?;
        if labels.len() != height * width {
            return Err(Error::Shape(format!(
                "{height}x{width} mask needs {} labels, got {}",
                height * width,
                labels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let labels = (0..height * width).map(|k| f(k / width, k % width)).collect();
        Self::new(height, width, labels)
    }

    pub fn filled(height: usize, width: usize, class: u8) -> Result<Self> {
        Self::new(height, width, vec![class; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, class: u8) {
        self.labels[row * self.width + col] = class;
    }

    pub fn same_shape(&self, other: &LabelMask) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn ensure_same_shape(&self, other: &LabelMask) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "mask {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )))
        }
    }

    /// Reads a single-channel 8-bit PNG whose pixel values are class ids.
    pub fn read_png(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_png(&bytes).map_err(|e| match e {
            Error::Codec(source) => Error::Decode {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?;
        if img.color() != image::ColorType::L8 {
            return Err(Error::Shape(format!(
                "label masks must be single-channel 8-bit, got {:?}",
                img.color()
            )));
        }
        let luma = img.into_luma8();
        let (w, h) = (luma.width() as usize, luma.height() as usize);
        Self::new(h, w, luma.into_raw())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        encode_raw_png(&self.labels, self.width, self.height, ExtendedColorType::L8)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode_png()?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
}

/// Ordered mapping from class id to name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    entries: Vec<ClassEntry>,
}

impl ClassSet {
    pub fn new(entries: Vec<ClassEntry>) -> Result<Self> {
        let mut seen = [false; 256];
        for e in &entries {
            if e.id == IGNORE_ID {
                return Err(Error::param("classes", format!("id {IGNORE_ID} is reserved for ignore")));
            }
            if std::mem::replace(&mut seen[e.id as usize], true) {
                return Err(Error::param("classes", format!("duplicate class id {}", e.id)));
            }
        }
        if entries.is_empty() {
            return Err(Error::param("classes", "class set is empty"));
        }
        Ok(Self { entries })
    }

    /// The fourteen classes shared by Cityscapes and CARLA, keyed by
    /// Cityscapes train ids.
    pub fn street14() -> Self {
        const CLASSES: [(u8, &str); 14] = [
            (0, "road"),
            (1, "sidewalk"),
            (2, "building"),
            (3, "wall"),
            (5, "pole"),
            (6, "traffic light"),
            (7, "traffic sign"),
            (8, "vegetation"),
            (9, "terrain"),
            (10, "sky"),
            (11, "person"),
            (13, "car"),
            (14, "truck"),
            (15, "bus"),
        ];
        Self::new(
            CLASSES
                .iter()
                .map(|&(id, name)| ClassEntry {
                    id,
                    name: name.to_string(),
                })
                .collect(),
        )
        .expect("static class set is valid")
    }

    /// Parses lines of `<id> <name>`; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (id, name) = line
                .split_once(|c: char| c.is_whitespace() || c == ':')
                .ok_or_else(|| Error::param("classes", format!("line {}: expected `<id> <name>`", lineno + 1)))?;
            let id: u8 = id.trim().parse().map_err(|_| {
                Error::param("classes", format!("line {}: bad class id `{id}`", lineno + 1))
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::param("classes", format!("line {}: missing name", lineno + 1)));
            }
            entries.push(ClassEntry {
                id,
                name: name.to_string(),
            });
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{} {}", e.id, e.name);
        }
        out
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: u8) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    pub fn name(&self, id: u8) -> Option<&str> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.name.as_str())
    }
}
