//! A minimal COCO-detection subset: `images[{id, file_name, width, height}]`
//! and `annotations[{image_id, bbox: [x, y, w, h]}]`. Extra fields are
//! ignored on read.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in image pixels; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    fn from_coco(b: [f64; 4]) -> Self {
        Self::new(b[0], b[1], b[2], b[3])
    }
}

/// Boxes of one image, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub image_id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<BoundingBox>,
}

impl AnnotationSet {
    pub fn new(image_id: u64, file_name: impl Into<String>, height: u32, width: u32) -> Self {
        Self {
            image_id,
            file_name: file_name.into(),
            width,
            height,
            boxes: Vec::new(),
        }
    }

    pub fn with_boxes(mut self, boxes: impl IntoIterator<Item = BoundingBox>) -> Self {
        self.boxes.extend(boxes);
        self
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
}

#[derive(Serialize, Deserialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
struct CocoAnnotation {
    #[serde(default, skip_deserializing, skip_serializing_if = "Option::is_none")]
    id: Option<u64>,
    image_id: u64,
    bbox: [f64; 4],
}

/// Parses an annotation file into per-image sets keyed by image id.
pub fn parse_annotations(path: impl AsRef<Path>) -> Result<BTreeMap<u64, AnnotationSet>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations_str(&text)
}

pub(crate) fn parse_annotations_str(text: &str) -> Result<BTreeMap<u64, AnnotationSet>> {
    let file: CocoFile =
        serde_json::from_str(text).map_err(|e| Error::format(format!("annotations: {e}")))?;
    let mut sets = BTreeMap::new();
    for img in file.images {
        let set = AnnotationSet::new(img.id, img.file_name, img.height, img.width);
        if sets.insert(img.id, set).is_some() {
            return Err(Error::format(format!("duplicate image id {}", img.id)));
        }
    }
    for (i, ann) in file.annotations.into_iter().enumerate() {
        let [_, _, w, h] = ann.bbox;
        if !(w > 0.0 && h > 0.0) || ann.bbox.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(format!(
                "annotation {i}: bbox {:?} must be finite with positive width and height",
                ann.bbox
            )));
        }
        let set = sets.get_mut(&ann.image_id).ok_or_else(|| {
            Error::format(format!("annotation {i} refers to unknown image {}", ann.image_id))
        })?;
        set.boxes.push(BoundingBox::from_coco(ann.bbox));
    }
    Ok(sets)
}

/// Writes sets back in the same subset format, images in iteration order and
/// boxes in set order.
pub fn write_annotations<'a>(
    path: impl AsRef<Path>,
    sets: impl IntoIterator<Item = &'a AnnotationSet>,
) -> Result<()> {
    let path = path.as_ref();
    let text = annotations_to_string(sets);
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn annotations_to_string<'a>(sets: impl IntoIterator<Item = &'a AnnotationSet>) -> String {
    let mut file = CocoFile {
        images: Vec::new(),
        annotations: Vec::new(),
    };
    for set in sets {
        file.images.push(CocoImage {
            id: set.image_id,
            file_name: set.file_name.clone(),
            width: set.width,
            height: set.height,
        });
        for b in &set.boxes {
            file.annotations.push(CocoAnnotation {
                id: Some(file.annotations.len() as u64 + 1),
                image_id: set.image_id,
                bbox: [b.x, b.y, b.w, b.h],
            });
        }
    }
    serde_json::to_string_pretty(&file).expect("annotation serialization cannot fail")
}
