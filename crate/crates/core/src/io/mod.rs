//! Images, feature tensors and box annotations.

mod annotations;
mod image;
pub mod npy;
mod tensor;

pub use annotations::{parse_annotations, write_annotations, AnnotationSet, BoundingBox};
pub use image::{load_image, save_image, ImageRgb};
pub use tensor::{load_tensor, save_tensor, FeatureMap};
