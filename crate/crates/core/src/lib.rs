//! Deterministic data augmentation for single-domain object detection.
//!
//! Two transforms, usable separately or through [`pipeline::augment_batch`]:
//!
//! * [`color`]: random permutation of the RGB channels of an image.
//! * [`dsm`]: region-wise AdaIN restyling of a feature map, drawing target
//!   styles from two bounded FIFO memories of object and background styles.
//!
//! Supporting modules cover style statistics ([`stats`]), image/tensor/box I/O
//! ([`io`]), seeded random streams ([`rng`]), a small fixed-weight feature
//! extractor, a synthetic scene generator and style-diversity metrics
//! ([`pipeline`]).
//!
//! Every random choice is drawn from a [`rng::SeededStream`], so equal seeds
//! give bit-identical outputs.

pub mod color;
pub mod dsm;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
