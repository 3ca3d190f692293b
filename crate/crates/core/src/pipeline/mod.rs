//! End-to-end batch augmentation: color perturbation, feature extraction up
//! to the configured block, then dual-style-memory restyling with a state
//! shared across the batch.
//!
//! Image-level stages run in parallel. Restyling runs in input order against
//! the shared memories. Image `i` draws from its own substreams of the run
//! seed; results do not depend on thread count.

mod config;
mod diversity;
mod extractor;
mod styles;
pub mod synth;

pub use config::{load_config, CpModeName, CpSection, DsmSection, PathsSection, PipelineConfig};
pub use diversity::style_diversity;
pub use extractor::{extract_features, ExtractorConfig, FeatureExtractor};
pub use styles::{export_style_table, read_style_table, StyleRow, StyleTable};

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::color::{apply_permutation, sample_permutation, ChannelPermutation};
use crate::dsm::{dsm_forward_partition, AugmentationTrace, DsmState};
use crate::error::{Error, Result};
use crate::io::{
    load_image, parse_annotations, save_image, save_tensor, AnnotationSet, FeatureMap, ImageRgb,
};
use crate::rng::{Domain, SeededStream};
use crate::stats::{build_partition, region_stats, Epsilon, Region, RegionPartition, StyleKind};

/// One augmented image.
#[derive(Debug, Clone)]
pub struct AugmentedItem {
    pub image_id: u64,
    pub file_name: String,
    /// Channel order applied, or `None` when color perturbation is disabled.
    pub permutation: Option<ChannelPermutation>,
    pub image: ImageRgb,
    /// Features at the placement block before restyling.
    pub features_in: FeatureMap,
    /// Features at the placement block after restyling.
    pub features: FeatureMap,
    pub trace: AugmentationTrace,
}

#[derive(Debug, Clone)]
pub struct AugmentOutput {
    pub items: Vec<AugmentedItem>,
    /// Region styles of the features before restyling.
    pub input_styles: StyleTable,
    /// Region styles of the restyled features.
    pub output_styles: StyleTable,
}

/// Appends the background (if non-empty) and object region styles of `fm`.
pub fn append_region_styles(
    table: &mut StyleTable,
    image_id: u64,
    fm: &FeatureMap,
    part: &RegionPartition,
    eps: Epsilon,
) -> Result<()> {
    if part.background_area() > 0 {
        let s = region_stats(fm, Region::Mask(part.background_mask()), eps)?;
        table.push(image_id, "background", s.with_kind(StyleKind::Background))?;
    }
    for (i, o) in part.objects().iter().enumerate() {
        let s = region_stats(fm, Region::Rect(o.rect), eps)?;
        table.push(
            image_id,
            format!("object_{}", i + 1),
            s.with_kind(StyleKind::Object),
        )?;
    }
    Ok(())
}

/// Loads every annotated image from `images`, in ascending image id order.
/// Decoded dimensions must match the annotation record.
pub fn load_dataset(
    images: impl AsRef<Path>,
    annotations: impl AsRef<Path>,
) -> Result<Vec<(ImageRgb, AnnotationSet)>> {
    let images = images.as_ref();
    parse_annotations(annotations)?
        .into_values()
        .map(|ann| {
            let img = load_image(images.join(&ann.file_name)).map_err(|e| e.for_image(ann.image_id))?;
            if img.height() != ann.height as usize || img.width() != ann.width as usize {
                return Err(Error::shape(format!(
                    "{} is {}x{}, annotations say {}x{}",
                    ann.file_name,
                    img.width(),
                    img.height(),
                    ann.width,
                    ann.height
                ))
                .for_image(ann.image_id));
            }
            Ok((img, ann))
        })
        .collect()
}

/// Permutes the channels of every PNG or PPM file in `images` (sorted by
/// name) and writes the results as PNG under `out`. File `i` uses its own
/// substream of `seed`.
pub fn perturb_directory(
    images: impl AsRef<Path>,
    out: impl AsRef<Path>,
    mode: crate::color::CpMode,
    seed: u64,
) -> Result<Vec<(String, ChannelPermutation)>> {
    mode.validate()?;
    let images = images.as_ref();
    let out = out.as_ref();
    let listing = std::fs::read_dir(images).map_err(|e| Error::io(images, e))?;
    let mut files = Vec::new();
    for entry in listing {
        let path = entry.map_err(|e| Error::io(images, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("png" | "ppm")) {
            files.push(path);
        }
    }
    files.sort();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    files
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let img = load_image(path)?;
            let mut rng = SeededStream::substream(seed, Domain::ColorPerturbation, i as u64);
            let perm = sample_permutation(&mut rng, mode);
            let stem = path
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            save_image(&apply_permutation(&img, perm), out.join(format!("{stem}.png")))?;
            Ok((stem, perm))
        })
        .collect()
}

/// Fills the memories of `state` from a style table: `background` rows go to
/// the background queue, `object_*` rows to the object queue.
pub fn preseed_state(state: &mut DsmState, table: &StyleTable) {
    for row in table.rows() {
        state.push(row.style.clone());
    }
}

/// Augments `items` in order. `state` carries the style memories in and out.
pub fn augment_batch(
    items: &[(ImageRgb, AnnotationSet)],
    cfg: &PipelineConfig,
    state: &mut DsmState,
) -> Result<AugmentOutput> {
    cfg.validate()?;
    let dsm_cfg = cfg.dsm.config();
    let extractor = FeatureExtractor::new(&cfg.extractor)?;
    let placement = cfg.dsm.placement;
    let stride = cfg.extractor.cumulative_stride(placement);
    let cp_mode = cfg.cp.mode();

    let staged: Vec<(Option<ChannelPermutation>, ImageRgb, FeatureMap)> = items
        .par_iter()
        .enumerate()
        .map(|(i, (img, ann))| {
            let (perm, image) = if cfg.cp.enabled {
                let mut rng = SeededStream::substream(cfg.seed, Domain::ColorPerturbation, i as u64);
                let perm = sample_permutation(&mut rng, cp_mode);
                (Some(perm), apply_permutation(img, perm))
            } else {
                (None, img.clone())
            };
            let fm = extractor
                .forward(&image, placement)
                .map_err(|e| e.for_image(ann.image_id))?;
            Ok((perm, image, fm))
        })
        .collect::<Result<_>>()?;

    let channels = cfg.feature_channels();
    let mut input_styles = StyleTable::new(channels);
    let mut output_styles = StyleTable::new(channels);
    let mut out = Vec::with_capacity(items.len());
    for (i, ((perm, image, fm), (_, ann))) in staged.into_iter().zip(items).enumerate() {
        let tag = |e: Error| e.for_image(ann.image_id);
        let padded = (fm.height() * stride, fm.width() * stride);
        let part = build_partition(ann, padded, (fm.height(), fm.width()));
        let (features, trace) = if cfg.dsm.enabled {
            let mut rng = SeededStream::substream(cfg.seed, Domain::StyleMemory, i as u64);
            dsm_forward_partition(&fm, &part, state, &dsm_cfg, &mut rng).map_err(tag)?
        } else {
            let trace = AugmentationTrace {
                skipped: true,
                dropped_boxes: part.dropped().to_vec(),
                ..Default::default()
            };
            (fm.clone(), trace)
        };
        append_region_styles(&mut input_styles, ann.image_id, &fm, &part, dsm_cfg.eps).map_err(tag)?;
        append_region_styles(&mut output_styles, ann.image_id, &features, &part, dsm_cfg.eps).map_err(tag)?;
        out.push(AugmentedItem {
            image_id: ann.image_id,
            file_name: ann.file_name.clone(),
            permutation: perm,
            image,
            features_in: fm,
            features,
            trace,
        });
    }
    Ok(AugmentOutput {
        items: out,
        input_styles,
        output_styles,
    })
}

#[derive(Serialize)]
struct TraceEntry<'a> {
    image_id: u64,
    file_name: &'a str,
    permutation: Option<ChannelPermutation>,
    trace: &'a AugmentationTrace,
}

fn stem(item: &AugmentedItem) -> String {
    Path::new(&item.file_name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("image_{}", item.image_id))
}

/// Writes `images/<stem>.png`, `features/<stem>.npy`, `styles_input.csv`,
/// `styles_output.csv` and `traces.json` under `dir`.
pub fn write_outputs(output: &AugmentOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let images = dir.join("images");
    let features = dir.join("features");
    for d in [&images, &features] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for item in &output.items {
        let name = stem(item);
        save_image(&item.image, images.join(format!("{name}.png")))?;
        save_tensor(&item.features, features.join(format!("{name}.npy")))?;
    }
    export_style_table(&output.input_styles, dir.join("styles_input.csv"))?;
    export_style_table(&output.output_styles, dir.join("styles_output.csv"))?;
    let entries: Vec<TraceEntry> = output
        .items
        .iter()
        .map(|it| TraceEntry {
            image_id: it.image_id,
            file_name: &it.file_name,
            permutation: it.permutation,
            trace: &it.trace,
        })
        .collect();
    let path = dir.join("traces.json");
    let json = serde_json::to_string_pretty(&entries).expect("traces serialize");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))
}

/// Knob varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Capacity,
    Placement,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capacity" => Ok(Self::Capacity),
            "placement" => Ok(Self::Placement),
            _ => Err(Error::InvalidConfig(format!("unknown sweep parameter '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: usize,
    pub input_diversity: f64,
    pub output_diversity: f64,
}

/// Runs [`augment_batch`] once per value from a fresh state and reports style
/// diversity before and after restyling.
pub fn sweep(
    items: &[(ImageRgb, AnnotationSet)],
    base: &PipelineConfig,
    param: SweepParam,
    values: &[usize],
) -> Result<Vec<(SweepPoint, AugmentOutput)>> {
    values
        .iter()
        .map(|&value| {
            let mut cfg = base.clone();
            match param {
                SweepParam::Capacity => cfg.dsm.capacity = value,
                SweepParam::Placement => cfg.dsm.placement = value,
            }
            let mut state = cfg.dsm.config().new_state()?;
            let out = augment_batch(items, &cfg, &mut state)?;
            let point = SweepPoint {
                value,
                input_diversity: diversity_or_zero(&out.input_styles)?,
                output_diversity: diversity_or_zero(&out.output_styles)?,
            };
            Ok((point, out))
        })
        .collect()
}

fn diversity_or_zero(table: &StyleTable) -> Result<f64> {
    if table.is_empty() {
        Ok(0.0)
    } else {
        style_diversity(table.styles())
    }
}
