//! Dual style memory.
//!
//! Two bounded FIFO queues collect object and background styles across the
//! whole image stream. For each image the feature map is cut into a
//! background patch and one patch per object box; each patch, in the order
//! background then objects,
//!
//! 1. has its style measured,
//! 2. pushes that style into the memory of its own kind,
//! 3. draws a target style from the selected memory (the opposite kind under
//!    [`ExchangePolicy::Exchange`]),
//! 4. is restyled to the target with AdaIN, or left untouched if the memory
//!    was empty,
//!
//! and the patches are spliced back in place.
//!
//! Randomness consumed per call, in order: one gate draw
//! ([`SeededStream::bernoulli`] with the apply probability), then for every
//! processed patch one [`SeededStream::below`] draw if its target memory is
//! non-empty.

mod memory;
mod mixstyle;
mod snapshot;

pub use memory::{memory_push, memory_sample, StyleMemory, DEFAULT_CAPACITY};
pub use mixstyle::{mixstyle, mixstyle_batch, mixstyle_random, MIXSTYLE_ALPHA};
pub use snapshot::{restore_state, sidecar_path, snapshot_state};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{AnnotationSet, FeatureMap};
use crate::rng::SeededStream;
use crate::stats::{
    adain, build_partition, partition_from_boxes, splice, split, Epsilon, RegionPartition, StyleKind,
    StyleVector,
};

/// Which memory a patch draws its target style from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExchangePolicy {
    /// Objects draw background styles and the background draws object styles.
    #[default]
    Exchange,
    /// Every patch draws from the memory of its own kind.
    NoExchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryLayout {
    /// Separate object and background queues.
    #[default]
    Dual,
    /// One queue holds every style.
    Shared,
}

impl std::str::FromStr for ExchangePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exchange" => Ok(Self::Exchange),
            "no-exchange" => Ok(Self::NoExchange),
            _ => Err(Error::InvalidConfig(format!("unknown exchange policy '{s}'"))),
        }
    }
}

impl std::str::FromStr for MemoryLayout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual" => Ok(Self::Dual),
            "shared" => Ok(Self::Shared),
            _ => Err(Error::InvalidConfig(format!("unknown memory layout '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsmConfig {
    pub exchange: ExchangePolicy,
    pub layout: MemoryLayout,
    pub capacity: usize,
    /// Probability that a call restyles the map at all.
    pub apply_probability: f64,
    pub eps: Epsilon,
}

impl Default for DsmConfig {
    fn default() -> Self {
        Self {
            exchange: ExchangePolicy::Exchange,
            layout: MemoryLayout::Dual,
            capacity: DEFAULT_CAPACITY,
            apply_probability: 1.0,
            eps: Epsilon::DEFAULT,
        }
    }
}

impl DsmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("memory capacity must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.apply_probability) {
            return Err(Error::InvalidConfig(format!(
                "apply probability must lie in [0, 1], got {}",
                self.apply_probability
            )));
        }
        Ok(())
    }

    /// Fresh state matching this configuration.
    pub fn new_state(&self) -> Result<DsmState> {
        self.validate()?;
        DsmState::new(self.layout, self.capacity)
    }
}

/// Names one queue of a [`DsmState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryId {
    Obj,
    Back,
    Shared,
}

impl MemoryId {
    pub fn as_str(self) -> &'static str {
        match self {
            MemoryId::Obj => "obj",
            MemoryId::Back => "back",
            MemoryId::Shared => "shared",
        }
    }
}

/// The style memories carried from image to image. Single writer: calls that
/// mutate one state must be serialized.
#[derive(Debug, Clone, PartialEq)]
pub enum DsmState {
    Dual { obj: StyleMemory, back: StyleMemory },
    Shared(StyleMemory),
}

impl DsmState {
    pub fn new(layout: MemoryLayout, capacity: usize) -> Result<Self> {
        Ok(match layout {
            MemoryLayout::Dual => DsmState::Dual {
                obj: StyleMemory::new(capacity)?,
                back: StyleMemory::new(capacity)?,
            },
            MemoryLayout::Shared => DsmState::Shared(StyleMemory::new(capacity)?),
        })
    }

    pub fn layout(&self) -> MemoryLayout {
        match self {
            DsmState::Dual { .. } => MemoryLayout::Dual,
            DsmState::Shared(_) => MemoryLayout::Shared,
        }
    }

    pub fn capacity(&self) -> usize {
        match self {
            DsmState::Dual { obj, .. } => obj.capacity(),
            DsmState::Shared(m) => m.capacity(),
        }
    }

    /// Memory ids in snapshot order.
    pub fn memory_ids(&self) -> &'static [MemoryId] {
        match self {
            DsmState::Dual { .. } => &[MemoryId::Obj, MemoryId::Back],
            DsmState::Shared(_) => &[MemoryId::Shared],
        }
    }

    /// The queue behind `id`. In the shared layout every id addresses the
    /// single queue.
    pub fn memory(&self, id: MemoryId) -> &StyleMemory {
        match (self, id) {
            (DsmState::Dual { obj, .. }, MemoryId::Obj) => obj,
            (DsmState::Dual { back, .. }, MemoryId::Back) => back,
            (DsmState::Dual { obj, .. }, MemoryId::Shared) => obj,
            (DsmState::Shared(m), _) => m,
        }
    }

    pub fn memory_mut(&mut self, id: MemoryId) -> &mut StyleMemory {
        match (self, id) {
            (DsmState::Dual { obj, .. }, MemoryId::Obj | MemoryId::Shared) => obj,
            (DsmState::Dual { back, .. }, MemoryId::Back) => back,
            (DsmState::Shared(m), _) => m,
        }
    }

    /// Queue that stores styles of `kind`.
    pub fn home_of(&self, kind: StyleKind) -> MemoryId {
        match (self, kind) {
            (DsmState::Shared(_), _) => MemoryId::Shared,
            (DsmState::Dual { .. }, StyleKind::Object) => MemoryId::Obj,
            (DsmState::Dual { .. }, _) => MemoryId::Back,
        }
    }

    /// Queue a patch of `kind` draws its target from.
    pub fn source_for(&self, kind: StyleKind, policy: ExchangePolicy) -> MemoryId {
        match (self, policy) {
            (DsmState::Shared(_), _) => MemoryId::Shared,
            (_, ExchangePolicy::NoExchange) => self.home_of(kind),
            (_, ExchangePolicy::Exchange) => match self.home_of(kind) {
                MemoryId::Obj => MemoryId::Back,
                _ => MemoryId::Obj,
            },
        }
    }

    /// Pushes a style into the queue of its own kind.
    pub fn push(&mut self, style: StyleVector) {
        let id = self.home_of(style.kind);
        self.memory_mut(id).push(style);
    }

    fn check(&self, cfg: &DsmConfig) -> Result<()> {
        if self.layout() != cfg.layout || self.capacity() != cfg.capacity {
            return Err(Error::InvalidConfig(format!(
                "state is {:?} with capacity {}, configuration expects {:?} with capacity {}",
                self.layout(),
                self.capacity(),
                cfg.layout,
                cfg.capacity
            )));
        }
        Ok(())
    }
}

/// Which patch a trace record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PatchKind {
    Background,
    Object {
        /// 1-based position among retained objects.
        index: usize,
        annotation_index: usize,
    },
}

impl PatchKind {
    pub fn style_kind(self) -> StyleKind {
        match self {
            PatchKind::Background => StyleKind::Background,
            PatchKind::Object { .. } => StyleKind::Object,
        }
    }

    /// `background` or `object_<index>`.
    pub fn label(self) -> String {
        match self {
            PatchKind::Background => "background".to_string(),
            PatchKind::Object { index, .. } => format!("object_{index}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub patch: PatchKind,
    pub area: usize,
    /// Style of the patch before restyling.
    pub pushed: StyleVector,
    pub pushed_to: MemoryId,
    pub source: MemoryId,
    /// Index drawn from `source` (0 = oldest), or `None` when `source` was
    /// empty and the patch was left unchanged.
    pub drawn_index: Option<usize>,
    pub target: Option<StyleVector>,
}

impl PatchRecord {
    pub fn is_fallback(&self) -> bool {
        self.drawn_index.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentationTrace {
    /// The gate decided not to restyle this call.
    pub skipped: bool,
    /// Objects covered every cell, so there was no background patch.
    pub background_empty: bool,
    /// Annotation indices of boxes dropped by the partition.
    pub dropped_boxes: Vec<usize>,
    pub records: Vec<PatchRecord>,
}

/// Restyles `fm`, whose annotation boxes are in image pixels of size
/// `image_dims` (`(height, width)`).
pub fn dsm_forward(
    fm: &FeatureMap,
    ann: &AnnotationSet,
    image_dims: (usize, usize),
    state: &mut DsmState,
    cfg: &DsmConfig,
    rng: &mut SeededStream,
) -> Result<(FeatureMap, AugmentationTrace)> {
    let part = build_partition(ann, image_dims, (fm.height(), fm.width()));
    dsm_forward_partition(fm, &part, state, cfg, rng)
}

/// Restyles `fm` with boxes given directly in feature cells, as
/// `(x, y, w, h)` tuples.
pub fn dsm_forward_feature_boxes(
    fm: &FeatureMap,
    boxes: &[(f64, f64, f64, f64)],
    state: &mut DsmState,
    cfg: &DsmConfig,
    rng: &mut SeededStream,
) -> Result<(FeatureMap, AugmentationTrace)> {
    let boxes: Vec<_> = boxes
        .iter()
        .map(|&(x, y, w, h)| crate::io::BoundingBox::new(x, y, w, h))
        .collect();
    let grid = (fm.height(), fm.width());
    let part = partition_from_boxes(&boxes, grid, grid);
    dsm_forward_partition(fm, &part, state, cfg, rng)
}

pub fn dsm_forward_partition(
    fm: &FeatureMap,
    part: &RegionPartition,
    state: &mut DsmState,
    cfg: &DsmConfig,
    rng: &mut SeededStream,
) -> Result<(FeatureMap, AugmentationTrace)> {
    cfg.validate()?;
    state.check(cfg)?;
    let mut trace = AugmentationTrace {
        dropped_boxes: part.dropped().to_vec(),
        ..Default::default()
    };
    if !rng.bernoulli(cfg.apply_probability) {
        trace.skipped = true;
        return Ok((fm.clone(), trace));
    }

    let mut patches = split(fm, part)?;
    let kinds =
        std::iter::once(PatchKind::Background).chain(part.objects().iter().enumerate().map(|(i, o)| {
            PatchKind::Object {
                index: i + 1,
                annotation_index: o.annotation_index,
            }
        }));
    for (patch, kind) in patches.iter_mut().zip(kinds) {
        if patch.area() == 0 {
            trace.background_empty = true;
            continue;
        }
        let own = patch.stats(cfg.eps, kind.style_kind())?;
        let pushed_to = state.home_of(own.kind);
        state.memory_mut(pushed_to).push(own.clone());
        let source = state.source_for(own.kind, cfg.exchange);
        let drawn = state.memory(source).sample(rng).map(|(s, r)| (s.clone(), r));
        let (drawn_index, target) = match drawn {
            Some((target, r)) => {
                *patch = adain(patch, &own, &target)?;
                (Some(r), Some(target))
            }
            None => (None, None),
        };
        trace.records.push(PatchRecord {
            patch: kind,
            area: patch.area(),
            pushed: own,
            pushed_to,
            source,
            drawn_index,
            target,
        });
    }
    let out = splice(&patches, part, fm.channels())?;
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{region_stats, CellRect, Region};

    fn map(seed: u64, c: usize, h: usize, w: usize) -> FeatureMap {
        let mut rng = SeededStream::new(seed);
        FeatureMap::from_fn(c, h, w, |_, _, _| (rng.next_f64() * 6.0 - 3.0) as f32).unwrap()
    }

    #[test]
    fn cold_start_is_identity() {
        let fm = map(1, 3, 8, 8);
        let cfg = DsmConfig::default();
        let mut state = cfg.new_state().unwrap();
        let ann = AnnotationSet::new(1, "a", 32, 32);
        let mut rng = SeededStream::new(5);
        let (out, trace) = dsm_forward(&fm, &ann, (32, 32), &mut state, &cfg, &mut rng).unwrap();
        assert!(out.bit_eq(&fm));
        assert_eq!(trace.records.len(), 1);
        assert!(trace.records[0].is_fallback());
        assert_eq!(state.memory(MemoryId::Back).len(), 1);
        assert!(state.memory(MemoryId::Obj).is_empty());
    }

    #[test]
    fn object_takes_seeded_background_style() {
        let fm = map(2, 4, 16, 16);
        let cfg = DsmConfig::default();
        let seeded = StyleVector::new(
            vec![3.0, -1.0, 0.5, 8.0],
            vec![0.5, 2.0, 1.0, 0.25],
            StyleKind::Background,
        )
        .unwrap();
        let rect = Region::Rect(CellRect::new(4, 12, 4, 10));
        let before = region_stats(&fm, rect, cfg.eps).unwrap();
        let raw_std = |s: &StyleVector, c: usize| (f64::from(s.sigma[c]).powi(2) - 1e-5).max(0.0).sqrt();
        let mut hits = 0;
        for seed in 0..8 {
            let mut state = cfg.new_state().unwrap();
            state.push(seeded.clone());
            let mut rng = SeededStream::new(seed);
            let (out, trace) =
                dsm_forward_feature_boxes(&fm, &[(4.0, 4.0, 6.0, 8.0)], &mut state, &cfg, &mut rng).unwrap();
            let obj = &trace.records[1];
            assert_eq!(obj.source, MemoryId::Back);
            // M_back holds [seeded, this image's background]; index 0 is the seeded style
            if obj.drawn_index != Some(0) {
                continue;
            }
            hits += 1;
            let after = region_stats(&out, rect, cfg.eps).unwrap();
            for c in 0..4 {
                assert!((after.mu[c] - seeded.mu[c]).abs() < 1e-4);
                let expected = f64::from(seeded.sigma[c]) * raw_std(&before, c) / f64::from(before.sigma[c]);
                assert!((raw_std(&after, c) - expected).abs() < 1e-4);
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn gate_zero_skips_without_touching_memory() {
        let fm = map(3, 2, 4, 4);
        let cfg = DsmConfig {
            apply_probability: 0.0,
            ..Default::default()
        };
        let mut state = cfg.new_state().unwrap();
        let mut rng = SeededStream::new(1);
        let (out, trace) =
            dsm_forward_feature_boxes(&fm, &[(0.0, 0.0, 2.0, 2.0)], &mut state, &cfg, &mut rng).unwrap();
        assert!(trace.skipped);
        assert!(out.bit_eq(&fm));
        assert!(state.memory(MemoryId::Back).is_empty());
    }

    #[test]
    fn mismatched_state_rejected() {
        let fm = map(4, 2, 4, 4);
        let cfg = DsmConfig::default();
        let mut state = DsmState::new(MemoryLayout::Shared, 100).unwrap();
        let mut rng = SeededStream::new(1);
        let err = dsm_forward_feature_boxes(&fm, &[], &mut state, &cfg, &mut rng).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        let bad = DsmConfig {
            apply_probability: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn whole_map_object_leaves_no_background() {
        let fm = map(5, 2, 4, 4);
        let cfg = DsmConfig::default();
        let mut state = cfg.new_state().unwrap();
        let mut rng = SeededStream::new(1);
        let (out, trace) =
            dsm_forward_feature_boxes(&fm, &[(0.0, 0.0, 4.0, 4.0)], &mut state, &cfg, &mut rng).unwrap();
        assert!(trace.background_empty);
        assert_eq!(trace.records.len(), 1);
        assert!(out.bit_eq(&fm));
    }

    #[test]
    fn shared_layout_routes_everything_to_one_queue() {
        let cfg = DsmConfig {
            layout: MemoryLayout::Shared,
            ..Default::default()
        };
        let state = cfg.new_state().unwrap();
        for kind in [StyleKind::Object, StyleKind::Background] {
            assert_eq!(state.home_of(kind), MemoryId::Shared);
            for p in [ExchangePolicy::Exchange, ExchangePolicy::NoExchange] {
                assert_eq!(state.source_for(kind, p), MemoryId::Shared);
            }
        }
    }
}
