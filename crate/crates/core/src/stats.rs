//! Channel and region style statistics, AdaIN restyling, and the split/splice
//! machinery that cuts a feature map into background and object patches.
//!
//! A style is the per-channel mean and ε-regularized standard deviation of a
//! set of cells:
//!
//! ```text
//! mu_i    = 1/A * sum_a f[i, a]
//! sigma_i = sqrt(1/A * sum_a (f[i, a] - mu_i)^2 + eps)
//! ```
//!
//! Sums are accumulated in `f64` over the cells in row-major order and the
//! results rounded to `f32`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{AnnotationSet, BoundingBox, FeatureMap};

/// Regularizer added to the variance before taking the square root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f32", into = "f32")]
pub struct Epsilon(f32);

impl Epsilon {
    pub const DEFAULT: Epsilon = Epsilon(1e-5);

    pub fn new(value: f32) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {value}"
            )))
        }
    }

    pub fn value(self) -> f32 {
        self.0
    }
}

impl Default for Epsilon {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f32> for Epsilon {
    type Error = Error;
    fn try_from(v: f32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Epsilon> for f32 {
    fn from(e: Epsilon) -> f32 {
        e.0
    }
}

/// Where a style was measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StyleKind {
    Object,
    Background,
    /// Whole-map statistics, not tied to a region.
    Image,
}

impl StyleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StyleKind::Object => "object",
            StyleKind::Background => "background",
            StyleKind::Image => "image",
        }
    }
}

impl std::str::FromStr for StyleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "object" => Ok(StyleKind::Object),
            "background" => Ok(StyleKind::Background),
            "image" => Ok(StyleKind::Image),
            _ => Err(Error::format(format!("unknown style kind '{s}'"))),
        }
    }
}

/// Per-channel `(mu, sigma)` of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleVector {
    pub mu: Vec<f32>,
    pub sigma: Vec<f32>,
    pub kind: StyleKind,
}

impl StyleVector {
    /// Validates equal lengths, finite values and positive sigmas.
    pub fn new(mu: Vec<f32>, sigma: Vec<f32>, kind: StyleKind) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::shape(format!(
                "style has {} means but {} deviations",
                mu.len(),
                sigma.len()
            )));
        }
        if mu.iter().chain(&sigma).any(|v| !v.is_finite()) {
            return Err(Error::format("style contains non-finite values"));
        }
        if sigma.iter().any(|&s| s <= 0.0) {
            return Err(Error::format("style deviations must be positive"));
        }
        Ok(Self { mu, sigma, kind })
    }

    pub fn channels(&self) -> usize {
        self.mu.len()
    }

    pub fn with_kind(mut self, kind: StyleKind) -> Self {
        self.kind = kind;
        self
    }

    /// `mu ‖ sigma` as one `f64` vector.
    pub fn concat(&self) -> Vec<f64> {
        self.mu.iter().chain(&self.sigma).map(|&v| f64::from(v)).collect()
    }

    /// Same statistics, ignoring `kind`, compared bitwise.
    pub fn same_stats(&self, other: &StyleVector) -> bool {
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        bits(&self.mu) == bits(&other.mu) && bits(&self.sigma) == bits(&other.sigma)
    }
}

/// Half-open cell rectangle `[row0, row1) x [col0, col1)` in feature
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

impl CellRect {
    pub fn new(row0: usize, row1: usize, col0: usize, col1: usize) -> Self {
        Self {
            row0,
            row1,
            col0,
            col1,
        }
    }

    pub fn area(&self) -> usize {
        self.row1.saturating_sub(self.row0) * self.col1.saturating_sub(self.col0)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row1).contains(&row) && (self.col0..self.col1).contains(&col)
    }

    /// Flat `row * width + col` indices, row-major.
    pub fn cells(&self, width: usize) -> impl Iterator<Item = usize> + Clone + '_ {
        (self.row0..self.row1).flat_map(move |r| (self.col0..self.col1).map(move |c| r * width + c))
    }
}

/// A set of cells of one `H x W` plane.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Full,
    Rect(CellRect),
    /// Row-major `H x W` boolean mask.
    Mask(&'a [bool]),
}

impl Region<'_> {
    fn cells(&self, height: usize, width: usize) -> Result<Vec<usize>> {
        let cells: Vec<usize> = match *self {
            Region::Full => (0..height * width).collect(),
            Region::Rect(r) => {
                if r.row1 > height || r.col1 > width {
                    return Err(Error::shape(format!(
                        "rectangle {r:?} exceeds {height}x{width} grid"
                    )));
                }
                r.cells(width).collect()
            }
            Region::Mask(m) => {
                if m.len() != height * width {
                    return Err(Error::shape(format!(
                        "mask of {} cells for {height}x{width} grid",
                        m.len()
                    )));
                }
                m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
            }
        };
        Ok(cells)
    }
}

fn moments(values: impl Iterator<Item = f32> + Clone, eps: Epsilon) -> (f32, f32) {
    let (sum, n) = values
        .clone()
        .fold((0f64, 0usize), |(s, n), v| (s + f64::from(v), n + 1));
    let n = n as f64;
    let mean = sum / n;
    let var = values.map(|v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
    (mean as f32, (var + f64::from(eps.value())).sqrt() as f32)
}

fn style_of_cells(fm: &FeatureMap, cells: &[usize], eps: Epsilon, kind: StyleKind) -> StyleVector {
    let (mu, sigma) = (0..fm.channels())
        .map(|c| {
            let plane = fm.channel(c);
            moments(cells.iter().map(|&i| plane[i]), eps)
        })
        .unzip();
    StyleVector { mu, sigma, kind }
}

/// Whole-map channel statistics.
pub fn channel_stats(fm: &FeatureMap, eps: Epsilon) -> Result<StyleVector> {
    region_stats(fm, Region::Full, eps)
}

/// Statistics over exactly the cells of `region`.
pub fn region_stats(fm: &FeatureMap, region: Region<'_>, eps: Epsilon) -> Result<StyleVector> {
    let cells = region.cells(fm.height(), fm.width())?;
    if cells.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(style_of_cells(fm, &cells, eps, StyleKind::Image))
}

/// Cell values of one region, laid out `C x A` (channel-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    channels: usize,
    data: Vec<f32>,
}

impl Patch {
    pub fn new(channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || !data.len().is_multiple_of(channels) {
            return Err(Error::shape(format!(
                "{} values do not split into {channels} channels",
                data.len()
            )));
        }
        Ok(Self { channels, data })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Cells per channel.
    pub fn area(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let a = self.area();
        &self.data[c * a..(c + 1) * a]
    }

    /// Statistics of this patch; identical to `region_stats` of the region it
    /// was gathered from.
    pub fn stats(&self, eps: Epsilon, kind: StyleKind) -> Result<StyleVector> {
        if self.area() == 0 {
            return Err(Error::EmptyRegion);
        }
        let (mu, sigma) = (0..self.channels)
            .map(|c| moments(self.channel(c).iter().copied(), eps))
            .unzip();
        Ok(StyleVector { mu, sigma, kind })
    }
}

/// Restyles `patch` from `own` to `target`.
///
/// Per channel, with `scale = target.sigma / own.sigma` and
/// `shift = target.mu - own.mu * scale` evaluated in `f64`,
/// `out = f32(f64(x) * scale + shift)`. This equals
/// `target.sigma * (x - own.mu) / own.sigma + target.mu` and is exactly the
/// identity when `target == own`.
pub fn adain(patch: &Patch, own: &StyleVector, target: &StyleVector) -> Result<Patch> {
    if own.channels() != patch.channels() || target.channels() != patch.channels() {
        return Err(Error::shape(format!(
            "patch has {} channels, own style {}, target style {}",
            patch.channels(),
            own.channels(),
            target.channels()
        )));
    }
    let area = patch.area();
    let mut data = Vec::with_capacity(patch.data.len());
    for c in 0..patch.channels {
        let scale = f64::from(target.sigma[c]) / f64::from(own.sigma[c]);
        let shift = f64::from(target.mu[c]) - f64::from(own.mu[c]) * scale;
        data.extend(
            patch.data[c * area..(c + 1) * area]
                .iter()
                .map(|&x| (f64::from(x) * scale + shift) as f32),
        );
    }
    Ok(Patch {
        channels: patch.channels,
        data,
    })
}

/// One retained object box at feature resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ObjectRegion {
    pub rect: CellRect,
    /// Position of the source box in the annotation set.
    pub annotation_index: usize,
}

/// Background mask plus object rectangles on an `H x W` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    height: usize,
    width: usize,
    background_mask: Vec<bool>,
    objects: Vec<ObjectRegion>,
    dropped: Vec<usize>,
}

impl RegionPartition {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn background_mask(&self) -> &[bool] {
        &self.background_mask
    }

    pub fn objects(&self) -> &[ObjectRegion] {
        &self.objects
    }

    /// Annotation indices of boxes that had no cells at feature resolution.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn background_area(&self) -> usize {
        self.background_mask.iter().filter(|&&b| b).count()
    }

    pub fn object_areas(&self) -> Vec<usize> {
        self.objects.iter().map(|o| o.rect.area()).collect()
    }

    /// Debug dump. The background mask is run-length encoded as
    /// `[start, length]` runs of `true` cells in row-major order.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < self.background_mask.len() {
            if self.background_mask[i] {
                let start = i;
                while i < self.background_mask.len() && self.background_mask[i] {
                    i += 1;
                }
                runs.push([start, i - start]);
            } else {
                i += 1;
            }
        }
        serde_json::json!({
            "height": self.height,
            "width": self.width,
            "background_area": self.background_area(),
            "background_runs": runs,
            "objects": self.objects.iter().map(|o| serde_json::json!({
                "annotation_index": o.annotation_index,
                "rect": o.rect,
                "area": o.rect.area(),
            })).collect::<Vec<_>>(),
            "dropped": self.dropped,
        })
    }
}

/// Partition for an annotation set whose boxes are in image pixels.
pub fn build_partition(
    ann: &AnnotationSet,
    image_dims: (usize, usize),
    feature_dims: (usize, usize),
) -> RegionPartition {
    let part = partition_from_boxes(&ann.boxes, image_dims, feature_dims);
    for &i in part.dropped() {
        log::warn!(
            "image {}: box {i} {:?} has no cells at {}x{} feature resolution, dropped",
            ann.image_id,
            ann.boxes[i],
            feature_dims.0,
            feature_dims.1
        );
    }
    part
}

/// Scales boxes by `(H/h, W/w)`, rounds outward (floor the min corner, ceil
/// the max corner) and clips to the grid. Boxes left without cells are
/// dropped and listed in [`RegionPartition::dropped`]. Pass
/// `image_dims == feature_dims` for boxes already in feature coordinates.
pub fn partition_from_boxes(
    boxes: &[BoundingBox],
    image_dims: (usize, usize),
    feature_dims: (usize, usize),
) -> RegionPartition {
    let (h, w) = (image_dims.0 as f64, image_dims.1 as f64);
    let (fh, fw) = feature_dims;
    let sy = fh as f64 / h;
    let sx = fw as f64 / w;
    let clip = |v: f64, hi: usize| -> usize {
        if v.is_nan() || v <= 0.0 {
            0
        } else {
            (v as usize).min(hi)
        }
    };
    let mut objects = Vec::new();
    let mut dropped = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        if !(b.w > 0.0 && b.h > 0.0) {
            dropped.push(i);
            continue;
        }
        let rect = CellRect::new(
            clip((b.y * sy).floor(), fh),
            clip(((b.y + b.h) * sy).ceil(), fh),
            clip((b.x * sx).floor(), fw),
            clip(((b.x + b.w) * sx).ceil(), fw),
        );
        if rect.area() == 0 {
            dropped.push(i);
        } else {
            objects.push(ObjectRegion {
                rect,
                annotation_index: i,
            });
        }
    }
    let mut background_mask = vec![true; fh * fw];
    for o in &objects {
        for cell in o.rect.cells(fw) {
            background_mask[cell] = false;
        }
    }
    RegionPartition {
        height: fh,
        width: fw,
        background_mask,
        objects,
        dropped,
    }
}

fn check_grid(fm: &FeatureMap, part: &RegionPartition) -> Result<()> {
    if (fm.height(), fm.width()) != (part.height, part.width) {
        return Err(Error::shape(format!(
            "partition is {}x{} but feature map is {}x{}",
            part.height,
            part.width,
            fm.height(),
            fm.width()
        )));
    }
    Ok(())
}

fn gather(fm: &FeatureMap, cells: impl Iterator<Item = usize> + Clone) -> Patch {
    let mut data = Vec::new();
    for c in 0..fm.channels() {
        let plane = fm.channel(c);
        data.extend(cells.clone().map(|i| plane[i]));
    }
    Patch {
        channels: fm.channels(),
        data,
    }
}

/// Cuts `fm` into `[background, object_1, ..]`. Every patch lists its cells in
/// row-major order; overlapping objects each get their full rectangle.
pub fn split(fm: &FeatureMap, part: &RegionPartition) -> Result<Vec<Patch>> {
    check_grid(fm, part)?;
    let background = part
        .background_mask
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i);
    let mut patches = vec![gather(fm, background)];
    for o in &part.objects {
        patches.push(gather(fm, o.rect.cells(part.width)));
    }
    Ok(patches)
}

/// Writes patches back to their cells: background first, then objects in
/// order, so on overlap the later object wins.
pub fn splice(patches: &[Patch], part: &RegionPartition, channels: usize) -> Result<FeatureMap> {
    if patches.len() != part.objects.len() + 1 {
        return Err(Error::shape(format!(
            "{} patches for a partition with {} regions",
            patches.len(),
            part.objects.len() + 1
        )));
    }
    let areas = std::iter::once(part.background_area()).chain(part.object_areas());
    for (k, (p, a)) in patches.iter().zip(areas).enumerate() {
        if p.channels != channels || p.area() != a {
            return Err(Error::shape(format!(
                "patch {k} is {}x{}, region needs {channels}x{a}",
                p.channels,
                p.area()
            )));
        }
    }
    let plane = part.height * part.width;
    let mut data = vec![0f32; channels * plane];
    let mut scatter = |patch: &Patch, cells: &mut dyn Iterator<Item = usize>| {
        let a = patch.area();
        for (k, cell) in cells.enumerate() {
            for c in 0..channels {
                data[c * plane + cell] = patch.data[c * a + k];
            }
        }
    };
    let mut background = part
        .background_mask
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i);
    scatter(&patches[0], &mut background);
    for (o, p) in part.objects.iter().zip(&patches[1..]) {
        scatter(p, &mut o.rect.cells(part.width));
    }
    FeatureMap::new(channels, part.height, part.width, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;
    use proptest::prelude::*;

    const EPS: Epsilon = Epsilon::DEFAULT;

    fn random_map(seed: u64, c: usize, h: usize, w: usize) -> FeatureMap {
        let mut rng = SeededStream::new(seed);
        FeatureMap::from_fn(c, h, w, |_, _, _| (rng.next_f64() * 8.0 - 4.0) as f32).unwrap()
    }

    /// Independent double loop over (row, col) with a membership test.
    fn naive_stats(fm: &FeatureMap, member: impl Fn(usize, usize) -> bool, eps: f32) -> (Vec<f64>, Vec<f64>) {
        let mut mus = Vec::new();
        let mut sigmas = Vec::new();
        for c in 0..fm.channels() {
            let mut sum = 0.0;
            let mut n = 0.0;
            for y in 0..fm.height() {
                for x in 0..fm.width() {
                    if member(y, x) {
                        sum += f64::from(fm.get(c, y, x));
                        n += 1.0;
                    }
                }
            }
            let mu = sum / n;
            let mut ss = 0.0;
            for y in 0..fm.height() {
                for x in 0..fm.width() {
                    if member(y, x) {
                        ss += (f64::from(fm.get(c, y, x)) - mu).powi(2);
                    }
                }
            }
            mus.push(mu);
            sigmas.push((ss / n + f64::from(eps)).sqrt());
        }
        (mus, sigmas)
    }

    #[test]
    fn constant_map_sigma_is_sqrt_eps() {
        let fm = FeatureMap::new(1, 2, 2, vec![5.0; 4]).unwrap();
        let s = channel_stats(&fm, EPS).unwrap();
        assert_eq!(s.mu, vec![5.0]);
        assert!((s.sigma[0] - 3.16228e-3).abs() < 1e-8);
    }

    #[test]
    fn one_to_four() {
        let fm = FeatureMap::new(1, 1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = channel_stats(&fm, EPS).unwrap();
        assert_eq!(s.mu, vec![2.5]);
        // sqrt(1.25 + 1e-5)
        assert!((f64::from(s.sigma[0]) - 1.118_038_460_876_905_6).abs() < 1e-6);
    }

    #[test]
    fn random_tensor_matches_double_loop() {
        let fm = random_map(11, 16, 32, 32);
        let s = channel_stats(&fm, EPS).unwrap();
        let (mu, sigma) = naive_stats(&fm, |_, _| true, EPS.value());
        for c in 0..16 {
            assert!((f64::from(s.mu[c]) - mu[c]).abs() <= 1e-5 * mu[c].abs());
            assert!((f64::from(s.sigma[c]) - sigma[c]).abs() <= 1e-5 * sigma[c]);
        }
    }

    #[test]
    fn full_region_equals_channel_stats_bitwise() {
        let fm = random_map(12, 3, 7, 5);
        let a = channel_stats(&fm, EPS).unwrap();
        let b = region_stats(&fm, Region::Rect(CellRect::new(0, 7, 0, 5)), EPS).unwrap();
        let mask = vec![true; 35];
        let c = region_stats(&fm, Region::Mask(&mask), EPS).unwrap();
        assert!(a.same_stats(&b) && a.same_stats(&c));
    }

    #[test]
    fn mask_of_two_cells() {
        let fm = FeatureMap::new(1, 2, 2, vec![1.0, 9.0, 9.0, 3.0]).unwrap();
        let mask = [true, false, false, true];
        let s = region_stats(&fm, Region::Mask(&mask), EPS).unwrap();
        assert_eq!(s.mu, vec![2.0]);
        assert_eq!(s.sigma, vec![(1.0f64 + 1e-5).sqrt() as f32]);
    }

    #[test]
    fn empty_region() {
        let fm = random_map(13, 2, 3, 3);
        let mask = [false; 9];
        assert!(matches!(
            region_stats(&fm, Region::Mask(&mask), EPS),
            Err(Error::EmptyRegion)
        ));
        assert!(matches!(
            region_stats(&fm, Region::Rect(CellRect::new(1, 1, 0, 3)), EPS),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn adain_identity_and_zeroing() {
        let p = Patch::new(2, vec![0.3, -1.7, 2.25, 9.5, 1.0, 1.5, -3.0, 7.125]).unwrap();
        let own = p.stats(EPS, StyleKind::Object).unwrap();
        assert_eq!(adain(&p, &own, &own).unwrap(), p);

        let flat = Patch::new(1, vec![5.0; 6]).unwrap();
        let own = flat.stats(EPS, StyleKind::Object).unwrap();
        let target = StyleVector::new(vec![0.0], vec![1.0], StyleKind::Background).unwrap();
        assert!(adain(&flat, &own, &target)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn adain_one_to_four() {
        let p = Patch::new(1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let own = p.stats(EPS, StyleKind::Object).unwrap();
        let target = StyleVector::new(vec![10.0], vec![2.0], StyleKind::Background).unwrap();
        let out = adain(&p, &own, &target).unwrap();
        // 2 * (x - 2.5) / sqrt(1.25 + 1e-5) + 10
        let expected = [7.316_729_16, 9.105_576_39, 10.894_423_61, 12.683_270_84];
        for (o, e) in out.data().iter().zip(expected) {
            assert!((f64::from(*o) - e).abs() < 1e-4, "{o} vs {e}");
        }
    }

    #[test]
    fn adain_channel_mismatch() {
        let p = Patch::new(2, vec![0.0; 4]).unwrap();
        let s = StyleVector::new(vec![0.0], vec![1.0], StyleKind::Object).unwrap();
        assert!(matches!(adain(&p, &s, &s), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn stride_four_partition() {
        let ann = AnnotationSet::new(1, "x", 128, 128).with_boxes([BoundingBox::new(32.0, 32.0, 64.0, 64.0)]);
        let part = build_partition(&ann, (128, 128), (32, 32));
        assert_eq!(part.objects()[0].rect, CellRect::new(8, 24, 8, 24));
        assert_eq!(part.object_areas(), vec![256]);
        assert_eq!(part.background_area(), 768);
    }

    #[test]
    fn no_boxes_means_all_background() {
        let part = build_partition(&AnnotationSet::new(1, "x", 64, 64), (64, 64), (16, 16));
        assert!(part.background_mask().iter().all(|&b| b));
        assert_eq!(part.background_area(), 256);
    }

    #[test]
    fn tiny_box_keeps_one_cell() {
        let part = partition_from_boxes(&[BoundingBox::new(0.0, 0.0, 1.0, 1.0)], (64, 64), (16, 16));
        assert_eq!(part.objects()[0].rect, CellRect::new(0, 1, 0, 1));
        assert!(part.dropped().is_empty());
    }

    #[test]
    fn outside_and_degenerate_boxes_dropped() {
        let boxes = [
            BoundingBox::new(70.0, 0.0, 5.0, 5.0),
            BoundingBox::new(0.0, 64.0, 5.0, 5.0),
            BoundingBox::new(1.0, 1.0, 0.0, 3.0),
            BoundingBox::new(-10.0, -10.0, 12.0, 12.0),
        ];
        let part = partition_from_boxes(&boxes, (64, 64), (16, 16));
        assert_eq!(part.dropped(), &[0, 1, 2]);
        assert_eq!(part.objects()[0].rect, CellRect::new(0, 1, 0, 1));
        assert_eq!(part.objects()[0].annotation_index, 3);
    }

    #[test]
    fn zero_area_duplicates_do_not_change_regions() {
        let real = [
            BoundingBox::new(4.0, 8.0, 20.0, 10.0),
            BoundingBox::new(30.0, 30.0, 8.0, 8.0),
        ];
        let mut noisy = real.to_vec();
        noisy.insert(1, BoundingBox::new(4.0, 8.0, 0.0, 10.0));
        noisy.push(BoundingBox::new(4.0, 8.0, 0.0, 0.0));
        let a = partition_from_boxes(&real, (64, 64), (16, 16));
        let b = partition_from_boxes(&noisy, (64, 64), (16, 16));
        assert_eq!(a.background_mask(), b.background_mask());
        let rects = |p: &RegionPartition| p.objects().iter().map(|o| o.rect).collect::<Vec<_>>();
        assert_eq!(rects(&a), rects(&b));
    }

    #[test]
    fn split_without_boxes_is_flattened_map() {
        let fm = random_map(14, 3, 4, 5);
        let part = partition_from_boxes(&[], (4, 5), (4, 5));
        let patches = split(&fm, &part).unwrap();
        assert_eq!(patches.len(), 1);
        assert_eq!(patches[0].data(), fm.data());
    }

    #[test]
    fn split_four_by_four_one_box() {
        // Cell (c, y, x) holds c * 100 + y * 4 + x.
        let fm = FeatureMap::from_fn(2, 4, 4, |c, y, x| (c * 100 + y * 4 + x) as f32).unwrap();
        let part = partition_from_boxes(&[BoundingBox::new(1.0, 1.0, 2.0, 2.0)], (4, 4), (4, 4));
        let patches = split(&fm, &part).unwrap();
        let bg: Vec<f32> = [0, 1, 2, 3, 4, 7, 8, 11, 12, 13, 14, 15]
            .iter()
            .flat_map(|&i| [i as f32])
            .chain(
                [0, 1, 2, 3, 4, 7, 8, 11, 12, 13, 14, 15]
                    .iter()
                    .map(|&i| (100 + i) as f32),
            )
            .collect();
        assert_eq!(patches[0].area(), 12);
        assert_eq!(patches[0].data(), bg.as_slice());
        assert_eq!(patches[1].area(), 4);
        assert_eq!(
            patches[1].data(),
            &[5.0, 6.0, 9.0, 10.0, 105.0, 106.0, 109.0, 110.0]
        );
    }

    #[test]
    fn overlap_last_write_wins() {
        let fm = FeatureMap::zeros(1, 4, 4);
        let boxes = [
            BoundingBox::new(0.0, 0.0, 3.0, 3.0),
            BoundingBox::new(2.0, 2.0, 2.0, 2.0),
        ];
        let part = partition_from_boxes(&boxes, (4, 4), (4, 4));
        let patches = split(&fm, &part).unwrap();
        let filled = vec![
            Patch::new(1, vec![0.0; patches[0].area()]).unwrap(),
            Patch::new(1, vec![1.0; 9]).unwrap(),
            Patch::new(1, vec![2.0; 4]).unwrap(),
        ];
        let out = splice(&filled, &part, 1).unwrap();
        assert_eq!(out.get(0, 2, 2), 2.0);
        assert_eq!(out.get(0, 1, 1), 1.0);
        assert_eq!(out.get(0, 3, 3), 2.0);
        assert_eq!(out.get(0, 0, 3), 0.0);
    }

    #[test]
    fn splice_rejects_wrong_areas() {
        let part = partition_from_boxes(&[BoundingBox::new(0.0, 0.0, 2.0, 2.0)], (4, 4), (4, 4));
        let bad = vec![
            Patch::new(1, vec![0.0; 12]).unwrap(),
            Patch::new(1, vec![0.0; 3]).unwrap(),
        ];
        assert!(matches!(splice(&bad, &part, 1), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            splice(&bad[..1], &part, 1),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn debug_json_run_lengths() {
        let part = partition_from_boxes(&[BoundingBox::new(1.0, 0.0, 2.0, 1.0)], (2, 4), (2, 4));
        let j = part.to_debug_json();
        assert_eq!(j["background_runs"], serde_json::json!([[0, 1], [3, 5]]));
        assert_eq!(j["background_area"], 6);
    }

    fn disjoint_boxes(h: usize, w: usize) -> impl Strategy<Value = Vec<BoundingBox>> {
        // Boxes confined to separate vertical bands never overlap.
        prop::collection::vec((0usize..4, 1usize..4, 0usize..4, 1usize..4), 0..4).prop_map(move |raw| {
            let band = w / 4;
            raw.into_iter()
                .enumerate()
                .map(|(i, (r0, rh, c0, cw))| {
                    let y = r0.min(h - 1);
                    let x = i * band + c0.min(band - 1);
                    let bw = cw.min(band - c0.min(band - 1));
                    BoundingBox::new(x as f64, y as f64, bw as f64, rh.min(h - y) as f64)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn split_splice_identity_on_disjoint(seed in any::<u64>(), boxes in disjoint_boxes(6, 16)) {
            let fm = random_map(seed, 3, 6, 16);
            let part = partition_from_boxes(&boxes, (6, 16), (6, 16));
            let out = splice(&split(&fm, &part).unwrap(), &part, 3).unwrap();
            prop_assert!(out.bit_eq(&fm));
        }

        #[test]
        fn splice_places_patch_values(seed in any::<u64>(), boxes in disjoint_boxes(6, 16)) {
            let part = partition_from_boxes(&boxes, (6, 16), (6, 16));
            let mut rng = SeededStream::new(seed);
            let mut patches = vec![];
            let areas: Vec<usize> = std::iter::once(part.background_area()).chain(part.object_areas()).collect();
            for &a in &areas {
                patches.push(Patch::new(2, (0..2 * a).map(|_| rng.next_f64() as f32).collect()).unwrap());
            }
            let out = splice(&patches, &part, 2).unwrap();
            // cell-by-cell: find the owning region and its position in that region's row-major list
            for y in 0..6 {
                for x in 0..16 {
                    let (k, pos) = match part.objects().iter().position(|o| o.rect.contains(y, x)) {
                        Some(i) => {
                            let r = part.objects()[i].rect;
                            (i + 1, (y - r.row0) * (r.col1 - r.col0) + (x - r.col0))
                        }
                        None => (0, part.background_mask()[..y * 16 + x].iter().filter(|&&b| b).count()),
                    };
                    for c in 0..2 {
                        prop_assert_eq!(out.get(c, y, x), patches[k].channel(c)[pos]);
                    }
                }
            }
        }

        #[test]
        fn sigma_never_below_sqrt_eps(seed in any::<u64>(), eps in 1e-8f32..1.0, constant in any::<bool>()) {
            let fm = if constant {
                FeatureMap::new(2, 3, 3, vec![1.25; 18]).unwrap()
            } else {
                random_map(seed, 2, 3, 3)
            };
            let eps = Epsilon::new(eps).unwrap();
            let s = channel_stats(&fm, eps).unwrap();
            let floor = f64::from(eps.value()).sqrt() as f32;
            prop_assert!(s.sigma.iter().all(|&v| v >= floor));
        }

        #[test]
        fn adain_moves_mean_and_scales_std(
            seed in any::<u64>(),
            area in 2usize..200,
            tmu in -10.0f32..10.0,
            tsigma in 0.1f32..5.0,
        ) {
            let mut rng = SeededStream::new(seed);
            let data: Vec<f32> = (0..area).map(|_| (rng.next_f64() * 20.0 - 10.0) as f32).collect();
            let p = Patch::new(1, data).unwrap();
            let own = p.stats(EPS, StyleKind::Object).unwrap();
            let target = StyleVector::new(vec![tmu], vec![tsigma], StyleKind::Background).unwrap();
            let out = adain(&p, &own, &target).unwrap();
            let mean = |v: &[f32]| v.iter().map(|&x| f64::from(x)).sum::<f64>() / v.len() as f64;
            let std = |v: &[f32]| {
                let m = mean(v);
                (v.iter().map(|&x| (f64::from(x) - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
            };
            prop_assert!((mean(out.data()) - f64::from(tmu)).abs() <= 1e-5);
            let expected = f64::from(tsigma) * std(p.data()) / f64::from(own.sigma[0]);
            prop_assert!((std(out.data()) - expected).abs() <= 1e-5 * expected);
        }
    }
}
