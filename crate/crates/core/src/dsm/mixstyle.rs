//! MixStyle baseline: restyle a whole map towards a convex blend of its own
//! statistics and those of another map.

use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::io::FeatureMap;
use crate::rng::SeededStream;
use crate::stats::{adain, channel_stats, Epsilon, Patch, StyleKind, StyleVector};

/// Beta(α, α) concentration used when the blend weight is drawn.
pub const MIXSTYLE_ALPHA: f64 = 0.1;

/// `adain(fa, stats(fa), λ·stats(fa) + (1−λ)·stats(fb))` over whole-map
/// statistics.
pub fn mixstyle(fa: &FeatureMap, fb: &FeatureMap, lambda: f64, eps: Epsilon) -> Result<FeatureMap> {
    if fa.dims() != fb.dims() {
        return Err(Error::shape(format!(
            "mixing {:?} with {:?}",
            fa.dims(),
            fb.dims()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let sa = channel_stats(fa, eps)?;
    let sb = channel_stats(fb, eps)?;
    let blend = |a: &[f32], b: &[f32]| -> Vec<f32> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (lambda * f64::from(x) + (1.0 - lambda) * f64::from(y)) as f32)
            .collect()
    };
    let target = StyleVector {
        mu: blend(&sa.mu, &sb.mu),
        sigma: blend(&sa.sigma, &sb.sigma),
        kind: StyleKind::Image,
    };
    let patch = Patch::new(fa.channels(), fa.data().to_vec())?;
    let out = adain(&patch, &sa, &target)?;
    let (c, h, w) = fa.dims();
    FeatureMap::new(c, h, w, out.data().to_vec())
}

/// [`mixstyle`] with λ drawn from Beta(0.1, 0.1). Returns the map and λ.
pub fn mixstyle_random(
    fa: &FeatureMap,
    fb: &FeatureMap,
    eps: Epsilon,
    rng: &mut SeededStream,
) -> Result<(FeatureMap, f64)> {
    let beta = Beta::new(MIXSTYLE_ALPHA, MIXSTYLE_ALPHA).expect("valid Beta parameters");
    let lambda = beta.sample(rng).clamp(0.0, 1.0);
    Ok((mixstyle(fa, fb, lambda, eps)?, lambda))
}

/// Mixes every map of a batch with a partner chosen by a random shuffle of
/// the batch, one λ per map.
pub fn mixstyle_batch(batch: &[FeatureMap], eps: Epsilon, rng: &mut SeededStream) -> Result<Vec<FeatureMap>> {
    let mut partners: Vec<usize> = (0..batch.len()).collect();
    for i in (1..partners.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        partners.swap(i, j);
    }
    batch
        .iter()
        .zip(partners)
        .map(|(fa, j)| mixstyle_random(fa, &batch[j], eps, rng).map(|(m, _)| m))
        .collect()
}
