//! Whole-map style mixing, for comparison with region-wise restyling.

use styleforge::dsm::{mixstyle, mixstyle_batch, MIXSTYLE_ALPHA};
use styleforge::io::FeatureMap;
use styleforge::rng::SeededStream;
use styleforge::stats::{channel_stats, Epsilon};

fn main() -> styleforge::Result<()> {
    let eps = Epsilon::DEFAULT;
    let a = FeatureMap::from_fn(2, 4, 4, |c, y, x| (c + y * 4 + x) as f32)?;
    let b = FeatureMap::from_fn(2, 4, 4, |c, y, x| 10.0 + 3.0 * (c * 2 + x * 4 + y) as f32)?;
    for lambda in [1.0, 0.5, 0.0] {
        let mixed = mixstyle(&a, &b, lambda, eps)?;
        let s = channel_stats(&mixed, eps)?;
        println!("lambda {lambda}: mu {:?} sigma {:?}", s.mu, s.sigma);
    }

    let batch: Vec<FeatureMap> = (0..4)
        .map(|k| FeatureMap::from_fn(2, 4, 4, |c, y, x| (k * 5 + c + y + x) as f32 * (k + 1) as f32))
        .collect::<Result<_, _>>()?;
    let mut rng = SeededStream::new(3);
    let mixed = mixstyle_batch(&batch, eps, &mut rng)?;
    println!("batch mixing with Beta({MIXSTYLE_ALPHA}, {MIXSTYLE_ALPHA}):");
    for (i, m) in mixed.iter().enumerate() {
        println!("  map {i}: mu {:?}", channel_stats(m, eps)?.mu);
    }
    Ok(())
}
