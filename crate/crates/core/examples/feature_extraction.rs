//! The fixed-weight convolutional extractor: shapes per block and
//! reproducibility of the weights.

use styleforge::pipeline::synth::{generate_corpus, SynthConfig};
use styleforge::pipeline::{ExtractorConfig, FeatureExtractor};
use styleforge::stats::{channel_stats, Epsilon};

fn main() -> styleforge::Result<()> {
    let scene = generate_corpus(&SynthConfig {
        count: 1,
        height: 50,
        width: 70,
        ..SynthConfig::default()
    })?
    .remove(0);
    let cfg = ExtractorConfig {
        channels: vec![8, 16, 32],
        strides: vec![2, 2, 2],
        ..ExtractorConfig::default()
    };
    let extractor = FeatureExtractor::new(&cfg)?;
    println!("image {}x{}", scene.image.height(), scene.image.width());
    for block in 0..cfg.blocks() {
        let fm = extractor.forward(&scene.image, block)?;
        let s = channel_stats(&fm, Epsilon::DEFAULT)?;
        let mean_mu = s.mu.iter().sum::<f32>() / s.mu.len() as f32;
        println!(
            "block {block}: {:?} (stride {}), mean activation {mean_mu:.4}",
            fm.dims(),
            cfg.cumulative_stride(block)
        );
    }
    let again = FeatureExtractor::new(&cfg)?.forward(&scene.image, 2)?;
    println!(
        "same weights on rebuild: {}",
        again.bit_eq(&extractor.forward(&scene.image, 2)?)
    );
    Ok(())
}
