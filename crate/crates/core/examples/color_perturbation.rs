//! Channel permutation on a synthetic image: the six orders, their group
//! structure, and seeded sampling under both modes.

use styleforge::color::{apply_permutation, sample_permutation, ChannelPermutation, CpMode};
use styleforge::pipeline::synth::{generate_corpus, SynthConfig};
use styleforge::rng::{Domain, SeededStream};

fn main() -> styleforge::Result<()> {
    let scene = generate_corpus(&SynthConfig {
        count: 1,
        ..SynthConfig::default()
    })?
    .remove(0);
    let img = &scene.image;
    println!(
        "{:?} scene, channel means {:?}",
        scene.weather,
        rounded(img.channel_means())
    );

    for p in ChannelPermutation::ALL {
        let out = apply_permutation(img, p);
        println!(
            "  {p} -> means {:?}, inverse {}",
            rounded(out.channel_means()),
            p.inverse()
        );
    }

    for mode in [CpMode::Uniform6, CpMode::CoinFlip { p_raw: 0.5 }] {
        let draws: Vec<String> = (0..8)
            .map(|i| {
                let mut rng = SeededStream::substream(42, Domain::ColorPerturbation, i);
                sample_permutation(&mut rng, mode).to_string()
            })
            .collect();
        println!("{mode:?}: {}", draws.join(" "));
    }
    Ok(())
}

fn rounded(m: [f64; 3]) -> [f64; 3] {
    m.map(|v| (v * 10.0).round() / 10.0)
}
