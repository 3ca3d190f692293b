//! Generates a small annotated corpus on disk and reads it back.

use styleforge::pipeline::load_dataset;
use styleforge::pipeline::synth::{generate_corpus, write_corpus, SynthConfig};

fn main() -> styleforge::Result<()> {
    let cfg = SynthConfig {
        count: 10,
        objects_per_image: 3,
        ..SynthConfig::default()
    };
    let scenes = generate_corpus(&cfg)?;
    let dir = std::env::temp_dir().join("styleforge_synth_example");
    write_corpus(&scenes, &dir)?;
    for s in &scenes {
        println!(
            "{} {:?} with {} boxes",
            s.annotations.file_name,
            s.weather,
            s.annotations.len()
        );
    }
    let loaded = load_dataset(dir.join("images"), dir.join("annotations.json"))?;
    println!("reloaded {} images from {}", loaded.len(), dir.display());
    Ok(())
}
