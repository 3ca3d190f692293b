//! Full batch augmentation on a synthetic corpus, written to a run
//! directory.

use styleforge::dsm::snapshot_state;
use styleforge::pipeline::synth::{generate_corpus, SynthConfig};
use styleforge::pipeline::{augment_batch, write_outputs, PipelineConfig};

fn main() -> styleforge::Result<()> {
    let items: Vec<_> = generate_corpus(&SynthConfig {
        count: 8,
        ..SynthConfig::default()
    })?
    .into_iter()
    .map(|s| (s.image, s.annotations))
    .collect();
    let cfg = PipelineConfig {
        seed: 11,
        ..PipelineConfig::default()
    };
    let mut state = cfg.dsm.config().new_state()?;
    let out = augment_batch(&items, &cfg, &mut state)?;

    for item in &out.items {
        let perm = item.permutation.map(|p| p.to_string()).unwrap_or_default();
        let fallbacks = item.trace.records.iter().filter(|r| r.is_fallback()).count();
        println!(
            "{} perm {perm} patches {} fallbacks {fallbacks}",
            item.file_name,
            item.trace.records.len()
        );
    }

    let dir = std::env::temp_dir().join("styleforge_augment_example");
    write_outputs(&out, &dir)?;
    snapshot_state(&state, dir.join("snapshot.npy"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
