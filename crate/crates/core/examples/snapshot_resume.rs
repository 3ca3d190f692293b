//! Saves the style memories after one batch and resumes from the file.

use styleforge::dsm::{restore_state, sidecar_path, snapshot_state};
use styleforge::pipeline::synth::{generate_corpus, SynthConfig};
use styleforge::pipeline::{augment_batch, PipelineConfig};

fn main() -> styleforge::Result<()> {
    let batch = |seed| -> styleforge::Result<Vec<_>> {
        Ok(generate_corpus(&SynthConfig {
            count: 6,
            seed,
            ..SynthConfig::default()
        })?
        .into_iter()
        .map(|s| (s.image, s.annotations))
        .collect())
    };
    let cfg = PipelineConfig::default();
    let mut state = cfg.dsm.config().new_state()?;
    augment_batch(&batch(1)?, &cfg, &mut state)?;

    let path = std::env::temp_dir().join("styleforge_snapshot_example.npy");
    snapshot_state(&state, &path)?;
    println!("snapshot {} + {}", path.display(), sidecar_path(&path).display());

    let mut resumed = restore_state(&path)?;
    let next = batch(2)?;
    let a = augment_batch(&next, &cfg, &mut state)?;
    let b = augment_batch(&next, &cfg, &mut resumed)?;
    let same = a
        .items
        .iter()
        .zip(&b.items)
        .all(|(x, y)| x.features.bit_eq(&y.features));
    println!("resumed run matches uninterrupted run: {same}");
    Ok(())
}
