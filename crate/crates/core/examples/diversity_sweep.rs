//! Style diversity before and after restyling, swept over memory capacity
//! and placement.

use styleforge::pipeline::synth::{generate_corpus, SynthConfig};
use styleforge::pipeline::{sweep, PipelineConfig, SweepParam};

fn main() -> styleforge::Result<()> {
    let items: Vec<_> = generate_corpus(&SynthConfig::default())?
        .into_iter()
        .map(|s| (s.image, s.annotations))
        .collect();
    let cfg = PipelineConfig::default();
    for (param, values) in [
        (SweepParam::Capacity, vec![1, 10, 100]),
        (SweepParam::Placement, vec![0, 1]),
    ] {
        println!("{param:?}");
        for (p, _) in sweep(&items, &cfg, param, &values)? {
            println!(
                "  {:>4}: input {:.5} output {:.5}",
                p.value, p.input_diversity, p.output_diversity
            );
        }
    }
    Ok(())
}
