//! Dual style memory over a stream of feature maps: pushes, draws and the
//! effect of the three routing variants.

use styleforge::dsm::{dsm_forward_feature_boxes, DsmConfig, ExchangePolicy, MemoryId, MemoryLayout};
use styleforge::io::FeatureMap;
use styleforge::rng::SeededStream;

fn main() -> styleforge::Result<()> {
    let boxes = [(0.0, 0.0, 3.0, 3.0), (4.0, 4.0, 3.0, 2.0)];
    let variants = [
        ("exchange", ExchangePolicy::Exchange, MemoryLayout::Dual),
        ("no-exchange", ExchangePolicy::NoExchange, MemoryLayout::Dual),
        ("one memory", ExchangePolicy::Exchange, MemoryLayout::Shared),
    ];
    for (name, exchange, layout) in variants {
        let cfg = DsmConfig {
            exchange,
            layout,
            capacity: 4,
            ..DsmConfig::default()
        };
        let mut state = cfg.new_state()?;
        let mut rng = SeededStream::new(7);
        println!("== {name}");
        for step in 0..4 {
            let fm = FeatureMap::from_fn(3, 8, 8, |c, y, x| {
                ((step * 13 + c * 7 + y * 3 + x) % 11) as f32 * (1.0 + step as f32) - 4.0
            })?;
            let (_, trace) = dsm_forward_feature_boxes(&fm, &boxes, &mut state, &cfg, &mut rng)?;
            let line: Vec<String> = trace
                .records
                .iter()
                .map(|r| match r.drawn_index {
                    Some(i) => format!("{} <- {}[{i}]", r.patch.label(), r.source.as_str()),
                    None => format!("{} kept (empty {})", r.patch.label(), r.source.as_str()),
                })
                .collect();
            println!("  step {step}: {}", line.join(", "));
        }
        let sizes: Vec<String> = state
            .memory_ids()
            .iter()
            .map(|&id: &MemoryId| format!("{}={}", id.as_str(), state.memory(id).len()))
            .collect();
        println!("  memories: {}", sizes.join(" "));
    }
    Ok(())
}
