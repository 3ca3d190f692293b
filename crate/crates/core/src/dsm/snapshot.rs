//! On-disk form of a [`DsmState`].
//!
//! `path` holds an NPY `float32` matrix with one row per stored style,
//! `[mu_0 .. mu_{C-1}, sigma_0 .. sigma_{C-1}]`, queues in
//! [`DsmState::memory_ids`] order and each queue oldest first. The JSON
//! sidecar at `<path>.json` reads
//!
//! ```json
//! {"layout": "dual", "capacity": 100, "kinds": ["object", ...],
//!  "order": [["obj", 0], ["obj", 1], ["back", 0], ...]}
//! ```
//!
//! where `kinds[i]` is the kind of row `i` and `order[i]` its queue and
//! position in that queue.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DsmState, MemoryId, MemoryLayout};
use crate::error::{Error, Result};
use crate::io::npy;
use crate::stats::{StyleKind, StyleVector};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    layout: MemoryLayout,
    capacity: usize,
    kinds: Vec<StyleKind>,
    order: Vec<(MemoryId, usize)>,
}

/// `<path>.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(".json");
    PathBuf::from(s)
}

pub fn snapshot_state(state: &DsmState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    let mut kinds = Vec::new();
    let mut order = Vec::new();
    let mut channels = None;
    for &id in state.memory_ids() {
        for (pos, style) in state.memory(id).entries().enumerate() {
            if *channels.get_or_insert(style.channels()) != style.channels() {
                return Err(Error::format("styles in memory have differing channel counts"));
            }
            rows.extend_from_slice(&style.mu);
            rows.extend_from_slice(&style.sigma);
            kinds.push(style.kind);
            order.push((id, pos));
        }
    }
    let width = 2 * channels.unwrap_or(0);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    npy::write_f32(&mut w, &[kinds.len(), width], &rows)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))?;

    let sidecar = Sidecar {
        layout: state.layout(),
        capacity: state.capacity(),
        kinds,
        order,
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    let side = sidecar_path(path);
    std::fs::write(&side, json + "\n").map_err(|e| Error::io(side, e))
}

pub fn restore_state(path: impl AsRef<Path>) -> Result<DsmState> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    for p in [path, side.as_path()] {
        if !p.exists() {
            return Err(Error::FileNotFound(p.to_path_buf()));
        }
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (shape, data) = npy::parse_f32(&bytes)?;
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: Sidecar =
        serde_json::from_str(&text).map_err(|e| Error::format(format!("snapshot sidecar: {e}")))?;

    let [rows, width] = shape[..] else {
        return Err(Error::format(format!(
            "snapshot matrix must be 2-D, found {shape:?}"
        )));
    };
    if width % 2 != 0 || rows != sidecar.kinds.len() || rows != sidecar.order.len() {
        return Err(Error::format(format!(
            "snapshot matrix {rows}x{width} does not match {} kinds / {} order entries",
            sidecar.kinds.len(),
            sidecar.order.len()
        )));
    }
    let mut state = DsmState::new(sidecar.layout, sidecar.capacity)
        .map_err(|e| Error::format(format!("snapshot: {e}")))?;
    let c = width / 2;
    let mut expected: Vec<(MemoryId, usize)> = Vec::new();
    for &id in state.memory_ids() {
        let n = sidecar.order.iter().filter(|(q, _)| *q == id).count();
        expected.extend((0..n).map(|p| (id, p)));
    }
    if expected != sidecar.order {
        return Err(Error::format(
            "snapshot order must list each queue of the layout contiguously from position 0",
        ));
    }
    for (i, (&kind, &(id, _))) in sidecar.kinds.iter().zip(&sidecar.order).enumerate() {
        let row = &data[i * width..(i + 1) * width];
        let style = StyleVector::new(row[..c].to_vec(), row[c..].to_vec(), kind)
            .map_err(|e| Error::format(format!("snapshot row {i}: {e}")))?;
        let mem = state.memory_mut(id);
        if mem.len() == mem.capacity() {
            return Err(Error::format(format!(
                "snapshot queue '{}' exceeds capacity",
                id.as_str()
            )));
        }
        mem.push(style);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn style(v: f32, kind: StyleKind) -> StyleVector {
        StyleVector::new(vec![v, -v], vec![1.0 + v.abs(), 0.5], kind).unwrap()
    }

    #[test]
    fn empty_state_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.npy");
        for layout in [MemoryLayout::Dual, MemoryLayout::Shared] {
            let state = DsmState::new(layout, 7).unwrap();
            snapshot_state(&state, &p).unwrap();
            assert_eq!(restore_state(&p).unwrap(), state);
        }
    }

    #[test]
    fn keeps_last_hundred_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.npy");
        let mut state = DsmState::new(MemoryLayout::Dual, 100).unwrap();
        for i in 0..150 {
            state.push(style(i as f32, StyleKind::Background));
        }
        snapshot_state(&state, &p).unwrap();
        let back = restore_state(&p).unwrap();
        let mus: Vec<f32> = back.memory(MemoryId::Back).entries().map(|s| s.mu[0]).collect();
        assert_eq!(mus, (50..150).map(|i| i as f32).collect::<Vec<_>>());
        assert_eq!(back, state);
    }

    #[test]
    fn shared_layout_keeps_mixed_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.npy");
        let mut state = DsmState::new(MemoryLayout::Shared, 3).unwrap();
        state.push(style(1.0, StyleKind::Object));
        state.push(style(2.0, StyleKind::Background));
        snapshot_state(&state, &p).unwrap();
        assert_eq!(restore_state(&p).unwrap(), state);
    }

    #[test]
    fn corrupt_sidecar_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.npy");
        let mut state = DsmState::new(MemoryLayout::Dual, 3).unwrap();
        state.push(style(1.0, StyleKind::Object));
        snapshot_state(&state, &p).unwrap();
        std::fs::write(
            sidecar_path(&p),
            r#"{"layout":"dual","capacity":3,"kinds":["object"],"order":[["obj",1]]}"#,
        )
        .unwrap();
        assert!(matches!(restore_state(&p), Err(Error::Format(_))));
        std::fs::write(sidecar_path(&p), "{").unwrap();
        assert!(matches!(restore_state(&p), Err(Error::Format(_))));
    }
}
