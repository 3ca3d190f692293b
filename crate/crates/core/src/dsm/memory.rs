use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::stats::StyleVector;

/// Default queue length.
pub const DEFAULT_CAPACITY: usize = 100;

/// Bounded FIFO queue of styles. Pushing into a full queue evicts the oldest
/// entry first, so the queue always holds the most recent `capacity` pushes
/// in push order.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleMemory {
    entries: VecDeque<StyleVector>,
    capacity: usize,
}

impl StyleMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("memory capacity must be at least 1".into()));
        }
        Ok(Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Oldest first.
    pub fn entries(&self) -> impl ExactSizeIterator<Item = &StyleVector> {
        self.entries.iter()
    }

    pub fn get(&self, index: usize) -> Option<&StyleVector> {
        self.entries.get(index)
    }

    pub fn push(&mut self, style: StyleVector) {
        while self.entries.len() >= self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(style);
    }

    /// Uniform draw over the current entries, returning the style and its
    /// index (0 = oldest). An empty memory returns `None` without consuming
    /// randomness; otherwise exactly one `below(len)` draw is made.
    pub fn sample(&self, rng: &mut SeededStream) -> Option<(&StyleVector, usize)> {
        if self.entries.is_empty() {
            return None;
        }
        let r = rng.below(self.entries.len() as u64) as usize;
        Some((&self.entries[r], r))
    }
}

pub fn memory_push(mem: &mut StyleMemory, style: StyleVector) {
    mem.push(style)
}

pub fn memory_sample(mem: &StyleMemory, rng: &mut SeededStream) -> Option<(StyleVector, usize)> {
    mem.sample(rng).map(|(s, r)| (s.clone(), r))
}
