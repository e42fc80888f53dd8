use crate::rng::SplitMix64;

/// Block-selection rule. One epoch is `b` consecutive block updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Each update draws `below(b)` independently.
    Iid { seed: u64 },
    /// Each epoch starts from `0, .., b-1`, shuffles it, and consumes it in
    /// order.
    EpochShuffle { seed: u64 },
    /// Fixed order `0, .., b-1` every epoch.
    Cyclic,
}

#[derive(Debug, Clone)]
pub(crate) struct SelectionStream {
    rule: Selection,
    rng: SplitMix64,
    blocks: usize,
}

impl SelectionStream {
    pub(crate) fn new(rule: Selection, blocks: usize) -> Self {
        let seed = match rule {
            Selection::Iid { seed } | Selection::EpochShuffle { seed } => seed,
            Selection::Cyclic => 0,
        };
        Self {
            rule,
            rng: SplitMix64::new(seed),
            blocks,
        }
    }

    pub(crate) fn next_epoch(&mut self) -> Vec<usize> {
        match self.rule {
            Selection::Iid { .. } => (0..self.blocks).map(|_| self.rng.below(self.blocks)).collect(),
            Selection::EpochShuffle { .. } => {
                let mut order: Vec<usize> = (0..self.blocks).collect();
                self.rng.shuffle(&mut order);
                order
            }
            Selection::Cyclic => (0..self.blocks).collect(),
        }
    }
}

/// The block indices a run with `rule` visits over `epochs` epochs.
pub fn selection_stream(rule: Selection, blocks: usize, epochs: usize) -> Vec<usize> {
    let mut stream = SelectionStream::new(rule, blocks);
    (0..epochs).flat_map(|_| stream.next_epoch()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_order() {
        assert_eq!(selection_stream(Selection::Cyclic, 3, 2), vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn epochs_are_permutations() {
        let s = selection_stream(Selection::EpochShuffle { seed: 4 }, 5, 10);
        for epoch in s.chunks(5) {
            let mut e = epoch.to_vec();
            e.sort_unstable();
            assert_eq!(e, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn iid_is_seeded_and_roughly_uniform() {
        let a = selection_stream(Selection::Iid { seed: 7 }, 4, 2500);
        assert_eq!(a, selection_stream(Selection::Iid { seed: 7 }, 4, 2500));
        let mut counts = [0usize; 4];
        for i in a {
            counts[i] += 1;
        }
        for c in counts {
            assert!((2300..2700).contains(&c), "{counts:?}");
        }
    }
}
