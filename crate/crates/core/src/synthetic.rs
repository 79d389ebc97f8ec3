//! Synthetic corpora whose labels are a known function of planted
//! phrases.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledDataset, SentimentLabel};

/// Planted two-word phrase per class, in canonical label order.
pub const PLANTED_PHRASES: [&str; 3] = ["quartz lantern", "velvet compass", "granite pylon"];

/// Builds `n_docs` documents, a third per class. Each document is random
/// filler with its class's phrase inserted once at a random position.
///
/// Every planted word also turns up as filler in documents of all
/// classes, so only the contiguous phrase separates the labels.
pub fn planted_signal_dataset(n_docs: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler: Vec<String> = (0..240).map(|i| format!("w{i:03}")).collect();
    let planted_words: Vec<&str> = PLANTED_PHRASES.iter().flat_map(|p| p.split(' ')).collect();
    let docs = (0..n_docs).map(|i| {
        let label = SentimentLabel::from_index(i % 3);
        let phrase: Vec<&str> = PLANTED_PHRASES[label.index()].split(' ').collect();
        loop {
            let len = rng.random_range(6..14);
            let mut words: Vec<&str> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.04) {
                        *planted_words.choose(&mut rng).expect("nonempty")
                    } else {
                        filler.choose(&mut rng).expect("nonempty").as_str()
                    }
                })
                .collect();
            let at = rng.random_range(0..=words.len());
            words.splice(at..at, phrase.iter().copied());
            let text = words.join(" ");
            // Resample if filler happened to form another class's phrase.
            let foreign = PLANTED_PHRASES
                .iter()
                .enumerate()
                .any(|(c, p)| c != label.index() && format!(" {text} ").contains(&format!(" {p} ")));
            if !foreign {
                return (text, label);
            }
        }
    });
    LabeledDataset::from_pairs("planted", docs.collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::class_distribution;

    #[test]
    fn balanced_and_deterministic() {
        let a = planted_signal_dataset(600, 1);
        assert_eq!(class_distribution(&a).0, [200, 200, 200]);
        assert_eq!(a, planted_signal_dataset(600, 1));
        for d in &a.documents {
            assert!(d.text.contains(PLANTED_PHRASES[d.label.index()]));
            for (c, p) in PLANTED_PHRASES.iter().enumerate() {
                if c != d.label.index() {
                    assert!(!format!(" {} ", d.text).contains(&format!(" {p} ")));
                }
            }
        }
    }
}
