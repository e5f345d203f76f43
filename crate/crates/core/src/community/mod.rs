//! Community detection: shuffled Louvain on validated projections and
//! seeded label propagation over the retweet network.

mod label_propagation;
mod louvain;
mod modularity;

pub use label_propagation::{propagate_labels, LabelPropagationOptions, SeededLabeling};
pub use louvain::{louvain_once, louvain_shuffled};
pub use modularity::modularity;

/// Child seed of stream `index` derived from a base seed (SplitMix64 mix).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
