//! Named random substreams derived from a single run seed.
//!
//! Every consumer gets its own ChaCha8 stream keyed by `(seed, substream)`,
//! with the stream id selecting a per-item sequence. Results therefore do not
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Substream {
    Scenario,
    Channel,
    OptimizerInit,
    Baselines,
}

impl Substream {
    fn tag(self) -> u64 {
        match self {
            Substream::Scenario => 0x5343_454e,
            Substream::Channel => 0x4348_414e,
            Substream::OptimizerInit => 0x4f50_5449,
            Substream::Baselines => 0x4241_5345,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for item `stream` of the given substream.
pub fn substream_rng(seed: u64, substream: Substream, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(substream.tag())));
    rng.set_stream(stream);
    rng
}

/// Packs `(turbine, waypoint, direction)` into a stream id.
pub fn link_stream(turbine: u32, waypoint: u32, downlink: bool) -> u64 {
    ((turbine as u64) << 33) | ((waypoint as u64) << 1) | downlink as u64
}
