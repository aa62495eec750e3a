//! Shared instances for the solver benchmarks.

use fogswipt_core::{gen_channels, ChannelConfig, ChannelSet, SystemParams};

/// Default network with `n` EH and `n` ID devices and the channels of `seed`.
pub fn instance(n: usize, seed: u64) -> (SystemParams, ChannelSet) {
    let p = SystemParams::with_users(n, n);
    let ch = gen_channels(&p, &ChannelConfig::with_seed(seed)).expect("default channel config is valid");
    (p, ch)
}
