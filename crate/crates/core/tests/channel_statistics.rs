use fogswipt_core::{gen_channels, read_fixture, write_fixture, ChannelConfig, SystemParams};
use proptest::prelude::*;

const N_T: usize = 6;

/// Mean of ‖h‖²/(N_t·gain) over `seeds × users` draws at a fixed distance.
fn normalized_power(eh: bool, rician_k: f64, seeds: u64, users: usize) -> f64 {
    let d = if eh { 7.0 } else { 17.0 };
    let p = if eh { SystemParams::with_users(users, 0) } else { SystemParams::with_users(0, users) };
    let gain = 1.0 / (d * d);
    let mut sum = 0.0;
    for seed in 0..seeds {
        let cfg = ChannelConfig { eh_dist_range_m: (d, d), id_dist_range_m: (d, d), rician_k, ..ChannelConfig::with_seed(seed) };
        let ch = gen_channels(&p, &cfg).unwrap();
        let hs = if eh { &ch.dl_eh } else { &ch.dl_id };
        sum += hs.iter().map(|h| h.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>();
    }
    sum / (seeds as f64 * users as f64 * N_T as f64 * gain)
}

#[test]
fn rayleigh_power_is_normalized() {
    let m = normalized_power(false, 3.0, 1000, 100);
    assert!((m - 1.0).abs() <= 0.02, "mean {m}");
}

#[test]
fn rician_power_is_normalized() {
    for k in [0.0, 3.0] {
        let m = normalized_power(true, k, 1000, 100);
        assert!((m - 1.0).abs() <= 0.02, "K = {k}: mean {m}");
    }
}

#[test]
fn fixture_is_stable_across_builds() {
    let mut p = SystemParams::with_users(2, 1);
    p.n_antennas = 3;
    let cfg = ChannelConfig { reciprocal: false, ..ChannelConfig::with_seed(42) };
    let text = write_fixture(&gen_channels(&p, &cfg).unwrap());
    let golden = include_str!("data/channels_seed42.txt");
    assert_eq!(text, golden);
    let back = read_fixture(golden).unwrap();
    assert_eq!(write_fixture(&back), golden);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn line_of_sight_gain_stays_in_distance_range(seed in any::<u64>(), n_eh in 1usize..5) {
        let p = SystemParams::with_users(n_eh, 1);
        let cfg = ChannelConfig { rician_k: f64::INFINITY, ..ChannelConfig::with_seed(seed) };
        let ch = gen_channels(&p, &cfg).unwrap();
        for h in &ch.dl_eh {
            for z in h {
                let g = z.norm_sqr();
                prop_assert!((1.0 / 100.0 - 1e-15..=1.0 / 25.0 + 1e-15).contains(&g), "gain {g}");
            }
        }
    }

    #[test]
    fn id_draws_ignore_eh_fading_model(seed in any::<u64>()) {
        let p = SystemParams::with_users(1, 3);
        let ch = gen_channels(&p, &ChannelConfig::with_seed(seed)).unwrap();
        let cfg = ChannelConfig { rician_k: f64::INFINITY, ..ChannelConfig::with_seed(seed) };
        let los = gen_channels(&p, &cfg).unwrap();
        prop_assert_eq!(&ch.dl_id, &los.dl_id);
    }

    #[test]
    fn grams_match_channels(seed in any::<u64>()) {
        let p = SystemParams::default();
        let ch = gen_channels(&p, &ChannelConfig::with_seed(seed)).unwrap();
        for (h, g) in ch.dl_id.iter().zip(&ch.gram_id) {
            let n2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((g.trace() - n2).abs() <= 1e-12 * n2);
        }
        for (h, u) in ch.ul_eh.iter().zip(&ch.ul_gain) {
            let n2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((u - n2).abs() <= 1e-12 * n2);
        }
    }
}
