mod common;

use css_linksim::channel::ChannelSpec;
use css_linksim::params::settings_registry;
use css_linksim::simkit::{TrialRunner, DEFAULT_CODE_SEED};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_setting_round_trips_1000_payloads() {
    for (id, s) in settings_registry() {
        assert_eq!(common::loopback_failures(&s, 1000, 11), 0, "{id}");
    }
}

#[test]
fn clean_channel_trials_have_no_symbol_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (id, s) in settings_registry() {
        let runner = TrialRunner::new(&s, DEFAULT_CODE_SEED);
        for _ in 0..20 {
            let out = runner.run(&ChannelSpec::clean(), &mut rng).unwrap();
            assert!(out.frame_ok && out.symbol_errors == 0, "{id}: {out:?}");
        }
    }
}
