#![allow(dead_code)]

use css_linksim::lora_phy::{lora_decode, lora_demodulate, lora_encode, lora_modulate};
use css_linksim::params::{Setting, WaveformConfig};
use css_linksim::ucss_phy::{ucss_build_frame, ucss_demodulate, ucss_modulate, ucss_slot_schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random payloads through encode, modulate, demodulate and decode with no
/// channel in between. Returns how many came back wrong.
pub fn loopback_failures(setting: &Setting, payloads: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut payload = vec![0u8; setting.config.payload_bytes()];
    let mut failures = 0;
    match &setting.config {
        WaveformConfig::LoRa(cfg) => {
            for _ in 0..payloads {
                rng.fill(payload.as_mut_slice());
                let stream = lora_encode(&payload, cfg).unwrap();
                let sig = lora_modulate(&stream, cfg, false);
                let decoded = lora_decode(&lora_demodulate(&sig, cfg).unwrap(), cfg).unwrap();
                failures += usize::from(decoded != payload);
            }
        }
        WaveformConfig::Ucss(cfg) => {
            let schedule = ucss_slot_schedule(cfg, seed);
            for _ in 0..payloads {
                rng.fill(payload.as_mut_slice());
                let frame = ucss_build_frame(&payload, cfg).unwrap();
                let sig = ucss_modulate(&frame, &schedule, cfg).unwrap();
                let (decoded, ok) = ucss_demodulate(&sig, &schedule, cfg).unwrap();
                failures += usize::from(!ok || decoded != payload);
            }
        }
    }
    failures
}
