//! LoRa-like transceiver chain.
//!
//! Payload bytes are split into nibbles (low nibble first), Hamming coded,
//! diagonally interleaved and Gray mapped onto chirp symbols. The frame uses
//! implicit-header layout without whitening or payload CRC:
//!
//! * the first block always spans 8 symbols at code rate 4/8 and carries
//!   `SF − 2` bits per symbol (the two LSBs are zero on air);
//! * every further block spans `4 + cr_index` symbols carrying `SF − 2·DE`
//!   bits each.
//!
//! Unused capacity at the end of the frame is filled with zero nibbles. The
//! receiver assumes ideal timing: it dechirps each symbol with the
//! conjugate base chirp, takes a `2^SF` point DFT and picks the strongest
//! bin, rounding to a multiple of four on reduced-rate symbols.

pub mod coding;
pub mod modem;

pub use modem::{LoRaModem, REDUCED_RATE_HEADER_SYMBOLS};

use crate::error::{Error, Result};
use crate::params::{lora_symbol_count, LoRaConfig};
use crate::signal::BasebandSignal;
use coding::{deinterleave, gray_decode, gray_encode, hamming_decode, hamming_encode, interleave};

/// Chirp symbol values of one frame's payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoRaSymbolStream {
    /// Symbol values in `[0, 2^SF)`.
    pub symbols: Vec<u32>,
    pub sf_exponent: u32,
    pub ldro_enabled: bool,
}

impl LoRaSymbolStream {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of positions where two streams disagree.
    pub fn count_differences(&self, other: &LoRaSymbolStream) -> usize {
        self.symbols
            .iter()
            .zip(&other.symbols)
            .filter(|(a, b)| a != b)
            .count()
            + self.symbols.len().abs_diff(other.symbols.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Block {
    /// Codewords per block, i.e. bits per symbol.
    rows: usize,
    cr_index: u32,
}

impl Block {
    fn symbols(&self) -> usize {
        4 + self.cr_index as usize
    }
}

fn frame_blocks(cfg: &LoRaConfig) -> Vec<Block> {
    let n_sym = lora_symbol_count(cfg);
    let sf = cfg.sf_exponent as usize;
    let mut blocks = vec![Block {
        rows: sf - 2,
        cr_index: 4,
    }];
    let per_block = 4 + cfg.cr_index as usize;
    let rest = (n_sym - REDUCED_RATE_HEADER_SYMBOLS) / per_block;
    blocks.extend(std::iter::repeat_n(
        Block {
            rows: cfg.bits_per_symbol() as usize,
            cr_index: cfg.cr_index,
        },
        rest,
    ));
    blocks
}

/// Encodes a payload into chirp symbol values.
pub fn lora_encode(payload: &[u8], cfg: &LoRaConfig) -> Result<LoRaSymbolStream> {
    if payload.len() != cfg.payload_bytes {
        return Err(Error::LengthMismatch {
            expected: cfg.payload_bytes,
            actual: payload.len(),
        });
    }
    let sf = cfg.sf_exponent as usize;
    let mut nibbles = payload.iter().flat_map(|b| [b & 0x0f, b >> 4]);
    let mut symbols = Vec::with_capacity(lora_symbol_count(cfg));
    for block in frame_blocks(cfg) {
        let codewords: Vec<u8> = (0..block.rows)
            .map(|_| hamming_encode(nibbles.next().unwrap_or(0), block.cr_index))
            .collect();
        let shift = sf - block.rows;
        symbols.extend(
            interleave(&codewords, block.symbols())
                .into_iter()
                .map(|word| gray_decode(word) << shift),
        );
    }
    debug_assert_eq!(symbols.len(), lora_symbol_count(cfg));
    Ok(LoRaSymbolStream {
        symbols,
        sf_exponent: cfg.sf_exponent,
        ldro_enabled: cfg.ldro_enabled,
    })
}

/// Inverts [`lora_encode`], correcting what the Hamming code allows.
pub fn lora_decode(stream: &LoRaSymbolStream, cfg: &LoRaConfig) -> Result<Vec<u8>> {
    let n_sym = lora_symbol_count(cfg);
    if stream.symbols.len() != n_sym {
        return Err(Error::LengthMismatch {
            expected: n_sym,
            actual: stream.symbols.len(),
        });
    }
    let sf = cfg.sf_exponent as usize;
    let mut nibbles = Vec::new();
    let mut offset = 0;
    for block in frame_blocks(cfg) {
        let shift = sf - block.rows;
        let mask = (1u32 << block.rows) - 1;
        let words: Vec<u32> = stream.symbols[offset..offset + block.symbols()]
            .iter()
            .map(|&s| gray_encode((s >> shift) & mask))
            .collect();
        offset += block.symbols();
        nibbles.extend(
            deinterleave(&words, block.rows)
                .into_iter()
                .map(|cw| hamming_decode(cw, block.cr_index)),
        );
    }
    Ok(nibbles
        .chunks(2)
        .take(cfg.payload_bytes)
        .map(|pair| pair[0] | (pair.get(1).copied().unwrap_or(0) << 4))
        .collect())
}

/// Modulates a symbol stream, optionally behind the preamble.
pub fn lora_modulate(stream: &LoRaSymbolStream, cfg: &LoRaConfig, include_preamble: bool) -> BasebandSignal {
    LoRaModem::new(cfg).modulate(stream, include_preamble)
}

/// Demodulates a frame-aligned payload signal of exactly `N_sym · 2^SF`
/// samples.
pub fn lora_demodulate(signal: &BasebandSignal, cfg: &LoRaConfig) -> Result<LoRaSymbolStream> {
    let expected = lora_symbol_count(cfg) * cfg.symbol_len();
    if signal.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: signal.len(),
        });
    }
    LoRaModem::new(cfg).demodulate(signal)
}
