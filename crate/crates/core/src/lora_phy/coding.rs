//! Hamming block codes, the diagonal interleaver and Gray mapping used by
//! the LoRa bit chain.

/// Hamming-style codeword for a nibble at code rate `4/(4 + cr_index)`.
///
/// Bit `k` of the return value is codeword bit `k`; bits 0..4 are the data
/// bits, followed by `cr_index` parity bits.
pub fn hamming_encode(nibble: u8, cr_index: u32) -> u8 {
    let d = |k: u8| (nibble >> k) & 1;
    let (d0, d1, d2, d3) = (d(0), d(1), d(2), d(3));
    let data = nibble & 0x0f;
    match cr_index {
        0 => data,
        1 => data | ((d0 ^ d1 ^ d2 ^ d3) << 4),
        _ => {
            let parity = [d0 ^ d1 ^ d2, d1 ^ d2 ^ d3, d0 ^ d1 ^ d3, d0 ^ d2 ^ d3];
            parity
                .iter()
                .take(cr_index as usize)
                .enumerate()
                .fold(data, |cw, (k, &p)| cw | (p << (4 + k)))
        }
    }
}

/// Recovers the nibble from a received codeword.
///
/// Rates 4/7 and 4/8 decode to the nearest codeword and so correct any
/// single bit error. Rates 4/5 and 4/6 only detect errors; the data bits are
/// returned as received.
pub fn hamming_decode(codeword: u8, cr_index: u32) -> u8 {
    if cr_index < 3 {
        return codeword & 0x0f;
    }
    let mask = (1u16 << (4 + cr_index)) - 1;
    let mut best = (u32::MAX, 0u8);
    for nibble in 0..16u8 {
        let dist = ((hamming_encode(nibble, cr_index) as u16 ^ codeword as u16) & mask).count_ones();
        if dist < best.0 {
            best = (dist, nibble);
        }
    }
    best.1
}

/// Diagonal interleaving of `rows` codewords of `cols` bits each into `cols`
/// symbols of `rows` bits.
///
/// Bit `j` of symbol `i` is bit `i` of codeword `(i + j) mod rows`, so every
/// symbol touches each codeword exactly once and a symbol error costs each
/// codeword at most one bit.
pub fn interleave(codewords: &[u8], cols: usize) -> Vec<u32> {
    let rows = codewords.len();
    (0..cols)
        .map(|i| {
            (0..rows).fold(0u32, |sym, j| {
                let bit = (codewords[(i + j) % rows] >> i) & 1;
                sym | ((bit as u32) << j)
            })
        })
        .collect()
}

/// Inverse of [`interleave`].
pub fn deinterleave(symbols: &[u32], rows: usize) -> Vec<u8> {
    let cols = symbols.len();
    let mut codewords = vec![0u8; rows];
    for (i, &sym) in symbols.iter().enumerate().take(cols) {
        for j in 0..rows {
            let bit = ((sym >> j) & 1) as u8;
            codewords[(i + j) % rows] |= bit << i;
        }
    }
    codewords
}

/// Binary-reflected Gray code.
pub fn gray_encode(v: u32) -> u32 {
    v ^ (v >> 1)
}

/// Inverse of [`gray_encode`].
pub fn gray_decode(mut g: u32) -> u32 {
    let mut v = g;
    while g > 1 {
        g >>= 1;
        v ^= g;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn min_distance(cr: u32) -> u32 {
        let mut best = u32::MAX;
        for a in 0..16u8 {
            for b in (a + 1)..16u8 {
                best = best.min((hamming_encode(a, cr) ^ hamming_encode(b, cr)).count_ones());
            }
        }
        best
    }

    #[test]
    fn code_distances() {
        assert_eq!(min_distance(0), 1);
        assert_eq!(min_distance(1), 2);
        assert_eq!(min_distance(2), 2);
        assert_eq!(min_distance(3), 3);
        assert_eq!(min_distance(4), 4);
    }

    #[test]
    fn single_errors_corrected() {
        for cr in [3, 4] {
            for nibble in 0..16u8 {
                let cw = hamming_encode(nibble, cr);
                for bit in 0..(4 + cr) {
                    assert_eq!(hamming_decode(cw ^ (1 << bit), cr), nibble);
                }
            }
        }
    }

    #[test]
    fn clean_decode_all_rates() {
        for cr in 0..=4 {
            for nibble in 0..16u8 {
                assert_eq!(hamming_decode(hamming_encode(nibble, cr), cr), nibble);
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for bits in 3..=12u32 {
            let m = 1u32 << bits;
            for s in 0..m {
                let next = (s + 1) % m;
                assert_eq!((gray_encode(s) ^ gray_encode(next)).count_ones(), 1);
            }
        }
    }

    #[test]
    fn symbol_error_hits_each_codeword_once() {
        let cws: Vec<u8> = (0..9).map(|k| hamming_encode(k as u8, 4)).collect();
        let mut syms = interleave(&cws, 8);
        syms[5] ^= 0x1ff;
        let back = deinterleave(&syms, 9);
        for (a, b) in cws.iter().zip(&back) {
            assert_eq!((a ^ b).count_ones(), 1);
        }
    }

    proptest! {
        #[test]
        fn gray_round_trip(v in 0u32..(1 << 16)) {
            prop_assert_eq!(gray_decode(gray_encode(v)), v);
            prop_assert_eq!(gray_encode(gray_decode(v)), v);
        }

        #[test]
        fn interleave_round_trip(
            rows in 3usize..=12,
            cols in 4usize..=8,
            seed in proptest::collection::vec(any::<u8>(), 12),
        ) {
            let mask = ((1u16 << cols) - 1) as u8;
            let cws: Vec<u8> = seed[..rows].iter().map(|b| b & mask).collect();
            let syms = interleave(&cws, cols);
            prop_assert!(syms.iter().all(|&s| s < (1 << rows)));
            prop_assert_eq!(deinterleave(&syms, rows), cws);
        }
    }
}
