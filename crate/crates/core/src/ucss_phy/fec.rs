//! CRC-3 and the punctured K=7 convolutional code of the UCSS frame.

/// Generator polynomial `x³ + x + 1` without the leading term.
const CRC3_POLY: u8 = 0b011;

/// Constraint length of the convolutional code.
pub const CONSTRAINT_LENGTH: usize = 7;
const GENERATORS: [u32; 2] = [0o133, 0o171];
const STATES: usize = 1 << (CONSTRAINT_LENGTH - 1);

/// CRC-3 over `bits`, MSB first, initial register 0, no reflection or final
/// XOR. Returns the three check bits, most significant first.
pub fn crc3(bits: &[u8]) -> [u8; 3] {
    let mut reg = 0u8;
    for &b in bits {
        let feedback = ((reg >> 2) & 1) ^ (b & 1);
        reg = (reg << 1) & 0b111;
        if feedback == 1 {
            reg ^= CRC3_POLY;
        }
    }
    [(reg >> 2) & 1, (reg >> 1) & 1, reg & 1]
}

/// Whether the last three bits of `frame` are the CRC-3 of the rest.
pub fn crc3_ok(frame: &[u8]) -> bool {
    if frame.len() < 3 {
        return false;
    }
    let (body, check) = frame.split_at(frame.len() - 3);
    crc3(body) == [check[0], check[1], check[2]]
}

fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Output pair of the encoder for register contents `reg`, where bit 6 is
/// the newest input bit.
fn branch_output(reg: u32) -> [u8; 2] {
    [parity(reg & GENERATORS[0]), parity(reg & GENERATORS[1])]
}

/// Rate-1/2 encoding terminated with `K − 1` zero bits.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut reg = 0u32;
    let mut out = Vec::with_capacity(2 * (bits.len() + CONSTRAINT_LENGTH - 1));
    for &b in bits.iter().chain(std::iter::repeat_n(&0, CONSTRAINT_LENGTH - 1)) {
        reg = (reg >> 1) | ((b as u32 & 1) << (CONSTRAINT_LENGTH - 1));
        out.extend_from_slice(&branch_output(reg));
    }
    out
}

/// Indices of `drop` coded bits to remove out of `len`, spread evenly.
pub fn puncture_positions(len: usize, drop: usize) -> Vec<usize> {
    (0..drop).map(|i| ((2 * i + 1) * len) / (2 * drop)).collect()
}

/// Removes the coded bits at `positions` (sorted, unique).
pub fn puncture(coded: &[u8], positions: &[usize]) -> Vec<u8> {
    let mut skip = positions.iter().peekable();
    coded
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            if skip.peek() == Some(&i) {
                skip.next();
                false
            } else {
                true
            }
        })
        .map(|(_, &b)| b)
        .collect()
}

/// Reinserts erasures (soft value 0) at the punctured positions.
pub fn depuncture(soft: &[f64], positions: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(soft.len() + positions.len());
    let mut src = soft.iter();
    let mut skip = positions.iter().peekable();
    while out.len() < soft.len() + positions.len() {
        if skip.peek() == Some(&&out.len()) {
            skip.next();
            out.push(0.0);
        } else {
            out.push(*src.next().expect("soft input shorter than expected"));
        }
    }
    out
}

/// Maximum-likelihood decoding of a terminated stream.
///
/// `soft[i] > 0` favours coded bit 0; the magnitude is the reliability and 0
/// marks an erasure. Returns the `soft.len() / 2 − (K − 1)` information bits.
pub fn viterbi_decode(soft: &[f64]) -> Vec<u8> {
    let steps = soft.len() / 2;
    let info = steps.saturating_sub(CONSTRAINT_LENGTH - 1);
    let mut metric = vec![f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut next = vec![0.0; STATES];
    // survivor input bit and predecessor per state per step
    let mut from = vec![0u8; steps * STATES];

    let outputs: Vec<[f64; 2]> = (0..2 * STATES as u32)
        .map(|reg| branch_output(reg).map(|c| 1.0 - 2.0 * c as f64))
        .collect();

    for t in 0..steps {
        let (y0, y1) = (soft[2 * t], soft[2 * t + 1]);
        let forced_zero = t >= info;
        for (s, slot) in next.iter_mut().enumerate() {
            // state s holds the six newest bits, bit 5 newest
            let input = (s >> (CONSTRAINT_LENGTH - 2)) as u32;
            if forced_zero && input == 1 {
                *slot = f64::NEG_INFINITY;
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0u8;
            for oldest in 0..2usize {
                let prev = ((s << 1) & (STATES - 1)) | oldest;
                if metric[prev] == f64::NEG_INFINITY {
                    continue;
                }
                let reg = (s << 1) | oldest;
                let o = outputs[reg];
                let m = metric[prev] + y0 * o[0] + y1 * o[1];
                if m > best {
                    best = m;
                    arg = oldest as u8;
                }
            }
            *slot = best;
            from[t * STATES + s] = arg;
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut state = if steps >= CONSTRAINT_LENGTH - 1 {
        0
    } else {
        (0..STATES)
            .max_by(|&a, &b| metric[a].total_cmp(&metric[b]))
            .unwrap_or(0)
    };
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        bits[t] = (state >> (CONSTRAINT_LENGTH - 2)) as u8 & 1;
        let oldest = from[t * STATES + state] as usize;
        state = ((state << 1) & (STATES - 1)) | oldest;
    }
    bits.truncate(info);
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn to_soft(bits: &[u8]) -> Vec<f64> {
        bits.iter().map(|&b| 1.0 - 2.0 * b as f64).collect()
    }

    #[test]
    fn crc_of_known_vectors() {
        // x³+x+1 long division by hand: 1000 → remainder of x⁶ mod g = x²+1
        assert_eq!(crc3(&[1, 0, 0, 0]), [1, 0, 1]);
        assert_eq!(crc3(&[0, 0, 0, 0]), [0, 0, 0]);
        assert_eq!(crc3(&[1]), [0, 1, 1]);
    }

    fn crc_by_division(bits: &[u8]) -> [u8; 3] {
        let mut poly: Vec<u8> = bits.to_vec();
        poly.extend([0, 0, 0]);
        for i in 0..bits.len() {
            if poly[i] == 1 {
                for (k, g) in [1u8, 0, 1, 1].iter().enumerate() {
                    poly[i + k] ^= g;
                }
            }
        }
        let n = poly.len();
        [poly[n - 3], poly[n - 2], poly[n - 1]]
    }

    #[test]
    fn single_bit_errors_detected_exhaustively() {
        for len in [35usize, 67] {
            let body: Vec<u8> = (0..len).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
            let mut frame = body.clone();
            frame.extend(crc3(&body));
            assert!(crc3_ok(&frame));
            for i in 0..frame.len() {
                let mut bad = frame.clone();
                bad[i] ^= 1;
                assert!(!crc3_ok(&bad), "len {len} bit {i}");
            }
        }
    }

    #[test]
    fn double_bit_errors_detected_unless_period_multiple() {
        // x³+x+1 is primitive with period 7
        let body = vec![1u8; 35];
        let mut frame = body.clone();
        frame.extend(crc3(&body));
        for i in 0..frame.len() {
            for j in (i + 1)..frame.len() {
                let mut bad = frame.clone();
                bad[i] ^= 1;
                bad[j] ^= 1;
                assert_eq!(crc3_ok(&bad), (j - i) % 7 == 0, "{i} {j}");
            }
        }
    }

    #[test]
    fn encoder_impulse_response_matches_generators() {
        let coded = conv_encode(&[1]);
        let g0: Vec<u8> = coded.iter().step_by(2).copied().collect();
        let g1: Vec<u8> = coded.iter().skip(1).step_by(2).copied().collect();
        // octal taps, newest input first: 133 = 1011011, 171 = 1111001
        assert_eq!(g0, vec![1, 0, 1, 1, 0, 1, 1]);
        assert_eq!(g1, vec![1, 1, 1, 1, 0, 0, 1]);
    }

    #[test]
    fn free_distance_is_ten() {
        let mut best = usize::MAX;
        for len in 1..=8 {
            for pattern in 1u32..(1 << len) {
                if pattern & 1 == 0 {
                    continue;
                }
                let bits: Vec<u8> = (0..len).map(|i| ((pattern >> i) & 1) as u8).collect();
                let w = conv_encode(&bits).iter().filter(|&&b| b == 1).count();
                best = best.min(w);
            }
        }
        assert_eq!(best, 10);
    }

    #[test]
    fn puncturing_round_trip() {
        let pos = puncture_positions(146, 12);
        assert_eq!(pos.len(), 12);
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(*pos.last().unwrap() < 146);
        let coded: Vec<u8> = (0..146).map(|i| (i % 3 == 0) as u8).collect();
        let p = puncture(&coded, &pos);
        assert_eq!(p.len(), 134);
        let back = depuncture(&to_soft(&p), &pos);
        assert_eq!(back.len(), 146);
        for (i, (&s, &c)) in back.iter().zip(&coded).enumerate() {
            if pos.contains(&i) {
                assert_eq!(s, 0.0);
            } else {
                assert_eq!(s, 1.0 - 2.0 * c as f64);
            }
        }
    }

    #[test]
    fn corrects_scattered_errors_through_puncturing() {
        let info: Vec<u8> = (0..67).map(|i| ((i * 13) % 7 % 2) as u8).collect();
        let coded = conv_encode(&info);
        let pos = puncture_positions(coded.len(), 12);
        let mut soft = to_soft(&puncture(&coded, &pos));
        for i in [3, 40, 77, 110] {
            soft[i] = -soft[i];
        }
        assert_eq!(viterbi_decode(&depuncture(&soft, &pos)), info);
    }

    proptest! {
        #[test]
        fn clean_round_trip(info in proptest::collection::vec(0u8..2, 1..80)) {
            let coded = conv_encode(&info);
            prop_assert_eq!(coded.len(), 2 * (info.len() + 6));
            prop_assert_eq!(viterbi_decode(&to_soft(&coded)), info);
        }

        #[test]
        fn crc_matches_long_division(bits in proptest::collection::vec(0u8..2, 1..70)) {
            prop_assert_eq!(crc3(&bits), crc_by_division(&bits));
        }
    }
}
