//! Rate-1/2, constraint-length-7 convolutional code (generators 133, 171
//! octal), hard-decision Viterbi decoding and a row-column interleaver.

use crate::error::{Error, Result};

pub const CONSTRAINT_LENGTH: usize = 7;
pub const GENERATORS: [u32; 2] = [0o133, 0o171];
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;
const N_STATES: usize = 1 << TAIL_BITS;

/// Both coded bits for `input` entering a register whose previous six
/// inputs are `state` (most recent in bit 5).
#[inline]
fn branch_output(state: usize, input: usize) -> [u8; 2] {
    let reg = ((input << TAIL_BITS) | state) as u32;
    GENERATORS.map(|g| ((reg & g).count_ones() & 1) as u8)
}

#[inline]
fn next_state(state: usize, input: usize) -> usize {
    (input << (TAIL_BITS - 1)) | (state >> 1)
}

/// Encode and terminate with six zero tail bits; output has 2 (n + 6) bits.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * (bits.len() + TAIL_BITS));
    let mut state = 0;
    for &b in bits.iter().chain(std::iter::repeat_n(&0, TAIL_BITS)) {
        let b = (b & 1) as usize;
        out.extend_from_slice(&branch_output(state, b));
        state = next_state(state, b);
    }
    out
}

/// Maximum-likelihood decoding of a terminated codeword under Hamming distance.
pub fn viterbi_decode(coded: &[u8]) -> Result<Vec<u8>> {
    if !coded.len().is_multiple_of(2) || coded.len() < 2 * TAIL_BITS {
        return Err(Error::Framing(format!(
            "codeword length {} is not an even number >= {}",
            coded.len(),
            2 * TAIL_BITS
        )));
    }
    let steps = coded.len() / 2;
    let mut table = [[[0u8; 2]; 2]; N_STATES];
    for (s, row) in table.iter_mut().enumerate() {
        for (b, out) in row.iter_mut().enumerate() {
            *out = branch_output(s, b);
        }
    }
    const INF: u32 = u32::MAX / 4;
    let mut metric = [INF; N_STATES];
    metric[0] = 0;
    let mut next = [0u32; N_STATES];
    let mut decisions = Vec::with_capacity(steps);
    for pair in coded.chunks_exact(2) {
        let (r0, r1) = (pair[0] & 1, pair[1] & 1);
        let mut dec = 0u64;
        for (ns, slot) in next.iter_mut().enumerate() {
            let b = ns >> (TAIL_BITS - 1);
            let base = (ns << 1) & (N_STATES - 1);
            let cost = |s: usize| {
                let o = table[s][b];
                metric[s] + u32::from(o[0] ^ r0) + u32::from(o[1] ^ r1)
            };
            let (m0, m1) = (cost(base), cost(base | 1));
            if m1 < m0 {
                *slot = m1;
                dec |= 1 << ns;
            } else {
                *slot = m0;
            }
        }
        metric = next;
        decisions.push(dec);
    }
    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for (t, dec) in decisions.iter().enumerate().rev() {
        bits[t] = (state >> (TAIL_BITS - 1)) as u8;
        state = ((state << 1) & (N_STATES - 1)) | ((dec >> state) & 1) as usize;
    }
    bits.truncate(steps - TAIL_BITS);
    Ok(bits)
}

/// Frame interleaver over `rows` OFDM symbols of `cols` coded bits each.
///
/// Input bit `i` goes to symbol `i % rows` and column `c = i / rows`, so
/// consecutive bits visit every symbol in turn. Within a symbol the column is
/// spread with a 16-column row-column permutation and then rotated by three
/// subcarriers per symbol index, which keeps neighbouring bits on distant
/// subcarriers even when the channel does not change over the frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockInterleaver {
    rows: usize,
    cols: usize,
    group: usize,
}

const SPREAD_COLUMNS: usize = 16;
const SUBCARRIER_SHIFT: usize = 3;

impl BlockInterleaver {
    /// `group` is the number of bits carried by one subcarrier.
    pub fn new(rows: usize, cols: usize, group: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || group == 0 || !cols.is_multiple_of(group) {
            return Err(Error::Config(format!(
                "interleaver needs positive rows and columns divisible by {group}"
            )));
        }
        Ok(Self { rows, cols, group })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Output position of input bit `i`.
    pub fn position(&self, i: usize) -> usize {
        let (r, c) = (i % self.rows, i / self.rows);
        let spread = if self.cols.is_multiple_of(SPREAD_COLUMNS) {
            (c % SPREAD_COLUMNS) * (self.cols / SPREAD_COLUMNS) + c / SPREAD_COLUMNS
        } else {
            c
        };
        let shift = (r * SUBCARRIER_SHIFT * self.group) % self.cols;
        r * self.cols + (spread + shift) % self.cols
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Framing(format!(
                "interleaver expects {} bits, got {len}",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn interleave<T: Copy + Default>(&self, bits: &[T]) -> Result<Vec<T>> {
        self.check(bits.len())?;
        let mut out = vec![T::default(); bits.len()];
        for (i, &b) in bits.iter().enumerate() {
            out[self.position(i)] = b;
        }
        Ok(out)
    }

    pub fn deinterleave<T: Copy + Default>(&self, bits: &[T]) -> Result<Vec<T>> {
        self.check(bits.len())?;
        Ok((0..bits.len()).map(|i| bits[self.position(i)]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_response_matches_generators() {
        let c = conv_encode(&[1]);
        // The impulse walks through the register, reading each generator MSB first.
        let g0: Vec<u8> = c.iter().step_by(2).copied().collect();
        let g1: Vec<u8> = c.iter().skip(1).step_by(2).copied().collect();
        assert_eq!(g0, vec![1, 0, 1, 1, 0, 1, 1]);
        assert_eq!(g1, vec![1, 1, 1, 1, 0, 0, 1]);
    }

    #[test]
    fn short_codeword_rejected() {
        assert!(viterbi_decode(&[0; 11]).is_err());
        assert!(viterbi_decode(&[0; 13]).is_err());
        assert_eq!(viterbi_decode(&[0; 12]).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn interleaver_length_checked() {
        let il = BlockInterleaver::new(20, 4, 2).unwrap();
        assert!(il.interleave(&[0u8; 79]).is_err());
    }
}
