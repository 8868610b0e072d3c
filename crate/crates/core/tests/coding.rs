use phn_codebook::coding::{conv_encode, viterbi_decode, BlockInterleaver};
use proptest::prelude::*;

/// Shift-register encoder written out bit by bit.
fn reference_encode(bits: &[u8]) -> Vec<u8> {
    let gens = [0o133u32, 0o171];
    let mut reg = [0u8; 7];
    let mut out = Vec::new();
    for &b in bits.iter().chain([0u8; 6].iter()) {
        reg.rotate_right(1);
        reg[0] = b;
        for g in gens {
            let mut acc = 0;
            for (i, &r) in reg.iter().enumerate() {
                acc ^= r & ((g >> (6 - i)) & 1) as u8;
            }
            out.push(acc);
        }
    }
    out
}

fn bits(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 0..max)
}

proptest! {
    #[test]
    fn encoder_matches_shift_register(b in bits(200)) {
        prop_assert_eq!(conv_encode(&b), reference_encode(&b));
    }

    #[test]
    fn decode_inverts_encode(b in bits(300)) {
        prop_assert_eq!(viterbi_decode(&conv_encode(&b)).unwrap(), b);
    }

    // Free distance 10: any four channel errors are corrected.
    #[test]
    fn four_errors_are_corrected(b in bits(200), flips in prop::collection::vec(any::<prop::sample::Index>(), 1..=4)) {
        let mut c = conv_encode(&b);
        let mut pos: Vec<usize> = flips.iter().map(|f| f.index(c.len())).collect();
        pos.sort_unstable();
        pos.dedup();
        for p in pos {
            c[p] ^= 1;
        }
        prop_assert_eq!(viterbi_decode(&c).unwrap(), b);
    }

    #[test]
    fn interleaver_is_a_permutation(rows in 1usize..30, groups in 1usize..20, group in 1usize..7) {
        let il = BlockInterleaver::new(rows, groups * group, group).unwrap();
        let n = il.len();
        let mut seen = vec![false; n];
        for i in 0..n {
            let p = il.position(i);
            prop_assert!(p < n && !seen[p]);
            seen[p] = true;
        }
        let x: Vec<u32> = (0..n as u32).collect();
        prop_assert_eq!(il.deinterleave(&il.interleave(&x).unwrap()).unwrap(), x);
    }
}

#[test]
fn impulse_response_is_the_generators() {
    let c = conv_encode(&[1]);
    let pairs: Vec<[u8; 2]> = c.chunks(2).map(|p| [p[0], p[1]]).collect();
    // 133 = 1011011, 171 = 1111001.
    assert_eq!(pairs, vec![[1, 1], [0, 1], [1, 1], [1, 1], [0, 0], [1, 0], [1, 1]]);
}

#[test]
fn frame_interleaver_separates_neighbouring_bits() {
    // 20 symbols of 56 subcarriers with 4 bits each.
    let il = BlockInterleaver::new(20, 224, 4).unwrap();
    for i in 0..il.len() - 1 {
        let (a, b) = (il.position(i), il.position(i + 1));
        assert_ne!(a / 4, b / 4, "bits {i} and {} share a subcarrier", i + 1);
    }
}

#[test]
fn malformed_input_is_rejected() {
    assert!(viterbi_decode(&[0, 1, 1]).is_err());
    assert!(viterbi_decode(&[0; 4]).is_err());
    assert!(BlockInterleaver::new(4, 6, 4).is_err());
    assert!(BlockInterleaver::new(4, 8, 4).unwrap().interleave(&[0u8; 3]).is_err());
}
