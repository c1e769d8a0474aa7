use hdbnn::hdcore::{
    bind, dot, embed_stats, hamming, ngram_hv, pack, permute, unpack, BipolarVector, BitVector, EmbedMode, HdError,
    HdVector, ItemMemory,
};
use hdbnn::textprep::{tokenize_semhash, Token};
use hdbnn::vectorizer::{ngram_stats, NgramStats};
use proptest::prelude::*;

fn bipolar(signs: &[bool]) -> BipolarVector {
    BipolarVector::new(signs.iter().map(|&s| if s { 1 } else { -1 }).collect()).unwrap()
}

#[test]
fn item_memory_is_reproducible_and_seeded() {
    let t = Token::new("hel").unwrap();
    let a = ItemMemory::new(1024, 1);
    assert_eq!(a.token_bits(&t), ItemMemory::new(1024, 1).token_bits(&t));
    assert_ne!(a.token_bits(&t), ItemMemory::new(1024, 2).token_bits(&t));
    assert_eq!(pack(&a.token_hv(&t)), a.token_bits(&t));
}

#[test]
fn dimension_mismatch_is_an_error() {
    let a = BitVector::zeros(64);
    let b = BitVector::zeros(65);
    assert!(matches!(hamming(&a, &b), Err(HdError::DimMismatch { .. })));
    assert!(bind(&bipolar(&[true]), &bipolar(&[true, false])).is_err());
}

#[test]
fn similar_sentences_embed_closer() {
    let mem = ItemMemory::new(4096, 0);
    let embed = |s: &str| {
        let stats = ngram_stats(&tokenize_semhash(s, 3).unwrap(), 1).unwrap();
        match embed_stats(&mem, &stats, EmbedMode::Binary).unwrap() {
            HdVector::Binary(b) => b,
            HdVector::Real(_) => unreachable!(),
        }
    };
    let a = embed("when does the next train leave for munich");
    let b = embed("when does the next train leave from munich");
    let c = embed("how do i install ubuntu drivers");
    assert!(dot(&a, &b).unwrap() > dot(&a, &c).unwrap() + 400);
}

#[test]
fn stats_json_round_trip() {
    let toks: Vec<Token> = ["a", "b", "a", "c"].iter().map(|s| Token::new(*s).unwrap()).collect();
    let stats = ngram_stats(&toks, 2).unwrap();
    assert_eq!(NgramStats::from_json(&stats.to_json()).unwrap(), stats);
}

proptest! {
    #[test]
    fn dot_equals_d_minus_twice_hamming(a in proptest::collection::vec(any::<bool>(), 1..300), seed in any::<u64>()) {
        let b: Vec<bool> = a.iter().enumerate().map(|(i, &x)| x ^ ((seed >> (i % 64)) & 1 == 1)).collect();
        let (pa, pb) = (BitVector::from_signs(a.len(), a.clone()), BitVector::from_signs(b.len(), b.clone()));
        let expected: i64 = bipolar(&a).dot(&bipolar(&b)).unwrap();
        prop_assert_eq!(dot(&pa, &pb).unwrap(), expected);
        prop_assert_eq!(a.len() as i64 - 2 * hamming(&pa, &pb).unwrap() as i64, expected);
    }

    #[test]
    fn pack_unpack_round_trip(a in proptest::collection::vec(any::<bool>(), 1..200)) {
        let v = bipolar(&a);
        prop_assert_eq!(unpack(&pack(&v)), v.clone());
        let bits = pack(&v);
        prop_assert_eq!(BitVector::from_bytes(&bits.to_bytes()).unwrap(), bits);
    }

    #[test]
    fn binding_is_self_inverse(a in proptest::collection::vec(any::<bool>(), 1..100), b_seed in any::<u64>()) {
        let b: Vec<bool> = (0..a.len()).map(|i| (b_seed >> (i % 64)) & 1 == 1).collect();
        let (va, vb) = (bipolar(&a), bipolar(&b));
        prop_assert_eq!(bind(&bind(&va, &vb).unwrap(), &vb).unwrap(), va);
    }

    #[test]
    fn permutation_preserves_dot(a in proptest::collection::vec(any::<bool>(), 2..100), j in 0usize..300) {
        let b: Vec<bool> = a.iter().rev().cloned().collect();
        let (va, vb) = (bipolar(&a), bipolar(&b));
        prop_assert_eq!(permute(&va, j).dot(&permute(&vb, j)).unwrap(), va.dot(&vb).unwrap());
        prop_assert_eq!(permute(&permute(&va, j), a.len() - j % a.len()), va);
    }

    #[test]
    fn binary_embedding_is_sign_of_real(words in proptest::collection::vec("[a-e]{1,4}", 1..12)) {
        let mem = ItemMemory::new(512, 3);
        let toks: Vec<Token> = words.iter().map(|w| Token::new(w.as_str()).unwrap()).collect();
        let stats = ngram_stats(&toks, 1).unwrap();
        let bin = embed_stats(&mem, &stats, EmbedMode::Binary).unwrap();
        let HdVector::Real(real) = embed_stats(&mem, &stats, EmbedMode::Real).unwrap() else { unreachable!() };
        let signs = BitVector::from_signs(512, real.values().iter().map(|&x| x >= 0.0));
        prop_assert_eq!(bin.as_binary().unwrap(), &signs);
        prop_assert!((real.norm() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn ngram_vector_is_deterministic(words in proptest::collection::vec("[a-z]{1,5}", 1..4)) {
        let mem = ItemMemory::new(256, 11);
        let toks: Vec<Token> = words.iter().map(|w| Token::new(w.as_str()).unwrap()).collect();
        prop_assert_eq!(ngram_hv(&mem, &toks), ngram_hv(&mem, &toks));
    }
}
