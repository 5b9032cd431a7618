use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wordlen::coder::{build_huffman_k, entropy_base, roundtrip, CodeBook, HuffmanTree};
use wordlen::corpus::FrequencyTable;
use wordlen::Error;

fn freq(counts: &[u64]) -> FrequencyTable {
    let total = counts.iter().sum();
    FrequencyTable::from_counts(counts.iter().enumerate().map(|(i, c)| (format!("w{i:02}"), *c)), total, None)
}

proptest! {
    #[test]
    fn codes_are_valid(counts in proptest::collection::vec(1u64..10_000, 1..80), k in 2usize..7) {
        let f = freq(&counts);
        let book = build_huffman_k(&f, k).unwrap();
        prop_assert!(book.is_prefix_free());
        prop_assert!(book.kraft_sum() <= 1.0 + 1e-12);
        let (e, h) = (book.expected_length().unwrap(), entropy_base(&f, k));
        // a lone word still needs one symbol, so E = H + 1 = 1 there
        if counts.len() == 1 {
            prop_assert_eq!(e, 1.0);
        } else {
            prop_assert!(e < h + 1.0);
        }
        let weights: Vec<(String, u64)> = f.iter().map(|r| (r.form.clone(), r.frequency)).collect();
        prop_assert!(HuffmanTree::build(k, &weights).unwrap().sibling_property_holds());
    }

    #[test]
    fn streams_round_trip(counts in proptest::collection::vec(1u64..100, 1..30), k in 2usize..5, picks in proptest::collection::vec(0usize..30, 0..200)) {
        let f = freq(&counts);
        let book = build_huffman_k(&f, k).unwrap();
        let words: Vec<String> = picks.iter().map(|p| format!("w{:02}", p % counts.len())).collect();
        prop_assert_eq!(roundtrip(&book, &words).unwrap(), words);
    }

    #[test]
    fn tsv_round_trips(counts in proptest::collection::vec(1u64..1000, 1..40), k in 2usize..11) {
        let book = build_huffman_k(&freq(&counts), k).unwrap();
        let mut buf = Vec::new();
        book.write_tsv(&mut buf).unwrap();
        let back = CodeBook::read_tsv(&buf[..], k).unwrap();
        prop_assert_eq!(back.lengths(), book.lengths());
        let mut again = Vec::new();
        back.write_tsv(&mut again).unwrap();
        prop_assert_eq!(again, buf);
    }
}

#[test]
fn thousand_words_from_fifty_word_book() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let counts: Vec<u64> = (0..50).map(|_| rng.random_range(1..500)).collect();
    let book = build_huffman_k(&freq(&counts), 2).unwrap();
    let words: Vec<String> = (0..1000).map(|_| format!("w{:02}", rng.random_range(0..50))).collect();
    assert_eq!(roundtrip(&book, &words).unwrap(), words);
}

#[test]
fn small_examples() {
    let f = FrequencyTable::from_counts([("a".to_string(), 2), ("b".to_string(), 1), ("c".to_string(), 1)], 4, None);
    let book = build_huffman_k(&f, 2).unwrap();
    let l = book.lengths();
    assert_eq!((l["a"], l["b"], l["c"]), (1, 2, 2));
    assert_eq!(book.expected_length(), Some(1.5));
    assert_eq!(roundtrip(&book, &["a", "b", "a"]).unwrap(), ["a", "b", "a"]);
    assert!(roundtrip::<&str>(&book, &[]).unwrap().is_empty());

    let eq = FrequencyTable::from_counts([("x".to_string(), 1), ("y".to_string(), 1), ("z".to_string(), 1)], 3, None);
    assert!(build_huffman_k(&eq, 3).unwrap().lengths().values().all(|&l| l == 1));
}

#[test]
fn errors() {
    let f = freq(&[3, 2, 1]);
    assert!(matches!(build_huffman_k(&f, 1), Err(Error::Config(_))));
    assert!(build_huffman_k(&freq(&[]), 2).is_err());
    let book = build_huffman_k(&f, 2).unwrap();
    assert!(matches!(book.encode(&["nope"]), Err(Error::Lookup(_))));
    let mut stream = book.encode(&["w00", "w02"]).unwrap();
    stream.pop();
    assert!(matches!(book.decode(&stream), Err(Error::CorruptStream { .. })));
    assert!(matches!(book.decode(&[7]), Err(Error::CorruptStream { offset: 0, .. })));
}

#[test]
fn codebooks_are_deterministic_under_ties() {
    let f = freq(&[5; 17]);
    assert_eq!(build_huffman_k(&f, 3).unwrap(), build_huffman_k(&f, 3).unwrap());
}
