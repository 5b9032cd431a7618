//! Optimal K-ary prefix codes over a vocabulary.
//!
//! Under a constant branching factor K every valid wordform prefix extends in
//! exactly K ways, so assigning wordforms to minimise expected length is the
//! classic minimum-redundancy coding problem, solved by K-ary Huffman coding.
//!
//! Construction pads the leaf set with zero-weight dummies so that every merge
//! takes exactly K nodes (equivalently, the first merge of real nodes takes
//! `1 + (n - 1) mod (K - 1)` of them). Weight ties are broken by the
//! lexicographically smallest form contained in each subtree, with dummies
//! ordered first, which makes codebooks deterministic.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::{BufRead, Write};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::tsv;

const DIGITS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Largest branching factor whose codewords can be written one digit per
/// symbol.
pub const MAX_K: usize = DIGITS.len();

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum TieKey {
    Dummy(usize),
    Form(String),
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(String),
    Dummy,
    Internal(Vec<usize>),
}

/// A constructed Huffman tree, kept around for validity checks.
#[derive(Debug, Clone)]
pub struct HuffmanTree {
    k: usize,
    nodes: Vec<Node>,
    root: usize,
    /// Weights of each merged sibling group, in merge order.
    merges: Vec<Vec<u64>>,
}

impl HuffmanTree {
    pub fn build(k: usize, weights: &[(String, u64)]) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("code alphabet size must be at least 2, got {k}")));
        }
        if k > MAX_K {
            return Err(Error::Config(format!("code alphabet size must be at most {MAX_K}, got {k}")));
        }
        let real: Vec<&(String, u64)> = weights.iter().filter(|(_, w)| *w > 0).collect();
        if real.is_empty() {
            return Err(Error::validation("cannot build a code for an empty vocabulary"));
        }
        let n = real.len();
        let dummies = if n == 1 { k - 1 } else { (k - 1 - (n - 1) % (k - 1)) % (k - 1) };

        let mut nodes = Vec::with_capacity(2 * (n + dummies));
        let mut heap = BinaryHeap::new();
        for (form, w) in real {
            heap.push(Reverse((*w, TieKey::Form(form.clone()), nodes.len())));
            nodes.push(Node::Leaf(form.clone()));
        }
        for d in 0..dummies {
            heap.push(Reverse((0, TieKey::Dummy(d), nodes.len())));
            nodes.push(Node::Dummy);
        }

        let mut merges = Vec::new();
        while heap.len() > 1 {
            let mut children = Vec::with_capacity(k);
            let mut group = Vec::with_capacity(k);
            let mut total = 0u64;
            let mut key = None;
            for _ in 0..k {
                let Reverse((w, tk, idx)) = heap.pop().expect("heap size is 1 mod (k - 1)");
                total += w;
                group.push(w);
                children.push(idx);
                key = Some(match key {
                    None => tk,
                    Some(prev) => std::cmp::min(prev, tk),
                });
            }
            merges.push(group);
            heap.push(Reverse((total, key.expect("k >= 2 nodes merged"), nodes.len())));
            nodes.push(Node::Internal(children));
        }
        let Reverse((_, _, root)) = heap.pop().expect("non-empty heap");
        Ok(HuffmanTree { k, nodes, root, merges })
    }

    /// Sibling property: listing sibling groups in merge order gives a
    /// non-decreasing weight sequence, so nodes can be ordered by weight with
    /// siblings adjacent.
    pub fn sibling_property_holds(&self) -> bool {
        let mut prev_max = 0u64;
        for group in &self.merges {
            if group.len() != self.k || group.windows(2).any(|w| w[0] > w[1]) || group[0] < prev_max {
                return false;
            }
            prev_max = *group.last().expect("non-empty group");
        }
        true
    }

    pub fn codewords(&self) -> BTreeMap<String, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![(self.root, Vec::new())];
        while let Some((idx, prefix)) = stack.pop() {
            match &self.nodes[idx] {
                Node::Leaf(form) => {
                    out.insert(form.clone(), prefix);
                }
                Node::Dummy => {}
                Node::Internal(children) => {
                    for (digit, &child) in children.iter().enumerate() {
                        let mut p = prefix.clone();
                        p.push(digit as u8);
                        stack.push((child, p));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeBook {
    k: usize,
    code: BTreeMap<String, Vec<u8>>,
    expected_length: Option<f64>,
}

/// Builds an optimal K-ary prefix code for the words of `freq`.
pub fn build_huffman_k(freq: &FrequencyTable, k: usize) -> Result<CodeBook> {
    let weights: Vec<(String, u64)> = freq.iter().map(|r| (r.form.clone(), r.frequency)).collect();
    let tree = HuffmanTree::build(k, &weights)?;
    let code = tree.codewords();
    let expected = freq.iter().map(|r| r.rel_freq * code[&r.form].len() as f64).sum();
    Ok(CodeBook { k, code, expected_length: Some(expected) })
}

/// `ceil(-log_k p) + 1`.
pub fn length_bound(p: f64, k: usize) -> usize {
    let bits = -p.ln() / (k as f64).ln();
    // guard against log rounding pushing exact powers of k up a step
    ((bits - 1e-9).ceil().max(0.0) as usize) + 1
}

/// Entropy of the table's relative frequencies in base `k`.
pub fn entropy_base(freq: &FrequencyTable, k: usize) -> f64 {
    let ln_k = (k as f64).ln();
    freq.iter().filter(|r| r.rel_freq > 0.0).map(|r| -r.rel_freq * r.rel_freq.ln() / ln_k).sum()
}

struct Trie {
    children: Vec<Vec<Option<usize>>>,
    leaf: Vec<Option<String>>,
}

impl CodeBook {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    pub fn codeword(&self, form: &str) -> Option<&[u8]> {
        self.code.get(form).map(Vec::as_slice)
    }

    pub fn lengths(&self) -> BTreeMap<&str, usize> {
        self.code.iter().map(|(f, c)| (f.as_str(), c.len())).collect()
    }

    /// `sum p(w) |code(w)|`; not stored in the TSV form, so `None` after
    /// reading a codebook back.
    pub fn expected_length(&self) -> Option<f64> {
        self.expected_length
    }

    pub fn kraft_sum(&self) -> f64 {
        let k = self.k as f64;
        self.code.values().map(|c| k.powi(-(c.len() as i32))).sum()
    }

    pub fn is_prefix_free(&self) -> bool {
        // in sorted order a codeword that prefixes another sorts directly before
        // some word it prefixes
        let mut words: Vec<&Vec<u8>> = self.code.values().collect();
        words.sort();
        words.windows(2).all(|w| !w[1].starts_with(w[0]))
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for w in words {
            let c = self.code.get(w.as_ref()).ok_or_else(|| Error::Lookup(w.as_ref().to_string()))?;
            out.extend_from_slice(c);
        }
        Ok(out)
    }

    fn trie(&self) -> Trie {
        let mut t = Trie { children: vec![vec![None; self.k]], leaf: vec![None] };
        for (form, code) in &self.code {
            let mut at = 0;
            for &d in code {
                at = match t.children[at][d as usize] {
                    Some(next) => next,
                    None => {
                        t.children.push(vec![None; self.k]);
                        t.leaf.push(None);
                        let next = t.children.len() - 1;
                        t.children[at][d as usize] = Some(next);
                        next
                    }
                };
            }
            t.leaf[at] = Some(form.clone());
        }
        t
    }

    pub fn decode(&self, symbols: &[u8]) -> Result<Vec<String>> {
        let trie = self.trie();
        let mut out = Vec::new();
        let mut at = 0;
        for (offset, &s) in symbols.iter().enumerate() {
            if s as usize >= self.k {
                return Err(Error::CorruptStream { offset, message: format!("symbol {s} outside alphabet of size {}", self.k) });
            }
            at = match trie.children[at][s as usize] {
                Some(next) => next,
                None => return Err(Error::CorruptStream { offset, message: "no codeword continues with this symbol".into() }),
            };
            if let Some(form) = &trie.leaf[at] {
                out.push(form.clone());
                at = 0;
            }
        }
        if at != 0 {
            return Err(Error::CorruptStream { offset: symbols.len(), message: "stream ends inside a codeword".into() });
        }
        Ok(out)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        tsv::write_header(&mut out, &["form", "codeword"])?;
        for (form, code) in &self.code {
            let digits: String = code.iter().map(|&d| DIGITS[d as usize] as char).collect();
            writeln!(out, "{form}\t{digits}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, k: usize) -> Result<Self> {
        if !(2..=MAX_K).contains(&k) {
            return Err(Error::Config(format!("code alphabet size must be in 2..={MAX_K}, got {k}")));
        }
        let mut code = BTreeMap::new();
        tsv::for_each_row(reader, &["form", "codeword"], |line, f| {
            let digits = f[1]
                .bytes()
                .map(|b| match DIGITS.iter().position(|&d| d == b) {
                    Some(d) if d < k => Ok(d as u8),
                    _ => Err(Error::Parse { line, message: format!("invalid base-{k} digit {:?}", b as char) }),
                })
                .collect::<Result<Vec<u8>>>()?;
            if digits.is_empty() {
                return Err(Error::Validation { line: Some(line), message: "empty codeword".into() });
            }
            if code.insert(f[0].to_string(), digits).is_some() {
                return Err(Error::Validation { line: Some(line), message: format!("duplicate form {:?}", f[0]) });
            }
            Ok(())
        })?;
        let book = CodeBook { k, code, expected_length: None };
        if !book.is_prefix_free() {
            return Err(Error::validation("codebook is not prefix-free"));
        }
        Ok(book)
    }
}

/// Encodes then decodes `words`.
pub fn roundtrip<S: AsRef<str>>(book: &CodeBook, words: &[S]) -> Result<Vec<String>> {
    book.decode(&book.encode(words)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(counts: &[(&str, u64)]) -> FrequencyTable {
        let total = counts.iter().map(|c| c.1).sum();
        FrequencyTable::from_counts(counts.iter().map(|(f, c)| (f.to_string(), *c)), total, None)
    }

    #[test]
    fn dyadic_binary_example() {
        let b = build_huffman_k(&table(&[("a", 2), ("b", 1), ("c", 1)]), 2).unwrap();
        let l = b.lengths();
        assert_eq!((l["a"], l["b"], l["c"]), (1, 2, 2));
        assert_eq!(b.expected_length(), Some(1.5));
        assert_eq!(b.kraft_sum(), 1.0);
    }

    #[test]
    fn ternary_equiprobable_uses_one_symbol_each() {
        let b = build_huffman_k(&table(&[("a", 1), ("b", 1), ("c", 1)]), 3).unwrap();
        assert!(b.lengths().values().all(|&l| l == 1));
    }

    #[test]
    fn dummy_padding_for_ternary_even_vocab() {
        // n=4, k=3: one dummy, first real merge takes 1 + (3 mod 2) = 2 nodes
        let t = table(&[("a", 5), ("b", 3), ("c", 1), ("d", 1)]);
        let b = build_huffman_k(&t, 3).unwrap();
        let l = b.lengths();
        assert_eq!((l["a"], l["b"], l["c"], l["d"]), (1, 1, 2, 2));
        assert!(b.kraft_sum() < 1.0);
    }

    #[test]
    fn single_word_gets_one_symbol() {
        let b = build_huffman_k(&table(&[("only", 7)]), 2).unwrap();
        assert_eq!(b.codeword("only").map(<[u8]>::len), Some(1));
        assert_eq!(roundtrip(&b, &["only", "only"]).unwrap(), ["only", "only"]);
    }

    #[test]
    fn ties_are_deterministic() {
        let t = table(&[("d", 1), ("c", 1), ("b", 1), ("a", 1)]);
        let b1 = build_huffman_k(&t, 2).unwrap();
        let b2 = build_huffman_k(&t, 2).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.codeword("a"), Some(&[0u8, 0][..]));
    }

    #[test]
    fn config_errors() {
        let t = table(&[("a", 1)]);
        assert!(matches!(build_huffman_k(&t, 1), Err(Error::Config(_))));
        assert!(matches!(build_huffman_k(&t, 37), Err(Error::Config(_))));
        assert!(build_huffman_k(&FrequencyTable::default(), 2).is_err());
    }

    #[test]
    fn sibling_property_on_skewed_weights() {
        let w: Vec<(String, u64)> = [1u64, 1, 2, 3, 5, 8, 13, 21, 34].iter().enumerate().map(|(i, &c)| (format!("w{i}"), c)).collect();
        for k in [2, 3, 4] {
            assert!(HuffmanTree::build(k, &w).unwrap().sibling_property_holds());
        }
    }

    #[test]
    fn per_word_bound_is_not_a_huffman_guarantee() {
        // Fibonacci weights drive the rarest word as deep as the vocabulary
        // allows, past ceil(-log2 p) + 1.
        let fib = [1u64, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144];
        let t = FrequencyTable::from_counts(fib.iter().enumerate().map(|(i, &c)| (format!("w{i:02}"), c)), 376, None);
        let b = build_huffman_k(&t, 2).unwrap();
        let r = t.get("w00").unwrap();
        assert_eq!(b.codeword("w00").unwrap().len(), 11);
        assert_eq!(length_bound(r.rel_freq, 2), 10);
        // the expected-length bound still holds
        assert!(b.expected_length().unwrap() < entropy_base(&t, 2) + 1.0);
    }

    #[test]
    fn length_bound_at_exact_powers() {
        assert_eq!(length_bound(0.25, 2), 3);
        assert_eq!(length_bound(1.0 / 9.0, 3), 3);
        assert_eq!(length_bound(1.0, 2), 1);
    }

    #[test]
    fn roundtrip_and_errors() {
        let b = build_huffman_k(&table(&[("a", 2), ("b", 1), ("c", 1)]), 2).unwrap();
        assert_eq!(roundtrip(&b, &["a", "b", "a"]).unwrap(), ["a", "b", "a"]);
        assert!(roundtrip::<&str>(&b, &[]).unwrap().is_empty());
        assert!(matches!(b.encode(&["zzz"]), Err(Error::Lookup(_))));
        let mut s = b.encode(&["b"]).unwrap();
        s.pop();
        assert!(matches!(b.decode(&s), Err(Error::CorruptStream { offset: 1, .. })));
        assert!(matches!(b.decode(&[0, 5]), Err(Error::CorruptStream { offset: 1, .. })));
    }

    #[test]
    fn dummy_branches_are_corrupt() {
        let b = build_huffman_k(&table(&[("a", 5), ("b", 3), ("c", 1), ("d", 1)]), 3).unwrap();
        let used: Vec<&[u8]> = ["a", "b", "c", "d"].iter().map(|f| b.codeword(f).unwrap()).collect();
        let unused = (0..3u8)
            .flat_map(|x| (0..3u8).map(move |y| vec![x, y]))
            .find(|c| !used.iter().any(|u| c.starts_with(u)))
            .unwrap();
        assert!(matches!(b.decode(&unused), Err(Error::CorruptStream { .. })));
    }

    #[test]
    fn tsv_round_trip_and_validation() {
        let t = table(&[("a", 9), ("b", 5), ("c", 3), ("d", 2), ("e", 1)]);
        let b = build_huffman_k(&t, 3).unwrap();
        let mut buf = Vec::new();
        b.write_tsv(&mut buf).unwrap();
        let back = CodeBook::read_tsv(&buf[..], 3).unwrap();
        assert_eq!(back.lengths(), b.lengths());
        assert_eq!(back.encode(&["a", "e"]).unwrap(), b.encode(&["a", "e"]).unwrap());
        let not_prefix_free = "form\tcodeword\na\t0\nb\t01\n";
        assert!(CodeBook::read_tsv(not_prefix_free.as_bytes(), 2).is_err());
        let bad_digit = "form\tcodeword\na\t2\n";
        assert!(matches!(CodeBook::read_tsv(bad_digit.as_bytes(), 2), Err(Error::Parse { line: 2, .. })));
    }
}
