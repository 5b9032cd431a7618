//! Text ingestion, word filtering and frequency counting.
//!
//! Tokens are maximal runs of non-separator characters, where the separators
//! are ASCII whitespace plus U+00A0 (no-break space). Input is decoded as
//! UTF-8 in a streaming fashion so arbitrarily large files can be counted
//! without being loaded whole.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::{BufRead, Read, Write};
use std::num::NonZeroUsize;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::format_sig17;
use crate::tsv;

/// The 32 ASCII punctuation characters.
pub const DEFAULT_PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

const CHUNK: usize = 64 * 1024;

pub fn is_separator(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\u{0B}' | '\u{0C}' | '\u{A0}')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterProtocol {
    /// Every whitespace-separated token.
    All,
    /// Tokens containing no punctuation character.
    #[serde(rename = "nopunct")]
    NoPunct,
    /// Tokens made only of alphabet characters.
    #[serde(rename = "alpha")]
    AlphabetOnly,
}

impl FromStr for FilterProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(FilterProtocol::All),
            "nopunct" => Ok(FilterProtocol::NoPunct),
            "alpha" => Ok(FilterProtocol::AlphabetOnly),
            other => Err(Error::Config(format!("unknown filter protocol {other:?} (expected all|nopunct|alpha)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub alphabet: BTreeSet<char>,
    pub punctuation: BTreeSet<char>,
    pub filter: FilterProtocol,
    pub top_n: Option<NonZeroUsize>,
    pub lowercase: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            alphabet: ('a'..='z').collect(),
            punctuation: DEFAULT_PUNCTUATION.chars().collect(),
            filter: FilterProtocol::All,
            top_n: None,
            lowercase: false,
        }
    }
}

impl CorpusConfig {
    pub fn with_filter(mut self, filter: FilterProtocol) -> Self {
        self.filter = filter;
        self
    }

    pub fn with_top_n(mut self, top_n: Option<usize>) -> Result<Self> {
        self.top_n = match top_n {
            None => None,
            Some(n) => Some(NonZeroUsize::new(n).ok_or_else(|| Error::Config("top_n must be at least 1".into()))?),
        };
        Ok(self)
    }

    /// Alphabet from text: every non-separator character is a member.
    pub fn with_alphabet_str(mut self, text: &str) -> Result<Self> {
        let alphabet: BTreeSet<char> = text.chars().filter(|c| !is_separator(*c)).collect();
        if alphabet.is_empty() {
            return Err(Error::Config("alphabet is empty".into()));
        }
        self.alphabet = alphabet;
        Ok(self)
    }

    pub fn with_alphabet_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read alphabet file {}: {e}", path.display())))?;
        self.with_alphabet_str(&text)
    }

    /// Applies case folding (when enabled).
    pub fn normalize(&self, token: String) -> String {
        if self.lowercase {
            token.to_lowercase()
        } else {
            token
        }
    }

    pub fn keeps(&self, token: &str) -> bool {
        match self.filter {
            FilterProtocol::All => true,
            FilterProtocol::NoPunct => !token.chars().any(|c| self.punctuation.contains(&c)),
            FilterProtocol::AlphabetOnly => token.chars().all(|c| self.alphabet.contains(&c)),
        }
    }
}

/// Streaming whitespace tokenizer over a UTF-8 byte stream.
pub struct Tokens<R> {
    reader: R,
    pending: Vec<u8>,
    pending_offset: usize,
    current: String,
    ready: VecDeque<String>,
    finished: bool,
}

pub fn tokenize<R: Read>(reader: R) -> Tokens<R> {
    Tokens {
        reader,
        pending: Vec::new(),
        pending_offset: 0,
        current: String::new(),
        ready: VecDeque::new(),
        finished: false,
    }
}

impl<R: Read> Tokens<R> {
    fn push_text(&mut self, text: &str) {
        for c in text.chars() {
            if is_separator(c) {
                if !self.current.is_empty() {
                    self.ready.push_back(std::mem::take(&mut self.current));
                }
            } else {
                self.current.push(c);
            }
        }
    }

    fn fill(&mut self) -> Result<()> {
        let mut chunk = [0u8; CHUNK];
        let n = loop {
            match self.reader.read(&mut chunk) {
                Ok(n) => break n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        };
        if n == 0 {
            self.finished = true;
            if !self.pending.is_empty() {
                return Err(Error::Decode { offset: self.pending_offset });
            }
            if !self.current.is_empty() {
                self.ready.push_back(std::mem::take(&mut self.current));
            }
            return Ok(());
        }
        self.pending.extend_from_slice(&chunk[..n]);
        let valid = match std::str::from_utf8(&self.pending) {
            Ok(_) => self.pending.len(),
            Err(e) if e.error_len().is_some() => {
                self.finished = true;
                return Err(Error::Decode { offset: self.pending_offset + e.valid_up_to() });
            }
            Err(e) => e.valid_up_to(),
        };
        let rest = self.pending.split_off(valid);
        let text = std::mem::replace(&mut self.pending, rest);
        let text = String::from_utf8(text).expect("prefix validated as UTF-8");
        self.push_text(&text);
        self.pending_offset += valid;
        Ok(())
    }
}

impl<R: Read> Iterator for Tokens<R> {
    type Item = Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(tok) = self.ready.pop_front() {
                return Some(Ok(tok));
            }
            if self.finished {
                return None;
            }
            if let Err(e) = self.fill() {
                return Some(Err(e));
            }
        }
    }
}

/// Splits `reader` into tokens, case-folds them when configured and keeps
/// those admitted by the filter protocol, preserving order.
pub fn ingest_and_filter<R: Read>(reader: R, config: &CorpusConfig) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for tok in tokenize(reader) {
        let tok = config.normalize(tok?);
        if config.keeps(&tok) {
            out.push(tok);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    pub form: String,
    /// Number of Unicode scalar values in `form`.
    pub length: usize,
    pub frequency: u64,
    pub rel_freq: f64,
}

pub fn word_length(form: &str) -> usize {
    form.chars().count()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    records: BTreeMap<String, WordRecord>,
    total_tokens: u64,
}

impl FrequencyTable {
    /// Builds a table from raw counts. With `top_n` set only the most
    /// frequent forms survive (ties broken by ascending form) and relative
    /// frequencies are renormalised over the survivors. Zero counts are
    /// dropped.
    pub fn from_counts<I>(counts: I, total_tokens: u64, top_n: Option<NonZeroUsize>) -> Self
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let mut ranked: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(n) = top_n {
            ranked.truncate(n.get());
        }
        let retained: u64 = ranked.iter().map(|(_, c)| c).sum();
        let records = ranked
            .into_iter()
            .map(|(form, frequency)| {
                let record = WordRecord {
                    length: word_length(&form),
                    rel_freq: frequency as f64 / retained as f64,
                    form: form.clone(),
                    frequency,
                };
                (form, record)
            })
            .collect();
        FrequencyTable { records, total_tokens: total_tokens.max(retained) }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn get(&self, form: &str) -> Option<&WordRecord> {
        self.records.get(form)
    }

    pub fn contains(&self, form: &str) -> bool {
        self.records.contains_key(form)
    }

    pub fn rel_freq(&self, form: &str) -> f64 {
        self.records.get(form).map_or(0.0, |r| r.rel_freq)
    }

    /// Records in form order.
    pub fn iter(&self) -> impl Iterator<Item = &WordRecord> {
        self.records.values()
    }

    /// Records by descending frequency, ties by ascending form.
    pub fn ranked(&self) -> Vec<&WordRecord> {
        let mut v: Vec<&WordRecord> = self.records.values().collect();
        v.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.form.cmp(&b.form)));
        v
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        tsv::write_header(&mut out, &["form", "frequency", "rel_freq"])?;
        for r in self.ranked() {
            writeln!(out, "{}\t{}\t{}", r.form, r.frequency, format_sig17(r.rel_freq))?;
        }
        Ok(())
    }

    /// Reads a table written by [`FrequencyTable::write_tsv`]. The file does
    /// not carry the pre-filter token count, so `total_tokens` becomes the
    /// sum of frequencies.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut records = BTreeMap::new();
        let mut total = 0u64;
        tsv::for_each_row(reader, &["form", "frequency", "rel_freq"], |line, f| {
            let form = f[0].to_string();
            if form.is_empty() {
                return Err(Error::Validation { line: Some(line), message: "empty form".into() });
            }
            let frequency: u64 = tsv::parse_field(line, "frequency", f[1])?;
            let rel_freq: f64 = tsv::parse_field(line, "rel_freq", f[2])?;
            if frequency == 0 || !(0.0..=1.0).contains(&rel_freq) {
                return Err(Error::Validation { line: Some(line), message: format!("invalid counts for {form:?}") });
            }
            total += frequency;
            let record = WordRecord { length: word_length(&form), form: form.clone(), frequency, rel_freq };
            if records.insert(form.clone(), record).is_some() {
                return Err(Error::Validation { line: Some(line), message: format!("duplicate form {form:?}") });
            }
            Ok(())
        })?;
        Ok(FrequencyTable { records, total_tokens: total })
    }
}

/// Accumulates counts; partial counters over shards merge into the same
/// result as sequential counting.
#[derive(Debug, Clone, Default)]
pub struct FrequencyCounter {
    counts: HashMap<String, u64>,
    tokens: u64,
}

impl FrequencyCounter {
    pub fn add(&mut self, token: &str) {
        self.tokens += 1;
        if let Some(c) = self.counts.get_mut(token) {
            *c += 1;
        } else {
            self.counts.insert(token.to_string(), 1);
        }
    }

    pub fn merge(mut self, other: FrequencyCounter) -> FrequencyCounter {
        self.tokens += other.tokens;
        for (form, c) in other.counts {
            *self.counts.entry(form).or_insert(0) += c;
        }
        self
    }

    pub fn finish(self, top_n: Option<NonZeroUsize>) -> FrequencyTable {
        FrequencyTable::from_counts(self.counts, self.tokens, top_n)
    }
}

pub fn count_frequencies<S: AsRef<str>>(tokens: &[S], config: &CorpusConfig) -> FrequencyTable {
    let mut counter = FrequencyCounter::default();
    for t in tokens {
        counter.add(t.as_ref());
    }
    counter.finish(config.top_n)
}

/// Sharded counting; equal to [`count_frequencies`] for any shard size.
pub fn count_frequencies_sharded<S: AsRef<str> + Sync>(
    tokens: &[S],
    config: &CorpusConfig,
    shard_size: usize,
) -> FrequencyTable {
    tokens
        .par_chunks(shard_size.max(1))
        .map(|chunk| {
            let mut c = FrequencyCounter::default();
            for t in chunk {
                c.add(t.as_ref());
            }
            c
        })
        .reduce(FrequencyCounter::default, FrequencyCounter::merge)
        .finish(config.top_n)
}
