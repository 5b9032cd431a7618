//! Ingestion of externally computed per-token surprisals.
//!
//! Rows are subword units; all rows sharing `(sentence_id, word_index)`
//! form one word whose surprisal is the sum of its subword surprisals.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tsv;

use super::{SurprisalSample, SurprisalSource, SurprisalTable};

pub const EXTERNAL_HEADER: [&str; 5] = ["sentence_id", "word_index", "subword_index", "word_form", "surprisal_bits"];

struct Word<T> {
    form: String,
    bits: T,
}

pub fn ingest_external<T: Real, R: BufRead>(reader: R) -> Result<SurprisalTable<T>> {
    let mut order: Vec<Word<T>> = Vec::new();
    let mut index: HashMap<(String, u64), usize> = HashMap::new();
    let mut seen: HashSet<(String, u64, u64)> = HashSet::new();

    tsv::for_each_row(reader, &EXTERNAL_HEADER, |line, f| {
        let sentence = f[0].to_string();
        let word_index: u64 = tsv::parse_field(line, "word_index", f[1])?;
        let subword_index: u64 = tsv::parse_field(line, "subword_index", f[2])?;
        let form = f[3];
        let bits: T = tsv::parse_field(line, "surprisal_bits", f[4])?;
        if form.is_empty() {
            return Err(Error::Validation { line: Some(line), message: "empty word_form".into() });
        }
        if !bits.is_finite() || bits < T::zero() {
            return Err(Error::Validation { line: Some(line), message: format!("surprisal must be finite and non-negative, got {}", f[4]) });
        }
        if !seen.insert((sentence.clone(), word_index, subword_index)) {
            return Err(Error::Validation {
                line: Some(line),
                message: format!("duplicate row ({sentence}, {word_index}, {subword_index})"),
            });
        }
        match index.get(&(sentence.clone(), word_index)) {
            Some(&i) => {
                let w = &mut order[i];
                if w.form != form {
                    return Err(Error::Validation {
                        line: Some(line),
                        message: format!("word_form {form:?} differs from {:?} for the same word", w.form),
                    });
                }
                w.bits = w.bits + bits;
            }
            None => {
                index.insert((sentence, word_index), order.len());
                order.push(Word { form: form.to_string(), bits });
            }
        }
        Ok(())
    })?;

    let mut table = SurprisalTable::new(SurprisalSource::External);
    for w in order {
        table.push(w.form, SurprisalSample::once(w.bits)?);
    }
    Ok(table)
}
