//! Message counting, rank-frequency tables and frequency spectra.

use std::collections::BTreeMap;
use std::io::{self, BufRead};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("frequency table needs at least one message")]
    Empty,
    #[error("frequencies must be positive")]
    ZeroFrequency,
    #[error("cannot drop {requested} of {distinct} distinct messages")]
    DropTooMany { requested: usize, distinct: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A canonical message and how many times it occurred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageCount {
    pub text: String,
    pub count: u64,
}

impl MessageCount {
    pub fn new(text: impl Into<String>, count: u64) -> Self {
        Self { text: text.into(), count }
    }
}

/// Frequencies `F_1 >= F_2 >= ... >= F_M`, with optional message labels in
/// the same order.
///
/// `N = Σ F_k`, `M = |F|` and `F_max = F_1` are fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    freqs: Vec<u64>,
    labels: Option<Vec<String>>,
    n_total: u64,
    dropped_top: usize,
}

impl FrequencyTable {
    /// Builds a table from unlabelled frequencies in any order.
    pub fn from_freqs(mut freqs: Vec<u64>) -> Result<Self, CorpusError> {
        if freqs.is_empty() {
            return Err(CorpusError::Empty);
        }
        if freqs.contains(&0) {
            return Err(CorpusError::ZeroFrequency);
        }
        freqs.sort_unstable_by(|a, b| b.cmp(a));
        let n_total = freqs.iter().sum();
        Ok(Self { freqs, labels: None, n_total, dropped_top: 0 })
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// `N`, the total number of messages.
    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    /// `M`, the number of distinct messages.
    pub fn m_distinct(&self) -> usize {
        self.freqs.len()
    }

    /// `F_max = F_1`.
    pub fn f_max(&self) -> u64 {
        self.freqs[0]
    }

    /// How many top-ranked entries were removed with [`drop_top`].
    pub fn dropped_top(&self) -> usize {
        self.dropped_top
    }

    /// Ranked records, labels first if present.
    pub fn records(&self) -> impl Iterator<Item = (usize, Option<&str>, u64)> + '_ {
        self.freqs.iter().enumerate().map(move |(i, &f)| {
            (i + 1, self.labels.as_ref().map(|l| l[i].as_str()), f)
        })
    }
}

/// `f ↦ #F⁻¹(f)`: how many messages occur exactly `f` times.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LegomenaSpectrum(BTreeMap<u64, u64>);

impl LegomenaSpectrum {
    pub fn get(&self, f: u64) -> u64 {
        self.0.get(&f).copied().unwrap_or(0)
    }

    /// Non-zero entries in increasing `f`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.0.iter().map(|(&f, &c)| (f, c))
    }

    /// Observed counts for `f = 1..=f_cut`, zeros included.
    pub fn head(&self, f_cut: u64) -> Vec<u64> {
        (1..=f_cut).map(|f| self.get(f)).collect()
    }

    /// Number of distinct frequencies.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ_f #F⁻¹(f)`, equal to `M`.
    pub fn total_types(&self) -> u64 {
        self.0.values().sum()
    }

    /// `Σ_f f · #F⁻¹(f)`, equal to `N`.
    pub fn total_tokens(&self) -> u64 {
        self.0.iter().map(|(f, c)| f * c).sum()
    }
}

fn merge_into(acc: &mut IndexMap<String, u64>, text: &str, count: u64) {
    if let Some(c) = acc.get_mut(text) {
        *c += count;
    } else {
        acc.insert(text.to_owned(), count);
    }
}

fn into_records(acc: IndexMap<String, u64>) -> Vec<MessageCount> {
    acc.into_iter().map(|(text, count)| MessageCount { text, count }).collect()
}

/// Reads `count<TAB>message` records. Blank lines and lines starting with
/// `#` are skipped; repeated messages have their counts added, keeping
/// first-appearance order.
pub fn ingest_counts<R: BufRead>(reader: R) -> Result<Vec<MessageCount>, CorpusError> {
    let mut acc = IndexMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |reason: &str| CorpusError::Parse { line: line_no, reason: reason.to_owned() };
        let (count, text) = line.split_once('\t').ok_or_else(|| parse_err("expected count<TAB>message"))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| parse_err(&format!("invalid count {count:?}")))?;
        if count == 0 {
            return Err(parse_err("count must be positive"));
        }
        if text.is_empty() {
            return Err(parse_err("empty message"));
        }
        if text.contains('\t') {
            return Err(parse_err("message contains a tab"));
        }
        merge_into(&mut acc, text, count);
    }
    Ok(into_records(acc))
}

/// Counts identical lines, one raw message per line. Blank lines are skipped.
pub fn ingest_lines<R: BufRead>(reader: R) -> io::Result<Vec<MessageCount>> {
    let mut acc = IndexMap::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        merge_into(&mut acc, line, 1);
    }
    Ok(into_records(acc))
}

/// Ranks messages by count, largest first; equal counts are ordered
/// lexicographically by message text.
pub fn rank_frequencies(counts: &[MessageCount]) -> Result<FrequencyTable, CorpusError> {
    let mut acc: IndexMap<String, u64> = IndexMap::new();
    for mc in counts {
        if mc.count == 0 {
            return Err(CorpusError::ZeroFrequency);
        }
        merge_into(&mut acc, &mc.text, mc.count);
    }
    if acc.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut ranked: Vec<(String, u64)> = acc.into_iter().collect();
    ranked.sort_by(|(ta, ca), (tb, cb)| cb.cmp(ca).then_with(|| ta.cmp(tb)));
    let (labels, freqs): (Vec<String>, Vec<u64>) = ranked.into_iter().unzip();
    let n_total = freqs.iter().sum();
    Ok(FrequencyTable { freqs, labels: Some(labels), n_total, dropped_top: 0 })
}

pub fn legomena(table: &FrequencyTable) -> LegomenaSpectrum {
    let mut spectrum = BTreeMap::new();
    for &f in &table.freqs {
        *spectrum.entry(f).or_insert(0) += 1;
    }
    LegomenaSpectrum(spectrum)
}

/// Removes the `j` highest-ranked entries, one rank at a time.
pub fn drop_top(table: &FrequencyTable, j: usize) -> Result<FrequencyTable, CorpusError> {
    if j >= table.m_distinct() {
        return Err(CorpusError::DropTooMany { requested: j, distinct: table.m_distinct() });
    }
    let freqs = table.freqs[j..].to_vec();
    let labels = table.labels.as_ref().map(|l| l[j..].to_vec());
    let n_total = freqs.iter().sum();
    Ok(FrequencyTable { freqs, labels, n_total, dropped_top: table.dropped_top + j })
}

/// Shannon entropy of the empirical distribution, in bits.
pub fn entropy(table: &FrequencyTable) -> f64 {
    let n = table.n_total as f64;
    let h: f64 = table
        .freqs
        .iter()
        .map(|&f| {
            let p = f as f64 / n;
            -p * p.log2()
        })
        .sum();
    // -0.0 for the single-category case
    h.max(0.0)
}
