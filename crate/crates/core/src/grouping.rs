//! Corpus ingestion, per-position letter frequencies, and frequency-band grouping.
//!
//! Letters are grouped by walking the distinct frequencies from the top: each
//! band runs from a peak down to `alpha%` of that peak, and the next search
//! restarts below `beta%` of the previous base (plus `eps_p`). A base that
//! falls within `eps_b` of zero closes the walk and sweeps every remaining
//! letter, including those never observed, into the final band.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CorpusClass, IndexSelector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupingError {
    #[error("corpus has no usable entries")]
    EmptyCorpus,
    #[error("frequency table has no positive frequency")]
    DegenerateTable,
    #[error("invalid grouping parameters: {0}")]
    InvalidParams(String),
    #[error("no index position yields groups of size >= {d}")]
    NoViableIndex { d: usize },
    #[error("malformed frequency table: {0}")]
    BadTable(String),
}

const DIGIT_WORDS: [&str; 10] = [
    "ZERO", "ONE", "TWO", "THREE", "FOUR", "FIVE", "SIX", "SEVEN", "EIGHT", "NINE",
];

/// Uppercases, spells each digit as an English word, and keeps only `A-Z`.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if let Some(d) = c.to_digit(10) {
            out.push_str(DIGIT_WORDS[d as usize]);
        } else if c.is_ascii_alphabetic() {
            out.push(c.to_ascii_uppercase());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub class: CorpusClass,
    pub entries: Vec<String>,
}

/// Parses a corpus file: one entry per line, `#` lines are comments.
pub fn ingest_corpus(text: &str, class: CorpusClass) -> Result<Corpus, GroupingError> {
    let entries: Vec<String> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .map(normalize)
        .filter(|e| !e.is_empty())
        .collect();
    if entries.is_empty() {
        return Err(GroupingError::EmptyCorpus);
    }
    Ok(Corpus { class, entries })
}

fn letter_idx(c: char) -> Option<usize> {
    c.is_ascii_uppercase().then(|| (c as u8 - b'A') as usize)
}

fn idx_letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

/// Per-letter percentages at one index position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrequencyDoc", into = "FrequencyDoc")]
pub struct FrequencyTable {
    pub index: Option<IndexSelector>,
    freq: [f64; 26],
    /// Entries counted.
    pub usable: usize,
    /// Entries too short for the selector.
    pub skipped: usize,
}

#[derive(Serialize, Deserialize)]
struct FrequencyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<IndexSelector>,
    freq: BTreeMap<char, f64>,
    #[serde(default)]
    usable: usize,
    #[serde(default)]
    skipped: usize,
}

impl From<FrequencyTable> for FrequencyDoc {
    fn from(t: FrequencyTable) -> Self {
        FrequencyDoc {
            index: t.index,
            freq: t.iter().collect(),
            usable: t.usable,
            skipped: t.skipped,
        }
    }
}

impl TryFrom<FrequencyDoc> for FrequencyTable {
    type Error = GroupingError;
    fn try_from(doc: FrequencyDoc) -> Result<Self, Self::Error> {
        let mut t = FrequencyTable::from_pairs(doc.freq)?;
        t.index = doc.index;
        t.usable = doc.usable;
        t.skipped = doc.skipped;
        Ok(t)
    }
}

impl FrequencyTable {
    /// Table from explicit (letter, percentage) pairs; missing letters are 0.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (char, f64)>) -> Result<Self, GroupingError> {
        let mut freq = [0.0; 26];
        for (c, f) in pairs {
            let i = letter_idx(c.to_ascii_uppercase())
                .ok_or_else(|| GroupingError::BadTable(format!("not a letter: {c:?}")))?;
            if !(f.is_finite() && f >= 0.0) {
                return Err(GroupingError::BadTable(format!("bad frequency {f} for {c}")));
            }
            freq[i] = f;
        }
        Ok(FrequencyTable { index: None, freq, usable: 0, skipped: 0 })
    }

    /// Assigns every letter of each set the given value.
    pub fn from_bands(bands: &[(&str, f64)]) -> Result<Self, GroupingError> {
        FrequencyTable::from_pairs(
            bands.iter().flat_map(|&(letters, v)| letters.chars().map(move |c| (c, v))),
        )
    }

    /// Each letter set to its published group mean for the person-name corpus
    /// at the first position.
    pub fn population_means() -> Self {
        let mut t = FrequencyTable::from_bands(&[
            ("AMPRS", 11.9),
            ("BDGJKNV", 4.2),
            ("CHILT", 1.57),
            ("EFOQUWXYZ", 0.34),
        ])
        .expect("static table");
        t.index = Some(IndexSelector::First);
        t
    }

    /// Each letter set to its published group mean for the movie-name corpus
    /// at the last position.
    pub fn movie_means() -> Self {
        let mut t = FrequencyTable::from_bands(&[
            ("AENRS", 10.3),
            ("DILMOTY", 4.96),
            ("GHKPU", 2.09),
            ("BCFJQVWXZ", 0.29),
        ])
        .expect("static table");
        t.index = Some(IndexSelector::Last);
        t
    }

    pub fn get(&self, c: char) -> f64 {
        letter_idx(c).map_or(0.0, |i| self.freq[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, f64)> + '_ {
        self.freq.iter().enumerate().map(|(i, &f)| (idx_letter(i), f))
    }

    pub fn total(&self) -> f64 {
        self.freq.iter().sum()
    }
}

/// Percentage of entries whose selected letter is each of `A-Z`.
pub fn letter_frequencies(corpus: &Corpus, index: IndexSelector) -> Result<FrequencyTable, GroupingError> {
    let mut counts = [0usize; 26];
    let mut skipped = 0;
    for e in &corpus.entries {
        match index.pick(e).and_then(|b| letter_idx(b as char)) {
            Some(i) => counts[i] += 1,
            None => skipped += 1,
        }
    }
    let usable = corpus.entries.len() - skipped;
    if usable == 0 {
        return Err(GroupingError::EmptyCorpus);
    }
    let mut freq = [0.0; 26];
    for (f, &c) in freq.iter_mut().zip(&counts) {
        *f = 100.0 * c as f64 / usable as f64;
    }
    Ok(FrequencyTable { index: Some(index), freq, usable, skipped })
}

/// Largest positive frequency strictly below `curr`. Pass `f64::INFINITY` to get the maximum.
pub fn next_highest_freq(curr: f64, table: &FrequencyTable) -> Option<f64> {
    table
        .freq
        .iter()
        .copied()
        .filter(|&f| f > 0.0 && f < curr)
        .fold(None, |best: Option<f64>, f| Some(best.map_or(f, |b| b.max(f))))
}

/// Letters with `base <= freq <= peak`. Zero-frequency letters only qualify when `base == 0`.
pub fn elements_in_band(peak: f64, base: f64, table: &FrequencyTable) -> Vec<char> {
    table
        .iter()
        .filter(|&(_, f)| f >= base && f <= peak && (f > 0.0 || base == 0.0))
        .map(|(c, _)| c)
        .collect()
}

/// Grouping parameters, percentages for `alpha`/`beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub alpha: f64,
    pub beta: f64,
    pub eps_p: f64,
    pub eps_b: f64,
}

impl GroupParams {
    pub const POPULATION: GroupParams = GroupParams { alpha: 45.0, beta: 85.0, eps_p: 0.1, eps_b: 0.6 };
    pub const MOVIE: GroupParams = GroupParams { alpha: 65.0, beta: 85.0, eps_p: 0.1, eps_b: 0.6 };

    pub fn for_class(class: CorpusClass) -> Self {
        match class {
            CorpusClass::PersonName => Self::POPULATION,
            CorpusClass::MovieName => Self::MOVIE,
        }
    }

    fn validate(&self) -> Result<(), GroupingError> {
        let pct = |v: f64| v > 0.0 && v <= 100.0;
        let small = |v: f64| v > 0.0 && v < 1.0;
        if !(pct(self.alpha) && pct(self.beta)) {
            return Err(GroupingError::InvalidParams(format!(
                "alpha and beta must lie in (0, 100], got {} and {}",
                self.alpha, self.beta
            )));
        }
        if !(small(self.eps_p) && small(self.eps_b)) {
            return Err(GroupingError::InvalidParams(format!(
                "eps_p and eps_b must lie in (0, 1), got {} and {}",
                self.eps_p, self.eps_b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub g_id: u32,
    pub elements: Vec<char>,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexSelector>,
    pub params: GroupParams,
    pub groups: Vec<Group>,
    pub outliers: Vec<char>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub g_id: u32,
    pub size: usize,
    pub mean: f64,
    pub variance: f64,
}

fn mean_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Runs the band-grouping walk over `table`.
pub fn form_groups(params: GroupParams, table: &FrequencyTable) -> Result<GroupTable, GroupingError> {
    params.validate()?;
    if next_highest_freq(f64::INFINITY, table).is_none() {
        return Err(GroupingError::DegenerateTable);
    }
    let mut groups = Vec::new();
    let mut curr = f64::INFINITY;
    let mut prev_base = f64::INFINITY;
    // Search strictly below the previous base as well, otherwise a base under
    // eps_p / (1 - beta) lets the next peak land back inside the previous band.
    while let Some(peak) = next_highest_freq(curr.min(prev_base), table) {
        let mut base = params.alpha / 100.0 * peak;
        if base - params.eps_b <= 0.0 {
            base = 0.0;
        }
        let elements = elements_in_band(peak, base, table);
        let freqs: Vec<f64> = elements.iter().map(|&c| table.get(c)).collect();
        let (mean, variance) = mean_variance(&freqs);
        groups.push(Group { g_id: groups.len() as u32 + 1, elements, mean, variance });
        if base == 0.0 {
            break;
        }
        prev_base = base;
        curr = params.beta / 100.0 * base + params.eps_p;
    }
    let outliers = table
        .iter()
        .filter(|&(c, f)| f > 0.0 && !groups.iter().any(|g| g.elements.contains(&c)))
        .map(|(c, _)| c)
        .collect();
    Ok(GroupTable { index: table.index, params, groups, outliers })
}

impl GroupTable {
    pub fn group_of(&self, letter: char) -> Option<&Group> {
        self.groups.iter().find(|g| g.elements.contains(&letter))
    }

    pub fn stats(&self) -> Vec<GroupStats> {
        group_stats(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GroupingError> {
        serde_json::from_str(s).map_err(|e| GroupingError::BadTable(e.to_string()))
    }

    /// Reference grouping of the person-name means table.
    pub fn population_reference() -> Self {
        form_groups(GroupParams::POPULATION, &FrequencyTable::population_means()).expect("reference table")
    }

    /// Reference grouping of the movie-name means table.
    pub fn movie_reference() -> Self {
        form_groups(GroupParams::MOVIE, &FrequencyTable::movie_means()).expect("reference table")
    }
}

pub fn group_stats(table: &GroupTable) -> Vec<GroupStats> {
    table
        .groups
        .iter()
        .map(|g| GroupStats { g_id: g.g_id, size: g.elements.len(), mean: g.mean, variance: g.variance })
        .collect()
}

/// How one candidate position scored.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexCandidate {
    pub index: IndexSelector,
    /// `None` when every entry was too short.
    pub groups: Option<GroupTable>,
    pub skipped: usize,
    pub viable: bool,
    pub min_group_size: usize,
    pub outliers: usize,
    pub total_variance: f64,
}

/// Picks the index position whose grouping gives every group at least `d`
/// members, preferring fewer outliers and then lower total within-group variance.
pub fn select_index_position(
    corpus: &Corpus,
    d: usize,
    params: GroupParams,
) -> Result<(IndexSelector, Vec<IndexCandidate>), GroupingError> {
    params.validate()?;
    let mut candidates = Vec::with_capacity(4);
    for index in IndexSelector::ALL {
        let (groups, skipped) = match letter_frequencies(corpus, index) {
            Ok(t) => (form_groups(params, &t).ok(), t.skipped),
            Err(_) => (None, corpus.entries.len()),
        };
        let (viable, min_group_size, outliers, total_variance) = match &groups {
            Some(g) => {
                let min = g.groups.iter().map(|g| g.elements.len()).min().unwrap_or(0);
                let var = g.groups.iter().map(|g| g.variance).sum();
                (min >= d, min, g.outliers.len(), var)
            }
            None => (false, 0, 0, f64::INFINITY),
        };
        candidates.push(IndexCandidate { index, groups, skipped, viable, min_group_size, outliers, total_variance });
    }
    let best = candidates
        .iter()
        .filter(|c| c.viable)
        .min_by(|a, b| {
            a.outliers
                .cmp(&b.outliers)
                .then(a.total_variance.total_cmp(&b.total_variance))
        })
        .map(|c| c.index)
        .ok_or(GroupingError::NoViableIndex { d })?;
    Ok((best, candidates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &str) -> Vec<char> {
        let mut v: Vec<char> = s.chars().collect();
        v.sort();
        v
    }

    #[test]
    fn ingest_normalizes() {
        let c = ingest_corpus("Titanic\n", CorpusClass::MovieName).unwrap();
        assert_eq!(c.entries, vec!["TITANIC"]);
        let c = ingest_corpus("alex 2004\n", CorpusClass::PersonName).unwrap();
        assert_eq!(c.entries, vec!["ALEXTWOZEROZEROFOUR"]);
        let c = ingest_corpus("# names\n  mary-jane \n\n!!\n", CorpusClass::PersonName).unwrap();
        assert_eq!(c.entries, vec!["MARYJANE"]);
    }

    #[test]
    fn ingest_empty() {
        assert_eq!(ingest_corpus("#comment\n\n", CorpusClass::MovieName), Err(GroupingError::EmptyCorpus));
    }

    #[test]
    fn frequencies_first_and_last() {
        let c = Corpus { class: CorpusClass::PersonName, entries: vec!["ABC".into(), "ABD".into()] };
        let first = letter_frequencies(&c, IndexSelector::First).unwrap();
        assert_eq!(first.get('A'), 100.0);
        assert_eq!(first.total(), 100.0);
        let last = letter_frequencies(&c, IndexSelector::Last).unwrap();
        assert_eq!(last.get('C'), 50.0);
        assert_eq!(last.get('D'), 50.0);
        assert_eq!(last.get('A'), 0.0);
    }

    #[test]
    fn frequencies_skip_short_entries() {
        let c = Corpus { class: CorpusClass::PersonName, entries: vec!["AB".into(), "ABC".into()] };
        let t = letter_frequencies(&c, IndexSelector::Third).unwrap();
        assert_eq!((t.usable, t.skipped), (1, 1));
        assert_eq!(t.get('C'), 100.0);
        let short = Corpus { class: CorpusClass::PersonName, entries: vec!["A".into()] };
        assert_eq!(letter_frequencies(&short, IndexSelector::Second), Err(GroupingError::EmptyCorpus));
    }

    #[test]
    fn next_highest() {
        let t = FrequencyTable::from_pairs([('A', 11.9), ('B', 4.2)]).unwrap();
        assert_eq!(next_highest_freq(f64::INFINITY, &t), Some(11.9));
        assert_eq!(next_highest_freq(4.2, &t), None);
        let p = FrequencyTable::population_means();
        assert_eq!(next_highest_freq(0.85 * 0.45 * 11.9 + 0.1, &p), Some(4.2));
    }

    #[test]
    fn band_membership() {
        let p = FrequencyTable::population_means();
        assert_eq!(elements_in_band(11.9, 0.45 * 11.9, &p), set("AMPRS"));
        assert_eq!(elements_in_band(0.34, 0.0, &p), set("EFOQUWXYZ"));
        assert!(elements_in_band(0.34, 0.34, &p).contains(&'X'));
        let sparse = FrequencyTable::from_pairs([('A', 2.0)]).unwrap();
        assert_eq!(elements_in_band(2.0, 0.5, &sparse), vec!['A']);
        assert_eq!(elements_in_band(2.0, 0.0, &sparse).len(), 26);
    }

    #[test]
    fn population_reference_groups() {
        let g = GroupTable::population_reference();
        let sets: Vec<_> = g.groups.iter().map(|g| g.elements.clone()).collect();
        assert_eq!(sets, vec![set("AMPRS"), set("BDGJKNV"), set("CHILT"), set("EFOQUWXYZ")]);
        assert!(g.outliers.is_empty());
    }

    #[test]
    fn movie_reference_groups() {
        let g = GroupTable::movie_reference();
        let sets: Vec<_> = g.groups.iter().map(|g| g.elements.clone()).collect();
        assert_eq!(sets, vec![set("AENRS"), set("DILMOTY"), set("GHKPU"), set("BCFJQVWXZ")]);
        assert!(g.outliers.is_empty());
    }

    #[test]
    fn single_letter_table() {
        let t = FrequencyTable::from_pairs([('S', 100.0)]).unwrap();
        let g = form_groups(GroupParams::POPULATION, &t).unwrap();
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].elements, vec!['S']);
        assert!(g.outliers.is_empty());
    }

    #[test]
    fn degenerate_and_bad_params() {
        let t = FrequencyTable::from_pairs([]).unwrap();
        assert_eq!(form_groups(GroupParams::POPULATION, &t), Err(GroupingError::DegenerateTable));
        let p = FrequencyTable::population_means();
        let bad = GroupParams { alpha: 0.0, ..GroupParams::POPULATION };
        assert!(matches!(form_groups(bad, &p), Err(GroupingError::InvalidParams(_))));
        let bad = GroupParams { eps_b: 1.0, ..GroupParams::POPULATION };
        assert!(matches!(form_groups(bad, &p), Err(GroupingError::InvalidParams(_))));
    }

    #[test]
    fn gap_letters_become_outliers() {
        // peak 10 -> base 4.5 -> next search below 0.85 * 4.5 + 0.1 = 3.925,
        // so a letter at 4.0 is never reached by any band.
        let t = FrequencyTable::from_pairs([('A', 10.0), ('B', 4.0), ('C', 3.0), ('D', 0.2)]).unwrap();
        let g = form_groups(GroupParams::POPULATION, &t).unwrap();
        assert_eq!(g.outliers, vec!['B']);
        assert_eq!(g.groups[0].elements, vec!['A']);
        assert_eq!(g.groups[1].elements, vec!['C']);
        assert!(g.group_of('B').is_none());
    }

    #[test]
    fn low_base_does_not_reenter_previous_band() {
        // base = 0.45 * 1.4 = 0.63 > eps_b, next curr = 0.85 * 0.63 + 0.1 = 0.6355 > base.
        let t = FrequencyTable::from_pairs([('A', 1.4), ('B', 0.634), ('C', 0.2)]).unwrap();
        let g = form_groups(GroupParams::POPULATION, &t).unwrap();
        assert_eq!(g.groups[0].elements, vec!['A', 'B']);
        for c in ['A', 'B'] {
            assert_eq!(g.groups.iter().filter(|gr| gr.elements.contains(&c)).count(), 1);
        }
    }

    #[test]
    fn stats_of_means_table() {
        let s = group_stats(&GroupTable::population_reference());
        assert_eq!(s[0].size, 5);
        assert!((s[0].mean - 11.9).abs() < 1e-12);
        assert_eq!(s[0].variance, 0.0);
        let single = FrequencyTable::from_pairs([('S', 100.0)]).unwrap();
        let g = form_groups(GroupParams::POPULATION, &single).unwrap();
        assert_eq!(g.stats()[0].variance, 0.0);
    }

    #[test]
    fn group_table_json_is_lossless() {
        let t = FrequencyTable::from_pairs((0..26).map(|i| (idx_letter(i), 0.1 + i as f64 / 7.0))).unwrap();
        let g = form_groups(GroupParams::MOVIE, &t).unwrap();
        let back = GroupTable::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        let json = g.to_json();
        assert!(json.contains("\"g_id\"") && json.contains("\"variance\""));
    }

    #[test]
    fn frequency_table_json_roundtrip() {
        let t = FrequencyTable::population_means();
        let s = serde_json::to_string(&t).unwrap();
        let back: FrequencyTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<FrequencyTable>(r#"{"freq":{"1":2.0}}"#).is_err());
    }

    fn corpus_with_first_letters(table: &[(&str, usize)], tail: &str) -> Corpus {
        let mut entries = Vec::new();
        for &(letters, n) in table {
            for c in letters.chars() {
                for i in 0..n {
                    // vary the last letter so Last is not trivially viable
                    let last = if i % 2 == 0 { 'A' } else { 'S' };
                    entries.push(format!("{c}{tail}{last}"));
                }
            }
        }
        Corpus { class: CorpusClass::PersonName, entries }
    }

    #[test]
    fn select_index_prefers_viable_first() {
        let c = corpus_with_first_letters(&[("AMPRS", 119), ("BDGJKNV", 42), ("CHILT", 16), ("EFOQUWXYZ", 3)], "AA");
        let (idx, cands) = select_index_position(&c, 4, GroupParams::POPULATION).unwrap();
        assert_eq!(idx, IndexSelector::First);
        assert!(cands.iter().filter(|c| c.index != IndexSelector::First).all(|c| !c.viable));
    }

    #[test]
    fn select_index_rejects_shared_first_letter() {
        let c = Corpus { class: CorpusClass::PersonName, entries: vec!["SAM".into(), "SITA".into(), "SURAJ".into()] };
        let err = select_index_position(&c, 4, GroupParams::POPULATION).unwrap_err();
        assert_eq!(err, GroupingError::NoViableIndex { d: 4 });
        let first = letter_frequencies(&c, IndexSelector::First).unwrap();
        let g = form_groups(GroupParams::POPULATION, &first).unwrap();
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].elements, vec!['S']);
    }
}
