//! Shared domain types and the fixed question catalog.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of questions in the catalog.
pub const TOTAL_QUESTIONS: u8 = 10;

/// Fixed alternatives for the birth-time question.
pub const BIRTH_TIME_LABELS: [&str; 4] = ["Morning", "Afternoon", "Evening", "Night"];

/// Fixed alternatives for the anniversary-quarter question.
pub const QUARTER_LABELS: [&str; 4] = ["Jan-Mar", "Apr-Jun", "Jul-Sep", "Oct-Dec"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("question id {0} is outside 1..=10")]
    BadQuestionId(u32),
    #[error("option sequence {seq:?} is invalid for d = {d}: {reason}")]
    BadSequence { seq: String, d: u8, reason: &'static str },
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

/// Identifier of one of the ten catalog questions (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct QuestionId(u8);

impl QuestionId {
    pub fn new(id: u32) -> Result<Self, ModelError> {
        if (1..=TOTAL_QUESTIONS as u32).contains(&id) {
            Ok(QuestionId(id as u8))
        } else {
            Err(ModelError::BadQuestionId(id))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = QuestionId> {
        (1..=TOTAL_QUESTIONS).map(QuestionId)
    }
}

impl TryFrom<u32> for QuestionId {
    type Error = ModelError;
    fn try_from(v: u32) -> Result<Self, Self::Error> {
        QuestionId::new(v)
    }
}

impl From<QuestionId> for u32 {
    fn from(q: QuestionId) -> u32 {
        q.0 as u32
    }
}

impl fmt::Display for QuestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

/// Which corpus a b-question's answers are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorpusClass {
    PersonName,
    MovieName,
}

impl fmt::Display for CorpusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusClass::PersonName => f.write_str("PersonName"),
            CorpusClass::MovieName => f.write_str("MovieName"),
        }
    }
}

impl FromStr for CorpusClass {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "person" | "personname" | "population" => Ok(CorpusClass::PersonName),
            "movie" | "moviename" => Ok(CorpusClass::MovieName),
            _ => Err(ModelError::BadParams(format!("unknown corpus class {s:?}"))),
        }
    }
}

/// Letter position inside a normalized answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexSelector {
    First,
    Second,
    Third,
    Last,
}

impl IndexSelector {
    pub const ALL: [IndexSelector; 4] = [
        IndexSelector::First,
        IndexSelector::Second,
        IndexSelector::Third,
        IndexSelector::Last,
    ];

    /// Byte offset selected in `s`, or `None` when `s` is too short.
    pub fn pick(self, s: &str) -> Option<u8> {
        let b = s.as_bytes();
        match self {
            IndexSelector::First => b.first().copied(),
            IndexSelector::Second => b.get(1).copied(),
            IndexSelector::Third => b.get(2).copied(),
            IndexSelector::Last => b.last().copied(),
        }
    }

    pub fn ordinal_name(self) -> &'static str {
        match self {
            IndexSelector::First => "first",
            IndexSelector::Second => "second",
            IndexSelector::Third => "third",
            IndexSelector::Last => "last",
        }
    }
}

impl fmt::Display for IndexSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.ordinal_name())
    }
}

impl FromStr for IndexSelector {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "first" | "1" => Ok(IndexSelector::First),
            "second" | "2" => Ok(IndexSelector::Second),
            "third" | "3" => Ok(IndexSelector::Third),
            "last" => Ok(IndexSelector::Last),
            _ => Err(ModelError::BadParams(format!("unknown index selector {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum QuestionKind {
    /// Free-text name answer reduced to one letter.
    BQuestion { corpus: CorpusClass },
    FixedChoice { labels: [String; 4] },
    /// Numeric answer; `width` zero-pads the rendering when set.
    NumericRange { lo: u32, hi: u32, width: Option<u8> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: QuestionId,
    pub text: String,
    pub kind: QuestionKind,
}

fn fixed(labels: [&str; 4]) -> QuestionKind {
    QuestionKind::FixedChoice {
        labels: labels.map(str::to_string),
    }
}

static CATALOG: std::sync::OnceLock<Vec<CatalogEntry>> = std::sync::OnceLock::new();

/// The ten questions, in id order.
pub fn catalog() -> &'static [CatalogEntry] {
    CATALOG.get_or_init(|| {
        use CorpusClass::*;
        let person = QuestionKind::BQuestion { corpus: PersonName };
        let rows: [(&str, QuestionKind); 10] = [
            ("What is name of your first childhood friend?", person.clone()),
            (
                "What is the name of the movie you first saw in a cinema hall?",
                QuestionKind::BQuestion { corpus: MovieName },
            ),
            ("What is the name of the doctor you visited often in childhood?", person.clone()),
            ("What is the name of your parents friend you find (or found) your close too?", person.clone()),
            ("What was your (or your closest one's) birth time?", fixed(BIRTH_TIME_LABELS)),
            (
                "What is the last two digits of the phone number you call often?",
                QuestionKind::NumericRange { lo: 0, hi: 99, width: Some(2) },
            ),
            (
                "What is the name of the person (except your parents) who gave you a special gift in childhood?",
                person.clone(),
            ),
            ("Who is your favourite teacher?", person),
            (
                "What was your best rank (or roll number) in school?",
                QuestionKind::NumericRange { lo: 1, hi: 99, width: None },
            ),
            (
                "Marriage anniversary of your parents (or closest one) falls in which quarter of the year?",
                fixed(QUARTER_LABELS),
            ),
        ];
        rows.into_iter()
            .enumerate()
            .map(|(i, (text, kind))| CatalogEntry {
                id: QuestionId(i as u8 + 1),
                text: text.to_string(),
                kind,
            })
            .collect()
    })
}

pub fn question(id: QuestionId) -> &'static CatalogEntry {
    &catalog()[id.0 as usize - 1]
}

/// Catalog as a JSON document for UI clients.
pub fn catalog_json() -> String {
    serde_json::to_string_pretty(catalog()).expect("catalog serializes")
}

/// Option letter for a 0-based alternative position.
pub fn option_letter(pos: usize) -> char {
    (b'A' + pos as u8) as char
}

/// The user's effective password: one option letter per answered question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OptionSequence {
    symbols: String,
    d: u8,
}

impl OptionSequence {
    pub fn parse(s: &str, d: u8) -> Result<Self, ModelError> {
        let bad = |reason| ModelError::BadSequence { seq: s.to_string(), d, reason };
        if !(2..=26).contains(&d) {
            return Err(bad("d must be in 2..=26"));
        }
        if s.is_empty() {
            return Err(bad("empty"));
        }
        let symbols = s.trim().to_ascii_uppercase();
        if !symbols.bytes().all(|c| c.is_ascii_uppercase() && c - b'A' < d) {
            return Err(bad("symbol outside the option alphabet"));
        }
        Ok(OptionSequence { symbols, d })
    }

    /// Builds a sequence from 0-based option ordinals.
    pub fn from_positions(positions: &[usize], d: u8) -> Result<Self, ModelError> {
        let s: String = positions.iter().map(|&p| option_letter(p)).collect();
        if positions.iter().any(|&p| p >= d as usize) {
            return Err(ModelError::BadSequence { seq: s, d, reason: "position >= d" });
        }
        OptionSequence::parse(&s, d)
    }

    pub fn as_str(&self) -> &str {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet_size(&self) -> u8 {
        self.d
    }

    pub fn ordinals(&self) -> impl Iterator<Item = u8> + '_ {
        self.symbols.bytes().map(|c| c - b'A')
    }
}

impl fmt::Display for OptionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbols)
    }
}

/// A question with its d alternatives, in display order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tuple {
    pub question: QuestionId,
    pub alternatives: Vec<String>,
}

impl Tuple {
    /// `<A, E, R, N>` rendering used in the F1 tuple-string.
    pub fn render(&self) -> String {
        format!("<{}>", self.alternatives.join(", "))
    }
}

/// A tuple as produced at registration, still carrying the answer's position.
/// Only the inner [`Tuple`] is ever persisted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltTuple {
    pub tuple: Tuple,
    pub correct_position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Questions answered per user.
    pub q: u8,
    /// Alternatives per tuple.
    pub d: u8,
    /// Sweetwords per user.
    pub k: usize,
    /// Minimum pairwise Hamming distance between sweetwords.
    pub lambda: u8,
}

impl SystemParams {
    pub const TOTAL_QUESTIONS: u8 = TOTAL_QUESTIONS;

    /// Defaults for a given q: d = 4, k = 20, lambda = q - 3.
    pub fn for_q(q: u8) -> Result<Self, ModelError> {
        let p = SystemParams { q, d: 4, k: 20, lambda: Self::default_lambda(q)? };
        p.validate()?;
        Ok(p)
    }

    pub fn default_lambda(q: u8) -> Result<u8, ModelError> {
        match q {
            6 => Ok(3),
            7 => Ok(4),
            8 => Ok(5),
            _ => Err(ModelError::BadParams(format!("q = {q} outside 6..=8"))),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::BadParams(m));
        if !(6..=8).contains(&self.q) {
            return err(format!("q = {} outside 6..=8", self.q));
        }
        if !(2..=26).contains(&self.d) {
            return err(format!("d = {} outside 2..=26", self.d));
        }
        if self.k < 2 {
            return err(format!("k = {} must be at least 2", self.k));
        }
        if self.lambda > self.q {
            return err(format!("lambda = {} exceeds q = {}", self.lambda, self.q));
        }
        Ok(())
    }

    /// Whether a question can be offered under these parameters.
    pub fn question_available(&self, id: QuestionId) -> bool {
        match question(id).kind {
            QuestionKind::FixedChoice { .. } => self.d == 4,
            _ => true,
        }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams { q: 6, d: 4, k: 20, lambda: 3 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_ten_stable_entries() {
        let c = catalog();
        assert_eq!(c.len(), 10);
        assert_eq!(c, catalog());
        for (i, e) in c.iter().enumerate() {
            assert_eq!(e.id.get() as usize, i + 1);
        }
    }

    #[test]
    fn catalog_kinds() {
        let c = catalog();
        assert_eq!(
            c[4].kind,
            QuestionKind::FixedChoice { labels: BIRTH_TIME_LABELS.map(String::from) }
        );
        assert_eq!(c[5].kind, QuestionKind::NumericRange { lo: 0, hi: 99, width: Some(2) });
        assert_eq!(c[8].kind, QuestionKind::NumericRange { lo: 1, hi: 99, width: None });
        assert_eq!(
            c[9].kind,
            QuestionKind::FixedChoice { labels: QUARTER_LABELS.map(String::from) }
        );
        assert_eq!(c[1].kind, QuestionKind::BQuestion { corpus: CorpusClass::MovieName });
        for i in [0, 2, 3, 6, 7] {
            assert_eq!(c[i].kind, QuestionKind::BQuestion { corpus: CorpusClass::PersonName });
        }
    }

    #[test]
    fn every_kind_variant_is_used() {
        let kinds: Vec<_> = catalog().iter().map(|e| std::mem::discriminant(&e.kind)).collect();
        let b = QuestionKind::BQuestion { corpus: CorpusClass::PersonName };
        let f = fixed(BIRTH_TIME_LABELS);
        let n = QuestionKind::NumericRange { lo: 0, hi: 1, width: None };
        for k in [b, f, n] {
            assert!(kinds.contains(&std::mem::discriminant(&k)));
        }
    }

    #[test]
    fn catalog_json_roundtrip() {
        let back: Vec<CatalogEntry> = serde_json::from_str(&catalog_json()).unwrap();
        assert_eq!(back, catalog());
    }

    #[test]
    fn question_id_bounds() {
        assert!(QuestionId::new(0).is_err());
        assert!(QuestionId::new(11).is_err());
        assert_eq!(QuestionId::new(10).unwrap().to_string(), "Q10");
        assert!(serde_json::from_str::<QuestionId>("11").is_err());
    }

    #[test]
    fn option_sequence_validation() {
        let s = OptionSequence::parse("bdbaaa", 4).unwrap();
        assert_eq!(s.as_str(), "BDBAAA");
        assert_eq!(s.ordinals().collect::<Vec<_>>(), vec![1, 3, 1, 0, 0, 0]);
        assert!(OptionSequence::parse("ABE", 4).is_err());
        assert!(OptionSequence::parse("AB1", 4).is_err());
        assert!(OptionSequence::parse("", 4).is_err());
        assert!(OptionSequence::parse("AB", 1).is_err());
        assert_eq!(OptionSequence::from_positions(&[2, 2, 1, 0, 1, 3], 4).unwrap().as_str(), "CCBABD");
        assert!(OptionSequence::from_positions(&[4], 4).is_err());
    }

    #[test]
    fn params_defaults_and_bounds() {
        assert_eq!(SystemParams::for_q(6).unwrap().lambda, 3);
        assert_eq!(SystemParams::for_q(7).unwrap().lambda, 4);
        assert_eq!(SystemParams::for_q(8).unwrap().lambda, 5);
        assert!(SystemParams::for_q(5).is_err());
        assert!(SystemParams { q: 6, d: 4, k: 20, lambda: 7 }.validate().is_err());
        assert!(SystemParams { q: 6, d: 1, k: 20, lambda: 3 }.validate().is_err());
        assert!(SystemParams { q: 6, d: 4, k: 1, lambda: 3 }.validate().is_err());
        let p = SystemParams { d: 5, ..SystemParams::default() };
        assert!(!p.question_available(QuestionId::new(5).unwrap()));
        assert!(p.question_available(QuestionId::new(6).unwrap()));
    }
}
