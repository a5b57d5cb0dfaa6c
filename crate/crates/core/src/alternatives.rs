//! Builds the d-alternative tuple shown for each answered question.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouping::{normalize, GroupTable};
use crate::model::{question, BuiltTuple, CorpusClass, IndexSelector, QuestionId, QuestionKind, Tuple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlternativesError {
    #[error("answer is empty after normalization")]
    EmptyAnswer,
    #[error("answer {answer:?} has no {index} letter")]
    AnswerTooShort { answer: String, index: IndexSelector },
    #[error("letter {letter} belongs to a group of {size} letters, fewer than d = {d}")]
    GroupTooSmall { letter: char, size: usize, d: usize },
    #[error("letter {letter} is an outlier and belongs to no group")]
    LetterUngrouped { letter: char },
    #[error("{question} is not a {expected} question")]
    WrongKind { question: QuestionId, expected: &'static str },
    #[error("answer {value} is outside {lo}..={hi}")]
    OutOfRange { value: i64, lo: u32, hi: u32 },
    #[error("range {lo}..={hi} has fewer than d = {d} values")]
    RangeTooSmall { lo: u32, hi: u32, d: usize },
    #[error("answer {0:?} is not a number")]
    NotNumeric(String),
    #[error("answer {answer:?} matches none of {labels:?}")]
    UnknownChoice { answer: String, labels: Vec<String> },
    #[error("fixed-choice questions need d = 4, got {d}")]
    FixedChoiceUnavailable { d: usize },
    #[error("group table does not record an index position")]
    NoIndexPosition,
}

/// One answer typed at registration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSubmission {
    pub question: QuestionId,
    pub answer: String,
}

/// Letter groups per corpus class.
#[derive(Debug, Clone, PartialEq)]
pub struct LetterGroups {
    pub person: GroupTable,
    pub movie: GroupTable,
}

impl LetterGroups {
    pub fn for_class(&self, class: CorpusClass) -> &GroupTable {
        match class {
            CorpusClass::PersonName => &self.person,
            CorpusClass::MovieName => &self.movie,
        }
    }
}

impl Default for LetterGroups {
    fn default() -> Self {
        LetterGroups {
            person: GroupTable::population_reference(),
            movie: GroupTable::movie_reference(),
        }
    }
}

/// Letter at `index` of the normalized answer.
pub fn extract_letter(answer: &str, index: IndexSelector) -> Result<char, AlternativesError> {
    let norm = normalize(answer);
    if norm.is_empty() {
        return Err(AlternativesError::EmptyAnswer);
    }
    index
        .pick(&norm)
        .map(|b| b as char)
        .ok_or(AlternativesError::AnswerTooShort { answer: norm, index })
}

/// Tuple for a b-question: the answer's letter plus `d - 1` distinct letters
/// drawn uniformly from the same group, in shuffled order.
pub fn build_tuple_b<R: Rng + ?Sized>(
    answer: &str,
    question_id: QuestionId,
    groups: &GroupTable,
    d: usize,
    rng: &mut R,
) -> Result<BuiltTuple, AlternativesError> {
    if !matches!(question(question_id).kind, QuestionKind::BQuestion { .. }) {
        return Err(AlternativesError::WrongKind { question: question_id, expected: "b" });
    }
    let index = groups.index.ok_or(AlternativesError::NoIndexPosition)?;
    let letter = extract_letter(answer, index)?;
    let group = groups.group_of(letter).ok_or(AlternativesError::LetterUngrouped { letter })?;
    if group.elements.len() < d {
        return Err(AlternativesError::GroupTooSmall { letter, size: group.elements.len(), d });
    }
    let others: Vec<char> = group.elements.iter().copied().filter(|&c| c != letter).collect();
    let mut picks: Vec<char> = others.choose_multiple(rng, d - 1).copied().collect();
    picks.push(letter);
    picks.shuffle(rng);
    let correct_position = picks.iter().position(|&c| c == letter).expect("true letter present");
    Ok(BuiltTuple {
        tuple: Tuple { question: question_id, alternatives: picks.into_iter().map(String::from).collect() },
        correct_position,
    })
}

/// The four catalog labels, in catalog order.
pub fn build_tuple_fixed(question_id: QuestionId) -> Result<Tuple, AlternativesError> {
    match &question(question_id).kind {
        QuestionKind::FixedChoice { labels } => Ok(Tuple { question: question_id, alternatives: labels.to_vec() }),
        _ => Err(AlternativesError::WrongKind { question: question_id, expected: "fixed-choice" }),
    }
}

/// Position of `answer` among a fixed-choice question's labels (case-insensitive).
pub fn fixed_choice_position(question_id: QuestionId, answer: &str) -> Result<usize, AlternativesError> {
    let tuple = build_tuple_fixed(question_id)?;
    let a = answer.trim();
    tuple
        .alternatives
        .iter()
        .position(|l| l.eq_ignore_ascii_case(a))
        .ok_or_else(|| AlternativesError::UnknownChoice { answer: a.to_string(), labels: tuple.alternatives.clone() })
}

/// Tuple for a numeric question: the answer plus `d - 1` distinct values from
/// the question's range, shuffled and rendered at the question's width.
pub fn build_tuple_numeric<R: Rng + ?Sized>(
    question_id: QuestionId,
    answer: i64,
    d: usize,
    rng: &mut R,
) -> Result<BuiltTuple, AlternativesError> {
    let QuestionKind::NumericRange { lo, hi, width } = question(question_id).kind else {
        return Err(AlternativesError::WrongKind { question: question_id, expected: "numeric" });
    };
    if answer < lo as i64 || answer > hi as i64 {
        return Err(AlternativesError::OutOfRange { value: answer, lo, hi });
    }
    let span = (hi - lo + 1) as usize;
    if span < d {
        return Err(AlternativesError::RangeTooSmall { lo, hi, d });
    }
    let answer = answer as u32;
    let mut values: Vec<u32> = rand::seq::index::sample(rng, span - 1, d - 1)
        .into_iter()
        .map(|i| {
            let v = lo + i as u32;
            if v >= answer { v + 1 } else { v }
        })
        .collect();
    values.push(answer);
    values.shuffle(rng);
    let correct_position = values.iter().position(|&v| v == answer).expect("answer present");
    let render = |v: u32| match width {
        Some(w) => format!("{v:0w$}", w = w as usize),
        None => v.to_string(),
    };
    Ok(BuiltTuple {
        tuple: Tuple { question: question_id, alternatives: values.into_iter().map(render).collect() },
        correct_position,
    })
}

/// Dispatches on the question kind.
pub fn build_tuple<R: Rng + ?Sized>(
    submission: &AnswerSubmission,
    groups: &LetterGroups,
    d: usize,
    rng: &mut R,
) -> Result<BuiltTuple, AlternativesError> {
    let id = submission.question;
    match &question(id).kind {
        QuestionKind::BQuestion { corpus } => build_tuple_b(&submission.answer, id, groups.for_class(*corpus), d, rng),
        QuestionKind::FixedChoice { .. } => {
            if d != 4 {
                return Err(AlternativesError::FixedChoiceUnavailable { d });
            }
            let correct_position = fixed_choice_position(id, &submission.answer)?;
            Ok(BuiltTuple { tuple: build_tuple_fixed(id)?, correct_position })
        }
        QuestionKind::NumericRange { .. } => {
            let raw = submission.answer.trim();
            let value: i64 = raw.parse().map_err(|_| AlternativesError::NotNumeric(raw.to_string()))?;
            build_tuple_numeric(id, value, d, rng)
        }
    }
}
