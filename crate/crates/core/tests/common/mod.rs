#![allow(dead_code)]

use honeyq::alternatives::{extract_letter, AnswerSubmission, LetterGroups};
use honeyq::authservice::LoginChallenge;
use honeyq::model::{question, OptionSequence, QuestionId, QuestionKind};
use honeyq::vault::VaultEntryF2;

pub fn answers(pairs: &[(u32, &str)]) -> Vec<AnswerSubmission> {
    pairs
        .iter()
        .map(|&(q, a)| AnswerSubmission { question: QuestionId::new(q).unwrap(), answer: a.to_string() })
        .collect()
}

pub fn alex() -> Vec<AnswerSubmission> {
    answers(&[(2, "Sholay"), (1, "Rahul"), (5, "Evening"), (3, "Dr. Mehta"), (6, "18"), (10, "Apr-Jun")])
}

/// What someone who remembers `answers` would click.
pub fn sequence_for(ch: &LoginChallenge, answers: &[AnswerSubmission]) -> String {
    let groups = LetterGroups::default();
    ch.items
        .iter()
        .map(|item| {
            let a = answers.iter().find(|a| a.question == item.question).expect("answered");
            let want = match &question(a.question).kind {
                QuestionKind::BQuestion { corpus } => {
                    extract_letter(&a.answer, groups.for_class(*corpus).index.unwrap()).unwrap().to_string()
                }
                _ => a.answer.clone(),
            };
            item.options.iter().find(|o| o.value.eq_ignore_ascii_case(&want)).expect("answer offered").label
        })
        .collect()
}

/// Every sequence of length `q` over `d` letters.
pub fn all_sequences(q: usize, d: u8) -> impl Iterator<Item = OptionSequence> {
    let total = (d as usize).pow(q as u32);
    (0..total).map(move |mut idx| {
        let positions: Vec<usize> = (0..q)
            .map(|_| {
                let p = idx % d as usize;
                idx /= d as usize;
                p
            })
            .collect();
        OptionSequence::from_positions(&positions, d).unwrap()
    })
}

/// Recovers the stored sweetwords by hashing the whole sequence space.
pub fn invert_f2(entry: &VaultEntryF2, q: usize, d: u8) -> Vec<OptionSequence> {
    let mut found: Vec<(usize, OptionSequence)> =
        all_sequences(q, d).filter_map(|s| entry.position_of(&s).map(|p| (p, s))).collect();
    found.sort_by_key(|(p, _)| *p);
    found.into_iter().map(|(_, s)| s).collect()
}
