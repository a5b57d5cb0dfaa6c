//! Building the per-question tuples a user sees at login.
//!
//! cargo run --example flat_tuples

use honeyq::alternatives::{build_tuple, AnswerSubmission, LetterGroups};
use honeyq::model::{option_letter, OptionSequence, QuestionId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let groups = LetterGroups::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let answers = [(2, "Sholay"), (1, "Rahul"), (5, "Evening"), (3, "Dr. Mehta"), (6, "18"), (10, "Apr-Jun")];
    let mut positions = Vec::new();
    for (q, a) in answers {
        let sub = AnswerSubmission { question: QuestionId::new(q)?, answer: a.into() };
        let built = build_tuple(&sub, &groups, 4, &mut rng)?;
        println!("{:<4} {:<12} {}  -> {}", sub.question, a, built.tuple.render(), option_letter(built.correct_position));
        positions.push(built.correct_position);
    }
    // the option sequence is the password; only its sweetword list is stored
    println!("option sequence {}", OptionSequence::from_positions(&positions, 4)?.as_str());

    let bad = AnswerSubmission { question: QuestionId::new(6)?, answer: "140".into() };
    println!("rejected: {}", build_tuple(&bad, &groups, 4, &mut rng).unwrap_err());
    Ok(())
}
