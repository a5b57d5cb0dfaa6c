//! What F1 and F2 hold for one registered user.
//!
//! cargo run --example vault_files

use std::sync::Arc;

use honeyq::alternatives::{AnswerSubmission, LetterGroups};
use honeyq::authservice::AuthService;
use honeyq::honeychecker::Honeychecker;
use honeyq::model::{QuestionId, SystemParams};
use honeyq::vault::{storage_cost_f1, storage_cost_f2, Vault};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let svc = AuthService::new(SystemParams::default(), LetterGroups::default(), Vault::in_memory(), Arc::new(Honeychecker::in_memory()))?
        .with_seed(3);
    let answers: Vec<AnswerSubmission> = [(2, "Sholay"), (1, "Rahul"), (5, "Evening"), (3, "Dr. Mehta"), (6, "18"), (10, "Apr-Jun")]
        .into_iter()
        .map(|(q, a)| Ok(AnswerSubmission { question: QuestionId::new(q)?, answer: a.into() }))
        .collect::<Result<_, honeyq::model::ModelError>>()?;
    svc.register("alex", &answers)?;

    let f1 = svc.vault().read_f1("alex")?;
    println!("F1  {}  {}  {}", f1.username, f1.question_numbers(), f1.tuple_string());
    let f2 = svc.vault().read_f2("alex")?;
    println!("F2  {} {:?} salt {}", f2.username, f2.algorithm, f2.salt);
    for h in f2.hashes.iter().take(3) {
        println!("    {h}");
    }
    println!("    ... {} digests", f2.hashes.len());
    println!("units: F1 {} F2 {}", storage_cost_f1(6, 4).0, storage_cost_f2(20).0);
    Ok(())
}
