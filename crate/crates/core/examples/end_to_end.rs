//! Both services on localhost: register, log in, then trip an alarm.
//!
//! cargo run --example end_to_end

use std::sync::Arc;

use honeyq::alternatives::{AnswerSubmission, LetterGroups};
use honeyq::authservice::{AlarmPolicy, AuthClient, AuthService, HttpServer};
use honeyq::honeychecker::{CheckerClient, CheckerServer, Honeychecker};
use honeyq::model::{OptionSequence, QuestionId, SystemParams};
use honeyq::vault::Vault;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let checker = CheckerServer::spawn("127.0.0.1:0", Arc::new(Honeychecker::in_memory()))?;
    let vault = Vault::in_memory();
    let svc = AuthService::new(SystemParams::default(), LetterGroups::default(), vault, Arc::new(CheckerClient::new(checker.local_addr().to_string())))?
        .with_policy(AlarmPolicy::LockAccount);
    let svc = Arc::new(svc);
    let http = HttpServer::spawn("127.0.0.1:0", Arc::clone(&svc))?;
    let client = AuthClient::new(http.base_url())?;

    let answers: Vec<AnswerSubmission> = [(2, "Sholay"), (1, "Rahul"), (5, "Evening"), (3, "Dr. Mehta"), (6, "18"), (10, "Apr-Jun")]
        .into_iter()
        .map(|(q, a)| Ok(AnswerSubmission { question: QuestionId::new(q)?, answer: a.into() }))
        .collect::<Result<_, honeyq::model::ModelError>>()?;
    client.register("alex", &answers)?;

    let challenge = client.challenge("alex")?;
    for item in &challenge.items {
        let opts: Vec<String> = item.options.iter().map(|o| format!("{}) {}", o.label, o.value)).collect();
        println!("{} {}\n    {}", item.question, item.text, opts.join("  "));
    }

    // an attacker who cracked F2 gets 20 candidates and picks one
    let f2 = svc.vault().read_f2("alex")?;
    let mut cracked = Vec::new();
    for idx in 0..4096usize {
        let pos: Vec<usize> = (0..6).map(|p| (idx >> (2 * p)) & 3).collect();
        let s = OptionSequence::from_positions(&pos, 4)?;
        if f2.position_of(&s).is_some() {
            cracked.push(s);
        }
    }
    println!("cracked {} sweetwords", cracked.len());
    for guess in &cracked {
        let outcome = client.login("alex", guess.as_str())?;
        println!("attacker tries {} -> {outcome:?}", guess.as_str());
        if !client.alarms()?.is_empty() {
            break;
        }
    }
    println!("alarms: {:?}", client.alarms()?);
    Ok(())
}
