//! Attacker success against tuples, sweetword lists and digit chaffing.
//!
//! cargo run --release --example flatness_sim

use honeyq::analysis::{simulate_dos, simulate_flatness, AttackerModel, FlatnessScheme, Strategy};
use honeyq::grouping::{ingest_corpus, letter_frequencies, GroupTable};
use honeyq::model::{CorpusClass, IndexSelector, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A is far more common than the rest of its group here
    let mut text = String::new();
    for (c, n) in [('A', 300), ('M', 80), ('P', 70), ('R', 90), ('S', 60)] {
        for _ in 0..n {
            text.push_str(&format!("{c}ANI\n"));
        }
    }
    let corpus = ingest_corpus(&text, CorpusClass::PersonName)?;
    let priors = letter_frequencies(&corpus, IndexSelector::First)?;
    let scheme = FlatnessScheme::ProposedTuples { corpus, groups: GroupTable::population_reference(), d: 4 };
    let smart = AttackerModel { strategy: Strategy::FrequencyWeighted, frequency_priors: Some(priors), knows_true_password: false };
    let r = simulate_flatness(&scheme, &smart, 100_000, 1)?;
    println!("skewed group, frequency attacker: {:.4} (advantage {:+.4})", r.estimate, r.advantage().unwrap_or(0.0));

    let r = simulate_flatness(&FlatnessScheme::ProposedSweetwords { params: SystemParams::default() }, &AttackerModel::default(), 100_000, 1)?;
    println!("sweetword list, uniform guess: {:.4}", r.estimate);

    let knows = AttackerModel { knows_true_password: true, ..AttackerModel::default() };
    let r = simulate_flatness(&FlatnessScheme::ChaffingDigits { password: "dextra5".into(), k: 6 }, &knows, 100_000, 1)?;
    println!("dextra5 chaffing, false alarm by a password holder: {:.4}", r.estimate);
    let r = simulate_dos(SystemParams::default(), 100_000, 1)?;
    println!("option sequences, same attacker: {:.4}", r.estimate);
    Ok(())
}
