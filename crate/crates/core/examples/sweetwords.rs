//! Lambda-different sweetword lists.
//!
//! cargo run --example sweetwords

use honeyq::model::OptionSequence;
use honeyq::sweetwords::{expected_proposals, feasibility_advice, generate_sweetwords, typo_safety_bound, DEFAULT_MAX_ATTEMPTS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let act = OptionSequence::parse("BDBAAA", 4)?;
    let list = generate_sweetwords(20, 3, &act, &mut ChaCha8Rng::seed_from_u64(1), DEFAULT_MAX_ATTEMPTS)?;
    for (i, s) in list.sequences.iter().enumerate() {
        println!("{i:>2} {}{}", s.as_str(), if i == list.true_index { "  (true)" } else { "" });
    }
    println!("min pairwise distance {}", list.min_pairwise_distance().unwrap_or(0));

    for (q, lambda) in [(6, 3), (7, 4), (8, 5)] {
        println!(
            "q={q} lambda={lambda}: accept {:.4}, ~{:.0} proposals per list, typo bound {}",
            feasibility_advice(lambda, q, 4),
            expected_proposals(20, lambda, q, 4),
            typo_safety_bound(4, lambda as u32)
        );
    }
    Ok(())
}
