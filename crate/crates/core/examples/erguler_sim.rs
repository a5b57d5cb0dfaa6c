//! Honeywords drawn from other users' passwords, with replacement.
//!
//! cargo run --release --example erguler_sim

use honeyq::analysis::{erguler_collision_prob, simulate_erguler, ErgulerConfig, ErgulerDraws, Sampling};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut population: Vec<String> = (0..950).map(|i| format!("pw{i}")).collect();
    population.extend(std::iter::repeat_n("123456".to_string(), 50));
    for sampling in [Sampling::WithReplacement, Sampling::WithoutReplacement] {
        let cfg = ErgulerConfig { n: 1000, k: 20, sampling, draws: ErgulerDraws::K };
        let r = simulate_erguler(cfg, &population, "123456", 100_000, 42)?;
        println!("{sampling:?}");
        println!("{}", r.appearance);
        println!("mean repeats {:.3}, mean 1/(k-k_hat) {:.4}\n", r.mean_duplicates, r.mean_crack_probability);
    }
    println!("closed form {:.6}", erguler_collision_prob(1000, 50, 20)?);
    Ok(())
}
