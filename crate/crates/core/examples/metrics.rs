//! Closed-form security and storage figures for q = 6, 7, 8.
//!
//! cargo run --example metrics

use honeyq::analysis::{dos_probability, erguler_collision_prob, popular_absence_prob, ratio_f64, ratio_u128_f64, storage_qba, storage_saved};
use honeyq::model::SystemParams;
use honeyq::sweetwords::typo_safety_bound;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<3} {:>6} {:>12} {:>10} {:>6} {:>9}", "q", "lambda", "dos", "typo-safe", "qba", "saved");
    for q in [6u8, 7, 8] {
        let p = SystemParams::for_q(q)?;
        let dos = dos_probability(p.k, p.d as u32, q as u32)?;
        let typo = typo_safety_bound(p.d as u32, p.lambda as u32);
        println!(
            "{q:<3} {:>6} {:>12.6} {:>9.2}% {:>6} {:>8.3}%",
            p.lambda,
            ratio_u128_f64(&dos),
            (1.0 - *typo.numer() as f64 / *typo.denom() as f64) * 100.0,
            storage_qba(q as u32, 4)?,
            ratio_f64(&storage_saved(q as u32, 4)?)
        );
    }
    println!("collision N=1000 m=50 k=20: {:.6}", erguler_collision_prob(1000, 50, 20)?);
    println!("no popular honeyword, 30% popular, k=20: {:.6}", popular_absence_prob(0.3, 20)?);
    Ok(())
}
