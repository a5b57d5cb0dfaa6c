//! Frequency analysis and band grouping.
//!
//! cargo run --example letter_groups

use honeyq::grouping::{form_groups, ingest_corpus, select_index_position, FrequencyTable, GroupParams};
use honeyq::model::CorpusClass;

const NAMES: &str = "Aarav\nAditi\nAmit\nAnjali\nArjun\nMeera\nMohan\nPriya\nPooja\nRahul\nRavi\nRohan\nSita\nSuresh\nSneha\nBina\nDeepak\nGaurav\nKiran\nNeha\nVikram\nChetan\nHarish\nIndira\nLata\nTara\nEsha\nOm\nUma\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // the published per-group means reproduce the reference partition
    let table = form_groups(GroupParams::POPULATION, &FrequencyTable::population_means())?;
    for g in &table.groups {
        println!("G{}  {:<10} mean {:.2}", g.g_id, g.elements.iter().collect::<String>(), g.mean);
    }

    let corpus = ingest_corpus(NAMES, CorpusClass::PersonName)?;
    let (best, candidates) = select_index_position(&corpus, 4, GroupParams::POPULATION)?;
    for c in &candidates {
        println!("{:<7} viable={} outliers={} variance={:.3}", c.index.ordinal_name(), c.viable, c.outliers, c.total_variance);
    }
    println!("use the {} letter", best.ordinal_name());
    Ok(())
}
