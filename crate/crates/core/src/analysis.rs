//! Closed-form security and storage metrics, and Monte Carlo attacker
//! simulations that check them.
//!
//! Every simulation takes a seed. Trials are split into fixed chunks, each
//! chunk driven by its own ChaCha stream, and the chunks run in parallel; the
//! success count does not depend on scheduling, so reports are reproducible.

use std::collections::HashSet;
use std::fmt;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::alternatives::build_tuple_b;
use crate::grouping::{Corpus, FrequencyTable, GroupTable};
use crate::model::{CorpusClass, OptionSequence, QuestionId, SystemParams};
use crate::sweetwords::{generate_sweetwords, random_sequence, SweetwordList, DEFAULT_MAX_ATTEMPTS};

const CHUNK: u64 = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
    #[error("password {0:?} has no trailing digits")]
    NoDigitTail(String),
    #[error("attack not defined for this scheme: {0}")]
    UnsupportedAttack(&'static str),
}

type Result<T> = std::result::Result<T, AnalysisError>;

fn infeasible(msg: impl Into<String>) -> AnalysisError {
    AnalysisError::InfeasibleParams(msg.into())
}

/// Chance that an attacker who knows the true sequence hits a honeyword with
/// one uniform guess among the other `d^q - 1` sequences: `(k-1)/(d^q-1)`.
pub fn dos_probability(k: usize, d: u32, q: u32) -> Result<Ratio<u128>> {
    let n = (d as u128).checked_pow(q).ok_or_else(|| infeasible("d^q overflows"))?;
    if k == 0 || n <= k as u128 {
        return Err(infeasible(format!("need d^q > k >= 1, got d^q = {n}, k = {k}")));
    }
    Ok(Ratio::new(k as u128 - 1, n - 1))
}

/// Chance that a password shared by `m` of `n` users shows up in `k`
/// with-replacement draws from the user base: `1 - ((n-m)/n)^k`.
pub fn erguler_collision_prob(n: u64, m: u64, k: u32) -> Result<f64> {
    if n == 0 || m >= n {
        return Err(infeasible(format!("need 0 <= m < n, got m = {m}, n = {n}")));
    }
    // expm1/ln_1p keep precision for small m/n
    Ok(-(k as f64 * (-(m as f64) / n as f64).ln_1p()).exp_m1())
}

/// Chance that none of the `k - 1` honeywords comes from the popular set
/// when a fraction `popular_fraction` of users pick popular passwords.
pub fn popular_absence_prob(popular_fraction: f64, k: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&popular_fraction) {
        return Err(infeasible(format!("fraction {popular_fraction} outside [0, 1]")));
    }
    Ok((1.0 - popular_fraction).powi(k.saturating_sub(1) as i32))
}

fn storage_pre(q: u32, d: u32) -> Result<()> {
    if q == 0 || d < 2 {
        return Err(infeasible(format!("need q >= 1 and d >= 2, got q = {q}, d = {d}")));
    }
    Ok(())
}

/// Storage units for a plain question-based scheme keeping every answer:
/// q questions, q*d alternatives, username and password.
pub fn storage_qba(q: u32, d: u32) -> Result<u64> {
    storage_pre(q, d)?;
    Ok(q as u64 + q as u64 * d as u64 + 2)
}

/// Storage units for the F1 record: username, question numbers, tuple string.
pub fn storage_pqba() -> u64 {
    3
}

/// Percent saved by F1 over the plain scheme, exactly.
pub fn storage_saved(q: u32, d: u32) -> Result<Ratio<u64>> {
    let qba = storage_qba(q, d)?;
    Ok(Ratio::new((qba - storage_pqba()) * 100, qba))
}

pub fn ratio_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn ratio_u128_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Outcome of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    /// Clopper-Pearson 95% interval.
    pub ci95: (f64, f64),
    pub seed: u64,
    /// The value the estimate is compared against, if there is one.
    pub baseline: Option<f64>,
}

impl SimulationReport {
    pub fn new(trials: u64, successes: u64, seed: u64, baseline: Option<f64>) -> Self {
        let estimate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        SimulationReport { trials, successes, estimate, ci95: clopper_pearson(successes, trials), seed, baseline }
    }

    /// `estimate - baseline`; positive means the attacker beats the baseline.
    pub fn advantage(&self) -> Option<f64> {
        self.baseline.map(|b| self.estimate - b)
    }

    pub fn baseline_in_ci(&self) -> Option<bool> {
        self.baseline.map(|b| self.ci95.0 <= b && b <= self.ci95.1)
    }
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {}", "trials", self.trials)?;
        writeln!(f, "{:<10} {}", "successes", self.successes)?;
        writeln!(f, "{:<10} {:.6}", "estimate", self.estimate)?;
        writeln!(f, "{:<10} [{:.6}, {:.6}]", "ci95", self.ci95.0, self.ci95.1)?;
        if let Some(b) = self.baseline {
            writeln!(f, "{:<10} {:.6}", "baseline", b)?;
            writeln!(f, "{:<10} {:+.6}", "advantage", self.estimate - b)?;
        }
        write!(f, "{:<10} {}", "seed", self.seed)
    }
}

/// Exact binomial 95% interval.
pub fn clopper_pearson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (x, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).expect("positive shape").inverse_cdf(0.025)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).expect("positive shape").inverse_cdf(0.975)
    };
    (lo, hi)
}

/// Runs `trials` independent trials and returns how many succeeded. Chunk
/// `i` uses stream `i` of the seeded generator.
fn run_trials<F>(trials: u64, seed: u64, trial: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(trials - c * CHUNK);
            let mut hits = 0;
            for _ in 0..n {
                hits += trial(&mut rng)? as u64;
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Sampling {
    #[default]
    WithReplacement,
    WithoutReplacement,
}

/// How many passwords a trial draws from the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ErgulerDraws {
    /// k draws, the exponent of the closed form.
    #[default]
    K,
    /// k - 1 draws: only the honeywords, the owner's password excluded.
    HoneywordsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgulerConfig {
    /// Users whose passwords form the honeyword source.
    pub n: usize,
    pub k: usize,
    pub sampling: Sampling,
    pub draws: ErgulerDraws,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgulerReport {
    /// Trials where the planted password was drawn.
    pub appearance: SimulationReport,
    /// Occurrences of the planted password among the first `n` users.
    pub m: usize,
    /// `duplicate_histogram[j]`: trials whose draws held exactly j repeats.
    pub duplicate_histogram: Vec<u64>,
    pub mean_duplicates: f64,
    /// Mean of `1/(k - k_hat)` over trials.
    pub mean_crack_probability: f64,
}

/// Honeywords picked from other users' passwords. Reports how often the
/// planted password is drawn, and how many draws repeat an earlier one.
pub fn simulate_erguler(
    cfg: ErgulerConfig,
    population: &[String],
    planted: &str,
    trials: u64,
    seed: u64,
) -> Result<ErgulerReport> {
    let ErgulerConfig { n, k, sampling, draws } = cfg;
    if population.len() < n || n == 0 {
        return Err(infeasible(format!("population of {} is smaller than n = {n}", population.len())));
    }
    let pop = &population[..n];
    let draws = match draws {
        ErgulerDraws::K => k,
        ErgulerDraws::HoneywordsOnly => k.saturating_sub(1),
    };
    if sampling == Sampling::WithoutReplacement && draws > n {
        return Err(infeasible(format!("cannot draw {draws} of {n} without replacement")));
    }
    let m = pop.iter().filter(|p| *p == planted).count();
    let baseline = (draws > 0 && m < n).then(|| erguler_collision_prob(n as u64, m as u64, draws as u32)).transpose()?;

    let one_trial = |rng: &mut ChaCha8Rng| -> (bool, usize) {
        let picked: Vec<&String> = match sampling {
            Sampling::WithReplacement => (0..draws).map(|_| &pop[rng.random_range(0..n)]).collect(),
            Sampling::WithoutReplacement => sample(rng, n, draws).into_iter().map(|i| &pop[i]).collect(),
        };
        let hit = picked.iter().any(|p| *p == planted);
        let distinct: HashSet<&&String> = picked.iter().collect();
        (hit, picked.len() - distinct.len())
    };

    let chunks = trials.div_ceil(CHUNK);
    let (hits, hist) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut hits = 0u64;
            let mut hist = vec![0u64; draws.max(1)];
            for _ in 0..CHUNK.min(trials - c * CHUNK) {
                let (hit, dup) = one_trial(&mut rng);
                hits += hit as u64;
                hist[dup] += 1;
            }
            (hits, hist)
        })
        .reduce(
            || (0, vec![0u64; draws.max(1)]),
            |(h1, mut a), (h2, b)| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                (h1 + h2, a)
            },
        );
    let total = trials.max(1) as f64;
    let mean_duplicates = hist.iter().enumerate().map(|(j, &c)| j as f64 * c as f64).sum::<f64>() / total;
    // the sweetword list is k long; k_hat repeats leave k - k_hat distinct words
    let mean_crack_probability = hist
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(j, &c)| c as f64 / (k.saturating_sub(j).max(1)) as f64)
        .sum::<f64>()
        / total;
    Ok(ErgulerReport {
        appearance: SimulationReport::new(trials, hits, seed, baseline.or(Some(0.0))),
        m,
        duplicate_histogram: hist,
        mean_duplicates,
        mean_crack_probability,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Strategy {
    #[default]
    UniformGuess,
    /// Pick the candidate with the highest prior, ties broken at random.
    FrequencyWeighted,
}

/// What the adversary knows besides the plaintext sweetwords.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackerModel {
    pub strategy: Strategy,
    pub frequency_priors: Option<FrequencyTable>,
    /// The attacker already has the true password and wants to trigger a
    /// false alarm. It then guesses without seeing the stored list.
    pub knows_true_password: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlatnessScheme {
    /// One b-question tuple built from a random corpus answer.
    ProposedTuples { corpus: Corpus, groups: GroupTable, d: usize },
    /// A full sweetword list for a random true sequence.
    ProposedSweetwords { params: SystemParams },
    /// The trailing digits of `password` tweaked k - 1 times.
    ChaffingDigits { password: String, k: usize },
}

fn b_question_for(class: CorpusClass) -> QuestionId {
    QuestionId::new(match class {
        CorpusClass::PersonName => 1,
        CorpusClass::MovieName => 2,
    })
    .expect("catalog id")
}

/// Index of the best guess among `candidates` scored by `score`.
fn argmax_random<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    *ties.choose(rng).expect("non-empty scores")
}

/// Estimates how often the attacker picks the true item. With
/// `knows_true_password`, estimates how often a blind guess hits a honeyword.
pub fn simulate_flatness(scheme: &FlatnessScheme, attacker: &AttackerModel, trials: u64, seed: u64) -> Result<SimulationReport> {
    match scheme {
        FlatnessScheme::ProposedTuples { corpus, groups, d } => {
            if attacker.knows_true_password {
                return Err(AnalysisError::UnsupportedAttack("a single tuple has no honeywords"));
            }
            let qid = b_question_for(corpus.class);
            let usable: Vec<&String> = corpus
                .entries
                .iter()
                .filter(|e| build_tuple_b(e, qid, groups, *d, &mut ChaCha8Rng::seed_from_u64(0)).is_ok())
                .collect();
            if usable.is_empty() {
                return Err(infeasible("no corpus entry yields a tuple"));
            }
            let priors = match (attacker.strategy, &attacker.frequency_priors) {
                (Strategy::FrequencyWeighted, None) => return Err(infeasible("FrequencyWeighted needs frequency priors")),
                (Strategy::FrequencyWeighted, Some(p)) => Some(p),
                (Strategy::UniformGuess, _) => None,
            };
            let hits = run_trials(trials, seed, |rng| {
                let answer = *usable.choose(rng).expect("non-empty");
                let built = build_tuple_b(answer, qid, groups, *d, rng).expect("usable entry");
                let guess = match priors {
                    Some(p) => {
                        let scores: Vec<f64> = built.tuple.alternatives.iter().map(|a| p.get(a.chars().next().unwrap_or('?'))).collect();
                        argmax_random(&scores, rng)
                    }
                    None => rng.random_range(0..*d),
                };
                Ok(guess == built.correct_position)
            })?;
            Ok(SimulationReport::new(trials, hits, seed, Some(1.0 / *d as f64)))
        }
        FlatnessScheme::ProposedSweetwords { params } => {
            params.validate().map_err(|e| infeasible(e.to_string()))?;
            let (q, d, k, lambda) = (params.q as usize, params.d, params.k, params.lambda as usize);
            let list = |rng: &mut ChaCha8Rng| -> Result<SweetwordList> {
                let act = random_sequence(q, d, rng);
                generate_sweetwords(k, lambda, &act, rng, DEFAULT_MAX_ATTEMPTS).map_err(|e| infeasible(e.to_string()))
            };
            if attacker.knows_true_password {
                let baseline = ratio_u128_f64(&dos_probability(k, d as u32, q as u32)?);
                let hits = run_trials(trials, seed, |rng| {
                    let l = list(rng)?;
                    let truth = l.true_sequence().clone();
                    let guess = loop {
                        let g = random_sequence(q, d, rng);
                        if g != truth {
                            break g;
                        }
                    };
                    Ok(l.sequences.contains(&guess))
                })?;
                return Ok(SimulationReport::new(trials, hits, seed, Some(baseline)));
            }
            // option sequences carry no prior: every strategy is a uniform pick
            let hits = run_trials(trials, seed, |rng| {
                let l = list(rng)?;
                Ok(rng.random_range(0..k) == l.true_index)
            })?;
            Ok(SimulationReport::new(trials, hits, seed, Some(1.0 / k as f64)))
        }
        FlatnessScheme::ChaffingDigits { password, k } => {
            let (stem, tail) = split_digit_tail(password)?;
            let space = 10u64.checked_pow(tail.len() as u32).ok_or_else(|| infeasible("digit tail too long"))?;
            if attacker.knows_true_password {
                let baseline = (*k as f64 - 1.0) / (space as f64 - 1.0);
                let hits = run_trials(trials, seed, |rng| {
                    let words = chaffing_tweak_digits(password, *k, rng)?;
                    let guess = loop {
                        let g = format!("{stem}{:0width$}", rng.random_range(0..space), width = tail.len());
                        if g != *password {
                            break g;
                        }
                    };
                    Ok(words.contains(&guess))
                })?;
                return Ok(SimulationReport::new(trials, hits, seed, Some(baseline)));
            }
            let hits = run_trials(trials, seed, |rng| {
                let words = chaffing_tweak_digits(password, *k, rng)?;
                Ok(words.choose(rng) == Some(password))
            })?;
            Ok(SimulationReport::new(trials, hits, seed, Some(1.0 / *k as f64)))
        }
    }
}

/// The proposed scheme's false-alarm exposure, by simulation.
pub fn simulate_dos(params: SystemParams, trials: u64, seed: u64) -> Result<SimulationReport> {
    let attacker = AttackerModel { knows_true_password: true, ..AttackerModel::default() };
    simulate_flatness(&FlatnessScheme::ProposedSweetwords { params }, &attacker, trials, seed)
}

fn split_digit_tail(password: &str) -> Result<(&str, &str)> {
    let stem = password.trim_end_matches(|c: char| c.is_ascii_digit());
    if stem.len() == password.len() {
        return Err(AnalysisError::NoDigitTail(password.to_string()));
    }
    Ok((stem, &password[stem.len()..]))
}

/// The password plus `k - 1` copies whose trailing digits are replaced by
/// other random values, all distinct, in shuffled order.
pub fn chaffing_tweak_digits<R: Rng + ?Sized>(password: &str, k: usize, rng: &mut R) -> Result<Vec<String>> {
    let (stem, tail) = split_digit_tail(password)?;
    let width = tail.len();
    let space = 10usize.checked_pow(width as u32).ok_or_else(|| infeasible("digit tail too long"))?;
    if k == 0 || k > space {
        return Err(infeasible(format!("k = {k} outside 1..={space}")));
    }
    let own: usize = tail.parse().map_err(|_| infeasible("digit tail too long"))?;
    let mut words: Vec<String> = sample(rng, space - 1, k - 1)
        .into_iter()
        .map(|i| if i >= own { i + 1 } else { i })
        .map(|v| format!("{stem}{v:0width$}"))
        .collect();
    words.push(password.to_string());
    rand::seq::SliceRandom::shuffle(words.as_mut_slice(), rng);
    Ok(words)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TypoModel {
    /// Each symbol independently mistyped with probability p.
    PerSymbol { p: f64 },
    /// Exactly `count` distinct symbols mistyped.
    ExactSymbols { count: usize },
}

fn mistype<R: Rng + ?Sized>(symbol: u8, d: u8, rng: &mut R) -> u8 {
    let r = rng.random_range(0..d - 1);
    if r >= symbol { r + 1 } else { r }
}

/// How often a mistyped true sequence lands on a honeyword. For
/// `ExactSymbols` the baseline is the `(k-1)(1/(C-1))^count` bound.
pub fn typo_accident_rate(list: &SweetwordList, model: TypoModel, trials: u64, seed: u64) -> Result<SimulationReport> {
    let truth = list.true_sequence();
    let (len, d) = (truth.len(), truth.alphabet_size());
    let baseline = match model {
        TypoModel::PerSymbol { p } if !(0.0..=1.0).contains(&p) => return Err(infeasible(format!("p = {p} outside [0, 1]"))),
        TypoModel::PerSymbol { .. } => None,
        TypoModel::ExactSymbols { count } if count > len => return Err(infeasible(format!("{count} errors in {len} symbols"))),
        TypoModel::ExactSymbols { count } => Some((list.sequences.len() - 1) as f64 * (1.0 / (d as f64 - 1.0)).powi(count as i32)),
    };
    let ords: Vec<u8> = truth.ordinals().collect();
    let hits = run_trials(trials, seed, |rng| {
        let mut typed = ords.clone();
        match model {
            TypoModel::PerSymbol { p } => {
                for s in typed.iter_mut() {
                    if rng.random_bool(p) {
                        *s = mistype(*s, d, rng);
                    }
                }
            }
            TypoModel::ExactSymbols { count } => {
                for i in sample(rng, len, count) {
                    typed[i] = mistype(typed[i], d, rng);
                }
            }
        }
        let positions: Vec<usize> = typed.iter().map(|&o| o as usize).collect();
        let seq = OptionSequence::from_positions(&positions, d).expect("ordinals within alphabet");
        Ok(seq != *truth && list.sequences.contains(&seq))
    })?;
    Ok(SimulationReport::new(trials, hits, seed, baseline))
}
