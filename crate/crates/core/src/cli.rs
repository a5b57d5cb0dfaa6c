//! The `honeyq` operator tool. `run` parses argv and returns the exit code:
//! 0 on success, 1 on a domain error, 2 on a usage error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::alternatives::AnswerSubmission;
use crate::analysis::{self, AttackerModel, ErgulerConfig, ErgulerDraws, FlatnessScheme, Sampling, Strategy, TypoModel};
use crate::authservice::{AlarmPolicy, AuthClient, AuthConfig};
use crate::grouping::{
    form_groups, ingest_corpus, letter_frequencies, select_index_position, FrequencyTable, GroupParams, GroupTable,
};
use crate::honeychecker::{CheckerServer, Honeychecker};
use crate::model::{CorpusClass, IndexSelector, OptionSequence, QuestionId, SystemParams};
use crate::sweetwords::{feasibility_advice, generate_sweetwords, typo_safety_bound, DEFAULT_MAX_ATTEMPTS};
use crate::vault::storage_cost_f2;

type DynError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Parser)]
#[command(name = "honeyq", version, about = "Questionnaire-based honeyword authentication toolkit")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassArg {
    Person,
    Movie,
}

impl From<ClassArg> for CorpusClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Person => CorpusClass::PersonName,
            ClassArg::Movie => CorpusClass::MovieName,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IndexArg {
    First,
    Second,
    Third,
    Last,
}

impl From<IndexArg> for IndexSelector {
    fn from(i: IndexArg) -> Self {
        match i {
            IndexArg::First => IndexSelector::First,
            IndexArg::Second => IndexSelector::Second,
            IndexArg::Third => IndexSelector::Third,
            IndexArg::Last => IndexSelector::Last,
        }
    }
}

#[derive(Debug, Args)]
struct GroupArgs {
    /// Defaults come from the corpus class when these are omitted.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "eps-p")]
    eps_p: Option<f64>,
    #[arg(long = "eps-b")]
    eps_b: Option<f64>,
}

impl GroupArgs {
    fn resolve(&self, class: CorpusClass) -> GroupParams {
        let base = GroupParams::for_class(class);
        GroupParams {
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            eps_p: self.eps_p.unwrap_or(base.eps_p),
            eps_b: self.eps_b.unwrap_or(base.eps_b),
        }
    }
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 6)]
    q: u8,
    #[arg(long, default_value_t = 4)]
    d: u8,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Defaults to 3, 4, 5 for q = 6, 7, 8.
    #[arg(long)]
    lambda: Option<u8>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<SystemParams, DynError> {
        let lambda = match self.lambda {
            Some(l) => l,
            None => SystemParams::default_lambda(self.q)?,
        };
        let p = SystemParams { q: self.q, d: self.d, k: self.k, lambda };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Letter frequencies of a corpus at one index position.
    Freq {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "person")]
        class: ClassArg,
        #[arg(long, value_enum, default_value = "first")]
        index: IndexArg,
    },
    /// Form equally probable letter groups from a frequency table or corpus.
    Groups {
        /// Frequency table JSON, as written by `freq --json`.
        #[arg(long, conflicts_with = "corpus")]
        freq: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "person")]
        class: ClassArg,
        #[arg(long, value_enum)]
        index: Option<IndexArg>,
        #[command(flatten)]
        params: GroupArgs,
        /// Write the group table JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choose the index position giving the best groups for a corpus.
    PickIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "person")]
        class: ClassArg,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[command(flatten)]
        params: GroupArgs,
    },
    /// Generate a sweetword list around one option sequence.
    Sweetwords {
        /// The true option sequence, e.g. BDBAAA.
        #[arg(long)]
        act: String,
        #[arg(long, default_value_t = 4)]
        d: u8,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        lambda: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Closed-form security and storage metrics.
    Metrics {
        #[command(flatten)]
        params: ParamArgs,
        /// Users in the population for the collision metric.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Users sharing the planted password.
        #[arg(long, default_value_t = 50)]
        m: u64,
        /// Fraction of users picking popular passwords.
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
    },
    /// Monte Carlo simulations.
    Simulate {
        #[command(subcommand)]
        sim: Simulation,
    },
    /// Run the honeychecker TCP server.
    ServeChecker {
        #[arg(long, env = "HONEYQ_CHECKER_LISTEN", default_value = "127.0.0.1:7070")]
        listen: String,
        /// Persist the index table and alarm log here.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Run the auth HTTP server.
    ServeAuth {
        /// TOML config; flags and environment override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        checker: Option<String>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        policy: Option<AlarmPolicy>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Register a user with a running auth server.
    Register {
        #[arg(long, env = "HONEYQ_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
        #[arg(long)]
        user: String,
        /// `<question>=<answer>`, once per question, e.g. `2=Sholay`.
        #[arg(long = "answer", value_parser = parse_answer, required = true)]
        answers: Vec<AnswerSubmission>,
    },
    /// Show the login challenge for a user.
    Challenge {
        #[arg(long, env = "HONEYQ_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
        #[arg(long)]
        user: String,
    },
    /// Submit an option sequence; prints ALLOW or DENY.
    Login {
        #[arg(long, env = "HONEYQ_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        sequence: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Tuples,
    Sweetwords,
    Chaffing,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Uniform,
    Frequency,
}

#[derive(Debug, Subcommand)]
enum Simulation {
    /// Honeywords drawn from other users' passwords.
    Erguler {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        without_replacement: bool,
        /// Draw k - 1 passwords instead of k.
        #[arg(long)]
        honeywords_only: bool,
    },
    /// Attacker success at picking the true item.
    Flatness {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "uniform")]
        strategy: StrategyArg,
        /// The attacker already knows the true password.
        #[arg(long)]
        knows_password: bool,
        /// Corpus for the tuples scheme; a synthetic flat corpus otherwise.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "person")]
        class: ClassArg,
        /// Group table JSON for the tuples scheme; reference table otherwise.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long, default_value = "dextra5")]
        password: String,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// False-alarm rate for an attacker who knows the true sequence.
    Dos {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// How often typos land on a honeyword.
    Typo {
        #[arg(long, default_value = "BDBAAA")]
        act: String,
        #[arg(long, default_value_t = 4)]
        d: u8,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        lambda: usize,
        /// Mistype exactly this many symbols.
        #[arg(long, conflicts_with = "p")]
        errors: Option<usize>,
        /// Mistype each symbol with this probability.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_answer(s: &str) -> Result<AnswerSubmission, String> {
    let (q, a) = s.split_once('=').ok_or("expected <question>=<answer>")?;
    let q = q.trim().trim_start_matches(['Q', 'q']);
    let id: u32 = q.parse().map_err(|_| format!("bad question number {q:?}"))?;
    let question = QuestionId::new(id).map_err(|e| e.to_string())?;
    Ok(AnswerSubmission { question, answer: a.to_string() })
}

fn rng_for(seed: Option<u64>) -> ChaCha8Rng {
    match seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::from_os_rng(),
    }
}

fn read(path: &Path) -> Result<String, DynError> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn print_freq(out: &mut dyn Write, t: &FrequencyTable) -> std::io::Result<()> {
    if let Some(i) = t.index {
        writeln!(out, "index {}  usable {}  skipped {}", i.ordinal_name(), t.usable, t.skipped)?;
    }
    for (c, f) in t.iter() {
        writeln!(out, "{c}  {f:>8.4}")?;
    }
    Ok(())
}

fn print_groups(out: &mut dyn Write, t: &GroupTable) -> std::io::Result<()> {
    writeln!(out, "{:<4} {:<12} {:>9} {:>9}", "g", "letters", "mean", "variance")?;
    for g in &t.groups {
        let letters: String = g.elements.iter().collect();
        writeln!(out, "{:<4} {:<12} {:>9.4} {:>9.4}", g.g_id, letters, g.mean, g.variance)?;
    }
    let outliers: String = t.outliers.iter().collect();
    writeln!(out, "outliers: {}", if outliers.is_empty() { "none" } else { &outliers })
}

fn synthetic_flat_corpus(class: CorpusClass, groups: &GroupTable) -> Result<crate::grouping::Corpus, DynError> {
    // equal counts for every letter within a group
    let mut text = String::new();
    let index = groups.index.unwrap_or(IndexSelector::First);
    for g in &groups.groups {
        let per_letter = (g.mean * 10.0).round().max(1.0) as usize;
        for &c in &g.elements {
            for i in 0..per_letter {
                let word = match index {
                    IndexSelector::Last => format!("XX{i}{c}"),
                    IndexSelector::First => format!("{c}X"),
                    IndexSelector::Second => format!("X{c}X"),
                    IndexSelector::Third => format!("XX{c}X"),
                };
                text.push_str(&word);
                text.push('\n');
            }
        }
    }
    Ok(ingest_corpus(&text, class)?)
}

fn run_simulation(sim: Simulation, json_out: bool, out: &mut dyn Write) -> Result<(), DynError> {
    match sim {
        Simulation::Erguler { n, m, k, trials, seed, without_replacement, honeywords_only } => {
            if m >= n {
                return Err(format!("need m < n, got m = {m}, n = {n}").into());
            }
            let mut population: Vec<String> = (0..n - m).map(|i| format!("user-password-{i}")).collect();
            population.extend(std::iter::repeat_n("planted".to_string(), m));
            let cfg = ErgulerConfig {
                n,
                k,
                sampling: if without_replacement { Sampling::WithoutReplacement } else { Sampling::WithReplacement },
                draws: if honeywords_only { ErgulerDraws::HoneywordsOnly } else { ErgulerDraws::K },
            };
            let r = analysis::simulate_erguler(cfg, &population, "planted", trials, seed)?;
            if json_out {
                writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
            } else {
                writeln!(out, "{}", r.appearance)?;
                writeln!(out, "{:<10} {:.4}", "dup_mean", r.mean_duplicates)?;
                writeln!(out, "{:<10} {:.6}", "crack_prob", r.mean_crack_probability)?;
            }
        }
        Simulation::Flatness { scheme, strategy, knows_password, corpus, class, groups, password, params, trials, seed } => {
            let class = CorpusClass::from(class);
            let scheme = match scheme {
                SchemeArg::Tuples => {
                    let groups = match groups {
                        Some(p) => GroupTable::from_json(&read(&p)?)?,
                        None => match class {
                            CorpusClass::PersonName => GroupTable::population_reference(),
                            CorpusClass::MovieName => GroupTable::movie_reference(),
                        },
                    };
                    let corpus = match corpus {
                        Some(p) => ingest_corpus(&read(&p)?, class)?,
                        None => synthetic_flat_corpus(class, &groups)?,
                    };
                    FlatnessScheme::ProposedTuples { corpus, groups, d: params.d as usize }
                }
                SchemeArg::Sweetwords => FlatnessScheme::ProposedSweetwords { params: params.resolve()? },
                SchemeArg::Chaffing => FlatnessScheme::ChaffingDigits { password, k: params.k },
            };
            let strategy = match strategy {
                StrategyArg::Uniform => Strategy::UniformGuess,
                StrategyArg::Frequency => Strategy::FrequencyWeighted,
            };
            let frequency_priors = match (&scheme, strategy) {
                (FlatnessScheme::ProposedTuples { corpus, groups, .. }, Strategy::FrequencyWeighted) => {
                    Some(letter_frequencies(corpus, groups.index.unwrap_or(IndexSelector::First))?)
                }
                _ => None,
            };
            let attacker = AttackerModel { strategy, frequency_priors, knows_true_password: knows_password };
            let r = analysis::simulate_flatness(&scheme, &attacker, trials, seed)?;
            print_report(out, json_out, &r)?;
        }
        Simulation::Dos { params, trials, seed } => {
            let r = analysis::simulate_dos(params.resolve()?, trials, seed)?;
            print_report(out, json_out, &r)?;
        }
        Simulation::Typo { act, d, k, lambda, errors, p, trials, seed } => {
            let act = OptionSequence::parse(&act, d)?;
            let list = generate_sweetwords(k, lambda, &act, &mut ChaCha8Rng::seed_from_u64(seed), DEFAULT_MAX_ATTEMPTS)?;
            let model = match (errors, p) {
                (_, Some(p)) => TypoModel::PerSymbol { p },
                (Some(count), None) => TypoModel::ExactSymbols { count },
                (None, None) => TypoModel::ExactSymbols { count: lambda },
            };
            let r = analysis::typo_accident_rate(&list, model, trials, seed)?;
            print_report(out, json_out, &r)?;
        }
    }
    Ok(())
}

fn print_report(out: &mut dyn Write, json_out: bool, r: &analysis::SimulationReport) -> Result<(), DynError> {
    if json_out {
        writeln!(out, "{}", serde_json::to_string_pretty(r)?)?;
    } else {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

fn metrics(out: &mut dyn Write, json_out: bool, p: SystemParams, n: u64, m: u64, fraction: f64) -> Result<(), DynError> {
    let (q, d) = (p.q as u32, p.d as u32);
    let dos = analysis::dos_probability(p.k, d, q)?;
    let typo = typo_safety_bound(d, p.lambda as u32);
    let typo_f = *typo.numer() as f64 / *typo.denom() as f64;
    let collision = analysis::erguler_collision_prob(n, m, p.k as u32)?;
    let absence = analysis::popular_absence_prob(fraction, p.k as u32)?;
    let qba = analysis::storage_qba(q, d)?;
    let saved = analysis::storage_saved(q, d)?;
    let feasibility = feasibility_advice(p.lambda as usize, p.q as usize, p.d);
    if json_out {
        let v = json!({
            "params": p,
            "dos_probability": { "numer": dos.numer().to_string(), "denom": dos.denom().to_string(), "value": analysis::ratio_u128_f64(&dos) },
            "typo_bound": { "numer": typo.numer().to_string(), "denom": typo.denom().to_string(), "value": typo_f },
            "typo_safety_percent": (1.0 - typo_f) * 100.0,
            "erguler_collision": { "n": n, "m": m, "value": collision },
            "popular_absence": { "fraction": fraction, "value": absence },
            "storage_qba_units": qba,
            "storage_pqba_units": analysis::storage_pqba(),
            "storage_saved_percent": analysis::ratio_f64(&saved),
            "storage_f2_units": storage_cost_f2(p.k).0,
            "sweetword_acceptance": feasibility,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        return Ok(());
    }
    writeln!(out, "q={} d={} k={} lambda={}", p.q, p.d, p.k, p.lambda)?;
    writeln!(out, "{:<22} {:>14} {:>12.6}", "dos_probability", dos.to_string(), analysis::ratio_u128_f64(&dos))?;
    writeln!(out, "{:<22} {:>14} {:>12.6}", "typo_bound", typo.to_string(), typo_f)?;
    writeln!(out, "{:<22} {:>14} {:>11.2}%", "typo_safety", "", (1.0 - typo_f) * 100.0)?;
    writeln!(out, "{:<22} {:>14} {:>12.6}", "erguler_collision", format!("N={n} m={m}"), collision)?;
    writeln!(out, "{:<22} {:>14} {:>12.6}", "popular_absence", format!("f={fraction}"), absence)?;
    writeln!(out, "{:<22} {:>14} {:>12}", "storage_qba_units", "", qba)?;
    writeln!(out, "{:<22} {:>14} {:>12}", "storage_pqba_units", "", analysis::storage_pqba())?;
    writeln!(out, "{:<22} {:>14} {:>11.3}%", "storage_saved", saved.to_string(), analysis::ratio_f64(&saved))?;
    writeln!(out, "{:<22} {:>14} {:>12}", "storage_f2_units", "", storage_cost_f2(p.k).0)?;
    writeln!(out, "{:<22} {:>14} {:>12.6}", "sweetword_acceptance", "", feasibility)?;
    Ok(())
}

fn wait_for_ctrl_c() -> Result<(), DynError> {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(tokio::signal::ctrl_c())?;
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), DynError> {
    let json_out = cli.json;
    match cli.cmd {
        Command::Freq { corpus, class, index } => {
            let corpus = ingest_corpus(&read(&corpus)?, class.into())?;
            let table = letter_frequencies(&corpus, index.into())?;
            if json_out {
                writeln!(out, "{}", serde_json::to_string_pretty(&table)?)?;
            } else {
                print_freq(out, &table)?;
            }
        }
        Command::Groups { freq, corpus, class, index, params, out: out_path } => {
            let class = CorpusClass::from(class);
            let table = match (freq, corpus) {
                (Some(f), _) => {
                    let mut t: FrequencyTable = serde_json::from_str(&read(&f)?)?;
                    if let Some(i) = index {
                        t.index = Some(i.into());
                    }
                    t
                }
                (None, Some(c)) => {
                    let corpus = ingest_corpus(&read(&c)?, class)?;
                    letter_frequencies(&corpus, index.map_or(IndexSelector::First, Into::into))?
                }
                (None, None) => return Err("one of --freq or --corpus is required".into()),
            };
            let groups = form_groups(params.resolve(class), &table)?;
            if let Some(p) = out_path {
                std::fs::write(&p, groups.to_json()).map_err(|e| format!("{}: {e}", p.display()))?;
            }
            if json_out {
                writeln!(out, "{}", groups.to_json())?;
            } else {
                print_groups(out, &groups)?;
            }
        }
        Command::PickIndex { corpus, class, d, params } => {
            let class = CorpusClass::from(class);
            let corpus = ingest_corpus(&read(&corpus)?, class)?;
            let (best, candidates) = select_index_position(&corpus, d, params.resolve(class))?;
            if json_out {
                let rows: Vec<_> = candidates
                    .iter()
                    .map(|c| {
                        json!({
                            "index": c.index, "viable": c.viable, "skipped": c.skipped,
                            "min_group_size": c.min_group_size, "outliers": c.outliers,
                            "total_variance": c.total_variance, "groups": c.groups,
                        })
                    })
                    .collect();
                writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "selected": best, "candidates": rows }))?)?;
            } else {
                writeln!(out, "{:<8} {:>6} {:>8} {:>9} {:>10}", "index", "viable", "min-grp", "outliers", "variance")?;
                for c in &candidates {
                    writeln!(
                        out,
                        "{:<8} {:>6} {:>8} {:>9} {:>10.4}",
                        c.index.ordinal_name(),
                        c.viable,
                        c.min_group_size,
                        c.outliers,
                        c.total_variance
                    )?;
                }
                writeln!(out, "selected: {}", best.ordinal_name())?;
            }
        }
        Command::Sweetwords { act, d, k, lambda, seed } => {
            let act = OptionSequence::parse(&act, d)?;
            let list = generate_sweetwords(k, lambda, &act, &mut rng_for(seed), DEFAULT_MAX_ATTEMPTS)?;
            let seqs: Vec<&str> = list.sequences.iter().map(OptionSequence::as_str).collect();
            if json_out {
                let v = json!({
                    "sequences": seqs, "true_index": list.true_index, "lambda": lambda,
                    "min_pairwise_distance": list.min_pairwise_distance(),
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
            } else {
                for (i, s) in seqs.iter().enumerate() {
                    let mark = if i == list.true_index { "  <- true" } else { "" };
                    writeln!(out, "{i:>3}  {s}{mark}")?;
                }
                writeln!(out, "min pairwise distance {}", list.min_pairwise_distance().unwrap_or(0))?;
            }
        }
        Command::Metrics { params, n, m, fraction } => metrics(out, json_out, params.resolve()?, n, m, fraction)?,
        Command::Simulate { sim } => run_simulation(sim, json_out, out)?,
        Command::ServeChecker { listen, data_dir } => {
            let checker = match data_dir {
                Some(dir) => Honeychecker::open(dir)?,
                None => Honeychecker::in_memory(),
            };
            let server = CheckerServer::spawn(listen.as_str(), Arc::new(checker))?;
            writeln!(out, "honeychecker listening on {}", server.local_addr())?;
            out.flush()?;
            wait_for_ctrl_c()?;
            server.shutdown();
        }
        Command::ServeAuth { config, listen, checker, data_dir, policy, seed } => {
            let mut cfg = match config {
                Some(p) => AuthConfig::load(p)?,
                None => AuthConfig::default(),
            };
            cfg.apply_env();
            if let Some(v) = listen {
                cfg.listen = v;
            }
            if let Some(v) = checker {
                cfg.checker = v;
            }
            if data_dir.is_some() {
                cfg.data_dir = data_dir;
            }
            if let Some(v) = policy {
                cfg.policy = v;
            }
            if seed.is_some() {
                cfg.seed = seed;
            }
            let svc = Arc::new(cfg.build_service()?);
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&cfg.listen).await?;
                writeln!(out, "auth server listening on {}", listener.local_addr()?)?;
                out.flush()?;
                crate::authservice::serve(listener, svc, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
            })?;
        }
        Command::Register { server, user, answers } => {
            let summary = AuthClient::new(server)?.register(&user, &answers)?;
            if json_out {
                writeln!(out, "{}", serde_json::to_string(&summary)?)?;
            } else {
                let qs: Vec<String> = summary.questions.iter().map(ToString::to_string).collect();
                writeln!(out, "registered {} with {}", summary.username, qs.join(" "))?;
            }
        }
        Command::Challenge { server, user } => {
            let ch = AuthClient::new(server)?.challenge(&user)?;
            if json_out {
                writeln!(out, "{}", serde_json::to_string_pretty(&ch)?)?;
            } else {
                for item in &ch.items {
                    writeln!(out, "{} {}", item.question, item.text)?;
                    if let Some(h) = &item.hint {
                        writeln!(out, "   {h}")?;
                    }
                    let opts: Vec<String> = item.options.iter().map(|o| format!("{}) {}", o.label, o.value)).collect();
                    writeln!(out, "   {}", opts.join("   "))?;
                }
            }
        }
        Command::Login { server, user, sequence } => {
            let outcome = AuthClient::new(server)?.login(&user, &sequence)?;
            let text = serde_json::to_value(outcome)?;
            if json_out {
                writeln!(out, "{}", json!({ "result": text }))?;
            } else {
                writeln!(out, "{}", text.as_str().unwrap_or("DENY"))?;
            }
        }
    }
    Ok(())
}

/// Runs with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Runs against stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
