mod common;

use std::io::{BufRead, BufReader};
use std::process::{Child, Command, Output, Stdio};

use honeyq::authservice::LoginChallenge;

const BIN: &str = env!("CARGO_BIN_EXE_honeyq");
const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn honeyq(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

/// Starts a serve verb and waits for its "listening on <addr>" line.
fn serve(args: &[&str]) -> (Server, String) {
    let mut child = Command::new(BIN).args(args).stdout(Stdio::piped()).stderr(Stdio::null()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().rsplit(' ').next().unwrap().to_string();
    (Server(child), addr)
}

#[test]
fn usage_exit_codes() {
    assert_eq!(honeyq(&[]).status.code(), Some(2));
    assert_eq!(honeyq(&["simulate"]).status.code(), Some(2));
    assert_eq!(honeyq(&["metrics", "--q", "x"]).status.code(), Some(2));
    assert_eq!(honeyq(&["--version"]).status.code(), Some(0));
    let o = honeyq(&["sweetwords", "--act", "AB", "--k", "50", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn groups_from_means_files() {
    let o = honeyq(&[
        "groups", "--alpha", "45", "--beta", "85", "--eps-p", "0.1", "--eps-b", "0.6",
        "--freq", &format!("{DATA}/population-means.json"), "--json",
    ]);
    assert!(o.status.success());
    let t: honeyq::grouping::GroupTable = serde_json::from_slice(&o.stdout).unwrap();
    let sets: Vec<String> = t.groups.iter().map(|g| g.elements.iter().collect()).collect();
    assert_eq!(sets, ["AMPRS", "BDGJKNV", "CHILT", "EFOQUWXYZ"]);

    let o = honeyq(&["groups", "--class", "movie", "--freq", &format!("{DATA}/movie-means.json")]);
    let text = stdout(&o);
    for set in ["AENRS", "DILMOTY", "GHKPU", "BCFJQVWXZ"] {
        assert!(text.contains(set), "{text}");
    }
    assert!(text.contains("outliers: none"));
}

#[test]
fn corpus_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("names.txt");
    let names: String = ["Asha", "Amit", "Mira", "Mohan", "Priya", "Pooja", "Ravi", "Rohit", "Sita", "Suresh", "Bina", "Deepak"]
        .iter()
        .map(|n| format!("{n}\n"))
        .collect();
    std::fs::write(&corpus, names).unwrap();
    let c = corpus.to_str().unwrap();
    let o = honeyq(&["freq", "--corpus", c, "--json"]);
    assert!(o.status.success());
    let t: honeyq::grouping::FrequencyTable = serde_json::from_slice(&o.stdout).unwrap();
    assert!((t.total() - 100.0).abs() < 1e-9);
    assert_eq!(t.usable, 12);
    let o = honeyq(&["pick-index", "--corpus", c]);
    assert!(stdout(&o).contains("selected:"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn metrics_match_closed_forms() {
    let o = honeyq(&["metrics", "--q", "6", "--d", "4", "--k", "20", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dos_probability"]["numer"], "19");
    assert_eq!(v["dos_probability"]["denom"], "4095");
    assert_eq!(v["storage_saved_percent"], 90.625);
    assert_eq!(v["storage_f2_units"], 21);
    let text = stdout(&honeyq(&["metrics", "--q", "8"]));
    assert!(text.contains("0.000290") && text.contains("92.857%") && text.contains("1/243"));
}

#[test]
fn seeded_simulations_repeat() {
    let args = ["simulate", "flatness", "--scheme", "sweetwords", "--trials", "3000", "--seed", "5", "--json"];
    let a = honeyq(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, honeyq(&args).stdout);
    let r: honeyq::analysis::SimulationReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!((r.trials, r.seed), (3000, 5));
}

#[test]
fn services_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let checker_dir = dir.path().join("checker");
    let vault_dir = dir.path().join("vault");
    let (_checker, checker_addr) = serve(&["serve-checker", "--listen", "127.0.0.1:0", "--data-dir", checker_dir.to_str().unwrap()]);
    let (_auth, auth_addr) = serve(&[
        "serve-auth", "--listen", "127.0.0.1:0", "--checker", &checker_addr,
        "--data-dir", vault_dir.to_str().unwrap(), "--policy", "log-only", "--seed", "4",
    ]);
    let url = format!("http://{auth_addr}");
    let answers = ["--answer", "2=Sholay", "--answer", "1=Rahul", "--answer", "5=Evening",
        "--answer", "3=Dr. Mehta", "--answer", "6=18", "--answer", "10=Apr-Jun"];
    let mut reg = vec!["register", "--server", &url, "--user", "alex"];
    reg.extend(answers);
    let o = honeyq(&reg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("registered alex"));
    assert_eq!(honeyq(&reg).status.code(), Some(1));

    let o = honeyq(&["challenge", "--server", &url, "--user", "alex", "--json"]);
    let ch: LoginChallenge = serde_json::from_slice(&o.stdout).unwrap();
    let seq = common::sequence_for(&ch, &common::alex());
    let o = honeyq(&["login", "--server", &url, "--user", "alex", "--sequence", &seq]);
    assert_eq!(stdout(&o).trim(), "ALLOW");
    let o = honeyq(&["login", "--server", &url, "--user", "alex", "--sequence", "ZZZ"]);
    assert_eq!(stdout(&o).trim(), "DENY");
}
