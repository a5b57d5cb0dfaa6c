//! The two password files.
//!
//! F1 holds what is needed to render a login page: the username, the answered
//! question numbers and the frozen alternative tuples. F2 holds the k salted
//! digests of the sweetword sequences. Neither file records which sweetword
//! is real; that index lives only on the honeychecker.
//!
//! Both files are append-only JSON lines behind a version header:
//!
//! ```text
//! #honeyq-f1 v1
//! {"username":"alex","q":6,"d":4,"entries":[{"question":2,"alternatives":["A","E","R","N"]}, ...]}
//! ```

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha512};
use thiserror::Error;

use crate::model::{OptionSequence, Tuple};
use crate::sweetwords::SweetwordList;

pub const F1_HEADER: &str = "#honeyq-f1 v1";
pub const F2_HEADER: &str = "#honeyq-f2 v1";
pub const SALT_BYTES: usize = 16;

#[derive(Debug, Error)]
pub enum VaultError {
    #[error("user {0:?} already exists")]
    DuplicateUser(String),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("vault i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One F1 row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecordF1 {
    pub username: String,
    pub q: u8,
    pub d: u8,
    pub entries: Vec<Tuple>,
}

impl UserRecordF1 {
    /// `Q2, Q1, Q5, ...`
    pub fn question_numbers(&self) -> String {
        self.entries.iter().map(|t| t.question.to_string()).collect::<Vec<_>>().join(", ")
    }

    /// All tuples as one string, `<A, E, R, N> <R, P, M, A> ...`.
    pub fn tuple_string(&self) -> String {
        self.entries.iter().map(Tuple::render).collect::<Vec<_>>().join(" ")
    }

    fn validate(&self) -> Result<(), VaultError> {
        validate_username(&self.username)?;
        if self.entries.len() != self.q as usize {
            return Err(VaultError::InvalidRecord(format!(
                "{} tuples for q = {}",
                self.entries.len(),
                self.q
            )));
        }
        let mut ids: Vec<_> = self.entries.iter().map(|t| t.question).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.entries.len() {
            return Err(VaultError::InvalidRecord("question ids repeat".into()));
        }
        if self.entries.iter().any(|t| t.alternatives.len() != self.d as usize) {
            return Err(VaultError::InvalidRecord(format!("tuple length differs from d = {}", self.d)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigestAlgorithm {
    #[default]
    Sha256,
    Sha512,
}

impl DigestAlgorithm {
    pub fn digest(self, salt: &[u8], sequence: &str) -> String {
        match self {
            DigestAlgorithm::Sha256 => {
                let mut h = Sha256::new();
                h.update(salt);
                h.update(sequence.as_bytes());
                hex::encode(h.finalize())
            }
            DigestAlgorithm::Sha512 => {
                let mut h = Sha512::new();
                h.update(salt);
                h.update(sequence.as_bytes());
                hex::encode(h.finalize())
            }
        }
    }
}

/// One F2 row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaultEntryF2 {
    pub username: String,
    pub algorithm: DigestAlgorithm,
    /// Hex-encoded per-user salt.
    pub salt: String,
    pub hashes: Vec<String>,
}

impl VaultEntryF2 {
    /// Position of `sequence` among the stored digests.
    pub fn position_of(&self, sequence: &OptionSequence) -> Option<usize> {
        let salt = hex::decode(&self.salt).ok()?;
        let digest = self.algorithm.digest(&salt, sequence.as_str());
        self.hashes.iter().position(|h| *h == digest)
    }
}

/// Storage measured in units of one stored string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StorageUnits(pub u64);

/// F1 keeps the username, one question-number string and one tuple string.
pub fn storage_cost_f1(_q: u8, _d: u8) -> StorageUnits {
    StorageUnits(3)
}

/// F2 keeps the username plus k digests.
pub fn storage_cost_f2(k: usize) -> StorageUnits {
    StorageUnits(k as u64 + 1)
}

fn validate_username(u: &str) -> Result<(), VaultError> {
    if u.is_empty() || u.len() > 256 || u.chars().any(char::is_control) {
        return Err(VaultError::InvalidRecord(format!("bad username {u:?}")));
    }
    Ok(())
}

trait Keyed {
    fn key(&self) -> &str;
}

impl Keyed for UserRecordF1 {
    fn key(&self) -> &str {
        &self.username
    }
}

impl Keyed for VaultEntryF2 {
    fn key(&self) -> &str {
        &self.username
    }
}

struct Inner<T> {
    file: Option<File>,
    records: HashMap<String, T>,
    order: Vec<String>,
}

/// Append-only JSON-lines store keyed by username.
struct RecordFile<T> {
    path: Option<PathBuf>,
    inner: Mutex<Inner<T>>,
}

impl<T: Keyed + Clone + Serialize + DeserializeOwned> RecordFile<T> {
    fn memory() -> Self {
        RecordFile { path: None, inner: Mutex::new(Inner { file: None, records: HashMap::new(), order: Vec::new() }) }
    }

    fn open(path: &Path, header: &str) -> Result<Self, VaultError> {
        let corrupt = |reason: String| VaultError::Corrupt { path: path.to_path_buf(), reason };
        let mut records = HashMap::new();
        let mut order = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            let mut lines = reader.lines();
            match lines.next().transpose()? {
                Some(h) if h == header => {}
                None => return Err(corrupt("empty file, missing header".into())),
                Some(_) => return Err(corrupt(format!("expected header {header:?}"))),
            }
            for (n, line) in lines.enumerate() {
                let line = line?;
                if line.is_empty() {
                    continue;
                }
                let rec: T = serde_json::from_str(&line).map_err(|e| corrupt(format!("line {}: {e}", n + 2)))?;
                let key = rec.key().to_string();
                if records.insert(key.clone(), rec).is_some() {
                    return Err(corrupt(format!("line {}: duplicate user {key:?}", n + 2)));
                }
                order.push(key);
            }
        } else {
            let mut f = File::create(path)?;
            writeln!(f, "{header}")?;
            f.sync_all()?;
        }
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(RecordFile {
            path: Some(path.to_path_buf()),
            inner: Mutex::new(Inner { file: Some(file), records, order }),
        })
    }

    fn insert(&self, rec: T) -> Result<(), VaultError> {
        let mut inner = self.inner.lock().expect("vault lock");
        let key = rec.key().to_string();
        if inner.records.contains_key(&key) {
            return Err(VaultError::DuplicateUser(key));
        }
        if let Some(f) = inner.file.as_mut() {
            let mut line = serde_json::to_string(&rec).map_err(|e| VaultError::InvalidRecord(e.to_string()))?;
            line.push('\n');
            // one write per record so readers of the file never see half a line
            f.write_all(line.as_bytes())?;
            f.sync_data()?;
        }
        inner.order.push(key.clone());
        inner.records.insert(key, rec);
        Ok(())
    }

    fn get(&self, key: &str) -> Option<T> {
        self.inner.lock().expect("vault lock").records.get(key).cloned()
    }

    fn contains(&self, key: &str) -> bool {
        self.inner.lock().expect("vault lock").records.contains_key(key)
    }

    fn all(&self) -> Vec<T> {
        let inner = self.inner.lock().expect("vault lock");
        inner.order.iter().map(|k| inner.records[k].clone()).collect()
    }
}

/// F1 and F2 together.
pub struct Vault {
    f1: RecordFile<UserRecordF1>,
    f2: RecordFile<VaultEntryF2>,
    algorithm: DigestAlgorithm,
}

impl Vault {
    pub fn in_memory() -> Self {
        Vault { f1: RecordFile::memory(), f2: RecordFile::memory(), algorithm: DigestAlgorithm::default() }
    }

    /// Opens (or creates) `f1.jsonl` and `f2.jsonl` under `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, VaultError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        Ok(Vault {
            f1: RecordFile::open(&dir.join("f1.jsonl"), F1_HEADER)?,
            f2: RecordFile::open(&dir.join("f2.jsonl"), F2_HEADER)?,
            algorithm: DigestAlgorithm::default(),
        })
    }

    pub fn with_algorithm(mut self, algorithm: DigestAlgorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn f1_path(&self) -> Option<&Path> {
        self.f1.path.as_deref()
    }

    pub fn f2_path(&self) -> Option<&Path> {
        self.f2.path.as_deref()
    }

    pub fn write_f1(&self, record: UserRecordF1) -> Result<(), VaultError> {
        record.validate()?;
        self.f1.insert(record)
    }

    pub fn read_f1(&self, username: &str) -> Result<UserRecordF1, VaultError> {
        self.f1.get(username).ok_or_else(|| VaultError::UnknownUser(username.to_string()))
    }

    pub fn has_user(&self, username: &str) -> bool {
        self.f1.contains(username) || self.f2.contains(username)
    }

    /// Stores salted digests of the list in its current order. The true
    /// index is not recorded here.
    pub fn write_f2<R: Rng + ?Sized>(
        &self,
        username: &str,
        list: &SweetwordList,
        rng: &mut R,
    ) -> Result<(), VaultError> {
        validate_username(username)?;
        if list.sequences.is_empty() {
            return Err(VaultError::InvalidRecord("empty sweetword list".into()));
        }
        let mut salt = [0u8; SALT_BYTES];
        rng.fill(&mut salt[..]);
        let hashes: Vec<String> =
            list.sequences.iter().map(|s| self.algorithm.digest(&salt, s.as_str())).collect();
        let mut uniq = hashes.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != hashes.len() {
            return Err(VaultError::InvalidRecord("sweetwords repeat".into()));
        }
        self.f2.insert(VaultEntryF2 {
            username: username.to_string(),
            algorithm: self.algorithm,
            salt: hex::encode(salt),
            hashes,
        })
    }

    pub fn read_f2(&self, username: &str) -> Result<VaultEntryF2, VaultError> {
        self.f2.get(username).ok_or_else(|| VaultError::UnknownUser(username.to_string()))
    }

    /// 0-based position of the submission among the stored sweetwords.
    pub fn verify_submission(&self, username: &str, sequence: &OptionSequence) -> Result<Option<usize>, VaultError> {
        Ok(self.read_f2(username)?.position_of(sequence))
    }

    pub fn usernames(&self) -> Vec<String> {
        self.f1.all().into_iter().map(|r| r.username).collect()
    }

    /// F1 rows as JSON lines.
    pub fn export_f1_jsonl(&self) -> String {
        export(&self.f1.all())
    }

    /// F2 rows as JSON lines.
    pub fn export_f2_jsonl(&self) -> String {
        export(&self.f2.all())
    }
}

fn export<T: Serialize>(rows: &[T]) -> String {
    rows.iter().map(|r| serde_json::to_string(r).expect("row serializes") + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuestionId;
    use crate::sweetwords::{generate_sweetwords, DEFAULT_MAX_ATTEMPTS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tuple(q: u32, alts: &[&str]) -> Tuple {
        Tuple { question: QuestionId::new(q).unwrap(), alternatives: alts.iter().map(|s| s.to_string()).collect() }
    }

    pub(crate) fn alex() -> UserRecordF1 {
        UserRecordF1 {
            username: "alex".into(),
            q: 6,
            d: 4,
            entries: vec![
                tuple(2, &["A", "E", "R", "N"]),
                tuple(1, &["R", "P", "M", "A"]),
                tuple(5, &["Morning", "Afternoon", "Evening", "Night"]),
                tuple(3, &["C", "H", "L", "T"]),
                tuple(6, &["18", "19", "20", "21"]),
                tuple(10, &["Jan-Mar", "Apr-Jun", "Jul-Sep", "Oct-Dec"]),
            ],
        }
    }

    #[test]
    fn f1_roundtrip_and_errors() {
        let v = Vault::in_memory();
        v.write_f1(alex()).unwrap();
        assert_eq!(v.read_f1("alex").unwrap(), alex());
        assert!(matches!(v.write_f1(alex()), Err(VaultError::DuplicateUser(_))));
        assert!(matches!(v.read_f1("bob"), Err(VaultError::UnknownUser(_))));
        assert_eq!(alex().question_numbers(), "Q2, Q1, Q5, Q3, Q6, Q10");
        assert!(alex().tuple_string().starts_with("<A, E, R, N> <R, P, M, A> <Morning"));
    }

    #[test]
    fn f1_rejects_malformed_records() {
        let v = Vault::in_memory();
        let mut r = alex();
        r.entries.pop();
        assert!(matches!(v.write_f1(r), Err(VaultError::InvalidRecord(_))));
        let mut r = alex();
        r.entries[1].question = QuestionId::new(2).unwrap();
        assert!(matches!(v.write_f1(r), Err(VaultError::InvalidRecord(_))));
        let mut r = alex();
        r.username = String::new();
        assert!(matches!(v.write_f1(r), Err(VaultError::InvalidRecord(_))));
    }

    #[test]
    fn f2_verify_positions() {
        let v = Vault::in_memory();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let act = OptionSequence::parse("BDBAAA", 4).unwrap();
        let list = generate_sweetwords(6, 3, &act, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
        v.write_f2("alex", &list, &mut rng).unwrap();
        let entry = v.read_f2("alex").unwrap();
        assert_eq!(entry.hashes.len(), 6);
        for (i, s) in list.sequences.iter().enumerate() {
            assert_eq!(v.verify_submission("alex", s).unwrap(), Some(i));
        }
        assert_eq!(v.verify_submission("alex", &act).unwrap(), Some(list.true_index));
        let garbage = OptionSequence::parse("DDDDDD", 4).unwrap();
        if !list.sequences.contains(&garbage) {
            assert_eq!(v.verify_submission("alex", &garbage).unwrap(), None);
        }
        assert!(matches!(v.verify_submission("zed", &act), Err(VaultError::UnknownUser(_))));
        assert!(matches!(v.write_f2("alex", &list, &mut rng), Err(VaultError::DuplicateUser(_))));
    }

    #[test]
    fn sha512_digests() {
        let v = Vault::in_memory().with_algorithm(DigestAlgorithm::Sha512);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let act = OptionSequence::parse("ABCDAB", 4).unwrap();
        let list = generate_sweetwords(4, 3, &act, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
        v.write_f2("u", &list, &mut rng).unwrap();
        let e = v.read_f2("u").unwrap();
        assert_eq!(e.hashes[0].len(), 128);
        assert_eq!(e.position_of(&act), Some(list.true_index));
    }

    #[test]
    fn storage_costs() {
        assert_eq!(storage_cost_f1(6, 4), StorageUnits(3));
        assert_eq!(storage_cost_f1(8, 4), StorageUnits(3));
        assert_eq!(storage_cost_f2(20), StorageUnits(21));
        assert_eq!(storage_cost_f2(0), StorageUnits(1));
    }

    #[test]
    fn files_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let act = OptionSequence::parse("BDBAAA", 4).unwrap();
        let list = generate_sweetwords(6, 3, &act, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
        {
            let v = Vault::open(dir.path()).unwrap();
            v.write_f1(alex()).unwrap();
            v.write_f2("alex", &list, &mut rng).unwrap();
        }
        let before = std::fs::read(dir.path().join("f2.jsonl")).unwrap();
        let v = Vault::open(dir.path()).unwrap();
        assert_eq!(v.read_f1("alex").unwrap(), alex());
        assert_eq!(v.verify_submission("alex", &act).unwrap(), Some(list.true_index));
        assert!(matches!(v.write_f1(alex()), Err(VaultError::DuplicateUser(_))));
        assert_eq!(std::fs::read(dir.path().join("f2.jsonl")).unwrap(), before);
        let text = String::from_utf8(before).unwrap();
        assert!(text.starts_with(F2_HEADER));
        for s in &list.sequences {
            assert!(!text.contains(s.as_str()));
        }
    }

    #[test]
    fn corrupt_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f1.jsonl"), "not a header\n").unwrap();
        assert!(matches!(Vault::open(dir.path()), Err(VaultError::Corrupt { .. })));
        std::fs::write(dir.path().join("f1.jsonl"), format!("{F1_HEADER}\n{{broken\n")).unwrap();
        assert!(matches!(Vault::open(dir.path()), Err(VaultError::Corrupt { .. })));
    }
}
