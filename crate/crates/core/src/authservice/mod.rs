//! The user-facing auth server: registration, challenge rendering and login.
//!
//! Registration turns answers into tuples, derives the true option sequence,
//! generates the sweetword list, hands the true index to the honeychecker and
//! stores F1/F2. Nothing that identifies the true sequence is kept here.
//!
//! Login hashes the submitted sequence against F2. A miss is a plain DENY.
//! A hit is checked with the honeychecker: MATCH allows, ALARM applies the
//! alarm policy and answers with the same DENY a miss gets.

mod client;
mod config;
mod http;

pub use client::{AuthClient, ClientError};
pub use config::{AuthConfig, ConfigError, RateLimit};
pub use http::{router, serve, HttpServer};

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alternatives::{build_tuple, AlternativesError, AnswerSubmission, LetterGroups};
use crate::honeychecker::{CheckerError, IndexService, Verdict};
use crate::model::{
    option_letter, question, ModelError, OptionSequence, QuestionId, QuestionKind, SystemParams,
};
use crate::sweetwords::{generate_sweetwords, SweetwordError, DEFAULT_MAX_ATTEMPTS};
use crate::vault::{UserRecordF1, Vault, VaultError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlarmPolicy {
    LogOnly,
    /// Lock the account whose honeyword was submitted.
    #[default]
    LockAccount,
    /// Lock every account.
    LockAll,
}

impl std::str::FromStr for AlarmPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "logonly" => Ok(AlarmPolicy::LogOnly),
            "lockaccount" => Ok(AlarmPolicy::LockAccount),
            "lockall" => Ok(AlarmPolicy::LockAll),
            _ => Err(format!("unknown alarm policy {s:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("user {0:?} already exists")]
    DuplicateUser(String),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("expected {expected} answers, got {got}")]
    WrongAnswerCount { expected: usize, got: usize },
    #[error("question {0} answered more than once")]
    DuplicateQuestion(QuestionId),
    #[error("question {0} is not offered with the current parameters")]
    QuestionUnavailable(QuestionId),
    #[error("{question}: {source}")]
    Question {
        question: QuestionId,
        #[source]
        source: AlternativesError,
    },
    #[error("invalid username {0:?}")]
    BadUsername(String),
    #[error(transparent)]
    Params(#[from] ModelError),
    #[error(transparent)]
    Sweetwords(#[from] SweetwordError),
    #[error("honeychecker unavailable: {0}")]
    CheckerUnavailable(#[source] CheckerError),
    #[error(transparent)]
    Vault(VaultError),
}

impl From<VaultError> for AuthError {
    fn from(e: VaultError) -> Self {
        match e {
            VaultError::DuplicateUser(u) => AuthError::DuplicateUser(u),
            VaultError::UnknownUser(u) => AuthError::UnknownUser(u),
            other => AuthError::Vault(other),
        }
    }
}

/// What the client is told.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LoginOutcome {
    Allow,
    Deny,
    RateLimited,
}

/// What actually happened; only [`Decision::outcome`] leaves the server.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allowed,
    /// Not one of the stored sweetwords.
    WrongSequence,
    /// A honeyword: the alarm policy has been applied.
    HoneywordAlarm { position: usize },
    Locked,
    RateLimited,
    /// Honeychecker failed or did not know the user; fail closed.
    CheckerFailure,
}

impl Decision {
    pub fn outcome(self) -> LoginOutcome {
        match self {
            Decision::Allowed => LoginOutcome::Allow,
            Decision::RateLimited => LoginOutcome::RateLimited,
            _ => LoginOutcome::Deny,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeOption {
    pub label: char,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeItem {
    pub question: QuestionId,
    pub text: String,
    /// Extra instruction, e.g. which letter of the answer to recognize.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
    pub options: Vec<ChallengeOption>,
}

/// The login page for one user, rendered from F1 alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginChallenge {
    pub username: String,
    pub items: Vec<ChallengeItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmKind {
    Honeyword,
    CheckerUnavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminAlarm {
    pub time_ms: u64,
    pub user: String,
    pub kind: AlarmKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationSummary {
    pub username: String,
    pub questions: Vec<QuestionId>,
}

struct Window {
    start: Instant,
    attempts: u32,
}

pub struct AuthService {
    params: SystemParams,
    groups: LetterGroups,
    vault: Vault,
    checker: Arc<dyn IndexService>,
    policy: AlarmPolicy,
    rate_limit: RateLimit,
    max_attempts: usize,
    rng: Mutex<ChaCha20Rng>,
    user_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    locked: Mutex<HashSet<String>>,
    lock_all: AtomicBool,
    alarms: Mutex<Vec<AdminAlarm>>,
    windows: Mutex<HashMap<String, Window>>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl AuthService {
    pub fn new(
        params: SystemParams,
        groups: LetterGroups,
        vault: Vault,
        checker: Arc<dyn IndexService>,
    ) -> Result<Self, AuthError> {
        params.validate()?;
        Ok(AuthService {
            params,
            groups,
            vault,
            checker,
            policy: AlarmPolicy::default(),
            rate_limit: RateLimit::default(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            rng: Mutex::new(ChaCha20Rng::from_os_rng()),
            user_locks: Mutex::new(HashMap::new()),
            locked: Mutex::new(HashSet::new()),
            lock_all: AtomicBool::new(false),
            alarms: Mutex::new(Vec::new()),
            windows: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_policy(mut self, policy: AlarmPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_rate_limit(mut self, rate_limit: RateLimit) -> Self {
        self.rate_limit = rate_limit;
        self
    }

    /// Fixes the registration rng, for reproducible runs.
    pub fn with_seed(self, seed: u64) -> Self {
        *self.rng.lock().expect("rng lock") = ChaCha20Rng::seed_from_u64(seed);
        self
    }

    pub fn params(&self) -> SystemParams {
        self.params
    }

    pub fn policy(&self) -> AlarmPolicy {
        self.policy
    }

    pub fn vault(&self) -> &Vault {
        &self.vault
    }

    fn user_lock(&self, username: &str) -> Arc<Mutex<()>> {
        let mut locks = self.user_locks.lock().expect("user locks");
        Arc::clone(locks.entry(username.to_string()).or_default())
    }

    pub fn register(&self, username: &str, answers: &[AnswerSubmission]) -> Result<RegistrationSummary, AuthError> {
        if username.is_empty() || username.len() > 256 || username.chars().any(char::is_control) {
            return Err(AuthError::BadUsername(username.to_string()));
        }
        let q = self.params.q as usize;
        if answers.len() != q {
            return Err(AuthError::WrongAnswerCount { expected: q, got: answers.len() });
        }
        let mut seen = HashSet::new();
        for a in answers {
            if !seen.insert(a.question) {
                return Err(AuthError::DuplicateQuestion(a.question));
            }
            if !self.params.question_available(a.question) {
                return Err(AuthError::QuestionUnavailable(a.question));
            }
        }

        let lock = self.user_lock(username);
        let _guard = lock.lock().expect("user lock");
        if self.vault.has_user(username) {
            return Err(AuthError::DuplicateUser(username.to_string()));
        }

        let mut rng = self.rng.lock().expect("rng lock");
        let d = self.params.d as usize;
        let mut entries = Vec::with_capacity(q);
        let mut positions = Vec::with_capacity(q);
        for a in answers {
            let built = build_tuple(a, &self.groups, d, &mut *rng)
                .map_err(|source| AuthError::Question { question: a.question, source })?;
            positions.push(built.correct_position);
            entries.push(built.tuple);
        }
        let act_ops = OptionSequence::from_positions(&positions, self.params.d)?;
        let list = generate_sweetwords(self.params.k, self.params.lambda as usize, &act_ops, &mut *rng, self.max_attempts)?;

        // the index goes out first: a stale entry is harmless, a missing one locks the user out
        self.checker.set(username, list.true_index).map_err(AuthError::CheckerUnavailable)?;
        self.vault.write_f1(UserRecordF1 {
            username: username.to_string(),
            q: self.params.q,
            d: self.params.d,
            entries,
        })?;
        self.vault.write_f2(username, &list, &mut *rng)?;
        Ok(RegistrationSummary { username: username.to_string(), questions: answers.iter().map(|a| a.question).collect() })
    }

    pub fn challenge(&self, username: &str) -> Result<LoginChallenge, AuthError> {
        let record = self.vault.read_f1(username)?;
        let items = record
            .entries
            .iter()
            .map(|t| {
                let entry = question(t.question);
                let hint = match &entry.kind {
                    QuestionKind::BQuestion { corpus } => self
                        .groups
                        .for_class(*corpus)
                        .index
                        .map(|i| format!("Recognize the {} letter.", i.ordinal_name())),
                    _ => None,
                };
                ChallengeItem {
                    question: t.question,
                    text: entry.text.clone(),
                    hint,
                    options: t
                        .alternatives
                        .iter()
                        .enumerate()
                        .map(|(i, v)| ChallengeOption { label: option_letter(i), value: v.clone() })
                        .collect(),
                }
            })
            .collect();
        Ok(LoginChallenge { username: record.username, items })
    }

    fn rate_limited(&self, username: &str) -> bool {
        let RateLimit { max_attempts, window } = self.rate_limit;
        if max_attempts == 0 {
            return false;
        }
        let mut windows = self.windows.lock().expect("rate windows");
        let now = Instant::now();
        let w = windows.entry(username.to_string()).or_insert(Window { start: now, attempts: 0 });
        if now.duration_since(w.start) >= window {
            *w = Window { start: now, attempts: 0 };
        }
        w.attempts += 1;
        w.attempts > max_attempts
    }

    fn is_locked(&self, username: &str) -> bool {
        self.lock_all.load(Ordering::SeqCst) || self.locked.lock().expect("locked set").contains(username)
    }

    fn raise(&self, username: &str, kind: AlarmKind) {
        self.alarms.lock().expect("alarms").push(AdminAlarm { time_ms: now_ms(), user: username.to_string(), kind });
    }

    pub fn login(&self, username: &str, submitted: &str) -> Result<Decision, AuthError> {
        let lock = self.user_lock(username);
        let _guard = lock.lock().expect("user lock");
        let record = self.vault.read_f1(username)?;
        if self.is_locked(username) {
            return Ok(Decision::Locked);
        }
        if self.rate_limited(username) {
            return Ok(Decision::RateLimited);
        }
        let seq = match OptionSequence::parse(submitted, record.d) {
            Ok(s) if s.len() == record.q as usize => s,
            _ => return Ok(Decision::WrongSequence),
        };
        let Some(position) = self.vault.verify_submission(username, &seq)? else {
            return Ok(Decision::WrongSequence);
        };
        match self.checker.check(username, position) {
            Ok(Verdict::Match) => Ok(Decision::Allowed),
            Ok(Verdict::Alarm) => {
                log::warn!("honeyword submitted for {username:?}; applying {:?}", self.policy);
                self.raise(username, AlarmKind::Honeyword);
                match self.policy {
                    AlarmPolicy::LogOnly => {}
                    AlarmPolicy::LockAccount => {
                        self.locked.lock().expect("locked set").insert(username.to_string());
                    }
                    AlarmPolicy::LockAll => self.lock_all.store(true, Ordering::SeqCst),
                }
                Ok(Decision::HoneywordAlarm { position })
            }
            Ok(Verdict::UnknownUser) => {
                log::error!("honeychecker has no index for registered user {username:?}");
                self.raise(username, AlarmKind::CheckerUnavailable);
                Ok(Decision::CheckerFailure)
            }
            Err(e) => {
                log::error!("honeychecker unreachable during login for {username:?}: {e}");
                self.raise(username, AlarmKind::CheckerUnavailable);
                Ok(Decision::CheckerFailure)
            }
        }
    }

    pub fn alarms(&self) -> Vec<AdminAlarm> {
        self.alarms.lock().expect("alarms").clone()
    }

    /// Clears account locks, e.g. after an operator has investigated.
    pub fn unlock_all(&self) {
        self.lock_all.store(false, Ordering::SeqCst);
        self.locked.lock().expect("locked set").clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::honeychecker::Honeychecker;

    pub(crate) fn answers(pairs: &[(u32, &str)]) -> Vec<AnswerSubmission> {
        pairs
            .iter()
            .map(|&(q, a)| AnswerSubmission { question: QuestionId::new(q).unwrap(), answer: a.to_string() })
            .collect()
    }

    fn alex_answers() -> Vec<AnswerSubmission> {
        answers(&[(2, "Sholay"), (1, "Rahul"), (5, "Evening"), (3, "Dr. Mehta"), (6, "18"), (10, "Apr-Jun")])
    }

    fn service(policy: AlarmPolicy) -> (AuthService, Arc<Honeychecker>) {
        let hc = Arc::new(Honeychecker::in_memory());
        let svc = AuthService::new(SystemParams::default(), LetterGroups::default(), Vault::in_memory(), hc.clone())
            .unwrap()
            .with_policy(policy)
            .with_rate_limit(RateLimit::unlimited())
            .with_seed(42);
        (svc, hc)
    }

    /// The sequence a user who knows the answers would pick.
    fn true_sequence(ch: &LoginChallenge, answers: &[AnswerSubmission]) -> String {
        ch.items
            .iter()
            .zip(answers)
            .map(|(item, a)| {
                let want = match &question(a.question).kind {
                    QuestionKind::BQuestion { corpus } => {
                        let idx = LetterGroups::default().for_class(*corpus).index.unwrap();
                        crate::alternatives::extract_letter(&a.answer, idx).unwrap().to_string()
                    }
                    _ => a.answer.clone(),
                };
                item.options.iter().find(|o| o.value.eq_ignore_ascii_case(&want)).unwrap().label
            })
            .collect()
    }

    #[test]
    fn register_and_login() {
        let (svc, hc) = service(AlarmPolicy::LockAccount);
        let s = svc.register("alex", &alex_answers()).unwrap();
        assert_eq!(s.questions.len(), 6);
        assert_eq!(svc.vault().read_f1("alex").unwrap().entries.len(), 6);
        assert_eq!(svc.vault().read_f2("alex").unwrap().hashes.len(), 20);
        assert_eq!(hc.user_count(), 1);
        let ch = svc.challenge("alex").unwrap();
        assert_eq!(ch, svc.challenge("alex").unwrap());
        assert_eq!(ch.items[0].hint.as_deref(), Some("Recognize the last letter."));
        let seq = true_sequence(&ch, &alex_answers());
        assert_eq!(svc.login("alex", &seq).unwrap(), Decision::Allowed);
        assert_eq!(svc.login("alex", "ABC").unwrap(), Decision::WrongSequence);
        assert_eq!(svc.login("alex", "ZZZZZZ").unwrap(), Decision::WrongSequence);
        assert!(matches!(svc.login("nobody", &seq), Err(AuthError::UnknownUser(_))));
    }

    #[test]
    fn registration_preconditions() {
        let (svc, _) = service(AlarmPolicy::LogOnly);
        let five = &alex_answers()[..5];
        assert!(matches!(svc.register("u", five), Err(AuthError::WrongAnswerCount { expected: 6, got: 5 })));
        let mut dup = alex_answers();
        dup[1].question = dup[0].question;
        assert!(matches!(svc.register("u", &dup), Err(AuthError::DuplicateQuestion(_))));
        svc.register("u", &alex_answers()).unwrap();
        assert!(matches!(svc.register("u", &alex_answers()), Err(AuthError::DuplicateUser(_))));
        let mut bad = alex_answers();
        bad[4].answer = "100".into();
        let err = svc.register("v", &bad).unwrap_err();
        assert!(matches!(err, AuthError::Question { source: AlternativesError::OutOfRange { .. }, .. }));
        assert!(!svc.vault().has_user("v"));
        assert!(matches!(svc.register("", &alex_answers()), Err(AuthError::BadUsername(_))));
    }

    #[test]
    fn honeywords_raise_alarms() {
        let (svc, hc) = service(AlarmPolicy::LogOnly);
        svc.register("alex", &alex_answers()).unwrap();
        let seq = true_sequence(&svc.challenge("alex").unwrap(), &alex_answers());
        // every other sequence at distance >= 3 that hashes into F2 is a honeyword
        let f2 = svc.vault().read_f2("alex").unwrap();
        let mut honey = 0;
        for idx in 0..4usize.pow(6) {
            let positions: Vec<usize> = (0..6).map(|p| (idx / 4usize.pow(p)) % 4).collect();
            let s = OptionSequence::from_positions(&positions, 4).unwrap();
            if s.as_str() != seq && f2.position_of(&s).is_some() {
                assert!(matches!(svc.login("alex", s.as_str()).unwrap(), Decision::HoneywordAlarm { .. }));
                honey += 1;
            }
        }
        assert_eq!(honey, 19);
        assert_eq!(hc.alarms().len(), 19);
        assert_eq!(svc.alarms().len(), 19);
        assert_eq!(svc.login("alex", &seq).unwrap(), Decision::Allowed);
    }

    #[test]
    fn lock_policies() {
        let (svc, _) = service(AlarmPolicy::LockAll);
        svc.register("a", &alex_answers()).unwrap();
        svc.register("b", &alex_answers()).unwrap();
        let f2 = svc.vault().read_f2("a").unwrap();
        let ch = svc.challenge("a").unwrap();
        let truth = true_sequence(&ch, &alex_answers());
        let honey = (0..4096usize)
            .map(|idx| OptionSequence::from_positions(&(0..6).map(|p| (idx >> (2 * p)) & 3).collect::<Vec<_>>(), 4).unwrap())
            .find(|s| s.as_str() != truth && f2.position_of(s).is_some())
            .unwrap();
        assert!(matches!(svc.login("a", honey.as_str()).unwrap(), Decision::HoneywordAlarm { .. }));
        let truth_b = true_sequence(&svc.challenge("b").unwrap(), &alex_answers());
        assert_eq!(svc.login("b", &truth_b).unwrap(), Decision::Locked);
        svc.unlock_all();
        assert_eq!(svc.login("b", &truth_b).unwrap(), Decision::Allowed);
    }

    struct DownChecker;
    impl IndexService for DownChecker {
        fn set(&self, _: &str, _: usize) -> Result<(), CheckerError> {
            Ok(())
        }
        fn check(&self, _: &str, _: usize) -> Result<Verdict, CheckerError> {
            Err(CheckerError::Protocol("down".into()))
        }
    }

    #[test]
    fn checker_outage_fails_closed() {
        let svc = AuthService::new(SystemParams::default(), LetterGroups::default(), Vault::in_memory(), Arc::new(DownChecker))
            .unwrap()
            .with_seed(1);
        svc.register("alex", &alex_answers()).unwrap();
        let seq = true_sequence(&svc.challenge("alex").unwrap(), &alex_answers());
        let d = svc.login("alex", &seq).unwrap();
        assert_eq!(d, Decision::CheckerFailure);
        assert_eq!(d.outcome(), LoginOutcome::Deny);
        assert_eq!(svc.alarms()[0].kind, AlarmKind::CheckerUnavailable);
    }

    #[test]
    fn rate_limit_window() {
        let (svc, _) = service(AlarmPolicy::LogOnly);
        let svc = svc.with_rate_limit(RateLimit { max_attempts: 2, window: std::time::Duration::from_secs(60) });
        svc.register("alex", &alex_answers()).unwrap();
        assert_eq!(svc.login("alex", "AAAAAA").unwrap().outcome(), LoginOutcome::Deny);
        assert_eq!(svc.login("alex", "AAAAAA").unwrap().outcome(), LoginOutcome::Deny);
        assert_eq!(svc.login("alex", "AAAAAA").unwrap(), Decision::RateLimited);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("lock-all".parse::<AlarmPolicy>(), Ok(AlarmPolicy::LockAll));
        assert_eq!("LogOnly".parse::<AlarmPolicy>(), Ok(AlarmPolicy::LogOnly));
        assert!("nope".parse::<AlarmPolicy>().is_err());
    }
}
