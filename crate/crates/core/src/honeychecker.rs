//! The honeychecker: a separate server that knows, per user, only which
//! sweetword position is the real one.
//!
//! Wire protocol, newline-delimited UTF-8 over TCP, usernames percent-encoded:
//!
//! ```text
//! SET <user> <index>\n    -> OK\n
//! CHECK <user> <index>\n  -> MATCH\n | ALARM\n | UNKNOWN\n
//! anything else           -> ERR <reason>\n
//! ```
//!
//! Every ALARM also appends `<epoch-ms> ALARM <user> <submitted-index>` to the
//! alarm log. State is rewritten to the snapshot file on every SET.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

pub const SNAPSHOT_HEADER: &str = "#honeyq-checker v1";
const MAX_LINE: usize = 4096;

/// Everything except unreserved URL characters is escaped.
const USER_ESCAPES: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

#[derive(Debug, Error)]
pub enum CheckerError {
    #[error("honeychecker unreachable: {0}")]
    Unreachable(std::io::Error),
    #[error("honeychecker protocol error: {0}")]
    Protocol(String),
    #[error("honeychecker storage: {0}")]
    Storage(#[from] std::io::Error),
    #[error("corrupt snapshot {path}: {reason}")]
    CorruptSnapshot { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Match,
    Alarm,
    UnknownUser,
}

/// Set/Check as seen by the auth server.
pub trait IndexService: Send + Sync {
    fn set(&self, username: &str, index: usize) -> Result<(), CheckerError>;
    fn check(&self, username: &str, index: usize) -> Result<Verdict, CheckerError>;
}

pub fn encode_user(user: &str) -> String {
    utf8_percent_encode(user, USER_ESCAPES).to_string()
}

pub fn decode_user(enc: &str) -> Result<String, String> {
    percent_decode_str(enc)
        .decode_utf8()
        .map(|c| c.into_owned())
        .map_err(|_| "username is not valid UTF-8".to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Set { user: String, index: u64 },
    Check { user: String, index: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Ok,
    Match,
    Alarm,
    Unknown,
    Err(String),
}

impl Request {
    pub fn parse(line: &str) -> Result<Request, String> {
        let line = line.strip_suffix('\n').unwrap_or(line);
        let line = line.strip_suffix('\r').unwrap_or(line);
        let parts: Vec<&str> = line.split(' ').collect();
        let [verb, user, index] = parts[..] else {
            return Err("expected <VERB> <user> <index>".into());
        };
        if user.is_empty() {
            return Err("empty username".into());
        }
        let user = decode_user(user)?;
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad index {index:?}"));
        }
        let index: u64 = index.parse().map_err(|_| format!("index {index} out of range"))?;
        match verb {
            "SET" => Ok(Request::Set { user, index }),
            "CHECK" => Ok(Request::Check { user, index }),
            _ => Err(format!("unknown verb {verb:?}")),
        }
    }

    pub fn to_line(&self) -> String {
        match self {
            Request::Set { user, index } => format!("SET {} {index}\n", encode_user(user)),
            Request::Check { user, index } => format!("CHECK {} {index}\n", encode_user(user)),
        }
    }
}

impl Reply {
    pub fn to_line(&self) -> String {
        match self {
            Reply::Ok => "OK\n".into(),
            Reply::Match => "MATCH\n".into(),
            Reply::Alarm => "ALARM\n".into(),
            Reply::Unknown => "UNKNOWN\n".into(),
            Reply::Err(reason) => format!("ERR {}\n", reason.replace('\n', " ")),
        }
    }

    pub fn parse(line: &str) -> Result<Reply, String> {
        let line = line.trim_end_matches(['\r', '\n']);
        match line {
            "OK" => Ok(Reply::Ok),
            "MATCH" => Ok(Reply::Match),
            "ALARM" => Ok(Reply::Alarm),
            "UNKNOWN" => Ok(Reply::Unknown),
            _ => line
                .strip_prefix("ERR ")
                .map(|r| Reply::Err(r.to_string()))
                .ok_or_else(|| format!("unexpected reply {line:?}")),
        }
    }
}

/// One ALARM log line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlarmEntry {
    pub epoch_ms: u128,
    pub user: String,
    pub submitted: u64,
}

impl AlarmEntry {
    pub fn to_line(&self) -> String {
        format!("{} ALARM {} {}\n", self.epoch_ms, encode_user(&self.user), self.submitted)
    }

    pub fn parse(line: &str) -> Option<AlarmEntry> {
        let mut it = line.trim_end().split(' ');
        let epoch_ms = it.next()?.parse().ok()?;
        (it.next()? == "ALARM").then_some(())?;
        let user = decode_user(it.next()?).ok()?;
        let submitted = it.next()?.parse().ok()?;
        it.next().is_none().then_some(AlarmEntry { epoch_ms, user, submitted })
    }
}

fn epoch_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

struct State {
    index: BTreeMap<String, u64>,
    alarm_log: Option<File>,
    alarms: Vec<AlarmEntry>,
}

/// Index store with optional on-disk snapshot and alarm log.
pub struct Honeychecker {
    snapshot: Option<PathBuf>,
    alarm_path: Option<PathBuf>,
    state: Mutex<State>,
}

impl Honeychecker {
    pub fn in_memory() -> Self {
        Honeychecker {
            snapshot: None,
            alarm_path: None,
            state: Mutex::new(State { index: BTreeMap::new(), alarm_log: None, alarms: Vec::new() }),
        }
    }

    /// Loads `checker.snapshot` and appends to `alarms.log` under `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CheckerError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let snapshot = dir.join("checker.snapshot");
        let alarm_path = dir.join("alarms.log");
        let index = if snapshot.exists() { read_snapshot(&snapshot)? } else { BTreeMap::new() };
        let alarms = match std::fs::read_to_string(&alarm_path) {
            Ok(text) => text.lines().filter_map(AlarmEntry::parse).collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let alarm_log = OpenOptions::new().create(true).append(true).open(&alarm_path)?;
        Ok(Honeychecker {
            snapshot: Some(snapshot),
            alarm_path: Some(alarm_path),
            state: Mutex::new(State { index, alarm_log: Some(alarm_log), alarms }),
        })
    }

    pub fn snapshot_path(&self) -> Option<&Path> {
        self.snapshot.as_deref()
    }

    pub fn alarm_log_path(&self) -> Option<&Path> {
        self.alarm_path.as_deref()
    }

    pub fn set_index(&self, user: &str, index: u64) -> Result<(), CheckerError> {
        let mut st = self.state.lock().expect("checker lock");
        let prev = st.index.insert(user.to_string(), index);
        if let Some(path) = &self.snapshot {
            if let Err(e) = write_snapshot(path, &st.index) {
                match prev {
                    Some(p) => st.index.insert(user.to_string(), p),
                    None => st.index.remove(user),
                };
                return Err(e.into());
            }
        }
        Ok(())
    }

    pub fn check_index(&self, user: &str, index: u64) -> Result<Verdict, CheckerError> {
        let mut st = self.state.lock().expect("checker lock");
        let verdict = match st.index.get(user) {
            None => Verdict::UnknownUser,
            Some(&stored) if stored == index => Verdict::Match,
            Some(_) => Verdict::Alarm,
        };
        if verdict == Verdict::Alarm {
            let entry = AlarmEntry { epoch_ms: epoch_ms(), user: user.to_string(), submitted: index };
            log::warn!("honeyword submitted for {user:?} at position {index}");
            if let Some(f) = st.alarm_log.as_mut() {
                f.write_all(entry.to_line().as_bytes())?;
                f.sync_data()?;
            }
            st.alarms.push(entry);
        }
        Ok(verdict)
    }

    pub fn alarms(&self) -> Vec<AlarmEntry> {
        self.state.lock().expect("checker lock").alarms.clone()
    }

    pub fn user_count(&self) -> usize {
        self.state.lock().expect("checker lock").index.len()
    }

    /// Applies one protocol request.
    pub fn handle(&self, req: Request) -> Reply {
        let res = match req {
            Request::Set { user, index } => self.set_index(&user, index).map(|_| Reply::Ok),
            Request::Check { user, index } => self.check_index(&user, index).map(|v| match v {
                Verdict::Match => Reply::Match,
                Verdict::Alarm => Reply::Alarm,
                Verdict::UnknownUser => Reply::Unknown,
            }),
        };
        res.unwrap_or_else(|e| Reply::Err(e.to_string()))
    }

    pub fn handle_line(&self, line: &str) -> Reply {
        match Request::parse(line) {
            Ok(req) => self.handle(req),
            Err(reason) => Reply::Err(reason),
        }
    }
}

impl IndexService for Honeychecker {
    fn set(&self, username: &str, index: usize) -> Result<(), CheckerError> {
        self.set_index(username, index as u64)
    }

    fn check(&self, username: &str, index: usize) -> Result<Verdict, CheckerError> {
        self.check_index(username, index as u64)
    }
}

fn render_snapshot(index: &BTreeMap<String, u64>) -> String {
    let mut out = format!("{SNAPSHOT_HEADER}\n");
    for (user, idx) in index {
        out.push_str(&format!("{} {idx}\n", encode_user(user)));
    }
    out
}

fn write_snapshot(path: &Path, index: &BTreeMap<String, u64>) -> std::io::Result<()> {
    let tmp = path.with_extension("snapshot.tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(render_snapshot(index).as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

fn read_snapshot(path: &Path) -> Result<BTreeMap<String, u64>, CheckerError> {
    let corrupt = |reason: String| CheckerError::CorruptSnapshot { path: path.to_path_buf(), reason };
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_HEADER) {
        return Err(corrupt("missing header".into()));
    }
    let mut index = BTreeMap::new();
    for line in lines {
        let (user, idx) = line.split_once(' ').ok_or_else(|| corrupt(format!("bad line {line:?}")))?;
        let user = decode_user(user).map_err(corrupt)?;
        let idx = idx.parse().map_err(|_| corrupt(format!("bad index in {line:?}")))?;
        index.insert(user, idx);
    }
    Ok(index)
}

/// Running TCP front end for a [`Honeychecker`].
pub struct CheckerServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl CheckerServer {
    /// Binds `addr` and serves each connection on its own thread.
    pub fn spawn(addr: impl ToSocketAddrs, checker: Arc<Honeychecker>) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = Arc::clone(&stop);
        let accept = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                match conn {
                    Ok(stream) => {
                        let checker = Arc::clone(&checker);
                        std::thread::spawn(move || {
                            if let Err(e) = serve_connection(stream, &checker) {
                                log::debug!("checker connection closed: {e}");
                            }
                        });
                    }
                    Err(e) => log::warn!("checker accept failed: {e}"),
                }
            }
        });
        Ok(CheckerServer { addr, stop, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the accept loop exits.
    pub fn join(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop_accepting();
    }

    fn stop_accepting(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for CheckerServer {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_accepting();
        }
    }
}

fn serve_connection(stream: TcpStream, checker: &Honeychecker) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(60)))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = (&mut reader).take(MAX_LINE as u64 + 1).read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        let reply = if buf.last() != Some(&b'\n') {
            if n > MAX_LINE {
                writer.write_all(Reply::Err("line too long".into()).to_line().as_bytes())?;
                return Ok(());
            }
            // EOF without newline
            Reply::Err("unterminated request".into())
        } else {
            match std::str::from_utf8(&buf) {
                Ok(line) => checker.handle_line(line),
                Err(_) => Reply::Err("request is not UTF-8".into()),
            }
        };
        writer.write_all(reply.to_line().as_bytes())?;
        writer.flush()?;
    }
}

/// TCP client; one short-lived connection per call.
#[derive(Debug, Clone)]
pub struct CheckerClient {
    addr: String,
    timeout: Duration,
}

impl CheckerClient {
    pub fn new(addr: impl Into<String>) -> Self {
        CheckerClient { addr: addr.into(), timeout: Duration::from_secs(5) }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn request(&self, req: &Request) -> Result<Reply, CheckerError> {
        let addr = self
            .addr
            .to_socket_addrs()
            .map_err(CheckerError::Unreachable)?
            .next()
            .ok_or_else(|| CheckerError::Protocol(format!("cannot resolve {}", self.addr)))?;
        let stream = TcpStream::connect_timeout(&addr, self.timeout).map_err(CheckerError::Unreachable)?;
        stream.set_read_timeout(Some(self.timeout)).map_err(CheckerError::Unreachable)?;
        stream.set_write_timeout(Some(self.timeout)).map_err(CheckerError::Unreachable)?;
        let mut writer = stream.try_clone().map_err(CheckerError::Unreachable)?;
        writer.write_all(req.to_line().as_bytes()).map_err(CheckerError::Unreachable)?;
        let mut line = String::new();
        BufReader::new(stream).read_line(&mut line).map_err(CheckerError::Unreachable)?;
        if line.is_empty() {
            return Err(CheckerError::Protocol("connection closed without reply".into()));
        }
        Reply::parse(&line).map_err(CheckerError::Protocol)
    }
}

impl IndexService for CheckerClient {
    fn set(&self, username: &str, index: usize) -> Result<(), CheckerError> {
        match self.request(&Request::Set { user: username.to_string(), index: index as u64 })? {
            Reply::Ok => Ok(()),
            Reply::Err(e) => Err(CheckerError::Protocol(e)),
            other => Err(CheckerError::Protocol(format!("unexpected reply to SET: {other:?}"))),
        }
    }

    fn check(&self, username: &str, index: usize) -> Result<Verdict, CheckerError> {
        match self.request(&Request::Check { user: username.to_string(), index: index as u64 })? {
            Reply::Match => Ok(Verdict::Match),
            Reply::Alarm => Ok(Verdict::Alarm),
            Reply::Unknown => Ok(Verdict::UnknownUser),
            Reply::Err(e) => Err(CheckerError::Protocol(e)),
            Reply::Ok => Err(CheckerError::Protocol("unexpected OK to CHECK".into())),
        }
    }
}
