//! JSON over HTTP in front of [`AuthService`].
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | GET | `/questions` | question catalog |
//! | POST | `/register` | `{username, answers: [{question, answer}]}` → 201 |
//! | GET | `/challenge/{user}` | [`LoginChallenge`](super::LoginChallenge) |
//! | POST | `/login` | `{username, sequence}` → `{"result": "ALLOW" \| "DENY"}` |
//! | GET | `/admin/alarms` | operator alarm list |

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use super::{AuthError, AuthService, Decision, LoginOutcome};
use crate::alternatives::AnswerSubmission;
use crate::model::{catalog, QuestionId};

/// Every denial gets exactly these bytes.
const DENY_BODY: &str = r#"{"result":"DENY"}"#;
const ALLOW_BODY: &str = r#"{"result":"ALLOW"}"#;
const RATE_LIMITED_BODY: &str = r#"{"result":"RATE_LIMITED"}"#;

#[derive(Debug, Deserialize)]
struct RegisterBody {
    username: String,
    answers: Vec<AnswerSubmission>,
}

#[derive(Debug, Deserialize)]
struct LoginBody {
    username: String,
    sequence: String,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    question: Option<QuestionId>,
}

fn error_response(e: AuthError) -> Response {
    let (status, code, question) = match &e {
        AuthError::DuplicateUser(_) => (StatusCode::CONFLICT, "duplicate_user", None),
        AuthError::UnknownUser(_) => (StatusCode::NOT_FOUND, "unknown_user", None),
        AuthError::WrongAnswerCount { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "wrong_answer_count", None),
        AuthError::DuplicateQuestion(q) => (StatusCode::UNPROCESSABLE_ENTITY, "duplicate_question", Some(*q)),
        AuthError::QuestionUnavailable(q) => (StatusCode::UNPROCESSABLE_ENTITY, "question_unavailable", Some(*q)),
        AuthError::Question { question, .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_answer", Some(*question)),
        AuthError::BadUsername(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_username", None),
        AuthError::CheckerUnavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "checker_unavailable", None),
        AuthError::Params(_) | AuthError::Sweetwords(_) | AuthError::Vault(_) => {
            log::error!("internal error: {e}");
            (StatusCode::INTERNAL_SERVER_ERROR, "internal", None)
        }
    };
    let message = if status == StatusCode::INTERNAL_SERVER_ERROR { "internal error".to_string() } else { e.to_string() };
    (status, Json(ErrorBody { error: code, message, question })).into_response()
}

fn fixed_json(status: StatusCode, body: &'static str) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn join_error() -> Response {
    fixed_json(StatusCode::INTERNAL_SERVER_ERROR, r#"{"error":"internal","message":"internal error"}"#)
}

async fn questions(State(svc): State<Arc<AuthService>>) -> Response {
    let params = svc.params();
    let offered: Vec<_> = catalog().iter().filter(|e| params.question_available(e.id)).collect();
    Json(offered).into_response()
}

async fn register(State(svc): State<Arc<AuthService>>, Json(body): Json<RegisterBody>) -> Response {
    match tokio::task::spawn_blocking(move || svc.register(&body.username, &body.answers)).await {
        Ok(Ok(summary)) => (StatusCode::CREATED, Json(summary)).into_response(),
        Ok(Err(e)) => error_response(e),
        Err(_) => join_error(),
    }
}

async fn challenge(State(svc): State<Arc<AuthService>>, Path(user): Path<String>) -> Response {
    match tokio::task::spawn_blocking(move || svc.challenge(&user)).await {
        Ok(Ok(ch)) => Json(ch).into_response(),
        Ok(Err(e)) => error_response(e),
        Err(_) => join_error(),
    }
}

async fn login(State(svc): State<Arc<AuthService>>, Json(body): Json<LoginBody>) -> Response {
    let decision = tokio::task::spawn_blocking(move || svc.login(&body.username, &body.sequence)).await;
    let outcome = match decision {
        Ok(Ok(d)) => d.outcome(),
        // unknown users are denied like everyone else
        Ok(Err(AuthError::UnknownUser(_))) => Decision::WrongSequence.outcome(),
        Ok(Err(e)) => {
            log::error!("login failed: {e}");
            LoginOutcome::Deny
        }
        Err(_) => LoginOutcome::Deny,
    };
    match outcome {
        LoginOutcome::Allow => fixed_json(StatusCode::OK, ALLOW_BODY),
        LoginOutcome::Deny => fixed_json(StatusCode::OK, DENY_BODY),
        LoginOutcome::RateLimited => fixed_json(StatusCode::TOO_MANY_REQUESTS, RATE_LIMITED_BODY),
    }
}

async fn alarms(State(svc): State<Arc<AuthService>>) -> Response {
    Json(svc.alarms()).into_response()
}

pub fn router(svc: Arc<AuthService>) -> Router {
    Router::new()
        .route("/questions", get(questions))
        .route("/register", post(register))
        .route("/challenge/{user}", get(challenge))
        .route("/login", post(login))
        .route("/admin/alarms", get(alarms))
        .with_state(svc)
}

/// Serves until `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, svc: Arc<AuthService>, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(svc)).with_graceful_shutdown(shutdown).await
}

/// The HTTP server on its own runtime thread; stops on drop.
pub struct HttpServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl HttpServer {
    pub fn spawn(addr: &str, svc: Arc<AuthService>) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let local = std_listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener)?;
                serve(listener, svc, async {
                    let _ = rx.await;
                })
                .await
            })
        });
        Ok(HttpServer { addr: local, stop: Some(tx), thread: Some(thread) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for HttpServer {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}
