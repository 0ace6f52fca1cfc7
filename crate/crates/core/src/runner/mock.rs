//! In-process mock model server speaking both request shapes.
//!
//! Used by the test suites and for dry runs of a configuration without
//! touching a real vendor.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::task::JoinHandle;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MockProtocol {
    OpenAi,
    Anthropic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MockCall {
    pub protocol: MockProtocol,
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub auth: Option<String>,
    /// How many identical requests arrived before this one.
    pub prior_identical: usize,
}

#[derive(Debug, Clone)]
pub enum MockReply {
    Text(String),
    Status(u16),
    Malformed,
    Delayed(Duration, Box<MockReply>),
}

pub type Responder = Arc<dyn Fn(&MockCall) -> MockReply + Send + Sync>;

#[derive(Clone)]
struct AppState {
    responder: Responder,
    calls: Arc<Mutex<Vec<MockCall>>>,
}

pub struct MockServer {
    addr: SocketAddr,
    calls: Arc<Mutex<Vec<MockCall>>>,
    handle: JoinHandle<()>,
}

impl MockServer {
    /// Binds to an ephemeral localhost port and serves until dropped.
    pub async fn start(responder: Responder) -> Result<Self> {
        let calls = Arc::new(Mutex::new(Vec::new()));
        let state = AppState { responder, calls: calls.clone() };
        let app = Router::new()
            .route("/v1/chat/completions", post(openai))
            .route("/v1/messages", post(anthropic))
            .with_state(state);
        let listener =
            tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| Error::Transport(e.to_string()))?;
        let addr = listener.local_addr().map_err(|e| Error::Transport(e.to_string()))?;
        let handle = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(MockServer { addr, calls, handle })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn calls(&self) -> Vec<MockCall> {
        self.calls.lock().expect("mock call log").clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().expect("mock call log").len()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

/// Replies with the same text to every request.
pub fn fixed(text: &str) -> Responder {
    let text = text.to_string();
    Arc::new(move |_| MockReply::Text(text.clone()))
}

fn record(state: &AppState, mut call: MockCall) -> MockReply {
    let mut calls = state.calls.lock().expect("mock call log");
    call.prior_identical = calls
        .iter()
        .filter(|c| {
            c.model == call.model && c.system == call.system && c.user == call.user && c.temperature == call.temperature
        })
        .count();
    calls.push(call.clone());
    drop(calls);
    (state.responder)(&call)
}

async fn render(reply: MockReply, protocol: MockProtocol) -> Response {
    let mut reply = reply;
    while let MockReply::Delayed(d, inner) = reply {
        tokio::time::sleep(d).await;
        reply = *inner;
    }
    match reply {
        MockReply::Text(text) => match protocol {
            MockProtocol::OpenAi => Json(json!({
                "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]
            }))
            .into_response(),
            MockProtocol::Anthropic => Json(json!({
                "content": [{"type": "text", "text": text}]
            }))
            .into_response(),
        },
        MockReply::Status(code) => {
            let code = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (code, "mock failure").into_response()
        }
        MockReply::Malformed => (StatusCode::OK, "{\"unexpected\": true").into_response(),
        MockReply::Delayed(..) => unreachable!(),
    }
}

fn text_at<'a>(v: &'a Value, ptr: &str) -> &'a str {
    v.pointer(ptr).and_then(Value::as_str).unwrap_or("")
}

async fn openai(State(state): State<AppState>, headers: axum::http::HeaderMap, Json(body): Json<Value>) -> Response {
    let call = MockCall {
        protocol: MockProtocol::OpenAi,
        model: text_at(&body, "/model").to_string(),
        system: text_at(&body, "/messages/0/content").to_string(),
        user: text_at(&body, "/messages/1/content").to_string(),
        temperature: body.get("temperature").and_then(Value::as_f64).unwrap_or(f64::NAN),
        auth: headers
            .get("authorization")
            .and_then(|h| h.to_str().ok())
            .map(|s| s.trim_start_matches("Bearer ").to_string()),
        prior_identical: 0,
    };
    let reply = record(&state, call);
    render(reply, MockProtocol::OpenAi).await
}

async fn anthropic(State(state): State<AppState>, headers: axum::http::HeaderMap, Json(body): Json<Value>) -> Response {
    let call = MockCall {
        protocol: MockProtocol::Anthropic,
        model: text_at(&body, "/model").to_string(),
        system: text_at(&body, "/system").to_string(),
        user: text_at(&body, "/messages/0/content").to_string(),
        temperature: body.get("temperature").and_then(Value::as_f64).unwrap_or(f64::NAN),
        auth: headers.get("x-api-key").and_then(|h| h.to_str().ok()).map(str::to_string),
        prior_identical: 0,
    };
    let reply = record(&state, call);
    render(reply, MockProtocol::Anthropic).await
}
