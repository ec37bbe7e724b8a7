//! Chat-completions client with three interchangeable transports — live
//! HTTP, recording, and playback — plus the prompt builders for both roles.
//!
//! Requests are hashed over their canonical JSON serialization, which lets
//! recorded transcripts be replayed either in strict order (every request
//! must match the tape exactly) or keyed by hash (requests may arrive in
//! any order). The test suites run entirely on playback; nothing in them
//! opens a socket.
//!
//! The API key is read from `PERSPACT_API_KEY`, lives only inside
//! [`LiveTransport`], is redacted from its `Debug` output, and is never
//! serialized into exchanges or transcripts.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{director, matcher};
use crate::scenario::ScenarioInstance;
use crate::util::sha256_hex;
use crate::world::{scene_entries, visible_set};

/// Environment variable holding the API key for live runs.
pub const API_KEY_ENV: &str = "PERSPACT_API_KEY";

const RETRIES: u32 = 3;
const BACKOFF_BASE_MS: u64 = 250;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("malformed exchange: {0}")]
    MalformedExchange(String),
    #[error("missing API key: set {API_KEY_ENV}")]
    MissingApiKey,
    #[error("transport failed after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },
    #[error("endpoint returned {status}: {detail}")]
    BadStatus { status: u16, detail: String },
    #[error("unexpected response shape: {0}")]
    BadResponse(String),
    #[error("no recorded response for request {hash}")]
    PlaybackMiss { hash: String },
    #[error("playback diverged at entry {index}: recorded {expected}, got request {got}")]
    PlaybackDivergence {
        index: usize,
        expected: String,
        got: String,
    },
    #[error("playback tape exhausted after {0} entries")]
    PlaybackExhausted(usize),
    #[error("transcript {path}: {reason}")]
    BadTranscript { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Exchanges
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// One request to a chat-completions endpoint. Greedy decoding by default:
/// temperature zero keeps recorded transcripts meaningful as fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl ChatExchange {
    pub fn new(model: &str, system: &str) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![ChatMessage {
                role: Role::System,
                content: system.to_string(),
            }],
            temperature: 0.0,
            max_tokens: 512,
        }
    }

    pub fn push_user(&mut self, content: &str) {
        self.messages.push(ChatMessage {
            role: Role::User,
            content: content.to_string(),
        });
    }

    pub fn push_assistant(&mut self, content: &str) {
        self.messages.push(ChatMessage {
            role: Role::Assistant,
            content: content.to_string(),
        });
    }

    /// Exactly one leading system message, then user/assistant strictly
    /// alternating and starting with user, ending on user (a request always
    /// awaits a completion).
    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |msg: &str| Err(GatewayError::MalformedExchange(msg.to_string()));
        match self.messages.first() {
            Some(m) if m.role == Role::System => {}
            _ => return bad("first message must be the system prompt"),
        }
        let rest = &self.messages[1..];
        if rest.is_empty() {
            return bad("no user message after the system prompt");
        }
        for (i, m) in rest.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if m.role == Role::System {
                return bad("system role only allowed in the first message");
            }
            if m.role != expected {
                return bad(&format!(
                    "message {} breaks user/assistant alternation",
                    i + 1
                ));
            }
        }
        if rest.len().is_multiple_of(2) {
            return bad("exchange must end on a user message");
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON serialization; the playback key.
    pub fn request_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("exchange serializes");
        sha256_hex(json.as_bytes())
    }
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

/// Something that can answer a chat exchange with a completion string.
pub trait Transport: Send + Sync {
    fn complete(&self, exchange: &ChatExchange) -> Result<String, GatewayError>;
}

/// Live HTTP transport against an OpenAI-style `/chat/completions` route.
/// Retries transient failures (network errors, 429, 5xx) with exponential
/// backoff; other statuses fail immediately.
pub struct LiveTransport {
    base_url: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl fmt::Debug for LiveTransport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveTransport")
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

impl LiveTransport {
    pub fn new(base_url: &str, api_key: &str) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: api_key.to_string(),
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(90))
                .build()
                .expect("client builds"),
        }
    }

    /// Reads the key from [`API_KEY_ENV`].
    pub fn from_env(base_url: &str) -> Result<Self, GatewayError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| GatewayError::MissingApiKey)?;
        if key.trim().is_empty() {
            return Err(GatewayError::MissingApiKey);
        }
        Ok(Self::new(base_url, &key))
    }

    fn attempt(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
        let url = format!("{}/chat/completions", self.base_url);
        let resp = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(exchange)
            .send()
            .map_err(|e| GatewayError::Transport {
                attempts: 1,
                last: e.to_string(),
            })?;
        let status = resp.status();
        if !status.is_success() {
            let detail = resp.text().unwrap_or_default();
            return Err(GatewayError::BadStatus {
                status: status.as_u16(),
                detail: detail.chars().take(200).collect(),
            });
        }
        let body: serde_json::Value = resp.json().map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        body["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                GatewayError::BadResponse("choices[0].message.content missing".into())
            })
    }
}

fn retryable(err: &GatewayError) -> bool {
    match err {
        GatewayError::Transport { .. } => true,
        GatewayError::BadStatus { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl Transport for LiveTransport {
    fn complete(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
        exchange.validate()?;
        let mut last: Option<GatewayError> = None;
        for attempt in 0..RETRIES {
            match self.attempt(exchange) {
                Ok(text) => return Ok(text),
                Err(e) if retryable(&e) => {
                    last = Some(e);
                    if attempt + 1 < RETRIES {
                        std::thread::sleep(Duration::from_millis(BACKOFF_BASE_MS << attempt));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(GatewayError::Transport {
            attempts: RETRIES,
            last: last.map(|e| e.to_string()).unwrap_or_default(),
        })
    }
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_hash: String,
    pub model: String,
    pub response: String,
    pub latency_ms: u64,
}

/// Wraps another transport and appends every completion to a JSONL
/// transcript, keyed by request hash. Only hashes and responses are
/// written; request bodies and credentials never touch the file.
pub struct RecordTransport {
    inner: Box<dyn Transport>,
    path: PathBuf,
    lock: Mutex<()>,
}

impl RecordTransport {
    pub fn new(inner: Box<dyn Transport>, path: &Path) -> Self {
        Self {
            inner,
            path: path.to_path_buf(),
            lock: Mutex::new(()),
        }
    }
}

impl Transport for RecordTransport {
    fn complete(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
        let started = Instant::now();
        let response = self.inner.complete(exchange)?;
        let entry = TranscriptEntry {
            request_hash: exchange.request_hash(),
            model: exchange.model.clone(),
            response: response.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
        };
        let line = serde_json::to_string(&entry).expect("entry serializes");
        let _guard = self.lock.lock().expect("record lock");
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        writeln!(file, "{line}")?;
        Ok(response)
    }
}

pub fn load_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, GatewayError> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry =
            serde_json::from_str(line).map_err(|e| GatewayError::BadTranscript {
                path: path.display().to_string(),
                reason: format!("line {}: {e}", i + 1),
            })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Replays a recorded transcript instead of calling a model.
///
/// *Ordered* mode walks the tape from the top and insists each incoming
/// request hash matches the recorded one — the strictest replay, used for
/// byte-level regression tests. *Keyed* mode answers by hash lookup in any
/// order; loading rejects transcripts where one hash maps to two different
/// responses.
pub enum PlaybackTransport {
    Ordered {
        entries: Vec<TranscriptEntry>,
        cursor: Mutex<usize>,
    },
    Keyed {
        by_hash: BTreeMap<String, String>,
    },
}

impl PlaybackTransport {
    pub fn ordered(entries: Vec<TranscriptEntry>) -> Self {
        PlaybackTransport::Ordered {
            entries,
            cursor: Mutex::new(0),
        }
    }

    pub fn ordered_from_path(path: &Path) -> Result<Self, GatewayError> {
        Ok(Self::ordered(load_transcript(path)?))
    }

    pub fn keyed(entries: Vec<TranscriptEntry>) -> Result<Self, GatewayError> {
        let mut by_hash = BTreeMap::new();
        for e in entries {
            if let Some(prev) = by_hash.insert(e.request_hash.clone(), e.response.clone()) {
                if prev != e.response {
                    return Err(GatewayError::BadTranscript {
                        path: "<memory>".into(),
                        reason: format!(
                            "hash {} maps to two different responses",
                            e.request_hash
                        ),
                    });
                }
            }
        }
        Ok(PlaybackTransport::Keyed { by_hash })
    }

    pub fn keyed_from_path(path: &Path) -> Result<Self, GatewayError> {
        let entries = load_transcript(path)?;
        match Self::keyed(entries) {
            Err(GatewayError::BadTranscript { reason, .. }) => Err(GatewayError::BadTranscript {
                path: path.display().to_string(),
                reason,
            }),
            other => other,
        }
    }
}

impl Transport for PlaybackTransport {
    fn complete(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
        exchange.validate()?;
        let hash = exchange.request_hash();
        match self {
            PlaybackTransport::Ordered { entries, cursor } => {
                let mut cursor = cursor.lock().expect("cursor lock");
                let index = *cursor;
                let entry = entries
                    .get(index)
                    .ok_or(GatewayError::PlaybackExhausted(entries.len()))?;
                if entry.request_hash != hash {
                    return Err(GatewayError::PlaybackDivergence {
                        index,
                        expected: entry.request_hash.clone(),
                        got: hash,
                    });
                }
                *cursor += 1;
                Ok(entry.response.clone())
            }
            PlaybackTransport::Keyed { by_hash } => by_hash
                .get(&hash)
                .cloned()
                .ok_or(GatewayError::PlaybackMiss { hash }),
        }
    }
}

/// Answers with a fixed script of responses, ignoring request content.
/// The building block for fixtures: wrap it in a [`RecordTransport`] to
/// produce a transcript, then replay that transcript in tests.
pub struct ScriptedTransport {
    responses: Mutex<VecDeque<String>>,
}

impl ScriptedTransport {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
        }
    }
}

impl Transport for ScriptedTransport {
    fn complete(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
        exchange.validate()?;
        self.responses
            .lock()
            .expect("script lock")
            .pop_front()
            .ok_or(GatewayError::PlaybackExhausted(0))
    }
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

/// The Matcher's system prompt: role, task, referent, and the Director's
/// limitation, followed by the command grammar.
pub fn matcher_system_prompt(instance: &ScenarioInstance) -> String {
    format!(
        "You are the Matcher in this task.\n\
         The task is to take an object that the Director asks you about.\n\
         The object the Director is referring to is the {}.\n\
         The Director cannot act in the environment and only knows\n\
         what he sees from his location.\n\
         \n\
         Act with exactly one command per turn, written on its own line:\n\
         move(<room>) | open(<container>) | take(<object>) | ask(\"<question>\") | done\n\
         Lines before the command are treated as your private reasoning.",
        instance.instruction.phrase()
    )
}

/// The first user turn: where the Director stands, then what the Matcher
/// sees. Later turns carry only events and fresh observations.
pub fn matcher_initial_user_message(instance: &ScenarioInstance, observation: &str) -> String {
    format!(
        "The Director is in the {}.\n{}",
        instance.director_room(),
        observation
    )
}

/// The Director's system prompt, built strictly from the Director's own
/// visibility: objects only the Matcher can see are never mentioned.
pub fn director_system_prompt(instance: &ScenarioInstance) -> String {
    let state = instance.initial_state();
    let report =
        visible_set(&instance.map, &state, &director()).expect("director exists in instance");
    let entries = scene_entries(&report);
    let scene = if entries.is_empty() {
        "nothing of note".to_string()
    } else {
        entries.join(", ")
    };
    let matcher_note = if report.agents.iter().any(|(a, _)| *a == matcher()) {
        "You can see the Matcher from where you stand."
    } else {
        "You cannot see the Matcher from where you stand."
    };
    format!(
        "You are the Director in this task.\n\
         You want the Matcher to take {}.\n\
         You cannot act in the environment and only know what you see from your location.\n\
         You are in the {}. You see: {}.\n\
         {}\n\
         When the Matcher asks which object you mean, reply with one short sentence\n\
         naming the object and where it is.",
        instance.instruction.rendered(),
        report.viewer_room,
        scene,
        matcher_note
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{reference_instance, Family};
    use tempfile::tempdir;

    fn sample_exchange() -> ChatExchange {
        let mut ex = ChatExchange::new("test-model", "system prompt");
        ex.push_user("hello");
        ex
    }

    #[test]
    fn exchange_validation_enforces_shape() {
        let mut ok = sample_exchange();
        ok.validate().unwrap();
        ok.push_assistant("hi");
        assert!(ok.validate().is_err(), "must end on a user message");
        ok.push_user("again");
        ok.validate().unwrap();

        let no_system = ChatExchange {
            model: "m".into(),
            messages: vec![ChatMessage {
                role: Role::User,
                content: "hi".into(),
            }],
            temperature: 0.0,
            max_tokens: 16,
        };
        assert!(no_system.validate().is_err());

        let mut double_user = sample_exchange();
        double_user.messages.push(ChatMessage {
            role: Role::User,
            content: "again".into(),
        });
        assert!(double_user.validate().is_err());
    }

    #[test]
    fn request_hash_is_stable_and_content_sensitive() {
        let a = sample_exchange();
        let b = a.clone();
        assert_eq!(a.request_hash(), b.request_hash());
        let mut c = a.clone();
        c.push_assistant("x");
        c.push_user("y");
        assert_ne!(a.request_hash(), c.request_hash());
    }

    #[test]
    fn scripted_transport_pops_in_order() {
        let t = ScriptedTransport::new(["one", "two"]);
        let ex = sample_exchange();
        assert_eq!(t.complete(&ex).unwrap(), "one");
        assert_eq!(t.complete(&ex).unwrap(), "two");
        assert!(matches!(
            t.complete(&ex),
            Err(GatewayError::PlaybackExhausted(_))
        ));
    }

    #[test]
    fn record_then_playback_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tape.jsonl");
        let recorder =
            RecordTransport::new(Box::new(ScriptedTransport::new(["alpha", "beta"])), &path);
        let mut first = sample_exchange();
        assert_eq!(recorder.complete(&first).unwrap(), "alpha");
        first.push_assistant("alpha");
        first.push_user("next");
        assert_eq!(recorder.complete(&first).unwrap(), "beta");

        // keyed playback answers in any order
        let keyed = PlaybackTransport::keyed_from_path(&path).unwrap();
        assert_eq!(keyed.complete(&first).unwrap(), "beta");
        assert_eq!(keyed.complete(&sample_exchange()).unwrap(), "alpha");

        // ordered playback insists on the exact sequence
        let ordered = PlaybackTransport::ordered_from_path(&path).unwrap();
        assert_eq!(ordered.complete(&sample_exchange()).unwrap(), "alpha");
        match ordered.complete(&sample_exchange()) {
            Err(GatewayError::PlaybackDivergence { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn playback_miss_names_the_hash() {
        let keyed = PlaybackTransport::keyed(vec![]).unwrap();
        let ex = sample_exchange();
        match keyed.complete(&ex) {
            Err(GatewayError::PlaybackMiss { hash }) => assert_eq!(hash, ex.request_hash()),
            other => panic!("expected miss, got {other:?}"),
        }
    }

    #[test]
    fn keyed_playback_rejects_conflicting_hashes() {
        let entry = |response: &str| TranscriptEntry {
            request_hash: "h".into(),
            model: "m".into(),
            response: response.into(),
            latency_ms: 0,
        };
        assert!(PlaybackTransport::keyed(vec![entry("a"), although_same_is_fine()]).is_ok());
        assert!(PlaybackTransport::keyed(vec![entry("a"), entry("b")]).is_err());

        fn although_same_is_fine() -> TranscriptEntry {
            TranscriptEntry {
                request_hash: "h".into(),
                model: "m".into(),
                response: "a".into(),
                latency_ms: 7,
            }
        }
    }

    #[test]
    fn live_transport_debug_redacts_the_key() {
        let t = LiveTransport::new("https://example.invalid/v1", "sk-super-secret");
        let debug = format!("{t:?}");
        assert!(!debug.contains("sk-super-secret"));
        assert!(debug.contains("<redacted>"));
    }

    #[test]
    fn transcripts_never_contain_credentials() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tape.jsonl");
        let recorder =
            RecordTransport::new(Box::new(ScriptedTransport::new(["reply"])), &path);
        recorder.complete(&sample_exchange()).unwrap();
        let contents = fs::read_to_string(&path).unwrap();
        assert!(!contents.contains("sk-"), "no key material in transcripts");
        assert!(!contents.contains("system prompt"), "no request bodies either");
    }

    #[test]
    fn matcher_prompt_carries_the_referent() {
        let inst = reference_instance(Family::Persp);
        let prompt = matcher_system_prompt(&inst);
        assert!(prompt.starts_with("You are the Matcher in this task.\n"));
        assert!(prompt.contains("The object the Director is referring to is the tie.\n"));
        assert!(prompt.contains("The Director cannot act in the environment and only knows\nwhat he sees from his location."));
        let base = matcher_system_prompt(&reference_instance(Family::Base));
        assert!(base.contains("is the red tie.\n"));
    }

    #[test]
    fn director_prompt_respects_directors_own_view() {
        // Persp: the blue tie in the kitchen is visible to the Matcher but
        // not to the Director in the hallway.
        let inst = reference_instance(Family::Persp);
        let prompt = director_system_prompt(&inst);
        assert!(prompt.contains("You are in the hallway."));
        assert!(prompt.contains("a red tie (in the bedroom)"));
        assert!(!prompt.contains("blue"), "must not leak the hidden decoy:\n{prompt}");

        // Distractor: the decoy in the hallway is out of the Director's view.
        let inst = reference_instance(Family::Distractor);
        let prompt = director_system_prompt(&inst);
        assert!(prompt.contains("containing a red tie"));
        assert!(!prompt.contains("blue"), "{prompt}");
    }
}
