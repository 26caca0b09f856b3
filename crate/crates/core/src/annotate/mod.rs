//! Summaries from a chat-completion endpoint.
//!
//! [`annotate_batch`] sends one prompt per dialogue with bounded concurrency,
//! retries retryable failures with exponential backoff, stops at an optional
//! request budget, and appends every success to `annotated.jsonl` in the
//! output directory as soon as it arrives. A rerun on the same directory skips
//! ids already present there. Failures of the run are written to
//! `failures.jsonl`.

mod endpoint;
mod prompt;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use endpoint::{
    parse_completion, ChatEndpoint, ChatMessage, ChatRequest, EndpointError, FixedEndpoint,
    HttpEndpoint, API_KEY_ENV,
};
pub use prompt::{
    build_prompt, render_dialogue_text, PromptTemplate, INSTRUCT_PROMPT, PRECEDING_PROMPT,
    SUBSEQUENT_PROMPT,
};

use crate::corpus::{
    find_reserved_marker, load_corpus, write_json_lines, AppendWriter, CorpusError, Dialogue,
    ParallelExample, SummaryOrigin, SummaryRecord,
};
use crate::ingest::normalize_text;

pub const ANNOTATED_FILE: &str = "annotated.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(rename = "base_backoff_ms", with = "millis")]
    pub base_backoff: Duration,
    pub backoff_multiplier: f64,
    pub retryable_statuses: BTreeSet<u16>,
    pub retry_timeouts: bool,
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_backoff: Duration::from_secs(1),
            backoff_multiplier: 2.0,
            retryable_statuses: [408, 409, 429, 500, 502, 503, 504].into_iter().collect(),
            retry_timeouts: true,
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `failed + 1`, after `failed` failures.
    pub fn backoff(&self, failed: u32) -> Duration {
        let factor = self
            .backoff_multiplier
            .powi(failed.saturating_sub(1) as i32);
        self.base_backoff.mul_f64(factor)
    }

    pub fn is_retryable(&self, e: &EndpointError) -> bool {
        match e {
            EndpointError::Status { status, .. } => self.retryable_statuses.contains(status),
            EndpointError::Timeout => self.retry_timeouts,
            EndpointError::Transport(_) => true,
            EndpointError::BadResponse(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationJob {
    pub model: String,
    pub temperature: f64,
    pub template: PromptTemplate,
    pub max_in_flight: usize,
    /// Upper bound on requests sent in one run, retries included.
    pub budget: Option<usize>,
    pub retry: RetryPolicy,
}

impl Default for AnnotationJob {
    fn default() -> Self {
        Self {
            model: "gpt-3.5-turbo-0301".into(),
            temperature: 0.0,
            template: PromptTemplate::Instruct,
            max_in_flight: 4,
            budget: None,
            retry: RetryPolicy::default(),
        }
    }
}

impl AnnotationJob {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        let bad = |m: &str| Err(AnnotateError::InvalidJob(m.to_string()));
        if self.model.trim().is_empty() {
            return bad("model name is empty");
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be >= 0");
        }
        if self.max_in_flight < 1 {
            return bad("max_in_flight must be >= 1");
        }
        if self.retry.max_attempts < 1 {
            return bad("max_attempts must be >= 1");
        }
        if self.retry.backoff_multiplier.is_nan() || self.retry.backoff_multiplier < 1.0 {
            return bad("backoff_multiplier must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("invalid annotation job: {0}")]
    InvalidJob(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Why a dialogue ended up without a summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemError {
    #[error("endpoint returned status {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("request budget exhausted")]
    BudgetExhausted,
    #[error("transport error: {message}")]
    Transport { message: String },
    #[error("unusable response: {message}")]
    BadResponse { message: String },
}

impl From<EndpointError> for ItemError {
    fn from(e: EndpointError) -> Self {
        match e {
            EndpointError::Status { status, body } => ItemError::Endpoint { status, body },
            EndpointError::Timeout => ItemError::Timeout,
            EndpointError::Transport(message) => ItemError::Transport { message },
            EndpointError::BadResponse(message) => ItemError::BadResponse { message },
        }
    }
}

/// One line of `failures.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub attempts: u32,
    pub error: ItemError,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub dialogues: usize,
    pub skipped_existing: usize,
    pub annotated: usize,
    pub requests_sent: usize,
    pub retries: usize,
    pub budget_exhausted: bool,
    pub failures: Vec<Failure>,
}

struct Success {
    summary: String,
    retries: u32,
}

struct Attempted {
    attempts: u32,
    outcome: Result<Success, ItemError>,
}

struct Shared<'a> {
    job: &'a AnnotationJob,
    endpoint: &'a dyn ChatEndpoint,
    requests: AtomicUsize,
    stop: AtomicBool,
}

impl Shared<'_> {
    fn take_request_slot(&self) -> bool {
        match self.job.budget {
            None => {
                self.requests.fetch_add(1, Ordering::SeqCst);
                true
            }
            Some(limit) => self
                .requests
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| {
                    (n < limit).then_some(n + 1)
                })
                .is_ok(),
        }
    }

    fn annotate_one(&self, d: &Dialogue) -> Attempted {
        let job = self.job;
        let request = ChatRequest::user(&job.model, build_prompt(d, job.template), job.temperature);
        let mut attempts = 0;
        loop {
            if !self.take_request_slot() {
                self.stop.store(true, Ordering::SeqCst);
                return Attempted {
                    attempts,
                    outcome: Err(ItemError::BudgetExhausted),
                };
            }
            attempts += 1;
            let result = self.endpoint.complete(&request).and_then(|text| {
                let text = normalize_text(&text);
                if text.is_empty() {
                    Err(EndpointError::BadResponse("empty summary".into()))
                } else if let Some(m) = find_reserved_marker(&text) {
                    Err(EndpointError::BadResponse(format!("summary contains {m}")))
                } else {
                    Ok(text)
                }
            });
            match result {
                Ok(summary) => {
                    return Attempted {
                        attempts,
                        outcome: Ok(Success {
                            summary,
                            retries: attempts - 1,
                        }),
                    }
                }
                Err(e) if attempts < job.retry.max_attempts && job.retry.is_retryable(&e) => {
                    std::thread::sleep(job.retry.backoff(attempts));
                }
                Err(e) => {
                    return Attempted {
                        attempts,
                        outcome: Err(e.into()),
                    }
                }
            }
        }
    }
}

/// Annotates `ds`, persisting into `out_dir` when given.
///
/// Returns every annotated example known after the run (earlier runs
/// included), in input order, plus the run's report.
pub fn annotate_batch(
    ds: &[Dialogue],
    job: &AnnotationJob,
    endpoint: &dyn ChatEndpoint,
    out_dir: Option<&Path>,
) -> Result<(Vec<ParallelExample>, AnnotationReport), AnnotateError> {
    job.validate()?;
    let mut done: HashMap<String, ParallelExample> = HashMap::new();
    let mut writer = None;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let path = dir.join(ANNOTATED_FILE);
        if path.exists() {
            for ex in load_corpus::<ParallelExample>(&path)? {
                done.insert(ex.dialogue.id.clone(), ex);
            }
        }
        writer = Some(AppendWriter::open(&path)?);
    }

    let mut report = AnnotationReport {
        dialogues: ds.len(),
        ..Default::default()
    };
    let mut queued = HashSet::new();
    let todo: Vec<usize> = (0..ds.len())
        .filter(|&i| {
            let id = &ds[i].id;
            if done.contains_key(id) {
                report.skipped_existing += 1;
                false
            } else {
                queued.insert(id.as_str())
            }
        })
        .collect();

    let shared = Shared {
        job,
        endpoint,
        requests: AtomicUsize::new(0),
        stop: AtomicBool::new(false),
    };
    let next = AtomicUsize::new(0);
    let mut results: Vec<Option<Attempted>> = (0..ds.len()).map(|_| None).collect();
    let mut write_error = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, Attempted)>();
        let workers = job.max_in_flight.min(todo.len());
        for _ in 0..workers {
            let tx = tx.clone();
            let (shared, next, todo) = (&shared, &next, &todo);
            scope.spawn(move || loop {
                if shared.stop.load(Ordering::SeqCst) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = todo.get(k) else { break };
                let attempted = shared.annotate_one(&ds[i]);
                if tx.send((i, attempted)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, attempted) in rx {
            if let Ok(success) = &attempted.outcome {
                let ex = ParallelExample::new(
                    ds[i].clone(),
                    vec![SummaryRecord::new(
                        success.summary.clone(),
                        SummaryOrigin::Annotated,
                    )],
                );
                if let Some(w) = writer.as_mut() {
                    if let Err(e) = w.append(&ex) {
                        write_error.get_or_insert(e);
                        shared.stop.store(true, Ordering::SeqCst);
                    }
                }
                done.insert(ds[i].id.clone(), ex);
            }
            results[i] = Some(attempted);
        }
    });
    if let Some(e) = write_error {
        return Err(e.into());
    }

    for &i in &todo {
        match results[i].take() {
            Some(Attempted {
                outcome: Ok(success),
                ..
            }) => {
                report.annotated += 1;
                report.retries += success.retries as usize;
            }
            Some(Attempted {
                attempts,
                outcome: Err(error),
            }) => {
                report.retries += attempts.saturating_sub(1) as usize;
                report.failures.push(Failure {
                    id: ds[i].id.clone(),
                    attempts,
                    error,
                });
            }
            None => report.failures.push(Failure {
                id: ds[i].id.clone(),
                attempts: 0,
                error: ItemError::BudgetExhausted,
            }),
        }
    }
    report.requests_sent = shared.requests.load(Ordering::SeqCst);
    report.budget_exhausted = report
        .failures
        .iter()
        .any(|f| f.error == ItemError::BudgetExhausted);

    if let Some(dir) = out_dir {
        let path = dir.join(FAILURES_FILE);
        write_json_lines(&report.failures, &path)?;
    }

    let mut seen = HashSet::new();
    let examples = ds
        .iter()
        .filter(|d| seen.insert(d.id.as_str()))
        .filter_map(|d| done.get(&d.id).cloned())
        .collect();
    Ok((examples, report))
}
