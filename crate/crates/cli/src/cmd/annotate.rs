use std::time::Duration;

use serde_json::json;

use dialsum_core::annotate::{
    annotate_batch, AnnotationJob, ChatEndpoint, FixedEndpoint, HttpEndpoint, PromptTemplate,
    ANNOTATED_FILE, FAILURES_FILE,
};
use dialsum_core::corpus::Corpus;

use super::{load, load_toml, parse_name, to_value, write_pretty};
use crate::manifest::{ensure_dir, Manifest};
use crate::{data, usage, AnnotateArgs, CliError};

pub const REPORT: &str = "annotation_report.json";

pub fn run(a: AnnotateArgs) -> Result<(), CliError> {
    let mut job: AnnotationJob = match &a.config {
        Some(p) => load_toml(p)?,
        None => AnnotationJob::default(),
    };
    if let Some(m) = &a.model {
        job.model = m.clone();
    }
    if let Some(t) = &a.template {
        job.template = parse_name::<PromptTemplate>("template", t)?;
    }
    if let Some(t) = a.temperature {
        job.temperature = t;
    }
    if let Some(n) = a.max_in_flight {
        job.max_in_flight = n;
    }
    if a.budget.is_some() {
        job.budget = a.budget;
    }
    if let Some(n) = a.max_attempts {
        job.retry.max_attempts = n;
    }
    job.validate().map_err(|e| usage(e.to_string()))?;

    let endpoint: Box<dyn ChatEndpoint> = match (&a.mock, &a.endpoint) {
        (Some(text), _) => Box::new(FixedEndpoint(text.clone())),
        (None, Some(url)) => Box::new(HttpEndpoint::from_env(
            url.clone(),
            Duration::from_secs(a.timeout),
        )),
        (None, None) => return Err(usage("give --mock TEXT or --endpoint URL")),
    };
    ensure_dir(&a.out)?;
    let dialogues = match load(&a.input)? {
        Corpus::Dialogues(d) => d,
        Corpus::Parallel(ps) => ps.into_iter().map(|p| p.dialogue).collect(),
    };
    let (_, report) =
        annotate_batch(&dialogues, &job, endpoint.as_ref(), Some(&a.out)).map_err(data)?;
    write_pretty(&a.out.join(REPORT), &report)?;

    let config = json!({
        "job": to_value(&job),
        "endpoint": a.endpoint.as_deref().unwrap_or("mock"),
    });
    Manifest::new("annotate", config, None)
        .input(&a.input)?
        .write(&a.out, &[ANNOTATED_FILE, FAILURES_FILE, REPORT])?;
    println!(
        "annotate: {} new, {} already done, {} failed, {} requests",
        report.annotated,
        report.skipped_existing,
        report.failures.len(),
        report.requests_sent
    );
    if !report.failures.is_empty() {
        return Err(data(format!(
            "{} dialogues not annotated (see {FAILURES_FILE}); rerun to resume",
            report.failures.len()
        )));
    }
    Ok(())
}
