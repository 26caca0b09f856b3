use std::collections::HashSet;

use serde_json::json;

use dialsum_core::corpus::save_corpus;
use dialsum_core::ingest::{ingest, IngestSpec};

use super::{load_toml, write_pretty};
use crate::manifest::{ensure_dir, Manifest};
use crate::{data, usage, CliError, IngestArgs};

pub const OUTPUT: &str = "dialogues.jsonl";
pub const REPORT: &str = "ingest_report.json";

pub fn run(a: IngestArgs) -> Result<(), CliError> {
    if a.inputs.len() != a.specs.len() {
        return Err(usage(format!(
            "{} --input files but {} --spec files; give one spec per input",
            a.inputs.len(),
            a.specs.len()
        )));
    }
    ensure_dir(&a.out)?;
    let mut dialogues = Vec::new();
    let mut reports = Vec::new();
    let mut specs = Vec::new();
    for (input, spec_path) in a.inputs.iter().zip(&a.specs) {
        let spec: IngestSpec = load_toml(spec_path)?;
        let (ds, report) =
            ingest(input, &spec).map_err(|e| data(format!("{}: {e}", input.display())))?;
        dialogues.extend(ds);
        reports.push(report);
        specs.push(spec);
    }
    let mut seen = HashSet::new();
    if let Some(d) = dialogues.iter().find(|d| !seen.insert(d.id.as_str())) {
        return Err(data(format!("duplicate dialogue id {}", d.id)));
    }
    save_corpus(&dialogues, &a.out.join(OUTPUT)).map_err(data)?;
    write_pretty(&a.out.join(REPORT), &reports)?;

    let mut m = Manifest::new("ingest", json!({ "specs": specs }), None);
    for (input, spec) in a.inputs.iter().zip(&a.specs) {
        m = m.input(input)?.input(spec)?;
    }
    m.write(&a.out, &[OUTPUT, REPORT])?;
    let dropped: usize = reports.iter().map(|r| r.dropped_dialogues.len()).sum();
    println!(
        "ingest: {} dialogues from {} files ({dropped} dropped)",
        dialogues.len(),
        a.inputs.len()
    );
    Ok(())
}
