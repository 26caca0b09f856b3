use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use serde_json::json;

use dialsum_core::corpus::Corpus;
use dialsum_core::noise::{MixSource, Mixer, NoisingConfig, Task, TaskMix};

use super::{load, load_toml, to_value};
use crate::manifest::{ensure_dir, Manifest};
use crate::{data, CliError, NoiseArgs, DEFAULT_SEED};

pub const OUTPUT: &str = "pairs.jsonl";
const CHUNK: u64 = 4096;

pub fn run(a: NoiseArgs) -> Result<(), CliError> {
    let mut cfg: NoisingConfig = match &a.config {
        Some(p) => load_toml(p)?,
        None => NoisingConfig::default(),
    };
    let mut mix: TaskMix = match &a.mix {
        Some(p) => load_toml(p)?,
        None => TaskMix::denoising(DEFAULT_SEED),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
        mix.seed = s;
    }
    ensure_dir(&a.out)?;
    let corpus = load(&a.input)?;
    let source = match &corpus {
        Corpus::Dialogues(d) => MixSource::Dialogues(d),
        Corpus::Parallel(p) => MixSource::Parallel(p),
    };
    let count = a.count.unwrap_or(corpus.len() as u64);

    let path = a.out.join(OUTPUT);
    let file = File::create(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut per_task: BTreeMap<Task, u64> = BTreeMap::new();
    if count > 0 {
        let mixer = Mixer::new(source, &mix, &cfg).map_err(data)?;
        let mut start = 0;
        while start < count {
            let end = (start + CHUNK).min(count);
            for pair in mixer.generate(start..end) {
                *per_task.entry(pair.task).or_default() += 1;
                let line = serde_json::to_string(&pair.to_record()).map_err(data)?;
                writeln!(w, "{line}").map_err(data)?;
            }
            start = end;
        }
    }
    w.flush().map_err(data)?;
    drop(w);

    let config = json!({ "noising": to_value(&cfg), "mix": to_value(&mix), "count": count });
    Manifest::new("noise", config, Some(cfg.seed))
        .input(&a.input)?
        .write(&a.out, &[OUTPUT])?;
    let summary: Vec<String> = per_task.iter().map(|(t, n)| format!("{t}={n}")).collect();
    println!("noise: {count} pairs ({})", summary.join(", "));
    Ok(())
}
