use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use dialsum_core::corpus::{save_any, write_json_lines, Corpus, ParallelExample};
use dialsum_core::roles::{augment_role_replace, random_role_map, NamePool, RoleError, RoleMap};

use super::{base_name, load, load_toml};
use crate::manifest::{ensure_dir, Manifest};
use crate::{data, usage, AugmentArgs, CliError};

pub const OUTPUT: &str = "augmented.jsonl";
pub const SKIPPED: &str = "skipped.jsonl";
pub const ID_SUFFIX: &str = "-aug";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    map: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct Skipped {
    id: String,
    reason: String,
}

enum Source {
    Fixed(RoleMap),
    Random(NamePool),
}

fn augment_one(
    ex: &ParallelExample,
    src: &Source,
    seed: u64,
) -> Result<ParallelExample, RoleError> {
    let map = match src {
        Source::Fixed(m) => m.clone(),
        Source::Random(pool) => random_role_map(ex, pool, seed)?,
    };
    let mut out = augment_role_replace(ex, &map)?;
    out.dialogue.id = format!("{}{ID_SUFFIX}", ex.dialogue.id);
    Ok(out)
}

pub fn run(a: AugmentArgs) -> Result<(), CliError> {
    let src = match (&a.map, &a.pool) {
        (Some(p), _) => {
            let file: MapFile = load_toml(p)?;
            let map = RoleMap::new(file.map);
            map.validate()
                .map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Source::Fixed(map)
        }
        (None, Some(p)) => Source::Random(NamePool::from_file(p).map_err(data)?),
        (None, None) => Source::Random(NamePool::shipped()),
    };
    ensure_dir(&a.out)?;
    let corpus = load(&a.input)?;
    let (examples, parallel) = match corpus {
        Corpus::Dialogues(ds) => (
            ds.into_iter()
                .map(|d| ParallelExample::new(d, Vec::new()))
                .collect::<Vec<_>>(),
            false,
        ),
        Corpus::Parallel(ps) => (ps, true),
    };
    let results: Vec<Result<ParallelExample, RoleError>> = examples
        .par_iter()
        .map(|ex| augment_one(ex, &src, a.seed))
        .collect();

    let mut out = if a.keep_original {
        examples.clone()
    } else {
        Vec::new()
    };
    let mut skipped = Vec::new();
    for (ex, r) in examples.iter().zip(results) {
        match r {
            Ok(aug) => out.push(aug),
            Err(e) => skipped.push(Skipped {
                id: ex.dialogue.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let written = out.len();
    let corpus = if parallel {
        Corpus::Parallel(out)
    } else {
        Corpus::Dialogues(out.into_iter().map(|p| p.dialogue).collect())
    };
    save_any(&corpus, &a.out.join(OUTPUT)).map_err(data)?;
    write_json_lines(&skipped, &a.out.join(SKIPPED)).map_err(data)?;

    let config = match (&src, &a.map, &a.pool) {
        (Source::Fixed(m), Some(p), _) => json!({ "map_file": base_name(p), "map": m.pairs }),
        (_, _, Some(p)) => json!({ "pool": base_name(p) }),
        _ => json!({ "pool": "bundled" }),
    };
    let config =
        json!({ "source": config, "keep_original": a.keep_original, "id_suffix": ID_SUFFIX });
    let seed = matches!(src, Source::Random(_)).then_some(a.seed);
    let mut m = Manifest::new("augment", config, seed).input(&a.input)?;
    if let Some(p) = a.map.as_ref().or(a.pool.as_ref()) {
        m = m.input(p)?;
    }
    m.write(&a.out, &[OUTPUT, SKIPPED])?;
    println!(
        "augment: wrote {written} examples, skipped {}",
        skipped.len()
    );
    Ok(())
}
