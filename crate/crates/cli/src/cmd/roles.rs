use rayon::prelude::*;
use serde_json::json;

use dialsum_core::corpus::{save_any, Corpus, Dialogue};
use dialsum_core::roles::{assign_role_group, NamePool};

use super::{base_name, load};
use crate::manifest::{ensure_dir, Manifest};
use crate::{data, CliError, RolesArgs};

pub const OUTPUT: &str = "roles.jsonl";

pub fn run(a: RolesArgs) -> Result<(), CliError> {
    let pool = match &a.pool {
        Some(p) => NamePool::from_file(p).map_err(data)?,
        None => NamePool::shipped(),
    };
    ensure_dir(&a.out)?;
    let corpus = load(&a.input)?;
    let assign = |d: &Dialogue| assign_role_group(d, &pool, a.seed, a.force).map_err(data);
    // Only the role table changes; turns and summaries are left as they are.
    let out = match corpus {
        Corpus::Dialogues(ds) => {
            Corpus::Dialogues(ds.par_iter().map(assign).collect::<Result<_, _>>()?)
        }
        Corpus::Parallel(ps) => Corpus::Parallel(
            ps.into_par_iter()
                .map(|mut p| {
                    p.dialogue = assign(&p.dialogue)?;
                    Ok(p)
                })
                .collect::<Result<_, CliError>>()?,
        ),
    };
    save_any(&out, &a.out.join(OUTPUT)).map_err(data)?;

    let config = json!({
        "pool": a.pool.as_deref().map_or("bundled".to_string(), base_name),
        "pool_size": pool.len(),
        "force": a.force,
    });
    let mut m = Manifest::new("roles", config, Some(a.seed)).input(&a.input)?;
    if let Some(p) = &a.pool {
        m = m.input(p)?;
    }
    m.write(&a.out, &[OUTPUT])?;
    println!("roles: {} dialogues", out.len());
    Ok(())
}
