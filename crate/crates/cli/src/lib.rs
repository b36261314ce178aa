//! Command-line front end: every job reads its inputs, runs one estimator
//! from `dlab-core`, and writes `record.json`, `table.csv` and `plot.csv`
//! into the output directory. Records are cached under a SHA-256 of the
//! canonical input and the resolved configuration.

pub mod args;
pub mod error;
pub mod jobs;
pub mod record;
pub mod report;

use args::{Cli, Command};
use error::Result;
use std::fmt::Write as _;

/// Runs one command and returns the text for standard output.
pub fn execute(cli: &Cli) -> Result<String> {
    let outcome = match &cli.command {
        Command::Ingest { input } => {
            let d = jobs::ingest(input)?;
            let space = d.space();
            return Ok(format!(
                "{}\n",
                serde_json::json!({
                    "kind": if space.is_scalar() { "scalar" } else { "vector" },
                    "dim": space.dim(),
                    "q": if space.is_scalar() { serde_json::Value::Null } else { serde_json::json!(space.q()) },
                    "n_max": d.n_max(),
                    "support": d.support_len(),
                })
            ));
        }
        Command::Report(a) => return report::run(a),
        Command::Estimate(a) => jobs::estimate(a)?,
        Command::Weak(a) => jobs::weak(a)?,
        Command::Unconditional(a) => jobs::unconditional(a)?,
        Command::Strip(a) => jobs::strip(a)?,
        Command::Eco(a) => jobs::eco(a)?,
        Command::Weissler(a) => jobs::weissler(a)?,
        Command::Moin(a) => jobs::moin(a)?,
    };
    if outcome.cache_hit {
        eprintln!("cache hit {}", outcome.record.content_hash);
    }
    let r = &outcome.record;
    let mut out = String::new();
    let _ = writeln!(out, "{} seed={} hash={}", r.command, r.seed, r.content_hash);
    for q in &r.quantities {
        let _ = write!(out, "  {} = {}", q.label, q.estimate);
        if q.standard_error > 0.0 {
            let _ = write!(out, " (se {})", q.standard_error);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "  wrote {}", outcome.out_dir.join("record.json").display());
    Ok(out)
}
