//! Batch experiments: tail bounds, tester curves and convergence traces.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use seqlimit::io::limit_from_json;
use seqlimit::limits::{d_box, LimitFn};
use seqlimit::rng::{SeededStream, PRNG_ID};
use seqlimit::sampling::{f_random_word, tail_experiment_dbox};
use seqlimit::scalar::{format_rational, parse_rational, ratio_to_f64};
use seqlimit::testing::{completeness_soundness_curve, ForbiddenFamily};
use seqlimit::words::Alphabet;
use seqlimit::Rational;

use crate::commands::{read_text, Doc};
use crate::output::{csv_table, render_json};
use crate::{CliError, CliResult, Settings};

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// JSON spec {"experiments": [...]}.
    spec: PathBuf,
    /// Also write <name>.json and <name>.csv per experiment here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Spec {
    #[serde(default)]
    experiments: Vec<Entry>,
}

#[derive(Deserialize)]
struct Entry {
    name: String,
    #[serde(flatten)]
    kind: Kind,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Kind {
    /// `P(d_□ ≥ 8a)` against `4n e^{−2a²n}` for each `n`.
    Tail {
        #[serde(default)]
        limit: Option<Value>,
        n: Vec<usize>,
        a: String,
        trials: usize,
    },
    /// Acceptance fraction by distance and sample length.
    TesterCurve {
        forbid: String,
        n: usize,
        lens: Vec<usize>,
        distances: Vec<String>,
        trials: usize,
    },
    /// Median and mean `d_□(f_{sub(n,f)}, f)` for each `n`.
    Convergence {
        #[serde(default)]
        limit: Option<Value>,
        n: Vec<usize>,
        trials: usize,
    },
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

fn limit_or_half(limit: &Option<Value>) -> seqlimit::Result<LimitFn<Rational>> {
    match limit {
        Some(v) => limit_from_json(v),
        None => LimitFn::constant(Rational::new(1.into(), 2.into())),
    }
}

fn run_entry(kind: &Kind, stream: &SeededStream) -> seqlimit::Result<Table> {
    match kind {
        Kind::Tail {
            limit,
            n,
            a,
            trials,
        } => {
            let f = limit_or_half(limit)?;
            let av = parse_rational(a)?;
            let rows = n
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let r = tail_experiment_dbox(&f, n, &av, *trials, &stream.substream(i as u64))?;
                    Ok(vec![
                        json!(n),
                        json!(format_rational(&av)),
                        json!(r.empirical),
                        json!(r.bound),
                        json!(r.allowed),
                        json!(r.holds()),
                    ])
                })
                .collect::<seqlimit::Result<Vec<_>>>()?;
            Ok(Table {
                columns: vec!["n", "a", "empirical", "bound", "allowed", "holds"],
                rows,
            })
        }
        Kind::TesterCurve {
            forbid,
            n,
            lens,
            distances,
            trials,
        } => {
            let family = ForbiddenFamily::parse(forbid, &Alphabet::binary())?;
            let distances = distances
                .iter()
                .map(|d| parse_rational(d))
                .collect::<seqlimit::Result<Vec<_>>>()?;
            let rows =
                completeness_soundness_curve(&family, *n, lens, &distances, *trials, stream)?
                    .into_iter()
                    .map(|r| {
                        vec![
                            json!(r.target),
                            json!(r.sample_len),
                            r.accept_fraction.map_or(Value::Null, |x| json!(x)),
                            json!(r.note),
                        ]
                    })
                    .collect();
            Ok(Table {
                columns: vec!["distance", "ell", "accept_fraction", "note"],
                rows,
            })
        }
        Kind::Convergence { limit, n, trials } => {
            let f = limit_or_half(limit)?;
            let rows = n
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let s = stream.substream(i as u64);
                    let mut d = (0..*trials as u64)
                        .into_par_iter()
                        .map(|t| -> seqlimit::Result<f64> {
                            let w = f_random_word(&f, n, &s.substream(t))?;
                            Ok(ratio_to_f64(&d_box(&LimitFn::from_word(&w)?, &f).value))
                        })
                        .collect::<seqlimit::Result<Vec<_>>>()?;
                    d.sort_by(f64::total_cmp);
                    let median = if d.is_empty() {
                        f64::NAN
                    } else {
                        d[d.len() / 2]
                    };
                    let mean = d.iter().sum::<f64>() / d.len().max(1) as f64;
                    Ok(vec![json!(n), json!(median), json!(mean)])
                })
                .collect::<seqlimit::Result<Vec<_>>>()?;
            Ok(Table {
                columns: vec!["n", "median_dbox", "mean_dbox"],
                rows,
            })
        }
    }
}

pub fn run(args: ExperimentArgs, s: &Settings) -> CliResult<Doc> {
    let text = read_text(&args.spec)?;
    let spec: Spec = serde_json::from_str(&text).map_err(|e| {
        CliError::Domain(format!("{}: line {}: {e}", args.spec.display(), e.line()))
    })?;
    let root = SeededStream::new(s.seed);
    let results: Vec<(String, Result<Table, String>)> = spec
        .experiments
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            (
                e.name.clone(),
                run_entry(&e.kind, &root.substream(i as u64)).map_err(|err| err.to_string()),
            )
        })
        .collect();
    let mut entries = Vec::new();
    for (name, result) in &results {
        let entry = match result {
            Ok(t) => json!({"name": name, "columns": t.columns, "rows": t.rows}),
            Err(msg) => json!({"name": name, "error": msg}),
        };
        if let Some(dir) = &args.out {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Domain(format!("{}: {e}", dir.display())))?;
            let write = |file: PathBuf, body: String| {
                std::fs::write(&file, body)
                    .map_err(|e| CliError::Domain(format!("{}: {e}", file.display())))
            };
            write(dir.join(format!("{name}.json")), render_json(&entry))?;
            if let Ok(t) = result {
                write(
                    dir.join(format!("{name}.csv")),
                    csv_table(&t.columns, &t.rows),
                )?;
            }
        }
        entries.push(entry);
    }
    Ok(Doc::json(
        json!({"seed": s.seed, "prng": PRNG_ID, "experiments": entries}),
    ))
}
