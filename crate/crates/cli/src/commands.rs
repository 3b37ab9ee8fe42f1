use std::path::Path;

use clap::{Args, Subcommand};
use serde_json::{json, Map, Value};

use seqlimit::forcibility::{
    check_forced, forcibility_certificate, ForcingVerdict, DEFAULT_PATTERN_CAP,
};
use seqlimit::io::{self, Limit};
use seqlimit::limits::{
    d1_fn, d_box, limit_density_table, prefix_sup_dist, t_density, t_density_vector, LimitFn,
};
use seqlimit::permutons::{
    d_box_grid, pattern_count_perm, perm_density, t_grid, t_grid_monte_carlo, GridMeasure,
    Permutation, EXACT_PATTERN_CAP,
};
use seqlimit::regularity::{weak_regularity, IntervalPartition};
use seqlimit::rng::{SeededStream, PRNG_ID};
use seqlimit::sampling::{f_random_word, f_random_word_vector, tail_experiment_dbox};
use seqlimit::scalar::{format_rational, parse_rational, ratio_to_f64};
use seqlimit::testing::{completeness_soundness_curve, d1_to_family, run_tester, ForbiddenFamily};
use seqlimit::uniformity::{discrepancy, quasirandomness_report};
use seqlimit::words::{density_table, pattern_density, Alphabet, Word, DEFAULT_TABLE_CAP};
use seqlimit::Rational;

use crate::output::{csv_table, flatten_csv, render_json};
use crate::{CliError, CliResult, Format, Settings};

/// A command's result: JSON, plus a dedicated CSV layout when one exists.
pub struct Doc {
    pub json: Value,
    pub csv: Option<String>,
}

impl Doc {
    pub fn json(json: Value) -> Self {
        Self { json, csv: None }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => render_json(&self.json),
            Format::Csv => self.csv.clone().unwrap_or_else(|| flatten_csv(&self.json)),
        }
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: seqlimit::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn rational(text: &str, flag: &str) -> CliResult<Rational> {
    parse_rational(text).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn alphabet(spec: Option<&str>) -> CliResult<Alphabet> {
    match spec {
        None => Ok(Alphabet::binary()),
        Some(s) if s.contains(',') => Ok(Alphabet::new(s.split(',').map(str::trim))?),
        Some(s) => Ok(Alphabet::from_chars(s)?),
    }
}

/// A literal word, or a path to a word file.
fn load_word(arg: &str, alpha: &Alphabet) -> CliResult<Word> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = read_text(path)?;
        in_file(path, io::read_word(&text, alpha))
    } else {
        Ok(Word::parse(arg, alpha)?)
    }
}

fn load_json(path: &Path) -> CliResult<Value> {
    let text = read_text(path)?;
    in_file(path, io::parse_json(&text))
}

fn load_limit(path: &Path) -> CliResult<Limit> {
    let value = load_json(path)?;
    in_file(path, Limit::from_json(&value))
}

fn load_binary_limit(path: &Path) -> CliResult<LimitFn<Rational>> {
    match load_limit(path)? {
        Limit::Binary(f) => Ok(f),
        Limit::Vector(_) => Err(CliError::Domain(format!(
            "{}: expected a binary limit function",
            path.display()
        ))),
    }
}

fn rat(q: &Rational) -> Value {
    Value::String(format_rational(q))
}

fn randomized(map: &mut Map<String, Value>, settings: &Settings, trials: usize) {
    map.insert("seed".into(), json!(settings.seed));
    map.insert("prng".into(), json!(PRNG_ID));
    map.insert("trials".into(), json!(trials));
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Word file.
    file: Option<std::path::PathBuf>,
    /// Literal word or word file.
    #[arg(long)]
    word: Option<String>,
    /// Density at which to report the discrepancy.
    #[arg(long)]
    d: Option<String>,
    /// Largest frequency for exponential sums.
    #[arg(long, default_value_t = 8)]
    kmax: usize,
}

pub fn analyze(a: AnalyzeArgs, _s: &Settings) -> CliResult<Doc> {
    let alpha = Alphabet::binary();
    let w = match (&a.file, &a.word) {
        (Some(p), None) => load_word(&p.to_string_lossy(), &alpha)?,
        (None, Some(text)) => load_word(text, &alpha)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of a word file or --word".into(),
            ))
        }
    };
    let diag = quasirandomness_report(&w, a.kmax)?;
    let u = &diag.uniformity;
    let mut doc = json!({
        "n": u.n,
        "best": {
            "d": rat(&u.d),
            "discrepancy": rat(&u.discrepancy),
            "witness": [u.witness.start, u.witness.end],
        },
        "reference": {"d": rat(&u.reference_d), "discrepancy": rat(&u.reference_discrepancy)},
        "residuals": diag.residuals.iter().map(|(p, r)| (p.to_string(), rat(r))).collect::<Map<_, _>>(),
        "cayley_counts": diag.cayley_counts.iter().map(|(p, c)| (p.to_string(), json!(c.to_string()))).collect::<Map<_, _>>(),
        "exponential_sums": diag.exponential_sums.iter().map(|(k, z)| json!({"k": k, "re": z.re, "im": z.im, "abs": z.norm()})).collect::<Vec<_>>(),
    });
    if let Some(d) = &a.d {
        let d = rational(d, "d")?;
        let (raw, witness) = discrepancy(&w, &d)?;
        let normalized = raw / Rational::from_integer(w.len().into());
        doc["at_d"] = json!({"d": rat(&d), "discrepancy": rat(&normalized), "witness": [witness.start, witness.end]});
    }
    let rows: Vec<Vec<Value>> = diag
        .residuals
        .iter()
        .zip(&diag.cayley_counts)
        .map(|((p, r), (_, c))| vec![json!(p.to_string()), rat(r), json!(c.to_string())])
        .collect();
    Ok(Doc {
        json: doc,
        csv: Some(csv_table(&["pattern", "residual", "cayley_count"], &rows)),
    })
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    /// Literal word or word file.
    #[arg(long, conflicts_with = "limit")]
    word: Option<String>,
    /// Limit function or limit vector JSON.
    #[arg(long)]
    limit: Option<std::path::PathBuf>,
    /// Single pattern, e.g. "010".
    #[arg(long, conflicts_with = "len")]
    pattern: Option<String>,
    /// Tabulate all patterns of this length.
    #[arg(long)]
    len: Option<usize>,
    /// Letters as a character string ("abc") or comma list.
    #[arg(long)]
    alphabet: Option<String>,
}

pub fn density(a: DensityArgs, _s: &Settings) -> CliResult<Doc> {
    let alpha = alphabet(a.alphabet.as_deref())?;
    match (&a.word, &a.limit, &a.pattern, a.len) {
        (Some(w), None, Some(p), None) => {
            let w = load_word(w, &alpha)?;
            let u = Word::parse(p, w.alphabet())?;
            let t = pattern_density(&w, &u)?;
            Ok(Doc::json(json!({"t": rat(&t)})))
        }
        (Some(w), None, None, Some(len)) => {
            let w = load_word(w, &alpha)?;
            let table = density_table(&w, len, DEFAULT_TABLE_CAP)?;
            Ok(Doc {
                json: table.to_json(),
                csv: Some(table.to_csv()),
            })
        }
        (None, Some(path), Some(p), None) => {
            let t = match load_limit(path)? {
                Limit::Binary(f) => t_density(&Word::parse(p, &Alphabet::binary())?, &f)?,
                Limit::Vector(f) => t_density_vector(&Word::parse(p, f.alphabet())?, &f)?,
            };
            Ok(Doc::json(json!({"t": rat(&t)})))
        }
        (None, Some(path), None, Some(len)) => {
            let f = load_limit(path)?.to_vector();
            let rows: Vec<Vec<Value>> = limit_density_table(&f, len)
                .iter()
                .map(|(u, t)| vec![json!(u.to_string()), rat(t)])
                .collect();
            let json = Value::Array(
                rows.iter()
                    .map(|r| json!({"pattern": r[0], "t": r[1]}))
                    .collect(),
            );
            Ok(Doc {
                json,
                csv: Some(csv_table(&["pattern", "t"], &rows)),
            })
        }
        _ => Err(CliError::Usage(
            "give one of --word/--limit and one of --pattern/--len".into(),
        )),
    }
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    /// Interval distance (default).
    #[arg(long = "box", conflicts_with_all = ["l1", "prefix"])]
    #[allow(dead_code)]
    boxed: bool,
    /// ∫|f − g|.
    #[arg(long, conflicts_with = "prefix")]
    l1: bool,
    /// sup_b |∫_0^b (f − g)|.
    #[arg(long)]
    prefix: bool,
    /// Limit function JSON or binary word file.
    a: std::path::PathBuf,
    /// Same formats as A.
    b: std::path::PathBuf,
}

fn load_fn_or_word(path: &Path) -> CliResult<LimitFn<Rational>> {
    let text = read_text(path)?;
    let looks_limit = text.trim_start().starts_with('{') && text.contains("\"breakpoints\"");
    if looks_limit {
        load_binary_limit(path)
    } else {
        let w = in_file(path, io::read_word(&text, &Alphabet::binary()))?;
        in_file(path, LimitFn::from_word(&w))
    }
}

pub fn distance(a: DistanceArgs, _s: &Settings) -> CliResult<Doc> {
    let f = load_fn_or_word(&a.a)?;
    let g = load_fn_or_word(&a.b)?;
    let (metric, m) = if a.l1 {
        ("l1", d1_fn(&f, &g))
    } else if a.prefix {
        ("prefix", prefix_sup_dist(&f, &g))
    } else {
        ("box", d_box(&f, &g))
    };
    Ok(Doc::json(json!({
        "metric": metric,
        "value": rat(&m.value),
        "exact": m.exact,
        "approx": ratio_to_f64(&m.value),
    })))
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Limit function or limit vector JSON.
    #[arg(long)]
    limit: std::path::PathBuf,
    /// Word length.
    #[arg(long)]
    n: usize,
    /// Number of words, or of tail-experiment trials with --a.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Tail parameter: report P(d_box ≥ 8a) against 4n·exp(−2a²n).
    #[arg(long)]
    a: Option<String>,
}

pub fn sample(a: SampleArgs, s: &Settings) -> CliResult<Doc> {
    let limit = load_limit(&a.limit)?;
    let stream = SeededStream::new(s.seed);
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    if let Some(text) = &a.a {
        let Limit::Binary(f) = limit else {
            return Err(CliError::Domain(
                "tail experiments need a binary limit function".into(),
            ));
        };
        let av = rational(text, "a")?;
        let report = tail_experiment_dbox(&f, a.n, &av, a.trials, &stream)?;
        let mut doc = serde_json::to_value(&report).expect("serializable");
        doc["n"] = json!(a.n);
        doc["a"] = rat(&av);
        doc["holds"] = json!(report.holds());
        return Ok(Doc::json(doc));
    }
    let words = (0..a.trials as u64)
        .map(|i| {
            let sub = stream.substream(i);
            match &limit {
                Limit::Binary(f) => f_random_word(f, a.n, &sub),
                Limit::Vector(f) => f_random_word_vector(f, a.n, &sub),
            }
            .map(|w| w.to_string())
        })
        .collect::<seqlimit::Result<Vec<_>>>()?;
    let mut doc = Map::new();
    doc.insert("n".into(), json!(a.n));
    doc.insert("words".into(), json!(words));
    randomized(&mut doc, s, a.trials);
    let rows: Vec<Vec<Value>> = words
        .iter()
        .enumerate()
        .map(|(i, w)| vec![json!(i), json!(w)])
        .collect();
    Ok(Doc {
        json: Value::Object(doc),
        csv: Some(csv_table(&["trial", "word"], &rows)),
    })
}

#[derive(Args, Debug)]
pub struct RegularizeArgs {
    /// Limit function JSON.
    #[arg(long)]
    limit: std::path::PathBuf,
    /// Target box error, as a decimal or fraction.
    #[arg(long)]
    eps: String,
    /// Initial partition JSON {"breakpoints": [...]}.
    #[arg(long)]
    init: Option<std::path::PathBuf>,
}

pub fn regularize(a: RegularizeArgs, _s: &Settings) -> CliResult<Doc> {
    let f = load_binary_limit(&a.limit)?;
    let eps = rational(&a.eps, "eps")?;
    let p0 = match &a.init {
        Some(path) => {
            let v = load_json(path)?;
            in_file(path, io::partition_from_json(&v))?
        }
        None => IntervalPartition::trivial(),
    };
    let r = weak_regularity(&f, &eps, &p0)?;
    Ok(Doc::json(json!({
        "breakpoints": r.partition.breakpoints().iter().map(rat).collect::<Vec<_>>(),
        "values": r.approximation.pieces().iter().map(|p| rat(&p.coeff(0))).collect::<Vec<_>>(),
        "box_error": rat(&r.box_error.value),
        "box_error_exact": r.box_error.exact,
        "iterations": r.iterations,
        "energy_trace": r.energy_trace.iter().map(rat).collect::<Vec<_>>(),
    })))
}

#[derive(Args, Debug)]
pub struct TestArgs {
    /// Literal word or word file (single run).
    #[arg(long)]
    word: Option<String>,
    /// Comma-separated forbidden patterns.
    #[arg(long)]
    forbid: String,
    /// Sample length ℓ (single run).
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Completeness/soundness curve over words of this length.
    #[arg(long, conflicts_with_all = ["word", "len"])]
    curve_n: Option<usize>,
    /// Comma-separated sample lengths for the curve.
    #[arg(long, requires = "curve_n")]
    lens: Option<String>,
    /// Comma-separated target distances for the curve.
    #[arg(long, requires = "curve_n")]
    distances: Option<String>,
    /// Letters as a character string or comma list (default binary).
    #[arg(long)]
    alphabet: Option<String>,
}

fn list<T>(text: &str, flag: &str, parse: impl Fn(&str) -> Option<T>) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| CliError::Usage(format!("--{flag}: bad entry {s:?}"))))
        .collect()
}

pub fn test(a: TestArgs, s: &Settings) -> CliResult<Doc> {
    let alpha = alphabet(a.alphabet.as_deref())?;
    let family = ForbiddenFamily::parse(&a.forbid, &alpha)?;
    let stream = SeededStream::new(s.seed);
    if let Some(n) = a.curve_n {
        let lens = list(a.lens.as_deref().unwrap_or("2,10"), "lens", |x| {
            x.parse().ok()
        })?;
        let distances = list(
            a.distances.as_deref().unwrap_or("0,1/10,1/4"),
            "distances",
            |x| parse_rational(x).ok(),
        )?;
        let rows = completeness_soundness_curve(&family, n, &lens, &distances, a.trials, &stream)?;
        let table: Vec<Vec<Value>> = rows
            .iter()
            .map(|r| {
                vec![
                    json!(r.target),
                    json!(r.sample_len),
                    r.accept_fraction.map_or(Value::Null, |x| json!(x)),
                    json!(r.achieved),
                    json!(r.note),
                ]
            })
            .collect();
        let mut doc = Map::new();
        doc.insert(
            "rows".into(),
            serde_json::to_value(&rows).expect("serializable"),
        );
        doc.insert("n".into(), json!(n));
        randomized(&mut doc, s, a.trials);
        return Ok(Doc {
            json: Value::Object(doc),
            csv: Some(csv_table(
                &["distance", "ell", "accept_fraction", "achieved", "note"],
                &table,
            )),
        });
    }
    let (Some(word), Some(len)) = (&a.word, a.len) else {
        return Err(CliError::Usage(
            "give --word and --len, or --curve-n".into(),
        ));
    };
    let w = load_word(word, &alpha)?;
    let report = run_tester(&w, len, a.trials, &family, &stream)?;
    let mut doc = serde_json::to_value(&report).expect("serializable");
    if let Ok(d) = d1_to_family(&w, &family) {
        doc["nearest_member"] = json!(d.witness.to_string());
    }
    Ok(Doc::json(doc))
}

#[derive(Args, Debug)]
pub struct ForcibilityArgs {
    /// Limit function JSON.
    #[arg(long)]
    limit: std::path::PathBuf,
    /// Candidate limit to compare against the certificate.
    #[arg(long)]
    check: Option<std::path::PathBuf>,
    /// Largest certificate word length.
    #[arg(long, default_value_t = DEFAULT_PATTERN_CAP)]
    cap: usize,
}

pub fn forcibility(a: ForcibilityArgs, _s: &Settings) -> CliResult<Doc> {
    let f = load_binary_limit(&a.limit)?;
    let cert = forcibility_certificate(&f, a.cap)?;
    let (residual, verdict) = match &a.check {
        Some(path) => {
            let h = load_binary_limit(path)?;
            let verdict = match check_forced(&f, &h, &cert) {
                ForcingVerdict::Distinguished {
                    word,
                    target,
                    candidate,
                } => json!({
                    "kind": "distinguished", "word": word.to_string(), "target": rat(&target), "candidate": rat(&candidate),
                }),
                ForcingVerdict::Indistinguishable { d1, exact } => json!({
                    "kind": "indistinguishable", "d1": rat(&d1), "exact": exact,
                }),
            };
            (cert.residual_for(&h), Some(verdict))
        }
        None => (cert.residual_for(&f), None),
    };
    let mut doc = serde_json::to_value(cert.summary(Some(&residual))).expect("serializable");
    if let Some(v) = verdict {
        doc["verdict"] = v;
    }
    Ok(Doc::json(doc))
}

#[derive(Subcommand, Debug)]
pub enum PermutonCommand {
    /// Density of a pattern in a permutation or grid permuton.
    Density {
        /// Permutation (one-line, e.g. "2,1,4,3") or file.
        #[arg(long, conflicts_with = "measure")]
        perm: Option<String>,
        /// Grid measure JSON.
        #[arg(long)]
        measure: Option<std::path::PathBuf>,
        /// Pattern in one-line notation.
        #[arg(long)]
        pattern: String,
        /// Monte Carlo samples for patterns above the exact cap.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Box distance between two grid measures or permutation files.
    Distance {
        /// Grid measure JSON or permutation file.
        a: std::path::PathBuf,
        b: std::path::PathBuf,
    },
}

fn load_perm(arg: &str) -> CliResult<Permutation> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = read_text(path)?;
        in_file(path, Permutation::parse(&text))
    } else {
        Ok(Permutation::parse(arg)?)
    }
}

fn load_measure(path: &Path) -> CliResult<GridMeasure> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let v = in_file(path, io::parse_json(&text))?;
        in_file(path, GridMeasure::from_json(&v))
    } else {
        Ok(GridMeasure::mu_sigma(&in_file(
            path,
            Permutation::parse(&text),
        )?))
    }
}

pub fn permuton(c: PermutonCommand, s: &Settings) -> CliResult<Doc> {
    match c {
        PermutonCommand::Density {
            perm,
            measure,
            pattern,
            samples,
        } => {
            let tau = Permutation::parse(&pattern)?;
            match (perm, measure) {
                (Some(p), None) => {
                    let sigma = load_perm(&p)?;
                    let count = if sigma.len() >= tau.len() {
                        pattern_count_perm(&sigma, &tau)?
                    } else {
                        0
                    };
                    Ok(Doc::json(json!({
                        "pattern": tau.to_string(),
                        "count": count.to_string(),
                        "t": rat(&perm_density(&tau, &sigma)?),
                    })))
                }
                (None, Some(path)) => {
                    let mu = load_measure(&path)?;
                    if tau.len() <= EXACT_PATTERN_CAP {
                        Ok(Doc::json(
                            json!({"pattern": tau.to_string(), "t": rat(&t_grid(&tau, &mu)?)}),
                        ))
                    } else {
                        let mc =
                            t_grid_monte_carlo(&tau, &mu, samples, &SeededStream::new(s.seed))?;
                        let mut doc = Map::new();
                        doc.insert("pattern".into(), json!(tau.to_string()));
                        doc.insert("estimate".into(), json!(mc.estimate));
                        doc.insert("half_width_99".into(), json!(mc.half_width_99));
                        randomized(&mut doc, s, samples);
                        Ok(Doc::json(Value::Object(doc)))
                    }
                }
                _ => Err(CliError::Usage(
                    "give exactly one of --perm or --measure".into(),
                )),
            }
        }
        PermutonCommand::Distance { a, b } => {
            let d = d_box_grid(&load_measure(&a)?, &load_measure(&b)?);
            Ok(Doc::json(
                json!({"metric": "box", "value": rat(&d), "approx": ratio_to_f64(&d)}),
            ))
        }
    }
}
