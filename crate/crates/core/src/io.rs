//! Text formats: limit functions, limit vectors, partitions and word files.
//! Rationals are `"num/den"` strings in lowest terms.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::limits::{LimitFn, LimitVector, Piecewise};
use crate::poly::Polynomial;
use crate::regularity::IntervalPartition;
use crate::scalar::{format_rational, parse_rational};
use crate::words::{Alphabet, Word};
use crate::Rational;

#[derive(Serialize, Deserialize)]
struct PieceJson {
    coeffs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LimitJson {
    breakpoints: Vec<String>,
    pieces: Vec<PieceJson>,
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    alphabet: Vec<String>,
    breakpoints: Vec<String>,
    components: Vec<Vec<PieceJson>>,
}

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    breakpoints: Vec<String>,
}

fn parse_all(values: &[String], what: &str) -> Result<Vec<Rational>> {
    values
        .iter()
        .enumerate()
        .map(|(i, s)| parse_rational(s).map_err(|e| Error::Parse(format!("{what}[{i}]: {e}"))))
        .collect()
}

fn pieces_json(pieces: &[Polynomial<Rational>]) -> Vec<PieceJson> {
    pieces
        .iter()
        .map(|p| PieceJson {
            coeffs: if p.is_zero() {
                vec!["0".into()]
            } else {
                p.coeffs().iter().map(format_rational).collect()
            },
        })
        .collect()
}

fn pieces_from_json(pieces: &[PieceJson], what: &str) -> Result<Vec<Polynomial<Rational>>> {
    pieces
        .iter()
        .enumerate()
        .map(|(i, p)| parse_all(&p.coeffs, &format!("{what}[{i}].coeffs")).map(Polynomial::new))
        .collect()
}

fn from_value<T: for<'de> Deserialize<'de>>(value: &Value, what: &str) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

/// `{"breakpoints": [...], "pieces": [{"coeffs": [...]}, ...]}`, ascending degree.
pub fn limit_to_json(f: &LimitFn<Rational>) -> Value {
    serde_json::to_value(LimitJson {
        breakpoints: f.breakpoints().iter().map(format_rational).collect(),
        pieces: pieces_json(f.pieces()),
    })
    .expect("serializable")
}

pub fn limit_from_json(value: &Value) -> Result<LimitFn<Rational>> {
    let raw: LimitJson = from_value(value, "limit function")?;
    LimitFn::from_parts(
        parse_all(&raw.breakpoints, "breakpoints")?,
        pieces_from_json(&raw.pieces, "pieces")?,
    )
}

/// Like [`limit_to_json`] with an `alphabet` and one piece list per letter.
pub fn vector_to_json(f: &LimitVector<Rational>) -> Value {
    let k = f.alphabet().size();
    serde_json::to_value(VectorJson {
        alphabet: f.alphabet().symbols().to_vec(),
        breakpoints: f.breakpoints().iter().map(format_rational).collect(),
        components: (0..k)
            .map(|a| pieces_json(f.component(a as u8).pieces()))
            .collect(),
    })
    .expect("serializable")
}

pub fn vector_from_json(value: &Value) -> Result<LimitVector<Rational>> {
    let raw: VectorJson = from_value(value, "limit vector")?;
    let alphabet = Alphabet::new(raw.alphabet)?;
    let breaks = parse_all(&raw.breakpoints, "breakpoints")?;
    let components = raw
        .components
        .iter()
        .enumerate()
        .map(|(a, c)| {
            Piecewise::new(
                breaks.clone(),
                pieces_from_json(c, &format!("components[{a}]"))?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    LimitVector::new(alphabet, components)
}

/// A binary limit function or a `k`-letter limit vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Limit {
    Binary(LimitFn<Rational>),
    Vector(LimitVector<Rational>),
}

impl Limit {
    pub fn from_json(value: &Value) -> Result<Self> {
        if value.get("components").is_some() {
            vector_from_json(value).map(Limit::Vector)
        } else {
            limit_from_json(value).map(Limit::Binary)
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Limit::Binary(f) => limit_to_json(f),
            Limit::Vector(f) => vector_to_json(f),
        }
    }

    pub fn to_vector(&self) -> LimitVector<Rational> {
        match self {
            Limit::Binary(f) => f.to_vector(),
            Limit::Vector(f) => f.clone(),
        }
    }
}

pub fn partition_to_json(p: &IntervalPartition<Rational>) -> Value {
    serde_json::to_value(PartitionJson {
        breakpoints: p.breakpoints().iter().map(format_rational).collect(),
    })
    .expect("serializable")
}

pub fn partition_from_json(value: &Value) -> Result<IntervalPartition<Rational>> {
    let raw: PartitionJson = from_value(value, "partition")?;
    IntervalPartition::new(parse_all(&raw.breakpoints, "breakpoints")?)
}

/// Parses JSON text, reporting the line of a syntax error.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}: {e}", e.line())))
}

/// A word file: an optional JSON header line `{"alphabet": [...]}` followed
/// by the symbols. Without a header, `default` is used.
pub fn read_word(text: &str, default: &Alphabet) -> Result<Word> {
    let mut alphabet = default.clone();
    let mut body_start = 0;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    if let Some((i, first)) = lines.clone().next() {
        if first.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct Header {
                alphabet: Vec<String>,
            }
            let header: Header = serde_json::from_str(first)
                .map_err(|e| Error::Parse(format!("line {}: bad header: {e}", i + 1)))?;
            alphabet = Alphabet::new(header.alphabet)?;
            lines.next();
            body_start = i + 1;
        }
    }
    let mut letters = Vec::new();
    for (i, line) in text.lines().enumerate().skip(body_start) {
        let part = Word::parse(line, &alphabet)
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        letters.extend_from_slice(part.letters());
    }
    Word::new(alphabet, letters)
}

/// Header line plus the word on one line.
pub fn write_word(w: &Word) -> String {
    let header = serde_json::json!({ "alphabet": w.alphabet().symbols() });
    format!("{header}\n{w}\n")
}
