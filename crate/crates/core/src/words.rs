//! Words over finite alphabets and exact subsequence statistics.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::poly::binomial;
use crate::rng::SeededStream;
use crate::scalar::format_rational;
use crate::Rational;

/// Default cap on the number of patterns in a [`DensityMap`].
pub const DEFAULT_TABLE_CAP: u128 = 1 << 20;

/// An ordered set of letter symbols. Letters are stored by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Arc<Vec<String>>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() || symbols.len() > 256 {
            return Err(invalid("alphabet must have between 1 and 256 letters"));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || symbols[..i].contains(s) {
                return Err(invalid(format!("bad or duplicate alphabet symbol {s:?}")));
            }
        }
        Ok(Self {
            symbols: Arc::new(symbols),
        })
    }

    /// `{0, 1}`.
    pub fn binary() -> Self {
        Self::from_chars("01").expect("static alphabet")
    }

    /// One symbol per character, e.g. `"abc"`.
    pub fn from_chars(chars: &str) -> Result<Self> {
        Self::new(chars.chars().map(String::from))
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, letter: u8) -> &str {
        &self.symbols[letter as usize]
    }

    pub fn index_of(&self, symbol: &str) -> Option<u8> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .map(|i| i as u8)
    }

    pub fn is_binary(&self) -> bool {
        self.symbols.len() == 2
    }

    fn single_chars(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::binary()
    }
}

/// A finite word. Letters are indices into the alphabet; for the binary
/// alphabet index 1 is the letter `1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    alphabet: Alphabet,
    letters: Vec<u8>,
}

impl Word {
    pub fn new(alphabet: Alphabet, letters: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l as usize >= alphabet.size()) {
            return Err(Error::UnknownLetter {
                letter: bad.to_string(),
                alphabet: alphabet.symbols().to_vec(),
            });
        }
        Ok(Self { alphabet, letters })
    }

    /// Binary word from a `0`/`1` string. Panics on other characters; use
    /// [`Word::parse`] for untrusted input.
    pub fn bits(text: &str) -> Self {
        Self::parse(text, &Alphabet::binary()).expect("binary literal")
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        Self::new(Alphabet::binary(), bits.to_vec())
    }

    /// Parses a word. Single-character alphabets read one symbol per
    /// character (whitespace ignored); otherwise symbols are separated by
    /// whitespace or commas.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let lookup = |sym: &str| {
            alphabet.index_of(sym).ok_or_else(|| Error::UnknownLetter {
                letter: sym.to_string(),
                alphabet: alphabet.symbols().to_vec(),
            })
        };
        let letters = if alphabet.single_chars() {
            text.chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| lookup(&c.to_string()))
                .collect::<Result<Vec<_>>>()?
        } else {
            text.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(lookup)
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            alphabet: alphabet.clone(),
            letters,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of occurrences of `letter`.
    pub fn count_letter(&self, letter: u8) -> usize {
        self.letters.iter().filter(|&&l| l == letter).count()
    }

    /// `‖w‖₁`, the number of letters with index 1.
    pub fn ones(&self) -> usize {
        self.count_letter(1)
    }

    /// The binary word marking occurrences of `letter`.
    pub fn indicator(&self, letter: u8) -> Word {
        Word {
            alphabet: Alphabet::binary(),
            letters: self
                .letters
                .iter()
                .map(|&l| u8::from(l == letter))
                .collect(),
        }
    }

    /// Applies a letter relabeling (`map[old] = new`).
    pub fn relabel(&self, map: &[u8]) -> Result<Word> {
        Word::new(
            self.alphabet.clone(),
            self.letters.iter().map(|&l| map[l as usize]).collect(),
        )
    }

    /// All words of length `len` over `alphabet`, in lexicographic order.
    pub fn all(alphabet: &Alphabet, len: usize) -> impl Iterator<Item = Word> + '_ {
        let k = alphabet.size() as u128;
        let total = k.pow(len as u32);
        (0..total).map(move |idx| Word::from_index(alphabet, len, idx))
    }

    /// The `idx`-th word of length `len` in lexicographic order.
    pub fn from_index(alphabet: &Alphabet, len: usize, mut idx: u128) -> Word {
        let k = alphabet.size() as u128;
        let mut letters = vec![0u8; len];
        for slot in letters.iter_mut().rev() {
            *slot = (idx % k) as u8;
            idx /= k;
        }
        Word {
            alphabet: alphabet.clone(),
            letters,
        }
    }

    fn same_alphabet(&self, other: &Word) -> Result<()> {
        if self.alphabet == other.alphabet {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch)
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.alphabet.single_chars() {
            ""
        } else {
            " "
        };
        for (i, &l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            f.write_str(self.alphabet.symbol(l))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

/// `binom(w, u)`: the number of index sets `I` with `sub(I, w) = u`.
pub fn subsequence_count(w: &Word, u: &Word) -> Result<BigUint> {
    w.same_alphabet(u)?;
    Ok(count_occurrences(w.letters(), u.letters()))
}

pub(crate) fn count_occurrences(w: &[u8], u: &[u8]) -> BigUint {
    if u.len() > w.len() {
        return BigUint::zero();
    }
    count_small(w, u).map_or_else(|| count_big(w, u), BigUint::from)
}

fn count_small(w: &[u8], u: &[u8]) -> Option<u128> {
    let mut ways = vec![0u128; u.len() + 1];
    ways[0] = 1;
    for &c in w {
        for j in (1..=u.len()).rev() {
            if u[j - 1] == c {
                ways[j] = ways[j].checked_add(ways[j - 1])?;
            }
        }
    }
    Some(ways[u.len()])
}

fn count_big(w: &[u8], u: &[u8]) -> BigUint {
    let mut ways = vec![BigUint::zero(); u.len() + 1];
    ways[0] = BigUint::one();
    for &c in w {
        for j in (1..=u.len()).rev() {
            if u[j - 1] == c {
                let prev = ways[j - 1].clone();
                ways[j] += prev;
            }
        }
    }
    ways.pop().unwrap_or_default()
}

/// `t(u, w) = binom(w, u) / binom(n, ℓ)`.
pub fn pattern_density(w: &Word, u: &Word) -> Result<Rational> {
    w.same_alphabet(u)?;
    if u.is_empty() {
        return Err(invalid("pattern must be nonempty"));
    }
    if u.len() > w.len() {
        return Err(Error::PatternTooLong {
            pattern: u.len(),
            word: w.len(),
        });
    }
    let count = BigInt::from(count_occurrences(w.letters(), u.letters()));
    Ok(BigRational::new(count, binomial(w.len(), u.len())))
}

/// Densities of every pattern of one length in one word.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMap {
    source_len: usize,
    pattern_len: usize,
    entries: Vec<(Word, Rational)>,
}

#[derive(Serialize)]
struct DensityEntry {
    pattern: String,
    num: String,
    den: String,
}

impl DensityMap {
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn pattern_len(&self) -> usize {
        self.pattern_len
    }

    pub fn entries(&self) -> &[(Word, Rational)] {
        &self.entries
    }

    pub fn get(&self, pattern: &Word) -> Option<&Rational> {
        self.entries
            .iter()
            .find(|(p, _)| p == pattern)
            .map(|(_, t)| t)
    }

    pub fn total(&self) -> Rational {
        self.entries
            .iter()
            .fold(Rational::zero(), |acc, (_, t)| acc + t)
    }

    /// JSON array of `{pattern, num, den}` with unreduced binomial ratio
    /// replaced by lowest terms.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<DensityEntry> = self
            .entries
            .iter()
            .map(|(p, t)| DensityEntry {
                pattern: p.to_string(),
                num: t.numer().to_string(),
                den: t.denom().to_string(),
            })
            .collect();
        serde_json::to_value(rows).expect("serializable")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("pattern,num,den,t\n");
        for (p, t) in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p,
                t.numer(),
                t.denom(),
                format_rational(t)
            ));
        }
        out
    }
}

/// Densities of all `k^ℓ` patterns of length `ℓ`, computed in parallel.
pub fn density_table(w: &Word, pattern_len: usize, cap: u128) -> Result<DensityMap> {
    if pattern_len == 0 {
        return Err(invalid("pattern length must be positive"));
    }
    if pattern_len > w.len() {
        return Err(Error::PatternTooLong {
            pattern: pattern_len,
            word: w.len(),
        });
    }
    let count = (w.alphabet().size() as u128)
        .checked_pow(pattern_len as u32)
        .unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::CapExceeded {
            what: "density table size",
            count,
            cap,
        });
    }
    let denom = binomial(w.len(), pattern_len);
    let entries: Vec<(Word, Rational)> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let u = Word::from_index(w.alphabet(), pattern_len, idx);
            let c = BigInt::from(count_occurrences(w.letters(), u.letters()));
            let t = BigRational::new(c, denom.clone());
            (u, t)
        })
        .collect();
    Ok(DensityMap {
        source_len: w.len(),
        pattern_len,
        entries,
    })
}

/// `sub(I, w)` for a strictly increasing 1-based index set.
pub fn extract(w: &Word, indices: &[usize]) -> Result<Word> {
    let mut letters = Vec::with_capacity(indices.len());
    for (pos, &i) in indices.iter().enumerate() {
        if i == 0 || i > w.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: w.len(),
            });
        }
        if pos > 0 && indices[pos - 1] >= i {
            return Err(Error::NotIncreasing { position: pos + 1 });
        }
        letters.push(w.letters[i - 1]);
    }
    Ok(Word {
        alphabet: w.alphabet.clone(),
        letters,
    })
}

/// Normalized Hamming distance; on `{0,1}` this is `1/n Σ |w_i − u_i|`.
pub fn hamming_d1(w: &Word, u: &Word) -> Result<Rational> {
    w.same_alphabet(u)?;
    if w.len() != u.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: u.len(),
        });
    }
    if w.is_empty() {
        return Ok(Rational::zero());
    }
    let diff = w
        .letters
        .iter()
        .zip(&u.letters)
        .filter(|(a, b)| a != b)
        .count();
    Ok(Rational::new(diff.into(), w.len().into()))
}

/// `sub(ℓ, w)` with the index set drawn uniformly from all `ℓ`-subsets.
pub fn random_subsequence(w: &Word, len: usize, stream: &SeededStream) -> Result<Word> {
    if len == 0 || len > w.len() {
        return Err(invalid(format!(
            "subsequence length {len} outside 1..={}",
            w.len()
        )));
    }
    let mut rng = stream.rng();
    Ok(sample_subsequence(w, len, &mut rng))
}

pub(crate) fn sample_subsequence<R: rand::Rng + ?Sized>(w: &Word, len: usize, rng: &mut R) -> Word {
    let mut idx = rand::seq::index::sample(rng, w.len(), len).into_vec();
    idx.sort_unstable();
    Word {
        alphabet: w.alphabet.clone(),
        letters: idx.into_iter().map(|i| w.letters[i]).collect(),
    }
}

/// Greedy scan: `true` iff `u` occurs as a subsequence of `w`.
pub fn contains_pattern(w: &Word, u: &Word) -> bool {
    if w.alphabet != u.alphabet {
        return false;
    }
    is_subsequence(w.letters(), u.letters())
}

pub(crate) fn is_subsequence(w: &[u8], u: &[u8]) -> bool {
    let mut pos = 0;
    for &c in w {
        if pos < u.len() && u[pos] == c {
            pos += 1;
        }
    }
    pos == u.len()
}

/// Per-letter prefix sums answering `N_a(w, I)` in constant time.
#[derive(Clone, Debug)]
pub struct LetterPrefixCounts {
    k: usize,
    table: Vec<u32>,
}

impl LetterPrefixCounts {
    pub fn new(w: &Word) -> Self {
        let k = w.alphabet().size();
        let mut table = vec![0u32; (w.len() + 1) * k];
        for (i, &l) in w.letters().iter().enumerate() {
            let (prev, next) = table.split_at_mut((i + 1) * k);
            next[..k].copy_from_slice(&prev[i * k..]);
            next[l as usize] += 1;
        }
        Self { k, table }
    }

    pub fn len(&self) -> usize {
        self.table.len() / self.k - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Occurrences of `letter` in positions `lo..=hi` (1-based, inclusive).
    pub fn count(&self, letter: u8, lo: usize, hi: usize) -> Result<u32> {
        let n = self.len();
        if lo == 0 || hi > n {
            return Err(Error::IndexOutOfRange {
                index: if lo == 0 { lo } else { hi },
                len: n,
            });
        }
        if lo > hi {
            return Ok(0);
        }
        let l = letter as usize;
        Ok(self.table[hi * self.k + l] - self.table[(lo - 1) * self.k + l])
    }

    /// Occurrences of `letter` among the first `j` letters.
    pub fn prefix(&self, letter: u8, j: usize) -> u32 {
        self.table[j * self.k + letter as usize]
    }
}
