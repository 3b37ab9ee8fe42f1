//! Hereditary properties given by forbidden subsequences: membership, exact
//! distance, and the sample-and-check tester.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::{SeededStream, PRNG_ID};
use crate::scalar::format_rational;
use crate::words::{is_subsequence, sample_subsequence, Alphabet, Word};
use crate::Rational;

/// Default cap on reachable automaton states.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// The property "contains none of these patterns as a subsequence".
#[derive(Clone, Debug)]
pub struct ForbiddenFamily {
    alphabet: Alphabet,
    patterns: Vec<Word>,
    automaton: Automaton,
}

/// Product automaton tracking the greedy matched-prefix length of every
/// pattern. Transitions into a state where some pattern is fully matched
/// are `None`.
#[derive(Clone, Debug)]
struct Automaton {
    k: usize,
    start: Option<u32>,
    next: Vec<Option<u32>>,
}

impl Automaton {
    fn build(alphabet: &Alphabet, patterns: &[Word], cap: usize) -> Result<Self> {
        let k = alphabet.size();
        if patterns.iter().any(Word::is_empty) {
            return Ok(Self {
                k,
                start: None,
                next: Vec::new(),
            });
        }
        let mut ids: HashMap<Vec<u16>, u32> = HashMap::new();
        let mut states: Vec<Vec<u16>> = vec![vec![0; patterns.len()]];
        ids.insert(states[0].clone(), 0);
        let mut next = Vec::new();
        let mut idx = 0;
        while idx < states.len() {
            for c in 0..k as u8 {
                let mut s = states[idx].clone();
                let mut dead = false;
                for (m, p) in s.iter_mut().zip(patterns) {
                    if p.letters()[*m as usize] == c {
                        *m += 1;
                        dead |= *m as usize == p.len();
                    }
                }
                if dead {
                    next.push(None);
                    continue;
                }
                let id = match ids.get(&s) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= cap {
                            return Err(Error::CapExceeded {
                                what: "avoidance automaton states (use brute force or sampling)",
                                count: states.len() as u128 + 1,
                                cap: cap as u128,
                            });
                        }
                        let id = states.len() as u32;
                        ids.insert(s.clone(), id);
                        states.push(s);
                        id
                    }
                };
                next.push(Some(id));
            }
            idx += 1;
        }
        Ok(Self {
            k,
            start: Some(0),
            next,
        })
    }

    fn states(&self) -> usize {
        self.next.len() / self.k.max(1)
    }

    fn step(&self, state: u32, letter: u8) -> Option<u32> {
        self.next[state as usize * self.k + letter as usize]
    }

    fn accepts(&self, letters: &[u8]) -> bool {
        let mut state = match self.start {
            Some(s) => s,
            None => return false,
        };
        for &c in letters {
            match self.step(state, c) {
                Some(s) => state = s,
                None => return false,
            }
        }
        true
    }
}

impl ForbiddenFamily {
    pub fn new(alphabet: Alphabet, patterns: Vec<Word>) -> Result<Self> {
        Self::with_cap(alphabet, patterns, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(alphabet: Alphabet, mut patterns: Vec<Word>, cap: usize) -> Result<Self> {
        if patterns.iter().any(|p| p.alphabet() != &alphabet) {
            return Err(Error::AlphabetMismatch);
        }
        patterns.sort_by(|a, b| a.letters().cmp(b.letters()));
        patterns.dedup();
        let automaton = Automaton::build(&alphabet, &patterns, cap)?;
        Ok(Self {
            alphabet,
            patterns,
            automaton,
        })
    }

    /// Binary family from comma-separated patterns such as `"10,110"`.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let patterns = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Word::parse(s, alphabet))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet.clone(), patterns)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn patterns(&self) -> &[Word] {
        &self.patterns
    }

    /// Number of reachable non-rejecting automaton states.
    pub fn state_count(&self) -> usize {
        self.automaton.states()
    }
}

/// `true` iff no pattern of the family is a subsequence of `w`.
pub fn is_member(w: &Word, family: &ForbiddenFamily) -> bool {
    w.alphabet() == family.alphabet() && family.automaton.accepts(w.letters())
}

/// Exact substitution distance to the property.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyDistance {
    /// `substitutions / n`.
    pub distance: Rational,
    pub substitutions: usize,
    /// A nearest member.
    pub witness: Word,
}

/// `d₁(w, P) = min_{u ∈ P, |u| = n} d₁(w, u)`, by a shortest-path DP over
/// positions and automaton states.
pub fn d1_to_family(w: &Word, family: &ForbiddenFamily) -> Result<FamilyDistance> {
    if w.alphabet() != family.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let n = w.len();
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    let aut = &family.automaton;
    let start = aut
        .start
        .ok_or_else(|| invalid("the property is empty: a forbidden pattern is the empty word"))?;
    let states = aut.states();
    let cells = n
        .checked_mul(states)
        .filter(|&c| c <= 1 << 28)
        .ok_or(Error::CapExceeded {
            what: "distance DP cells",
            count: (n as u128) * states as u128,
            cap: 1 << 28,
        })?;
    const INF: u32 = u32::MAX;
    let mut cost = vec![INF; states];
    cost[start as usize] = 0;
    // back[i * states + s] = (previous state, letter) on the best path
    let mut back: Vec<(u32, u8)> = vec![(u32::MAX, 0); cells];
    for (i, &letter) in w.letters().iter().enumerate() {
        let mut next = vec![INF; states];
        for (s, &c) in cost.iter().enumerate() {
            if c == INF {
                continue;
            }
            for a in 0..aut.k as u8 {
                if let Some(t) = aut.step(s as u32, a) {
                    let v = c + u32::from(a != letter);
                    if v < next[t as usize] {
                        next[t as usize] = v;
                        back[i * states + t as usize] = (s as u32, a);
                    }
                }
            }
        }
        cost = next;
    }
    let (best_state, best) = cost
        .iter()
        .enumerate()
        .min_by_key(|&(_, &c)| c)
        .filter(|&(_, &c)| c != INF)
        .ok_or_else(|| invalid(format!("no word of length {n} has the property")))?;
    let mut letters = vec![0u8; n];
    let mut state = best_state as u32;
    for i in (0..n).rev() {
        let (prev, a) = back[i * states + state as usize];
        letters[i] = a;
        state = prev;
    }
    let substitutions = *best as usize;
    Ok(FamilyDistance {
        distance: Rational::new(substitutions.into(), n.into()),
        substitutions,
        witness: Word::new(w.alphabet().clone(), letters)?,
    })
}

/// Outcome of repeated sample-and-check rounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub sample_len: usize,
    pub trials: usize,
    pub accepted: usize,
    pub accept_fraction: f64,
    /// Exact `d₁(w, P)` as `"n/d"`, when the DP fits its cap.
    pub d1: Option<String>,
    pub seed: u64,
    pub prng: &'static str,
}

/// Accepts a trial iff `sub(ℓ, w)` avoids every forbidden pattern.
pub fn run_tester(
    w: &Word,
    sample_len: usize,
    trials: usize,
    family: &ForbiddenFamily,
    stream: &SeededStream,
) -> Result<TestReport> {
    if sample_len == 0 || sample_len > w.len() {
        return Err(invalid(format!(
            "sample length {sample_len} outside 1..={}",
            w.len()
        )));
    }
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let accepted = (0..trials as u64)
        .into_par_iter()
        .filter(|&i| {
            let u = sample_subsequence(w, sample_len, &mut stream.substream(i).rng());
            is_member(&u, family)
        })
        .count();
    if is_member(w, family) {
        assert_eq!(
            accepted, trials,
            "hereditary property rejected a sample of a member"
        );
    }
    let d1 = d1_to_family(w, family)
        .ok()
        .map(|d| format_rational(&d.distance));
    Ok(TestReport {
        sample_len,
        trials,
        accepted,
        accept_fraction: accepted as f64 / trials as f64,
        d1,
        seed: stream.seed,
        prng: PRNG_ID,
    })
}

/// One row of [`completeness_soundness_curve`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub target: String,
    pub achieved: Option<String>,
    pub sample_len: usize,
    pub accept_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Candidate far words: every pattern repeated to length `n`, constant
/// words, and a few seeded random words.
fn far_candidates(family: &ForbiddenFamily, n: usize, stream: &SeededStream) -> Vec<Word> {
    let alphabet = family.alphabet();
    let mut out: Vec<Word> = family
        .patterns()
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| {
            Word::new(
                alphabet.clone(),
                p.letters().iter().cycle().take(n).copied().collect(),
            )
            .unwrap()
        })
        .collect();
    for a in 0..alphabet.size() as u8 {
        out.push(Word::new(alphabet.clone(), vec![a; n]).unwrap());
    }
    let mut rng = stream.substream(u64::MAX).rng();
    for _ in 0..8 {
        let letters = (0..n)
            .map(|_| rand::Rng::gen_range(&mut rng, 0..alphabet.size() as u8))
            .collect();
        out.push(Word::new(alphabet.clone(), letters).unwrap());
    }
    out
}

/// A word of length `n` at exactly `substitutions` from the property.
///
/// Walks from the nearest member `m` of a far word `x` toward `x` one
/// substitution at a time; each step moves the distance by at most one, so
/// a binary search on the walk hits every intermediate value.
pub fn word_at_distance(
    family: &ForbiddenFamily,
    n: usize,
    substitutions: usize,
    stream: &SeededStream,
) -> Result<Option<Word>> {
    let mut best: Option<(Word, FamilyDistance)> = None;
    for x in far_candidates(family, n, stream) {
        let d = d1_to_family(&x, family)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| d.substitutions > b.substitutions)
        {
            best = Some((x, d));
        }
    }
    let (far, nearest) = best.ok_or_else(|| invalid("no candidate words"))?;
    if substitutions > nearest.substitutions {
        return Ok(None);
    }
    let member = nearest.witness;
    let diffs: Vec<usize> = (0..n)
        .filter(|&i| member.letters()[i] != far.letters()[i])
        .collect();
    let walk = |t: usize| -> Word {
        let mut letters = member.letters().to_vec();
        for &i in &diffs[..t] {
            letters[i] = far.letters()[i];
        }
        Word::new(member.alphabet().clone(), letters).unwrap()
    };
    let dist = |t: usize| d1_to_family(&walk(t), family).map(|d| d.substitutions);
    if substitutions == 0 {
        return Ok(Some(member));
    }
    // invariant: dist(lo) < target ≤ dist(hi)
    let (mut lo, mut hi) = (0usize, diffs.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if dist(mid)? >= substitutions {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let w = walk(hi);
    debug_assert_eq!(dist(hi)?, substitutions);
    Ok(Some(w))
}

/// Acceptance fraction against sample length for words at prescribed
/// distances from the property.
pub fn completeness_soundness_curve(
    family: &ForbiddenFamily,
    n: usize,
    sample_lens: &[usize],
    distances: &[Rational],
    trials: usize,
    stream: &SeededStream,
) -> Result<Vec<CurveRow>> {
    if sample_lens.is_empty() || distances.is_empty() {
        return Err(invalid("grids must be nonempty"));
    }
    let mut rows = Vec::new();
    for (di, target) in distances.iter().enumerate() {
        let scaled = target * Rational::from_integer(n.into());
        let skip = |note: String| CurveRow {
            target: format_rational(target),
            achieved: None,
            sample_len: 0,
            accept_fraction: None,
            note: Some(note),
        };
        if !scaled.is_integer() || scaled < Rational::from_integer(0.into()) {
            rows.push(skip(format!("{target} is not a multiple of 1/{n}")));
            continue;
        }
        let subs: usize = scaled
            .to_integer()
            .try_into()
            .map_err(|_| invalid("distance too large"))?;
        let Some(w) = word_at_distance(family, n, subs, stream)? else {
            rows.push(skip(format!(
                "no word of length {n} found at distance {target}"
            )));
            continue;
        };
        let achieved = d1_to_family(&w, family)?.distance;
        for &len in sample_lens {
            if len == 0 || len > n {
                rows.push(skip(format!("sample length {len} outside 1..={n}")));
                continue;
            }
            let report = run_tester(&w, len, trials, family, &stream.substream(di as u64))?;
            rows.push(CurveRow {
                target: format_rational(target),
                achieved: Some(format_rational(&achieved)),
                sample_len: len,
                accept_fraction: Some(report.accept_fraction),
                note: None,
            });
        }
    }
    Ok(rows)
}

/// State tuple to (previous tuple, color).
type Layer = HashMap<Vec<u32>, (Vec<u32>, usize)>;

/// A coloring of the positions of `w` such that the letters of color `c`
/// form a word in `families[c]`, if one exists.
pub fn colorable(w: &Word, families: &[ForbiddenFamily]) -> Result<Option<Vec<usize>>> {
    if families.is_empty() {
        return Err(invalid("need at least one property"));
    }
    if families.iter().any(|f| f.alphabet() != w.alphabet()) {
        return Err(Error::AlphabetMismatch);
    }
    let Some(start) = families
        .iter()
        .map(|f| f.automaton.start)
        .collect::<Option<Vec<u32>>>()
    else {
        return Ok(None);
    };
    // layer[i] maps reachable state tuples to (previous tuple, color)
    let mut layers: Vec<Layer> = Vec::with_capacity(w.len());
    let mut frontier = vec![start];
    for &letter in w.letters() {
        let mut layer = HashMap::new();
        for s in &frontier {
            for (c, fam) in families.iter().enumerate() {
                if let Some(t) = fam.automaton.step(s[c], letter) {
                    let mut next = s.clone();
                    next[c] = t;
                    layer.entry(next).or_insert_with(|| (s.clone(), c));
                }
            }
        }
        if layer.is_empty() {
            return Ok(None);
        }
        frontier = layer.keys().cloned().collect();
        frontier.sort();
        layers.push(layer);
    }
    let mut colors = vec![0usize; w.len()];
    let mut state = match frontier.into_iter().next() {
        Some(s) => s,
        None => return Ok(Some(colors)),
    };
    for i in (0..w.len()).rev() {
        let (prev, c) = layers[i][&state].clone();
        colors[i] = c;
        state = prev;
    }
    Ok(Some(colors))
}

/// Letters of `w` carrying color `c`.
pub fn color_class(w: &Word, colors: &[usize], c: usize) -> Word {
    let letters = w
        .letters()
        .iter()
        .zip(colors)
        .filter(|(_, &k)| k == c)
        .map(|(&l, _)| l)
        .collect();
    Word::new(w.alphabet().clone(), letters).expect("letters from w")
}

/// Membership by direct subsequence scans; used to cross-check the automaton.
pub fn is_member_direct(w: &Word, family: &ForbiddenFamily) -> bool {
    family
        .patterns()
        .iter()
        .all(|p| !is_subsequence(w.letters(), p.letters()))
}
