//! Pattern densities of permutations and of grid permutons.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::binomial;
use crate::rng::SeededStream;
use crate::scalar::{format_rational, parse_rational, ratio_to_f64};
use crate::Rational;

fn fact(n: usize) -> usize {
    (1..=n).product()
}

/// Largest pattern order with exact enumeration.
pub const EXACT_PATTERN_CAP: usize = 4;

/// A permutation of `1..=n` in one-line notation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            if v == 0 || v > n || seen[v - 1] {
                return Err(invalid(format!(
                    "{values:?} is not a permutation of 1..={n}"
                )));
            }
            seen[v - 1] = true;
        }
        Ok(Self(values))
    }

    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub fn reverse(n: usize) -> Self {
        Self((1..=n).rev().collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (1..=n).collect();
        v.shuffle(rng);
        Self(v)
    }

    /// `"2,1,4,3"`, or a digit string such as `"231"` for orders up to 9.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let values: Vec<usize> = if text.contains(',') || text.contains(char::is_whitespace) {
            text.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Parse(format!("bad permutation entry {s:?}")))
                })
                .collect::<Result<_>>()?
        } else {
            text.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Parse(format!("bad permutation digit {c:?}")))
                })
                .collect::<Result<_>>()?
        };
        Self::new(values)
    }

    /// Order-isomorphic permutation of distinct values.
    pub fn standardize<T: Ord>(values: &[T]) -> Self {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].cmp(&values[b]));
        let mut out = vec![0; values.len()];
        for (rank, &i) in idx.iter().enumerate() {
            out[i] = rank + 1;
        }
        Self(out)
    }

    /// All permutations of order `k` in lexicographic order.
    pub fn all(k: usize) -> Vec<Self> {
        (0..fact(k)).map(|r| Self::unrank(k, r)).collect()
    }

    /// Lexicographic rank in `0..k!`.
    pub fn rank(&self) -> usize {
        let k = self.0.len();
        let mut rank = 0;
        for i in 0..k {
            let smaller = self.0[i + 1..].iter().filter(|&&v| v < self.0[i]).count();
            rank += smaller * fact(k - 1 - i);
        }
        rank
    }

    pub fn unrank(k: usize, mut rank: usize) -> Self {
        let mut pool: Vec<usize> = (1..=k).collect();
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let f = fact(k - 1 - i);
            out.push(pool.remove(rank / f));
            rank %= f;
        }
        Self(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut out = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            out[v - 1] = i + 1;
        }
        Self(out)
    }

    pub fn to_csv(&self) -> String {
        self.0
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() <= 9 {
            self.0.iter().try_for_each(|v| write!(f, "{v}"))
        } else {
            f.write_str(&self.to_csv())
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

fn inversions(values: &[usize]) -> u128 {
    fn sort(v: &mut [usize], buf: &mut Vec<usize>) -> u128 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let (l, r) = v.split_at_mut(n / 2);
        let mut count = sort(l, buf) + sort(r, buf);
        buf.clear();
        let (mut i, mut j) = (0, 0);
        while i < l.len() || j < r.len() {
            if j == r.len() || (i < l.len() && l[i] <= r[j]) {
                buf.push(l[i]);
                i += 1;
            } else {
                count += (l.len() - i) as u128;
                buf.push(r[j]);
                j += 1;
            }
        }
        v.copy_from_slice(buf);
        count
    }
    let mut v = values.to_vec();
    sort(&mut v, &mut Vec::with_capacity(values.len()))
}

fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Counts of every pattern of order `k` in `σ`, indexed by rank.
pub fn pattern_counts(sigma: &Permutation, k: usize) -> Result<Vec<u128>> {
    pattern_counts_capped(sigma, k, EXACT_PATTERN_CAP)
}

pub fn pattern_counts_capped(sigma: &Permutation, k: usize, cap: usize) -> Result<Vec<u128>> {
    if k == 0 {
        return Err(invalid("pattern order must be positive"));
    }
    if k > cap {
        return Err(Error::CapExceeded {
            what: "exact pattern order (use Monte Carlo sampling)",
            count: k as u128,
            cap: cap as u128,
        });
    }
    let n = sigma.len();
    let mut counts = vec![0u128; fact(k)];
    if k == 2 {
        let inv = inversions(sigma.values());
        counts[1] = inv;
        counts[0] = (n as u128 * n.saturating_sub(1) as u128) / 2 - inv;
        return Ok(counts);
    }
    let mut vals = vec![0usize; k];
    for_each_subset(n, k, |idx| {
        for (v, &i) in vals.iter_mut().zip(idx) {
            *v = sigma.0[i];
        }
        counts[Permutation::standardize(&vals).rank()] += 1;
    });
    Ok(counts)
}

/// `Λ(τ, σ)`: copies of `τ` in `σ`.
pub fn pattern_count_perm(sigma: &Permutation, tau: &Permutation) -> Result<u128> {
    Ok(pattern_counts(sigma, tau.len())?[tau.rank()])
}

/// `t(τ, σ) = Λ(τ, σ) / binom(n, k)`, and 0 when `n < k`.
pub fn perm_density(tau: &Permutation, sigma: &Permutation) -> Result<Rational> {
    let (n, k) = (sigma.len(), tau.len());
    if n < k {
        return Ok(Rational::zero());
    }
    let count = pattern_count_perm(sigma, tau)?;
    Ok(Rational::new(BigInt::from(count), binomial(n, k)))
}

/// Step permuton: an `m × m` grid of cells, each carrying uniform density.
/// `mass(i, j)` is the mass of `[i/m, (i+1)/m) × [j/m, (j+1)/m)` (x then y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMeasure {
    m: usize,
    denominator: BigInt,
    numerators: Vec<BigInt>,
}

impl GridMeasure {
    /// Requires nonnegative masses with every row and column summing to `1/m`.
    pub fn new(mass: Vec<Vec<Rational>>) -> Result<Self> {
        let m = mass.len();
        if m == 0 || mass.iter().any(|r| r.len() != m) {
            return Err(invalid("grid measure needs an m × m mass table with m ≥ 1"));
        }
        let denominator = crate::scalar::common_denominator(mass.iter().flatten());
        let numerators: Vec<BigInt> = mass
            .iter()
            .flatten()
            .map(|q| q.numer() * (&denominator / q.denom()))
            .collect();
        Self::from_numerators(m, denominator, numerators)
    }

    pub fn from_numerators(m: usize, denominator: BigInt, numerators: Vec<BigInt>) -> Result<Self> {
        if m == 0 || numerators.len() != m * m || !denominator.is_positive() {
            return Err(invalid("malformed grid measure"));
        }
        if numerators.iter().any(Signed::is_negative) {
            return Err(invalid("grid masses must be nonnegative"));
        }
        let mass_m = BigInt::from(m);
        for i in 0..m {
            let row: BigInt = (0..m).map(|j| &numerators[i * m + j]).sum();
            let col: BigInt = (0..m).map(|j| &numerators[j * m + i]).sum();
            if &row * &mass_m != denominator || &col * &mass_m != denominator {
                return Err(invalid(format!("marginals are not uniform at index {i}")));
            }
        }
        Ok(Self {
            m,
            denominator,
            numerators,
        })
    }

    /// Lebesgue measure on the unit square.
    pub fn uniform() -> Self {
        Self::from_numerators(1, BigInt::one(), vec![BigInt::one()]).unwrap()
    }

    /// `μ_σ`: mass `1/n` on each cell `(i, σ(i))`.
    pub fn mu_sigma(sigma: &Permutation) -> Self {
        let n = sigma.len().max(1);
        if sigma.is_empty() {
            return Self::uniform();
        }
        let mut numerators = vec![BigInt::zero(); n * n];
        for (i, &v) in sigma.values().iter().enumerate() {
            numerators[i * n + v - 1] = BigInt::one();
        }
        Self::from_numerators(n, BigInt::from(n), numerators).unwrap()
    }

    /// Weighted mixture of permutation matrices, scaled to a permuton.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, components: usize) -> Self {
        let mut numerators = vec![BigInt::zero(); m * m];
        let mut total = 0u64;
        for _ in 0..components.max(1) {
            let weight: u64 = rng.gen_range(1..=5);
            total += weight;
            for (i, v) in Permutation::random(m, rng).values().iter().enumerate() {
                numerators[i * m + v - 1] += weight;
            }
        }
        Self::from_numerators(m, BigInt::from(total * m as u64), numerators).unwrap()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn numerator(&self, i: usize, j: usize) -> &BigInt {
        &self.numerators[i * self.m + j]
    }

    pub fn mass(&self, i: usize, j: usize) -> Rational {
        Rational::new(self.numerator(i, j).clone(), self.denominator.clone())
    }

    pub fn masses(&self) -> Vec<Vec<Rational>> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.mass(i, j)).collect())
            .collect()
    }

    /// Split every cell into `factor × factor` equal cells.
    pub fn refine(&self, factor: usize) -> Self {
        let m = self.m * factor;
        let mut numerators = vec![BigInt::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                numerators[i * m + j] = self.numerator(i / factor, j / factor).clone();
            }
        }
        let denominator = &self.denominator * BigInt::from(factor * factor);
        Self {
            m,
            denominator,
            numerators,
        }
    }

    fn nonzero_cells(&self) -> Vec<(usize, usize, BigInt)> {
        let mut cells = Vec::new();
        for i in 0..self.m {
            for j in 0..self.m {
                let v = self.numerator(i, j);
                if !v.is_zero() {
                    cells.push((i, j, v.clone()));
                }
            }
        }
        cells
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GridMeasureJson {
            m: self.m,
            mass: self
                .masses()
                .iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect(),
        })
        .expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: GridMeasureJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::Parse(format!("grid measure: {e}")))?;
        if raw.mass.len() != raw.m {
            return Err(Error::Parse(format!(
                "expected {} rows, found {}",
                raw.m,
                raw.mass.len()
            )));
        }
        let mass = raw
            .mass
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| parse_rational(s))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mass)
    }
}

#[derive(Serialize, Deserialize)]
struct GridMeasureJson {
    m: usize,
    mass: Vec<Vec<String>>,
}

/// Visits every labelled sequence of `k` cells with nondecreasing column.
fn for_each_cell_sequence(
    cells: &[(usize, usize, BigInt)],
    k: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    fn go(
        cells: &[(usize, usize, BigInt)],
        k: usize,
        seq: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if seq.len() == k {
            visit(seq);
            return;
        }
        let min_col = seq.last().map_or(0, |&c| cells[c].0);
        let start = cells.partition_point(|c| c.0 < min_col);
        for c in start..cells.len() {
            seq.push(c);
            go(cells, k, seq, visit);
            seq.pop();
        }
    }
    go(cells, k, &mut Vec::with_capacity(k), visit);
}

/// Sizes of the runs of equal keys in an already grouped sequence.
fn run_sizes(keys: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut last = None;
    for key in keys {
        if last == Some(key) {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
            last = Some(key);
        }
    }
    out
}

/// Every permutation of `items` that only reorders within the given runs.
fn run_orders(items: &[usize], runs: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(items.len())];
    let mut pos = 0;
    for &len in runs {
        let block = &items[pos..pos + len];
        let perms = Permutation::all(len);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                perms.iter().map(move |p| {
                    let mut v = prefix.clone();
                    v.extend(p.values().iter().map(|&r| block[r - 1]));
                    v
                })
            })
            .collect();
        pos += len;
    }
    out
}

/// Exact `t(τ, μ)` for every `τ ∈ 𝔖_k`, indexed by rank.
///
/// A labelled assignment of the `k` points to cells contributes when its
/// columns are nondecreasing in label order; points sharing a column (row)
/// have independent uniform relative x (y) orders, so each consistent y
/// order has conditional probability `1 / (Π g! Π h!)`.
pub fn t_grid_all(k: usize, mu: &GridMeasure) -> Result<Vec<Rational>> {
    if k == 0 {
        return Err(invalid("pattern order must be positive"));
    }
    if k > EXACT_PATTERN_CAP {
        return Err(Error::CapExceeded {
            what: "exact permuton pattern order (use Monte Carlo sampling)",
            count: k as u128,
            cap: EXACT_PATTERN_CAP as u128,
        });
    }
    let cells = mu.nonzero_cells();
    let kf = fact(k) as u128;
    let small: Option<Vec<u128>> = cells.iter().map(|c| c.2.to_u128()).collect();
    let mut acc_small = vec![0u128; fact(k)];
    let mut overflow = small.is_none();
    let mut acc_big = vec![BigInt::zero(); fact(k)];
    let leaf = |seq: &[usize],
                big: bool,
                acc_small: &mut Vec<u128>,
                acc_big: &mut Vec<BigInt>,
                overflow: &mut bool| {
        let col_runs = run_sizes(seq.iter().map(|&c| cells[c].0));
        let mut by_row: Vec<usize> = (0..k).collect();
        by_row.sort_by_key(|&l| cells[seq[l]].1);
        let row_runs = run_sizes(by_row.iter().map(|&l| cells[seq[l]].1));
        let g: u128 = col_runs.iter().map(|&s| fact(s) as u128).product();
        let h: u128 = row_runs.iter().map(|&s| fact(s) as u128).product();
        let weight = (kf / g) * (kf / h);
        let orders = run_orders(&by_row, &row_runs);
        if big {
            let prod: BigInt =
                seq.iter().map(|&c| &cells[c].2).product::<BigInt>() * BigInt::from(weight);
            for order in orders {
                acc_big[y_order_rank(&order)] += &prod;
            }
        } else {
            let nums = small.as_ref().unwrap();
            let prod = seq
                .iter()
                .try_fold(weight, |p, &c| p.checked_mul(nums[c]))
                .unwrap_or_else(|| {
                    *overflow = true;
                    0
                });
            for order in orders {
                let slot = &mut acc_small[y_order_rank(&order)];
                *slot = slot.checked_add(prod).unwrap_or_else(|| {
                    *overflow = true;
                    0
                });
            }
        }
    };
    if !overflow {
        for_each_cell_sequence(&cells, k, &mut |seq| {
            leaf(seq, false, &mut acc_small, &mut acc_big, &mut overflow)
        });
    }
    if overflow {
        for_each_cell_sequence(&cells, k, &mut |seq| {
            let mut unused = false;
            leaf(seq, true, &mut acc_small, &mut acc_big, &mut unused)
        });
    } else {
        acc_big = acc_small.into_iter().map(BigInt::from).collect();
    }
    // t = k! Σ Π mass / (Π g! Π h!) = Σ acc / (k! D^k)
    let scale = BigInt::from(kf) * mu.denominator.pow(k as u32);
    Ok(acc_big
        .into_iter()
        .map(|a| Rational::new(a, scale.clone()))
        .collect())
}

/// Rank of the pattern whose point at x-rank `r` has y-rank `order⁻¹(r)`.
fn y_order_rank(order: &[usize]) -> usize {
    // order lists labels (= x-ranks) by increasing y, so it is τ⁻¹
    let mut tau = vec![0; order.len()];
    for (y, &label) in order.iter().enumerate() {
        tau[label] = y + 1;
    }
    Permutation(tau).rank()
}

/// Exact `t(τ, μ)` for `|τ| ≤ 4`.
pub fn t_grid(tau: &Permutation, mu: &GridMeasure) -> Result<Rational> {
    Ok(t_grid_all(tau.len(), mu)?[tau.rank()].clone())
}

/// Monte Carlo estimate with a normal 99% confidence half-width.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub half_width_99: f64,
    pub samples: usize,
}

/// `t(τ, μ)` exactly up to order 4, by sampling above.
#[derive(Clone, Debug, PartialEq)]
pub enum PatternDensity {
    Exact(Rational),
    MonteCarlo(McEstimate),
}

pub fn t_grid_auto(
    tau: &Permutation,
    mu: &GridMeasure,
    samples: usize,
    stream: &SeededStream,
) -> Result<PatternDensity> {
    if tau.len() <= EXACT_PATTERN_CAP {
        t_grid(tau, mu).map(PatternDensity::Exact)
    } else {
        t_grid_monte_carlo(tau, mu, samples, stream).map(PatternDensity::MonteCarlo)
    }
}

pub fn t_grid_monte_carlo(
    tau: &Permutation,
    mu: &GridMeasure,
    samples: usize,
    stream: &SeededStream,
) -> Result<McEstimate> {
    if tau.is_empty() || samples == 0 {
        return Err(invalid("need a nonempty pattern and at least one sample"));
    }
    let sampler = SubpermSampler::new(mu);
    let hits = (0..samples as u64)
        .into_par_iter()
        .filter(|&i| sampler.sample(tau.len(), &mut stream.substream(i).rng()) == *tau)
        .count();
    let p = hits as f64 / samples as f64;
    Ok(McEstimate {
        estimate: p,
        half_width_99: 2.576 * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// Draws `sub(k, μ)`.
#[derive(Clone, Debug)]
pub struct SubpermSampler {
    m: usize,
    cells: Vec<(usize, usize)>,
    index: WeightedIndex<f64>,
}

impl SubpermSampler {
    pub fn new(mu: &GridMeasure) -> Self {
        let cells = mu.nonzero_cells();
        let weights: Vec<f64> = cells
            .iter()
            .map(|c| ratio_to_f64(&Rational::new(c.2.clone(), mu.denominator.clone())))
            .collect();
        Self {
            m: mu.m,
            cells: cells.iter().map(|c| (c.0, c.1)).collect(),
            index: WeightedIndex::new(weights).expect("total mass is one"),
        }
    }

    /// `σ⁻¹π` from `k` i.i.d. points; ties broken by draw index.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Permutation {
        let m = self.m as f64;
        let pts: Vec<(f64, f64)> = (0..k)
            .map(|_| {
                let (i, j) = self.cells[self.index.sample(rng)];
                (
                    (i as f64 + rng.gen::<f64>()) / m,
                    (j as f64 + rng.gen::<f64>()) / m,
                )
            })
            .collect();
        let mut by_x: Vec<usize> = (0..k).collect();
        by_x.sort_by(|&a, &b| pts[a].0.total_cmp(&pts[b].0).then(a.cmp(&b)));
        let mut by_y: Vec<usize> = (0..k).collect();
        by_y.sort_by(|&a, &b| pts[a].1.total_cmp(&pts[b].1).then(a.cmp(&b)));
        let mut y_rank = vec![0; k];
        for (r, &label) in by_y.iter().enumerate() {
            y_rank[label] = r + 1;
        }
        Permutation(by_x.iter().map(|&label| y_rank[label]).collect())
    }
}

pub fn sample_subperm(mu: &GridMeasure, k: usize, stream: &SeededStream) -> Result<Permutation> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    Ok(SubpermSampler::new(mu).sample(k, &mut stream.rng()))
}

fn column_pair_sweep<N>(grid: &[Vec<N>]) -> N
where
    N: Clone + Signed + Ord,
{
    let m = grid.len();
    let mut best = N::zero();
    for lo in 0..m {
        let mut strip = vec![N::zero(); m];
        for row in grid.iter().skip(lo) {
            for (s, v) in strip.iter_mut().zip(row) {
                *s = s.clone() + v.clone();
            }
            // max |Σ_{a ≤ i < b} strip_i| = max prefix − min prefix
            let (mut acc, mut hi, mut low) = (N::zero(), N::zero(), N::zero());
            for s in &strip {
                acc = acc + s.clone();
                hi = hi.max(acc.clone());
                low = low.min(acc.clone());
            }
            best = best.max(hi - low);
        }
    }
    best
}

/// Both measures on the common `lcm(m, m')` grid as integer differences
/// over a common denominator.
fn difference_grid(mu: &GridMeasure, nu: &GridMeasure) -> (Vec<Vec<BigInt>>, BigInt) {
    let m = mu.m.lcm(&nu.m);
    let (a, b) = (mu.refine(m / mu.m), nu.refine(m / nu.m));
    let den = a.denominator.lcm(&b.denominator);
    let (sa, sb) = (&den / &a.denominator, &den / &b.denominator);
    let grid = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| a.numerator(i, j) * &sa - b.numerator(i, j) * &sb)
                .collect()
        })
        .collect();
    (grid, den)
}

/// `d_□(μ, ν) = sup_{I,J} |μ(I×J) − ν(I×J)|`, attained on grid lines of
/// the common refinement. Exact, `O(m³)`.
pub fn d_box_grid(mu: &GridMeasure, nu: &GridMeasure) -> Rational {
    let (grid, den) = difference_grid(mu, nu);
    let small: Option<Vec<Vec<i128>>> = grid
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_i128().filter(|x| x.unsigned_abs() < 1 << 100))
                .collect()
        })
        .collect();
    let best = if den.bits() < 100 && grid.len() < 1 << 12 {
        match small {
            Some(g) => BigInt::from(column_pair_sweep(&g)),
            None => column_pair_sweep(&grid),
        }
    } else {
        column_pair_sweep(&grid)
    };
    Rational::new(best, den)
}

/// `∫ xⁱ yʲ dμ`, factorized per cell.
pub fn moment_xy_direct(i: u32, j: u32, mu: &GridMeasure) -> Rational {
    let m = BigInt::from(mu.m);
    // mean of x^p over [a/m, (a+1)/m]
    let avg = |a: usize, p: u32| -> Rational {
        let a = BigInt::from(a);
        Rational::new(
            (&a + 1u32).pow(p + 1) - a.pow(p + 1),
            BigInt::from(p + 1) * m.pow(p),
        )
    };
    let mut total = Rational::zero();
    for (a, b, num) in mu.nonzero_cells() {
        total += Rational::new(num, mu.denominator.clone()) * avg(a, i) * avg(b, j);
    }
    total
}

/// Which closed form turns pattern densities of order `i+j+1` into the
/// mixed moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MomentConvention {
    /// `C_σ = i! j! / (i+j+1)! · Σ_r N(σ, r)`, where `N(σ, r)` counts the
    /// splits of the other points into `i` points left of the point at
    /// x-rank `r` and `j` points below it. Follows from exchangeability of
    /// the `i+j+1` sampled points.
    Exchangeable,
    /// `Σ_{k∈[j]} Σ_{ℓ∈[i]} binom(j,k) binom(i,ℓ) (i+k)!(j−k)!/(i+j+1)!
    /// Σ_{σ(i+k+1) ≥ j+1} t(σ)`, read literally.
    AsDisplayed,
}

/// Coefficients `C_σ` of the moment combination, indexed by rank.
pub fn moment_coefficients(i: usize, j: usize, convention: MomentConvention) -> Vec<Rational> {
    let k = i + j + 1;
    let perms = Permutation::all(k);
    match convention {
        MomentConvention::Exchangeable => {
            let scale = Rational::new(BigInt::from(fact(i) * fact(j)), BigInt::from(fact(k)));
            perms
                .iter()
                .map(|sigma| {
                    let mut ways = 0usize;
                    for r in 0..k {
                        let others: Vec<usize> = (0..k).filter(|&p| p != r).collect();
                        for_each_subset(others.len(), i, |xs| {
                            let left: Vec<usize> = xs.iter().map(|&t| others[t]).collect();
                            let ok = others.iter().all(|p| {
                                if left.contains(p) {
                                    *p < r
                                } else {
                                    sigma.0[*p] < sigma.0[r]
                                }
                            });
                            ways += usize::from(ok);
                        });
                    }
                    &scale * Rational::from_integer(ways.into())
                })
                .collect()
        }
        MomentConvention::AsDisplayed => {
            let den = BigInt::from(fact(k));
            perms
                .iter()
                .map(|sigma| {
                    let mut c = Rational::zero();
                    for kk in 1..=j {
                        for l in 1..=i {
                            if sigma.0.get(i + kk).is_some_and(|&v| v > j) {
                                let num = binomial(j, kk)
                                    * binomial(i, l)
                                    * BigInt::from(fact(i + kk) * fact(j - kk));
                                c += Rational::new(num, den.clone());
                            }
                        }
                    }
                    c
                })
                .collect()
        }
    }
}

/// Largest `i + j` covered by [`moment_xy_from_densities`].
pub const MOMENT_ORDER_CAP: usize = EXACT_PATTERN_CAP - 1;

/// Checks a convention against direct integration on 50 seeded random grid
/// measures for all `i + j ≤ 3`. On mismatch, the error carries a table of
/// `(i, j, direct, combination)` rows.
pub fn validate_moment_convention(convention: MomentConvention) -> Result<()> {
    let mut rng = SeededStream::new(0x6d6f6d).rng();
    let mut rows = Vec::new();
    for trial in 0..50 {
        let m = rng.gen_range(1..=4);
        let mu = GridMeasure::random(&mut rng, m, 2);
        for total in 0..=MOMENT_ORDER_CAP {
            let table = t_grid_all(total + 1, &mu)?;
            for i in 0..=total {
                let j = total - i;
                let direct = moment_xy_direct(i as u32, j as u32, &mu);
                let combo: Rational = moment_coefficients(i, j, convention)
                    .iter()
                    .zip(&table)
                    .map(|(c, t)| c * t)
                    .sum();
                if direct != combo && rows.len() < 12 {
                    rows.push(format!(
                        "trial {trial} (i,j)=({i},{j}) direct={} combination={}",
                        format_rational(&direct),
                        format_rational(&combo)
                    ));
                }
            }
        }
    }
    if rows.is_empty() {
        Ok(())
    } else {
        Err(Error::ConventionMismatch(format!(
            "{convention:?}:\n{}",
            rows.join("\n")
        )))
    }
}

fn validated(convention: MomentConvention) -> Result<()> {
    static EXCHANGEABLE: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    static DISPLAYED: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    let cell = match convention {
        MomentConvention::Exchangeable => &EXCHANGEABLE,
        MomentConvention::AsDisplayed => &DISPLAYED,
    };
    cell.get_or_init(|| validate_moment_convention(convention).map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::ConventionMismatch)
}

/// `∫ xⁱ yʲ dμ` from the densities of all patterns of order `i+j+1`.
/// The convention is validated once per process before first use.
pub fn moment_xy_from_densities(
    i: usize,
    j: usize,
    densities: &HashMap<Permutation, Rational>,
    convention: MomentConvention,
) -> Result<Rational> {
    if i + j > MOMENT_ORDER_CAP {
        return Err(Error::CapExceeded {
            what: "moment order i+j",
            count: (i + j) as u128,
            cap: MOMENT_ORDER_CAP as u128,
        });
    }
    validated(convention)?;
    let perms = Permutation::all(i + j + 1);
    let missing: Vec<String> = perms
        .iter()
        .filter(|p| !densities.contains_key(p))
        .map(|p| p.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPatterns(missing));
    }
    Ok(moment_coefficients(i, j, convention)
        .iter()
        .zip(&perms)
        .map(|(c, p)| c * &densities[p])
        .sum())
}

/// `t(τ, μ)` for every `τ` of order `k`, keyed by pattern.
pub fn grid_density_map(k: usize, mu: &GridMeasure) -> Result<HashMap<Permutation, Rational>> {
    Ok(Permutation::all(k)
        .into_iter()
        .zip(t_grid_all(k, mu)?)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn p(s: &str) -> Permutation {
        Permutation::parse(s).unwrap()
    }

    /// `O(m⁴)` oracle over all grid rectangles via 2-D prefix sums.
    fn brute_d_box(mu: &GridMeasure, nu: &GridMeasure) -> Rational {
        let (grid, den) = difference_grid(mu, nu);
        let m = grid.len();
        let mut pre = vec![vec![BigInt::zero(); m + 1]; m + 1];
        for i in 0..m {
            for j in 0..m {
                pre[i + 1][j + 1] = &grid[i][j] + &pre[i][j + 1] + &pre[i + 1][j] - &pre[i][j];
            }
        }
        let mut best = BigInt::zero();
        for a in 0..=m {
            for b in a..=m {
                for c in 0..=m {
                    for d in c..=m {
                        let v = &pre[b][d] - &pre[a][d] - &pre[b][c] + &pre[a][c];
                        best = best.max(v.abs());
                    }
                }
            }
        }
        Rational::new(best, den)
    }

    #[test]
    fn counting_examples() {
        let n = 9;
        assert_eq!(
            pattern_count_perm(&Permutation::identity(n), &p("12")).unwrap(),
            36
        );
        assert_eq!(pattern_count_perm(&p("2143"), &p("21")).unwrap(), 2);
        assert_eq!(
            pattern_count_perm(&Permutation::reverse(n), &p("12")).unwrap(),
            0
        );
        assert_eq!(perm_density(&p("123"), &p("12")).unwrap(), q(0, 1));
        assert!(matches!(
            pattern_count_perm(&Permutation::identity(6), &p("12345")),
            Err(Error::CapExceeded { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = Permutation::random(10, &mut rng);
            let counts = pattern_counts_capped(&s, 2, 4).unwrap();
            let mut brute = vec![0u128; 2];
            for_each_subset(10, 2, |idx| {
                brute[usize::from(s.0[idx[0]] > s.0[idx[1]])] += 1
            });
            assert_eq!(counts, brute);
        }
    }

    #[test]
    fn ranks_round_trip() {
        for k in 1..=4 {
            for (r, perm) in Permutation::all(k).iter().enumerate() {
                assert_eq!(perm.rank(), r);
                assert_eq!(perm.inverse().inverse(), *perm);
            }
        }
        assert_eq!(p("2,1,4,3"), p("2143"));
        assert!(Permutation::parse("1,1").is_err());
    }

    #[test]
    fn grid_examples() {
        let u = GridMeasure::uniform();
        assert_eq!(GridMeasure::mu_sigma(&p("1")), u);
        let id2 = GridMeasure::mu_sigma(&p("12"));
        assert_eq!(id2.mass(0, 0), q(1, 2));
        assert_eq!(id2.mass(0, 1), q(0, 1));
        assert!(GridMeasure::new(vec![vec![q(1, 2), q(0, 1)], vec![q(1, 4), q(1, 4)]]).is_err());
        let json = id2.to_json();
        assert_eq!(GridMeasure::from_json(&json).unwrap(), id2);
    }

    #[test]
    fn density_examples() {
        let u = GridMeasure::uniform();
        for k in 1..=4 {
            for t in t_grid_all(k, &u).unwrap() {
                assert_eq!(t, Rational::new(1.into(), BigInt::from(fact(k))));
            }
        }
        let id1 = GridMeasure::mu_sigma(&p("1"));
        assert_eq!(t_grid(&p("12"), &id1).unwrap(), q(1, 2));
        let s21 = GridMeasure::mu_sigma(&p("21"));
        assert_eq!(t_grid(&p("21"), &s21).unwrap(), q(3, 4));
        for n in 1..=12 {
            let mu = GridMeasure::mu_sigma(&Permutation::identity(n));
            assert_eq!(t_grid(&p("12"), &mu).unwrap(), q(1, 1) - q(1, 2 * n as i64));
        }
    }

    #[test]
    fn refinement_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let mu = GridMeasure::random(&mut rng, 3, 2);
            for k in 1..=3 {
                assert_eq!(
                    t_grid_all(k, &mu).unwrap(),
                    t_grid_all(k, &mu.refine(2)).unwrap()
                );
            }
            assert_eq!(
                moment_xy_direct(2, 1, &mu),
                moment_xy_direct(2, 1, &mu.refine(3))
            );
        }
    }

    #[test]
    fn monte_carlo_oracle() {
        let s21 = GridMeasure::mu_sigma(&p("21"));
        let mc = t_grid_monte_carlo(&p("21"), &s21, 200_000, &SeededStream::new(3)).unwrap();
        assert!((mc.estimate - 0.75).abs() < 2.0 * mc.half_width_99);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mu = GridMeasure::random(&mut rng, 4, 3);
        for tau in Permutation::all(3) {
            let exact = ratio_to_f64(&t_grid(&tau, &mu).unwrap());
            let mc = t_grid_monte_carlo(&tau, &mu, 100_000, &SeededStream::new(4)).unwrap();
            assert!(
                (mc.estimate - exact).abs() < 2.0 * mc.half_width_99.max(1e-3),
                "{tau}: {exact} vs {mc:?}"
            );
        }
        // moment (1,1) of μ_{21} against sampled points
        let sampler = SubpermSampler::new(&s21);
        let mut rng = SeededStream::new(5).rng();
        let samples = 200_000;
        let mut sum = 0.0;
        for _ in 0..samples {
            let (i, j) = sampler.cells[sampler.index.sample(&mut rng)];
            let x = (i as f64 + rng.gen::<f64>()) / 2.0;
            let y = (j as f64 + rng.gen::<f64>()) / 2.0;
            sum += x * y;
        }
        let exact = ratio_to_f64(&moment_xy_direct(1, 1, &s21));
        assert!((sum / samples as f64 - exact).abs() < 0.003);
        assert_eq!(moment_xy_direct(1, 1, &s21), q(3, 16));
    }

    #[test]
    fn sampler_examples() {
        let u = GridMeasure::uniform();
        assert_eq!(
            sample_subperm(&u, 1, &SeededStream::new(1)).unwrap(),
            p("1")
        );
        // uniform measure gives uniform patterns of order 3
        let sampler = SubpermSampler::new(&u);
        let mut rng = SeededStream::new(2).rng();
        let trials = 6000;
        let mut counts = [0f64; 6];
        for _ in 0..trials {
            counts[sampler.sample(3, &mut rng).rank()] += 1.0;
        }
        let expected = trials as f64 / 6.0;
        let chi: f64 = counts
            .iter()
            .map(|c| (c - expected).powi(2) / expected)
            .sum();
        let crit = statrs::distribution::ContinuousCDF::inverse_cdf(
            &statrs::distribution::ChiSquared::new(5.0).unwrap(),
            0.99,
        );
        assert!(chi < crit, "chi-square {chi} ≥ {crit}");
        // identity pattern becomes typical along μ_{id_n}
        let freq = |n: usize| {
            let s = SubpermSampler::new(&GridMeasure::mu_sigma(&Permutation::identity(n)));
            let mut rng = SeededStream::new(n as u64).rng();
            (0..4000)
                .filter(|_| s.sample(3, &mut rng) == p("123"))
                .count()
        };
        assert!(freq(2) < freq(8) && freq(8) < freq(64));
    }

    #[test]
    fn d_box_examples() {
        let id1 = GridMeasure::mu_sigma(&p("1"));
        let id2 = GridMeasure::mu_sigma(&p("12"));
        assert_eq!(d_box_grid(&id1, &id1), q(0, 1));
        // [0,1/2] × [1/2,1] carries 1/4 under λ² and nothing under μ_{12}
        assert_eq!(d_box_grid(&id1, &id2), q(1, 4));
        assert_eq!(brute_d_box(&id1, &id2), q(1, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let a = {
                let m = rng.gen_range(1..=8);
                GridMeasure::random(&mut rng, m, 2)
            };
            let b = {
                let m = rng.gen_range(1..=8);
                GridMeasure::random(&mut rng, m, 3)
            };
            if a.m.lcm(&b.m) <= 8 {
                assert_eq!(d_box_grid(&a, &b), brute_d_box(&a, &b));
            }
        }
        for _ in 0..1000 {
            let ms: Vec<usize> = (0..3)
                .map(|_| [1, 2, 3, 4, 6][rng.gen_range(0..5)])
                .collect();
            let [a, b, c] = [0, 1, 2].map(|i| GridMeasure::random(&mut rng, ms[i], 2));
            assert!(d_box_grid(&a, &c) <= d_box_grid(&a, &b) + d_box_grid(&b, &c));
        }
    }

    #[test]
    fn bridge_and_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3usize, 10, 25, 50] {
            let sigma = Permutation::random(n, &mut rng);
            let mu = GridMeasure::mu_sigma(&sigma);
            for k in 1..=3usize {
                let bound = q((k * (k - 1) / 2) as i64, n as i64);
                let total: Rational = t_grid_all(k, &mu).unwrap().into_iter().sum();
                assert_eq!(total, q(1, 1));
                for tau in Permutation::all(k) {
                    let gap =
                        (perm_density(&tau, &sigma).unwrap() - t_grid(&tau, &mu).unwrap()).abs();
                    assert!(gap <= bound);
                }
            }
        }
        for _ in 0..100 {
            let a = {
                let m = rng.gen_range(1..=6);
                GridMeasure::random(&mut rng, m, 2)
            };
            let b = {
                let m = rng.gen_range(1..=6);
                GridMeasure::random(&mut rng, m, 2)
            };
            let d = d_box_grid(&a, &b);
            for k in 1..=3usize {
                let (ta, tb) = (t_grid_all(k, &a).unwrap(), t_grid_all(k, &b).unwrap());
                for (x, y) in ta.iter().zip(&tb) {
                    assert!((x - y).abs() <= Rational::from_integer((k * k).into()) * &d);
                }
            }
        }
    }

    #[test]
    fn moment_conventions() {
        validate_moment_convention(MomentConvention::Exchangeable).unwrap();
        let err = validate_moment_convention(MomentConvention::AsDisplayed).unwrap_err();
        assert!(matches!(err, Error::ConventionMismatch(ref s) if s.contains("(i,j)=(0,0)")));
        let u = GridMeasure::uniform();
        let dens = grid_density_map(1, &u).unwrap();
        assert_eq!(
            moment_xy_from_densities(0, 0, &dens, MomentConvention::Exchangeable).unwrap(),
            q(1, 1)
        );
        let dens = grid_density_map(2, &u).unwrap();
        assert_eq!(
            moment_xy_from_densities(1, 0, &dens, MomentConvention::Exchangeable).unwrap(),
            q(1, 2)
        );
        let s21 = GridMeasure::mu_sigma(&p("21"));
        let dens = grid_density_map(3, &s21).unwrap();
        assert_eq!(
            moment_xy_from_densities(1, 1, &dens, MomentConvention::Exchangeable).unwrap(),
            moment_xy_direct(1, 1, &s21)
        );
        assert!(
            moment_xy_from_densities(1, 1, &HashMap::new(), MomentConvention::Exchangeable)
                .is_err()
        );
        assert!(moment_xy_from_densities(1, 1, &dens, MomentConvention::AsDisplayed).is_err());
    }
}
