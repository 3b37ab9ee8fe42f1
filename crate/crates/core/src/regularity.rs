//! Weak regularity for limit functions: conditional expectations on interval
//! partitions and the energy-increment refinement loop.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::limits::{d_box, LimitFn, Measured, Piecewise};
use crate::poly::Root;
use crate::scalar::Scalar;

/// Breakpoints `0 = p₀ < p₁ < … < p_m = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalPartition<T> {
    breaks: Vec<T>,
}

impl<T: Scalar> IntervalPartition<T> {
    pub fn new(breaks: Vec<T>) -> Result<Self> {
        if breaks.len() < 2 || !breaks[0].is_zero() || !breaks[breaks.len() - 1].is_one() {
            return Err(Error::InvalidBreakpoints(
                "partition must start at 0 and end at 1".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBreakpoints(
                "partition atoms must be nondegenerate".into(),
            ));
        }
        Ok(Self { breaks })
    }

    /// `{[0,1]}`.
    pub fn trivial() -> Self {
        Self {
            breaks: vec![T::zero(), T::one()],
        }
    }

    /// `m` atoms of equal length.
    pub fn uniform(m: usize) -> Self {
        Self {
            breaks: (0..=m.max(1))
                .map(|i| T::from_ratio(i as i64, m.max(1) as i64))
                .collect(),
        }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breaks
    }

    pub fn atoms(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Adds the points of `(0,1)` that are not already breakpoints.
    pub fn refine_with(&self, points: &[T]) -> Self {
        let mut breaks = self.breaks.clone();
        for p in points {
            if *p > T::zero() && *p < T::one() {
                let idx = breaks.partition_point(|b| b < p);
                if breaks[idx] != *p {
                    breaks.insert(idx, p.clone());
                }
            }
        }
        Self { breaks }
    }

    /// `true` iff every breakpoint of `coarse` is a breakpoint of `self`.
    pub fn refines(&self, coarse: &Self) -> bool {
        coarse.breaks.iter().all(|b| {
            self.breaks
                .binary_search_by(|x| x.partial_cmp(b).unwrap())
                .is_ok()
        })
    }
}

/// `∫_a^b f` through the antiderivative.
fn integral_between<T: Scalar>(anti: &Piecewise<T>, a: &T, b: &T) -> T {
    anti.eval(b) - anti.eval(a)
}

/// `E(f|𝒫)`: on each atom, the mean of `f` over it.
pub fn conditional_expectation<T: Scalar>(
    f: &Piecewise<T>,
    partition: &IntervalPartition<T>,
) -> Piecewise<T> {
    let anti = f.antiderivative();
    let values = partition
        .breaks
        .windows(2)
        .map(|w| integral_between(&anti, &w[0], &w[1]) / (w[1].clone() - w[0].clone()))
        .collect();
    Piecewise::step(partition.breaks.clone(), values).expect("partition breakpoints are valid")
}

/// `ℰ_f(𝒫) = ∫ E(f|𝒫)² = Σ_P (∫_P f)² / λ(P)`.
pub fn energy<T: Scalar>(f: &Piecewise<T>, partition: &IntervalPartition<T>) -> T {
    let anti = f.antiderivative();
    partition.breaks.windows(2).fold(T::zero(), |acc, w| {
        let s = integral_between(&anti, &w[0], &w[1]);
        acc + s.clone() * s / (w[1].clone() - w[0].clone())
    })
}

/// An interval `[start, end]` with `value = ∫ g` over it.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation<T> {
    pub start: T,
    pub end: T,
    pub value: T,
    /// `false` when an endpoint is an approximated irrational extremum.
    pub exact: bool,
}

/// The interval maximizing `|∫_I g|`, returned when that maximum exceeds `ε`.
/// Endpoints are the argmax and argmin of `G(x) = ∫_0^x g`, taken among the
/// breakpoints and the roots of `g`.
pub fn violating_interval<T: Scalar>(g: &Piecewise<T>, eps: &T) -> Result<Option<Violation<T>>> {
    if *eps <= T::zero() {
        return Err(invalid("ε must be positive"));
    }
    let v = extremal_interval(g);
    Ok((v.value.abs() > *eps).then_some(v))
}

fn extremal_interval<T: Scalar>(g: &Piecewise<T>) -> Violation<T> {
    let anti = g.antiderivative();
    let roots = g.interior_roots();
    let exact = roots.iter().all(Root::is_exact);
    let mut points: Vec<T> = g.breakpoints().to_vec();
    points.extend(roots.iter().map(Root::approx));
    let values: Vec<T> = points.iter().map(|x| anti.eval(x)).collect();
    let (mut hi, mut lo) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v > values[hi] {
            hi = i;
        }
        if *v < values[lo] {
            lo = i;
        }
    }
    let (a, b) = if points[hi] <= points[lo] {
        (hi, lo)
    } else {
        (lo, hi)
    };
    Violation {
        start: points[a].clone(),
        end: points[b].clone(),
        value: values[b].clone() - values[a].clone(),
        exact,
    }
}

/// `‖g‖_□ = sup_I |∫_I g|`.
pub fn interval_norm<T: Scalar>(g: &Piecewise<T>) -> T {
    extremal_interval(g).value.abs()
}

/// Output of [`weak_regularity`].
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityResult<T> {
    pub partition: IntervalPartition<T>,
    /// `E(f|𝒫_ε)` as a step function.
    pub approximation: LimitFn<T>,
    /// `d_□(f, E(f|𝒫_ε))`, recomputed independently of the loop.
    pub box_error: Measured<T>,
    pub iterations: usize,
    pub energy_trace: Vec<T>,
}

/// JSON view with floats for every value.
#[derive(Clone, Debug, Serialize)]
pub struct RegularitySummary {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub box_error: f64,
    pub box_error_exact: bool,
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
}

impl<T: Scalar> RegularityResult<T> {
    pub fn summary(&self) -> RegularitySummary {
        RegularitySummary {
            breakpoints: self.partition.breaks.iter().map(Scalar::as_f64).collect(),
            values: self
                .approximation
                .pieces()
                .iter()
                .map(|p| p.coeff(0).as_f64())
                .collect(),
            box_error: self.box_error.value.as_f64(),
            box_error_exact: self.box_error.exact,
            iterations: self.iterations,
            energy_trace: self.energy_trace.iter().map(Scalar::as_f64).collect(),
        }
    }
}

/// `⌊ε⁻²⌋ + 1`.
pub fn iteration_cap<T: Scalar>(eps: &T) -> usize {
    (T::one() / (eps.clone() * eps.clone())).as_f64().floor() as usize + 1
}

/// Refines `𝒫₀` by extremal violating intervals until
/// `‖f − E(f|𝒫)‖_□ ≤ ε`. Each round raises the energy by more than `ε²`,
/// so at most `⌊ε⁻²⌋` refinements happen, each adding at most two atoms.
pub fn weak_regularity<T: Scalar>(
    f: &LimitFn<T>,
    eps: &T,
    initial: &IntervalPartition<T>,
) -> Result<RegularityResult<T>> {
    if *eps <= T::zero() || *eps > T::one() {
        return Err(invalid("ε must lie in (0, 1]"));
    }
    let cap = iteration_cap(eps);
    let eps_sq = eps.clone() * eps.clone();
    let slack = if T::EXACT {
        T::zero()
    } else {
        T::from_f64_lossy(1e-12)
    };
    let mut partition = initial.clone();
    let mut energy_trace = vec![energy(f.piecewise(), &partition)];
    let mut iterations = 0;
    loop {
        let g = f
            .piecewise()
            .sub(&conditional_expectation(f.piecewise(), &partition));
        let Some(v) = violating_interval(&g, eps)? else {
            break;
        };
        if iterations == cap {
            return Err(Error::IterationCap { cap });
        }
        let next = partition.refine_with(&[v.start, v.end]);
        assert!(next.atoms() <= partition.atoms() + 2);
        let e = energy(f.piecewise(), &next);
        let prev = energy_trace.last().unwrap().clone();
        assert!(
            e.clone() + slack.clone() > prev + eps_sq.clone(),
            "energy increment at or below ε² in round {iterations}"
        );
        energy_trace.push(e);
        partition = next;
        iterations += 1;
    }
    let approximation = LimitFn::new(conditional_expectation(f.piecewise(), &partition))?;
    let box_error = d_box(f, &approximation);
    Ok(RegularityResult {
        partition,
        approximation,
        box_error,
        iterations,
        energy_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::Rational;
    use num_traits::{One, Zero};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn half_indicator() -> LimitFn<Rational> {
        LimitFn::indicator_prefix(q(1, 2)).unwrap()
    }

    fn random_partition(rng: &mut ChaCha8Rng, atoms: usize) -> IntervalPartition<Rational> {
        let mut pts: Vec<Rational> = (0..atoms.saturating_sub(1))
            .map(|_| q(rand::Rng::gen_range(rng, 1..64), 64))
            .collect();
        pts.sort();
        IntervalPartition::trivial().refine_with(&pts)
    }

    /// Exhaustive `|∫_I g|` over intervals with endpoints on a fine grid.
    fn grid_norm(g: &Piecewise<Rational>, grid: usize) -> Rational {
        let anti = g.antiderivative();
        let vals: Vec<Rational> = (0..=grid)
            .map(|i| anti.eval(&q(i as i64, grid as i64)))
            .collect();
        let mut best = Rational::zero();
        for a in 0..=grid {
            for b in a..=grid {
                best = best.max((&vals[b] - &vals[a]).abs());
            }
        }
        best
    }

    use num_traits::Signed;

    #[test]
    fn conditional_expectation_examples() {
        let f = half_indicator();
        let p = IntervalPartition::new(vec![q(0, 1), q(1, 2), q(1, 1)]).unwrap();
        assert_eq!(
            conditional_expectation(f.piecewise(), &p),
            f.piecewise().clone()
        );
        let x = Piecewise::new(vec![q(0, 1), q(1, 1)], vec![Polynomial::x()]).unwrap();
        let e = conditional_expectation(&x, &IntervalPartition::trivial());
        assert_eq!(e.pieces()[0], Polynomial::constant(q(1, 2)));
        assert!(IntervalPartition::new(vec![q(0, 1), q(1, 2), q(1, 2), q(1, 1)]).is_err());
    }

    #[test]
    fn energy_examples() {
        let d = q(2, 7);
        let c = LimitFn::constant(d.clone()).unwrap();
        assert_eq!(
            energy(c.piecewise(), &IntervalPartition::uniform(5)),
            &d * &d
        );
        let f = half_indicator();
        let p = IntervalPartition::new(vec![q(0, 1), q(1, 2), q(1, 1)]).unwrap();
        assert_eq!(energy(f.piecewise(), &p), q(1, 2));
    }

    #[test]
    fn violating_interval_examples() {
        let zero = Piecewise::constant(Rational::zero());
        assert_eq!(violating_interval(&zero, &q(1, 10)).unwrap(), None);
        let f = half_indicator();
        let g = f.piecewise().sub(&conditional_expectation(
            f.piecewise(),
            &IntervalPartition::trivial(),
        ));
        let v = violating_interval(&g, &q(1, 5)).unwrap().unwrap();
        assert_eq!((v.start.clone(), v.end.clone()), (q(0, 1), q(1, 2)));
        assert_eq!(v.value.abs(), q(1, 4));
        assert_eq!(grid_norm(&g, 16), q(1, 4));
    }

    #[test]
    fn regularity_examples() {
        let c = LimitFn::constant(q(1, 3)).unwrap();
        let r = weak_regularity(&c, &q(1, 10), &IntervalPartition::trivial()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.box_error.value, q(0, 1));
        assert_eq!(r.partition, IntervalPartition::trivial());

        let f = half_indicator();
        let r = weak_regularity(&f, &q(1, 10), &IntervalPartition::trivial()).unwrap();
        assert!(r.box_error.value <= q(1, 10));
        assert!(r.partition.atoms() <= 1 + 200);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let f = LimitFn::random_step(&mut rng, 6, 12);
            let pieces = f.canonical().pieces().len();
            let r = weak_regularity(&f, &q(1, 100), &IntervalPartition::trivial()).unwrap();
            assert!(r.iterations <= pieces);
            assert!(r.box_error.value <= q(1, 100));
        }
    }

    #[test]
    fn irrational_extrema() {
        // f = x² on [0,1]: g = x² − 1/3 has root 1/√3
        let f = LimitFn::from_parts(
            vec![q(0, 1), q(1, 1)],
            vec![Polynomial::monomial(q(1, 1), 2)],
        )
        .unwrap();
        let r = weak_regularity(&f, &q(1, 20), &IntervalPartition::trivial()).unwrap();
        assert!(r.box_error.value <= q(1, 20));
        assert!(r.energy_trace.windows(2).all(|w| &w[1] - &w[0] > q(1, 400)));
        let ff = f.to_f64();
        let rf = weak_regularity(&ff, &0.05, &IntervalPartition::trivial()).unwrap();
        assert!(rf.box_error.value <= 0.05 + 1e-12);
    }

    #[test]
    fn epsilon_range() {
        let f = half_indicator();
        assert!(weak_regularity(&f, &q(0, 1), &IntervalPartition::trivial()).is_err());
        assert!(weak_regularity(&f, &q(3, 2), &IntervalPartition::trivial()).is_err());
        assert_eq!(iteration_cap(&q(1, 10)), 101);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tower_property(seed in any::<u64>(), atoms in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = LimitFn::random_step(&mut rng, 5, 10);
            let p = random_partition(&mut rng, atoms);
            let e = conditional_expectation(f.piecewise(), &p);
            prop_assert_eq!(e.integral(), f.piecewise().integral());
        }

        #[test]
        fn refinement_raises_energy(seed in any::<u64>(), atoms in 1usize..6, extra in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = LimitFn::random_step(&mut rng, 6, 16);
            let coarse = random_partition(&mut rng, atoms);
            let more = random_partition(&mut rng, extra + 1);
            let fine = coarse.refine_with(more.breakpoints());
            prop_assert!(fine.refines(&coarse));
            let (ep, eq) = (energy(f.piecewise(), &coarse), energy(f.piecewise(), &fine));
            prop_assert!(eq >= ep);
            // ∫ E(f|𝒫) E(f|𝒬) = ∫ E(f|𝒫)² for 𝒬 finer than 𝒫
            let ec = conditional_expectation(f.piecewise(), &coarse);
            let ef = conditional_expectation(f.piecewise(), &fine);
            prop_assert_eq!(ec.mul(&ef).integral(), ep);
            prop_assert!(eq <= Rational::one());
        }

        #[test]
        fn regularity_postconditions(seed in any::<u64>(), eps_idx in 0usize..3, atoms in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let eps = [q(3, 10), q(1, 10), q(1, 20)][eps_idx].clone();
            let f = LimitFn::random_step(&mut rng, 8, 20);
            let p0 = random_partition(&mut rng, atoms);
            let r = weak_regularity(&f, &eps, &p0).unwrap();
            prop_assert!(r.box_error.value <= eps);
            let g = f.piecewise().sub(r.approximation.piecewise());
            prop_assert!(grid_norm(&g, 40) <= eps);
            let bound = p0.atoms() + 2 * iteration_cap(&eps);
            prop_assert!(r.partition.atoms() <= bound);
            prop_assert!(r.partition.refines(&p0));
        }
    }
}
