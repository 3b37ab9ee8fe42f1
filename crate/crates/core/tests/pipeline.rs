use num_traits::Zero;

use seqlimit::io::{
    limit_from_json, limit_to_json, partition_from_json, partition_to_json, read_word, write_word,
};
use seqlimit::limits::{d_box, t_density, LimitFn};
use seqlimit::regularity::{weak_regularity, IntervalPartition};
use seqlimit::rng::SeededStream;
use seqlimit::sampling::f_random_word;
use seqlimit::testing::{d1_to_family, word_at_distance, ForbiddenFamily};
use seqlimit::words::{Alphabet, Word};
use seqlimit::Rational;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `t(u, f_w)` by enumerating all `n^ℓ` cell tuples: sorting `ℓ` uniform
/// points reads the letters of their cells in order.
fn word_limit_density(w: &Word, u: &Word) -> Rational {
    let (n, l) = (w.len(), u.len());
    let total = n.pow(l as u32);
    let hits = (0..total)
        .filter(|&code| {
            let mut cells: Vec<usize> = (0..l).map(|i| code / n.pow(i as u32) % n).collect();
            cells.sort_unstable();
            cells
                .iter()
                .map(|&c| w.letters()[c])
                .eq(u.letters().iter().copied())
        })
        .count();
    Rational::new(hits.into(), total.into())
}

#[test]
fn word_limits_match_cell_enumeration() {
    let bin = Alphabet::binary();
    for n in 1..=6 {
        for w in Word::all(&bin, n) {
            let f: LimitFn<Rational> = LimitFn::from_word(&w).unwrap();
            for l in 1..=3 {
                for u in Word::all(&bin, l) {
                    assert_eq!(
                        t_density(&u, &f).unwrap(),
                        word_limit_density(&w, &u),
                        "w={w} u={u}"
                    );
                }
            }
        }
    }
}

#[test]
fn sampled_word_regularizes_through_json() {
    let stream = SeededStream::new(21);
    let mut rng = stream.rng();
    let f = LimitFn::random_step(&mut rng, 6, 12);
    let back = limit_from_json(&limit_to_json(&f)).unwrap();
    assert_eq!(back, f);
    let w = f_random_word(&back, 300, &stream.substream(1)).unwrap();
    let text = write_word(&w);
    let w2 = read_word(&text, &Alphabet::binary()).unwrap();
    assert_eq!(w, w2);
    let fw: LimitFn<Rational> = LimitFn::from_word(&w2).unwrap();
    let eps = q(1, 10);
    let r = weak_regularity(&fw, &eps, &IntervalPartition::trivial()).unwrap();
    assert!(r.box_error.value <= eps);
    let p = partition_from_json(&partition_to_json(&r.partition)).unwrap();
    assert_eq!(p, r.partition);
    // triangle inequality through f_w
    assert!(d_box(&f, &r.approximation).value <= d_box(&f, &fw).value + eps);
}

#[test]
fn generated_words_hit_requested_distance() {
    let bin = Alphabet::binary();
    let stream = SeededStream::new(5);
    for forbid in ["10", "110", "101", "0110,111"] {
        let family = ForbiddenFamily::parse(forbid, &bin).unwrap();
        for subs in [0usize, 1, 3, 7] {
            if let Some(w) =
                word_at_distance(&family, 40, subs, &stream.substream(subs as u64)).unwrap()
            {
                let d = d1_to_family(&w, &family).unwrap();
                assert_eq!(d.substitutions, subs, "{forbid} at {subs}");
                assert_eq!(d.distance, q(subs as i64, 40));
            }
        }
    }
    // distance zero exists whenever a member of length n exists
    let family = ForbiddenFamily::parse("10", &bin).unwrap();
    let w = word_at_distance(&family, 40, 0, &stream).unwrap().unwrap();
    assert!(d1_to_family(&w, &family).unwrap().distance.is_zero());
}
