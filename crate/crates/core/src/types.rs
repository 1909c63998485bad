//! Method-of-types machinery: empirical types, exact class sizes, typicality,
//! lexicographic ranking inside a class, and the two structural checks the
//! binning design leans on (row composition of a type class, and the
//! without-replacement vs. with-replacement sampling gap).

use crate::error::{Error, Result};
use crate::model::{SourceDistribution, Symbol};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Empirical count vector of a length-`n` string over a fixed alphabet.
/// `counts[s]` is the number of positions holding symbol `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeVector {
    counts: Vec<usize>,
}

impl TypeVector {
    pub fn new(counts: Vec<usize>) -> Self {
        assert!(!counts.is_empty(), "type needs a nonempty alphabet");
        Self { counts }
    }

    /// Block length: the sum of counts.
    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Empirical frequency of symbol `s`.
    pub fn frequency(&self, s: usize) -> f64 {
        self.counts[s] as f64 / self.n() as f64
    }
}

/// Count vector of `x` over `{0, .., alphabet_size-1}`.
pub fn empirical_type(x: &[Symbol], alphabet_size: usize) -> TypeVector {
    let mut counts = vec![0usize; alphabet_size];
    for &s in x {
        assert!(usize::from(s) < alphabet_size, "symbol {s} outside alphabet");
        counts[usize::from(s)] += 1;
    }
    TypeVector::new(counts)
}

/// All count vectors summing to `n`, in descending lexicographic order, e.g.
/// `(2,0), (1,1), (0,2)` for `n = 2` over a binary alphabet. The order is
/// part of the partition's determinism contract: bins are numbered by it.
pub fn enumerate_types(n: usize, alphabet_size: usize) -> Vec<TypeVector> {
    assert!(alphabet_size >= 1, "alphabet must be nonempty");
    fn rec(rest: usize, pos: usize, counts: &mut [usize], out: &mut Vec<TypeVector>) {
        if pos + 1 == counts.len() {
            counts[pos] = rest;
            out.push(TypeVector::new(counts.to_vec()));
            return;
        }
        for c in (0..=rest).rev() {
            counts[pos] = c;
            rec(rest - c, pos + 1, counts, out);
        }
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; alphabet_size];
    rec(n, 0, &mut counts, &mut out);
    out
}

/// Strict letter-typicality: `max_s |counts[s]/n - P(s)| < epsilon`.
pub fn is_epsilon_typical(t: &TypeVector, p: &SourceDistribution, epsilon: f64) -> bool {
    assert_eq!(t.alphabet_size(), p.alphabet_size(), "alphabet mismatch");
    let n = t.n() as f64;
    t.counts()
        .iter()
        .zip(p.probs())
        .all(|(&c, &prob)| (c as f64 / n - prob).abs() < epsilon)
}

/// Exact number of strings with type `t`: the multinomial coefficient
/// `n! / prod_s counts[s]!`.
pub fn type_class_size(t: &TypeVector) -> BigUint {
    let mut v = BigUint::one();
    for f in 2..=t.n() {
        v *= f as u64;
    }
    for &c in t.counts() {
        for f in 2..=c {
            v /= f as u64;
        }
    }
    v
}

/// Natural log of the probability that the source emits one particular
/// string of type `t`: `sum_s counts[s] * ln P(s)`. Zero-count symbols are
/// skipped so a zero-probability letter never poisons the sum; the result is
/// negative infinity only when a symbol actually used has probability zero.
pub fn type_log_probability(t: &TypeVector, p: &SourceDistribution) -> f64 {
    assert_eq!(t.alphabet_size(), p.alphabet_size(), "alphabet mismatch");
    t.counts()
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(s, &c)| c as f64 * p.log_prob(s as Symbol))
        .sum()
}

/// Lower bound on the class size: `(n+1)^(-|alphabet|) * base^(n * H)` with
/// the empirical entropy `H` taken in the same `base`. The value is
/// base-independent up to rounding; `base` must exceed 1.
pub fn type_class_size_bound(t: &TypeVector, base: f64) -> f64 {
    assert!(base > 1.0, "entropy base must exceed 1");
    let n = t.n() as f64;
    let ln_base = base.ln();
    let h: f64 = t
        .counts()
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            -q * (q.ln() / ln_base)
        })
        .sum();
    (n + 1.0).powi(-(t.alphabet_size() as i32)) * base.powf(n * h)
}

/// Position of `x` in the lexicographic enumeration of its own type class
/// (first position most significant, symbol 0 smallest).
pub fn rank_in_type_class(x: &[Symbol], alphabet_size: usize) -> BigUint {
    let t = empirical_type(x, alphabet_size);
    let mut remaining = t.counts().to_vec();
    // Completions possible with the current remaining counts.
    let mut total = type_class_size(&t);
    let mut rank = BigUint::zero();
    for (pos, &sym) in x.iter().enumerate() {
        let m = (x.len() - pos) as u64;
        for s in 0..usize::from(sym) {
            if remaining[s] > 0 {
                // Completions that place symbol s here instead: an exact
                // integer, total * remaining / m.
                rank += &total * remaining[s] as u64 / m;
            }
        }
        total = total * remaining[usize::from(sym)] as u64 / m;
        remaining[usize::from(sym)] -= 1;
    }
    rank
}

/// Inverse of [`rank_in_type_class`]: the `index`-th string of class `t` in
/// lexicographic order.
pub fn unrank_in_type_class(t: &TypeVector, index: &BigUint) -> Result<Vec<Symbol>> {
    let size = type_class_size(t);
    if index >= &size {
        return Err(Error::OutOfRange(format!(
            "class index {index} out of range for class of size {size}"
        )));
    }
    let n = t.n();
    let mut remaining = t.counts().to_vec();
    let mut total = size;
    let mut idx = index.clone();
    let mut out = Vec::with_capacity(n);
    for pos in 0..n {
        let m = (n - pos) as u64;
        for s in 0..remaining.len() {
            if remaining[s] == 0 {
                continue;
            }
            let child = &total * remaining[s] as u64 / m;
            if idx < child {
                out.push(s as Symbol);
                total = child;
                remaining[s] -= 1;
                break;
            }
            idx -= child;
        }
    }
    Ok(out)
}

/// Total variation distance between two distributions on the same alphabet.
pub fn variational_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<f64>())
}

/// Checks the row-composition property of a type class: write all strings of
/// class `t` as the columns of an `n x |class|` array; then every row must
/// contain each symbol `s` exactly `|class| * counts[s] / n` times, i.e. the
/// rows have the same empirical distribution as `t` itself. Enumerates the
/// class, so the size must not exceed `cap`.
pub fn check_row_types(t: &TypeVector, cap: u64) -> Result<bool> {
    let size_big = type_class_size(t);
    let size = size_big
        .to_u64()
        .filter(|&s| s <= cap)
        .ok_or_else(|| Error::CapExceeded(format!("class size {size_big} exceeds cap {cap}")))?;
    let n = t.n();
    let alpha = t.alphabet_size();
    let mut row_counts = vec![vec![0u64; alpha]; n];
    for r in 0..size {
        let x = unrank_in_type_class(t, &BigUint::from(r))?;
        for (i, &s) in x.iter().enumerate() {
            row_counts[i][usize::from(s)] += 1;
        }
    }
    Ok(row_counts.iter().all(|rc| {
        (0..alpha).all(|s| rc[s] * n as u64 == size * t.counts()[s] as u64)
    }))
}

/// Outcome of [`sampling_tv_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingTvReport {
    /// Exact total variation distance between the two draw laws.
    pub tv: f64,
    /// The closed-form ceiling `|labels| * draws / balls`.
    pub bound: f64,
    /// Whether `tv <= bound` (up to rounding slack).
    pub holds: bool,
}

/// Compares drawing `draws` balls from an urn without replacement against
/// with replacement, as distributions over ordered label tuples, and checks
/// the total variation gap against `|labels| * draws / balls`. `urn[s]` is
/// the number of balls carrying label `s`; the tuple space `|labels|^draws`
/// is enumerated and must stay within `cap`.
pub fn sampling_tv_check(urn: &[usize], draws: usize, cap: u64) -> Result<SamplingTvReport> {
    let labels = urn.len();
    if labels == 0 {
        return Err(Error::OutOfRange("urn has no labels".into()));
    }
    let balls: usize = urn.iter().sum();
    if draws == 0 || draws > balls {
        return Err(Error::OutOfRange(format!(
            "need 1 <= draws <= balls, got draws={draws}, balls={balls}"
        )));
    }
    let tuples = (labels as u64)
        .checked_pow(draws as u32)
        .filter(|&t| t <= cap)
        .ok_or_else(|| {
            Error::CapExceeded(format!("{labels}^{draws} tuples exceed cap {cap}"))
        })?;

    let mut tv = 0.0;
    let mut tuple = vec![0usize; draws];
    for _ in 0..tuples {
        // Without replacement: sequential depletion. With replacement:
        // product of marginal frequencies.
        let mut without = 1.0;
        let mut with = 1.0;
        let mut left = urn.to_vec();
        let mut remaining = balls as f64;
        for &s in &tuple {
            without *= left[s] as f64 / remaining;
            with *= urn[s] as f64 / balls as f64;
            if left[s] > 0 {
                left[s] -= 1;
            }
            remaining -= 1.0;
        }
        tv += (without - with).abs();

        // Odometer step through the tuple space.
        for slot in tuple.iter_mut().rev() {
            *slot += 1;
            if *slot < labels {
                break;
            }
            *slot = 0;
        }
    }
    tv *= 0.5;
    let bound = labels as f64 * draws as f64 / balls as f64;
    Ok(SamplingTvReport {
        tv,
        bound,
        holds: tv <= bound + 1e-12,
    })
}

/// The epsilon-typical types at block length `n`: the admitted types in
/// enumeration order, which downstream partitioning treats as canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalFamily {
    n: usize,
    epsilon: f64,
    types: Vec<TypeVector>,
}

impl TypicalFamily {
    /// May legitimately come out empty (small `n`, tight `epsilon`); callers
    /// that need a nonempty family check and raise their own error.
    pub fn build(p: &SourceDistribution, n: usize, epsilon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("block length must be >= 1".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::OutOfRange(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let types = enumerate_types(n, p.alphabet_size())
            .into_iter()
            .filter(|t| is_epsilon_typical(t, p, epsilon))
            .collect();
        Ok(Self { n, epsilon, types })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn types(&self) -> &[TypeVector] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn contains(&self, t: &TypeVector) -> bool {
        self.types.iter().any(|u| u == t)
    }

    /// Number of typical strings: the sum of admitted class sizes.
    pub fn total_sequences(&self) -> BigUint {
        self.types.iter().map(type_class_size).sum()
    }

    /// Probability that the source emits a typical string.
    pub fn probability_mass(&self, p: &SourceDistribution) -> f64 {
        self.types
            .iter()
            .map(|t| {
                let size = type_class_size(t).to_f64().expect("finite class size");
                let lp = type_log_probability(t, p);
                if lp == f64::NEG_INFINITY {
                    0.0
                } else {
                    size * lp.exp()
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binomial(n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        let mut v = 1u64;
        for i in 0..k {
            v = v * (n - i) / (i + 1);
        }
        v
    }

    #[test]
    fn empirical_type_counts_symbols() {
        let t = empirical_type(&[0, 1, 0, 2, 1, 0], 3);
        assert_eq!(t.counts(), &[3, 2, 1]);
        assert_eq!(t.n(), 6);
    }

    #[test]
    fn enumeration_is_descending_lex_and_complete() {
        let ts = enumerate_types(2, 2);
        let got: Vec<&[usize]> = ts.iter().map(|t| t.counts()).collect();
        assert_eq!(got, vec![&[2, 0][..], &[1, 1], &[0, 2]]);

        for n in 1..=8u64 {
            for a in 1..=4u64 {
                let ts = enumerate_types(n as usize, a as usize);
                assert_eq!(ts.len() as u64, binomial(n + a - 1, a - 1), "n={n} a={a}");
                for w in ts.windows(2) {
                    assert!(w[0].counts() > w[1].counts(), "order broken at n={n} a={a}");
                }
            }
        }
    }

    #[test]
    fn class_sizes_match_multinomials_and_partition_the_cube() {
        assert_eq!(type_class_size(&TypeVector::new(vec![4, 2, 2])), 420u32.into());
        assert_eq!(type_class_size(&TypeVector::new(vec![2, 3])), 10u32.into());
        assert_eq!(type_class_size(&TypeVector::new(vec![0, 5])), 1u32.into());

        for n in 1..=10usize {
            for a in 2..=3usize {
                let total: BigUint = enumerate_types(n, a).iter().map(type_class_size).sum();
                assert_eq!(total, BigUint::from(a).pow(n as u32), "n={n} a={a}");
            }
        }
    }

    #[test]
    fn typicality_is_a_strict_sup_norm_test() {
        let p = SourceDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(is_epsilon_typical(&TypeVector::new(vec![2, 1, 1]), &p, 0.01));
        assert!(!is_epsilon_typical(&TypeVector::new(vec![4, 0, 0]), &p, 0.1));

        // Deviation exactly epsilon is excluded.
        let q = SourceDistribution::uniform(2);
        let t = TypeVector::new(vec![3, 1]);
        assert!(!is_epsilon_typical(&t, &q, 0.25));
        assert!(is_epsilon_typical(&t, &q, 0.2500001));
    }

    #[test]
    fn unit_epsilon_admits_every_type_of_a_nondegenerate_source() {
        for probs in [vec![0.5, 0.5], vec![0.5, 0.25, 0.25]] {
            let p = SourceDistribution::new(probs).unwrap();
            for t in enumerate_types(6, p.alphabet_size()) {
                assert!(is_epsilon_typical(&t, &p, 1.0), "{:?}", t.counts());
            }
        }
    }

    #[test]
    fn log_probability_skips_zero_counts() {
        let p = SourceDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        // Unused zero-probability symbol must not produce NaN or -inf.
        let lp = type_log_probability(&TypeVector::new(vec![2, 2, 0]), &p);
        assert!((lp - (4.0 * 0.5f64.ln())).abs() < 1e-12);
        assert_eq!(
            type_log_probability(&TypeVector::new(vec![2, 1, 1]), &p),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn size_bound_value_and_base_independence() {
        let t = TypeVector::new(vec![2, 2]);
        let b2 = type_class_size_bound(&t, 2.0);
        assert!((b2 - 0.64).abs() < 1e-12);
        assert!(type_class_size(&t).to_f64().unwrap() >= b2);

        for base in [std::f64::consts::E, 10.0, 3.5] {
            let b = type_class_size_bound(&t, base);
            assert!((b - b2).abs() < 1e-9, "base {base}: {b}");
        }
    }

    #[test]
    fn size_bound_holds_across_small_types() {
        for n in 1..=10usize {
            for a in 2..=3usize {
                for t in enumerate_types(n, a) {
                    let size = type_class_size(&t).to_f64().unwrap();
                    let bound = type_class_size_bound(&t, 2.0);
                    assert!(size >= bound - 1e-9, "type {:?}", t.counts());
                }
            }
        }
    }

    #[test]
    fn rank_and_unrank_match_hand_examples() {
        let t = TypeVector::new(vec![2, 1, 1]);
        let first = unrank_in_type_class(&t, &BigUint::zero()).unwrap();
        assert_eq!(first, vec![0, 0, 1, 2]);
        assert_eq!(rank_in_type_class(&[0, 1], 2), BigUint::zero());
        assert!(unrank_in_type_class(&t, &BigUint::from(12u32)).is_err());
    }

    #[test]
    fn unrank_is_the_lexicographic_enumeration() {
        for t in [
            TypeVector::new(vec![2, 1, 1]),
            TypeVector::new(vec![3, 3]),
            TypeVector::new(vec![1, 2, 2]),
        ] {
            let size = type_class_size(&t).to_u64().unwrap();
            let mut prev: Option<Vec<Symbol>> = None;
            for r in 0..size {
                let x = unrank_in_type_class(&t, &BigUint::from(r)).unwrap();
                assert_eq!(empirical_type(&x, t.alphabet_size()), t);
                assert_eq!(rank_in_type_class(&x, t.alphabet_size()), BigUint::from(r));
                if let Some(p) = &prev {
                    assert!(p < &x, "lex order broken at rank {r}");
                }
                prev = Some(x);
            }
        }
    }

    #[test]
    fn row_composition_holds_on_small_classes() {
        assert!(check_row_types(&TypeVector::new(vec![2, 1, 1]), 1 << 16).unwrap());
        for n in 1..=6usize {
            for a in 2..=3usize {
                for t in enumerate_types(n, a) {
                    assert!(check_row_types(&t, 1 << 16).unwrap(), "type {:?}", t.counts());
                }
            }
        }
        // Cap refusal is an error, not a panic.
        assert!(check_row_types(&TypeVector::new(vec![10, 10]), 10).is_err());
    }

    #[test]
    fn variational_distance_basics() {
        assert_eq!(variational_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        let d = variational_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert!(variational_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn sampling_gap_two_ball_urn_is_one_half() {
        // One ball per label, two draws: without replacement forces distinct
        // labels, with replacement repeats half the time.
        let r = sampling_tv_check(&[1, 1], 2, 1 << 20).unwrap();
        assert!((r.tv - 0.5).abs() < 1e-15);
        assert!((r.bound - 2.0).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn sampling_check_rejects_bad_arguments() {
        assert!(sampling_tv_check(&[], 1, 1 << 20).is_err());
        assert!(sampling_tv_check(&[2, 1], 0, 1 << 20).is_err());
        assert!(sampling_tv_check(&[2, 1], 4, 1 << 20).is_err());
        assert!(sampling_tv_check(&[4, 4], 8, 10).is_err());
    }

    #[test]
    fn typical_family_mass_and_emptiness() {
        let p = SourceDistribution::uniform(2);
        // Unit epsilon admits everything, so the mass is the whole cube.
        let all = TypicalFamily::build(&p, 8, 1.0).unwrap();
        assert!((all.probability_mass(&p) - 1.0).abs() < 1e-12);
        assert_eq!(all.total_sequences(), BigUint::from(256u32));

        // n=4, epsilon=0.3 drops exactly the two constant strings.
        let fam = TypicalFamily::build(&p, 4, 0.3).unwrap();
        assert_eq!(fam.total_sequences(), BigUint::from(14u32));
        assert!((fam.probability_mass(&p) - 0.875).abs() < 1e-12);

        // Tight epsilon at odd n over a uniform binary source: no type fits.
        let none = TypicalFamily::build(&p, 1, 0.3).unwrap();
        assert!(none.is_empty());

        assert!(TypicalFamily::build(&p, 0, 0.3).is_err());
        assert!(TypicalFamily::build(&p, 4, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn rank_unrank_roundtrip_on_random_strings(
            x in proptest::collection::vec(0u8..4, 1..14)
        ) {
            let t = empirical_type(&x, 4);
            let r = rank_in_type_class(&x, 4);
            prop_assert!(r < type_class_size(&t));
            let back = unrank_in_type_class(&t, &r).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn variational_distance_is_within_unit_interval(
            a in proptest::collection::vec(0.0f64..1.0, 2..6),
            b in proptest::collection::vec(0.0f64..1.0, 2..6),
        ) {
            let len = a.len().min(b.len());
            let norm = |v: &[f64]| {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| if s > 0.0 { x / s } else { 1.0 / v.len() as f64 }).collect::<Vec<_>>()
            };
            let p = norm(&a[..len]);
            let q = norm(&b[..len]);
            let d = variational_distance(&p, &q).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
        }
    }
}
