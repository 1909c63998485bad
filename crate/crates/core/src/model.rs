//! Sources, distortion measures, and per-sequence arithmetic.

use crate::error::{Error, Result};
use crate::rng;
use rand::RngCore;

/// Symbols are indices into a finite alphabet.
pub type Symbol = u8;

/// How far a distribution's entries may sum from 1.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// An i.i.d. source over a finite alphabet `{0, .., size-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDistribution {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl SourceDistribution {
    /// Validates entries in [0, 1] summing to 1 within `PROB_SUM_TOLERANCE`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "alphabet needs at least 2 symbols, got {}",
                probs.len()
            )));
        }
        if probs.len() > usize::from(Symbol::MAX) + 1 {
            return Err(Error::InvalidDistribution(format!(
                "alphabet size {} exceeds symbol range",
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} is {p}, want a probability in [0, 1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, want 1"
            )));
        }
        let log_probs = probs
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
            .collect();
        Ok(Self { probs, log_probs })
    }

    pub fn uniform(size: usize) -> Self {
        Self::new(vec![1.0 / size as f64; size]).expect("uniform distribution is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, s: Symbol) -> f64 {
        self.probs[usize::from(s)]
    }

    /// Natural log of `prob(s)`; negative infinity on zero-probability symbols.
    pub fn log_prob(&self, s: Symbol) -> f64 {
        self.log_probs[usize::from(s)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A nonnegative per-letter distortion matrix, row-indexed by source symbol
/// and column-indexed by reproduction symbol. Every row must contain a zero
/// so a clairvoyant adversary can reach distortion 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMeasure {
    matrix: Vec<f64>,
    source_size: usize,
    repro_size: usize,
}

impl DistortionMeasure {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDistortion("empty matrix".into()));
        }
        let repro_size = rows[0].len();
        if repro_size == 0 {
            return Err(Error::InvalidDistortion("empty reproduction alphabet".into()));
        }
        if repro_size > usize::from(Symbol::MAX) + 1 {
            return Err(Error::InvalidDistortion(format!(
                "reproduction alphabet size {repro_size} exceeds symbol range"
            )));
        }
        let mut matrix = Vec::with_capacity(rows.len() * repro_size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != repro_size {
                return Err(Error::InvalidDistortion(format!(
                    "row {i} has {} columns, want {repro_size}",
                    row.len()
                )));
            }
            if !row.iter().all(|&v| v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidDistortion(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            if !row.iter().any(|&v| v == 0.0) {
                return Err(Error::InvalidDistortion(format!(
                    "row {i} has no zero entry"
                )));
            }
            matrix.extend_from_slice(row);
        }
        Ok(Self {
            matrix,
            source_size: rows.len(),
            repro_size,
        })
    }

    /// 0/1 loss on a shared alphabet of the given size.
    pub fn hamming(size: usize) -> Self {
        let rows = (0..size)
            .map(|i| (0..size).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::new(rows).expect("0/1 matrix is valid")
    }

    pub fn value(&self, x: Symbol, z: Symbol) -> f64 {
        let (x, z) = (usize::from(x), usize::from(z));
        assert!(x < self.source_size && z < self.repro_size, "symbol out of alphabet");
        self.matrix[x * self.repro_size + z]
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn repro_size(&self) -> usize {
        self.repro_size
    }
}

/// The blind-guess ceiling: the expected distortion of the best constant
/// reproduction symbol, `min_z E[d(X, z)]`, and its argmin (lowest index on
/// ties). No observation can make an estimator do worse than this; the
/// cipher's goal is to force the adversary all the way up to it.
pub fn dmax(p: &SourceDistribution, d: &DistortionMeasure) -> Result<(Symbol, f64)> {
    if p.alphabet_size() != d.source_size() {
        return Err(Error::DimensionMismatch(format!(
            "source alphabet {} vs distortion rows {}",
            p.alphabet_size(),
            d.source_size()
        )));
    }
    let mut best_z = 0;
    let mut best = f64::INFINITY;
    for z in 0..d.repro_size() {
        let v: f64 = (0..p.alphabet_size())
            .map(|x| p.probs()[x] * d.value(x as Symbol, z as Symbol))
            .sum();
        if v < best {
            best = v;
            best_z = z;
        }
    }
    Ok((best_z as Symbol, best))
}

/// Average per-letter distortion between two equal-length sequences.
pub fn sequence_distortion(x: &[Symbol], z: &[Symbol], d: &DistortionMeasure) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: z.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::OutOfRange("sequence distortion needs length >= 1".into()));
    }
    let total: f64 = x.iter().zip(z).map(|(&a, &b)| d.value(a, b)).sum();
    Ok(total / x.len() as f64)
}

/// Natural log of the i.i.d. probability of `x`; negative infinity if any
/// symbol has zero probability.
pub fn sequence_log_probability(p: &SourceDistribution, x: &[Symbol]) -> f64 {
    x.iter().map(|&s| p.log_prob(s)).sum()
}

/// Draw an i.i.d. length-`n` string by per-letter inverse CDF.
pub fn sample_source(p: &SourceDistribution, n: usize, rng: &mut impl RngCore) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng::unit_f64(rng);
        let mut acc = 0.0;
        let mut drawn = (p.alphabet_size() - 1) as Symbol;
        for (s, &prob) in p.probs().iter().enumerate() {
            acc += prob;
            if u < acc {
                drawn = s as Symbol;
                break;
            }
        }
        out.push(drawn);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_distributions() {
        assert!(SourceDistribution::new(vec![1.0]).is_err());
        assert!(SourceDistribution::new(vec![0.6, 0.6]).is_err());
        assert!(SourceDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(SourceDistribution::new(vec![0.5, f64::NAN]).is_err());
        assert!(SourceDistribution::new(vec![0.5, 0.25, 0.25]).is_ok());
    }

    #[test]
    fn rejects_bad_distortion_matrices() {
        assert!(DistortionMeasure::new(vec![]).is_err());
        assert!(DistortionMeasure::new(vec![vec![0.0, 1.0], vec![1.0]]).is_err());
        assert!(DistortionMeasure::new(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).is_err());
        // second row has no zero
        assert!(DistortionMeasure::new(vec![vec![0.0, 1.0], vec![1.0, 2.0]]).is_err());
        assert!(DistortionMeasure::new(vec![vec![0.0, 1.0], vec![3.0, 0.0]]).is_ok());
    }

    #[test]
    fn hamming_matrix_is_zero_one() {
        let d = DistortionMeasure::hamming(3);
        for x in 0..3u8 {
            for z in 0..3u8 {
                assert_eq!(d.value(x, z), if x == z { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn dmax_matches_hand_computations() {
        // Skewed ternary source under 0/1 loss: guess the most likely symbol.
        let p = SourceDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let d = DistortionMeasure::hamming(3);
        let (z, v) = dmax(&p, &d).unwrap();
        assert_eq!(z, 0);
        assert!((v - 0.5).abs() < 1e-15);

        // Asymmetric loss shifts the best guess away from the mode.
        let p = SourceDistribution::new(vec![0.9, 0.1]).unwrap();
        let d = DistortionMeasure::new(vec![vec![0.0, 1.0], vec![3.0, 0.0]]).unwrap();
        let (z, v) = dmax(&p, &d).unwrap();
        assert_eq!(z, 0);
        assert!((v - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dmax_breaks_ties_low() {
        let p = SourceDistribution::uniform(2);
        let d = DistortionMeasure::hamming(2);
        let (z, v) = dmax(&p, &d).unwrap();
        assert_eq!(z, 0);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sequence_distortion_counts_mismatches() {
        let d = DistortionMeasure::hamming(3);
        let x = [0u8, 1, 2, 0];
        let z = [0u8, 2, 2, 1];
        assert!((sequence_distortion(&x, &z, &d).unwrap() - 0.5).abs() < 1e-15);
        assert!(sequence_distortion(&x, &z[..3], &d).is_err());
        assert!(sequence_distortion(&[], &[], &d).is_err());
    }

    #[test]
    fn log_probability_handles_zero_mass_symbols() {
        let p = SourceDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(sequence_log_probability(&p, &[0, 1]).is_finite());
        assert_eq!(sequence_log_probability(&p, &[0, 2]), f64::NEG_INFINITY);
        let q = SourceDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let got = sequence_log_probability(&q, &[0, 1, 2]);
        assert!((got - (0.5f64 * 0.25 * 0.25).ln()).abs() < 1e-12);
    }

    #[test]
    fn sampled_frequencies_approach_the_source() {
        let p = SourceDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let mut rng = crate::rng::stream(&[11, crate::rng::tag::SOURCE]);
        let x = sample_source(&p, 100_000, &mut rng);
        let mut counts = [0usize; 3];
        for &s in &x {
            counts[usize::from(s)] += 1;
        }
        for s in 0..3 {
            let freq = counts[s] as f64 / x.len() as f64;
            assert!((freq - p.probs()[s]).abs() < 0.01, "symbol {s}: {freq}");
        }
    }

    proptest! {
        #[test]
        fn sequence_distortion_is_permutation_invariant(
            pairs in proptest::collection::vec((0u8..3, 0u8..3), 1..40),
            seed in 0u64..1000,
        ) {
            let d = DistortionMeasure::hamming(3);
            let x: Vec<Symbol> = pairs.iter().map(|&(a, _)| a).collect();
            let z: Vec<Symbol> = pairs.iter().map(|&(_, b)| b).collect();
            let base = sequence_distortion(&x, &z, &d).unwrap();

            // Shuffle positions jointly: the average cannot notice.
            let mut idx: Vec<usize> = (0..x.len()).collect();
            let mut rng = crate::rng::stream(&[seed]);
            crate::rng::shuffle(&mut idx, &mut rng);
            let xs: Vec<Symbol> = idx.iter().map(|&i| x[i]).collect();
            let zs: Vec<Symbol> = idx.iter().map(|&i| z[i]).collect();
            let permuted = sequence_distortion(&xs, &zs, &d).unwrap();
            prop_assert!((base - permuted).abs() < 1e-12);
        }

        #[test]
        fn sampled_symbols_lie_in_alphabet(n in 0usize..50, seed in 0u64..1000) {
            let p = SourceDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
            let mut rng = crate::rng::stream(&[seed]);
            let x = sample_source(&p, n, &mut rng);
            prop_assert_eq!(x.len(), n);
            prop_assert!(x.iter().all(|&s| usize::from(s) < 3));
        }
    }
}
