//! The eavesdropper: posteriors over source strings given what leaks, the
//! per-position optimal estimator, and exact, Monte Carlo, and brute-force
//! computations of the adversary's expected distortion.
//!
//! Everything rests on one decomposition: for additive per-letter distortion,
//! the best reproduction given a message minimizes each position separately,
//! so the exact engine only needs, per message, the unnormalized per-position
//! symbol weights. For a typical string in bin `J` those weights come from the
//! bin's member counts; an atypical string contributes its probability spread
//! uniformly over the message set. Summing per-message minima over the whole
//! message set gives the adversary's expected distortion with no sampling
//! error.

use crate::caps::EngineCaps;
use crate::cipher::{encode_with_pad, Message, PadMode, SecretKey};
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::model::{
    dmax, sample_source, sequence_distortion, sequence_log_probability, DistortionMeasure,
    SourceDistribution, Symbol,
};
use crate::rng::{self, tag};
use crate::types::{empirical_type, type_log_probability};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// What the adversary observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observe {
    /// The full wire message `(bin, cipher)`.
    FullMessage,
    /// Only the bin index. With the pad on this is a sufficient statistic:
    /// the cipher index carries nothing the bin did not already say.
    BinOnly,
}

impl Observe {
    pub fn as_str(&self) -> &'static str {
        match self {
            Observe::FullMessage => "full_message",
            Observe::BinOnly => "bin_only",
        }
    }
}

impl fmt::Display for Observe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Observe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_message" => Ok(Observe::FullMessage),
            "bin_only" => Ok(Observe::BinOnly),
            _ => Err(Error::OutOfRange(format!("unknown observe mode {s:?}"))),
        }
    }
}

/// Which computation produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Exact,
    MonteCarlo,
    BruteForce,
}

impl EngineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::Exact => "exact",
            EngineKind::MonteCarlo => "monte_carlo",
            EngineKind::BruteForce => "brute_force",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(EngineKind::Exact),
            "monte_carlo" => Ok(EngineKind::MonteCarlo),
            "brute_force" => Ok(EngineKind::BruteForce),
            _ => Err(Error::OutOfRange(format!("unknown engine {s:?}"))),
        }
    }
}

/// How atypical source strings enter the adversary's weights. `Ignore` is a
/// diagnostic that restricts the expectation to the typical event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtypicalModel {
    Exact,
    Ignore,
}

/// One computed cell, ready for a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub n: usize,
    pub k: u64,
    pub epsilon: f64,
    pub seed: u64,
    pub observe: Observe,
    pub engine: EngineKind,
    /// The adversary's expected per-letter distortion.
    pub distortion: f64,
    /// Standard error of the estimate; 0 for exact engines.
    pub stderr: f64,
    /// Blind-guess ceiling `min_z E[d(X, z)]`.
    pub dmax: f64,
    /// `dmax - distortion`; how far the system is from ideal secrecy.
    pub gap: f64,
    /// Exact decode-error probability of the cell's codebook.
    pub p_err: f64,
    /// Message rate in bits per source letter.
    pub rate: f64,
}

impl DistortionReport {
    pub const CSV_HEADER: &'static str =
        "n,k,epsilon,seed,observe_mode,engine,distortion,stderr,dmax,gap,p_err,rate";

    /// One CSV row matching [`Self::CSV_HEADER`]. Floats print in shortest
    /// round-trip form, so rows are stable across runs and platforms.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.epsilon,
            self.seed,
            self.observe,
            self.engine,
            self.distortion,
            self.stderr,
            self.dmax,
            self.gap,
            self.p_err,
            self.rate
        )
    }
}

/// Tolerance for the full-message vs. bin-only agreement check.
pub const SUFFSTAT_TOLERANCE: f64 = 1e-12;

/// Result of [`suffstat_equivalence_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuffStatReport {
    pub full_message: f64,
    pub bin_only: f64,
    pub difference: f64,
    pub holds: bool,
}

// ---------------------------------------------------------------------------
// Posterior tables

/// An explicit posterior over source strings: parallel lists of strings and
/// normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    support: Vec<Vec<Symbol>>,
    weights: Vec<f64>,
}

impl PosteriorTable {
    /// Normalizes the given nonnegative weights. All support strings must
    /// share one length.
    pub fn new(support: Vec<Vec<Symbol>>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} support strings vs {} weights",
                support.len(),
                weights.len()
            )));
        }
        let n = support[0].len();
        if n == 0 || support.iter().any(|x| x.len() != n) {
            return Err(Error::DimensionMismatch(
                "support strings must share one positive length".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "posterior weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution(
                "posterior weights sum to zero".into(),
            ));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { support, weights })
    }

    /// Posterior after observing that the string lies in the given bin:
    /// weights proportional to source probability, computed from each
    /// member's type so equal-type members get bitwise-equal weights.
    pub fn from_bin(members: Vec<Vec<Symbol>>, p: &SourceDistribution) -> Result<Self> {
        let weights = members
            .iter()
            .map(|x| type_log_probability(&empirical_type(x, p.alphabet_size()), p).exp())
            .collect();
        Self::new(members, weights)
    }

    pub fn support(&self) -> &[Vec<Symbol>] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false // `new` rejects empty supports
    }

    pub fn sequence_length(&self) -> usize {
        self.support[0].len()
    }

    /// Per-position marginals, flattened `[position * alphabet + symbol]`.
    pub fn position_weights(&self, alphabet_size: usize) -> Vec<f64> {
        let n = self.sequence_length();
        let mut w = vec![0.0; n * alphabet_size];
        for (x, &weight) in self.support.iter().zip(&self.weights) {
            for (i, &s) in x.iter().enumerate() {
                w[i * alphabet_size + usize::from(s)] += weight;
            }
        }
        w
    }

    /// Posterior expected per-letter distortion of answering `z`.
    pub fn expected_distortion(&self, z: &[Symbol], d: &DistortionMeasure) -> Result<f64> {
        let mut total = 0.0;
        for (x, &w) in self.support.iter().zip(&self.weights) {
            total += w * sequence_distortion(x, z, d)?;
        }
        Ok(total)
    }
}

/// Best constant-per-position response to unnormalized symbol weights:
/// the reproduction symbol minimizing `sum_s w[s] d(s, z)`, lowest index on
/// ties, together with the attained value.
fn best_symbol(weights: &[f64], d: &DistortionMeasure) -> (Symbol, f64) {
    let mut best = f64::INFINITY;
    let mut best_z = 0;
    for z in 0..d.repro_size() {
        let v: f64 = weights
            .iter()
            .enumerate()
            .map(|(s, &w)| w * d.value(s as Symbol, z as Symbol))
            .sum();
        if v < best {
            best = v;
            best_z = z;
        }
    }
    (best_z as Symbol, best)
}

/// The adversary's optimal reproduction string for a posterior: each position
/// independently minimizes posterior expected letter distortion, ties to the
/// lowest reproduction symbol.
pub fn optimal_reproduction(
    post: &PosteriorTable,
    d: &DistortionMeasure,
) -> Result<Vec<Symbol>> {
    let alpha = d.source_size();
    if post.support.iter().flatten().any(|&s| usize::from(s) >= alpha) {
        return Err(Error::DimensionMismatch(
            "posterior support symbol outside distortion matrix".into(),
        ));
    }
    let w = post.position_weights(alpha);
    Ok((0..post.sequence_length())
        .map(|i| best_symbol(&w[i * alpha..(i + 1) * alpha], d).0)
        .collect())
}

/// Scans every reproduction string (up to `cap` of them) for the posterior
/// minimizer; ties resolve to the lexicographically smallest string. The
/// non-separable oracle the fast estimator is checked against.
pub fn brute_force_best_response(
    post: &PosteriorTable,
    d: &DistortionMeasure,
    cap: u64,
) -> Result<(Vec<Symbol>, f64)> {
    let n = post.sequence_length();
    let space = (d.repro_size() as u64)
        .checked_pow(n as u32)
        .filter(|&c| c <= cap)
        .ok_or_else(|| {
            Error::CapExceeded(format!(
                "{}^{n} reproduction strings exceed cap {cap}",
                d.repro_size()
            ))
        })?;
    let mut z = vec![0 as Symbol; n];
    let mut best: Option<(Vec<Symbol>, f64)> = None;
    for _ in 0..space {
        let v = post.expected_distortion(&z, d)?;
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((z.clone(), v));
        }
        for slot in z.iter_mut().rev() {
            *slot += 1;
            if usize::from(*slot) < d.repro_size() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(best.expect("nonempty reproduction space"))
}

// ---------------------------------------------------------------------------
// Partition statistics shared by the engines

struct BinStats {
    /// Probability of any single member string (they share a type).
    member_prob: f64,
    size: u64,
    /// Member symbol counts, flattened `[position * alphabet + symbol]`.
    counts: Vec<u32>,
}

struct PartitionStats {
    bins: Vec<BinStats>,
    /// Per-position probability that the source is atypical with symbol `s`
    /// at that position; all zeros when ignored or absent.
    atypical: Vec<f64>,
}

fn build_stats(
    cb: &Codebook,
    p: &SourceDistribution,
    atypical: AtypicalModel,
) -> Result<PartitionStats> {
    let n = cb.n();
    let alpha = cb.source_size();
    let bins: Vec<BinStats> = (0..cb.num_bins())
        .into_par_iter()
        .map(|bin| -> Result<BinStats> {
            let t = cb.bin_type(bin)?;
            let member_prob = type_log_probability(t, p).exp();
            let size = cb.bin_size(bin)?;
            let mut counts = vec![0u32; n * alpha];
            for offset in 0..size {
                let x = cb.bin_member(bin, offset)?;
                for (i, &s) in x.iter().enumerate() {
                    counts[i * alpha + usize::from(s)] += 1;
                }
            }
            Ok(BinStats {
                member_prob,
                size,
                counts,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let atypical = match atypical {
        AtypicalModel::Ignore => vec![0.0; alpha],
        AtypicalModel::Exact => {
            // A[s] = P(s) - sum over admitted types of
            //        P[one member] * |class| * counts[s] / n,
            // the per-position mass the typical set does not account for.
            // Position-independent because each class is row-balanced.
            let mut a: Vec<f64> = p.probs().to_vec();
            for (t, class_size) in cb.type_summaries() {
                let member_prob = type_log_probability(t, p).exp();
                for (s, &c) in t.counts().iter().enumerate() {
                    a[s] -= member_prob * class_size as f64 * c as f64 / n as f64;
                }
            }
            for v in a.iter_mut() {
                *v = v.max(0.0);
            }
            a
        }
    };
    Ok(PartitionStats { bins, atypical })
}

/// Unnormalized per-position joint weights for the full message `(bin,
/// cipher)`, flattened `[position * alphabet + symbol]`. Summing any
/// position's weights over symbols gives the message probability.
fn full_message_weights(
    stats: &PartitionStats,
    cb: &Codebook,
    bin: u64,
    cipher: u64,
    pad: PadMode,
) -> Result<Vec<f64>> {
    let n = cb.n();
    let alpha = cb.source_size();
    let b = &stats.bins[bin as usize];
    let atyp_share = 1.0 / cb.message_count() as f64;
    let mut w = vec![0.0; n * alpha];
    for i in 0..n {
        for s in 0..alpha {
            w[i * alpha + s] = stats.atypical[s] * atyp_share;
        }
    }
    match pad {
        PadMode::OneTimePad => {
            // Each member appears under exactly one key, so each carries
            // 1/capacity of its probability into every cipher index.
            let share = b.member_prob / cb.capacity() as f64;
            for (slot, &c) in w.iter_mut().zip(&b.counts) {
                *slot += share * f64::from(c);
            }
        }
        PadMode::Disabled => {
            // The cipher index names one member outright.
            if cipher < b.size {
                let x = cb.bin_member(bin, cipher)?;
                for (i, &s) in x.iter().enumerate() {
                    w[i * alpha + usize::from(s)] += b.member_prob;
                }
            }
        }
    }
    Ok(w)
}

/// Unnormalized per-position joint weights for observing only the bin index.
/// The pad does not enter: it only shuffles the unobserved cipher index.
fn bin_only_weights(stats: &PartitionStats, cb: &Codebook, bin: u64) -> Vec<f64> {
    let alpha = cb.source_size();
    let b = &stats.bins[bin as usize];
    let atyp_share = 1.0 / cb.num_bins() as f64;
    let mut w = vec![0.0; cb.n() * alpha];
    for i in 0..cb.n() {
        for s in 0..alpha {
            w[i * alpha + s] =
                stats.atypical[s] * atyp_share + b.member_prob * f64::from(b.counts[i * alpha + s]);
        }
    }
    w
}

fn validate_shapes(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
) -> Result<()> {
    if p.alphabet_size() != cb.source_size() || d.source_size() != cb.source_size() {
        return Err(Error::DimensionMismatch(format!(
            "partition alphabet {}, source {}, distortion rows {}",
            cb.source_size(),
            p.alphabet_size(),
            d.source_size()
        )));
    }
    Ok(())
}

fn finish_report(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
    observe: Observe,
    engine: EngineKind,
    seed: u64,
    distortion: f64,
    stderr: f64,
) -> Result<DistortionReport> {
    let (_, ceiling) = dmax(p, d)?;
    let counts = cb.rate_and_counts(p)?;
    Ok(DistortionReport {
        n: cb.n(),
        k: cb.capacity(),
        epsilon: cb.epsilon(),
        seed,
        observe,
        engine,
        distortion,
        stderr,
        dmax: ceiling,
        gap: ceiling - distortion,
        p_err: (1.0 - counts.typical_mass).max(0.0),
        rate: counts.rate,
    })
}

// ---------------------------------------------------------------------------
// Engines

/// Exact expected adversary distortion by full message enumeration: for each
/// message, the per-position minima over the unnormalized joint weights; the
/// sum over the message set is the expectation, with no sampling error.
pub fn exact_adversary_distortion(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
    observe: Observe,
    pad: PadMode,
    atypical: AtypicalModel,
    caps: &EngineCaps,
) -> Result<DistortionReport> {
    validate_shapes(cb, p, d)?;
    if cb.n() > caps.type_enum_n {
        return Err(Error::CapExceeded(format!(
            "block length {} exceeds exact-engine cap {}",
            cb.n(),
            caps.type_enum_n
        )));
    }
    let message_count = match observe {
        Observe::FullMessage => cb.message_count(),
        Observe::BinOnly => u128::from(cb.num_bins()),
    };
    if message_count > u128::from(caps.messages) {
        return Err(Error::CapExceeded(format!(
            "{message_count} messages exceed cap {}",
            caps.messages
        )));
    }
    let stats = build_stats(cb, p, atypical)?;
    let n = cb.n();
    let alpha = cb.source_size();
    let nf = n as f64;

    let per_bin: Vec<f64> = (0..cb.num_bins())
        .into_par_iter()
        .map(|bin| -> Result<f64> {
            match observe {
                Observe::BinOnly => {
                    let w = bin_only_weights(&stats, cb, bin);
                    let total: f64 = (0..n)
                        .map(|i| best_symbol(&w[i * alpha..(i + 1) * alpha], d).1)
                        .sum();
                    Ok(total / nf)
                }
                Observe::FullMessage => {
                    let mut acc = 0.0;
                    for cipher in 0..cb.capacity() {
                        let w = full_message_weights(&stats, cb, bin, cipher, pad)?;
                        let total: f64 = (0..n)
                            .map(|i| best_symbol(&w[i * alpha..(i + 1) * alpha], d).1)
                            .sum();
                        acc += total / nf;
                    }
                    Ok(acc)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    // Bin order is fixed, so this sum is deterministic for any worker count.
    let distortion: f64 = per_bin.iter().sum();
    finish_report(
        cb,
        p,
        d,
        observe,
        EngineKind::Exact,
        cb.seed(),
        distortion,
        0.0,
    )
}

/// Monte Carlo estimate of the same quantity: simulate source, key, and
/// encoder, apply the adversary's optimal estimator to the message, and
/// average the realized distortion.
pub fn mc_adversary_distortion(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
    observe: Observe,
    pad: PadMode,
    trials: u64,
    seed: u64,
) -> Result<DistortionReport> {
    validate_shapes(cb, p, d)?;
    if trials < 2 {
        return Err(Error::OutOfRange("need at least 2 trials".into()));
    }
    let stats = build_stats(cb, p, AtypicalModel::Exact)?;
    let n = cb.n();
    let alpha = cb.source_size();
    let (mean, stderr) = rng::chunked_mc(&[seed, tag::MC_CHUNK], trials, &|rng| {
        let x = sample_source(p, n, rng);
        let key = SecretKey(rng::bounded_u64(rng, cb.capacity()));
        let m = encode_with_pad(cb, &x, key, pad, rng);
        let w = match observe {
            Observe::FullMessage => {
                full_message_weights(&stats, cb, m.bin, m.cipher, pad)
                    .expect("wire message in range")
            }
            Observe::BinOnly => bin_only_weights(&stats, cb, m.bin),
        };
        let z: Vec<Symbol> = (0..n)
            .map(|i| best_symbol(&w[i * alpha..(i + 1) * alpha], d).0)
            .collect();
        sequence_distortion(&x, &z, d).expect("lengths match")
    });
    finish_report(
        cb,
        p,
        d,
        observe,
        EngineKind::MonteCarlo,
        seed,
        mean,
        stderr,
    )
}

/// Independent oracle: per message, scan the entire reproduction-string space
/// for the minimizer of the posterior expected distortion, with no
/// per-position separability assumption. Pad on, atypical mass exact.
pub fn brute_force_oracle(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
    caps: &EngineCaps,
) -> Result<DistortionReport> {
    validate_shapes(cb, p, d)?;
    let n = cb.n();
    let zspace = (d.repro_size() as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::CapExceeded("reproduction space overflows".into()))?;
    cb.message_count()
        .checked_mul(zspace)
        .filter(|&s| s <= u128::from(caps.oracle_scan))
        .ok_or_else(|| {
            Error::CapExceeded(format!(
                "oracle scan of {} messages x {zspace} strings exceeds cap {}",
                cb.message_count(),
                caps.oracle_scan
            ))
        })?;
    let stats = build_stats(cb, p, AtypicalModel::Exact)?;
    let mc = cb.message_count() as f64;

    let mut total = 0.0;
    for bin in 0..cb.num_bins() {
        let members = cb.bin_contents(bin)?;
        let member_share = stats.bins[bin as usize].member_prob / cb.capacity() as f64;
        for _cipher in 0..cb.capacity() {
            // Pad on: every cipher index carries the same member set at
            // 1/capacity weight. Scanned independently per message anyway.
            let mut best = f64::INFINITY;
            let mut z = vec![0 as Symbol; n];
            for _ in 0..zspace {
                let mut v = 0.0;
                for x in &members {
                    v += member_share * sequence_distortion(x, &z, d)?;
                }
                // Atypical remainder, spread over the whole message set.
                let mut atyp = 0.0;
                for &zi in &z {
                    for (s, &a) in stats.atypical.iter().enumerate() {
                        atyp += a * d.value(s as Symbol, zi);
                    }
                }
                v += atyp / (mc * n as f64);
                if v < best {
                    best = v;
                }
                for slot in z.iter_mut().rev() {
                    *slot += 1;
                    if usize::from(*slot) < d.repro_size() {
                        break;
                    }
                    *slot = 0;
                }
            }
            total += best;
        }
    }
    finish_report(
        cb,
        p,
        d,
        Observe::FullMessage,
        EngineKind::BruteForce,
        cb.seed(),
        total,
        0.0,
    )
}

/// Dispatch on an engine choice.
pub enum EngineMode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

pub fn expected_adversary_distortion(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
    observe: Observe,
    pad: PadMode,
    mode: &EngineMode,
    caps: &EngineCaps,
) -> Result<DistortionReport> {
    match *mode {
        EngineMode::Exact => {
            exact_adversary_distortion(cb, p, d, observe, pad, AtypicalModel::Exact, caps)
        }
        EngineMode::MonteCarlo { trials, seed } => {
            mc_adversary_distortion(cb, p, d, observe, pad, trials, seed)
        }
    }
}

// ---------------------------------------------------------------------------
// Posteriors conditioned on actual observations

/// Exact posterior over source strings given a full wire message. The
/// support covers every string with positive joint probability: the bin's
/// members (all of them with the pad on; the one named member with it off)
/// plus, when atypical mass exists, every atypical positive-probability
/// string.
pub fn posterior_given_message(
    cb: &Codebook,
    p: &SourceDistribution,
    m: Message,
    pad: PadMode,
    caps: &EngineCaps,
) -> Result<PosteriorTable> {
    if p.alphabet_size() != cb.source_size() {
        return Err(Error::DimensionMismatch(
            "source alphabet does not match the partition".into(),
        ));
    }
    if m.bin >= cb.num_bins() || m.cipher >= cb.capacity() {
        return Err(Error::OutOfRange(format!(
            "message {m} outside the message set"
        )));
    }
    let mut support = Vec::new();
    let mut weights = Vec::new();

    let t = cb.bin_type(m.bin)?;
    let member_prob = type_log_probability(t, p).exp();
    match pad {
        PadMode::OneTimePad => {
            for x in cb.bin_contents(m.bin)? {
                support.push(x);
                weights.push(member_prob / cb.capacity() as f64);
            }
        }
        PadMode::Disabled => {
            if m.cipher < cb.bin_size(m.bin)? {
                support.push(cb.bin_member(m.bin, m.cipher)?);
                weights.push(member_prob);
            }
        }
    }

    push_atypical_support(
        cb,
        p,
        1.0 / cb.message_count() as f64,
        caps,
        &mut support,
        &mut weights,
    )?;

    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroProbabilityMessage {
            bin: m.bin,
            cipher: m.cipher,
        });
    }
    PosteriorTable::new(support, weights)
}

/// Exact posterior given only the bin index.
pub fn posterior_given_bin(
    cb: &Codebook,
    p: &SourceDistribution,
    bin: u64,
    caps: &EngineCaps,
) -> Result<PosteriorTable> {
    if p.alphabet_size() != cb.source_size() {
        return Err(Error::DimensionMismatch(
            "source alphabet does not match the partition".into(),
        ));
    }
    let t = cb.bin_type(bin)?;
    let member_prob = type_log_probability(t, p).exp();
    let mut support = cb.bin_contents(bin)?;
    let mut weights = vec![member_prob; support.len()];

    push_atypical_support(
        cb,
        p,
        1.0 / cb.num_bins() as f64,
        caps,
        &mut support,
        &mut weights,
    )?;
    PosteriorTable::new(support, weights)
}

/// Appends every atypical positive-probability string at `share` times its
/// probability. Skipped entirely when the typical set carries all the mass.
fn push_atypical_support(
    cb: &Codebook,
    p: &SourceDistribution,
    share: f64,
    caps: &EngineCaps,
    support: &mut Vec<Vec<Symbol>>,
    weights: &mut Vec<f64>,
) -> Result<()> {
    let atypical_mass = 1.0 - cb.typical_mass(p)?;
    if atypical_mass <= 0.0 {
        return Ok(());
    }
    let n = cb.n();
    let alpha = cb.source_size();
    (alpha as u64)
        .checked_pow(n as u32)
        .filter(|&c| c <= caps.posterior_support)
        .ok_or_else(|| {
            Error::CapExceeded(format!(
                "{alpha}^{n} strings exceed posterior support cap {}",
                caps.posterior_support
            ))
        })?;
    let mut x = vec![0 as Symbol; n];
    loop {
        if cb.locate(&x).is_none() {
            let lp = sequence_log_probability(p, &x);
            if lp > f64::NEG_INFINITY {
                support.push(x.clone());
                weights.push(lp.exp() * share);
            }
        }
        let mut done = true;
        for slot in x.iter_mut().rev() {
            *slot += 1;
            if usize::from(*slot) < alpha {
                done = false;
                break;
            }
            *slot = 0;
        }
        if done {
            break;
        }
    }
    Ok(())
}

/// Computes the exact adversary distortion under both observation modes (pad
/// on) and checks they agree within [`SUFFSTAT_TOLERANCE`]: the encrypted
/// offset is uniform garbage, so the bin index alone is a sufficient
/// statistic of the message.
pub fn suffstat_equivalence_check(
    cb: &Codebook,
    p: &SourceDistribution,
    d: &DistortionMeasure,
    caps: &EngineCaps,
) -> Result<SuffStatReport> {
    let full = exact_adversary_distortion(
        cb,
        p,
        d,
        Observe::FullMessage,
        PadMode::OneTimePad,
        AtypicalModel::Exact,
        caps,
    )?;
    let bin = exact_adversary_distortion(
        cb,
        p,
        d,
        Observe::BinOnly,
        PadMode::OneTimePad,
        AtypicalModel::Exact,
        caps,
    )?;
    let difference = (full.distortion - bin.distortion).abs();
    Ok(SuffStatReport {
        full_message: full.distortion,
        bin_only: bin.distortion,
        difference,
        holds: difference <= SUFFSTAT_TOLERANCE,
    })
}
