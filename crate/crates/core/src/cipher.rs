//! Encoder and decoder over a bin partition.
//!
//! The transmitted message is `(bin, cipher)`: the bin index in the clear and
//! the within-bin offset shifted by the shared key modulo the bin capacity.
//! Typical strings round-trip exactly; an atypical input makes the encoder
//! emit a uniformly random message, and the decoder (which is total) then
//! returns some typical string, counting as a decode error.

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::model::{sample_source, SourceDistribution, Symbol};
use crate::rng::{self, tag};
use rand::RngCore;
use std::fmt;
use std::str::FromStr;

/// Shared key, uniform on `{0, .., capacity-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecretKey(pub u64);

/// Whether the within-bin offset is masked by the key. `Disabled` exists as
/// the negative control: with the pad off, the exact full-message adversary
/// sees the offset and recovers typical strings perfectly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadMode {
    OneTimePad,
    Disabled,
}

/// One wire message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub bin: u64,
    pub cipher: u64,
}

impl fmt::Display for Message {
    /// Wire format: the two indices in decimal, one message per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.bin, self.cipher)
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let bin = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::OutOfRange(format!("bad message line {s:?}")))?;
        let cipher = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::OutOfRange(format!("bad message line {s:?}")))?;
        if it.next().is_some() {
            return Err(Error::OutOfRange(format!("bad message line {s:?}")));
        }
        Ok(Self { bin, cipher })
    }
}

/// Encode with the pad on. `rng` is consumed only for atypical inputs.
pub fn encode(
    cb: &Codebook,
    x: &[Symbol],
    key: SecretKey,
    rng: &mut impl RngCore,
) -> Message {
    encode_with_pad(cb, x, key, PadMode::OneTimePad, rng)
}

pub fn encode_with_pad(
    cb: &Codebook,
    x: &[Symbol],
    key: SecretKey,
    pad: PadMode,
    rng: &mut impl RngCore,
) -> Message {
    assert!(key.0 < cb.capacity(), "key outside the key alphabet");
    match cb.locate(x) {
        Some(addr) => {
            let cipher = match pad {
                PadMode::OneTimePad => (addr.offset + key.0) % cb.capacity(),
                PadMode::Disabled => addr.offset,
            };
            Message {
                bin: addr.bin,
                cipher,
            }
        }
        // Atypical input: a uniform message over the whole message set.
        None => Message {
            bin: rng::bounded_u64(rng, cb.num_bins()),
            cipher: rng::bounded_u64(rng, cb.capacity()),
        },
    }
}

/// Total decoder: unshift the offset and wrap modulo the bin size, so even a
/// residual bin maps every `(message, key)` pair to some member.
pub fn decode(cb: &Codebook, m: Message, key: SecretKey) -> Result<Vec<Symbol>> {
    let k = cb.capacity();
    assert!(key.0 < k, "key outside the key alphabet");
    if m.cipher >= k {
        return Err(Error::OutOfRange(format!(
            "cipher index {} out of range ({k} values)",
            m.cipher
        )));
    }
    let raw = (m.cipher + k - key.0) % k;
    let size = cb.bin_size(m.bin)?;
    cb.bin_member(m.bin, raw % size)
}

/// Decode the same message under the pad-off convention.
pub fn decode_with_pad(cb: &Codebook, m: Message, key: SecretKey, pad: PadMode) -> Result<Vec<Symbol>> {
    match pad {
        PadMode::OneTimePad => decode(cb, m, key),
        PadMode::Disabled => decode(cb, m, SecretKey(0)),
    }
}

/// Decode-error probability estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorProbability {
    /// The exact value: the probability of an atypical source string, since
    /// typical strings round-trip perfectly and atypical ones never do.
    Exact(f64),
    MonteCarlo {
        estimate: f64,
        stderr: f64,
        trials: u64,
    },
}

impl ErrorProbability {
    pub fn value(&self) -> f64 {
        match *self {
            ErrorProbability::Exact(v) => v,
            ErrorProbability::MonteCarlo { estimate, .. } => estimate,
        }
    }
}

/// Exact decode-error probability: `1 - P[typical]`.
pub fn decode_error_probability_exact(cb: &Codebook, p: &SourceDistribution) -> Result<ErrorProbability> {
    Ok(ErrorProbability::Exact(
        (1.0 - cb.typical_mass(p)?).max(0.0),
    ))
}

/// Monte Carlo decode-error probability over full encode/decode round trips.
pub fn decode_error_probability_mc(
    cb: &Codebook,
    p: &SourceDistribution,
    trials: u64,
    seed: u64,
) -> Result<ErrorProbability> {
    if trials < 2 {
        return Err(Error::OutOfRange("need at least 2 trials".into()));
    }
    let (estimate, stderr) = rng::chunked_mc(&[seed, tag::MC_CHUNK], trials, &|rng| {
        let x = sample_source(p, cb.n(), rng);
        let key = SecretKey(rng::bounded_u64(rng, cb.capacity()));
        let m = encode(cb, &x, key, rng);
        let decoded = decode(cb, m, key).expect("decoder is total on wire messages");
        if decoded == x {
            0.0
        } else {
            1.0
        }
    });
    Ok(ErrorProbability::MonteCarlo {
        estimate,
        stderr,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn uniform_binary_book() -> (SourceDistribution, Codebook) {
        let p = SourceDistribution::uniform(2);
        let cb = Codebook::build(&p, 4, 0.3, 4, 9).unwrap();
        (p, cb)
    }

    #[test]
    fn offset_shift_matches_hand_example() {
        // Offset 2 with key 5 in a capacity-8 bin lands on cipher index 7.
        let p = SourceDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let cb = Codebook::build(&p, 4, 0.1, 8, 7).unwrap();
        let x = cb.bin_member(0, 2).unwrap();
        let mut rng = stream(&[0]);
        let m = encode(&cb, &x, SecretKey(5), &mut rng);
        assert_eq!(m, Message { bin: 0, cipher: 7 });
        assert_eq!(decode(&cb, m, SecretKey(5)).unwrap(), x);
    }

    #[test]
    fn typical_strings_roundtrip_for_every_key() {
        let (_, cb) = uniform_binary_book();
        let mut rng = stream(&[1]);
        for bin in 0..cb.num_bins() {
            for offset in 0..cb.bin_size(bin).unwrap() {
                let x = cb.bin_member(bin, offset).unwrap();
                for key in 0..cb.capacity() {
                    let m = encode(&cb, &x, SecretKey(key), &mut rng);
                    assert_eq!(decode(&cb, m, SecretKey(key)).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn decoder_is_total_on_the_message_set() {
        // Residual bins wrap: every (message, key) pair decodes to a member.
        let p = SourceDistribution::uniform(2);
        let cb = Codebook::build(&p, 6, 0.34, 4, 2).unwrap();
        for bin in 0..cb.num_bins() {
            for cipher in 0..cb.capacity() {
                for key in 0..cb.capacity() {
                    let m = Message { bin, cipher };
                    let x = decode(&cb, m, SecretKey(key)).unwrap();
                    assert_eq!(cb.locate(&x).unwrap().bin, bin);
                }
            }
        }
        // Outside the message set: errors, not panics.
        assert!(decode(&cb, Message { bin: cb.num_bins(), cipher: 0 }, SecretKey(0)).is_err());
        assert!(decode(&cb, Message { bin: 0, cipher: 99 }, SecretKey(0)).is_err());
    }

    #[test]
    fn atypical_inputs_error_and_their_messages_stay_in_range() {
        let (_, cb) = uniform_binary_book();
        let mut rng = stream(&[2]);
        for x in [[0u8, 0, 0, 0], [1, 1, 1, 1]] {
            for key in 0..cb.capacity() {
                let m = encode(&cb, &x, SecretKey(key), &mut rng);
                assert!(m.bin < cb.num_bins() && m.cipher < cb.capacity());
                assert_ne!(decode(&cb, m, SecretKey(key)).unwrap(), x);
            }
        }
    }

    #[test]
    fn pad_masks_the_offset_and_its_absence_leaks_it() {
        let (_, cb) = uniform_binary_book();
        let x = cb.bin_member(1, 2).unwrap();
        let mut rng = stream(&[3]);
        let masked = encode_with_pad(&cb, &x, SecretKey(3), PadMode::OneTimePad, &mut rng);
        let leaked = encode_with_pad(&cb, &x, SecretKey(3), PadMode::Disabled, &mut rng);
        assert_eq!(leaked.cipher, 2, "pad off transmits the raw offset");
        assert_ne!(masked.cipher, leaked.cipher);
        assert_eq!(
            decode_with_pad(&cb, leaked, SecretKey(3), PadMode::Disabled).unwrap(),
            x
        );
    }

    #[test]
    fn cipher_index_is_key_uniform_given_the_source_string() {
        // Exhaustively over typical strings: as the key sweeps the key
        // alphabet, the cipher index sweeps the whole residue ring, so
        // knowing x tells you nothing about which cipher index appears.
        let (_, cb) = uniform_binary_book();
        let mut rng = stream(&[4]);
        for bin in 0..cb.num_bins() {
            for offset in 0..cb.bin_size(bin).unwrap() {
                let x = cb.bin_member(bin, offset).unwrap();
                let mut seen: Vec<u64> = (0..cb.capacity())
                    .map(|key| encode(&cb, &x, SecretKey(key), &mut rng).cipher)
                    .collect();
                seen.sort_unstable();
                assert_eq!(seen, (0..cb.capacity()).collect::<Vec<u64>>());
            }
        }
    }

    #[test]
    fn wire_format_roundtrips() {
        let m = Message { bin: 17, cipher: 3 };
        assert_eq!(m.to_string(), "17 3");
        assert_eq!("17 3".parse::<Message>().unwrap(), m);
        assert!("17".parse::<Message>().is_err());
        assert!("17 3 9".parse::<Message>().is_err());
        assert!("a b".parse::<Message>().is_err());
    }

    #[test]
    fn exact_error_probability_matches_the_atypical_mass() {
        let (p, cb) = uniform_binary_book();
        // n=4, epsilon=0.3 excludes exactly the two constant strings.
        let got = decode_error_probability_exact(&cb, &p).unwrap();
        assert!((got.value() - 0.125).abs() < 1e-12);

        // Unit epsilon: everything is typical, no decode errors.
        let cb = Codebook::build(&p, 4, 1.0, 4, 9).unwrap();
        let got = decode_error_probability_exact(&cb, &p).unwrap();
        assert!(got.value().abs() < 1e-12);
    }

    #[test]
    fn error_probability_shrinks_as_epsilon_grows() {
        let p = SourceDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let mut prev = 1.0;
        for eps in [0.15, 0.3, 0.6, 1.0] {
            let cb = Codebook::build(&p, 6, eps, 4, 1).unwrap();
            let e = decode_error_probability_exact(&cb, &p).unwrap().value();
            assert!(e <= prev + 1e-12, "epsilon {eps}: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn monte_carlo_error_probability_brackets_the_exact_value() {
        let (p, cb) = uniform_binary_book();
        let got = decode_error_probability_mc(&cb, &p, 100_000, 5).unwrap();
        let ErrorProbability::MonteCarlo { estimate, stderr, trials } = got else {
            panic!("wrong variant");
        };
        assert_eq!(trials, 100_000);
        assert!(stderr > 0.0);
        assert!((estimate - 0.125).abs() < 3.0 * stderr, "{estimate} vs 0.125 +- {stderr}");
    }

    #[test]
    fn monte_carlo_is_deterministic_given_the_seed() {
        let (p, cb) = uniform_binary_book();
        let a = decode_error_probability_mc(&cb, &p, 4096, 5).unwrap();
        let b = decode_error_probability_mc(&cb, &p, 4096, 5).unwrap();
        assert_eq!(a, b);
        let c = decode_error_probability_mc(&cb, &p, 4096, 6).unwrap();
        assert_ne!(a.value(), c.value());
    }
}
