//! Pairwise lambda-different option sequences.
//!
//! Two equal-length sequences are lambda-different when they disagree in at
//! least lambda positions, i.e. their Hamming distance is at least lambda.
//! Decoys are produced by rejection sampling: propose a uniform sequence and
//! keep it only if it is far enough from everything already accepted.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{option_letter, OptionSequence};

/// Proposals allowed per accepted sweetword before giving up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SweetwordError {
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no acceptable sweetword after {attempts} proposals ({accepted} of {k} accepted)")]
    AttemptsExhausted { attempts: usize, accepted: usize, k: usize },
    #[error("invalid sweetword parameters: {0}")]
    InvalidParams(String),
}

/// Number of positions where the two sequences differ.
pub fn lambda_distance(a: &OptionSequence, b: &OptionSequence) -> Result<usize, SweetwordError> {
    if a.len() != b.len() {
        return Err(SweetwordError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.as_str().bytes().zip(b.as_str().bytes()).filter(|(x, y)| x != y).count())
}

pub fn is_lambda_different(a: &OptionSequence, b: &OptionSequence, lambda: usize) -> bool {
    lambda_distance(a, b).is_ok_and(|dist| dist >= lambda)
}

/// Uniform sequence of `len` symbols over the first `d` option letters.
pub fn random_sequence<R: Rng + ?Sized>(len: usize, d: u8, rng: &mut R) -> OptionSequence {
    assert!(len >= 1 && d >= 2, "random_sequence needs len >= 1 and d >= 2");
    let s: String = (0..len).map(|_| option_letter(rng.random_range(0..d as usize))).collect();
    OptionSequence::parse(&s, d).expect("letters within alphabet")
}

/// The k stored sequences and, until handed off, where the true one sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweetwordList {
    pub sequences: Vec<OptionSequence>,
    pub true_index: usize,
    pub lambda: usize,
}

impl SweetwordList {
    pub fn true_sequence(&self) -> &OptionSequence {
        &self.sequences[self.true_index]
    }

    pub fn honeywords(&self) -> impl Iterator<Item = &OptionSequence> {
        self.sequences.iter().enumerate().filter(move |(i, _)| *i != self.true_index).map(|(_, s)| s)
    }

    /// Smallest pairwise distance, checked over all pairs.
    pub fn min_pairwise_distance(&self) -> Option<usize> {
        let mut best = None;
        for (i, a) in self.sequences.iter().enumerate() {
            for b in &self.sequences[i + 1..] {
                let dist = lambda_distance(a, b).ok()?;
                best = Some(best.map_or(dist, |m: usize| m.min(dist)));
            }
        }
        best
    }
}

/// Grows the list `[act_ops]` to `k` sequences by rejection sampling, then
/// shuffles it so the true sequence lands at a uniform position.
pub fn generate_sweetwords<R: Rng + ?Sized>(
    k: usize,
    lambda: usize,
    act_ops: &OptionSequence,
    rng: &mut R,
    max_attempts: usize,
) -> Result<SweetwordList, SweetwordError> {
    let len = act_ops.len();
    if k < 2 {
        return Err(SweetwordError::InvalidParams(format!("k = {k} must be at least 2")));
    }
    if lambda > len {
        return Err(SweetwordError::InvalidParams(format!("lambda = {lambda} exceeds length {len}")));
    }
    let d = act_ops.alphabet_size();
    let mut list = vec![act_ops.clone()];
    while list.len() != k {
        let mut attempts = 0;
        loop {
            if attempts == max_attempts {
                return Err(SweetwordError::AttemptsExhausted { attempts, accepted: list.len(), k });
            }
            attempts += 1;
            let candidate = random_sequence(len, d, rng);
            // distance 0 < lambda also rejects repeats when lambda >= 1
            let valid = list.iter().all(|s| lambda_distance(s, &candidate).is_ok_and(|eta| eta >= lambda));
            if valid && (lambda > 0 || !list.contains(&candidate)) {
                list.push(candidate);
                break;
            }
        }
    }
    list.shuffle(rng);
    let true_index = list.iter().position(|s| s == act_ops).expect("act_ops kept");
    Ok(SweetwordList { sequences: list, true_index, lambda })
}

/// Worst-case chance of typing one lambda-different sequence for another:
/// `(1 / (C - 1))^lambda`.
pub fn typo_safety_bound(alphabet: u32, lambda: u32) -> Ratio<u128> {
    assert!(alphabet >= 2, "alphabet size must be at least 2");
    Ratio::new(1, (alphabet as u128 - 1).pow(lambda))
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that a uniform sequence is at least lambda-different from one
/// fixed sequence: `sum_{j >= lambda} C(len, j) (d-1)^j / d^len`.
pub fn feasibility_advice(lambda: usize, len: usize, d: u8) -> f64 {
    if lambda > len {
        return 0.0;
    }
    if lambda == 0 {
        return 1.0;
    }
    let d = d as f64;
    (lambda..=len)
        .map(|j| binomial(len as u64, j as u64) * (d - 1.0).powi(j as i32) / d.powi(len as i32))
        .sum()
}

/// Rough number of proposals needed for a full list: each acceptance must
/// clear every earlier member, so the expected cost grows with k.
pub fn expected_proposals(k: usize, lambda: usize, len: usize, d: u8) -> f64 {
    let p = feasibility_advice(lambda, len, d);
    if p == 0.0 {
        return f64::INFINITY;
    }
    (1..k).map(|m| p.powi(-(m as i32))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(s: &str) -> OptionSequence {
        OptionSequence::parse(s, 4).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(lambda_distance(&seq("AABBCD"), &seq("ABDACC")), Ok(4));
        assert_eq!(lambda_distance(&seq("AABBCD"), &seq("AABBCD")), Ok(0));
        let (a, b) = (seq("AAABBA"), seq("AAADDA"));
        assert_eq!(lambda_distance(&a, &b), Ok(2));
        assert!(is_lambda_different(&a, &b, 2));
        assert!(is_lambda_different(&a, &b, 1));
        assert!(!is_lambda_different(&a, &b, 3));
        assert_eq!(lambda_distance(&seq("AB"), &seq("ABC")), Err(SweetwordError::LengthMismatch(2, 3)));
    }

    #[test]
    fn random_sequence_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = random_sequence(6, 4, &mut rng);
        assert_eq!(s.len(), 6);
        assert!(s.as_str().bytes().all(|c| (b'A'..=b'D').contains(&c)));
    }

    #[test]
    #[should_panic]
    fn random_sequence_rejects_unary_alphabet() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        random_sequence(6, 1, &mut rng);
    }

    #[test]
    fn random_sequence_is_uniform_per_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = [[0usize; 4]; 6];
        for _ in 0..n {
            for (p, o) in random_sequence(6, 4, &mut rng).ordinals().enumerate() {
                counts[p][o as usize] += 1;
            }
        }
        let mean = n as f64 / 4.0;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for row in counts {
            for c in row {
                assert!((c as f64 - mean).abs() < 3.0 * sd);
            }
        }
    }

    #[test]
    fn generates_bdbaaa_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let act = seq("BDBAAA");
        let list = generate_sweetwords(6, 3, &act, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
        assert_eq!(list.sequences.len(), 6);
        assert_eq!(list.true_sequence(), &act);
        assert_eq!(list.sequences.iter().filter(|s| **s == act).count(), 1);
        assert!(list.min_pairwise_distance().unwrap() >= 3);
        assert_eq!(list.honeywords().count(), 5);
    }

    #[test]
    fn lambda_equal_length_differs_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let act = seq("ABCDAB");
        let list = generate_sweetwords(2, 6, &act, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
        let other = list.honeywords().next().unwrap();
        assert_eq!(lambda_distance(&act, other), Ok(6));
    }

    #[test]
    fn infeasible_space_exhausts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let act = OptionSequence::parse("AB", 2).unwrap();
        // only 4 sequences of length 2 over {A, B}
        let err = generate_sweetwords(5, 1, &act, &mut rng, 500).unwrap_err();
        assert_eq!(err, SweetwordError::AttemptsExhausted { attempts: 500, accepted: 4, k: 5 });
        assert!(generate_sweetwords(1, 1, &act, &mut rng, 10).is_err());
        assert!(generate_sweetwords(3, 3, &act, &mut rng, 10).is_err());
    }

    #[test]
    fn same_seed_same_list() {
        let act = seq("CCBABD");
        let a = generate_sweetwords(20, 3, &act, &mut ChaCha8Rng::seed_from_u64(77), DEFAULT_MAX_ATTEMPTS).unwrap();
        let b = generate_sweetwords(20, 3, &act, &mut ChaCha8Rng::seed_from_u64(77), DEFAULT_MAX_ATTEMPTS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn typo_bound_values() {
        assert_eq!(typo_safety_bound(4, 3), Ratio::new(1, 27));
        assert_eq!(typo_safety_bound(4, 4), Ratio::new(1, 81));
        assert_eq!(typo_safety_bound(4, 5), Ratio::new(1, 243));
        assert_eq!(typo_safety_bound(4, 0), Ratio::from_integer(1));
    }

    #[test]
    fn feasibility_values() {
        let p = feasibility_advice(3, 6, 4);
        assert!((p - 3942.0 / 4096.0).abs() < 1e-15);
        assert_eq!(feasibility_advice(0, 6, 4), 1.0);
        assert_eq!(feasibility_advice(7, 6, 4), 0.0);
        assert!(expected_proposals(20, 3, 6, 4) > 19.0);
        assert!(expected_proposals(2, 7, 6, 4).is_infinite());
    }
}
