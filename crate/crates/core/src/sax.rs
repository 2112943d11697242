//! Symbolic aggregate approximation (SAX) of sliding windows.
//!
//! Every window of length `omega` is z-normalized, reduced to `gamma` segment
//! means by PAA and mapped to letters through standard-normal breakpoints.
//! There is no numerosity reduction: a series of length `n` always yields
//! `n - omega + 1` words.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// Windows whose population standard deviation falls below this are treated as flat.
pub const DEFAULT_FLAT_EPSILON: f64 = 1e-8;

pub const MAX_ALPHABET: usize = 26;

/// Alphabet size, word size and sliding-window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SaxParams {
    pub alpha: usize,
    pub gamma: usize,
    pub omega: usize,
}

impl Default for SaxParams {
    fn default() -> Self {
        SaxParams {
            alpha: 4,
            gamma: 4,
            omega: 25,
        }
    }
}

impl SaxParams {
    pub fn new(alpha: usize, gamma: usize, omega: usize) -> Result<Self> {
        let p = SaxParams {
            alpha,
            gamma,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.omega < 2 {
            return Err(Error::InvalidParam(format!(
                "window length must be at least 2, got {}",
                self.omega
            )));
        }
        if self.gamma < 1 || self.gamma > self.omega {
            return Err(Error::InvalidParam(format!(
                "word size must be in 1..={} (window length), got {}",
                self.omega, self.gamma
            )));
        }
        Ok(())
    }

    /// Number of distinct words, `alpha^gamma`, if it fits in a `u128`.
    pub fn vocabulary_size(&self) -> Option<u128> {
        (self.alpha as u128).checked_pow(self.gamma as u32)
    }
}

impl fmt::Display for SaxParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha={} gamma={} omega={}",
            self.alpha, self.gamma, self.omega
        )
    }
}

fn check_alpha(alpha: usize) -> Result<()> {
    if (2..=MAX_ALPHABET).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "alphabet size must be in 2..={MAX_ALPHABET}, got {alpha}"
        )))
    }
}

/// A SAX word over lowercase letters. Ordering is lexicographic, which for
/// words of equal length is the row order of the bag-of-patterns matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SaxWord(String);

impl SaxWord {
    fn from_letter_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        SaxWord(
            indices
                .into_iter()
                .map(|i| (b'a' + i as u8) as char)
                .collect(),
        )
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Zero-based letter indices.
    pub fn letters(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.bytes().map(|b| (b - b'a') as usize)
    }

    /// Checks that the word has `gamma` letters drawn from the first `alpha`.
    pub fn check(&self, params: &SaxParams) -> Result<()> {
        if self.len() != params.gamma || self.letters().any(|l| l >= params.alpha) {
            return Err(Error::DimensionMismatch {
                expected: format!(
                    "word of {} letters over alphabet {}",
                    params.gamma, params.alpha
                ),
                found: format!("'{}'", self.0),
            });
        }
        Ok(())
    }

    /// Row index in lexicographic order, if it fits in a `u128`.
    pub fn index(&self, alpha: usize) -> Option<u128> {
        self.letters().try_fold(0u128, |acc, l| {
            acc.checked_mul(alpha as u128)?.checked_add(l as u128)
        })
    }

    /// Word at lexicographic `index` for the given alphabet and word size.
    pub fn from_index(mut index: u128, alpha: usize, gamma: usize) -> Self {
        let mut letters = vec![0usize; gamma];
        for slot in letters.iter_mut().rev() {
            *slot = (index % alpha as u128) as usize;
            index /= alpha as u128;
        }
        SaxWord::from_letter_indices(letters)
    }
}

impl fmt::Display for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SaxWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(Error::InvalidParam(format!("'{s}' is not a SAX word")));
        }
        Ok(SaxWord(s.to_owned()))
    }
}

impl TryFrom<String> for SaxWord {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SaxWord> for String {
    fn from(w: SaxWord) -> Self {
        w.0
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        Some((index, &value)) => Err(Error::NonFinite { index, value }),
        None => Ok(()),
    }
}

/// Zero mean, unit population standard deviation. Flat windows
/// (`sigma < flat_epsilon`) become all zeros.
pub fn znormalize(window: &[f64], flat_epsilon: f64) -> Result<Vec<f64>> {
    if window.is_empty() {
        return Err(Error::InvalidParam(
            "cannot normalize an empty window".into(),
        ));
    }
    if flat_epsilon.is_nan() || flat_epsilon <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "flat epsilon must be positive, got {flat_epsilon}"
        )));
    }
    check_finite(window)?;
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd < flat_epsilon {
        return Ok(vec![0.0; window.len()]);
    }
    Ok(window.iter().map(|x| (x - mean) / sd).collect())
}

/// Piecewise aggregate approximation with `gamma` equal-width segments.
///
/// When `gamma` does not divide the window length, a sample straddling a
/// segment boundary contributes to both segments in proportion to its overlap.
pub fn paa(window: &[f64], gamma: usize) -> Result<Vec<f64>> {
    let n = window.len();
    if gamma == 0 || gamma > n {
        return Err(Error::InvalidParam(format!(
            "word size {gamma} out of range for window of length {n}"
        )));
    }
    if gamma == n {
        return Ok(window.to_vec());
    }
    if n.is_multiple_of(gamma) {
        let seg = n / gamma;
        return Ok(window
            .chunks_exact(seg)
            .map(|c| c.iter().sum::<f64>() / seg as f64)
            .collect());
    }
    // Scale positions by gamma*n: sample i covers [i*gamma, (i+1)*gamma),
    // segment s covers [s*n, (s+1)*n). Overlaps are integers.
    let mut out = Vec::with_capacity(gamma);
    for s in 0..gamma {
        let (lo, hi) = (s * n, (s + 1) * n);
        let first = lo / gamma;
        let last = (hi - 1) / gamma;
        let mut acc = 0.0;
        for (i, x) in window.iter().enumerate().take(last + 1).skip(first) {
            let overlap = hi.min((i + 1) * gamma) - lo.max(i * gamma);
            acc += overlap as f64 * x;
        }
        out.push(acc / n as f64);
    }
    Ok(out)
}

/// Standard-normal quantiles at `i / alpha` for `i = 1..alpha`.
pub fn breakpoints(alpha: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    Ok((1..alpha)
        .map(|i| normal::inverse_cdf(i as f64 / alpha as f64))
        .collect())
}

fn letter_for(v: f64, cuts: &[f64]) -> usize {
    // Ties at a breakpoint go to the upper letter.
    cuts.partition_point(|&b| b <= v)
}

fn symbolize_with(values: &[f64], cuts: &[f64]) -> Result<SaxWord> {
    check_finite(values)?;
    Ok(SaxWord::from_letter_indices(
        values.iter().map(|&v| letter_for(v, cuts)),
    ))
}

/// Maps each PAA value to the letter of the breakpoint interval `[b_j, b_{j+1})` it falls in.
pub fn symbolize(paa_values: &[f64], alpha: usize) -> Result<SaxWord> {
    let cuts = breakpoints(alpha)?;
    symbolize_with(paa_values, &cuts)
}

/// Reusable encoder holding the breakpoints for one parameter set.
#[derive(Debug, Clone)]
pub struct SaxEncoder {
    params: SaxParams,
    cuts: Vec<f64>,
    flat_epsilon: f64,
}

impl SaxEncoder {
    pub fn new(params: SaxParams, flat_epsilon: f64) -> Result<Self> {
        params.validate()?;
        if flat_epsilon.is_nan() || flat_epsilon <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "flat epsilon must be positive, got {flat_epsilon}"
            )));
        }
        Ok(SaxEncoder {
            cuts: breakpoints(params.alpha)?,
            params,
            flat_epsilon,
        })
    }

    pub fn params(&self) -> &SaxParams {
        &self.params
    }

    pub fn encode_window(&self, window: &[f64]) -> Result<SaxWord> {
        let z = znormalize(window, self.flat_epsilon)?;
        let reduced = paa(&z, self.params.gamma)?;
        symbolize_with(&reduced, &self.cuts)
    }

    pub fn encode(&self, series: &[f64]) -> Result<Vec<SaxWord>> {
        let omega = self.params.omega;
        if omega > series.len() {
            return Err(Error::InvalidParam(format!(
                "window length {omega} exceeds series length {}",
                series.len()
            )));
        }
        series
            .windows(omega)
            .map(|w| self.encode_window(w))
            .collect()
    }
}

/// One word per window position, `n - omega + 1` in total.
pub fn sax_words(series: &[f64], params: &SaxParams, flat_epsilon: f64) -> Result<Vec<SaxWord>> {
    SaxEncoder::new(*params, flat_epsilon)?.encode(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    // Direct recomputation of moments, independent of znormalize.
    fn moments(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        (m, v.sqrt())
    }

    #[test]
    fn znormalize_examples() {
        let z = znormalize(&[1.0, 2.0, 3.0], DEFAULT_FLAT_EPSILON).unwrap();
        let s = (2.0f64 / 3.0).sqrt();
        assert!(close(&z, &[-1.0 / s, 0.0, 1.0 / s], 1e-12));
        assert!((z[0] + 1.224_744_871).abs() < 1e-9);
        let (m, sd) = moments(&z);
        assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);

        assert_eq!(
            znormalize(&[5.0; 4], DEFAULT_FLAT_EPSILON).unwrap(),
            vec![0.0; 4]
        );
        assert!(close(
            &znormalize(&[0.0, 1.0], DEFAULT_FLAT_EPSILON).unwrap(),
            &[-1.0, 1.0],
            1e-15
        ));
    }

    #[test]
    fn znormalize_errors() {
        assert!(matches!(
            znormalize(&[1.0, f64::NAN], 1e-8),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(znormalize(&[], 1e-8).is_err());
        assert!(znormalize(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn paa_examples() {
        assert_eq!(paa(&[1.0, 1.0, 2.0, 2.0], 2).unwrap(), vec![1.0, 2.0]);
        let p = paa(&[0.0, 0.0, 0.0, 10.0, 10.0], 2).unwrap();
        assert!(close(&p, &[0.0, 8.0], 1e-12), "{p:?}");
        let w = [0.3, -1.2, 7.0, 2.5];
        assert_eq!(paa(&w, 4).unwrap(), w.to_vec());
        assert!(paa(&w, 0).is_err());
        assert!(paa(&w, 5).is_err());
    }

    #[test]
    fn paa_fractional_matches_upsampling() {
        // Repeating every sample gamma times makes the segments integral.
        let w = [1.0, -2.0, 0.5, 4.0, 3.0, -1.0, 2.0];
        for gamma in 1..=w.len() {
            let up: Vec<f64> = w
                .iter()
                .flat_map(|&x| std::iter::repeat_n(x, gamma))
                .collect();
            let seg = w.len();
            let want: Vec<f64> = up
                .chunks(seg)
                .map(|c| c.iter().sum::<f64>() / seg as f64)
                .collect();
            assert!(
                close(&paa(&w, gamma).unwrap(), &want, 1e-12),
                "gamma={gamma}"
            );
        }
    }

    #[test]
    fn breakpoints_match_lookup_table() {
        let round2 = |v: Vec<f64>| {
            v.into_iter()
                .map(|x| (x * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        };
        assert_eq!(round2(breakpoints(3).unwrap()), vec![-0.43, 0.43]);
        assert_eq!(round2(breakpoints(4).unwrap()), vec![-0.67, 0.0, 0.67]);
        assert_eq!(
            round2(breakpoints(5).unwrap()),
            vec![-0.84, -0.25, 0.25, 0.84]
        );
        assert_eq!(breakpoints(2).unwrap(), vec![0.0]);
        assert!(breakpoints(1).is_err());
        assert!(breakpoints(27).is_err());
    }

    #[test]
    fn breakpoints_are_increasing_and_antisymmetric() {
        for alpha in 2..=MAX_ALPHABET {
            let b = breakpoints(alpha).unwrap();
            assert_eq!(b.len(), alpha - 1);
            assert!(b.windows(2).all(|w| w[0] < w[1]), "alpha={alpha}");
            for i in 0..b.len() {
                assert!(
                    (b[i] + b[b.len() - 1 - i]).abs() < 1e-9,
                    "alpha={alpha} i={i}"
                );
            }
        }
    }

    #[test]
    fn symbolize_examples() {
        assert_eq!(symbolize(&[-1.0, 0.0, 1.0], 4).unwrap().as_str(), "acd");
        assert_eq!(symbolize(&[0.0; 5], 4).unwrap().as_str(), "ccccc");
        assert_eq!(symbolize(&[0.0], 3).unwrap().as_str(), "b");
        assert!(symbolize(&[f64::INFINITY], 4).is_err());
    }

    #[test]
    fn word_count_without_numerosity_reduction() {
        let series: Vec<f64> = (0..110).map(|i| (i as f64 * 0.3).sin()).collect();
        let p = SaxParams::new(4, 10, 60).unwrap();
        assert_eq!(
            sax_words(&series, &p, DEFAULT_FLAT_EPSILON).unwrap().len(),
            51
        );
        // every window of a ramp normalizes to the same shape; repeats are kept
        let ramp: Vec<f64> = (0..110).map(|i| 0.5 * i as f64).collect();
        let words = sax_words(&ramp, &p, DEFAULT_FLAT_EPSILON).unwrap();
        assert_eq!(words.len(), 51);
        assert!(words.iter().all(|w| *w == words[0]));

        let p = SaxParams::new(4, 4, 110).unwrap();
        assert_eq!(
            sax_words(&series, &p, DEFAULT_FLAT_EPSILON).unwrap().len(),
            1
        );
        let p = SaxParams::new(4, 4, 111).unwrap();
        assert!(sax_words(&series, &p, DEFAULT_FLAT_EPSILON).is_err());
    }

    #[test]
    fn constant_series_gives_middle_words() {
        let p = SaxParams::default();
        let words = sax_words(&[3.2; 45], &p, DEFAULT_FLAT_EPSILON).unwrap();
        assert_eq!(words.len(), 21);
        assert!(words.iter().all(|w| w.as_str() == "cccc"));
    }

    #[test]
    fn params_validation() {
        assert!(SaxParams::new(4, 4, 25).is_ok());
        assert!(SaxParams::new(1, 4, 25).is_err());
        assert!(SaxParams::new(27, 4, 25).is_err());
        assert!(SaxParams::new(4, 0, 25).is_err());
        assert!(SaxParams::new(4, 6, 5).is_err());
        assert!(SaxParams::new(4, 1, 1).is_err());
        assert_eq!(SaxParams::default().vocabulary_size(), Some(256));
    }

    #[test]
    fn word_index_round_trip() {
        let w: SaxWord = "bca".parse().unwrap();
        assert_eq!(w.index(3), Some(9 + 2 * 3));
        assert_eq!(SaxWord::from_index(15, 3, 3), w);
        assert!(w.check(&SaxParams::new(3, 3, 10).unwrap()).is_ok());
        assert!(w.check(&SaxParams::new(2, 3, 10).unwrap()).is_err());
        assert!(w.check(&SaxParams::new(3, 2, 10).unwrap()).is_err());
        assert!("aB".parse::<SaxWord>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn paa_preserves_mean(w in prop::collection::vec(-1e3f64..1e3, 2..80), g in 1usize..80) {
            let gamma = 1 + g % w.len();
            let p = paa(&w, gamma).unwrap();
            prop_assert_eq!(p.len(), gamma);
            let m_in = w.iter().sum::<f64>() / w.len() as f64;
            let m_out = p.iter().sum::<f64>() / gamma as f64;
            prop_assert!((m_in - m_out).abs() <= 1e-9, "{} vs {}", m_in, m_out);
        }

        #[test]
        fn words_respect_alphabet_and_count(
            series in prop::collection::vec(-50f64..50.0, 2..90),
            alpha in 2usize..=26,
            g in 1usize..20,
            o in 2usize..90,
        ) {
            let omega = 2 + o % (series.len() - 1);
            let gamma = 1 + g % omega;
            let p = SaxParams::new(alpha, gamma, omega).unwrap();
            let words = sax_words(&series, &p, DEFAULT_FLAT_EPSILON).unwrap();
            prop_assert_eq!(words.len(), series.len() - omega + 1);
            for w in &words {
                prop_assert!(w.check(&p).is_ok());
            }
        }
    }
}
