//! Bag-of-words, multivariate bag-of-patterns and TF-DF feature extraction.
//!
//! A [`BopMatrix`] has one column per channel and one (implicit) row per
//! possible SAX word. Only present words are stored, so large alphabets and
//! word sizes never allocate `alpha^gamma` rows. Logarithms are base 10.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{EventLabel, EventRecord, TimeSeries};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::sax::{SaxEncoder, SaxParams, SaxWord, DEFAULT_FLAT_EPSILON};

/// Word counts of one channel. Absent words have count zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bow {
    counts: BTreeMap<SaxWord, u32>,
}

impl Bow {
    /// Builds a bag from explicit counts; zero counts are dropped.
    pub fn from_counts(
        params: &SaxParams,
        counts: impl IntoIterator<Item = (SaxWord, u32)>,
    ) -> Result<Self> {
        let mut bow = Bow::default();
        for (w, c) in counts {
            w.check(params)?;
            if c > 0 {
                *bow.counts.entry(w).or_insert(0) += c;
            }
        }
        Ok(bow)
    }

    pub fn get(&self, word: &SaxWord) -> u32 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SaxWord, u32)> {
        self.counts.iter().map(|(w, &c)| (w, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }

    /// Number of distinct words present.
    pub fn support(&self) -> usize {
        self.counts.len()
    }

    /// Dense export in lexicographic row order. Fails if `alpha^gamma` is not addressable.
    pub fn to_dense(&self, params: &SaxParams) -> Result<Vec<u32>> {
        let size = params
            .vocabulary_size()
            .and_then(|s| usize::try_from(s).ok())
            .ok_or_else(|| {
                Error::InvalidParam(format!("vocabulary too large for dense export ({params})"))
            })?;
        let mut dense = vec![0; size];
        for (w, c) in self.iter() {
            let i = w.index(params.alpha).expect("word fits vocabulary") as usize;
            dense[i] = c;
        }
        Ok(dense)
    }
}

/// Counts word occurrences. Every word must have `gamma` letters from the first `alpha`.
pub fn bow(words: &[SaxWord], params: &SaxParams) -> Result<Bow> {
    let mut bow = Bow::default();
    for w in words {
        w.check(params)?;
        *bow.counts.entry(w.clone()).or_insert(0) += 1;
    }
    Ok(bow)
}

/// One bag-of-words column per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BopMatrix {
    params: SaxParams,
    columns: Vec<Bow>,
}

impl BopMatrix {
    pub fn from_columns(params: SaxParams, columns: Vec<Bow>) -> Result<Self> {
        params.validate()?;
        if columns.is_empty() {
            return Err(Error::InvalidParam(
                "BOP matrix needs at least one channel".into(),
            ));
        }
        Ok(BopMatrix { params, columns })
    }

    pub fn params(&self) -> &SaxParams {
        &self.params
    }

    pub fn channel_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Bow] {
        &self.columns
    }

    pub fn count(&self, word: &SaxWord, channel: usize) -> u32 {
        self.columns[channel].get(word)
    }

    /// Per word, the number of channels in which it occurs.
    pub fn document_counts(&self) -> BTreeMap<&SaxWord, usize> {
        let mut dc = BTreeMap::new();
        for col in &self.columns {
            for (w, _) in col.iter() {
                *dc.entry(w).or_insert(0) += 1;
            }
        }
        dc
    }
}

/// Encodes every channel and stacks the resulting bags as columns.
pub fn bop_matrix(channels: &[TimeSeries], params: &SaxParams) -> Result<BopMatrix> {
    let enc = SaxEncoder::new(*params, DEFAULT_FLAT_EPSILON)?;
    bop_matrix_with(channels, &enc)
}

pub fn bop_matrix_with(channels: &[TimeSeries], enc: &SaxEncoder) -> Result<BopMatrix> {
    if channels.is_empty() {
        return Err(Error::InvalidParam(
            "BOP matrix needs at least one channel".into(),
        ));
    }
    let params = enc.params();
    let columns = channels
        .iter()
        .map(|c| bow(&enc.encode(c.samples())?, params))
        .collect::<Result<Vec<_>>>()?;
    BopMatrix::from_columns(*params, columns)
}

/// Log-scaled term frequency: `1 + log10(count)`, or 0 for an absent word.
pub fn tf(count: u32) -> f64 {
    if count == 0 {
        0.0
    } else {
        1.0 + (count as f64).log10()
    }
}

/// Scaled document frequency `exp(containing / total - 1)`, in `(1/e, 1]`.
pub fn df(channels_containing: usize, total_channels: usize) -> Result<f64> {
    if total_channels == 0 {
        return Err(Error::InvalidParam(
            "document frequency needs at least one channel".into(),
        ));
    }
    if channels_containing > total_channels {
        return Err(Error::InvalidParam(format!(
            "{channels_containing} containing channels exceeds total {total_channels}"
        )));
    }
    Ok((channels_containing as f64 / total_channels as f64 - 1.0).exp())
}

/// Classical inverse document frequency `log10(total / containing)`.
///
/// Not used by the feature pipeline, which weights by [`df`] instead.
pub fn idf(channels_containing: usize, total_channels: usize) -> Result<f64> {
    if channels_containing == 0 || channels_containing > total_channels {
        return Err(Error::InvalidParam(format!(
            "containing channels must be in 1..={total_channels}, got {channels_containing}"
        )));
    }
    Ok((total_channels as f64 / channels_containing as f64).log10())
}

/// TF-DF weights, same sparsity pattern as the source counts.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    params: SaxParams,
    columns: Vec<BTreeMap<SaxWord, f64>>,
}

impl WeightMatrix {
    pub fn params(&self) -> &SaxParams {
        &self.params
    }

    pub fn channel_count(&self) -> usize {
        self.columns.len()
    }

    pub fn weight(&self, word: &SaxWord, channel: usize) -> f64 {
        self.columns[channel].get(word).copied().unwrap_or(0.0)
    }

    pub fn column(&self, channel: usize) -> &BTreeMap<SaxWord, f64> {
        &self.columns[channel]
    }
}

pub fn weight_matrix(m: &BopMatrix) -> WeightMatrix {
    let n = m.channel_count();
    let dfs: BTreeMap<&SaxWord, f64> = m
        .document_counts()
        .into_iter()
        .map(|(w, c)| (w, df(c, n).expect("count bounded by channel total")))
        .collect();
    let columns = m
        .columns
        .iter()
        .map(|col| {
            col.iter()
                .map(|(w, c)| (w.clone(), tf(c) * dfs[w]))
                .collect()
        })
        .collect();
    WeightMatrix {
        params: m.params,
        columns,
    }
}

/// Row means of the weight matrix (divisor = total channel count).
pub fn feature_vector_block(w: &WeightMatrix) -> BTreeMap<SaxWord, f64> {
    let mut sums: BTreeMap<SaxWord, f64> = BTreeMap::new();
    for col in &w.columns {
        for (word, &v) in col {
            *sums.entry(word.clone()).or_insert(0.0) += v;
        }
    }
    let n = w.channel_count() as f64;
    sums.values_mut().for_each(|v| *v /= n);
    sums
}

/// Which channel group a feature comes from. Current sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    Current,
    Voltage,
}

impl Block {
    pub fn tag(self) -> char {
        match self {
            Block::Current => 'i',
            Block::Voltage => 'v',
        }
    }
}

/// `(block, word)` coordinate of a feature, written `"i:abcd"` / `"v:abcd"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureKey {
    pub block: Block,
    pub word: SaxWord,
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.block.tag(), self.word)
    }
}

impl FromStr for FeatureKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, word) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParam(format!("bad feature key '{s}'")))?;
        let block = match tag {
            "i" => Block::Current,
            "v" => Block::Voltage,
            _ => return Err(Error::InvalidParam(format!("bad feature block in '{s}'"))),
        };
        Ok(FeatureKey {
            block,
            word: word.parse()?,
        })
    }
}

impl TryFrom<String> for FeatureKey {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureKey> for String {
    fn from(k: FeatureKey) -> Self {
        k.to_string()
    }
}

/// Sparse `[current block | voltage block]` vector of length `2 * alpha^gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    alpha: usize,
    gamma: usize,
    entries: BTreeMap<FeatureKey, f64>,
}

impl FeatureVector {
    pub fn new(alpha: usize, gamma: usize, entries: BTreeMap<FeatureKey, f64>) -> Result<Self> {
        let fv = FeatureVector {
            alpha,
            gamma,
            entries,
        };
        fv.validate()?;
        Ok(fv)
    }

    pub fn validate(&self) -> Result<()> {
        let p = SaxParams {
            alpha: self.alpha,
            gamma: self.gamma,
            omega: self.gamma.max(2),
        };
        p.validate()?;
        for (k, &v) in &self.entries {
            k.word.check(&p)?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidData(format!(
                    "feature {k} has invalid value {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// Nominal length `2 * alpha^gamma`, saturating at `u128::MAX`.
    pub fn dim(&self) -> u128 {
        (self.alpha as u128)
            .checked_pow(self.gamma as u32)
            .and_then(|v| v.checked_mul(2))
            .unwrap_or(u128::MAX)
    }

    pub fn get(&self, key: &FeatureKey) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &BTreeMap<FeatureKey, f64> {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        FeatureVector {
            alpha: self.alpha,
            gamma: self.gamma,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
        }
    }

    /// Entries of one block, keyed by word.
    pub fn block(&self, block: Block) -> impl Iterator<Item = (&SaxWord, f64)> {
        self.entries
            .iter()
            .filter(move |(k, _)| k.block == block)
            .map(|(k, &v)| (&k.word, v))
    }
}

fn block_features(
    channels: &[TimeSeries],
    enc: &SaxEncoder,
    block: Block,
    out: &mut BTreeMap<FeatureKey, f64>,
) -> Result<()> {
    let w = weight_matrix(&bop_matrix_with(channels, enc)?);
    for (word, v) in feature_vector_block(&w) {
        out.insert(FeatureKey { block, word }, v);
    }
    Ok(())
}

pub fn extract_features_with(record: &EventRecord, enc: &SaxEncoder) -> Result<FeatureVector> {
    let mut entries = BTreeMap::new();
    block_features(record.currents(), enc, Block::Current, &mut entries)?;
    block_features(record.voltages(), enc, Block::Voltage, &mut entries)?;
    Ok(FeatureVector {
        alpha: enc.params().alpha,
        gamma: enc.params().gamma,
        entries,
    })
}

/// Current-block then voltage-block TF-DF row means for one record.
pub fn extract_features(record: &EventRecord, params: &SaxParams) -> Result<FeatureVector> {
    extract_features_with(record, &SaxEncoder::new(*params, DEFAULT_FLAT_EPSILON)?)
}

/// Features for every record, in record order.
pub fn extract_features_batch(
    records: &[EventRecord],
    params: &SaxParams,
    exec: Execution,
) -> Result<Vec<FeatureVector>> {
    let enc = SaxEncoder::new(*params, DEFAULT_FLAT_EPSILON)?;
    exec.try_map(records, |r| extract_features_with(r, &enc))
}

/// One line of the `featurize` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub label: EventLabel,
    pub sax: SaxParams,
    pub features: BTreeMap<FeatureKey, f64>,
}

impl FeatureRecord {
    pub fn new(
        id: impl Into<String>,
        label: EventLabel,
        sax: SaxParams,
        fv: FeatureVector,
    ) -> Self {
        FeatureRecord {
            id: id.into(),
            label,
            sax,
            features: fv.entries,
        }
    }

    pub fn feature_vector(&self) -> Result<FeatureVector> {
        FeatureVector::new(self.sax.alpha, self.sax.gamma, self.features.clone())
    }
}
