//! Multiclass models over sparse TF-DF features.
//!
//! Both kinds standardize every feature seen in training to zero mean and
//! unit variance (constant features keep scale 1) and reduce prediction to an
//! argmax of per-class affine scores:
//!
//! * nearest centroid: score `2 z.c - |c|^2`, i.e. minus the squared
//!   Euclidean distance up to a class-independent term;
//! * one-vs-rest linear SVM: the decision value `w.z + b`.
//!
//! Features absent from the training vocabulary are ignored; they would
//! shift every class score equally.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::svm::{self, Problem, Row};
use crate::data::EventLabel;
use crate::error::{Error, Result};
use crate::sax::SaxParams;
use crate::synth::derive_seed;
use crate::vectorize::{FeatureKey, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NearestCentroid,
    LinearSvmOvr,
}

impl ClassifierKind {
    /// Short name used on the command line and in sweep output.
    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::NearestCentroid => "centroid",
            ClassifierKind::LinearSvmOvr => "svm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" | "nearest_centroid" => Ok(ClassifierKind::NearestCentroid),
            "svm" | "linear_svm_ovr" => Ok(ClassifierKind::LinearSvmOvr),
            _ => Err(Error::InvalidParam(format!("unknown classifier '{s}'"))),
        }
    }
}

/// SVM settings; nearest centroid ignores them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 1e-4,
            epochs: 50,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParam(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParam("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub scale: f64,
}

/// Parameters of one class, in standardized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub label: EventLabel,
    /// Training records of this class. Classes with none are never predicted.
    pub support: usize,
    /// SVM intercept; zero for nearest centroid.
    #[serde(default)]
    pub bias: f64,
    /// Centroid coordinates or SVM weights. Missing keys are zero.
    pub values: BTreeMap<FeatureKey, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    kind: ClassifierKind,
    hyperparams: Hyperparams,
    alpha: usize,
    gamma: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sax: Option<SaxParams>,
    standardization: BTreeMap<FeatureKey, FeatureStats>,
    classes: Vec<ClassParams>,
}

/// Per-class affine score `sum_k coef_k x_k + offset` on raw features.
#[derive(Debug, Clone, PartialEq)]
struct Scorer {
    index: HashMap<FeatureKey, usize>,
    coef: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct ClassifierModel {
    file: ModelFile,
    scorer: Scorer,
}

impl TryFrom<ModelFile> for ClassifierModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        let labels: Vec<EventLabel> = file.classes.iter().map(|c| c.label).collect();
        if labels != EventLabel::ALL {
            return Err(Error::InvalidData(
                "model must hold one parameter set per label, in canonical order".into(),
            ));
        }
        let finite = file
            .standardization
            .values()
            .all(|s| s.mean.is_finite() && s.scale.is_finite() && s.scale > 0.0)
            && file
                .classes
                .iter()
                .all(|c| c.bias.is_finite() && c.values.values().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::InvalidData("model parameters must be finite".into()));
        }
        let scorer = compile(&file);
        Ok(ClassifierModel { file, scorer })
    }
}

impl From<ClassifierModel> for ModelFile {
    fn from(m: ClassifierModel) -> Self {
        m.file
    }
}

fn compile(file: &ModelFile) -> Scorer {
    let keys: Vec<&FeatureKey> = file.standardization.keys().collect();
    let index: HashMap<FeatureKey, usize> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| ((*k).clone(), i))
        .collect();
    let stats: Vec<FeatureStats> = file.standardization.values().copied().collect();
    let mut coef = Vec::with_capacity(file.classes.len());
    let mut offset = Vec::with_capacity(file.classes.len());
    for class in &file.classes {
        let mut c = vec![0.0; keys.len()];
        let mut off = 0.0;
        let mut norm2 = 0.0;
        for (key, &val) in &class.values {
            let Some(&k) = index.get(key) else { continue };
            let s = stats[k];
            c[k] = val / s.scale;
            off -= val * s.mean / s.scale;
            norm2 += val * val;
        }
        match file.kind {
            ClassifierKind::LinearSvmOvr => {
                off += class.bias;
            }
            ClassifierKind::NearestCentroid => {
                c.iter_mut().for_each(|v| *v *= 2.0);
                off = 2.0 * off - norm2;
            }
        }
        if class.support == 0 {
            off = f64::NEG_INFINITY;
        }
        coef.push(c);
        offset.push(off);
    }
    Scorer {
        index,
        coef,
        offset,
    }
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        self.file.kind
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.file.hyperparams
    }

    /// SAX parameters the features were built with, when recorded.
    pub fn sax(&self) -> Option<SaxParams> {
        self.file.sax
    }

    pub fn with_sax(mut self, sax: SaxParams) -> Self {
        self.file.sax = Some(sax);
        self
    }

    /// Nominal feature dimension `2 * alpha^gamma`.
    pub fn feature_dim(&self) -> u128 {
        (self.file.alpha as u128)
            .checked_pow(self.file.gamma as u32)
            .and_then(|v| v.checked_mul(2))
            .unwrap_or(u128::MAX)
    }

    pub fn vocabulary_len(&self) -> usize {
        self.file.standardization.len()
    }

    pub fn standardization(&self) -> &BTreeMap<FeatureKey, FeatureStats> {
        &self.file.standardization
    }

    pub fn classes(&self) -> &[ClassParams] {
        &self.file.classes
    }

    fn check_dims(&self, f: &FeatureVector) -> Result<()> {
        if f.alpha() != self.file.alpha || f.gamma() != self.file.gamma {
            return Err(Error::DimensionMismatch {
                expected: format!("alpha={} gamma={}", self.file.alpha, self.file.gamma),
                found: format!("alpha={} gamma={}", f.alpha(), f.gamma()),
            });
        }
        Ok(())
    }

    /// Per-class scores in canonical label order (higher is better).
    pub fn scores(&self, f: &FeatureVector) -> Result<[f64; EventLabel::COUNT]> {
        self.check_dims(f)?;
        let sc = &self.scorer;
        let mut out = [0.0; EventLabel::COUNT];
        for (c, slot) in out.iter_mut().enumerate() {
            let mut s = sc.offset[c];
            if s.is_finite() {
                for (key, &x) in f.entries() {
                    if let Some(&k) = sc.index.get(key) {
                        s += sc.coef[c][k] * x;
                    }
                }
            }
            *slot = s;
        }
        Ok(out)
    }

    pub fn predict(&self, f: &FeatureVector) -> Result<EventLabel> {
        let scores = self.scores(f)?;
        Ok(argmax(&scores))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// First maximal index wins, giving canonical-order tie breaking.
pub(crate) fn argmax(scores: &[f64; EventLabel::COUNT]) -> EventLabel {
    let mut best = 0;
    for c in 1..scores.len() {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    EventLabel::ALL[best]
}

pub fn predict(model: &ClassifierModel, f: &FeatureVector) -> Result<EventLabel> {
    model.predict(f)
}

/// Relative threshold under which a feature's spread counts as zero.
const ZERO_SPREAD: f64 = 1e-12;

pub fn train(
    samples: &[(FeatureVector, EventLabel)],
    kind: ClassifierKind,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<ClassifierModel> {
    let refs: Vec<(&FeatureVector, EventLabel)> = samples.iter().map(|(f, l)| (f, *l)).collect();
    train_refs(&refs, kind, hyper, seed)
}

pub(crate) fn train_refs(
    samples: &[(&FeatureVector, EventLabel)],
    kind: ClassifierKind,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<ClassifierModel> {
    hyper.validate()?;
    let Some(&(first, _)) = samples.first() else {
        return Err(Error::InvalidData("cannot train on an empty set".into()));
    };
    let (alpha, gamma) = (first.alpha(), first.gamma());
    if let Some((f, _)) = samples
        .iter()
        .find(|(f, _)| f.alpha() != alpha || f.gamma() != gamma)
    {
        return Err(Error::DimensionMismatch {
            expected: format!("alpha={alpha} gamma={gamma}"),
            found: format!("alpha={} gamma={}", f.alpha(), f.gamma()),
        });
    }
    let mut support = [0usize; EventLabel::COUNT];
    for (_, l) in samples {
        support[l.index()] += 1;
    }
    if support.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(Error::InvalidData(
            "training needs at least two classes".into(),
        ));
    }

    let keys: Vec<FeatureKey> = samples
        .iter()
        .flat_map(|(f, _)| f.entries().keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let index: HashMap<&FeatureKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let rows: Vec<Vec<(usize, f64)>> = samples
        .iter()
        .map(|(f, _)| f.entries().iter().map(|(k, &v)| (index[k], v)).collect())
        .collect();

    let m = samples.len() as f64;
    let dim = keys.len();
    let mut sum = vec![0.0; dim];
    let mut nnz = vec![0usize; dim];
    for row in &rows {
        for &(k, v) in row {
            sum[k] += v;
            nnz[k] += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let mut sq = vec![0.0; dim];
    for row in &rows {
        for &(k, v) in row {
            sq[k] += (v - mean[k]).powi(2);
        }
    }
    let scale: Vec<f64> = (0..dim)
        .map(|k| {
            let absent = (samples.len() - nnz[k]) as f64;
            let var = (sq[k] + absent * mean[k] * mean[k]) / m;
            let sd = var.sqrt();
            if sd > ZERO_SPREAD * mean[k].abs().max(1.0) {
                sd
            } else {
                1.0
            }
        })
        .collect();

    let labels: Vec<EventLabel> = samples.iter().map(|(_, l)| *l).collect();
    let class_values: Vec<(f64, Vec<f64>)> = match kind {
        ClassifierKind::NearestCentroid => EventLabel::ALL
            .iter()
            .map(|&label| {
                let n = support[label.index()];
                let mut c = vec![0.0; dim];
                if n > 0 {
                    for (row, _) in rows.iter().zip(&labels).filter(|(_, &l)| l == label) {
                        for &(k, v) in row {
                            c[k] += v;
                        }
                    }
                    for k in 0..dim {
                        c[k] = (c[k] / n as f64 - mean[k]) / scale[k];
                    }
                }
                (0.0, c)
            })
            .collect(),
        ClassifierKind::LinearSvmOvr => {
            let p: Vec<f64> = mean.iter().zip(&scale).map(|(m, s)| m / s).collect();
            let srows: Vec<Row> = rows
                .iter()
                .map(|r| Row {
                    qx: r.iter().map(|&(k, v)| (k, v / scale[k])).collect(),
                    pqx: r.iter().map(|&(k, v)| p[k] * v / scale[k]).sum(),
                })
                .collect();
            let prob = Problem {
                rows: &srows,
                p: &p,
                pp: p.iter().map(|v| v * v).sum(),
            };
            EventLabel::ALL
                .iter()
                .map(|&label| {
                    let y: Vec<f64> = labels
                        .iter()
                        .map(|&l| if l == label { 1.0 } else { -1.0 })
                        .collect();
                    let sol = svm::train_binary(
                        &prob,
                        &y,
                        hyper.lambda,
                        hyper.epochs,
                        derive_seed(seed, label.index() as u64),
                    );
                    (sol.bias, sol.weights)
                })
                .collect()
        }
    };

    let standardization = keys
        .iter()
        .zip(mean.iter().zip(&scale))
        .map(|(k, (&mean, &scale))| (k.clone(), FeatureStats { mean, scale }))
        .collect();
    let classes = EventLabel::ALL
        .iter()
        .zip(class_values)
        .map(|(&label, (bias, vals))| ClassParams {
            label,
            support: support[label.index()],
            bias,
            values: keys
                .iter()
                .zip(vals)
                .filter(|(_, v)| *v != 0.0)
                .map(|(k, v)| (k.clone(), v))
                .collect(),
        })
        .collect();
    ClassifierModel::try_from(ModelFile {
        kind,
        hyperparams: *hyper,
        alpha,
        gamma,
        sax: None,
        standardization,
        classes,
    })
}
