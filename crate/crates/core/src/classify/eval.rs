//! Stratified k-fold cross-validation and confusion-matrix metrics.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{train_refs, ClassifierKind, Hyperparams};
use crate::data::{Dataset, EventLabel};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::sax::SaxParams;
use crate::synth::derive_seed;
use crate::vectorize::{extract_features_batch, FeatureVector};

const N: usize = EventLabel::COUNT;

/// Rows are true labels, columns predicted labels, both in canonical order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion(pub [[u64; N]; N]);

impl Confusion {
    pub fn add(&mut self, truth: EventLabel, predicted: EventLabel) {
        self.0[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn row_sums(&self) -> [u64; N] {
        self.0.map(|r| r.iter().sum())
    }

    pub fn col_sums(&self) -> [u64; N] {
        let mut s = [0; N];
        for row in &self.0 {
            for (c, v) in row.iter().enumerate() {
                s[c] += v;
            }
        }
        s
    }

    pub fn merge(&mut self, other: &Confusion) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Confusion,
    /// Per class: correct / true count (0 for an empty row).
    pub recall: [f64; N],
    /// Per class: correct / predicted count (0 for an empty column).
    pub ppv: [f64; N],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion_to_report(confusion: &Confusion) -> EvalReport {
    let rows = confusion.row_sums();
    let cols = confusion.col_sums();
    let diag: [u64; N] = std::array::from_fn(|i| confusion.0[i][i]);
    EvalReport {
        accuracy: ratio(confusion.trace(), confusion.total()),
        confusion: *confusion,
        recall: std::array::from_fn(|i| ratio(diag[i], rows[i])),
        ppv: std::array::from_fn(|i| ratio(diag[i], cols[i])),
    }
}

impl EvalReport {
    /// `label,<predicted labels...>,recall_pct,ppv_pct` rows plus a trailing accuracy row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_label");
        for l in EventLabel::ALL {
            out.push(',');
            out.push_str(l.as_str());
        }
        out.push_str(",recall_pct,ppv_pct\n");
        for l in EventLabel::ALL {
            let i = l.index();
            out.push_str(l.as_str());
            for v in self.confusion.0[i] {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(
                ",{:.1},{:.1}\n",
                self.recall[i] * 100.0,
                self.ppv[i] * 100.0
            ));
        }
        out.push_str(&format!("accuracy_pct,{:.1}\n", self.accuracy * 100.0));
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const CORNER: &str = "true \\ predicted";
        let names = EventLabel::ALL.map(|l| l.as_str());
        let first = names
            .iter()
            .map(|n| n.len())
            .max()
            .unwrap_or(0)
            .max(CORNER.len());
        let w = names.iter().map(|n| n.len()).max().unwrap_or(0);
        writeln!(
            f,
            "accuracy: {:.1}% ({} / {})",
            self.accuracy * 100.0,
            self.confusion.trace(),
            self.confusion.total()
        )?;
        writeln!(f)?;
        write!(f, "{CORNER:<first$}")?;
        for n in names {
            write!(f, " {n:>w$}")?;
        }
        writeln!(f, " {:>8}", "recall")?;
        for (i, n) in names.iter().enumerate() {
            write!(f, "{n:<first$}")?;
            for v in self.confusion.0[i] {
                write!(f, " {v:>w$}")?;
            }
            writeln!(f, " {:>7.1}%", self.recall[i] * 100.0)?;
        }
        write!(f, "{:<first$}", "ppv")?;
        for p in self.ppv {
            write!(f, " {:>w$}", format!("{:.1}%", p * 100.0))?;
        }
        writeln!(f)
    }
}

/// Fold index for every record. Records are shuffled by `seed`, grouped by
/// label and dealt round-robin, so fold sizes (overall and per class) differ
/// by at most one.
pub fn fold_assignment(labels: &[EventLabel], k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|&i| labels[i]);
    let mut folds = vec![0; labels.len()];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

fn check_folds(n: usize, labels: &[EventLabel], k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParam(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidParam(format!("{k} folds exceed {n} records")));
    }
    let mut seen = [false; N];
    labels.iter().for_each(|l| seen[l.index()] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::InvalidData(
            "cross-validation needs at least two classes".into(),
        ));
    }
    Ok(())
}

/// Cross-validates on precomputed features.
pub fn kfold_features(
    features: &[FeatureVector],
    labels: &[EventLabel],
    kind: ClassifierKind,
    hyper: &Hyperparams,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<EvalReport> {
    if features.len() != labels.len() {
        return Err(Error::InvalidParam(
            "features and labels differ in length".into(),
        ));
    }
    check_folds(features.len(), labels, k)?;
    let folds = fold_assignment(labels, k, seed);
    let per_fold = exec.map_range(k, |fold| -> Result<Confusion> {
        let train: Vec<(&FeatureVector, EventLabel)> = features
            .iter()
            .zip(labels)
            .zip(&folds)
            .filter(|(_, &f)| f != fold)
            .map(|((x, &l), _)| (x, l))
            .collect();
        let model = train_refs(&train, kind, hyper, derive_seed(seed, fold as u64))?;
        let mut c = Confusion::default();
        for ((x, &l), _) in features
            .iter()
            .zip(labels)
            .zip(&folds)
            .filter(|(_, &f)| f == fold)
        {
            c.add(l, model.predict(x)?);
        }
        Ok(c)
    });
    let mut total = Confusion::default();
    for c in per_fold {
        total.merge(&c?);
    }
    Ok(confusion_to_report(&total))
}

/// Extracts features and cross-validates with `k` stratified folds.
pub fn kfold_evaluate(
    d: &Dataset,
    params: &SaxParams,
    kind: ClassifierKind,
    hyper: &Hyperparams,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    kfold_evaluate_with(d, params, kind, hyper, k, seed, Execution::default())
}

pub fn kfold_evaluate_with(
    d: &Dataset,
    params: &SaxParams,
    kind: ClassifierKind,
    hyper: &Hyperparams,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<EvalReport> {
    let labels: Vec<EventLabel> = d.records().iter().map(|r| r.label()).collect();
    check_folds(d.len(), &labels, k)?;
    let features = extract_features_batch(d.records(), params, exec)?;
    kfold_features(&features, &labels, kind, hyper, k, seed, exec)
}
