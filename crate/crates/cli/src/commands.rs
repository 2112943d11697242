use anyhow::{bail, Context, Result};
use pmu_bop::classify::eval::kfold_features;
use pmu_bop::sax::{SaxEncoder, DEFAULT_FLAT_EPSILON};
use pmu_bop::synth::{self, SynthConfig};
use pmu_bop::vectorize::{extract_features_batch, FeatureRecord};
use pmu_bop::{
    load_dataset, ClassifierKind, ClassifierModel, Dataset, EventLabel, Execution, FeatureVector,
    Hyperparams, SaxParams,
};

use crate::io::{read_features, write_atomic, write_output};
use crate::{
    EncodeArgs, EvaluateArgs, FeaturizeArgs, PredictArgs, SweepArgs, SynthArgs, TrainArgs,
};

pub fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        counts: a.counts,
        snr_db: a.snr_db.0,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let d = synth::gen_dataset(&cfg)?;
    write_atomic(&a.out, |w| Ok(pmu_bop::data::write_dataset(&d, w)?))?;
    eprintln!("wrote {} records to {}", d.len(), a.out.display());
    Ok(())
}

pub fn encode(a: &EncodeArgs, params: &SaxParams) -> Result<()> {
    let d = load_dataset(&a.input)?;
    let rec = match &a.record {
        Some(id) => d
            .records()
            .iter()
            .find(|r| r.id() == id)
            .with_context(|| format!("no record with id '{id}' in {}", a.input.display()))?,
        None => d
            .records()
            .first()
            .with_context(|| format!("{} is empty", a.input.display()))?,
    };
    let enc = SaxEncoder::new(*params, DEFAULT_FLAT_EPSILON)?;
    let mut lines = Vec::with_capacity(rec.channel_count());
    for ch in rec.channels() {
        let words = enc.encode(ch.samples())?;
        let text: Vec<&str> = words.iter().map(|w| w.as_str()).collect();
        lines.push(text.join(" "));
    }
    write_output(None, |w| {
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

fn featurize_dataset(d: &Dataset, params: &SaxParams) -> Result<Vec<FeatureVector>> {
    Ok(extract_features_batch(
        d.records(),
        params,
        Execution::default(),
    )?)
}

pub fn featurize(a: &FeaturizeArgs, params: &SaxParams) -> Result<()> {
    let d = load_dataset(&a.input)?;
    let feats = featurize_dataset(&d, params)?;
    write_atomic(&a.out, |w| {
        for (r, f) in d.records().iter().zip(feats) {
            let line = FeatureRecord::new(r.id(), r.label(), *params, f);
            serde_json::to_writer(&mut *w, &line)?;
            writeln!(w)?;
        }
        Ok(())
    })
}

/// Labelled features plus the SAX settings that produced them.
struct Labelled {
    ids: Vec<String>,
    labels: Vec<EventLabel>,
    features: Vec<FeatureVector>,
    sax: SaxParams,
}

fn load_labelled(
    path: &std::path::Path,
    from_features: bool,
    params: &SaxParams,
) -> Result<Labelled> {
    if from_features {
        let recs = read_features(path)?;
        let sax = recs[0].sax;
        if let Some(r) = recs.iter().find(|r| r.sax != sax) {
            bail!(
                "record '{}' was featurized with different SAX settings",
                r.id
            );
        }
        let features = recs
            .iter()
            .map(|r| r.feature_vector())
            .collect::<Result<_, _>>()?;
        Ok(Labelled {
            ids: recs.iter().map(|r| r.id.clone()).collect(),
            labels: recs.iter().map(|r| r.label).collect(),
            features,
            sax,
        })
    } else {
        let d = load_dataset(path)?;
        Ok(Labelled {
            ids: d.records().iter().map(|r| r.id().to_string()).collect(),
            labels: d.records().iter().map(|r| r.label()).collect(),
            features: featurize_dataset(&d, params)?,
            sax: *params,
        })
    }
}

pub fn train(a: &TrainArgs, params: &SaxParams, hyper: &Hyperparams) -> Result<()> {
    let data = load_labelled(&a.input, a.from_features, params)?;
    let samples: Vec<(FeatureVector, EventLabel)> =
        data.features.into_iter().zip(data.labels).collect();
    let model = pmu_bop::train(
        &samples,
        a.training.classifier.into(),
        hyper,
        a.training.seed,
    )?
    .with_sax(data.sax);
    let json = model.to_json()?;
    write_atomic(&a.out, |w| {
        w.write_all(json.as_bytes())?;
        writeln!(w)?;
        Ok(())
    })
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.model)
        .with_context(|| format!("cannot read {}", a.model.display()))?;
    let model = ClassifierModel::from_json(&text)
        .with_context(|| format!("{} is not a model file", a.model.display()))?;
    let sax = match model.sax() {
        Some(s) => s,
        None if a.from_features => SaxParams::default(),
        None => bail!("model has no SAX settings; use --from-features"),
    };
    let data = load_labelled(&a.input, a.from_features, &sax)?;
    let predicted = data
        .features
        .iter()
        .map(|f| model.predict(f))
        .collect::<Result<Vec<_>, _>>()?;
    write_output(a.out.as_deref(), |w| {
        writeln!(w, "id,label,predicted")?;
        for ((id, l), p) in data.ids.iter().zip(&data.labels).zip(&predicted) {
            writeln!(w, "{id},{l},{p}")?;
        }
        Ok(())
    })
}

pub fn evaluate(a: &EvaluateArgs, params: &SaxParams, hyper: &Hyperparams) -> Result<()> {
    let d = load_dataset(&a.input)?;
    let report = pmu_bop::classify::kfold_evaluate_with(
        &d,
        params,
        a.training.classifier.into(),
        hyper,
        a.folds,
        a.training.seed,
        Execution::default(),
    )?;
    if let Some(path) = &a.csv {
        let csv = report.to_csv();
        write_atomic(path, |w| Ok(w.write_all(csv.as_bytes())?))?;
    }
    write_output(None, |w| Ok(write!(w, "{report}")?))
}

pub fn sweep(a: &SweepArgs, hyper: &Hyperparams) -> Result<()> {
    let d = load_dataset(&a.input)?;
    let n = d.series_len().unwrap_or(0);
    let labels: Vec<EventLabel> = d.records().iter().map(|r| r.label()).collect();
    let kinds: Vec<ClassifierKind> = a.classifier.kinds();

    let mut points = Vec::new();
    for &alpha in &a.alpha_grid {
        for &gamma in &a.gamma_grid {
            for &window in &a.window_grid {
                if gamma > window {
                    eprintln!("warning: skipping alpha={alpha} gamma={gamma} window={window}: word length exceeds window");
                } else if window > n {
                    eprintln!("warning: skipping alpha={alpha} gamma={gamma} window={window}: window exceeds series length {n}");
                } else {
                    points.push(SaxParams::new(alpha, gamma, window)?);
                }
            }
        }
    }
    if points.is_empty() {
        bail!("no valid grid points to evaluate");
    }

    let mut rows = Vec::new();
    for p in &points {
        let feats = featurize_dataset(&d, p)?;
        for &kind in &kinds {
            let rep = kfold_features(
                &feats,
                &labels,
                kind,
                hyper,
                a.folds,
                a.seed,
                Execution::default(),
            )?;
            rows.push(format!(
                "{},{},{},{},{:.1}",
                p.alpha,
                p.gamma,
                p.omega,
                kind.short_name(),
                rep.accuracy * 100.0
            ));
        }
    }
    write_output(a.out.as_deref(), |w| {
        writeln!(w, "alpha,gamma,window,classifier,accuracy_pct")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}
