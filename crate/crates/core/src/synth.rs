//! Synthetic PMU event windows for the six event classes.
//!
//! Genuine events share one event waveform across all channels, scaled per
//! channel by a random attenuation, so the channels stay strongly correlated.
//! False data replaces only a handful of channels with damped-oscillation
//! waveforms and leaves the rest at steady state.
//!
//! Every record is a pure function of `(label, config, seed)`. Channel
//! baselines and jitter draw from per-channel streams, so a falsified
//! record's untouched channels equal those of the steady-state record with
//! the same seed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EventLabel, EventRecord, TimeSeries};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Parameters of `V(t) = exp(-a t) (k cos(b t + c) + k sin(b t + c))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingParams {
    /// Damping rate, 1/s.
    pub a: f64,
    /// Angular frequency, rad/s.
    pub b: f64,
    /// Phase, rad.
    pub c: f64,
    /// Amplitude.
    pub k: f64,
}

/// The damped oscillation, with the same amplitude on both terms.
pub fn damped_oscillation(p: &DampingParams, t: f64) -> f64 {
    let phase = p.b * t + p.c;
    (-p.a * t).exp() * (p.k * phase.cos() + p.k * phase.sin())
}

/// Closed interval `[lo, hi]` to sample uniformly from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "{what}: bad range [{}, {}]",
                self.lo, self.hi
            )))
        }
    }
}

/// Ranges for the false-data damped oscillation. `k` is a fraction of the channel baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingRanges {
    pub a: Range,
    pub b: Range,
    pub c: Range,
    pub k_frac: Range,
}

impl Default for DampingRanges {
    fn default() -> Self {
        DampingRanges {
            a: Range::new(1.0, 5.0),
            b: Range::new(2.0 * PI, 10.0 * PI),
            c: Range::new(0.0, 2.0 * PI),
            k_frac: Range::new(0.05, 0.30),
        }
    }
}

impl DampingRanges {
    fn sample(&self, rng: &mut impl Rng) -> DampingParams {
        DampingParams {
            a: self.a.sample(rng),
            b: self.b.sample(rng),
            c: self.c.sample(rng),
            k: self.k_frac.sample(rng),
        }
    }
}

/// Per-class record counts, indexed by canonical label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts(pub [usize; EventLabel::COUNT]);

impl Default for ClassCounts {
    /// The 2353-event study mix.
    fn default() -> Self {
        let mut c = [0; EventLabel::COUNT];
        c[EventLabel::FalseData.index()] = 600;
        c[EventLabel::Fault.index()] = 935;
        c[EventLabel::GenerationLoss.index()] = 115;
        c[EventLabel::LoadChange.index()] = 420;
        c[EventLabel::LineTripping.index()] = 163;
        c[EventLabel::ShuntSwitching.index()] = 120;
        ClassCounts(c)
    }
}

impl ClassCounts {
    pub fn zero() -> Self {
        ClassCounts([0; EventLabel::COUNT])
    }

    pub fn get(&self, label: EventLabel) -> usize {
        self.0[label.index()]
    }

    pub fn set(&mut self, label: EventLabel, n: usize) {
        self.0[label.index()] = n;
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Each count multiplied by `factor` and rounded to the nearest integer.
    pub fn scaled(&self, factor: f64) -> Self {
        ClassCounts(self.0.map(|c| (c as f64 * factor).round() as usize))
    }
}

impl fmt::Display for ClassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = EventLabel::ALL
            .iter()
            .map(|l| format!("{}={}", l, self.get(*l)))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ClassCounts {
    type Err = Error;

    /// `label=n` pairs separated by commas; unlisted labels get zero.
    fn from_str(s: &str) -> Result<Self> {
        let mut counts = ClassCounts::zero();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (label, n) = part.split_once('=').ok_or_else(|| {
                Error::InvalidParam(format!("expected label=count, got '{part}'"))
            })?;
            let label: EventLabel = label.trim().parse()?;
            let n = n
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam(format!("bad count in '{part}'")))?;
            counts.set(label, n);
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub pre_event_samples: usize,
    pub voltage_channels: usize,
    pub current_channels: usize,
    pub counts: ClassCounts,
    pub damping: DampingRanges,
    /// Inclusive range for the number of falsified channels.
    pub false_data_channels: (usize, usize),
    /// Steady-state jitter standard deviation as a fraction of the baseline.
    pub jitter_frac: f64,
    /// Per-channel white Gaussian noise; `None` adds none.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_samples: 45,
            sample_rate_hz: 30.0,
            pre_event_samples: 15,
            voltage_channels: 7,
            current_channels: 28,
            counts: ClassCounts::default(),
            damping: DampingRanges::default(),
            false_data_channels: (2, 5),
            jitter_frac: 1e-3,
            snr_db: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.n_samples < 2 {
            return bad(format!("need at least 2 samples, got {}", self.n_samples));
        }
        if self.pre_event_samples >= self.n_samples {
            return bad(format!(
                "pre-event samples ({}) must be fewer than total samples ({})",
                self.pre_event_samples, self.n_samples
            ));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            ));
        }
        if self.voltage_channels == 0 || self.current_channels == 0 {
            return bad("need at least one voltage and one current channel".into());
        }
        let (lo, hi) = self.false_data_channels;
        if lo == 0 || lo > hi {
            return bad(format!("bad false-data channel range {lo}..={hi}"));
        }
        if !(self.jitter_frac.is_finite() && self.jitter_frac >= 0.0) {
            return bad(format!(
                "jitter fraction must be non-negative, got {}",
                self.jitter_frac
            ));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() || snr == f64::NEG_INFINITY {
                return bad(format!("invalid SNR {snr}"));
            }
        }
        self.damping.a.check("damping a")?;
        self.damping.b.check("damping b")?;
        self.damping.c.check("damping c")?;
        self.damping.k_frac.check("damping k")?;
        if self.damping.a.lo < 0.0 {
            return bad("damping rate must be non-negative".into());
        }
        Ok(())
    }

    fn channel_count(&self) -> usize {
        self.voltage_channels + self.current_channels
    }

    /// Seconds since event onset for sample `i` (negative before it).
    fn event_time(&self, i: usize) -> f64 {
        (i as f64 - self.pre_event_samples as f64) / self.sample_rate_hz
    }
}

/// SplitMix64 finalizer over `(seed, stream)`; used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x632B_E59B_D9B3_E48F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const EVENT_STREAM: u64 = 0;
const CHANNEL_STREAM_BASE: u64 = 1 << 20;
const NOISE_STREAM: u64 = 0xA5A5_0000;
const ORDER_STREAM: u64 = 0x5EED_0000;

/// Baseline magnitude of one channel.
fn baseline(is_voltage: bool, rng: &mut impl Rng) -> f64 {
    if is_voltage {
        rng.random_range(0.95..=1.05)
    } else {
        rng.random_range(0.1..=1.0)
    }
}

struct SteadyState {
    baselines: Vec<f64>,
    samples: Vec<Vec<f64>>,
}

/// Baseline plus jitter for every channel (voltages first), one RNG stream per channel.
fn steady_state(cfg: &SynthConfig, seed: u64) -> SteadyState {
    let total = cfg.channel_count();
    let mut baselines = Vec::with_capacity(total);
    let mut samples = Vec::with_capacity(total);
    for ch in 0..total {
        let mut r = rng(derive_seed(seed, CHANNEL_STREAM_BASE + ch as u64));
        let base = baseline(ch < cfg.voltage_channels, &mut r);
        let sd = cfg.jitter_frac * base;
        let series = if sd > 0.0 {
            let jitter = Normal::new(0.0, sd).expect("finite sd");
            (0..cfg.n_samples)
                .map(|_| base + jitter.sample(&mut r))
                .collect()
        } else {
            vec![base; cfg.n_samples]
        };
        baselines.push(base);
        samples.push(series);
    }
    SteadyState { baselines, samples }
}

fn into_record(
    cfg: &SynthConfig,
    id: String,
    label: EventLabel,
    mut channels: Vec<Vec<f64>>,
) -> Result<EventRecord> {
    let currents = channels.split_off(cfg.voltage_channels);
    let to_series = |v: Vec<Vec<f64>>| {
        v.into_iter()
            .map(TimeSeries::new)
            .collect::<Result<Vec<_>>>()
    };
    EventRecord::new(
        id,
        label,
        cfg.sample_rate_hz,
        to_series(channels)?,
        to_series(currents)?,
    )
}

/// Steady-state record (baseline plus jitter, no event) for `seed`.
pub fn gen_steady_state(cfg: &SynthConfig, label: EventLabel, seed: u64) -> Result<EventRecord> {
    cfg.validate()?;
    let st = steady_state(cfg, seed);
    into_record(cfg, format!("steady-{seed:016x}"), label, st.samples)
}

/// Relative event waveforms (fraction of baseline) for voltage and current
/// channels, as functions of time since onset.
struct Template {
    voltage: Box<dyn Fn(f64) -> f64>,
    current: Box<dyn Fn(f64) -> f64>,
    /// Current channels that respond at full strength; empty means all do.
    concentrated: Vec<usize>,
}

fn first_order_step(delta: f64, tau: f64, t: f64) -> f64 {
    delta * (1.0 - (-t / tau).exp())
}

fn template(label: EventLabel, cfg: &SynthConfig, r: &mut ChaCha8Rng) -> Template {
    match label {
        EventLabel::Fault => {
            // Deep dip and current surge until clearing, then a damped swing.
            let clear = r.random_range(0.07..=0.2);
            let depth = r.random_range(0.3..=0.7);
            let surge = r.random_range(1.0..=3.0);
            let osc = cfg.damping.sample(r);
            let osc_i = DampingParams {
                k: osc.k * 2.0,
                ..osc
            };
            Template {
                voltage: Box::new(move |t| {
                    if t < clear {
                        -depth
                    } else {
                        damped_oscillation(&osc, t - clear)
                    }
                }),
                current: Box::new(move |t| {
                    if t < clear {
                        surge
                    } else {
                        damped_oscillation(&osc_i, t - clear)
                    }
                }),
                concentrated: Vec::new(),
            }
        }
        EventLabel::GenerationLoss => {
            // Sagging step with a slow, lightly damped swing.
            let delta = r.random_range(0.03..=0.08);
            let tau = r.random_range(0.05..=0.15);
            let osc = DampingParams {
                a: r.random_range(0.2..=0.8),
                b: 2.0 * PI * r.random_range(0.6..=1.2),
                c: r.random_range(0.0..2.0 * PI),
                k: delta * r.random_range(0.4..=0.7),
            };
            let v = move |t: f64| {
                -first_order_step(delta, tau, t) + damped_oscillation(&osc, t)
                    - damped_oscillation(&osc, 0.0) * (-t / tau).exp()
            };
            Template {
                voltage: Box::new(v),
                current: Box::new(move |t| -1.5 * v(t)),
                concentrated: Vec::new(),
            }
        }
        EventLabel::LoadChange => {
            // Small sustained sag reached through a first-order response.
            let delta = r.random_range(0.02..=0.05);
            let tau = r.random_range(0.15..=0.4);
            Template {
                voltage: Box::new(move |t| -first_order_step(delta, tau, t)),
                current: Box::new(move |t| 2.0 * first_order_step(delta, tau, t)),
                concentrated: Vec::new(),
            }
        }
        EventLabel::LineTripping => {
            // Instant redistribution step plus a faster swing, strongest on a few lines.
            let delta = r.random_range(0.02..=0.06);
            let osc = DampingParams {
                a: r.random_range(1.0..=3.0),
                b: 2.0 * PI * r.random_range(1.5..=3.0),
                c: r.random_range(0.0..2.0 * PI),
                k: delta * r.random_range(0.5..=1.0),
            };
            let n_hot = r.random_range(2..=6.min(cfg.current_channels).max(1));
            let mut idx: Vec<usize> = (0..cfg.current_channels).collect();
            idx.shuffle(r);
            idx.truncate(n_hot);
            idx.sort_unstable();
            Template {
                voltage: Box::new(move |t| -delta * 0.5 + damped_oscillation(&osc, t) * 0.5),
                current: Box::new(move |t| delta * 3.0 + damped_oscillation(&osc, t) * 3.0),
                concentrated: idx,
            }
        }
        EventLabel::ShuntSwitching => {
            // Clean upward magnitude step.
            let delta = r.random_range(0.01..=0.05);
            Template {
                voltage: Box::new(move |_| delta),
                current: Box::new(move |_| delta * 2.0),
                concentrated: Vec::new(),
            }
        }
        EventLabel::FalseData => unreachable!("false data has no shared template"),
    }
}

fn gen_genuine(label: EventLabel, cfg: &SynthConfig, seed: u64) -> Result<EventRecord> {
    let mut r = rng(derive_seed(seed, EVENT_STREAM));
    let tpl = template(label, cfg, &mut r);
    let st = steady_state(cfg, seed);
    let nv = cfg.voltage_channels;
    let mut channels = st.samples;
    for (ch, series) in channels.iter_mut().enumerate() {
        let base = st.baselines[ch];
        let is_voltage = ch < nv;
        let strength = if !is_voltage && !tpl.concentrated.is_empty() {
            if tpl.concentrated.binary_search(&(ch - nv)).is_ok() {
                r.random_range(0.8..=1.0)
            } else {
                r.random_range(0.15..=0.4)
            }
        } else {
            r.random_range(0.4..=1.0)
        };
        let shape = if is_voltage {
            &tpl.voltage
        } else {
            &tpl.current
        };
        for (i, x) in series.iter_mut().enumerate().skip(cfg.pre_event_samples) {
            *x += base * strength * shape(cfg.event_time(i));
        }
    }
    into_record(cfg, format!("{label}-{seed:016x}"), label, channels)
}

/// A false-data record together with the falsified channel indices
/// (voltages first, then currents).
#[derive(Debug, Clone)]
pub struct Injection {
    pub record: EventRecord,
    pub touched: Vec<usize>,
    pub params: Vec<DampingParams>,
}

/// Falsifies a random subset of channels with damped oscillations after the onset.
pub fn inject_false_data(cfg: &SynthConfig, seed: u64) -> Result<Injection> {
    cfg.validate()?;
    let total = cfg.channel_count();
    let (lo, hi) = cfg.false_data_channels;
    if hi > total {
        return Err(Error::InvalidParam(format!(
            "false-data subset of up to {hi} channels exceeds {total} channels"
        )));
    }
    let mut r = rng(derive_seed(seed, EVENT_STREAM));
    let count = r.random_range(lo..=hi);
    let mut touched: Vec<usize> = rand::seq::index::sample(&mut r, total, count).into_vec();
    touched.sort_unstable();
    let st = steady_state(cfg, seed);
    let mut channels = st.samples;
    let mut params = Vec::with_capacity(count);
    for &ch in &touched {
        let rel = cfg.damping.sample(&mut r);
        let base = st.baselines[ch];
        let p = DampingParams {
            k: rel.k * base,
            ..rel
        };
        for (i, x) in channels[ch]
            .iter_mut()
            .enumerate()
            .skip(cfg.pre_event_samples)
        {
            *x += damped_oscillation(&p, cfg.event_time(i));
        }
        params.push(p);
    }
    let record = into_record(
        cfg,
        format!("false_data-{seed:016x}"),
        EventLabel::FalseData,
        channels,
    )?;
    Ok(Injection {
        record,
        touched,
        params,
    })
}

pub fn gen_false_data(cfg: &SynthConfig, seed: u64) -> Result<EventRecord> {
    inject_false_data(cfg, seed).map(|inj| inj.record)
}

/// One record of the given class. Deterministic in `(label, cfg, seed)`.
pub fn gen_event(label: EventLabel, cfg: &SynthConfig, seed: u64) -> Result<EventRecord> {
    cfg.validate()?;
    match label {
        EventLabel::FalseData => gen_false_data(cfg, seed),
        _ => gen_genuine(label, cfg, seed),
    }
}

/// Adds white Gaussian noise with per-channel variance `mean_square / 10^(snr_db / 10)`.
///
/// `snr_db = +inf` returns the record unchanged, as does a channel with zero power.
pub fn add_awgn(record: &EventRecord, snr_db: f64, seed: u64) -> Result<EventRecord> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParam(format!("invalid SNR {snr_db}")));
    }
    if snr_db == f64::INFINITY {
        return Ok(record.clone());
    }
    let scale = 10f64.powf(-snr_db / 10.0);
    let noisy = |ch: usize, t: &TimeSeries| -> Result<TimeSeries> {
        let s = t.samples();
        let power = s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
        let var = power * scale;
        if var.is_nan() || var <= 0.0 {
            return Ok(t.clone());
        }
        let dist = Normal::new(0.0, var.sqrt())
            .map_err(|e| Error::InvalidParam(format!("noise distribution: {e}")))?;
        let mut r = rng(derive_seed(seed, ch as u64));
        TimeSeries::new(s.iter().map(|x| x + dist.sample(&mut r)).collect())
    };
    let nv = record.voltages().len();
    let voltages = record
        .voltages()
        .iter()
        .enumerate()
        .map(|(j, t)| noisy(j, t))
        .collect::<Result<Vec<_>>>()?;
    let currents = record
        .currents()
        .iter()
        .enumerate()
        .map(|(j, t)| noisy(nv + j, t))
        .collect::<Result<Vec<_>>>()?;
    record.with_channels(voltages, currents)
}

/// Noise on every record, with per-record seeds derived from `seed`.
pub fn add_awgn_dataset(d: &Dataset, snr_db: f64, seed: u64, exec: Execution) -> Result<Dataset> {
    let records = exec.try_map_indexed(d.records(), |i, r| {
        add_awgn(r, snr_db, derive_seed(seed ^ NOISE_STREAM, i as u64))
    })?;
    Dataset::new(records)
}

/// Labels for every record, shuffled by the config seed.
fn label_order(cfg: &SynthConfig) -> Vec<EventLabel> {
    let mut labels: Vec<EventLabel> = EventLabel::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, cfg.counts.get(l)))
        .collect();
    labels.shuffle(&mut rng(derive_seed(cfg.seed, ORDER_STREAM)));
    labels
}

pub fn gen_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    gen_dataset_with(cfg, Execution::default())
}

/// Generates `cfg.counts` records in seeded random order. Record `i` uses
/// seed `derive_seed(cfg.seed, i)`, so the output does not depend on `exec`.
pub fn gen_dataset_with(cfg: &SynthConfig, exec: Execution) -> Result<Dataset> {
    cfg.validate()?;
    let labels = label_order(cfg);
    let records = exec.try_map_indexed(&labels, |i, &label| {
        let rec =
            gen_event(label, cfg, derive_seed(cfg.seed, i as u64))?.with_id(format!("ev{i:05}"));
        match cfg.snr_db {
            Some(snr) => add_awgn(&rec, snr, derive_seed(cfg.seed ^ NOISE_STREAM, i as u64)),
            None => Ok(rec),
        }
    })?;
    Dataset::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            sxy += (a - mx) * (b - my);
            sxx += (a - mx).powi(2);
            syy += (b - my).powi(2);
        }
        sxy / (sxx * syy).sqrt()
    }

    /// Deviation of each channel from its own pre-event mean.
    fn deviations(r: &EventRecord, pre: usize) -> Vec<Vec<f64>> {
        r.channels()
            .map(|c| {
                let s = c.samples();
                let m = s[..pre].iter().sum::<f64>() / pre as f64;
                s.iter().map(|x| x - m).collect()
            })
            .collect()
    }

    #[test]
    fn damped_oscillation_examples() {
        let p = DampingParams {
            a: 0.7,
            b: 3.0,
            c: 0.4,
            k: 2.5,
        };
        assert!((damped_oscillation(&p, 0.0) - 2.5 * (0.4f64.cos() + 0.4f64.sin())).abs() < 1e-12);
        let p = DampingParams {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            k: 1.0,
        };
        assert!((damped_oscillation(&p, 1.0) - (-1.0f64).exp()).abs() < 1e-12);
        // Undamped envelope is k*sqrt(2), reached at phase pi/4.
        let p = DampingParams {
            a: 0.0,
            b: 5.0,
            c: PI / 4.0,
            k: 1.5,
        };
        assert!((damped_oscillation(&p, 0.0) - 1.5 * 2f64.sqrt()).abs() < 1e-12);
        for i in 0..1000 {
            assert!(damped_oscillation(&p, i as f64 * 0.013).abs() <= 1.5 * 2f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn records_are_deterministic_and_well_formed() {
        let cfg = SynthConfig::default();
        for label in EventLabel::ALL {
            let a = gen_event(label, &cfg, 11).unwrap();
            let b = gen_event(label, &cfg, 11).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, gen_event(label, &cfg, 12).unwrap());
            assert_eq!(a.label(), label);
            assert_eq!(a.voltages().len(), 7);
            assert_eq!(a.currents().len(), 28);
            assert_eq!(a.len(), 45);
        }
    }

    #[test]
    fn genuine_events_are_correlated_across_channels() {
        let cfg = SynthConfig::default();
        for label in EventLabel::ALL.into_iter().filter(|l| l.is_genuine()) {
            let mut total = 0.0;
            let mut n = 0;
            for seed in 0..30 {
                let dev = deviations(
                    &gen_event(label, &cfg, seed).unwrap(),
                    cfg.pre_event_samples,
                );
                for (j, x) in dev.iter().enumerate() {
                    let best = dev
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, y)| pearson(x, y))
                        .fold(f64::MIN, f64::max);
                    total += best;
                    n += 1;
                }
            }
            let mean = total / n as f64;
            assert!(mean > 0.8, "{label}: mean max correlation {mean}");
        }
    }

    #[test]
    fn load_change_shift_is_smaller_than_fault_dip() {
        let cfg = SynthConfig::default();
        let shift = |label, seed| {
            let r = gen_event(label, &cfg, seed).unwrap();
            let dev = deviations(&r, cfg.pre_event_samples);
            let per: Vec<f64> = r
                .channels()
                .zip(&dev)
                .map(|(c, d)| {
                    let base = c.samples()[..15].iter().sum::<f64>() / 15.0;
                    d[15..].iter().sum::<f64>() / 30.0 / base
                })
                .collect();
            per
        };
        let load_max = (0..40)
            .flat_map(|s| shift(EventLabel::LoadChange, s))
            .map(f64::abs)
            .fold(0.0, f64::max);
        // Fault dip depth on voltage channels, relative to baseline.
        let fault_min_dip = (0..40)
            .map(|s| {
                let r = gen_event(EventLabel::Fault, &cfg, s).unwrap();
                r.voltages()
                    .iter()
                    .map(|v| {
                        let s = v.samples();
                        let base = s[..15].iter().sum::<f64>() / 15.0;
                        (base - s[15]) / base
                    })
                    .fold(f64::MIN, f64::max)
            })
            .fold(f64::MAX, f64::min);
        assert!(load_max < fault_min_dip, "{load_max} vs {fault_min_dip}");
    }

    #[test]
    fn false_data_touches_only_its_subset() {
        let cfg = SynthConfig::default();
        for seed in 0..50 {
            let inj = inject_false_data(&cfg, seed).unwrap();
            assert!((2..=5).contains(&inj.touched.len()));
            let steady = gen_steady_state(&cfg, EventLabel::FalseData, seed).unwrap();
            for (ch, (a, b)) in inj.record.channels().zip(steady.channels()).enumerate() {
                if inj.touched.contains(&ch) {
                    assert_ne!(a, b);
                    assert_eq!(a.samples()[..15], b.samples()[..15]);
                } else {
                    assert_eq!(a, b, "seed {seed} channel {ch}");
                }
            }
        }
    }

    #[test]
    fn false_data_is_uncorrelated_with_untouched_channels() {
        let cfg = SynthConfig::default();
        let mut total = 0.0;
        let mut n = 0;
        for seed in 0..40 {
            let inj = inject_false_data(&cfg, seed).unwrap();
            let dev = deviations(&inj.record, 15);
            for &t in &inj.touched {
                for (u, y) in dev.iter().enumerate() {
                    if !inj.touched.contains(&u) {
                        total += pearson(&dev[t][15..], &y[15..]).abs();
                        n += 1;
                    }
                }
            }
        }
        let mean = total / n as f64;
        assert!(mean < 0.3, "mean |r| = {mean}");
    }

    #[test]
    fn false_data_subset_must_fit() {
        let cfg = SynthConfig {
            voltage_channels: 1,
            current_channels: 2,
            ..SynthConfig::default()
        };
        assert!(gen_false_data(&cfg, 0).is_err());
        let cfg = SynthConfig {
            false_data_channels: (3, 3),
            ..cfg
        };
        assert_eq!(inject_false_data(&cfg, 0).unwrap().touched, vec![0, 1, 2]);
    }

    #[test]
    fn awgn_examples() {
        let cfg = SynthConfig::default();
        let r = gen_event(EventLabel::Fault, &cfg, 3).unwrap();
        assert_eq!(add_awgn(&r, f64::INFINITY, 1).unwrap(), r);
        assert!(add_awgn(&r, f64::NAN, 1).is_err());
        let noisy = add_awgn(&r, 90.0, 1).unwrap();
        assert_ne!(noisy, r);
        assert_eq!(noisy, add_awgn(&r, 90.0, 1).unwrap());

        let zero = EventRecord::new(
            "z",
            EventLabel::Fault,
            30.0,
            vec![TimeSeries::new(vec![0.0; 45]).unwrap()],
            vec![TimeSeries::new(vec![1.0; 45]).unwrap()],
        )
        .unwrap();
        let out = add_awgn(&zero, 0.0, 5).unwrap();
        assert_eq!(out.voltages(), zero.voltages());
        assert_ne!(out.currents(), zero.currents());
    }

    #[test]
    fn awgn_zero_db_on_unit_power_has_unit_variance() {
        let unit: Vec<TimeSeries> = (0..200)
            .map(|_| TimeSeries::new(vec![1.0; 45]).unwrap())
            .collect();
        let r = EventRecord::new("u", EventLabel::Fault, 30.0, unit.clone(), unit).unwrap();
        let out = add_awgn(&r, 0.0, 9).unwrap();
        let (mut sum, mut n) = (0.0, 0);
        for c in out.channels() {
            for x in c.samples() {
                sum += (x - 1.0).powi(2);
                n += 1;
            }
        }
        let var = sum / n as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn counts_parse_scale_and_total() {
        assert_eq!(ClassCounts::default().total(), 2353);
        let c: ClassCounts = "fault=10, load_change=3".parse().unwrap();
        assert_eq!(c.get(EventLabel::Fault), 10);
        assert_eq!(c.get(EventLabel::LoadChange), 3);
        assert_eq!(c.total(), 13);
        assert!("fault".parse::<ClassCounts>().is_err());
        assert!("quake=3".parse::<ClassCounts>().is_err());
        assert_eq!(
            ClassCounts::default()
                .to_string()
                .parse::<ClassCounts>()
                .unwrap(),
            ClassCounts::default()
        );

        let tenth = ClassCounts::default().scaled(0.1);
        assert_eq!(tenth.0, [60, 94, 12, 42, 16, 12]);
        assert_eq!(tenth.total(), 236);
    }

    #[test]
    fn dataset_counts_order_and_determinism() {
        let cfg = SynthConfig {
            counts: ClassCounts::default().scaled(0.02),
            seed: 4,
            ..SynthConfig::default()
        };
        let d = gen_dataset(&cfg).unwrap();
        assert_eq!(d.len(), cfg.counts.total());
        assert_eq!(d.label_counts(), cfg.counts.0);
        assert_eq!(d, gen_dataset_with(&cfg, Execution::Sequential).unwrap());
        let labels: Vec<_> = d.records().iter().map(|r| r.label()).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_ne!(labels, sorted, "records should be shuffled");

        let empty = SynthConfig {
            counts: ClassCounts::zero(),
            ..cfg
        };
        assert!(gen_dataset(&empty).unwrap().is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        let bad = [
            SynthConfig {
                pre_event_samples: 45,
                ..Default::default()
            },
            SynthConfig {
                voltage_channels: 0,
                ..Default::default()
            },
            SynthConfig {
                false_data_channels: (3, 2),
                ..Default::default()
            },
            SynthConfig {
                snr_db: Some(f64::NAN),
                ..Default::default()
            },
            SynthConfig {
                sample_rate_hz: 0.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
