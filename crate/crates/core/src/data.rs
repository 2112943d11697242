//! Event records, datasets and the JSON-Lines dataset format.
//!
//! One event per line:
//!
//! ```text
//! {"id":"e1","label":"fault","sample_rate_hz":30.0,"voltages":[[..45..],..],"currents":[[..45..],..]}
//! ```
//!
//! Channel counts are not fixed, but every record in a dataset must share the
//! same voltage count, current count and channel length.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One channel of sampled magnitudes. Never empty, always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidData("time series must not be empty".into()));
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(TimeSeries(samples))
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        TimeSeries::new(v)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(t: TimeSeries) -> Self {
        t.0
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The six event classes, in canonical (confusion-matrix) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventLabel {
    FalseData,
    Fault,
    GenerationLoss,
    LoadChange,
    LineTripping,
    ShuntSwitching,
}

impl EventLabel {
    pub const ALL: [EventLabel; 6] = [
        EventLabel::FalseData,
        EventLabel::Fault,
        EventLabel::GenerationLoss,
        EventLabel::LoadChange,
        EventLabel::LineTripping,
        EventLabel::ShuntSwitching,
    ];

    pub const COUNT: usize = 6;

    /// Position in [`EventLabel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Wire name used in the dataset format.
    pub fn as_str(self) -> &'static str {
        match self {
            EventLabel::FalseData => "false_data",
            EventLabel::Fault => "fault",
            EventLabel::GenerationLoss => "generation_loss",
            EventLabel::LoadChange => "load_change",
            EventLabel::LineTripping => "line_tripping",
            EventLabel::ShuntSwitching => "shunt_switching",
        }
    }

    pub fn is_genuine(self) -> bool {
        self != EventLabel::FalseData
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown event label '{s}'")))
    }
}

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 30.0;

/// A labeled multivariate event window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord")]
pub struct EventRecord {
    id: String,
    label: EventLabel,
    sample_rate_hz: f64,
    voltages: Vec<TimeSeries>,
    currents: Vec<TimeSeries>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    label: EventLabel,
    #[serde(default = "default_rate")]
    sample_rate_hz: f64,
    voltages: Vec<TimeSeries>,
    currents: Vec<TimeSeries>,
}

fn default_rate() -> f64 {
    DEFAULT_SAMPLE_RATE_HZ
}

impl TryFrom<RawRecord> for EventRecord {
    type Error = Error;

    fn try_from(r: RawRecord) -> Result<Self> {
        EventRecord::new(r.id, r.label, r.sample_rate_hz, r.voltages, r.currents)
    }
}

impl EventRecord {
    pub fn new(
        id: impl Into<String>,
        label: EventLabel,
        sample_rate_hz: f64,
        voltages: Vec<TimeSeries>,
        currents: Vec<TimeSeries>,
    ) -> Result<Self> {
        let id = id.into();
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidData(format!(
                "record '{id}': sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if voltages.is_empty() || currents.is_empty() {
            return Err(Error::InvalidData(format!(
                "record '{id}': needs at least one voltage and one current channel"
            )));
        }
        let n = voltages[0].len();
        for (kind, chans) in [("voltage", &voltages), ("current", &currents)] {
            if let Some((j, c)) = chans.iter().enumerate().find(|(_, c)| c.len() != n) {
                return Err(Error::InvalidData(format!(
                    "record '{id}': {kind} channel {j} has {} samples, expected {n}",
                    c.len()
                )));
            }
        }
        Ok(EventRecord {
            id,
            label,
            sample_rate_hz,
            voltages,
            currents,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> EventLabel {
        self.label
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn voltages(&self) -> &[TimeSeries] {
        &self.voltages
    }

    pub fn currents(&self) -> &[TimeSeries] {
        &self.currents
    }

    /// Shared channel length.
    pub fn len(&self) -> usize {
        self.voltages[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Voltage channels followed by current channels.
    pub fn channels(&self) -> impl Iterator<Item = &TimeSeries> {
        self.voltages.iter().chain(self.currents.iter())
    }

    pub fn channel_count(&self) -> usize {
        self.voltages.len() + self.currents.len()
    }

    /// Keeps only the listed voltage and current channels, in the given order.
    pub fn select_channels(&self, voltages: &[usize], currents: &[usize]) -> Result<Self> {
        let pick = |src: &[TimeSeries], idx: &[usize], kind: &str| -> Result<Vec<TimeSeries>> {
            idx.iter()
                .map(|&i| {
                    src.get(i).cloned().ok_or_else(|| {
                        Error::InvalidParam(format!(
                            "{kind} channel {i} out of range (record has {})",
                            src.len()
                        ))
                    })
                })
                .collect()
        };
        EventRecord::new(
            self.id.clone(),
            self.label,
            self.sample_rate_hz,
            pick(&self.voltages, voltages, "voltage")?,
            pick(&self.currents, currents, "current")?,
        )
    }

    pub fn with_channels(
        &self,
        voltages: Vec<TimeSeries>,
        currents: Vec<TimeSeries>,
    ) -> Result<Self> {
        EventRecord::new(
            self.id.clone(),
            self.label,
            self.sample_rate_hz,
            voltages,
            currents,
        )
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.voltages.len(), self.currents.len(), self.len())
    }
}

/// An ordered collection of records with homogeneous shape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    records: Vec<EventRecord>,
}

impl Dataset {
    pub fn new(records: Vec<EventRecord>) -> Result<Self> {
        let mut d = Dataset::default();
        for r in records {
            d.push(r)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, record: EventRecord) -> Result<()> {
        if let Some(first) = self.records.first() {
            let (want, got) = (first.shape(), record.shape());
            if want != got {
                return Err(Error::InvalidData(format!(
                    "record '{}' has {} voltage / {} current channels of length {}, \
                     dataset has {} / {} of length {}",
                    record.id, got.0, got.1, got.2, want.0, want.1, want.2
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EventRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Channel length shared by every record, if any.
    pub fn series_len(&self) -> Option<usize> {
        self.records.first().map(EventRecord::len)
    }

    pub fn label_counts(&self) -> [usize; EventLabel::COUNT] {
        let mut counts = [0; EventLabel::COUNT];
        for r in &self.records {
            counts[r.label.index()] += 1;
        }
        counts
    }

    pub fn select_channels(&self, voltages: &[usize], currents: &[usize]) -> Result<Self> {
        let records = self
            .records
            .iter()
            .map(|r| r.select_channels(voltages, currents))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { records })
    }
}

/// Reads a JSON-Lines dataset. Blank lines are skipped; line numbers in errors are 1-based.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut d = Dataset::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        d.push(record).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
    }
    Ok(d)
}

/// Writes one JSON object per record. Floats use shortest round-trip formatting.
pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_dataset(d, &mut w).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset(d: &Dataset, mut w: impl Write) -> Result<()> {
    for r in &d.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}
