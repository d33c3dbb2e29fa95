//! Per-eye feature records and the `scores.csv` / `preds.csv` tables.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Diagnostic class. Order matters: it is the column order of probability
/// triples and the tie-break order of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Diagnosis {
    Odd = 0,
    Papilledema = 1,
    Healthy = 2,
}

impl Diagnosis {
    pub const ALL: [Diagnosis; 3] = [Diagnosis::Odd, Diagnosis::Papilledema, Diagnosis::Healthy];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Diagnosis::Odd => "odd",
            Diagnosis::Papilledema => "papilledema",
            Diagnosis::Healthy => "healthy",
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Diagnosis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "odd" => Ok(Diagnosis::Odd),
            "papilledema" => Ok(Diagnosis::Papilledema),
            "healthy" => Ok(Diagnosis::Healthy),
            other => Err(Error::InvalidParameter(format!(
                "unknown class {other:?} (expected odd, papilledema or healthy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EyeFeatures {
    pub eye_id: String,
    pub subject_id: String,
    pub drusen_score_mm3: f64,
    pub swelling_score_mm3: f64,
    pub true_class: Option<Diagnosis>,
}

impl EyeFeatures {
    pub fn new(
        eye_id: impl Into<String>,
        subject_id: impl Into<String>,
        drusen_score_mm3: f64,
        swelling_score_mm3: f64,
        true_class: Option<Diagnosis>,
    ) -> Result<Self> {
        let f = EyeFeatures {
            eye_id: eye_id.into(),
            subject_id: subject_id.into(),
            drusen_score_mm3,
            swelling_score_mm3,
            true_class,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.drusen_score_mm3, self.swelling_score_mm3] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "eye {}: scores must be finite and nonnegative, got {v}",
                    self.eye_id
                )));
            }
        }
        Ok(())
    }

    /// Feature vector `[drusen, swelling]`.
    pub fn vector(&self) -> [f64; 2] {
        [self.drusen_score_mm3, self.swelling_score_mm3]
    }
}

pub const SCORES_HEADER: [&str; 5] = [
    "eye_id",
    "subject_id",
    "true_class",
    "drusen_score_mm3",
    "swelling_score_mm3",
];

fn csv_err(path: &Path, e: impl fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn score_record(f: &EyeFeatures) -> [String; 5] {
    [
        f.eye_id.clone(),
        f.subject_id.clone(),
        f.true_class.map(|c| c.to_string()).unwrap_or_default(),
        format!("{}", f.drusen_score_mm3),
        format!("{}", f.swelling_score_mm3),
    ]
}

/// Write a complete scores table, replacing `path`.
pub fn write_scores(path: impl AsRef<Path>, rows: &[EyeFeatures]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(SCORES_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(score_record(r))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Append one row, writing the header first if the file is new or empty.
pub fn append_score(path: impl AsRef<Path>, row: &EyeFeatures) -> Result<()> {
    let path = path.as_ref();
    let needs_header = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    if needs_header {
        w.write_record(SCORES_HEADER)
            .map_err(|e| csv_err(path, e))?;
    }
    w.write_record(score_record(row))
        .map_err(|e| csv_err(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<EyeFeatures>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != SCORES_HEADER {
        return Err(csv_err(
            path,
            format!("expected header {}", SCORES_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let num = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| csv_err(path, format!("line {line}: {}: {e}", SCORES_HEADER[k])))
        };
        let true_class = match rec[2].trim() {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|e| csv_err(path, format!("line {line}: {e}")))?,
            ),
        };
        let row = EyeFeatures::new(&rec[0], &rec[1], num(3)?, num(4)?, true_class)
            .map_err(|e| csv_err(path, format!("line {line}: {e}")))?;
        rows.push(row);
    }
    Ok(rows)
}

/// One row of `preds.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub eye_id: String,
    pub subject_id: String,
    pub true_class: Option<Diagnosis>,
    /// `Ok((class, probabilities))`, or the error that prevented scoring.
    pub outcome: std::result::Result<(Diagnosis, [f64; 3]), String>,
}

pub const PREDS_HEADER: [&str; 8] = [
    "eye_id",
    "subject_id",
    "true_class",
    "predicted_class",
    "p_odd",
    "p_papilledema",
    "p_healthy",
    "status",
];

pub fn write_predictions(path: impl AsRef<Path>, rows: &[PredictionRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(PREDS_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        let true_class = r.true_class.map(|c| c.to_string()).unwrap_or_default();
        let record: Vec<String> = match &r.outcome {
            Ok((class, p)) => vec![
                r.eye_id.clone(),
                r.subject_id.clone(),
                true_class,
                class.to_string(),
                format!("{}", p[0]),
                format!("{}", p[1]),
                format!("{}", p[2]),
                "ok".into(),
            ],
            Err(msg) => vec![
                r.eye_id.clone(),
                r.subject_id.clone(),
                true_class,
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("error: {msg}"),
            ],
        };
        w.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    let mut inner = w.into_inner().map_err(|e| csv_err(path, e))?;
    inner.flush().map_err(|e| Error::io(path, e))
}
