//! Measured membership data: records, datasets, Likert panels and their
//! tabular ingestion.
//!
//! A record holds the weights of one exemplar with respect to two concepts
//! `A`, `B`, their negations `A'`, `B'`, and the four conjunctions built from
//! them. Datasets serialize to a fixed comma-separated schema; floats are
//! written in shortest round-trip form so that loading a written dataset gives
//! back the same values bit for bit.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the ingestion schema, in order.
pub const SCHEMA: [&str; 9] = [
    "exemplar", "muA", "muB", "muAp", "muBp", "muAB", "muABp", "muApB", "muApBp",
];

/// Header of the raw Likert long form.
pub const LIKERT_SCHEMA: [&str; 3] = ["subject", "question", "score"];

/// One of the four concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Concept {
    A,
    B,
    #[serde(rename = "A'")]
    Ap,
    #[serde(rename = "B'")]
    Bp,
}

impl Concept {
    pub const ALL: [Concept; 4] = [Concept::A, Concept::B, Concept::Ap, Concept::Bp];

    /// Position in the order A, B, A', B'.
    pub fn index(self) -> usize {
        match self {
            Concept::A => 0,
            Concept::B => 1,
            Concept::Ap => 2,
            Concept::Bp => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Concept::A => "A",
            Concept::B => "B",
            Concept::Ap => "A'",
            Concept::Bp => "B'",
        }
    }
}

/// One of the four conjunctions X and Y with X in {A, A'} and Y in {B, B'}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pair {
    #[serde(rename = "AB")]
    AB,
    #[serde(rename = "AB'")]
    ABp,
    #[serde(rename = "A'B")]
    ApB,
    #[serde(rename = "A'B'")]
    ApBp,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::AB, Pair::ABp, Pair::ApB, Pair::ApBp];

    pub fn index(self) -> usize {
        match self {
            Pair::AB => 0,
            Pair::ABp => 1,
            Pair::ApB => 2,
            Pair::ApBp => 3,
        }
    }

    /// The two concepts, first from {A, A'} and second from {B, B'}.
    pub fn concepts(self) -> (Concept, Concept) {
        match self {
            Pair::AB => (Concept::A, Concept::B),
            Pair::ABp => (Concept::A, Concept::Bp),
            Pair::ApB => (Concept::Ap, Concept::B),
            Pair::ApBp => (Concept::Ap, Concept::Bp),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pair::AB => "AB",
            Pair::ABp => "AB'",
            Pair::ApB => "A'B",
            Pair::ApBp => "A'B'",
        }
    }

    pub fn parse(s: &str) -> Option<Pair> {
        Pair::ALL.into_iter().find(|p| p.label() == s)
    }
}

/// The eight measured weights of one exemplar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRecord {
    pub exemplar: String,
    #[serde(rename = "muA")]
    pub mu_a: f64,
    #[serde(rename = "muB")]
    pub mu_b: f64,
    #[serde(rename = "muAp")]
    pub mu_ap: f64,
    #[serde(rename = "muBp")]
    pub mu_bp: f64,
    #[serde(rename = "muAB")]
    pub mu_ab: f64,
    #[serde(rename = "muABp")]
    pub mu_abp: f64,
    #[serde(rename = "muApB")]
    pub mu_apb: f64,
    #[serde(rename = "muApBp")]
    pub mu_apbp: f64,
}

impl MembershipRecord {
    /// Builds a record from the weights in schema order and validates it.
    pub fn new(exemplar: impl Into<String>, w: [f64; 8]) -> Result<Self> {
        let r = Self::from_weights_unchecked(exemplar, w);
        r.validate()?;
        Ok(r)
    }

    pub fn from_weights_unchecked(exemplar: impl Into<String>, w: [f64; 8]) -> Self {
        MembershipRecord {
            exemplar: exemplar.into(),
            mu_a: w[0],
            mu_b: w[1],
            mu_ap: w[2],
            mu_bp: w[3],
            mu_ab: w[4],
            mu_abp: w[5],
            mu_apb: w[6],
            mu_apbp: w[7],
        }
    }

    /// Weights in schema order.
    pub fn weights(&self) -> [f64; 8] {
        [
            self.mu_a,
            self.mu_b,
            self.mu_ap,
            self.mu_bp,
            self.mu_ab,
            self.mu_abp,
            self.mu_apb,
            self.mu_apbp,
        ]
    }

    pub fn marginals(&self) -> [f64; 4] {
        [self.mu_a, self.mu_b, self.mu_ap, self.mu_bp]
    }

    pub fn conjunctions(&self) -> [f64; 4] {
        [self.mu_ab, self.mu_abp, self.mu_apb, self.mu_apbp]
    }

    pub fn marginal(&self, c: Concept) -> f64 {
        self.marginals()[c.index()]
    }

    pub fn conjunction(&self, p: Pair) -> f64 {
        self.conjunctions()[p.index()]
    }

    /// Checks that every weight is a finite number in [0, 1].
    pub fn validate(&self) -> Result<()> {
        for (name, v) in SCHEMA[1..].iter().zip(self.weights()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "exemplar `{}`: {name} = {v} is outside [0, 1]",
                    self.exemplar
                )));
            }
        }
        Ok(())
    }
}

/// The exemplars measured against one pair of concepts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConceptPairDataset {
    pub pair_label: String,
    pub records: Vec<MembershipRecord>,
}

impl ConceptPairDataset {
    pub fn new(pair_label: impl Into<String>, records: Vec<MembershipRecord>) -> Result<Self> {
        let ds = ConceptPairDataset {
            pair_label: pair_label.into(),
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            r.validate()?;
            if !seen.insert(r.exemplar.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate exemplar `{}` in dataset `{}`",
                    r.exemplar, self.pair_label
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, exemplar: &str) -> Option<&MembershipRecord> {
        self.records.iter().find(|r| r.exemplar == exemplar)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for (i, name) in expected.iter().enumerate() {
        match headers.get(i) {
            Some(h) if h.trim() == *name => {}
            Some(h) => {
                return Err(Error::Input(format!(
                    "header column {} is `{}`, expected `{name}`",
                    i + 1,
                    h.trim()
                )))
            }
            None => return Err(Error::Input(format!("missing column `{name}`"))),
        }
    }
    if headers.len() > expected.len() {
        return Err(Error::Input(format!(
            "unexpected extra column `{}`",
            headers.get(expected.len()).unwrap_or_default()
        )));
    }
    Ok(())
}

fn parse_weight(cell: Option<&str>, row: usize, field: &str) -> Result<f64> {
    let cell = cell.ok_or_else(|| Error::Row {
        row,
        field: field.to_string(),
        message: "missing cell".into(),
    })?;
    let v: f64 = cell.trim().parse().map_err(|_| Error::Row {
        row,
        field: field.to_string(),
        message: format!("`{cell}` is not a number"),
    })?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Row {
            row,
            field: field.to_string(),
            message: format!("{v} is outside [0, 1]"),
        });
    }
    Ok(v)
}

/// Reads a dataset in the ingestion schema. Rows are numbered from 1, not
/// counting the header.
pub fn load_dataset<R: Read>(source: R, pair_label: &str) -> Result<ConceptPairDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    check_header(rdr.headers()?, &SCHEMA)?;
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let exemplar = row
            .get(0)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Row {
                row: row_no,
                field: "exemplar".into(),
                message: "missing label".into(),
            })?;
        if row.len() > SCHEMA.len() {
            return Err(Error::Row {
                row: row_no,
                field: "exemplar".into(),
                message: format!("{} cells, expected {}", row.len(), SCHEMA.len()),
            });
        }
        let mut w = [0.0; 8];
        for (k, slot) in w.iter_mut().enumerate() {
            *slot = parse_weight(row.get(k + 1), row_no, SCHEMA[k + 1])?;
        }
        records.push(MembershipRecord::from_weights_unchecked(exemplar, w));
    }
    ConceptPairDataset::new(pair_label, records)
}

/// Writes a dataset in the ingestion schema.
pub fn write_dataset<W: Write>(sink: W, dataset: &ConceptPairDataset) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    wtr.write_record(SCHEMA)?;
    for r in &dataset.records {
        let mut row = vec![r.exemplar.clone()];
        row.extend(r.weights().iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Membership indicator of one Likert answer: positive answers count as
/// members, negative as non-members, and zero as half.
pub fn likert_membership(score: i32) -> Result<f64> {
    match score {
        1..=3 => Ok(1.0),
        0 => Ok(0.5),
        -3..=-1 => Ok(0.0),
        _ => Err(Error::Validation(format!(
            "Likert score {score} is outside -3..=3"
        ))),
    }
}

/// Relative membership frequency of one question over all subjects.
pub fn likert_to_weight(column: &[i32]) -> Result<f64> {
    if column.is_empty() {
        return Err(Error::Input("empty Likert column".into()));
    }
    let mut total = 0.0;
    for &s in column {
        total += likert_membership(s)?;
    }
    Ok(total / column.len() as f64)
}

/// Answers of a panel of subjects. Missing answers are allowed and simply
/// left out of a question's column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LikertResponseMatrix {
    pub subjects: Vec<String>,
    pub questions: Vec<String>,
    /// `entries[s][q]` is the answer of subject `s` to question `q`.
    pub entries: Vec<Vec<Option<i8>>>,
}

impl LikertResponseMatrix {
    pub fn column(&self, q: usize) -> Vec<i32> {
        self.entries
            .iter()
            .filter_map(|row| row[q].map(i32::from))
            .collect()
    }

    pub fn question_index(&self, label: &str) -> Option<usize> {
        self.questions.iter().position(|q| q == label)
    }

    /// Weights of every question, in question order.
    pub fn weights(&self) -> Result<Vec<f64>> {
        (0..self.questions.len())
            .map(|q| {
                likert_to_weight(&self.column(q)).map_err(|e| {
                    Error::Input(format!("question `{}`: {e}", self.questions[q]))
                })
            })
            .collect()
    }
}

/// Reads the `subject,question,score` long form.
pub fn load_likert<R: Read>(source: R) -> Result<LikertResponseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    check_header(rdr.headers()?, &LIKERT_SCHEMA)?;
    let mut m = LikertResponseMatrix::default();
    let mut subj_idx: BTreeMap<String, usize> = BTreeMap::new();
    let mut q_idx: BTreeMap<String, usize> = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cell = |k: usize| -> Result<String> {
            row.get(k)
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Row {
                    row: row_no,
                    field: LIKERT_SCHEMA[k].into(),
                    message: "missing cell".into(),
                })
        };
        let subject = cell(0)?;
        let question = cell(1)?;
        let raw = cell(2)?;
        let score: i32 = raw.parse().map_err(|_| Error::Row {
            row: row_no,
            field: "score".into(),
            message: format!("`{raw}` is not an integer"),
        })?;
        if !(-3..=3).contains(&score) {
            return Err(Error::Row {
                row: row_no,
                field: "score".into(),
                message: format!("{score} is outside -3..=3"),
            });
        }
        let s = *subj_idx.entry(subject.clone()).or_insert_with(|| {
            m.subjects.push(subject);
            m.entries.push(vec![None; m.questions.len()]);
            m.subjects.len() - 1
        });
        let q = *q_idx.entry(question.clone()).or_insert_with(|| {
            m.questions.push(question);
            for r in m.entries.iter_mut() {
                r.push(None);
            }
            m.questions.len() - 1
        });
        if m.entries[s][q].is_some() {
            return Err(Error::Row {
                row: row_no,
                field: "question".into(),
                message: format!(
                    "duplicate answer of subject `{}` to `{}`",
                    m.subjects[s], m.questions[q]
                ),
            });
        }
        m.entries[s][q] = Some(score as i8);
    }
    Ok(m)
}

/// Splits a question label of the form `exemplar:field`, where `field` is
/// one of the eight weight columns of the ingestion schema.
pub fn split_question(label: &str) -> Option<(&str, usize)> {
    let (exemplar, field) = label.rsplit_once(':')?;
    let k = SCHEMA[1..].iter().position(|f| *f == field.trim())?;
    Some((exemplar.trim(), k))
}

/// Groups the questions of a panel by exemplar. Each exemplar must have all
/// eight fields; the result maps exemplar order of first appearance to the
/// question index of each field.
pub fn likert_layout(m: &LikertResponseMatrix) -> Result<Vec<(String, [usize; 8])>> {
    let mut order: Vec<String> = Vec::new();
    let mut slots: BTreeMap<String, [Option<usize>; 8]> = BTreeMap::new();
    for (qi, label) in m.questions.iter().enumerate() {
        let (ex, k) = split_question(label).ok_or_else(|| {
            Error::Input(format!(
                "question `{label}` is not of the form `exemplar:field` with field one of {}",
                SCHEMA[1..].join(", ")
            ))
        })?;
        let entry = slots.entry(ex.to_string()).or_insert_with(|| {
            order.push(ex.to_string());
            [None; 8]
        });
        entry[k] = Some(qi);
    }
    order
        .into_iter()
        .map(|ex| {
            let s = slots[&ex];
            let mut idx = [0usize; 8];
            for (k, slot) in s.iter().enumerate() {
                idx[k] = slot.ok_or_else(|| {
                    Error::Input(format!("exemplar `{ex}` has no `{}` question", SCHEMA[k + 1]))
                })?;
            }
            Ok((ex, idx))
        })
        .collect()
}

/// Aggregates a Likert panel into a dataset.
pub fn likert_dataset(m: &LikertResponseMatrix, pair_label: &str) -> Result<ConceptPairDataset> {
    let weights = m.weights()?;
    let records = likert_layout(m)?
        .into_iter()
        .map(|(ex, idx)| {
            let mut w = [0.0; 8];
            for k in 0..8 {
                w[k] = weights[idx[k]];
            }
            MembershipRecord::new(ex, w)
        })
        .collect::<Result<Vec<_>>>()?;
    ConceptPairDataset::new(pair_label, records)
}
