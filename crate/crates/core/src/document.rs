//! JSON documents holding fitted or published models.

use serde::{Deserialize, Serialize};

use crate::datamodel::Pair;
use crate::error::{Error, Result};
use crate::fitter::{DatasetSummary, FitResult};
use crate::fock::{CombinationParams, FockParameters, SecondSectorTable};
use crate::hilbert::Frame;

pub const FITTER_VERSION: &str = concat!("concept-fock ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationEntry {
    pub pair: Pair,
    pub m: f64,
    pub n: f64,
    pub phi_deg: f64,
    #[serde(default)]
    pub theta_deg: f64,
    #[serde(default)]
    pub rho_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub exemplar: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitter: Option<String>,
    pub frame: Frame,
    pub table: SecondSectorTable,
    pub combinations: Vec<CombinationEntry>,
}

impl ModelEntry {
    pub fn from_fit(fit: &FitResult, dataset: Option<&str>) -> Self {
        let combinations = fit
            .combinations
            .iter()
            .map(|c| {
                let p = fit.params.combination(c.pair);
                CombinationEntry {
                    pair: c.pair,
                    m: p.m,
                    n: p.n,
                    phi_deg: p.phi_deg,
                    theta_deg: p.theta_deg,
                    rho_deg: p.rho_deg,
                    target: Some(c.target),
                    feasible: Some(c.feasible),
                    residual: Some(c.residual),
                }
            })
            .collect();
        ModelEntry {
            exemplar: fit.exemplar.clone(),
            dataset: dataset.map(str::to_owned),
            fitter: None,
            frame: fit.frame.clone(),
            table: fit.params.table,
            combinations,
        }
    }

    /// Records the fitter version in the entry.
    pub fn with_provenance(mut self) -> Self {
        self.fitter = Some(FITTER_VERSION.to_owned());
        self
    }

    /// Parameters in pair order; each pair must occur exactly once.
    pub fn params(&self) -> Result<FockParameters> {
        let mut slots: [Option<CombinationParams>; 4] = [None; 4];
        for c in &self.combinations {
            let slot = &mut slots[c.pair.index()];
            if slot.is_some() {
                return Err(Error::Validation(format!(
                    "{}: pair {} listed twice",
                    self.exemplar,
                    c.pair.label()
                )));
            }
            *slot = Some(CombinationParams {
                m: c.m,
                n: c.n,
                phi_deg: c.phi_deg,
                theta_deg: c.theta_deg,
                rho_deg: c.rho_deg,
            });
        }
        let mut combinations = [CombinationParams::from_m2(0.0, 90.0); 4];
        for p in Pair::ALL {
            combinations[p.index()] = slots[p.index()].ok_or_else(|| {
                Error::Validation(format!("{}: pair {} missing", self.exemplar, p.label()))
            })?;
        }
        Ok(FockParameters {
            table: self.table,
            combinations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub dataset: String,
    pub records: usize,
    pub targets: usize,
    pub fitted: usize,
    pub fraction: Option<f64>,
    pub first_sector_only: usize,
    pub mean_m: [f64; 4],
    pub mean_n: [f64; 4],
    #[serde(default)]
    pub failures: Vec<(String, String)>,
}

impl SummaryEntry {
    pub fn new(dataset: &str, s: &DatasetSummary) -> Self {
        SummaryEntry {
            dataset: dataset.to_owned(),
            records: s.records,
            targets: s.targets,
            fitted: s.fitted,
            fraction: s.fraction,
            first_sector_only: s.first_sector_only,
            mean_m: s.mean_m,
            mean_n: s.mean_n,
            failures: s.failures.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelDocument {
    pub models: Vec<ModelEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<SummaryEntry>,
}

impl ModelDocument {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn find(&self, exemplar: &str, dataset: Option<&str>) -> Option<&ModelEntry> {
        self.models.iter().find(|m| {
            m.exemplar == exemplar && dataset.is_none_or(|d| m.dataset.as_deref().is_none_or(|x| x == d))
        })
    }
}
