//! Fitting the two-sector model to one record or a dataset.
//!
//! A fit builds a frame for the record's marginals, picks one second-sector
//! table for the exemplar, and then solves each conjunction for its sector
//! weights and angle. A conjunction weight is reachable exactly when it lies
//! in the hull of its quadrant mass and its first-sector interval; anything
//! else is reported with its distance, never clamped into place.

use serde::Serialize;

use crate::datamodel::{ConceptPairDataset, MembershipRecord, Pair};
use crate::error::{Error, Result};
use crate::fock::{
    fock_membership, frechet_bounds, solution_interval, table_from_margins, CombinationParams,
    FockParameters, SecondSectorTable,
};
use crate::hilbert::{
    born_weight, construct_frame, first_sector_interval, Frame, FrameResiduals,
    InterferenceInterval,
};

/// Boundary slack of the interval tests.
const EPS: f64 = 1e-12;

/// Residual below which a conjunction counts as fitted exactly.
pub const EXACT_TOL: f64 = 1e-9;

/// How to pick among the sector weights that reproduce a target.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum M2Mode {
    /// Smallest second-sector weight.
    #[default]
    Minimal,
    /// The admissible second-sector weight closest to the given value.
    Target(f64),
}

impl std::str::FromStr for M2Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "minimal" {
            return Ok(M2Mode::Minimal);
        }
        if let Some(v) = s.strip_prefix("target:") {
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Input(format!("`{v}` is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Input(format!("target m^2 {v} outside [0, 1]")));
            }
            return Ok(M2Mode::Target(v));
        }
        Err(Error::Input(format!(
            "m2 mode `{s}` is neither `minimal` nor `target:<value>`"
        )))
    }
}

fn table_cost(r: &MembershipRecord, q_ab: f64) -> f64 {
    let t = [
        q_ab,
        r.mu_a - q_ab,
        r.mu_b - q_ab,
        1.0 - r.mu_a - r.mu_b + q_ab,
    ];
    r.conjunctions()
        .iter()
        .zip(t)
        .map(|(target, q)| (target - q).abs())
        .sum()
}

/// `AB` mass of the shared table: the admissible value whose quadrants are
/// closest in total to the four conjunction weights, preferring the product
/// of the margins among equally close values.
pub fn choose_correlation(r: &MembershipRecord) -> f64 {
    let (lo, hi) = frechet_bounds(r.mu_a, r.mu_b);
    if hi - lo <= 0.0 {
        return lo;
    }
    let f = |q: f64| table_cost(r, q);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = 0.5 * (a + b);
    for x in [lo, hi] {
        if f(x) < f(best) {
            best = x;
        }
    }
    let fmin = f(best);
    // The cost is convex, so its near-minimal set is an interval around `best`.
    let flat = |q: f64| f(q) <= fmin + EPS;
    let edge = |mut inside: f64, mut outside: f64| {
        if flat(outside) {
            return outside;
        }
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if flat(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let left = edge(best, lo);
    let right = edge(best, hi);
    (r.mu_a * r.mu_b).clamp(left, right)
}

/// Second-sector weights `m^2` in [0, 1] with which `target` is reachable.
fn m2_range(target: f64, q: f64, iv: &InterferenceInterval) -> Option<(f64, f64)> {
    // lo + m2 (q - lo) <= target and hi + m2 (q - hi) >= target
    let mut range = (0.0f64, 1.0f64);
    let mut cut = |a: f64, b: f64| {
        // keep x with a + b x <= EPS
        if b.abs() < 1e-300 {
            if a > EPS {
                range = (1.0, 0.0);
            }
        } else if b > 0.0 {
            range.1 = range.1.min((EPS - a) / b);
        } else {
            range.0 = range.0.max((EPS - a) / b);
        }
    };
    cut(iv.lo - target, q - iv.lo);
    cut(target - iv.hi, iv.hi - q);
    let (lo, hi) = (range.0.max(0.0), range.1.min(1.0));
    (lo <= hi).then_some((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorSolution {
    pub m2: f64,
    pub phi_deg: f64,
}

/// Sector weights and angle with `m^2 q + (1 - m^2)(avg + lambda cos phi) =
/// target`, where `avg` is the centre of `interval` and `|lambda|` its
/// half-width.
pub fn solve_sector_weights(
    target: f64,
    q: f64,
    interval: &InterferenceInterval,
    lambda: f64,
    mode: M2Mode,
) -> Result<SectorSolution> {
    let (lo, hi) = m2_range(target, q, interval).ok_or_else(|| {
        let u = InterferenceInterval {
            lo: q.min(interval.lo),
            hi: q.max(interval.hi),
        };
        Error::Infeasible(format!(
            "target {target} lies {:.6} outside [{}, {}]",
            u.distance(target),
            u.lo,
            u.hi
        ))
    })?;
    let m2 = match mode {
        M2Mode::Minimal => lo,
        M2Mode::Target(v) => v.clamp(lo, hi),
    };
    let avg = 0.5 * (interval.lo + interval.hi);
    let phi_deg = if 1.0 - m2 <= EPS {
        90.0
    } else {
        let s = interval.clamp((target - m2 * q) / (1.0 - m2));
        if lambda == 0.0 {
            90.0
        } else {
            // s lies in the interval, so only rounding can push |cos| past 1
            ((s - avg) / lambda).clamp(-1.0, 1.0).acos().to_degrees()
        }
    };
    Ok(SectorSolution { m2, phi_deg })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationFit {
    pub pair: Pair,
    pub target: f64,
    /// Target within the reachable interval.
    pub feasible: bool,
    /// Target within the first-sector interval, so `m^2 = 0` works.
    pub first_sector_only: bool,
    pub m2: f64,
    pub predicted: f64,
    /// `predicted - target`.
    pub residual: f64,
    /// Gap between the target and the reachable interval.
    pub distance: f64,
    pub solution_interval: InterferenceInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub exemplar: String,
    pub frame: Frame,
    pub params: FockParameters,
    pub combinations: [CombinationFit; 4],
    /// Born weight minus measured weight, for A, B, A', B'.
    pub marginal_residuals: [f64; 4],
}

impl FitResult {
    pub fn feasible_pairs(&self) -> Vec<Pair> {
        self.combinations.iter().filter(|c| c.feasible).map(|c| c.pair).collect()
    }

    pub fn first_sector_only(&self) -> Vec<Pair> {
        self.combinations
            .iter()
            .filter(|c| c.first_sector_only)
            .map(|c| c.pair)
            .collect()
    }

    /// Born weights minus marginals, then predicted minus measured
    /// conjunctions.
    pub fn residuals(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&self.marginal_residuals);
        for (k, c) in self.combinations.iter().enumerate() {
            out[4 + k] = c.residual;
        }
        out
    }
}

/// Fits an exemplar on a given frame and table.
pub fn fit_with(r: &MembershipRecord, frame: Frame, table: SecondSectorTable, mode: M2Mode) -> FitResult {
    let mut combos = [CombinationParams::from_m2(0.0, 90.0); 4];
    let mut m2s = [0.0; 4];
    let mut info = Vec::with_capacity(4);
    for p in Pair::ALL {
        let target = r.conjunction(p);
        let q = table.get(p);
        let iv = first_sector_interval(&frame, p);
        let u = solution_interval(&frame, &table, p);
        let feasible = u.contains(target, EPS);
        let reachable = u.clamp(target);
        let sol = solve_sector_weights(reachable, q, &iv, frame.lambda(p), mode)
            .expect("a clamped target is reachable");
        combos[p.index()] = CombinationParams::from_m2(sol.m2, sol.phi_deg);
        m2s[p.index()] = sol.m2;
        info.push((p, target, feasible, iv.contains(target, EPS), u));
    }
    let params = FockParameters { table, combinations: combos };
    let combinations = std::array::from_fn(|k| {
        let (pair, target, feasible, first_only, u) = info[k];
        let predicted = fock_membership(&params, &frame, pair);
        CombinationFit {
            pair,
            target,
            feasible,
            first_sector_only: first_only,
            m2: m2s[k],
            predicted,
            residual: predicted - target,
            distance: u.distance(target),
            solution_interval: u,
        }
    });
    let marginal_residuals =
        std::array::from_fn(|k| born_weight(&frame.vectors[k]) - r.marginals()[k]);
    FitResult {
        exemplar: r.exemplar.clone(),
        frame,
        params,
        combinations,
        marginal_residuals,
    }
}

pub fn fit_record(r: &MembershipRecord, mode: M2Mode) -> Result<FitResult> {
    r.validate()?;
    let frame = construct_frame(r)?;
    let table = table_from_margins(r.mu_a, r.mu_b, choose_correlation(r))?;
    Ok(fit_with(r, frame, table, mode))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub records: usize,
    pub targets: usize,
    /// Conjunctions reproduced within the exactness tolerance.
    pub fitted: usize,
    /// `fitted / targets`; `None` for an empty dataset.
    pub fraction: Option<f64>,
    pub first_sector_only: usize,
    /// Means over fitted records, indexed AB, AB', A'B, A'B'.
    pub mean_m: [f64; 4],
    pub mean_n: [f64; 4],
    /// Exemplars whose fit failed, with the reason.
    pub failures: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetFit {
    pub results: Vec<FitResult>,
    pub summary: DatasetSummary,
}

pub fn fit_dataset(ds: &ConceptPairDataset, mode: M2Mode) -> DatasetFit {
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for r in &ds.records {
        match fit_record(r, mode) {
            Ok(f) => results.push(f),
            Err(e) => failures.push((r.exemplar.clone(), e.to_string())),
        }
    }
    let targets = 4 * ds.records.len();
    let fitted = results
        .iter()
        .flat_map(|f| f.combinations.iter())
        .filter(|c| c.residual.abs() < EXACT_TOL)
        .count();
    let first_sector_only = results
        .iter()
        .flat_map(|f| f.combinations.iter())
        .filter(|c| c.first_sector_only)
        .count();
    let n = results.len().max(1) as f64;
    let mut mean_m = [0.0; 4];
    let mut mean_n = [0.0; 4];
    for f in &results {
        for k in 0..4 {
            mean_m[k] += f.params.combinations[k].m.abs() / n;
            mean_n[k] += f.params.combinations[k].n.abs() / n;
        }
    }
    DatasetFit {
        summary: DatasetSummary {
            records: ds.records.len(),
            targets,
            fitted,
            fraction: (targets > 0).then(|| fitted as f64 / targets as f64),
            first_sector_only,
            mean_m,
            mean_n,
            failures,
        },
        results,
    }
}

/// Residuals of a model printed with two-decimal coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub exemplar: String,
    pub frame: FrameResiduals,
    /// Born weight minus measured weight, for A, B, A', B'.
    pub born: [f64; 4],
    /// Predicted weight of each conjunction.
    pub predicted: [f64; 4],
    /// Predicted minus measured, for each conjunction.
    pub conjunctions: [f64; 4],
}

impl VerificationReport {
    pub fn max_conjunction_residual(&self) -> f64 {
        self.conjunctions.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    pub fn max_frame_residual(&self) -> f64 {
        self.frame.max()
    }
}

/// Evaluates a given model against its record. The record's marginals are
/// used as the first-sector averages.
pub fn verify_published(params: &FockParameters, frame: &Frame, r: &MembershipRecord) -> VerificationReport {
    let frame = Frame {
        marginals: r.marginals(),
        ..frame.clone()
    };
    let predicted = Pair::ALL.map(|p| fock_membership(params, &frame, p));
    VerificationReport {
        exemplar: r.exemplar.clone(),
        frame: frame.residuals(),
        born: std::array::from_fn(|k| born_weight(&frame.vectors[k]) - r.marginals()[k]),
        conjunctions: std::array::from_fn(|k| predicted[k] - r.conjunctions()[k]),
        predicted,
    }
}
