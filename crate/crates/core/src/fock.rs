//! Second sector and the full two-sector conjunction weights.
//!
//! The second sector is the tensor product of two copies of the eight
//! dimensional space. A state there is an 8x8 coefficient grid; projecting
//! each factor on the membership coordinates splits the grid into four
//! quadrants whose masses form a 2x2 contingency table. Such tables always
//! satisfy the classical marginal laws, and every classical record arises
//! from one.

use serde::{Deserialize, Serialize};

use crate::classicality::check_classical;
use crate::datamodel::{MembershipRecord, Pair};
use crate::error::{Error, Result};
use crate::hilbert::{first_sector_interval, interference_at, Frame, InterferenceInterval, Vec8};

/// Quadrant masses, indexed AB, AB', A'B, A'B'.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondSectorTable {
    #[serde(rename = "qAB")]
    pub q_ab: f64,
    #[serde(rename = "qABp")]
    pub q_abp: f64,
    #[serde(rename = "qApB")]
    pub q_apb: f64,
    #[serde(rename = "qApBp")]
    pub q_apbp: f64,
}

impl SecondSectorTable {
    pub fn from_masses(q: [f64; 4]) -> Self {
        SecondSectorTable {
            q_ab: q[0],
            q_abp: q[1],
            q_apb: q[2],
            q_apbp: q[3],
        }
    }

    pub fn masses(&self) -> [f64; 4] {
        [self.q_ab, self.q_abp, self.q_apb, self.q_apbp]
    }

    pub fn get(&self, p: Pair) -> f64 {
        self.masses()[p.index()]
    }

    /// Row margin of A, i.e. the second-sector weight of A.
    pub fn margin_a(&self) -> f64 {
        self.q_ab + self.q_abp
    }

    /// Column margin of B.
    pub fn margin_b(&self) -> f64 {
        self.q_ab + self.q_apb
    }

    /// Non-negative masses summing to one within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let q = self.masses();
        if q.iter().any(|&x| !(x >= -tol)) {
            return Err(Error::Validation(format!("negative quadrant mass in {q:?}")));
        }
        let s: f64 = q.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::Validation(format!("quadrant masses sum to {s}")));
        }
        Ok(())
    }
}

/// Admissible range of the `AB` mass for margins `mu_a`, `mu_b`.
pub fn frechet_bounds(mu_a: f64, mu_b: f64) -> (f64, f64) {
    ((mu_a + mu_b - 1.0).max(0.0), mu_a.min(mu_b))
}

/// The table with row margins `(mu_a, 1 - mu_a)`, column margins
/// `(mu_b, 1 - mu_b)` and `AB` mass `q_ab`.
pub fn table_from_margins(mu_a: f64, mu_b: f64, q_ab: f64) -> Result<SecondSectorTable> {
    const EPS: f64 = 1e-12;
    let (lo, hi) = frechet_bounds(mu_a, mu_b);
    if q_ab < lo - EPS || q_ab > hi + EPS {
        return Err(Error::Infeasible(format!(
            "qAB = {q_ab} outside the admissible range [{lo}, {hi}]"
        )));
    }
    let z = |x: f64| if x < 0.0 { 0.0 } else { x };
    Ok(SecondSectorTable {
        q_ab: z(q_ab),
        q_abp: z(mu_a - q_ab),
        q_apb: z(mu_b - q_ab),
        q_apbp: z(1.0 - mu_a - mu_b + q_ab),
    })
}

/// A vector of the tensor square, `c[i][j] * exp(i gamma[i][j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangledState {
    pub coefficients: [[f64; 8]; 8],
    pub phases: [[f64; 8]; 8],
}

fn in_member(i: usize) -> bool {
    i >= 4
}

/// The quadrant a grid cell belongs to.
fn quadrant(i: usize, j: usize) -> Pair {
    match (in_member(i), in_member(j)) {
        (true, true) => Pair::AB,
        (true, false) => Pair::ABp,
        (false, true) => Pair::ApB,
        (false, false) => Pair::ApBp,
    }
}

impl EntangledState {
    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().flatten().map(|c| c * c).sum()
    }
}

/// Spreads each quadrant mass uniformly over its sixteen cells.
pub fn entangled_state_from_table(t: &SecondSectorTable) -> EntangledState {
    let mut c = [[0.0; 8]; 8];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = t.get(quadrant(i, j)).sqrt() / 4.0;
        }
    }
    EntangledState {
        coefficients: c,
        phases: [[0.0; 8]; 8],
    }
}

/// Product state of two first-sector vectors; signs go into the phases.
pub fn product_state(a: &Vec8, b: &Vec8) -> EntangledState {
    let mut s = EntangledState {
        coefficients: [[0.0; 8]; 8],
        phases: [[0.0; 8]; 8],
    };
    for i in 0..8 {
        for j in 0..8 {
            let v = a[i] * b[j];
            s.coefficients[i][j] = v.abs();
            s.phases[i][j] = if v < 0.0 { std::f64::consts::PI } else { 0.0 };
        }
    }
    s
}

pub fn quadrant_masses(s: &EntangledState) -> SecondSectorTable {
    let mut q = [0.0; 4];
    for i in 0..8 {
        for j in 0..8 {
            let c = s.coefficients[i][j];
            q[quadrant(i, j).index()] += c * c;
        }
    }
    SecondSectorTable::from_masses(q)
}

/// The record a second-sector state assigns: margins of the table as the
/// concept weights, quadrant masses as the conjunction weights.
pub fn theorem4_forward(t: &SecondSectorTable) -> MembershipRecord {
    let (a, b) = (t.margin_a(), t.margin_b());
    MembershipRecord::from_weights_unchecked(
        "",
        [a, b, t.q_apb + t.q_apbp, t.q_abp + t.q_apbp, t.q_ab, t.q_abp, t.q_apb, t.q_apbp],
    )
}

/// A second-sector state reproducing a classical record.
pub fn theorem4_reverse(r: &MembershipRecord) -> Result<EntangledState> {
    let v = check_classical(r, 1e-9);
    if !v.holds {
        return Err(Error::NotClassical(v.violations));
    }
    Ok(entangled_state_from_table(&SecondSectorTable::from_masses(r.conjunctions())))
}

/// Sector weights and angle of one conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationParams {
    pub m: f64,
    pub n: f64,
    pub phi_deg: f64,
    /// Sector phases; no conjunction weight depends on them.
    #[serde(default)]
    pub theta_deg: f64,
    #[serde(default)]
    pub rho_deg: f64,
}

impl CombinationParams {
    pub fn from_m2(m2: f64, phi_deg: f64) -> Self {
        let m2 = m2.clamp(0.0, 1.0);
        CombinationParams {
            m: m2.sqrt(),
            n: (1.0 - m2).sqrt(),
            phi_deg,
            theta_deg: 0.0,
            rho_deg: 0.0,
        }
    }
}

/// A full two-sector model of one exemplar: one shared table and per
/// conjunction sector weights, indexed AB, AB', A'B, A'B'.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockParameters {
    pub table: SecondSectorTable,
    pub combinations: [CombinationParams; 4],
}

impl FockParameters {
    pub fn combination(&self, p: Pair) -> &CombinationParams {
        &self.combinations[p.index()]
    }

    /// `m^2 + n^2 = 1` within `tol` for every conjunction.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for p in Pair::ALL {
            let c = self.combination(p);
            let s = c.m * c.m + c.n * c.n;
            if (s - 1.0).abs() > tol || c.m < 0.0 || c.n < 0.0 {
                return Err(Error::Validation(format!(
                    "{}: m = {}, n = {} are not convex amplitudes",
                    p.label(),
                    c.m,
                    c.n
                )));
            }
        }
        Ok(())
    }
}

/// `m^2 q + n^2 (avg + lambda cos(phi))`, not clamped.
pub fn fock_membership(params: &FockParameters, frame: &Frame, p: Pair) -> f64 {
    let c = params.combination(p);
    let first = frame.average(p) + interference_at(frame, p, c.phi_deg);
    c.m * c.m * params.table.get(p) + c.n * c.n * first
}

/// Weights reachable by some choice of sector weights and angle: the hull of
/// the quadrant mass and the first-sector interval.
pub fn solution_interval(frame: &Frame, t: &SecondSectorTable, p: Pair) -> InterferenceInterval {
    let iv = first_sector_interval(frame, p);
    let q = t.get(p);
    InterferenceInterval {
        lo: q.min(iv.lo),
        hi: q.max(iv.hi),
    }
}
