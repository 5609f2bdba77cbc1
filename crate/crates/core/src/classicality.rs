//! Classicality diagnostics and predicates.
//!
//! The eight weights of a record admit a Kolmogorovian representation exactly
//! when the four marginal laws hold and the conjunctions sum to one. The
//! equivalent condition sets of the literature (two inequality-and-chain forms
//! and two marginal-law forms) are implemented separately so that their
//! agreement can be tested. All predicates take a tolerance because published
//! weights are rounded.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::datamodel::{MembershipRecord, Pair};
use crate::error::{Error, Result};

/// Default classicality tolerance for two-decimal published weights.
pub const DEFAULT_TOL: f64 = 0.015;

/// Overextensions, conjunction factors and marginal-law deviations of one
/// record, indexed AB, AB', A'B, A'B'.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// `mu(X and Y) - min(mu(X), mu(Y))`.
    pub delta: [f64; 4],
    /// `1 - mu(X) - mu(Y) + mu(X and Y)`.
    pub k: [f64; 4],
    pub i_a: f64,
    pub i_b: f64,
    pub i_ap: f64,
    pub i_bp: f64,
    /// `1 - ` the sum of the four conjunctions.
    pub i_total: f64,
}

impl DerivedParams {
    pub fn delta(&self, p: Pair) -> f64 {
        self.delta[p.index()]
    }

    pub fn k(&self, p: Pair) -> f64 {
        self.k[p.index()]
    }

    /// `1 - mu(A) - mu(A')`.
    pub fn i_aap(&self) -> f64 {
        self.i_total - self.i_a - self.i_ap
    }

    /// `1 - mu(B) - mu(B')`.
    pub fn i_bbp(&self) -> f64 {
        self.i_total - self.i_b - self.i_bp
    }

    /// The four marginal deviations followed by the normalization deviation.
    pub fn i_values(&self) -> [f64; 5] {
        [self.i_a, self.i_b, self.i_ap, self.i_bp, self.i_total]
    }
}

pub fn compute_derived(r: &MembershipRecord) -> DerivedParams {
    let mut delta = [0.0; 4];
    let mut k = [0.0; 4];
    for p in Pair::ALL {
        let (x, y) = p.concepts();
        let (mx, my, mxy) = (r.marginal(x), r.marginal(y), r.conjunction(p));
        delta[p.index()] = mxy - mx.min(my);
        k[p.index()] = 1.0 - mx - my + mxy;
    }
    DerivedParams {
        delta,
        k,
        i_a: r.mu_a - r.mu_ab - r.mu_abp,
        i_b: r.mu_b - r.mu_ab - r.mu_apb,
        i_ap: r.mu_ap - r.mu_apbp - r.mu_apb,
        i_bp: r.mu_bp - r.mu_apbp - r.mu_abp,
        i_total: 1.0 - r.mu_ab - r.mu_abp - r.mu_apb - r.mu_apbp,
    }
}

/// A failed condition with its signed residual. For an equality the residual
/// is left side minus right side; for an inequality `a <= b` it is `a - b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub violations: Vec<Violation>,
}

struct Checker {
    tol: f64,
    violations: Vec<Violation>,
}

impl Checker {
    fn new(tol: f64) -> Self {
        Checker {
            tol,
            violations: Vec::new(),
        }
    }

    fn eq(&mut self, name: &str, lhs: f64, rhs: f64) {
        let r = lhs - rhs;
        if r.abs() > self.tol {
            self.violations.push(Violation {
                condition: name.to_string(),
                residual: r,
            });
        }
    }

    fn le(&mut self, name: &str, lhs: f64, rhs: f64) {
        let r = lhs - rhs;
        if r > self.tol {
            self.violations.push(Violation {
                condition: name.to_string(),
                residual: r,
            });
        }
    }

    /// `0 <= a <= b <= 1` as three inequalities.
    fn chain(&mut self, a_name: &str, a: f64, b_name: &str, b: f64) {
        self.le(&format!("0 <= {a_name}"), 0.0, a);
        self.le(&format!("{a_name} <= {b_name}"), a, b);
        self.le(&format!("{b_name} <= 1"), b, 1.0);
    }

    fn finish(self) -> Verdict {
        Verdict {
            holds: self.violations.is_empty(),
            violations: self.violations,
        }
    }
}

fn marginal_laws(c: &mut Checker, r: &MembershipRecord) {
    c.eq("mu(A) = mu(AB) + mu(AB')", r.mu_a, r.mu_ab + r.mu_abp);
    c.eq("mu(B) = mu(AB) + mu(A'B)", r.mu_b, r.mu_ab + r.mu_apb);
    c.eq("mu(A') = mu(A'B') + mu(A'B)", r.mu_ap, r.mu_apbp + r.mu_apb);
    c.eq("mu(B') = mu(A'B') + mu(AB')", r.mu_bp, r.mu_apbp + r.mu_abp);
}

fn ab_chains(c: &mut Checker, r: &MembershipRecord) {
    c.chain("mu(AB)", r.mu_ab, "mu(A)", r.mu_a);
    c.chain("mu(AB)", r.mu_ab, "mu(B)", r.mu_b);
}

fn mixed_chains(c: &mut Checker, r: &MembershipRecord) {
    c.eq("mu(A) - mu(AB) = mu(AB')", r.mu_a - r.mu_ab, r.mu_abp);
    c.eq("mu(B') - mu(A'B') = mu(AB')", r.mu_bp - r.mu_apbp, r.mu_abp);
    c.eq("mu(B) - mu(AB) = mu(A'B)", r.mu_b - r.mu_ab, r.mu_apb);
    c.eq("mu(A') - mu(A'B') = mu(A'B)", r.mu_ap - r.mu_apbp, r.mu_apb);
}

/// Outcome of the first condition set. `redundant` is the last condition,
/// which follows from the others and is reported on its own.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub verdict: Verdict,
    pub redundant: Verdict,
}

/// Inequality chains for `AB` and `A'B'`, the two mixed equality chains, and
/// the inclusion-exclusion identities for `A'B'` and `AB`.
pub fn check_theorem1(r: &MembershipRecord, tol: f64) -> Theorem1Report {
    let mut c = Checker::new(tol);
    ab_chains(&mut c, r);
    c.chain("mu(A'B')", r.mu_apbp, "mu(A')", r.mu_ap);
    c.chain("mu(A'B')", r.mu_apbp, "mu(B')", r.mu_bp);
    mixed_chains(&mut c, r);
    c.eq("1 - mu(A) - mu(B) + mu(AB) = mu(A'B')", 1.0 - r.mu_a - r.mu_b + r.mu_ab, r.mu_apbp);
    let mut red = Checker::new(tol);
    red.eq(
        "1 - mu(A') - mu(B') + mu(A'B') = mu(AB)",
        1.0 - r.mu_ap - r.mu_bp + r.mu_apbp,
        r.mu_ab,
    );
    Theorem1Report {
        verdict: c.finish(),
        redundant: red.finish(),
    }
}

/// The first condition set without the `A'B'` inequality chains.
pub fn check_theorem2(r: &MembershipRecord, tol: f64) -> Verdict {
    let mut c = Checker::new(tol);
    ab_chains(&mut c, r);
    mixed_chains(&mut c, r);
    let k = 1.0 - r.mu_a - r.mu_b + r.mu_ab;
    c.le("0 <= 1 - mu(A) - mu(B) + mu(AB)", 0.0, k);
    c.eq("1 - mu(A) - mu(B) + mu(AB) = mu(A'B')", k, r.mu_apbp);
    c.finish()
}

/// Inequality chains for `AB`, the four marginal laws, and normalization in
/// the form `1 - mu(AB) - mu(AB') - mu(A'B) = mu(A'B') >= 0`.
pub fn check_theorem3(r: &MembershipRecord, tol: f64) -> Verdict {
    let mut c = Checker::new(tol);
    ab_chains(&mut c, r);
    marginal_laws(&mut c, r);
    let rest = 1.0 - r.mu_ab - r.mu_abp - r.mu_apb;
    c.le("0 <= 1 - mu(AB) - mu(AB') - mu(A'B)", 0.0, rest);
    c.eq("1 - mu(AB) - mu(AB') - mu(A'B) = mu(A'B')", rest, r.mu_apbp);
    c.finish()
}

/// The four marginal laws and normalization of the conjunctions. For weights
/// in [0, 1] this is necessary and sufficient.
pub fn check_classical(r: &MembershipRecord, tol: f64) -> Verdict {
    let mut c = Checker::new(tol);
    marginal_laws(&mut c, r);
    c.eq(
        "mu(AB) + mu(AB') + mu(A'B) + mu(A'B') = 1",
        r.mu_ab + r.mu_abp + r.mu_apb + r.mu_apbp,
        1.0,
    );
    c.finish()
}

/// All five deviations vanish.
pub fn check_all_i_zero(r: &MembershipRecord, tol: f64) -> Verdict {
    let d = compute_derived(r);
    let mut c = Checker::new(tol);
    for (name, v) in ["I_A", "I_B", "I_A'", "I_B'", "I_ABA'B'"].iter().zip(d.i_values()) {
        c.eq(&format!("{name} = 0"), v, 0.0);
    }
    c.finish()
}

/// Probability measure on the four sample points {1, 2, 3, 4}, identified
/// with the cells AB, AB', A'B, A'B'.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KolmogorovModel {
    pub atoms: [f64; 4],
}

impl KolmogorovModel {
    pub fn new(atoms: [f64; 4]) -> Result<Self> {
        if atoms.iter().any(|&p| !(p >= 0.0)) || (atoms.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "atoms {atoms:?} are not a probability vector"
            )));
        }
        Ok(KolmogorovModel { atoms })
    }

    /// Probability of the subset whose members are the set bits of `mask`
    /// (bit 0 for point 1).
    pub fn prob(&self, mask: u8) -> f64 {
        (0..4)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.atoms[i])
            .sum()
    }

    /// Events of A = {1, 2}, B = {1, 3}, A' = {3, 4}, B' = {2, 4}.
    pub fn marginals(&self) -> [f64; 4] {
        [self.prob(0b0011), self.prob(0b0101), self.prob(0b1100), self.prob(0b1010)]
    }

    /// The record this model assigns to the eight events.
    pub fn record(&self, exemplar: impl Into<String>) -> MembershipRecord {
        let m = self.marginals();
        let a = self.atoms;
        MembershipRecord::from_weights_unchecked(exemplar, [m[0], m[1], m[2], m[3], a[0], a[1], a[2], a[3]])
    }
}

/// Builds the four-atom model of a classical record; refuses otherwise.
pub fn build_kolmogorov_model(r: &MembershipRecord, tol: f64) -> Result<KolmogorovModel> {
    let v = check_classical(r, tol);
    if !v.holds {
        return Err(Error::NotClassical(v.violations));
    }
    Ok(KolmogorovModel {
        atoms: r.conjunctions(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Deviation {
    /// The conjunction weight exceeds the smaller of its two marginals.
    Overextension(Pair),
    /// The conjunction factor `k` is negative.
    KViolation(Pair),
    /// The conjunction weight exceeds both marginals.
    DoubleOverextension(Pair),
    /// Some marginal-law or normalization deviation exceeds the tolerance.
    NegationDeviation,
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deviation::Overextension(p) => write!(f, "overextension({})", p.label()),
            Deviation::KViolation(p) => write!(f, "k-violation({})", p.label()),
            Deviation::DoubleOverextension(p) => write!(f, "double-overextension({})", p.label()),
            Deviation::NegationDeviation => write!(f, "negation-deviation"),
        }
    }
}

/// Types of deviation from classicality shown by a record. Overextension and
/// factor signs are read strictly from the weights; `tol` applies to the
/// marginal-law deviations only.
pub fn classify_deviation(r: &MembershipRecord, tol: f64) -> BTreeSet<Deviation> {
    let d = compute_derived(r);
    let mut out = BTreeSet::new();
    for p in Pair::ALL {
        let (x, y) = p.concepts();
        let mxy = r.conjunction(p);
        if d.delta(p) > 0.0 {
            out.insert(Deviation::Overextension(p));
        }
        if d.k(p) < 0.0 {
            out.insert(Deviation::KViolation(p));
        }
        if mxy > r.marginal(x).max(r.marginal(y)) {
            out.insert(Deviation::DoubleOverextension(p));
        }
    }
    if d.i_values().iter().any(|v| v.abs() > tol) {
        out.insert(Deviation::NegationDeviation);
    }
    out
}
