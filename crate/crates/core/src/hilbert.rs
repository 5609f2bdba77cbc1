//! First-sector model in an eight-dimensional real Hilbert space.
//!
//! Each concept is a unit vector with a global phase. The membership
//! projector keeps coordinates 5 to 8, so a Born weight is the squared norm of
//! that half and the interference of two concepts is their dot product on it,
//! scaled by the cosine of the phase difference. Angles are stored in degrees
//! so that documents round-trip exactly.

use nalgebra::{Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Concept, MembershipRecord, Pair};
use crate::error::{Error, Result};

pub type Vec8 = [f64; 8];

/// Coordinates kept by the membership projector (zero-based).
const MEMBER: std::ops::Range<usize> = 4..8;

/// Tolerance of the frame invariants for constructed frames.
pub const FRAME_TOL: f64 = 1e-10;

/// Four vectors representing A, B, A', B', their global phases, and the
/// marginal weights the frame was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// In the order A, B, A', B'.
    pub vectors: [Vec8; 4],
    pub phases_deg: [f64; 4],
    pub marginals: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameResiduals {
    /// Largest deviation of a vector norm from one.
    pub norm: f64,
    /// Largest absolute inner product between two distinct vectors.
    pub orth: f64,
    /// Largest deviation of a Born weight from its marginal.
    pub born: f64,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        self.norm.max(self.orth).max(self.born)
    }
}

fn dot(a: &Vec8, b: &Vec8) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared norm of coordinates 5 to 8.
pub fn born_weight(v: &Vec8) -> f64 {
    v[MEMBER].iter().map(|x| x * x).sum()
}

/// Born weight of a vector whose norm is within `tol` of one.
pub fn checked_born_weight(v: &Vec8, tol: f64) -> Result<f64> {
    let n = dot(v, v).sqrt();
    if (n - 1.0).abs() > tol {
        return Err(Error::Validation(format!("vector norm {n} is not 1 within {tol}")));
    }
    Ok(born_weight(v))
}

impl Frame {
    pub fn vector(&self, c: Concept) -> &Vec8 {
        &self.vectors[c.index()]
    }

    pub fn phase_deg(&self, c: Concept) -> f64 {
        self.phases_deg[c.index()]
    }

    pub fn marginal(&self, c: Concept) -> f64 {
        self.marginals[c.index()]
    }

    /// Inner product of the pair on the membership coordinates.
    pub fn lambda(&self, p: Pair) -> f64 {
        let (x, y) = p.concepts();
        let (a, b) = (self.vector(x), self.vector(y));
        MEMBER.map(|i| a[i] * b[i]).sum()
    }

    /// `(mu(X) + mu(Y)) / 2` for the pair.
    pub fn average(&self, p: Pair) -> f64 {
        let (x, y) = p.concepts();
        0.5 * (self.marginal(x) + self.marginal(y))
    }

    /// Phase of the second concept minus phase of the first.
    pub fn phase_difference_deg(&self, p: Pair) -> f64 {
        let (x, y) = p.concepts();
        self.phase_deg(y) - self.phase_deg(x)
    }

    pub fn residuals(&self) -> FrameResiduals {
        let mut r = FrameResiduals {
            norm: 0.0,
            orth: 0.0,
            born: 0.0,
        };
        for i in 0..4 {
            let v = &self.vectors[i];
            r.norm = r.norm.max((dot(v, v).sqrt() - 1.0).abs());
            r.born = r.born.max((born_weight(v) - self.marginals[i]).abs());
            for j in i + 1..4 {
                r.orth = r.orth.max(dot(v, &self.vectors[j]).abs());
            }
        }
        r
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let r = self.residuals();
        if r.max() > tol {
            return Err(Error::Validation(format!(
                "frame invariants fail at {tol}: norm {:.3e}, orthogonality {:.3e}, born {:.3e}",
                r.norm, r.orth, r.born
            )));
        }
        Ok(())
    }
}

/// Interference at the frame's own phase difference.
pub fn interference_term(frame: &Frame, p: Pair) -> f64 {
    interference_at(frame, p, frame.phase_difference_deg(p))
}

/// Interference of the pair at a given phase difference.
pub fn interference_at(frame: &Frame, p: Pair, phi_deg: f64) -> f64 {
    frame.lambda(p) * phi_deg.to_radians().cos()
}

/// Conjunction weight predicted by the first sector alone. Not clamped.
pub fn first_sector_mu(frame: &Frame, p: Pair) -> f64 {
    frame.average(p) + interference_term(frame, p)
}

/// Largest inner product on the membership coordinates that two orthogonal
/// unit vectors with Born weights `mx`, `my` can have.
pub fn interference_capacity(mx: f64, my: f64) -> f64 {
    (mx * my).sqrt().min(((1.0 - mx) * (1.0 - my)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceInterval {
    pub lo: f64,
    pub hi: f64,
}

impl InterferenceInterval {
    pub fn contains(&self, x: f64, eps: f64) -> bool {
        x >= self.lo - eps && x <= self.hi + eps
    }

    /// Zero inside the interval, otherwise the gap to the nearest end.
    pub fn distance(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

pub fn first_sector_interval(frame: &Frame, p: Pair) -> InterferenceInterval {
    let avg = frame.average(p);
    let l = frame.lambda(p).abs();
    InterferenceInterval {
        lo: avg - l,
        hi: avg + l,
    }
}

/// Phase difference in [0, 180] degrees with `avg + lambda cos(phi) = target`.
pub fn angle_for(avg: f64, lambda: f64, target: f64) -> Result<f64> {
    const EPS: f64 = 1e-12;
    let gap = target - avg;
    if lambda == 0.0 {
        if gap.abs() <= EPS {
            return Ok(90.0);
        }
        return Err(Error::Infeasible(format!(
            "no interference available, target {target} differs from {avg}"
        )));
    }
    let c = gap / lambda;
    if c.abs() > 1.0 + EPS {
        return Err(Error::Infeasible(format!(
            "target {target} is {:.6} outside [{}, {}]",
            gap.abs() - lambda.abs(),
            avg - lambda.abs(),
            avg + lambda.abs()
        )));
    }
    Ok(c.clamp(-1.0, 1.0).acos().to_degrees())
}

pub fn solve_first_sector_angle(frame: &Frame, p: Pair, target: f64) -> Result<f64> {
    angle_for(frame.average(p), frame.lambda(p), target)
}

/// Gram entries of the pairs, in the order A, B, A', B'.
const PAIR_IDX: [(usize, usize); 4] = [(0, 1), (0, 3), (2, 1), (2, 3)];

const STEP: f64 = 0.1;
const ITERATIONS: usize = 400;
const RANDOM_STARTS: usize = 6;
const SEED: u64 = 0x5eed_f0c5;

fn clip_spectrum(g: &Matrix4<f64>, d: &[f64; 4]) -> Matrix4<f64> {
    let e = SymmetricEigen::new(*g);
    let w = e.eigenvalues.map(|x| x.clamp(0.0, 1.0));
    let mut out = e.eigenvectors * Matrix4::from_diagonal(&w) * e.eigenvectors.transpose();
    for i in 0..4 {
        out[(i, i)] = d[i];
    }
    0.5 * (out + out.transpose())
}

fn feasible(g: &Matrix4<f64>) -> bool {
    let e = SymmetricEigen::new(*g).eigenvalues;
    e.iter().all(|&x| (0.0..=1.0).contains(&x))
}

fn objective(g: &Matrix4<f64>) -> f64 {
    PAIR_IDX.iter().map(|&(i, j)| g[(i, j)] * g[(i, j)]).sum()
}

/// Moves `g` toward the diagonal until both `g` and `I - g` are positive
/// semidefinite. The diagonal matrix itself always is.
fn repair(g: Matrix4<f64>, d: &[f64; 4]) -> Matrix4<f64> {
    let base = Matrix4::from_diagonal(&nalgebra::Vector4::from_column_slice(d));
    if feasible(&g) {
        return g;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(&(base + (g - base) * mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    base + (g - base) * lo
}

fn ascend(mut g: Matrix4<f64>, d: &[f64; 4]) -> Matrix4<f64> {
    g = clip_spectrum(&g, d);
    for _ in 0..ITERATIONS {
        for &(i, j) in &PAIR_IDX {
            let v = g[(i, j)] * (1.0 + 2.0 * STEP);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g = clip_spectrum(&g, d);
    }
    repair(g, d)
}

fn starts(d: &[f64; 4]) -> Vec<Matrix4<f64>> {
    let cap = |i: usize, j: usize| interference_capacity(d[i], d[j]);
    let diag = Matrix4::from_diagonal(&nalgebra::Vector4::from_column_slice(d));
    let with = |entries: &[(usize, usize, f64)]| {
        let mut g = diag;
        for &(i, j, v) in entries {
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g
    };
    let mut out = vec![
        with(&[(0, 1, cap(0, 1)), (2, 3, cap(2, 3))]),
        with(&[(0, 3, cap(0, 3)), (2, 1, cap(2, 1))]),
        with(&[
            (0, 1, cap(0, 1)),
            (0, 3, cap(0, 3)),
            (2, 1, cap(2, 1)),
            (2, 3, -cap(2, 3)),
        ]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..RANDOM_STARTS {
        let mut e: Vec<(usize, usize, f64)> = PAIR_IDX
            .iter()
            .map(|&(i, j)| (i, j, cap(i, j) * rng.random_range(-1.0..=1.0)))
            .collect();
        e.push((0, 2, rng.random_range(-0.5..=0.5)));
        e.push((1, 3, rng.random_range(-0.5..=0.5)));
        out.push(with(&e));
    }
    out
}

/// Gram matrix of the membership halves of the four vectors: Born weights on
/// the diagonal, off-diagonal pair entries as large as possible in the sum of
/// squares, subject to `0 <= G <= I`.
fn optimal_gram(d: &[f64; 4]) -> Matrix4<f64> {
    let mut best: Option<(f64, Matrix4<f64>)> = None;
    for s in starts(d) {
        let g = ascend(s, d);
        let v = objective(&g);
        if best.as_ref().is_none_or(|(bv, _)| v > bv + 1e-12) {
            best = Some((v, g));
        }
    }
    best.expect("at least one start").1
}

/// Factors `G` and `I - G` into the membership and non-membership halves of
/// four orthonormal vectors.
fn factor(g: &Matrix4<f64>) -> [Vec8; 4] {
    let e = SymmetricEigen::new(*g);
    let q = e.eigenvectors;
    let mut out = [[0.0; 8]; 4];
    for x in 0..4 {
        for k in 0..4 {
            let w = e.eigenvalues[k].clamp(0.0, 1.0);
            out[x][k] = q[(x, k)] * (1.0 - w).sqrt();
            out[x][4 + k] = q[(x, k)] * w.sqrt();
        }
    }
    out
}

/// Builds a frame for the marginal weights of a record, with zero phases.
pub fn construct_frame(r: &MembershipRecord) -> Result<Frame> {
    construct_frame_for(r.marginals())
}

pub fn construct_frame_for(marginals: [f64; 4]) -> Result<Frame> {
    if marginals.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::Validation(format!("marginals {marginals:?} outside [0, 1]")));
    }
    let g = optimal_gram(&marginals);
    let frame = Frame {
        vectors: factor(&g),
        phases_deg: [0.0; 4],
        marginals,
    };
    let res = frame.residuals();
    if res.max() > FRAME_TOL {
        return Err(Error::NonConvergence {
            norm: res.norm,
            orth: res.orth,
            born: res.born,
        });
    }
    Ok(frame)
}
