//! Finite-dimensional BCL triples with a prescribed defect.
//!
//! Coordinates follow the canonical ordering `diag(I_l1, D, −I_l1p, −D)`.
//! The positive eigenvalue groups (the `λ = 1` group first, then interior
//! eigenvalues decreasing) occupy the first half, their negatives the
//! second half in the same order. For each group with unitary `U_i`
//! between the `λ` and `−λ` eigenspaces the frame vectors are
//!
//! ```text
//! f  = √((1+λ)/2) e ⊕  √((1−λ)/2) U_i e     (basis of ran P⊥)
//! f̃  = √((1−λ)/2) e ⊕ −√((1+λ)/2) U_i e     (basis of ran P)
//! ```
//!
//! so that in the basis `(f, f̃)` every defect `T` acts by
//! `T f = λ² f + λ√(1−λ²) f̃`, `T f̃ = λ√(1−λ²) f − λ² f̃`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};
use crate::matcore::{
    hermitian_eigen, norm, re, validate_structure, ComplexMatrix, StructureKind, Tolerances, C64,
    ONE, ZERO,
};
use crate::spectrum::{canonical_matrix, DefectSpectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    PartI,
    PartII { alpha: C64 },
    PartIII,
    Halmos,
    External,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::PartI => write!(f, "part-i"),
            Provenance::PartII { alpha } => write!(f, "part-ii(alpha={},{})", alpha.re, alpha.im),
            Provenance::PartIII => write!(f, "part-iii"),
            Provenance::Halmos => write!(f, "halmos"),
            Provenance::External => write!(f, "external"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "part-i" => Ok(Provenance::PartI),
            "part-iii" => Ok(Provenance::PartIII),
            "halmos" => Ok(Provenance::Halmos),
            "external" => Ok(Provenance::External),
            _ => {
                let inner = s
                    .strip_prefix("part-ii(alpha=")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown provenance {s:?}"))?;
                let (a, b) = inner
                    .split_once(',')
                    .ok_or_else(|| format!("malformed alpha in {s:?}"))?;
                let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
                Ok(Provenance::PartII {
                    alpha: C64::new(parse(a)?, parse(b)?),
                })
            }
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BclTriple {
    pub dim: usize,
    #[serde(rename = "U")]
    pub u: ComplexMatrix,
    #[serde(rename = "P")]
    pub p: ComplexMatrix,
    pub provenance: Provenance,
}

impl BclTriple {
    /// Wraps `(U, P)` after checking shapes and structure.
    pub fn new(u: ComplexMatrix, p: ComplexMatrix, provenance: Provenance, tol: &Tolerances) -> Result<Self> {
        let t = Self {
            dim: u.rows(),
            u,
            p,
            provenance,
        };
        t.validate(tol)?;
        Ok(t)
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let n = self.u.require_square()?;
        if n != self.dim || self.p.rows() != n || self.p.cols() != n {
            return Err(BclError::DimensionMismatch {
                expected: self.dim,
                found: if n != self.dim { n } else { self.p.rows() },
            });
        }
        let u = validate_structure(&self.u, StructureKind::Unitary, tol)?;
        if !u.pass {
            return Err(BclError::NotUnitary { violation: u.violation });
        }
        let p = validate_structure(&self.p, StructureKind::Projection, tol)?;
        if !p.pass {
            return Err(BclError::NotProjection { violation: p.violation });
        }
        Ok(())
    }

    pub fn p_perp(&self) -> ComplexMatrix {
        &ComplexMatrix::identity(self.dim) - &self.p
    }

    /// `P⊥ − U P⊥ U*`.
    pub fn defect(&self) -> ComplexMatrix {
        let pp = self.p_perp();
        &pp - &self.u.matmul(&pp).matmul(&self.u.adjoint())
    }
}

/// One positive eigenvalue group of the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGroup {
    pub lambda: f64,
    pub k: usize,
    /// First coordinate of the group inside each half.
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub spectrum: DefectSpectrum,
    pub groups: Vec<FrameGroup>,
    /// Columns `f^i_t`, an orthonormal basis of `ran P⊥`.
    pub f: ComplexMatrix,
    /// Columns `f̃^i_t`, an orthonormal basis of `ran P`.
    pub ft: ComplexMatrix,
    pub block_unitaries: Vec<ComplexMatrix>,
}

impl Frame {
    /// Number of frame vectors of each kind, `l1 + Σ k_i`.
    pub fn half(&self) -> usize {
        self.f.cols()
    }

    pub fn dim(&self) -> usize {
        self.f.rows()
    }

    /// `λ` of every frame position in order.
    pub fn lambdas(&self) -> Vec<f64> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.lambda, g.k))
            .collect()
    }

    /// The unitary `[f_1 … f_m, f̃_1 … f̃_m]`.
    pub fn basis(&self) -> ComplexMatrix {
        let (n, m) = (self.dim(), self.half());
        let mut b = ComplexMatrix::zeros(n, 2 * m);
        b.set_block(0, 0, &self.f);
        b.set_block(0, m, &self.ft);
        b
    }

    /// Projection onto `span f̃`.
    pub fn p(&self) -> ComplexMatrix {
        self.ft.matmul(&self.ft.adjoint())
    }

    pub fn p_perp(&self) -> ComplexMatrix {
        self.f.matmul(&self.f.adjoint())
    }

    /// Transports a matrix written in the frame basis to coordinates.
    pub fn from_frame(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let b = self.basis();
        b.matmul(m).matmul(&b.adjoint())
    }

    pub fn to_frame(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let b = self.basis();
        b.adjoint().matmul(m).matmul(&b)
    }
}

/// Builds the frame of a finite spectrum with `l1 = l1p`. `block_unitaries`
/// has one `k × k` unitary per positive group (the `λ = 1` group first when
/// `l1 > 0`); identities are used when it is `None`.
pub fn build_frame(
    s: &DefectSpectrum,
    block_unitaries: Option<&[ComplexMatrix]>,
    tol: &Tolerances,
) -> Result<Frame> {
    if s.is_infinite() {
        return Err(BclError::InfiniteSpectrum);
    }
    s.validate()?;
    if s.l1 != s.l1p {
        return Err(BclError::PreconditionViolation(format!(
            "a frame pairs E_1 with E_-1, but dim E_1 = {} and dim E_-1 = {}",
            s.l1, s.l1p
        )));
    }
    let positive = s.positive_groups();
    let unitaries: Vec<ComplexMatrix> = match block_unitaries {
        None => positive.iter().map(|&(_, k)| ComplexMatrix::identity(k)).collect(),
        Some(list) => {
            if list.len() != positive.len() {
                return Err(BclError::DimensionMismatch {
                    expected: positive.len(),
                    found: list.len(),
                });
            }
            for (u, &(_, k)) in list.iter().zip(&positive) {
                if u.rows() != k || u.cols() != k {
                    return Err(BclError::DimensionMismatch {
                        expected: k,
                        found: u.rows(),
                    });
                }
                let check = validate_structure(u, StructureKind::Unitary, tol)?;
                if !check.pass {
                    return Err(BclError::NotUnitary {
                        violation: check.violation,
                    });
                }
            }
            list.to_vec()
        }
    };

    let m: usize = positive.iter().map(|&(_, k)| k).sum();
    let n = 2 * m;
    let mut f = ComplexMatrix::zeros(n, m);
    let mut ft = ComplexMatrix::zeros(n, m);
    let mut groups = Vec::with_capacity(positive.len());
    let mut offset = 0;
    for (&(lambda, k), u) in positive.iter().zip(&unitaries) {
        let a = ((1.0 + lambda) / 2.0).sqrt();
        let b = ((1.0 - lambda) / 2.0).sqrt();
        for t in 0..k {
            let col = offset + t;
            f[(col, col)] = re(a);
            ft[(col, col)] = re(b);
            // U_i e_t lands in the negative half of the same group
            for r in 0..k {
                let ue = u[(r, t)];
                f[(m + offset + r, col)] = ue * b;
                ft[(m + offset + r, col)] = -ue * a;
            }
        }
        groups.push(FrameGroup { lambda, k, offset });
        offset += k;
    }
    Ok(Frame {
        spectrum: s.clone(),
        groups,
        f,
        ft,
        block_unitaries: unitaries,
    })
}

/// The frame-basis matrix of the cyclic unitary: `U f_j = c_j f_j − λ_j f̃_j`
/// and `U f̃_j = λ_{j'} f_{j'} + c_{j'} f̃_{j'}` with `c = √(1−λ²)` and
/// `j' = next(j)`.
fn frame_unitary(lambdas: &[f64], next: impl Fn(usize) -> usize) -> ComplexMatrix {
    let m = lambdas.len();
    let c: Vec<f64> = lambdas.iter().map(|l| (1.0 - l * l).max(0.0).sqrt()).collect();
    let mut u = ComplexMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        u[(j, j)] = re(c[j]);
        u[(m + j, j)] = re(-lambdas[j]);
        let jn = next(j);
        u[(jn, m + j)] = re(lambdas[jn]);
        u[(m + jn, m + j)] = re(c[jn]);
    }
    u
}

fn distinct_positive(s: &DefectSpectrum) -> usize {
    s.positive_groups().len()
}

/// Irreducible triple for a spectrum with at least two distinct positive
/// eigenvalues: the `f̃` vectors are shifted cyclically through all groups.
pub fn construct_part_i(frame: &Frame, tol: &Tolerances) -> Result<BclTriple> {
    let s = &frame.spectrum;
    if s.l1 != s.l1p || distinct_positive(s) < 2 {
        return Err(BclError::PreconditionViolation(
            "the cyclic construction needs dim E_1 = dim E_-1 and at least two distinct positive eigenvalues"
                .into(),
        ));
    }
    let m = frame.half();
    let u = frame.from_frame(&frame_unitary(&frame.lambdas(), |j| (j + 1) % m));
    BclTriple::new(u, frame.p(), Provenance::PartI, tol)
}

/// Irreducible triple for a single interior eigenvalue `λ` of multiplicity
/// `k`: the cyclic construction inside the group with `U f_1` multiplied by
/// the twist `α` (`|α| = 1`, `α ≠ 1`). For `k = 1` this is a 2×2 simple
/// block.
pub fn construct_part_ii(frame: &Frame, alpha: C64, tol: &Tolerances) -> Result<BclTriple> {
    let s = &frame.spectrum;
    if s.l1 != 0 || s.l1p != 0 || s.interior.len() != 1 {
        return Err(BclError::PreconditionViolation(
            "the twisted construction needs exactly one positive eigenvalue, lying in (0, 1)".into(),
        ));
    }
    if (alpha.norm() - 1.0).abs() > tol.structural || (alpha - ONE).norm() <= tol.structural {
        return Err(BclError::InvalidTwist {
            re: alpha.re,
            im: alpha.im,
        });
    }
    let m = frame.half();
    let mut u_frame = frame_unitary(&frame.lambdas(), |j| (j + 1) % m);
    for r in 0..2 * m {
        u_frame[(r, 0)] *= alpha;
    }
    let u = frame.from_frame(&u_frame);
    BclTriple::new(u, frame.p(), Provenance::PartII { alpha }, tol)
}

/// A reducible triple with the right defect: every group closes on itself
/// (`U f̃_j = λ_j f_j + c_j f̃_j`), giving a direct sum of 2×2 simple blocks.
pub fn construct_simple_blocks(frame: &Frame, tol: &Tolerances) -> Result<BclTriple> {
    let u = frame.from_frame(&frame_unitary(&frame.lambdas(), |j| j));
    BclTriple::new(u, frame.p(), Provenance::Halmos, tol)
}

/// A joint reducing subspace given by orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpossibilityWitness {
    pub triple: BclTriple,
    pub witness: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartIiiOutcome {
    Irreducible(BclTriple),
    Reducible(ImpossibilityWitness),
}

impl PartIiiOutcome {
    pub fn triple(&self) -> &BclTriple {
        match self {
            PartIiiOutcome::Irreducible(t) => t,
            PartIiiOutcome::Reducible(w) => &w.triple,
        }
    }
}

/// Spectrum `{1, −1}` with `l1 = l1p`: `P⊥ = diag(I, 0)` and
/// `U = [[0, I], [I, 0]]`. For `l1 ≥ 2` every such triple is reducible and
/// the outcome carries the subspace spanned by `P⊥v` and `Pv` for an
/// eigenvector `v` of `U`.
pub fn construct_part_iii(s: &DefectSpectrum, tol: &Tolerances) -> Result<PartIiiOutcome> {
    if s.is_infinite() {
        return Err(BclError::InfiniteSpectrum);
    }
    if !s.interior.is_empty() || s.l1 != s.l1p || s.l1 == 0 {
        return Err(BclError::PreconditionViolation(
            "the off-diagonal construction needs an empty interior and dim E_1 = dim E_-1 >= 1".into(),
        ));
    }
    let l = s.l1;
    let n = 2 * l;
    let id = ComplexMatrix::identity(l);
    let mut u = ComplexMatrix::zeros(n, n);
    u.set_block(0, l, &id);
    u.set_block(l, 0, &id);
    let mut p = ComplexMatrix::zeros(n, n);
    p.set_block(l, l, &id);
    let triple = BclTriple::new(u, p, Provenance::PartIII, tol)?;
    if l == 1 {
        return Ok(PartIiiOutcome::Irreducible(triple));
    }

    let groups = hermitian_eigen(&triple.u, tol)?;
    let v = groups[0].vectors.column(0);
    let pv = triple.p.mul_vec(&v);
    let pperp_v: Vec<C64> = v.iter().zip(&pv).map(|(a, b)| a - b).collect();
    let (n1, n2) = (norm(&pperp_v), norm(&pv));
    if n1 <= tol.rank_gap || n2 <= tol.rank_gap {
        return Err(BclError::PreconditionViolation(
            "eigenvector of U lies in ran P or ran P⊥".into(),
        ));
    }
    let w1: Vec<C64> = pperp_v.iter().map(|x| x / n1).collect();
    let w2: Vec<C64> = pv.iter().map(|x| x / n2).collect();
    let witness = ComplexMatrix::from_columns(n, &[w1, w2]);
    Ok(PartIiiOutcome::Reducible(ImpossibilityWitness { triple, witness }))
}

/// `max(‖[P_W, U]‖, ‖[P_W, P]‖)` for the projection onto the columns of `w`.
pub fn witness_violation(t: &BclTriple, w: &ComplexMatrix) -> f64 {
    let pw = w.matmul(&w.adjoint());
    pw.commutator(&t.u).max_abs().max(pw.commutator(&t.p).max_abs())
}

/// Residuals of the four block equations relating `T` to the blocks
/// `U_11 = P⊥UP⊥`, `U_21 = PUP⊥` in the frame basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockResiduals {
    pub t11: f64,
    pub t12: f64,
    pub t21: f64,
    pub t22: f64,
}

impl BlockResiduals {
    pub fn max(&self) -> f64 {
        self.t11.max(self.t12).max(self.t21).max(self.t22)
    }
}

pub fn verify_block_system(t: &BclTriple, frame: &Frame) -> Result<BlockResiduals> {
    let n = frame.dim();
    if t.dim != n {
        return Err(BclError::DimensionMismatch {
            expected: n,
            found: t.dim,
        });
    }
    let m = frame.half();
    let u = frame.to_frame(&t.u);
    let target = frame.to_frame(&canonical_matrix(&frame.spectrum)?);
    let u11 = u.submatrix(0, 0, m, m);
    let u21 = u.submatrix(m, 0, m, m);
    let id = ComplexMatrix::identity(m);
    let t11 = &target.submatrix(0, 0, m, m) - &(&id - &u11.matmul(&u11.adjoint()));
    let t12 = &target.submatrix(0, m, m, m) + &u11.matmul(&u21.adjoint());
    let t21 = &target.submatrix(m, 0, m, m) + &u21.matmul(&u11.adjoint());
    let t22 = &target.submatrix(m, m, m, m) + &u21.matmul(&u21.adjoint());
    Ok(BlockResiduals {
        t11: t11.max_abs(),
        t12: t12.max_abs(),
        t21: t21.max_abs(),
        t22: t22.max_abs(),
    })
}

/// `U_12 U_21` restricted to `ran P⊥`, written in the `f` basis.
pub fn shift_block(t: &BclTriple, frame: &Frame) -> ComplexMatrix {
    let m = frame.half();
    let u = frame.to_frame(&t.u);
    let u12 = u.submatrix(0, m, m, m);
    let u21 = u.submatrix(m, 0, m, m);
    u12.matmul(&u21)
}

/// Default twist for the single-eigenvalue construction.
pub const DEFAULT_ALPHA: C64 = C64::new(-1.0, 0.0);

/// Zero out entries below `eps`; useful before printing frame-basis blocks.
pub fn chop(m: &ComplexMatrix, eps: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let z = m[(i, j)];
        if z.norm() <= eps {
            ZERO
        } else {
            z
        }
    })
}
