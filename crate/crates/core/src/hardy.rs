//! The commuting isometries `V1 = (I ⊗ P + M_z ⊗ P⊥)(I ⊗ U*)` and
//! `V2 = (I ⊗ U)(M_z ⊗ P + I ⊗ P⊥)` on `⊕_{d=0}^{N} E`, polynomials of
//! degree at most `N` with coefficients in `E`.
//!
//! Blocks are indexed by degree (degree-major); the truncated `M_z` sends
//! degree `d` to `d + 1` and kills degree `N`.

use serde::Serialize;

use crate::bclbuild::BclTriple;
use crate::error::{BclError, Result};
use crate::matcore::ComplexMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct HardyRealization {
    #[serde(rename = "N")]
    pub degree: usize,
    pub n: usize,
    #[serde(rename = "V1")]
    pub v1: ComplexMatrix,
    #[serde(rename = "V2")]
    pub v2: ComplexMatrix,
    #[serde(skip)]
    pub mz: ComplexMatrix,
    #[serde(skip)]
    pub source: BclTriple,
}

/// Truncated shift on `N + 1` degrees.
pub fn shift(degree: usize) -> ComplexMatrix {
    let size = degree + 1;
    let mut s = ComplexMatrix::zeros(size, size);
    for d in 0..degree {
        s[(d + 1, d)] = crate::matcore::ONE;
    }
    s
}

pub fn realize(t: &BclTriple, degree: usize) -> Result<HardyRealization> {
    if degree < 2 {
        return Err(BclError::PreconditionViolation(format!(
            "truncation degree must be at least 2, got {degree}"
        )));
    }
    let n = t.dim;
    let id_d = ComplexMatrix::identity(degree + 1);
    let s = shift(degree);
    let p = &t.p;
    let pp = t.p_perp();
    let u = &t.u;
    let uh = u.adjoint();

    let v1 = (&id_d.kron(p) + &s.kron(&pp)).matmul(&id_d.kron(&uh));
    let v2 = id_d.kron(u).matmul(&(&s.kron(p) + &id_d.kron(&pp)));
    let mz = s.kron(&ComplexMatrix::identity(n));
    Ok(HardyRealization {
        degree,
        n,
        v1,
        v2,
        mz,
        source: t.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductReport {
    /// `‖V1V2 − V2V1‖_max` over the whole truncation.
    pub commutator: f64,
    /// `‖(V1V2 − M_z)x‖` over columns `x` of degree `< N`.
    pub v1v2_minus_mz: f64,
    pub v2v1_minus_mz: f64,
}

pub fn product_check(h: &HardyRealization) -> ProductReport {
    let a = h.v1.matmul(&h.v2);
    let b = h.v2.matmul(&h.v1);
    let lower = h.degree * h.n;
    let rows = h.v1.rows();
    ProductReport {
        commutator: (&a - &b).max_abs(),
        v1v2_minus_mz: (&a - &h.mz).submatrix(0, 0, rows, lower).max_abs(),
        v2v1_minus_mz: (&b - &h.mz).submatrix(0, 0, rows, lower).max_abs(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectBlockReport {
    pub degree0_block: ComplexMatrix,
    /// Largest entry of `C(V1, V2)` outside the degree-0 diagonal block.
    pub offblock_max: f64,
}

/// `C = I − V1V1* − V2V2* + V1V2V1*V2*` on the truncation.
pub fn defect_operator(h: &HardyRealization) -> ComplexMatrix {
    let size = h.v1.rows();
    let v1h = h.v1.adjoint();
    let v2h = h.v2.adjoint();
    let mut c = ComplexMatrix::identity(size);
    c = &c - &h.v1.matmul(&v1h);
    c = &c - &h.v2.matmul(&v2h);
    &c + &h.v1.matmul(&h.v2).matmul(&v1h).matmul(&v2h)
}

pub fn defect_block(h: &HardyRealization) -> DefectBlockReport {
    let c = defect_operator(h);
    let n = h.n;
    let degree0_block = c.submatrix(0, 0, n, n);
    let mut rest = c;
    rest.set_block(0, 0, &ComplexMatrix::zeros(n, n));
    DefectBlockReport {
        degree0_block,
        offblock_max: rest.max_abs(),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsometryReport {
    /// `max |(V_i*V_i − I)x|` over basis vectors `x` of degree `< N`.
    pub v1_defect: f64,
    pub v2_defect: f64,
    /// The same quantities on the top degree, where truncation breaks
    /// isometry; reported, never checked.
    pub v1_edge: f64,
    pub v2_edge: f64,
}

pub fn isometry_check(h: &HardyRealization) -> IsometryReport {
    let size = h.v1.rows();
    let lower = h.degree * h.n;
    let id = ComplexMatrix::identity(size);
    let g1 = &h.v1.adjoint().matmul(&h.v1) - &id;
    let g2 = &h.v2.adjoint().matmul(&h.v2) - &id;
    let edge = size - lower;
    IsometryReport {
        v1_defect: g1.submatrix(0, 0, size, lower).max_abs(),
        v2_defect: g2.submatrix(0, 0, size, lower).max_abs(),
        v1_edge: g1.submatrix(0, lower, size, edge).max_abs(),
        v2_edge: g2.submatrix(0, lower, size, edge).max_abs(),
    }
}
