//! Pairs of orthogonal projections with prescribed difference.
//!
//! A self-adjoint contraction in the block form
//! `A = 0 ⊕ I ⊕ −I ⊕ D ⊕ −D` on `ker A ⊕ ker(A−I) ⊕ ker(A+I) ⊕ K ⊕ K`
//! is the difference `P − Q` of exactly the pairs
//! `P = E ⊕ I ⊕ 0 ⊕ P_U`, `Q = E ⊕ 0 ⊕ I ⊕ Q_U`, where `E` is any projection
//! on `ker A` and `U` any unitary on `K` commuting with `D`.

use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};
use crate::matcore::{
    hermitian_eigen_raw, hermitian_function, re, validate_structure, ComplexMatrix, StructureKind,
    Tolerances, C64,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalContraction {
    #[serde(rename = "kernel")]
    pub kernel_dim: usize,
    #[serde(rename = "plus")]
    pub plus_dim: usize,
    #[serde(rename = "minus")]
    pub minus_dim: usize,
    #[serde(rename = "D")]
    pub d: ComplexMatrix,
}

impl CanonicalContraction {
    pub fn new(kernel_dim: usize, plus_dim: usize, minus_dim: usize, d: ComplexMatrix) -> Self {
        Self {
            kernel_dim,
            plus_dim,
            minus_dim,
            d,
        }
    }

    pub fn k_dim(&self) -> usize {
        self.d.rows()
    }

    pub fn dim(&self) -> usize {
        self.kernel_dim + self.plus_dim + self.minus_dim + 2 * self.k_dim()
    }

    /// Checks that `D` is Hermitian with spectrum inside `(0, 1)`.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        self.d.require_square()?;
        let eig = hermitian_eigen_raw(&self.d, tol)?;
        if let Some(&bad) = eig.values.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(BclError::LambdaOutOfRange(bad));
        }
        Ok(())
    }

    /// The block-diagonal matrix `0 ⊕ I ⊕ −I ⊕ D ⊕ −D`.
    pub fn matrix(&self) -> ComplexMatrix {
        let zero = ComplexMatrix::zeros(self.kernel_dim, self.kernel_dim);
        let plus = ComplexMatrix::identity(self.plus_dim);
        let minus = ComplexMatrix::identity(self.minus_dim).scale_real(-1.0);
        let neg_d = self.d.scale_real(-1.0);
        ComplexMatrix::direct_sum(&[&zero, &plus, &minus, &self.d, &neg_d])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPair {
    #[serde(rename = "P")]
    pub p: ComplexMatrix,
    #[serde(rename = "Q")]
    pub q: ComplexMatrix,
    pub e_kernel: ComplexMatrix,
    pub u_comm: ComplexMatrix,
    /// The `K ⊕ K` corner of `P`.
    pub p_u: ComplexMatrix,
    /// The `K ⊕ K` corner of `Q`.
    pub q_u: ComplexMatrix,
}

fn sqrt_one_minus_square(d: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    hermitian_function(d, tol, |x| re((1.0 - x * x).max(0.0).sqrt()))
}

/// Builds `(P, Q)` with `P − Q = A` from the free data `E` and `U`.
pub fn build_pq(
    a: &CanonicalContraction,
    e_kernel: &ComplexMatrix,
    u_comm: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<ProjectionPair> {
    a.validate(tol)?;
    let k = a.k_dim();
    if e_kernel.rows() != a.kernel_dim || e_kernel.cols() != a.kernel_dim {
        return Err(BclError::DimensionMismatch {
            expected: a.kernel_dim,
            found: e_kernel.rows(),
        });
    }
    if u_comm.rows() != k || u_comm.cols() != k {
        return Err(BclError::DimensionMismatch {
            expected: k,
            found: u_comm.rows(),
        });
    }
    let e_check = validate_structure(e_kernel, StructureKind::Projection, tol)?;
    if !e_check.pass {
        return Err(BclError::NotProjection {
            violation: e_check.violation,
        });
    }
    let u_check = validate_structure(u_comm, StructureKind::Unitary, tol)?;
    if !u_check.pass {
        return Err(BclError::NotUnitary {
            violation: u_check.violation,
        });
    }
    let violation = u_comm.commutator(&a.d).max_abs();
    if violation > tol.structural {
        return Err(BclError::CommutationFailure { violation });
    }

    let id = ComplexMatrix::identity(k);
    let s = sqrt_one_minus_square(&a.d, tol)?;
    let us = u_comm.matmul(&s);
    let uh_s = u_comm.adjoint().matmul(&s);
    let i_plus_d = &id + &a.d;
    let i_minus_d = &id - &a.d;

    let mut p_u = ComplexMatrix::zeros(2 * k, 2 * k);
    p_u.set_block(0, 0, &i_plus_d);
    p_u.set_block(0, k, &us);
    p_u.set_block(k, 0, &uh_s);
    p_u.set_block(k, k, &i_minus_d);
    let p_u = p_u.scale_real(0.5);

    let mut q_u = ComplexMatrix::zeros(2 * k, 2 * k);
    q_u.set_block(0, 0, &i_minus_d);
    q_u.set_block(0, k, &us);
    q_u.set_block(k, 0, &uh_s);
    q_u.set_block(k, k, &i_plus_d);
    let q_u = q_u.scale_real(0.5);

    let plus_i = ComplexMatrix::identity(a.plus_dim);
    let plus_0 = ComplexMatrix::zeros(a.plus_dim, a.plus_dim);
    let minus_i = ComplexMatrix::identity(a.minus_dim);
    let minus_0 = ComplexMatrix::zeros(a.minus_dim, a.minus_dim);
    let p = ComplexMatrix::direct_sum(&[e_kernel, &plus_i, &minus_0, &p_u]);
    let q = ComplexMatrix::direct_sum(&[e_kernel, &plus_0, &minus_i, &q_u]);

    Ok(ProjectionPair {
        p,
        q,
        e_kernel: e_kernel.clone(),
        u_comm: u_comm.clone(),
        p_u,
        q_u,
    })
}

/// [`build_pq`] with `E = 0` and `U = I`.
pub fn build_pq_default(a: &CanonicalContraction, tol: &Tolerances) -> Result<ProjectionPair> {
    let e = ComplexMatrix::zeros(a.kernel_dim, a.kernel_dim);
    let u = ComplexMatrix::identity(a.k_dim());
    build_pq(a, &e, &u, tol)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(BclError::LambdaOutOfRange(lambda))
    }
}

/// The projection on `H ⊕ K` with scalar `D = λ`:
/// `½[[(1+λ)I, √(1−λ²) U*], [√(1−λ²) U, (1−λ)I]]` for a unitary `U: H → K`.
pub fn scalar_block_projection(lambda: f64, u_block: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_lambda(lambda)?;
    let (kk, hh) = (u_block.rows(), u_block.cols());
    let c = (1.0 - lambda * lambda).sqrt();
    let mut p = ComplexMatrix::zeros(hh + kk, hh + kk);
    p.set_block(0, 0, &ComplexMatrix::identity(hh).scale_real(1.0 + lambda));
    p.set_block(0, hh, &u_block.adjoint().scale_real(c));
    p.set_block(hh, 0, &u_block.scale_real(c));
    p.set_block(hh, hh, &ComplexMatrix::identity(kk).scale_real(1.0 - lambda));
    Ok(p.scale_real(0.5))
}

fn two_component_basis(
    top: f64,
    bottom: f64,
    u_block: &ComplexMatrix,
    basis_h: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if basis_h.rows() != u_block.cols() {
        return Err(BclError::DimensionMismatch {
            expected: u_block.cols(),
            found: basis_h.rows(),
        });
    }
    let (hh, kk) = (u_block.cols(), u_block.rows());
    let ue = u_block.matmul(basis_h);
    let mut out = ComplexMatrix::zeros(hh + kk, basis_h.cols());
    out.set_block(0, 0, &basis_h.scale_real(top));
    out.set_block(hh, 0, &ue.scale_real(bottom));
    Ok(out)
}

/// Orthonormal columns `√((1+λ)/2) e_i ⊕ √((1−λ)/2) U e_i` spanning the range
/// of [`scalar_block_projection`].
pub fn projection_range_basis(
    lambda: f64,
    u_block: &ComplexMatrix,
    basis_h: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    check_lambda(lambda)?;
    check_unitary(u_block, tol)?;
    two_component_basis(
        ((1.0 + lambda) / 2.0).sqrt(),
        ((1.0 - lambda) / 2.0).sqrt(),
        u_block,
        basis_h,
    )
}

/// Orthonormal columns `√((1−λ)/2) e_i ⊕ −√((1+λ)/2) U e_i` spanning the
/// range of the complementary projection.
pub fn complementary_range_basis(
    lambda: f64,
    u_block: &ComplexMatrix,
    basis_h: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    check_lambda(lambda)?;
    check_unitary(u_block, tol)?;
    two_component_basis(
        ((1.0 - lambda) / 2.0).sqrt(),
        -((1.0 + lambda) / 2.0).sqrt(),
        u_block,
        basis_h,
    )
}

fn check_unitary(u: &ComplexMatrix, tol: &Tolerances) -> Result<()> {
    let check = validate_structure(u, StructureKind::Unitary, tol)?;
    if check.pass {
        Ok(())
    } else {
        Err(BclError::NotUnitary {
            violation: check.violation,
        })
    }
}

/// `D = Σ λ_i I_{k_i}` as a diagonal matrix.
pub fn diagonal_d(values: &[(f64, usize)]) -> ComplexMatrix {
    let diag: Vec<C64> = values
        .iter()
        .flat_map(|&(l, k)| std::iter::repeat_n(re(l), k))
        .collect();
    ComplexMatrix::diag(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::rank;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn trivial_k() {
        let a = CanonicalContraction::new(0, 1, 1, ComplexMatrix::zeros(0, 0));
        let pair = build_pq_default(&a, &tol()).unwrap();
        assert_eq!(pair.p, ComplexMatrix::real_diag(&[1.0, 0.0]));
        assert_eq!(pair.q, ComplexMatrix::real_diag(&[0.0, 1.0]));
        assert_eq!(&pair.p - &pair.q, a.matrix());
    }

    #[test]
    fn three_fifths() {
        let a = CanonicalContraction::new(0, 0, 0, ComplexMatrix::real_diag(&[0.6]));
        let pair = build_pq(&a, &ComplexMatrix::zeros(0, 0), &ComplexMatrix::identity(1), &tol())
            .unwrap();
        let want_p = ComplexMatrix::from_real_rows(&[&[0.8, 0.4], &[0.4, 0.2]]);
        let want_q = ComplexMatrix::from_real_rows(&[&[0.2, 0.4], &[0.4, 0.8]]);
        assert!((&pair.p_u - &want_p).max_abs() <= 1e-15);
        assert!((&pair.q_u - &want_q).max_abs() <= 1e-15);
        let diff = &pair.p_u - &pair.q_u;
        assert!((&diff - &ComplexMatrix::real_diag(&[0.6, -0.6])).max_abs() <= 1e-15);
        assert_eq!(rank(&pair.p_u, &tol()), 1);
    }

    #[test]
    fn kernel_only() {
        let a = CanonicalContraction::new(2, 0, 0, ComplexMatrix::zeros(0, 0));
        let pair = build_pq_default(&a, &tol()).unwrap();
        assert_eq!(pair.p, ComplexMatrix::zeros(2, 2));
        assert_eq!(pair.q, ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn rejects_noncommuting_unitary() {
        let a = CanonicalContraction::new(0, 0, 0, ComplexMatrix::real_diag(&[0.6, 0.3]));
        let swap = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(
            build_pq(&a, &ComplexMatrix::zeros(0, 0), &swap, &tol()),
            Err(BclError::CommutationFailure { .. })
        ));
        let not_unitary = ComplexMatrix::real_diag(&[2.0, 1.0]);
        assert!(matches!(
            build_pq(&a, &ComplexMatrix::zeros(0, 0), &not_unitary, &tol()),
            Err(BclError::NotUnitary { .. })
        ));
        let bad_d = CanonicalContraction::new(0, 0, 0, ComplexMatrix::real_diag(&[1.0]));
        assert!(matches!(
            build_pq_default(&bad_d, &tol()),
            Err(BclError::LambdaOutOfRange(_))
        ));
    }

    #[test]
    fn range_basis_scalar() {
        let u = ComplexMatrix::identity(1);
        let b = projection_range_basis(0.6, &u, &ComplexMatrix::identity(1), &tol()).unwrap();
        assert!((b[(0, 0)].re - 0.8f64.sqrt()).abs() < 1e-15);
        assert!((b[(1, 0)].re - 0.2f64.sqrt()).abs() < 1e-15);
        let p = scalar_block_projection(0.6, &u).unwrap();
        assert!((&p.matmul(&b) - &b).max_abs() < 1e-15);
        let c = complementary_range_basis(0.6, &u, &ComplexMatrix::identity(1), &tol()).unwrap();
        assert!(b.adjoint().matmul(&c).max_abs() < 1e-15);
        assert!(p.matmul(&c).max_abs() < 1e-15);
    }

    #[test]
    fn range_basis_two_dim() {
        let u = ComplexMatrix::identity(2);
        let b = projection_range_basis(0.6, &u, &ComplexMatrix::identity(2), &tol()).unwrap();
        let gram = b.adjoint().matmul(&b);
        assert!((&gram - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
        assert!(matches!(
            projection_range_basis(1.0, &u, &ComplexMatrix::identity(2), &tol()),
            Err(BclError::LambdaOutOfRange(_))
        ));
    }

    #[test]
    fn json_shape() {
        let a = CanonicalContraction::new(1, 0, 2, ComplexMatrix::real_diag(&[0.5]));
        let v: serde_json::Value = serde_json::to_value(&a).unwrap();
        assert_eq!(v["kernel"], 1);
        assert_eq!(v["minus"], 2);
        assert_eq!(v["D"]["rows"], 1);
        let back: CanonicalContraction = serde_json::from_value(v).unwrap();
        assert_eq!(back, a);
    }
}
