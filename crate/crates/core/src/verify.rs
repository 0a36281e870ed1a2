//! Defect residuals, commutant-based irreducibility, joint reducing
//! subspaces, and cyclicity of weighted shifts.

use serde::Serialize;

use crate::bclbuild::BclTriple;
use crate::error::{BclError, Result};
use crate::matcore::{
    hermitian_eigen_raw, null_space, orthonormalize, rank, validate_structure, ComplexMatrix,
    StructureKind, Tolerances, C64, ONE, ZERO,
};

/// `‖(P⊥ − U P⊥ U*) − T‖_max`.
pub fn defect_residual(t: &BclTriple, target: &ComplexMatrix) -> Result<f64> {
    if target.rows() != t.dim || target.cols() != t.dim {
        return Err(BclError::DimensionMismatch {
            expected: t.dim,
            found: target.rows(),
        });
    }
    Ok((&t.defect() - target).max_abs())
}

/// Orthonormal columns spanning a subspace that reduces both `U` and `P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducingSubspace {
    pub basis: ComplexMatrix,
    pub dim: usize,
}

impl ReducingSubspace {
    fn from_columns(n: usize, cols: &[Vec<C64>]) -> Self {
        Self {
            basis: ComplexMatrix::from_columns(n, cols),
            dim: cols.len(),
        }
    }

    pub fn projection(&self) -> ComplexMatrix {
        self.basis.matmul(&self.basis.adjoint())
    }

    /// `max(‖[P_W, U]‖, ‖[P_W, P]‖)`.
    pub fn violation(&self, u: &ComplexMatrix, p: &ComplexMatrix) -> f64 {
        let pw = self.projection();
        pw.commutator(u).max_abs().max(pw.commutator(p).max_abs())
    }
}

#[derive(Debug, Clone)]
pub struct CommutantReport {
    pub dim: usize,
    /// Basis of `{X : XU = UX, XP = PX}`, each of unit Frobenius norm.
    pub basis: Vec<ComplexMatrix>,
    /// Smallest singular value outside the null space minus the largest
    /// inside it (`σ_min(excluded) − σ_max(included)`); `+∞` when nothing
    /// is excluded.
    pub singular_gap: f64,
    /// A proper joint reducing subspace when `dim ≥ 2`.
    pub witness: Option<ReducingSubspace>,
}

impl CommutantReport {
    pub fn irreducible(&self) -> bool {
        self.dim == 1
    }
}

fn require_pair(u: &ComplexMatrix, p: &ComplexMatrix, tol: &Tolerances) -> Result<usize> {
    let n = u.require_square()?;
    if p.rows() != n || p.cols() != n {
        return Err(BclError::DimensionMismatch {
            expected: n,
            found: p.rows(),
        });
    }
    let cu = validate_structure(u, StructureKind::Unitary, tol)?;
    if !cu.pass {
        return Err(BclError::NotUnitary {
            violation: cu.violation,
        });
    }
    let cp = validate_structure(p, StructureKind::Projection, tol)?;
    if !cp.pass {
        return Err(BclError::NotProjection {
            violation: cp.violation,
        });
    }
    Ok(n)
}

/// The commutant of `{U, P}` (and hence of `U*`, since `U` is unitary).
///
/// `XP = PX` forces `X` to be block diagonal in an eigenbasis `W` of `P`,
/// so only the `r² + s²` entries of those blocks are unknowns; the system
/// `X'U' − U'X' = 0` with `U' = W*UW` is then solved by SVD and the null
/// vectors mapped back through `W`.
pub fn commutant_dim(u: &ComplexMatrix, p: &ComplexMatrix, tol: &Tolerances) -> Result<CommutantReport> {
    let n = require_pair(u, p, tol)?;
    if n == 0 {
        return Ok(CommutantReport {
            dim: 0,
            basis: Vec::new(),
            singular_gap: f64::INFINITY,
            witness: None,
        });
    }
    let eig = hermitian_eigen_raw(p, tol)?;
    let r = eig.values.iter().filter(|&&x| x > 0.5).count();
    let w = &eig.vectors;
    let up = w.adjoint().matmul(u).matmul(w);

    // unknowns: entries (p, q) with p, q both < r or both >= r
    let unknowns: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| (a < r) == (b < r))
        .collect();
    let mut system = ComplexMatrix::zeros(n * n, unknowns.len());
    for (col, &(pp, qq)) in unknowns.iter().enumerate() {
        for b in 0..n {
            system[(pp * n + b, col)] += up[(qq, b)];
        }
        for a in 0..n {
            system[(a * n + qq, col)] -= up[(a, pp)];
        }
    }

    let ns = null_space(&system, tol);
    let rank_count = unknowns.len() - ns.dim;
    let largest_included = ns.singular_values[rank_count..].iter().copied().fold(0.0, f64::max);
    let singular_gap = if rank_count == 0 {
        f64::INFINITY
    } else {
        ns.singular_values[rank_count - 1] - largest_included
    };

    let basis: Vec<ComplexMatrix> = (0..ns.dim)
        .map(|k| {
            let mut xp = ComplexMatrix::zeros(n, n);
            for (row, &(a, b)) in unknowns.iter().enumerate() {
                xp[(a, b)] = ns.basis[(row, k)];
            }
            let x = w.matmul(&xp).matmul(&w.adjoint());
            let f = x.frobenius();
            x.scale_real(1.0 / f)
        })
        .collect();

    let witness = if basis.len() >= 2 {
        witness_from_commutant(&basis, tol)?
    } else {
        None
    };
    Ok(CommutantReport {
        dim: ns.dim,
        basis,
        singular_gap,
        witness,
    })
}

/// Spectral projection of a non-scalar Hermitian element of the commutant,
/// split at the widest gap in its spectrum.
fn witness_from_commutant(basis: &[ComplexMatrix], tol: &Tolerances) -> Result<Option<ReducingSubspace>> {
    let n = basis[0].rows();
    let mut best: Option<(f64, ComplexMatrix)> = None;
    for x in basis {
        let xh = x.adjoint();
        let candidates = [
            &x.clone() + &xh,
            (x - &xh).scale(C64::new(0.0, 1.0)),
        ];
        for h in candidates {
            let mean = h.trace() / C64::new(n as f64, 0.0);
            let spread = (&h - &ComplexMatrix::identity(n).scale(mean)).max_abs();
            if best.as_ref().is_none_or(|(s, _)| spread > *s) {
                best = Some((spread, h));
            }
        }
    }
    let Some((spread, h)) = best else { return Ok(None) };
    if spread <= tol.rank_gap {
        return Ok(None);
    }
    let h = (&h + &h.adjoint()).scale_real(0.5);
    let eig = hermitian_eigen_raw(&h, tol)?;
    let (cut, _) = eig
        .values
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, w[0] - w[1]))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let cols: Vec<Vec<C64>> = (0..cut).map(|j| eig.vectors.column(j)).collect();
    Ok(Some(ReducingSubspace::from_columns(n, &cols)))
}

/// Smallest subspace containing `v` that reduces `U` and `P`: `span{v}`
/// closed under `U`, `U*`, `P`, `P⊥`, re-orthonormalized at every round.
pub fn minimal_reducing(
    u: &ComplexMatrix,
    p: &ComplexMatrix,
    v: &[C64],
    tol: &Tolerances,
    max_iter: usize,
) -> Result<ReducingSubspace> {
    let n = require_pair(u, p, tol)?;
    if v.len() != n {
        return Err(BclError::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let mut basis = orthonormalize(&[v.to_vec()], tol.rank_gap);
    if basis.is_empty() {
        return Err(BclError::PreconditionViolation("starting vector is zero".into()));
    }
    let uh = u.adjoint();
    for _ in 0..max_iter {
        let mut candidates = basis.clone();
        for b in &basis {
            let pb = p.mul_vec(b);
            let perp: Vec<C64> = b.iter().zip(&pb).map(|(x, y)| x - y).collect();
            candidates.push(u.mul_vec(b));
            candidates.push(uh.mul_vec(b));
            candidates.push(pb);
            candidates.push(perp);
        }
        let next = orthonormalize(&candidates, tol.rank_gap);
        if next.len() == basis.len() {
            return Ok(ReducingSubspace::from_columns(n, &next));
        }
        basis = next;
    }
    Err(BclError::IterationLimit {
        iterations: max_iter,
        partial: Box::new(ComplexMatrix::from_columns(n, &basis)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    pub cyclic: bool,
    pub product_check: f64,
    /// `w_j` is the entry in column `j`, sitting in row `j + 1 mod n`.
    pub weights: Vec<C64>,
}

/// Checks the weighted-shift pattern (subdiagonal plus top-right corner,
/// all other entries at most `tol.structural`), then `Sⁿ = (∏ w_j) I` and
/// cyclicity of every basis vector via the rank of its normalized Krylov
/// vectors.
pub fn shift_cyclicity(s: &ComplexMatrix, tol: &Tolerances) -> Result<ShiftReport> {
    let n = s.require_square()?;
    if n == 0 {
        return Err(BclError::NotShiftType("empty matrix".into()));
    }
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let target = (j + 1) % n;
        for i in 0..n {
            if i != target && s[(i, j)].norm() > tol.structural {
                return Err(BclError::NotShiftType(format!(
                    "entry ({i}, {j}) = {} is off the shift pattern",
                    s[(i, j)]
                )));
            }
        }
        let w = s[(target, j)];
        if w.norm() <= tol.structural {
            return Err(BclError::NotShiftType(format!("column {j} has no weight")));
        }
        weights.push(w);
    }

    let mut power = s.clone();
    for _ in 1..n {
        power = power.matmul(s);
    }
    let product: C64 = weights.iter().product();
    let product_check = (&power - &ComplexMatrix::identity(n).scale(product)).max_abs();

    let mut cyclic = true;
    for i in 0..n {
        let mut x = vec![ZERO; n];
        x[i] = ONE;
        let mut krylov = Vec::with_capacity(n);
        for _ in 0..n {
            let nx = crate::matcore::norm(&x);
            if nx == 0.0 {
                break;
            }
            krylov.push(x.iter().map(|z| z / nx).collect::<Vec<_>>());
            x = s.mul_vec(&x);
        }
        let k = ComplexMatrix::from_columns(n, &krylov);
        if rank(&k, tol) < n {
            cyclic = false;
        }
    }
    Ok(ShiftReport {
        cyclic,
        product_check,
        weights,
    })
}

/// The weighted shift with `w_j` in column `j`, row `j + 1 mod n`.
pub fn weighted_shift(weights: &[C64]) -> ComplexMatrix {
    let n = weights.len();
    let mut s = ComplexMatrix::zeros(n, n);
    for (j, &w) in weights.iter().enumerate() {
        s[((j + 1) % n, j)] = w;
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub defect_residual: f64,
    pub commutant_dim: usize,
    pub irreducible: bool,
    pub witness: Option<ComplexMatrix>,
}

pub fn verify_triple(t: &BclTriple, target: &ComplexMatrix, tol: &Tolerances) -> Result<VerificationReport> {
    let defect_residual = defect_residual(t, target)?;
    let c = commutant_dim(&t.u, &t.p, tol)?;
    Ok(VerificationReport {
        defect_residual,
        commutant_dim: c.dim,
        irreducible: c.irreducible(),
        witness: c.witness.map(|w| w.basis),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bclbuild::{build_frame, construct_part_i, construct_part_iii, PartIiiOutcome, Provenance};
    use crate::matcore::re;
    use crate::spectrum::{canonical_matrix, DefectSpectrum};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn swap() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn commutant_swap_is_scalar() {
        let r = commutant_dim(&swap(), &ComplexMatrix::real_diag(&[0.0, 1.0]), &tol()).unwrap();
        assert_eq!(r.dim, 1);
        assert!(r.witness.is_none());
        assert!(r.singular_gap > 0.1);
    }

    #[test]
    fn commutant_abelian_pair() {
        let u = ComplexMatrix::identity(2);
        let p = ComplexMatrix::real_diag(&[1.0, 0.0]);
        let r = commutant_dim(&u, &p, &tol()).unwrap();
        assert_eq!(r.dim, 2);
        let w = r.witness.unwrap();
        assert_eq!(w.dim, 1);
        assert!(w.violation(&u, &p) < 1e-14);
    }

    #[test]
    fn commutant_part_iii_reducible() {
        let s = DefectSpectrum::finite(2, 2, &[]);
        let PartIiiOutcome::Reducible(w) = construct_part_iii(&s, &tol()).unwrap() else {
            panic!("expected reducible")
        };
        let r = commutant_dim(&w.triple.u, &w.triple.p, &tol()).unwrap();
        assert!(r.dim >= 2);
        let sub = r.witness.unwrap();
        assert!(sub.dim >= 1 && sub.dim < 4);
        assert!(sub.violation(&w.triple.u, &w.triple.p) <= 1e-12);
    }

    #[test]
    fn commutant_part_i_irreducible() {
        let s = DefectSpectrum::finite(1, 1, &[(0.6, 1)]);
        let fr = build_frame(&s, None, &tol()).unwrap();
        let t = construct_part_i(&fr, &tol()).unwrap();
        assert_eq!(commutant_dim(&t.u, &t.p, &tol()).unwrap().dim, 1);
        let report = verify_triple(&t, &canonical_matrix(&s).unwrap(), &tol()).unwrap();
        assert!(report.irreducible);
        assert!(report.defect_residual <= 1e-12);
    }

    #[test]
    fn commutant_rejects_bad_input() {
        let p = ComplexMatrix::real_diag(&[1.0, 0.0]);
        assert!(matches!(
            commutant_dim(&ComplexMatrix::real_diag(&[2.0, 1.0]), &p, &tol()),
            Err(BclError::NotUnitary { .. })
        ));
        assert!(matches!(
            commutant_dim(&swap(), &ComplexMatrix::real_diag(&[0.5, 0.0]), &tol()),
            Err(BclError::NotProjection { .. })
        ));
    }

    #[test]
    fn defect_residual_examples() {
        let t = match construct_part_iii(&DefectSpectrum::finite(1, 1, &[]), &tol()).unwrap() {
            PartIiiOutcome::Irreducible(t) => t,
            PartIiiOutcome::Reducible(_) => panic!(),
        };
        assert_eq!(defect_residual(&t, &ComplexMatrix::real_diag(&[1.0, -1.0])).unwrap(), 0.0);
        let id = BclTriple::new(
            ComplexMatrix::identity(3),
            ComplexMatrix::real_diag(&[1.0, 0.0, 1.0]),
            Provenance::External,
            &tol(),
        )
        .unwrap();
        assert_eq!(defect_residual(&id, &ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
        assert!(defect_residual(&id, &ComplexMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn minimal_reducing_examples() {
        let p = ComplexMatrix::real_diag(&[0.0, 1.0]);
        let full = minimal_reducing(&swap(), &p, &[re(1.0), re(0.0)], &tol(), 10).unwrap();
        assert_eq!(full.dim, 2);
        let p = ComplexMatrix::real_diag(&[1.0, 0.0]);
        let one = minimal_reducing(&ComplexMatrix::identity(2), &p, &[re(1.0), re(0.0)], &tol(), 10).unwrap();
        assert_eq!(one.dim, 1);

        let s = DefectSpectrum::finite(2, 2, &[]);
        let PartIiiOutcome::Reducible(w) = construct_part_iii(&s, &tol()).unwrap() else {
            panic!()
        };
        let v: Vec<C64> = (0..4).map(|i| w.witness[(i, 0)] + w.witness[(i, 1)]).collect();
        let sub = minimal_reducing(&w.triple.u, &w.triple.p, &v, &tol(), 10).unwrap();
        assert_eq!(sub.dim, 2);
    }

    #[test]
    fn minimal_reducing_iteration_limit() {
        let u = ComplexMatrix::from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let p = ComplexMatrix::real_diag(&[1.0, 0.0, 0.0]);
        match minimal_reducing(&u, &p, &[re(1.0), re(0.0), re(0.0)], &tol(), 1) {
            Err(BclError::IterationLimit { iterations: 1, partial }) => assert!(partial.cols() >= 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shift_examples() {
        let perm = weighted_shift(&[re(1.0), re(1.0), re(1.0)]);
        let r = shift_cyclicity(&perm, &tol()).unwrap();
        assert!(r.cyclic);
        assert_eq!(r.product_check, 0.0);

        let s = weighted_shift(&[re(0.6), re(0.8), re(0.5)]);
        let r = shift_cyclicity(&s, &tol()).unwrap();
        assert!(r.cyclic);
        assert!(r.product_check < 1e-15);
        let prod: C64 = r.weights.iter().product();
        assert!((prod - re(0.24)).norm() < 1e-15);

        assert!(matches!(
            shift_cyclicity(&ComplexMatrix::real_diag(&[1.0, 2.0]), &tol()),
            Err(BclError::NotShiftType(_))
        ));
    }
}
