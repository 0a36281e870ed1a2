//! Independent reference computations for commutant dimensions.
//!
//! Nothing here calls the library's eigensolver, SVD or Gram-Schmidt: the
//! commutant is the kernel of the Kronecker-form system on `vec(X)`, whose
//! Gram matrix is diagonalized by a plain real-symmetric Jacobi method on
//! its real embedding. A second count comes from the dimension of the
//! algebra generated by words in `U`, `U*`, `P`.

#![allow(dead_code, clippy::needless_range_loop)]

use bcl_core::matcore::{ComplexMatrix, C64};

type Dense = Vec<Vec<f64>>;

/// `vec(XA − AX)` as a matrix acting on column-major `vec(X)`:
/// `Aᵀ ⊗ I − I ⊗ A`.
fn commutator_operator(a: &ComplexMatrix) -> Vec<Vec<C64>> {
    let n = a.rows();
    let nn = n * n;
    let mut m = vec![vec![C64::new(0.0, 0.0); nn]; nn];
    // column-major index of X_{ij} is j * n + i
    for i in 0..n {
        for j in 0..n {
            let col = j * n + i;
            // (XA)_{ik} = Σ_j X_ij A_jk
            for k in 0..n {
                m[k * n + i][col] += a[(j, k)];
            }
            // (AX)_{lj} = Σ_i A_li X_ij
            for l in 0..n {
                m[j * n + l][col] -= a[(l, i)];
            }
        }
    }
    m
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Dense) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Dimension of `{X : XU = UX, XP = PX}` from the Gram matrix of the
/// stacked Kronecker system.
pub fn commutant_dim(u: &ComplexMatrix, p: &ComplexMatrix) -> usize {
    let n = u.rows();
    let nn = n * n;
    let blocks = [commutator_operator(u), commutator_operator(p)];
    // G = M*M, Hermitian nn x nn
    let mut g = vec![vec![C64::new(0.0, 0.0); nn]; nn];
    for m in &blocks {
        for r in 0..nn {
            for a in 0..nn {
                let ra = m[r][a].conj();
                if ra == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..nn {
                    g[a][b] += ra * m[r][b];
                }
            }
        }
    }
    // real embedding [[Re, -Im], [Im, Re]] doubles every eigenvalue
    let mut real = vec![vec![0.0; 2 * nn]; 2 * nn];
    for a in 0..nn {
        for b in 0..nn {
            real[a][b] = g[a][b].re;
            real[a + nn][b + nn] = g[a][b].re;
            real[a][b + nn] = -g[a][b].im;
            real[a + nn][b] = g[a][b].im;
        }
    }
    let ev = jacobi_eigenvalues(real);
    let top = ev.first().copied().unwrap_or(0.0).max(1.0);
    let zeros = ev.iter().filter(|&&x| x <= 1e-14 * top).count();
    zeros / 2
}

fn flatten(m: &ComplexMatrix) -> Vec<C64> {
    m.entries().to_vec()
}

/// Dimension of the unital algebra generated by `U`, `U*`, `P`.
pub fn algebra_dim(u: &ComplexMatrix, p: &ComplexMatrix) -> usize {
    let n = u.rows();
    let gens = [u.clone(), u.adjoint(), p.clone()];
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut frontier = vec![ComplexMatrix::identity(n)];
    let try_add = |basis: &mut Vec<Vec<C64>>, m: &ComplexMatrix| -> bool {
        let mut v = flatten(m);
        let n0: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in basis.iter() {
                let c: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv > 1e-9 * n0 {
            basis.push(v.into_iter().map(|z| z / nv).collect());
            true
        } else {
            false
        }
    };
    let mut fresh = Vec::new();
    for m in frontier.drain(..) {
        if try_add(&mut basis, &m) {
            fresh.push(m);
        }
    }
    frontier = fresh;
    while !frontier.is_empty() && basis.len() < n * n {
        let mut next = Vec::new();
        for w in &frontier {
            for g in &gens {
                let m = w.matmul(g);
                if try_add(&mut basis, &m) {
                    next.push(m);
                }
            }
        }
        frontier = next;
    }
    basis.len()
}
