//! Randomized search for `(U, P)` with `P⊥ − U P⊥ U* = T`.
//!
//! Each trial draws a Haar unitary and a coordinate projection from its own
//! ChaCha stream (`seed`, stream = trial index), so parallel and serial
//! runs agree. The best samples are then polished by gradient descent on
//! the unitary group.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bclbuild::{BclTriple, Provenance};
use crate::error::{BclError, Result};
use crate::matcore::{hermitian_function, orthonormalize, ComplexMatrix, Tolerances, C64};
use crate::random::{coordinate_projection, haar_unitary};
use crate::spectrum::{canonical_matrix, feasibility, DefectSpectrum, VerdictKind};
use crate::verify::commutant_dim;

/// Eigenvalue used for the paired dimensions beyond `l1 + l1p`.
pub const FILLER_LAMBDA: f64 = 0.5;
/// Number of best samples handed to the local refinement.
pub const REFINE_CANDIDATES: usize = 8;
pub const REFINE_ITERATIONS: usize = 2000;

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub dim: usize,
    pub l1: usize,
    pub l1p: usize,
    pub trials: usize,
    pub seed: u64,
    /// Rank of the sampled `P`; defaults to `l1 + (dim − l1 − l1p)/2`.
    pub rank: Option<usize>,
    pub refine: bool,
}

impl SearchConfig {
    pub fn new(dim: usize, l1: usize, l1p: usize, trials: usize, seed: u64) -> Self {
        Self {
            dim,
            l1,
            l1p,
            trials,
            seed,
            rank: None,
            refine: true,
        }
    }

    /// The target: `±1` blocks of sizes `l1`, `l1p`, the rest `±0.5` pairs.
    pub fn spectrum(&self) -> Result<DefectSpectrum> {
        let rest = self
            .dim
            .checked_sub(self.l1 + self.l1p)
            .filter(|r| r % 2 == 0)
            .ok_or_else(|| {
                BclError::PreconditionViolation(format!(
                    "dim - l1 - l1p must be a nonnegative even number (dim {}, l1 {}, l1p {})",
                    self.dim, self.l1, self.l1p
                ))
            })?;
        let interior: Vec<(f64, usize)> = if rest > 0 {
            vec![(FILLER_LAMBDA, rest / 2)]
        } else {
            Vec::new()
        };
        let s = DefectSpectrum::finite(self.l1, self.l1p, &interior);
        s.validate()?;
        Ok(s)
    }

    pub fn projection_rank(&self) -> usize {
        self.rank
            .unwrap_or(self.l1 + (self.dim - self.l1 - self.l1p) / 2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub dim: usize,
    pub l1: usize,
    pub l1p: usize,
    pub rank: usize,
    pub trials: usize,
    pub seed: u64,
    pub feasibility: VerdictKind,
    /// `|l1 − l1p| / dim`: no pair can beat it, since every defect is
    /// traceless.
    pub trace_lower_bound: f64,
    pub best_trial: usize,
    pub best_sample_residual: f64,
    pub refined_residual: Option<f64>,
    pub min_residual: f64,
    pub commutant_dim: usize,
    pub best: BclTriple,
}

fn residual(u: &ComplexMatrix, pperp: &ComplexMatrix, target: &ComplexMatrix) -> f64 {
    let conj = u.matmul(pperp).matmul(&u.adjoint());
    (&(pperp - &conj) - target).max_abs()
}

fn sample(cfg: &SearchConfig, rank: usize, trial: usize) -> (ComplexMatrix, ComplexMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let u = haar_unitary(cfg.dim, &mut rng);
    let p = coordinate_projection(cfg.dim, rank, &mut rng);
    (u, p)
}

/// Gradient descent on `‖U P⊥ U* − (P⊥ − T)‖_F²` along `U ← exp(εG) U`
/// with `G = [S, S − B]`, `S = U P⊥ U*`, `B = P⊥ − T`, and Armijo
/// backtracking on `ε`.
pub fn refine(
    u0: &ComplexMatrix,
    pperp: &ComplexMatrix,
    target: &ComplexMatrix,
    iterations: usize,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    let b = pperp - target;
    let objective = |u: &ComplexMatrix| {
        let s = u.matmul(pperp).matmul(&u.adjoint());
        let diff = &s - &b;
        let f = diff.frobenius().powi(2);
        (f, s, diff)
    };
    let mut u = u0.clone();
    let (mut f, mut s, mut diff) = objective(&u);
    let mut step = 1.0;
    for _ in 0..iterations {
        let g = s.commutator(&diff);
        let gnorm2 = g.frobenius().powi(2);
        if f <= 1e-30 || gnorm2 <= 1e-32 {
            break;
        }
        // i·G is Hermitian, so exp(εG) = exp(−iε·(iG))
        let ig = g.scale(C64::new(0.0, 1.0));
        let ig = (&ig + &ig.adjoint()).scale_real(0.5);
        let mut accepted = false;
        for _ in 0..60 {
            let rot = hermitian_function(&ig, tol, |mu| C64::from_polar(1.0, -step * mu))?;
            let cand = rot.matmul(&u);
            let (fc, sc, dc) = objective(&cand);
            if fc <= f - 1e-4 * step * 2.0 * gnorm2 {
                u = cand;
                f = fc;
                s = sc;
                diff = dc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(4.0);
    }
    let cols: Vec<Vec<C64>> = (0..u.cols()).map(|j| u.column(j)).collect();
    Ok(ComplexMatrix::from_columns(u.rows(), &orthonormalize(&cols, 0.0)))
}

pub fn search(cfg: &SearchConfig, tol: &Tolerances) -> Result<SearchReport> {
    if cfg.trials == 0 {
        return Err(BclError::PreconditionViolation("trials must be >= 1".into()));
    }
    let spectrum = cfg.spectrum()?;
    let rank = cfg.projection_rank();
    if rank > cfg.dim {
        return Err(BclError::PreconditionViolation(format!(
            "rank {rank} exceeds dimension {}",
            cfg.dim
        )));
    }
    let target = canonical_matrix(&spectrum)?;
    let id = ComplexMatrix::identity(cfg.dim);

    let samples: Vec<(f64, usize)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let (u, p) = sample(cfg, rank, trial);
            (residual(&u, &(&id - &p), &target), trial)
        })
        .collect();
    let mut ranked = samples;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (best_sample_residual, best_trial) = ranked[0];

    let (mut best_u, mut best_p) = sample(cfg, rank, best_trial);
    let mut min_residual = best_sample_residual;
    let mut refined_residual = None;
    if cfg.refine {
        let mut best_refined = f64::INFINITY;
        for &(_, trial) in ranked.iter().take(REFINE_CANDIDATES) {
            let (u, p) = sample(cfg, rank, trial);
            let pperp = &id - &p;
            let polished = refine(&u, &pperp, &target, REFINE_ITERATIONS, tol)?;
            let r = residual(&polished, &pperp, &target);
            if r < best_refined {
                best_refined = r;
                if r < min_residual {
                    min_residual = r;
                    best_u = polished;
                    best_p = p;
                }
            }
        }
        refined_residual = Some(best_refined);
    }

    let commutant = commutant_dim(&best_u, &best_p, tol)?.dim;
    let best = BclTriple::new(best_u, best_p, Provenance::External, tol)?;
    Ok(SearchReport {
        dim: cfg.dim,
        l1: cfg.l1,
        l1p: cfg.l1p,
        rank,
        trials: cfg.trials,
        seed: cfg.seed,
        feasibility: feasibility(&spectrum).kind,
        trace_lower_bound: cfg.l1.abs_diff(cfg.l1p) as f64 / cfg.dim as f64,
        best_trial,
        best_sample_residual,
        refined_residual,
        min_residual,
        commutant_dim: commutant,
        best,
    })
}
