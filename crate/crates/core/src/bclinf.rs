//! Infinite-dimensional BCL triples as exact action rules on finitely
//! supported sequences.
//!
//! The Hilbert space has an orthonormal basis `f^n_t, f̃^n_t` indexed by an
//! eigenvalue group `n` and a position `t`; `P` is the coordinate projection
//! onto the `f̃` family. Two constructions are provided:
//!
//! * [`make_inf`] (`dim E_1 = dim E_-1`): groups are labelled by `n ∈ ℤ`,
//!   group `n` carrying the eigenvalue `λ_{g(n)}` for a bijection
//!   `g: ℤ → ℕ`. `U f̃` walks through positions and groups in order.
//! * [`make_diff1`] (`dim E_-1 = dim E_1 + 1`): groups `n ≥ 0`, group `0`
//!   holding `f^0_t` (`t ≤ k0`) and `f̃^0_t` (`t ≤ k0 + 1`) for the
//!   eigenvalues `±1`.
//!
//! In the frame basis the target defect acts by
//! `T f = λ² f + λ√(1−λ²) f̃` and `T f̃ = λ√(1−λ²) f − λ² f̃`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};
use crate::matcore::{C64, ZERO};
use crate::spectrum::{DefectSpectrum, SpectrumRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    F,
    FT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    pub group: i64,
    pub slot: Slot,
    pub t: usize,
}

impl BasisIndex {
    pub fn f(group: i64, t: usize) -> Self {
        Self { group, slot: Slot::F, t }
    }

    pub fn ft(group: i64, t: usize) -> Self {
        Self { group, slot: Slot::FT, t }
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.slot {
            Slot::F => "f",
            Slot::FT => "f~",
        };
        write!(f, "{name}[{}]_{}", self.group, self.t)
    }
}

/// A finitely supported vector; exact zeros are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiniteVector {
    terms: BTreeMap<BasisIndex, C64>,
}

impl FiniteVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn basis(idx: BasisIndex) -> Self {
        let mut v = Self::new();
        v.add(idx, C64::new(1.0, 0.0));
        v
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (BasisIndex, C64)>) -> Self {
        let mut v = Self::new();
        for (idx, c) in terms {
            v.add(idx, c);
        }
        v
    }

    pub fn add(&mut self, idx: BasisIndex, c: C64) {
        if c == ZERO {
            return;
        }
        let entry = self.terms.entry(idx).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.remove(&idx);
        }
    }

    pub fn add_scaled(&mut self, other: &FiniteVector, s: C64) {
        for (&idx, &c) in &other.terms {
            self.add(idx, c * s);
        }
    }

    pub fn sub(&self, other: &FiniteVector) -> FiniteVector {
        let mut out = self.clone();
        out.add_scaled(other, C64::new(-1.0, 0.0));
        out
    }

    pub fn get(&self, idx: &BasisIndex) -> C64 {
        self.terms.get(idx).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisIndex, &C64)> {
        self.terms.iter()
    }

    pub fn support(&self) -> BTreeSet<BasisIndex> {
        self.terms.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Bijection `g: ℤ → ℕ = {1, 2, …}` assigning eigenvalue indices to group
/// labels.
#[derive(Clone)]
pub enum GRule {
    /// `g(0) = 1, g(1) = 2, g(−1) = 3, g(2) = 4, …`
    Interleave,
    Custom(Arc<dyn Fn(i64) -> usize + Send + Sync>),
}

impl fmt::Debug for GRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GRule::Interleave => write!(f, "Interleave"),
            GRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl GRule {
    pub fn eval(&self, n: i64) -> usize {
        match self {
            GRule::Interleave => {
                if n > 0 {
                    2 * n as usize
                } else {
                    1 + 2 * n.unsigned_abs() as usize
                }
            }
            GRule::Custom(g) => g(n),
        }
    }

    /// Injective on `[−2w, 2w]`, never `0`, and onto `{1, …, w}`.
    pub fn check_window(&self, w: usize) -> Result<()> {
        let w = w as i64;
        let mut seen = BTreeMap::new();
        for n in -2 * w..=2 * w {
            let m = self.eval(n);
            if m == 0 {
                return Err(BclError::NotBijection(format!("g({n}) = 0 is not in ℕ")));
            }
            if let Some(prev) = seen.insert(m, n) {
                return Err(BclError::NotBijection(format!("g({prev}) = g({n}) = {m}")));
            }
        }
        if let Some(m) = (1..=w as usize).find(|m| !seen.contains_key(m)) {
            return Err(BclError::NotBijection(format!("{m} has no preimage in [-{}, {}]", 2 * w, 2 * w)));
        }
        Ok(())
    }
}

/// Window used to sample bijectivity of a custom `g`.
pub const G_CHECK_WINDOW: usize = 64;

#[derive(Debug, Clone)]
pub enum Mode {
    Inf { g: GRule, ones: usize },
    Diff1 { k0: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorName {
    U,
    UAdj,
    P,
    Pperp,
    T,
    Identity,
}

/// Shared data of a lazy construction.
#[derive(Debug)]
pub struct LazySystem {
    pub mode: Mode,
    pub rule: SpectrumRule,
    /// `P` and `P⊥` exchanged and `T` negated, turning a construction for
    /// `dim E_-1 = dim E_1 + 1` into one for `dim E_1 = dim E_-1 + 1`.
    pub mirrored: bool,
}

type Action = Vec<(BasisIndex, C64)>;

fn coefficient(l: f64) -> f64 {
    (1.0 - l * l).max(0.0).sqrt()
}

fn push(out: &mut Action, idx: BasisIndex, c: f64) {
    if c != 0.0 {
        out.push((idx, C64::new(c, 0.0)));
    }
}

/// `λ f + c f̃` at `(group, t)` when `forward`, else `c f − λ f̃`.
fn pair(group: i64, t: usize, lambda: f64, forward: bool) -> Action {
    let c = coefficient(lambda);
    let mut out = Vec::with_capacity(2);
    if forward {
        push(&mut out, BasisIndex::f(group, t), lambda);
        push(&mut out, BasisIndex::ft(group, t), c);
    } else {
        push(&mut out, BasisIndex::f(group, t), c);
        push(&mut out, BasisIndex::ft(group, t), -lambda);
    }
    out
}

impl LazySystem {
    /// `(λ, k)` of a group label.
    pub fn group(&self, n: i64) -> Result<(f64, usize)> {
        let out_of_rule = || BclError::IndexOutOfRule(format!("group {n} is outside the spectrum rule"));
        match &self.mode {
            Mode::Inf { g, ones } => {
                let j = g.eval(n);
                if *ones > 0 {
                    if j == 1 {
                        return Ok((1.0, *ones));
                    }
                    self.rule.term(j - 1).ok_or_else(out_of_rule)
                } else {
                    self.rule.term(j).ok_or_else(out_of_rule)
                }
            }
            Mode::Diff1 { k0 } => match n {
                0 => Ok((1.0, *k0)),
                n if n > 0 => self.rule.term(n as usize).ok_or_else(out_of_rule),
                _ => Err(out_of_rule()),
            },
        }
    }

    /// Number of positions `t` carried by `slot` in group `n`.
    fn slot_len(&self, n: i64, slot: Slot) -> Result<usize> {
        let (_, k) = self.group(n)?;
        Ok(match (&self.mode, n, slot) {
            (Mode::Diff1 { .. }, 0, Slot::FT) => k + 1,
            _ => k,
        })
    }

    pub fn check_index(&self, idx: BasisIndex) -> Result<()> {
        let len = self.slot_len(idx.group, idx.slot)?;
        if idx.t == 0 || idx.t > len {
            return Err(BclError::IndexOutOfRule(format!(
                "{idx}: position must lie in 1..={len}"
            )));
        }
        Ok(())
    }

    fn unitary_action(&self, idx: BasisIndex) -> Result<Action> {
        self.check_index(idx)?;
        let BasisIndex { group: n, slot, t } = idx;
        match &self.mode {
            Mode::Inf { .. } => {
                let (lambda, k) = self.group(n)?;
                match slot {
                    Slot::F => Ok(pair(n, t, lambda, false)),
                    Slot::FT if t < k => Ok(pair(n, t + 1, lambda, true)),
                    Slot::FT => Ok(pair(n + 1, 1, self.group(n + 1)?.0, true)),
                }
            }
            Mode::Diff1 { k0 } => {
                if n == 0 {
                    let one = vec![(BasisIndex::ft(0, t + 1), C64::new(1.0, 0.0))];
                    return Ok(match slot {
                        Slot::F => one,
                        Slot::FT if t <= *k0 => vec![(BasisIndex::f(0, t), C64::new(1.0, 0.0))],
                        Slot::FT => pair(1, 1, self.group(1)?.0, true),
                    });
                }
                let (lambda, k) = self.group(n)?;
                match slot {
                    Slot::F if t < k => Ok(pair(n, t + 1, lambda, false)),
                    Slot::F => Ok(pair(n - 1, 1, self.group(n - 1)?.0, false)),
                    Slot::FT if t < k => Ok(pair(n, t + 1, lambda, true)),
                    Slot::FT => Ok(pair(n + 1, 1, self.group(n + 1)?.0, true)),
                }
            }
        }
    }

    /// Indices whose `U`-image may involve `b` (a superset is fine).
    fn sources(&self, b: BasisIndex) -> Result<Vec<BasisIndex>> {
        let BasisIndex { group: n, t, .. } = b;
        match &self.mode {
            Mode::Inf { .. } => {
                let prev = if t >= 2 {
                    BasisIndex::ft(n, t - 1)
                } else {
                    BasisIndex::ft(n - 1, self.group(n - 1)?.1)
                };
                Ok(vec![BasisIndex::f(n, t), prev])
            }
            Mode::Diff1 { k0 } => {
                if n == 0 {
                    let mut out = vec![BasisIndex::f(1, self.group(1)?.1)];
                    match b.slot {
                        Slot::F => out.push(BasisIndex::ft(0, t)),
                        Slot::FT if t >= 2 => out.push(BasisIndex::f(0, t - 1)),
                        Slot::FT => {}
                    }
                    return Ok(out);
                }
                let w_src = if t >= 2 {
                    BasisIndex::f(n, t - 1)
                } else {
                    BasisIndex::f(n + 1, self.group(n + 1)?.1)
                };
                let z_src = if t >= 2 {
                    BasisIndex::ft(n, t - 1)
                } else if n == 1 {
                    BasisIndex::ft(0, k0 + 1)
                } else {
                    BasisIndex::ft(n - 1, self.group(n - 1)?.1)
                };
                Ok(vec![w_src, z_src])
            }
        }
    }

    fn adjoint_action(&self, b: BasisIndex) -> Result<Action> {
        self.check_index(b)?;
        let mut out = Vec::with_capacity(2);
        for x in self.sources(b)? {
            if let Some(&(_, c)) = self.unitary_action(x)?.iter().find(|(i, _)| *i == b) {
                out.push((x, c.conj()));
            }
        }
        Ok(out)
    }

    fn defect_action(&self, idx: BasisIndex) -> Result<Action> {
        self.check_index(idx)?;
        let (lambda, _) = self.group(idx.group)?;
        let c = lambda * coefficient(lambda);
        let l2 = lambda * lambda;
        let sign = if self.mirrored { -1.0 } else { 1.0 };
        let mut out = Vec::with_capacity(2);
        let f = BasisIndex::f(idx.group, idx.t);
        let ft = BasisIndex::ft(idx.group, idx.t);
        match idx.slot {
            Slot::F => {
                push(&mut out, f, sign * l2);
                push(&mut out, ft, sign * c);
            }
            Slot::FT => {
                push(&mut out, f, sign * c);
                push(&mut out, ft, -sign * l2);
            }
        }
        Ok(out)
    }

    /// The image of one basis vector.
    pub fn action(&self, op: OperatorName, idx: BasisIndex) -> Result<Action> {
        let range_slot = if self.mirrored { Slot::F } else { Slot::FT };
        match op {
            OperatorName::U => self.unitary_action(idx),
            OperatorName::UAdj => self.adjoint_action(idx),
            OperatorName::T => self.defect_action(idx),
            OperatorName::Identity | OperatorName::P | OperatorName::Pperp => {
                self.check_index(idx)?;
                let keep = match op {
                    OperatorName::P => idx.slot == range_slot,
                    OperatorName::Pperp => idx.slot != range_slot,
                    _ => true,
                };
                Ok(if keep { vec![(idx, C64::new(1.0, 0.0))] } else { Vec::new() })
            }
        }
    }

    /// The `i`-th basis index (from 0): groups by `|n|` ascending,
    /// nonnegative first, then `F` before `F̃`, then `t` ascending.
    pub fn enumerate(&self, count: usize) -> Result<Vec<BasisIndex>> {
        let mut out = Vec::with_capacity(count);
        let mut step: i64 = 0;
        while out.len() < count {
            let labels: Vec<i64> = match (&self.mode, step) {
                (_, 0) => vec![0],
                (Mode::Inf { .. }, s) => vec![s, -s],
                (Mode::Diff1 { .. }, s) => vec![s],
            };
            for n in labels {
                for slot in [Slot::F, Slot::FT] {
                    for t in 1..=self.slot_len(n, slot)? {
                        if out.len() == count {
                            return Ok(out);
                        }
                        out.push(BasisIndex { group: n, slot, t });
                    }
                }
            }
            step += 1;
        }
        Ok(out)
    }
}

/// One of `U`, `U*`, `P`, `P⊥`, `T`, `I` of a lazy construction.
#[derive(Debug, Clone)]
pub struct LazyOperator {
    pub name: OperatorName,
    pub system: Arc<LazySystem>,
}

impl LazyOperator {
    pub fn with_name(&self, name: OperatorName) -> Self {
        Self {
            name,
            system: Arc::clone(&self.system),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.with_name(match self.name {
            OperatorName::U => OperatorName::UAdj,
            OperatorName::UAdj => OperatorName::U,
            other => other,
        })
    }

    pub fn action(&self, idx: BasisIndex) -> Result<Action> {
        self.system.action(self.name, idx)
    }

    pub fn apply(&self, v: &FiniteVector) -> Result<FiniteVector> {
        let mut out = FiniteVector::new();
        for (&idx, &c) in v.terms() {
            for (j, a) in self.action(idx)? {
                out.add(j, a * c);
            }
        }
        Ok(out)
    }
}

fn pair_of(system: LazySystem) -> (LazyOperator, LazyOperator) {
    let system = Arc::new(system);
    let u = LazyOperator {
        name: OperatorName::U,
        system,
    };
    let p = u.with_name(OperatorName::P);
    (u, p)
}

/// Construction for `dim E_1 = dim E_-1 = ones` with interior eigenvalues
/// from `rule`. When `ones > 0` the eigenvalue `1` takes index `1` of `ℕ`
/// and the rule's terms follow.
pub fn make_inf(rule: SpectrumRule, g: GRule, ones: usize) -> Result<(LazyOperator, LazyOperator)> {
    rule.validate()?;
    if let GRule::Custom(_) = g {
        g.check_window(G_CHECK_WINDOW)?;
    }
    Ok(pair_of(LazySystem {
        mode: Mode::Inf { g, ones },
        rule,
        mirrored: false,
    }))
}

/// Construction for `dim E_1 = k0`, `dim E_-1 = k0 + 1`.
pub fn make_diff1(rule: SpectrumRule, k0: usize) -> Result<(LazyOperator, LazyOperator)> {
    rule.validate()?;
    Ok(pair_of(LazySystem {
        mode: Mode::Diff1 { k0 },
        rule,
        mirrored: false,
    }))
}

/// Chooses the lazy construction for an infinite spectrum.
pub fn make_for_spectrum(s: &DefectSpectrum) -> Result<(LazyOperator, LazyOperator)> {
    s.validate()?;
    let rule = s.infinite.clone().ok_or_else(|| {
        BclError::PreconditionViolation("lazy constructions need an infinite spectrum".into())
    })?;
    if s.l1 == s.l1p {
        make_inf(rule, GRule::Interleave, s.l1)
    } else if s.l1 + 1 == s.l1p {
        make_diff1(rule, s.l1)
    } else if s.l1p + 1 == s.l1 {
        rule.validate()?;
        Ok(pair_of(LazySystem {
            mode: Mode::Diff1 { k0: s.l1p },
            rule,
            mirrored: true,
        }))
    } else {
        Err(BclError::PreconditionViolation(format!(
            "no construction is known for dim E_1 = {} and dim E_-1 = {}",
            s.l1, s.l1p
        )))
    }
}

/// `max` coefficient of `(P⊥ − U P⊥ U* − T)x` over the first `window`
/// basis vectors `x`.
pub fn windowed_defect_check(u: &LazyOperator, p: &LazyOperator, window: usize) -> Result<f64> {
    let pperp = p.with_name(OperatorName::Pperp);
    let t = p.with_name(OperatorName::T);
    let uh = u.adjoint();
    let mut worst: f64 = 0.0;
    for idx in p.system.enumerate(window)? {
        let x = FiniteVector::basis(idx);
        let lhs = pperp.apply(&x)?;
        let conj = u.apply(&pperp.apply(&uh.apply(&x)?)?)?;
        let residual = lhs.sub(&conj).sub(&t.apply(&x)?);
        worst = worst.max(residual.max_abs());
    }
    Ok(worst)
}

/// Indices reached from `start` by at most `depth` applications of
/// `U`, `U*`, `P`, `P⊥` to basis vectors.
pub fn orbit_reach(u: &LazyOperator, p: &LazyOperator, start: BasisIndex, depth: usize) -> Result<BTreeSet<BasisIndex>> {
    p.system.check_index(start)?;
    let ops = [
        u.clone(),
        u.adjoint(),
        p.with_name(OperatorName::P),
        p.with_name(OperatorName::Pperp),
    ];
    let mut seen = BTreeSet::from([start]);
    let mut frontier = vec![start];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &idx in &frontier {
            for op in &ops {
                for (j, _) in op.action(idx)? {
                    if seen.insert(j) {
                        next.push(j);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(seen)
}

/// Whether the orbit of every one of the first `starts` indices covers the
/// first `window` indices within `depth` steps.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitCoverage {
    pub starts: usize,
    pub window: usize,
    pub depth: usize,
    pub covered: bool,
    /// Index triples of the window missed from some start.
    pub missed: Vec<BasisIndex>,
}

pub fn orbit_coverage(u: &LazyOperator, p: &LazyOperator, starts: usize, window: usize, depth: usize) -> Result<OrbitCoverage> {
    let target = p.system.enumerate(window)?;
    let mut missed = BTreeSet::new();
    for start in p.system.enumerate(starts)? {
        let reached = orbit_reach(u, p, start, depth)?;
        missed.extend(target.iter().filter(|i| !reached.contains(i)).copied());
    }
    Ok(OrbitCoverage {
        starts,
        window,
        depth,
        covered: missed.is_empty(),
        missed: missed.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn close(a: &FiniteVector, b: &FiniteVector, eps: f64) -> bool {
        a.sub(b).max_abs() <= eps
    }

    #[test]
    fn interleave_values() {
        let g = GRule::Interleave;
        let got: Vec<usize> = [0, 1, -1, 2, -2, 3].iter().map(|&n| g.eval(n)).collect();
        assert_eq!(got, vec![1, 2, 3, 4, 5, 6]);
        g.check_window(100).unwrap();
        let bad = GRule::Custom(Arc::new(|n: i64| n.unsigned_abs() as usize + 1));
        assert!(matches!(make_inf(SpectrumRule::harmonic(), bad, 0), Err(BclError::NotBijection(_))));
    }

    #[test]
    fn inf_unitary_on_f() {
        let rule = SpectrumRule::CustomList(vec![
            crate::spectrum::InteriorEigenvalue::new(0.6, 1),
            crate::spectrum::InteriorEigenvalue::new(0.3, 1),
            crate::spectrum::InteriorEigenvalue::new(0.2, 1),
        ]);
        let (u, _) = make_inf(rule, GRule::Interleave, 0).unwrap();
        let img = u.apply(&FiniteVector::basis(BasisIndex::f(0, 1))).unwrap();
        let want = FiniteVector::from_terms([(BasisIndex::f(0, 1), re(0.8)), (BasisIndex::ft(0, 1), re(-0.6))]);
        assert!(close(&img, &want, 1e-15));
    }

    #[test]
    fn inf_crossing() {
        let (u, _) = make_inf(SpectrumRule::Harmonic { k: 3 }, GRule::Interleave, 0).unwrap();
        let img = u.apply(&FiniteVector::basis(BasisIndex::ft(0, 3))).unwrap();
        let groups: BTreeSet<(i64, usize)> = img.terms().map(|(i, _)| (i.group, i.t)).collect();
        assert_eq!(groups, BTreeSet::from([(1, 1)]));
        assert!(matches!(
            u.apply(&FiniteVector::basis(BasisIndex::f(0, 4))),
            Err(BclError::IndexOutOfRule(_))
        ));
    }

    #[test]
    fn projection_actions() {
        let (_, p) = make_inf(SpectrumRule::harmonic(), GRule::Interleave, 0).unwrap();
        assert!(p.apply(&FiniteVector::basis(BasisIndex::f(0, 1))).unwrap().is_empty());
        let x = FiniteVector::basis(BasisIndex::ft(-3, 1));
        assert_eq!(p.apply(&x).unwrap(), x);
    }

    #[test]
    fn diff1_rules() {
        let (u, _) = make_diff1(SpectrumRule::harmonic(), 1).unwrap();
        let l1 = 0.5;
        let c1 = (1.0f64 - l1 * l1).sqrt();
        let img = u.apply(&FiniteVector::basis(BasisIndex::f(0, 1))).unwrap();
        assert_eq!(img, FiniteVector::basis(BasisIndex::ft(0, 2)));
        let img = u.apply(&FiniteVector::basis(BasisIndex::ft(0, 1))).unwrap();
        assert_eq!(img, FiniteVector::basis(BasisIndex::f(0, 1)));
        let img = u.apply(&FiniteVector::basis(BasisIndex::ft(0, 2))).unwrap();
        let want = FiniteVector::from_terms([(BasisIndex::f(1, 1), re(l1)), (BasisIndex::ft(1, 1), re(c1))]);
        assert!(close(&img, &want, 1e-15));
        let x = FiniteVector::basis(BasisIndex::ft(0, 2));
        let back = u.adjoint().apply(&u.apply(&x).unwrap()).unwrap();
        assert_eq!(back.support(), x.support());
        assert!(close(&back, &x, 1e-15));
    }

    #[test]
    fn diff1_without_unit_eigenvalue() {
        let (u, p) = make_diff1(SpectrumRule::harmonic(), 0).unwrap();
        let img = u.apply(&FiniteVector::basis(BasisIndex::ft(0, 1))).unwrap();
        assert_eq!(img.support(), BTreeSet::from([BasisIndex::f(1, 1), BasisIndex::ft(1, 1)]));
        assert!(windowed_defect_check(&u, &p, 50).unwrap() <= 1e-12);
    }

    #[test]
    fn actions_have_one_or_two_terms_and_unit_norm() {
        for (u, p) in [
            make_inf(SpectrumRule::Harmonic { k: 2 }, GRule::Interleave, 1).unwrap(),
            make_diff1(SpectrumRule::Geometric { ratio: 0.5, k: 2 }, 2).unwrap(),
        ] {
            for idx in p.system.enumerate(60).unwrap() {
                for op in [u.clone(), u.adjoint()] {
                    let a = op.action(idx).unwrap();
                    assert!((1..=2).contains(&a.len()), "{idx} -> {a:?}");
                    let n: f64 = a.iter().map(|(_, c)| c.norm_sqr()).sum();
                    assert!((n - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn defect_windows() {
        let (u, p) = make_inf(SpectrumRule::harmonic(), GRule::Interleave, 0).unwrap();
        assert!(windowed_defect_check(&u, &p, 100).unwrap() <= 1e-12);
        let (u, p) = make_inf(SpectrumRule::Harmonic { k: 2 }, GRule::Interleave, 2).unwrap();
        assert!(windowed_defect_check(&u, &p, 100).unwrap() <= 1e-12);
        let (u, p) = make_diff1(SpectrumRule::harmonic(), 1).unwrap();
        assert!(windowed_defect_check(&u, &p, 100).unwrap() <= 1e-12);
        let s = DefectSpectrum::infinite(3, 2, SpectrumRule::Harmonic { k: 2 });
        let (u, p) = make_for_spectrum(&s).unwrap();
        assert!(windowed_defect_check(&u, &p, 100).unwrap() <= 1e-12);
    }

    #[test]
    fn identity_unitary_gives_defect_of_t() {
        let (u, p) = make_inf(SpectrumRule::harmonic(), GRule::Interleave, 0).unwrap();
        let id = u.with_name(OperatorName::Identity);
        let window = 10;
        let expected = p
            .system
            .enumerate(window)
            .unwrap()
            .into_iter()
            .map(|i| p.with_name(OperatorName::T).apply(&FiniteVector::basis(i)).unwrap().max_abs())
            .fold(0.0, f64::max);
        assert_eq!(windowed_defect_check(&id, &p, window).unwrap(), expected);
    }

    #[test]
    fn orbits() {
        let (u, p) = make_diff1(SpectrumRule::harmonic(), 1).unwrap();
        let reach = orbit_reach(&u, &p, BasisIndex::f(0, 1), 20).unwrap();
        for idx in [BasisIndex::ft(0, 2), BasisIndex::f(1, 1), BasisIndex::ft(1, 1)] {
            assert!(reach.contains(&idx));
        }
        assert_eq!(orbit_reach(&u, &p, BasisIndex::f(0, 1), 0).unwrap(), BTreeSet::from([BasisIndex::f(0, 1)]));

        let (u, p) = make_inf(SpectrumRule::Harmonic { k: 2 }, GRule::Interleave, 0).unwrap();
        let reach = orbit_reach(&u, &p, BasisIndex::ft(0, 2), 2).unwrap();
        assert!(reach.iter().any(|i| i.group == 1));
    }

    #[test]
    fn enumeration_order() {
        let (_, p) = make_inf(SpectrumRule::harmonic(), GRule::Interleave, 0).unwrap();
        let e = p.system.enumerate(6).unwrap();
        assert_eq!(
            e,
            vec![
                BasisIndex::f(0, 1),
                BasisIndex::ft(0, 1),
                BasisIndex::f(1, 1),
                BasisIndex::ft(1, 1),
                BasisIndex::f(-1, 1),
                BasisIndex::ft(-1, 1)
            ]
        );
        let (_, p) = make_diff1(SpectrumRule::harmonic(), 1).unwrap();
        let e = p.system.enumerate(4).unwrap();
        assert_eq!(e, vec![BasisIndex::f(0, 1), BasisIndex::ft(0, 1), BasisIndex::ft(0, 2), BasisIndex::f(1, 1)]);
    }

    #[test]
    fn custom_list_runs_out() {
        let rule = SpectrumRule::CustomList(vec![crate::spectrum::InteriorEigenvalue::new(0.5, 1)]);
        let (u, p) = make_diff1(rule, 0).unwrap();
        assert!(matches!(windowed_defect_check(&u, &p, 10), Err(BclError::IndexOutOfRule(_))));
    }
}
