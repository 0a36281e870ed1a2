//! Defect spectra: the data `(l1, l1', {(lambda_i, k_i)})` of a compact
//! self-adjoint contraction that is a difference of two projections, its
//! canonical diagonal matrix, and the feasibility classification.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{BclError, Result};
use crate::matcore::{hermitian_eigen, validate_structure, ComplexMatrix, StructureKind, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorEigenvalue {
    pub lambda: f64,
    pub k: usize,
}

impl InteriorEigenvalue {
    pub fn new(lambda: f64, k: usize) -> Self {
        Self { lambda, k }
    }
}

/// Generator for a countably infinite list of interior eigenvalues
/// `(lambda_n, k_n)`, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumRule {
    /// `lambda_n = 1 / (n + 1)`, constant multiplicity.
    Harmonic { k: usize },
    /// `lambda_n = ratio^n`, constant multiplicity.
    Geometric { ratio: f64, k: usize },
    /// Explicit finite prefix; indices past its end are out of rule.
    CustomList(Vec<InteriorEigenvalue>),
}

impl SpectrumRule {
    pub fn harmonic() -> Self {
        SpectrumRule::Harmonic { k: 1 }
    }

    /// `(lambda_n, k_n)` for `n >= 1`, or `None` past the end of a finite list.
    pub fn term(&self, n: usize) -> Option<(f64, usize)> {
        if n == 0 {
            return None;
        }
        match self {
            SpectrumRule::Harmonic { k } => Some((1.0 / (n as f64 + 1.0), *k)),
            SpectrumRule::Geometric { ratio, k } => Some((ratio.powi(n as i32), *k)),
            SpectrumRule::CustomList(values) => values.get(n - 1).map(|v| (v.lambda, v.k)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectrumRule::Harmonic { k } | SpectrumRule::Geometric { k, .. } if *k == 0 => {
                Err(BclError::InvalidSpectrum("rule multiplicity must be >= 1".into()))
            }
            SpectrumRule::Geometric { ratio, .. } if !(*ratio > 0.0 && *ratio < 1.0) => Err(
                BclError::InvalidSpectrum(format!("geometric ratio {ratio} outside (0, 1)")),
            ),
            SpectrumRule::CustomList(values) => {
                if values.is_empty() {
                    return Err(BclError::InvalidSpectrum("custom-list is empty".into()));
                }
                validate_interior(values)
            }
            _ => Ok(()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            SpectrumRule::Harmonic { .. } => "harmonic",
            SpectrumRule::Geometric { .. } => "geometric",
            SpectrumRule::CustomList(_) => "custom-list",
        }
    }

    fn params(&self) -> Value {
        match self {
            SpectrumRule::Harmonic { k } => json!({ "k": k }),
            SpectrumRule::Geometric { ratio, k } => json!({ "ratio": ratio, "k": k }),
            SpectrumRule::CustomList(values) => json!({ "values": values }),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RuleJson {
    rule: String,
    #[serde(default)]
    params: Value,
}

impl Serialize for SpectrumRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RuleJson {
            rule: self.name().to_string(),
            params: self.params(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectrumRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = RuleJson::deserialize(d)?;
        let k = raw.params.get("k").and_then(Value::as_u64).unwrap_or(1) as usize;
        let rule = match raw.rule.as_str() {
            "harmonic" => SpectrumRule::Harmonic { k },
            "geometric" => {
                let ratio = raw
                    .params
                    .get("ratio")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| D::Error::custom("geometric rule needs params.ratio"))?;
                SpectrumRule::Geometric { ratio, k }
            }
            "custom-list" => {
                let values = raw
                    .params
                    .get("values")
                    .cloned()
                    .ok_or_else(|| D::Error::custom("custom-list rule needs params.values"))?;
                SpectrumRule::CustomList(serde_json::from_value(values).map_err(D::Error::custom)?)
            }
            other => return Err(D::Error::custom(format!("unknown spectrum rule {other:?}"))),
        };
        rule.validate().map_err(D::Error::custom)?;
        Ok(rule)
    }
}

/// `l1 = dim E_1`, `l1p = dim E_{-1}`, and the eigenvalues in `(0, 1)` with
/// their (paired) multiplicities, strictly decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectSpectrum {
    pub l1: usize,
    pub l1p: usize,
    #[serde(default)]
    pub interior: Vec<InteriorEigenvalue>,
    #[serde(default)]
    pub infinite: Option<SpectrumRule>,
}

fn validate_interior(values: &[InteriorEigenvalue]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !(v.lambda > 0.0 && v.lambda < 1.0) {
            return Err(BclError::InvalidSpectrum(format!(
                "lambda {} outside (0, 1)",
                v.lambda
            )));
        }
        if v.k == 0 {
            return Err(BclError::InvalidSpectrum(format!(
                "lambda {} has multiplicity 0",
                v.lambda
            )));
        }
        if i > 0 && values[i - 1].lambda <= v.lambda {
            return Err(BclError::InvalidSpectrum(
                "interior eigenvalues must be strictly decreasing".into(),
            ));
        }
    }
    Ok(())
}

impl DefectSpectrum {
    pub fn finite(l1: usize, l1p: usize, interior: &[(f64, usize)]) -> Self {
        Self {
            l1,
            l1p,
            interior: interior.iter().map(|&(l, k)| InteriorEigenvalue::new(l, k)).collect(),
            infinite: None,
        }
    }

    pub fn infinite(l1: usize, l1p: usize, rule: SpectrumRule) -> Self {
        Self {
            l1,
            l1p,
            interior: Vec::new(),
            infinite: Some(rule),
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        validate_interior(&self.interior)?;
        match &self.infinite {
            Some(rule) => {
                if !self.interior.is_empty() {
                    return Err(BclError::InvalidSpectrum(
                        "an infinite spectrum is given by its rule alone; interior must be empty"
                            .into(),
                    ));
                }
                rule.validate()
            }
            None => {
                if self.dim() == 0 {
                    return Err(BclError::InvalidSpectrum("spectrum is empty".into()));
                }
                Ok(())
            }
        }
    }

    /// Total dimension `l1 + l1p + 2 sum k` of a finite spectrum.
    pub fn dim(&self) -> usize {
        self.l1 + self.l1p + 2 * self.interior.iter().map(|v| v.k).sum::<usize>()
    }

    /// Distinct positive eigenvalues with multiplicities, descending; `1`
    /// first when `l1 > 0`.
    pub fn positive_groups(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::with_capacity(self.interior.len() + 1);
        if self.l1 > 0 {
            out.push((1.0, self.l1));
        }
        out.extend(self.interior.iter().map(|v| (v.lambda, v.k)));
        out
    }

    /// Per-coordinate diagonal of the canonical matrix.
    pub fn canonical_diagonal(&self) -> Result<Vec<f64>> {
        if self.is_infinite() {
            return Err(BclError::InfiniteSpectrum);
        }
        let mut d = Vec::with_capacity(self.dim());
        d.extend(std::iter::repeat_n(1.0, self.l1));
        for v in &self.interior {
            d.extend(std::iter::repeat_n(v.lambda, v.k));
        }
        d.extend(std::iter::repeat_n(-1.0, self.l1p));
        for v in &self.interior {
            d.extend(std::iter::repeat_n(-v.lambda, v.k));
        }
        Ok(d)
    }
}

/// `diag(I_{l1}, D, -I_{l1p}, -D)` with `D = (+) lambda_i I_{k_i}`.
pub fn canonical_matrix(s: &DefectSpectrum) -> Result<ComplexMatrix> {
    Ok(ComplexMatrix::real_diag(&s.canonical_diagonal()?))
}

/// Reads a self-adjoint contraction with trivial kernel into its defect
/// spectrum. Eigenvalues within `rank_gap` of `+-1` snap to `+-1`.
pub fn classify(t: &ComplexMatrix, tol: &Tolerances) -> Result<DefectSpectrum> {
    t.require_square()?;
    let check = validate_structure(t, StructureKind::SelfAdjointContraction, tol)?;
    if !check.pass {
        return Err(BclError::NotContraction {
            violation: check.violation,
        });
    }
    let groups = hermitian_eigen(t, tol)?;
    let kernel: usize = groups
        .iter()
        .filter(|g| g.value.abs() <= tol.rank_gap)
        .map(|g| g.multiplicity)
        .sum();
    if kernel > 0 {
        return Err(BclError::KernelNotEmpty { dim: kernel });
    }

    let (mut l1, mut l1p) = (0, 0);
    let mut positive: Vec<(f64, usize)> = Vec::new();
    let mut negative: Vec<(f64, usize)> = Vec::new();
    for g in &groups {
        if (g.value - 1.0).abs() <= tol.rank_gap {
            l1 += g.multiplicity;
        } else if (g.value + 1.0).abs() <= tol.rank_gap {
            l1p += g.multiplicity;
        } else if g.value > 0.0 {
            positive.push((g.value, g.multiplicity));
        } else {
            negative.push((-g.value, g.multiplicity));
        }
    }

    let mut interior = Vec::with_capacity(positive.len());
    let mut used = vec![false; negative.len()];
    for &(lambda, plus) in &positive {
        let partner = negative
            .iter()
            .enumerate()
            .find(|(j, (mu, _))| !used[*j] && (mu - lambda).abs() <= tol.rank_gap);
        match partner {
            Some((j, &(mu, minus))) if minus == plus => {
                used[j] = true;
                interior.push(InteriorEigenvalue::new(0.5 * (lambda + mu), plus));
            }
            Some((_, &(_, minus))) => {
                return Err(BclError::PairingViolation { lambda, plus, minus })
            }
            None => {
                return Err(BclError::PairingViolation {
                    lambda,
                    plus,
                    minus: 0,
                })
            }
        }
    }
    if let Some((j, _)) = used.iter().enumerate().find(|(_, u)| !**u) {
        let (lambda, minus) = negative[j];
        return Err(BclError::PairingViolation {
            lambda,
            plus: 0,
            minus,
        });
    }
    interior.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    Ok(DefectSpectrum {
        l1,
        l1p,
        interior,
        infinite: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Infeasible,
    ReducibleOnly,
    IrreducibleFeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionHint {
    PartI,
    PartII,
    PartIII,
    Inf,
    Diff1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub kind: VerdictKind,
    pub reason: String,
    pub construction_hint: Option<ConstructionHint>,
}

impl FeasibilityVerdict {
    fn new(kind: VerdictKind, reason: &str, hint: Option<ConstructionHint>) -> Self {
        Self {
            kind,
            reason: reason.to_string(),
            construction_hint: hint,
        }
    }
}

pub const REASON_UNEQUAL_UNIT: &str = "dim E1 != dim E-1";
pub const REASON_OPEN: &str = "open-question";

/// Decides whether an irreducible triple with defect `s` exists and which
/// construction produces it.
pub fn feasibility(s: &DefectSpectrum) -> FeasibilityVerdict {
    use ConstructionHint::*;
    use VerdictKind::*;

    if s.is_infinite() {
        let gap = s.l1.abs_diff(s.l1p);
        return match gap {
            0 => FeasibilityVerdict::new(
                IrreducibleFeasible,
                "infinite spectrum, dim E1 = dim E-1",
                Some(Inf),
            ),
            1 => FeasibilityVerdict::new(
                IrreducibleFeasible,
                "infinite spectrum, |dim E1 - dim E-1| = 1",
                Some(Diff1),
            ),
            _ => FeasibilityVerdict::new(ReducibleOnly, REASON_OPEN, None),
        };
    }

    if s.l1 != s.l1p {
        return FeasibilityVerdict::new(Infeasible, REASON_UNEQUAL_UNIT, None);
    }
    let distinct_positive = s.positive_groups().len();
    match distinct_positive {
        0 => FeasibilityVerdict::new(ReducibleOnly, "empty spectrum", None),
        1 if s.l1 == 0 => {
            let reason = if s.interior[0].k >= 2 {
                "single interior eigenvalue with multiplicity >= 2"
            } else {
                "single interior eigenvalue, two-dimensional simple block"
            };
            FeasibilityVerdict::new(IrreducibleFeasible, reason, Some(PartII))
        }
        1 if s.l1 == 1 => FeasibilityVerdict::new(
            IrreducibleFeasible,
            "1 is the only positive eigenvalue and dim E1 = 1",
            Some(PartIII),
        ),
        1 => FeasibilityVerdict::new(
            ReducibleOnly,
            "1 is the only positive eigenvalue and dim E1 >= 2",
            Some(PartIII),
        ),
        _ => FeasibilityVerdict::new(
            IrreducibleFeasible,
            "at least two distinct positive eigenvalues",
            Some(PartI),
        ),
    }
}
