//! The existence criterion: root catalog, decomposition search, verdict.
//!
//! The sufficiency test asks three things of the dimension vector `alpha`:
//! that `q^alpha = 1`, that `alpha` is a positive root, and that `p(alpha)`
//! strictly exceeds `p(beta) + p(gamma) + ...` for every way of writing
//! `alpha` as a sum of two or more positive roots whose `q`-power is 1.
//! The first condition is a hard obstruction (it is the determinant
//! condition on the classes); the other two are sufficient for existence,
//! and for real `alpha` the combination is also necessary for a rigid
//! solution. A failed criterion on a non-real root is therefore reported as
//! conjectural.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arith::UnitScalar;
use crate::instance::Instance;
use crate::quiver::{parameter_power, DimVector, Quiver, RootKind};
use crate::{Error, Result};

/// Cap on the number of box states `prod (alpha_v + 1)` the enumeration and
/// the dynamic program will visit.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Above this many states the decomposition memo switches from a dense
/// array to a hash map.
const DENSE_LIMIT: u128 = 1_000_000;

/// One positive root `beta` with `0 < beta <= alpha`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootEntry {
    pub beta: DimVector,
    pub kind: RootKind,
    pub p: i64,
    /// Whether `q^beta = 1`.
    pub q_null: bool,
}

/// Every positive root inside the box `0 < beta <= alpha`, in lexicographic
/// order on `beta`.
#[derive(Clone, Debug)]
pub struct RootCatalog {
    pub alpha: DimVector,
    pub roots: Vec<RootEntry>,
}

impl RootCatalog {
    pub fn q_null_roots(&self) -> impl Iterator<Item = &RootEntry> {
        self.roots.iter().filter(|r| r.q_null)
    }

    pub fn to_json(&self, quiver: &Quiver) -> serde_json::Value {
        let roots: Vec<serde_json::Value> = self
            .roots
            .iter()
            .map(|r| {
                serde_json::json!({
                    "beta": quiver.dims_to_json(&r.beta),
                    "kind": r.kind,
                    "p": r.p,
                    "q_null": r.q_null,
                })
            })
            .collect();
        serde_json::json!({
            "alpha": quiver.dims_to_json(&self.alpha),
            "roots": roots,
        })
    }
}

/// Mixed-radix walk over `{gamma : 0 <= gamma <= alpha}` in lexicographic
/// order, with the rightmost coordinate moving fastest.
struct StateBox {
    radix: Vec<i64>,
    strides: Vec<u64>,
    states: u128,
}

impl StateBox {
    fn new(alpha: &DimVector) -> StateBox {
        assert!(alpha.is_nonnegative(), "box corner must be nonnegative");
        let radix: Vec<i64> = alpha.0.clone();
        let mut states: u128 = 1;
        for &r in &radix {
            states *= (r + 1) as u128;
        }
        let mut strides = vec![1u64; radix.len()];
        for v in (0..radix.len().saturating_sub(1)).rev() {
            strides[v] = strides[v + 1] * (radix[v + 1] + 1) as u64;
        }
        StateBox {
            radix,
            strides,
            states,
        }
    }

    fn guard(&self, budget: u64) -> Result<()> {
        if self.states > budget as u128 {
            Err(Error::BudgetExceeded {
                states: self.states,
                budget,
            })
        } else {
            Ok(())
        }
    }

    fn index(&self, gamma: &DimVector) -> u64 {
        gamma
            .0
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c as u64 * s)
            .sum()
    }

    fn decode(&self, mut idx: u64) -> DimVector {
        let mut gamma = Vec::with_capacity(self.radix.len());
        for &s in &self.strides {
            gamma.push((idx / s) as i64);
            idx %= s;
        }
        DimVector(gamma)
    }
}

/// Enumerates every positive root in the box `0 < beta <= alpha` and flags
/// the ones with `q^beta = 1`. Fails with `BudgetExceeded` when the box has
/// more than `budget` vectors.
pub fn root_catalog(
    quiver: &Quiver,
    alpha: &DimVector,
    q: &[UnitScalar],
    budget: u64,
) -> Result<RootCatalog> {
    assert_eq!(alpha.len(), quiver.num_vertices());
    let bx = StateBox::new(alpha);
    bx.guard(budget)?;
    let mut roots = Vec::new();
    for idx in 1..bx.states as u64 {
        let beta = bx.decode(idx);
        let kind = quiver.is_positive_root(&beta);
        if kind == RootKind::NotARoot {
            continue;
        }
        roots.push(RootEntry {
            q_null: parameter_power(q, &beta).is_one(),
            p: quiver.p(&beta),
            kind,
            beta,
        });
    }
    Ok(RootCatalog {
        alpha: alpha.clone(),
        roots,
    })
}

/// Memo for the best decomposition value of each box state; present means
/// the state is a sum of `q`-null positive roots (zero included via state 0).
enum Memo {
    Dense(Vec<Option<i64>>),
    Sparse(HashMap<u64, i64>),
}

impl Memo {
    fn get(&self, idx: u64) -> Option<i64> {
        match self {
            Memo::Dense(v) => v[idx as usize],
            Memo::Sparse(m) => m.get(&idx).copied(),
        }
    }

    fn raise(&mut self, idx: u64, val: i64) {
        match self {
            Memo::Dense(v) => {
                let slot = &mut v[idx as usize];
                if slot.is_none_or(|old| val > old) {
                    *slot = Some(val);
                }
            }
            Memo::Sparse(m) => {
                m.entry(idx)
                    .and_modify(|old| {
                        if val > *old {
                            *old = val
                        }
                    })
                    .or_insert(val);
            }
        }
    }
}

/// Maximum of `sum p(parts)` over all ways of writing `alpha` as a sum of
/// TWO OR MORE `q`-null positive roots, with one witness; `None` when no
/// such decomposition exists. The witness has lexicographically nonincreasing
/// parts, so equal answers print identically.
pub fn max_decomposition(catalog: &RootCatalog) -> Option<(i64, Vec<DimVector>)> {
    let bx = StateBox::new(&catalog.alpha);
    let parts: Vec<(&DimVector, i64, u64)> = catalog
        .q_null_roots()
        .map(|r| (&r.beta, r.p, bx.index(&r.beta)))
        .collect();
    if parts.is_empty() {
        return None;
    }

    // Forward relaxation in index order: indices grow when a part is added,
    // so every state's value is final by the time it is extended.
    let mut memo = if bx.states <= DENSE_LIMIT {
        Memo::Dense(vec![None; bx.states as usize])
    } else {
        Memo::Sparse(HashMap::new())
    };
    memo.raise(0, 0);
    for idx in 0..bx.states as u64 {
        let Some(val) = memo.get(idx) else { continue };
        let gamma = bx.decode(idx);
        for (beta, p, off) in &parts {
            let fits = (0..gamma.len()).all(|v| gamma.get(v) + beta.get(v) <= bx.radix[v]);
            if fits {
                memo.raise(idx + off, val + p);
            }
        }
    }

    // Top level: first part beta != alpha, remainder decomposable.
    let top = bx.index(&catalog.alpha);
    let mut best: Option<i64> = None;
    for (_, p, off) in parts.iter().filter(|(_, _, off)| *off != top) {
        if let Some(rest) = memo.get(top - off) {
            let val = p + rest;
            if best.is_none_or(|b| val > b) {
                best = Some(val);
            }
        }
    }
    let best = best?;

    // Witness: repeatedly take the lexicographically largest part that
    // attains the remaining value. Parts come out nonincreasing.
    let mut witness = Vec::new();
    let mut idx = top;
    let mut remaining = best;
    while idx != 0 {
        let exclude_whole = witness.is_empty();
        let (beta, p, off) = parts
            .iter()
            .rev()
            .find(|(_, p, off)| {
                (!exclude_whole || *off != top)
                    && *off <= idx
                    && fits_under(&bx, idx, *off)
                    && memo.get(idx - off) == Some(remaining - p)
            })
            .expect("memoized value must be attainable");
        witness.push((*beta).clone());
        remaining -= p;
        idx -= off;
    }
    Some((best, witness))
}

/// Whether the state `off` is componentwise below the state `idx`.
fn fits_under(bx: &StateBox, idx: u64, off: u64) -> bool {
    let a = bx.decode(idx);
    let b = bx.decode(off);
    b.le(&a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// `q^alpha != 1`: no solution at all, irreducible or not.
    NoSolutionDet,
    /// Criterion holds on a real root: a rigid irreducible solution exists
    /// and is unique up to conjugation.
    ExistsRigid,
    /// Criterion holds on an imaginary root: irreducible solutions exist.
    ExistsNonrigid,
    /// Criterion fails: conjecturally no irreducible solution.
    CriterionFails,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::NoSolutionDet => "no_solution_det",
            Status::ExistsRigid => "exists_rigid",
            Status::ExistsNonrigid => "exists_nonrigid",
            Status::CriterionFails => "criterion_fails",
        }
    }
}

/// The decision for one instance, with the data that justifies it.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    pub alpha: DimVector,
    pub root_kind: RootKind,
    pub p_alpha: i64,
    /// The scalar `q^alpha`; a certificate when status is `NoSolutionDet`.
    pub q_alpha: UnitScalar,
    /// Best value of `sum p(parts)` over proper decompositions, if any.
    pub max_decomposition: Option<i64>,
    /// A decomposition attaining `max_decomposition`.
    pub witness: Option<Vec<DimVector>>,
    /// `g = -1 + sum alpha_v^2`; the solution variety has dimension
    /// `g + 2 p(alpha)` when solutions exist.
    pub g: i64,
    /// True exactly for `CriterionFails`: the test is sufficient, so its
    /// failure proves nothing except on real roots.
    pub conjectural: bool,
}

impl Verdict {
    pub fn dims_info(&self) -> (i64, i64) {
        (self.g, self.g + 2 * self.p_alpha)
    }

    pub fn to_json(&self, quiver: &Quiver) -> serde_json::Value {
        let witness = self.witness.as_ref().map(|parts| {
            parts
                .iter()
                .map(|b| quiver.dims_to_json(b))
                .collect::<Vec<_>>()
        });
        serde_json::json!({
            "status": self.status,
            "conjectural": self.conjectural,
            "alpha": quiver.dims_to_json(&self.alpha),
            "root_kind": self.root_kind,
            "p_alpha": self.p_alpha,
            "q_alpha": self.q_alpha,
            "max_decomposition": self.max_decomposition,
            "witness": witness,
            "dims_info": {"g": self.g, "g_plus_2p": self.g + 2 * self.p_alpha},
        })
    }
}

/// Decides existence for a dimension vector and parameter on any quiver.
///
/// Order of business: the determinant obstruction `q^alpha != 1` is checked
/// first and needs no enumeration; then the catalog and the decomposition
/// maximum decide between the criterion holding (rigid on a real root,
/// nonrigid on an imaginary one) and failing.
pub fn decide_with(
    quiver: &Quiver,
    alpha: &DimVector,
    q: &[UnitScalar],
    budget: u64,
) -> Result<Verdict> {
    let q_alpha = parameter_power(q, alpha);
    let root_kind = quiver.is_positive_root(alpha);
    let p_alpha = quiver.p(alpha);
    let g = -1 + alpha.0.iter().map(|&c| c * c).sum::<i64>();
    let mut verdict = Verdict {
        status: Status::CriterionFails,
        alpha: alpha.clone(),
        root_kind,
        p_alpha,
        q_alpha,
        max_decomposition: None,
        witness: None,
        g,
        conjectural: false,
    };
    if !verdict.q_alpha.is_one() {
        verdict.status = Status::NoSolutionDet;
        return Ok(verdict);
    }
    let catalog = root_catalog(quiver, alpha, q, budget)?;
    if let Some((value, parts)) = max_decomposition(&catalog) {
        verdict.max_decomposition = Some(value);
        verdict.witness = Some(parts);
    }
    let beaten = verdict.max_decomposition.is_some_and(|v| v >= p_alpha);
    verdict.status = if root_kind == RootKind::NotARoot || beaten {
        Status::CriterionFails
    } else if root_kind == RootKind::Real {
        Status::ExistsRigid
    } else {
        Status::ExistsNonrigid
    };
    verdict.conjectural = verdict.status == Status::CriterionFails;
    Ok(verdict)
}

/// Decides existence of an irreducible solution for an instance.
pub fn decide(inst: &Instance, budget: u64) -> Result<Verdict> {
    decide_with(&inst.quiver, &inst.alpha, &inst.qparam, budget)
}

/// Whether a rigid irreducible solution exists. Unlike the general verdict
/// this is an exact characterization: `false` proves non-existence of rigid
/// irreducible solutions.
pub fn rigid_exists(inst: &Instance, budget: u64) -> Result<bool> {
    Ok(decide(inst, budget)?.status == Status::ExistsRigid)
}
