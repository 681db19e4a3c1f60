//! Explicit construction in the rigid case: reduce `(alpha, q)` to a
//! coordinate vector by reflections, seed the one-dimensional simple there,
//! replay the reduction backwards through inverse middle convolution, and
//! convert between representations and matrix tuples.

use num::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{CycMatrix, CycScalar, UnitScalar};
use crate::criterion::{decide, Status};
use crate::instance::{ClassSpec, Instance};
use crate::quiver::{reflect_parameter, DArrow, DimVector, Quiver, Vertex};
use crate::rep::{inverse_middle_convolution, Rep};
use crate::{Error, Result};

/// One reflection step of the greedy reduction, with the state before it.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionStep {
    pub vertex: Vertex,
    pub alpha_before: DimVector,
    pub q_before: Vec<UnitScalar>,
}

/// A reduction of `(alpha, q)` to a coordinate vector with unit parameter
/// there. Replaying the steps backwards through inverse middle convolution
/// rebuilds the rigid representation.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionPath {
    pub steps: Vec<ReductionStep>,
    pub terminal: Vertex,
    pub terminal_alpha: DimVector,
    pub terminal_q: Vec<UnitScalar>,
}

impl ReductionPath {
    /// Human-readable audit trace, one line per step.
    pub fn trace_text(&self, quiver: &Quiver) -> String {
        let mut out = String::new();
        for (k, s) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "step {}: reflect at {} from alpha = {:?}, q there = {}\n",
                k + 1,
                quiver.label(s.vertex),
                s.alpha_before,
                s.q_before[s.vertex],
            ));
        }
        out.push_str(&format!(
            "terminal: coordinate vector at {} with unit parameter\n",
            quiver.label(self.terminal)
        ));
        out
    }
}

/// Vertices admissible for the next reflection: `(alpha, eps_v) > 0`.
fn reduction_candidates(quiver: &Quiver, alpha: &DimVector) -> Vec<Vertex> {
    (0..quiver.num_vertices())
        .filter(|&v| quiver.pairing_with_unit(alpha, v) > 0)
        .collect()
}

fn reduce_from(
    quiver: &Quiver,
    mut alpha: DimVector,
    mut q: Vec<UnitScalar>,
    mut pick: impl FnMut(&[Vertex]) -> Vertex,
) -> Result<ReductionPath> {
    let mut steps = Vec::new();
    loop {
        if let Some(v) = alpha.as_unit() {
            if !q[v].is_one() {
                return Err(Error::InternalContradiction {
                    vertex: quiver.label(v).to_string(),
                });
            }
            return Ok(ReductionPath {
                steps,
                terminal: v,
                terminal_alpha: alpha,
                terminal_q: q,
            });
        }
        let candidates = reduction_candidates(quiver, &alpha);
        if candidates.is_empty() {
            // A positive real root always admits a descent; getting here
            // means the caller's rigidity verdict was wrong.
            return Err(Error::InternalContradiction {
                vertex: "(none)".into(),
            });
        }
        let v = pick(&candidates);
        debug_assert!(candidates.contains(&v), "picked vertex must be admissible");
        if q[v].is_one() {
            return Err(Error::InternalContradiction {
                vertex: quiver.label(v).to_string(),
            });
        }
        steps.push(ReductionStep {
            vertex: v,
            alpha_before: alpha.clone(),
            q_before: q.clone(),
        });
        let next = quiver.reflect(v, &alpha)?;
        debug_assert!(next.sum() < alpha.sum(), "reduction must strictly descend");
        alpha = next;
        q = reflect_parameter(quiver, v, &q)?;
    }
}

/// Greedy reduction of a rigid instance: repeatedly reflect at the
/// least-index admissible vertex until a coordinate vector remains.
/// Requires the decision procedure to return `exists_rigid`.
pub fn reduction_path(inst: &Instance, budget: u64) -> Result<ReductionPath> {
    let verdict = decide(inst, budget)?;
    if verdict.status != Status::ExistsRigid {
        return Err(Error::NotRigid {
            status: verdict.status.as_str().into(),
        });
    }
    reduce_from(&inst.quiver, inst.alpha.clone(), inst.qparam.clone(), |c| c[0])
}

/// The same reduction with each vertex drawn uniformly among the admissible
/// candidates. Any admissible order reaches a terminal; the resulting
/// tuples are simultaneously conjugate to the greedy ones.
pub fn reduction_path_seeded(inst: &Instance, budget: u64, seed: u64) -> Result<ReductionPath> {
    let verdict = decide(inst, budget)?;
    if verdict.status != Status::ExistsRigid {
        return Err(Error::NotRigid {
            status: verdict.status.as_str().into(),
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    reduce_from(
        &inst.quiver,
        inst.alpha.clone(),
        inst.qparam.clone(),
        move |c| c[rng.gen_range(0..c.len())],
    )
}

/// Builds the rigid representation for a reduction path: seeds the
/// one-dimensional representation at the terminal vertex (all maps zero,
/// valid because the parameter is 1 there) and replays the recorded steps
/// backwards through inverse middle convolution. The output has
/// `dims = alpha`, the instance parameter, and satisfies the relations.
pub fn build_rigid_rep(inst: &Instance, path: &ReductionPath) -> Result<Rep> {
    let quiver = inst.quiver.clone();
    let n = inst.conductor;
    let dims = DimVector::unit(quiver.num_vertices(), path.terminal);
    let maps = quiver
        .arrows()
        .iter()
        .map(|a| {
            let (h, t) = (dims.get(a.head) as usize, dims.get(a.tail) as usize);
            (CycMatrix::zero(n, h, t), CycMatrix::zero(n, t, h))
        })
        .collect();
    let mut x = Rep::new(quiver, dims, maps, path.terminal_q.clone(), n)?;
    debug_assert!(x.check_relations().ok);
    for step in path.steps.iter().rev() {
        x = inverse_middle_convolution(&x, step.vertex)?.rep;
        assert_eq!(x.dims(), &step.alpha_before, "replay must retrace the path");
        assert_eq!(
            x.qparam(),
            &step.q_before[..],
            "replay must retrace the parameter"
        );
    }
    if x.dims() != &inst.alpha || x.qparam() != &inst.qparam[..] {
        return Err(Error::MismatchedQ {
            context: "reduction path does not belong to this instance".into(),
        });
    }
    debug_assert!(x.check_relations().ok);
    Ok(x)
}

/// An explicit solution candidate: square matrices whose ordered product is
/// the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixTuple {
    pub n: usize,
    pub conductor: u32,
    pub matrices: Vec<CycMatrix>,
}

impl MatrixTuple {
    /// Shape and conductor consistency; no mathematical checks.
    pub fn validate(&self) -> Result<()> {
        if self.matrices.is_empty() {
            return Err(Error::InvalidInput("tuple has no matrices".into()));
        }
        for (i, m) in self.matrices.iter().enumerate() {
            if m.nrows() != self.n || m.ncols() != self.n {
                return Err(Error::ShapeMismatch {
                    context: format!(
                        "matrix {i} is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        self.n,
                        self.n
                    ),
                });
            }
            if m.conductor() != self.conductor {
                return Err(Error::ShapeMismatch {
                    context: format!(
                        "matrix {i} has conductor {}, tuple says {}",
                        m.conductor(),
                        self.conductor
                    ),
                });
            }
        }
        Ok(())
    }

    /// The ordered product `A_1 A_2 ... A_k`.
    pub fn product(&self) -> CycMatrix {
        let mut prod = CycMatrix::identity(self.conductor, self.n);
        for a in &self.matrices {
            prod = prod.mul(a);
        }
        prod
    }
}

/// The double arrow at which strictness first fails: a plain leg map that
/// is not injective, or a starred one that is not surjective.
pub fn first_nonstrict(x: &Rep) -> Option<String> {
    let quiver = x.quiver();
    for i in 0..quiver.num_arrows() {
        let plain = x.map(DArrow::plain(i));
        if plain.rank() != plain.ncols() {
            return Some(quiver.arrow(i).name.clone());
        }
        let star = x.map(DArrow::star(i));
        if star.rank() != star.nrows() {
            return Some(format!("{}*", quiver.arrow(i).name));
        }
    }
    None
}

/// Whether every plain map is injective and every starred map surjective.
/// Vacuously true when there are no arrows.
pub fn is_strict(x: &Rep) -> bool {
    first_nonstrict(x).is_none()
}

/// Converts a strict representation with `dims = alpha` into the tuple
/// `A_i = xi_i1 (1 + X_{a_i1} X_{a_i1*})` (a scalar matrix when class `i`
/// has a single eigenvalue row entry). The center relation makes the
/// ordered product collapse to the identity.
pub fn rep_to_tuple(inst: &Instance, x: &Rep) -> Result<MatrixTuple> {
    if x.quiver() != &inst.quiver {
        return Err(Error::MismatchedQ {
            context: "representation is not over the instance's quiver".into(),
        });
    }
    if x.qparam() != &inst.qparam[..] {
        return Err(Error::MismatchedQ {
            context: "representation parameter differs from the instance's".into(),
        });
    }
    if x.dims() != &inst.alpha {
        return Err(Error::InvalidInput(format!(
            "representation dims {:?} differ from alpha {:?}",
            x.dims(),
            inst.alpha
        )));
    }
    if let Some(arrow) = first_nonstrict(x) {
        return Err(Error::NotStrict { arrow });
    }
    let cond = x.conductor();
    let mut matrices = Vec::with_capacity(inst.num_classes());
    for i in 0..inst.num_classes() {
        let xi1 = CycScalar::embed(&inst.xi[i][0], cond)?;
        let a = if inst.w[i] == 1 {
            CycMatrix::scalar(cond, inst.n, &xi1)
        } else {
            x.g_matrix(DArrow::plain(inst.leg_arrow(i, 1)))
                .mul_scalar(&xi1)
        };
        matrices.push(a);
    }
    let tuple = MatrixTuple {
        n: inst.n,
        conductor: cond,
        matrices,
    };
    if !tuple.product().is_identity() {
        return Err(Error::InvalidInput(
            "representation does not satisfy the vertex relations; \
             the matrix product is not the identity"
                .into(),
        ));
    }
    Ok(tuple)
}

/// A reduced-echelon basis of the column space, as columns.
fn image_basis(m: &CycMatrix) -> CycMatrix {
    // The column space is the row space of the transpose; the nonzero
    // reduced-echelon rows are its canonical basis.
    let (r, pivots) = m.transpose().rref();
    r.row_block(0, pivots.len()).transpose()
}

/// Rebuilds the quiver representation underlying a matrix tuple. The leg
/// space at depth `j` is the image of `(A_i - xi_i1) ... (A_i - xi_ij)`
/// with its reduced-echelon basis; the plain map is the inclusion divided
/// by `xi_ij` and the starred map is the factor `A_i - xi_ij`. The output
/// is strict by construction.
pub fn tuple_to_rep(inst: &Instance, t: &MatrixTuple) -> Result<Rep> {
    t.validate()?;
    if t.n != inst.n {
        return Err(Error::ShapeMismatch {
            context: format!("tuple is over n = {}, instance over n = {}", t.n, inst.n),
        });
    }
    if t.matrices.len() != inst.num_classes() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{} matrices for {} classes",
                t.matrices.len(),
                inst.num_classes()
            ),
        });
    }
    let cond = combined_conductor(inst.conductor, t.conductor)?;
    let lifted: Vec<CycMatrix> = t
        .matrices
        .iter()
        .map(|m| m.lift(cond))
        .collect::<Result<_>>()?;
    if !{
        let mut prod = CycMatrix::identity(cond, inst.n);
        for a in &lifted {
            prod = prod.mul(a);
        }
        prod.is_identity()
    } {
        return Err(Error::InvalidInput(
            "product of the matrices is not the identity".into(),
        ));
    }
    for (i, a) in lifted.iter().enumerate() {
        let membership = crate::verify::class_membership(a, &inst.classes[i], &inst.xi[i])?;
        if !membership.in_class {
            return Err(Error::NotInClass {
                class_index: i,
                annihilated: membership.annihilated,
                ranks: membership.ranks,
            });
        }
    }
    let mut dims = vec![0i64; inst.quiver.num_vertices()];
    dims[0] = inst.n as i64;
    let mut maps: Vec<(CycMatrix, CycMatrix)> = inst
        .quiver
        .arrows()
        .iter()
        .map(|_| (CycMatrix::zero(cond, 0, 0), CycMatrix::zero(cond, 0, 0)))
        .collect();
    for (i, a) in lifted.iter().enumerate() {
        let mut basis_prev = CycMatrix::identity(cond, inst.n);
        let mut partial = CycMatrix::identity(cond, inst.n);
        for j in 1..inst.w[i] {
            let xi = CycScalar::embed(&inst.xi[i][j - 1], cond)?;
            let factor = a.sub(&CycMatrix::scalar(cond, inst.n, &xi));
            partial = partial.mul(&factor);
            let basis = image_basis(&partial);
            dims[inst.leg_vertex(i, j)] = basis.ncols() as i64;
            // The images are nested and the factor maps one onto the next,
            // so both solves succeed with unique solutions.
            let psi = basis_prev.solve(&basis).expect("image chain is nested");
            let phi = basis
                .solve(&factor.mul(&basis_prev))
                .expect("factor lands in the next image");
            maps[inst.leg_arrow(i, j)] = (psi.mul_scalar(&xi.inverse()), phi);
            basis_prev = basis;
        }
    }
    let dims = DimVector(dims);
    assert_eq!(dims, inst.alpha, "rank checks pin the dimension vector");
    let x = Rep::new(
        inst.quiver.clone(),
        dims,
        maps,
        inst.qparam.clone(),
        cond,
    )?;
    debug_assert!(x.check_relations().ok);
    debug_assert!(is_strict(&x));
    Ok(x)
}

fn combined_conductor(a: u32, b: u32) -> Result<u32> {
    let l = u64::from(a).lcm(&u64::from(b));
    u32::try_from(l).map_err(|_| Error::InvalidInput(format!("combined conductor {l} is too large")))
}

/// Conjugates the whole tuple by one basis change putting `A_1` into Jordan
/// form: blocks grouped by eigenvalue in canonical order (phase, then
/// magnitude), sizes descending within an eigenvalue. Returns the
/// conjugated tuple and the basis change `S`, with `S^-1 A_i S` the new
/// matrices.
pub fn jordan_normalize(inst: &Instance, t: &MatrixTuple) -> Result<(MatrixTuple, CycMatrix)> {
    t.validate()?;
    if t.n != inst.n || t.matrices.len() != inst.num_classes() {
        return Err(Error::ShapeMismatch {
            context: "tuple does not match the instance".into(),
        });
    }
    let cond = combined_conductor(inst.conductor, t.conductor)?;
    let lifted: Vec<CycMatrix> = t
        .matrices
        .iter()
        .map(|m| m.lift(cond))
        .collect::<Result<_>>()?;
    let class = &inst.classes[0];
    let membership = crate::verify::in_class(&lifted[0], class)?;
    if !membership.in_class {
        return Err(Error::NotInClass {
            class_index: 0,
            annihilated: membership.annihilated,
            ranks: membership.ranks,
        });
    }
    let s = jordan_basis(&lifted[0], class, cond)?;
    let s_inv = s.inverse()?;
    let matrices: Vec<CycMatrix> = lifted.iter().map(|a| s_inv.mul(a).mul(&s)).collect();
    let target = canonical_class(class).jordan_matrix(cond)?;
    assert_eq!(matrices[0], target, "normalized matrix must be in Jordan form");
    Ok((
        MatrixTuple {
            n: t.n,
            conductor: cond,
            matrices,
        },
        s,
    ))
}

/// The class with blocks in canonical order: eigenvalues sorted by
/// (phase, magnitude), sizes descending within an eigenvalue.
fn canonical_class(class: &ClassSpec) -> ClassSpec {
    let mut blocks = class.jordan_blocks.clone();
    blocks.sort_by(|a, b| {
        a.eigenvalue
            .sort_key()
            .cmp(&b.eigenvalue.sort_key())
            .then(b.size.cmp(&a.size))
    });
    ClassSpec {
        jordan_blocks: blocks,
        xi_row: None,
    }
}

/// Columns: Jordan chains of `a`, eigenvalues in canonical order, chains
/// longest-first within an eigenvalue, each chain deepest-first. Assumes
/// `a` lies in the class (checked by the caller).
fn jordan_basis(a: &CycMatrix, class: &ClassSpec, cond: u32) -> Result<CycMatrix> {
    let n = a.nrows();
    let canonical = canonical_class(class);
    let mut by_eig: Vec<(UnitScalar, Vec<usize>)> = Vec::new();
    for b in &canonical.jordan_blocks {
        match by_eig.iter_mut().find(|(e, _)| *e == b.eigenvalue) {
            Some((_, sizes)) => sizes.push(b.size),
            None => by_eig.push((b.eigenvalue.clone(), vec![b.size])),
        }
    }
    let mut columns: Vec<CycMatrix> = Vec::new();
    for (lambda, sizes) in &by_eig {
        let lam = CycScalar::embed(lambda, cond)?;
        let m = a.sub(&CycMatrix::scalar(cond, n, &lam));
        let smax = sizes[0];
        let mut kernels = vec![CycMatrix::zero(cond, n, 0)];
        let mut power = CycMatrix::identity(cond, n);
        for _ in 0..smax {
            power = power.mul(&m);
            kernels.push(power.kernel());
        }
        // Select chain tops level by level, longest chains first. At level
        // l a top must be independent of Ker (A - lambda)^(l-1) and of the
        // level-l members of the taller chains.
        let mut chains: Vec<Vec<CycMatrix>> = Vec::new();
        let mut carried: Vec<CycMatrix> = Vec::new();
        for l in (1..=smax).rev() {
            let need = sizes.iter().filter(|&&s| s == l).count();
            let mut ctx_parts: Vec<&CycMatrix> = vec![&kernels[l - 1]];
            ctx_parts.extend(carried.iter());
            let mut ctx = CycMatrix::hstack(cond, &ctx_parts);
            let mut rank = ctx.rank();
            let mut new_tops = Vec::new();
            for c in 0..kernels[l].ncols() {
                if new_tops.len() == need {
                    break;
                }
                let cand = kernels[l].col_block(c, 1);
                let trial = CycMatrix::hstack(cond, &[&ctx, &cand]);
                let trial_rank = trial.rank();
                if trial_rank > rank {
                    ctx = trial;
                    rank = trial_rank;
                    new_tops.push(cand);
                }
            }
            assert_eq!(
                new_tops.len(),
                need,
                "kernel dimensions match the class block sizes"
            );
            let mut next_carried: Vec<CycMatrix> = carried.iter().map(|c| m.mul(c)).collect();
            for top in new_tops {
                let mut chain = vec![top.clone()];
                for _ in 1..l {
                    let last = chain.last().expect("chain is nonempty");
                    chain.push(m.mul(last));
                }
                next_carried.push(m.mul(&top));
                chains.push(chain);
            }
            carried = next_carried;
        }
        for chain in chains {
            columns.extend(chain.into_iter().rev());
        }
    }
    let refs: Vec<&CycMatrix> = columns.iter().collect();
    let s = CycMatrix::hstack(cond, &refs);
    assert_eq!(s.ncols(), n, "chains must fill the whole space");
    Ok(s)
}
