//! Independent certification of solution tuples: exact product identity,
//! conjugacy-class membership via rank tables, irreducibility via the
//! span-closure of the generated algebra, and endomorphism dimension. All
//! checks are exact; nothing here trusts the construction that produced
//! the input.

use num::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arith::{CycMatrix, CycScalar, Rational, UnitScalar};
use crate::construct::MatrixTuple;
use crate::instance::{ClassSpec, Instance};
use crate::rep::{hom_dim, Rep};
use crate::{Error, Result};

/// Shared-shape validation: all matrices square of one size over one
/// conductor. Returns `(n, conductor)`.
fn check_square(matrices: &[CycMatrix]) -> Result<(usize, u32)> {
    let Some(first) = matrices.first() else {
        return Err(Error::InvalidInput("empty matrix tuple".into()));
    };
    let (n, cond) = (first.nrows(), first.conductor());
    for (i, m) in matrices.iter().enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "matrix {i} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                ),
            });
        }
        if m.conductor() != cond {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "matrix {i} has conductor {}, expected {cond}",
                    m.conductor()
                ),
            });
        }
    }
    Ok((n, cond))
}

/// Whether the ordered product of the matrices is exactly the identity.
pub fn check_product(matrices: &[CycMatrix]) -> Result<bool> {
    let (n, cond) = check_square(matrices)?;
    let mut prod = CycMatrix::identity(cond, n);
    for m in matrices {
        prod = prod.mul(m);
    }
    Ok(prod.is_identity())
}

/// Outcome of a class-membership test: annihilation by the eigenvalue row,
/// and the rank table of the partial products against the class's own.
/// Annihilation with a wrong rank table means the matrix lies only in the
/// closure of the class, not the class itself.
#[derive(Clone, Debug, Serialize)]
pub struct ClassMembership {
    pub annihilated: bool,
    /// Ranks of `(A - xi_1) ... (A - xi_j)` for `j = 1, ..., w - 1`.
    pub ranks: Vec<usize>,
    /// The class's own rank table for the same row.
    pub expected: Vec<usize>,
    pub in_class: bool,
}

/// Membership relative to an explicit annihilating row of the class. The
/// matrix is lifted into the smallest field containing both its entries and
/// the row's eigenvalues, so inputs over smaller conductors are accepted.
pub fn class_membership(
    a: &CycMatrix,
    class: &ClassSpec,
    row: &[UnitScalar],
) -> Result<ClassMembership> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch {
            context: format!("class membership of a {}x{} matrix", a.nrows(), a.ncols()),
        });
    }
    if a.nrows() != class.block_total() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "matrix of size {} against a class of size {}",
                a.nrows(),
                class.block_total()
            ),
        });
    }
    let mut cond64 = u64::from(a.conductor());
    for xi in row {
        cond64 = cond64.lcm(&xi.phase_denominator());
    }
    let cond = u32::try_from(cond64).map_err(|_| {
        Error::InvalidInput(format!("combined conductor {cond64} is too large"))
    })?;
    let a = a.lift(cond)?;
    let n = a.nrows();
    let expected = class.rank_sequence(row);
    let mut partial = CycMatrix::identity(cond, n);
    let mut ranks = Vec::new();
    for (j, xi) in row.iter().enumerate() {
        let x = CycScalar::embed(xi, cond)?;
        partial = partial.mul(&a.sub(&CycMatrix::scalar(cond, n, &x)));
        if j + 1 < row.len() {
            ranks.push(partial.rank());
        }
    }
    let annihilated = partial.is_zero();
    let in_class = annihilated && ranks == expected;
    Ok(ClassMembership {
        annihilated,
        ranks,
        expected,
        in_class,
    })
}

/// Membership against the class's minimal annihilating row.
pub fn in_class(a: &CycMatrix, class: &ClassSpec) -> Result<ClassMembership> {
    class_membership(a, class, &class.minimal_xi_row())
}

/// Flattens a matrix into a single row (row-major).
fn flatten(m: &CycMatrix) -> CycMatrix {
    let cols = m.ncols();
    CycMatrix::from_fn(m.conductor(), 1, m.nrows() * cols, |_, j| {
        m.get(j / cols, j % cols).clone()
    })
}

fn reshape(row: &CycMatrix, r: usize, c: usize) -> CycMatrix {
    CycMatrix::from_fn(row.conductor(), r, c, |i, j| row.get(0, i * c + j).clone())
}

/// Burnside test: the matrices act irreducibly iff the unital algebra
/// generated by them and their inverses spans all of `n x n` matrices.
/// Starting from the identity, the span is closed under left multiplication
/// by the generators until it stabilizes (at most `n^2` rounds, since the
/// dimension strictly grows). Returns `(irreducible, algebra dimension)`.
pub fn irreducible(matrices: &[CycMatrix]) -> Result<(bool, usize)> {
    let (n, cond) = check_square(matrices)?;
    if n == 0 {
        return Err(Error::InvalidInput("irreducibility of 0x0 matrices".into()));
    }
    let mut gens = Vec::with_capacity(2 * matrices.len());
    for m in matrices {
        gens.push(m.clone());
        gens.push(m.inverse()?);
    }
    let mut basis = vec![CycMatrix::identity(cond, n)];
    let mut rank = 1;
    loop {
        let mut rows: Vec<CycMatrix> = basis.iter().map(flatten).collect();
        for b in &basis {
            for g in &gens {
                rows.push(flatten(&g.mul(b)));
            }
        }
        let refs: Vec<&CycMatrix> = rows.iter().collect();
        let stacked = CycMatrix::vstack(cond, &refs);
        let (rr, pivots) = stacked.rref();
        if pivots.len() == rank {
            break;
        }
        rank = pivots.len();
        basis = (0..rank).map(|i| reshape(&rr.row_block(i, 1), n, n)).collect();
        if rank == n * n {
            break;
        }
    }
    Ok((rank == n * n, rank))
}

/// Certification of one class within a full report.
#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub class_index: usize,
    #[serde(flatten)]
    pub membership: ClassMembership,
}

/// Self-contained certification of a tuple against an instance: the report
/// carries hashes of both inputs, the working conductor, and every check's
/// outcome. `ok` aggregates them (and, when a representation is supplied,
/// the rigid expectation that its endomorphism algebra is trivial).
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub conductor: u32,
    pub product_ok: bool,
    pub classes: Vec<ClassReport>,
    pub irreducible: bool,
    pub algebra_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endo_dim: Option<usize>,
    pub instance_sha256: String,
    pub tuple_sha256: String,
    pub ok: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs every check on a tuple; optionally also reports the endomorphism
/// dimension of a representation claimed to underlie it.
pub fn full_report(
    inst: &Instance,
    t: &MatrixTuple,
    x: Option<&Rep>,
) -> Result<VerificationReport> {
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
    let cond64 = u64::from(inst.conductor).lcm(&u64::from(t.conductor));
    let cond = u32::try_from(cond64).map_err(|_| {
        Error::InvalidInput(format!("combined conductor {cond64} is too large"))
    })?;
    let lifted: Vec<CycMatrix> = t
        .matrices
        .iter()
        .map(|m| m.lift(cond))
        .collect::<Result<_>>()?;
    let product_ok = check_product(&lifted)?;
    let mut classes = Vec::with_capacity(inst.num_classes());
    for (i, a) in lifted.iter().enumerate() {
        classes.push(ClassReport {
            class_index: i,
            membership: class_membership(a, &inst.classes[i], &inst.xi[i])?,
        });
    }
    // Inverses exist whenever the class checks pass (eigenvalues have
    // positive magnitude); a singular matrix is reported as reducible
    // rather than aborting the whole report.
    let (irr, algebra_dim) = match irreducible(&lifted) {
        Ok(pair) => pair,
        Err(Error::SingularMatrix { .. }) => (false, 0),
        Err(e) => return Err(e),
    };
    let endo_dim = x.map(|r| hom_dim(r, r)).transpose()?;
    let instance_json = serde_json::json!({ "n": inst.n, "classes": inst.classes });
    let instance_sha256 = sha256_hex(instance_json.to_string().as_bytes());
    let tuple_sha256 = sha256_hex(
        serde_json::to_string(t)
            .expect("tuple serializes")
            .as_bytes(),
    );
    let ok = product_ok
        && classes.iter().all(|c| c.membership.in_class)
        && irr
        && endo_dim.is_none_or(|d| d == 1);
    Ok(VerificationReport {
        n: inst.n,
        conductor: cond,
        product_ok,
        classes,
        irreducible: irr,
        algebra_dim,
        endo_dim,
        instance_sha256,
        tuple_sha256,
        ok,
    })
}

/// Searches for an invertible `S` with `S A_i = B_i S` for every `i`:
/// kernel of the stacked intertwiner system, then seeded random
/// combinations of the kernel basis until one is invertible. For
/// irreducible tuples any nonzero intertwiner is already invertible, so
/// the basis columns themselves suffice.
pub fn simultaneous_conjugator(
    a: &[CycMatrix],
    b: &[CycMatrix],
    seed: u64,
) -> Result<Option<CycMatrix>> {
    let (n, cond_a) = check_square(a)?;
    let (nb, cond_b) = check_square(b)?;
    if n != nb || a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "conjugator between {} matrices of size {n} and {} of size {nb}",
                a.len(),
                b.len()
            ),
        });
    }
    let cond64 = u64::from(cond_a).lcm(&u64::from(cond_b));
    let cond = u32::try_from(cond64).map_err(|_| {
        Error::InvalidInput(format!("combined conductor {cond64} is too large"))
    })?;
    // Unknowns s[r, c] indexed row-major; equations (S A - B S)[i, j] = 0.
    let unknowns = n * n;
    let mut system = CycMatrix::zero(cond, a.len() * unknowns, unknowns);
    for (k, (am, bm)) in a.iter().zip(b).enumerate() {
        let am = am.lift(cond)?;
        let bm = bm.lift(cond)?;
        for i in 0..n {
            for j in 0..n {
                let eq = k * unknowns + i * n + j;
                for c in 0..n {
                    let cur = system.get(eq, i * n + c).add(am.get(c, j));
                    system.set(eq, i * n + c, cur);
                }
                for r in 0..n {
                    let cur = system.get(eq, r * n + j).sub(bm.get(i, r));
                    system.set(eq, r * n + j, cur);
                }
            }
        }
    }
    let kernel = system.kernel();
    if kernel.ncols() == 0 {
        return Ok(None);
    }
    let columns: Vec<CycMatrix> = (0..kernel.ncols())
        .map(|c| reshape(&kernel.col_block(c, 1).transpose(), n, n))
        .collect();
    let mut candidates: Vec<CycMatrix> = columns.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..24 {
        let mut s = CycMatrix::zero(cond, n, n);
        for col in &columns {
            let c = CycScalar::from_rational(cond, Rational::integer(rng.gen_range(-4i64..=4)));
            s = s.add(&col.mul_scalar(&c));
        }
        candidates.push(s);
    }
    for s in candidates {
        if s.inverse().is_ok() {
            debug_assert!(a
                .iter()
                .zip(b)
                .all(|(am, bm)| {
                    let am = am.lift(cond).expect("lift checked");
                    let bm = bm.lift(cond).expect("lift checked");
                    s.mul(&am) == bm.mul(&s)
                }));
            return Ok(Some(s));
        }
    }
    Ok(None)
}
