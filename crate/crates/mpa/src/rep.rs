//! Representations of the doubled quiver under the multiplicative relations,
//! and the transforms between them.
//!
//! A representation assigns a space to each vertex and a matrix to each half
//! of every doubled arrow, subject to two conditions: every `1 + X_a X_a*`
//! is invertible, and at each vertex the ordered product of those factors
//! (inverted for starred halves) equals `q_v` times the identity. The
//! transforms in this module (arrow reversal, order swaps, middle
//! convolution) move representations between quivers that differ in
//! orientation, arrow order, or parameter, always preserving the relations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use crate::arith::{CycMatrix, CycScalar, Rational, UnitScalar};
use crate::quiver::{reflect_parameter, DArrow, DimVector, Quiver, Vertex};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Rep {
    quiver: Quiver,
    dims: DimVector,
    /// Per arrow `a`: the pair `(X_a, X_a*)`.
    maps: Vec<(CycMatrix, CycMatrix)>,
    qparam: Vec<UnitScalar>,
    conductor: u32,
}

impl Rep {
    /// Validates shapes and parameter compatibility. `maps[i]` must be
    /// `(X_a, X_a*)` for arrow `i`, with `X_a` of shape
    /// `dims[head] x dims[tail]`.
    pub fn new(
        quiver: Quiver,
        dims: DimVector,
        maps: Vec<(CycMatrix, CycMatrix)>,
        qparam: Vec<UnitScalar>,
        conductor: u32,
    ) -> Result<Rep> {
        if dims.len() != quiver.num_vertices() || qparam.len() != quiver.num_vertices() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "dims ({}) and qparam ({}) must both match the vertex count ({})",
                    dims.len(),
                    qparam.len(),
                    quiver.num_vertices()
                ),
            });
        }
        if !dims.is_nonnegative() {
            return Err(Error::ShapeMismatch {
                context: format!("negative dimension in {dims:?}"),
            });
        }
        if maps.len() != quiver.num_arrows() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "{} map pairs for {} arrows",
                    maps.len(),
                    quiver.num_arrows()
                ),
            });
        }
        for (i, (x, xs)) in maps.iter().enumerate() {
            let a = quiver.arrow(i);
            let (h, t) = (dims.get(a.head) as usize, dims.get(a.tail) as usize);
            if x.nrows() != h || x.ncols() != t || xs.nrows() != t || xs.ncols() != h {
                return Err(Error::ShapeMismatch {
                    context: format!(
                        "arrow {}: expected {h}x{t} and {t}x{h}, got {}x{} and {}x{}",
                        a.name,
                        x.nrows(),
                        x.ncols(),
                        xs.nrows(),
                        xs.ncols()
                    ),
                });
            }
            if x.conductor() != conductor || xs.conductor() != conductor {
                return Err(Error::ShapeMismatch {
                    context: format!("arrow {}: matrix conductor differs from {conductor}", a.name),
                });
            }
        }
        for q in &qparam {
            CycScalar::embed(q, conductor)?;
        }
        Ok(Rep {
            quiver,
            dims,
            maps,
            qparam,
            conductor,
        })
    }

    /// The representation with every space zero-dimensional.
    pub fn empty(quiver: Quiver, qparam: Vec<UnitScalar>, conductor: u32) -> Result<Rep> {
        let dims = DimVector::zeros(quiver.num_vertices());
        let maps = quiver
            .arrows()
            .iter()
            .map(|_| {
                (
                    CycMatrix::zero(conductor, 0, 0),
                    CycMatrix::zero(conductor, 0, 0),
                )
            })
            .collect();
        Rep::new(quiver, dims, maps, qparam, conductor)
    }

    pub fn quiver(&self) -> &Quiver {
        &self.quiver
    }

    pub fn dims(&self) -> &DimVector {
        &self.dims
    }

    pub fn qparam(&self) -> &[UnitScalar] {
        &self.qparam
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    /// The matrix of one half of a doubled arrow.
    pub fn map(&self, d: DArrow) -> &CycMatrix {
        let (x, xs) = &self.maps[d.arrow];
        if d.starred {
            xs
        } else {
            x
        }
    }

    fn set_map(&mut self, d: DArrow, m: CycMatrix) {
        let (x, xs) = &mut self.maps[d.arrow];
        if d.starred {
            *xs = m;
        } else {
            *x = m;
        }
    }

    /// `g_d = 1 + X_d X_d*`, the relation factor of `d` at its head.
    pub fn g_matrix(&self, d: DArrow) -> CycMatrix {
        self.map(d).mul(self.map(d.partner())).plus_identity()
    }

    fn q_scalar(&self, v: Vertex) -> CycScalar {
        CycScalar::embed(&self.qparam[v], self.conductor).expect("validated at construction")
    }

    /// Whether the two representations can be compared map-for-map: same
    /// quiver (including arrow order), parameter and conductor.
    pub fn same_setting(&self, other: &Rep) -> Result<()> {
        if self.quiver != other.quiver {
            return Err(Error::MismatchedQ {
                context: "different quivers or double orders".into(),
            });
        }
        if self.qparam != other.qparam {
            return Err(Error::MismatchedQ {
                context: "different parameters".into(),
            });
        }
        if self.conductor != other.conductor {
            return Err(Error::MismatchedQ {
                context: format!(
                    "different conductors ({} vs {})",
                    self.conductor, other.conductor
                ),
            });
        }
        Ok(())
    }

    /// Checks both defining conditions exactly; never errors, the report
    /// carries the outcome per arrow and per vertex.
    pub fn check_relations(&self) -> RelationReport {
        let mut noninvertible = Vec::new();
        for i in 0..self.quiver.num_arrows() {
            if self.g_matrix(DArrow::plain(i)).inverse().is_err() {
                noninvertible.push(self.quiver.arrow(i).name.clone());
            }
        }
        let mut vertices = Vec::new();
        let mut ok = noninvertible.is_empty();
        for v in 0..self.quiver.num_vertices() {
            let dv = self.dims.get(v) as usize;
            let mut prod = CycMatrix::identity(self.conductor, dv);
            let mut invertible = true;
            for d in self.quiver.double_arrows_with_head(v) {
                let g = self.g_matrix(d);
                if d.sign() > 0 {
                    prod = prod.mul(&g);
                } else {
                    match g.inverse() {
                        Ok(gi) => prod = prod.mul(&gi),
                        Err(_) => {
                            invertible = false;
                            break;
                        }
                    }
                }
            }
            let target = CycMatrix::scalar(self.conductor, dv, &self.q_scalar(v));
            let holds = invertible && prod == target;
            ok &= holds;
            vertices.push(VertexCheck {
                vertex: self.quiver.label(v).to_string(),
                holds,
            });
        }
        RelationReport {
            ok,
            noninvertible,
            vertices,
        }
    }
}

/// Outcome of an exact relation check.
#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub ok: bool,
    /// Arrows whose factor `1 + X_a X_a*` is singular.
    pub noninvertible: Vec<String>,
    pub vertices: Vec<VertexCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexCheck {
    pub vertex: String,
    pub holds: bool,
}

/// Replaces arrow `a` by the reversed arrow `b` (same name, head and tail
/// exchanged), with `X_b = X_a*` and `X_b* = -(1 + X_a X_a*)^{-1} X_a`.
/// In the double order, `a`'s slot is taken by `b*` and `a*`'s by `b`.
/// The relations transfer exactly: both new factors equal the old ones.
pub fn reverse_arrow(x: &Rep, arrow: usize) -> Result<Rep> {
    let g_inv = x.g_matrix(DArrow::plain(arrow)).inverse()?;
    let new_plain = x.map(DArrow::star(arrow)).clone();
    let new_star = g_inv.mul(x.map(DArrow::plain(arrow))).neg();
    rebuild_reversed(x, arrow, new_plain, new_star)
}

/// Exact inverse of `reverse_arrow`: recovers the representation whose
/// reversal produced `x`. Maps: `X_a = -(1 + X_b* X_b)^{-1} X_b*` and
/// `X_a* = X_b`.
pub fn unreverse_arrow(x: &Rep, arrow: usize) -> Result<Rep> {
    let b = DArrow::plain(arrow);
    let bs = DArrow::star(arrow);
    let g = x.map(bs).mul(x.map(b)).plus_identity();
    let new_plain = g.inverse()?.mul(x.map(bs)).neg();
    let new_star = x.map(b).clone();
    rebuild_reversed(x, arrow, new_plain, new_star)
}

fn rebuild_reversed(x: &Rep, arrow: usize, new_plain: CycMatrix, new_star: CycMatrix) -> Result<Rep> {
    let mut arrows = x.quiver.arrows().to_vec();
    let a = &mut arrows[arrow];
    (a.head, a.tail) = (a.tail, a.head);
    let order = x
        .quiver
        .double_order()
        .iter()
        .map(|&d| if d.arrow == arrow { d.partner() } else { d })
        .collect();
    let quiver = Quiver::new(x.quiver.labels().to_vec(), arrows, order)?;
    let mut maps = x.maps.clone();
    maps[arrow] = (new_plain, new_star);
    Rep::new(quiver, x.dims.clone(), maps, x.qparam.clone(), x.conductor)
}

/// Transposes the order entries at `pos` and `pos + 1`. When both share a
/// head, the earlier one is conjugated so every vertex relation keeps its
/// value: with `g = 1 + X_d2 X_d2*` and `e = sign(d2)`, the maps of `d1`
/// and its partner become `g^-e X_d1` and `X_d1* g^e`.
pub fn swap_adjacent_order(x: &Rep, pos: usize) -> Result<Rep> {
    swap_impl(x, pos, false)
}

/// Exact inverse of `swap_adjacent_order` at the same position: transposes
/// back and removes the conjugation it introduced.
pub fn swap_adjacent_order_inverse(x: &Rep, pos: usize) -> Result<Rep> {
    swap_impl(x, pos, true)
}

fn swap_impl(x: &Rep, pos: usize, inverse: bool) -> Result<Rep> {
    let order = x.quiver.double_order();
    assert!(pos + 1 < order.len(), "order position out of range");
    // In the forward direction the moved arrow is the earlier one; in the
    // inverse direction it is the later one (which the forward swap moved).
    let (d1, d2) = (order[pos], order[pos + 1]);
    let (moved, fixed) = if inverse { (d2, d1) } else { (d1, d2) };
    if moved == fixed.partner() {
        return Err(Error::AdjacentLoopPair {
            arrow: x.quiver.darrow_name(moved),
        });
    }
    let mut new_order = order.to_vec();
    new_order.swap(pos, pos + 1);
    let quiver = Quiver::new(
        x.quiver.labels().to_vec(),
        x.quiver.arrows().to_vec(),
        new_order,
    )?;
    let mut out = Rep {
        quiver,
        dims: x.dims.clone(),
        maps: x.maps.clone(),
        qparam: x.qparam.clone(),
        conductor: x.conductor,
    };
    if x.quiver.head(d1) == x.quiver.head(d2) {
        let g = x.g_matrix(fixed);
        let exp = if inverse { -fixed.sign() } else { fixed.sign() };
        let conj = if exp > 0 { g.inverse()? } else { g.clone() };
        let conj_inv = if exp > 0 { g } else { g.inverse()? };
        out.set_map(moved, conj.mul(x.map(moved)));
        out.set_map(moved.partner(), x.map(moved.partner()).mul(&conj_inv));
    }
    Ok(out)
}

/// One middle convolution step: the output representation plus the data
/// needed to audit it or build the round-trip isomorphism.
#[derive(Clone, Debug)]
pub struct Convolution {
    pub rep: Rep,
    pub vertex: Vertex,
    pub dims_before: DimVector,
    pub q_before: Vec<UnitScalar>,
    /// Arrows reversed (and un-reversed) to orient everything into `vertex`.
    pub reversed_arrows: Vec<usize>,
    /// Column-stacked `X_d*` over arrows into `vertex`: the inclusion of the
    /// old vertex space into the sum of the neighbour spaces.
    pub iota: CycMatrix,
    /// Reduced-echelon basis of `ker(pi)`, realizing the new vertex space
    /// inside the same sum.
    pub kernel: CycMatrix,
}

/// Middle convolution at a loopfree vertex with `q_v != 1`.
///
/// Arrows with tail at `v` are first reversed (in double-order position of
/// their plain half) so the convolution itself only sees arrows into `v`;
/// the reversals are undone afterwards. On dimension vectors this is the
/// reflection at `v`, and the parameter becomes `reflect_parameter(q, v)`.
pub fn middle_convolution(x: &Rep, v: Vertex) -> Result<Convolution> {
    let seq = default_reversal_sequence(x.quiver(), v);
    convolve_with_sequence(x, v, &seq)
}

/// The inverse equivalence is the same convolution taken at the reflected
/// parameter, which is exactly what the representation carries after a
/// forward step; provided for readability at call sites.
pub fn inverse_middle_convolution(x: &Rep, v: Vertex) -> Result<Convolution> {
    middle_convolution(x, v)
}

/// Arrows with tail at `v`, ordered by the double-order position of their
/// plain half. Any ordering yields isomorphic output; this one is fixed so
/// results are reproducible.
fn default_reversal_sequence(quiver: &Quiver, v: Vertex) -> Vec<usize> {
    quiver
        .double_order()
        .iter()
        .filter(|d| !d.starred)
        .map(|d| d.arrow)
        .filter(|&i| quiver.arrow(i).tail == v && quiver.arrow(i).head != v)
        .collect()
}

fn convolve_with_sequence(x: &Rep, v: Vertex, seq: &[usize]) -> Result<Convolution> {
    if x.quiver.has_loop(v) {
        return Err(Error::LoopAtVertex {
            vertex: x.quiver.label(v).to_string(),
        });
    }
    if x.qparam[v].is_one() {
        return Err(Error::QIsOne {
            vertex: x.quiver.label(v).to_string(),
        });
    }
    let dims_before = x.dims.clone();
    let q_before = x.qparam.clone();

    let mut cur = x.clone();
    for &a in seq {
        cur = reverse_arrow(&cur, a)?;
    }

    let n = cur.conductor;
    let incoming = cur.quiver.double_arrows_with_head(v);
    debug_assert!(incoming.iter().all(|d| !d.starred), "reorientation incomplete");
    let dv = cur.dims.get(v) as usize;
    let qv = cur.q_scalar(v);
    let qv_minus_1 = qv.sub(&CycScalar::one(n));

    // iota stacks the maps into v's neighbours; pi recombines them through
    // the partial products of the relation factors, normalized so that
    // pi * iota = 1 exactly when the vertex relation holds.
    let mut iota_blocks = Vec::new();
    let mut pi_blocks = Vec::new();
    let mut ell = CycMatrix::identity(n, dv);
    let mut tails = Vec::new();
    for &d in &incoming {
        tails.push(cur.dims.get(cur.quiver.tail(d)) as usize);
        iota_blocks.push(cur.map(d.partner()).clone());
        pi_blocks.push(ell.mul(cur.map(d)));
        ell = ell.mul(&cur.g_matrix(d));
    }
    let iota = CycMatrix::vstack(n, &iota_blocks.iter().collect::<Vec<_>>());
    let pi = CycMatrix::hstack(n, &pi_blocks.iter().collect::<Vec<_>>())
        .mul_scalar(&qv_minus_1.inverse());
    if pi.mul(&iota) != CycMatrix::identity(n, dv) {
        return Err(Error::InvalidInput(format!(
            "input does not satisfy the relation at vertex {}",
            cur.quiver.label(v)
        )));
    }

    let kernel = pi.kernel();
    let new_dv = kernel.ncols();
    let dims_after = cur.quiver.reflect(v, &cur.dims)?;
    debug_assert_eq!(dims_after.get(v), new_dv as i64);

    // New maps at v. The starred map restricts the projection to the kernel;
    // the plain map is the unique solution of kernel * Z = phi_i, where
    // phi_i lands in ker(pi).
    let qv_inv = qv.inverse();
    let one_minus_qv_over_qv = CycScalar::one(n).sub(&qv).mul(&qv_inv);
    let total: usize = tails.len();
    let mut offsets = vec![0usize; total + 1];
    for (i, t) in tails.iter().enumerate() {
        offsets[i + 1] = offsets[i] + t;
    }
    let mut new_maps = Vec::new();
    for (i, &d) in incoming.iter().enumerate() {
        let x_star_new = kernel.row_block(offsets[i], tails[i]);
        let mut phi_blocks = Vec::new();
        for (j, &e) in incoming.iter().enumerate() {
            let mut block = cur.map(e.partner()).mul(cur.map(d));
            if j >= i {
                block = block.mul_scalar(&qv_inv);
            }
            if j == i {
                block = block.add(
                    &CycMatrix::identity(n, tails[i]).mul_scalar(&one_minus_qv_over_qv),
                );
            }
            phi_blocks.push(block);
        }
        let phi = CycMatrix::vstack(n, &phi_blocks.iter().collect::<Vec<_>>());
        let x_new = kernel.solve(&phi).ok_or_else(|| {
            Error::InvalidInput(format!(
                "convolution data at vertex {} is inconsistent",
                cur.quiver.label(v)
            ))
        })?;
        new_maps.push((d, x_new, x_star_new));
    }

    let mut out = Rep {
        quiver: cur.quiver.clone(),
        dims: dims_after,
        maps: cur.maps.clone(),
        qparam: reflect_parameter(&cur.quiver, v, &cur.qparam)?,
        conductor: n,
    };
    for (d, x_new, x_star_new) in new_maps {
        out.set_map(d, x_new);
        out.set_map(d.partner(), x_star_new);
    }

    for &a in seq.iter().rev() {
        out = unreverse_arrow(&out, a)?;
    }
    Ok(Convolution {
        rep: out,
        vertex: v,
        dims_before,
        q_before,
        reversed_arrows: seq.to_vec(),
        iota,
        kernel,
    })
}

/// The canonical isomorphism between a representation and its double
/// convolution at the same vertex: identity away from the vertex, and at the
/// vertex the change of basis from the old space (included by the first
/// step's iota) to the second step's kernel realization.
pub fn round_trip_isomorphism(first: &Convolution, second: &Convolution) -> Result<Vec<CycMatrix>> {
    if first.vertex != second.vertex {
        return Err(Error::InvalidInput(
            "round trip must convolve twice at the same vertex".into(),
        ));
    }
    let n = first.iota.conductor();
    let theta_v = second.kernel.solve(&first.iota).ok_or_else(|| {
        Error::InvalidInput("old vertex space does not land in the new kernel".into())
    })?;
    let mut theta = Vec::new();
    for v in 0..first.dims_before.len() {
        if v == first.vertex {
            theta.push(theta_v.clone());
        } else {
            theta.push(CycMatrix::identity(n, first.dims_before.get(v) as usize));
        }
    }
    Ok(theta)
}

/// Checks that `theta` is an invertible intertwiner from `x` to `y`:
/// `theta_head * X_d = Y_d * theta_tail` for every half of every arrow.
pub fn is_isomorphism(x: &Rep, y: &Rep, theta: &[CycMatrix]) -> Result<bool> {
    x.same_setting(y)?;
    if theta.len() != x.quiver.num_vertices() || x.dims != y.dims {
        return Ok(false);
    }
    for (v, t) in theta.iter().enumerate() {
        if t.nrows() != y.dims.get(v) as usize || t.ncols() != x.dims.get(v) as usize {
            return Ok(false);
        }
        if t.inverse().is_err() {
            return Ok(false);
        }
    }
    Ok(intertwines(x, y, theta))
}

fn intertwines(x: &Rep, y: &Rep, theta: &[CycMatrix]) -> bool {
    (0..x.quiver.num_arrows()).all(|i| {
        [DArrow::plain(i), DArrow::star(i)].into_iter().all(|d| {
            let (h, t) = (x.quiver.head(d), x.quiver.tail(d));
            theta[h].mul(x.map(d)) == y.map(d).mul(&theta[t])
        })
    })
}

/// Coefficient matrix of the linear system `theta_head X_d = Y_d theta_tail`
/// over the stacked unknowns `theta_v[r, c]`; its kernel is `Hom(x, y)`.
fn intertwiner_matrix(x: &Rep, y: &Rep) -> Result<CycMatrix> {
    x.same_setting(y)?;
    let n = x.conductor;
    let nv = x.quiver.num_vertices();
    let mut offset = vec![0usize; nv + 1];
    for v in 0..nv {
        offset[v + 1] = offset[v] + (y.dims.get(v) * x.dims.get(v)) as usize;
    }
    let cols = offset[nv];
    let mut rows_total = 0usize;
    let darrows: Vec<DArrow> = (0..x.quiver.num_arrows())
        .flat_map(|i| [DArrow::plain(i), DArrow::star(i)])
        .collect();
    for &d in &darrows {
        rows_total += (y.dims.get(x.quiver.head(d)) * x.dims.get(x.quiver.tail(d))) as usize;
    }
    let mut e = CycMatrix::zero(n, rows_total, cols);
    let unknown = |v: Vertex, r: usize, c: usize| offset[v] + r * x.dims.get(v) as usize + c;
    let mut row = 0usize;
    for &d in &darrows {
        let (h, t) = (x.quiver.head(d), x.quiver.tail(d));
        let (yh, xt) = (y.dims.get(h) as usize, x.dims.get(t) as usize);
        let (xh, yt) = (x.dims.get(h) as usize, y.dims.get(t) as usize);
        let xd = x.map(d);
        let yd = y.map(d);
        for i in 0..yh {
            for j in 0..xt {
                for c in 0..xh {
                    let col = unknown(h, i, c);
                    let val = e.get(row, col).add(xd.get(c, j));
                    e.set(row, col, val);
                }
                for r in 0..yt {
                    let col = unknown(t, r, j);
                    let val = e.get(row, col).sub(yd.get(i, r));
                    e.set(row, col, val);
                }
                row += 1;
            }
        }
    }
    Ok(e)
}

/// Dimension of the space of intertwiners from `x` to `y`.
pub fn hom_dim(x: &Rep, y: &Rep) -> Result<usize> {
    let e = intertwiner_matrix(x, y)?;
    Ok(e.ncols() - e.rank())
}

/// `dim Ext^1(x, y) = hom(x, y) + hom(y, x) - (dims x, dims y)`; symmetric.
pub fn ext_dim(x: &Rep, y: &Rep) -> Result<usize> {
    let forward = hom_dim(x, y)? as i64;
    let backward = hom_dim(y, x)? as i64;
    let pairing = x.quiver.bilinear(&x.dims, &y.dims);
    let val = forward + backward - pairing;
    usize::try_from(val).map_err(|_| {
        Error::InvalidInput(format!(
            "ext dimension came out negative ({val}); inputs are not valid representations"
        ))
    })
}

/// Searches the intertwiner space for an invertible element: each basis
/// vector first, then seeded random integer combinations. `None` means no
/// isomorphism was found (and for hom dimension 1 that is a proof).
pub fn find_isomorphism(x: &Rep, y: &Rep, seed: u64) -> Result<Option<Vec<CycMatrix>>> {
    x.same_setting(y)?;
    if x.dims != y.dims {
        return Ok(None);
    }
    let e = intertwiner_matrix(x, y)?;
    let basis = e.kernel();
    if basis.ncols() == 0 {
        // Unconstrained only when there is nothing to map.
        return if e.ncols() == 0 {
            Ok(Some(reshape_theta(x, y, &CycMatrix::zero(x.conductor, 0, 1))))
        } else {
            Ok(None)
        };
    }
    let mut candidates: Vec<CycMatrix> = (0..basis.ncols())
        .map(|j| basis.col_block(j, 1))
        .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..24 {
        let mut combo = CycMatrix::zero(x.conductor, basis.nrows(), 1);
        for j in 0..basis.ncols() {
            let c = Rational::integer(rng.gen_range(-4i64..=4));
            combo = combo.add(&basis.col_block(j, 1).mul_rational(&c));
        }
        candidates.push(combo);
    }
    for cand in candidates {
        let theta = reshape_theta(x, y, &cand);
        if theta.iter().all(|t| t.inverse().is_ok()) {
            debug_assert!(intertwines(x, y, &theta));
            return Ok(Some(theta));
        }
    }
    Ok(None)
}

/// Unpacks one stacked intertwiner vector into per-vertex matrices.
fn reshape_theta(x: &Rep, y: &Rep, stacked: &CycMatrix) -> Vec<CycMatrix> {
    let n = x.conductor;
    let mut theta = Vec::new();
    let mut at = 0usize;
    for v in 0..x.quiver.num_vertices() {
        let (rows, cols) = (y.dims.get(v) as usize, x.dims.get(v) as usize);
        let t = CycMatrix::from_fn(n, rows, cols, |r, c| {
            stacked.get(at + r * cols + c, 0).clone()
        });
        at += rows * cols;
        theta.push(t);
    }
    theta
}

/// Componentwise direct sum; valid representations sum to a valid one.
pub fn direct_sum(x: &Rep, y: &Rep) -> Result<Rep> {
    x.same_setting(y)?;
    let n = x.conductor;
    let dims = x.dims.add(&y.dims);
    let maps = (0..x.quiver.num_arrows())
        .map(|i| {
            let d = DArrow::plain(i);
            (
                CycMatrix::block_diag(n, &[x.map(d), y.map(d)]),
                CycMatrix::block_diag(n, &[x.map(d.partner()), y.map(d.partner())]),
            )
        })
        .collect();
    Rep::new(
        x.quiver.clone(),
        dims,
        maps,
        x.qparam.clone(),
        n,
    )
}

impl Serialize for Rep {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Rep", 5)?;
        s.serialize_field("quiver", &self.quiver)?;
        s.serialize_field("conductor", &self.conductor)?;
        s.serialize_field("dims", &self.quiver.dims_to_json(&self.dims))?;
        let qmap: serde_json::Map<String, serde_json::Value> = (0..self.qparam.len())
            .map(|v| {
                (
                    self.quiver.label(v).to_string(),
                    serde_json::to_value(&self.qparam[v]).expect("unit scalar serializes"),
                )
            })
            .collect();
        s.serialize_field("qparam", &qmap)?;
        let maps: serde_json::Map<String, serde_json::Value> = (0..self.maps.len())
            .map(|i| {
                let (x, xs) = &self.maps[i];
                (
                    self.quiver.arrow(i).name.clone(),
                    serde_json::json!({"x": x, "x_star": xs}),
                )
            })
            .collect();
        s.serialize_field("maps", &maps)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Rep {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        struct Raw {
            quiver: Quiver,
            conductor: u32,
            dims: serde_json::Value,
            qparam: std::collections::BTreeMap<String, UnitScalar>,
            maps: std::collections::BTreeMap<String, RawPair>,
        }
        #[derive(Deserialize)]
        struct RawPair {
            x: CycMatrix,
            x_star: CycMatrix,
        }
        let raw = Raw::deserialize(deserializer)?;
        let dims = raw
            .quiver
            .dims_from_json(&raw.dims)
            .map_err(DeError::custom)?;
        let mut qparam = Vec::new();
        for v in 0..raw.quiver.num_vertices() {
            let label = raw.quiver.label(v);
            qparam.push(
                raw.qparam
                    .get(label)
                    .cloned()
                    .ok_or_else(|| DeError::custom(format!("missing qparam for vertex {label}")))?,
            );
        }
        let mut maps = Vec::new();
        for i in 0..raw.quiver.num_arrows() {
            let name = &raw.quiver.arrow(i).name;
            let pair = raw
                .maps
                .get(name)
                .ok_or_else(|| DeError::custom(format!("missing maps for arrow {name}")))?;
            maps.push((pair.x.clone(), pair.x_star.clone()));
        }
        Rep::new(raw.quiver, dims, maps, qparam, raw.conductor).map_err(DeError::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::{parameter_power, Arrow};

    fn us(mag: (i64, i64), phase: (i64, i64)) -> UnitScalar {
        UnitScalar::new(Rational::new(mag.0, mag.1), Rational::new(phase.0, phase.1)).unwrap()
    }

    fn rat(p: i64, q: i64) -> CycScalar {
        CycScalar::from_rational(1, Rational::new(p, q))
    }

    fn m1(p: i64, q: i64) -> CycMatrix {
        CycMatrix::scalar(1, 1, &rat(p, q))
    }

    /// Arrow a: u -> v, dims (1,1), X_a = X_a* = 1, q = (1/2, 2).
    fn segment_rep() -> Rep {
        let quiver = Quiver::with_default_order(
            vec!["u".into(), "v".into()],
            vec![Arrow {
                name: "a".into(),
                head: 1,
                tail: 0,
            }],
        )
        .unwrap();
        Rep::new(
            quiver,
            DimVector(vec![1, 1]),
            vec![(m1(1, 1), m1(1, 1))],
            vec![us((1, 2), (0, 1)), us((2, 1), (0, 1))],
            1,
        )
        .unwrap()
    }

    /// Star with two length-1 legs, dims (1,1,1), all maps 1, q = (4, 1/2, 1/2).
    fn star_rep() -> Rep {
        let quiver = Quiver::star(&[1, 1]);
        Rep::new(
            quiver,
            DimVector(vec![1, 1, 1]),
            vec![(m1(1, 1), m1(1, 1)), (m1(1, 1), m1(1, 1))],
            vec![us((4, 1), (0, 1)), us((1, 2), (0, 1)), us((1, 2), (0, 1))],
            1,
        )
        .unwrap()
    }

    #[test]
    fn relations_hold_on_toys() {
        assert!(segment_rep().check_relations().ok);
        assert!(star_rep().check_relations().ok);

        // Wrong parameter at u: the u-residual fails, v still holds.
        let mut bad = segment_rep();
        bad.qparam[0] = UnitScalar::one();
        let report = bad.check_relations();
        assert!(!report.ok);
        assert!(!report.vertices[0].holds);
        assert!(report.vertices[1].holds);
        assert!(report.noninvertible.is_empty());
    }

    #[test]
    fn empty_rep_satisfies_any_parameter() {
        let x = Rep::empty(
            Quiver::star(&[1]),
            vec![us((3, 1), (0, 1)), us((1, 3), (0, 1))],
            1,
        )
        .unwrap();
        assert!(x.check_relations().ok);
    }

    #[test]
    fn valid_reps_have_trivial_q_power() {
        for x in [segment_rep(), star_rep()] {
            assert!(parameter_power(x.qparam(), x.dims()).is_one());
        }
    }

    #[test]
    fn shape_validation_rejects_bad_maps() {
        let quiver = Quiver::star(&[1]);
        let err = Rep::new(
            quiver,
            DimVector(vec![1, 1]),
            vec![(CycMatrix::zero(1, 2, 1), CycMatrix::zero(1, 1, 2))],
            vec![UnitScalar::one(), UnitScalar::one()],
            1,
        );
        assert!(matches!(err, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn arrow_reversal_matches_hand_values() {
        let x = segment_rep();
        let rev = reverse_arrow(&x, 0).unwrap();
        // b runs v -> u; X_b = 1, X_b* = -(1+1)^{-1} = -1/2.
        assert_eq!(rev.quiver().arrow(0).head, 0);
        assert_eq!(rev.quiver().arrow(0).tail, 1);
        assert_eq!(*rev.map(DArrow::plain(0)), m1(1, 1));
        assert_eq!(*rev.map(DArrow::star(0)), m1(-1, 2));
        assert!(rev.check_relations().ok);
        // Order slots exchanged: plain half sits where the star half was.
        assert_eq!(rev.quiver().double_order()[0], DArrow::star(0));
        assert_eq!(rev.quiver().double_order()[1], DArrow::plain(0));

        // Exact round trip.
        let back = unreverse_arrow(&rev, 0).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn double_reversal_is_isomorphic_not_equal() {
        let x = segment_rep();
        let twice = reverse_arrow(&reverse_arrow(&x, 0).unwrap(), 0).unwrap();
        assert_ne!(twice, x);
        assert_eq!(twice.quiver(), x.quiver());
        assert!(twice.check_relations().ok);
        let theta = find_isomorphism(&x, &twice, 7).unwrap().expect("isomorphic");
        assert!(is_isomorphism(&x, &twice, &theta).unwrap());
    }

    #[test]
    fn order_swap_conjugates_and_restores() {
        let x = star_rep();
        // Default order [a1, a2, a1*, a2*]; swap positions 0,1 (same head 0).
        let swapped = swap_adjacent_order(&x, 0).unwrap();
        assert_eq!(
            swapped.quiver().double_order()[..2],
            [DArrow::plain(1), DArrow::plain(0)]
        );
        // e(a2) = +1, g_{a2} = 2: X'_{a1} = g^{-1} X = 1/2, X'_{a1*} = X g = 2.
        assert_eq!(*swapped.map(DArrow::plain(0)), m1(1, 2));
        assert_eq!(*swapped.map(DArrow::star(0)), m1(2, 1));
        assert_eq!(*swapped.map(DArrow::plain(1)), m1(1, 1));
        assert!(swapped.check_relations().ok);

        let back = swap_adjacent_order_inverse(&swapped, 0).unwrap();
        assert_eq!(back, x);

        // Swapping a distinct-head adjacent pair only transposes the order.
        let swapped2 = swap_adjacent_order(&x, 1).unwrap();
        assert_eq!(swapped2.maps, x.maps);
        assert!(swapped2.check_relations().ok);
        let back2 = swap_adjacent_order_inverse(&swapped2, 1).unwrap();
        assert_eq!(back2, x);
    }

    #[test]
    fn order_swap_rejects_partner_pairs() {
        // Order [a1, a1*, a2, a2*]: positions 0,1 hold an arrow and its star.
        let base = star_rep();
        let quiver = Quiver::new(
            base.quiver().labels().to_vec(),
            base.quiver().arrows().to_vec(),
            vec![
                DArrow::plain(0),
                DArrow::star(0),
                DArrow::plain(1),
                DArrow::star(1),
            ],
        )
        .unwrap();
        let x = Rep::new(
            quiver,
            base.dims().clone(),
            base.maps.clone(),
            base.qparam().to_vec(),
            1,
        )
        .unwrap();
        assert!(matches!(
            swap_adjacent_order(&x, 0),
            Err(Error::AdjacentLoopPair { .. })
        ));
    }

    #[test]
    fn convolution_at_head_vertex() {
        let x = segment_rep();
        // q_v = 2: pi = x, kernel = 0; dims (1,1) -> (1,0), q -> (1, 1/2).
        let conv = middle_convolution(&x, 1).unwrap();
        assert_eq!(conv.rep.dims(), &DimVector(vec![1, 0]));
        assert_eq!(
            conv.rep.qparam(),
            &[UnitScalar::one(), us((1, 2), (0, 1))]
        );
        assert!(conv.reversed_arrows.is_empty());
        assert!(conv.rep.check_relations().ok);
    }

    #[test]
    fn convolution_reorients_tail_arrows() {
        let x = segment_rep();
        // q_u = 1/2: arrow a has tail u, so it is reversed and restored.
        let conv = middle_convolution(&x, 0).unwrap();
        assert_eq!(conv.reversed_arrows, vec![0]);
        assert_eq!(conv.rep.dims(), &DimVector(vec![0, 1]));
        assert_eq!(
            conv.rep.qparam(),
            &[us((2, 1), (0, 1)), UnitScalar::one()]
        );
        // Orientation restored: a still runs u -> v.
        assert_eq!(conv.rep.quiver(), x.quiver());
        assert!(conv.rep.check_relations().ok);
    }

    #[test]
    fn convolution_rejects_trivial_parameter_and_loops() {
        let mut x = segment_rep();
        x.qparam = vec![UnitScalar::one(), UnitScalar::one()];
        assert!(matches!(
            middle_convolution(&x, 0),
            Err(Error::QIsOne { .. })
        ));

        let looped = Quiver::with_default_order(
            vec!["v".into()],
            vec![Arrow {
                name: "l".into(),
                head: 0,
                tail: 0,
            }],
        )
        .unwrap();
        let y = Rep::new(
            looped,
            DimVector(vec![0]),
            vec![(CycMatrix::zero(1, 0, 0), CycMatrix::zero(1, 0, 0))],
            vec![us((2, 1), (0, 1))],
            1,
        )
        .unwrap();
        assert!(matches!(
            middle_convolution(&y, 0),
            Err(Error::LoopAtVertex { .. })
        ));
    }

    #[test]
    fn convolution_of_empty_rep_is_empty() {
        let quiver = Quiver::star(&[1]);
        let x = Rep::empty(quiver, vec![us((2, 1), (0, 1)), us((1, 2), (0, 1))], 1).unwrap();
        let conv = middle_convolution(&x, 0).unwrap();
        assert!(conv.rep.dims().is_zero());
        assert!(conv.rep.check_relations().ok);
    }

    #[test]
    fn convolution_round_trip_is_canonically_isomorphic() {
        for v in [0usize, 1usize] {
            let x = segment_rep();
            let first = middle_convolution(&x, v).unwrap();
            let second = middle_convolution(&first.rep, v).unwrap();
            assert_eq!(second.rep.dims(), x.dims());
            assert_eq!(second.rep.qparam(), x.qparam());
            let theta = round_trip_isomorphism(&first, &second).unwrap();
            assert!(is_isomorphism(&x, &second.rep, &theta).unwrap());
        }
    }

    #[test]
    fn convolution_round_trip_with_growing_dimension() {
        // At u of the star toy (q_u = 4 at the center): dims (1,1,1) with
        // (alpha, e_0) = 2*1 - 2 = 0, so the center dimension is unchanged;
        // use a leg vertex where the dimension actually moves.
        let x = star_rep();
        let first = middle_convolution(&x, 1).unwrap();
        // s_{[1,1]}(1,1,1) = (1, 0, 1).
        assert_eq!(first.rep.dims(), &DimVector(vec![1, 0, 1]));
        assert!(first.rep.check_relations().ok);
        let second = middle_convolution(&first.rep, 1).unwrap();
        let theta = round_trip_isomorphism(&first, &second).unwrap();
        assert!(is_isomorphism(&x, &second.rep, &theta).unwrap());
    }

    #[test]
    fn reorientation_sequence_does_not_matter() {
        // Vertex v with two outgoing arrows; both must be reversed first,
        // in either order.
        let quiver = Quiver::with_default_order(
            vec!["u".into(), "v".into(), "w".into()],
            vec![
                Arrow {
                    name: "a".into(),
                    head: 0,
                    tail: 1,
                },
                Arrow {
                    name: "b".into(),
                    head: 2,
                    tail: 1,
                },
            ],
        )
        .unwrap();
        let x = Rep::new(
            quiver,
            DimVector(vec![1, 1, 1]),
            vec![(m1(1, 1), m1(1, 1)), (m1(1, 1), m1(1, 1))],
            vec![us((2, 1), (0, 1)), us((1, 4), (0, 1)), us((2, 1), (0, 1))],
            1,
        )
        .unwrap();
        assert!(x.check_relations().ok);
        let one_way = convolve_with_sequence(&x, 1, &[0, 1]).unwrap();
        let other_way = convolve_with_sequence(&x, 1, &[1, 0]).unwrap();
        assert_eq!(one_way.rep.dims(), other_way.rep.dims());
        assert!(one_way.rep.check_relations().ok);
        assert!(other_way.rep.check_relations().ok);
        let theta = find_isomorphism(&one_way.rep, &other_way.rep, 11)
            .unwrap()
            .expect("reorientation choices must agree up to isomorphism");
        assert!(is_isomorphism(&one_way.rep, &other_way.rep, &theta).unwrap());
    }

    #[test]
    fn hom_and_ext_on_toys() {
        let x = segment_rep();
        assert_eq!(hom_dim(&x, &x).unwrap(), 1);
        assert_eq!(ext_dim(&x, &x).unwrap(), 0);

        let zero = Rep::empty(x.quiver().clone(), x.qparam().to_vec(), 1).unwrap();
        assert_eq!(hom_dim(&x, &zero).unwrap(), 0);
        assert_eq!(hom_dim(&zero, &x).unwrap(), 0);

        let sum = direct_sum(&x, &x).unwrap();
        assert!(sum.check_relations().ok);
        assert_eq!(sum.dims(), &DimVector(vec![2, 2]));
        assert_eq!(hom_dim(&sum, &sum).unwrap(), 4);
        assert_eq!(hom_dim(&sum, &x).unwrap(), 2);
        assert_eq!(ext_dim(&sum, &x).unwrap(), ext_dim(&x, &sum).unwrap());

        let mut other_q = x.clone();
        other_q.qparam[0] = us((1, 3), (0, 1));
        assert!(matches!(
            hom_dim(&x, &other_q),
            Err(Error::MismatchedQ { .. })
        ));
    }

    #[test]
    fn transport_preserves_hom_dimensions() {
        let x = star_rep();
        let sum = direct_sum(&x, &x).unwrap();
        let before = hom_dim(&sum, &x).unwrap();

        let rx = reverse_arrow(&x, 0).unwrap();
        let rsum = reverse_arrow(&sum, 0).unwrap();
        assert_eq!(hom_dim(&rsum, &rx).unwrap(), before);

        let sx = swap_adjacent_order(&x, 0).unwrap();
        let ssum = swap_adjacent_order(&sum, 0).unwrap();
        assert_eq!(hom_dim(&ssum, &sx).unwrap(), before);
    }

    #[test]
    fn rep_json_round_trip() {
        let x = star_rep();
        let json = serde_json::to_string(&x).unwrap();
        let back: Rep = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);

        // Deserialization validates shapes.
        let mut doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        doc["dims"]["0"] = serde_json::json!(5);
        assert!(serde_json::from_value::<Rep>(doc).is_err());
    }
}
