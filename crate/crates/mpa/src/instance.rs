//! Translation of conjugacy-class data into quiver data.
//!
//! A problem instance is a list of conjugacy classes in `GL_n`, each given
//! by its Jordan blocks. Every class receives an annihilating row of
//! eigenvalues `xi_i1, ..., xi_iw`: the product `(A - xi_i1) ... (A - xi_iw)`
//! vanishes on the class. The instance then becomes a star quiver whose leg
//! `i` has `w_i - 1` vertices, a dimension vector recording the ranks of the
//! partial products, and a multiplicative parameter `q` on the vertices.

use num::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{CycMatrix, CycScalar, UnitScalar};
use crate::quiver::{DimVector, Quiver, Vertex};
use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct JordanBlock {
    pub eigenvalue: UnitScalar,
    pub size: usize,
}

/// One conjugacy class, described by its Jordan blocks. An optional
/// user-supplied annihilating row overrides the minimal one; non-minimal
/// rows are legal and simply lengthen the leg.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ClassSpec {
    pub jordan_blocks: Vec<JordanBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_row: Option<Vec<UnitScalar>>,
}

impl ClassSpec {
    pub fn semisimple(eigenvalues: &[UnitScalar]) -> Self {
        ClassSpec {
            jordan_blocks: eigenvalues
                .iter()
                .map(|e| JordanBlock {
                    eigenvalue: e.clone(),
                    size: 1,
                })
                .collect(),
            xi_row: None,
        }
    }

    pub fn block_total(&self) -> usize {
        self.jordan_blocks.iter().map(|b| b.size).sum()
    }

    /// Shortest annihilating row: each distinct eigenvalue repeated as many
    /// times as its largest block, eigenvalues in canonical order (phase,
    /// then magnitude, ascending) with repeats adjacent.
    pub fn minimal_xi_row(&self) -> Vec<UnitScalar> {
        let mut distinct: Vec<(UnitScalar, usize)> = Vec::new();
        for b in &self.jordan_blocks {
            match distinct.iter_mut().find(|(e, _)| *e == b.eigenvalue) {
                Some((_, m)) => *m = (*m).max(b.size),
                None => distinct.push((b.eigenvalue.clone(), b.size)),
            }
        }
        distinct.sort_by_key(|(e, _)| e.sort_key());
        let mut row = Vec::new();
        for (e, m) in distinct {
            row.extend(std::iter::repeat_with(|| e.clone()).take(m));
        }
        row
    }

    /// Whether `row` annihilates the class: every eigenvalue must appear at
    /// least as often as its largest block.
    pub fn row_annihilates(&self, row: &[UnitScalar]) -> bool {
        self.jordan_blocks.iter().all(|b| {
            row.iter().filter(|x| **x == b.eigenvalue).count() >= b.size
        })
    }

    /// Ranks of the partial products `(A - xi_1) ... (A - xi_j)` for
    /// `j = 1, ..., w - 1`, evaluated per Jordan block: a block of size `s`
    /// at eigenvalue `lambda` contributes `max(0, s - #{l <= j : xi_l =
    /// lambda})`, since the factors at other eigenvalues are invertible on
    /// the block.
    pub fn rank_sequence(&self, row: &[UnitScalar]) -> Vec<usize> {
        (1..row.len())
            .map(|j| {
                self.jordan_blocks
                    .iter()
                    .map(|b| {
                        let hits = row[..j].iter().filter(|x| **x == b.eigenvalue).count();
                        b.size.saturating_sub(hits)
                    })
                    .sum()
            })
            .collect()
    }

    /// The Jordan matrix of the class over `Q(zeta_N)`: block diagonal with
    /// upper Jordan blocks, in the declared block order.
    pub fn jordan_matrix(&self, conductor: u32) -> Result<CycMatrix> {
        let blocks: Result<Vec<CycMatrix>> = self
            .jordan_blocks
            .iter()
            .map(|b| {
                let lambda = CycScalar::embed(&b.eigenvalue, conductor)?;
                let mut m = CycMatrix::scalar(conductor, b.size, &lambda);
                for i in 0..b.size.saturating_sub(1) {
                    m.set(i, i + 1, CycScalar::one(conductor));
                }
                Ok(m)
            })
            .collect();
        let blocks = blocks?;
        let refs: Vec<&CycMatrix> = blocks.iter().collect();
        Ok(CycMatrix::block_diag(conductor, &refs))
    }
}

/// Raw JSON input: the ambient size and the classes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceInput {
    pub n: usize,
    pub classes: Vec<ClassSpec>,
}

/// A fully derived instance: class data, annihilating rows, the star quiver,
/// the dimension vector `alpha` and the parameter `q`.
#[derive(Clone, Debug)]
pub struct Instance {
    pub n: usize,
    pub classes: Vec<ClassSpec>,
    /// Row lengths `w_i` (leg `i` has `w_i - 1` vertices).
    pub w: Vec<usize>,
    /// Annihilating rows, one per class.
    pub xi: Vec<Vec<UnitScalar>>,
    pub quiver: Quiver,
    pub alpha: DimVector,
    /// Multiplicative parameter per vertex.
    pub qparam: Vec<UnitScalar>,
    /// Least common conductor of all eigenvalue phases.
    pub conductor: u32,
    /// Vertex index of `[i+1, j+1]` as `leg_vertices[i][j]`.
    leg_vertices: Vec<Vec<Vertex>>,
}

/// Derives the quiver-side data from class specifications.
///
/// Checks block totals against `n`, validates any user-supplied rows, picks
/// minimal rows otherwise, and assembles the star quiver, `alpha` and `q`.
/// Legs of length zero (scalar classes with `w_i = 1`) contribute no
/// vertices; zero ranks at the end of a leg are retained.
pub fn build_instance(input: &InstanceInput) -> Result<Instance> {
    if input.n == 0 {
        return Err(Error::InvalidInput("ambient size n must be positive".into()));
    }
    if input.classes.is_empty() {
        return Err(Error::InvalidInput("at least one class is required".into()));
    }
    for (i, c) in input.classes.iter().enumerate() {
        if c.jordan_blocks.is_empty() {
            return Err(Error::InvalidInput(format!("class {i} has no Jordan blocks")));
        }
        let total = c.block_total();
        if total != input.n {
            return Err(Error::InconsistentSize {
                class_index: i,
                block_total: total,
                n: input.n,
            });
        }
    }

    let mut xi = Vec::with_capacity(input.classes.len());
    for (i, c) in input.classes.iter().enumerate() {
        let row = match &c.xi_row {
            Some(row) => {
                if row.is_empty() || !c.row_annihilates(row) {
                    return Err(Error::InvalidXiRow { class_index: i });
                }
                row.clone()
            }
            None => c.minimal_xi_row(),
        };
        xi.push(row);
    }
    let w: Vec<usize> = xi.iter().map(|row| row.len()).collect();

    let legs: Vec<usize> = w.iter().map(|&wi| wi - 1).collect();
    let quiver = Quiver::star(&legs);
    let leg_vertices: Vec<Vec<Vertex>> = (0..legs.len())
        .map(|i| {
            (1..=legs[i])
                .map(|j| {
                    quiver
                        .vertex_by_label(&format!("[{},{}]", i + 1, j))
                        .expect("star layout")
                })
                .collect()
        })
        .collect();

    let mut alpha = DimVector::zeros(quiver.num_vertices());
    alpha.0[0] = input.n as i64;
    for (i, c) in input.classes.iter().enumerate() {
        let ranks = c.rank_sequence(&xi[i]);
        for (j, &r) in ranks.iter().enumerate() {
            alpha.0[leg_vertices[i][j]] = r as i64;
        }
    }

    let mut qparam = vec![UnitScalar::one(); quiver.num_vertices()];
    let mut q0 = UnitScalar::one();
    for row in &xi {
        q0 = q0.mul(&row[0].inv());
    }
    qparam[0] = q0;
    for i in 0..xi.len() {
        for j in 1..w[i] {
            qparam[leg_vertices[i][j - 1]] = xi[i][j - 1].mul(&xi[i][j].inv());
        }
    }

    let mut conductor: u64 = 1;
    for row in &xi {
        for e in row {
            conductor = conductor.lcm(&e.phase_denominator());
        }
    }
    let conductor = u32::try_from(conductor)
        .map_err(|_| Error::InvalidInput("conductor exceeds u32".into()))?;

    Ok(Instance {
        n: input.n,
        classes: input.classes.clone(),
        w,
        xi,
        quiver,
        alpha,
        qparam,
        conductor,
        leg_vertices,
    })
}

impl Instance {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Vertex of `[i+1, j]` for 0-based leg `i` and 1-based depth `j`.
    pub fn leg_vertex(&self, i: usize, j: usize) -> Vertex {
        self.leg_vertices[i][j - 1]
    }

    /// Arrow index of `a[i+1, j]` for 0-based leg `i` and 1-based depth `j`.
    pub fn leg_arrow(&self, i: usize, j: usize) -> usize {
        self.quiver
            .arrow_by_name(&format!("a[{},{}]", i + 1, j))
            .expect("star layout")
    }

    /// Component of `beta` at `[i+1, j]` under the bracket conventions:
    /// depth 0 reads the center, depth `w_i` reads 0.
    fn beta_leg(&self, beta: &DimVector, i: usize, j: usize) -> i64 {
        if j == 0 {
            beta.get(0)
        } else if j >= self.w[i] {
            0
        } else {
            beta.get(self.leg_vertices[i][j - 1])
        }
    }

    /// `xi^[beta] = prod_i prod_j xi_ij ^ (beta_{i,j-1} - beta_{i,j})`, the
    /// eigenvalue-product obstruction attached to a dimension vector.
    pub fn xi_bracket(&self, beta: &DimVector) -> UnitScalar {
        let mut acc = UnitScalar::one();
        for i in 0..self.num_classes() {
            for j in 1..=self.w[i] {
                let exp = self.beta_leg(beta, i, j - 1) - self.beta_leg(beta, i, j);
                acc = acc.mul(&self.xi[i][j - 1].pow(exp));
            }
        }
        acc
    }

    /// `q^beta = prod_v q_v ^ beta_v`.
    pub fn q_power(&self, beta: &DimVector) -> UnitScalar {
        crate::quiver::parameter_power(&self.qparam, beta)
    }

    /// JSON object with the parameter keyed by vertex label.
    pub fn qparam_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (v, q) in self.qparam.iter().enumerate() {
            map.insert(
                self.quiver.label(v).to_string(),
                serde_json::to_value(q).expect("unit scalar serializes"),
            );
        }
        serde_json::Value::Object(map)
    }
}
