//! Quivers, dimension vectors, the Tits form and root classification.
//!
//! A quiver here is a finite directed graph with named vertices and named
//! arrows; loops and parallel arrows are allowed. The double of a quiver has
//! one reversed partner `a*` per arrow `a`, and carries a total order on the
//! `2m` doubled arrows; the order enters the multiplicative relations, so it
//! is part of the data and travels with every representation.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::UnitScalar;
use crate::{Error, Result};

/// Vertex index into the quiver's label table.
pub type Vertex = usize;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Arrow {
    pub name: String,
    pub head: Vertex,
    pub tail: Vertex,
}

/// One of the two halves of a doubled arrow: the arrow itself or its star.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct DArrow {
    pub arrow: usize,
    pub starred: bool,
}

impl DArrow {
    pub fn plain(arrow: usize) -> Self {
        DArrow {
            arrow,
            starred: false,
        }
    }

    pub fn star(arrow: usize) -> Self {
        DArrow {
            arrow,
            starred: true,
        }
    }

    pub fn partner(self) -> Self {
        DArrow {
            arrow: self.arrow,
            starred: !self.starred,
        }
    }

    /// +1 for an original arrow, -1 for a starred one: the exponent of its
    /// factor in the vertex relations.
    pub fn sign(self) -> i64 {
        if self.starred {
            -1
        } else {
            1
        }
    }
}

/// Integer vector indexed by the vertices of a quiver. Dimension vectors are
/// nonnegative; negative components appear only transiently inside
/// reflection arithmetic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DimVector(pub Vec<i64>);

impl DimVector {
    pub fn zeros(len: usize) -> Self {
        DimVector(vec![0; len])
    }

    /// Coordinate vector at `v`.
    pub fn unit(len: usize, v: Vertex) -> Self {
        let mut d = DimVector::zeros(len);
        d.0[v] = 1;
        d
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: Vertex) -> i64 {
        self.0[v]
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&x| x >= 0)
    }

    /// Componentwise `<=`.
    pub fn le(&self, rhs: &DimVector) -> bool {
        self.0.iter().zip(&rhs.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, rhs: &DimVector) -> DimVector {
        DimVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, rhs: &DimVector) -> DimVector {
        DimVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }

    /// Index of the unique nonzero component when the vector is a coordinate
    /// vector.
    pub fn as_unit(&self) -> Option<Vertex> {
        let mut found = None;
        for (v, &x) in self.0.iter().enumerate() {
            match x {
                0 => {}
                1 if found.is_none() => found = Some(v),
                _ => return None,
            }
        }
        found
    }
}

impl fmt::Debug for DimVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Classification of an integer vector against the root system of a quiver.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootKind {
    Real,
    Imaginary,
    NotARoot,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Quiver {
    labels: Vec<String>,
    arrows: Vec<Arrow>,
    double_order: Vec<DArrow>,
}

impl Quiver {
    /// Builds a quiver with an explicit total order on the doubled arrows.
    pub fn new(labels: Vec<String>, arrows: Vec<Arrow>, double_order: Vec<DArrow>) -> Result<Self> {
        let q = Quiver {
            labels,
            arrows,
            double_order,
        };
        q.validate()?;
        Ok(q)
    }

    /// Default order: all original arrows in declaration order, then all
    /// starred arrows in declaration order.
    pub fn with_default_order(labels: Vec<String>, arrows: Vec<Arrow>) -> Result<Self> {
        let order = (0..arrows.len())
            .map(DArrow::plain)
            .chain((0..arrows.len()).map(DArrow::star))
            .collect();
        Self::new(labels, arrows, order)
    }

    fn validate(&self) -> Result<()> {
        for (i, a) in self.arrows.iter().enumerate() {
            if a.head >= self.labels.len() || a.tail >= self.labels.len() {
                return Err(Error::InvalidInput(format!(
                    "arrow {} ({}) references a vertex out of range",
                    i, a.name
                )));
            }
        }
        let mut names: Vec<&str> = self.arrows.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.arrows.len() {
            return Err(Error::InvalidInput("duplicate arrow names".into()));
        }
        let mut labels: Vec<&str> = self.labels.iter().map(|s| s.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.labels.len() {
            return Err(Error::InvalidInput("duplicate vertex labels".into()));
        }
        if self.double_order.len() != 2 * self.arrows.len() {
            return Err(Error::InvalidInput(
                "double order must list every doubled arrow exactly once".into(),
            ));
        }
        let mut seen = vec![false; 2 * self.arrows.len()];
        for d in &self.double_order {
            if d.arrow >= self.arrows.len() {
                return Err(Error::InvalidInput("double order references unknown arrow".into()));
            }
            let slot = d.arrow * 2 + usize::from(d.starred);
            if seen[slot] {
                return Err(Error::InvalidInput("double order repeats a doubled arrow".into()));
            }
            seen[slot] = true;
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn label(&self, v: Vertex) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<Vertex> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn arrow(&self, i: usize) -> &Arrow {
        &self.arrows[i]
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn arrow_by_name(&self, name: &str) -> Option<usize> {
        self.arrows.iter().position(|a| a.name == name)
    }

    pub fn double_order(&self) -> &[DArrow] {
        &self.double_order
    }

    /// Head of a doubled arrow (tail of the underlying arrow when starred).
    pub fn head(&self, d: DArrow) -> Vertex {
        let a = &self.arrows[d.arrow];
        if d.starred {
            a.tail
        } else {
            a.head
        }
    }

    pub fn tail(&self, d: DArrow) -> Vertex {
        let a = &self.arrows[d.arrow];
        if d.starred {
            a.head
        } else {
            a.tail
        }
    }

    pub fn darrow_name(&self, d: DArrow) -> String {
        let base = &self.arrows[d.arrow].name;
        if d.starred {
            format!("{base}*")
        } else {
            base.clone()
        }
    }

    pub fn has_loop(&self, v: Vertex) -> bool {
        self.arrows.iter().any(|a| a.head == v && a.tail == v)
    }

    /// Doubled arrows with head `v`, in double-order; these index the factors
    /// of the relation at `v` from left to right.
    pub fn double_arrows_with_head(&self, v: Vertex) -> Vec<DArrow> {
        self.double_order
            .iter()
            .copied()
            .filter(|&d| self.head(d) == v)
            .collect()
    }

    /// Tits form `q(a) = sum_v a_v^2 - sum_{arrows} a_head * a_tail`.
    pub fn tits_form(&self, alpha: &DimVector) -> i64 {
        assert_eq!(alpha.len(), self.num_vertices(), "dimension vector length");
        let square: i64 = alpha.0.iter().map(|&x| x * x).sum();
        let cross: i64 = self
            .arrows
            .iter()
            .map(|a| alpha.get(a.head) * alpha.get(a.tail))
            .sum();
        square - cross
    }

    /// `p(a) = 1 - q(a)`: zero on real roots, positive on imaginary ones.
    pub fn p(&self, alpha: &DimVector) -> i64 {
        1 - self.tits_form(alpha)
    }

    /// Symmetric bilinear form `(a, b) = q(a+b) - q(a) - q(b)`, computed
    /// directly.
    pub fn bilinear(&self, alpha: &DimVector, beta: &DimVector) -> i64 {
        assert_eq!(alpha.len(), self.num_vertices());
        assert_eq!(beta.len(), self.num_vertices());
        let diag: i64 = alpha
            .0
            .iter()
            .zip(&beta.0)
            .map(|(a, b)| 2 * a * b)
            .sum();
        let cross: i64 = self
            .arrows
            .iter()
            .map(|a| alpha.get(a.head) * beta.get(a.tail) + alpha.get(a.tail) * beta.get(a.head))
            .sum();
        diag - cross
    }

    /// `(a, e_v)` without materializing the coordinate vector.
    pub fn pairing_with_unit(&self, alpha: &DimVector, v: Vertex) -> i64 {
        let mut acc = 2 * alpha.get(v);
        for a in &self.arrows {
            if a.head == v {
                acc -= alpha.get(a.tail);
            }
            if a.tail == v {
                acc -= alpha.get(a.head);
            }
        }
        acc
    }

    /// Simple reflection `s_v(a) = a - (a, e_v) e_v`; only defined at
    /// loop-free vertices.
    pub fn reflect(&self, v: Vertex, alpha: &DimVector) -> Result<DimVector> {
        if self.has_loop(v) {
            return Err(Error::LoopAtVertex {
                vertex: self.label(v).to_string(),
            });
        }
        let mut out = alpha.clone();
        out.0[v] -= self.pairing_with_unit(alpha, v);
        Ok(out)
    }

    /// Whether the support of `beta` induces a connected subgraph.
    pub fn support_connected(&self, beta: &DimVector) -> bool {
        let support: Vec<Vertex> = (0..self.num_vertices()).filter(|&v| beta.get(v) != 0).collect();
        if support.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.num_vertices()];
        let mut queue = VecDeque::from([support[0]]);
        seen[support[0]] = true;
        while let Some(u) = queue.pop_front() {
            for a in &self.arrows {
                for (x, y) in [(a.head, a.tail), (a.tail, a.head)] {
                    if x == u && beta.get(y) != 0 && !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        support.into_iter().all(|v| seen[v])
    }

    /// Classifies `beta` against the positive roots: repeatedly reflect down
    /// at the least loop-free vertex pairing positively. Reaching a
    /// coordinate vector at a loop-free vertex means a real root; stalling in
    /// the fundamental region (connected support, no positive pairing) means
    /// imaginary; leaving the nonnegative orthant or disconnecting means not
    /// a root. The component sum strictly decreases at every step, so the
    /// loop terminates.
    pub fn is_positive_root(&self, beta: &DimVector) -> RootKind {
        assert_eq!(beta.len(), self.num_vertices(), "dimension vector length");
        if beta.is_zero() {
            return RootKind::NotARoot;
        }
        let mut beta = beta.clone();
        loop {
            if !beta.is_nonnegative() {
                return RootKind::NotARoot;
            }
            if let Some(v) = beta.as_unit() {
                if !self.has_loop(v) {
                    return RootKind::Real;
                }
            }
            // At a vertex with a loop the pairing with a nonnegative vector
            // is never positive, so restricting the search to loop-free
            // vertices loses nothing.
            let pivot = (0..self.num_vertices())
                .find(|&v| !self.has_loop(v) && self.pairing_with_unit(&beta, v) > 0);
            match pivot {
                Some(v) => {
                    let next = self.reflect(v, &beta).expect("pivot is loop-free");
                    assert!(next.sum() < beta.sum(), "reflection must shrink the sum");
                    beta = next;
                }
                None => {
                    // Fundamental region candidate.
                    return if self.support_connected(&beta) {
                        RootKind::Imaginary
                    } else {
                        RootKind::NotARoot
                    };
                }
            }
        }
    }

    /// Star quiver with `legs[i]` vertices on leg `i`, every arrow pointing
    /// at the center. Vertex 0 is the center labeled "0"; leg vertex `[i,j]`
    /// (1-based leg, 1-based depth) carries the arrow `a[i,j]` from `[i,j]`
    /// to `[i,j-1]` with `[i,0]` the center. The double order lists original
    /// arrows by depth then leg, then all starred arrows likewise; this
    /// places `a[1,1] < a[2,1] < ... < a[k,1]` as the relation at the center
    /// requires, and at each leg vertex the incoming original arrow before
    /// the outgoing starred one.
    pub fn star(legs: &[usize]) -> Quiver {
        let mut labels = vec!["0".to_string()];
        let mut index = vec![Vec::new(); legs.len()];
        for (i, &len) in legs.iter().enumerate() {
            for j in 1..=len {
                index[i].push(labels.len());
                labels.push(format!("[{},{}]", i + 1, j));
            }
        }
        let mut arrows = Vec::new();
        let max_depth = legs.iter().copied().max().unwrap_or(0);
        for j in 1..=max_depth {
            for (i, &len) in legs.iter().enumerate() {
                if j <= len {
                    let tail = index[i][j - 1];
                    let head = if j == 1 { 0 } else { index[i][j - 2] };
                    arrows.push(Arrow {
                        name: format!("a[{},{}]", i + 1, j),
                        head,
                        tail,
                    });
                }
            }
        }
        Quiver::with_default_order(labels, arrows).expect("star quiver is always valid")
    }

    /// JSON object keyed by vertex label, in vertex order.
    pub fn dims_to_json(&self, dims: &DimVector) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (v, label) in self.labels.iter().enumerate() {
            map.insert(label.clone(), serde_json::Value::from(dims.get(v)));
        }
        serde_json::Value::Object(map)
    }

    pub fn dims_from_json(&self, value: &serde_json::Value) -> Result<DimVector> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidInput("dimension vector must be a JSON object".into()))?;
        let mut dims = DimVector::zeros(self.num_vertices());
        for (key, val) in obj {
            let v = self
                .vertex_by_label(key)
                .ok_or_else(|| Error::InvalidInput(format!("unknown vertex label {key:?}")))?;
            dims.0[v] = val
                .as_i64()
                .ok_or_else(|| Error::InvalidInput(format!("component {key:?} is not an integer")))?;
        }
        Ok(dims)
    }
}

/// `q^beta = prod_v q_v ^ beta_v` for a parameter given per vertex.
pub fn parameter_power(q: &[UnitScalar], beta: &DimVector) -> UnitScalar {
    assert_eq!(q.len(), beta.len(), "parameter and dimension vector lengths");
    let mut acc = UnitScalar::one();
    for (qv, &b) in q.iter().zip(&beta.0) {
        acc = acc.mul(&qv.pow(b));
    }
    acc
}

/// The reflected parameter at a loopfree vertex: component `w` becomes
/// `q_v ^ -(e_v, e_w) * q_w`. Dual to the reflection of dimension vectors:
/// `reflect_parameter(q, v) ^ reflect(v, beta) = q ^ beta`.
pub fn reflect_parameter(quiver: &Quiver, v: Vertex, q: &[UnitScalar]) -> Result<Vec<UnitScalar>> {
    if quiver.has_loop(v) {
        return Err(Error::LoopAtVertex {
            vertex: quiver.label(v).to_string(),
        });
    }
    assert_eq!(q.len(), quiver.num_vertices());
    let unit_v = DimVector::unit(q.len(), v);
    Ok((0..quiver.num_vertices())
        .map(|w| {
            let exp = -quiver.pairing_with_unit(&unit_v, w);
            q[v].pow(exp).mul(&q[w])
        })
        .collect())
}

impl Serialize for Quiver {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        #[derive(Serialize)]
        struct ArrowJson<'a> {
            name: &'a str,
            head: &'a str,
            tail: &'a str,
        }
        let arrows: Vec<ArrowJson> = self
            .arrows
            .iter()
            .map(|a| ArrowJson {
                name: &a.name,
                head: self.label(a.head),
                tail: self.label(a.tail),
            })
            .collect();
        let order: Vec<String> = self.double_order.iter().map(|&d| self.darrow_name(d)).collect();
        let mut st = serializer.serialize_struct("Quiver", 3)?;
        st.serialize_field("vertices", &self.labels)?;
        st.serialize_field("arrows", &arrows)?;
        st.serialize_field("double_order", &order)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Quiver {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct ArrowRaw {
            name: String,
            head: String,
            tail: String,
        }
        #[derive(Deserialize)]
        struct Raw {
            vertices: Vec<String>,
            arrows: Vec<ArrowRaw>,
            double_order: Option<Vec<String>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let find = |label: &str| -> std::result::Result<usize, D::Error> {
            raw.vertices
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown vertex label {label:?}")))
        };
        let mut arrows = Vec::with_capacity(raw.arrows.len());
        for a in &raw.arrows {
            arrows.push(Arrow {
                name: a.name.clone(),
                head: find(&a.head)?,
                tail: find(&a.tail)?,
            });
        }
        let quiver = match raw.double_order {
            None => Quiver::with_default_order(raw.vertices, arrows),
            Some(order_names) => {
                let mut order = Vec::with_capacity(order_names.len());
                for name in &order_names {
                    let (base, starred) = match name.strip_suffix('*') {
                        Some(base) => (base, true),
                        None => (name.as_str(), false),
                    };
                    let idx = arrows
                        .iter()
                        .position(|a| a.name == base)
                        .ok_or_else(|| {
                            serde::de::Error::custom(format!("unknown arrow {base:?} in double_order"))
                        })?;
                    order.push(DArrow {
                        arrow: idx,
                        starred,
                    });
                }
                Quiver::new(raw.vertices, arrows, order)
            }
        };
        quiver.map_err(serde::de::Error::custom)
    }
}
