//! Shared fixtures for the integration suite: rigid instances over several
//! conductors, their constructed representations, a transported corpus of
//! fifty-plus valid representations, and independent brute-force oracles for
//! root classification and decomposition maxima.

use std::collections::{HashMap, VecDeque};

use mpa::arith::Rational;
use mpa::arith::UnitScalar;
use mpa::construct::{build_rigid_rep, reduction_path};
use mpa::criterion::{RootCatalog, DEFAULT_BUDGET};
use mpa::instance::{build_instance, ClassSpec, Instance, InstanceInput};
use mpa::quiver::{Arrow, DimVector, Quiver, RootKind, Vertex};
use mpa::rep::{direct_sum, reverse_arrow, swap_adjacent_order, Rep};

pub fn unit_phase(num: i64, den: i64) -> UnitScalar {
    UnitScalar::new(Rational::integer(1), Rational::new(num, den)).unwrap()
}

pub fn positive(num: i64, den: i64) -> UnitScalar {
    UnitScalar::new(Rational::new(num, den), Rational::integer(0)).unwrap()
}

/// Semisimple class whose eigenvalues are roots of unity at the given phases.
pub fn phase_class(phases: &[(i64, i64)]) -> ClassSpec {
    let eigenvalues: Vec<UnitScalar> =
        phases.iter().map(|&(n, d)| unit_phase(n, d)).collect();
    ClassSpec::semisimple(&eigenvalues)
}

pub fn instance(n: usize, classes: Vec<ClassSpec>) -> Instance {
    build_instance(&InstanceInput { n, classes }).expect("valid instance")
}

/// Two reflections and a quarter turn in GL_2; conductor 4, alpha (2,1,1,1).
pub fn d4() -> Instance {
    instance(
        2,
        vec![
            phase_class(&[(0, 1), (1, 2)]),
            phase_class(&[(0, 1), (1, 2)]),
            phase_class(&[(1, 4), (3, 4)]),
        ],
    )
}

/// One-vertex instance: the scalars 2 and 1/2 in GL_1.
pub fn scalars() -> Instance {
    instance(
        1,
        vec![
            ClassSpec::semisimple(&[positive(2, 1)]),
            ClassSpec::semisimple(&[positive(1, 2)]),
        ],
    )
}

/// Sixth roots of unity in the third class; conductor 6.
pub fn zeta6() -> Instance {
    instance(
        2,
        vec![
            phase_class(&[(0, 1), (1, 2)]),
            phase_class(&[(0, 1), (1, 2)]),
            phase_class(&[(1, 6), (5, 6)]),
        ],
    )
}

/// Eighth roots of unity in the third class; conductor 8.
pub fn zeta8() -> Instance {
    instance(
        2,
        vec![
            phase_class(&[(0, 1), (1, 2)]),
            phase_class(&[(1, 4), (3, 4)]),
            phase_class(&[(1, 8), (3, 8)]),
        ],
    )
}

/// A GL_3 instance with legs of lengths 1, 2 and 2; conductor 12,
/// alpha (3,1,2,1,2,1).
pub fn hyper3() -> Instance {
    instance(
        3,
        vec![
            phase_class(&[(0, 1), (0, 1), (1, 2)]),
            phase_class(&[(0, 1), (1, 4), (3, 4)]),
            phase_class(&[(1, 2), (1, 3), (2, 3)]),
        ],
    )
}

/// Three involution classes in GL_2: obstructed, q^alpha = -1.
pub fn three_involutions() -> Instance {
    instance(2, vec![phase_class(&[(0, 1), (1, 2)]); 3])
}

/// Four involution classes in GL_2: solvable, alpha an imaginary root.
pub fn four_involutions() -> Instance {
    instance(2, vec![phase_class(&[(0, 1), (1, 2)]); 4])
}

/// The five rigid instances, spanning conductors 1, 4, 6, 8 and 12.
pub fn rigid_instances() -> Vec<(&'static str, Instance)> {
    vec![
        ("d4", d4()),
        ("scalars", scalars()),
        ("zeta6", zeta6()),
        ("zeta8", zeta8()),
        ("hyper3", hyper3()),
    ]
}

/// Builds the rigid representation of every rigid instance.
pub fn constructed_rigids() -> Vec<(&'static str, Instance, Rep)> {
    rigid_instances()
        .into_iter()
        .map(|(name, inst)| {
            let path = reduction_path(&inst, DEFAULT_BUDGET).expect("instance is rigid");
            let rep = build_rigid_rep(&inst, &path).expect("construction succeeds");
            (name, inst, rep)
        })
        .collect()
}

/// At least fifty valid representations: each constructed rigid together
/// with its arrow reversals, a double reversal, every adjacent order swap
/// and the direct sum with itself.
pub fn rep_corpus() -> Vec<(String, Rep)> {
    let mut corpus: Vec<(String, Rep)> = Vec::new();
    for (name, _inst, rep) in constructed_rigids() {
        let quiver = rep.quiver().clone();
        corpus.push((name.to_string(), rep.clone()));
        for a in 0..quiver.num_arrows() {
            let reversed = reverse_arrow(&rep, a).expect("reversal succeeds");
            corpus.push((
                format!("{name} reversed at {}", quiver.arrow(a).name),
                reversed.clone(),
            ));
            if a == 0 {
                let doubled = reverse_arrow(&reversed, a).expect("double reversal");
                corpus.push((format!("{name} double-reversed"), doubled));
            }
        }
        let order_len = quiver.double_order().len();
        for pos in 0..order_len.saturating_sub(1) {
            match swap_adjacent_order(&rep, pos) {
                Ok(swapped) => corpus.push((format!("{name} swapped at {pos}"), swapped)),
                // A plain arrow next to its own star cannot be transposed.
                Err(mpa::Error::AdjacentLoopPair { .. }) => {}
                Err(e) => panic!("unexpected swap failure for {name} at {pos}: {e}"),
            }
        }
        if order_len >= 3 {
            let chained = swap_adjacent_order(&swap_adjacent_order(&rep, 0).unwrap(), 1)
                .expect("chained swap");
            corpus.push((format!("{name} swapped at 0 then 1"), chained));
        }
        let sum = direct_sum(&rep, &rep).expect("same setting");
        corpus.push((format!("{name} plus itself"), sum));
    }
    assert!(
        corpus.len() >= 50,
        "corpus holds only {} representations",
        corpus.len()
    );
    corpus
}

/// Three loop-free quivers on four vertices: a star, a path and a cycle.
pub fn four_vertex_quivers() -> Vec<(&'static str, Quiver)> {
    let arrow = |name: &str, head: Vertex, tail: Vertex| Arrow {
        name: name.into(),
        head,
        tail,
    };
    let labels = |base: &str| -> Vec<String> {
        (0..4).map(|i| format!("{base}{i}")).collect()
    };
    let star = Quiver::with_default_order(
        labels("s"),
        vec![arrow("a", 0, 1), arrow("b", 0, 2), arrow("c", 0, 3)],
    )
    .unwrap();
    let path = Quiver::with_default_order(
        labels("p"),
        vec![arrow("a", 0, 1), arrow("b", 1, 2), arrow("c", 2, 3)],
    )
    .unwrap();
    let cycle = Quiver::with_default_order(
        labels("c"),
        vec![
            arrow("a", 1, 0),
            arrow("b", 2, 1),
            arrow("c", 3, 2),
            arrow("d", 0, 3),
        ],
    )
    .unwrap();
    vec![("star", star), ("path", path), ("cycle", cycle)]
}

/// Every vector in the box `0 <= beta <= corner`, zero included.
pub fn box_vectors(corner: &DimVector) -> Vec<DimVector> {
    let mut all = vec![DimVector::zeros(corner.len())];
    for v in 0..corner.len() {
        let mut next = Vec::new();
        for base in &all {
            for x in 0..=corner.get(v) {
                let mut b = base.clone();
                b.0[v] = x;
                next.push(b);
            }
        }
        all = next;
    }
    all
}

fn connected_support(quiver: &Quiver, beta: &DimVector) -> bool {
    let support: Vec<Vertex> = (0..beta.len()).filter(|&v| beta.get(v) != 0).collect();
    let Some(&start) = support.first() else {
        return false;
    };
    let mut seen = vec![false; beta.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for i in 0..quiver.num_arrows() {
            let a = quiver.arrow(i);
            for (x, y) in [(a.head, a.tail), (a.tail, a.head)] {
                if x == v && beta.get(y) != 0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    support.into_iter().all(|v| seen[v])
}

/// Fundamental-region test: nonzero, nonnegative, connected support, and
/// nonpositive pairing with every coordinate vector.
fn in_fundamental_region(quiver: &Quiver, beta: &DimVector) -> bool {
    if beta.is_zero() || !beta.is_nonnegative() {
        return false;
    }
    if (0..quiver.num_vertices()).any(|v| quiver.pairing_with_unit(beta, v) > 0) {
        return false;
    }
    connected_support(quiver, beta)
}

/// Brute-force enumeration of the positive roots inside a box, independent
/// of the library's per-vector classifier. Real roots grow from coordinate
/// vectors and imaginary ones from fundamental-region vectors, by
/// reflections that increase the changed coordinate. This is exhaustive:
/// the height descent from any root in the box lowers one coordinate at a
/// time, so the whole descent stays inside the box.
pub fn oracle_roots(quiver: &Quiver, corner: &DimVector) -> HashMap<DimVector, RootKind> {
    let nv = quiver.num_vertices();
    assert!(
        (0..nv).all(|v| !quiver.has_loop(v)),
        "oracle assumes a loop-free quiver"
    );
    let mut kinds: HashMap<DimVector, RootKind> = HashMap::new();
    let mut queue: VecDeque<DimVector> = VecDeque::new();

    for v in 0..nv {
        let e = DimVector::unit(nv, v);
        if e.le(corner) {
            kinds.insert(e.clone(), RootKind::Real);
            queue.push_back(e);
        }
    }
    for beta in box_vectors(corner) {
        if in_fundamental_region(quiver, &beta) && !kinds.contains_key(&beta) {
            kinds.insert(beta.clone(), RootKind::Imaginary);
            queue.push_back(beta);
        }
    }
    while let Some(beta) = queue.pop_front() {
        let kind = kinds[&beta];
        for v in 0..nv {
            let image = quiver.reflect(v, &beta).expect("loop-free");
            if image.get(v) > beta.get(v) && image.le(corner) && !kinds.contains_key(&image) {
                kinds.insert(image.clone(), kind);
                queue.push_back(image);
            }
        }
    }
    kinds
}

/// Exhaustive maximum of `sum p(parts)` over multisets of at least two
/// q-null roots summing to the catalog's alpha.
pub fn oracle_max_decomposition(catalog: &RootCatalog) -> Option<i64> {
    fn search(
        null: &[(&DimVector, i64)],
        from: usize,
        remaining: &DimVector,
        parts: usize,
        acc: i64,
        best: &mut Option<i64>,
    ) {
        if remaining.is_zero() {
            if parts >= 2 && best.is_none_or(|b| acc > b) {
                *best = Some(acc);
            }
            return;
        }
        for i in from..null.len() {
            let (beta, p) = null[i];
            if beta.le(remaining) {
                search(null, i, &remaining.sub(beta), parts + 1, acc + p, best);
            }
        }
    }
    let null: Vec<(&DimVector, i64)> =
        catalog.q_null_roots().map(|r| (&r.beta, r.p)).collect();
    let mut best = None;
    search(&null, 0, &catalog.alpha, 0, 0, &mut best);
    best
}
