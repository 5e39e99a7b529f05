//! Trigonometry of a single partially truncated tetrahedron.
//!
//! Vertices are labeled 0..4 and the labeling (0,1,2,3) is positively
//! oriented; face `f` is the face opposite vertex `f`. All functions here are
//! pure in the six dihedral angles of one tetrahedron plus its optional ideal
//! vertex. Lengths come out of three closed formulas:
//!
//! - a truncation-triangle side (boundary edge) from the three angles at its
//!   vertex, via the angle law of cosines;
//! - an internal edge from the quantity `c` along the edge and the vertex
//!   quantities `d` at its two ends;
//! - the horoball offset `sigma` of an exceptional hexagon from the sinh of
//!   its two boundary edges.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Vertex pairs of the six local edges, in lexicographic order.
pub const EDGE_VERTS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local index of the edge joining vertices `a` and `b`.
pub fn edge_index(a: usize, b: usize) -> usize {
    debug_assert!(a != b && a < 4 && b < 4);
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        _ => 5,
    }
}

/// The edge sharing no vertex with `e`. Lexicographic indexing makes this
/// an involution of the index sum: 01<->23, 02<->13, 03<->12.
pub fn opposite_edge(e: usize) -> usize {
    5 - e
}

/// The three local edges containing vertex `v`.
pub fn vertex_edges(v: usize) -> [usize; 3] {
    let [a, b, c] = oriented_complement(v);
    [edge_index(v, a), edge_index(v, b), edge_index(v, c)]
}

/// The other three vertices in the cyclic order that is positive around `v`:
/// `(v, a, b, c)` is an even permutation of `(0, 1, 2, 3)`.
pub fn oriented_complement(v: usize) -> [usize; 3] {
    match v {
        0 => [1, 2, 3],
        1 => [0, 3, 2],
        2 => [0, 1, 3],
        3 => [0, 2, 1],
        _ => panic!("vertex index out of range"),
    }
}

/// Angle assignment for a whole triangulation: six entries per tetrahedron
/// in `EDGE_VERTS` order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnglePoint {
    pub angles: Vec<f64>,
}

impl AnglePoint {
    pub fn new(angles: Vec<f64>) -> Self {
        assert!(angles.len() % 6 == 0, "angle vector length must be 6t");
        AnglePoint { angles }
    }

    pub fn tets(&self) -> usize {
        self.angles.len() / 6
    }

    pub fn tet_angles(&self, tet: usize) -> &[f64; 6] {
        self.angles[6 * tet..6 * tet + 6].try_into().unwrap()
    }

    pub fn get(&self, tet: usize, local_edge: usize) -> f64 {
        self.angles[6 * tet + local_edge]
    }
}

/// acosh with the near-1 band collapsed to length 0; arguments further below
/// 1 are domain errors, not silent clamps.
pub fn acosh_clamped(t: f64) -> Result<f64> {
    if t >= 1.0 {
        Ok(t.acosh())
    } else if t >= 1.0 - tol::ACOSH_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::domain(format!("acosh argument {t} below 1")))
    }
}

/// Sum of the three dihedral angles at vertex `v`.
pub fn vertex_angle_sum(angles: &[f64; 6], v: usize) -> f64 {
    vertex_edges(v).iter().map(|&e| angles[e]).sum()
}

/// Vertex quantity `d`: positive iff the angle sum at `v` is below pi
/// (truncatable vertex), zero at an ideal vertex.
pub fn vertex_d(angles: &[f64; 6], v: usize) -> f64 {
    let [e1, e2, e3] = vertex_edges(v);
    let (c1, c2, c3) = (angles[e1].cos(), angles[e2].cos(), angles[e3].cos());
    2.0 * c1 * c2 * c3 + c1 * c1 + c2 * c2 + c3 * c3 - 1.0
}

/// Edge quantity `c` along edge `e`; the numerator of cosh of the internal
/// edge length.
pub fn edge_c(angles: &[f64; 6], e: usize) -> f64 {
    let (p, q) = EDGE_VERTS[e];
    // r, s: the two vertices off the edge. The formula is symmetric in them.
    let mut others = [0usize; 2];
    let mut k = 0;
    for v in 0..4 {
        if v != p && v != q {
            others[k] = v;
            k += 1;
        }
    }
    let [r, s] = others;
    let c = |a: usize, b: usize| angles[edge_index(a, b)].cos();
    let t1 = angles[e].cos();
    let sin1 = angles[e].sin();
    // Opposite pairs ride with cos(theta_e); face-sharing pairs do not.
    t1 * (c(p, s) * c(q, r) + c(p, r) * c(q, s))
        + c(p, r) * c(q, r)
        + c(p, s) * c(q, s)
        + c(r, s) * sin1 * sin1
}

/// cosh of the truncation-triangle side at the common vertex of edges
/// `e_a`, `e_b` (no clamping; may be below 1 outside the moduli domain).
fn cosh_boundary_edge(angles: &[f64; 6], e_a: usize, e_b: usize) -> Result<f64> {
    let (m, _, _) = boundary_edge_corner(e_a, e_b)?;
    let [f1, f2, f3] = vertex_edges(m);
    // The third edge at the corner vertex supplies the opposite angle.
    let e_c = f1 + f2 + f3 - e_a - e_b;
    let (ta, tb, tc) = (angles[e_a], angles[e_b], angles[e_c]);
    Ok((ta.cos() * tb.cos() + tc.cos()) / (ta.sin() * tb.sin()))
}

/// Common vertex and far endpoints of a pair of distinct non-opposite edges.
pub fn boundary_edge_corner(e_a: usize, e_b: usize) -> Result<(usize, usize, usize)> {
    if e_a == e_b || e_b == opposite_edge(e_a) {
        return Err(Error::usage(format!(
            "edges {e_a} and {e_b} do not span a boundary edge"
        )));
    }
    let (a1, a2) = EDGE_VERTS[e_a];
    let (b1, b2) = EDGE_VERTS[e_b];
    let m = if a1 == b1 || a1 == b2 { a1 } else { a2 };
    let u = a1 + a2 - m;
    let w = b1 + b2 - m;
    Ok((m, u, w))
}

/// Length of the boundary edge cut out at the common vertex of `e_a`, `e_b`.
/// Zero when that vertex is ideal.
pub fn boundary_edge_length(
    angles: &[f64; 6],
    ideal: Option<usize>,
    e_a: usize,
    e_b: usize,
) -> Result<f64> {
    let (m, _, _) = boundary_edge_corner(e_a, e_b)?;
    if ideal == Some(m) {
        return Ok(0.0);
    }
    acosh_clamped(cosh_boundary_edge(angles, e_a, e_b)?)
}

/// Length of the internal edge `e` between its two truncation triangles.
/// Both endpoints must be non-ideal.
pub fn internal_edge_length(angles: &[f64; 6], ideal: Option<usize>, e: usize) -> Result<f64> {
    let (p, q) = EDGE_VERTS[e];
    if ideal == Some(p) || ideal == Some(q) {
        return Err(Error::usage(format!(
            "internal edge {e} has an ideal end; its length is infinite"
        )));
    }
    let dp = vertex_d(angles, p);
    let dq = vertex_d(angles, q);
    if dp <= 0.0 || dq <= 0.0 {
        return Err(Error::domain(format!(
            "vertex quantity d not positive at an end of edge {e} (d={dp}, d={dq})"
        )));
    }
    acosh_clamped(edge_c(angles, e) / (dp * dq).sqrt())
}

/// Modulus of the cusp cross-section triangle at its corner on edge
/// `(v, w)`, where `v` is the ideal vertex: `(sin t2 / sin t3) e^{i t1}` for
/// the positively arranged edges `(v,w), (v,s), (v,t)` around `v`.
pub fn triangle_modulus(angles: &[f64; 6], v: usize, w: usize) -> Result<Complex64> {
    if w == v || w > 3 || v > 3 {
        return Err(Error::usage(format!("bad corner edge ({v}, {w})")));
    }
    let cyc = oriented_complement(v);
    let pos = cyc
        .iter()
        .position(|&x| x == w)
        .expect("w is one of the three other vertices");
    let s = cyc[(pos + 1) % 3];
    let t = cyc[(pos + 2) % 3];
    let t1 = angles[edge_index(v, w)];
    let t2 = angles[edge_index(v, s)];
    let t3 = angles[edge_index(v, t)];
    Ok(Complex64::from_polar(t2.sin() / t3.sin(), t1))
}

/// An exceptional hexagon: a face of a tetrahedron containing its ideal
/// vertex. `e1` follows and `e2` precedes the ideal vertex in the positively
/// oriented boundary cycle of the face, so that the three hexagons of one
/// tetrahedron telescope: sigma(F1) + sigma(F2) + sigma(F3) = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HexagonRef {
    /// Face index (the opposite vertex).
    pub face: usize,
    /// The ideal vertex, lying on this face.
    pub ideal_vertex: usize,
    /// Internal edge from the ideal vertex to the next face vertex.
    pub e1: usize,
    /// Internal edge from the ideal vertex to the previous face vertex.
    pub e2: usize,
    /// The compact edge of the face, opposite the ideal vertex.
    pub e6: usize,
}

impl HexagonRef {
    /// The hexagon of face `face` in a tetrahedron whose ideal vertex is `v`.
    pub fn new(face: usize, v: usize) -> Result<Self> {
        if face == v || face > 3 || v > 3 {
            return Err(Error::usage(format!(
                "face {face} does not contain ideal vertex {v}"
            )));
        }
        let cyc = oriented_complement(face);
        let pos = cyc.iter().position(|&x| x == v).unwrap();
        let next = cyc[(pos + 1) % 3];
        let prev = cyc[(pos + 2) % 3];
        Ok(HexagonRef {
            face,
            ideal_vertex: v,
            e1: edge_index(v, next),
            e2: edge_index(v, prev),
            e6: edge_index(prev, next),
        })
    }

    /// The same hexagon with the opposite boundary orientation; sigma flips
    /// sign.
    pub fn reversed(&self) -> Self {
        HexagonRef {
            face: self.face,
            ideal_vertex: self.ideal_vertex,
            e1: self.e2,
            e2: self.e1,
            e6: self.e6,
        }
    }
}

/// The three exceptional hexagons of a tetrahedron with ideal vertex `v`,
/// ordered by face index.
pub fn hexagons_at_ideal_vertex(v: usize) -> [HexagonRef; 3] {
    let mut out = Vec::with_capacity(3);
    for f in 0..4 {
        if f != v {
            out.push(HexagonRef::new(f, v).unwrap());
        }
    }
    out.try_into().unwrap()
}

/// Horoball offset of an exceptional hexagon:
/// `ln(sinh L(e16) / sinh L(e26))` for the boundary edges adjacent to `e1`
/// and `e2`. Uses `sinh(acosh x) = sqrt(x^2 - 1)` to avoid a second
/// transcendental.
pub fn sigma(angles: &[f64; 6], hex: &HexagonRef) -> Result<f64> {
    let c1 = cosh_boundary_edge(angles, hex.e1, hex.e6)?;
    let c2 = cosh_boundary_edge(angles, hex.e2, hex.e6)?;
    if c1 <= 1.0 || c2 <= 1.0 {
        return Err(Error::domain(format!(
            "degenerate boundary edge on hexagon at face {} (cosh {c1}, {c2})",
            hex.face
        )));
    }
    Ok(0.5 * ((c1 * c1 - 1.0).ln() - (c2 * c2 - 1.0).ln()))
}

/// Length of the compact edge `e6` of an exceptional hexagon.
pub fn hexagon_compact_edge_length(
    angles: &[f64; 6],
    ideal: Option<usize>,
    hex: &HexagonRef,
) -> Result<f64> {
    internal_edge_length(angles, ideal, hex.e6)
}
