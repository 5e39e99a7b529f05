//! Shared helpers for integration tests: fixture loading, a deterministic
//! random stream, and an independent route to the metric quantities via
//! the angle Gram matrix, used to crosscheck the closed-form expressions.

#![allow(dead_code)]

use hyptri::geometry::{edge_index, opposite_edge, AnglePoint, EDGE_VERTS};
use hyptri::triangulation::{parse, ParsedFile};
use nalgebra::Matrix4;

pub fn fixture(name: &str) -> ParsedFile {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"));
    parse(&text).unwrap_or_else(|e| panic!("parse {path}: {e}"))
}

/// Small deterministic generator for test data (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    /// Uniform in (0, 1).
    pub fn unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

/// Gram matrix of the outward unit normals of a truncated tetrahedron
/// with the given six dihedral angles: ones on the diagonal, minus the
/// cosine of the angle at the opposite edge elsewhere.
pub fn gram(tet_angles: &[f64]) -> Matrix4<f64> {
    let mut g = Matrix4::identity();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let e = opposite_edge(edge_index(i, j));
                g[(i, j)] = -tet_angles[e].cos();
            }
        }
    }
    g
}

/// Cofactor route to the vertex quantity: minus the (v,v) cofactor of the
/// Gram matrix.
pub fn vertex_d_gram(tet_angles: &[f64], v: usize) -> f64 {
    let g = gram(tet_angles);
    let minor = g.remove_row(v).remove_column(v);
    let sign = 1.0; // (-1)^{v+v}
    -sign * minor.determinant()
}

/// Inverse-Gram route to internal edge lengths: for the edge joining the
/// truncation planes of vertices m and m', with H the inverse Gram,
/// cosh L = -H[m][m'] / sqrt(H[m][m] H[m'][m']).
pub fn internal_length_gram(tet_angles: &[f64], local_edge: usize) -> f64 {
    let (m, mp) = EDGE_VERTS[local_edge];
    let h = gram(tet_angles).try_inverse().expect("invertible Gram");
    let c = -h[(m, mp)] / (h[(m, m)] * h[(mp, mp)]).sqrt();
    c.acosh()
}

/// Hyperboloid-model route to boundary edge lengths.  Working in the
/// coordinates where the bilinear form has matrix G (the Gram matrix),
/// the m-th truncation plane has unit normal e_m, the corner point of
/// the boundary hexagon on edge {m,m'} at the m side is the foot of the
/// edge on the truncation plane; boundary lengths are acosh of minus the
/// inner product of unit corner points.
pub fn boundary_length_gram(tet_angles: &[f64], e_a: usize, e_b: usize) -> f64 {
    let g = gram(tet_angles);
    let h = g.try_inverse().expect("invertible Gram");
    // Shared vertex m of the two boundary arcs' edges, and far ends.
    let (a0, a1) = EDGE_VERTS[e_a];
    let (b0, b1) = EDGE_VERTS[e_b];
    let m = if a0 == b0 || a0 == b1 { a0 } else { a1 };
    let u = if a0 == m { a1 } else { a0 };
    let w = if b0 == m { b1 } else { b0 };
    let corner = |far: usize| -> nalgebra::Vector4<f64> {
        // Line through truncation-plane poles w_m, w_far; its point on
        // the plane of m is w_far projected off w_m, normalized timelike.
        let wm = h.column(m).into_owned();
        let wf = h.column(far).into_owned();
        let ip = |x: &nalgebra::Vector4<f64>, y: &nalgebra::Vector4<f64>| (x.transpose() * g * y)[(0, 0)];
        let lm = ip(&wm, &wm);
        let p = wf - wm * (ip(&wf, &wm) / lm);
        let norm = -ip(&p, &p);
        p / norm.sqrt()
    };
    let pu = corner(u);
    let pw = corner(w);
    let ip = |x: &nalgebra::Vector4<f64>, y: &nalgebra::Vector4<f64>| (x.transpose() * g * y)[(0, 0)];
    (-ip(&pu, &pw)).acosh()
}

/// In-domain random angle assignment for a single compact tetrahedron:
/// all angles in (0, pi), vertex sums below pi.
pub fn random_compact_angles(rng: &mut TestRng) -> [f64; 6] {
    loop {
        let mut a = [0.0; 6];
        for x in &mut a {
            *x = rng.range(0.2, 1.0);
        }
        let ok = (0..4).all(|v| {
            let s: f64 = hyptri::geometry::vertex_edges(v).iter().map(|&e| a[e]).sum();
            s < std::f64::consts::PI - 0.05
        });
        if ok {
            return a;
        }
    }
}

/// Random angles for a tetrahedron with ideal vertex 3: the three angles
/// at vertex 3 sum to pi, other vertex sums stay below pi.
pub fn random_ideal3_angles(rng: &mut TestRng) -> [f64; 6] {
    use std::f64::consts::PI;
    loop {
        // Edges at vertex 3 are (0,3)=2, (1,3)=4, (2,3)=5.
        let x = rng.range(0.3, 1.2);
        let y = rng.range(0.3, (PI - x - 0.3).min(1.2));
        let z = PI - x - y;
        if !(0.25..=1.25).contains(&z) {
            continue;
        }
        let mut a = [0.0; 6];
        a[2] = x;
        a[4] = y;
        a[5] = z;
        a[0] = rng.range(0.2, 0.9); // edge (0,1)
        a[1] = rng.range(0.2, 0.9); // edge (0,2)
        a[3] = rng.range(0.2, 0.9); // edge (1,2)
        let ok = (0..3).all(|v| {
            let s: f64 = hyptri::geometry::vertex_edges(v).iter().map(|&e| a[e]).sum();
            s < PI - 0.05
        });
        if ok {
            return a;
        }
    }
}

/// Assembles a full angle point for a triangulation from per-tet draws.
pub fn random_point(tri: &hyptri::triangulation::Triangulation, rng: &mut TestRng) -> AnglePoint {
    let mut values = Vec::with_capacity(6 * tri.tets().len());
    for spec in tri.tets() {
        let tet = match spec.ideal {
            None => random_compact_angles(rng),
            Some(3) => random_ideal3_angles(rng),
            Some(v) => {
                // Relabel a vertex-3 draw so the ideal triple lands on v.
                let base = random_ideal3_angles(rng);
                let mut swap = [0usize, 1, 2, 3];
                swap.swap(v, 3);
                let mut a = [0.0; 6];
                for e in 0..6 {
                    let (p, q) = EDGE_VERTS[e];
                    a[e] = base[edge_index(swap[p], swap[q])];
                }
                a
            }
        };
        values.extend_from_slice(&tet);
    }
    AnglePoint::new(values)
}
