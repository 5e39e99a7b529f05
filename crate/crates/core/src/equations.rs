//! The reduced equation system on the moduli of angle assignments.
//!
//! Moduli chart: every tetrahedron contributes its six dihedral angles,
//! but in a tetrahedron with an ideal vertex the three angles there sum
//! to pi, so the lexicographically smallest edge at the ideal vertex is
//! eliminated and recovered as pi minus the other two.  Free dimension:
//! six per compact tetrahedron, five per tetrahedron with an ideal
//! vertex.
//!
//! Residuals (deterministic order):
//!   F block: for each compact edge class, the consecutive differences of
//!   the internal edge length computed in each incident tetrahedron along
//!   the cyclic trace (valence minus one rows); then, for each glued pair
//!   of exceptional faces, the sum of the two hexagon side ratios, which
//!   vanishes when the degenerate hexagons match up.  The pair with the
//!   lowest key in each cusp is redundant (the ratios telescope around
//!   the cusp) and is dropped.
//!   A block: angle sums minus their targets, for every compact class
//!   (target 2 pi, or cone angles when set) and every class with an ideal
//!   end except the lowest-index one per cusp, whose row is minus the sum
//!   of the others once ideal vertex sums are pinned to pi.
//!
//! The A block is affine in the free coordinates with integer matrix, so
//! its Jacobian rows are exact; F rows are differenced centrally.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{
    internal_edge_length, sigma, vertex_angle_sum, vertex_edges, AnglePoint, HexagonRef,
};
use crate::tol;
use crate::triangulation::Triangulation;

/// Coordinate chart on the moduli domain.
#[derive(Clone, Debug)]
pub struct Chart {
    free_index: Vec<[Option<usize>; 6]>,
    /// Per tetrahedron: (eliminated edge, kept edge a, kept edge b).
    eliminated: Vec<Option<(usize, usize, usize)>>,
    dim: usize,
}

impl Chart {
    pub fn new(tri: &Triangulation) -> Self {
        let mut free_index = Vec::with_capacity(tri.tets().len());
        let mut eliminated = Vec::with_capacity(tri.tets().len());
        let mut dim = 0;
        for spec in tri.tets() {
            let elim = spec.ideal.map(|v| {
                let mut edges = vertex_edges(v);
                edges.sort_unstable();
                (edges[0], edges[1], edges[2])
            });
            let mut row = [None; 6];
            for (e, slot) in row.iter_mut().enumerate() {
                if elim.map_or(true, |(e0, _, _)| e != e0) {
                    *slot = Some(dim);
                    dim += 1;
                }
            }
            free_index.push(row);
            eliminated.push(elim);
        }
        Chart {
            free_index,
            eliminated,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tets(&self) -> usize {
        self.free_index.len()
    }

    /// Free coordinate of an angle slot, None for eliminated edges.
    pub fn free_index(&self, tet: usize, local_edge: usize) -> Option<usize> {
        self.free_index[tet][local_edge]
    }

    pub fn eliminated_edges(&self, tet: usize) -> Option<(usize, usize, usize)> {
        self.eliminated[tet]
    }

    pub fn to_angles(&self, x: &[f64]) -> AnglePoint {
        assert_eq!(x.len(), self.dim);
        let t = self.free_index.len();
        let mut values = vec![0.0; 6 * t];
        for tet in 0..t {
            for e in 0..6 {
                if let Some(i) = self.free_index[tet][e] {
                    values[6 * tet + e] = x[i];
                }
            }
            if let Some((e0, ea, eb)) = self.eliminated[tet] {
                values[6 * tet + e0] =
                    std::f64::consts::PI - values[6 * tet + ea] - values[6 * tet + eb];
            }
        }
        AnglePoint::new(values)
    }

    pub fn from_angles(&self, a: &AnglePoint) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for tet in 0..self.free_index.len() {
            for e in 0..6 {
                if let Some(i) = self.free_index[tet][e] {
                    x[i] = a.get(tet, e);
                }
            }
        }
        x
    }

    /// Strict interior test: all angles in (0, pi), every non-ideal
    /// vertex sum below pi.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        let a = self.to_angles(x);
        self.angles_in_domain(&a)
    }

    pub fn angles_in_domain(&self, a: &AnglePoint) -> bool {
        use std::f64::consts::PI;
        for tet in 0..self.free_index.len() {
            let ta = a.tet_angles(tet);
            if ta.iter().any(|&t| t <= 0.0 || t >= PI) {
                return false;
            }
            let ideal_vertex = self.eliminated[tet].map(|(e0, _, _)| {
                // The eliminated edge meets the ideal vertex; recover it
                // as the common vertex of the eliminated triple.
                let (a1, a2) = crate::geometry::EDGE_VERTS[e0];
                if vertex_edges(a1).contains(&self.eliminated[tet].unwrap().1) {
                    a1
                } else {
                    a2
                }
            });
            for v in 0..4 {
                let s = vertex_angle_sum(ta, v);
                match ideal_vertex {
                    Some(iv) if iv == v => {
                        if (s - PI).abs() > 1e-9 {
                            return false;
                        }
                    }
                    _ => {
                        if s >= PI {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Checks a raw angle assignment against the chart (ideal sums pi up
    /// to roundoff) and returns the exact chart representative.
    pub fn project(&self, a: &AnglePoint) -> Result<Vec<f64>> {
        use std::f64::consts::PI;
        for (tet, elim) in self.eliminated.iter().enumerate() {
            if let Some((e0, ea, eb)) = elim {
                let s = a.get(tet, *e0) + a.get(tet, *ea) + a.get(tet, *eb);
                if (s - PI).abs() > 1e-6 {
                    return Err(Error::usage(format!(
                        "angles at the ideal vertex of tet {tet} sum to {s:.12}, expected pi"
                    )));
                }
            }
        }
        let x = self.from_angles(a);
        if !self.in_domain(&x) {
            return Err(Error::usage("angle assignment is outside the moduli domain"));
        }
        Ok(x)
    }
}

/// One F-block residual.
#[derive(Clone, Debug)]
enum FRow {
    /// Length difference between consecutive incidences of a compact
    /// class: position j minus position j+1.
    LengthDiff { class: usize, pos: usize },
    /// Sum of hexagon ratios across a glued exceptional face pair.
    SigmaPair {
        a: (usize, usize, HexagonRef),
        b: (usize, usize, HexagonRef),
    },
}

/// Reduced consistency and angle-sum system over the chart.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    chart: Chart,
    f_rows: Vec<FRow>,
    /// Edge class per A row.
    a_classes: Vec<usize>,
    a_matrix: DMatrix<f64>,
    a_offset: DVector<f64>,
}

impl ReducedSystem {
    pub fn new(tri: &Triangulation) -> Result<Self> {
        let targets: Vec<f64> = tri
            .edge_classes()
            .iter()
            .filter(|c| c.is_compact())
            .map(|_| 2.0 * std::f64::consts::PI)
            .collect();
        Self::with_compact_targets(tri, &targets)
    }

    /// Cone version: prescribed total angle per compact class.
    pub fn with_compact_targets(tri: &Triangulation, targets: &[f64]) -> Result<Self> {
        let chart = Chart::new(tri);
        let compact: Vec<&crate::triangulation::EdgeClass> =
            tri.edge_classes().iter().filter(|c| c.is_compact()).collect();
        if targets.len() != compact.len() {
            return Err(Error::usage(format!(
                "{} cone targets for {} compact classes",
                targets.len(),
                compact.len()
            )));
        }

        let mut f_rows = Vec::new();
        for class in &compact {
            for pos in 0..class.valence() - 1 {
                f_rows.push(FRow::LengthDiff {
                    class: class.id,
                    pos,
                });
            }
        }
        // Exceptional face pairs, keyed by their lower (tet, face) side;
        // the lowest pair of each cusp is dropped.
        let mut pairs: Vec<(usize, (usize, usize), (usize, usize))> = Vec::new();
        for (a, spec) in tri.tets().iter().enumerate() {
            for f in 0..4 {
                if !spec.is_exceptional_face(f) {
                    continue;
                }
                let (b, perm) = &spec.glue[f];
                let g = perm.apply(f);
                debug_assert!(tri.tets()[*b].is_exceptional_face(g));
                if (a, f) <= (*b, g) {
                    let cusp = tri.cusp_of_tet(a).expect("exceptional face in a cusp tet");
                    pairs.push((cusp, (a, f), (*b, g)));
                }
            }
        }
        pairs.sort_unstable();
        let mut last_cusp = usize::MAX;
        for (cusp, sa, sb) in pairs {
            if cusp != last_cusp {
                // First pair of this cusp is the redundant one.
                last_cusp = cusp;
                continue;
            }
            let va = tri.tets()[sa.0].ideal.unwrap();
            let vb = tri.tets()[sb.0].ideal.unwrap();
            f_rows.push(FRow::SigmaPair {
                a: (sa.0, sa.1, HexagonRef::new(sa.1, va)?),
                b: (sb.0, sb.1, HexagonRef::new(sb.1, vb)?),
            });
        }

        // A block: compact classes with their targets, then ideal-end
        // classes (target 2 pi) minus the lowest per cusp.
        let mut a_classes: Vec<usize> = compact.iter().map(|c| c.id).collect();
        let mut a_targets: Vec<f64> = targets.to_vec();
        let mut seen_cusp = std::collections::BTreeSet::new();
        for class in tri.edge_classes() {
            if class.is_compact() {
                continue;
            }
            let cusp = class.cusp.expect("ideal-end class has a cusp");
            if seen_cusp.insert(cusp) {
                continue;
            }
            a_classes.push(class.id);
            a_targets.push(2.0 * std::f64::consts::PI);
        }

        // Affine form of the A block over the chart.
        let rows = a_classes.len();
        let mut a_matrix = DMatrix::zeros(rows, chart.dim());
        let mut a_offset = DVector::zeros(rows);
        for (r, (&cid, &target)) in a_classes.iter().zip(&a_targets).enumerate() {
            a_offset[r] = -target;
            for inc in &tri.edge_classes()[cid].incidences {
                let e = inc.local_edge();
                match chart.free_index(inc.tet, e) {
                    Some(i) => a_matrix[(r, i)] += 1.0,
                    None => {
                        let (_, ea, eb) = chart.eliminated_edges(inc.tet).unwrap();
                        a_offset[r] += std::f64::consts::PI;
                        a_matrix[(r, chart.free_index(inc.tet, ea).unwrap())] -= 1.0;
                        a_matrix[(r, chart.free_index(inc.tet, eb).unwrap())] -= 1.0;
                    }
                }
            }
        }

        Ok(ReducedSystem {
            chart,
            f_rows,
            a_classes,
            a_matrix,
            a_offset,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn f_len(&self) -> usize {
        self.f_rows.len()
    }

    pub fn a_len(&self) -> usize {
        self.a_classes.len()
    }

    pub fn len(&self) -> usize {
        self.f_rows.len() + self.a_classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Integer Jacobian of the angle-sum block (exact).
    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    pub fn eval_f(&self, tri: &Triangulation, a: &AnglePoint) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.f_rows.len());
        for (r, row) in self.f_rows.iter().enumerate() {
            out[r] = match row {
                FRow::LengthDiff { class, pos } => {
                    let cls = &tri.edge_classes()[*class];
                    let len_at = |j: usize| -> Result<f64> {
                        let inc = &cls.incidences[j];
                        internal_edge_length(
                            a.tet_angles(inc.tet),
                            tri.tets()[inc.tet].ideal,
                            inc.local_edge(),
                        )
                    };
                    len_at(*pos)? - len_at(pos + 1)?
                }
                FRow::SigmaPair { a: sa, b: sb } => {
                    sigma(a.tet_angles(sa.0), &sa.2)? + sigma(a.tet_angles(sb.0), &sb.2)?
                }
            };
        }
        Ok(out)
    }

    pub fn eval_a(&self, x: &[f64]) -> DVector<f64> {
        let xv = DVector::from_column_slice(x);
        &self.a_matrix * xv + &self.a_offset
    }

    /// F then A, over chart coordinates.
    pub fn eval(&self, tri: &Triangulation, x: &[f64]) -> Result<DVector<f64>> {
        let a = self.chart.to_angles(x);
        let f = self.eval_f(tri, &a)?;
        let av = self.eval_a(x);
        let mut out = DVector::zeros(f.len() + av.len());
        out.rows_mut(0, f.len()).copy_from(&f);
        out.rows_mut(f.len(), av.len()).copy_from(&av);
        Ok(out)
    }

    /// Hybrid Jacobian: differenced F rows stacked on the exact A rows.
    pub fn jacobian(&self, tri: &Triangulation, x: &[f64]) -> Result<DMatrix<f64>> {
        let jf = fd_jacobian(
            self.f_rows.len(),
            x,
            |y| {
                let a = self.chart.to_angles(y);
                self.eval_f(tri, &a)
            },
            |y| self.chart.in_domain(y),
        )?;
        let mut out = DMatrix::zeros(self.len(), self.chart.dim());
        out.rows_mut(0, jf.nrows()).copy_from(&jf);
        out.rows_mut(jf.nrows(), self.a_matrix.nrows())
            .copy_from(&self.a_matrix);
        Ok(out)
    }
}

/// Central finite-difference Jacobian with per-coordinate step halving
/// when a probe leaves the domain or fails to evaluate.
pub fn fd_jacobian(
    rows: usize,
    x: &[f64],
    f: impl Fn(&[f64]) -> Result<DVector<f64>>,
    in_domain: impl Fn(&[f64]) -> bool,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut jac = DMatrix::zeros(rows, n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for i in 0..n {
        let mut h = tol::FD_STEP * x[i].abs().max(1.0);
        let mut done = false;
        for _ in 0..=tol::FD_MAX_HALVINGS {
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            if in_domain(&xp) && in_domain(&xm) {
                if let (Ok(fp), Ok(fm)) = (f(&xp), f(&xm)) {
                    let col = (fp - fm) / (2.0 * h);
                    jac.set_column(i, &col);
                    done = true;
                    break;
                }
            }
            h *= 0.5;
        }
        xp[i] = x[i];
        xm[i] = x[i];
        if !done {
            return Err(Error::domain(format!(
                "cannot take a difference step in coordinate {i} without leaving the domain"
            )));
        }
    }
    Ok(jac)
}
