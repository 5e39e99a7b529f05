//! Derived quantities at solved structures: generalized Dehn filling
//! coefficients, cusp cross-section shapes by extrapolation, filled
//! structures reached by continuation, and the numerical second-order
//! rigidity check of the boundary geometry.

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;

use crate::equations::ReducedSystem;
use crate::error::{Error, Result};
use crate::geometry::{
    boundary_edge_length, edge_index, internal_edge_length, oriented_complement, AnglePoint,
};
use crate::solver::{
    solve_complete, solve_slice, solve_with_conditions_near, tangent_basis, CuspCondition,
    SolveOptions, SolveReport,
};
use crate::triangulation::Triangulation;

/// Generalized Dehn filling invariant of one cusp: the real pair (p, q)
/// with p u + q v = 2 pi i, or the unfilled point when u vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DehnCoefficients {
    Unfilled,
    Finite { p: f64, q: f64 },
}

pub fn dehn_coefficients(u: Complex64, v: Complex64) -> Result<DehnCoefficients> {
    if u.norm() <= 1e-10 {
        return Ok(DehnCoefficients::Unfilled);
    }
    // The determinant is Im(conj(u) v); relative smallness means the two
    // translations are real-linearly dependent.
    let det = u.re * v.im - v.re * u.im;
    if det.abs() <= 1e-12 * u.norm() * v.norm() {
        return Err(Error::domain(
            "cusp translations are linearly dependent over the reals",
        ));
    }
    let m = Matrix2::new(u.re, v.re, u.im, v.im);
    let rhs = Vector2::new(0.0, 2.0 * std::f64::consts::PI);
    let sol = m.lu().solve(&rhs).expect("determinant checked above");
    Ok(DehnCoefficients::Finite { p: sol[0], q: sol[1] })
}

/// Cross-section shape of a cusp: the limit of v/u as the deformation
/// shrinks, estimated at u = i 2^-m for m = 3..8 and refined by one
/// Richardson step (the leading error is linear in the step).
#[derive(Clone, Debug)]
pub struct TauEstimate {
    /// Raw ratios v/u at each deformation scale.
    pub ratios: Vec<Complex64>,
    /// Richardson-refined values, one per consecutive pair.
    pub refined: Vec<Complex64>,
    /// The final refined value.
    pub tau: Complex64,
}

pub fn tau_estimate(tri: &Triangulation, cusp: usize, opts: &SolveOptions) -> Result<TauEstimate> {
    let k = tri.cusps().len();
    if cusp >= k {
        return Err(Error::usage(format!("no cusp {cusp}")));
    }
    let mut ratios = Vec::new();
    for m in 3..=8u32 {
        let mut targets = vec![Complex64::new(0.0, 0.0); k];
        targets[cusp] = Complex64::new(0.0, 0.5f64.powi(m as i32));
        let report = crate::solver::solve_deformed(tri, &targets, None, opts)?;
        let h = &report.holonomies[cusp];
        ratios.push(h.v / h.u);
    }
    let refined: Vec<Complex64> = ratios
        .windows(2)
        .map(|w| w[1] * 2.0 - w[0])
        .collect();
    let tau = *refined.last().expect("at least one pair");
    Ok(TauEstimate { ratios, refined, tau })
}

/// Per-cusp goal of a filling solve.
#[derive(Clone, Copy, Debug)]
pub enum FillTarget {
    Complete,
    Fill(f64, f64),
}

/// Structure with the given cusps filled: continuation in the filling
/// equations p u + q v = s 2 pi i from the complete structure at s = 0
/// to the filled one at s = 1.
pub fn solve_filled(
    tri: &Triangulation,
    targets: &[FillTarget],
    init: Option<&AnglePoint>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let k = tri.cusps().len();
    if targets.len() != k {
        return Err(Error::usage(format!(
            "{} filling targets for {k} cusps",
            targets.len()
        )));
    }
    let sys = ReducedSystem::new(tri)?;
    let base = solve_complete(tri, init, opts)?;
    if targets.iter().all(|t| matches!(t, FillTarget::Complete)) {
        return Ok(base);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let steps = (two_pi / opts.max_step).ceil() as usize;
    let mut x = base.x.clone();
    // The dilations wind around the origin on the way to the filled
    // structure, so every stage continues the log branches from the
    // holonomy values of the previous stage.
    let mut refs: Vec<(Complex64, Complex64)> =
        base.holonomies.iter().map(|h| (h.u, h.v)).collect();
    let mut report = base;
    for step in 1..=steps {
        let s = step as f64 / steps as f64;
        let conds: Vec<CuspCondition> = targets
            .iter()
            .map(|t| match t {
                FillTarget::Complete => CuspCondition::U(Complex64::new(0.0, 0.0)),
                FillTarget::Fill(p, q) => CuspCondition::Combination {
                    p: *p,
                    q: *q,
                    rhs: Complex64::new(0.0, s * two_pi),
                },
            })
            .collect();
        report = solve_with_conditions_near(tri, &sys, &conds, &refs, &x, opts)?;
        x = report.x.clone();
        refs = report.holonomies.iter().map(|h| (h.u, h.v)).collect();
    }
    Ok(report)
}

/// Outcome of one slope in a filling sweep.
#[derive(Debug)]
pub struct FillingOutcome {
    pub p: i64,
    pub q: i64,
    pub result: Result<SolveReport>,
}

/// Tries every coprime slope (p, q) with max(|p|, |q|) up to `bound` on
/// one cusp, keeping the other cusps complete.  Slopes are normalized so
/// the first nonzero coefficient is positive, since opposite slopes fill
/// the same way.
pub fn filling_search(
    tri: &Triangulation,
    cusp: usize,
    bound: i64,
    opts: &SolveOptions,
) -> Result<Vec<FillingOutcome>> {
    let k = tri.cusps().len();
    if cusp >= k {
        return Err(Error::usage(format!("no cusp {cusp}")));
    }
    if bound < 0 {
        return Err(Error::usage("bound must be nonnegative"));
    }
    let mut out = Vec::new();
    for p in -bound..=bound {
        for q in -bound..=bound {
            if (p, q) == (0, 0) {
                continue;
            }
            if gcd(p.unsigned_abs(), q.unsigned_abs()) != 1 {
                continue;
            }
            if p < 0 || (p == 0 && q < 0) {
                continue;
            }
            let mut targets = vec![FillTarget::Complete; k];
            targets[cusp] = FillTarget::Fill(p as f64, q as f64);
            let result = solve_filled(tri, &targets, None, opts);
            out.push(FillingOutcome { p, q, result });
        }
    }
    Ok(out)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The measured boundary quantities whose rigidity is being tested:
/// lengths of the compact internal edge classes, dihedral angles of the
/// compact tetrahedra, and boundary arcs of the fully truncated faces.
pub struct GeometricFamilies {
    labels: Vec<String>,
    items: Vec<FamilyItem>,
}

enum FamilyItem {
    ClassLength { tet: usize, edge: usize },
    TetAngle { tet: usize, edge: usize },
    HexArc { tet: usize, e_a: usize, e_b: usize },
}

pub fn geometric_families(tri: &Triangulation) -> GeometricFamilies {
    let mut labels = Vec::new();
    let mut items = Vec::new();
    for (i, class) in tri.edge_classes().iter().enumerate() {
        if !class.is_compact() {
            continue;
        }
        let inc = &class.incidences[0];
        labels.push(format!("length[class {i}]"));
        items.push(FamilyItem::ClassLength {
            tet: inc.tet,
            edge: edge_index(inc.tail, inc.head),
        });
    }
    for (t, spec) in tri.tets().iter().enumerate() {
        if spec.ideal.is_none() {
            for e in 0..6 {
                labels.push(format!("angle[tet {t} edge {e}]"));
                items.push(FamilyItem::TetAngle { tet: t, edge: e });
            }
        }
    }
    for (t, spec) in tri.tets().iter().enumerate() {
        for f in 0..4 {
            if oriented_complement(f).contains(&spec.ideal.unwrap_or(4)) {
                continue;
            }
            // Face f avoids the ideal vertex: a full hexagon.  One arc
            // per face vertex, between the feet of its two face edges.
            for &v in &oriented_complement(f) {
                let others: Vec<usize> = oriented_complement(f)
                    .into_iter()
                    .filter(|&w| w != v)
                    .collect();
                let e_a = edge_index(v, others[0]);
                let e_b = edge_index(v, others[1]);
                labels.push(format!("arc[tet {t} face {f} vertex {v}]"));
                items.push(FamilyItem::HexArc { tet: t, e_a, e_b });
            }
        }
    }
    GeometricFamilies { labels, items }
}

impl GeometricFamilies {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn eval(&self, tri: &Triangulation, a: &AnglePoint) -> Result<Vec<f64>> {
        self.items
            .iter()
            .map(|item| match *item {
                FamilyItem::ClassLength { tet, edge } => {
                    internal_edge_length(a.tet_angles(tet), tri.tets()[tet].ideal, edge)
                }
                FamilyItem::TetAngle { tet, edge } => Ok(a.get(tet, edge)),
                FamilyItem::HexArc { tet, e_a, e_b } => {
                    boundary_edge_length(a.tet_angles(tet), tri.tets()[tet].ideal, e_a, e_b)
                }
            })
            .collect()
    }
}

/// Numerical rigidity of the compact geometry at the complete structure:
/// along every tangent direction of the deformation variety, each
/// measured quantity has vanishing first derivative, and the decay of
/// its response under step halving fits the order of the leading term.
///
/// On the bundled cusped fixtures the fitted order is 4: the response is
/// even in the deformation, which kills the odd orders, and the
/// quadratic term vanishes as well, so halving the step divides the
/// response by 16.
#[derive(Clone, Debug)]
pub struct RigidityReport {
    pub labels: Vec<String>,
    pub directions: usize,
    /// Probe step along each tangent direction.
    pub step: f64,
    /// Per member: largest central-difference first derivative over all
    /// directions and both step sizes.
    pub first_derivatives: Vec<f64>,
    pub max_first_derivative: f64,
    /// ratios[dir][member]: |g(s) - g(0)| / |g(s/2) - g(0)| averaged
    /// over both signs of s, None when the half-step response sits below
    /// the noise floor.
    pub ratios: Vec<Vec<Option<f64>>>,
    /// Per member: log2 of the measurable ratios, averaged over
    /// directions and signs. This is the fitted order of vanishing of
    /// the member along the deformation variety.
    pub fitted_orders: Vec<Option<f64>>,
    /// Members whose response stayed below the noise floor in every
    /// direction, by label.
    pub flat_members: Vec<String>,
}

/// Probe step for the rigidity slices.
const RIGIDITY_STEP: f64 = 1e-2;

/// Measurability floor for the halving-ratio fit: responses below this
/// are dominated by solver and rounding noise, not geometry. The slice
/// solves run to residual `tol::RIGIDITY_SOLVE`, which leaves the
/// fourth-order responses near 1e-12 two decades above the noise.
const RESPONSE_FLOOR: f64 = 1e-13;

pub fn rigidity_check(tri: &Triangulation, opts: &SolveOptions) -> Result<RigidityReport> {
    let families = geometric_families(tri);
    if families.is_empty() {
        return Err(Error::usage(
            "no compact pieces to measure; rigidity check is vacuous",
        ));
    }
    let mut opts = opts.clone();
    opts.tol = opts.tol.min(crate::tol::RIGIDITY_SOLVE);
    let sys = ReducedSystem::new(tri)?;
    let complete = solve_complete(tri, None, &opts)?;
    let basis = tangent_basis(tri, &sys, &complete.x)?;
    if basis.vectors.is_empty() {
        return Err(Error::usage(
            "no tangent directions; the structure does not deform",
        ));
    }
    let g0 = families.eval(tri, &complete.angles)?;
    let h = RIGIDITY_STEP;
    let mut first_derivatives = vec![0.0f64; families.len()];
    let mut ratios: Vec<Vec<Option<f64>>> = Vec::new();
    let mut order_sums = vec![(0.0f64, 0usize); families.len()];
    for dir in 0..basis.vectors.len() {
        let value_at = |s: f64| -> Result<Vec<f64>> {
            let moved = solve_slice(tri, &sys, &basis.vectors, &complete.x, dir, s, &opts)?;
            families.eval(tri, &moved.angles)
        };
        let plus = value_at(h)?;
        let minus = value_at(-h)?;
        let plus_half = value_at(h / 2.0)?;
        let minus_half = value_at(-h / 2.0)?;
        let mut dir_ratios = Vec::with_capacity(families.len());
        for i in 0..families.len() {
            let d_full = (plus[i] - minus[i]) / (2.0 * h);
            let d_half = (plus_half[i] - minus_half[i]) / h;
            first_derivatives[i] = first_derivatives[i].max(d_full.abs()).max(d_half.abs());
            let mut sum = 0.0;
            let mut n = 0;
            for (far, near) in [(&plus, &plus_half), (&minus, &minus_half)] {
                let num = (far[i] - g0[i]).abs();
                let den = (near[i] - g0[i]).abs();
                if den > RESPONSE_FLOOR && num > RESPONSE_FLOOR {
                    sum += num / den;
                    n += 1;
                }
            }
            if n > 0 {
                let r = sum / n as f64;
                dir_ratios.push(Some(r));
                order_sums[i].0 += r.log2();
                order_sums[i].1 += 1;
            } else {
                dir_ratios.push(None);
            }
        }
        ratios.push(dir_ratios);
    }
    let fitted_orders: Vec<Option<f64>> = order_sums
        .iter()
        .map(|&(sum, n)| (n > 0).then(|| sum / n as f64))
        .collect();
    let flat_members = families
        .labels
        .iter()
        .zip(&fitted_orders)
        .filter(|(_, o)| o.is_none())
        .map(|(l, _)| l.clone())
        .collect();
    let max_first_derivative = first_derivatives.iter().cloned().fold(0.0, f64::max);
    Ok(RigidityReport {
        labels: families.labels.clone(),
        directions: basis.vectors.len(),
        step: h,
        first_derivatives,
        max_first_derivative,
        ratios,
        fitted_orders,
        flat_members,
    })
}

/// Central-difference differential of the per-cusp translations u along
/// the given tangent directions: a (2k x directions) real matrix with
/// rows (Re u_j, Im u_j). Invertibility of this matrix at the complete
/// point is what makes u a chart on the deformation space.
pub fn u_tangent_differential(
    tri: &Triangulation,
    sys: &ReducedSystem,
    vectors: &[nalgebra::DVector<f64>],
    x0: &[f64],
) -> Result<DMatrix<f64>> {
    let k = tri.cusps().len();
    let step = crate::tol::FD_STEP;
    let mut m = DMatrix::zeros(2 * k, vectors.len());
    for (j, w) in vectors.iter().enumerate() {
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        for i in 0..x0.len() {
            xp[i] += step * w[i];
            xm[i] -= step * w[i];
        }
        let ap = sys.chart().to_angles(&xp);
        let am = sys.chart().to_angles(&xm);
        for cusp in 0..k {
            let hp = crate::holonomy::cusp_holonomy(tri, &ap, cusp)?;
            let hm = crate::holonomy::cusp_holonomy(tri, &am, cusp)?;
            let du = (hp.u - hm.u) / (2.0 * step);
            m[(2 * cusp, j)] = du.re;
            m[(2 * cusp + 1, j)] = du.im;
        }
    }
    Ok(m)
}

/// Singular value profile of the consistency-and-angle-sum Jacobian at a
/// point, for rank reporting.
pub fn jacobian_singular_values(
    tri: &Triangulation,
    sys: &ReducedSystem,
    x: &[f64],
) -> Result<Vec<f64>> {
    let jac: DMatrix<f64> = sys.jacobian(tri, x)?;
    let svd = jac.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sv)
}

/// Euclidean structure of a cusp cross-section read off at a solved
/// deformed point: the pair (u, v) and the coefficients solving the
/// filling equation, for reporting.
pub fn cusp_summary(
    report: &SolveReport,
) -> Result<Vec<(Complex64, Complex64, DehnCoefficients)>> {
    report
        .holonomies
        .iter()
        .map(|h| Ok((h.u, h.v, dehn_coefficients(h.u, h.v)?)))
        .collect()
}
