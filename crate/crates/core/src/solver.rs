//! Newton solves for consistency, completeness, deformation, and cone
//! targets, plus the tangent space of the deformation variety.
//!
//! All solves share one damped Newton core: LU on the square hybrid
//! Jacobian, a halving line search accepting two-norm decrease, strict
//! domain checks on every trial point, and seeded random restarts when a
//! basin is missed.  Deformation and cone solves walk their targets in
//! bounded continuation steps, re-solving at each stage.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equations::{fd_jacobian, ReducedSystem};
use crate::error::{Error, Result};
use crate::geometry::AnglePoint;
use crate::holonomy::{all_cusp_holonomies, cusp_holonomy, cusp_holonomy_near, CuspHolonomy};
use crate::tol;
use crate::triangulation::Triangulation;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Convergence threshold on the residual max norm.
    pub tol: f64,
    pub max_iter: usize,
    pub max_retries: usize,
    /// Seed for the restart perturbations.
    pub seed: u64,
    /// Largest continuation step in target space.
    pub max_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: tol::RESIDUAL,
            max_iter: tol::MAX_ITER,
            max_retries: tol::MAX_RETRIES,
            seed: 1,
            max_step: tol::CONTINUATION_MAX_STEP,
        }
    }
}

/// Two residual rows appended per cusp.
#[derive(Clone, Copy, Debug)]
pub enum CuspCondition {
    /// u equals the given value (zero for the complete structure).
    U(Complex64),
    /// p u + q v equals rhs.
    Combination { p: f64, q: f64, rhs: Complex64 },
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub angles: AnglePoint,
    pub residual: f64,
    pub iterations: usize,
    pub retries: usize,
    pub seed: u64,
    pub holonomies: Vec<CuspHolonomy>,
}

/// Default starting point: dihedral angles pi/6 everywhere, except that
/// the three angles of an ideal vertex are set to pi/3 so their sum is
/// exactly pi (the nearest interior point of the sum constraint).
pub fn default_init(tri: &Triangulation) -> AnglePoint {
    use std::f64::consts::PI;
    let mut values = Vec::with_capacity(6 * tri.tets().len());
    for spec in tri.tets() {
        for e in 0..6 {
            let (p, q) = crate::geometry::EDGE_VERTS[e];
            let at_ideal = spec.ideal == Some(p) || spec.ideal == Some(q);
            values.push(if at_ideal { PI / 3.0 } else { PI / 6.0 });
        }
    }
    AnglePoint::new(values)
}

/// Log-branch references per cusp, used when a deformation path takes
/// the holonomy dilations around the origin.
pub type BranchRefs = [(Complex64, Complex64)];

fn holonomy_at(
    tri: &Triangulation,
    angles: &crate::geometry::AnglePoint,
    cusp: usize,
    refs: Option<&BranchRefs>,
) -> Result<CuspHolonomy> {
    match refs {
        Some(r) => cusp_holonomy_near(tri, angles, cusp, r[cusp]),
        None => cusp_holonomy(tri, angles, cusp),
    }
}

/// Full square residual: F rows, A rows, then two rows per cusp from the
/// holonomy conditions.
fn eval_full(
    tri: &Triangulation,
    sys: &ReducedSystem,
    conds: &[CuspCondition],
    refs: Option<&BranchRefs>,
    x: &[f64],
) -> Result<DVector<f64>> {
    let base = sys.eval(tri, x)?;
    let angles = sys.chart().to_angles(x);
    let mut out = DVector::zeros(base.len() + 2 * conds.len());
    out.rows_mut(0, base.len()).copy_from(&base);
    for (c, cond) in conds.iter().enumerate() {
        let h = holonomy_at(tri, &angles, c, refs)?;
        let r = match cond {
            CuspCondition::U(target) => h.u - target,
            CuspCondition::Combination { p, q, rhs } => h.u * *p + h.v * *q - rhs,
        };
        out[base.len() + 2 * c] = r.re;
        out[base.len() + 2 * c + 1] = r.im;
    }
    Ok(out)
}

/// Jacobian of the square system (consistency, angle sums, and two
/// holonomy rows per cusp for the given conditions) at x.
pub fn full_system_jacobian(
    tri: &Triangulation,
    sys: &ReducedSystem,
    conds: &[CuspCondition],
    x: &[f64],
) -> Result<DMatrix<f64>> {
    jacobian_full(tri, sys, conds, None, x)
}

fn jacobian_full(
    tri: &Triangulation,
    sys: &ReducedSystem,
    conds: &[CuspCondition],
    refs: Option<&BranchRefs>,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let n = sys.chart().dim();
    let fa = sys.jacobian(tri, x)?;
    if conds.is_empty() {
        return Ok(fa);
    }
    // Difference only the holonomy rows; F rows are already in `fa` and
    // the A rows there are exact.
    let hrows = fd_jacobian(
        2 * conds.len(),
        x,
        |y| {
            let angles = sys.chart().to_angles(y);
            let mut r = DVector::zeros(2 * conds.len());
            for (c, cond) in conds.iter().enumerate() {
                let h = holonomy_at(tri, &angles, c, refs)?;
                let v = match cond {
                    CuspCondition::U(target) => h.u - target,
                    CuspCondition::Combination { p, q, rhs } => h.u * *p + h.v * *q - rhs,
                };
                r[2 * c] = v.re;
                r[2 * c + 1] = v.im;
            }
            Ok(r)
        },
        |y| sys.chart().in_domain(y),
    )?;
    let mut out = DMatrix::zeros(fa.nrows() + hrows.nrows(), n);
    out.rows_mut(0, fa.nrows()).copy_from(&fa);
    out.rows_mut(fa.nrows(), hrows.nrows()).copy_from(&hrows);
    Ok(out)
}

/// Damped Newton with seeded restarts.  Returns the solution, the final
/// residual, and the iteration/retry counts.
fn newton(
    eval: &dyn Fn(&[f64]) -> Result<DVector<f64>>,
    jac: &dyn Fn(&[f64]) -> Result<DMatrix<f64>>,
    in_domain: &dyn Fn(&[f64]) -> bool,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, f64, usize, usize)> {
    if !in_domain(x0) {
        return Err(Error::usage("starting point is outside the moduli domain"));
    }
    let mut total_iters = 0;
    let mut last_err: Option<Error> = None;
    for attempt in 0..=opts.max_retries {
        let mut x = x0.to_vec();
        if attempt > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt as u64));
            let mut amp = 0.02;
            for _ in 0..20 {
                let mut y = x0.to_vec();
                for v in &mut y {
                    *v += rng.gen_range(-amp..amp);
                }
                if in_domain(&y) {
                    x = y;
                    break;
                }
                amp *= 0.5;
            }
        }
        match newton_once(eval, jac, in_domain, &mut x, opts) {
            Ok((res, iters)) => {
                total_iters += iters;
                return Ok((x, res, total_iters, attempt));
            }
            Err(e) => {
                total_iters += opts.max_iter;
                last_err = Some(e);
            }
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoConvergence("no attempt was made".into())))
}

fn newton_once(
    eval: &dyn Fn(&[f64]) -> Result<DVector<f64>>,
    jac: &dyn Fn(&[f64]) -> Result<DMatrix<f64>>,
    in_domain: &dyn Fn(&[f64]) -> bool,
    x: &mut Vec<f64>,
    opts: &SolveOptions,
) -> Result<(f64, usize)> {
    let mut r = eval(x)?;
    for iter in 0..opts.max_iter {
        if r.amax() <= opts.tol {
            return Ok((r.amax(), iter));
        }
        let j = jac(x)?;
        let lu = j.lu();
        let step = lu
            .solve(&(-&r))
            .ok_or_else(|| Error::NoConvergence("singular Jacobian".into()))?;
        let norm0 = r.norm();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..tol::LINE_SEARCH_MAX_HALVINGS {
            let xt: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if in_domain(&xt) {
                if let Ok(rt) = eval(&xt) {
                    if rt.norm() < norm0 {
                        *x = xt;
                        r = rt;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence(format!(
                "line search stalled at residual {norm0:.3e}"
            )));
        }
    }
    if r.amax() <= opts.tol {
        Ok((r.amax(), opts.max_iter))
    } else {
        Err(Error::NoConvergence(format!(
            "residual {:.3e} after {} iterations",
            r.amax(),
            opts.max_iter
        )))
    }
}

fn finish_report(
    tri: &Triangulation,
    sys: &ReducedSystem,
    x: Vec<f64>,
    residual: f64,
    iterations: usize,
    retries: usize,
    refs: Option<&BranchRefs>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let angles = sys.chart().to_angles(&x);
    let holonomies = match refs {
        None => all_cusp_holonomies(tri, &angles)?,
        Some(r) => (0..tri.cusps().len())
            .map(|c| cusp_holonomy_near(tri, &angles, c, r[c]))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(SolveReport {
        x,
        angles,
        residual,
        iterations,
        retries,
        seed: opts.seed,
        holonomies,
    })
}

/// One Newton solve of the square system for the given cusp conditions.
pub fn solve_with_conditions(
    tri: &Triangulation,
    sys: &ReducedSystem,
    conds: &[CuspCondition],
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    solve_conditions_impl(tri, sys, conds, None, x0, opts)
}

/// Like `solve_with_conditions`, with log branches continued from the
/// given per-cusp reference values instead of the principal branch.
pub fn solve_with_conditions_near(
    tri: &Triangulation,
    sys: &ReducedSystem,
    conds: &[CuspCondition],
    refs: &BranchRefs,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if refs.len() != tri.cusps().len() {
        return Err(Error::usage(format!(
            "{} branch references for {} cusps",
            refs.len(),
            tri.cusps().len()
        )));
    }
    solve_conditions_impl(tri, sys, conds, Some(refs), x0, opts)
}

fn solve_conditions_impl(
    tri: &Triangulation,
    sys: &ReducedSystem,
    conds: &[CuspCondition],
    refs: Option<&BranchRefs>,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let n = sys.chart().dim();
    if conds.len() != tri.cusps().len() {
        return Err(Error::usage(format!(
            "{} cusp conditions for {} cusps",
            conds.len(),
            tri.cusps().len()
        )));
    }
    if sys.len() + 2 * conds.len() != n {
        return Err(Error::invariant(format!(
            "system is not square: {} + {} rows for {} unknowns",
            sys.len(),
            2 * conds.len(),
            n
        )));
    }
    let (x, residual, iterations, retries) = newton(
        &|y| eval_full(tri, sys, conds, refs, y),
        &|y| jacobian_full(tri, sys, conds, refs, y),
        &|y| sys.chart().in_domain(y),
        x0,
        opts,
    )?;
    finish_report(tri, sys, x, residual, iterations, retries, refs, opts)
}

/// The geometric structure with every cusp complete.
pub fn solve_complete(
    tri: &Triangulation,
    init: Option<&AnglePoint>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let sys = ReducedSystem::new(tri)?;
    let x0 = match init {
        Some(a) => sys.chart().project(a)?,
        None => sys.chart().from_angles(&default_init(tri)),
    };
    let conds = vec![CuspCondition::U(Complex64::new(0.0, 0.0)); tri.cusps().len()];
    solve_with_conditions(tri, &sys, &conds, &x0, opts)
}

/// Structures with prescribed cusp translations u, reached by walking
/// from the complete structure (or the given start) in bounded steps.
pub fn solve_deformed(
    tri: &Triangulation,
    targets: &[Complex64],
    init: Option<&AnglePoint>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let k = tri.cusps().len();
    if targets.len() != k {
        return Err(Error::usage(format!("{} u targets for {k} cusps", targets.len())));
    }
    let sys = ReducedSystem::new(tri)?;
    let base = solve_complete(tri, init, opts)?;
    let start: Vec<Complex64> = base.holonomies.iter().map(|h| h.u).collect();
    let dist = targets
        .iter()
        .zip(&start)
        .map(|(t, s)| (t - s).norm())
        .fold(0.0f64, f64::max);
    let steps = (dist / opts.max_step).ceil().max(1.0) as usize;
    let mut x = base.x.clone();
    let mut report = base;
    for step in 1..=steps {
        let s = step as f64 / steps as f64;
        let conds: Vec<CuspCondition> = targets
            .iter()
            .zip(&start)
            .map(|(t, s0)| CuspCondition::U(s0 + (t - s0) * s))
            .collect();
        report = solve_with_conditions(tri, &sys, &conds, &x, opts)?;
        x = report.x.clone();
    }
    Ok(report)
}

/// Cone structures: prescribed total angle around each compact class.
/// Only meaningful without cusps; targets are walked in bounded steps.
pub fn solve_cone(
    tri: &Triangulation,
    targets: &[f64],
    init: Option<&AnglePoint>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if !tri.cusps().is_empty() {
        return Err(Error::usage("cone solves need a triangulation without cusps"));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let l = tri.edge_classes().iter().filter(|c| c.is_compact()).count();
    if targets.len() != l {
        return Err(Error::usage(format!(
            "{} cone targets for {l} compact classes",
            targets.len()
        )));
    }
    let base_sys = ReducedSystem::new(tri)?;
    let x0 = match init {
        Some(a) => base_sys.chart().project(a)?,
        None => base_sys.chart().from_angles(&default_init(tri)),
    };
    let base = solve_with_conditions(tri, &base_sys, &[], &x0, opts)?;
    let dist = targets
        .iter()
        .map(|t| (t - two_pi).abs())
        .fold(0.0f64, f64::max);
    let steps = (dist / opts.max_step).ceil().max(1.0) as usize;
    let mut x = base.x.clone();
    let mut report = base;
    for step in 1..=steps {
        let s = step as f64 / steps as f64;
        let stage: Vec<f64> = targets.iter().map(|t| two_pi + (t - two_pi) * s).collect();
        let sys = ReducedSystem::with_compact_targets(tri, &stage)?;
        report = solve_with_conditions(tri, &sys, &[], &x, opts)?;
        x = report.x.clone();
    }
    Ok(report)
}

/// Tangent space of the deformation variety at a solution: the kernel of
/// the consistency-and-angle-sum Jacobian, of dimension twice the cusp
/// count.  The rows are padded square with zeros so the decomposition
/// returns a full set of right singular vectors.
#[derive(Clone, Debug)]
pub struct TangentBasis {
    pub vectors: Vec<DVector<f64>>,
    pub singular_values: Vec<f64>,
    pub warning: Option<String>,
}

pub fn tangent_basis(tri: &Triangulation, sys: &ReducedSystem, x: &[f64]) -> Result<TangentBasis> {
    let n = sys.chart().dim();
    let kdim = n - sys.len();
    let fa = sys.jacobian(tri, x)?;
    let mut padded = DMatrix::zeros(n, n);
    padded.rows_mut(0, fa.nrows()).copy_from(&fa);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("full right vectors requested");
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    // nalgebra returns them sorted descending; keep a copy for reports.
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rank_floor = tol::RANK_TOL * sv[0];
    let kept = sv.iter().filter(|&&s| s > rank_floor).count();
    if kept != sys.len() {
        return Err(Error::domain(format!(
            "consistency Jacobian has numerical rank {kept}, expected {}",
            sys.len()
        )));
    }
    let mut warning = None;
    if kdim > 0 {
        let smallest_kept = sv[sys.len() - 1];
        let largest_dropped = sv[sys.len()];
        if smallest_kept < tol::RANK_GAP_WARN * largest_dropped.max(rank_floor) {
            warning = Some(format!(
                "weak rank gap: smallest kept singular value {smallest_kept:.3e} within a factor {} of the cut",
                tol::RANK_GAP_WARN
            ));
        }
    }
    // Right singular vectors for the smallest kdim values span the kernel.
    let order = {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| {
            svd.singular_values[j]
                .partial_cmp(&svd.singular_values[i])
                .unwrap()
        });
        idx
    };
    let vectors: Vec<DVector<f64>> = order[sys.len()..]
        .iter()
        .map(|&i| v_t.row(i).transpose())
        .collect();
    Ok(TangentBasis {
        vectors,
        singular_values: sv,
        warning,
    })
}

/// Newton on the slice through `x0`: consistency and angle-sum rows plus
/// pinned coordinates along the tangent directions, displaced by `s`
/// along basis vector `dir`.
pub fn solve_slice(
    tri: &Triangulation,
    sys: &ReducedSystem,
    basis: &[DVector<f64>],
    x0: &[f64],
    dir: usize,
    s: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let n = sys.chart().dim();
    if sys.len() + basis.len() != n {
        return Err(Error::invariant("slice system is not square"));
    }
    let x0v = DVector::from_column_slice(x0);
    let eval = |y: &[f64]| -> Result<DVector<f64>> {
        let base = sys.eval(tri, y)?;
        let yv = DVector::from_column_slice(y);
        let mut out = DVector::zeros(n);
        out.rows_mut(0, base.len()).copy_from(&base);
        for (i, w) in basis.iter().enumerate() {
            let target = if i == dir { s } else { 0.0 };
            out[base.len() + i] = w.dot(&(&yv - &x0v)) - target;
        }
        Ok(out)
    };
    let jac = |y: &[f64]| -> Result<DMatrix<f64>> {
        let fa = sys.jacobian(tri, y)?;
        let mut out = DMatrix::zeros(n, n);
        out.rows_mut(0, fa.nrows()).copy_from(&fa);
        for (i, w) in basis.iter().enumerate() {
            out.row_mut(fa.nrows() + i).copy_from(&w.transpose());
        }
        Ok(out)
    };
    let (x, residual, iterations, retries) = newton(
        &eval,
        &jac,
        &|y| sys.chart().in_domain(y),
        x0,
        opts,
    )?;
    finish_report(tri, sys, x, residual, iterations, retries, None, opts)
}
