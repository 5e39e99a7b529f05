mod common;

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use hyptri::equations::ReducedSystem;
use hyptri::geometry::vertex_angle_sum;
use hyptri::solver::{
    default_init, solve_complete, solve_cone, solve_deformed, solve_with_conditions,
    tangent_basis, CuspCondition, SolveOptions,
};
use hyptri::tol;

#[test]
fn compact_fixture_solves_to_the_regular_point() {
    let tri = common::fixture("compact2.tri").triangulation;
    let opts = SolveOptions::default();
    let report = solve_complete(&tri, None, &opts).expect("solve");
    assert!(report.residual <= tol::RESIDUAL);
    for tet in 0..2 {
        for e in 0..6 {
            assert!((report.angles.tet_angles(tet)[e] - PI / 6.0).abs() < 1e-12);
        }
    }

    // A generic in-domain start lands on the same point.
    let mut values = vec![0.45; 12];
    values[3] = 0.52;
    values[8] = 0.40;
    let init = hyptri::geometry::AnglePoint::new(values);
    let report = solve_complete(&tri, Some(&init), &opts).expect("solve from offset");
    assert!(report.residual <= tol::RESIDUAL);
    for tet in 0..2 {
        for e in 0..6 {
            assert!(
                (report.angles.tet_angles(tet)[e] - PI / 6.0).abs() < 1e-9,
                "tet {tet} edge {e} angle {}",
                report.angles.tet_angles(tet)[e]
            );
        }
    }
}

#[test]
fn cusped_fixtures_solve_complete() {
    for name in ["cusped3.tri", "cusped3b.tri", "ideal4.tri"] {
        let tri = common::fixture(name).triangulation;
        let opts = SolveOptions::default();
        let report = solve_complete(&tri, None, &opts)
            .unwrap_or_else(|e| panic!("{name} failed to solve: {e}"));
        assert!(report.residual <= tol::RESIDUAL, "{name}: {}", report.residual);
        assert_eq!(report.holonomies.len(), 1);
        let u = report.holonomies[0].u;
        assert!(u.norm() <= 1e-10, "{name}: u = {u}");
        // Completeness makes the whole cusp Euclidean: the dilation of
        // the second generator vanishes too, without being imposed.
        let v = report.holonomies[0].v;
        assert!(v.norm() <= 1e-9, "{name}: v = {v}");
        println!("{name}: residual = {:.3e}", report.residual);
    }
}

#[test]
fn ideal_vertex_sums_stay_exact_at_solutions() {
    let tri = common::fixture("cusped3.tri").triangulation;
    let report = solve_complete(&tri, None, &SolveOptions::default()).expect("solve");
    for (t, spec) in tri.tets().iter().enumerate() {
        if let Some(v) = spec.ideal {
            let s = vertex_angle_sum(report.angles.tet_angles(t), v);
            assert!((s - PI).abs() < 1e-12);
        }
    }
}

#[test]
fn deformed_solve_hits_requested_translation() {
    let tri = common::fixture("cusped3.tri").triangulation;
    let opts = SolveOptions::default();
    let target = Complex64::new(0.10, 0.05);
    let report = solve_deformed(&tri, &[target], None, &opts).expect("deform");
    assert!(report.residual <= tol::RESIDUAL);
    let u = report.holonomies[0].u;
    assert!((u - target).norm() <= 1e-10, "u = {u}");
    // Away from the complete structure the second generator dilates too.
    assert!(report.holonomies[0].v.norm() > 1e-4);

    // Walking back to zero returns to the complete structure.
    let back = solve_deformed(&tri, &[Complex64::new(0.0, 0.0)], None, &opts).expect("back");
    assert!(back.holonomies[0].u.norm() <= 1e-10);
}

#[test]
fn cone_solve_reaches_prescribed_angle_sums() {
    let tri = common::fixture("compact2.tri").triangulation;
    let opts = SolveOptions::default();
    let target = 5.8;
    let report = solve_cone(&tri, &[target], None, &opts).expect("cone");
    assert!(report.residual <= tol::RESIDUAL);
    let class = &tri.edge_classes()[0];
    let sum: f64 = class
        .incidences
        .iter()
        .map(|inc| report.angles.get(inc.tet, hyptri::geometry::edge_index(inc.tail, inc.head)))
        .sum();
    assert!((sum - target).abs() < 1e-10, "sum = {sum}");

    let err = solve_cone(
        &common::fixture("cusped3.tri").triangulation,
        &[target],
        None,
        &opts,
    );
    assert!(err.is_err());
}

#[test]
fn tangent_space_has_dimension_twice_the_cusp_count() {
    for (name, expect) in [("compact2.tri", 0usize), ("cusped3.tri", 2), ("ideal4.tri", 2)] {
        let tri = common::fixture(name).triangulation;
        let sys = ReducedSystem::new(&tri).expect("system");
        let report = solve_complete(&tri, None, &SolveOptions::default()).expect("solve");
        let basis = tangent_basis(&tri, &sys, &report.x)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(basis.vectors.len(), expect, "{name}");
        assert!(basis.warning.is_none(), "{name}: {:?}", basis.warning);
        let jac = sys.jacobian(&tri, &report.x).expect("jacobian");
        for w in &basis.vectors {
            assert!((w.norm() - 1.0).abs() < 1e-10);
            let image = &jac * w;
            assert!(image.amax() < 1e-5, "{name}: |J w| = {:.3e}", image.amax());
        }
        // Pairwise orthogonal, hence independent.
        for i in 0..basis.vectors.len() {
            for j in 0..i {
                assert!(basis.vectors[i].dot(&basis.vectors[j]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn condition_count_must_match_cusps() {
    let tri = common::fixture("cusped3.tri").triangulation;
    let sys = ReducedSystem::new(&tri).expect("system");
    let x0 = sys.chart().from_angles(&default_init(&tri));
    let err = solve_with_conditions(&tri, &sys, &[], &x0, &SolveOptions::default());
    assert!(err.is_err());
    let two = vec![CuspCondition::U(Complex64::new(0.0, 0.0)); 2];
    let err = solve_with_conditions(&tri, &sys, &two, &x0, &SolveOptions::default());
    assert!(err.is_err());
}

#[test]
fn combination_conditions_prescribe_holonomy_mixes() {
    let tri = common::fixture("cusped3.tri").triangulation;
    let sys = ReducedSystem::new(&tri).expect("system");
    let complete = solve_complete(&tri, None, &SolveOptions::default()).expect("solve");
    // Ask for a point where u + 2v matches its complete-structure value
    // but u itself is pinned slightly off zero via a second solve.
    let h = &complete.holonomies[0];
    let rhs = h.u + h.v * 2.0;
    let conds = [CuspCondition::Combination { p: 1.0, q: 2.0, rhs }];
    let report =
        solve_with_conditions(&tri, &sys, &conds, &complete.x, &SolveOptions::default())
            .expect("combination solve");
    assert!(report.residual <= tol::RESIDUAL);
    let got = report.holonomies[0].u + report.holonomies[0].v * 2.0;
    assert!((got - rhs).norm() <= 1e-10);
}

#[test]
fn restarts_recover_from_a_poor_start() {
    // A start close to the domain boundary makes the first sweep stall;
    // the seeded perturbations still find the solution.
    let tri = common::fixture("compact2.tri").triangulation;
    let mut values = vec![0.05; 12];
    values[0] = 2.8;
    let init = hyptri::geometry::AnglePoint::new(values);
    let opts = SolveOptions {
        max_iter: 8,
        ..SolveOptions::default()
    };
    match solve_complete(&tri, Some(&init), &opts) {
        Ok(report) => {
            assert!(report.residual <= tol::RESIDUAL);
        }
        Err(e) => {
            // Acceptable only as a clean non-convergence, never a panic
            // or a domain violation.
            assert!(matches!(e, hyptri::Error::NoConvergence(_)), "{e}");
        }
    }
}

#[test]
fn solutions_satisfy_every_unreduced_equation() {
    // The reduced system drops rows that are implied by the rest; at a
    // solution the dropped identities must hold too.
    for name in ["cusped3.tri", "cusped3b.tri"] {
        let tri = common::fixture(name).triangulation;
        let report = solve_complete(&tri, None, &SolveOptions::default()).expect("solve");
        let a = &report.angles;

        // Every compact class has all its consecutive length differences
        // zero, including classes whose rows were reduced.
        for class in tri.edge_classes().iter().filter(|c| c.is_compact()) {
            let lens: Vec<f64> = class
                .incidences
                .iter()
                .map(|inc| {
                    hyptri::geometry::internal_edge_length(
                        a.tet_angles(inc.tet),
                        tri.tets()[inc.tet].ideal,
                        hyptri::geometry::edge_index(inc.tail, inc.head),
                    )
                    .expect("length")
                })
                .collect();
            for w in lens.windows(2) {
                assert!((w[0] - w[1]).abs() < 1e-9, "{name}: {lens:?}");
            }
        }

        // Every ideal class, including the dropped one, has angle sum
        // two pi when left complete.
        for class in tri.edge_classes().iter().filter(|c| !c.is_compact()) {
            let sum: f64 = class
                .incidences
                .iter()
                .map(|inc| a.get(inc.tet, hyptri::geometry::edge_index(inc.tail, inc.head)))
                .sum();
            assert!((sum - 2.0 * PI).abs() < 1e-9, "{name}: sum = {sum}");
        }

        // All sigma pair sums vanish, including the dropped pair.
        for class in tri.edge_classes().iter().filter(|c| !c.is_compact()) {
            for inc in &class.incidences {
                let spec = &tri.tets()[inc.tet];
                let v = spec.ideal.expect("ideal tet");
                for hex in hyptri::geometry::hexagons_at_ideal_vertex(v) {
                    let fwd = hyptri::geometry::sigma(a.tet_angles(inc.tet), &hex)
                        .expect("sigma");
                    let rev = hyptri::geometry::sigma(a.tet_angles(inc.tet), &hex.reversed())
                        .expect("sigma reversed");
                    assert!((fwd + rev).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn tangent_vectors_are_reachable_by_slice_solves() {
    let tri = common::fixture("cusped3.tri").triangulation;
    let sys = ReducedSystem::new(&tri).expect("system");
    let complete = solve_complete(&tri, None, &SolveOptions::default()).expect("solve");
    let basis = tangent_basis(&tri, &sys, &complete.x).expect("basis");
    let x0 = DVector::from_column_slice(&complete.x);
    for dir in 0..basis.vectors.len() {
        let s = 5e-3;
        let moved = hyptri::solver::solve_slice(
            &tri,
            &sys,
            &basis.vectors,
            &complete.x,
            dir,
            s,
            &SolveOptions::default(),
        )
        .expect("slice solve");
        assert!(moved.residual <= tol::RESIDUAL);
        let xv = DVector::from_column_slice(&moved.x);
        let delta = &xv - &x0;
        assert!((basis.vectors[dir].dot(&delta) - s).abs() <= 1e-10);
        for (other, w) in basis.vectors.iter().enumerate() {
            if other != dir {
                assert!(w.dot(&delta).abs() <= 1e-10);
            }
        }
    }
}
