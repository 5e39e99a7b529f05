//! Minimal library usage: read a triangulation file, solve for the
//! complete structure, print the angles and cusp translations.
//!
//! Usage: cargo run --example solve_file -- <file.tri>

use hyptri::solver::{solve_complete, SolveOptions};
use hyptri::triangulation::parse;

fn main() {
    let path = std::env::args().nth(1).expect("usage: solve_file <file.tri>");
    let text = std::fs::read_to_string(&path).expect("read input");
    let parsed = parse(&text).expect("parse input");
    let tri = parsed.triangulation;
    let report = solve_complete(&tri, None, &SolveOptions::default()).expect("solve");
    println!("residual = {:.3e}", report.residual);
    println!("iterations = {}", report.iterations);
    for (t, _) in tri.tets().iter().enumerate() {
        let a = report.angles.tet_angles(t);
        println!(
            "tet {t}: {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
            a[0], a[1], a[2], a[3], a[4], a[5]
        );
    }
    for (c, h) in report.holonomies.iter().enumerate() {
        println!("cusp {c}: u = {:.3e}+{:.3e}i, v = {:.3e}+{:.3e}i", h.u.re, h.u.im, h.v.re, h.v.im);
    }
}
