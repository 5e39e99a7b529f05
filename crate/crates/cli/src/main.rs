use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyptri::analysis::{
    dehn_coefficients, filling_search, jacobian_singular_values, rigidity_check, solve_filled,
    tau_estimate, u_tangent_differential, DehnCoefficients, FillTarget,
};
use hyptri::equations::ReducedSystem;
use hyptri::geometry::AnglePoint;
use hyptri::num_complex::Complex64;
use hyptri::solver::{
    full_system_jacobian, solve_complete, solve_cone, solve_deformed, tangent_basis,
    CuspCondition, SolveOptions, SolveReport,
};
use hyptri::triangulation::{parse, Triangulation};
use hyptri::Error;
use sha2::{Digest, Sha256};

/// Exit codes: 0 success, 1 usage error, 2 validation failure,
/// 3 solver non-convergence, 4 numerical-domain error.
fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Invariant(_) => 2,
        Error::Usage(_) => 1,
        Error::NoConvergence(_) => 3,
        Error::Domain(_) | Error::Branch { .. } => 4,
    }
}

#[derive(Parser)]
#[command(name = "hyptri", version, about = "Hyperbolic structures on partially truncated triangulations", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SolveFlags {
    /// Triangulation file.
    file: PathBuf,
    /// Residual max-norm at which Newton stops.
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Random restarts after a failed solve.
    #[arg(long)]
    max_retries: Option<usize>,
    /// Seed for restart perturbations.
    #[arg(long)]
    seed: Option<u64>,
    /// Largest continuation step in target space.
    #[arg(long)]
    max_step: Option<f64>,
    /// File to take initial angles from: a previous report or a
    /// triangulation file with angle records.
    #[arg(long)]
    init: Option<PathBuf>,
}

impl SolveFlags {
    fn options(&self) -> SolveOptions {
        let mut o = SolveOptions::default();
        if let Some(t) = self.tol {
            o.tol = t;
        }
        if let Some(n) = self.max_iter {
            o.max_iter = n;
        }
        if let Some(n) = self.max_retries {
            o.max_retries = n;
        }
        if let Some(s) = self.seed {
            o.seed = s;
        }
        if let Some(s) = self.max_step {
            o.max_step = s;
        }
        o
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a file and report counts and the equation-count identity.
    Validate { file: PathBuf },
    /// Solve for the complete structure.
    Solve {
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Solve with prescribed cusp translations u.
    Deform {
        #[command(flatten)]
        flags: SolveFlags,
        /// Per-cusp targets "re,im[;re,im...]".
        #[arg(long)]
        u: String,
    },
    /// Solve for a cone structure with prescribed angle sums.
    Cone {
        #[command(flatten)]
        flags: SolveFlags,
        /// Per-compact-class total angles "a[;b...]".
        #[arg(long)]
        angles: String,
    },
    /// Solve the Dehn filling equations for given coefficients, or sweep
    /// a coefficient box.
    Fill {
        #[command(flatten)]
        flags: SolveFlags,
        /// Per-cusp coefficients "p,q" or "inf", separated by ";".
        #[arg(long, conflicts_with = "box_bound")]
        coeffs: Option<String>,
        /// Sweep all coprime integer slopes with |p|, |q| <= BOX on one cusp.
        #[arg(long = "box")]
        box_bound: Option<i64>,
        /// Cusp index for the sweep.
        #[arg(long, default_value_t = 0)]
        cusp: usize,
    },
    /// Rank and tangent-space profile at the complete structure.
    Rank {
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Flatness of the compact geometry at the complete structure.
    Rigidity {
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Cusp cross-section shape of one cusp by extrapolation.
    Tau {
        #[command(flatten)]
        flags: SolveFlags,
        /// Cusp index.
        #[arg(long, default_value_t = 0)]
        cusp: usize,
    },
    /// Enumerate small triangulations and print their counts.
    Enumerate {
        /// Largest number of tetrahedra.
        #[arg(long, default_value_t = 2)]
        max_tets: usize,
        /// Largest number of ideal vertices.
        #[arg(long, default_value_t = 8)]
        max_ideal: usize,
        /// Directory to write one file per triangulation into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (reports piped into head).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Validate { file } => cmd_validate(&file),
        Cmd::Solve { flags } => {
            let (tri, input) = load(&flags.file)?;
            let init = read_init(&flags, &tri)?;
            let report = solve_complete(&tri, init.as_ref(), &flags.options())?;
            print_header(&input, "solve", &tri)?;
            print_solution(&tri, &report)
        }
        Cmd::Deform { flags, u } => {
            let (tri, input) = load(&flags.file)?;
            let init = read_init(&flags, &tri)?;
            let targets = parse_complex_list(&u)?;
            let report = solve_deformed(&tri, &targets, init.as_ref(), &flags.options())?;
            print_header(&input, "deform", &tri)?;
            for (j, t) in targets.iter().enumerate() {
                println!("target.u[{j}] = {}", cpx(*t));
            }
            print_solution(&tri, &report)
        }
        Cmd::Cone { flags, angles } => {
            let (tri, input) = load(&flags.file)?;
            let init = read_init(&flags, &tri)?;
            let targets = parse_float_list(&angles)?;
            let report = solve_cone(&tri, &targets, init.as_ref(), &flags.options())?;
            print_header(&input, "cone", &tri)?;
            for (j, t) in targets.iter().enumerate() {
                println!("target.angle_sum[{j}] = {}", flt(*t));
            }
            print_solution(&tri, &report)?;
            let compact: Vec<usize> = (0..tri.edge_classes().len())
                .filter(|&i| tri.edge_classes()[i].is_compact())
                .collect();
            for (slot, class) in compact.iter().enumerate() {
                let sum: f64 = tri.edge_classes()[*class]
                    .incidences
                    .iter()
                    .map(|inc| {
                        report
                            .angles
                            .get(inc.tet, hyptri::geometry::edge_index(inc.tail, inc.head))
                    })
                    .sum();
                println!("class[{slot}].angle_sum = {}", flt(sum));
            }
            Ok(())
        }
        Cmd::Fill { flags, coeffs, box_bound, cusp } => {
            let (tri, input) = load(&flags.file)?;
            match (coeffs, box_bound) {
                (Some(spec), None) => {
                    let init = read_init(&flags, &tri)?;
                    let targets = parse_fill_targets(&spec)?;
                    let report = solve_filled(&tri, &targets, init.as_ref(), &flags.options())?;
                    print_header(&input, "fill", &tri)?;
                    for (j, t) in targets.iter().enumerate() {
                        match t {
                            FillTarget::Complete => println!("target.coeffs[{j}] = inf"),
                            FillTarget::Fill(p, q) => {
                                println!("target.coeffs[{j}] = {},{}", flt(*p), flt(*q))
                            }
                        }
                    }
                    print_solution(&tri, &report)?;
                    for (j, t) in targets.iter().enumerate() {
                        if let FillTarget::Fill(p, q) = t {
                            let h = &report.holonomies[j];
                            let gap = h.u * *p + h.v * *q
                                - Complex64::new(0.0, 2.0 * std::f64::consts::PI);
                            println!("cusp[{j}].filling_residual = {:e}", gap.norm());
                        }
                    }
                    Ok(())
                }
                (None, Some(bound)) => {
                    print_header(&input, "fill-sweep", &tri)?;
                    println!("sweep.cusp = {cusp}");
                    println!("sweep.box = {bound}");
                    let outcomes = filling_search(&tri, cusp, bound, &flags.options())?;
                    let mut solved = 0usize;
                    for o in &outcomes {
                        let key = format!("slope[{},{}]", o.p, o.q);
                        match &o.result {
                            Ok(rep) => {
                                solved += 1;
                                let h = &rep.holonomies[cusp];
                                println!("{key}.status = solved");
                                println!("{key}.u = {}", cpx(h.u));
                                println!("{key}.v = {}", cpx(h.v));
                                println!("{key}.residual = {:e}", rep.residual);
                            }
                            Err(e) => {
                                println!("{key}.status = failed");
                                println!("{key}.error = {e}");
                            }
                        }
                    }
                    println!("sweep.targets = {}", outcomes.len());
                    println!("sweep.solved = {solved}");
                    Ok(())
                }
                (None, None) => Err(Error::usage("fill needs --coeffs or --box")),
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            }
        }
        Cmd::Rank { flags } => {
            let (tri, input) = load(&flags.file)?;
            let init = read_init(&flags, &tri)?;
            let opts = flags.options();
            let report = solve_complete(&tri, init.as_ref(), &opts)?;
            let sys = ReducedSystem::new(&tri)?;
            print_header(&input, "rank", &tri)?;
            println!("residual = {:e}", report.residual);
            let basis = tangent_basis(&tri, &sys, &report.x)?;
            // Spectrum of the square-padded Jacobian; the trailing
            // near-zero values are the kernel directions.
            for (i, s) in basis.singular_values.iter().enumerate() {
                println!("sv[{i}] = {}", flt(*s));
            }
            println!("nullity = {}", basis.vectors.len());
            let kept = basis.singular_values.len() - basis.vectors.len();
            if basis.vectors.is_empty() {
                println!("gap_ratio = inf");
            } else {
                // Smallest kept value against the rank-decision floor: how
                // sharply the kernel separates from the rest.
                let floor = hyptri::tol::RANK_TOL * basis.singular_values[0];
                let cut = basis.singular_values[kept].max(floor);
                println!("gap_ratio = {}", flt(basis.singular_values[kept - 1] / cut));
            }
            if let Some(w) = &basis.warning {
                println!("warning = {w}");
            }
            // The square complete-structure system must be nonsingular.
            let conds =
                vec![CuspCondition::U(Complex64::new(0.0, 0.0)); tri.cusps().len()];
            let full = full_system_jacobian(&tri, &sys, &conds, &report.x)?;
            let fsv = full.svd(false, false).singular_values;
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for s in fsv.iter() {
                lo = lo.min(*s);
                hi = hi.max(*s);
            }
            println!("full_system.min_sv = {}", flt(lo));
            println!("full_system.rel_min_sv = {}", flt(lo / hi));
            if !basis.vectors.is_empty() {
                let du = u_tangent_differential(&tri, &sys, &basis.vectors, &report.x)?;
                let dsv = du.svd(false, false).singular_values;
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for s in dsv.iter() {
                    lo = lo.min(*s);
                    hi = hi.max(*s);
                }
                println!("du.min_sv = {}", flt(lo));
                println!("du.condition = {}", flt(hi / lo));
            }
            Ok(())
        }
        Cmd::Rigidity { flags } => {
            let (tri, input) = load(&flags.file)?;
            let report = rigidity_check(&tri, &flags.options())?;
            print_header(&input, "rigidity", &tri)?;
            println!("directions = {}", report.directions);
            println!("step = {}", flt(report.step));
            println!("members = {}", report.labels.len());
            for (i, label) in report.labels.iter().enumerate() {
                println!("member[{i}].label = {label}");
                println!(
                    "member[{i}].first_derivative = {:e}",
                    report.first_derivatives[i]
                );
                match report.fitted_orders[i] {
                    Some(o) => println!("member[{i}].order = {}", flt(o)),
                    None => println!("member[{i}].order = flat"),
                }
                for (d, dir_ratios) in report.ratios.iter().enumerate() {
                    if let Some(r) = dir_ratios[i] {
                        println!("member[{i}].ratio[{d}] = {}", flt(r));
                    }
                }
            }
            println!(
                "max_first_derivative = {:e}",
                report.max_first_derivative
            );
            println!("flat_members = {}", report.flat_members.len());
            Ok(())
        }
        Cmd::Tau { flags, cusp } => {
            let (tri, input) = load(&flags.file)?;
            let est = tau_estimate(&tri, cusp, &flags.options())?;
            print_header(&input, "tau", &tri)?;
            println!("cusp = {cusp}");
            for (i, r) in est.ratios.iter().enumerate() {
                println!("ratio[{i}] = {}", cpx(*r));
            }
            for (i, r) in est.refined.iter().enumerate() {
                println!("refined[{i}] = {}", cpx(*r));
            }
            println!("tau = {}", cpx(est.tau));
            Ok(())
        }
        Cmd::Enumerate { max_tets, max_ideal, out } => {
            let tris = hyptri::triangulation::enumerate_gluings(max_tets, max_ideal);
            println!("command = enumerate");
            println!("max_tets = {max_tets}");
            println!("max_ideal = {max_ideal}");
            println!("found = {}", tris.len());
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir)
                    .map_err(|e| Error::usage(format!("cannot create {}: {e}", dir.display())))?;
            }
            for (i, tri) in tris.iter().enumerate() {
                let c = tri.counts();
                println!(
                    "enum[{i}] = t={} c={} p={} l={} h={} k={}",
                    c.tets,
                    c.compact_tets,
                    c.noncompact_tets,
                    c.compact_classes,
                    c.ideal_end_classes,
                    c.cusps
                );
                if let Some(dir) = &out {
                    let path = dir.join(format!("enum_{i:04}.tri"));
                    std::fs::write(&path, tri.serialize())
                        .map_err(|e| Error::usage(format!("cannot write {}: {e}", path.display())))?;
                }
            }
            Ok(())
        }
    }
}

struct InputInfo {
    path: String,
    digest: String,
}

fn load(path: &Path) -> Result<(Triangulation, InputInfo), Error> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::invariant(format!("cannot read {}: {e}", path.display())))?;
    let digest = hex(&Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::invariant(format!("{} is not UTF-8 text", path.display())))?;
    let parsed = parse(&text)?;
    Ok((
        parsed.triangulation,
        InputInfo { path: path.display().to_string(), digest },
    ))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits: round-trips f64 exactly.
fn flt(x: f64) -> String {
    format!("{x:.16e}")
}

fn cpx(z: Complex64) -> String {
    format!("{},{}", flt(z.re), flt(z.im))
}

fn print_header(input: &InputInfo, mode: &str, tri: &Triangulation) -> Result<(), Error> {
    println!("input = {}", input.path);
    println!("sha256 = {}", input.digest);
    println!("command = {mode}");
    print_counts(tri)
}

fn print_counts(tri: &Triangulation) -> Result<(), Error> {
    let c = tri.counts();
    println!("t = {}", c.tets);
    println!("c = {}", c.compact_tets);
    println!("p = {}", c.noncompact_tets);
    println!("l = {}", c.compact_classes);
    println!("h = {}", c.ideal_end_classes);
    println!("k = {}", c.cusps);
    let sys = ReducedSystem::new(tri)?;
    let dim = sys.chart().dim();
    println!("dim_w = {dim}");
    println!("equations_f = {}", sys.f_len());
    println!("equations_a = {}", sys.a_len());
    println!("equations = {}", sys.len());
    if c.cusps == 0 {
        println!("identity = equations {} = dim W {dim}", sys.len());
    } else {
        println!(
            "identity = equations {} = dim W - 2k = {dim} - {}",
            sys.len(),
            2 * c.cusps
        );
    }
    Ok(())
}

fn cmd_validate(file: &Path) -> Result<(), Error> {
    let (tri, input) = load(file)?;
    print_header(&input, "validate", &tri)?;
    for (i, b) in tri.boundary_components().iter().enumerate() {
        println!("boundary[{i}].euler = {}", b.euler);
    }
    println!("ok = true");
    Ok(())
}

fn print_solution(tri: &Triangulation, report: &SolveReport) -> Result<(), Error> {
    println!("residual = {:e}", report.residual);
    println!("iterations = {}", report.iterations);
    println!("retries = {}", report.retries);
    println!("seed = {}", report.seed);
    for (i, a) in report.angles.angles.iter().enumerate() {
        println!("angle[{i}] = {}", flt(*a));
    }
    let sys = ReducedSystem::new(tri)?;
    let sv = jacobian_singular_values(&tri.clone(), &sys, &report.x)?;
    println!("min_sv = {}", flt(*sv.last().expect("nonempty")));
    for (j, h) in report.holonomies.iter().enumerate() {
        println!("cusp[{j}].u = {}", cpx(h.u));
        println!("cusp[{j}].v = {}", cpx(h.v));
        match dehn_coefficients(h.u, h.v) {
            Ok(DehnCoefficients::Unfilled) => println!("cusp[{j}].filling = inf"),
            Ok(DehnCoefficients::Finite { p, q }) => {
                println!("cusp[{j}].filling = {},{}", flt(p), flt(q))
            }
            Err(_) => println!("cusp[{j}].filling = undefined"),
        }
    }
    Ok(())
}

fn parse_complex_list(s: &str) -> Result<Vec<Complex64>, Error> {
    s.split(';')
        .map(|part| {
            let (re, im) = part
                .split_once(',')
                .ok_or_else(|| Error::usage(format!("expected re,im: {part:?}")))?;
            Ok(Complex64::new(parse_f64(re)?, parse_f64(im)?))
        })
        .collect()
}

fn parse_float_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(';').map(parse_f64).collect()
}

fn parse_f64(s: &str) -> Result<f64, Error> {
    s.trim()
        .parse()
        .map_err(|_| Error::usage(format!("not a number: {s:?}")))
}

fn parse_fill_targets(s: &str) -> Result<Vec<FillTarget>, Error> {
    s.split(';')
        .map(|part| {
            let t = part.trim();
            if t.eq_ignore_ascii_case("inf") {
                return Ok(FillTarget::Complete);
            }
            let (p, q) = t
                .split_once(',')
                .ok_or_else(|| Error::usage(format!("expected p,q or inf: {part:?}")))?;
            Ok(FillTarget::Fill(parse_f64(p)?, parse_f64(q)?))
        })
        .collect()
}

/// Initial angles from a previous report (angle[i] = v lines) or from a
/// triangulation file carrying angle records.
fn read_init(flags: &SolveFlags, tri: &Triangulation) -> Result<Option<AnglePoint>, Error> {
    let Some(path) = &flags.init else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read {}: {e}", path.display())))?;
    let n = 6 * tri.tets().len();
    let mut values = vec![f64::NAN; n];
    let mut seen = 0usize;
    for line in text.lines() {
        let Some(rest) = line.trim().strip_prefix("angle[") else {
            continue;
        };
        let Some((idx, val)) = rest.split_once("] = ") else {
            continue;
        };
        let i: usize = idx
            .parse()
            .map_err(|_| Error::usage(format!("bad angle index in init file: {line:?}")))?;
        if i >= n {
            return Err(Error::usage(format!(
                "init file has angle[{i}] but the triangulation has {n} angles"
            )));
        }
        values[i] = parse_f64(val)?;
        seen += 1;
    }
    if seen == 0 {
        let parsed = parse(&text)?;
        return match parsed.init_angles {
            Some(a) => Ok(Some(a)),
            None => Err(Error::usage(format!(
                "{} contains neither angle lines nor angle records",
                path.display()
            ))),
        };
    }
    if seen != n || values.iter().any(|v| v.is_nan()) {
        return Err(Error::usage(format!(
            "init file defines {seen} of {n} angles"
        )));
    }
    Ok(Some(AnglePoint::new(values)))
}
