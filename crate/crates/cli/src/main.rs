//! `tautgen`: build tautological systems, expand periods and check them.
//!
//! Exit codes: 0 verified, 1 falsified, 2 invalid input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_traits::Zero;

use tautgen_core::io::{
    read_json, write_json, FanFile, FlagFile, InvariantFile, ReportFile, SeriesFile, SystemFile, ToricSummary,
    VanishingReport,
};
use tautgen_core::period::{numeric_period, period_series, verify_operators, verify_system};
use tautgen_core::taut::{
    binomial_generators_bounded, build_flag_system_v, build_flag_system_w, build_invariant_system, build_toric_gkz,
    polynomial_solutions, TautSystem,
};
use tautgen_core::toric::{a_matrix, canonical_class, class_group, cy_power_check, sections, FanData};
use tautgen_core::{DiffOp, Error, FORMAT_VERSION};

/// Seed used when --seed is not given.
const DEFAULT_SEED: u64 = 1729;

/// Offset separating the verification sample stream from the stream used
/// to compute the linear forms.
const CHECK_STREAM: u64 = 1 << 32;

#[derive(Parser)]
#[command(name = "tautgen", version, about = "Tautological systems and period integrals (file format tautgen/1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    V,
    W,
}

#[derive(Subcommand)]
enum Command {
    /// GKZ system of a fan, its period series and the annihilation report.
    Toric {
        /// Fan file: {"dimension", "rays", "maximal_cones"?}
        fan: PathBuf,
        /// "anticanonical" or a comma-separated divisor a_1,...,a_t
        #[arg(long, default_value = "anticanonical")]
        bundle: String,
        /// Number of expansion layers in the period series
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Also check every binomial operator up to this degree
        #[arg(long, default_value_t = 2)]
        bound: usize,
        /// Output directory
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
    /// Flag-variety system on V or on W_L, checked on sampled cone points.
    Flag {
        /// Flag file: {"type": "A", "n", "parabolic_complement", "bundle"?}
        input: PathBuf,
        #[arg(long, value_enum, default_value = "v")]
        target: Target,
        /// Number of cone points for the vanishing check
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
    /// Check a system file against a series file.
    Verify {
        system: PathBuf,
        series: PathBuf,
        /// Write the report here
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Period series of the anticanonical hypersurface, optionally compared
    /// with torus quadrature at a point.
    Period {
        fan: PathBuf,
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Comma-separated real coefficients, one per section
        #[arg(long)]
        point: Option<String>,
        /// Quadrature points per torus direction
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
    /// Polynomial invariants of a linear action of given degree.
    Invariant {
        /// {"generators": [{"label", "action": square matrix}]}
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
}

enum Outcome {
    Verified,
    Falsified,
}

fn outcome(passed: bool) -> Outcome {
    if passed {
        Outcome::Verified
    } else {
        Outcome::Falsified
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Consistency(_) | Error::SampleRank(_) => 1,
        _ => 2,
    }
}

fn prepare(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Error> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Input(format!("bad {what} entry {s:?}"))))
        .collect()
}

fn print_system(system: &TautSystem) {
    println!(
        "system: {} variables, {} symmetry operators, {} polynomial operators",
        system.nvars(),
        system.symmetry_ops().len(),
        system.polynomial_ops().len()
    );
}

fn truncated(text: String, limit: usize) -> String {
    if text.chars().count() <= limit {
        text
    } else {
        format!("{} ...", text.chars().take(limit).collect::<String>())
    }
}

fn cmd_toric(fan: &Path, bundle: &str, order: usize, bound: usize, out: &Path) -> Result<Outcome, Error> {
    let fan: FanData = read_json::<FanFile>(fan)?.to_fan()?;
    let group = class_group(&fan);
    let canonical = canonical_class(&fan, &group);
    let c: Vec<i64> = if bundle == "anticanonical" {
        vec![1; fan.num_rays()]
    } else {
        let c = parse_list(bundle, "bundle")?;
        if c.len() != fan.num_rays() {
            return Err(Error::VariableMismatch { expected: fan.num_rays(), found: c.len() });
        }
        c
    };
    let basis = sections(&fan, &c)?;
    let a = a_matrix(&basis);
    let system = build_toric_gkz(&a)?;
    let cy = cy_power_check(&fan, &group, &group.class_of(&c));
    prepare(out)?;
    write_json(&out.join("toric.json"), &ToricSummary::new(&group, &canonical, &basis, cy))?;
    write_json(&out.join("system.json"), &SystemFile::from_system(&system))?;
    println!("class group: free rank {}, torsion {:?}", group.free_rank(), group.torsion_orders());
    println!("sections: {}", basis.len());
    print_system(&system);
    if a.interior_index().is_none() {
        println!("no section with weight 0: period series skipped");
        return Ok(Outcome::Verified);
    }
    let series = period_series(&a, order)?;
    write_json(&out.join("series.json"), &SeriesFile::from_period(&series))?;
    println!("series: {} terms, {}", series.series().len(), truncated(series.series().to_string(), 160));
    let extra: Vec<(String, DiffOp)> = binomial_generators_bounded(&a, bound)
        .into_iter()
        .enumerate()
        .map(|(k, op)| (format!("binomial:{k}"), op))
        .collect();
    let ops = system.operators().into_iter().chain(extra.iter().map(|(l, o)| (l.as_str(), o)));
    let report = verify_operators(ops, series.series())?;
    write_json(&out.join("report.json"), &ReportFile::from_report(&report))?;
    for (label, _) in report.failures() {
        println!("FAILED {label}");
    }
    println!("verified {} operators: {}", report.reports.len(), if report.passed { "pass" } else { "FAIL" });
    Ok(outcome(report.passed))
}

fn cmd_flag(input: &Path, target: Target, samples: usize, seed: u64, out: &Path) -> Result<Outcome, Error> {
    let (root, parabolic, coefficients) = read_json::<FlagFile>(input)?.resolve()?;
    let check_seed = seed.wrapping_add(CHECK_STREAM);
    let (system, points, name) = match target {
        Target::V => {
            let fv = build_flag_system_v(&root, &parabolic, &coefficients)?;
            let points = fv.rep.sample_cone_points(samples, check_seed)?;
            (fv.system, points, "V")
        }
        Target::W => {
            let fw = build_flag_system_w(&root, &parabolic, &coefficients, seed)?;
            let points = fw.segre_veronese.sample_cone_points(samples, check_seed);
            (fw.system, points, "W")
        }
    };
    let failures: Vec<String> = system
        .polynomial_ops()
        .iter()
        .filter(|p| points.iter().any(|pt| !p.op.symbol_at(pt).is_zero()))
        .map(|p| p.label.clone())
        .collect();
    let report = VanishingReport {
        format: FORMAT_VERSION.to_string(),
        target: name.to_string(),
        seed,
        points: points.len(),
        operators: system.polynomial_ops().len(),
        linear_operators: system.linear_ops().count(),
        passed: failures.is_empty(),
        failures,
    };
    prepare(out)?;
    write_json(&out.join("system.json"), &SystemFile::from_system(&system))?;
    write_json(&out.join("vanishing.json"), &report)?;
    print_system(&system);
    for p in system.polynomial_ops().iter().take(5) {
        println!("  {}: {}", p.label, truncated(p.op.to_string(), 160));
    }
    for f in &report.failures {
        println!("FAILED {f}");
    }
    println!(
        "symbols on {} cone points (seed {seed}): {}",
        report.points,
        if report.passed { "all vanish" } else { "FAIL" }
    );
    Ok(outcome(report.passed))
}

fn cmd_verify(system: &Path, series: &Path, out: Option<&Path>) -> Result<Outcome, Error> {
    let system = read_json::<SystemFile>(system)?.to_system()?;
    let series = read_json::<SeriesFile>(series)?.to_series()?;
    let report = verify_system(&system, &series)?;
    if let Some(path) = out {
        write_json(path, &ReportFile::from_report(&report))?;
    }
    for (label, r) in report.failures() {
        println!("FAILED {label}: {} residual terms", r.residual.len());
    }
    println!("verified {} operators: {}", report.reports.len(), if report.passed { "pass" } else { "FAIL" });
    Ok(outcome(report.passed))
}

fn cmd_period(fan: &Path, order: usize, point: Option<&str>, grid: usize, out: &Path) -> Result<Outcome, Error> {
    let fan: FanData = read_json::<FanFile>(fan)?.to_fan()?;
    let basis = sections(&fan, &vec![1; fan.num_rays()])?;
    let a = a_matrix(&basis);
    let series = period_series(&a, order)?;
    prepare(out)?;
    write_json(&out.join("series.json"), &SeriesFile::from_period(&series))?;
    println!("series: {} terms, {}", series.series().len(), truncated(series.series().to_string(), 160));
    let Some(point) = point else {
        return Ok(Outcome::Verified);
    };
    let values: Vec<f64> = parse_list(point, "point")?;
    if values.len() != a.num_columns() {
        return Err(Error::VariableMismatch { expected: a.num_columns(), found: values.len() });
    }
    let z: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let quad = numeric_period(&a, &z, grid)?;
    let Some(tail) = series.relative_tail_bound(&z) else {
        return Err(Error::Input("point outside the region where the series tail is bounded".into()));
    };
    let value = series.evaluate(&z);
    let rel = (value - quad).norm() / quad.norm();
    println!("series {value}, quadrature {quad}, relative gap {rel:.3e}, tail bound {tail:.3e}");
    Ok(outcome(rel <= tail + 1e-9))
}

fn cmd_invariant(input: &Path, degree: usize, out: &Path) -> Result<Outcome, Error> {
    let generators = read_json::<InvariantFile>(input)?.operator_matrices()?;
    let system = build_invariant_system(&generators, degree as i64)?;
    let solutions = polynomial_solutions(&system, degree)?;
    let mut passed = true;
    for s in &solutions {
        passed &= verify_system(&system, s)?.passed;
    }
    prepare(out)?;
    write_json(&out.join("system.json"), &SystemFile::from_system(&system))?;
    let files: Vec<SeriesFile> = solutions.iter().map(SeriesFile::from_series).collect();
    write_json(&out.join("invariants.json"), &files)?;
    print_system(&system);
    println!("{} invariants of degree {degree}", solutions.len());
    for s in &solutions {
        println!("  {s}");
    }
    Ok(outcome(passed))
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Toric { fan, bundle, order, bound, out } => cmd_toric(&fan, &bundle, order, bound, &out),
        Command::Flag { input, target, samples, seed, out } => cmd_flag(&input, target, samples, seed, &out),
        Command::Verify { system, series, out } => cmd_verify(&system, &series, out.as_deref()),
        Command::Period { fan, order, point, grid, out } => cmd_period(&fan, order, point.as_deref(), grid, &out),
        Command::Invariant { input, degree, out } => cmd_invariant(&input, degree, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Verified) => ExitCode::SUCCESS,
        Ok(Outcome::Falsified) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
