#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod center;
mod config;
mod error;
mod solve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use faer::Mat;
use tadi::c64;
use tadi::linalg::scalar::{block_diag, to_complex};
use tadi::linalg::Scalar;
use tadi::oracle::{compare_dense, dense_lyap_solve};
use tadi::problem::mtx::{read_matrix_market, write_array};
use tadi::problem::{save_problem, AnyProblem, LyapunovProblem};
use tadi::trace::{compare_runs, default_levels, ConvergenceTrace};

use center::parse_center;
use config::{RunConfig, Settings, KEYS, PRESETS};
use error::{CliError, EXIT_CONVERGED, EXIT_INPUT};

fn flag_name(key: &str) -> String {
    key.replace(['.', '_'], "-")
}

/// Config-file, preset and per-key flags shared by every subcommand that builds a problem.
fn with_config_args(mut cmd: Command) -> Command {
    cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .help("key = value configuration file"),
        )
        .arg(
            Arg::new("preset")
                .long("preset")
                .short('p')
                .value_name("NAME")
                .help("start from a named preset"),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .action(ArgAction::Append)
                .help("override one configuration key"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .short('o')
                .value_name("DIR")
                .help("output directory (same as --output-dir)"),
        );
    for (key, default, help) in KEYS {
        let help = if default.is_empty() {
            format!("{help} [{key}]")
        } else {
            format!("{help} [{key}, default {default}]")
        };
        cmd = cmd.arg(
            Arg::new(*key)
                .long(flag_name(key))
                .value_name("VALUE")
                .help(help)
                .hide_short_help(true),
        );
    }
    cmd
}

fn presets_help() -> String {
    let mut s = String::from("Presets:\n");
    for (name, about, _) in PRESETS {
        s.push_str(&format!("  {name:<12} {about}\n"));
    }
    s.push_str("\nEvery configuration key is also a flag: problem.n -> --problem-n (see --help).");
    s
}

fn cli() -> Command {
    Command::new("tadi")
        .about("Low-rank and tangential ADI for Lyapunov equations with indefinite constant terms")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .subcommand(
            with_config_args(
                Command::new("solve").about("run a solver and write trace.csv, summary.txt, L.mtx, D.txt"),
            )
            .arg(
                Arg::new("repeat")
                    .long("repeat")
                    .value_name("N")
                    .value_parser(clap::value_parser!(usize))
                    .help("run N independent seeds in parallel, one subdirectory each"),
            )
            .arg(
                Arg::new("print-config")
                    .long("print-config")
                    .action(ArgAction::SetTrue)
                    .help("print the effective configuration and exit"),
            )
            .after_help(presets_help()),
        )
        .subcommand(
            Command::new("compare")
                .about("compare convergence traces by columns needed per residual level")
                .arg(Arg::new("traces").value_name("TRACE").num_args(2..).required(true))
                .arg(
                    Arg::new("levels")
                        .long("levels")
                        .value_name("LIST")
                        .help("comma-separated residual levels (default 1e-1 .. 1e-12)"),
                ),
        )
        .subcommand(
            with_config_args(Command::new("oracle").about("dense reference solution (n <= 256), written to X.mtx"))
                .arg(
                    Arg::new("factors")
                        .long("factors")
                        .value_name("DIR")
                        .help("compare L.mtx and D.txt from a solve output directory"),
                )
                .after_help(presets_help()),
        )
        .subcommand(
            with_config_args(Command::new("gen").about("write a problem as A.mtx, E.mtx, B.mtx, R.mtx"))
                .after_help(presets_help()),
        )
}

fn settings(m: &ArgMatches) -> Result<Settings, CliError> {
    let mut s = Settings::defaults();
    if let Some(p) = m.get_one::<String>("preset") {
        s.apply_preset(p)?;
    }
    if let Some(f) = m.get_one::<String>("config") {
        s.apply_file(Path::new(f))?;
    }
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        s.set(k.trim(), v, "--set")?;
    }
    for (key, _, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            s.set(key, v, &format!("--{}", flag_name(key)))?;
        }
    }
    if let Some(dir) = m.get_one::<String>("out") {
        s.set("output.dir", dir, "--out")?;
    }
    Ok(s)
}

fn cmd_solve(m: &ArgMatches) -> Result<i32, CliError> {
    let s = settings(m)?;
    let cfg = RunConfig::from_settings(&s)?;
    if m.get_flag("print-config") {
        print!("{}", s.render());
        return Ok(EXIT_CONVERGED);
    }
    let repeat = m.get_one::<usize>("repeat").copied().unwrap_or(1);
    if repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".into()));
    }
    let text = s.render();
    let mut code = EXIT_CONVERGED;
    for report in solve::execute_repeated(&cfg, &text, repeat) {
        match report {
            Ok(r) => {
                println!("{}", r.line);
                if let Some(e) = &r.error {
                    eprintln!("error: {e}");
                }
                code = worse(code, r.exit_code);
            }
            Err(e) if repeat == 1 => return Err(e),
            Err(e) => {
                eprintln!("error: {e}");
                code = worse(code, e.exit_code());
            }
        }
    }
    Ok(code)
}

/// Combines exit codes by severity: numerical > input > not converged > converged.
fn worse(a: i32, b: i32) -> i32 {
    let rank = |c: i32| match c {
        0 => 0,
        2 => 1,
        3 => 2,
        _ => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn trace_label(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match path.parent().and_then(Path::file_name) {
        Some(parent) if stem == "trace" => parent.to_string_lossy().into_owned(),
        _ => stem,
    }
}

fn cmd_compare(m: &ArgMatches) -> Result<i32, CliError> {
    let mut traces = Vec::new();
    for p in m.get_many::<String>("traces").into_iter().flatten() {
        let path = PathBuf::from(p);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read {p}: {e}")))?;
        let trace = ConvergenceTrace::from_csv(&text, p).map_err(CliError::stage("compare"))?;
        traces.push((trace_label(&path), trace));
    }
    let levels = match m.get_one::<String>("levels") {
        Some(list) => list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Usage(format!("--levels {v:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => default_levels(),
    };
    let cmp = compare_runs(&traces, &levels).map_err(CliError::stage("compare"))?;
    print!("{}", cmp.render());
    Ok(EXIT_CONVERGED)
}

fn cmd_oracle(m: &ArgMatches) -> Result<i32, CliError> {
    let cfg = RunConfig::from_settings(&settings(m)?)?;
    let factors = m.get_one::<String>("factors").map(PathBuf::from);
    let problem = solve::build_problem(&cfg)?;
    match &problem {
        AnyProblem::Real(p) => oracle_typed(p, &cfg, factors.as_deref()),
        AnyProblem::Complex(p) => oracle_typed(p, &cfg, factors.as_deref()),
    }
}

fn oracle_typed<T: Scalar>(p: &LyapunovProblem<T>, cfg: &RunConfig, factors: Option<&Path>) -> Result<i32, CliError> {
    let sol = dense_lyap_solve(p).map_err(CliError::stage("oracle"))?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::output(&cfg.output_dir, e))?;
    let x_path = cfg.output_dir.join("X.mtx");
    write_array(&x_path, sol.x.as_ref()).map_err(CliError::stage("output"))?;
    println!("method: {}", sol.method);
    println!("n: {}", p.n());
    println!("relative_residual: {:e}", sol.residual);
    println!("solution: {}", x_path.display());
    if let Some(dir) = factors {
        let stage = CliError::stage("factors");
        let l = read_matrix_market(&dir.join("L.mtx")).map_err(stage)?.to_dense();
        let d_path = dir.join("D.txt");
        let text = std::fs::read_to_string(&d_path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", d_path.display())))?;
        let blocks = parse_center(&text).map_err(|e| CliError::Usage(format!("{}: {e}", d_path.display())))?;
        let refs: Vec<_> = blocks.iter().map(Mat::as_ref).collect();
        let d = block_diag(&refs);
        if l.nrows() != p.n() || l.ncols() != d.nrows() {
            return Err(CliError::Usage(format!(
                "factors do not fit: L is {}x{}, D is {}x{}, n = {}",
                l.nrows(),
                l.ncols(),
                d.nrows(),
                d.ncols(),
                p.n()
            )));
        }
        let ld = &l * &d;
        let x: Mat<c64> = &ld * l.adjoint();
        let err = compare_dense(x.as_ref(), to_complex(sol.x.as_ref()).as_ref()).map_err(CliError::stage("factors"))?;
        println!("factor_relative_error: {err:e}");
    }
    Ok(EXIT_CONVERGED)
}

fn cmd_gen(m: &ArgMatches) -> Result<i32, CliError> {
    let cfg = RunConfig::from_settings(&settings(m)?)?;
    let problem = solve::build_problem(&cfg)?;
    let files = save_problem(&cfg.output_dir, &problem).map_err(CliError::stage("output"))?;
    println!(
        "{} ({}, n = {}, m = {}) -> {}",
        problem.name(),
        problem.arithmetic(),
        problem.n(),
        problem.m(),
        files.a.parent().unwrap_or(Path::new(".")).display()
    );
    Ok(EXIT_CONVERGED)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_CONVERGED };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match matches.subcommand() {
        Some(("solve", m)) => cmd_solve(m),
        Some(("compare", m)) => cmd_compare(m),
        Some(("oracle", m)) => cmd_oracle(m),
        Some(("gen", m)) => cmd_gen(m),
        _ => unreachable!("subcommand is required"),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
