//! Problem construction, run orchestration and artifact output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tadi::adi::{run_block_adi, run_tangential_adi, RunOptions, RunResult};
use tadi::directions::DirectionSelector;
use tadi::linalg::{Arithmetic, CoefficientOperator, Scalar};
use tadi::problem::mtx::write_array;
use tadi::problem::{load_matrix_market, synth_problem, synth_typed, AnyProblem, LyapunovProblem, ProblemFiles};
use tadi::residual::explicit_residual_norm;
use tadi::shifts::{FixedShifts, ProjectionShifts, ShiftSource};

use crate::center::format_center;
use crate::config::{ProblemSource, RunConfig, Variant};
use crate::error::{CliError, EXIT_CONVERGED, EXIT_NOT_CONVERGED};

pub fn build_problem(cfg: &RunConfig) -> Result<AnyProblem, CliError> {
    let stage = CliError::stage("problem");
    let problem = match &cfg.source {
        ProblemSource::Synthetic => synth_problem(
            cfg.n,
            cfg.m,
            &cfg.spectrum,
            cfg.negatives,
            cfg.arithmetic.unwrap_or(Arithmetic::Real),
        )
        .map_err(stage)?,
        ProblemSource::Scalar => {
            let a = CoefficientOperator::dense(Mat::from_fn(1, 1, |_, _| -1.0)).map_err(CliError::stage("problem"))?;
            let p = LyapunovProblem::new(
                a,
                CoefficientOperator::identity(1),
                Mat::from_fn(1, 1, |_, _| 1.0),
                Mat::from_fn(1, 1, |_, _| 2.0),
            )
            .map_err(CliError::stage("problem"))?;
            AnyProblem::Real(p.with_name("scalar"))
        }
        ProblemSource::Coupled { coupling } => match cfg.arithmetic.unwrap_or(Arithmetic::Real) {
            Arithmetic::Real => AnyProblem::Real(coupled::<f64>(cfg, *coupling)?),
            Arithmetic::Complex => AnyProblem::Complex(coupled::<tadi::c64>(cfg, *coupling)?),
        },
        ProblemSource::MatrixMarket { a, e, b, r } => load_matrix_market(&ProblemFiles {
            a: a.clone(),
            e: e.clone(),
            b: b.clone(),
            r: r.clone(),
        })
        .map_err(stage)?,
    };
    match cfg.arithmetic {
        Some(arith) => problem.with_arithmetic(arith).map_err(CliError::stage("problem")),
        None => Ok(problem),
    }
}

/// Synthetic base problem with `B <- [B, N L]`, `R <- blkdiag(R, D)` from its own block ADI solution.
fn coupled<T: Scalar>(cfg: &RunConfig, scale: f64) -> Result<LyapunovProblem<T>, CliError> {
    let stage = || CliError::stage("problem");
    let base = synth_typed::<T>(cfg.n, cfg.m, &cfg.spectrum, cfg.negatives).map_err(stage())?;
    let opts = RunOptions::default().with_tol(1e-10);
    let first = run_block_adi(&base, &mut ProjectionShifts::new(cfg.ell, cfg.m), &opts)
        .map_err(|f| f.error)
        .map_err(stage())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.spectrum.seed.wrapping_add(1));
    let n = cfg.n;
    let coupling = Mat::from_fn(n, n, |_, _| {
        let x: f64 = StandardNormal.sample(&mut rng);
        T::from_real(scale * x)
    });
    let coupling = CoefficientOperator::dense(coupling).map_err(stage())?;
    let p = base
        .with_low_rank_term(Some(&coupling), first.factors.l(), first.factors.d().as_ref())
        .map_err(stage())?;
    Ok(p.with_name(format!("coupled-{}x{}", n, cfg.m)))
}

/// Outcome of one run, after its artifacts were written.
#[derive(Debug)]
pub struct RunReport {
    pub line: String,
    pub exit_code: i32,
    pub error: Option<CliError>,
}

pub fn execute(cfg: &RunConfig, settings_text: &str) -> Result<RunReport, CliError> {
    let problem = build_problem(cfg)?;
    match &problem {
        AnyProblem::Real(p) => execute_typed(p, cfg, settings_text),
        AnyProblem::Complex(p) => execute_typed(p, cfg, settings_text),
    }
}

fn execute_typed<T: Scalar>(
    p: &LyapunovProblem<T>,
    cfg: &RunConfig,
    settings_text: &str,
) -> Result<RunReport, CliError> {
    let opts = RunOptions {
        tol: cfg.tol,
        max_cols: cfg.max_cols,
        norm: cfg.norm,
        k_max: cfg.k_max,
    };
    let mut projection = ProjectionShifts::new(cfg.ell, cfg.sketch_rank.unwrap_or(p.m()));
    let mut fixed = match &cfg.shift_values {
        Some(v) => Some(FixedShifts::from_values(v, T::ARITHMETIC).map_err(CliError::stage("shifts"))?),
        None => None,
    };
    let shifts: &mut dyn ShiftSource<T> = match &mut fixed {
        Some(f) => f,
        None => &mut projection,
    };
    let start = Instant::now();
    let outcome = match cfg.variant {
        Variant::Block => run_block_adi(p, shifts, &opts),
        Variant::Tangential => run_tangential_adi(p, shifts, &mut DirectionSelector::new(cfg.strategy), &opts),
    };
    let runtime = start.elapsed().as_secs_f64();
    let (result, error) = match outcome {
        Ok(r) => (r, None),
        Err(f) => {
            let f = *f;
            (
                f.partial,
                Some(CliError::Stage {
                    stage: "solve",
                    source: f.error,
                }),
            )
        }
    };
    let explicit = if result.factors.ncols() > 0 {
        explicit_residual_norm(p, result.factors.l(), result.factors.d().as_ref())
            .ok()
            .map(|r| r / result.trace.initial_norm)
    } else {
        None
    };
    let exit_code = match &error {
        Some(e) => e.exit_code(),
        None if result.converged => EXIT_CONVERGED,
        None => EXIT_NOT_CONVERGED,
    };
    let status = match (&error, result.converged) {
        (Some(_), _) => "failed",
        (None, true) => "converged",
        (None, false) => "not converged",
    };

    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::output(&dir, e))?;
    write(&dir.join("trace.csv"), &result.trace.to_csv())?;
    write(&dir.join("config.txt"), settings_text)?;
    if cfg.write_factors {
        write_array(&dir.join("L.mtx"), result.factors.l()).map_err(CliError::stage("output"))?;
        write(&dir.join("D.txt"), &format_center(result.factors.blocks()))?;
    }
    let summary = summary(
        p,
        cfg,
        &result,
        status,
        error.as_ref(),
        explicit,
        runtime,
        projection.fallbacks(),
    );
    write(&dir.join("summary.txt"), &summary)?;

    let mut line = format!(
        "{}: {status}, residual {:.3e}, {} columns, {} solves, {:.2}s -> {}",
        p.name(),
        result.final_residual(),
        result.factors.ncols(),
        result.trace.total_solves(),
        runtime,
        dir.display()
    );
    if let Some(e) = &error {
        write!(line, " ({e})").unwrap();
    }
    Ok(RunReport { line, exit_code, error })
}

#[allow(clippy::too_many_arguments)]
fn summary<T: Scalar>(
    p: &LyapunovProblem<T>,
    cfg: &RunConfig,
    r: &RunResult<T>,
    status: &str,
    error: Option<&CliError>,
    explicit: Option<f64>,
    runtime: f64,
    fallbacks: usize,
) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k}: {v}").unwrap();
    kv("problem", p.name().to_string());
    kv("n", p.n().to_string());
    kv("m", p.m().to_string());
    kv("arithmetic", T::ARITHMETIC.to_string());
    kv("variant", cfg.variant.to_string());
    if cfg.variant == Variant::Tangential {
        kv("directions", cfg.strategy.to_string());
    }
    kv("status", status.to_string());
    kv("tolerance", format!("{:e}", cfg.tol));
    kv("final_residual", format!("{:e}", r.final_residual()));
    if let Some(x) = explicit {
        kv("explicit_residual", format!("{x:e}"));
    }
    kv("steps", r.trace.records.len().to_string());
    kv("columns", r.factors.ncols().to_string());
    kv("solves", r.trace.total_solves().to_string());
    kv("shift_pools", r.trace.pools.len().to_string());
    kv("shift_fallbacks", fallbacks.to_string());
    kv("runtime_s", format!("{runtime:.3}"));
    if let Some(e) = error {
        kv("error", e.to_string());
    }
    for note in &r.notes {
        kv("note", note.clone());
    }
    s
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::output(path, e))
}

/// Runs `repeat` independent copies with consecutive seeds in parallel, one subdirectory each.
pub fn execute_repeated(cfg: &RunConfig, settings_text: &str, repeat: usize) -> Vec<Result<RunReport, CliError>> {
    if repeat <= 1 {
        return vec![execute(cfg, settings_text)];
    }
    let configs: Vec<RunConfig> = (0..repeat)
        .map(|k| {
            let mut c = cfg.clone();
            c.spectrum.seed = c.spectrum.seed.wrapping_add(k as u64);
            if let tadi::directions::DirectionStrategy::Random { seed } = &mut c.strategy {
                *seed = seed.wrapping_add(k as u64);
            }
            c.output_dir = cfg.output_dir.join(format!("run-{k:03}"));
            c
        })
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || execute(c, settings_text)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}
