use std::path::Path;
use std::process::{Command, Output};

fn tadi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tadi"))
        .args(args)
        .env_remove("TADI_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Data rows of a trace file with the wall-time column removed.
fn rows_without_time(csv: &str) -> Vec<String> {
    csv.lines()
        .skip(2)
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

fn summary_value(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in summary:\n{summary}"))
        .to_string()
}

fn dir_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scalar_preset_converges_in_one_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("scalar");
    let run = tadi(&["solve", "--preset", "scalar", "--out", dir_arg(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let csv = read(&out.join("trace.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# tadi-trace v1"));
    assert_eq!(
        lines.next(),
        Some("iteration,columns,shift_re,shift_im,direction,residual,solves,wall_time_s")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(&fields[..7], &["1", "1", "-1e0", "0e0", "-1", "0e0", "1"]);

    let l = read(&out.join("L.mtx"));
    assert!(l.starts_with("%%MatrixMarket matrix array real general\n1 1\n"));
    assert_eq!(l.lines().nth(2).unwrap().parse::<f64>().unwrap(), -0.5);
    let d = read(&out.join("D.txt"));
    assert_eq!(
        d.lines().take(4).collect::<Vec<_>>(),
        ["# tadi-center v1", "field real", "blocks 1", "1"]
    );
    assert_eq!(d.lines().nth(4).unwrap().parse::<f64>().unwrap(), 4.0);

    let summary = read(&out.join("summary.txt"));
    assert_eq!(summary_value(&summary, "status"), "converged");
    assert_eq!(summary_value(&summary, "final_residual").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn random_directions_do_not_converge_and_keep_the_full_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("random");
    let run = tadi(&["solve", "--preset", "random", "--out", dir_arg(&out)]);
    assert_eq!(code(&run), 2, "{}", String::from_utf8_lossy(&run.stderr));
    let summary = read(&out.join("summary.txt"));
    assert_eq!(summary_value(&summary, "status"), "not converged");
    let steps: usize = summary_value(&summary, "steps").parse().unwrap();
    let csv = read(&out.join("trace.csv"));
    let rows = rows_without_time(&csv);
    assert_eq!(rows.len(), steps);
    assert!(steps > 50);
    let best = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(5).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(best > 1e-2, "random directions reached {best:e}");
}

#[test]
fn malformed_configuration_is_a_usage_error_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "solver.tol = 1e-8\nsolver.tolerance = 1e-8\n").unwrap();
    let out = tmp.path().join("out");
    let run = tadi(&["solve", "--config", dir_arg(&cfg), "--out", dir_arg(&out)]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("solver.tolerance"));
    assert!(!out.exists());

    for args in [
        vec!["solve", "--no-such-flag", "1"],
        vec!["solve", "--set", "shifts.count=3"],
        vec!["solve", "--solver-tol", "-1"],
        vec!["solve", "--solver-variant", "sideways"],
        vec!["solve", "--preset", "unknown"],
        vec!["solve", "--problem-m", "600"],
    ] {
        let mut full = args.clone();
        full.extend(["--out", dir_arg(&out)]);
        let run = tadi(&full);
        assert_eq!(code(&run), 3, "{args:?}");
        assert!(!out.exists(), "{args:?} wrote output");
    }
}

#[test]
fn identical_configuration_gives_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for (k, variant) in ["tangential", "tangential", "block", "block"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let run = tadi(&[
            "solve",
            "--problem-n",
            "80",
            "--problem-m",
            "6",
            "--problem-seed",
            "7",
            "--solver-variant",
            variant,
            "--out",
            dir_arg(&out),
        ]);
        assert_eq!(code(&run), 0);
        traces.push(rows_without_time(&read(&out.join("trace.csv"))));
        assert_eq!(
            read(&out.join("L.mtx")),
            read(&tmp.path().join(format!("run{}", k - k % 2)).join("L.mtx"))
        );
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[2], traces[3]);
}

#[test]
fn trace_residual_matches_explicit_residual() {
    let tmp = tempfile::tempdir().unwrap();
    for (variant, arithmetic) in [("block", "real"), ("tangential", "real"), ("tangential", "complex")] {
        let out = tmp.path().join(format!("{variant}-{arithmetic}"));
        let run = tadi(&[
            "solve",
            "--problem-n",
            "150",
            "--problem-m",
            "8",
            "--solver-variant",
            variant,
            "--problem-arithmetic",
            arithmetic,
            "--out",
            dir_arg(&out),
        ]);
        assert_eq!(code(&run), 0);
        let summary = read(&out.join("summary.txt"));
        let implicit: f64 = summary_value(&summary, "final_residual").parse().unwrap();
        let explicit: f64 = summary_value(&summary, "explicit_residual").parse().unwrap();
        assert!(
            (implicit - explicit).abs() <= 1e-10,
            "{variant}: {implicit:e} vs {explicit:e}"
        );
        assert_eq!(summary_value(&summary, "arithmetic"), arithmetic);
    }
}

#[test]
fn compare_reports_ratios_and_unreached_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let r = tmp.path().join("r");
    assert_eq!(
        code(&tadi(&[
            "solve",
            "--problem-n",
            "60",
            "--problem-m",
            "4",
            "--out",
            dir_arg(&a)
        ])),
        0
    );
    assert_eq!(code(&tadi(&["solve", "--preset", "random", "--out", dir_arg(&r)])), 2);
    let trace = a.join("trace.csv");
    let other = tmp.path().join("copy.csv");
    std::fs::copy(&trace, &other).unwrap();

    let run = tadi(&["compare", dir_arg(&trace), dir_arg(&other), "--levels", "1e-3,1e-10"]);
    assert_eq!(code(&run), 0);
    let table = String::from_utf8(run.stdout).unwrap();
    let level_rows: Vec<&str> = table.lines().skip(1).take(2).collect();
    for row in &level_rows {
        assert!(row.trim_end().ends_with("1.000"), "{row}");
    }

    let run = tadi(&[
        "compare",
        dir_arg(&trace),
        dir_arg(&r.join("trace.csv")),
        "--levels",
        "1e-10",
    ]);
    assert_eq!(code(&run), 0);
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.lines().nth(1).unwrap().contains("unreached"), "{table}");

    std::fs::write(&other, "iteration,columns\n1,2\n").unwrap();
    assert_eq!(code(&tadi(&["compare", dir_arg(&trace), dir_arg(&other)])), 3);
}

#[test]
fn tangential_factor_is_no_larger_than_block_at_the_final_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for variant in ["block", "tangential"] {
        let out = tmp.path().join(variant);
        let run = tadi(&[
            "solve",
            "--problem-n",
            "200",
            "--problem-m",
            "20",
            "--solver-variant",
            variant,
            "--out",
            dir_arg(&out),
        ]);
        assert_eq!(code(&run), 0);
        traces.push(out.join("trace.csv"));
    }
    let run = tadi(&["compare", dir_arg(&traces[0]), dir_arg(&traces[1]), "--levels", "1e-12"]);
    let table = String::from_utf8(run.stdout).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split_whitespace().collect();
    let (block, tangential): (usize, usize) = (row[1].parse().unwrap(), row[2].parse().unwrap());
    assert!(tangential <= block, "tangential {tangential} vs block {block}");
}

#[test]
fn oracle_agrees_with_written_factors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let problem = [
        "--problem-n",
        "30",
        "--problem-m",
        "3",
        "--problem-arithmetic",
        "complex",
    ];
    let mut args = vec!["solve"];
    args.extend(problem);
    args.extend(["--out", dir_arg(&out)]);
    assert_eq!(code(&tadi(&args)), 0);

    let oracle_dir = tmp.path().join("oracle");
    let mut args = vec!["oracle"];
    args.extend(problem);
    args.extend(["--out", dir_arg(&oracle_dir), "--factors", dir_arg(&out)]);
    let run = tadi(&args);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    assert_eq!(summary_value(&text, "method"), "kronecker");
    let err: f64 = summary_value(&text, "factor_relative_error").parse().unwrap();
    assert!(err <= 1e-8, "{err:e}");
    assert!(oracle_dir.join("X.mtx").exists());

    let run = tadi(&[
        "oracle",
        "--problem-n",
        "300",
        "--problem-m",
        "3",
        "--out",
        dir_arg(&oracle_dir),
    ]);
    assert_eq!(code(&run), 3);
}

#[test]
fn generated_files_reproduce_the_synthetic_run() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = tmp.path().join("gen");
    let problem = ["--problem-n", "50", "--problem-m", "4", "--problem-seed", "3"];
    let mut args = vec!["gen"];
    args.extend(problem);
    args.extend(["--out", dir_arg(&gen)]);
    assert_eq!(code(&tadi(&args)), 0);

    let direct = tmp.path().join("direct");
    let mut args = vec!["solve"];
    args.extend(problem);
    args.extend(["--out", dir_arg(&direct)]);
    assert_eq!(code(&tadi(&args)), 0);

    let cfg = tmp.path().join("mtx.cfg");
    let text = ["a", "e", "b", "r"]
        .iter()
        .map(|k| {
            format!(
                "problem.{k} = {}\n",
                gen.join(format!("{}.mtx", k.to_uppercase())).display()
            )
        })
        .collect::<String>();
    std::fs::write(&cfg, format!("problem.source = mtx\n{text}")).unwrap();
    let loaded = tmp.path().join("loaded");
    assert_eq!(
        code(&tadi(&["solve", "-c", dir_arg(&cfg), "--out", dir_arg(&loaded)])),
        0
    );
    assert_eq!(
        rows_without_time(&read(&direct.join("trace.csv"))),
        rows_without_time(&read(&loaded.join("trace.csv")))
    );
}

#[test]
fn repeat_runs_each_seed_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let run = tadi(&[
        "solve",
        "--problem-n",
        "60",
        "--problem-m",
        "4",
        "--repeat",
        "3",
        "--out",
        dir_arg(&out),
    ]);
    assert_eq!(code(&run), 0);
    let mut first_rows = Vec::new();
    for k in 0..3 {
        let dir = out.join(format!("run-{k:03}"));
        let summary = read(&dir.join("summary.txt"));
        assert!(summary_value(&summary, "problem").ends_with(&format!("seed{}", k + 1)));
        first_rows.push(rows_without_time(&read(&dir.join("trace.csv")))[0].clone());
    }
    assert_ne!(first_rows[0], first_rows[1]);

    let single = tmp.path().join("single");
    let run = tadi(&[
        "solve",
        "--problem-n",
        "60",
        "--problem-m",
        "4",
        "--problem-seed",
        "2",
        "--out",
        dir_arg(&single),
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(
        rows_without_time(&read(&single.join("trace.csv"))),
        rows_without_time(&read(&out.join("run-001").join("trace.csv")))
    );
}

#[test]
fn output_directory_defaults_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_tadi"))
        .args(["solve", "--preset", "scalar"])
        .env("TADI_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&run), 0);
    for f in ["trace.csv", "summary.txt", "L.mtx", "D.txt", "config.txt"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn unstable_fixed_shift_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tadi(&[
        "solve",
        "--preset",
        "scalar",
        "--shifts-values=0.5",
        "--out",
        dir_arg(&tmp.path().join("x")),
    ]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("shifts"));
}
