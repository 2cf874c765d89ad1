//! Flat `section.key = value` run configuration layered as defaults < preset < file < flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tadi::c64;
use tadi::directions::DirectionStrategy;
use tadi::linalg::Arithmetic;
use tadi::problem::SpectrumSpec;
use tadi::residual::NormKind;

use crate::error::CliError;

/// Every accepted key with its default (empty means "derived from other keys") and help text.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("problem.source", "synthetic", "synthetic | mtx | scalar | coupled"),
    ("problem.n", "500", "dimension of a synthetic problem"),
    ("problem.m", "20", "columns of B for a synthetic problem"),
    ("problem.negatives", "", "negative eigenvalues of R (default m/2)"),
    ("problem.seed", "1", "seed of the synthetic generator"),
    (
        "problem.re_min",
        "-5",
        "most negative real part of the synthetic spectrum",
    ),
    (
        "problem.re_max",
        "-1",
        "least negative real part of the synthetic spectrum",
    ),
    (
        "problem.im_max",
        "1",
        "largest imaginary part of the synthetic spectrum",
    ),
    ("problem.complex_fraction", "0.3", "fraction of complex eigenvalues"),
    (
        "problem.transform_cond",
        "4",
        "condition number of the similarity transform",
    ),
    (
        "problem.coupling",
        "0.05",
        "entry scale of the coupling matrix for source = coupled",
    ),
    ("problem.a", "", "Matrix Market file of A"),
    ("problem.e", "", "Matrix Market file of E (default identity)"),
    ("problem.b", "", "Matrix Market file of B"),
    ("problem.r", "", "Matrix Market file of R (default identity)"),
    ("problem.arithmetic", "auto", "auto | real | complex"),
    ("solver.variant", "tangential", "block | tangential"),
    ("solver.tol", "1e-12", "normalized residual tolerance"),
    ("solver.max_cols", "", "column budget of L (default 20 m)"),
    ("solver.norm", "spectral", "spectral | frobenius"),
    ("shifts.ell", "6", "shifts kept per pool"),
    ("shifts.k_max", "", "projection space size (default 4 m)"),
    ("shifts.sketch_rank", "", "sketch rank of the initial pool (default m)"),
    (
        "shifts.values",
        "",
        "fixed shift pool, e.g. -1,-2+1i,-2-1i (replaces projection shifts)",
    ),
    (
        "directions.strategy",
        "projected",
        "full | projected | residual | cyclic | random",
    ),
    ("directions.seed", "0", "seed of the random strategy"),
    (
        "output.dir",
        "",
        "output directory (default $TADI_OUTPUT_DIR, then ./tadi-out)",
    ),
    ("output.factors", "true", "write L.mtx and D.txt"),
];

pub const OUTPUT_DIR_ENV: &str = "TADI_OUTPUT_DIR";

/// Name, description and key overrides.
pub type Preset = (&'static str, &'static str, &'static [(&'static str, &'static str)]);

/// Named overlays reproducing the experiments at desk scale.
pub const PRESETS: &[Preset] = &[
    (
        "scalar",
        "1x1 equation -X - X + 2 = 0, solved in one step",
        &[("problem.source", "scalar"), ("solver.variant", "block")],
    ),
    (
        "random",
        "random tangential directions on an indefinite problem (diverges)",
        &[
            ("problem.n", "200"),
            ("problem.m", "10"),
            ("problem.seed", "800"),
            ("solver.variant", "tangential"),
            ("directions.strategy", "random"),
            ("directions.seed", "17"),
        ],
    ),
    (
        "eigen",
        "eigenvector directions with the projected heuristic on the random preset's problem",
        &[
            ("problem.n", "200"),
            ("problem.m", "10"),
            ("problem.seed", "800"),
            ("solver.variant", "tangential"),
            ("directions.strategy", "projected"),
        ],
    ),
    (
        "block",
        "block ADI on a 500 x 20 synthetic problem",
        &[
            ("problem.n", "500"),
            ("problem.m", "20"),
            ("solver.variant", "block"),
            ("solver.max_cols", "400"),
        ],
    ),
    (
        "tangential",
        "tangential ADI on the block preset's problem",
        &[
            ("problem.n", "500"),
            ("problem.m", "20"),
            ("solver.variant", "tangential"),
            ("solver.max_cols", "400"),
        ],
    ),
    (
        "coupled",
        "high-rank constant term from a previous solution (n = 400, m = 140)",
        &[
            ("problem.source", "coupled"),
            ("problem.n", "400"),
            ("problem.m", "10"),
            ("problem.seed", "1000"),
            ("solver.tol", "1e-8"),
            ("solver.max_cols", "4000"),
        ],
    ),
];

/// Raw layered settings before typing.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn defaults() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), CliError> {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(CliError::Usage(format!("{origin}: unknown configuration key {key:?}")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        let (_, _, entries) = PRESETS.iter().find(|(n, _, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            CliError::Usage(format!("unknown preset {name:?}; available: {}", names.join(", ")))
        })?;
        for (k, v) in entries.iter() {
            self.set(k, v, "preset")?;
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected key = value, got {raw:?}", no + 1)))?;
            self.set(k.trim(), v, &format!("{origin}:{}", no + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.get(key);
        v.parse().map_err(|e| CliError::Usage(format!("{key} = {v:?}: {e}")))
    }

    fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if self.get(key).is_empty() {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.get(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    /// Renders every key in file syntax.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Block,
    Tangential,
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "block" => Ok(Variant::Block),
            "tangential" => Ok(Variant::Tangential),
            _ => Err("expected block or tangential".into()),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Block => "block",
            Variant::Tangential => "tangential",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Synthetic,
    Scalar,
    /// Synthetic base problem plus the coupled low-rank term of its own solution.
    Coupled {
        coupling: f64,
    },
    MatrixMarket {
        a: PathBuf,
        e: Option<PathBuf>,
        b: PathBuf,
        r: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub n: usize,
    pub m: usize,
    pub negatives: usize,
    pub spectrum: SpectrumSpec,
    /// `None` infers the arithmetic from the data.
    pub arithmetic: Option<Arithmetic>,
    pub variant: Variant,
    pub tol: f64,
    pub max_cols: Option<usize>,
    pub norm: NormKind,
    pub ell: usize,
    pub k_max: Option<usize>,
    pub sketch_rank: Option<usize>,
    pub shift_values: Option<Vec<c64>>,
    pub strategy: DirectionStrategy,
    pub output_dir: PathBuf,
    pub write_factors: bool,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let source = match s.get("problem.source") {
            "synthetic" => ProblemSource::Synthetic,
            "scalar" => ProblemSource::Scalar,
            "coupled" => ProblemSource::Coupled {
                coupling: s.parse("problem.coupling")?,
            },
            "mtx" => ProblemSource::MatrixMarket {
                a: s.path("problem.a")
                    .ok_or_else(|| CliError::Usage("problem.source = mtx needs problem.a".into()))?,
                e: s.path("problem.e"),
                b: s.path("problem.b")
                    .ok_or_else(|| CliError::Usage("problem.source = mtx needs problem.b".into()))?,
                r: s.path("problem.r"),
            },
            other => {
                return Err(CliError::Usage(format!(
                    "problem.source = {other:?}: expected synthetic, mtx, scalar or coupled"
                )))
            }
        };
        let m: usize = s.parse("problem.m")?;
        let spectrum = SpectrumSpec {
            re_min: s.parse("problem.re_min")?,
            re_max: s.parse("problem.re_max")?,
            im_max: s.parse("problem.im_max")?,
            complex_fraction: s.parse("problem.complex_fraction")?,
            transform_cond: s.parse("problem.transform_cond")?,
            seed: s.parse("problem.seed")?,
        };
        let arithmetic = match s.get("problem.arithmetic") {
            "auto" => None,
            "real" => Some(Arithmetic::Real),
            "complex" => Some(Arithmetic::Complex),
            other => {
                return Err(CliError::Usage(format!(
                    "problem.arithmetic = {other:?}: expected auto, real or complex"
                )))
            }
        };
        let mut strategy: DirectionStrategy = s.parse("directions.strategy")?;
        if let DirectionStrategy::Random { seed } = &mut strategy {
            *seed = s.parse("directions.seed")?;
        }
        let shift_values = match s.get("shifts.values") {
            "" => None,
            list => Some(
                list.split(',')
                    .map(|v| parse_complex(v.trim()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(format!("shifts.values: {e}")))?,
            ),
        };
        let output_dir = s
            .path("output.dir")
            .or_else(|| {
                std::env::var_os(OUTPUT_DIR_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            })
            .unwrap_or_else(|| PathBuf::from("tadi-out"));
        let cfg = Self {
            source,
            n: s.parse("problem.n")?,
            m,
            negatives: s.parse_opt("problem.negatives")?.unwrap_or(m / 2),
            spectrum,
            arithmetic,
            variant: s.parse("solver.variant")?,
            tol: s.parse("solver.tol")?,
            max_cols: s.parse_opt("solver.max_cols")?,
            norm: s.parse("solver.norm")?,
            ell: s.parse("shifts.ell")?,
            k_max: s.parse_opt("shifts.k_max")?,
            sketch_rank: s.parse_opt("shifts.sketch_rank")?,
            shift_values,
            strategy,
            output_dir,
            write_factors: s.parse("output.factors")?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if !(self.tol > 0.0) {
            return bad(format!("solver.tol must be positive, got {}", self.tol));
        }
        if self.ell == 0 {
            return bad("shifts.ell must be at least 1".into());
        }
        if matches!(self.source, ProblemSource::Synthetic | ProblemSource::Coupled { .. }) {
            if self.n == 0 || self.m == 0 || self.m > self.n {
                return bad(format!(
                    "synthetic problems need 1 <= m <= n, got n = {}, m = {}",
                    self.n, self.m
                ));
            }
            if self.negatives > self.m {
                return bad(format!("problem.negatives = {} exceeds m = {}", self.negatives, self.m));
            }
            self.spectrum.check().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let ProblemSource::Coupled { coupling } = self.source {
            if !coupling.is_finite() {
                return bad("problem.coupling must be finite".into());
            }
        }
        if self.max_cols == Some(0) || self.k_max == Some(0) || self.sketch_rank == Some(0) {
            return bad("solver.max_cols, shifts.k_max and shifts.sketch_rank must be positive".into());
        }
        Ok(())
    }
}

/// Parses `-1`, `-2+1i`, `-2-0.5i`, `3i`.
pub fn parse_complex(s: &str) -> Result<c64, String> {
    let t = s.replace(' ', "");
    let Some(body) = t.strip_suffix('i') else {
        return t
            .parse::<f64>()
            .map(|re| c64::new(re, 0.0))
            .map_err(|e| format!("{s:?}: {e}"));
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|e| format!("{s:?}: {e}"))?;
    let im: f64 = im.trim_start_matches('+').parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok(c64::new(re, im))
}
