//! Matrix Market reader and writer (coordinate and array formats, real and complex fields).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use faer::{c64, Mat, MatRef};

use super::{AnyProblem, LyapunovProblem};
use crate::error::{Error, Result};
use crate::linalg::{Arithmetic, CoefficientOperator, Scalar, Storage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtxFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

/// A parsed matrix with symmetric storage already expanded; indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MtxMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub format: MtxFormat,
    pub complex: bool,
    pub entries: Vec<(usize, usize, c64)>,
}

impl MtxMatrix {
    pub fn to_dense(&self) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            out[(i, j)] += v;
        }
        out
    }

    /// Sparse operator for coordinate input, dense for array input.
    pub fn to_operator(&self, label: &str) -> Result<CoefficientOperator<c64>> {
        if self.nrows != self.ncols {
            return Err(Error::Dimension(format!(
                "{label}: coefficient matrix must be square, got {}x{}",
                self.nrows, self.ncols
            )));
        }
        match self.format {
            MtxFormat::Coordinate => CoefficientOperator::from_triplets(self.nrows, &self.entries),
            MtxFormat::Array => CoefficientOperator::dense(self.to_dense()),
        }
    }
}

fn parse_err(path: &str, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_string(),
        message: format!("line {line}: {message}"),
    }
}

/// Parses Matrix Market text; `label` names the source in error messages.
pub fn parse_matrix_market(text: &str, label: &str) -> Result<MtxMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(label, 1, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(label, 1, format!("bad header {header:?}")));
    }
    let format = match words[2].as_str() {
        "coordinate" => MtxFormat::Coordinate,
        "array" => MtxFormat::Array,
        other => return Err(parse_err(label, 1, format!("unsupported format {other:?}"))),
    };
    let (complex, pattern) = match words[3].as_str() {
        "real" | "double" | "integer" => (false, false),
        "complex" => (true, false),
        "pattern" if format == MtxFormat::Coordinate => (false, true),
        other => return Err(parse_err(label, 1, format!("unsupported field {other:?}"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" if complex => Symmetry::Hermitian,
        other => return Err(parse_err(label, 1, format!("unsupported symmetry {other:?}"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = body.next().ok_or_else(|| parse_err(label, 2, "missing size line"))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|w| w.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(label, size_no + 1, format!("bad size line: {e}")))?;
    let expected_sizes = if format == MtxFormat::Coordinate { 3 } else { 2 };
    if sizes.len() != expected_sizes {
        return Err(parse_err(
            label,
            size_no + 1,
            format!("expected {expected_sizes} sizes"),
        ));
    }
    let (nrows, ncols) = (sizes[0], sizes[1]);
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(
            label,
            size_no + 1,
            "symmetric storage requires a square matrix",
        ));
    }

    let parse_value = |fields: &[&str], line: usize| -> Result<c64> {
        let want = if pattern {
            0
        } else if complex {
            2
        } else {
            1
        };
        if fields.len() != want {
            return Err(parse_err(
                label,
                line,
                format!("expected {want} value fields, got {}", fields.len()),
            ));
        }
        if pattern {
            return Ok(c64::new(1.0, 0.0));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| parse_err(label, line, format!("bad number {s:?}: {e}")))
        };
        let re = num(fields[0])?;
        let im = if complex { num(fields[1])? } else { 0.0 };
        Ok(c64::new(re, im))
    };

    let mut stored: Vec<(usize, usize, c64)> = Vec::new();
    match format {
        MtxFormat::Coordinate => {
            let nnz = sizes[2];
            stored.reserve(nnz);
            for (no, line) in body.by_ref().take(nnz) {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 2 {
                    return Err(parse_err(label, no + 1, "missing indices"));
                }
                let idx = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| parse_err(label, no + 1, format!("bad index {s:?}: {e}")))
                };
                let (i, j) = (idx(fields[0])?, idx(fields[1])?);
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(parse_err(label, no + 1, format!("index ({i}, {j}) out of range")));
                }
                stored.push((i - 1, j - 1, parse_value(&fields[2..], no + 1)?));
            }
            if stored.len() != nnz {
                return Err(parse_err(
                    label,
                    size_no + 1,
                    format!("expected {nnz} entries, found {}", stored.len()),
                ));
            }
        }
        MtxFormat::Array => {
            let positions: Vec<(usize, usize)> = (0..ncols)
                .flat_map(|j| {
                    let start = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::SkewSymmetric => j + 1,
                        _ => j,
                    };
                    (start..nrows).map(move |i| (i, j))
                })
                .collect();
            let mut it = positions.iter();
            for (no, line) in body.by_ref() {
                let fields: Vec<&str> = line.split_whitespace().collect();
                let &(i, j) = it
                    .next()
                    .ok_or_else(|| parse_err(label, no + 1, "more values than the matrix holds"))?;
                stored.push((i, j, parse_value(&fields, no + 1)?));
            }
            if stored.len() != positions.len() {
                return Err(parse_err(
                    label,
                    size_no + 1,
                    format!("expected {} values, found {}", positions.len(), stored.len()),
                ));
            }
        }
    }
    if let Some((no, _)) = body.next() {
        return Err(parse_err(label, no + 1, "trailing data after the last entry"));
    }

    let mut entries = Vec::with_capacity(stored.len() * 2);
    for (i, j, v) in stored {
        entries.push((i, j, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => entries.push((j, i, v)),
                Symmetry::SkewSymmetric => entries.push((j, i, -v)),
                Symmetry::Hermitian => entries.push((j, i, v.conj())),
            }
        }
    }
    Ok(MtxMatrix {
        nrows,
        ncols,
        format,
        complex,
        entries,
    })
}

pub fn read_matrix_market(path: &Path) -> Result<MtxMatrix> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: label.clone(),
        message: e.to_string(),
    })?;
    parse_matrix_market(&text, &label)
}

fn field_name<T: Scalar>() -> &'static str {
    match T::ARITHMETIC {
        Arithmetic::Real => "real",
        Arithmetic::Complex => "complex",
    }
}

fn push_value<T: Scalar>(out: &mut String, v: T) {
    match T::ARITHMETIC {
        Arithmetic::Real => write!(out, "{:.16e}", v.re()),
        Arithmetic::Complex => write!(out, "{:.16e} {:.16e}", v.re(), v.im()),
    }
    .expect("writing to a String cannot fail");
}

/// Dense matrix as Matrix Market array text (column-major, general).
pub fn format_array<T: Scalar>(m: MatRef<'_, T>) -> String {
    let mut out = format!("%%MatrixMarket matrix array {} general\n", field_name::<T>());
    writeln!(out, "{} {}", m.nrows(), m.ncols()).unwrap();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            push_value(&mut out, m[(i, j)]);
            out.push('\n');
        }
    }
    out
}

/// Operator as Matrix Market coordinate text; dense storage is written as array text.
pub fn format_operator<T: Scalar>(op: &CoefficientOperator<T>) -> String {
    if let Storage::Dense(m) = op.storage() {
        return format_array(m.as_ref());
    }
    let mut body = String::new();
    let mut nnz = 0usize;
    op.for_each_entry(|i, j, v| {
        write!(body, "{} {} ", i + 1, j + 1).unwrap();
        push_value(&mut body, v);
        body.push('\n');
        nnz += 1;
    });
    let n = op.n();
    format!(
        "%%MatrixMarket matrix coordinate {} general\n{n} {n} {nnz}\n{body}",
        field_name::<T>()
    )
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_array<T: Scalar>(path: &Path, m: MatRef<'_, T>) -> Result<()> {
    write_text(path, &format_array(m))
}

pub fn write_operator<T: Scalar>(path: &Path, op: &CoefficientOperator<T>) -> Result<()> {
    write_text(path, &format_operator(op))
}

/// File set of a problem on disk; missing `E` and `R` default to identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFiles {
    pub a: PathBuf,
    pub e: Option<PathBuf>,
    pub b: PathBuf,
    pub r: Option<PathBuf>,
}

/// Reads a problem; the arithmetic is complex iff any file has a complex field.
pub fn load_matrix_market(files: &ProblemFiles) -> Result<AnyProblem> {
    let la = files.a.display().to_string();
    let lb = files.b.display().to_string();
    let a_mtx = read_matrix_market(&files.a)?;
    let b_mtx = read_matrix_market(&files.b)?;
    let a = a_mtx.to_operator(&la)?;
    let n = a.n();
    let mut complex = a_mtx.complex || b_mtx.complex;

    let e = match &files.e {
        Some(path) => {
            let le = path.display().to_string();
            let e_mtx = read_matrix_market(path)?;
            complex |= e_mtx.complex;
            let e = e_mtx.to_operator(&le)?;
            if e.n() != n {
                return Err(Error::Dimension(format!(
                    "{le}: E is {0}x{0} but A ({la}) is {n}x{n}",
                    e.n()
                )));
            }
            e
        }
        None => CoefficientOperator::identity(n),
    };
    if b_mtx.nrows != n {
        return Err(Error::Dimension(format!(
            "{lb}: B has {} rows but A ({la}) is {n}x{n}",
            b_mtx.nrows
        )));
    }
    let b = b_mtx.to_dense();
    let m = b.ncols();
    let r = match &files.r {
        Some(path) => {
            let lr = path.display().to_string();
            let r_mtx = read_matrix_market(path)?;
            complex |= r_mtx.complex;
            if r_mtx.nrows != m || r_mtx.ncols != m {
                return Err(Error::Dimension(format!(
                    "{lr}: R is {}x{} but B ({lb}) has {m} columns",
                    r_mtx.nrows, r_mtx.ncols
                )));
            }
            r_mtx.to_dense()
        }
        None => Mat::<c64>::identity(m, m),
    };
    let name = files
        .a
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matrix-market".into());
    let p = LyapunovProblem::new(a, e, b, r)?.with_name(name);
    if complex {
        Ok(AnyProblem::Complex(p))
    } else {
        Ok(AnyProblem::Real(p.to_real().expect("real fields produce real entries")))
    }
}

/// Writes `A.mtx`, `E.mtx`, `B.mtx`, `R.mtx` into `dir`.
pub fn save_problem(dir: &Path, problem: &AnyProblem) -> Result<ProblemFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let files = ProblemFiles {
        a: dir.join("A.mtx"),
        e: Some(dir.join("E.mtx")),
        b: dir.join("B.mtx"),
        r: Some(dir.join("R.mtx")),
    };
    fn save<T: Scalar>(p: &LyapunovProblem<T>, f: &ProblemFiles) -> Result<()> {
        write_operator(&f.a, p.a())?;
        write_operator(f.e.as_ref().unwrap(), p.e())?;
        write_array(&f.b, p.b())?;
        write_array(f.r.as_ref().unwrap(), p.r())
    }
    match problem {
        AnyProblem::Real(p) => save(p, &files)?,
        AnyProblem::Complex(p) => save(p, &files)?,
    }
    Ok(files)
}
