//! Text container for the block-diagonal center `D`.
//!
//! ```text
//! # tadi-center v1
//! field real|complex
//! blocks <count>
//! <size>
//! <size rows of size entries; complex entries are written as "re im">
//! ...
//! ```

use std::fmt::Write as _;

use faer::Mat;
use tadi::c64;
use tadi::linalg::{Arithmetic, Scalar};

pub const CENTER_VERSION_LINE: &str = "# tadi-center v1";

pub fn format_center<T: Scalar>(blocks: &[Mat<T>]) -> String {
    let mut out = format!(
        "{CENTER_VERSION_LINE}\nfield {}\nblocks {}\n",
        T::ARITHMETIC,
        blocks.len()
    );
    for b in blocks {
        writeln!(out, "{}", b.nrows()).unwrap();
        for i in 0..b.nrows() {
            let row: Vec<String> = (0..b.ncols())
                .map(|j| {
                    let v = b[(i, j)].to_c64();
                    match T::ARITHMETIC {
                        Arithmetic::Real => format!("{:.16e}", v.re),
                        Arithmetic::Complex => format!("{:.16e} {:.16e}", v.re, v.im),
                    }
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Parses a center file into complex blocks.
pub fn parse_center(text: &str) -> Result<Vec<Mat<c64>>, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate();
    let mut next = |what: &str| {
        lines
            .next()
            .map(|(_, l)| l)
            .ok_or_else(|| format!("unexpected end of file, expected {what}"))
    };
    if next("version line")? != CENTER_VERSION_LINE {
        return Err(format!("missing {CENTER_VERSION_LINE:?} header"));
    }
    let complex = match next("field line")? {
        "field real" => false,
        "field complex" => true,
        other => return Err(format!("bad field line {other:?}")),
    };
    let count: usize = next("block count")?
        .strip_prefix("blocks ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or("bad block count line")?;
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let k: usize = next("block size")?
            .parse()
            .map_err(|e| format!("bad block size: {e}"))?;
        let mut b = Mat::<c64>::zeros(k, k);
        for i in 0..k {
            let nums: Vec<f64> = next("block row")?
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| format!("bad entry: {e}"))?;
            let per = if complex { 2 } else { 1 };
            if nums.len() != per * k {
                return Err(format!("block row has {} numbers, expected {}", nums.len(), per * k));
            }
            for j in 0..k {
                b[(i, j)] = if complex {
                    c64::new(nums[2 * j], nums[2 * j + 1])
                } else {
                    c64::new(nums[j], 0.0)
                };
            }
        }
        blocks.push(b);
    }
    if let Some((_, extra)) = lines.next() {
        return Err(format!("trailing content {extra:?}"));
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let real = vec![
            Mat::from_fn(2, 2, |i, j| (i + 2 * j) as f64 - 0.25),
            Mat::from_fn(1, 1, |_, _| -3.5),
        ];
        let back = parse_center(&format_center(&real)).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in real.iter().zip(&back) {
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    assert_eq!(b[(i, j)], c64::new(a[(i, j)], 0.0));
                }
            }
        }
        let cplx = vec![Mat::from_fn(2, 2, |i, j| c64::new(i as f64, -(j as f64) / 3.0))];
        let back = parse_center(&format_center(&cplx)).unwrap();
        assert_eq!(back[0], cplx[0]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_center("").is_err());
        assert!(parse_center("# tadi-center v1\nfield real\nblocks 1\n2\n1 2\n").is_err());
        assert!(parse_center("# tadi-center v1\nfield real\nblocks 1\n1\n1 2\n").is_err());
        assert!(parse_center("# tadi-center v1\nfield real\nblocks 0\nextra\n").is_err());
    }
}
