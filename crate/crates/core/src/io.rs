//! Edge-list and membership files.
//!
//! Edge lists start with the header `# dispectral-edgelist v1 n=<n>` followed
//! by one `src<TAB>dst<TAB>weight` line per stored entry, 0-based, with the
//! weight printed to 17 significant digits. Membership files hold one integer
//! label per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const HEADER_PREFIX: &str = "# dispectral-edgelist v1 n=";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_edgelist<W: Write>(a: &SparseMatrix, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{HEADER_PREFIX}{}", a.n_rows())?;
    for (i, j, v) in a.iter() {
        writeln!(w, "{i}\t{j}\t{}", fmt_f64(v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edgelist<R: Read>(input: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))??;
    let n: usize = header
        .trim_end()
        .strip_prefix(HEADER_PREFIX)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad edge-list header {header:?}")))?;
    let mut triplets = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let mut field = |name: &str| {
            parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {name}", lineno + 2)))
                .map(str::trim)
        };
        let bad = |what: &str, s: &str| Error::Parse(format!("line {}: bad {what} {s:?}", lineno + 2));
        let src = field("source")?;
        let src: usize = src.parse().map_err(|_| bad("source", src))?;
        let dst = field("target")?;
        let dst: usize = dst.parse().map_err(|_| bad("target", dst))?;
        let wt = field("weight")?;
        let wt: f64 = wt.parse().map_err(|_| bad("weight", wt))?;
        triplets.push((src, dst, wt));
    }
    SparseMatrix::from_triplets(n, n, &triplets).map_err(|e| Error::Parse(e.to_string()))
}

pub fn save_edgelist(a: &SparseMatrix, path: &Path) -> Result<()> {
    write_edgelist(a, fs::File::create(path)?)
}

pub fn load_edgelist(path: &Path) -> Result<SparseMatrix> {
    read_edgelist(fs::File::open(path)?)
}

pub fn write_labels<W: Write>(labels: &[usize], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(input: R) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| Error::Parse(format!("line {}: bad label {t:?}", lineno + 1)))?);
    }
    Ok(out)
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    write_labels(labels, fs::File::create(path)?)
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    read_labels(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edgelist_round_trip_is_exact() {
        let a = SparseMatrix::from_triplets(4, 4, &[(0, 1, 0.1), (3, 0, -1.0 / 3.0), (2, 2, 1e-300)]).unwrap();
        let mut buf = Vec::new();
        write_edgelist(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dispectral-edgelist v1 n=4\n0\t1\t1.0000000000000001e-1\n"));
        assert_eq!(read_edgelist(&buf[..]).unwrap(), a);
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(read_edgelist(&b"# nope\n"[..]), Err(Error::Parse(_))));
        assert!(matches!(read_edgelist(&b"# dispectral-edgelist v1 n=2\n0\tx\t1\n"[..]), Err(Error::Parse(_))));
        assert!(matches!(read_edgelist(&b"# dispectral-edgelist v1 n=2\n0\t5\t1\n"[..]), Err(Error::Parse(_))));
    }

    #[test]
    fn labels_round_trip() {
        let mut buf = Vec::new();
        write_labels(&[0, 2, 1], &mut buf).unwrap();
        assert_eq!(read_labels(&buf[..]).unwrap(), vec![0, 2, 1]);
    }
}
