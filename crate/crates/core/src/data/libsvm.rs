use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::DataError;
use crate::linalg::CsrMatrix;
use crate::model::SampleSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: SampleSet,
    pub name: String,
    pub source_path: PathBuf,
}

/// `{+1, 1}` map to `+1`; `{-1, 0, 2}` map to `-1`.
fn map_label(token: &str) -> Option<f64> {
    let v: f64 = token.parse().ok()?;
    if v == 1.0 {
        Some(1.0)
    } else if v == -1.0 || v == 0.0 || v == 2.0 {
        Some(-1.0)
    } else {
        None
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses LIBSVM text: one sample per line, `label idx:value ...` with 1-based
/// strictly increasing indices. Blank lines are skipped, CRLF is accepted and
/// `#` comments are rejected. The feature dimension is the largest index seen
/// unless `n_features` fixes it.
pub fn parse_libsvm<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<SampleSet, DataError> {
    let mut offsets = vec![0usize];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut labels = Vec::new();
    let mut max_col = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| parse_error(lineno, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.contains('#') {
            return Err(parse_error(lineno, "comments are not supported"));
        }
        let mut tokens = line.split_ascii_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        let label = map_label(label).ok_or_else(|| parse_error(lineno, format!("unmappable label '{label}'")))?;
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(lineno, format!("malformed pair '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(lineno, format!("malformed index in '{tok}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(lineno, format!("malformed value in '{tok}'")))?;
            if idx == 0 {
                return Err(parse_error(lineno, "feature indices are 1-based"));
            }
            if idx <= prev {
                return Err(parse_error(lineno, format!("index {idx} does not increase")));
            }
            if !val.is_finite() {
                return Err(parse_error(lineno, format!("non-finite value in '{tok}'")));
            }
            if let Some(p) = n_features {
                if idx > p {
                    return Err(parse_error(
                        lineno,
                        format!("index {idx} exceeds feature dimension {p}"),
                    ));
                }
            }
            prev = idx;
            max_col = max_col.max(idx);
            cols.push(idx - 1);
            vals.push(val);
        }
        labels.push(label);
        offsets.push(cols.len());
    }
    let n = labels.len();
    let p = n_features.unwrap_or(max_col);
    let features = CsrMatrix::from_raw(n, p, offsets, cols, vals)?;
    Ok(SampleSet::new(features, labels)?)
}

pub fn parse_libsvm_str(text: &str, n_features: Option<usize>) -> Result<SampleSet, DataError> {
    parse_libsvm(text.as_bytes(), n_features)
}

/// Writes `samples` in LIBSVM format with 17 significant digits, so that
/// [`parse_libsvm`] recovers the same values.
pub fn write_libsvm<W: Write>(mut w: W, samples: &SampleSet) -> std::io::Result<()> {
    let x = samples.features();
    for (i, &b) in samples.labels().iter().enumerate() {
        write!(w, "{}", if b > 0.0 { "+1" } else { "-1" })?;
        let (cols, vals) = x.row(i);
        for (c, v) in cols.iter().zip(vals) {
            write!(w, " {}:{:.16e}", c + 1, v)?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a LIBSVM file; the dataset is named after the file stem.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let samples = parse_libsvm(BufReader::new(file), None)?;
    if samples.is_empty() {
        return Err(DataError::Invalid(format!("{} contains no samples", path.display())));
    }
    if samples.n_features() == 0 {
        return Err(DataError::Invalid(format!("{} has no features", path.display())));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        samples,
        name,
        source_path: path.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let s = parse_libsvm_str("1 3:0.5 7:1.2\n", None).unwrap();
        assert_eq!(s.labels(), &[1.0]);
        assert_eq!(s.n_features(), 7);
        assert_eq!(s.features().row(0), (&[2usize, 6][..], &[0.5, 1.2][..]));
    }

    #[test]
    fn label_only_line() {
        let s = parse_libsvm_str("-1\n", Some(4)).unwrap();
        assert_eq!(s.labels(), &[-1.0]);
        assert_eq!(s.features().nnz(), 0);
        assert_eq!(s.n_features(), 4);
    }

    #[test]
    fn label_mapping() {
        let s = parse_libsvm_str("+1 1:1\n0 1:1\n2 1:1\n-1 1:1\n1.0 1:1\n", None).unwrap();
        assert_eq!(s.labels(), &[1.0, -1.0, -1.0, -1.0, 1.0]);
        assert!(parse_libsvm_str("3 1:1\n", None).is_err());
    }

    #[test]
    fn crlf_and_blank_lines() {
        let s = parse_libsvm_str("1 1:2\r\n\r\n\n-1 2:3\r\n", None).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.n_features(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("1 1:2\n1 3:1 2:1\n", 2),
            ("1 1:2\n\n1 x\n", 3),
            ("1 0:1\n", 1),
            ("# header\n1 1:1\n", 1),
            ("1 1:1 # note\n", 1),
            ("1 1:nan\n", 1),
            ("1 1:1 1:2\n", 1),
        ];
        for (text, line) in cases {
            match parse_libsvm_str(text, None) {
                Err(DataError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_libsvm_str("1 5:1\n", Some(3)),
            Err(DataError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn write_then_parse() {
        let x = CsrMatrix::from_dense(&[vec![0.1, 0.0, -3.25e-7], vec![0.0, 0.0, 0.0]], 3).unwrap();
        let s = SampleSet::new(x, vec![1.0, -1.0]).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_libsvm_str(&text, Some(3)).unwrap(), s);
    }
}
