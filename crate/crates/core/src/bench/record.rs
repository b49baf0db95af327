use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomically, BenchError};
use crate::accounting::Method;
use crate::exec::Exec;
use crate::linalg::vector::norm;
use crate::model::AdmmProblem;
use crate::solvers::SolveResult;

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "repeat",
    "effective_passes",
    "objective",
    "test_loss",
    "constraint_violation",
    "wall_seconds",
    "stored_gradient_vectors",
];

/// Metrics of one run at one recording point. In a mean table `repeat` holds
/// the number of repeats averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub repeat: usize,
    pub effective_passes: f64,
    /// `P(x̄, Ax̄)` on the training set.
    pub objective: f64,
    /// Mean unregularized loss of `x̄` on the test set.
    pub test_loss: f64,
    /// `||Ax̄ + Bȳ - c||`.
    pub constraint_violation: f64,
    pub wall_seconds: f64,
    pub stored_gradient_vectors: usize,
}

/// One record per checkpoint of `result`, evaluated on `train` and `test`.
pub fn records_from_result(
    result: &SolveResult,
    repeat: usize,
    train: &AdmmProblem,
    test: &AdmmProblem,
    exec: Exec,
) -> Result<Vec<RunRecord>, BenchError> {
    let cons = train.constraint();
    result
        .checkpoints
        .iter()
        .map(|cp| {
            let objective = train.objective_at_ax(exec, &cp.x_bar)?;
            let test_loss = test.mean_data_loss_with(exec, test.loss(), &cp.x_bar);
            let violation = norm(&cons.residual(&cp.x_bar, &cp.y_bar)?);
            Ok(RunRecord {
                method: result.method,
                repeat,
                effective_passes: cp.effective_passes,
                objective,
                test_loss,
                constraint_violation: violation,
                wall_seconds: cp.elapsed_seconds,
                stored_gradient_vectors: result.memory.stored_gradients,
            })
        })
        .collect()
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn sort_key(r: &RunRecord) -> (Method, usize, f64) {
    (r.method, r.repeat, r.effective_passes)
}

/// Writes `records` sorted by (method, repeat, passes), 17 significant digits,
/// LF line endings.
pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<(), BenchError> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        sort_key(a)
            .partial_cmp(&sort_key(b))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    write_atomically(path, |w| {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in sorted {
            out.write_record([
                r.method.name().to_string(),
                r.repeat.to_string(),
                fmt_float(r.effective_passes),
                fmt_float(r.objective),
                fmt_float(r.test_loss),
                fmt_float(r.constraint_violation),
                fmt_float(r.wall_seconds),
                r.stored_gradient_vectors.to_string(),
            ])?;
        }
        out.flush()
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let format = |message: String| BenchError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format(e.to_string()))?;
    let header = rdr.headers().map_err(|e| format(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format(format!(
            "unexpected header '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| format(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |i: usize| format(format!("row {}: bad {} '{}'", k + 2, CSV_HEADER[i], field(i)));
        let float = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        out.push(RunRecord {
            method: field(0).parse().map_err(|_| bad(0))?,
            repeat: field(1).parse().map_err(|_| bad(1))?,
            effective_passes: float(2)?,
            objective: float(3)?,
            test_loss: float(4)?,
            constraint_violation: float(5)?,
            wall_seconds: float(6)?,
            stored_gradient_vectors: field(7).parse().map_err(|_| bad(7))?,
        });
    }
    Ok(out)
}

/// Averages records sharing (method, effective_passes) across repeats. Each
/// mean row's `repeat` is the number of repeats that reached that point.
pub fn mean_table(records: &[RunRecord]) -> Vec<RunRecord> {
    let mut groups: BTreeMap<(Method, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.method, r.effective_passes.to_bits()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<RunRecord> = groups
        .into_values()
        .map(|rs| {
            let k = rs.len() as f64;
            let mean = |f: fn(&RunRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / k;
            RunRecord {
                method: rs[0].method,
                repeat: rs.len(),
                effective_passes: rs[0].effective_passes,
                objective: mean(|r| r.objective),
                test_loss: mean(|r| r.test_loss),
                constraint_violation: mean(|r| r.constraint_violation),
                wall_seconds: mean(|r| r.wall_seconds),
                stored_gradient_vectors: rs.iter().map(|r| r.stored_gradient_vectors).max().unwrap_or(0),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.method, a.effective_passes)
            .partial_cmp(&(b.method, b.effective_passes))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}
