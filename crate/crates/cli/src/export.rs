//! CSV projections of the JSON reports.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::analyze::Analysis;
use crate::error::{CliError, CliResult};

fn out_err(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&join(k), child, rows);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), child, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Every leaf of the JSON report as a `path,value` row, in document order.
pub fn flat_csv<T: Serialize>(report: &T, out: impl Write) -> CliResult<()> {
    let value = serde_json::to_value(report).map_err(out_err)?;
    let mut rows = Vec::new();
    flatten("", &value, &mut rows);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "value"]).map_err(out_err)?;
    for (p, v) in rows {
        w.write_record([p, v]).map_err(out_err)?;
    }
    w.flush().map_err(out_err)
}

/// `n, var_seq, eta2_curve, theta2_curve` for every `n` up to the horizon.
pub fn curves_csv(analysis: &Analysis, out: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "var_seq", "eta2_curve", "theta2_curve"]).map_err(out_err)?;
    let var = &analysis.profile.var_seq;
    for (n, (v, b)) in var.iter().zip(&analysis.bridge).enumerate().skip(1) {
        let eta = b.powi(2) / n as f64;
        w.write_record([n.to_string(), v.to_string(), eta.to_string(), (v - eta).to_string()])
            .map_err(out_err)?;
    }
    w.flush().map_err(out_err)
}

/// `path_index, x0, xn, S_n, centered` for each simulated path.
pub fn paths_csv(analysis: &Analysis, out: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_index", "x0", "xn", "S_n", "centered"]).map_err(out_err)?;
    if let Some(batch) = &analysis.batch {
        for (i, (&(x0, xn), s)) in batch.endpoints.iter().zip(&batch.sums).enumerate() {
            let c = batch.centered.as_ref().map_or(String::new(), |c| c[i].to_string());
            w.write_record([i.to_string(), x0.to_string(), xn.to_string(), s.to_string(), c])
                .map_err(out_err)?;
        }
    }
    w.flush().map_err(out_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattens_nested_values() {
        let v = serde_json::json!({"a": {"b": [1, 2.5]}, "c": null, "d": "x,y"});
        let mut buf = Vec::new();
        flat_csv(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "path,value\na.b.0,1\na.b.1,2.5\nc,\nd,\"x,y\"\n");
    }
}
