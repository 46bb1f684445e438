use std::collections::BTreeMap;
use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use injbound::checks::SuiteReport;
use injbound::mc::{write_comparison_csv, Comparison};

use crate::CliError;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Run settings printed ahead of every report.
#[derive(Serialize)]
pub struct Header(BTreeMap<String, Value>);

impl Header {
    pub fn new(command: &str) -> Self {
        let mut h = Header(BTreeMap::new());
        h.set("command", command);
        h.set("version", env!("CARGO_PKG_VERSION"));
        h
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.0.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    fn lines(&self) -> impl Iterator<Item = (String, String)> + '_ {
        self.0.iter().map(|(k, v)| (k.clone(), scalar(v)))
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `(path, value)` for every leaf of `v`, in key order.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn write_comments(out: &mut dyn Write, header: &Header) -> io::Result<()> {
    for (k, v) in header.lines() {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn write_table_header(out: &mut dyn Write, header: &Header) -> io::Result<()> {
    for (k, v) in header.lines() {
        writeln!(out, "{k:>12}: {v}")?;
    }
    writeln!(out)
}

fn write_json(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output(io::Error::other(e))
}

pub fn emit(out: &mut dyn Write, format: Format, header: &Header, report: &Value) -> Result<(), CliError> {
    match format {
        Format::Json => write_json(out, &json!({"header": header, "report": report})),
        Format::Csv => {
            write_comments(out, header)?;
            let mut leaves = Vec::new();
            flatten("", report, &mut leaves);
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["field", "value"]).map_err(csv_error)?;
            for (k, v) in leaves {
                w.write_record([k, v]).map_err(csv_error)?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Table => {
            write_table_header(out, header)?;
            let mut leaves = Vec::new();
            flatten("", report, &mut leaves);
            let width = leaves.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in leaves {
                writeln!(out, "{k:<width$}  {v}")?;
            }
            Ok(())
        }
    }
}

pub fn emit_comparisons(out: &mut dyn Write, format: Format, header: &Header, rows: &[Comparison]) -> Result<(), CliError> {
    match format {
        Format::Json => write_json(out, &json!({"header": header, "rows": rows})),
        Format::Csv => {
            write_comments(out, header)?;
            write_comparison_csv(rows, &mut *out)?;
            Ok(())
        }
        Format::Table => {
            write_table_header(out, header)?;
            writeln!(
                out,
                "{:<16} {:>5} {:>12} {:>10} {:>12} {:>12} {:>9}  {:<22} contract",
                "model", "p", "mean", "stderr", "thm1", "cor2", "ratio", "provenance"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{:<16} {:>5} {:>12.6} {:>10.2e} {:>12.6} {:>12.6} {:>9.3}  {:<22} {}",
                    r.model_id,
                    r.p.to_string(),
                    r.empirical.mean,
                    r.empirical.stderr,
                    r.thm1_opt.bound,
                    r.cor2.bound,
                    r.ratio_thm1,
                    r.provenance.label(),
                    r.contract
                )?;
            }
            Ok(())
        }
    }
}

pub fn emit_checks(out: &mut dyn Write, format: Format, header: &Header, reports: &[SuiteReport]) -> Result<(), CliError> {
    match format {
        Format::Json => write_json(out, &json!({"header": header, "suites": reports})),
        Format::Csv => {
            write_comments(out, header)?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["suite", "case", "lhs", "rhs", "verdict", "provenance"])
                .map_err(csv_error)?;
            for rep in reports {
                for row in &rep.rows {
                    w.write_record([
                        rep.suite.to_string(),
                        row.case.clone(),
                        row.lhs.to_string(),
                        row.rhs.to_string(),
                        row.verdict.to_string(),
                        row.provenance.to_string(),
                    ])
                    .map_err(csv_error)?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Format::Table => {
            write_table_header(out, header)?;
            for rep in reports {
                writeln!(
                    out,
                    "{}: {} holds, {} fails, {} inconclusive ({} samples, seed {})",
                    rep.suite,
                    rep.holds,
                    rep.fails,
                    rep.inconclusive,
                    rep.config.samples,
                    rep.config.seed
                )?;
                for row in &rep.rows {
                    writeln!(
                        out,
                        "  {:<12} {}  lhs={} rhs={} [{}]",
                        row.verdict.to_string(),
                        row.case,
                        row.lhs,
                        row.rhs,
                        row.provenance.label()
                    )?;
                }
            }
            Ok(())
        }
    }
}
