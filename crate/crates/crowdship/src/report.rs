//! Run reports as a flat key-value block or as JSON.
//!
//! The text form leaves out the wall time, so two runs with the same inputs
//! give identical files. The JSON form carries it as `wall_time_seconds`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crowdship_core::{Offer, RunReport, Solution, Variant};
use serde_json::{json, Value};

use crate::format::{
    err, offer_line, parse_int, parse_offer, parse_opt_real, parse_real, parse_status, real, FormatError, Lines,
};

pub const REPORT_HEADER: &str = "CROWDSHIP-REPORT v1";

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| String::from("none"), real)
}

pub fn write_report_text(report: &RunReport) -> String {
    let s = &report.solution;
    let mut out = String::new();
    let _ = writeln!(out, "{REPORT_HEADER}");
    let _ = writeln!(out, "instance {}", report.instance_name);
    let _ = writeln!(out, "variant {}", report.variant.name());
    let _ = writeln!(out, "status {}", report.status.as_str());
    let _ = writeln!(out, "objective {}", real(s.objective));
    let _ = writeln!(out, "bound {}", opt_real(s.bound));
    let _ = writeln!(out, "upper_bound {}", opt_real(report.upper_bound));
    let _ = writeln!(out, "lower_bound {}", real(report.lower_bound));
    let _ = writeln!(out, "lb_mip {}", opt_real(report.lb_mip));
    let _ = writeln!(out, "gap_h {}", opt_real(report.gap_h));
    let _ = writeln!(out, "columns_generated {}", report.columns_generated);
    let _ = writeln!(out, "enumerated_columns {}", report.enumerated_columns);
    let _ = writeln!(out, "cg_iterations {}", report.cg_iterations);
    let _ = writeln!(out, "offers {}", s.offers.len());
    for o in &s.offers {
        let _ = writeln!(out, "{}", offer_line(o));
    }
    out
}

/// Reads a text report back. The wall time is not stored and comes back as 0.
pub fn parse_report_text(text: &str) -> Result<RunReport, FormatError> {
    let mut lines = Lines::new(text);
    let (n, head) = lines.next("header")?;
    if head != REPORT_HEADER {
        return Err(err(n, format!("expected header {REPORT_HEADER:?}")));
    }
    let (_, instance_name) = lines.keyed("instance")?;
    let (n, v) = lines.keyed("variant")?;
    let variant = Variant::parse(v).ok_or_else(|| err(n, format!("unknown variant {v:?}")))?;
    let (n, v) = lines.keyed("status")?;
    let status = parse_status(n, v)?;
    let mut real_field = |key: &str| -> Result<f64, FormatError> {
        let (n, v) = lines.keyed(key)?;
        parse_real(n, key, v)
    };
    let objective = real_field("objective")?;
    let mut opt_field = |key: &str| -> Result<Option<f64>, FormatError> {
        let (n, v) = lines.keyed(key)?;
        parse_opt_real(n, key, v)
    };
    let bound = opt_field("bound")?;
    let upper_bound = opt_field("upper_bound")?;
    let (n, v) = lines.keyed("lower_bound")?;
    let lower_bound = parse_real(n, "lower_bound", v)?;
    let lb_mip = {
        let (n, v) = lines.keyed("lb_mip")?;
        parse_opt_real(n, "lb_mip", v)?
    };
    let gap_h = {
        let (n, v) = lines.keyed("gap_h")?;
        parse_opt_real(n, "gap_h", v)?
    };
    let mut count = |key: &str| -> Result<usize, FormatError> {
        let (n, v) = lines.keyed(key)?;
        parse_int(n, key, v)
    };
    let columns_generated = count("columns_generated")?;
    let enumerated_columns = count("enumerated_columns")?;
    let cg_iterations = count("cg_iterations")?;
    let offer_count = count("offers")?;
    let mut offers = Vec::with_capacity(offer_count);
    for _ in 0..offer_count {
        let (n, l) = lines.next("offer")?;
        offers.push(parse_offer(n, l)?);
    }
    if lines.has_more() {
        let (n, l) = lines.next("")?;
        return Err(err(n, format!("unexpected trailing content {l:?}")));
    }
    Ok(RunReport {
        instance_name: instance_name.to_string(),
        variant,
        solution: Solution { offers, objective, bound, status },
        upper_bound,
        lower_bound,
        lb_mip,
        gap_h,
        columns_generated,
        enumerated_columns,
        cg_iterations,
        wall_time_seconds: 0.0,
        status,
    })
}

pub fn report_json(report: &RunReport) -> Value {
    let s = &report.solution;
    json!({
        "instance": report.instance_name,
        "variant": report.variant.name(),
        "status": report.status.as_str(),
        "objective": s.objective,
        "bound": s.bound,
        "upper_bound": report.upper_bound,
        "lower_bound": report.lower_bound,
        "lb_mip": report.lb_mip,
        "gap_h": report.gap_h,
        "columns_generated": report.columns_generated,
        "enumerated_columns": report.enumerated_columns,
        "cg_iterations": report.cg_iterations,
        "wall_time_seconds": report.wall_time_seconds,
        "offers": s.offers,
    })
}

fn json_err(message: impl Into<String>) -> FormatError {
    FormatError::Parse { line: 0, message: message.into() }
}

pub fn parse_report_json(text: &str) -> Result<RunReport, FormatError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| FormatError::Parse { line: e.line(), message: e.to_string() })?;
    let field = |key: &str| v.get(key).ok_or_else(|| json_err(format!("missing field `{key}`")));
    let num = |key: &str| field(key)?.as_f64().ok_or_else(|| json_err(format!("`{key}` must be a number")));
    let opt_num = |key: &str| -> Result<Option<f64>, FormatError> {
        match field(key)? {
            Value::Null => Ok(None),
            x => x.as_f64().map(Some).ok_or_else(|| json_err(format!("`{key}` must be a number or null"))),
        }
    };
    let count = |key: &str| -> Result<usize, FormatError> {
        field(key)?.as_u64().map(|x| x as usize).ok_or_else(|| json_err(format!("`{key}` must be a count")))
    };
    let text_of = |key: &str| field(key)?.as_str().ok_or_else(|| json_err(format!("`{key}` must be a string")));

    let variant = Variant::parse(text_of("variant")?).ok_or_else(|| json_err("unknown variant"))?;
    let status = parse_status(0, text_of("status")?)?;
    let offers: Vec<Offer> =
        serde_json::from_value(field("offers")?.clone()).map_err(|e| json_err(format!("offers: {e}")))?;
    Ok(RunReport {
        instance_name: text_of("instance")?.to_string(),
        variant,
        solution: Solution { offers, objective: num("objective")?, bound: opt_num("bound")?, status },
        upper_bound: opt_num("upper_bound")?,
        lower_bound: num("lower_bound")?,
        lb_mip: opt_num("lb_mip")?,
        gap_h: opt_num("gap_h")?,
        columns_generated: count("columns_generated")?,
        enumerated_columns: count("enumerated_columns")?,
        cg_iterations: count("cg_iterations")?,
        wall_time_seconds: num("wall_time_seconds")?,
        status,
    })
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Writes JSON when the path ends in `.json`, the text block otherwise.
pub fn save_report(report: &RunReport, path: &Path) -> Result<(), FormatError> {
    let body = if is_json(path) {
        let mut s = serde_json::to_string_pretty(&report_json(report)).map_err(|e| json_err(e.to_string()))?;
        s.push('\n');
        s
    } else {
        write_report_text(report)
    };
    fs::write(path, body)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<RunReport, FormatError> {
    let text = fs::read_to_string(path)?;
    if is_json(path) {
        parse_report_json(&text)
    } else {
        parse_report_text(&text)
    }
}
