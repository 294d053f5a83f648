use crate::runner::{fmt, Row};
use std::path::Path;

pub const HEADER: [&str; 10] = ["experiment", "space", "params", "estimate", "stderr", "reference", "lower", "upper", "pass", "seconds"];

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn to_csv(rows: &[Row], timings: bool) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in rows {
        let estimate = if r.error.is_some() { "error".to_string() } else { fmt(r.estimate) };
        let reference = r.reference.map(fmt).unwrap_or_else(|| "no-reference".into());
        let seconds = if timings { format!("{:.3}", r.seconds) } else { "-".into() };
        w.write_record([
            r.id.as_str(),
            r.space.as_str(),
            r.params.as_str(),
            &estimate,
            &opt(r.stderr),
            &reference,
            &opt(r.lower),
            &opt(r.upper),
            if r.pass { "true" } else { "false" },
            &seconds,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv(path: &Path, rows: &[Row], timings: bool) -> std::io::Result<()> {
    let text = to_csv(rows, timings).map_err(std::io::Error::other)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)
}
