//! Rendering of reports as JSON, CSV and text.

use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::Histogram;
use crate::engine::MetricsReport;
use crate::error::{Error, Result};
use crate::rational::format_exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Domain(format!("cannot serialize report: {e}")))?;
    out.push('\n');
    Ok(out)
}

const CSV_HEADER: [&str; 12] = [
    "process_id",
    "name",
    "bpel",
    "wsdl",
    "r_c",
    "mp_sd",
    "mmp_sd",
    "mp_sl",
    "mmp_sl",
    "mmp_s",
    "r_p",
    "r_p_exact",
];

/// One flat row per report, decimals rounded to four places.
pub fn to_csv(reports: &[MetricsReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Domain(format!("cannot write CSV: {e}"));
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for r in reports {
        w.write_record([
            r.process.id.clone(),
            r.process.name.clone(),
            r.process.bpel.clone(),
            r.process.wsdl.clone(),
            r.r_c.to_string(),
            format!("{:.4}", r.mp_sd.value()),
            format!("{:.4}", r.mmp_sd.value()),
            format!("{:.4}", r.mp_sl.value()),
            format!("{:.4}", r.mmp_sl.value()),
            format!("{:.4}", r.mmp_s.value()),
            format!("{:.4}", r.r_p.value()),
            format_exact(r.r_p.exact()),
        ])
        .map_err(wrap)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Domain(format!("cannot write CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
}

/// `bin_lower  bin_upper  count`, tab separated, with a header row.
pub fn histogram_tsv(h: &Histogram) -> String {
    let mut out = String::from("bin_lower\tbin_upper\tcount\n");
    for b in &h.bins {
        let _ = writeln!(out, "{:.1}\t{:.1}\t{}", b.lower, b.upper, b.count);
    }
    out
}

/// Human-readable factor breakdown.
pub fn to_text(r: &MetricsReport) -> String {
    let mut out = String::new();
    let metric = |v: &crate::rational::MetricValue| {
        format!("{:.4} ({})", v.value(), format_exact(v.exact()))
    };
    let _ = writeln!(out, "process   {} ({})", r.process.name, r.process.id);
    let _ = writeln!(out, "bpel      {}", r.process.bpel);
    let _ = writeln!(
        out,
        "wsdl      {} (service {})",
        r.process.wsdl, r.process.service
    );
    let _ = writeln!(out, "r_c       {}", r.r_c);
    for a in &r.annotations {
        let _ = writeln!(out, "note      {a}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "service description: m = {}", r.description.m);
    for op in &r.description.operations {
        let _ = writeln!(
            out,
            "  operation {} (l = {}): MP_P = {}, factor = {}",
            op.name,
            op.l,
            metric(&op.parameters_match),
            metric(&op.factor)
        );
        for p in &op.parameters {
            let kind = if p.complex { "complex" } else { "simple" };
            let _ = writeln!(
                out,
                "    {:<6} {} : {} [{kind}] MP = {}",
                p.direction.to_string(),
                p.name,
                p.type_name,
                metric(&p.match_probability)
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "service logic: {} scored construct(s)", r.logic.scored);
    for f in &r.logic.factors {
        let status = if f.excluded { "  excluded" } else { "" };
        let _ = writeln!(
            out,
            "  {:<8} n = {:<2} {:<15} {} {}{status}",
            f.kind,
            f.n,
            f.formula,
            metric(&f.factor),
            f.path
        );
    }
    if !r.exclusions.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "exclusions:");
        for e in &r.exclusions {
            let _ = writeln!(out, "  {:<20} {:<10} {}", e.reason, e.element, e.path);
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "MP_SD   {}", metric(&r.mp_sd));
    let _ = writeln!(out, "MMP_SD  {}", metric(&r.mmp_sd));
    let _ = writeln!(out, "MP_SL   {}", metric(&r.mp_sl));
    let _ = writeln!(out, "MMP_SL  {}", metric(&r.mmp_sl));
    let _ = writeln!(out, "MMP_s   {}", metric(&r.mmp_s));
    let _ = writeln!(out, "R_p     {}", metric(&r.r_p));
    out
}

pub fn render(report: &MetricsReport, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(std::slice::from_ref(report)),
        Format::Text => Ok(to_text(report)),
    }
}
