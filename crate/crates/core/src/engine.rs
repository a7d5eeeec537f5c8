//! Total mismatch probability, potential reusability and the metrics report.

use std::path::{Path, PathBuf};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bpel::{parse_bpel, Activity, BpelProcess, Note};
use crate::error::{Error, Result};
use crate::logic::{self, construct_factors};
use crate::rational::{integer, is_probability, MetricValue, Rational};
use crate::wsdl::{self, parse_wsdl, Direction, Operation, ServiceDescription};
use crate::xsd::{CoverageTable, TypeRef};

pub const ANALYZER_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DETERMINISTIC_TIMESTAMP: &str = "1970-01-01T00:00:00Z";
pub const DEFAULT_REUSE_COUNT: u64 = 1;

/// `1 - MP_SD * MP_SL`. Both inputs must lie in (0, 1].
pub fn total_mismatch_probability(mp_sd: &Rational, mp_sl: &Rational) -> Result<Rational> {
    for (label, v) in [("MP_SD", mp_sd), ("MP_SL", mp_sl)] {
        if !is_probability(v) {
            return Err(Error::Domain(format!("{label} = {v} is outside (0, 1]")));
        }
    }
    Ok(Rational::one() - mp_sd * mp_sl)
}

/// `R_c * (1 - MMP_s)`.
pub fn potential_reusability(r_c: u64, mmp_s: &Rational) -> Result<Rational> {
    if *mmp_s < Rational::zero() || *mmp_s > Rational::one() {
        return Err(Error::Domain(format!("MMP_s = {mmp_s} is outside [0, 1]")));
    }
    Ok(integer(r_c) * (Rational::one() - mmp_s))
}

/// Parses a current-reuse count; negative or fractional values are rejected.
pub fn parse_reuse_count(text: &str) -> Result<u64> {
    let t = text.trim();
    t.parse::<u64>().map_err(|_| {
        if t.starts_with('-') {
            Error::Domain(format!("reuse count must be non-negative, got `{t}`"))
        } else {
            Error::Domain(format!(
                "reuse count must be a non-negative integer, got `{t}`"
            ))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessIdentity {
    pub id: String,
    pub name: String,
    pub service: String,
    pub bpel: String,
    pub wsdl: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBreakdown {
    pub name: String,
    pub direction: Direction,
    #[serde(rename = "type")]
    pub type_name: String,
    pub complex: bool,
    #[serde(rename = "match")]
    pub match_probability: MetricValue,
    /// Complex parameters only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mismatch: Option<MetricValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationBreakdown {
    pub name: String,
    pub l: usize,
    pub parameters: Vec<ParameterBreakdown>,
    pub parameters_match: MetricValue,
    /// `(1 / l) * parameters_match`.
    pub factor: MetricValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionBreakdown {
    pub m: usize,
    pub operations: Vec<OperationBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub kind: String,
    pub n: usize,
    pub path: String,
    pub formula: String,
    pub excluded: bool,
    pub factor: MetricValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicBreakdown {
    pub scored: usize,
    pub factors: Vec<FactorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub reason: String,
    pub element: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub analyzer_version: String,
    pub timestamp: String,
    pub process: ProcessIdentity,
    pub r_c: u64,
    pub annotations: Vec<String>,
    pub mp_sd: MetricValue,
    pub mmp_sd: MetricValue,
    pub mp_sl: MetricValue,
    pub mmp_sl: MetricValue,
    pub mmp_s: MetricValue,
    pub r_p: MetricValue,
    pub description: DescriptionBreakdown,
    pub logic: LogicBreakdown,
    pub exclusions: Vec<Exclusion>,
}

impl MetricsReport {
    pub fn pin_timestamp(&mut self) {
        self.timestamp = DETERMINISTIC_TIMESTAMP.to_string();
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.process.id = id.into();
    }
}

fn describe_operation(op: &Operation, table: &CoverageTable) -> Result<OperationBreakdown> {
    let mut parameters = Vec::with_capacity(op.parameters.len());
    for p in &op.parameters {
        let mp = table.match_probability(&p.ty)?;
        let (type_name, mismatch) = match &p.ty {
            TypeRef::Simple { name, .. } => (name.clone(), None),
            TypeRef::Complex { name, .. } => (
                name.clone(),
                Some(MetricValue(table.complex_mismatch_probability(&p.ty)?)),
            ),
        };
        parameters.push(ParameterBreakdown {
            name: p.name.clone(),
            direction: p.direction,
            type_name,
            complex: p.ty.is_complex(),
            match_probability: MetricValue(mp),
            mismatch,
        });
    }
    Ok(OperationBreakdown {
        name: op.name.clone(),
        l: op.parameter_count(),
        parameters,
        parameters_match: MetricValue(wsdl::parameters_match_probability(op, table)?),
        factor: MetricValue(wsdl::operation_factor(op, table)?),
    })
}

fn note_exclusion(note: &Note) -> Exclusion {
    let reason = serde_json::to_value(note.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    Exclusion {
        reason,
        element: note.element.clone(),
        path: note.path.clone(),
    }
}

/// Scores a process against its interface description.
///
/// A missing `r_c` defaults to 1 and is annotated in the report.
pub fn analyze(
    process: &BpelProcess,
    sd: &ServiceDescription,
    r_c: Option<u64>,
    table: &CoverageTable,
) -> Result<MetricsReport> {
    let mut annotations = Vec::new();
    let r_c = r_c.unwrap_or_else(|| {
        annotations.push(format!(
            "r_c not supplied; defaulted to {DEFAULT_REUSE_COUNT}"
        ));
        DEFAULT_REUSE_COUNT
    });

    let mp_sd = wsdl::description_match_probability(sd, table)?;
    let operations = sd
        .operations
        .iter()
        .map(|op| describe_operation(op, table))
        .collect::<Result<Vec<_>>>()?;

    let factors = construct_factors(process);
    let mp_sl = logic::product(&factors);

    let mmp_s = total_mismatch_probability(&mp_sd, &mp_sl)?;
    let r_p = potential_reusability(r_c, &mmp_s)?;

    let mut exclusions: Vec<Exclusion> = factors
        .iter()
        .filter(|f| f.excluded)
        .map(|f| Exclusion {
            reason: "invocation-scaffold".into(),
            element: f.kind.to_string(),
            path: f.path.clone(),
        })
        .collect();
    exclusions.extend(process.notes.iter().map(note_exclusion));

    let factor_entries: Vec<FactorEntry> = factors
        .iter()
        .map(|f| FactorEntry {
            kind: f.kind.to_string(),
            n: f.n,
            path: f.path.clone(),
            formula: f.formula.as_str().to_string(),
            excluded: f.excluded,
            factor: MetricValue(f.factor.clone()),
        })
        .collect();

    Ok(MetricsReport {
        analyzer_version: ANALYZER_VERSION.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        process: ProcessIdentity {
            id: id_from_source(&process.source, &process.name),
            name: process.name.clone(),
            service: sd.name.clone(),
            bpel: process.source.clone(),
            wsdl: sd.source.clone(),
        },
        r_c,
        annotations,
        mmp_sd: MetricValue(Rational::one() - &mp_sd),
        mp_sd: MetricValue(mp_sd),
        mmp_sl: MetricValue(Rational::one() - &mp_sl),
        mp_sl: MetricValue(mp_sl),
        mmp_s: MetricValue(mmp_s),
        r_p: MetricValue(r_p),
        description: DescriptionBreakdown {
            m: sd.operation_count(),
            operations,
        },
        logic: LogicBreakdown {
            scored: factors.iter().filter(|f| !f.excluded).count(),
            factors: factor_entries,
        },
        exclusions,
    })
}

fn id_from_source(source: &str, fallback: &str) -> String {
    Path::new(source)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| fallback.to_string())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Finds the interface WSDL for a process: the explicit path, else the
/// process's WSDL import, else `<stem>.wsdl` next to the process file.
pub fn locate_wsdl(
    bpel_path: &Path,
    process: &BpelProcess,
    explicit: Option<&Path>,
) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    let dir = bpel_path.parent().unwrap_or_else(|| Path::new(""));
    if let Some(loc) = &process.linked_wsdl {
        let candidate = dir.join(loc);
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    let sibling = bpel_path.with_extension("wsdl");
    if sibling.is_file() {
        return Ok(sibling);
    }
    Err(Error::Input {
        path: bpel_path.to_path_buf(),
        message:
            "no interface WSDL found (pass one explicitly or place <stem>.wsdl beside the process)"
                .into(),
    })
}

/// Reads, parses and scores a bundle from disk.
pub fn analyze_files(
    bpel_path: &Path,
    wsdl_path: Option<&Path>,
    r_c: Option<u64>,
    table: &CoverageTable,
) -> Result<MetricsReport> {
    let process = parse_bpel(&read(bpel_path)?, &bpel_path.display().to_string())?;
    let wsdl_path = locate_wsdl(bpel_path, &process, wsdl_path)?;
    let sd = parse_wsdl(&read(&wsdl_path)?, &wsdl_path.display().to_string(), table)?;
    analyze(&process, &sd, r_c, table)
}

/// Sequential composition of two processes: the merged root is a sequence
/// of both roots.
pub fn merge_processes(a: &BpelProcess, b: &BpelProcess) -> BpelProcess {
    let root = Activity::sequence(vec![a.root.clone(), b.root.clone()]).expect("two children");
    let mut merged = BpelProcess::new(format!("{}+{}", a.name, b.name), root);
    merged.notes = a.notes.iter().chain(&b.notes).cloned().collect();
    merged
}

/// Union of both operation sets. Identical operations are kept once; a
/// differing operation with a clashing name is suffixed with `#2`.
pub fn merge_descriptions(a: &ServiceDescription, b: &ServiceDescription) -> ServiceDescription {
    let mut operations = a.operations.clone();
    for op in &b.operations {
        match operations.iter().find(|o| o.name == op.name) {
            Some(existing) if existing == op => {}
            Some(_) => {
                let mut renamed = op.clone();
                let mut k = 2;
                while operations
                    .iter()
                    .any(|o| o.name == format!("{}#{k}", op.name))
                {
                    k += 1;
                }
                renamed.name = format!("{}#{k}", op.name);
                operations.push(renamed);
            }
            None => operations.push(op.clone()),
        }
    }
    ServiceDescription::new(format!("{}+{}", a.name, b.name), operations, "merged")
        .expect("union of non-empty, uniquely named operation sets")
}
