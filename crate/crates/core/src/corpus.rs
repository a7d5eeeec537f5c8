//! Batch analysis, histograms and rating correlation over bundle corpora.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use num::{BigInt, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, MetricsReport, ANALYZER_VERSION, DETERMINISTIC_TIMESTAMP};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::stats::{describe, spearman_correlation, Descriptive, SpearmanResult};
use crate::xsd::CoverageTable;

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const HISTOGRAM_BINS: usize = 10;

/// One process and its interface, as found on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub id: String,
    pub bpel: PathBuf,
    /// `None` lets the engine locate the WSDL from the process import.
    pub wsdl: Option<PathBuf>,
    pub r_c: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub process_id: String,
    pub path: String,
    pub reason: String,
}

/// Manifest rows (`process_id  bpel  wsdl  r_c`, tab separated) when
/// `manifest.tsv` exists, else every `.bpel` paired by stem.
pub fn discover_bundles(dir: &Path) -> Result<(Vec<Bundle>, Vec<Failure>)> {
    let manifest = dir.join(MANIFEST_FILE);
    if manifest.is_file() {
        let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        return parse_manifest(&text, dir, &manifest);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut bundles = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "bpel") && path.is_file() {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let wsdl = path.with_extension("wsdl");
            bundles.push(Bundle {
                id,
                wsdl: wsdl.is_file().then_some(wsdl),
                bpel: path,
                r_c: None,
            });
        }
    }
    bundles.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((bundles, Vec::new()))
}

fn parse_manifest(text: &str, dir: &Path, manifest: &Path) -> Result<(Vec<Bundle>, Vec<Failure>)> {
    let mut bundles: Vec<Bundle> = Vec::new();
    let mut failures = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if idx == 0 && fields[0] == "process_id" {
            continue;
        }
        let bad = |message: String| Error::Input {
            path: manifest.to_path_buf(),
            message: format!("line {}: {message}", idx + 1),
        };
        if fields.len() < 2 || fields.len() > 4 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(bad("expected process_id, bpel, wsdl, r_c".into()));
        }
        let id = fields[0].to_string();
        let wsdl = fields.get(2).filter(|s| !s.is_empty()).map(|s| dir.join(s));
        let r_c = match fields.get(3).filter(|s| !s.is_empty()) {
            Some(s) => Some(engine::parse_reuse_count(s).map_err(|e| bad(e.to_string()))?),
            None => None,
        };
        let bundle = Bundle {
            id: id.clone(),
            bpel: dir.join(fields[1]),
            wsdl,
            r_c,
        };
        if !seen.insert(id.clone()) {
            failures.push(Failure {
                process_id: id,
                path: bundle.bpel.display().to_string(),
                reason: "duplicate process id in manifest".into(),
            });
            continue;
        }
        bundles.push(bundle);
    }
    bundles.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((bundles, failures))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Ten equal-width bins over [0, 1]; the last bin is right-closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    /// Values above 1 (possible when r_c > 1), counted in the top bin.
    pub above_range: usize,
}

/// Bin index of a value, computed exactly: floor(10 v) clamped to 0..=9.
pub fn bin_index(value: &Rational) -> usize {
    let scaled = (value * BigInt::from(HISTOGRAM_BINS)).floor().to_integer();
    if scaled < BigInt::zero() {
        0
    } else {
        scaled
            .to_usize()
            .unwrap_or(usize::MAX)
            .min(HISTOGRAM_BINS - 1)
    }
}

pub fn histogram<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Histogram {
    let mut counts = [0usize; HISTOGRAM_BINS];
    let mut above_range = 0;
    let one = Rational::from_integer(1.into());
    for v in values {
        if *v > one {
            above_range += 1;
        }
        counts[bin_index(v)] += 1;
    }
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| Bin {
            lower: i as f64 / HISTOGRAM_BINS as f64,
            upper: (i + 1) as f64 / HISTOGRAM_BINS as f64,
            count,
        })
        .collect();
    Histogram { bins, above_range }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub r_p: Option<Descriptive>,
    pub mp_sd: Option<Descriptive>,
    pub mp_sl: Option<Descriptive>,
    pub mmp_s: Option<Descriptive>,
}

impl Summary {
    pub fn of(reports: &[MetricsReport]) -> Summary {
        let column =
            |f: fn(&MetricsReport) -> f64| describe(&reports.iter().map(f).collect::<Vec<_>>());
        Summary {
            r_p: column(|r| r.r_p.value()),
            mp_sd: column(|r| r.mp_sd.value()),
            mp_sl: column(|r| r.mp_sl.value()),
            mmp_s: column(|r| r.mmp_s.value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusResult {
    pub analyzer_version: String,
    pub timestamp: String,
    pub n: usize,
    pub summary: Summary,
    pub histogram: Histogram,
    pub reports: Vec<MetricsReport>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CorpusOptions {
    /// Used when the manifest gives no r_c; `None` defaults to 1 with an annotation.
    pub default_r_c: Option<u64>,
    pub deterministic: bool,
}

/// Analyzes every bundle independently; failing bundles are quarantined
/// into the failure list.
pub fn analyze_corpus(
    dir: &Path,
    table: &CoverageTable,
    options: CorpusOptions,
) -> Result<CorpusResult> {
    if !dir.is_dir() {
        return Err(Error::Input {
            path: dir.to_path_buf(),
            message: "corpus directory not found".into(),
        });
    }
    let (bundles, mut failures) = discover_bundles(dir)?;
    let outcomes: Vec<(Bundle, Result<MetricsReport>)> = bundles
        .into_par_iter()
        .map(|b| {
            let outcome = engine::analyze_files(
                &b.bpel,
                b.wsdl.as_deref(),
                b.r_c.or(options.default_r_c),
                table,
            );
            (b, outcome)
        })
        .collect();

    let mut reports = Vec::new();
    for (bundle, outcome) in outcomes {
        match outcome {
            Ok(mut report) => {
                report.set_id(&bundle.id);
                if options.deterministic {
                    report.pin_timestamp();
                }
                reports.push(report);
            }
            Err(e) => {
                log::info!("quarantined {}: {e}", bundle.bpel.display());
                failures.push(Failure {
                    process_id: bundle.id,
                    path: bundle.bpel.display().to_string(),
                    reason: e.to_string(),
                });
            }
        }
    }
    reports.sort_by(|a, b| a.process.id.cmp(&b.process.id));
    failures.sort_by(|a, b| a.process_id.cmp(&b.process_id));

    Ok(CorpusResult {
        analyzer_version: ANALYZER_VERSION.to_string(),
        timestamp: if options.deterministic {
            DETERMINISTIC_TIMESTAMP.to_string()
        } else {
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        },
        n: reports.len(),
        summary: Summary::of(&reports),
        histogram: histogram(reports.iter().map(|r| &r.r_p.0)),
        reports,
        failures,
    })
}

/// Ratings keyed by process id, with any per-row sign flip already applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingsTable {
    pub ratings: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    process_id: String,
    rating: f64,
    #[serde(default)]
    flip: Option<String>,
}

fn truthy(flag: &str) -> Option<bool> {
    match flag.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Some(false),
        "1" | "true" | "yes" => Some(true),
        _ => None,
    }
}

impl RatingsTable {
    /// Reads `process_id,rating[,flip]`; a truthy `flip` negates the rating.
    pub fn from_reader(reader: impl std::io::Read, source: &Path) -> Result<RatingsTable> {
        let bad = |message: String| Error::Input {
            path: source.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut ratings = BTreeMap::new();
        for (i, row) in rdr.deserialize::<RatingRow>().enumerate() {
            let row = row.map_err(|e| bad(e.to_string()))?;
            if !row.rating.is_finite() {
                return Err(bad(format!("row {}: rating is not a finite number", i + 1)));
            }
            let flip = match row.flip.as_deref() {
                None => false,
                Some(f) => {
                    truthy(f).ok_or_else(|| bad(format!("row {}: bad flip value `{f}`", i + 1)))?
                }
            };
            let value = if flip { -row.rating } else { row.rating };
            if ratings.insert(row.process_id.clone(), value).is_some() {
                return Err(bad(format!("duplicate process id `{}`", row.process_id)));
            }
        }
        Ok(RatingsTable { ratings })
    }

    pub fn from_path(path: &Path) -> Result<RatingsTable> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        RatingsTable::from_reader(file, path)
    }
}

/// A component correlation, or why it is undefined for this corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentCorrelation {
    Value(SpearmanResult),
    Undefined { error: String },
}

impl ComponentCorrelation {
    fn from(result: Result<SpearmanResult>) -> Self {
        match result {
            Ok(r) => ComponentCorrelation::Value(r),
            Err(e) => ComponentCorrelation::Undefined {
                error: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub alpha: f64,
    pub r_p_vs_rating: SpearmanResult,
    pub r_p_vs_mp_sd: ComponentCorrelation,
    pub r_p_vs_mp_sl: ComponentCorrelation,
    /// Rated ids with no analyzed process.
    pub unmatched_ratings: Vec<String>,
    /// Analyzed processes without a rating.
    pub unmatched_processes: Vec<String>,
}

/// Joins reports with ratings by process id and correlates the metric.
pub fn correlate_with_ratings(
    reports: &[MetricsReport],
    ratings: &RatingsTable,
    alpha: f64,
) -> Result<CorrelationReport> {
    let mut joined = Vec::new();
    let mut unmatched_processes = Vec::new();
    let mut matched = BTreeSet::new();
    for r in reports {
        match ratings.ratings.get(&r.process.id) {
            Some(&rating) => {
                matched.insert(r.process.id.as_str());
                joined.push((r, rating));
            }
            None => unmatched_processes.push(r.process.id.clone()),
        }
    }
    let unmatched_ratings: Vec<String> = ratings
        .ratings
        .keys()
        .filter(|id| !matched.contains(id.as_str()))
        .cloned()
        .collect();
    if joined.len() < 3 {
        return Err(Error::Stats(format!(
            "insufficient join: {} process(es) have ratings, need at least 3",
            joined.len()
        )));
    }
    let r_p: Vec<f64> = joined.iter().map(|(r, _)| r.r_p.value()).collect();
    let rating: Vec<f64> = joined.iter().map(|(_, v)| *v).collect();
    let mp_sd: Vec<f64> = joined.iter().map(|(r, _)| r.mp_sd.value()).collect();
    let mp_sl: Vec<f64> = joined.iter().map(|(r, _)| r.mp_sl.value()).collect();
    Ok(CorrelationReport {
        n: joined.len(),
        alpha,
        r_p_vs_rating: spearman_correlation(&r_p, &rating, alpha)?,
        r_p_vs_mp_sd: ComponentCorrelation::from(spearman_correlation(&r_p, &mp_sd, alpha)),
        r_p_vs_mp_sl: ComponentCorrelation::from(spearman_correlation(&r_p, &mp_sl, alpha)),
        unmatched_ratings,
        unmatched_processes,
    })
}
