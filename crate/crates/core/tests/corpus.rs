mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bpel_reuse::corpus::{analyze_corpus, correlate_with_ratings, CorpusOptions, RatingsTable};
use bpel_reuse::rational::to_f64;
use bpel_reuse::xsd::CoverageTable;
use common::*;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn options() -> CorpusOptions {
    CorpusOptions {
        default_r_c: None,
        deterministic: true,
    }
}

fn ratings(pairs: impl IntoIterator<Item = (String, f64)>) -> RatingsTable {
    RatingsTable {
        ratings: pairs.into_iter().collect::<BTreeMap<_, _>>(),
    }
}

#[test]
fn three_valid_bundles() {
    let r = analyze_corpus(&fixture("batch"), &CoverageTable::builtin(), options()).unwrap();
    assert_eq!(r.n, 3);
    assert!(r.failures.is_empty());
    assert_eq!(r.histogram.bins.iter().map(|b| b.count).sum::<usize>(), 3);
    let ids: Vec<&str> = r.reports.iter().map(|r| r.process.id.as_str()).collect();
    assert_eq!(ids, ["alpha", "beta", "gamma"]);
    assert_eq!(r.summary.r_p.unwrap().n, 3);
}

#[test]
fn malformed_bundle_is_quarantined() {
    let r = analyze_corpus(
        &fixture("batch_malformed"),
        &CoverageTable::builtin(),
        options(),
    )
    .unwrap();
    assert_eq!(r.n, 2);
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].process_id, "broken");
    assert!(r.failures[0].reason.contains("malformed XML"));
    assert_eq!(r.histogram.bins.iter().map(|b| b.count).sum::<usize>(), 2);
}

#[test]
fn missing_directory_is_an_error() {
    assert!(analyze_corpus(&fixture("nope"), &CoverageTable::builtin(), options()).is_err());
}

#[test]
fn manifest_supplies_reuse_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for f in ["alpha.bpel", "alpha.wsdl", "beta.bpel", "beta.wsdl"] {
        std::fs::copy(fixture("batch").join(f), tmp.path().join(f)).unwrap();
    }
    std::fs::write(
        tmp.path().join("manifest.tsv"),
        "process_id\tbpel\twsdl\tr_c\nA\talpha.bpel\talpha.wsdl\t4\nB\tbeta.bpel\tbeta.wsdl\t\n",
    )
    .unwrap();
    let opts = CorpusOptions {
        default_r_c: Some(2),
        deterministic: true,
    };
    let r = analyze_corpus(tmp.path(), &CoverageTable::builtin(), opts).unwrap();
    assert_eq!(r.reports[0].process.id, "A");
    assert_eq!(r.reports[0].r_c, 4);
    assert_eq!(r.reports[1].r_c, 2);
    // alpha: MP_SD 1/2, sequence(3) 7/12
    assert_eq!(r.reports[0].r_p.0, rat(4 * 7, 24));
}

#[test]
fn correlation_extremes() {
    let r = analyze_corpus(&fixture("batch"), &CoverageTable::builtin(), options()).unwrap();
    let same = ratings(
        r.reports
            .iter()
            .map(|m| (m.process.id.clone(), to_f64(&m.r_p.0))),
    );
    let c = correlate_with_ratings(&r.reports, &same, 0.05).unwrap();
    assert_eq!(c.r_p_vs_rating.r_s, 1.0);

    let mut by_rp: Vec<_> = r.reports.iter().collect();
    by_rp.sort_by(|a, b| a.r_p.0.cmp(&b.r_p.0));
    let reversed = ratings(
        by_rp
            .iter()
            .enumerate()
            .map(|(i, m)| (m.process.id.clone(), (by_rp.len() - i) as f64)),
    );
    let c = correlate_with_ratings(&r.reports, &reversed, 0.05).unwrap();
    assert_eq!(c.r_p_vs_rating.r_s, -1.0);
}

#[test]
fn insufficient_join() {
    let r = analyze_corpus(&fixture("batch"), &CoverageTable::builtin(), options()).unwrap();
    let few = ratings([
        ("alpha".to_string(), 1.0),
        ("beta".to_string(), 2.0),
        ("zeta".to_string(), 3.0),
    ]);
    let err = correlate_with_ratings(&r.reports, &few, 0.05).unwrap_err();
    assert!(err.to_string().contains("insufficient join"));
}

#[test]
fn scripted_ratings_match_naive_reference() {
    let bundles = plan_corpus(2013, 70);
    let tmp = tempfile::tempdir().unwrap();
    write_corpus(tmp.path(), &bundles);
    let r = analyze_corpus(tmp.path(), &CoverageTable::builtin(), options()).unwrap();
    assert_eq!(r.n, 70);

    // ratings on a 1-10 scale with plenty of ties, flipped for every fifth row
    let scripted: Vec<(String, f64, bool)> = bundles
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.clone(), ((i * 7) % 10 + 1) as f64, i % 5 == 0))
        .collect();
    let mut csv = String::from("process_id,rating,flip\n");
    for (id, v, flip) in &scripted {
        csv.push_str(&format!("{id},{v},{}\n", u8::from(*flip)));
    }
    let table = RatingsTable::from_reader(csv.as_bytes(), Path::new("ratings.csv")).unwrap();
    let c = correlate_with_ratings(&r.reports, &table, 0.05).unwrap();

    let x: Vec<f64> = bundles.iter().map(|b| to_f64(&b.expected_r_p())).collect();
    let y: Vec<f64> = scripted
        .iter()
        .map(|(_, v, f)| if *f { -v } else { *v })
        .collect();
    let reference = naive_spearman(&x, &y);
    assert!((c.r_p_vs_rating.r_s - reference).abs() < 1e-12);
    assert_eq!(c.n, 70);
    assert!(c.unmatched_ratings.is_empty() && c.unmatched_processes.is_empty());
}

#[test]
fn summary_agrees_with_two_pass() {
    let bundles = plan_corpus(99, 40);
    let tmp = tempfile::tempdir().unwrap();
    write_corpus(tmp.path(), &bundles);
    let r = analyze_corpus(tmp.path(), &CoverageTable::builtin(), options()).unwrap();
    let v: Vec<f64> = bundles.iter().map(|b| to_f64(&b.expected_r_p())).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let s = r.summary.r_p.unwrap();
    assert!((s.mean - mean).abs() <= 1e-12 * mean.abs());
    assert!((s.variance.unwrap() - var).abs() <= 1e-12 * var.abs());
}
