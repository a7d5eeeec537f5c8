//! Brute-force recounts of the construct sample spaces.
//!
//! Each enumerator materializes the variants of a construct as concrete
//! label lists (or change vectors), deduplicates them structurally and counts
//! the matchable ones. Nothing here uses the closed-form factors; they are
//! only compared against in [`audit_row`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logic;
use crate::rational::{ratio, Rational};

pub const MAX_FACTORIAL_N: usize = 8;
pub const MAX_POWERSET_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleConstruct {
    Sequence,
    Switch,
    Pick,
    /// Flow without links (concurrent).
    Flow,
    /// Flow whose links order the activities.
    FlowLinks,
}

impl OracleConstruct {
    pub const ALL: [OracleConstruct; 5] = [
        OracleConstruct::Sequence,
        OracleConstruct::Switch,
        OracleConstruct::Pick,
        OracleConstruct::Flow,
        OracleConstruct::FlowLinks,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleConstruct::Sequence => "sequence",
            OracleConstruct::Switch => "switch",
            OracleConstruct::Pick => "pick",
            OracleConstruct::Flow => "flow",
            OracleConstruct::FlowLinks => "flow-links",
        }
    }

    pub fn max_n(self) -> usize {
        match self {
            OracleConstruct::Sequence | OracleConstruct::Flow | OracleConstruct::FlowLinks => {
                MAX_FACTORIAL_N
            }
            OracleConstruct::Switch | OracleConstruct::Pick => MAX_POWERSET_N,
        }
    }

    pub fn enumerate(self, n: usize) -> Result<EnumerationResult> {
        match self {
            OracleConstruct::Sequence => enumerate_sequence(n),
            OracleConstruct::Switch => enumerate_switch(n),
            OracleConstruct::Pick => enumerate_pick(n),
            OracleConstruct::Flow => enumerate_flow(n, false),
            OracleConstruct::FlowLinks => enumerate_flow(n, true),
        }
    }

    pub fn closed_form(self, n: usize) -> Rational {
        match self {
            OracleConstruct::Sequence => logic::sequence_factor(n),
            OracleConstruct::Switch => logic::switch_factor(n),
            OracleConstruct::Pick => logic::pick_factor(n),
            OracleConstruct::Flow => logic::flow_factor(n, false),
            OracleConstruct::FlowLinks => logic::flow_factor(n, true),
        }
    }
}

impl fmt::Display for OracleConstruct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleConstruct {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OracleConstruct::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown construct `{s}` (expected sequence, switch, pick, flow or flow-links)"
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub construct: OracleConstruct,
    pub n: usize,
    pub match_count: u64,
    pub total_count: u64,
    #[serde(serialize_with = "serialize_exact")]
    pub ratio: Rational,
}

fn serialize_exact<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::rational::format_exact(r))
}

impl EnumerationResult {
    fn new(construct: OracleConstruct, n: usize, match_count: usize, total_count: usize) -> Self {
        EnumerationResult {
            construct,
            n,
            match_count: match_count as u64,
            total_count: total_count as u64,
            ratio: ratio(match_count as u64, total_count as u64),
        }
    }
}

fn check_range(construct: OracleConstruct, n: usize) -> Result<()> {
    let max = construct.max_n();
    if n == 0 || n > max {
        return Err(Error::OracleRange {
            construct: construct.as_str(),
            n,
            max,
        });
    }
    Ok(())
}

/// Order-preserving non-empty subsequences of `0..n`: the unchanged
/// arrangement and every omission of some activities.
fn omission_variants(n: usize) -> Vec<Vec<u8>> {
    (1..=n).flat_map(|k| (0..n as u8).combinations(k)).collect()
}

fn permutations(n: usize) -> Vec<Vec<u8>> {
    (0..n as u8).permutations(n).collect()
}

fn is_order_preserving(v: &[u8]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Sample space: every permutation plus every omission variant, with the
/// identity arrangement (present in both) kept once. Matches: variants that
/// keep the original relative order.
pub fn enumerate_sequence(n: usize) -> Result<EnumerationResult> {
    check_range(OracleConstruct::Sequence, n)?;
    let space: BTreeSet<Vec<u8>> = permutations(n)
        .into_iter()
        .chain(omission_variants(n))
        .collect();
    let matches = space.iter().filter(|v| is_order_preserving(v)).count();
    Ok(EnumerationResult::new(
        OracleConstruct::Sequence,
        n,
        matches,
        space.len(),
    ))
}

/// Every condition is either kept or changed; only the all-kept vector matches.
pub fn enumerate_switch(n: usize) -> Result<EnumerationResult> {
    check_range(OracleConstruct::Switch, n)?;
    let space: Vec<Vec<bool>> = (0..n)
        .map(|_| [false, true])
        .multi_cartesian_product()
        .collect();
    let matches = space
        .iter()
        .filter(|changed| changed.iter().all(|c| !c))
        .count();
    Ok(EnumerationResult::new(
        OracleConstruct::Switch,
        n,
        matches,
        space.len(),
    ))
}

/// A variant keeps a non-empty subset of events and either keeps or changes
/// their trigger conditions; kept conditions match.
pub fn enumerate_pick(n: usize) -> Result<EnumerationResult> {
    check_range(OracleConstruct::Pick, n)?;
    let mut space: BTreeSet<(Vec<u8>, bool)> = BTreeSet::new();
    for kept in omission_variants(n) {
        for changed in [false, true] {
            space.insert((kept.clone(), changed));
        }
    }
    let matches = space.iter().filter(|(_, changed)| !changed).count();
    Ok(EnumerationResult::new(
        OracleConstruct::Pick,
        n,
        matches,
        space.len(),
    ))
}

/// Without links every omission variant (as a set: order is free) matches.
/// With links only the declared ordering among all orderings matches.
pub fn enumerate_flow(n: usize, has_links: bool) -> Result<EnumerationResult> {
    if has_links {
        check_range(OracleConstruct::FlowLinks, n)?;
        let space: BTreeSet<Vec<u8>> = permutations(n).into_iter().collect();
        let declared: Vec<u8> = (0..n as u8).collect();
        let matches = space.iter().filter(|v| **v == declared).count();
        Ok(EnumerationResult::new(
            OracleConstruct::FlowLinks,
            n,
            matches,
            space.len(),
        ))
    } else {
        check_range(OracleConstruct::Flow, n)?;
        let space: BTreeSet<BTreeSet<u8>> = omission_variants(n)
            .into_iter()
            .map(|v| v.into_iter().collect())
            .collect();
        let matches = space.len();
        Ok(EnumerationResult::new(
            OracleConstruct::Flow,
            n,
            matches,
            space.len(),
        ))
    }
}

/// One audit line: the enumeration next to the closed form.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    #[serde(flatten)]
    pub result: EnumerationResult,
    #[serde(serialize_with = "serialize_exact")]
    pub closed_form: Rational,
    pub equal: bool,
}

impl AuditRow {
    /// `sequence 3 7 12 0.5833 0.5833 OK`
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {:.4} {:.4} {}",
            self.result.construct,
            self.result.n,
            self.result.match_count,
            self.result.total_count,
            crate::rational::to_f64(&self.result.ratio),
            crate::rational::to_f64(&self.closed_form),
            if self.equal { "OK" } else { "MISMATCH" }
        )
    }
}

pub fn audit_row(construct: OracleConstruct, n: usize) -> Result<AuditRow> {
    let result = construct.enumerate(n)?;
    let closed_form = construct.closed_form(n);
    let equal = result.ratio == closed_form;
    Ok(AuditRow {
        result,
        closed_form,
        equal,
    })
}

/// Audit rows for the whole supported range of each construct.
pub fn audit_all() -> Vec<AuditRow> {
    OracleConstruct::ALL
        .into_iter()
        .flat_map(|c| (1..=c.max_n()).map(move |n| audit_row(c, n).expect("n within range")))
        .collect()
}
