//! Per-construct match factors and service-logic match probability.

use std::fmt;

use num::bigint::BigInt;
use num::One;
use serde::{Deserialize, Serialize};

use crate::bpel::{structured_constructs, BpelProcess, Construct, ConstructKind};
use crate::rational::{factorial, pow2, Rational};

/// `(2^n - 1) / (n! + 2^n - 2)`.
pub fn sequence_factor(n: usize) -> Rational {
    assert!(n >= 1, "sequence needs at least one activity");
    let omissions = pow2(n) - BigInt::one();
    let total = factorial(n) + pow2(n) - BigInt::from(2);
    Rational::new(omissions, total)
}

/// `1 / 2^n`.
pub fn switch_factor(case_count: usize) -> Rational {
    assert!(case_count >= 1, "switch needs at least one case");
    Rational::new(BigInt::one(), pow2(case_count))
}

/// `(2^n - 1) / (2^(n+1) - 2)`, which is 1/2 for every n.
pub fn pick_factor(event_count: usize) -> Rational {
    assert!(event_count >= 1, "pick needs at least one event");
    let matches = pow2(event_count) - BigInt::one();
    Rational::new(matches.clone(), matches * BigInt::from(2))
}

/// 1 for a concurrent flow, `1 / n!` when links order the activities.
pub fn flow_factor(n: usize, has_links: bool) -> Rational {
    assert!(n >= 1, "flow needs at least one activity");
    if has_links {
        Rational::new(BigInt::one(), factorial(n))
    } else {
        let omissions = pow2(n) - BigInt::one();
        Rational::new(omissions.clone(), omissions)
    }
}

pub fn while_factor() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2))
}

/// Which closed form produced a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaTag {
    Sequence,
    Switch,
    Pick,
    FlowConcurrent,
    FlowDependent,
    While,
}

impl FormulaTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaTag::Sequence => "sequence",
            FormulaTag::Switch => "switch",
            FormulaTag::Pick => "pick",
            FormulaTag::FlowConcurrent => "flow-concurrent",
            FormulaTag::FlowDependent => "flow-dependent",
            FormulaTag::While => "while",
        }
    }
}

impl fmt::Display for FormulaTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructFactor {
    pub kind: ConstructKind,
    pub n: usize,
    pub path: String,
    pub formula: FormulaTag,
    /// Excluded constructs carry 1 and are left out of the product.
    pub factor: Rational,
    pub excluded: bool,
}

pub fn construct_factor(c: &Construct) -> ConstructFactor {
    let (formula, factor) = match c.kind {
        ConstructKind::Sequence => (FormulaTag::Sequence, sequence_factor(c.n)),
        ConstructKind::Switch => (FormulaTag::Switch, switch_factor(c.n)),
        ConstructKind::Pick => (FormulaTag::Pick, pick_factor(c.n)),
        ConstructKind::Flow if c.has_links => (FormulaTag::FlowDependent, flow_factor(c.n, true)),
        ConstructKind::Flow => (FormulaTag::FlowConcurrent, flow_factor(c.n, false)),
        ConstructKind::While => (FormulaTag::While, while_factor()),
    };
    ConstructFactor {
        kind: c.kind,
        n: c.n,
        path: c.path.clone(),
        formula,
        factor: if c.excluded { Rational::one() } else { factor },
        excluded: c.excluded,
    }
}

pub fn construct_factors(p: &BpelProcess) -> Vec<ConstructFactor> {
    structured_constructs(p)
        .iter()
        .map(construct_factor)
        .collect()
}

pub fn product(factors: &[ConstructFactor]) -> Rational {
    factors
        .iter()
        .filter(|f| !f.excluded)
        .fold(Rational::one(), |acc, f| acc * &f.factor)
}

/// Product of every scored construct factor; 1 when there are none.
pub fn logic_match_probability(p: &BpelProcess) -> Rational {
    product(&construct_factors(p))
}

pub fn logic_mismatch_probability(p: &BpelProcess) -> Rational {
    Rational::one() - logic_match_probability(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpel::{Activity, ActivityKind};
    use crate::rational::{integer, ratio};

    fn proc(root: Activity) -> BpelProcess {
        BpelProcess::new("p", root)
    }

    fn empties(n: usize) -> Vec<Activity> {
        vec![Activity::basic(ActivityKind::Empty); n]
    }

    #[test]
    fn sequence_values() {
        assert_eq!(sequence_factor(3), ratio(7, 12));
        assert_eq!(sequence_factor(1), integer(1));
        assert_eq!(sequence_factor(6), ratio(63, 782));
        assert_eq!(sequence_factor(2), ratio(3, 4));
    }

    #[test]
    fn sequence_strictly_decreasing_toward_zero() {
        for n in 2..30 {
            assert!(sequence_factor(n + 1) < sequence_factor(n));
        }
        assert!(sequence_factor(30) < ratio(1, 1_000_000_000_000));
    }

    #[test]
    fn switch_values() {
        assert_eq!(switch_factor(2), ratio(1, 4));
        assert_eq!(switch_factor(1), ratio(1, 2));
        assert_eq!(switch_factor(5), ratio(1, 32));
    }

    #[test]
    fn pick_is_always_half() {
        for n in 1..=16 {
            assert_eq!(pick_factor(n), ratio(1, 2), "n = {n}");
        }
        assert_eq!(pick_factor(4), ratio(15, 30));
    }

    #[test]
    fn flow_values() {
        assert_eq!(flow_factor(4, false), integer(1));
        assert_eq!(flow_factor(1, true), integer(1));
        assert_eq!(flow_factor(3, true), ratio(1, 6));
    }

    #[test]
    fn while_is_half_and_independent_of_body() {
        assert_eq!(while_factor(), ratio(1, 2));
        let p = proc(Activity::while_loop(
            Activity::sequence(empties(2)).unwrap(),
        ));
        let fs = construct_factors(&p);
        assert_eq!(fs[0].factor, ratio(1, 2));
        assert_eq!(fs[1].factor, ratio(3, 4));
        assert_eq!(logic_match_probability(&p), ratio(3, 8));
    }

    #[test]
    fn three_whiles() {
        let w = || Activity::while_loop(Activity::basic(ActivityKind::Empty));
        let p = proc(Activity::flow(vec![w(), w(), w()], false).unwrap());
        assert_eq!(logic_match_probability(&p), ratio(1, 8));
    }

    #[test]
    fn process_level_products() {
        let p = proc(Activity::sequence(empties(3)).unwrap());
        assert_eq!(logic_match_probability(&p), ratio(7, 12));

        let p = proc(Activity::receive("go"));
        assert_eq!(logic_match_probability(&p), integer(1));
        assert_eq!(logic_mismatch_probability(&p), integer(0));

        let p = proc(Activity::while_loop(Activity::basic(ActivityKind::Empty)));
        assert_eq!(logic_mismatch_probability(&p), ratio(1, 2));

        let p = proc(Activity::switch(empties(3), None).unwrap());
        assert_eq!(logic_mismatch_probability(&p), ratio(7, 8));
    }

    #[test]
    fn six_sequence_with_three_two_case_switches() {
        let sw = || Activity::switch(empties(2), None).unwrap();
        let root = Activity::sequence(vec![
            Activity::receive("go"),
            sw(),
            sw(),
            sw(),
            Activity::basic(ActivityKind::Assign),
            Activity::reply("go"),
        ])
        .unwrap();
        assert_eq!(logic_match_probability(&proc(root)), ratio(63, 50048));
    }

    #[test]
    fn excluded_scaffold_contributes_one() {
        let root = Activity::sequence(vec![
            Activity::invoke("lookup", true),
            Activity::basic(ActivityKind::Assign),
        ])
        .unwrap();
        let fs = construct_factors(&proc(root.clone()));
        assert!(fs[0].excluded);
        assert_eq!(fs[0].factor, integer(1));
        assert_eq!(logic_match_probability(&proc(root)), integer(1));
    }
}
