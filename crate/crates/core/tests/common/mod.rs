//! Shared generators and independent reference computations for the
//! integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use bpel_reuse::bpel::{Activity, ActivityKind, BpelProcess};
use bpel_reuse::rational::Rational;
use bpel_reuse::wsdl::{Direction, Operation, Parameter, ServiceDescription};
use bpel_reuse::xsd::{Compositor, TypeRef, DERIVED_TYPES, PRIMITIVE_TYPES};
use num::{BigInt, One};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn fact(n: usize) -> i64 {
    (1..=n as i64).product()
}

// Random models for property checks.

pub fn random_builtin(rng: &mut ChaCha8Rng) -> TypeRef {
    let all: Vec<&str> = PRIMITIVE_TYPES
        .iter()
        .chain(DERIVED_TYPES.iter())
        .copied()
        .collect();
    TypeRef::builtin(all.choose(rng).unwrap())
}

pub fn random_type(rng: &mut ChaCha8Rng, depth: usize) -> TypeRef {
    if depth == 0 || rng.gen_bool(0.6) {
        return random_builtin(rng);
    }
    let compositor = *[Compositor::Sequence, Compositor::Choice, Compositor::All]
        .choose(rng)
        .unwrap();
    let n = rng.gen_range(1..=4);
    let children = (0..n).map(|_| random_type(rng, depth - 1)).collect();
    TypeRef::anonymous(compositor, children).unwrap()
}

pub fn random_parameter(rng: &mut ChaCha8Rng, k: usize) -> Parameter {
    let direction = if rng.gen_bool(0.5) {
        Direction::Input
    } else {
        Direction::Output
    };
    Parameter::new(format!("p{k}"), random_type(rng, 2), direction)
}

pub fn random_operation(rng: &mut ChaCha8Rng, name: String) -> Operation {
    let l = rng.gen_range(1..=4);
    Operation::new(name, (0..l).map(|k| random_parameter(rng, k)).collect()).unwrap()
}

pub fn random_description(rng: &mut ChaCha8Rng, tag: &str) -> ServiceDescription {
    let m = rng.gen_range(1..=3);
    let ops = (0..m)
        .map(|k| random_operation(rng, format!("{tag}_op{k}")))
        .collect();
    ServiceDescription::new(tag, ops, format!("{tag}.wsdl")).unwrap()
}

fn random_basic(rng: &mut ChaCha8Rng) -> Activity {
    match rng.gen_range(0..5) {
        0 => Activity::invoke("call", rng.gen_bool(0.5)),
        1 => Activity::receive("in"),
        2 => Activity::reply("in"),
        3 => Activity::basic(ActivityKind::Assign),
        _ => Activity::basic(ActivityKind::Empty),
    }
}

pub fn random_structured(rng: &mut ChaCha8Rng, depth: usize) -> Activity {
    let kids = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> Vec<Activity> {
        let n = rng.gen_range(lo..=hi);
        (0..n)
            .map(|_| random_activity(rng, depth.saturating_sub(1)))
            .collect()
    };
    match rng.gen_range(0..6) {
        0 => Activity::sequence(kids(rng, 1, 5)).unwrap(),
        1 => Activity::flow(kids(rng, 1, 4), rng.gen_bool(0.5)).unwrap(),
        2 => {
            let otherwise = rng.gen_bool(0.3).then(|| random_basic(rng));
            Activity::switch(kids(rng, 1, 3), otherwise).unwrap()
        }
        3 => Activity::pick(kids(rng, 1, 3)).unwrap(),
        4 => Activity::while_loop(random_activity(rng, depth.saturating_sub(1))),
        _ => Activity::scope(random_activity(rng, depth.saturating_sub(1))),
    }
}

pub fn random_activity(rng: &mut ChaCha8Rng, depth: usize) -> Activity {
    if depth == 0 || rng.gen_bool(0.4) {
        random_basic(rng)
    } else {
        random_structured(rng, depth)
    }
}

pub fn random_process(rng: &mut ChaCha8Rng, tag: &str) -> BpelProcess {
    let mut p = BpelProcess::new(tag, random_activity(rng, 3));
    p.source = format!("{tag}.bpel");
    p
}

// Reference Spearman: O(n^2) ranks and the textbook Pearson formula.

pub fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn naive_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (naive_ranks(x), naive_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

// Synthetic corpus generator.

/// Coverage weights of the types the generator draws from, out of 44.
pub const SYNTH_TYPES: [(&str, i64); 6] = [
    ("string", 44),
    ("double", 16),
    ("decimal", 14),
    ("int", 5),
    ("boolean", 1),
    ("date", 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthConstruct {
    Sequence(usize),
    Switch(usize),
    Pick(usize),
    Flow(usize),
    FlowLinks(usize),
    While,
}

#[derive(Debug, Clone)]
pub struct SynthOperation {
    pub name: String,
    pub inputs: Vec<&'static str>,
    pub outputs: Vec<&'static str>,
}

#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub id: String,
    pub operations: Vec<SynthOperation>,
    pub constructs: Vec<SynthConstruct>,
    pub r_c: u64,
}

fn weight(type_name: &str) -> i64 {
    SYNTH_TYPES.iter().find(|(t, _)| *t == type_name).unwrap().1
}

impl SynthBundle {
    /// R_p from the plan alone, without parsing anything.
    pub fn expected_r_p(&self) -> Rational {
        let mut sd = Rational::one();
        for op in &self.operations {
            let types: Vec<&str> = op.inputs.iter().chain(&op.outputs).copied().collect();
            sd *= rat(1, types.len() as i64);
            for t in types {
                sd *= rat(weight(t), 44);
            }
        }
        let mut sl = Rational::one();
        for c in &self.constructs {
            sl *= match *c {
                SynthConstruct::Sequence(n) => {
                    let p = 1i64 << n;
                    rat(p - 1, fact(n) + p - 2)
                }
                SynthConstruct::Switch(n) => rat(1, 1i64 << n),
                SynthConstruct::Pick(_) | SynthConstruct::While => rat(1, 2),
                SynthConstruct::Flow(_) => rat(1, 1),
                SynthConstruct::FlowLinks(n) => rat(1, fact(n)),
            };
        }
        Rational::from_integer(BigInt::from(self.r_c)) * sd * sl
    }

    pub fn wsdl_xml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<definitions name="{0}" targetNamespace="urn:synth:{0}" xmlns="http://schemas.xmlsoap.org/wsdl/" xmlns:tns="urn:synth:{0}" xmlns:xsd="http://www.w3.org/2001/XMLSchema">"#,
            self.id
        );
        for op in &self.operations {
            for (suffix, types) in [("In", &op.inputs), ("Out", &op.outputs)] {
                if types.is_empty() {
                    continue;
                }
                let _ = writeln!(s, r#"  <message name="{}{suffix}">"#, op.name);
                for (k, t) in types.iter().enumerate() {
                    let _ = writeln!(s, r#"    <part name="v{k}" type="xsd:{t}"/>"#);
                }
                let _ = writeln!(s, "  </message>");
            }
        }
        let _ = writeln!(s, r#"  <portType name="{}PT">"#, self.id);
        for op in &self.operations {
            let _ = writeln!(s, r#"    <operation name="{}">"#, op.name);
            let _ = writeln!(s, r#"      <input message="tns:{}In"/>"#, op.name);
            if !op.outputs.is_empty() {
                let _ = writeln!(s, r#"      <output message="tns:{}Out"/>"#, op.name);
            }
            let _ = writeln!(s, "    </operation>");
        }
        let _ = writeln!(s, "  </portType>\n</definitions>");
        s
    }

    pub fn bpel_xml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<process name="{0}" targetNamespace="urn:synth:{0}:process" xmlns="http://schemas.xmlsoap.org/ws/2003/03/business-process/">"#,
            self.id
        );
        let _ = writeln!(s, "  <flow>");
        if self.constructs.is_empty() {
            let _ = writeln!(s, "    <empty/>");
        }
        let empties = |n: usize| "<empty/>".repeat(n);
        for (i, c) in self.constructs.iter().enumerate() {
            let line = match *c {
                SynthConstruct::Sequence(n) => format!(
                    "<sequence>{}</sequence>",
                    (0..n)
                        .map(|k| format!(r#"<invoke operation="notify{k}" inputVariable="v"/>"#))
                        .collect::<String>()
                ),
                SynthConstruct::Switch(n) => format!(
                    "<switch>{}</switch>",
                    (0..n)
                        .map(|k| format!(r#"<case condition="c{k}"><empty/></case>"#))
                        .collect::<String>()
                ),
                SynthConstruct::Pick(n) => format!(
                    "<pick>{}</pick>",
                    (0..n)
                        .map(|k| format!(
                            r#"<onMessage operation="event{k}" variable="v"><empty/></onMessage>"#
                        ))
                        .collect::<String>()
                ),
                SynthConstruct::Flow(n) => format!("<flow>{}</flow>", empties(n)),
                SynthConstruct::FlowLinks(n) => format!(
                    r#"<flow><links><link name="f{i}"/></links>{}</flow>"#,
                    empties(n)
                ),
                SynthConstruct::While => r#"<while condition="more"><empty/></while>"#.to_string(),
            };
            let _ = writeln!(s, "    {line}");
        }
        let _ = writeln!(s, "  </flow>\n</process>");
        s
    }
}

/// Two populations: lean services (one string operation, at most one
/// cheap construct) and heavy ones (several typed operations, several
/// costly constructs).
pub fn plan_corpus(seed: u64, count: usize) -> Vec<SynthBundle> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let id = format!("svc{i:03}");
            if rng.gen_bool(0.5) {
                let constructs = match rng.gen_range(0..4) {
                    0 => vec![],
                    1 => vec![SynthConstruct::Sequence(2)],
                    2 => vec![SynthConstruct::Flow(rng.gen_range(1..=4))],
                    _ => vec![SynthConstruct::While],
                };
                SynthBundle {
                    id,
                    operations: vec![SynthOperation {
                        name: "serve".into(),
                        inputs: vec!["string"],
                        outputs: vec![],
                    }],
                    constructs,
                    r_c: 1,
                }
            } else {
                let m = rng.gen_range(1..=3);
                let operations = (0..m)
                    .map(|k| {
                        let pick = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| {
                            (0..rng.gen_range(lo..=hi))
                                .map(|_| SYNTH_TYPES[rng.gen_range(1..SYNTH_TYPES.len())].0)
                                .collect::<Vec<_>>()
                        };
                        SynthOperation {
                            name: format!("op{k}"),
                            inputs: pick(&mut rng, 1, 3),
                            outputs: pick(&mut rng, 0, 2),
                        }
                    })
                    .collect();
                let constructs = (0..rng.gen_range(2..=4))
                    .map(|_| match rng.gen_range(0..5) {
                        0 => SynthConstruct::Sequence(rng.gen_range(3..=6)),
                        1 => SynthConstruct::Switch(rng.gen_range(1..=4)),
                        2 => SynthConstruct::Pick(rng.gen_range(1..=3)),
                        3 => SynthConstruct::FlowLinks(rng.gen_range(2..=4)),
                        _ => SynthConstruct::While,
                    })
                    .collect();
                SynthBundle {
                    id,
                    operations,
                    constructs,
                    r_c: 1,
                }
            }
        })
        .collect()
}

/// Writes `<id>.bpel`, `<id>.wsdl` and a manifest into `dir`.
pub fn write_corpus(dir: &Path, bundles: &[SynthBundle]) {
    let mut manifest = String::from("process_id\tbpel\twsdl\tr_c\n");
    for b in bundles {
        std::fs::write(dir.join(format!("{}.bpel", b.id)), b.bpel_xml()).unwrap();
        std::fs::write(dir.join(format!("{}.wsdl", b.id)), b.wsdl_xml()).unwrap();
        let _ = writeln!(manifest, "{0}\t{0}.bpel\t{0}.wsdl\t{1}", b.id, b.r_c);
    }
    std::fs::write(dir.join("manifest.tsv"), manifest).unwrap();
}

/// Exact bin of a value in ten equal-width bins over [0, 1], last bin closed.
pub fn expected_bin(v: &Rational) -> usize {
    let scaled = (v * BigInt::from(10)).floor().to_integer();
    let idx: i64 = scaled.try_into().unwrap();
    idx.clamp(0, 9) as usize
}
