//! BPEL activity trees.
//!
//! Both BPEL4WS 1.1 and WS-BPEL 2.0 documents are read into the same model.
//! 2.0 `<if>` becomes a switch with `1 + elseif` cases, `<repeatUntil>`
//! becomes a while, `<exit>` a terminate and `<rethrow>` a throw. Handlers
//! (fault, event, compensation, termination) are not part of the tree; each
//! skipped handler is recorded as a [`Note`].

use std::fmt;
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityKind {
    Invoke,
    Receive,
    Reply,
    Assign,
    Wait,
    Empty,
    Throw,
    Terminate,
    /// A basic activity outside the scored vocabulary (`validate`,
    /// `compensate`, extension or unknown elements).
    Opaque,
    Sequence,
    Flow,
    Switch,
    Pick,
    While,
    Scope,
}

impl ActivityKind {
    pub fn is_structured(self) -> bool {
        matches!(
            self,
            ActivityKind::Sequence
                | ActivityKind::Flow
                | ActivityKind::Switch
                | ActivityKind::Pick
                | ActivityKind::While
                | ActivityKind::Scope
        )
    }

    pub fn tag(self) -> &'static str {
        match self {
            ActivityKind::Invoke => "invoke",
            ActivityKind::Receive => "receive",
            ActivityKind::Reply => "reply",
            ActivityKind::Assign => "assign",
            ActivityKind::Wait => "wait",
            ActivityKind::Empty => "empty",
            ActivityKind::Throw => "throw",
            ActivityKind::Terminate => "terminate",
            ActivityKind::Opaque => "opaque",
            ActivityKind::Sequence => "sequence",
            ActivityKind::Flow => "flow",
            ActivityKind::Switch => "switch",
            ActivityKind::Pick => "pick",
            ActivityKind::While => "while",
            ActivityKind::Scope => "scope",
        }
    }
}

impl fmt::Display for ActivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One node of the activity tree.
///
/// For a switch, `children` holds one activity per `<case>` followed by the
/// `<otherwise>` activity when `has_otherwise` is set. For a pick, one
/// activity per event. While and scope have exactly one child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activity {
    pub kind: ActivityKind,
    pub name: Option<String>,
    /// Element the activity was read from (`if`, `repeatUntil`, ...).
    pub element: String,
    pub children: Vec<Activity>,
    /// Invoke only: has both an input and an output variable.
    pub synchronous: bool,
    /// Invoke, receive and reply: the partner operation.
    pub operation: Option<String>,
    /// Flow only: declares at least one link.
    pub has_links: bool,
    /// Switch only.
    pub has_otherwise: bool,
}

impl Activity {
    fn raw(kind: ActivityKind, children: Vec<Activity>) -> Self {
        Activity {
            kind,
            name: None,
            element: kind.tag().to_string(),
            children,
            synchronous: false,
            operation: None,
            has_links: false,
            has_otherwise: false,
        }
    }

    /// A basic activity. Panics if `kind` is structured.
    pub fn basic(kind: ActivityKind) -> Self {
        assert!(!kind.is_structured(), "{kind} is not a basic activity");
        Activity::raw(kind, Vec::new())
    }

    pub fn invoke(operation: &str, synchronous: bool) -> Self {
        let mut a = Activity::basic(ActivityKind::Invoke);
        a.operation = Some(operation.to_string());
        a.synchronous = synchronous;
        a
    }

    pub fn receive(operation: &str) -> Self {
        let mut a = Activity::basic(ActivityKind::Receive);
        a.operation = Some(operation.to_string());
        a
    }

    pub fn reply(operation: &str) -> Self {
        let mut a = Activity::basic(ActivityKind::Reply);
        a.operation = Some(operation.to_string());
        a
    }

    pub fn sequence(children: Vec<Activity>) -> Result<Self> {
        Activity::raw(ActivityKind::Sequence, children).checked()
    }

    pub fn flow(children: Vec<Activity>, has_links: bool) -> Result<Self> {
        let mut a = Activity::raw(ActivityKind::Flow, children);
        a.has_links = has_links;
        a.checked()
    }

    /// `cases` holds one activity per condition; `otherwise` is appended.
    pub fn switch(cases: Vec<Activity>, otherwise: Option<Activity>) -> Result<Self> {
        let mut children = cases;
        let has_otherwise = otherwise.is_some();
        children.extend(otherwise);
        let mut a = Activity::raw(ActivityKind::Switch, children);
        a.has_otherwise = has_otherwise;
        a.checked()
    }

    pub fn pick(events: Vec<Activity>) -> Result<Self> {
        Activity::raw(ActivityKind::Pick, events).checked()
    }

    pub fn while_loop(body: Activity) -> Self {
        Activity::raw(ActivityKind::While, vec![body])
    }

    pub fn scope(body: Activity) -> Self {
        Activity::raw(ActivityKind::Scope, vec![body])
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    fn checked(self) -> Result<Self> {
        let label = || {
            self.name.as_deref().map_or_else(
                || format!("<{}>", self.element),
                |n| format!("<{}> `{n}`", self.element),
            )
        };
        if self.kind.is_structured() && self.children.is_empty() {
            return Err(Error::Domain(format!(
                "{} has no child activities",
                label()
            )));
        }
        if self.kind == ActivityKind::Switch && self.case_count() == 0 {
            return Err(Error::Domain(format!(
                "{} has no conditional branch",
                label()
            )));
        }
        if matches!(self.kind, ActivityKind::While | ActivityKind::Scope)
            && self.children.len() != 1
        {
            return Err(Error::Domain(format!(
                "{} must wrap exactly one activity",
                label()
            )));
        }
        Ok(self)
    }

    pub fn is_basic(&self) -> bool {
        !self.kind.is_structured()
    }

    pub fn case_count(&self) -> usize {
        match self.kind {
            ActivityKind::Switch => self.children.len() - usize::from(self.has_otherwise),
            _ => 0,
        }
    }

    pub fn event_count(&self) -> usize {
        match self.kind {
            ActivityKind::Pick => self.children.len(),
            _ => 0,
        }
    }

    /// Compact structural text, e.g. `sequence(receive,switch[2](empty,empty),reply)`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        self.write_summary(&mut out);
        out
    }

    fn write_summary(&self, out: &mut String) {
        out.push_str(self.kind.tag());
        match self.kind {
            ActivityKind::Invoke if self.synchronous => out.push_str("!sync"),
            ActivityKind::Flow if self.has_links => out.push_str("+links"),
            ActivityKind::Switch => {
                let _ = write!(out, "[{}", self.case_count());
                if self.has_otherwise {
                    out.push_str("+otherwise");
                }
                out.push(']');
            }
            _ => {}
        }
        if !self.children.is_empty() {
            out.push('(');
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.write_summary(out);
            }
            out.push(')');
        }
    }

    /// Number of nodes in the subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Activity::size).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoteKind {
    UnknownActivity,
    HandlerSkipped,
    UnscoredContainer,
}

/// Something the parser saw but did not score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub kind: NoteKind,
    pub element: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpelProcess {
    pub name: String,
    pub root: Activity,
    pub source: String,
    /// Location of the process interface WSDL, from a WSDL `<import>`.
    pub linked_wsdl: Option<String>,
    pub notes: Vec<Note>,
}

impl BpelProcess {
    pub fn new(name: impl Into<String>, root: Activity) -> Self {
        BpelProcess {
            name: name.into(),
            root,
            source: String::new(),
            linked_wsdl: None,
            notes: Vec::new(),
        }
    }
}

const BASIC_TAGS: [(&str, ActivityKind); 13] = [
    ("invoke", ActivityKind::Invoke),
    ("receive", ActivityKind::Receive),
    ("reply", ActivityKind::Reply),
    ("assign", ActivityKind::Assign),
    ("wait", ActivityKind::Wait),
    ("empty", ActivityKind::Empty),
    ("throw", ActivityKind::Throw),
    ("rethrow", ActivityKind::Throw),
    ("terminate", ActivityKind::Terminate),
    ("exit", ActivityKind::Terminate),
    ("compensate", ActivityKind::Opaque),
    ("compensateScope", ActivityKind::Opaque),
    ("validate", ActivityKind::Opaque),
];

/// Elements that can appear among activities but are not activities.
const NON_ACTIVITY_TAGS: [&str; 30] = [
    "documentation",
    "targets",
    "sources",
    "target",
    "source",
    "condition",
    "links",
    "link",
    "correlations",
    "correlation",
    "partnerLinks",
    "partners",
    "variables",
    "correlationSets",
    "messageExchanges",
    "extensions",
    "import",
    "startCounterValue",
    "finalCounterValue",
    "completionCondition",
    "fromParts",
    "toParts",
    "joinCondition",
    "transitionCondition",
    "for",
    "until",
    "repeatEvery",
    "copy",
    "literal",
    "query",
];

const HANDLER_TAGS: [&str; 6] = [
    "faultHandlers",
    "eventHandlers",
    "compensationHandler",
    "terminationHandler",
    "catch",
    "catchAll",
];

/// Parses a BPEL process document. `source` names it in errors and reports.
pub fn parse_bpel(text: &str, source: &str) -> Result<BpelProcess> {
    let doc = Document::parse(text).map_err(|e| Error::MalformedXml {
        document: source.to_string(),
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    let invalid = |message: String| Error::InvalidBpel {
        document: source.to_string(),
        message,
    };
    if root.tag_name().name() != "process" {
        return Err(invalid(format!(
            "root element is <{}>, expected <process>",
            root.tag_name().name()
        )));
    }
    let mut parser = Parser {
        namespace: root.tag_name().namespace(),
        notes: Vec::new(),
    };
    let mut activities = parser.activities(root, "/process").map_err(&invalid)?;
    let root_activity = match activities.len() {
        0 => return Err(invalid("process contains no activity".into())),
        1 => activities.pop().expect("one activity"),
        n => {
            return Err(invalid(format!(
                "process contains {n} top-level activities"
            )))
        }
    };
    let linked_wsdl = root
        .children()
        .filter(|n| n.is_element() && n.tag_name().name() == "import")
        .find(|n| {
            n.attribute("importType")
                .is_some_and(|t| t.contains("wsdl"))
                || n.attribute("location")
                    .is_some_and(|l| l.ends_with(".wsdl"))
        })
        .and_then(|n| n.attribute("location"))
        .map(str::to_string);
    let name = root
        .attribute("name")
        .map(str::to_string)
        .unwrap_or_else(|| {
            std::path::Path::new(source)
                .file_stem()
                .map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned())
        });
    Ok(BpelProcess {
        name,
        root: root_activity,
        source: source.to_string(),
        linked_wsdl,
        notes: parser.notes,
    })
}

struct Parser<'a> {
    namespace: Option<&'a str>,
    notes: Vec<Note>,
}

fn segment(node: Node, index: usize) -> String {
    let tag = node.tag_name().name();
    match node.attribute("name") {
        Some(name) => format!("{tag}[{name}]"),
        None => format!("{tag}[{index}]"),
    }
}

fn child_elements<'a, 'input>(node: Node<'a, 'input>) -> impl Iterator<Item = Node<'a, 'input>> {
    node.children().filter(Node::is_element)
}

impl Parser<'_> {
    fn foreign(&self, node: Node) -> bool {
        let ns = node.tag_name().namespace();
        ns.is_some() && ns != self.namespace
    }

    fn note(&mut self, kind: NoteKind, node: Node, path: &str) {
        self.notes.push(Note {
            kind,
            element: node.tag_name().name().to_string(),
            path: path.to_string(),
        });
    }

    /// Activities directly under `node`, skipping non-activity elements.
    fn activities(&mut self, node: Node, path: &str) -> Result<Vec<Activity>, String> {
        let mut out = Vec::new();
        for child in child_elements(node) {
            let tag = child.tag_name().name();
            if self.foreign(child) || NON_ACTIVITY_TAGS.contains(&tag) {
                continue;
            }
            let child_path = format!("{path}/{}", segment(child, out.len()));
            if HANDLER_TAGS.contains(&tag) {
                self.note(NoteKind::HandlerSkipped, child, &child_path);
                continue;
            }
            out.push(self.activity(child, &child_path)?);
        }
        Ok(out)
    }

    fn single(&mut self, node: Node, path: &str) -> Result<Activity, String> {
        let mut acts = self.activities(node, path)?;
        match acts.len() {
            1 => Ok(acts.pop().expect("one activity")),
            0 => Ok(Activity::basic(ActivityKind::Empty)),
            n => Err(format!("{path}: expected one activity, found {n}")),
        }
    }

    fn activity(&mut self, node: Node, path: &str) -> Result<Activity, String> {
        let tag = node.tag_name().name();
        let named = |mut a: Activity| {
            a.name = node.attribute("name").map(str::to_string);
            a.element = tag.to_string();
            a
        };
        if let Some((_, kind)) = BASIC_TAGS.iter().find(|(t, _)| *t == tag) {
            let mut a = Activity::basic(*kind);
            if matches!(
                kind,
                ActivityKind::Invoke | ActivityKind::Receive | ActivityKind::Reply
            ) {
                a.operation = node.attribute("operation").map(str::to_string);
            }
            if *kind == ActivityKind::Invoke {
                let has = |t: &str| child_elements(node).any(|c| c.tag_name().name() == t);
                a.synchronous = (node.has_attribute("inputVariable")
                    && node.has_attribute("outputVariable"))
                    || (has("toParts") && has("fromParts"));
            }
            // Inline handlers on invoke (1.1) are not scored either.
            for c in child_elements(node) {
                if HANDLER_TAGS.contains(&c.tag_name().name()) {
                    self.note(NoteKind::HandlerSkipped, c, path);
                }
            }
            return Ok(named(a));
        }
        let structured = match tag {
            "sequence" => Activity::sequence(self.activities(node, path)?),
            "flow" => {
                let has_links = child_elements(node)
                    .filter(|c| c.tag_name().name() == "links")
                    .any(|links| child_elements(links).any(|l| l.tag_name().name() == "link"));
                Activity::flow(self.activities(node, path)?, has_links)
            }
            "switch" => {
                let mut cases = Vec::new();
                let mut otherwise = None;
                for c in child_elements(node) {
                    let branch_path = format!("{path}/{}", segment(c, cases.len()));
                    match c.tag_name().name() {
                        "case" => cases.push(self.single(c, &branch_path)?),
                        "otherwise" => otherwise = Some(self.single(c, &branch_path)?),
                        _ => {}
                    }
                }
                Activity::switch(cases, otherwise)
            }
            "if" => {
                let mut cases = vec![];
                let mut otherwise = None;
                let mut direct = Vec::new();
                for c in child_elements(node) {
                    let t = c.tag_name().name();
                    let branch_path = format!("{path}/{}", segment(c, cases.len() + 1));
                    match t {
                        "elseif" => cases.push(self.single(c, &branch_path)?),
                        "else" => otherwise = Some(self.single(c, &branch_path)?),
                        _ if self.foreign(c) || NON_ACTIVITY_TAGS.contains(&t) => {}
                        _ => direct.push(self.activity(c, &format!("{path}/{}", segment(c, 0)))?),
                    }
                }
                let first = match direct.len() {
                    0 => Activity::basic(ActivityKind::Empty),
                    1 => direct.pop().expect("one activity"),
                    n => return Err(format!("{path}: <if> holds {n} activities")),
                };
                cases.insert(0, first);
                Activity::switch(cases, otherwise)
            }
            "pick" => {
                let mut events = Vec::new();
                for c in child_elements(node) {
                    if matches!(c.tag_name().name(), "onMessage" | "onAlarm") {
                        let branch_path = format!("{path}/{}", segment(c, events.len()));
                        events.push(self.single(c, &branch_path)?);
                    }
                }
                Activity::pick(events)
            }
            "while" | "repeatUntil" => {
                let body = self.single(node, path)?;
                Ok(Activity::while_loop(body))
            }
            "scope" => {
                let body = self.single(node, path)?;
                Ok(Activity::scope(body))
            }
            "forEach" => {
                self.note(NoteKind::UnscoredContainer, node, path);
                let body = self.single(node, path)?;
                Ok(Activity::scope(body))
            }
            _ => {
                self.note(NoteKind::UnknownActivity, node, path);
                return Ok(named(Activity::basic(ActivityKind::Opaque)));
            }
        };
        structured.map(named).map_err(|e| format!("{path}: {e}"))
    }
}

/// Scored structured construct kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructKind {
    Sequence,
    Flow,
    Switch,
    Pick,
    While,
}

impl ConstructKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstructKind::Sequence => "sequence",
            ConstructKind::Flow => "flow",
            ConstructKind::Switch => "switch",
            ConstructKind::Pick => "pick",
            ConstructKind::While => "while",
        }
    }
}

impl fmt::Display for ConstructKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A structured construct with its effective `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Construct {
    pub kind: ConstructKind,
    pub n: usize,
    pub has_links: bool,
    pub path: String,
    /// Sequences that only wrap one synchronous call are not scored.
    pub excluded: bool,
}

/// Depth-first, pre-order list of every structured construct. Scopes are
/// transparent and do not appear.
pub fn structured_constructs(p: &BpelProcess) -> Vec<Construct> {
    let mut out = Vec::new();
    collect(&p.root, "", 0, &mut out);
    out
}

fn collect(a: &Activity, parent: &str, index: usize, out: &mut Vec<Construct>) {
    let path = match &a.name {
        Some(name) => format!("{parent}/{}[{name}]", a.element),
        None => format!("{parent}/{}[{index}]", a.element),
    };
    let entry = match a.kind {
        ActivityKind::Sequence => Some((ConstructKind::Sequence, a.children.len())),
        ActivityKind::Flow => Some((ConstructKind::Flow, a.children.len())),
        ActivityKind::Switch => Some((ConstructKind::Switch, a.case_count())),
        ActivityKind::Pick => Some((ConstructKind::Pick, a.event_count())),
        ActivityKind::While => Some((ConstructKind::While, 1)),
        _ => None,
    };
    if let Some((kind, n)) = entry {
        out.push(Construct {
            kind,
            n,
            has_links: a.has_links,
            path: path.clone(),
            excluded: kind == ConstructKind::Sequence && is_invocation_scaffold(a),
        });
    }
    for (i, c) in a.children.iter().enumerate() {
        collect(c, &path, i, out);
    }
}

/// A sequence of basic activities whose only non-data activity is a single
/// synchronous invoke, or a receive/reply pair on one operation.
pub fn is_invocation_scaffold(seq: &Activity) -> bool {
    if seq.kind != ActivityKind::Sequence || !seq.children.iter().all(Activity::is_basic) {
        return false;
    }
    let core: Vec<&Activity> = seq
        .children
        .iter()
        .filter(|c| !matches!(c.kind, ActivityKind::Assign | ActivityKind::Empty))
        .collect();
    match core.as_slice() {
        [one] => one.kind == ActivityKind::Invoke && one.synchronous,
        [a, b] => {
            let (recv, reply) = match (a.kind, b.kind) {
                (ActivityKind::Receive, ActivityKind::Reply) => (a, b),
                (ActivityKind::Reply, ActivityKind::Receive) => (b, a),
                _ => return false,
            };
            match (&recv.operation, &reply.operation) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            }
        }
        _ => false,
    }
}

/// Writes a process as canonical BPEL 1.1 XML.
pub fn to_bpel_xml(p: &BpelProcess) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<process name=\"{}\" xmlns=\"http://schemas.xmlsoap.org/ws/2003/03/business-process/\">",
        escape(&p.name)
    );
    write_activity(&p.root, 1, &mut out);
    out.push_str("</process>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn write_activity(a: &Activity, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let tag = match a.kind {
        ActivityKind::Opaque => "empty",
        k => k.tag(),
    };
    let mut attrs = String::new();
    if let Some(name) = &a.name {
        let _ = write!(attrs, " name=\"{}\"", escape(name));
    }
    if let Some(op) = &a.operation {
        let _ = write!(attrs, " operation=\"{}\"", escape(op));
    }
    if a.kind == ActivityKind::Invoke {
        attrs.push_str(" inputVariable=\"request\"");
        if a.synchronous {
            attrs.push_str(" outputVariable=\"response\"");
        }
    }
    if a.kind == ActivityKind::While {
        attrs.push_str(" condition=\"true()\"");
    }
    if a.children.is_empty() {
        let _ = writeln!(out, "{pad}<{tag}{attrs}/>");
        return;
    }
    let _ = writeln!(out, "{pad}<{tag}{attrs}>");
    let inner = "  ".repeat(depth + 1);
    match a.kind {
        ActivityKind::Switch => {
            let cases = a.case_count();
            for (i, c) in a.children.iter().enumerate() {
                let branch = if i < cases { "case" } else { "otherwise" };
                let cond = if i < cases {
                    format!(" condition=\"c{i}\"")
                } else {
                    String::new()
                };
                let _ = writeln!(out, "{inner}<{branch}{cond}>");
                write_activity(c, depth + 2, out);
                let _ = writeln!(out, "{inner}</{branch}>");
            }
        }
        ActivityKind::Pick => {
            for c in &a.children {
                let _ = writeln!(out, "{inner}<onMessage operation=\"event\">");
                write_activity(c, depth + 2, out);
                let _ = writeln!(out, "{inner}</onMessage>");
            }
        }
        _ => {
            if a.kind == ActivityKind::Flow && a.has_links {
                let _ = writeln!(out, "{inner}<links><link name=\"l0\"/></links>");
            }
            for c in &a.children {
                write_activity(c, depth + 1, out);
            }
        }
    }
    let _ = writeln!(out, "{pad}</{tag}>");
}
