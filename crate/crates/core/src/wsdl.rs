//! WSDL 1.1 interface model and description match probability.
//!
//! A request-response operation is one [`Operation`] whose parameter count
//! `l` covers its input and output message parts together. Fault messages
//! are not parameters.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num::One;
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{integer, Rational};
use crate::xsd::{is_builtin, Compositor, CoverageTable, TypeRef, UNTYPED_EQUIVALENT};

const XSD_NAMESPACES: [&str; 3] = [
    "http://www.w3.org/2001/XMLSchema",
    "http://www.w3.org/2000/10/XMLSchema",
    "http://www.w3.org/1999/XMLSchema",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    pub ty: TypeRef,
    pub direction: Direction,
}

impl Parameter {
    pub fn new(name: impl Into<String>, ty: TypeRef, direction: Direction) -> Self {
        Parameter {
            name: name.into(),
            ty,
            direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub name: String,
    pub parameters: Vec<Parameter>,
}

impl Operation {
    pub fn new(name: impl Into<String>, parameters: Vec<Parameter>) -> Result<Self> {
        let name = name.into();
        if parameters.is_empty() {
            return Err(Error::Domain(format!(
                "operation `{name}` has no input or output parameters"
            )));
        }
        Ok(Operation { name, parameters })
    }

    /// `l_k`: inputs plus outputs.
    pub fn parameter_count(&self) -> usize {
        self.parameters.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceDescription {
    pub name: String,
    pub operations: Vec<Operation>,
    pub source: String,
}

impl ServiceDescription {
    pub fn new(
        name: impl Into<String>,
        operations: Vec<Operation>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let name = name.into();
        if operations.is_empty() {
            return Err(Error::Domain(format!("service `{name}` has no operations")));
        }
        let mut seen = HashSet::new();
        for op in &operations {
            if !seen.insert(op.name.as_str()) {
                return Err(Error::Domain(format!(
                    "service `{name}` declares operation `{}` twice",
                    op.name
                )));
            }
        }
        Ok(ServiceDescription {
            name,
            operations,
            source: source.into(),
        })
    }

    /// `m`.
    pub fn operation_count(&self) -> usize {
        self.operations.len()
    }
}

/// Product over the operation's parameters of their type match probabilities.
pub fn parameters_match_probability(op: &Operation, table: &CoverageTable) -> Result<Rational> {
    let mut product = Rational::one();
    for p in &op.parameters {
        product *= table.match_probability(&p.ty)?;
    }
    Ok(product)
}

/// `(1 / l_k) * MP_P(O_k)` for one operation.
pub fn operation_factor(op: &Operation, table: &CoverageTable) -> Result<Rational> {
    let l = integer(op.parameter_count() as u64);
    Ok(parameters_match_probability(op, table)? / l)
}

/// Product over all operations of `(1 / l_k) * MP_P(O_k)`.
pub fn description_match_probability(
    sd: &ServiceDescription,
    table: &CoverageTable,
) -> Result<Rational> {
    let mut product = Rational::one();
    for op in &sd.operations {
        product *= operation_factor(op, table)?;
    }
    Ok(product)
}

pub fn description_mismatch_probability(
    sd: &ServiceDescription,
    table: &CoverageTable,
) -> Result<Rational> {
    Ok(Rational::one() - description_match_probability(sd, table)?)
}

/// Parses a WSDL 1.1 document. `source` names the document in errors and
/// in the resulting description.
pub fn parse_wsdl(text: &str, source: &str, table: &CoverageTable) -> Result<ServiceDescription> {
    let doc = Document::parse(text).map_err(|e| Error::MalformedXml {
        document: source.to_string(),
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "definitions" {
        return Err(Error::InvalidWsdl {
            document: source.to_string(),
            message: format!(
                "root element is <{}>, expected <definitions>",
                root.tag_name().name()
            ),
        });
    }

    let schema = SchemaIndex::collect(root);
    let mut resolver = Resolver {
        schema: &schema,
        table,
        in_progress: Vec::new(),
    };

    let mut messages: HashMap<&str, Node> = HashMap::new();
    for msg in elements(root, "message") {
        if let Some(name) = msg.attribute("name") {
            messages.insert(name, msg);
        }
    }

    let mut operations = Vec::new();
    for port_type in elements(root, "portType") {
        for op in elements(port_type, "operation") {
            let op_name = op.attribute("name").ok_or_else(|| Error::InvalidWsdl {
                document: source.to_string(),
                message: "portType operation without a name".into(),
            })?;
            let mut params = Vec::new();
            for (tag, direction) in [("input", Direction::Input), ("output", Direction::Output)] {
                for io in elements(op, tag) {
                    let Some(msg_ref) = io.attribute("message") else {
                        continue;
                    };
                    let msg_name = local_name(msg_ref);
                    let msg = messages
                        .get(msg_name)
                        .ok_or_else(|| Error::UnresolvedMessage {
                            operation: op_name.to_string(),
                            message: msg_ref.to_string(),
                        })?;
                    for part in elements(*msg, "part") {
                        let part_name = part.attribute("name").unwrap_or("part");
                        let context = format!("part `{part_name}` of message `{msg_name}`");
                        let ty = if let Some(el) = part.attribute("element") {
                            resolver.global_element(el, &context)?
                        } else if let Some(t) = part.attribute("type") {
                            resolver.type_by_qname(t, part, &context)?
                        } else {
                            TypeRef::builtin(UNTYPED_EQUIVALENT)
                        };
                        params.push(Parameter::new(part_name, ty, direction));
                    }
                }
            }
            operations.push(
                Operation::new(op_name, params).map_err(|e| Error::InvalidWsdl {
                    document: source.to_string(),
                    message: e.to_string(),
                })?,
            );
        }
    }

    let name = root
        .attribute("name")
        .or_else(|| {
            elements(root, "service")
                .next()
                .and_then(|s| s.attribute("name"))
        })
        .map(str::to_string)
        .unwrap_or_else(|| stem(source));
    ServiceDescription::new(name, operations, source).map_err(|e| Error::InvalidWsdl {
        document: source.to_string(),
        message: e.to_string(),
    })
}

fn stem(source: &str) -> String {
    std::path::Path::new(source)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string())
}

fn elements<'a, 'input: 'a>(
    node: Node<'a, 'input>,
    local: &'static str,
) -> impl Iterator<Item = Node<'a, 'input>> {
    node.children()
        .filter(move |n| n.is_element() && n.tag_name().name() == local)
}

fn local_name(qname: &str) -> &str {
    qname.rsplit_once(':').map_or(qname, |(_, l)| l)
}

/// Top-level declarations of every embedded schema, keyed by local name.
struct SchemaIndex<'a, 'input> {
    complex: HashMap<&'a str, Node<'a, 'input>>,
    simple: HashMap<&'a str, Node<'a, 'input>>,
    elements: HashMap<&'a str, Node<'a, 'input>>,
    groups: HashMap<&'a str, Node<'a, 'input>>,
}

impl<'a, 'input> SchemaIndex<'a, 'input> {
    fn collect(root: Node<'a, 'input>) -> Self {
        let mut index = SchemaIndex {
            complex: HashMap::new(),
            simple: HashMap::new(),
            elements: HashMap::new(),
            groups: HashMap::new(),
        };
        for types in elements(root, "types") {
            for schema in elements(types, "schema") {
                for decl in schema.children().filter(Node::is_element) {
                    let Some(name) = decl.attribute("name") else {
                        continue;
                    };
                    let map = match decl.tag_name().name() {
                        "complexType" => &mut index.complex,
                        "simpleType" => &mut index.simple,
                        "element" => &mut index.elements,
                        "group" => &mut index.groups,
                        _ => continue,
                    };
                    map.insert(name, decl);
                }
            }
        }
        index
    }
}

struct Resolver<'s, 'a, 'input> {
    schema: &'s SchemaIndex<'a, 'input>,
    table: &'s CoverageTable,
    in_progress: Vec<String>,
}

enum QRef<'q> {
    Xsd(&'q str),
    User(&'q str),
}

impl<'s, 'a, 'input> Resolver<'s, 'a, 'input> {
    fn classify<'q>(&self, qname: &'q str, at: Node) -> QRef<'q> {
        let (prefix, local) = match qname.split_once(':') {
            Some((p, l)) => (Some(p), l),
            None => (None, qname),
        };
        let ns = at.lookup_namespace_uri(prefix);
        if ns.is_some_and(|ns| XSD_NAMESPACES.contains(&ns)) {
            QRef::Xsd(local)
        } else {
            QRef::User(local)
        }
    }

    fn enter(&mut self, key: String) -> Result<()> {
        if self.in_progress.contains(&key) {
            let name = key.split_once(':').map_or(key.as_str(), |(_, n)| n);
            return Err(Error::TypeCycle(name.to_string()));
        }
        self.in_progress.push(key);
        Ok(())
    }

    fn leave(&mut self) {
        self.in_progress.pop();
    }

    fn builtin(&self, local: &str, context: &str) -> Result<TypeRef> {
        match local {
            "anyType" | "anySimpleType" => Ok(TypeRef::Simple {
                name: local.to_string(),
                builtin: UNTYPED_EQUIVALENT.to_string(),
            }),
            _ if is_builtin(local) => Ok(TypeRef::builtin(local)),
            _ => Err(Error::UnresolvedType {
                name: local.to_string(),
                context: context.to_string(),
            }),
        }
    }

    fn type_by_qname(&mut self, qname: &str, at: Node, context: &str) -> Result<TypeRef> {
        let local = match self.classify(qname, at) {
            QRef::Xsd(local) => return self.builtin(local, context),
            QRef::User(local) => local,
        };
        if let Some(node) = self.schema.complex.get(local).copied() {
            self.enter(format!("type:{local}"))?;
            let t = self.complex_type(node, Some(local));
            self.leave();
            return t;
        }
        if let Some(node) = self.schema.simple.get(local).copied() {
            self.enter(format!("type:{local}"))?;
            let t = self.simple_type(node, Some(local));
            self.leave();
            return t;
        }
        // Unprefixed built-in names in documents without an XSD default namespace.
        if is_builtin(local) || local == "anyType" {
            return self.builtin(local, context);
        }
        Err(Error::UnresolvedType {
            name: qname.to_string(),
            context: context.to_string(),
        })
    }

    fn global_element(&mut self, qname: &str, context: &str) -> Result<TypeRef> {
        let local = local_name(qname);
        let node =
            self.schema
                .elements
                .get(local)
                .copied()
                .ok_or_else(|| Error::UnresolvedElement {
                    name: qname.to_string(),
                    context: context.to_string(),
                })?;
        self.enter(format!("element:{local}"))?;
        let t = self.element(node);
        self.leave();
        t
    }

    fn element(&mut self, el: Node) -> Result<TypeRef> {
        let name = el
            .attribute("name")
            .or(el.attribute("ref"))
            .unwrap_or("element");
        let context = format!("element `{name}`");
        if let Some(r) = el.attribute("ref") {
            return self.global_element(r, &context);
        }
        if let Some(t) = el.attribute("type") {
            return self.type_by_qname(t, el, &context);
        }
        for child in el.children().filter(Node::is_element) {
            match child.tag_name().name() {
                "complexType" => return self.complex_type(child, None),
                "simpleType" => return self.simple_type(child, None),
                _ => {}
            }
        }
        Ok(TypeRef::builtin(UNTYPED_EQUIVALENT))
    }

    fn complex_type(&mut self, node: Node, name: Option<&str>) -> Result<TypeRef> {
        let label = name.unwrap_or("anonymous complexType").to_string();
        let mut parts: Vec<(Compositor, Vec<TypeRef>)> = Vec::new();
        for child in node.children().filter(Node::is_element) {
            match child.tag_name().name() {
                "sequence" | "choice" | "all" | "group" => {
                    parts.push(self.particle(child)?);
                }
                "complexContent" => {
                    for deriv in child.children().filter(Node::is_element) {
                        let tag = deriv.tag_name().name();
                        if tag != "extension" && tag != "restriction" {
                            continue;
                        }
                        if tag == "extension" {
                            if let Some(base) = deriv.attribute("base") {
                                let ctx = format!("extension base of `{label}`");
                                let base_t = self.type_by_qname(base, deriv, &ctx)?;
                                parts.push(flatten(base_t));
                            }
                        }
                        for p in deriv.children().filter(Node::is_element) {
                            if matches!(
                                p.tag_name().name(),
                                "sequence" | "choice" | "all" | "group"
                            ) {
                                parts.push(self.particle(p)?);
                            }
                        }
                    }
                }
                "simpleContent" => {
                    for deriv in child.children().filter(Node::is_element) {
                        if let Some(base) = deriv.attribute("base") {
                            let ctx = format!("simpleContent base of `{label}`");
                            let base_t = self.type_by_qname(base, deriv, &ctx)?;
                            return Ok(rename(base_t, name));
                        }
                    }
                }
                _ => {}
            }
        }
        let (compositor, children) = match parts.len() {
            0 => {
                return Err(Error::UnresolvedType {
                    name: label,
                    context: "complex type without element content".into(),
                })
            }
            1 => parts.pop().expect("one part"),
            _ => {
                let children = parts
                    .into_iter()
                    .map(|(c, kids)| TypeRef::anonymous(c, kids))
                    .collect::<Result<Vec<_>>>()?;
                (Compositor::Sequence, children)
            }
        };
        match name {
            Some(n) => TypeRef::complex(n, compositor, children),
            None => TypeRef::anonymous(compositor, children),
        }
    }

    fn particle(&mut self, node: Node) -> Result<(Compositor, Vec<TypeRef>)> {
        if node.tag_name().name() == "group" {
            let r = node.attribute("ref").ok_or_else(|| Error::UnresolvedType {
                name: "group".into(),
                context: "group without ref".into(),
            })?;
            let local = local_name(r);
            let group =
                self.schema
                    .groups
                    .get(local)
                    .copied()
                    .ok_or_else(|| Error::UnresolvedType {
                        name: r.to_string(),
                        context: "group reference".into(),
                    })?;
            self.enter(format!("group:{local}"))?;
            let inner = group
                .children()
                .filter(Node::is_element)
                .find(|c| matches!(c.tag_name().name(), "sequence" | "choice" | "all"));
            let out = match inner {
                Some(p) => self.particle(p),
                None => Err(Error::UnresolvedType {
                    name: r.to_string(),
                    context: "empty model group".into(),
                }),
            };
            self.leave();
            return out;
        }
        let compositor = match node.tag_name().name() {
            "choice" => Compositor::Choice,
            "all" => Compositor::All,
            _ => Compositor::Sequence,
        };
        let mut children = Vec::new();
        for child in node.children().filter(Node::is_element) {
            match child.tag_name().name() {
                "element" => children.push(self.element(child)?),
                "sequence" | "choice" | "all" | "group" => {
                    let (c, kids) = self.particle(child)?;
                    children.push(TypeRef::anonymous(c, kids)?);
                }
                "any" => children.push(TypeRef::Simple {
                    name: "any".into(),
                    builtin: UNTYPED_EQUIVALENT.into(),
                }),
                _ => {}
            }
        }
        if children.is_empty() {
            return Err(Error::UnresolvedType {
                name: compositor.to_string(),
                context: "compositor without element particles".into(),
            });
        }
        Ok((compositor, children))
    }

    /// Restrictions inherit the weight of their base, lists that of their
    /// item type, and unions that of their widest member.
    fn simple_type(&mut self, node: Node, name: Option<&str>) -> Result<TypeRef> {
        let label = name.unwrap_or("anonymous simpleType").to_string();
        let ctx = format!("simple type `{label}`");
        for deriv in node.children().filter(Node::is_element) {
            let base = match deriv.tag_name().name() {
                "restriction" => self.derived_base(deriv, "base", &ctx)?,
                "list" => self.derived_base(deriv, "itemType", &ctx)?,
                "union" => {
                    let mut members = Vec::new();
                    if let Some(list) = deriv.attribute("memberTypes") {
                        for m in list.split_whitespace() {
                            members.push(self.type_by_qname(m, deriv, &ctx)?);
                        }
                    }
                    for inline in deriv
                        .children()
                        .filter(|c| c.is_element() && c.tag_name().name() == "simpleType")
                    {
                        members.push(self.simple_type(inline, None)?);
                    }
                    let mut best: Option<(u32, TypeRef)> = None;
                    for m in members {
                        let TypeRef::Simple { builtin, .. } = &m else {
                            continue;
                        };
                        let w = self.table.coverage_weight(builtin)?;
                        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
                            best = Some((w, m));
                        }
                    }
                    best.map(|(_, t)| t).ok_or_else(|| Error::UnresolvedType {
                        name: label.clone(),
                        context: "union without simple member types".into(),
                    })?
                }
                _ => continue,
            };
            return Ok(rename(base, name));
        }
        Err(Error::UnresolvedType {
            name: label,
            context: "simple type without restriction, list or union".into(),
        })
    }

    fn derived_base(&mut self, deriv: Node, attr: &str, ctx: &str) -> Result<TypeRef> {
        if let Some(base) = deriv.attribute(attr) {
            return self.type_by_qname(base, deriv, ctx);
        }
        match deriv
            .children()
            .find(|c| c.is_element() && c.tag_name().name() == "simpleType")
        {
            Some(inline) => self.simple_type(inline, None),
            None => Err(Error::UnresolvedType {
                name: ctx.to_string(),
                context: format!("missing `{attr}`"),
            }),
        }
    }
}

fn rename(t: TypeRef, name: Option<&str>) -> TypeRef {
    match (t, name) {
        (TypeRef::Simple { builtin, .. }, Some(n)) => TypeRef::Simple {
            name: n.to_string(),
            builtin,
        },
        (
            TypeRef::Complex {
                compositor,
                children,
                ..
            },
            Some(n),
        ) => TypeRef::Complex {
            name: n.to_string(),
            compositor,
            children,
        },
        (t, None) => t,
    }
}

fn flatten(t: TypeRef) -> (Compositor, Vec<TypeRef>) {
    match t {
        TypeRef::Complex {
            compositor,
            children,
            ..
        } => (compositor, children),
        simple => (Compositor::Sequence, vec![simple]),
    }
}
