//! XML-Schema type universe and data-type match probabilities.
//!
//! Every built-in simple type carries a coverage weight `w`: the number of
//! built-in types it can stand in for. A simple parameter matches a future
//! consumer with probability `w / 44`. Complex types combine their children
//! according to their compositor:
//!
//! * `sequence`: `(1 / n!) * product(child factors)`
//! * `choice`: `(1 / 2^n) * product(child factors)`
//! * `all`: `product(child factors)`

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num::bigint::BigInt;
use num::One;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::{factorial, pow2, ratio, Rational};

/// Size of the built-in type universe (19 primitive + 25 derived).
pub const UNIVERSE_SIZE: u32 = 44;

pub const PRIMITIVE_TYPES: [&str; 19] = [
    "string",
    "boolean",
    "decimal",
    "float",
    "double",
    "duration",
    "dateTime",
    "time",
    "date",
    "gYearMonth",
    "gYear",
    "gMonthDay",
    "gDay",
    "gMonth",
    "hexBinary",
    "base64Binary",
    "anyURI",
    "QName",
    "NOTATION",
];

pub const DERIVED_TYPES: [&str; 25] = [
    "normalizedString",
    "token",
    "language",
    "NMTOKEN",
    "NMTOKENS",
    "Name",
    "NCName",
    "ID",
    "IDREF",
    "IDREFS",
    "ENTITY",
    "ENTITIES",
    "integer",
    "nonPositiveInteger",
    "negativeInteger",
    "long",
    "int",
    "short",
    "byte",
    "nonNegativeInteger",
    "unsignedLong",
    "unsignedInt",
    "unsignedShort",
    "unsignedByte",
    "positiveInteger",
];

/// Untyped or `anyType` values are scored as if they were `string`.
pub const UNTYPED_EQUIVALENT: &str = "string";

const SHIPPED_TABLE: &str = include_str!("../data/xsd_coverage.txt");

pub fn is_builtin(name: &str) -> bool {
    PRIMITIVE_TYPES.contains(&name) || DERIVED_TYPES.contains(&name)
}

/// Coverage weights for the 44 built-in types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageTable {
    weights: BTreeMap<String, u32>,
}

impl CoverageTable {
    /// The table shipped in `data/xsd_coverage.txt`.
    pub fn builtin() -> Self {
        Self::parse(SHIPPED_TABLE).expect("shipped coverage table is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Parses `typename weight # justification` rows. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let bad = |message: String| Error::CoverageTable {
                line: line_no,
                message,
            };
            let mut fields = content.split_whitespace();
            let (Some(name), Some(weight), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(bad(format!("expected `typename weight`, got `{content}`")));
            };
            if !is_builtin(name) {
                return Err(bad(format!("`{name}` is not a built-in XML-Schema type")));
            }
            let weight: u32 = weight
                .parse()
                .map_err(|_| bad(format!("weight `{weight}` is not an integer")))?;
            if !(1..=UNIVERSE_SIZE).contains(&weight) {
                return Err(bad(format!(
                    "weight {weight} for `{name}` outside 1..={UNIVERSE_SIZE}"
                )));
            }
            if weights.insert(name.to_string(), weight).is_some() {
                return Err(bad(format!("duplicate entry for `{name}`")));
            }
        }
        if weights.len() != UNIVERSE_SIZE as usize {
            let missing: Vec<&str> = PRIMITIVE_TYPES
                .iter()
                .chain(DERIVED_TYPES.iter())
                .copied()
                .filter(|t| !weights.contains_key(*t))
                .collect();
            return Err(Error::CoverageTable {
                line: 0,
                message: format!(
                    "expected {UNIVERSE_SIZE} entries, found {}; missing: {}",
                    weights.len(),
                    missing.join(", ")
                ),
            });
        }
        Ok(CoverageTable { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn coverage_weight(&self, name: &str) -> Result<u32> {
        self.weights
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    /// `w / 44` for a built-in type.
    pub fn simple_match_probability(&self, name: &str) -> Result<Rational> {
        let w = self.coverage_weight(name)?;
        Ok(ratio(u64::from(w), u64::from(UNIVERSE_SIZE)))
    }

    /// Match probability of any type reference: the leaf factor for simple
    /// types, the compositor rule for complex ones.
    pub fn match_probability(&self, t: &TypeRef) -> Result<Rational> {
        match t {
            TypeRef::Simple { builtin, .. } => self.simple_match_probability(builtin),
            TypeRef::Complex {
                compositor,
                children,
                ..
            } => {
                let mut product = Rational::one();
                for child in children {
                    product *= self.match_probability(child)?;
                }
                let n = children.len();
                let scale = match compositor {
                    Compositor::Sequence => Rational::new(BigInt::one(), factorial(n)),
                    Compositor::Choice => Rational::new(BigInt::one(), pow2(n)),
                    Compositor::All => Rational::one(),
                };
                Ok(scale * product)
            }
        }
    }

    pub fn complex_match_probability(&self, t: &TypeRef) -> Result<Rational> {
        match t {
            TypeRef::Complex { .. } => self.match_probability(t),
            TypeRef::Simple { name, .. } => Err(Error::Domain(format!(
                "`{name}` is a simple type, not a complex type"
            ))),
        }
    }

    /// `1 - MP_CD`, reported per complex parameter.
    pub fn complex_mismatch_probability(&self, t: &TypeRef) -> Result<Rational> {
        Ok(Rational::one() - self.complex_match_probability(t)?)
    }
}

impl Default for CoverageTable {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compositor {
    Sequence,
    Choice,
    All,
}

impl Compositor {
    pub fn as_str(self) -> &'static str {
        match self {
            Compositor::Sequence => "sequence",
            Compositor::Choice => "choice",
            Compositor::All => "all",
        }
    }
}

impl fmt::Display for Compositor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A resolved parameter type.
///
/// `Simple` covers built-ins and user restrictions of them; `builtin` is the
/// built-in whose weight applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeRef {
    Simple {
        name: String,
        builtin: String,
    },
    Complex {
        name: String,
        compositor: Compositor,
        children: Vec<TypeRef>,
    },
}

impl TypeRef {
    pub fn builtin(name: &str) -> Self {
        TypeRef::Simple {
            name: name.to_string(),
            builtin: name.to_string(),
        }
    }

    /// A complex type; an empty child list is rejected.
    pub fn complex(
        name: impl Into<String>,
        compositor: Compositor,
        children: Vec<TypeRef>,
    ) -> Result<Self> {
        let name = name.into();
        if children.is_empty() {
            return Err(Error::Domain(format!(
                "complex type `{name}` has no children"
            )));
        }
        Ok(TypeRef::Complex {
            name,
            compositor,
            children,
        })
    }

    /// A complex type named by a hash of its structure.
    pub fn anonymous(compositor: Compositor, children: Vec<TypeRef>) -> Result<Self> {
        let mut signature = String::new();
        write_signature(&mut signature, compositor, &children);
        TypeRef::complex(structural_name(&signature), compositor, children)
    }

    pub fn name(&self) -> &str {
        match self {
            TypeRef::Simple { name, .. } | TypeRef::Complex { name, .. } => name,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, TypeRef::Complex { .. })
    }

    /// Canonical structural text, independent of type names.
    pub fn signature(&self) -> String {
        let mut out = String::new();
        match self {
            TypeRef::Simple { builtin, .. } => out.push_str(builtin),
            TypeRef::Complex {
                compositor,
                children,
                ..
            } => write_signature(&mut out, *compositor, children),
        }
        out
    }
}

fn write_signature(out: &mut String, compositor: Compositor, children: &[TypeRef]) {
    out.push_str(compositor.as_str());
    out.push('(');
    for (i, child) in children.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&child.signature());
    }
    out.push(')');
}

fn structural_name(signature: &str) -> String {
    let digest = Sha256::digest(signature.as_bytes());
    let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("anonymous-{hex}")
}
