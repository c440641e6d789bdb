use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::tree::{ExoticTree, VertexKind};

/// Bound on the fertility of vertices of one colour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FertilityBound {
    #[default]
    Unbounded,
    AtMost(usize),
    /// No vertex of this colour may appear (the coefficient vanishes identically).
    Forbidden,
}

impl FertilityBound {
    fn allows(self, fertility: usize) -> bool {
        match self {
            FertilityBound::Unbounded => true,
            FertilityBound::AtMost(m) => fertility <= m,
            FertilityBound::Forbidden => false,
        }
    }

    /// Widest bound admitting every fertility in `fs`; forbidden when `fs` is empty.
    pub fn covering(fs: impl IntoIterator<Item = usize>) -> Self {
        fs.into_iter().max().map_or(FertilityBound::Forbidden, FertilityBound::AtMost)
    }
}

/// Fertility bounds per colour and for the root. Trees violating them are never grown.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct GrowthRule {
    pub alpha: FertilityBound,
    pub beta: FertilityBound,
    pub root: FertilityBound,
}

impl GrowthRule {
    pub fn admits(&self, t: &ExoticTree) -> bool {
        (0..t.len()).all(|v| {
            let f = t.fertility(v);
            match t.kind(v) {
                VertexKind::Root => f == 0 || self.root.allows(f),
                VertexKind::Alpha => self.alpha.allows(f),
                VertexKind::Beta(_) => self.beta.allows(f),
            }
        })
    }

    /// Tightest rule admitting `t`.
    pub fn enclosing(t: &ExoticTree) -> Self {
        let of = |k: fn(VertexKind) -> bool| {
            FertilityBound::covering((0..t.len()).filter(|&v| k(t.kind(v))).map(|v| t.fertility(v)))
        };
        GrowthRule {
            alpha: of(|k| k == VertexKind::Alpha),
            beta: of(|k| matches!(k, VertexKind::Beta(_))),
            root: FertilityBound::AtMost(t.fertility(0)),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid rule `{0}`: expected comma-separated a:MAX, b:MAX, root:MAX with MAX an integer, `none` or `*`")]
pub struct RuleParseError(pub String);

impl FromStr for GrowthRule {
    type Err = RuleParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RuleParseError(s.to_string());
        let mut rule = GrowthRule::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part.split_once(':').ok_or_else(err)?;
            let bound = match value.trim() {
                "*" => FertilityBound::Unbounded,
                "none" | "-" => FertilityBound::Forbidden,
                v => FertilityBound::AtMost(v.parse().map_err(|_| err())?),
            };
            match name.trim() {
                "a" | "alpha" => rule.alpha = bound,
                "b" | "beta" => rule.beta = bound,
                "root" => rule.root = bound,
                _ => return Err(err()),
            }
        }
        Ok(rule)
    }
}

impl fmt::Display for FertilityBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FertilityBound::Unbounded => f.write_str("*"),
            FertilityBound::AtMost(m) => write!(f, "{m}"),
            FertilityBound::Forbidden => f.write_str("none"),
        }
    }
}

impl fmt::Display for GrowthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a:{},b:{},root:{}", self.alpha, self.beta, self.root)
    }
}
