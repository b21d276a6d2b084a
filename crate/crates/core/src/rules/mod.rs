//! Rule data model, coverage semantics and partial-match scoring.

mod compiled;
mod text;

use std::fmt;

use thiserror::Error;

use crate::data::{AttributeKind, Cell, RowRef, Schema};

pub(crate) use compiled::{Check, Test};
pub use compiled::{CompiledRule, CompiledRuleSet};
pub use text::{parse_ruleset, render_literal, render_rule, serialize_ruleset, ParseError};

pub const DEFAULT_HEAD: &str = "target";

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("literal on `{attribute}` does not apply to a {kind} attribute")]
    KindMismatch { attribute: String, kind: &'static str },
    #[error("duplicate literal form on `{0}`")]
    DuplicateLiteral(String),
    #[error("between needs lo < hi, got ({lo}, {hi})")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("non-finite threshold on `{0}`")]
    NonFinite(String),
    #[error("rule head `{found}` differs from rule set head `{expected}`")]
    HeadMismatch { expected: String, found: String },
    #[error("`{0}` cannot be written in the rule grammar")]
    Unrepresentable(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    /// Binary attribute value, rendered black (1) / white (0).
    Bit(bool),
    /// Categorical level (or a numeric literal written as a token).
    Token(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    Eq(Value),
    Gt(f64),
    Lt(f64),
    /// Open interval `lo < v < hi`.
    Between(f64, f64),
}

impl Form {
    fn slot(&self) -> u8 {
        match self {
            Form::Eq(_) => 0,
            Form::Gt(_) => 1,
            Form::Lt(_) => 2,
            Form::Between(..) => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Literal {
    pub attribute: String,
    pub form: Form,
}

impl Literal {
    pub fn new(attribute: impl Into<String>, form: Form) -> Result<Self, RuleError> {
        let attribute = attribute.into();
        match form {
            Form::Gt(t) | Form::Lt(t) if !t.is_finite() => return Err(RuleError::NonFinite(attribute)),
            Form::Between(lo, hi) if !lo.is_finite() || !hi.is_finite() => return Err(RuleError::NonFinite(attribute)),
            Form::Between(lo, hi) if lo >= hi => return Err(RuleError::EmptyInterval { lo, hi }),
            _ => {}
        }
        Ok(Literal { attribute, form })
    }

    pub fn black(attribute: impl Into<String>) -> Self {
        Literal {
            attribute: attribute.into(),
            form: Form::Eq(Value::Bit(true)),
        }
    }

    pub fn white(attribute: impl Into<String>) -> Self {
        Literal {
            attribute: attribute.into(),
            form: Form::Eq(Value::Bit(false)),
        }
    }

    pub fn gt(attribute: impl Into<String>, t: f64) -> Self {
        Literal::new(attribute, Form::Gt(t)).expect("finite threshold")
    }

    pub fn lt(attribute: impl Into<String>, t: f64) -> Self {
        Literal::new(attribute, Form::Lt(t)).expect("finite threshold")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match text::render_literal(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "{:?}", self),
        }
    }
}

/// `head(V) :- L1, ..., Lm` over a single implicit example variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    head: String,
    literals: Vec<Literal>,
}

impl Rule {
    pub fn empty(head: impl Into<String>) -> Self {
        Rule {
            head: head.into(),
            literals: Vec::new(),
        }
    }

    pub fn new(head: impl Into<String>, literals: Vec<Literal>) -> Result<Self, RuleError> {
        let mut rule = Rule::empty(head);
        for l in literals {
            rule.push(l)?;
        }
        Ok(rule)
    }

    /// Appends a literal; at most one literal per (attribute, form) slot.
    pub fn push(&mut self, literal: Literal) -> Result<(), RuleError> {
        if self.has_slot(&literal.attribute, &literal.form) {
            return Err(RuleError::DuplicateLiteral(literal.attribute));
        }
        self.literals.push(literal);
        Ok(())
    }

    pub fn has_slot(&self, attribute: &str, form: &Form) -> bool {
        self.literals
            .iter()
            .any(|l| l.attribute == attribute && l.form.slot() == form.slot())
    }

    pub fn uses_attribute(&self, attribute: &str) -> bool {
        self.literals.iter().any(|l| l.attribute == attribute)
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn truncated(&self, len: usize) -> Rule {
        Rule {
            head: self.head.clone(),
            literals: self.literals[..len.min(self.literals.len())].to_vec(),
        }
    }
}

/// Disjunction of rules for one target label.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSet {
    label: String,
    head: String,
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(label: impl Into<String>, head: impl Into<String>, rules: Vec<Rule>) -> Result<Self, RuleError> {
        let head = head.into();
        for r in &rules {
            if r.head != head {
                return Err(RuleError::HeadMismatch {
                    expected: head,
                    found: r.head.clone(),
                });
            }
        }
        Ok(RuleSet {
            label: label.into(),
            head,
            rules,
        })
    }

    pub fn empty(label: impl Into<String>, head: impl Into<String>) -> Self {
        RuleSet {
            label: label.into(),
            head: head.into(),
            rules: Vec::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn push(&mut self, rule: Rule) -> Result<(), RuleError> {
        if rule.head != self.head {
            return Err(RuleError::HeadMismatch {
                expected: self.head.clone(),
                found: rule.head,
            });
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn extend(&mut self, other: RuleSet) -> Result<(), RuleError> {
        for r in other.rules {
            self.push(r)?;
        }
        Ok(())
    }
}

fn numeric_of(cell: Cell<'_>) -> Option<f64> {
    match cell {
        Cell::Bit(b) => Some(b as u8 as f64),
        Cell::Num(v) => Some(v),
        Cell::Cat(_) => None,
    }
}

pub(crate) fn kind_tag(schema: &Schema, col: usize) -> &'static str {
    match schema.attribute(col).kind {
        AttributeKind::Binary => "binary",
        AttributeKind::Numeric => "numeric",
        AttributeKind::Categorical { .. } => "categorical",
    }
}

pub fn literal_satisfied(lit: &Literal, row: &RowRef<'_>) -> Result<bool, RuleError> {
    let schema = row.schema();
    let col = schema
        .index_of(&lit.attribute)
        .ok_or_else(|| RuleError::UnknownAttribute(lit.attribute.clone()))?;
    let cell = row.get(col);
    let mismatch = || RuleError::KindMismatch {
        attribute: lit.attribute.clone(),
        kind: kind_tag(schema, col),
    };
    Ok(match (&lit.form, cell) {
        (Form::Eq(Value::Bit(b)), Cell::Bit(v)) => *b == v,
        (Form::Eq(Value::Bit(b)), Cell::Num(v)) => v == *b as u8 as f64,
        (Form::Eq(Value::Token(t)), Cell::Cat(v)) => t == v,
        (Form::Eq(Value::Token(t)), Cell::Num(v)) => t.parse::<f64>().map_err(|_| mismatch())? == v,
        (Form::Eq(_), _) => return Err(mismatch()),
        (form, cell) => {
            let v = numeric_of(cell).ok_or_else(mismatch)?;
            match form {
                Form::Gt(t) => v > *t,
                Form::Lt(t) => v < *t,
                Form::Between(lo, hi) => *lo < v && v < *hi,
                Form::Eq(_) => unreachable!(),
            }
        }
    })
}

pub fn rule_covers(rule: &Rule, row: &RowRef<'_>) -> Result<bool, RuleError> {
    for lit in &rule.literals {
        if !literal_satisfied(lit, row)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn ruleset_predict(rs: &RuleSet, row: &RowRef<'_>) -> Result<bool, RuleError> {
    for rule in &rs.rules {
        if rule_covers(rule, row)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// What a rule set says about one example, as used by multiclass combination.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MatchProfile {
    pub fired: bool,
    /// Longest covering rule, 0 if none fires.
    pub longest_fired: usize,
    /// Best satisfied-literal fraction over all rules.
    pub best_partial: f64,
}

impl MatchProfile {
    pub const NONE: MatchProfile = MatchProfile {
        fired: false,
        longest_fired: 0,
        best_partial: 0.0,
    };

    pub(crate) fn accumulate(&mut self, satisfied: usize, len: usize) {
        let partial = if len == 0 { 1.0 } else { satisfied as f64 / len as f64 };
        if satisfied == len {
            self.fired = true;
            self.longest_fired = self.longest_fired.max(len);
        }
        if partial > self.best_partial {
            self.best_partial = partial;
        }
    }
}

pub fn match_profile(rs: &RuleSet, row: &RowRef<'_>) -> Result<MatchProfile, RuleError> {
    let mut profile = MatchProfile::NONE;
    for rule in &rs.rules {
        let mut satisfied = 0;
        for lit in &rule.literals {
            if literal_satisfied(lit, row)? {
                satisfied += 1;
            }
        }
        profile.accumulate(satisfied, rule.len());
    }
    Ok(profile)
}
