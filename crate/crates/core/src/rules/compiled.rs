//! Rules resolved against a schema, for bulk evaluation over a matrix.

use super::{kind_tag, Form, Literal, MatchProfile, Rule, RuleError, RuleSet, Value};
use crate::bits::Bits;
use crate::data::{AttributeKind, Column, FeatureMatrix, Schema};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Test {
    Bit(bool),
    NumEq(f64),
    Gt(f64),
    Lt(f64),
    Between(f64, f64),
    /// `None` when the level does not exist in this schema.
    Level(Option<u32>),
}

/// A literal resolved to a column index.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Check {
    pub(crate) col: usize,
    pub(crate) test: Test,
}

impl Check {
    pub(crate) fn compile(lit: &Literal, schema: &Schema) -> Result<Check, RuleError> {
        let col = schema
            .index_of(&lit.attribute)
            .ok_or_else(|| RuleError::UnknownAttribute(lit.attribute.clone()))?;
        let kind = &schema.attribute(col).kind;
        let mismatch = || RuleError::KindMismatch {
            attribute: lit.attribute.clone(),
            kind: kind_tag(schema, col),
        };
        let test = match (&lit.form, kind) {
            (Form::Eq(Value::Bit(b)), AttributeKind::Binary) => Test::Bit(*b),
            (Form::Eq(Value::Bit(b)), AttributeKind::Numeric) => Test::NumEq(*b as u8 as f64),
            (Form::Eq(Value::Token(t)), AttributeKind::Categorical { levels }) => {
                Test::Level(levels.iter().position(|l| l == t).map(|p| p as u32))
            }
            (Form::Eq(Value::Token(t)), AttributeKind::Numeric) => Test::NumEq(t.parse().map_err(|_| mismatch())?),
            (Form::Eq(_), _) => return Err(mismatch()),
            (_, AttributeKind::Categorical { .. }) => return Err(mismatch()),
            (Form::Gt(t), _) => Test::Gt(*t),
            (Form::Lt(t), _) => Test::Lt(*t),
            (Form::Between(lo, hi), _) => Test::Between(*lo, *hi),
        };
        Ok(Check { col, test })
    }

    /// Same slot numbering as `Form`.
    pub(crate) fn slot(&self) -> u8 {
        match self.test {
            Test::Bit(_) | Test::NumEq(_) | Test::Level(_) => 0,
            Test::Gt(_) => 1,
            Test::Lt(_) => 2,
            Test::Between(..) => 3,
        }
    }

    /// Clears the rows of `mask` this check rejects.
    pub(crate) fn restrict(&self, m: &FeatureMatrix, mask: &mut Bits) {
        match (&self.test, m.column(self.col)) {
            (Test::Bit(true), Column::Binary(bits)) => mask.and_assign(bits),
            (Test::Bit(false), Column::Binary(bits)) => mask.and_not_assign(bits),
            _ => mask.retain(|row| self.holds(m, row)),
        }
    }

    /// Literal form of a check produced by candidate generation.
    pub(crate) fn to_literal(&self, schema: &Schema) -> Literal {
        let attribute = schema.attribute(self.col).name.clone();
        let form = match &self.test {
            Test::Bit(b) => Form::Eq(Value::Bit(*b)),
            Test::NumEq(x) => Form::Eq(Value::Token(x.to_string())),
            Test::Gt(t) => Form::Gt(*t),
            Test::Lt(t) => Form::Lt(*t),
            Test::Between(lo, hi) => Form::Between(*lo, *hi),
            Test::Level(code) => match (&schema.attribute(self.col).kind, code) {
                (AttributeKind::Categorical { levels }, Some(c)) => Form::Eq(Value::Token(levels[*c as usize].clone())),
                _ => panic!("unknown level has no literal form"),
            },
        };
        Literal { attribute, form }
    }

    #[inline]
    pub(crate) fn holds(&self, m: &FeatureMatrix, row: usize) -> bool {
        match (&self.test, m.column(self.col)) {
            (Test::Bit(b), Column::Binary(bits)) => bits.get(row) == *b,
            (Test::Level(level), Column::Categorical(codes)) => Some(codes[row]) == *level,
            (test, _) => {
                let v = m.numeric(row, self.col);
                match test {
                    Test::NumEq(x) => v == *x,
                    Test::Gt(t) => v > *t,
                    Test::Lt(t) => v < *t,
                    Test::Between(lo, hi) => *lo < v && v < *hi,
                    Test::Bit(b) => v == *b as u8 as f64,
                    Test::Level(_) => false,
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompiledRule {
    checks: Vec<Check>,
}

impl CompiledRule {
    pub fn compile(rule: &Rule, schema: &Schema) -> Result<Self, RuleError> {
        Ok(CompiledRule {
            checks: rule
                .literals()
                .iter()
                .map(|l| Check::compile(l, schema))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }

    pub fn covers(&self, m: &FeatureMatrix, row: usize) -> bool {
        self.checks.iter().all(|c| c.holds(m, row))
    }

    pub fn satisfied(&self, m: &FeatureMatrix, row: usize) -> usize {
        self.checks.iter().filter(|c| c.holds(m, row)).count()
    }

    /// Per-literal outcome, in rule order.
    pub fn trace(&self, m: &FeatureMatrix, row: usize) -> Vec<bool> {
        self.checks.iter().map(|c| c.holds(m, row)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct CompiledRuleSet {
    rules: Vec<CompiledRule>,
}

impl CompiledRuleSet {
    pub fn compile(rs: &RuleSet, schema: &Schema) -> Result<Self, RuleError> {
        Ok(CompiledRuleSet {
            rules: rs
                .rules()
                .iter()
                .map(|r| CompiledRule::compile(r, schema))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn rules(&self) -> &[CompiledRule] {
        &self.rules
    }

    pub fn predict(&self, m: &FeatureMatrix, row: usize) -> bool {
        self.rules.iter().any(|r| r.covers(m, row))
    }

    pub fn profile(&self, m: &FeatureMatrix, row: usize) -> MatchProfile {
        let mut p = MatchProfile::NONE;
        for r in &self.rules {
            p.accumulate(r.satisfied(m, row), r.len());
        }
        p
    }
}
