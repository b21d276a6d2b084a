//! Prolog-style rule files.
//!
//! ```text
//! % label: 0
//! % head: label_0
//! label_0(V) :- black_215(V), white_325(V).
//! label_0(V) :- gt_cost(V, 12.5), between_count(V, 1, 4), eq_kind(V, crown).
//! ```
//!
//! Binary attributes `px_<i>` render as `black_<i>` / `white_<i>`; other
//! binary attributes keep their name (`black_w_good`). A rule with no body
//! is written as the fact `head(V).`

use std::fmt::Write as _;

use thiserror::Error;

use super::{Form, Literal, Rule, RuleError, RuleSet, Value, DEFAULT_HEAD};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn is_name_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | '\'' | '%' | '.'))
}

fn check_name(name: &str) -> Result<(), RuleError> {
    if name.is_empty() || !name.chars().all(is_name_char) {
        return Err(RuleError::Unrepresentable(name.to_string()));
    }
    Ok(())
}

fn binary_id(attribute: &str) -> Result<&str, RuleError> {
    if let Some(digits) = attribute.strip_prefix("px_") {
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(digits);
        }
    }
    if attribute.bytes().all(|b| b.is_ascii_digit()) {
        // would read back as px_<digits>
        return Err(RuleError::Unrepresentable(attribute.to_string()));
    }
    Ok(attribute)
}

fn attribute_of_binary_id(id: &str) -> String {
    if id.bytes().all(|b| b.is_ascii_digit()) {
        format!("px_{id}")
    } else {
        id.to_string()
    }
}

fn is_bare_token(t: &str) -> bool {
    !t.is_empty()
        && t.chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '+' | '.'))
}

fn render_token(t: &str) -> String {
    if is_bare_token(t) {
        t.to_string()
    } else {
        let mut s = String::with_capacity(t.len() + 2);
        s.push('\'');
        for c in t.chars() {
            match c {
                '\'' => s.push_str("\\'"),
                '\\' => s.push_str("\\\\"),
                '\n' => s.push_str("\\n"),
                _ => s.push(c),
            }
        }
        s.push('\'');
        s
    }
}

pub fn render_literal(lit: &Literal) -> Result<String, RuleError> {
    let name = &lit.attribute;
    check_name(name)?;
    Ok(match &lit.form {
        Form::Eq(Value::Bit(true)) => format!("black_{}(V)", binary_id(name)?),
        Form::Eq(Value::Bit(false)) => format!("white_{}(V)", binary_id(name)?),
        Form::Eq(Value::Token(t)) => format!("eq_{name}(V, {})", render_token(t)),
        Form::Gt(t) => format!("gt_{name}(V, {t})"),
        Form::Lt(t) => format!("lt_{name}(V, {t})"),
        Form::Between(lo, hi) => format!("between_{name}(V, {lo}, {hi})"),
    })
}

/// One rule in clause form, without the trailing newline.
pub fn render_rule(rule: &Rule) -> Result<String, RuleError> {
    check_name(rule.head())?;
    if rule.is_empty() {
        return Ok(format!("{}(V).", rule.head()));
    }
    let body: Vec<String> = rule.literals().iter().map(render_literal).collect::<Result<_, _>>()?;
    Ok(format!("{}(V) :- {}.", rule.head(), body.join(", ")))
}

pub fn serialize_ruleset(rs: &RuleSet) -> Result<String, RuleError> {
    if rs.label().contains('\n') {
        return Err(RuleError::Unrepresentable(rs.label().to_string()));
    }
    check_name(rs.head())?;
    let mut out = String::new();
    writeln!(out, "% label: {}", rs.label()).unwrap();
    writeln!(out, "% head: {}", rs.head()).unwrap();
    for rule in rs.rules() {
        writeln!(out, "{}", render_rule(rule)?).unwrap();
    }
    Ok(out)
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        for want in s.chars() {
            match self.peek() {
                Some(c) if c == want => self.pos += 1,
                _ => return Err(self.err(format!("expected `{s}`"))),
            }
        }
        Ok(())
    }

    fn eat(&mut self, s: &str) -> bool {
        let save = self.pos;
        if self.expect(s).is_ok() {
            true
        } else {
            self.pos = save;
            false
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a name"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E'))
        {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.err(format!("expected a number, found `{text}`")))
            }
        }
    }

    fn token(&mut self) -> Result<String, ParseError> {
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut s = String::new();
            loop {
                match self.peek() {
                    None => return Err(self.err("unterminated quoted token")),
                    Some('\'') => {
                        self.pos += 1;
                        return Ok(s);
                    }
                    Some('\\') => {
                        self.pos += 1;
                        match self.peek() {
                            Some('n') => s.push('\n'),
                            Some(c @ ('\'' | '\\')) => s.push(c),
                            _ => return Err(self.err("bad escape")),
                        }
                        self.pos += 1;
                    }
                    Some(c) => {
                        s.push(c);
                        self.pos += 1;
                    }
                }
            }
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '+' | '.'))
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a token"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let at = self.pos;
        let functor = self.name()?;
        self.expect("(V")?;
        let make = |cur: &Cursor, attr: &str, form: Form| {
            if attr.is_empty() {
                return Err(ParseError {
                    line: cur.line,
                    column: at + 1,
                    message: "missing attribute name".into(),
                });
            }
            Literal::new(attr, form).map_err(|e| ParseError {
                line: cur.line,
                column: at + 1,
                message: e.to_string(),
            })
        };
        let lit = if let Some(id) = functor.strip_prefix("black_") {
            Literal::black(attribute_of_binary_id(id))
        } else if let Some(id) = functor.strip_prefix("white_") {
            Literal::white(attribute_of_binary_id(id))
        } else if let Some(attr) = functor.strip_prefix("gt_") {
            self.expect(", ")?;
            let t = self.number()?;
            make(self, attr, Form::Gt(t))?
        } else if let Some(attr) = functor.strip_prefix("lt_") {
            self.expect(", ")?;
            let t = self.number()?;
            make(self, attr, Form::Lt(t))?
        } else if let Some(attr) = functor.strip_prefix("between_") {
            self.expect(", ")?;
            let lo = self.number()?;
            self.expect(", ")?;
            let hi = self.number()?;
            make(self, attr, Form::Between(lo, hi))?
        } else if let Some(attr) = functor.strip_prefix("eq_") {
            self.expect(", ")?;
            let t = self.token()?;
            make(self, attr, Form::Eq(Value::Token(t)))?
        } else {
            self.pos = at;
            return Err(self.err(format!("unknown literal `{functor}`")));
        };
        self.expect(")")?;
        Ok(lit)
    }

    fn clause(&mut self) -> Result<Rule, ParseError> {
        let head = self.name()?;
        self.expect("(V)")?;
        self.skip_ws();
        let mut rule = Rule::empty(head);
        if !self.eat(".") {
            self.expect(":-")?;
            loop {
                self.skip_ws();
                let at = self.pos;
                let lit = self.literal()?;
                rule.push(lit).map_err(|e| {
                    self.pos = at;
                    self.err(e.to_string())
                })?;
                self.skip_ws();
                if self.eat(".") {
                    break;
                }
                self.expect(",")?;
            }
        }
        self.skip_ws();
        if self.pos != self.chars.len() {
            return Err(self.err("trailing characters after clause"));
        }
        Ok(rule)
    }
}

pub fn parse_ruleset(text: &str) -> Result<RuleSet, RuleError> {
    let mut label: Option<String> = None;
    let mut head: Option<String> = None;
    let mut rules = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('%') {
            let comment = comment.trim_start();
            if let Some(l) = comment.strip_prefix("label:") {
                label.get_or_insert_with(|| l.trim().to_string());
            } else if let Some(h) = comment.strip_prefix("head:") {
                head.get_or_insert_with(|| h.trim().to_string());
            }
            continue;
        }
        let offset = line.len() - line.trim_start().len();
        let mut cur = Cursor::new(trimmed, n + 1);
        let rule = cur.clause().map_err(|mut e| {
            e.column += offset;
            e
        })?;
        match &head {
            Some(h) if h != rule.head() => {
                return Err(ParseError {
                    line: n + 1,
                    column: offset + 1,
                    message: format!("head `{}` differs from `{h}`", rule.head()),
                }
                .into())
            }
            Some(_) => {}
            None => head = Some(rule.head().to_string()),
        }
        rules.push(rule);
    }
    let head = head.unwrap_or_else(|| DEFAULT_HEAD.to_string());
    let label = label.ok_or_else(|| ParseError {
        line: 1,
        column: 1,
        message: "missing `% label:` header".into(),
    })?;
    RuleSet::new(label, head, rules)
}
