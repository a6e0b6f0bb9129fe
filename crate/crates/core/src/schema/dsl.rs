//! Line-oriented constraint language.
//!
//! ```text
//! schema fh37k
//! attrs clean_shaven chin_area side_to_side beard_area_nv
//! group beard_area exclusive exhaustive : clean_shaven chin_area side_to_side beard_area_nv
//! require mustache_connected : chin_area side_to_side   # at least one must be positive
//! exclude clean_shaven : mustache_connected
//! ```
//!
//! `#` starts a comment. `attrs` may appear on several lines; attribute order
//! is declaration order. References may precede the `attrs` line that
//! declares them.

use std::collections::{HashMap, HashSet};

use super::{AttributeSchema, GroupDecl, RuleDecl, SchemaDecl};
use crate::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    let mut column = 0;
    let mut start_col = 0;
    for (byte, ch) in code.char_indices() {
        column += 1;
        if ch.is_whitespace() || ch == ':' {
            if let Some(s) = start.take() {
                tokens.push(Token { text: &code[s..byte], column: start_col });
            }
            if ch == ':' {
                tokens.push(Token { text: ":", column });
            }
        } else if start.is_none() {
            start = Some(byte);
            start_col = column;
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &code[s..], column: start_col });
    }
    tokens
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// An attribute reference awaiting resolution, with its source position.
struct Reference {
    name: String,
    line: usize,
    column: usize,
}

struct Parser {
    decl: SchemaDecl,
    schema_seen: bool,
    declared: HashMap<String, (usize, usize)>,
    group_names: HashSet<String>,
    references: Vec<Reference>,
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

fn syntax(line: usize, column: usize, msg: impl Into<String>) -> ParseError {
    err(line, column, ParseErrorKind::Syntax(msg.into()))
}

impl Parser {
    fn identifier(&self, tok: &Token<'_>, line: usize) -> Result<String, ParseError> {
        if is_identifier(tok.text) {
            Ok(tok.text.to_string())
        } else {
            Err(syntax(line, tok.column, format!("`{}` is not a valid identifier", tok.text)))
        }
    }

    /// Parses `NAME+` after the colon, rejecting repeats.
    fn name_list(
        &mut self,
        tokens: &[Token<'_>],
        line: usize,
        eol_column: usize,
        context: &str,
    ) -> Result<Vec<String>, ParseError> {
        if tokens.is_empty() {
            return Err(syntax(line, eol_column, format!("{context} needs at least one attribute")));
        }
        let mut names = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let name = self.identifier(tok, line)?;
            if names.contains(&name) {
                return Err(syntax(line, tok.column, format!("`{name}` listed twice in {context}")));
            }
            self.references.push(Reference { name: name.clone(), line, column: tok.column });
            names.push(name);
        }
        Ok(names)
    }

    fn statement(&mut self, tokens: &[Token<'_>], line: usize, eol_column: usize) -> Result<(), ParseError> {
        let keyword = &tokens[0];
        if !self.schema_seen && keyword.text != "schema" {
            return Err(syntax(line, keyword.column, "document must start with `schema <name>`"));
        }
        match keyword.text {
            "schema" => {
                if self.schema_seen {
                    return Err(syntax(line, keyword.column, "`schema` declared twice"));
                }
                match tokens {
                    [_, name] => {
                        self.decl.name = self.identifier(name, line)?;
                        self.schema_seen = true;
                        Ok(())
                    }
                    [_] => Err(syntax(line, eol_column, "`schema` needs a name")),
                    [_, _, extra, ..] => Err(syntax(line, extra.column, "unexpected token after schema name")),
                    [] => unreachable!(),
                }
            }
            "attrs" => {
                if tokens.len() < 2 {
                    return Err(syntax(line, eol_column, "`attrs` needs at least one name"));
                }
                for tok in &tokens[1..] {
                    let name = self.identifier(tok, line)?;
                    if self.declared.contains_key(&name) {
                        return Err(err(line, tok.column, ParseErrorKind::DuplicateAttribute(name)));
                    }
                    self.declared.insert(name.clone(), (line, tok.column));
                    self.decl.attributes.push(name);
                }
                Ok(())
            }
            "group" => {
                let colon = tokens
                    .iter()
                    .position(|t| t.text == ":")
                    .ok_or_else(|| syntax(line, eol_column, "expected `:` in group statement"))?;
                if colon < 2 {
                    return Err(syntax(line, tokens.get(1).map_or(eol_column, |t| t.column), "`group` needs a name"));
                }
                let name = self.identifier(&tokens[1], line)?;
                if !self.group_names.insert(name.clone()) {
                    return Err(syntax(line, tokens[1].column, format!("group `{name}` declared twice")));
                }
                let (mut exclusive, mut exhaustive) = (false, false);
                for flag in &tokens[2..colon] {
                    let slot = match flag.text {
                        "exclusive" => &mut exclusive,
                        "exhaustive" => &mut exhaustive,
                        other => {
                            return Err(syntax(line, flag.column, format!("unknown group flag `{other}`")))
                        }
                    };
                    if *slot {
                        return Err(syntax(line, flag.column, format!("flag `{}` repeated", flag.text)));
                    }
                    *slot = true;
                }
                if !exclusive && !exhaustive {
                    return Err(syntax(line, tokens[colon].column, "group needs `exclusive` and/or `exhaustive`"));
                }
                let members = self.name_list(&tokens[colon + 1..], line, eol_column, "group")?;
                if members.len() < 2 {
                    return Err(err(
                        line,
                        tokens[1].column,
                        ParseErrorKind::GroupTooSmall { group: name, size: members.len() },
                    ));
                }
                self.decl.groups.push(GroupDecl { name, members, exclusive, exhaustive });
                Ok(())
            }
            "require" | "exclude" => {
                let kw = keyword.text;
                match tokens.get(2) {
                    Some(t) if t.text == ":" => {}
                    Some(t) => return Err(syntax(line, t.column, format!("expected `:` after {kw} subject"))),
                    None => return Err(syntax(line, eol_column, format!("expected `{kw} <attr> : <attr>...`"))),
                }
                let subject = self.identifier(&tokens[1], line)?;
                self.references.push(Reference { name: subject.clone(), line, column: tokens[1].column });
                let targets = self.name_list(&tokens[3..], line, eol_column, kw)?;
                if let Some(pos) = targets.iter().position(|t| t == &subject) {
                    return Err(err(line, tokens[3 + pos].column, ParseErrorKind::SelfReference(subject)));
                }
                let rule = RuleDecl { subject, targets };
                if kw == "require" {
                    self.decl.dependencies.push(rule);
                } else {
                    self.decl.exclusions.push(rule);
                }
                Ok(())
            }
            other => Err(syntax(line, keyword.column, format!("unknown statement `{other}`"))),
        }
    }
}

/// Parses a constraint document into a validated schema.
pub fn parse_schema(source: &str) -> Result<AttributeSchema, ParseError> {
    let mut parser = Parser {
        decl: SchemaDecl::default(),
        schema_seen: false,
        declared: HashMap::new(),
        group_names: HashSet::new(),
        references: Vec::new(),
    };
    let mut last_line = 1;
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let eol_column = raw.split('#').next().unwrap_or("").chars().count() + 1;
        parser.statement(&tokens, line, eol_column)?;
    }
    if !parser.schema_seen {
        return Err(syntax(1, 1, "missing `schema <name>` declaration"));
    }
    if parser.decl.attributes.is_empty() {
        return Err(syntax(last_line, 1, "no attributes declared"));
    }
    if let Some(r) = parser.references.iter().find(|r| !parser.declared.contains_key(&r.name)) {
        return Err(err(r.line, r.column, ParseErrorKind::UndeclaredAttribute(r.name.clone())));
    }
    // Everything compile() checks has been rejected above with a position.
    Ok(parser
        .decl
        .compile()
        .unwrap_or_else(|report| panic!("parser accepted an invalid schema: {report}")))
}

/// Canonical document for a schema; `parse_schema` inverts it exactly.
pub fn serialize_schema(schema: &AttributeSchema) -> String {
    let decl = schema.decl();
    let mut out = format!("schema {}\nattrs {}\n", decl.name, decl.attributes.join(" "));
    for g in &decl.groups {
        out.push_str("group ");
        out.push_str(&g.name);
        if g.exclusive {
            out.push_str(" exclusive");
        }
        if g.exhaustive {
            out.push_str(" exhaustive");
        }
        out.push_str(" : ");
        out.push_str(&g.members.join(" "));
        out.push('\n');
    }
    for r in &decl.dependencies {
        out.push_str(&format!("require {} : {}\n", r.subject, r.targets.join(" ")));
    }
    for r in &decl.exclusions {
        out.push_str(&format!("exclude {} : {}\n", r.subject, r.targets.join(" ")));
    }
    out
}
