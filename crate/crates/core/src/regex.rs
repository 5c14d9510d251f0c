//! Word-level regular expressions.
//!
//! Atoms are whole words, not characters. The concrete syntax is
//! whitespace-separated word literals plus the metacharacters `( ) | * + ?`
//! and `.`, which matches exactly one word of any kind. Precedence from
//! tightest to loosest: postfix operators, concatenation, alternation.
//!
//! ```text
//! show me (.)* flights to ( boston | denver )
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WordRegexAst {
    Literal(String),
    AnyWord,
    Concat(Vec<WordRegexAst>),
    Alternation(Vec<WordRegexAst>),
    Star(Box<WordRegexAst>),
    Plus(Box<WordRegexAst>),
    Optional(Box<WordRegexAst>),
}

impl WordRegexAst {
    pub fn literal(word: &str) -> Self {
        WordRegexAst::Literal(word.to_lowercase())
    }

    pub fn star(self) -> Self {
        WordRegexAst::Star(Box::new(self))
    }

    pub fn plus(self) -> Self {
        WordRegexAst::Plus(Box::new(self))
    }

    pub fn optional(self) -> Self {
        WordRegexAst::Optional(Box::new(self))
    }

    /// Distinct literal words, in sorted order.
    pub fn literals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_literals(&mut out);
        out
    }

    fn collect_literals(&self, out: &mut BTreeSet<String>) {
        match self {
            WordRegexAst::Literal(w) => {
                out.insert(w.clone());
            }
            WordRegexAst::AnyWord => {}
            WordRegexAst::Concat(cs) | WordRegexAst::Alternation(cs) => {
                cs.iter().for_each(|c| c.collect_literals(out))
            }
            WordRegexAst::Star(c) | WordRegexAst::Plus(c) | WordRegexAst::Optional(c) => {
                c.collect_literals(out)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            WordRegexAst::Literal(_) | WordRegexAst::AnyWord => 1,
            WordRegexAst::Concat(cs) | WordRegexAst::Alternation(cs) => {
                1 + cs.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            WordRegexAst::Star(c) | WordRegexAst::Plus(c) | WordRegexAst::Optional(c) => {
                1 + c.depth()
            }
        }
    }

    /// Renders the expression in concrete syntax. Parsing the result yields
    /// an AST equal to `self`.
    pub fn unparse(&self) -> String {
        let mut out = String::new();
        self.write_to(&mut out);
        out
    }

    fn write_to(&self, out: &mut String) {
        fn push(out: &mut String, s: &str) {
            if !out.is_empty() && !out.ends_with(' ') && !out.ends_with('(') {
                out.push(' ');
            }
            out.push_str(s);
        }
        fn group(child: &WordRegexAst, out: &mut String) {
            push(out, "(");
            child.write_to(out);
            out.push_str(" )");
        }
        match self {
            WordRegexAst::Literal(w) => push(out, w),
            WordRegexAst::AnyWord => push(out, "."),
            WordRegexAst::Concat(cs) => {
                for c in cs {
                    match c {
                        WordRegexAst::Concat(_) | WordRegexAst::Alternation(_) => group(c, out),
                        _ => c.write_to(out),
                    }
                }
            }
            WordRegexAst::Alternation(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        push(out, "|");
                    }
                    match c {
                        WordRegexAst::Alternation(_) => group(c, out),
                        _ => c.write_to(out),
                    }
                }
            }
            WordRegexAst::Star(c) | WordRegexAst::Plus(c) | WordRegexAst::Optional(c) => {
                match **c {
                    WordRegexAst::Concat(_) | WordRegexAst::Alternation(_) => group(c, out),
                    _ => c.write_to(out),
                }
                out.push_str(match self {
                    WordRegexAst::Star(_) => " *",
                    WordRegexAst::Plus(_) => " +",
                    _ => " ?",
                });
            }
        }
    }
}

impl fmt::Display for WordRegexAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.unparse())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Any,
    Open,
    Close,
    Bar,
    Star,
    Plus,
    Question,
}

const META: &[char] = &['(', ')', '|', '*', '+', '?', '.'];

fn tokenize(source: &str) -> Vec<(usize, Tok)> {
    let mut toks = Vec::new();
    let mut chars = source.char_indices().peekable();
    while let Some(&(at, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            '|' => Tok::Bar,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '?' => Tok::Question,
            '.' => Tok::Any,
            _ => {
                let mut end = at;
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_whitespace() || META.contains(&c) {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                toks.push((at, Tok::Word(source[at..end].to_lowercase())));
                continue;
            }
        };
        chars.next();
        toks.push((at, tok));
    }
    toks
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        line: None,
        message: message.into(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn alternation(&mut self) -> Result<WordRegexAst> {
        let mut branches = vec![self.concat()?];
        while let Some(Tok::Bar) = self.peek() {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            WordRegexAst::Alternation(branches)
        })
    }

    fn concat(&mut self) -> Result<WordRegexAst> {
        let mut items = Vec::new();
        while let Some(tok) = self.peek() {
            if matches!(tok, Tok::Bar | Tok::Close) {
                break;
            }
            items.push(self.postfix()?);
        }
        match items.len() {
            0 => Err(match self.peek() {
                _ if self.pos > 0 && self.toks[self.pos - 1].1 == Tok::Bar => {
                    syntax(self.toks[self.pos - 1].0, "dangling `|`")
                }
                Some(Tok::Bar) => syntax(self.offset(), "empty alternative before `|`"),
                Some(Tok::Close) => syntax(self.offset(), "unbalanced `)`"),
                _ => syntax(self.offset(), "empty expression"),
            }),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(WordRegexAst::Concat(items)),
        }
    }

    fn postfix(&mut self) -> Result<WordRegexAst> {
        let mut node = self.atom()?;
        loop {
            node = match self.peek() {
                Some(Tok::Star) => node.star(),
                Some(Tok::Plus) => node.plus(),
                Some(Tok::Question) => node.optional(),
                _ => return Ok(node),
            };
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<WordRegexAst> {
        let (at, tok) = self.toks[self.pos].clone();
        self.pos += 1;
        match tok {
            Tok::Word(w) => Ok(WordRegexAst::Literal(w)),
            Tok::Any => Ok(WordRegexAst::AnyWord),
            Tok::Open => {
                if let Some(Tok::Close) = self.peek() {
                    return Err(syntax(at, "empty group"));
                }
                let inner = self.alternation()?;
                match self.peek() {
                    Some(Tok::Close) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(syntax(at, "unbalanced `(`")),
                }
            }
            Tok::Star | Tok::Plus | Tok::Question => {
                Err(syntax(at, "postfix operator with nothing to repeat"))
            }
            Tok::Bar | Tok::Close => unreachable!("handled by concat"),
        }
    }
}

/// Parses a word-level regular expression. Literals are lowercased.
pub fn parse_regex(source: &str) -> Result<WordRegexAst> {
    let toks = tokenize(source);
    if toks.is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: source.len(),
    };
    let ast = p.alternation()?;
    if p.pos < toks.len() {
        return Err(syntax(p.offset(), "unbalanced `)`"));
    }
    Ok(ast)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// 1-based position in the rules file.
    pub id: usize,
    pub label: String,
    pub source: String,
    pub ast: WordRegexAst,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses rules text (`label<TAB>regex` per line). Blank and `#` lines
    /// are skipped. When `known_labels` is given, every label must be in it.
    pub fn parse(text: &str, known_labels: Option<&HashSet<String>>) -> Result<Self> {
        let mut set = RuleSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (label, source) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
                line: line_no,
                message: "expected `label<TAB>regex`".into(),
            })?;
            let label = label.trim();
            if let Some(known) = known_labels {
                if !known.contains(label) {
                    return Err(Error::UnknownLabel(label.to_string()));
                }
            }
            let ast = parse_regex(source).map_err(|e| e.at_line(line_no))?;
            set.push(label, source.trim(), ast);
        }
        Ok(set)
    }

    pub fn push(&mut self, label: &str, source: &str, ast: WordRegexAst) {
        let id = self.rules.len() + 1;
        self.rules.push(Rule {
            id,
            label: label.to_string(),
            source: source.to_string(),
            ast,
        });
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rule> {
        self.rules.iter()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Renders the set back into rules-file text.
    pub fn to_text(&self) -> String {
        self.rules
            .iter()
            .map(|r| format!("{}\t{}\n", r.label, r.source))
            .collect()
    }
}

impl<'a> IntoIterator for &'a RuleSet {
    type Item = &'a Rule;
    type IntoIter = std::slice::Iter<'a, Rule>;

    fn into_iter(self) -> Self::IntoIter {
        self.rules.iter()
    }
}

pub fn load_rules(path: impl AsRef<Path>, known_labels: &HashSet<String>) -> Result<RuleSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RuleSet::parse(&text, Some(known_labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use WordRegexAst::*;

    fn lit(w: &str) -> WordRegexAst {
        Literal(w.into())
    }

    fn offset_of(src: &str) -> usize {
        match parse_regex(src) {
            Err(Error::Syntax { offset, .. }) => offset,
            other => panic!("expected syntax error for {src:?}, got {other:?}"),
        }
    }

    #[test]
    fn parses_wildcard_gap() {
        assert_eq!(
            parse_regex("show me (.)* flights").unwrap(),
            Concat(vec![lit("show"), lit("me"), AnyWord.star(), lit("flights")])
        );
    }

    #[test]
    fn parses_alternation() {
        assert_eq!(
            parse_regex("a | b").unwrap(),
            Alternation(vec![lit("a"), lit("b")])
        );
    }

    #[test]
    fn concat_binds_tighter_than_alternation() {
        assert_eq!(
            parse_regex("a b | c").unwrap(),
            Alternation(vec![Concat(vec![lit("a"), lit("b")]), lit("c")])
        );
    }

    #[test]
    fn postfix_binds_tightest() {
        assert_eq!(
            parse_regex("a b+ c?").unwrap(),
            Concat(vec![lit("a"), lit("b").plus(), lit("c").optional()])
        );
        assert_eq!(parse_regex("a**").unwrap(), lit("a").star().star());
    }

    #[test]
    fn metacharacters_split_words() {
        assert_eq!(
            parse_regex("(from|to).").unwrap(),
            Concat(vec![Alternation(vec![lit("from"), lit("to")]), AnyWord])
        );
    }

    #[test]
    fn literals_are_lowercased() {
        assert_eq!(parse_regex("Boston").unwrap(), lit("boston"));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(offset_of("( a"), 0);
        assert_eq!(offset_of("a )"), 2);
        assert_eq!(offset_of("a ( )"), 2);
        assert_eq!(offset_of("* a"), 0);
        assert_eq!(offset_of("a |"), 2);
        assert_eq!(offset_of("| a"), 0);
        assert_eq!(offset_of("a || b"), 2);
        assert_eq!(offset_of("   "), 0);
        assert_eq!(offset_of("(a | )"), 3);
        assert_eq!(offset_of(") a"), 0);
    }

    #[test]
    fn unparse_round_trips_nested_groups() {
        let ast = Concat(vec![
            lit("a"),
            Concat(vec![lit("b"), lit("c")]),
            Alternation(vec![lit("d"), Alternation(vec![lit("e"), AnyWord])]).star(),
        ]);
        assert_eq!(parse_regex(&ast.unparse()).unwrap(), ast);
    }

    #[test]
    fn rules_text_skips_comments_and_blanks() {
        let text = "# intent rules\n\nflight\t(.)* flights\n  # indented comment\nairline\tairline .\n";
        let set = RuleSet::parse(text, None).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.rules()[0].id, 1);
        assert_eq!(set.rules()[1].id, 2);
        assert_eq!(set.rules()[1].label, "airline");
    }

    #[test]
    fn empty_rules_text_is_an_empty_set() {
        assert!(RuleSet::parse("", None).unwrap().is_empty());
    }

    #[test]
    fn unknown_label_is_named() {
        let known: HashSet<String> = ["flight", "airline"].iter().map(|s| s.to_string()).collect();
        match RuleSet::parse("fare\tcheap .", Some(&known)) {
            Err(Error::UnknownLabel(l)) => assert_eq!(l, "fare"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        match RuleSet::parse("a\tx\n\nb\t( y\n", None) {
            Err(Error::Syntax { line, offset, .. }) => {
                assert_eq!(line, Some(3));
                assert_eq!(offset, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_tab_is_malformed() {
        assert!(matches!(
            RuleSet::parse("flight flights", None),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }
}
