//! Recursive-descent analyzer over the tokenized query, accumulating the
//! seven complexity counts.
//!
//! Counted as atomic clause nodes: each SELECT/ASK head (including
//! subqueries), each subject-relation-object clause, GROUP BY, HAVING,
//! FILTER, ORDER BY, MINUS, each UNION (the join node), and BIND as a
//! filter-like node. Grouping braces, OPTIONAL, VALUES, and LIMIT/OFFSET add
//! no nodes. Everything inside a SERVICE block is endpoint plumbing and is
//! excluded from all counts.

use std::collections::{BTreeSet, HashMap};

use super::lexer::{tokenize, Token};
use super::{QueryStats, StatsError};
use crate::eval::CanonicalNumber;

pub(crate) fn analyze(query: &str) -> Result<QueryStats, StatsError> {
    let tokens = tokenize(query)?;
    let mut analyzer = Analyzer::new(&tokens);
    analyzer.parse_query()?;
    Ok(analyzer.finish())
}

/// Built-in prefixes the query service provides without declarations.
const BUILTIN_PREFIXES: &[(&str, &str)] = &[
    ("wd", "http://www.wikidata.org/entity/"),
    ("wds", "http://www.wikidata.org/entity/statement/"),
    ("wdv", "http://www.wikidata.org/value/"),
    ("wdt", "http://www.wikidata.org/prop/direct/"),
    ("wdtn", "http://www.wikidata.org/prop/direct-normalized/"),
    ("p", "http://www.wikidata.org/prop/"),
    ("ps", "http://www.wikidata.org/prop/statement/"),
    ("psv", "http://www.wikidata.org/prop/statement/value/"),
    ("psn", "http://www.wikidata.org/prop/statement/value-normalized/"),
    ("pq", "http://www.wikidata.org/prop/qualifier/"),
    ("pqv", "http://www.wikidata.org/prop/qualifier/value/"),
    ("pqn", "http://www.wikidata.org/prop/qualifier/value-normalized/"),
    ("pr", "http://www.wikidata.org/prop/reference/"),
    ("prv", "http://www.wikidata.org/prop/reference/value/"),
    ("prn", "http://www.wikidata.org/prop/reference/value-normalized/"),
    ("wdno", "http://www.wikidata.org/prop/novalue/"),
    ("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
    ("rdfs", "http://www.w3.org/2000/01/rdf-schema#"),
    ("xsd", "http://www.w3.org/2001/XMLSchema#"),
    ("schema", "http://schema.org/"),
    ("skos", "http://www.w3.org/2004/02/skos/core#"),
    ("owl", "http://www.w3.org/2002/07/owl#"),
    ("wikibase", "http://wikiba.se/ontology#"),
    ("bd", "http://www.bigdata.com/rdf#"),
    ("hint", "http://www.bigdata.com/queryHints#"),
    ("geo", "http://www.opengis.net/ont/geosparql#"),
    ("dct", "http://purl.org/dc/terms/"),
];

struct Analyzer<'t> {
    tokens: &'t [Token],
    pos: usize,
    prefixes: HashMap<String, String>,
    /// > 0 inside SERVICE blocks: parse but do not count.
    suppress: usize,

    projection_clauses: usize,
    triples: usize,
    filters: usize,
    binds: usize,
    group_by: usize,
    having: usize,
    order_by: usize,
    minus: usize,
    joins: usize,

    subjects: BTreeSet<String>,
    objects: BTreeSet<String>,
    predicates: BTreeSet<String>,
    literals: BTreeSet<String>,
    all_vars: BTreeSet<String>,

    top_projections: Option<usize>,
    top_select_star: bool,
    blank_counter: usize,
}

fn unsupported(message: impl Into<String>) -> StatsError {
    StatsError::UnsupportedSyntax { message: message.into() }
}

impl<'t> Analyzer<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Self {
            tokens,
            pos: 0,
            prefixes: BUILTIN_PREFIXES
                .iter()
                .map(|(p, iri)| (p.to_string(), iri.to_string()))
                .collect(),
            suppress: 0,
            projection_clauses: 0,
            triples: 0,
            filters: 0,
            binds: 0,
            group_by: 0,
            having: 0,
            order_by: 0,
            minus: 0,
            joins: 0,
            subjects: BTreeSet::new(),
            objects: BTreeSet::new(),
            predicates: BTreeSet::new(),
            literals: BTreeSet::new(),
            all_vars: BTreeSet::new(),
            top_projections: None,
            top_select_star: false,
            blank_counter: 0,
        }
    }

    fn finish(self) -> QueryStats {
        let projections = match (self.top_projections, self.top_select_star) {
            (Some(n), _) => n,
            (None, true) => self.all_vars.len().max(1),
            (None, false) => 0, // ASK
        };
        QueryStats {
            clauses: self.projection_clauses
                + self.triples
                + self.filters
                + self.binds
                + self.group_by
                + self.having
                + self.order_by
                + self.minus
                + self.joins,
            projections,
            relations: self.triples,
            subjects: self.subjects.len(),
            predicates: self.predicates.len(),
            objects: self.objects.len(),
            literals: self.literals.len(),
        }
    }

    // --- token plumbing ----------------------------------------------------

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token::Punct(p)) if *p == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char, context: &str) -> Result<(), StatsError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(unsupported(format!("expected {c:?} in {context}, found {:?}", self.peek())))
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(t) if t.is_word(word)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn counting(&self) -> bool {
        self.suppress == 0
    }

    // --- node canonicalization ----------------------------------------------

    fn expand(&self, prefix: &str, local: &str) -> String {
        match self.prefixes.get(prefix) {
            Some(base) => format!("{base}{local}"),
            None => format!("{prefix}:{local}"),
        }
    }

    /// Canonical node id: Wikidata entities/properties collapse to their
    /// bare identifier whatever namespace carried them.
    fn canon(&self, prefix: &str, local: &str) -> String {
        let iri = self.expand(prefix, local);
        canon_iri(&iri)
    }

    fn fresh_blank(&mut self) -> String {
        self.blank_counter += 1;
        format!("_:b{}", self.blank_counter)
    }

    fn note_var(&mut self, var: &str) {
        if self.counting() {
            self.all_vars.insert(var.to_string());
        }
    }

    fn note_literal_str(&mut self, s: &str) {
        if self.counting() {
            self.literals.insert(format!("s:{s}"));
        }
    }

    fn note_literal_num(&mut self, n: &str) {
        if self.counting() {
            let canon = CanonicalNumber::parse(n)
                .map(|c| c.as_str().to_string())
                .unwrap_or_else(|| n.to_string());
            self.literals.insert(format!("n:{canon}"));
        }
    }

    // --- grammar ------------------------------------------------------------

    fn parse_query(&mut self) -> Result<(), StatsError> {
        self.parse_prologue()?;
        match self.peek() {
            Some(t) if t.is_word("SELECT") => self.parse_select(true)?,
            Some(t) if t.is_word("ASK") => self.parse_ask()?,
            Some(t) if t.is_word("CONSTRUCT") || t.is_word("DESCRIBE") => {
                return Err(unsupported("only SELECT and ASK queries are analyzed"))
            }
            other => return Err(unsupported(format!("query must start with SELECT or ASK, found {other:?}"))),
        }
        // trailing VALUES clause
        if self.eat_word("VALUES") {
            self.parse_values_body()?;
        }
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(unsupported(format!("trailing tokens after query: {t:?}"))),
        }
    }

    fn parse_prologue(&mut self) -> Result<(), StatsError> {
        loop {
            if self.eat_word("PREFIX") {
                let Some(Token::Prefixed { prefix, local }) = self.next() else {
                    return Err(unsupported("PREFIX expects a prefix name"));
                };
                if !local.is_empty() {
                    return Err(unsupported("malformed PREFIX declaration"));
                }
                let Some(Token::Iri(iri)) = self.next() else {
                    return Err(unsupported("PREFIX expects an IRI"));
                };
                self.prefixes.insert(prefix.clone(), iri.clone());
            } else if self.eat_word("BASE") {
                let Some(Token::Iri(_)) = self.next() else {
                    return Err(unsupported("BASE expects an IRI"));
                };
            } else {
                return Ok(());
            }
        }
    }

    fn parse_select(&mut self, top: bool) -> Result<(), StatsError> {
        if !self.eat_word("SELECT") {
            return Err(unsupported("expected SELECT"));
        }
        if self.counting() {
            self.projection_clauses += 1;
        }
        let _ = self.eat_word("DISTINCT") || self.eat_word("REDUCED");

        let mut fields = 0usize;
        let mut star = false;
        loop {
            match self.peek() {
                Some(Token::Var(v)) => {
                    let v = v.clone();
                    self.note_var(&v);
                    self.pos += 1;
                    fields += 1;
                }
                Some(Token::Punct('*')) => {
                    self.pos += 1;
                    star = true;
                }
                Some(Token::Punct('(')) => {
                    // (expression AS ?var)
                    self.pos += 1;
                    self.walk_expression_until_close()?;
                    fields += 1;
                }
                _ => break,
            }
        }
        if top {
            if star {
                self.top_select_star = true;
            } else {
                self.top_projections = Some(fields);
            }
        }

        let _ = self.eat_word("WHERE");
        self.parse_group()?;
        self.parse_solution_modifiers()?;
        Ok(())
    }

    fn parse_ask(&mut self) -> Result<(), StatsError> {
        if !self.eat_word("ASK") {
            return Err(unsupported("expected ASK"));
        }
        if self.counting() {
            self.projection_clauses += 1;
        }
        let _ = self.eat_word("WHERE");
        self.parse_group()?;
        self.parse_solution_modifiers()?;
        Ok(())
    }

    fn parse_solution_modifiers(&mut self) -> Result<(), StatsError> {
        loop {
            if self.eat_word("GROUP") {
                if !self.eat_word("BY") {
                    return Err(unsupported("GROUP without BY"));
                }
                if self.counting() {
                    self.group_by += 1;
                }
                self.walk_modifier_arguments()?;
            } else if self.eat_word("HAVING") {
                if self.counting() {
                    self.having += 1;
                }
                self.walk_modifier_arguments()?;
            } else if self.eat_word("ORDER") {
                if !self.eat_word("BY") {
                    return Err(unsupported("ORDER without BY"));
                }
                if self.counting() {
                    self.order_by += 1;
                }
                self.walk_modifier_arguments()?;
            } else if self.eat_word("LIMIT") || self.eat_word("OFFSET") {
                // structural integers, not data literals
                if !matches!(self.next(), Some(Token::Num(_))) {
                    return Err(unsupported("LIMIT/OFFSET expects a number"));
                }
            } else {
                return Ok(());
            }
        }
    }

    /// Consumes modifier arguments (vars, expressions, ASC/DESC calls) up to
    /// the next modifier keyword or the end of the enclosing scope,
    /// collecting literals on the way.
    fn walk_modifier_arguments(&mut self) -> Result<(), StatsError> {
        loop {
            match self.peek() {
                None | Some(Token::Punct('}')) => return Ok(()),
                Some(t)
                    if t.is_word("GROUP")
                        || t.is_word("HAVING")
                        || t.is_word("ORDER")
                        || t.is_word("LIMIT")
                        || t.is_word("OFFSET")
                        || t.is_word("VALUES") =>
                {
                    return Ok(())
                }
                Some(Token::Punct('(')) => {
                    self.pos += 1;
                    self.walk_expression_until_close()?;
                }
                Some(Token::Var(v)) => {
                    let v = v.clone();
                    self.note_var(&v);
                    self.pos += 1;
                }
                Some(Token::Str(s)) => {
                    let s = s.clone();
                    self.note_literal_str(&s);
                    self.pos += 1;
                }
                Some(Token::Num(n)) => {
                    let n = n.clone();
                    self.note_literal_num(&n);
                    self.pos += 1;
                }
                _ => {
                    self.pos += 1;
                }
            }
        }
    }

    /// Walks a parenthesized expression whose opening `(` was consumed,
    /// collecting string/number literals. EXISTS groups nested in the
    /// expression are parsed (and counted) as graph patterns.
    fn walk_expression_until_close(&mut self) -> Result<(), StatsError> {
        let mut depth = 1usize;
        loop {
            let Some(token) = self.peek() else {
                return Err(unsupported("unterminated expression"));
            };
            match token {
                Token::Punct('(') => {
                    depth += 1;
                    self.pos += 1;
                }
                Token::Punct(')') => {
                    depth -= 1;
                    self.pos += 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                Token::Punct('{') => {
                    // EXISTS { ... } inside the expression
                    self.parse_group()?;
                }
                Token::Str(s) => {
                    let s = s.clone();
                    self.note_literal_str(&s);
                    self.pos += 1;
                }
                Token::Num(n) => {
                    let n = n.clone();
                    self.note_literal_num(&n);
                    self.pos += 1;
                }
                Token::Var(v) => {
                    let v = v.clone();
                    self.note_var(&v);
                    self.pos += 1;
                }
                _ => {
                    self.pos += 1;
                }
            }
        }
    }

    fn parse_group(&mut self) -> Result<(), StatsError> {
        self.expect_punct('{', "group pattern")?;
        if matches!(self.peek(), Some(t) if t.is_word("SELECT")) {
            // subquery: its SELECT head is counted, outer projections are not touched
            self.parse_select(false)?;
            self.expect_punct('}', "subquery")?;
            return Ok(());
        }

        loop {
            match self.peek() {
                None => return Err(unsupported("unterminated group pattern")),
                Some(Token::Punct('}')) => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(Token::Punct('.')) => {
                    self.pos += 1;
                }
                Some(Token::Punct('{')) => {
                    self.parse_group()?;
                    while self.eat_word("UNION") {
                        if self.counting() {
                            self.joins += 1;
                        }
                        self.parse_group()?;
                    }
                }
                Some(t) if t.is_word("FILTER") => {
                    self.pos += 1;
                    if self.counting() {
                        self.filters += 1;
                    }
                    self.parse_constraint()?;
                }
                Some(t) if t.is_word("OPTIONAL") => {
                    self.pos += 1;
                    self.parse_group()?;
                }
                Some(t) if t.is_word("MINUS") => {
                    self.pos += 1;
                    if self.counting() {
                        self.minus += 1;
                    }
                    self.parse_group()?;
                }
                Some(t) if t.is_word("BIND") => {
                    self.pos += 1;
                    if self.counting() {
                        self.binds += 1;
                    }
                    self.expect_punct('(', "BIND")?;
                    self.walk_expression_until_close()?;
                }
                Some(t) if t.is_word("VALUES") => {
                    self.pos += 1;
                    self.parse_values_body()?;
                }
                Some(t) if t.is_word("SERVICE") => {
                    self.pos += 1;
                    let _ = self.eat_word("SILENT");
                    match self.next() {
                        Some(Token::Prefixed { .. }) | Some(Token::Iri(_)) | Some(Token::Var(_)) => {}
                        other => {
                            return Err(unsupported(format!("SERVICE expects an endpoint, found {other:?}")))
                        }
                    }
                    self.suppress += 1;
                    let result = self.parse_group();
                    self.suppress -= 1;
                    result?;
                }
                Some(t) if t.is_word("GRAPH") => {
                    return Err(unsupported("GRAPH patterns are not analyzed"));
                }
                _ => self.parse_triples_same_subject()?,
            }
        }
    }

    fn parse_constraint(&mut self) -> Result<(), StatsError> {
        if self.eat_word("NOT") {
            if !self.eat_word("EXISTS") {
                return Err(unsupported("FILTER NOT without EXISTS"));
            }
            return self.parse_group();
        }
        if self.eat_word("EXISTS") {
            return self.parse_group();
        }
        // bracketted expression or a (possibly prefixed) function call
        match self.peek() {
            Some(Token::Punct('(')) => {
                self.pos += 1;
                self.walk_expression_until_close()
            }
            Some(Token::Word(_)) | Some(Token::Prefixed { .. }) | Some(Token::Iri(_)) => {
                self.pos += 1;
                self.expect_punct('(', "function call")?;
                self.walk_expression_until_close()
            }
            other => Err(unsupported(format!("unsupported FILTER constraint at {other:?}"))),
        }
    }

    fn parse_values_body(&mut self) -> Result<(), StatsError> {
        // VALUES ?x { ... } or VALUES (?x ?y) { (...) (...) }
        let mut arity = 0usize;
        match self.peek() {
            Some(Token::Var(v)) => {
                let v = v.clone();
                self.note_var(&v);
                self.pos += 1;
                arity = 1;
            }
            Some(Token::Punct('(')) => {
                self.pos += 1;
                while let Some(Token::Var(v)) = self.peek() {
                    let v = v.clone();
                    self.note_var(&v);
                    self.pos += 1;
                    arity += 1;
                }
                self.expect_punct(')', "VALUES variable list")?;
            }
            other => return Err(unsupported(format!("VALUES expects variables, found {other:?}"))),
        }
        self.expect_punct('{', "VALUES data block")?;
        loop {
            match self.peek() {
                None => return Err(unsupported("unterminated VALUES block")),
                Some(Token::Punct('}')) => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(Token::Punct('(')) if arity != 1 => {
                    self.pos += 1;
                    loop {
                        if self.eat_punct(')') {
                            break;
                        }
                        self.parse_values_term()?;
                    }
                }
                _ => self.parse_values_term()?,
            }
        }
    }

    /// A term inside a VALUES data block: entity-like terms count as
    /// objects, strings and numbers as literals.
    fn parse_values_term(&mut self) -> Result<(), StatsError> {
        match self.next() {
            Some(Token::Prefixed { prefix, local }) => {
                let node = self.canon(prefix, local);
                if self.counting() {
                    self.objects.insert(node);
                }
                self.skip_literal_suffix();
                Ok(())
            }
            Some(Token::Iri(iri)) => {
                let node = canon_iri(iri);
                if self.counting() {
                    self.objects.insert(node);
                }
                Ok(())
            }
            Some(Token::Str(s)) => {
                let s = s.clone();
                self.note_literal_str(&s);
                self.skip_literal_suffix();
                Ok(())
            }
            Some(Token::Num(n)) => {
                let n = n.clone();
                self.note_literal_num(&n);
                Ok(())
            }
            Some(t) if t.is_word("UNDEF") || t.is_word("true") || t.is_word("false") => Ok(()),
            other => Err(unsupported(format!("unsupported VALUES term {other:?}"))),
        }
    }

    /// Consumes an optional language tag or `^^datatype` after a literal.
    fn skip_literal_suffix(&mut self) {
        if matches!(self.peek(), Some(Token::LangTag(_))) {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(Token::DatatypeMarker)) {
            self.pos += 1;
            if matches!(self.peek(), Some(Token::Prefixed { .. }) | Some(Token::Iri(_))) {
                self.pos += 1;
            }
        }
    }

    // --- triples -------------------------------------------------------------

    fn parse_triples_same_subject(&mut self) -> Result<(), StatsError> {
        let Some(subject) = self.parse_term_node("subject")? else {
            return Err(unsupported("literal in subject position"));
        };
        self.parse_property_list(&subject)?;
        Ok(())
    }

    fn parse_property_list(&mut self, subject: &str) -> Result<(), StatsError> {
        loop {
            self.parse_verb_and_objects(subject)?;
            if self.eat_punct(';') {
                // trailing semicolon before `.` or `}` or `]`
                if self.verb_ahead() {
                    continue;
                }
            }
            return Ok(());
        }
    }

    fn verb_ahead(&self) -> bool {
        matches!(
            self.peek(),
            Some(Token::Var(_))
                | Some(Token::Prefixed { .. })
                | Some(Token::Iri(_))
                | Some(Token::Punct('('))
                | Some(Token::Punct('^'))
                | Some(Token::Punct('!'))
        ) || matches!(self.peek(), Some(t) if t.is_word("a"))
    }

    fn parse_verb_and_objects(&mut self, subject: &str) -> Result<(), StatsError> {
        match self.peek() {
            Some(Token::Var(v)) => {
                let v = v.clone();
                self.note_var(&v);
                self.pos += 1;
            }
            _ => self.parse_path()?,
        }
        loop {
            let object = self.parse_term_node("object")?;
            if self.counting() {
                self.triples += 1;
                self.subjects.insert(subject.to_string());
                if let Some(node) = object {
                    self.objects.insert(node);
                }
            }
            if !self.eat_punct(',') {
                return Ok(());
            }
        }
    }

    /// Property path; every PID mentioned anywhere in the path counts toward
    /// unique predicates, the whole path is one relation.
    fn parse_path(&mut self) -> Result<(), StatsError> {
        self.parse_path_sequence()?;
        while self.eat_punct('|') {
            self.parse_path_sequence()?;
        }
        Ok(())
    }

    fn parse_path_sequence(&mut self) -> Result<(), StatsError> {
        self.parse_path_elt()?;
        while self.eat_punct('/') {
            self.parse_path_elt()?;
        }
        Ok(())
    }

    fn parse_path_elt(&mut self) -> Result<(), StatsError> {
        let _ = self.eat_punct('^');
        self.parse_path_primary()?;
        // zero or more modifiers (e.g. `*` after a parenthesized group)
        while self.eat_punct('*') || self.eat_punct('?') || self.eat_punct('+') {}
        Ok(())
    }

    fn parse_path_primary(&mut self) -> Result<(), StatsError> {
        match self.peek() {
            Some(Token::Prefixed { prefix, local }) => {
                let node = self.canon(prefix, local);
                self.note_predicate(&node);
                self.pos += 1;
                Ok(())
            }
            Some(Token::Iri(iri)) => {
                let node = canon_iri(iri);
                self.note_predicate(&node);
                self.pos += 1;
                Ok(())
            }
            Some(t) if t.is_word("a") => {
                self.pos += 1;
                Ok(())
            }
            Some(Token::Punct('!')) => {
                self.pos += 1;
                self.parse_path_primary()
            }
            Some(Token::Punct('(')) => {
                self.pos += 1;
                self.parse_path()?;
                self.expect_punct(')', "path group")
            }
            Some(Token::Punct('^')) => {
                self.pos += 1;
                self.parse_path_primary()
            }
            other => Err(unsupported(format!("unsupported path element {other:?}"))),
        }
    }

    fn note_predicate(&mut self, node: &str) {
        if self.counting() && is_pid(node) {
            self.predicates.insert(node.to_string());
        }
    }

    /// Parses a subject/object term. Returns the canonical node id, or
    /// `None` for literal terms (they are counted as literals instead).
    fn parse_term_node(&mut self, position: &str) -> Result<Option<String>, StatsError> {
        match self.peek() {
            Some(Token::Var(v)) => {
                let v = v.clone();
                self.note_var(&v);
                self.pos += 1;
                Ok(Some(v))
            }
            Some(Token::Prefixed { prefix, local }) => {
                let node = self.canon(prefix, local);
                self.pos += 1;
                Ok(Some(node))
            }
            Some(Token::Iri(iri)) => {
                let node = canon_iri(iri);
                self.pos += 1;
                Ok(Some(node))
            }
            Some(Token::Str(s)) => {
                let s = s.clone();
                self.note_literal_str(&s);
                self.pos += 1;
                self.skip_literal_suffix();
                Ok(None)
            }
            Some(Token::Num(n)) => {
                let n = n.clone();
                self.note_literal_num(&n);
                self.pos += 1;
                Ok(None)
            }
            Some(Token::Punct(sign @ ('-' | '+'))) => {
                // signed numeric literal
                let negative = *sign == '-';
                self.pos += 1;
                match self.next() {
                    Some(Token::Num(n)) => {
                        let n = if negative { format!("-{n}") } else { n.clone() };
                        self.note_literal_num(&n);
                        Ok(None)
                    }
                    other => Err(unsupported(format!("expected number after sign, found {other:?}"))),
                }
            }
            Some(t) if t.is_word("true") || t.is_word("false") => {
                self.pos += 1;
                Ok(None)
            }
            Some(Token::Punct('[')) => {
                self.pos += 1;
                let node = self.fresh_blank();
                if !self.eat_punct(']') {
                    self.parse_property_list(&node)?;
                    self.expect_punct(']', "blank node")?;
                }
                Ok(Some(node))
            }
            other => Err(unsupported(format!("unsupported {position} term {other:?}"))),
        }
    }
}

/// Collapses Wikidata entity/property IRIs to their bare identifier.
fn canon_iri(iri: &str) -> String {
    if iri.starts_with("http://www.wikidata.org/") {
        if let Some(last) = iri.rsplit('/').next() {
            if is_pid(last) || is_qid(last) || is_lid(last) {
                return last.to_string();
            }
        }
    }
    iri.to_string()
}

fn is_pid(s: &str) -> bool {
    s.strip_prefix('P').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

fn is_qid(s: &str) -> bool {
    s.strip_prefix('Q').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

fn is_lid(s: &str) -> bool {
    s.strip_prefix('L').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}
