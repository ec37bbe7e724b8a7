//! Parser, grounder, and emitter for the PDDL subset the household domain
//! is written in: s-expressions, `:strips` and `:typing` requirements only,
//! `;` comments, ASCII identifiers `[a-z0-9_-]+`.
//!
//! [`parse_domain`] and [`parse_problem`] are generic over any domain in the
//! subset. [`ground`] interprets the household vocabulary (types `agent`,
//! `location`, `container`, `item`; predicates `adjacent`, `at`, `in`,
//! `holder-at`, `open`, `closed`) and produces a [`GroundedWorld`] that
//! seeds the simulator. Locations act as always-open holders so a single
//! `take` schema covers both free-standing and containered objects.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{AgentId, ContainerId, LocationId, ObjectId};

/// Line/column of a token in the source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourcePos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum PddlError {
    #[error("{pos}: {msg}")]
    Lex { pos: SourcePos, msg: String },
    #[error("{pos}: expected {expected}")]
    Syntax { pos: SourcePos, expected: String },
    #[error("{pos}: unsupported requirement `{name}`")]
    UnsupportedRequirement { pos: SourcePos, name: String },
    #[error("{pos}: undeclared type `{name}`")]
    UndeclaredType { pos: SourcePos, name: String },
    #[error("{pos}: undeclared predicate `{name}`")]
    UndeclaredPredicate { pos: SourcePos, name: String },
    #[error("{pos}: undeclared object `{name}`")]
    UndeclaredObject { pos: SourcePos, name: String },
    #[error("{pos}: undeclared variable `?{name}`")]
    UndeclaredVariable { pos: SourcePos, name: String },
    #[error("{pos}: arity mismatch for `{predicate}`: expected {expected} arguments, got {got}")]
    ArityMismatch {
        pos: SourcePos,
        predicate: String,
        expected: usize,
        got: usize,
    },
    #[error("{pos}: `{value}` has type `{found}`, `{predicate}` expects `{expected}` here")]
    TypeMismatch {
        pos: SourcePos,
        predicate: String,
        value: String,
        found: String,
        expected: String,
    },
    #[error("{pos}: goal must be ground, found variable `?{name}`")]
    NonGroundGoal { pos: SourcePos, name: String },
    #[error("{pos}: duplicate initial literal `{atom}`")]
    DuplicateInit { pos: SourcePos, atom: String },
    #[error("object `{0}` placed twice")]
    PlacedTwice(String),
    #[error("object `{0}` placed nowhere")]
    PlacedNowhere(String),
    #[error("location graph is disconnected: `{0}` is unreachable")]
    Disconnected(String),
    #[error("location `{0}` is adjacent to itself")]
    SelfAdjacency(String),
    #[error("{0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Lexing and s-expressions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Token {
    LParen(SourcePos),
    RParen(SourcePos),
    Symbol(String, SourcePos),
}

impl Token {
    fn pos(&self) -> SourcePos {
        match self {
            Token::LParen(p) | Token::RParen(p) => *p,
            Token::Symbol(_, p) => *p,
        }
    }
}

fn lex(text: &str) -> Result<Vec<Token>, PddlError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 0usize;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        col += 1;
        match c {
            '\n' => {
                line += 1;
                col = 0;
            }
            ';' => {
                // comment to end of line
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        col = 0;
                        break;
                    }
                }
            }
            '(' => tokens.push(Token::LParen(SourcePos { line, col })),
            ')' => tokens.push(Token::RParen(SourcePos { line, col })),
            c if c.is_whitespace() => {}
            c if is_symbol_char(c) => {
                let start = SourcePos { line, col };
                let mut sym = String::new();
                sym.push(c.to_ascii_lowercase());
                while let Some(&n) = chars.peek() {
                    if is_symbol_char(n) {
                        sym.push(n.to_ascii_lowercase());
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Symbol(sym, start));
            }
            other => {
                return Err(PddlError::Lex {
                    pos: SourcePos { line, col },
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(tokens)
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | ':' | '?')
}

#[derive(Debug, Clone)]
enum SExpr {
    Sym(String, SourcePos),
    List(Vec<SExpr>, SourcePos),
}

impl SExpr {
    fn pos(&self) -> SourcePos {
        match self {
            SExpr::Sym(_, p) | SExpr::List(_, p) => *p,
        }
    }

    fn as_sym(&self) -> Option<(&str, SourcePos)> {
        match self {
            SExpr::Sym(s, p) => Some((s, *p)),
            SExpr::List(..) => None,
        }
    }

    fn as_list(&self) -> Option<(&[SExpr], SourcePos)> {
        match self {
            SExpr::List(items, p) => Some((items, *p)),
            SExpr::Sym(..) => None,
        }
    }
}

fn parse_sexpr(text: &str) -> Result<SExpr, PddlError> {
    let tokens = lex(text)?;
    let mut iter = tokens.into_iter().peekable();
    let expr = parse_one(&mut iter)?;
    if let Some(extra) = iter.next() {
        return Err(PddlError::Syntax {
            pos: extra.pos(),
            expected: "end of input".into(),
        });
    }
    Ok(expr)
}

fn parse_one(
    iter: &mut std::iter::Peekable<std::vec::IntoIter<Token>>,
) -> Result<SExpr, PddlError> {
    match iter.next() {
        Some(Token::Symbol(s, p)) => Ok(SExpr::Sym(s, p)),
        Some(Token::LParen(p)) => {
            let mut items = Vec::new();
            loop {
                match iter.peek() {
                    Some(Token::RParen(_)) => {
                        iter.next();
                        return Ok(SExpr::List(items, p));
                    }
                    Some(_) => items.push(parse_one(iter)?),
                    None => {
                        return Err(PddlError::Syntax {
                            pos: p,
                            expected: "closing `)`".into(),
                        });
                    }
                }
            }
        }
        Some(Token::RParen(p)) => Err(PddlError::Syntax {
            pos: p,
            expected: "`(` or symbol".into(),
        }),
        None => Err(PddlError::Syntax {
            pos: SourcePos { line: 1, col: 1 },
            expected: "non-empty input".into(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Domain model
// ---------------------------------------------------------------------------

pub const ROOT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDecl {
    pub name: String,
    /// `None` means the implicit root type `object`.
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<Param>,
}

/// Schema-level atom: arguments are variables or constants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub precondition: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainDef {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

/// Fully ground atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        Self {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDef {
    pub name: String,
    pub domain: String,
    /// (object name, type name), sorted by (type, name) for stable emission.
    pub objects: Vec<(String, String)>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: Vec<GroundAtom>,
}

/// One type-consistent instantiation of an action schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    pub precondition: Vec<GroundAtom>,
    pub add: Vec<GroundAtom>,
    pub del: Vec<GroundAtom>,
}

// ---------------------------------------------------------------------------
// Domain parsing
// ---------------------------------------------------------------------------

struct TypeTable {
    parents: BTreeMap<String, Option<String>>,
}

impl TypeTable {
    fn from_decls(decls: &[TypeDecl]) -> Self {
        let mut parents = BTreeMap::new();
        parents.insert(ROOT_TYPE.to_string(), None);
        for d in decls {
            parents.insert(d.name.clone(), d.parent.clone());
        }
        Self { parents }
    }

    fn is_declared(&self, name: &str) -> bool {
        self.parents.contains_key(name)
    }

    fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == ROOT_TYPE {
            return true;
        }
        let mut cur = Some(ty.to_string());
        while let Some(t) = cur {
            if t == ancestor {
                return true;
            }
            cur = self.parents.get(&t).cloned().flatten();
        }
        false
    }
}

/// Parses a typed list `name+ [- type] ...` into (name, type) pairs.
/// Items without a trailing `- type` default to `object`.
fn parse_typed_list(items: &[SExpr], what: &str) -> Result<Vec<(String, String, SourcePos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, SourcePos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let (sym, pos) = items[i].as_sym().ok_or_else(|| PddlError::Syntax {
            pos: items[i].pos(),
            expected: format!("{what} name"),
        })?;
        if sym == "-" {
            i += 1;
            let (ty, typos) = items
                .get(i)
                .and_then(|e| e.as_sym())
                .ok_or_else(|| PddlError::Syntax {
                    pos: items[i - 1].pos(),
                    expected: "type name after `-`".into(),
                })?;
            for (name, npos) in pending.drain(..) {
                out.push((name, ty.to_string(), npos));
            }
            let _ = typos;
            i += 1;
        } else {
            pending.push((sym.to_string(), pos));
            i += 1;
        }
    }
    for (name, npos) in pending {
        out.push((name, ROOT_TYPE.to_string(), npos));
    }
    Ok(out)
}

fn expect_section<'a>(
    items: &'a [SExpr],
    keyword: &str,
) -> Result<(&'a [SExpr], SourcePos), PddlError> {
    let (list, pos) = items
        .first()
        .map(|e| (items, e.pos()))
        .ok_or_else(|| PddlError::Syntax {
            pos: SourcePos::default(),
            expected: format!("`{keyword}` section"),
        })?;
    let (head, hpos) = list[0].as_sym().ok_or_else(|| PddlError::Syntax {
        pos,
        expected: format!("`{keyword}`"),
    })?;
    if head != keyword {
        return Err(PddlError::Syntax {
            pos: hpos,
            expected: format!("`{keyword}`, found `{head}`"),
        });
    }
    Ok((&list[1..], hpos))
}

fn parse_atom_schema(
    expr: &SExpr,
    predicates: &BTreeMap<String, usize>,
    vars: &BTreeMap<String, String>,
) -> Result<Atom, PddlError> {
    let (items, pos) = expr.as_list().ok_or_else(|| PddlError::Syntax {
        pos: expr.pos(),
        expected: "atom".into(),
    })?;
    let (name, npos) = items
        .first()
        .and_then(|e| e.as_sym())
        .ok_or_else(|| PddlError::Syntax {
            pos,
            expected: "predicate name".into(),
        })?;
    let expected = *predicates
        .get(name)
        .ok_or_else(|| PddlError::UndeclaredPredicate {
            pos: npos,
            name: name.to_string(),
        })?;
    let args = &items[1..];
    if args.len() != expected {
        return Err(PddlError::ArityMismatch {
            pos: npos,
            predicate: name.to_string(),
            expected,
            got: args.len(),
        });
    }
    let mut terms = Vec::new();
    for a in args {
        let (sym, apos) = a.as_sym().ok_or_else(|| PddlError::Syntax {
            pos: a.pos(),
            expected: "term".into(),
        })?;
        if let Some(var) = sym.strip_prefix('?') {
            if !vars.contains_key(var) {
                return Err(PddlError::UndeclaredVariable {
                    pos: apos,
                    name: var.to_string(),
                });
            }
            terms.push(Term::Var(var.to_string()));
        } else {
            terms.push(Term::Const(sym.to_string()));
        }
    }
    Ok(Atom {
        predicate: name.to_string(),
        args: terms,
    })
}

/// Parses a `(and ...)` conjunction, a single atom, or for effects a mix of
/// atoms and `(not atom)` literals.
fn parse_conjunction(
    expr: &SExpr,
    predicates: &BTreeMap<String, usize>,
    vars: &BTreeMap<String, String>,
    allow_not: bool,
) -> Result<(Vec<Atom>, Vec<Atom>), PddlError> {
    let (items, _) = expr.as_list().ok_or_else(|| PddlError::Syntax {
        pos: expr.pos(),
        expected: "conjunction".into(),
    })?;
    let literals: Vec<&SExpr> = match items.first().and_then(|e| e.as_sym()) {
        Some(("and", _)) => items[1..].iter().collect(),
        _ => vec![expr],
    };
    let mut pos_atoms = Vec::new();
    let mut neg_atoms = Vec::new();
    for lit in literals {
        let (litems, lpos) = lit.as_list().ok_or_else(|| PddlError::Syntax {
            pos: lit.pos(),
            expected: "literal".into(),
        })?;
        if let Some(("not", _)) = litems.first().and_then(|e| e.as_sym()) {
            if !allow_not {
                return Err(PddlError::Syntax {
                    pos: lpos,
                    expected: "positive atom (negation not allowed here)".into(),
                });
            }
            let inner = litems.get(1).ok_or_else(|| PddlError::Syntax {
                pos: lpos,
                expected: "atom inside `not`".into(),
            })?;
            neg_atoms.push(parse_atom_schema(inner, predicates, vars)?);
        } else {
            pos_atoms.push(parse_atom_schema(lit, predicates, vars)?);
        }
    }
    Ok((pos_atoms, neg_atoms))
}

/// Parses a domain in the `:strips :typing` subset.
pub fn parse_domain(text: &str) -> Result<DomainDef, PddlError> {
    let root = parse_sexpr(text)?;
    let (items, rpos) = root.as_list().ok_or_else(|| PddlError::Syntax {
        pos: root.pos(),
        expected: "`(define ...)`".into(),
    })?;
    match items.first().and_then(|e| e.as_sym()) {
        Some(("define", _)) => {}
        _ => {
            return Err(PddlError::Syntax {
                pos: rpos,
                expected: "`define`".into(),
            });
        }
    }
    let (name_items, _) = expect_section(
        items.get(1).and_then(|e| e.as_list()).map(|(l, _)| l).unwrap_or(&[]),
        "domain",
    )
    .map_err(|_| PddlError::Syntax {
        pos: items.get(1).map(|e| e.pos()).unwrap_or_default(),
        expected: "`(domain <name>)`".into(),
    })?;
    let (name, _) = name_items
        .first()
        .and_then(|e| e.as_sym())
        .ok_or_else(|| PddlError::Syntax {
            pos: rpos,
            expected: "domain name".into(),
        })?;

    let mut requirements = Vec::new();
    let mut types = Vec::new();
    let mut predicates = Vec::new();
    let mut actions = Vec::new();

    for section in &items[2..] {
        let (sitems, spos) = section.as_list().ok_or_else(|| PddlError::Syntax {
            pos: section.pos(),
            expected: "domain section".into(),
        })?;
        let (head, hpos) = sitems
            .first()
            .and_then(|e| e.as_sym())
            .ok_or_else(|| PddlError::Syntax {
                pos: spos,
                expected: "section keyword".into(),
            })?;
        match head {
            ":requirements" => {
                for r in &sitems[1..] {
                    let (req, rp) = r.as_sym().ok_or_else(|| PddlError::Syntax {
                        pos: r.pos(),
                        expected: "requirement flag".into(),
                    })?;
                    if req != ":strips" && req != ":typing" {
                        return Err(PddlError::UnsupportedRequirement {
                            pos: rp,
                            name: req.to_string(),
                        });
                    }
                    requirements.push(req.to_string());
                }
            }
            ":types" => {
                for (tname, parent, _) in parse_typed_list(&sitems[1..], "type")? {
                    let parent = if parent == ROOT_TYPE { None } else { Some(parent) };
                    types.push(TypeDecl { name: tname, parent });
                }
            }
            ":predicates" => {
                for p in &sitems[1..] {
                    let (pitems, ppos) = p.as_list().ok_or_else(|| PddlError::Syntax {
                        pos: p.pos(),
                        expected: "predicate schema".into(),
                    })?;
                    let (pname, _) = pitems
                        .first()
                        .and_then(|e| e.as_sym())
                        .ok_or_else(|| PddlError::Syntax {
                            pos: ppos,
                            expected: "predicate name".into(),
                        })?;
                    let mut params = Vec::new();
                    for (vname, ty, vpos) in parse_typed_list(&pitems[1..], "parameter")? {
                        let vname = vname.strip_prefix('?').ok_or_else(|| PddlError::Syntax {
                            pos: vpos,
                            expected: "`?variable`".into(),
                        })?;
                        params.push(Param {
                            name: vname.to_string(),
                            ty,
                        });
                    }
                    predicates.push(PredicateSchema {
                        name: pname.to_string(),
                        params,
                    });
                }
            }
            ":action" => {
                actions.push(parse_action(sitems, hpos, &predicates)?);
            }
            other => {
                return Err(PddlError::Syntax {
                    pos: hpos,
                    expected: format!("domain section, found `{other}`"),
                });
            }
        }
    }

    let domain = DomainDef {
        name: name.to_string(),
        requirements,
        types,
        predicates,
        actions,
    };
    check_domain_types(&domain)?;
    Ok(domain)
}

fn parse_action(
    sitems: &[SExpr],
    pos: SourcePos,
    predicates: &[PredicateSchema],
) -> Result<ActionSchema, PddlError> {
    let pred_arity: BTreeMap<String, usize> = predicates
        .iter()
        .map(|p| (p.name.clone(), p.params.len()))
        .collect();
    let (name, _) = sitems
        .get(1)
        .and_then(|e| e.as_sym())
        .ok_or_else(|| PddlError::Syntax {
            pos,
            expected: "action name".into(),
        })?;
    let mut params = Vec::new();
    let mut precondition = Vec::new();
    let mut add = Vec::new();
    let mut del = Vec::new();
    let mut i = 2;
    let mut vars: BTreeMap<String, String> = BTreeMap::new();
    while i < sitems.len() {
        let (key, kpos) = sitems[i].as_sym().ok_or_else(|| PddlError::Syntax {
            pos: sitems[i].pos(),
            expected: ":parameters/:precondition/:effect".into(),
        })?;
        let body = sitems.get(i + 1).ok_or_else(|| PddlError::Syntax {
            pos: kpos,
            expected: format!("body after `{key}`"),
        })?;
        match key {
            ":parameters" => {
                let (pitems, _) = body.as_list().ok_or_else(|| PddlError::Syntax {
                    pos: body.pos(),
                    expected: "parameter list".into(),
                })?;
                for (vname, ty, vpos) in parse_typed_list(pitems, "parameter")? {
                    let vname = vname.strip_prefix('?').ok_or_else(|| PddlError::Syntax {
                        pos: vpos,
                        expected: "`?variable`".into(),
                    })?;
                    vars.insert(vname.to_string(), ty.clone());
                    params.push(Param {
                        name: vname.to_string(),
                        ty,
                    });
                }
            }
            ":precondition" => {
                let (pos_atoms, _) = parse_conjunction(body, &pred_arity, &vars, false)?;
                precondition = pos_atoms;
            }
            ":effect" => {
                let (pos_atoms, neg_atoms) = parse_conjunction(body, &pred_arity, &vars, true)?;
                add = pos_atoms;
                del = neg_atoms;
            }
            other => {
                return Err(PddlError::Syntax {
                    pos: kpos,
                    expected: format!(":parameters/:precondition/:effect, found `{other}`"),
                });
            }
        }
        i += 2;
    }
    Ok(ActionSchema {
        name: name.to_string(),
        params,
        precondition,
        add,
        del,
    })
}

/// Checks that every parameter type referenced by a predicate or action
/// schema is declared.
fn check_domain_types(domain: &DomainDef) -> Result<(), PddlError> {
    let table = TypeTable::from_decls(&domain.types);
    for d in &domain.types {
        if let Some(parent) = &d.parent {
            if !table.is_declared(parent) {
                return Err(PddlError::UndeclaredType {
                    pos: SourcePos::default(),
                    name: parent.clone(),
                });
            }
        }
    }
    let all_params = domain
        .predicates
        .iter()
        .flat_map(|p| p.params.iter())
        .chain(domain.actions.iter().flat_map(|a| a.params.iter()));
    for p in all_params {
        if !table.is_declared(&p.ty) {
            return Err(PddlError::UndeclaredType {
                pos: SourcePos::default(),
                name: p.ty.clone(),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Problem parsing
// ---------------------------------------------------------------------------

/// Parses a problem file against an already-parsed domain. All atoms must be
/// ground and reference declared objects and predicates.
pub fn parse_problem(text: &str, domain: &DomainDef) -> Result<ProblemDef, PddlError> {
    let root = parse_sexpr(text)?;
    let (items, rpos) = root.as_list().ok_or_else(|| PddlError::Syntax {
        pos: root.pos(),
        expected: "`(define ...)`".into(),
    })?;
    match items.first().and_then(|e| e.as_sym()) {
        Some(("define", _)) => {}
        _ => {
            return Err(PddlError::Syntax {
                pos: rpos,
                expected: "`define`".into(),
            });
        }
    }
    let pname = items
        .get(1)
        .and_then(|e| e.as_list())
        .filter(|(l, _)| matches!(l.first().and_then(|e| e.as_sym()), Some(("problem", _))))
        .and_then(|(l, _)| l.get(1).and_then(|e| e.as_sym()))
        .ok_or_else(|| PddlError::Syntax {
            pos: rpos,
            expected: "`(problem <name>)`".into(),
        })?
        .0
        .to_string();

    let table = TypeTable::from_decls(&domain.types);
    let pred_schemas: BTreeMap<String, &PredicateSchema> = domain
        .predicates
        .iter()
        .map(|p| (p.name.clone(), p))
        .collect();

    let mut domain_name = String::new();
    let mut objects: Vec<(String, String)> = Vec::new();
    let mut object_types: BTreeMap<String, String> = BTreeMap::new();
    let mut init: BTreeSet<GroundAtom> = BTreeSet::new();
    let mut goal: Vec<GroundAtom> = Vec::new();

    let ground_atom = |expr: &SExpr,
                       object_types: &BTreeMap<String, String>,
                       in_goal: bool|
     -> Result<GroundAtom, PddlError> {
        let (aitems, apos) = expr.as_list().ok_or_else(|| PddlError::Syntax {
            pos: expr.pos(),
            expected: "atom".into(),
        })?;
        let (pred, ppos) = aitems
            .first()
            .and_then(|e| e.as_sym())
            .ok_or_else(|| PddlError::Syntax {
                pos: apos,
                expected: "predicate name".into(),
            })?;
        let schema = pred_schemas
            .get(pred)
            .ok_or_else(|| PddlError::UndeclaredPredicate {
                pos: ppos,
                name: pred.to_string(),
            })?;
        let args = &aitems[1..];
        if args.len() != schema.params.len() {
            return Err(PddlError::ArityMismatch {
                pos: ppos,
                predicate: pred.to_string(),
                expected: schema.params.len(),
                got: args.len(),
            });
        }
        let mut ground_args = Vec::new();
        for (arg, param) in args.iter().zip(&schema.params) {
            let (sym, spos) = arg.as_sym().ok_or_else(|| PddlError::Syntax {
                pos: arg.pos(),
                expected: "object name".into(),
            })?;
            if let Some(var) = sym.strip_prefix('?') {
                if in_goal {
                    return Err(PddlError::NonGroundGoal {
                        pos: spos,
                        name: var.to_string(),
                    });
                }
                return Err(PddlError::UndeclaredVariable {
                    pos: spos,
                    name: var.to_string(),
                });
            }
            let oty = object_types
                .get(sym)
                .ok_or_else(|| PddlError::UndeclaredObject {
                    pos: spos,
                    name: sym.to_string(),
                })?;
            if !table.is_subtype(oty, &param.ty) {
                return Err(PddlError::TypeMismatch {
                    pos: spos,
                    predicate: pred.to_string(),
                    value: sym.to_string(),
                    found: oty.clone(),
                    expected: param.ty.clone(),
                });
            }
            ground_args.push(sym.to_string());
        }
        Ok(GroundAtom {
            predicate: pred.to_string(),
            args: ground_args,
        })
    };

    for section in &items[2..] {
        let (sitems, spos) = section.as_list().ok_or_else(|| PddlError::Syntax {
            pos: section.pos(),
            expected: "problem section".into(),
        })?;
        let (head, hpos) = sitems
            .first()
            .and_then(|e| e.as_sym())
            .ok_or_else(|| PddlError::Syntax {
                pos: spos,
                expected: "section keyword".into(),
            })?;
        match head {
            ":domain" => {
                domain_name = sitems
                    .get(1)
                    .and_then(|e| e.as_sym())
                    .ok_or_else(|| PddlError::Syntax {
                        pos: hpos,
                        expected: "domain name".into(),
                    })?
                    .0
                    .to_string();
            }
            ":objects" => {
                for (oname, ty, opos) in parse_typed_list(&sitems[1..], "object")? {
                    if !table.is_declared(&ty) {
                        return Err(PddlError::UndeclaredType { pos: opos, name: ty });
                    }
                    object_types.insert(oname.clone(), ty.clone());
                    objects.push((oname, ty));
                }
            }
            ":init" => {
                for a in &sitems[1..] {
                    let atom = ground_atom(a, &object_types, false)?;
                    if !init.insert(atom.clone()) {
                        return Err(PddlError::DuplicateInit {
                            pos: a.pos(),
                            atom: atom.to_string(),
                        });
                    }
                }
            }
            ":goal" => {
                let body = sitems.get(1).ok_or_else(|| PddlError::Syntax {
                    pos: hpos,
                    expected: "goal body".into(),
                })?;
                let (bitems, _) = body.as_list().ok_or_else(|| PddlError::Syntax {
                    pos: body.pos(),
                    expected: "goal conjunction".into(),
                })?;
                let atoms: Vec<&SExpr> = match bitems.first().and_then(|e| e.as_sym()) {
                    Some(("and", _)) => bitems[1..].iter().collect(),
                    _ => vec![body],
                };
                for a in atoms {
                    goal.push(ground_atom(a, &object_types, true)?);
                }
            }
            other => {
                return Err(PddlError::Syntax {
                    pos: hpos,
                    expected: format!("problem section, found `{other}`"),
                });
            }
        }
    }

    objects.sort_by(|a, b| (&a.1, &a.0).cmp(&(&b.1, &b.0)));
    Ok(ProblemDef {
        name: pname,
        domain: domain_name,
        objects,
        init,
        goal,
    })
}

// ---------------------------------------------------------------------------
// Grounding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Placement {
    Free(LocationId),
    InContainer(ContainerId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerInfo {
    pub location: LocationId,
    pub door: DoorState,
}

/// The static household map plus initial placements: the seed for a
/// simulator state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedWorld {
    pub locations: BTreeSet<LocationId>,
    /// Symmetric, irreflexive; both directions stored.
    pub adjacency: BTreeSet<(LocationId, LocationId)>,
    pub agents: BTreeMap<AgentId, LocationId>,
    pub objects: BTreeMap<ObjectId, Placement>,
    pub containers: BTreeMap<ContainerId, ContainerInfo>,
}

impl GroundedWorld {
    pub fn is_adjacent(&self, a: &LocationId, b: &LocationId) -> bool {
        self.adjacency.contains(&(a.clone(), b.clone()))
    }

    /// Sorted adjacent locations.
    pub fn neighbors(&self, loc: &LocationId) -> Vec<LocationId> {
        self.adjacency
            .iter()
            .filter(|(a, _)| a == loc)
            .map(|(_, b)| b.clone())
            .collect()
    }

    /// Graph distance in rooms; `None` if unreachable.
    pub fn distance(&self, from: &LocationId, to: &LocationId) -> Option<u32> {
        if from == to {
            return Some(0);
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(from.clone());
        queue.push_back((from.clone(), 0u32));
        while let Some((loc, d)) = queue.pop_front() {
            for n in self.neighbors(&loc) {
                if n == *to {
                    return Some(d + 1);
                }
                if seen.insert(n.clone()) {
                    queue.push_back((n, d + 1));
                }
            }
        }
        None
    }

    /// First hop of a shortest path `from -> to`; ties broken by id order.
    /// `None` when already there or unreachable.
    pub fn step_toward(&self, from: &LocationId, to: &LocationId) -> Option<LocationId> {
        if from == to {
            return None;
        }
        let total = self.distance(from, to)?;
        self.neighbors(from)
            .into_iter()
            .find(|n| self.distance(n, to) == Some(total - 1))
    }

    /// The room an object currently sits in, through its container if any.
    pub fn initial_room_of(&self, object: &ObjectId) -> Option<LocationId> {
        match self.objects.get(object)? {
            Placement::Free(l) => Some(l.clone()),
            Placement::InContainer(c) => self.containers.get(c).map(|ci| ci.location.clone()),
        }
    }

    /// Structural invariants: symmetric irreflexive adjacency, connected
    /// graph, every object placed exactly once (by construction of the
    /// map), containers located at known rooms.
    pub fn check_invariants(&self) -> Result<(), PddlError> {
        for (a, b) in &self.adjacency {
            if a == b {
                return Err(PddlError::SelfAdjacency(a.to_string()));
            }
            if !self.adjacency.contains(&(b.clone(), a.clone())) {
                return Err(PddlError::Invalid(format!(
                    "adjacency ({a}, {b}) lacks its mirror"
                )));
            }
            if !self.locations.contains(a) || !self.locations.contains(b) {
                return Err(PddlError::Invalid(format!(
                    "adjacency ({a}, {b}) references unknown location"
                )));
            }
        }
        if let Some(start) = self.locations.iter().next() {
            let mut seen = BTreeSet::new();
            let mut queue = VecDeque::new();
            seen.insert(start.clone());
            queue.push_back(start.clone());
            while let Some(loc) = queue.pop_front() {
                for n in self.neighbors(&loc) {
                    if seen.insert(n.clone()) {
                        queue.push_back(n);
                    }
                }
            }
            for loc in &self.locations {
                if !seen.contains(loc) {
                    return Err(PddlError::Disconnected(loc.to_string()));
                }
            }
        }
        for (c, info) in &self.containers {
            if !self.locations.contains(&info.location) {
                return Err(PddlError::Invalid(format!(
                    "container `{c}` at unknown location `{}`",
                    info.location
                )));
            }
        }
        for (o, p) in &self.objects {
            match p {
                Placement::Free(l) if !self.locations.contains(l) => {
                    return Err(PddlError::Invalid(format!(
                        "object `{o}` at unknown location `{l}`"
                    )));
                }
                Placement::InContainer(c) if !self.containers.contains_key(c) => {
                    return Err(PddlError::Invalid(format!(
                        "object `{o}` inside unknown container `{c}`"
                    )));
                }
                _ => {}
            }
        }
        for (a, l) in &self.agents {
            if !self.locations.contains(l) {
                return Err(PddlError::Invalid(format!(
                    "agent `{a}` at unknown location `{l}`"
                )));
            }
        }
        Ok(())
    }
}

/// Interprets a parsed problem under the household vocabulary and builds the
/// grounded world. Kind assignment follows the declared object types:
/// `agent`, `location`, `container`, `item` (directly or via subtyping).
pub fn ground(domain: &DomainDef, problem: &ProblemDef) -> Result<GroundedWorld, PddlError> {
    let table = TypeTable::from_decls(&domain.types);

    let mut world = GroundedWorld {
        locations: BTreeSet::new(),
        adjacency: BTreeSet::new(),
        agents: BTreeMap::new(),
        objects: BTreeMap::new(),
        containers: BTreeMap::new(),
    };
    let mut items: BTreeSet<String> = BTreeSet::new();
    let mut container_loc: BTreeMap<String, String> = BTreeMap::new();
    let mut container_door: BTreeMap<String, DoorState> = BTreeMap::new();
    let mut placements: BTreeMap<String, Placement> = BTreeMap::new();

    for (name, ty) in &problem.objects {
        if table.is_subtype(ty, "location") {
            world.locations.insert(LocationId::new(name));
        } else if table.is_subtype(ty, "container") {
            container_loc.insert(name.clone(), String::new());
        } else if table.is_subtype(ty, "agent") {
            // position filled from init
        } else if table.is_subtype(ty, "item") {
            items.insert(name.clone());
        } else {
            return Err(PddlError::Invalid(format!(
                "object `{name}` of type `{ty}` fits no household kind"
            )));
        }
    }

    for atom in &problem.init {
        let args = &atom.args;
        match atom.predicate.as_str() {
            "adjacent" => {
                let a = LocationId::new(&args[0]);
                let b = LocationId::new(&args[1]);
                if a == b {
                    return Err(PddlError::SelfAdjacency(a.to_string()));
                }
                world.adjacency.insert((a.clone(), b.clone()));
                world.adjacency.insert((b, a));
            }
            "at" => {
                let agent = AgentId::new(&args[0]);
                if world
                    .agents
                    .insert(agent.clone(), LocationId::new(&args[1]))
                    .is_some()
                {
                    return Err(PddlError::PlacedTwice(agent.to_string()));
                }
            }
            "in" => {
                let item = &args[0];
                let holder = &args[1];
                let placement = if container_loc.contains_key(holder) {
                    Placement::InContainer(ContainerId::new(holder))
                } else {
                    Placement::Free(LocationId::new(holder))
                };
                if placements.insert(item.clone(), placement).is_some() {
                    return Err(PddlError::PlacedTwice(item.clone()));
                }
            }
            "holder-at" => {
                if let Some(slot) = container_loc.get_mut(&args[0]) {
                    *slot = args[1].clone();
                }
                // locations are their own holders; nothing to record
            }
            "open" => {
                if container_loc.contains_key(&args[0]) {
                    container_door.insert(args[0].clone(), DoorState::Open);
                }
            }
            "closed" => {
                if container_loc.contains_key(&args[0]) {
                    container_door.insert(args[0].clone(), DoorState::Closed);
                }
            }
            "hand-empty" | "holding" => {
                if atom.predicate == "holding" {
                    return Err(PddlError::Invalid(
                        "initial `holding` literals are not supported".into(),
                    ));
                }
            }
            other => {
                return Err(PddlError::Invalid(format!(
                    "init predicate `{other}` has no household interpretation"
                )));
            }
        }
    }

    for item in &items {
        match placements.remove(item) {
            Some(p) => {
                world.objects.insert(ObjectId::new(item), p);
            }
            None => return Err(PddlError::PlacedNowhere(item.clone())),
        }
    }
    for (c, loc) in container_loc {
        if loc.is_empty() {
            return Err(PddlError::Invalid(format!(
                "container `{c}` has no `holder-at` location"
            )));
        }
        let door = container_door
            .get(&c)
            .copied()
            .ok_or_else(|| PddlError::Invalid(format!("container `{c}` has no door state")))?;
        world.containers.insert(
            ContainerId::new(&c),
            ContainerInfo {
                location: LocationId::new(&loc),
                door,
            },
        );
    }

    world.check_invariants()?;
    Ok(world)
}

/// Enumerates every type-consistent instantiation of the domain's action
/// schemas over the problem's objects.
pub fn ground_actions(
    domain: &DomainDef,
    problem: &ProblemDef,
) -> Result<Vec<GroundAction>, PddlError> {
    let table = TypeTable::from_decls(&domain.types);
    let mut out = Vec::new();
    for schema in &domain.actions {
        let candidates: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| {
                problem
                    .objects
                    .iter()
                    .filter(|(_, ty)| table.is_subtype(ty, &p.ty))
                    .map(|(name, _)| name.as_str())
                    .collect()
            })
            .collect();
        let mut indices = vec![0usize; schema.params.len()];
        if candidates.iter().any(|c| c.is_empty()) && !schema.params.is_empty() {
            continue;
        }
        loop {
            let binding: BTreeMap<&str, &str> = schema
                .params
                .iter()
                .zip(&indices)
                .map(|(p, &i)| (p.name.as_str(), candidates[p_index(schema, &p.name)][i]))
                .collect();
            let subst = |atoms: &[Atom]| -> Vec<GroundAtom> {
                atoms
                    .iter()
                    .map(|a| GroundAtom {
                        predicate: a.predicate.clone(),
                        args: a
                            .args
                            .iter()
                            .map(|t| match t {
                                Term::Var(v) => binding[v.as_str()].to_string(),
                                Term::Const(c) => c.clone(),
                            })
                            .collect(),
                    })
                    .collect()
            };
            out.push(GroundAction {
                name: schema.name.clone(),
                args: schema
                    .params
                    .iter()
                    .map(|p| binding[p.name.as_str()].to_string())
                    .collect(),
                precondition: subst(&schema.precondition),
                add: subst(&schema.add),
                del: subst(&schema.del),
            });
            // advance odometer
            let mut k = indices.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                indices[k] += 1;
                if indices[k] < candidates[k].len() {
                    break;
                }
                indices[k] = 0;
                if k == 0 {
                    break;
                }
            }
            if indices.iter().all(|&i| i == 0) {
                break;
            }
            if schema.params.is_empty() {
                break;
            }
        }
    }
    Ok(out)
}

fn p_index(schema: &ActionSchema, name: &str) -> usize {
    schema
        .params
        .iter()
        .position(|p| p.name == name)
        .expect("parameter present")
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

fn emit_typed_list(out: &mut String, indent: &str, pairs: &[(String, String)]) {
    // group consecutive names sharing a type
    let mut grouped: Vec<(Vec<&str>, &str)> = Vec::new();
    for (name, ty) in pairs {
        match grouped.last_mut() {
            Some((names, gty)) if *gty == ty => names.push(name),
            _ => grouped.push((vec![name], ty)),
        }
    }
    for (names, ty) in grouped {
        out.push_str(indent);
        out.push_str(&names.join(" "));
        out.push_str(" - ");
        out.push_str(ty);
        out.push('\n');
    }
}

fn emit_atom_schema(atom: &Atom) -> String {
    let mut s = format!("({}", atom.predicate);
    for t in &atom.args {
        match t {
            Term::Var(v) => s.push_str(&format!(" ?{v}")),
            Term::Const(c) => s.push_str(&format!(" {c}")),
        }
    }
    s.push(')');
    s
}

/// Canonical text for a domain; `parse_domain(emit_domain(d)) == d`.
pub fn emit_domain(domain: &DomainDef) -> String {
    let mut out = String::new();
    out.push_str(&format!("(define (domain {})\n", domain.name));
    if !domain.requirements.is_empty() {
        out.push_str(&format!(
            "  (:requirements {})\n",
            domain.requirements.join(" ")
        ));
    }
    if !domain.types.is_empty() {
        out.push_str("  (:types\n");
        let pairs: Vec<(String, String)> = domain
            .types
            .iter()
            .map(|t| {
                (
                    t.name.clone(),
                    t.parent.clone().unwrap_or_else(|| ROOT_TYPE.to_string()),
                )
            })
            .collect();
        emit_typed_list(&mut out, "    ", &pairs);
        out.push_str("  )\n");
    }
    out.push_str("  (:predicates\n");
    for p in &domain.predicates {
        out.push_str(&format!("    ({}", p.name));
        for param in &p.params {
            out.push_str(&format!(" ?{} - {}", param.name, param.ty));
        }
        out.push_str(")\n");
    }
    out.push_str("  )\n");
    for a in &domain.actions {
        out.push_str(&format!("  (:action {}\n", a.name));
        out.push_str("    :parameters (");
        out.push_str(
            &a.params
                .iter()
                .map(|p| format!("?{} - {}", p.name, p.ty))
                .collect::<Vec<_>>()
                .join(" "),
        );
        out.push_str(")\n");
        out.push_str(&format!(
            "    :precondition (and{})\n",
            a.precondition
                .iter()
                .map(|at| format!(" {}", emit_atom_schema(at)))
                .collect::<String>()
        ));
        let effects: Vec<String> = a
            .add
            .iter()
            .map(emit_atom_schema)
            .chain(a.del.iter().map(|at| format!("(not {})", emit_atom_schema(at))))
            .collect();
        out.push_str(&format!(
            "    :effect (and{})\n",
            effects.iter().map(|e| format!(" {e}")).collect::<String>()
        ));
        out.push_str("  )\n");
    }
    out.push_str(")\n");
    out
}

/// Canonical text for a problem; byte-identical for equal inputs and
/// `parse_problem(emit_problem_def(p), d) == p`.
pub fn emit_problem_def(problem: &ProblemDef) -> String {
    let mut out = String::new();
    out.push_str(&format!("(define (problem {})\n", problem.name));
    out.push_str(&format!("  (:domain {})\n", problem.domain));
    out.push_str("  (:objects\n");
    emit_typed_list(&mut out, "    ", &problem.objects);
    out.push_str("  )\n");
    out.push_str("  (:init\n");
    for atom in &problem.init {
        out.push_str(&format!("    {atom}\n"));
    }
    out.push_str("  )\n");
    out.push_str(&format!(
        "  (:goal (and{}))\n",
        problem
            .goal
            .iter()
            .map(|a| format!(" {a}"))
            .collect::<String>()
    ));
    out.push_str(")\n");
    out
}

/// Builds a ProblemDef for a grounded world: objects, placements, door
/// states, adjacency (both directions), and the given goal atoms.
pub fn world_to_problem(
    name: &str,
    domain_name: &str,
    world: &GroundedWorld,
    goal: Vec<GroundAtom>,
) -> ProblemDef {
    let mut objects: Vec<(String, String)> = Vec::new();
    for a in world.agents.keys() {
        objects.push((a.to_string(), "agent".into()));
    }
    for l in &world.locations {
        objects.push((l.to_string(), "location".into()));
    }
    for o in world.objects.keys() {
        objects.push((o.to_string(), "item".into()));
    }
    for c in world.containers.keys() {
        objects.push((c.to_string(), "container".into()));
    }
    objects.sort_by(|a, b| (&a.1, &a.0).cmp(&(&b.1, &b.0)));

    let mut init: BTreeSet<GroundAtom> = BTreeSet::new();
    for (a, b) in &world.adjacency {
        init.insert(GroundAtom::new("adjacent", &[a.as_str(), b.as_str()]));
    }
    for l in &world.locations {
        init.insert(GroundAtom::new("holder-at", &[l.as_str(), l.as_str()]));
        init.insert(GroundAtom::new("open", &[l.as_str()]));
    }
    for (agent, loc) in &world.agents {
        init.insert(GroundAtom::new("at", &[agent.as_str(), loc.as_str()]));
        init.insert(GroundAtom::new("hand-empty", &[agent.as_str()]));
    }
    for (c, info) in &world.containers {
        init.insert(GroundAtom::new(
            "holder-at",
            &[c.as_str(), info.location.as_str()],
        ));
        let door = match info.door {
            DoorState::Open => "open",
            DoorState::Closed => "closed",
        };
        init.insert(GroundAtom::new(door, &[c.as_str()]));
    }
    for (o, p) in &world.objects {
        let holder = match p {
            Placement::Free(l) => l.to_string(),
            Placement::InContainer(c) => c.to_string(),
        };
        init.insert(GroundAtom::new("in", &[o.as_str(), holder.as_str()]));
    }

    ProblemDef {
        name: name.to_string(),
        domain: domain_name.to_string(),
        objects,
        init,
        goal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI_DOMAIN: &str = r#"
        ; single-action smoke domain
        (define (domain mini)
          (:requirements :strips :typing)
          (:types agent location)
          (:predicates
            (adjacent ?from - location ?to - location)
            (at ?a - agent ?l - location))
          (:action move
            :parameters (?a - agent ?from - location ?to - location)
            :precondition (and (at ?a ?from) (adjacent ?from ?to))
            :effect (and (at ?a ?to) (not (at ?a ?from)))))
    "#;

    #[test]
    fn parses_single_action_domain() {
        let d = parse_domain(MINI_DOMAIN).unwrap();
        assert_eq!(d.name, "mini");
        assert_eq!(d.actions.len(), 1);
        assert_eq!(d.actions[0].name, "move");
        assert_eq!(d.actions[0].params.len(), 3);
        assert_eq!(d.actions[0].precondition.len(), 2);
        assert_eq!(d.actions[0].add.len(), 1);
        assert_eq!(d.actions[0].del.len(), 1);
    }

    #[test]
    fn rejects_unsupported_requirement() {
        let text = "(define (domain x) (:requirements :adl))";
        let err = parse_domain(text).unwrap_err();
        match err {
            PddlError::UnsupportedRequirement { name, .. } => assert_eq!(name, ":adl"),
            other => panic!("expected unsupported requirement, got {other:?}"),
        }
    }

    #[test]
    fn lex_error_reports_position() {
        let text = "(define (domain x)\n  (:requirements !strips))";
        match parse_domain(text).unwrap_err() {
            PddlError::Lex { pos, .. } => {
                assert_eq!(pos.line, 2);
                assert!(pos.col > 0);
            }
            other => panic!("expected lex error, got {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_detected() {
        let text = r#"
            (define (domain x)
              (:predicates (p ?a - object ?b - object))
              (:action bad
                :parameters (?a - object)
                :precondition (and (p ?a))
                :effect (and)))
        "#;
        match parse_domain(text).unwrap_err() {
            PddlError::ArityMismatch {
                predicate,
                expected,
                got,
                ..
            } => {
                assert_eq!(predicate, "p");
                assert_eq!(expected, 2);
                assert_eq!(got, 1);
            }
            other => panic!("expected arity mismatch, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_type_detected() {
        let text = r#"
            (define (domain x)
              (:types agent)
              (:predicates (at ?a - agent ?l - location)))
        "#;
        match parse_domain(text).unwrap_err() {
            PddlError::UndeclaredType { name, .. } => assert_eq!(name, "location"),
            other => panic!("expected undeclared type, got {other:?}"),
        }
    }

    #[test]
    fn domain_round_trips_through_emission() {
        let d = parse_domain(MINI_DOMAIN).unwrap();
        let emitted = emit_domain(&d);
        let d2 = parse_domain(&emitted).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn empty_init_section_is_empty_set() {
        let d = parse_domain(MINI_DOMAIN).unwrap();
        let text = r#"
            (define (problem empty)
              (:domain mini)
              (:objects m - agent l1 - location)
              (:init)
              (:goal (and (at m l1))))
        "#;
        let p = parse_problem(text, &d).unwrap();
        assert!(p.init.is_empty());
    }

    #[test]
    fn goal_with_undeclared_object_rejected() {
        let d = parse_domain(MINI_DOMAIN).unwrap();
        let text = r#"
            (define (problem bad)
              (:domain mini)
              (:objects m - agent l1 - location)
              (:init (at m l1))
              (:goal (and (at m l9))))
        "#;
        match parse_problem(text, &d).unwrap_err() {
            PddlError::UndeclaredObject { name, .. } => assert_eq!(name, "l9"),
            other => panic!("expected undeclared object, got {other:?}"),
        }
    }

    #[test]
    fn non_ground_goal_rejected() {
        let d = parse_domain(MINI_DOMAIN).unwrap();
        let text = r#"
            (define (problem bad)
              (:domain mini)
              (:objects m - agent l1 - location)
              (:init)
              (:goal (at m ?somewhere)))
        "#;
        match parse_problem(text, &d).unwrap_err() {
            PddlError::NonGroundGoal { name, .. } => assert_eq!(name, "somewhere"),
            other => panic!("expected non-ground goal, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_init_literal_rejected() {
        let d = parse_domain(MINI_DOMAIN).unwrap();
        let text = r#"
            (define (problem dup)
              (:domain mini)
              (:objects m - agent l1 - location)
              (:init (at m l1) (at m l1))
              (:goal (at m l1)))
        "#;
        assert!(matches!(
            parse_problem(text, &d).unwrap_err(),
            PddlError::DuplicateInit { .. }
        ));
    }
}
