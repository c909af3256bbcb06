//! Recursive-descent parser producing a span-annotated syntax tree. Names are
//! not resolved here; see `elab`.

use super::lexer::{Tok, Token};
use super::{Diagnostic, DiagnosticKind, SourceSpan};
use crate::deps::Provenance;
use crate::model::SymbolKind;
use crate::updates::StepKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawKind {
    Ident,
    Number,
    Str,
    Var,
}

#[derive(Debug, Clone)]
pub(crate) struct RawTerm {
    pub kind: RawKind,
    pub text: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) struct RawAtom {
    pub symbol: String,
    pub symbol_span: SourceSpan,
    pub args: Vec<RawTerm>,
}

#[derive(Debug, Clone)]
pub(crate) enum RawCond {
    Atom(RawAtom),
    Not(RawAtom),
    Eq(RawTerm, RawTerm),
    Neq(RawTerm, RawTerm),
}

#[derive(Debug, Clone)]
pub(crate) struct RawStep {
    pub kind: StepKind,
    pub keyword: SourceSpan,
    pub pattern: RawAtom,
    pub replacement: Option<RawAtom>,
    pub condition: Vec<RawCond>,
}

#[derive(Debug, Clone)]
pub(crate) struct Decl {
    pub name: String,
    pub span: SourceSpan,
    pub arity: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum Stmt {
    Decl {
        kind: SymbolKind,
        items: Vec<Decl>,
    },
    Def {
        head: RawAtom,
        body: Vec<RawAtom>,
    },
    Tgd {
        keyword: SourceSpan,
        provenance: Option<(Provenance, SourceSpan)>,
        body: Vec<RawAtom>,
        exists: Option<Vec<(String, SourceSpan)>>,
        head: Vec<RawAtom>,
    },
    Egd {
        keyword: SourceSpan,
        provenance: Option<(Provenance, SourceSpan)>,
        body: Vec<RawAtom>,
        left: RawTerm,
        right: RawTerm,
    },
    Fact(RawAtom),
    Update {
        keyword: SourceSpan,
        name: Option<String>,
        steps: Vec<RawStep>,
    },
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, Diagnostic> {
        let t = self.peek();
        Err(Diagnostic::new(
            DiagnosticKind::Syntax,
            format!("expected {expected}, found {}", t.tok.describe()),
            t.span.clone(),
        ))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<SourceSpan, Diagnostic> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            self.error(&tok.describe())
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> Result<(String, SourceSpan), Diagnostic> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => self.error(what),
        }
    }

    pub fn statements(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        let mut out = Vec::new();
        while self.peek().tok != Tok::Eof {
            out.push(self.statement()?);
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<Stmt, Diagnostic> {
        if self.peek().tok == Tok::At {
            self.bump();
            let (p, span) = self.ident("`db` or `view`")?;
            let prov = match p.as_str() {
                "db" => Provenance::Database,
                "view" => Provenance::View,
                _ => {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        format!("unknown provenance `@{p}`, expected `@db` or `@view`"),
                        span,
                    ))
                }
            };
            return if self.is_keyword("tgd") {
                self.tgd(Some((prov, span)))
            } else if self.is_keyword("egd") {
                self.egd(Some((prov, span)))
            } else {
                self.error("`tgd` or `egd`")
            };
        }
        let Tok::Ident(word) = self.peek().tok.clone() else {
            return self.error("a statement");
        };
        let next = self.peek_at(1).clone();
        if next == Tok::LParen {
            let atom = self.atom()?;
            self.expect(Tok::Dot)?;
            return Ok(Stmt::Fact(atom));
        }
        match word.as_str() {
            "schema" | "view" => {
                self.bump();
                let kind = if word == "schema" {
                    SymbolKind::Database
                } else {
                    SymbolKind::View
                };
                let mut items = vec![self.decl()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.decl()?);
                }
                self.expect(Tok::Dot)?;
                Ok(Stmt::Decl { kind, items })
            }
            "def" => {
                self.bump();
                let head = self.atom()?;
                self.expect(Tok::ColonDash)?;
                let body = self.atoms()?;
                self.expect(Tok::Dot)?;
                Ok(Stmt::Def { head, body })
            }
            "tgd" => self.tgd(None),
            "egd" => self.egd(None),
            "update" => self.update(),
            _ => self.error("a statement"),
        }
    }

    fn decl(&mut self) -> Result<Decl, Diagnostic> {
        let (name, span) = self.ident("a symbol name")?;
        self.expect(Tok::Slash)?;
        let t = self.peek().clone();
        let arity = match &t.tok {
            Tok::Number(n) => n.parse::<usize>().ok(),
            _ => None,
        };
        let Some(arity) = arity else {
            return self.error("an arity");
        };
        self.bump();
        Ok(Decl { name, span, arity })
    }

    fn tgd(&mut self, provenance: Option<(Provenance, SourceSpan)>) -> Result<Stmt, Diagnostic> {
        let keyword = self.bump().span;
        let body = if self.peek().tok == Tok::Arrow {
            Vec::new()
        } else {
            self.atoms()?
        };
        self.expect(Tok::Arrow)?;
        let mut exists = None;
        if self.is_keyword("exists") && matches!(self.peek_at(1), Tok::Ident(_) | Tok::Var(_)) {
            self.bump();
            let mut vars = Vec::new();
            loop {
                let (Tok::Ident(v) | Tok::Var(v)) = self.peek().tok.clone() else {
                    return self.error("a variable");
                };
                vars.push((v, self.bump().span));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Colon)?;
            exists = Some(vars);
        }
        let head = self.atoms()?;
        self.expect(Tok::Dot)?;
        Ok(Stmt::Tgd {
            keyword,
            provenance,
            body,
            exists,
            head,
        })
    }

    fn egd(&mut self, provenance: Option<(Provenance, SourceSpan)>) -> Result<Stmt, Diagnostic> {
        let keyword = self.bump().span;
        let body = self.atoms()?;
        self.expect(Tok::Arrow)?;
        let left = self.term()?;
        self.expect(Tok::Eq)?;
        let right = self.term()?;
        self.expect(Tok::Dot)?;
        Ok(Stmt::Egd {
            keyword,
            provenance,
            body,
            left,
            right,
        })
    }

    fn update(&mut self) -> Result<Stmt, Diagnostic> {
        let keyword = self.bump().span;
        let name = match &self.peek().tok {
            Tok::Ident(n) => {
                let n = n.clone();
                self.bump();
                Some(n)
            }
            _ => None,
        };
        self.expect(Tok::LBrace)?;
        let mut steps = Vec::new();
        while self.peek().tok != Tok::RBrace {
            steps.push(self.step()?);
            if !self.eat(&Tok::Semi) && self.peek().tok != Tok::RBrace {
                return self.error("`;` or `}`");
            }
        }
        self.bump();
        self.eat(&Tok::Dot);
        Ok(Stmt::Update { keyword, name, steps })
    }

    fn step(&mut self) -> Result<RawStep, Diagnostic> {
        let kind = match &self.peek().tok {
            Tok::Ident(k) if k == "insert" => StepKind::Insert,
            Tok::Ident(k) if k == "delete" => StepKind::Delete,
            Tok::Ident(k) if k == "replace" => StepKind::Replace,
            _ => return self.error("`insert`, `delete` or `replace`"),
        };
        let keyword = self.bump().span;
        let pattern = self.atom()?;
        let replacement = if kind == StepKind::Replace {
            if !self.is_keyword("with") {
                return self.error("`with`");
            }
            self.bump();
            Some(self.atom()?)
        } else {
            None
        };
        let mut condition = Vec::new();
        if self.is_keyword("where") {
            self.bump();
            loop {
                condition.push(self.condition()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        Ok(RawStep {
            kind,
            keyword,
            pattern,
            replacement,
            condition,
        })
    }

    fn condition(&mut self) -> Result<RawCond, Diagnostic> {
        if self.is_keyword("not") && matches!(self.peek_at(1), Tok::Ident(_)) && self.peek_at(2) == &Tok::LParen {
            self.bump();
            return Ok(RawCond::Not(self.atom()?));
        }
        if matches!(self.peek().tok, Tok::Ident(_)) && self.peek_at(1) == &Tok::LParen {
            return Ok(RawCond::Atom(self.atom()?));
        }
        let left = self.term()?;
        if self.eat(&Tok::Eq) {
            Ok(RawCond::Eq(left, self.term()?))
        } else if self.eat(&Tok::Neq) {
            Ok(RawCond::Neq(left, self.term()?))
        } else {
            self.error("`=` or `!=`")
        }
    }

    fn atoms(&mut self) -> Result<Vec<RawAtom>, Diagnostic> {
        let mut out = vec![self.atom()?];
        while self.eat(&Tok::Comma) {
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<RawAtom, Diagnostic> {
        let (symbol, symbol_span) = self.ident("an atom")?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.term()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                if !self.eat(&Tok::Comma) {
                    return self.error("`,` or `)`");
                }
            }
        }
        Ok(RawAtom {
            symbol,
            symbol_span,
            args,
        })
    }

    fn term(&mut self) -> Result<RawTerm, Diagnostic> {
        let kind = match &self.peek().tok {
            Tok::Ident(_) => RawKind::Ident,
            Tok::Number(_) => RawKind::Number,
            Tok::Str(_) => RawKind::Str,
            Tok::Var(_) => RawKind::Var,
            _ => return self.error("a term"),
        };
        let t = self.bump();
        let text = match t.tok {
            Tok::Ident(s) | Tok::Number(s) | Tok::Str(s) | Tok::Var(s) => s,
            _ => unreachable!("checked above"),
        };
        Ok(RawTerm {
            kind,
            text,
            span: t.span,
        })
    }
}
