use super::{Diagnostic, DiagnosticKind, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Digit-leading token, always a constant.
    Number(String),
    Str(String),
    /// `?name`, always a variable.
    Var(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Slash,
    Colon,
    Semi,
    ColonDash,
    Arrow,
    Eq,
    Neq,
    At,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Var(s) => format!("variable `?{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::ColonDash => "`:-`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::At => "`@`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let span = |line, col, len: usize| SourceSpan::new(line, col, len.max(1));
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && is_word(chars[i]) {
                i += 1;
            }
            (Tok::Ident(chars[start..i].iter().collect()), i - start)
        } else if c.is_ascii_digit() {
            while i < chars.len() && is_word(chars[i]) {
                i += 1;
            }
            (Tok::Number(chars[start..i].iter().collect()), i - start)
        } else if c == '?' {
            i += 1;
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                while i < chars.len() && is_word(chars[i]) {
                    i += 1;
                }
                (Tok::Var(chars[start + 1..i].iter().collect()), i - start)
            } else {
                return Err(Diagnostic::new(
                    DiagnosticKind::Syntax,
                    "`?` must be followed by a variable name",
                    span(line, col, 1),
                ));
            }
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            let (l0, c0) = (line, col);
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        "unterminated string literal",
                        span(l0, c0, 1),
                    ));
                };
                match d {
                    '"' => {
                        i += 1;
                        break;
                    }
                    '\n' => {
                        return Err(Diagnostic::new(
                            DiagnosticKind::Syntax,
                            "unterminated string literal",
                            span(l0, c0, 1),
                        ))
                    }
                    '\\' => {
                        let esc = chars.get(i + 1).copied();
                        s.push(match esc {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            _ => {
                                return Err(Diagnostic::new(
                                    DiagnosticKind::Syntax,
                                    "unknown escape sequence",
                                    span(line, col + (i - start), 2),
                                ))
                            }
                        });
                        i += 2;
                    }
                    d => {
                        s.push(d);
                        i += 1;
                    }
                }
            }
            (Tok::Str(s), i - start)
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                (':', Some('-')) => (Tok::ColonDash, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('!', Some('=')) => (Tok::Neq, 2),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                ('/', _) => (Tok::Slash, 1),
                (':', _) => (Tok::Colon, 1),
                (';', _) => (Tok::Semi, 1),
                ('=', _) => (Tok::Eq, 1),
                ('@', _) => (Tok::At, 1),
                _ => {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        format!("unexpected character `{c}`"),
                        span(line, col, 1),
                    ))
                }
            };
            i += len;
            (tok, len)
        };
        out.push(Token {
            tok,
            span: span(line, col, len),
        });
        col += len;
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span(line, col, 1),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = lex("def V(x) :- R(x, \"a b\").\n# note\n  egd").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(kinds[0], &Tok::Ident("def".into()));
        assert!(kinds.contains(&&Tok::ColonDash));
        assert!(kinds.contains(&&Tok::Str("a b".into())));
        let egd = toks.iter().find(|t| t.tok == Tok::Ident("egd".into())).unwrap();
        assert_eq!((egd.span.line, egd.span.column, egd.span.length), (3, 3, 3));
    }

    #[test]
    fn bad_input_is_located() {
        let d = lex("R(a).\nR(b) $").unwrap_err();
        assert_eq!((d.span.line, d.span.column), (2, 6));
        assert!(lex("R(\"open").is_err());
    }
}
