use super::{DiagnosticKind, ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_) => "number".into(),
            Tok::Str(_) => "string".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
    /// Source text of the token.
    pub text: String,
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: usize, col: usize) -> SourceSpan {
        SourceSpan { line, column: col, offset: start, length: self.pos - start }
    }
}

/// Splits `src` into tokens. Unknown characters become syntax diagnostics
/// and are skipped. The last token is always `Eof`.
pub(crate) fn tokenize(src: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<Token> {
    let mut s = Scanner { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match (s.peek(), s.peek2()) {
                (Some(c), _) if c.is_whitespace() => {
                    s.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = s.peek() {
                        if c == '\n' {
                            break;
                        }
                        s.bump();
                    }
                }
                _ => break,
            }
        }
        let (start, line, col) = (s.pos, s.line, s.col);
        let Some(c) = s.bump() else {
            out.push(Token { tok: Tok::Eof, span: s.span_from(start, line, col), text: String::new() });
            return out;
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '-' if s.peek() == Some('>') => {
                s.bump();
                Tok::Arrow
            }
            '-' => Tok::Minus,
            '"' => {
                let mut closed = false;
                while let Some(c) = s.peek() {
                    if c == '\n' {
                        break;
                    }
                    s.bump();
                    if c == '"' {
                        closed = true;
                        break;
                    }
                }
                let span = s.span_from(start, line, col);
                if !closed {
                    diags.push(ParseDiagnostic::error(DiagnosticKind::Syntax, "unterminated string", span));
                    continue;
                }
                Tok::Str(src[start + 1..s.pos - 1].to_string())
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while matches!(s.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    s.bump();
                }
                Tok::Ident(src[start..s.pos].to_string())
            }
            c if c.is_ascii_digit() || (c == '.' && matches!(s.peek(), Some(d) if d.is_ascii_digit())) => {
                while matches!(s.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                    s.bump();
                }
                if matches!(s.peek(), Some('e' | 'E')) {
                    let save = (s.pos, s.line, s.col);
                    s.bump();
                    if matches!(s.peek(), Some('+' | '-')) {
                        s.bump();
                    }
                    if matches!(s.peek(), Some(d) if d.is_ascii_digit()) {
                        while matches!(s.peek(), Some(d) if d.is_ascii_digit()) {
                            s.bump();
                        }
                    } else {
                        (s.pos, s.line, s.col) = save;
                    }
                }
                let text = &src[start..s.pos];
                match text.parse::<f64>() {
                    Ok(v) => Tok::Number(v),
                    Err(_) => {
                        let span = s.span_from(start, line, col);
                        diags.push(ParseDiagnostic::error(
                            DiagnosticKind::Syntax,
                            format!("malformed number `{text}`"),
                            span,
                        ));
                        continue;
                    }
                }
            }
            other => {
                let span = s.span_from(start, line, col);
                diags.push(ParseDiagnostic::error(DiagnosticKind::Syntax, format!("unexpected character `{other}`"), span));
                continue;
            }
        };
        let span = s.span_from(start, line, col);
        out.push(Token { tok, span, text: src[start..s.pos].to_string() });
    }
}
