use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::lexer::{tokenize, Tok, Token};
use super::{DiagnosticKind, ParseDiagnostic, ParseOutput, SourceSpan};
use crate::ir::{CircType, GateKind, GateList, GateRecord};

/// Error already pushed to the diagnostics list.
struct Reported;

type PResult<T> = Result<T, Reported>;

#[derive(Clone, Copy)]
enum Lowering {
    H,
    X,
    Rot(GateKind),
    Cx,
    Phase,
}

impl Lowering {
    fn lookup(name: &str) -> Option<Lowering> {
        Some(match name {
            "h" => Lowering::H,
            "x" => Lowering::X,
            "rx" => Lowering::Rot(GateKind::Rx),
            "ry" => Lowering::Rot(GateKind::Ry),
            "rz" => Lowering::Rot(GateKind::Rz),
            "cx" => Lowering::Cx,
            "cp" | "cu1" => Lowering::Phase,
            _ => return None,
        })
    }

    fn n_params(self) -> usize {
        match self {
            Lowering::Rot(_) | Lowering::Phase => 1,
            _ => 0,
        }
    }

    fn n_qubits(self) -> usize {
        match self {
            Lowering::Cx | Lowering::Phase => 2,
            _ => 1,
        }
    }
}

struct Operand {
    index: Option<usize>,
    span: SourceSpan,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<ParseDiagnostic>,
    qreg: Option<(String, usize)>,
    cregs: BTreeMap<String, usize>,
    gates: Vec<GateRecord>,
}

/// Parses a program. Diagnostics come back in source order; any error
/// suppresses the circuit.
pub fn parse_qasm(source: &str) -> ParseOutput {
    let mut diags = Vec::new();
    let toks = tokenize(source, &mut diags);
    let mut p = Parser { toks, pos: 0, diags, qreg: None, cregs: BTreeMap::new(), gates: Vec::new() };
    p.program();
    let mut diagnostics = p.diags;
    diagnostics.sort_by_key(|d| d.span.offset);
    let circuit = match (&p.qreg, diagnostics.iter().any(|d| d.is_error())) {
        (Some((_, n)), false) => Some(GateList::new(CircType::Imported, *n, p.gates)),
        _ => None,
    };
    ParseOutput { circuit, diagnostics }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&mut self, kind: DiagnosticKind, msg: impl Into<String>, span: SourceSpan) -> PResult<T> {
        self.diags.push(ParseDiagnostic::error(kind, msg, span));
        Err(Reported)
    }

    fn expect(&mut self, want: Tok, context: &str) -> PResult<Token> {
        if self.peek().tok == want {
            return Ok(self.next());
        }
        let t = self.peek().clone();
        self.fail(DiagnosticKind::Syntax, format!("expected {} {context}, found {}", want.describe(), t.tok.describe()), t.span)
    }

    fn ident(&mut self, context: &str) -> PResult<Token> {
        if matches!(self.peek().tok, Tok::Ident(_)) {
            return Ok(self.next());
        }
        let t = self.peek().clone();
        self.fail(DiagnosticKind::Syntax, format!("expected identifier {context}, found {}", t.tok.describe()), t.span)
    }

    fn integer(&mut self, context: &str) -> PResult<(usize, SourceSpan)> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) if !t.text.contains(['.', 'e', 'E']) && v <= u32::MAX as f64 => Ok((v as usize, t.span)),
            _ => self.fail(DiagnosticKind::Syntax, format!("expected integer {context}, found {}", t.tok.describe()), t.span),
        }
    }

    fn recover(&mut self) {
        // errors found after the terminating `;` need no skipping
        if self.pos > 0 && self.toks[self.pos - 1].tok == Tok::Semi {
            return;
        }
        while !matches!(self.peek().tok, Tok::Semi | Tok::Eof) {
            self.next();
        }
        self.next();
    }

    fn program(&mut self) {
        self.header();
        while self.peek().tok != Tok::Eof {
            if self.statement().is_err() {
                self.recover();
            }
        }
        if self.qreg.is_none() && !self.diags.iter().any(|d| d.is_error()) {
            let span = self.peek().span;
            self.diags.push(ParseDiagnostic::error(
                DiagnosticKind::UndefinedRegister,
                "program declares no quantum register",
                span,
            ));
        }
    }

    fn header(&mut self) {
        let t = self.peek().clone();
        if t.tok != Tok::Ident("OPENQASM".into()) {
            self.diags.push(ParseDiagnostic::error(
                DiagnosticKind::Syntax,
                format!("expected `OPENQASM 2.0;` header, found {}", t.tok.describe()),
                t.span,
            ));
            return;
        }
        self.next();
        let r = (|| {
            let v = self.next();
            if !matches!(v.tok, Tok::Number(x) if x == 2.0) {
                return self.fail(DiagnosticKind::Syntax, format!("unsupported OpenQASM version `{}`", v.text), v.span);
            }
            self.expect(Tok::Semi, "after version")?;
            Ok(())
        })();
        if r.is_err() {
            self.recover();
        }
    }

    fn statement(&mut self) -> PResult<()> {
        let head = self.peek().clone();
        let Tok::Ident(word) = &head.tok else {
            self.next();
            return self.fail(DiagnosticKind::Syntax, format!("expected statement, found {}", head.tok.describe()), head.span);
        };
        match word.as_str() {
            "OPENQASM" => {
                self.next();
                self.fail(DiagnosticKind::Syntax, "the `OPENQASM` header must come first and appear once", head.span)
            }
            "include" => {
                self.next();
                let t = self.next();
                let Tok::Str(file) = &t.tok else {
                    return self.fail(DiagnosticKind::Syntax, format!("expected file name, found {}", t.tok.describe()), t.span);
                };
                if file != "qelib1.inc" {
                    self.diags.push(ParseDiagnostic::warning(
                        DiagnosticKind::IgnoredInclude,
                        format!("include of `{file}` ignored; only the built-in gate subset is available"),
                        t.span,
                    ));
                }
                self.expect(Tok::Semi, "after include")?;
                Ok(())
            }
            "qreg" | "creg" => self.register(word == "qreg"),
            "gate" | "opaque" | "if" | "reset" => {
                self.next();
                self.fail(DiagnosticKind::UnsupportedStatement, format!("`{word}` statements are not supported"), head.span)
            }
            "barrier" => {
                self.next();
                self.operand_list()?;
                self.expect(Tok::Semi, "after barrier")?;
                Ok(())
            }
            "measure" => self.measure(),
            _ => self.gate(),
        }
    }

    fn register(&mut self, quantum: bool) -> PResult<()> {
        let kw = self.next();
        let name = self.ident("for register name")?;
        self.expect(Tok::LBracket, "after register name")?;
        let (size, size_span) = self.integer("register size")?;
        self.expect(Tok::RBracket, "after register size")?;
        self.expect(Tok::Semi, "after register declaration")?;
        if size == 0 {
            return self.fail(DiagnosticKind::Syntax, "register size must be at least 1", size_span);
        }
        let taken = self.qreg.as_ref().is_some_and(|(q, _)| *q == name.text) || self.cregs.contains_key(&name.text);
        if taken {
            return self.fail(
                DiagnosticKind::RegisterRedefinition,
                format!("register `{}` is already defined", name.text),
                name.span,
            );
        }
        if quantum {
            if self.qreg.is_some() {
                return self.fail(DiagnosticKind::UnsupportedStatement, "only one quantum register is supported", kw.span);
            }
            self.qreg = Some((name.text, size));
        } else {
            self.cregs.insert(name.text, size);
        }
        Ok(())
    }

    /// `name` or `name[index]`, resolved against the quantum register.
    fn qubit_operand(&mut self) -> PResult<Operand> {
        let name = self.ident("for qubit operand")?;
        let index = self.subscript()?;
        let size = match &self.qreg {
            Some((q, n)) if *q == name.text => *n,
            _ if self.cregs.contains_key(&name.text) => {
                return self.fail(
                    DiagnosticKind::Operands,
                    format!("`{}` is a classical register", name.text),
                    name.span,
                );
            }
            _ => {
                return self.fail(
                    DiagnosticKind::UndefinedRegister,
                    format!("quantum register `{}` is not defined", name.text),
                    name.span,
                );
            }
        };
        self.check_index(index, size, &name)
    }

    /// Optional `[index]`: the index, its span and the closing bracket's span.
    fn subscript(&mut self) -> PResult<Option<(usize, SourceSpan, SourceSpan)>> {
        if self.peek().tok != Tok::LBracket {
            return Ok(None);
        }
        self.next();
        let (i, span) = self.integer("as register index")?;
        let close = self.expect(Tok::RBracket, "after register index")?;
        Ok(Some((i, span, close.span)))
    }

    fn check_index(
        &mut self,
        index: Option<(usize, SourceSpan, SourceSpan)>,
        size: usize,
        name: &Token,
    ) -> PResult<Operand> {
        match index {
            None => Ok(Operand { index: None, span: name.span }),
            Some((i, span, _)) if i >= size => self.fail(
                DiagnosticKind::IndexOutOfRange,
                format!("index {i} out of range for register `{}` of size {size}", name.text),
                span,
            ),
            Some((i, _, close)) => Ok(Operand { index: Some(i), span: name.span.to(close) }),
        }
    }

    fn operand_list(&mut self) -> PResult<Vec<Operand>> {
        let mut ops = vec![self.qubit_operand()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            ops.push(self.qubit_operand()?);
        }
        Ok(ops)
    }

    fn measure(&mut self) -> PResult<()> {
        self.next();
        let q = self.qubit_operand()?;
        self.expect(Tok::Arrow, "in measure")?;
        let cname = self.ident("for classical register")?;
        let cindex = self.subscript()?;
        self.expect(Tok::Semi, "after measure")?;
        let Some(&csize) = self.cregs.get(&cname.text) else {
            return self.fail(
                DiagnosticKind::UndefinedRegister,
                format!("classical register `{}` is not defined", cname.text),
                cname.span,
            );
        };
        let c = self.check_index(cindex, csize, &cname)?;
        let n = self.qreg.as_ref().map_or(0, |(_, n)| *n);
        match (q.index, c.index) {
            (Some(i), Some(_)) => self.gates.push(GateRecord::measure(i)),
            (None, None) if csize == n => self.gates.extend((0..n).map(GateRecord::measure)),
            _ => {
                return self.fail(
                    DiagnosticKind::Operands,
                    "measure needs two single bits or two registers of equal size",
                    q.span.to(c.span),
                );
            }
        }
        Ok(())
    }

    fn gate(&mut self) -> PResult<()> {
        let name = self.next();
        let Some(lowering) = Lowering::lookup(&name.text) else {
            return self.fail(DiagnosticKind::UnsupportedGate, format!("gate `{}` is not supported", name.text), name.span);
        };
        let mut params = Vec::new();
        if self.peek().tok == Tok::LParen {
            self.next();
            if self.peek().tok != Tok::RParen {
                params.push(self.angle()?);
                while self.peek().tok == Tok::Comma {
                    self.next();
                    params.push(self.angle()?);
                }
            }
            self.expect(Tok::RParen, "after gate parameters")?;
        }
        let ops = self.operand_list()?;
        self.expect(Tok::Semi, "after gate operands")?;

        if params.len() != lowering.n_params() {
            return self.fail(
                DiagnosticKind::Operands,
                format!("gate `{}` takes {} parameter(s), got {}", name.text, lowering.n_params(), params.len()),
                name.span,
            );
        }
        if ops.len() != lowering.n_qubits() {
            return self.fail(
                DiagnosticKind::Operands,
                format!("gate `{}` takes {} qubit(s), got {}", name.text, lowering.n_qubits(), ops.len()),
                name.span,
            );
        }
        let p = params.first().copied().unwrap_or(0.0);
        let n = self.qreg.as_ref().map_or(0, |(_, n)| *n);
        if lowering.n_qubits() == 1 {
            let targets: Vec<usize> = match ops[0].index {
                Some(i) => vec![i],
                None => (0..n).collect(),
            };
            for t in targets {
                self.gates.push(match lowering {
                    Lowering::H => GateRecord::h(t),
                    Lowering::X => GateRecord::rx(t, PI),
                    Lowering::Rot(kind) => GateRecord { kind, control: None, target: t, param: p },
                    Lowering::Cx | Lowering::Phase => unreachable!(),
                });
            }
            return Ok(());
        }
        let (Some(c), Some(t)) = (ops[0].index, ops[1].index) else {
            let bad = if ops[0].index.is_none() { &ops[0] } else { &ops[1] };
            let span = bad.span;
            return self.fail(DiagnosticKind::Operands, "two-qubit gates need indexed qubits", span);
        };
        if c == t {
            let span = ops[1].span;
            return self.fail(DiagnosticKind::Operands, format!("qubit {c} used as both control and target"), span);
        }
        self.gates.push(match lowering {
            Lowering::Cx => GateRecord::cx(c, t),
            _ => GateRecord::cr1(c, t, p),
        });
        Ok(())
    }

    fn angle(&mut self) -> PResult<f64> {
        let start = self.peek().span;
        let v = self.expr()?;
        if !v.is_finite() {
            let end = self.toks[self.pos.saturating_sub(1)].span;
            return self.fail(DiagnosticKind::Syntax, "angle is not a finite number", start.to(end));
        }
        Ok(v)
    }

    fn expr(&mut self) -> PResult<f64> {
        let mut v = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    v += self.term()?;
                }
                Tok::Minus => {
                    self.next();
                    v -= self.term()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn term(&mut self) -> PResult<f64> {
        let mut v = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    v *= self.unary()?;
                }
                Tok::Slash => {
                    self.next();
                    v /= self.unary()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn unary(&mut self) -> PResult<f64> {
        match self.peek().tok {
            Tok::Minus => {
                self.next();
                Ok(-self.unary()?)
            }
            Tok::Plus => {
                self.next();
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<f64> {
        let t = self.next();
        match &t.tok {
            Tok::Number(v) => Ok(*v),
            Tok::Ident(s) if s == "pi" => Ok(PI),
            Tok::Ident(s) => self.fail(DiagnosticKind::Syntax, format!("unknown name `{s}` in expression"), t.span),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen, "to close parenthesis")?;
                Ok(v)
            }
            other => self.fail(DiagnosticKind::Syntax, format!("expected expression, found {}", other.describe()), t.span),
        }
    }
}
