//! Text syntax for formulas.
//!
//! ```text
//! formula  := leads
//! leads    := until ( "~>" window bound? leads )?
//! until    := or ( "U" window bound? until )?
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "!" unary | "F" "[" hi "]" bound? leads | primary
//! primary  := IDENT | "(" leads ")"
//! window   := "[" INT "," ( INT | "inf" ) "]"
//! bound    := "{" ( ">=" | ">" | "<=" | "<" ) NUMBER "}"
//! ```
//!
//! `!` binds tightest, then `&`, then `|`, then `U`, and `~>` loosest. Both
//! temporal operators associate to the right, so `a ~>[1,1] b ~>[1,1] c` is
//! `a ~>[1,1] (b ~>[1,1] c)`, while `a U[0,2] b ~>[1,1] c` is
//! `(a U[0,2] b) ~>[1,1] c`. `F[hi] f` extends as far right as possible.
//! `U` and `F` are operators only when directly followed by `[`, otherwise
//! they are ordinary atom names. Identifiers may contain `.` so that
//! discretized atoms such as `X.up` need no quoting.

use crate::error::{Error, ParseError, Result};
use crate::formula::{Comparator, Formula, Horizon, ProbBound, WindowBound};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Bang,
    Amp,
    Pipe,
    LeadsTo,
    Cmp(Comparator),
    Eof,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) => s.clone(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBracket => "[".into(),
            Tok::RBracket => "]".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Comma => ",".into(),
            Tok::Bang => "!".into(),
            Tok::Amp => "&".into(),
            Tok::Pipe => "|".into(),
            Tok::LeadsTo => "~>".into(),
            Tok::Cmp(c) => c.symbol().into(),
            Tok::Eof => "<eof>".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> std::result::Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        let next = chars.get(i + 1).copied();
        let (tok, width) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '!' => (Tok::Bang, 1),
            '&' => (Tok::Amp, 1),
            '|' => (Tok::Pipe, 1),
            '~' if next == Some('>') => (Tok::LeadsTo, 2),
            '>' if next == Some('=') => (Tok::Cmp(Comparator::Ge), 2),
            '>' => (Tok::Cmp(Comparator::Gt), 1),
            '<' if next == Some('=') => (Tok::Cmp(Comparator::Le), 2),
            '<' => (Tok::Cmp(Comparator::Lt), 1),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '.')
                {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().collect()), j - i)
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                (Tok::Number(chars[i..j].iter().collect()), j - i)
            }
            other => {
                return Err(ParseError {
                    line,
                    column: col,
                    token: other.to_string(),
                    message: "unexpected character".into(),
                })
            }
        };
        push(&mut out, tok);
        i += width;
        col += width;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = std::result::Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        self.error_at(&self.toks[self.pos], message)
    }

    fn error_at(&self, at: &Spanned, message: impl Into<String>) -> ParseError {
        ParseError {
            line: at.line,
            column: at.column,
            token: at.tok.text(),
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<Spanned> {
        if *self.peek() == want {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {what}")))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw) && *self.peek_at(1) == Tok::LBracket
    }

    // `~>` is the loosest operator and `U` binds one level tighter, so a
    // until may appear as a leads-to cause without parentheses. Both are
    // right-associative.
    fn leads(&mut self) -> PResult<Formula> {
        let cause = self.until()?;
        if *self.peek() == Tok::LeadsTo {
            let op = self.bump();
            let window = self.window()?;
            self.check_window(&op, window, true)?;
            let bound = self.opt_bound()?;
            let effect = self.leads()?;
            return Ok(Formula::LeadsTo {
                window,
                cause: Box::new(cause),
                effect: Box::new(effect),
                bound,
            });
        }
        Ok(cause)
    }

    fn until(&mut self) -> PResult<Formula> {
        let left = self.or()?;
        if self.is_keyword("U") {
            let op = self.bump();
            let window = self.window()?;
            self.check_window(&op, window, false)?;
            let bound = self.opt_bound()?;
            let right = self.until()?;
            return Ok(Formula::Until {
                window,
                left: Box::new(left),
                right: Box::new(right),
                bound,
            });
        }
        Ok(left)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if self.is_keyword("F") {
            self.bump();
            self.expect(Tok::LBracket, "`[`")?;
            let hi = self.horizon()?;
            self.expect(Tok::RBracket, "`]`")?;
            let bound = self.opt_bound()?;
            let inner = self.leads()?;
            return Ok(Formula::Finally {
                hi,
                inner: Box::new(inner),
                bound,
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Atom(name))
            }
            Tok::LParen => {
                self.bump();
                let f = self.leads()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Eof => Err(self.error_here("unexpected end of input")),
            _ => Err(self.error_here("expected an atom, `!`, `F[..]` or `(`")),
        }
    }

    fn integer(&mut self) -> PResult<usize> {
        let at = self.toks[self.pos].clone();
        match &at.tok {
            Tok::Number(s) => {
                let v = s
                    .parse::<usize>()
                    .map_err(|_| self.error_at(&at, "expected a non-negative integer"))?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.error_at(&at, "expected a non-negative integer")),
        }
    }

    fn horizon(&mut self) -> PResult<Horizon> {
        if matches!(self.peek(), Tok::Ident(s) if s == "inf") {
            self.bump();
            return Ok(Horizon::Infinite);
        }
        Ok(Horizon::Finite(self.integer()?))
    }

    fn window(&mut self) -> PResult<WindowBound> {
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.integer()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.horizon()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(WindowBound { lo, hi })
    }

    fn check_window(&self, op: &Spanned, w: WindowBound, leads_to: bool) -> PResult<()> {
        if let Horizon::Finite(hi) = w.hi {
            if w.lo > hi {
                return Err(self.error_at(
                    op,
                    format!("window lower bound {} exceeds upper bound {hi}", w.lo),
                ));
            }
        }
        if leads_to && w.lo == 0 {
            return Err(self.error_at(op, "leads-to window must start at 1 or later"));
        }
        Ok(())
    }

    fn opt_bound(&mut self) -> PResult<Option<ProbBound>> {
        if *self.peek() != Tok::LBrace {
            return Ok(None);
        }
        self.bump();
        let cmp = match self.peek() {
            Tok::Cmp(c) => *c,
            _ => return Err(self.error_here("expected a comparator (>=, >, <=, <)")),
        };
        self.bump();
        let at = self.toks[self.pos].clone();
        let p = match &at.tok {
            Tok::Number(s) => s
                .parse::<f64>()
                .map_err(|_| self.error_at(&at, "malformed probability"))?,
            _ => return Err(self.error_at(&at, "expected a probability")),
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(self.error_at(&at, "probability outside [0,1]"));
        }
        self.bump();
        self.expect(Tok::RBrace, "`}`")?;
        Ok(Some(ProbBound { cmp, p }))
    }
}

/// Parse a single formula.
pub fn parse(text: &str) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.leads()?;
    if *p.peek() != Tok::Eof {
        return Err(Error::Parse(p.error_here("unexpected trailing input")));
    }
    Ok(f)
}

/// Parse a hypothesis file: one formula per line, `#` starts a comment,
/// blank lines are skipped. Error positions refer to the file's lines.
pub fn parse_hypothesis_file(text: &str) -> Result<Vec<Formula>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        match parse(line) {
            Ok(f) => out.push(f),
            Err(Error::Parse(mut e)) => {
                e.line = idx + 1;
                return Err(Error::Parse(e));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
