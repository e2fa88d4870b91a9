//! Recursive-descent parsers for the tree, forest and element notation.
//!
//! Grammar:
//! ```text
//! element := term (('+' | '-') term)*  |  '-' term ...
//! term    := [rational] forest | rational
//! forest  := '1' | tree ('*' tree)*
//! tree    := label ['(' input (',' input)* ')']
//! input   := tree | '_' | '#' digits | 'in(' recfun ')'
//! ```

use num_traits::One;
use thiserror::Error;

use crate::element::Element;
use crate::forest::{Forest, Mode};
use crate::recfun::RecFun;
use crate::scalar::Q;
use crate::tree::{Input, Label, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(w) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{c}'")))
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { offset: self.pos, message: message.into() }
    }

    pub(crate) fn unexpected(&mut self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(c) => self.error(format!("expected {wanted}, found '{c}'")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub(crate) fn number(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let digits: &str = {
            let r = self.rest();
            let n = r.bytes().take_while(u8::is_ascii_digit).count();
            &r[..n]
        };
        if digits.is_empty() {
            return Err(self.unexpected("a number"));
        }
        let v = digits.parse().map_err(|_| self.error("number too large"))?;
        self.pos += digits.len();
        Ok(v)
    }

    pub(crate) fn rational(&mut self) -> Result<Q, ParseError> {
        let start = self.pos;
        let n = self.number()?;
        let mut value = Q::from_integer(n.into());
        if self.eat('/') {
            let d = self.number()?;
            if d == 0 {
                return Err(ParseError { offset: start, message: "zero denominator".into() });
            }
            value /= Q::from_integer(d.into());
        }
        Ok(value)
    }

    pub(crate) fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("end of input")),
        }
    }
}

/// Parses a single tree.
pub fn parse_tree(text: &str) -> Result<Tree, ParseError> {
    let mut c = Cursor::new(text);
    let t = tree(&mut c, &mut Vec::new())?;
    c.finish()?;
    Ok(t)
}

/// Parses a tree whose input flags are written `#1, #2, …`; the markers must appear in
/// planar order. Returns the tree with unlabeled flags.
pub fn parse_marked_tree(text: &str) -> Result<Tree, ParseError> {
    let mut c = Cursor::new(text);
    let mut markers = Vec::new();
    let t = tree(&mut c, &mut markers)?;
    c.finish()?;
    for (k, (offset, m)) in markers.iter().enumerate() {
        if *m != k + 1 {
            return Err(ParseError {
                offset: *offset,
                message: format!("flag marker #{m} out of order, expected #{}", k + 1),
            });
        }
    }
    Ok(t)
}

pub fn parse_forest(text: &str) -> Result<Forest, ParseError> {
    let mut c = Cursor::new(text);
    let f = forest(&mut c)?;
    c.finish()?;
    Ok(f)
}

/// Parses a linear combination of forests.
pub fn parse_element(text: &str, mode: Mode) -> Result<Element, ParseError> {
    let mut c = Cursor::new(text);
    let mut out = Element::zero(mode);
    let mut first = true;
    loop {
        let sign = if c.eat('-') {
            -Q::one()
        } else if c.eat('+') || first {
            Q::one()
        } else {
            return Err(c.unexpected("'+' or '-'"));
        };
        first = false;
        let (coef, f) = term(&mut c)?;
        out.add_term(f, sign * coef);
        if c.peek().is_none() {
            break;
        }
    }
    Ok(out)
}

fn term(c: &mut Cursor) -> Result<(Q, Forest), ParseError> {
    match c.peek() {
        Some(d) if d.is_ascii_digit() => {
            let coef = c.rational()?;
            // A bare coefficient multiplies the unit; "1" followed by nothing is the unit.
            match c.peek() {
                Some(l) if Label::from_symbol(l).is_some() => Ok((coef, forest(c)?)),
                _ => Ok((coef, Forest::unit())),
            }
        }
        _ => Ok((Q::one(), forest(c)?)),
    }
}

fn forest(c: &mut Cursor) -> Result<Forest, ParseError> {
    if c.peek() == Some('1') {
        c.bump();
        return Ok(Forest::unit());
    }
    let mut trees = vec![tree(c, &mut Vec::new())?];
    while c.eat('*') {
        trees.push(tree(c, &mut Vec::new())?);
    }
    Ok(Forest::new(trees))
}

fn label(c: &mut Cursor) -> Result<Label, ParseError> {
    let at = {
        c.skip_ws();
        c.pos()
    };
    match c.peek() {
        Some(ch) if ch.is_alphabetic() => match Label::from_symbol(ch) {
            Some(l) => {
                c.bump();
                Ok(l)
            }
            None => Err(ParseError { offset: at, message: format!("unknown label '{ch}'") }),
        },
        _ => Err(c.unexpected("a label")),
    }
}

fn tree(c: &mut Cursor, markers: &mut Vec<(usize, usize)>) -> Result<Tree, ParseError> {
    let l = label(c)?;
    if !c.eat('(') {
        return Ok(Tree::leaf(l));
    }
    let mut inputs = vec![input(c, markers)?];
    while c.eat(',') {
        inputs.push(input(c, markers)?);
    }
    c.expect(')')?;
    Ok(Tree::new(l, inputs))
}

fn input(c: &mut Cursor, markers: &mut Vec<(usize, usize)>) -> Result<Input, ParseError> {
    match c.peek() {
        Some('_') => {
            c.bump();
            Ok(Input::Flag(None))
        }
        Some('#') => {
            let at = c.pos();
            c.bump();
            let n = c.number()?;
            markers.push((at, n));
            Ok(Input::Flag(None))
        }
        Some('i') => {
            c.bump();
            if !c.eat_word("n(") {
                return Err(c.error("expected 'in(' for a labeled flag"));
            }
            let f: RecFun = crate::recfun::parse::recfun(c)?;
            c.expect(')')?;
            Ok(Input::Flag(Some(f)))
        }
        Some(_) => Ok(Input::Child(tree(c, markers)?)),
        None => Err(c.unexpected("an input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, q_frac};

    #[test]
    fn trees_round_trip() {
        for s in ["b", "b(c,r)", "m(b(c),_)", "c(in(S),in(rec(S;comp(P[3,3];S))))"] {
            assert_eq!(parse_tree(s).unwrap().to_string(), s);
        }
        assert_eq!(parse_tree(" b ( c , r ) ").unwrap().to_string(), "b(c,r)");
    }

    #[test]
    fn unterminated_input_reports_offset() {
        let e = parse_tree("b(c,").unwrap_err();
        assert_eq!(e.offset, 4);
    }

    #[test]
    fn unknown_label() {
        let e = parse_tree("b(x)").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(e.message.contains("unknown label"));
    }

    #[test]
    fn elements() {
        let m = Mode::Commutative;
        let x = parse_element("2 b*c - 1/2 c*b + 3", m).unwrap();
        let bc = Forest::new(vec![Tree::leaf(Label::B), Tree::leaf(Label::C)]);
        assert_eq!(x.coef(&bc), q_frac(3, 2));
        assert_eq!(x.constant_term(), q(3));
        assert_eq!(parse_element("1", m).unwrap(), Element::one(m));
        assert_eq!(parse_element("-b", m).unwrap().coef(&Forest::single(Tree::leaf(Label::B))), q(-1));
    }

    #[test]
    fn marked_flags_must_be_in_order() {
        assert!(parse_marked_tree("b(#1,c(#2,#3))").is_ok());
        assert!(parse_marked_tree("b(#2,#1)").is_err());
    }
}
