//! Parser for the recursive-function notation:
//! `S`, `C[n]`, `P[i,n]`, `comp(f;g)`, `br(f1,...)`, `rec(f;g)`, `krec(f1,...;g)`, `mu(f)`,
//! `empty[m,n]`.

use super::RecFun;
use crate::parse::{Cursor, ParseError};

pub fn parse_recfun(text: &str) -> Result<RecFun, ParseError> {
    let mut c = Cursor::new(text);
    let e = recfun(&mut c)?;
    c.finish()?;
    let at = c.pos();
    e.signature()
        .map_err(|err| ParseError { offset: at, message: err.to_string() })?;
    Ok(e)
}

fn bracket_pair(c: &mut Cursor) -> Result<(usize, usize), ParseError> {
    c.expect('[')?;
    let a = c.number()?;
    c.expect(',')?;
    let b = c.number()?;
    c.expect(']')?;
    Ok((a, b))
}

fn list(c: &mut Cursor) -> Result<Vec<RecFun>, ParseError> {
    let mut out = vec![recfun(c)?];
    while c.eat(',') {
        out.push(recfun(c)?);
    }
    Ok(out)
}

pub(crate) fn recfun(c: &mut Cursor) -> Result<RecFun, ParseError> {
    c.skip_ws();
    let start = c.pos();
    let word: String = c
        .rest()
        .chars()
        .take_while(|ch| ch.is_ascii_alphabetic())
        .collect();
    if word.is_empty() {
        return Err(c.unexpected("a function"));
    }
    c.eat_word(&word);
    let e = match word.as_str() {
        "S" => RecFun::S,
        "C" => {
            c.expect('[')?;
            let n = c.number()?;
            c.expect(']')?;
            RecFun::Const(n)
        }
        "P" => {
            let (i, n) = bracket_pair(c)?;
            RecFun::Proj(i, n)
        }
        "empty" => {
            let (m, n) = bracket_pair(c)?;
            RecFun::Empty(m, n)
        }
        "comp" | "rec" => {
            c.expect('(')?;
            let f = recfun(c)?;
            c.expect(';')?;
            let g = recfun(c)?;
            c.expect(')')?;
            if word == "comp" {
                RecFun::comp(f, g)
            } else {
                RecFun::prim_rec(f, g)
            }
        }
        "br" => {
            c.expect('(')?;
            let fs = list(c)?;
            c.expect(')')?;
            RecFun::Bracket(fs)
        }
        "krec" => {
            c.expect('(')?;
            let fs = list(c)?;
            c.expect(';')?;
            let g = recfun(c)?;
            c.expect(')')?;
            RecFun::k_rec(fs, g)
        }
        "mu" => {
            c.expect('(')?;
            let f = recfun(c)?;
            c.expect(')')?;
            RecFun::mu(f)
        }
        other => {
            return Err(ParseError { offset: start, message: format!("unknown function '{other}'") })
        }
    };
    Ok(e)
}
