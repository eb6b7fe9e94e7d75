//! Canonical textual form of [`HomeoSpec`].
//!
//! ```text
//! spec  := "rotation(" num ")"
//!        | "sine(" num ")"
//!        | "mobius(" num "," num "," num ")"      alpha, Re a, Im a
//!        | "pwl[" pair ("," pair)* "]"            pair := "(" num "," num ")"
//!        | "compose[" spec ("," spec)* "]"        applied left to right
//! ```
//!
//! Whitespace between tokens is ignored. Numbers use Rust float syntax, and
//! `Display` prints the shortest representation that parses back exactly.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{HomeoError, HomeoSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseHomeoError {
    #[error("at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("at column {column}: {source}")]
    Invalid {
        column: usize,
        #[source]
        source: HomeoError,
    },
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseHomeoError> {
        Err(ParseHomeoError::Syntax {
            column: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, token: char) -> Result<(), ParseHomeoError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len_utf8();
            Ok(())
        } else {
            self.err(format!("expected `{token}`"))
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn ident(&mut self) -> Result<&'a str, ParseHomeoError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected a map name");
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number(&mut self) -> Result<f64, ParseHomeoError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(rest.len());
        match rest[..len].parse::<f64>() {
            Ok(v) if len > 0 => {
                self.pos += len;
                Ok(v)
            }
            _ => self.err("expected a number"),
        }
    }

    fn args(&mut self, n: usize) -> Result<Vec<f64>, ParseHomeoError> {
        self.expect('(')?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(',')?;
            }
            out.push(self.number()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseHomeoError>,
    ) -> Result<Vec<T>, ParseHomeoError> {
        self.expect('[')?;
        let mut out = vec![item(self)?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(item(self)?);
        }
        self.expect(']')?;
        Ok(out)
    }

    fn spec(&mut self) -> Result<HomeoSpec, ParseHomeoError> {
        self.skip_ws();
        let column = self.pos + 1;
        let name = self.ident()?;
        let built = match name {
            "rotation" => {
                let a = self.args(1)?;
                HomeoSpec::rotation(a[0])
            }
            "sine" => {
                let a = self.args(1)?;
                HomeoSpec::sine(a[0])
            }
            "mobius" => {
                let a = self.args(3)?;
                HomeoSpec::mobius(a[0], a[1], a[2])
            }
            "pwl" => {
                let pairs = self.list(|p| {
                    let xy = p.args(2)?;
                    Ok((xy[0], xy[1]))
                })?;
                HomeoSpec::piecewise_linear(pairs)
            }
            "compose" => {
                let maps = self.list(Self::spec)?;
                HomeoSpec::compose(maps)
            }
            other => {
                self.pos = column - 1;
                return self.err(format!("unknown map family `{other}`"));
            }
        };
        built.map_err(|source| ParseHomeoError::Invalid { column, source })
    }
}

impl FromStr for HomeoSpec {
    type Err = ParseHomeoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { src: s, pos: 0 };
        let spec = parser.spec()?;
        parser.skip_ws();
        if parser.pos != s.len() {
            return parser.err("trailing input");
        }
        Ok(spec)
    }
}

impl fmt::Display for HomeoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomeoSpec::Rotation(r) => write!(f, "rotation({})", r.alpha),
            HomeoSpec::Sine(s) => write!(f, "sine({})", s.eps),
            HomeoSpec::Mobius(m) => write!(f, "mobius({}, {}, {})", m.alpha, m.re, m.im),
            HomeoSpec::PiecewiseLinear(p) => {
                f.write_str("pwl[")?;
                for (i, (x, y)) in p.breakpoints.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "({x},{y})")?;
                }
                f.write_str("]")
            }
            HomeoSpec::Composition(maps) => {
                f.write_str("compose[")?;
                for (i, m) in maps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl serde::Serialize for HomeoSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for HomeoSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
