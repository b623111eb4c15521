//! Line-oriented circuit documents.
//!
//! ```text
//! # comment
//! description free text
//! lmax 4
//! paths a1 b1 a2 b2
//! photon A
//! photon B
//! stage p_cos photon=A paths=a1,b1 q=1/2 impl=decomposed
//! ```
//!
//! Diagnostics carry 1-based line and column numbers (columns count
//! characters, not bytes).

use std::fmt;

use thiserror::Error;

use crate::elements::{Angle, Element, HalfInt, Photon, Site};
use crate::gates::{Gate, Implementation};
use crate::state::{PathLabel, Polarization, DEFAULT_LMAX};

use super::{Circuit, Stage, StageOp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { expected: Vec<String>, found: String },
    Semantic { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                write!(f, "syntax error: expected ")?;
                match expected.as_slice() {
                    [one] => write!(f, "{one}")?,
                    many => write!(f, "one of {}", many.join(", "))?,
                }
                write!(f, ", found {found}")
            }
            ParseErrorKind::Semantic { message } => write!(f, "semantic error: {message}"),
        }
    }
}

impl ParseError {
    pub fn is_syntax(&self) -> bool {
        matches!(self.kind, ParseErrorKind::Syntax { .. })
    }
}

const DIRECTIVES: [&str; 5] = ["lmax", "paths", "photon", "description", "stage"];

const KINDS: [&str; 16] = [
    "qwp", "hwp", "qp", "spp", "dp", "pp", "mirror", "bs", "pbs", "oam_sorter", "dl", "p_cos",
    "o_cps", "oh", "dp_stage", "sppm",
];

/// Keys a stage kind accepts beyond `photon` and `paths`, and which of them are required.
fn kind_keys(kind: &str) -> (&'static [&'static str], &'static [&'static str]) {
    match kind {
        "hwp" => (&["theta"], &["theta"]),
        "qp" => (&["q"], &["q"]),
        "spp" => (&["l"], &["l"]),
        "dp" => (&["alpha"], &["alpha"]),
        "pp" => (&["phi", "pol"], &["phi"]),
        "p_cos" => (&["q", "impl"], &["q"]),
        "o_cps" | "dp_stage" => (&["impl"], &[]),
        "oh" => (&["aux", "impl"], &[]),
        _ => (&[], &[]),
    }
}

fn two_path(kind: &str) -> bool {
    matches!(kind, "bs" | "pbs" | "oam_sorter" | "o_cps")
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut col = 0;
    for (byte, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push(Token { text: &line[b..byte], col: c });
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        out.push(Token { text: &line[b..], col: c });
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser {
    line: usize,
    description: Option<String>,
    lmax: Option<i32>,
    paths: Option<Vec<PathLabel>>,
    photons: Vec<Photon>,
    stages: Vec<Stage>,
}

impl Parser {
    fn syntax(&self, col: usize, expected: &[&str], found: &str) -> ParseError {
        ParseError {
            line: self.line,
            column: col,
            kind: ParseErrorKind::Syntax {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: if found.is_empty() {
                    "end of line".into()
                } else {
                    format!("`{found}`")
                },
            },
        }
    }

    fn semantic(&self, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: col,
            kind: ParseErrorKind::Semantic {
                message: message.into(),
            },
        }
    }

    fn end_col(toks: &[Token<'_>]) -> usize {
        toks.last()
            .map(|t| t.col + t.text.chars().count())
            .unwrap_or(1)
    }

    fn directive(&mut self, raw: &str, toks: &[Token<'_>]) -> Result<(), ParseError> {
        let head = toks[0];
        let args = &toks[1..];
        match head.text {
            "description" => {
                if self.description.is_some() {
                    return Err(self.semantic(head.col, "duplicate `description`"));
                }
                let byte = raw.find("description").unwrap_or(0) + "description".len();
                let text = raw[byte..].trim();
                if text.is_empty() {
                    return Err(self.syntax(Self::end_col(toks), &["description text"], ""));
                }
                self.description = Some(text.to_string());
            }
            "lmax" => {
                if self.lmax.is_some() {
                    return Err(self.semantic(head.col, "duplicate `lmax`"));
                }
                if !self.stages.is_empty() {
                    return Err(self.semantic(head.col, "`lmax` must come before the first stage"));
                }
                let arg = match args {
                    [a] => *a,
                    [] => return Err(self.syntax(Self::end_col(toks), &["integer"], "")),
                    [_, extra, ..] => return Err(self.syntax(extra.col, &["end of line"], extra.text)),
                };
                let v: i32 = arg
                    .text
                    .parse()
                    .map_err(|_| self.syntax(arg.col, &["integer"], arg.text))?;
                if v < 1 {
                    return Err(self.semantic(arg.col, format!("lmax must be at least 1, got {v}")));
                }
                self.lmax = Some(v);
            }
            "paths" => {
                if self.paths.is_some() {
                    return Err(self.semantic(head.col, "duplicate `paths`"));
                }
                if args.is_empty() {
                    return Err(self.syntax(Self::end_col(toks), &["path name"], ""));
                }
                let mut list: Vec<PathLabel> = Vec::new();
                for a in args {
                    if !is_ident(a.text) {
                        return Err(self.syntax(a.col, &["path name"], a.text));
                    }
                    let p = PathLabel::new(a.text);
                    if list.contains(&p) {
                        return Err(self.semantic(a.col, format!("path `{}` declared twice", a.text)));
                    }
                    list.push(p);
                }
                self.paths = Some(list);
            }
            "photon" => {
                let arg = match args {
                    [a] => *a,
                    [] => return Err(self.syntax(Self::end_col(toks), &["A", "B"], "")),
                    [_, extra, ..] => return Err(self.syntax(extra.col, &["end of line"], extra.text)),
                };
                let p: Photon = arg
                    .text
                    .parse()
                    .map_err(|_| self.syntax(arg.col, &["A", "B"], arg.text))?;
                if self.photons.contains(&p) {
                    return Err(self.semantic(arg.col, format!("photon {p} declared twice")));
                }
                self.photons.push(p);
            }
            "stage" => self.stage(head, args)?,
            other => return Err(self.syntax(head.col, &DIRECTIVES, other)),
        }
        Ok(())
    }

    fn stage(&mut self, head: Token<'_>, args: &[Token<'_>]) -> Result<(), ParseError> {
        let kind_tok = match args.first() {
            Some(t) => *t,
            None => return Err(self.syntax(head.col + 5, &["stage kind"], "")),
        };
        let kind = kind_tok.text;
        if !KINDS.contains(&kind) {
            return Err(self.syntax(kind_tok.col, &KINDS, kind));
        }
        let paths_decl = match &self.paths {
            Some(p) => p.clone(),
            None => return Err(self.semantic(head.col, "stage appears before `paths` is declared")),
        };
        let lmax = *self.lmax.get_or_insert(DEFAULT_LMAX);

        let (extra, required) = kind_keys(kind);
        let mut allowed: Vec<&str> = vec!["photon", "paths"];
        allowed.extend_from_slice(extra);
        let mut kv: Vec<(&str, Token<'_>, Token<'_>)> = Vec::new();
        for t in &args[1..] {
            let Some((k, v)) = t.text.split_once('=') else {
                return Err(self.syntax(t.col, &["key=value"], t.text));
            };
            if !allowed.contains(&k) {
                return Err(self.syntax(t.col, &allowed, k));
            }
            let vcol = t.col + k.chars().count() + 1;
            if v.is_empty() {
                return Err(self.syntax(vcol, &["value"], ""));
            }
            if kv.iter().any(|(key, _, _)| *key == k) {
                return Err(self.semantic(t.col, format!("duplicate key `{k}`")));
            }
            kv.push((k, Token { text: k, col: t.col }, Token { text: v, col: vcol }));
        }
        let get = |k: &str| kv.iter().find(|(key, _, _)| *key == k).map(|(_, _, v)| *v);
        let end = Self::end_col(args);
        for req in ["photon", "paths"].iter().chain(required) {
            if get(req).is_none() {
                return Err(self.semantic(end, format!("stage `{kind}` is missing `{req}=`")));
            }
        }

        let ptok = get("photon").unwrap();
        let photon: Photon = ptok
            .text
            .parse()
            .map_err(|_| self.syntax(ptok.col, &["A", "B"], ptok.text))?;
        if !self.photons.contains(&photon) {
            return Err(self.semantic(ptok.col, format!("photon {photon} is not declared")));
        }

        let pathtok = get("paths").unwrap();
        let mut site_paths = Vec::new();
        let mut col = pathtok.col;
        for name in pathtok.text.split(',') {
            if !is_ident(name) {
                return Err(self.syntax(col, &["path name"], name));
            }
            let p = PathLabel::new(name);
            if !paths_decl.contains(&p) {
                return Err(self.semantic(col, format!("undeclared path `{name}`")));
            }
            site_paths.push(p);
            col += name.chars().count() + 1;
        }
        if two_path(kind) && site_paths.len() != 2 {
            return Err(self.semantic(
                pathtok.col,
                format!("`{kind}` needs exactly two paths, got {}", site_paths.len()),
            ));
        }

        let angle = |key: &str| -> Result<Angle, ParseError> {
            let t = get(key).unwrap();
            t.text
                .parse::<Angle>()
                .map_err(|_| self.syntax(t.col, &["angle such as pi/8, -pi/4 or 0.5"], t.text))
        };
        let charge = || -> Result<HalfInt, ParseError> {
            let t = get("q").unwrap();
            let q: HalfInt = t
                .text
                .parse()
                .map_err(|_| self.semantic(t.col, format!("topological charge `{}` is not a half-integer", t.text)))?;
            if q.twice().abs() > lmax {
                return Err(self.semantic(
                    t.col,
                    format!("OAM shift 2q = {} exceeds lmax = {lmax}", q.twice()),
                ));
            }
            Ok(q)
        };

        let op = match kind {
            "qwp" => StageOp::Element(Element::Qwp),
            "hwp" => StageOp::Element(Element::Hwp { theta: angle("theta")? }),
            "qp" => StageOp::Element(Element::Qp { q: charge()? }),
            "spp" => {
                let t = get("l").unwrap();
                let l: i32 = t.text.parse().map_err(|_| self.syntax(t.col, &["integer"], t.text))?;
                if l.abs() > lmax {
                    return Err(self.semantic(t.col, format!("OAM shift {l} exceeds lmax = {lmax}")));
                }
                StageOp::Element(Element::Spp { l })
            }
            "dp" => StageOp::Element(Element::Dp { alpha: angle("alpha")? }),
            "pp" => {
                let pol = match get("pol") {
                    None => None,
                    Some(t) => Some(match t.text {
                        "H" => Polarization::H,
                        "V" => Polarization::V,
                        other => return Err(self.syntax(t.col, &["H", "V"], other)),
                    }),
                };
                StageOp::Element(Element::Pp { phi: angle("phi")?, pol })
            }
            "mirror" => StageOp::Element(Element::Mirror),
            "bs" => StageOp::Element(Element::Bs),
            "pbs" => StageOp::Element(Element::Pbs),
            "oam_sorter" => StageOp::Element(Element::OamSorter),
            "dl" => StageOp::Element(Element::DelayLine),
            "p_cos" => StageOp::Gate(Gate::PCos { q: charge()? }),
            "o_cps" => StageOp::Gate(Gate::OCps),
            "oh" => {
                let aux = match get("aux") {
                    None => None,
                    Some(t) => {
                        let p = PathLabel::new(t.text);
                        if !paths_decl.contains(&p) {
                            return Err(self.semantic(t.col, format!("undeclared path `{}`", t.text)));
                        }
                        Some(p)
                    }
                };
                StageOp::Gate(Gate::Oh { aux })
            }
            "dp_stage" => StageOp::Gate(Gate::DpStage),
            "sppm" => StageOp::Gate(Gate::Sppm),
            _ => unreachable!("kind list checked above"),
        };
        let implementation = match get("impl") {
            None => None,
            Some(t) => Some(
                t.text
                    .parse::<Implementation>()
                    .map_err(|_| self.syntax(t.col, &["canonical", "decomposed"], t.text))?,
            ),
        };
        self.stages.push(Stage {
            op,
            site: Site {
                photon,
                paths: site_paths,
            },
            implementation,
        });
        Ok(())
    }
}

/// Parses and structurally checks a circuit document.
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut p = Parser {
        line: 0,
        description: None,
        lmax: None,
        paths: None,
        photons: Vec::new(),
        stages: Vec::new(),
    };
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        last_line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let toks = tokens(content);
        if toks.is_empty() {
            continue;
        }
        p.directive(content, &toks)?;
    }
    p.line = last_line + 1;
    let paths = p
        .paths
        .clone()
        .ok_or_else(|| p.semantic(1, "document never declares `paths`"))?;
    Ok(Circuit {
        description: p.description,
        lmax: p.lmax.unwrap_or(DEFAULT_LMAX),
        paths,
        photons: p.photons,
        stages: p.stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "lmax 4\npaths a1 a2 b1 b2\nphoton A\nphoton B\n";

    fn err(text: &str) -> ParseError {
        parse_circuit(text).unwrap_err()
    }

    #[test]
    fn minimal_document() {
        let c = parse_circuit(&format!("{HEADER}stage p_cos photon=A paths=a1 q=1/2\n")).unwrap();
        assert_eq!(c.stages.len(), 1);
        assert_eq!(c.lmax, 4);
        assert_eq!(c.photons, [Photon::A, Photon::B]);
    }

    #[test]
    fn undeclared_path_is_named() {
        let e = err(&format!("{HEADER}stage hwp photon=A paths=z9 theta=pi/8\n"));
        assert_eq!(e.line, 5);
        assert_eq!(e.column, 26);
        assert!(e.to_string().contains("z9"), "{e}");
        assert!(!e.is_syntax());
    }

    #[test]
    fn unknown_key_rejected() {
        let e = err(&format!("{HEADER}stage qwp photon=A paths=a1 angle=pi\n"));
        assert!(e.is_syntax());
        assert_eq!(e.column, 29);
    }

    #[test]
    fn unknown_directive_lists_expected() {
        let e = err("lamx 4\n");
        match e.kind {
            ParseErrorKind::Syntax { expected, found } => {
                assert!(expected.contains(&"lmax".to_string()));
                assert_eq!(found, "`lamx`");
            }
            _ => panic!("expected syntax error"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let c = parse_circuit("# hi\n\n   \npaths a # trailing\n").unwrap();
        assert_eq!(c.paths, [PathLabel::new("a")]);
        assert_eq!(c.lmax, DEFAULT_LMAX);
    }

    #[test]
    fn non_half_integer_charge() {
        let e = err(&format!("{HEADER}stage qp photon=A paths=a1 q=1/3\n"));
        assert!(e.to_string().contains("half-integer"));
    }

    #[test]
    fn columns_count_characters() {
        let e = err("paths ℓ1\n");
        assert_eq!(e.column, 7);
    }
}
