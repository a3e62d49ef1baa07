//! Tokens shared by the schema and rule languages. `**` starts a comment
//! running to the end of the line.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    /// `?name`
    Var(String),
    /// `*name`
    Gap(String),
    /// `...` or `…`
    Ellipsis,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Colon,
    Eq,
    EqEq,
    Neq,
    Tilde,
    NotTilde,
    Bang,
    Arrow,
    PlusEq,
    MinusEq,
    Minus,
    At,
    Pipe,
    Hash,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Var(s) => write!(f, "`?{s}`"),
            Tok::Gap(s) => write!(f, "`*{s}`"),
            other => {
                let s = match other {
                    Tok::Ellipsis => "...",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::Comma => ",",
                    Tok::Dot => ".",
                    Tok::Colon => ":",
                    Tok::Eq => "=",
                    Tok::EqEq => "==",
                    Tok::Neq => "!=",
                    Tok::Tilde => "~",
                    Tok::NotTilde => "!~",
                    Tok::Bang => "!",
                    Tok::Arrow => "==>",
                    Tok::PlusEq => "+=",
                    Tok::MinusEq => "-=",
                    Tok::Minus => "-",
                    Tok::At => "@",
                    Tok::Pipe => "|",
                    Tok::Hash => "#",
                    _ => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, (Pos, String)> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: li + 1, col: i + 1 };
            let at = |k: usize| chars.get(i + k).copied();
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '*' && at(1) == Some('*') {
                break;
            }
            let (tok, len) = match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                ',' => (Tok::Comma, 1),
                ':' => (Tok::Colon, 1),
                '~' => (Tok::Tilde, 1),
                '@' => (Tok::At, 1),
                '|' => (Tok::Pipe, 1),
                '#' => (Tok::Hash, 1),
                '…' => (Tok::Ellipsis, 1),
                '.' if at(1) == Some('.') && at(2) == Some('.') => (Tok::Ellipsis, 3),
                '.' => (Tok::Dot, 1),
                '=' if at(1) == Some('=') && at(2) == Some('>') => (Tok::Arrow, 3),
                '=' if at(1) == Some('=') => (Tok::EqEq, 2),
                '=' => (Tok::Eq, 1),
                '!' if at(1) == Some('=') => (Tok::Neq, 2),
                '!' if at(1) == Some('~') => (Tok::NotTilde, 2),
                '!' => (Tok::Bang, 1),
                '+' if at(1) == Some('=') => (Tok::PlusEq, 2),
                '-' if at(1) == Some('=') => (Tok::MinusEq, 2),
                '-' if at(1).is_some_and(|d| d.is_ascii_digit()) => {
                    let end = (i + 1..chars.len()).find(|&j| !chars[j].is_ascii_digit()).unwrap_or(chars.len());
                    let s: String = chars[i..end].iter().collect();
                    (Tok::Int(s.parse().map_err(|_| (pos, format!("bad integer `{s}`")))?), end - i)
                }
                '-' => (Tok::Minus, 1),
                '"' => {
                    let mut s = String::new();
                    let mut j = i + 1;
                    loop {
                        match chars.get(j) {
                            None => return Err((pos, "unterminated string".into())),
                            Some('"') => break,
                            Some('\\') if chars.get(j + 1).is_some() => {
                                s.push(chars[j + 1]);
                                j += 2;
                            }
                            Some(&ch) => {
                                s.push(ch);
                                j += 1;
                            }
                        }
                    }
                    (Tok::Str(s), j + 1 - i)
                }
                '?' | '*' => {
                    let end = (i + 1..chars.len()).find(|&j| !ident_char(chars[j])).unwrap_or(chars.len());
                    if end == i + 1 {
                        return Err((pos, format!("`{c}` must be followed by a name")));
                    }
                    let name: String = chars[i + 1..end].iter().collect();
                    (if c == '?' { Tok::Var(name) } else { Tok::Gap(name) }, end - i)
                }
                c if ident_char(c) => {
                    let end = (i..chars.len()).find(|&j| !ident_char(chars[j])).unwrap_or(chars.len());
                    let s: String = chars[i..end].iter().collect();
                    let tok = match s.parse::<i64>() {
                        Ok(n) if s.chars().all(|d| d.is_ascii_digit()) => Tok::Int(n),
                        _ => Tok::Ident(s),
                    };
                    (tok, end - i)
                }
                other => return Err((pos, format!("unexpected character `{other}`"))),
            };
            out.push(Token { tok, pos });
            i += len;
        }
    }
    Ok(out)
}

/// Cursor over a token list.
pub struct Cursor {
    toks: Vec<Token>,
    at: usize,
    end: Pos,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        let end = toks.last().map_or(Pos { line: 1, col: 1 }, |t| Pos {
            line: t.pos.line,
            col: t.pos.col + 1,
        });
        Cursor { toks, at: 0, end }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    pub fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.at + 1).map(|t| &t.tok)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |t| t.pos)
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.tok.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }
}
