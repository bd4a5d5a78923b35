//! A small arithmetic language over the degree variable `k`.
//!
//! ```text
//! expr    := or ( '?' expr ':' expr )?
//! or      := and ( '||' and )*
//! and     := cmp ( '&&' cmp )*
//! cmp     := sum ( ('=='|'!='|'<'|'<='|'>'|'>=') sum )?
//! sum     := product ( ('+'|'-') product )*
//! product := unary ( ('*'|'/'|'%') unary )*
//! unary   := ('-'|'!') unary | power
//! power   := atom ( '^' unary )?
//! atom    := number | 'k' | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Booleans are represented as `1.0` / `0.0`. Functions: `ln`, `log`, `exp`,
//! `sqrt`, `abs`, `floor`, `ceil`, `min`, `max`, `if(cond, a, b)`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    K,
    Neg(Box<Node>),
    Not(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
    Cond(Box<Node>, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Pow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Ln,
    Exp,
    Sqrt,
    Abs,
    Floor,
    Ceil,
    Min,
    Max,
    If,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "ln" | "log" => (Func::Ln, 1),
            "exp" => (Func::Exp, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "floor" => (Func::Floor, 1),
            "ceil" => (Func::Ceil, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "if" => (Func::If, 3),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    const OPS: [&str; 22] = [
        "&&", "||", "==", "!=", "<=", ">=", "**", "<", ">", "+", "-", "*", "/", "%", "^", "(",
        ")", ",", "!", "?", ":", "=",
    ];
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let v = text
                .parse::<f64>()
                .map_err(|_| format!("bad number `{text}`"))?;
            out.push(Tok::Num(v));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push(Tok::Ident(src[start..i].to_string()));
            continue;
        }
        for op in OPS {
            if src[i..].starts_with(op) {
                // `=` alone is accepted as equality, `**` as power.
                let canonical = match op {
                    "=" => "==",
                    "**" => "^",
                    other => other,
                };
                out.push(Tok::Op(canonical));
                i += op.len();
                continue 'outer;
            }
        }
        return Err(format!("unexpected character `{c}` at offset {i}"));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(op)) => Some(op),
            _ => None,
        }
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), String> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(format!("expected `{op}` at token {}", self.pos))
        }
    }

    fn expr(&mut self) -> Result<Node, String> {
        let cond = self.or()?;
        if self.eat("?") {
            let a = self.expr()?;
            self.expect(":")?;
            let b = self.expr()?;
            return Ok(Node::Cond(Box::new(cond), Box::new(a), Box::new(b)));
        }
        Ok(cond)
    }

    fn or(&mut self) -> Result<Node, String> {
        let mut lhs = self.and()?;
        while self.eat("||") {
            let rhs = self.and()?;
            lhs = Node::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Node, String> {
        let mut lhs = self.cmp()?;
        while self.eat("&&") {
            let rhs = self.cmp()?;
            lhs = Node::Bin(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<Node, String> {
        let lhs = self.sum()?;
        let op = match self.peek_op() {
            Some("==") => BinOp::Eq,
            Some("!=") => BinOp::Ne,
            Some("<") => BinOp::Lt,
            Some("<=") => BinOp::Le,
            Some(">") => BinOp::Gt,
            Some(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.sum()?;
        Ok(Node::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    fn sum(&mut self) -> Result<Node, String> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek_op() {
                Some("+") => BinOp::Add,
                Some("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, String> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_op() {
                Some("*") => BinOp::Mul,
                Some("/") => BinOp::Div,
                Some("%") => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, String> {
        if self.eat("-") {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat("!") {
            return Ok(Node::Not(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, String> {
        let base = self.atom()?;
        if self.eat("^") {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, String> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "k" {
                    return Ok(Node::K);
                }
                let (func, arity) =
                    Func::lookup(&name).ok_or_else(|| format!("unknown identifier `{name}`"))?;
                self.expect("(")?;
                let mut args = vec![self.expr()?];
                while self.eat(",") {
                    args.push(self.expr()?);
                }
                self.expect(")")?;
                if args.len() != arity {
                    return Err(format!("`{name}` takes {arity} argument(s), got {}", args.len()));
                }
                Ok(Node::Call(func, args))
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(")")?;
                Ok(inner)
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

fn truth(v: f64) -> bool {
    v != 0.0
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Node {
    fn eval(&self, k: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::K => k,
            Node::Neg(a) => -a.eval(k),
            Node::Not(a) => flag(!truth(a.eval(k))),
            Node::Cond(c, a, b) => {
                if truth(c.eval(k)) {
                    a.eval(k)
                } else {
                    b.eval(k)
                }
            }
            Node::Bin(op, a, b) => {
                // short-circuit the logical operators
                match op {
                    BinOp::And => return flag(truth(a.eval(k)) && truth(b.eval(k))),
                    BinOp::Or => return flag(truth(a.eval(k)) || truth(b.eval(k))),
                    _ => {}
                }
                let (x, y) = (a.eval(k), b.eval(k));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Rem => x.rem_euclid(y),
                    BinOp::Pow => x.powf(y),
                    BinOp::Eq => flag(x == y),
                    BinOp::Ne => flag(x != y),
                    BinOp::Lt => flag(x < y),
                    BinOp::Le => flag(x <= y),
                    BinOp::Gt => flag(x > y),
                    BinOp::Ge => flag(x >= y),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
            Node::Call(func, args) => {
                let arg = |i: usize| args[i].eval(k);
                match func {
                    Func::Ln => arg(0).ln(),
                    Func::Exp => arg(0).exp(),
                    Func::Sqrt => arg(0).sqrt(),
                    Func::Abs => arg(0).abs(),
                    Func::Floor => arg(0).floor(),
                    Func::Ceil => arg(0).ceil(),
                    Func::Min => arg(0).min(arg(1)),
                    Func::Max => arg(0).max(arg(1)),
                    Func::If => {
                        if truth(arg(0)) {
                            arg(1)
                        } else {
                            arg(2)
                        }
                    }
                }
            }
        }
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self, String> {
        let toks = tokenize(source)?;
        if toks.is_empty() {
            return Err("empty expression".into());
        }
        let mut parser = Parser { toks, pos: 0 };
        let root = parser.expr()?;
        if parser.pos != parser.toks.len() {
            return Err(format!("trailing input at token {}", parser.pos));
        }
        Ok(Expr { source: source.trim().to_string(), root })
    }

    pub fn eval(&self, k: u64) -> f64 {
        self.root.eval(k as f64)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}
