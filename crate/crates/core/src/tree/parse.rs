use super::{TreeBuilder, TreeError};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, rule: &'static str, message: impl Into<String>) -> TreeError {
        TreeError::Syntax { pos: self.pos, rule, message: message.into() }
    }

    fn expect(&mut self, c: u8, rule: &'static str) -> Result<(), TreeError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.err(rule, format!("expected `{}`, found `{}`", c as char, x as char))),
            None => Err(self.err(rule, format!("expected `{}`, found end of input", c as char))),
        }
    }

    fn int(&mut self) -> Result<u32, TreeError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("node", "expected pairing id after `b#`"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<u32>() {
            Ok(0) | Err(_) => {
                self.pos = start;
                Err(self.err("node", format!("pairing id `{text}` must be an integer >= 1")))
            }
            Ok(v) => Ok(v),
        }
    }

    fn children(&mut self, b: &mut TreeBuilder, parent: usize) -> Result<(), TreeError> {
        if self.peek() != Some(b'(') {
            return Ok(());
        }
        self.pos += 1;
        loop {
            self.node(b, parent)?;
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(x) => return Err(self.err("children", format!("expected `,` or `)`, found `{}`", x as char))),
                None => return Err(self.err("children", "unclosed `(`")),
            }
        }
    }

    fn node(&mut self, b: &mut TreeBuilder, parent: usize) -> Result<(), TreeError> {
        let v = match self.peek() {
            Some(b'a') => {
                self.pos += 1;
                if self.peek() == Some(b'#') {
                    return Err(TreeError::AlphaPairing { pos: self.pos });
                }
                b.add_alpha(parent)
            }
            Some(b'b') => {
                self.pos += 1;
                self.expect(b'#', "node")?;
                let id = self.int()?;
                b.add_beta(parent, id)
            }
            Some(x) => return Err(self.err("node", format!("expected `a` or `b#INT`, found `{}`", x as char))),
            None => return Err(self.err("node", "expected `a` or `b#INT`, found end of input")),
        };
        self.children(b, v)
    }
}

pub(super) fn parse(text: &str) -> Result<TreeBuilder, TreeError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.expect(b'o', "tree")?;
    let mut b = TreeBuilder::new();
    p.children(&mut b, 0)?;
    if let Some(x) = p.peek() {
        return Err(p.err("tree", format!("unexpected trailing `{}`", x as char)));
    }
    Ok(b)
}
