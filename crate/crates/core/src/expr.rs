//! Expression trees over a closed function set.
//!
//! Chart data (domain predicates, transition maps, spray components, metric
//! entries, vector fields) is supplied as text expressions over named inputs
//! and parsed once into trees. The same tree evaluates over plain reals and
//! over jets of any nesting depth, so every derivative used by the library
//! comes from one evaluator.
//!
//! Grammar (usual precedence, `^` binds tightest, unary minus below `^`):
//!
//! ```text
//! vector := '[' expr (',' expr)* ']' | expr
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' int)*
//! atom   := number | name | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'sin' | 'cos' | 'sqrt'
//! ```
//!
//! `int` after `^` is an integer literal, optionally negative and optionally
//! parenthesized. Input names are fixed per map (e.g. `x0..x{n-1}`,
//! `v0..v{n-1}`); referencing anything else is a parse error.

use crate::error::{Error, EvalErrorKind, Result};
use crate::jet::Scalar;

#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Input(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    /// Division; the position of `/` is kept for runtime error reports.
    Div(Box<Node>, Box<Node>, usize),
    /// Integer power; position of `^` kept for runtime error reports.
    Powi(Box<Node>, i32, usize),
    Sqrt(Box<Node>, usize),
    Exp(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
}

impl Node {
    pub fn eval<S: Scalar>(&self, inputs: &[S]) -> Result<S> {
        Ok(match self {
            Node::Const(c) => S::from_f64(*c),
            Node::Input(i) => inputs[*i],
            Node::Neg(a) => -a.eval(inputs)?,
            Node::Add(a, b) => a.eval(inputs)? + b.eval(inputs)?,
            Node::Sub(a, b) => a.eval(inputs)? - b.eval(inputs)?,
            Node::Mul(a, b) => a.eval(inputs)? * b.eval(inputs)?,
            Node::Div(a, b, col) => {
                let den = b.eval(inputs)?;
                if den.re() == 0.0 {
                    return Err(Error::Eval {
                        kind: EvalErrorKind::DivisionByZero,
                        node: "/".to_string(),
                        col: *col,
                    });
                }
                a.eval(inputs)? / den
            }
            Node::Powi(a, n, col) => {
                let base = a.eval(inputs)?;
                if *n < 0 && base.re() == 0.0 {
                    return Err(Error::Eval {
                        kind: EvalErrorKind::ZeroToNegativePower,
                        node: format!("^{n}"),
                        col: *col,
                    });
                }
                base.powi(*n)
            }
            Node::Sqrt(a, col) => {
                let u = a.eval(inputs)?;
                // At zero the value exists but the derivative does not;
                // reject there whenever jets are being propagated.
                if u.re() < 0.0 || (u.re() == 0.0 && S::DEPTH > 0) {
                    return Err(Error::Eval {
                        kind: EvalErrorKind::SqrtDomain,
                        node: "sqrt".to_string(),
                        col: *col,
                    });
                }
                u.sqrt()
            }
            Node::Exp(a) => a.eval(inputs)?.exp(),
            Node::Sin(a) => a.eval(inputs)?.sin(),
            Node::Cos(a) => a.eval(inputs)?.cos(),
        })
    }

    fn remap_inputs(&self, f: &dyn Fn(usize) -> Result<usize>) -> Result<Node> {
        Ok(match self {
            Node::Const(c) => Node::Const(*c),
            Node::Input(i) => Node::Input(f(*i)?),
            Node::Neg(a) => Node::Neg(Box::new(a.remap_inputs(f)?)),
            Node::Add(a, b) => Node::Add(Box::new(a.remap_inputs(f)?), Box::new(b.remap_inputs(f)?)),
            Node::Sub(a, b) => Node::Sub(Box::new(a.remap_inputs(f)?), Box::new(b.remap_inputs(f)?)),
            Node::Mul(a, b) => Node::Mul(Box::new(a.remap_inputs(f)?), Box::new(b.remap_inputs(f)?)),
            Node::Div(a, b, col) => Node::Div(
                Box::new(a.remap_inputs(f)?),
                Box::new(b.remap_inputs(f)?),
                *col,
            ),
            Node::Powi(a, n, col) => Node::Powi(Box::new(a.remap_inputs(f)?), *n, *col),
            Node::Sqrt(a, col) => Node::Sqrt(Box::new(a.remap_inputs(f)?), *col),
            Node::Exp(a) => Node::Exp(Box::new(a.remap_inputs(f)?)),
            Node::Sin(a) => Node::Sin(Box::new(a.remap_inputs(f)?)),
            Node::Cos(a) => Node::Cos(Box::new(a.remap_inputs(f)?)),
        })
    }

    fn max_input(&self, acc: &mut Option<usize>) {
        match self {
            Node::Const(_) => {}
            Node::Input(i) => {
                *acc = Some(acc.map_or(*i, |m| m.max(*i)));
            }
            Node::Neg(a) | Node::Sqrt(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                a.max_input(acc)
            }
            Node::Powi(a, _, _) => a.max_input(acc),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b, _) => {
                a.max_input(acc);
                b.max_input(acc);
            }
        }
    }
}

/// A map ℝ^arity_in → ℝ^arity_out given by one expression tree per output.
#[derive(Debug, Clone)]
pub struct ExprMap {
    inputs: Vec<String>,
    outputs: Vec<Node>,
    source: String,
}

impl ExprMap {
    /// Parse `source` as a vector of expressions (`"[e0, e1]"`) or a single
    /// bare expression, over the given ordered input names.
    pub fn parse(source: &str, inputs: &[String]) -> Result<ExprMap> {
        let mut p = Parser::new(source, inputs);
        p.skip_ws();
        let outputs = if p.peek() == Some(b'[') {
            p.parse_vector()?
        } else {
            vec![p.parse_expr()?]
        };
        p.expect_end()?;
        Ok(ExprMap {
            inputs: inputs.to_vec(),
            outputs,
            source: source.to_string(),
        })
    }

    pub fn arity_in(&self) -> usize {
        self.inputs.len()
    }

    pub fn arity_out(&self) -> usize {
        self.outputs.len()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn input_names(&self) -> &[String] {
        &self.inputs
    }

    /// Largest input index actually referenced, if any.
    pub fn max_input_used(&self) -> Option<usize> {
        let mut acc = None;
        for node in &self.outputs {
            node.max_input(&mut acc);
        }
        acc
    }

    pub fn eval<S: Scalar>(&self, args: &[S]) -> Result<Vec<S>> {
        if args.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "map `{}` expects {} inputs, got {}",
                self.source,
                self.inputs.len(),
                args.len()
            )));
        }
        self.outputs.iter().map(|n| n.eval(args)).collect()
    }

    /// Componentwise product of a scalar map with a vector map (same inputs),
    /// composed at tree level so jets differentiate the literal product.
    pub fn product(scalar: &ExprMap, vector: &ExprMap) -> ExprMap {
        debug_assert_eq!(scalar.arity_out(), 1);
        debug_assert_eq!(scalar.inputs, vector.inputs);
        let outputs = vector
            .outputs
            .iter()
            .map(|n| Node::Mul(Box::new(scalar.outputs[0].clone()), Box::new(n.clone())))
            .collect();
        ExprMap {
            inputs: vector.inputs.clone(),
            outputs,
            source: format!("({})*({})", scalar.source, vector.source),
        }
    }

    /// Keep the leading `keep` output components and rewire input indices
    /// through `remap` (used for graded truncation). The remapping rejects
    /// references that would cross the truncation cut.
    pub fn truncate_outputs(
        &self,
        keep: usize,
        new_inputs: &[String],
        remap: &dyn Fn(usize) -> Result<usize>,
    ) -> Result<ExprMap> {
        if keep > self.outputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot keep {keep} of {} outputs",
                self.outputs.len()
            )));
        }
        let outputs = self.outputs[..keep]
            .iter()
            .map(|n| n.remap_inputs(remap))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExprMap {
            inputs: new_inputs.to_vec(),
            outputs,
            source: self.source.clone(),
        })
    }

    /// a·f + b·g at tree level (same inputs and output arity).
    pub fn linear_combination(a: f64, f: &ExprMap, b: f64, g: &ExprMap) -> ExprMap {
        debug_assert_eq!(f.arity_out(), g.arity_out());
        debug_assert_eq!(f.inputs, g.inputs);
        let outputs = f
            .outputs
            .iter()
            .zip(g.outputs.iter())
            .map(|(fi, gi)| {
                Node::Add(
                    Box::new(Node::Mul(Box::new(Node::Const(a)), Box::new(fi.clone()))),
                    Box::new(Node::Mul(Box::new(Node::Const(b)), Box::new(gi.clone()))),
                )
            })
            .collect();
        ExprMap {
            inputs: f.inputs.clone(),
            outputs,
            source: format!("{a}*({}) + {b}*({})", f.source, g.source),
        }
    }

    /// Evaluate a map with a single output component.
    pub fn eval_scalar<S: Scalar>(&self, args: &[S]) -> Result<S> {
        if self.outputs.len() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "map `{}` has {} outputs, expected 1",
                self.source,
                self.outputs.len()
            )));
        }
        if args.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "map `{}` expects {} inputs, got {}",
                self.source,
                self.inputs.len(),
                args.len()
            )));
        }
        self.outputs[0].eval(args)
    }
}

impl std::fmt::Display for ExprMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.source)
    }
}

/// A matrix of expressions (`"[[a,b],[c,d]]"`), used for metric tensors.
#[derive(Debug, Clone)]
pub struct ExprMatrix {
    inputs: Vec<String>,
    rows: Vec<Vec<Node>>,
    source: String,
}

impl ExprMatrix {
    pub fn parse(source: &str, inputs: &[String]) -> Result<ExprMatrix> {
        let mut p = Parser::new(source, inputs);
        p.skip_ws();
        p.expect(b'[')?;
        let mut rows = Vec::new();
        loop {
            p.skip_ws();
            if p.peek() != Some(b'[') {
                return Err(p.error("expected `[` starting a matrix row"));
            }
            rows.push(p.parse_vector()?);
            p.skip_ws();
            match p.next_byte() {
                Some(b',') => continue,
                Some(b']') => break,
                _ => return Err(p.error("expected `,` or `]` in matrix")),
            }
        }
        p.expect_end()?;
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) || rows.len() != ncols {
            return Err(Error::DimensionMismatch(format!(
                "matrix `{source}` is not square"
            )));
        }
        Ok(ExprMatrix {
            inputs: inputs.to_vec(),
            rows,
            source: source.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn entry(&self) -> &Vec<Vec<Node>> {
        &self.rows
    }

    pub fn eval<S: Scalar>(&self, args: &[S]) -> Result<Vec<Vec<S>>> {
        if args.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix `{}` expects {} inputs, got {}",
                self.source,
                self.inputs.len(),
                args.len()
            )));
        }
        self.rows
            .iter()
            .map(|row| row.iter().map(|n| n.eval(args)).collect())
            .collect()
    }

    pub fn max_input_used(&self) -> Option<usize> {
        let mut acc = None;
        for row in &self.rows {
            for node in row {
                node.max_input(&mut acc);
            }
        }
        acc
    }
}

/// Standard input name lists: `x0..x{n-1}` etc.
pub fn coord_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Concatenation of several coordinate name blocks, e.g. x-names ++ v-names.
pub fn stacked_names(blocks: &[(&str, usize)]) -> Vec<String> {
    let mut out = Vec::new();
    for (prefix, n) in blocks {
        out.extend(coord_names(prefix, *n));
    }
    out
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    inputs: &'a [String],
    context: String,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str, inputs: &'a [String]) -> Self {
        Parser {
            src: source.as_bytes(),
            pos: 0,
            inputs,
            context: source.to_string(),
        }
    }

    fn error(&self, message: &str) -> Error {
        Error::Parse {
            context: self.context.clone(),
            col: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn next_byte(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", b as char)))
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    fn parse_vector(&mut self) -> Result<Vec<Node>> {
        self.expect(b'[')?;
        let mut out = Vec::new();
        loop {
            out.push(self.parse_expr()?);
            self.skip_ws();
            match self.next_byte() {
                Some(b',') => continue,
                Some(b']') => break,
                _ => return Err(self.error("expected `,` or `]` in vector")),
            }
        }
        Ok(out)
    }

    fn parse_expr(&mut self) -> Result<Node> {
        let mut lhs = self.parse_term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Node> {
        let mut lhs = self.parse_factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    let col = self.pos + 1;
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(rhs), col);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Node> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_factor()?;
            Ok(Node::Neg(Box::new(inner)))
        } else {
            self.parse_power()
        }
    }

    fn parse_power(&mut self) -> Result<Node> {
        let mut base = self.parse_atom()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'^') {
                let col = self.pos + 1;
                self.pos += 1;
                let n = self.parse_int_exponent()?;
                base = Node::Powi(Box::new(base), n, col);
            } else {
                return Ok(base);
            }
        }
    }

    fn parse_int_exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let parenthesized = self.peek() == Some(b'(');
        if parenthesized {
            self.pos += 1;
            self.skip_ws();
        }
        let neg = self.peek() == Some(b'-');
        if neg {
            self.pos += 1;
        }
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected integer exponent after `^`"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mut n: i32 = digits
            .parse()
            .map_err(|_| self.error("integer exponent out of range"))?;
        if neg {
            n = -n;
        }
        if parenthesized {
            self.expect(b')')?;
        }
        Ok(n)
    }

    fn parse_atom(&mut self) -> Result<Node> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(b'0'..=b'9') | Some(b'.') => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            _ => Err(self.error("expected a number, name, or `(`")),
        }
    }

    fn parse_number(&mut self) -> Result<Node> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9') | Some(b'.')) {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            // Scientific notation only if followed by digits or a sign;
            // otherwise the `e` belongs to a following identifier.
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(&format!("invalid number `{text}`")))?;
        Ok(Node::Const(value))
    }

    fn parse_ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let func_col = start + 1;
        self.skip_ws();
        if self.peek() == Some(b'(') && matches!(name, "exp" | "sin" | "cos" | "sqrt") {
            self.pos += 1;
            let arg = Box::new(self.parse_expr()?);
            self.expect(b')')?;
            return Ok(match name {
                "exp" => Node::Exp(arg),
                "sin" => Node::Sin(arg),
                "cos" => Node::Cos(arg),
                "sqrt" => Node::Sqrt(arg, func_col),
                _ => unreachable!(),
            });
        }
        match self.inputs.iter().position(|i| i == name) {
            Some(idx) => Ok(Node::Input(idx)),
            None => Err(Error::Parse {
                context: self.context.clone(),
                col: func_col,
                message: format!(
                    "unknown identifier `{name}` (inputs: {})",
                    self.inputs.join(", ")
                ),
            }),
        }
    }
}
