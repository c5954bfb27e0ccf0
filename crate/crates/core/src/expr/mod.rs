//! Expression trees over named variables: construction, evaluation,
//! complexity, simplification, and a round-trippable infix text form.
//!
//! Trees are immutable after construction and cheap to clone; all operations
//! here are pure.

mod parse;
mod program;

pub use parse::ParseError;
pub use program::Program;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Division guard: denominators smaller than this in magnitude are a domain error.
pub const DIV_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Square,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// A single node of an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Constant(f64),
    Variable(String),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// An immutable formula over named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTree {
    root: Node,
}

/// Values for the free variables of a tree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self(BTreeMap::new())
    }

    pub fn set(mut self, symbol: impl Into<String>, value: f64) -> Self {
        self.0.insert(symbol.into(), value);
        self
    }

    pub fn insert(&mut self, symbol: impl Into<String>, value: f64) {
        self.0.insert(symbol.into(), value);
    }

    pub fn get(&self, symbol: &str) -> Option<f64> {
        self.0.get(symbol).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(s, v)| (s.into(), v)).collect())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("domain error: {0}")]
    DomainError(&'static str),
}

impl ExpressionTree {
    pub fn new(root: Node) -> Self {
        Self { root }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Node::Constant(value))
    }

    pub fn variable(symbol: impl Into<String>) -> Self {
        Self::new(Node::Variable(symbol.into()))
    }

    pub fn unary(op: UnaryOp, a: ExpressionTree) -> Self {
        Self::new(Node::Unary(op, Box::new(a.root)))
    }

    pub fn binary(op: BinaryOp, a: ExpressionTree, b: ExpressionTree) -> Self {
        Self::new(Node::Binary(op, Box::new(a.root), Box::new(b.root)))
    }

    /// Parse the infix text form produced by `Display`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse(text)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluate with every leaf symbol bound.
    pub fn evaluate(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        eval_node(&self.root, &|s| bindings.get(s))
    }

    /// Evaluate resolving symbols through a closure (used by table-backed callers).
    pub fn evaluate_with<F: Fn(&str) -> Option<f64>>(&self, lookup: F) -> Result<f64, EvalError> {
        eval_node(&self.root, &lookup)
    }

    /// Total node count; always >= 1.
    pub fn complexity(&self) -> usize {
        node_count(&self.root)
    }

    /// Distinct variable names appearing in the tree.
    pub fn leaf_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_symbols(&self.root, &mut out);
        out
    }

    /// Constant-fold variable-free subtrees and strip identity operations.
    ///
    /// The result agrees with the original on every binding where the original
    /// evaluates cleanly, and its complexity never exceeds the original's.
    pub fn simplify(&self) -> ExpressionTree {
        ExpressionTree::new(simplify_node(self.root.clone()))
    }

    /// Compile against a symbol -> column-index map for fast repeated evaluation.
    pub fn compile(&self, index_of: &BTreeMap<String, usize>) -> Result<Program, EvalError> {
        program::compile(self, index_of)
    }
}

fn node_count(node: &Node) -> usize {
    match node {
        Node::Constant(_) | Node::Variable(_) => 1,
        Node::Unary(_, a) => 1 + node_count(a),
        Node::Binary(_, a, b) => 1 + node_count(a) + node_count(b),
    }
}

fn collect_symbols(node: &Node, out: &mut BTreeSet<String>) {
    match node {
        Node::Constant(_) => {}
        Node::Variable(s) => {
            out.insert(s.clone());
        }
        Node::Unary(_, a) => collect_symbols(a, out),
        Node::Binary(_, a, b) => {
            collect_symbols(a, out);
            collect_symbols(b, out);
        }
    }
}

pub(crate) fn apply_unary(op: UnaryOp, a: f64) -> Result<f64, EvalError> {
    let v = match op {
        UnaryOp::Neg => -a,
        UnaryOp::Square => a * a,
        UnaryOp::Sqrt => {
            if a < 0.0 {
                return Err(EvalError::DomainError("sqrt of negative"));
            }
            a.sqrt()
        }
        UnaryOp::Abs => a.abs(),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::DomainError("non-finite result"))
    }
}

pub(crate) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Result<f64, EvalError> {
    let v = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b.abs() < DIV_GUARD {
                return Err(EvalError::DomainError("division by near-zero"));
            }
            a / b
        }
        BinaryOp::Pow => {
            let v = a.powf(b);
            if v.is_nan() {
                return Err(EvalError::DomainError("pow with non-real result"));
            }
            v
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::DomainError("non-finite result"))
    }
}

fn eval_node<F: Fn(&str) -> Option<f64>>(node: &Node, lookup: &F) -> Result<f64, EvalError> {
    match node {
        Node::Constant(v) => Ok(*v),
        Node::Variable(s) => lookup(s).ok_or_else(|| EvalError::UnboundSymbol(s.clone())),
        Node::Unary(op, a) => apply_unary(*op, eval_node(a, lookup)?),
        Node::Binary(op, a, b) => {
            apply_binary(*op, eval_node(a, lookup)?, eval_node(b, lookup)?)
        }
    }
}

/// A subtree whose evaluation can never raise a domain error.
fn is_total(node: &Node) -> bool {
    matches!(node, Node::Variable(_)) || matches!(node, Node::Constant(v) if v.is_finite())
}

fn is_const(node: &Node, value: f64) -> bool {
    matches!(node, Node::Constant(v) if *v == value)
}

fn simplify_node(node: Node) -> Node {
    let node = match node {
        Node::Unary(op, a) => Node::Unary(op, Box::new(simplify_node(*a))),
        Node::Binary(op, a, b) => Node::Binary(
            op,
            Box::new(simplify_node(*a)),
            Box::new(simplify_node(*b)),
        ),
        leaf => leaf,
    };

    // Fold variable-free subtrees that evaluate cleanly.
    if !matches!(node, Node::Constant(_)) {
        let mut has_var = false;
        check_has_var(&node, &mut has_var);
        if !has_var {
            if let Ok(v) = eval_node(&node, &|_| None) {
                return Node::Constant(v);
            }
        }
    }

    match node {
        Node::Unary(UnaryOp::Neg, a) => match *a {
            Node::Unary(UnaryOp::Neg, inner) => *inner,
            other => Node::Unary(UnaryOp::Neg, Box::new(other)),
        },
        Node::Unary(UnaryOp::Abs, a) => match *a {
            inner @ Node::Unary(UnaryOp::Abs, _) => inner,
            other => Node::Unary(UnaryOp::Abs, Box::new(other)),
        },
        Node::Binary(op, a, b) => {
            match op {
                BinaryOp::Add => {
                    if is_const(&a, 0.0) {
                        return *b;
                    }
                    if is_const(&b, 0.0) {
                        return *a;
                    }
                }
                BinaryOp::Sub => {
                    if is_const(&b, 0.0) {
                        return *a;
                    }
                }
                BinaryOp::Mul => {
                    if is_const(&a, 1.0) {
                        return *b;
                    }
                    if is_const(&b, 1.0) {
                        return *a;
                    }
                    // Annihilation only when the discarded side can't hide a
                    // domain error.
                    if is_const(&a, 0.0) && is_total(&b) {
                        return Node::Constant(0.0);
                    }
                    if is_const(&b, 0.0) && is_total(&a) {
                        return Node::Constant(0.0);
                    }
                }
                BinaryOp::Div => {
                    if is_const(&b, 1.0) {
                        return *a;
                    }
                }
                BinaryOp::Pow => {
                    if is_const(&b, 1.0) {
                        return *a;
                    }
                }
            }
            Node::Binary(op, a, b)
        }
        other => other,
    }
}

fn check_has_var(node: &Node, flag: &mut bool) {
    if *flag {
        return;
    }
    match node {
        Node::Variable(_) => *flag = true,
        Node::Constant(_) => {}
        Node::Unary(_, a) => check_has_var(a, flag),
        Node::Binary(_, a, b) => {
            check_has_var(a, flag);
            check_has_var(b, flag);
        }
    }
}

/// Render a constant so that parsing recovers the exact same f64.
pub(crate) fn format_constant(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn fmt_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Constant(v) => {
            if *v < 0.0 || v.is_sign_negative() {
                // Negative constants need parens so "(a * -1.0)" stays parseable.
                write!(f, "(")?;
                write!(f, "{}", format_constant(*v))?;
                write!(f, ")")
            } else {
                write!(f, "{}", format_constant(*v))
            }
        }
        Node::Variable(s) => write!(f, "{s}"),
        Node::Unary(op, a) => match op {
            UnaryOp::Neg => {
                // `(-2.0)` would re-parse as a negative constant; spell out
                // `neg(2.0)` so negation of a constant keeps its node.
                if matches!(**a, Node::Constant(_)) {
                    write!(f, "neg(")?;
                    fmt_node(a, f)?;
                    write!(f, ")")
                } else {
                    write!(f, "(-")?;
                    fmt_node(a, f)?;
                    write!(f, ")")
                }
            }
            UnaryOp::Square => {
                write!(f, "square(")?;
                fmt_node(a, f)?;
                write!(f, ")")
            }
            UnaryOp::Sqrt => {
                write!(f, "sqrt(")?;
                fmt_node(a, f)?;
                write!(f, ")")
            }
            UnaryOp::Abs => {
                write!(f, "abs(")?;
                fmt_node(a, f)?;
                write!(f, ")")
            }
        },
        Node::Binary(op, a, b) => {
            let sym = match op {
                BinaryOp::Add => "+",
                BinaryOp::Sub => "-",
                BinaryOp::Mul => "*",
                BinaryOp::Div => "/",
                BinaryOp::Pow => "^",
            };
            write!(f, "(")?;
            fmt_node(a, f)?;
            write!(f, " {sym} ")?;
            fmt_node(b, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x_plus_2y() -> ExpressionTree {
        ExpressionTree::binary(
            BinaryOp::Add,
            ExpressionTree::variable("x"),
            ExpressionTree::binary(
                BinaryOp::Mul,
                ExpressionTree::constant(2.0),
                ExpressionTree::variable("y"),
            ),
        )
    }

    #[test]
    fn evaluates_linear_combination() {
        let b = Bindings::new().set("x", 1.0).set("y", 3.0);
        assert_eq!(x_plus_2y().evaluate(&b).unwrap(), 7.0);
    }

    #[test]
    fn evaluates_bare_constant() {
        assert_eq!(
            ExpressionTree::constant(5.0).evaluate(&Bindings::new()).unwrap(),
            5.0
        );
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let t = ExpressionTree::binary(
            BinaryOp::Div,
            ExpressionTree::variable("x"),
            ExpressionTree::variable("y"),
        );
        let b = Bindings::new().set("x", 1.0).set("y", 0.0);
        assert!(matches!(t.evaluate(&b), Err(EvalError::DomainError(_))));
    }

    #[test]
    fn unbound_symbol_is_reported() {
        let t = ExpressionTree::variable("z");
        assert_eq!(
            t.evaluate(&Bindings::new()),
            Err(EvalError::UnboundSymbol("z".into()))
        );
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let t = ExpressionTree::unary(UnaryOp::Sqrt, ExpressionTree::constant(-1.0));
        assert!(matches!(t.evaluate(&Bindings::new()), Err(EvalError::DomainError(_))));
    }

    #[test]
    fn complexity_counts_nodes() {
        assert_eq!(ExpressionTree::constant(5.0).complexity(), 1);
        assert_eq!(x_plus_2y().complexity(), 5);
        assert_eq!(
            ExpressionTree::unary(UnaryOp::Neg, ExpressionTree::variable("x")).complexity(),
            2
        );
    }

    #[test]
    fn leaf_symbols_deduplicates() {
        assert!(ExpressionTree::constant(5.0).leaf_symbols().is_empty());
        let syms = x_plus_2y().leaf_symbols();
        assert_eq!(syms.into_iter().collect::<Vec<_>>(), vec!["x", "y"]);
        let t = ExpressionTree::binary(
            BinaryOp::Add,
            ExpressionTree::binary(
                BinaryOp::Mul,
                ExpressionTree::variable("x"),
                ExpressionTree::variable("x"),
            ),
            ExpressionTree::variable("x"),
        );
        assert_eq!(t.leaf_symbols().len(), 1);
    }

    #[test]
    fn simplify_additive_identity() {
        let t = ExpressionTree::binary(
            BinaryOp::Add,
            ExpressionTree::variable("x"),
            ExpressionTree::constant(0.0),
        );
        assert_eq!(t.simplify(), ExpressionTree::variable("x"));
    }

    #[test]
    fn simplify_constant_folds() {
        let t = ExpressionTree::binary(
            BinaryOp::Mul,
            ExpressionTree::constant(2.0),
            ExpressionTree::constant(3.0),
        );
        assert_eq!(t.simplify(), ExpressionTree::constant(6.0));
    }

    #[test]
    fn simplify_strips_identity_and_annihilated_terms() {
        // x*1 + 0*y -> x
        let t = ExpressionTree::binary(
            BinaryOp::Add,
            ExpressionTree::binary(
                BinaryOp::Mul,
                ExpressionTree::variable("x"),
                ExpressionTree::constant(1.0),
            ),
            ExpressionTree::binary(
                BinaryOp::Mul,
                ExpressionTree::constant(0.0),
                ExpressionTree::variable("y"),
            ),
        );
        assert_eq!(t.simplify(), ExpressionTree::variable("x"));
    }

    #[test]
    fn simplify_keeps_guarded_division() {
        // 0 * (1/0) must stay a domain error, not fold to 0.
        let t = ExpressionTree::binary(
            BinaryOp::Mul,
            ExpressionTree::constant(0.0),
            ExpressionTree::binary(
                BinaryOp::Div,
                ExpressionTree::constant(1.0),
                ExpressionTree::constant(0.0),
            ),
        );
        let s = t.simplify();
        assert!(s.evaluate(&Bindings::new()).is_err());
    }

    // Random tree generation for the property tests.
    fn arb_node(depth: u32) -> BoxedStrategy<Node> {
        let leaf = prop_oneof![
            (-10.0..10.0f64).prop_map(Node::Constant),
            prop_oneof![Just("x"), Just("y"), Just("z")]
                .prop_map(|s| Node::Variable(s.to_string())),
        ];
        if depth == 0 {
            return leaf.boxed();
        }
        let sub = arb_node(depth - 1);
        prop_oneof![
            3 => leaf,
            2 => (
                prop_oneof![
                    Just(UnaryOp::Neg),
                    Just(UnaryOp::Square),
                    Just(UnaryOp::Sqrt),
                    Just(UnaryOp::Abs)
                ],
                sub.clone()
            )
                .prop_map(|(op, a)| Node::Unary(op, Box::new(a))),
            4 => (
                prop_oneof![
                    Just(BinaryOp::Add),
                    Just(BinaryOp::Sub),
                    Just(BinaryOp::Mul),
                    Just(BinaryOp::Div),
                    Just(BinaryOp::Pow)
                ],
                sub.clone(),
                sub
            )
                .prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
        ]
        .boxed()
    }

    proptest! {
        #[test]
        fn display_round_trips(root in arb_node(4)) {
            let t = ExpressionTree::new(root);
            let text = t.to_string();
            let back = ExpressionTree::parse(&text).unwrap();
            prop_assert_eq!(t, back);
        }

        #[test]
        fn simplify_preserves_semantics(
            root in arb_node(4),
            x in -5.0..5.0f64,
            y in -5.0..5.0f64,
            z in -5.0..5.0f64,
        ) {
            let t = ExpressionTree::new(root);
            let s = t.simplify();
            let b = Bindings::new().set("x", x).set("y", y).set("z", z);
            match (t.evaluate(&b), s.evaluate(&b)) {
                (Ok(a), Ok(c)) => {
                    let scale = a.abs().max(1.0);
                    prop_assert!((a - c).abs() <= 1e-12 * scale, "{} vs {}", a, c);
                }
                (Err(_), Err(_)) => {}
                (a, c) => prop_assert!(false, "mismatch: {:?} vs {:?}", a, c),
            }
        }

        #[test]
        fn simplify_never_grows(root in arb_node(4)) {
            let t = ExpressionTree::new(root);
            let s = t.simplify();
            prop_assert!(s.complexity() <= t.complexity());
            prop_assert!(s.leaf_symbols().is_subset(&t.leaf_symbols()));
            prop_assert!(s.complexity() >= 1);
        }
    }
}
