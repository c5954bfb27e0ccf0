//! Postfix compilation of expression trees for tight evaluation loops.
//!
//! The regression engine evaluates thousands of candidate trees over the same
//! data table; walking boxed nodes per row is the dominant cost. A compiled
//! program replaces the tree walk with a flat op array and a value stack.

use std::collections::BTreeMap;

use super::{apply_binary, apply_unary, BinaryOp, EvalError, ExpressionTree, Node, UnaryOp};

#[derive(Debug, Clone, Copy)]
enum Op {
    PushConst(f64),
    PushCol(usize),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// A tree compiled against a fixed column layout.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    max_stack: usize,
}

pub(super) fn compile(
    tree: &ExpressionTree,
    index_of: &BTreeMap<String, usize>,
) -> Result<Program, EvalError> {
    let mut ops = Vec::with_capacity(tree.complexity());
    emit(tree.root(), index_of, &mut ops)?;
    let mut depth = 0usize;
    let mut max_stack = 0usize;
    for op in &ops {
        match op {
            Op::PushConst(_) | Op::PushCol(_) => depth += 1,
            Op::Unary(_) => {}
            Op::Binary(_) => depth -= 1,
        }
        max_stack = max_stack.max(depth);
    }
    Ok(Program { ops, max_stack })
}

fn emit(
    node: &Node,
    index_of: &BTreeMap<String, usize>,
    ops: &mut Vec<Op>,
) -> Result<(), EvalError> {
    match node {
        Node::Constant(v) => ops.push(Op::PushConst(*v)),
        Node::Variable(s) => {
            let idx = index_of
                .get(s)
                .ok_or_else(|| EvalError::UnboundSymbol(s.clone()))?;
            ops.push(Op::PushCol(*idx));
        }
        Node::Unary(op, a) => {
            emit(a, index_of, ops)?;
            ops.push(Op::Unary(*op));
        }
        Node::Binary(op, a, b) => {
            emit(a, index_of, ops)?;
            emit(b, index_of, ops)?;
            ops.push(Op::Binary(*op));
        }
    }
    Ok(())
}

impl Program {
    /// Evaluate one row; `row[i]` is the value of the column compiled at index `i`.
    pub fn eval(&self, row: &[f64], stack: &mut Vec<f64>) -> Result<f64, EvalError> {
        stack.clear();
        stack.reserve(self.max_stack);
        for op in &self.ops {
            match op {
                Op::PushConst(v) => stack.push(*v),
                Op::PushCol(i) => stack.push(row[*i]),
                Op::Unary(u) => {
                    let a = stack.last_mut().expect("unary on empty stack");
                    *a = apply_unary(*u, *a)?;
                }
                Op::Binary(bop) => {
                    let b = stack.pop().expect("binary on empty stack");
                    let a = stack.last_mut().expect("binary on empty stack");
                    *a = apply_binary(*bop, *a, b)?;
                }
            }
        }
        debug_assert_eq!(stack.len(), 1);
        Ok(stack[0])
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Bindings, ExpressionTree};
    use super::*;

    #[test]
    fn matches_tree_evaluation() {
        let t = ExpressionTree::parse("(x * y - 2.0) / sqrt(abs(x) + 1.0)").unwrap();
        let mut index = BTreeMap::new();
        index.insert("x".to_string(), 0);
        index.insert("y".to_string(), 1);
        let prog = compile(&t, &index).unwrap();
        let mut stack = Vec::new();
        for (x, y) in [(1.0, 2.0), (-3.0, 0.5), (0.0, 0.0), (8.0, -4.0)] {
            let b = Bindings::new().set("x", x).set("y", y);
            let want = t.evaluate(&b).unwrap();
            let got = prog.eval(&[x, y], &mut stack).unwrap();
            assert_eq!(want, got);
        }
    }

    #[test]
    fn propagates_domain_errors() {
        let t = ExpressionTree::parse("1.0 / x").unwrap();
        let mut index = BTreeMap::new();
        index.insert("x".to_string(), 0);
        let prog = compile(&t, &index).unwrap();
        let mut stack = Vec::new();
        assert!(prog.eval(&[0.0], &mut stack).is_err());
        assert_eq!(prog.eval(&[2.0], &mut stack).unwrap(), 0.5);
    }

    #[test]
    fn rejects_unknown_columns() {
        let t = ExpressionTree::parse("q + 1.0").unwrap();
        let index = BTreeMap::new();
        assert!(matches!(
            compile(&t, &index),
            Err(EvalError::UnboundSymbol(s)) if s == "q"
        ));
    }
}
