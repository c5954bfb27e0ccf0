//! Genetic-programming search behind `symbolic_regress`: tournament
//! selection, subtree crossover and mutation, per-generation constant
//! hill-climbing, and a per-complexity hall of fame.

use crate::expr::{BinaryOp, ExpressionTree, Node, UnaryOp};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;

use super::RegressionConfig;

const BINARIES: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];
const UNARIES: [UnaryOp; 4] = [UnaryOp::Neg, UnaryOp::Square, UnaryOp::Sqrt, UnaryOp::Abs];

struct Individual {
    tree: Node,
    complexity: usize,
    mse: f64,
}

struct Ctx<'a> {
    rows: &'a [Vec<f64>],
    y: &'a [f64],
    index_of: BTreeMap<String, usize>,
    n_syms: usize,
    max_complexity: usize,
    stack: Vec<f64>,
}

impl Ctx<'_> {
    fn mse(&mut self, tree: &Node) -> f64 {
        let expr = ExpressionTree::new(tree.clone());
        let prog = match expr.compile(&self.index_of) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        let mut sse = 0.0;
        for (row, yi) in self.rows.iter().zip(self.y) {
            match prog.eval(row, &mut self.stack) {
                Ok(v) if v.is_finite() => sse += (v - yi) * (v - yi),
                _ => return f64::INFINITY,
            }
        }
        sse / self.rows.len() as f64
    }
}

/// Best-seen tree per complexity, with its mse. Ties prefer the
/// lexicographically smaller serialization so runs are order-independent.
#[derive(Default)]
struct HallOfFame {
    by_complexity: BTreeMap<usize, (f64, String, Node)>,
}

impl HallOfFame {
    fn offer(&mut self, tree: &Node, mse: f64, max_complexity: usize) {
        if !mse.is_finite() {
            return;
        }
        let expr = ExpressionTree::new(tree.clone()).simplify();
        let complexity = expr.complexity();
        if complexity > max_complexity {
            return;
        }
        let ser = expr.to_string();
        let entry = (mse, ser, expr.root().clone());
        match self.by_complexity.get(&complexity) {
            Some((m, s, _)) if (*m, s.as_str()) <= (entry.0, entry.1.as_str()) => {}
            _ => {
                self.by_complexity.insert(complexity, entry);
            }
        }
    }

    fn candidates(self) -> Vec<(ExpressionTree, f64)> {
        self.by_complexity
            .into_values()
            .map(|(mse, _, node)| (ExpressionTree::new(node), mse))
            .collect()
    }
}

/// Run the search and return the hall-of-fame candidates (simplified trees
/// with their training mse), ordered by complexity.
pub(super) fn search(
    rows: &[Vec<f64>],
    y: &[f64],
    symbols: &[String],
    cfg: &RegressionConfig,
) -> Vec<(ExpressionTree, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let index_of: BTreeMap<String, usize> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    let mut ctx = Ctx {
        rows,
        y,
        index_of,
        n_syms: symbols.len(),
        max_complexity: cfg.max_complexity,
        stack: Vec::new(),
    };
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let var_y = y.iter().map(|v| (v - mean_y).powi(2)).sum::<f64>() / y.len() as f64;
    // Fit is treated as exact below this; keeps planted-formula runs short.
    let stop_mse = var_y * 1e-10 + 1e-30;

    let mut hof = HallOfFame::default();
    let mut pop: Vec<Individual> = Vec::with_capacity(cfg.population);
    // Deterministic warm starts: the target mean and every single variable.
    pop.push(make(Node::Constant(mean_y), &mut ctx));
    for s in symbols {
        pop.push(make(Node::Variable(s.clone()), &mut ctx));
    }
    let mut i = 0usize;
    while pop.len() < cfg.population {
        let depth = 2 + (i % 4);
        let full = i % 2 == 0;
        let tree = random_tree(&mut rng, depth, full, ctx.n_syms, symbols);
        pop.push(make(tree, &mut ctx));
        i += 1;
    }
    for ind in &pop {
        hof.offer(&ind.tree, ind.mse, cfg.max_complexity);
    }

    let mut last_refined = String::new();
    for _gen in 0..cfg.generations {
        let champ = best_index(&pop);
        // Hill-climb the champion's constants once per distinct champion.
        let champ_ser = ExpressionTree::new(pop[champ].tree.clone()).to_string();
        if champ_ser != last_refined {
            last_refined = champ_ser;
            let refined = refine_constants(&pop[champ].tree, &mut ctx);
            let refined = make(refined, &mut ctx);
            hof.offer(&refined.tree, refined.mse, cfg.max_complexity);
            if refined.mse < pop[champ].mse {
                pop[champ] = refined;
            }
        }
        if pop[best_index(&pop)].mse <= stop_mse {
            break;
        }

        let mut next: Vec<Individual> = Vec::with_capacity(cfg.population);
        let champ = best_index(&pop);
        next.push(Individual {
            tree: pop[champ].tree.clone(),
            complexity: pop[champ].complexity,
            mse: pop[champ].mse,
        });
        while next.len() < cfg.population {
            let a = tournament(&pop, cfg.tournament, &mut rng);
            let mut child = if rng.random_bool(cfg.p_crossover) {
                let b = tournament(&pop, cfg.tournament, &mut rng);
                crossover(&pop[a].tree, &pop[b].tree, cfg.max_complexity, &mut rng)
            } else {
                pop[a].tree.clone()
            };
            if rng.random_bool(cfg.p_mutation) {
                child = mutate(&child, &mut rng, ctx.n_syms, symbols);
            }
            if count(&child) > cfg.max_complexity {
                child = pop[a].tree.clone();
            }
            let ind = make(child, &mut ctx);
            hof.offer(&ind.tree, ind.mse, cfg.max_complexity);
            next.push(ind);
        }
        pop = next;
    }
    // Final refinement so the last champion's constants land in the hall.
    let champ = best_index(&pop);
    let refined = refine_constants(&pop[champ].tree, &mut ctx);
    let mse = ctx.mse(&refined);
    hof.offer(&refined, mse, cfg.max_complexity);
    hof.candidates()
}

fn make(tree: Node, ctx: &mut Ctx) -> Individual {
    let complexity = count(&tree);
    let mse = if complexity > ctx.max_complexity {
        f64::INFINITY
    } else {
        ctx.mse(&tree)
    };
    Individual {
        tree,
        complexity,
        mse,
    }
}

fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for i in 1..pop.len() {
        if (pop[i].mse, pop[i].complexity) < (pop[best].mse, pop[best].complexity) {
            best = i;
        }
    }
    best
}

fn tournament(pop: &[Individual], k: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k {
        let i = rng.random_range(0..pop.len());
        if (pop[i].mse, pop[i].complexity) < (pop[best].mse, pop[best].complexity) {
            best = i;
        }
    }
    best
}

fn random_terminal(rng: &mut ChaCha8Rng, n_syms: usize, symbols: &[String]) -> Node {
    if n_syms > 0 && rng.random_bool(0.6) {
        Node::Variable(symbols[rng.random_range(0..n_syms)].clone())
    } else {
        Node::Constant(rng.random_range(-5.0..5.0))
    }
}

fn random_tree(
    rng: &mut ChaCha8Rng,
    depth: usize,
    full: bool,
    n_syms: usize,
    symbols: &[String],
) -> Node {
    if depth <= 1 || (!full && rng.random_bool(0.3)) {
        return random_terminal(rng, n_syms, symbols);
    }
    if rng.random_bool(0.75) {
        let op = BINARIES[rng.random_range(0..BINARIES.len())];
        Node::Binary(
            op,
            Box::new(random_tree(rng, depth - 1, full, n_syms, symbols)),
            Box::new(random_tree(rng, depth - 1, full, n_syms, symbols)),
        )
    } else {
        let op = UNARIES[rng.random_range(0..UNARIES.len())];
        Node::Unary(
            op,
            Box::new(random_tree(rng, depth - 1, full, n_syms, symbols)),
        )
    }
}

fn count(node: &Node) -> usize {
    match node {
        Node::Constant(_) | Node::Variable(_) => 1,
        Node::Unary(_, a) => 1 + count(a),
        Node::Binary(_, a, b) => 1 + count(a) + count(b),
    }
}

/// Preorder fetch of subtree `idx`.
fn subtree(node: &Node, idx: usize) -> &Node {
    fn walk<'a>(node: &'a Node, idx: &mut usize) -> Option<&'a Node> {
        if *idx == 0 {
            return Some(node);
        }
        *idx -= 1;
        match node {
            Node::Constant(_) | Node::Variable(_) => None,
            Node::Unary(_, a) => walk(a, idx),
            Node::Binary(_, a, b) => walk(a, idx).or_else(|| walk(b, idx)),
        }
    }
    let mut i = idx;
    walk(node, &mut i).expect("index within node count")
}

/// Preorder replacement of subtree `idx`.
fn replace(node: &Node, idx: usize, with: &Node) -> Node {
    fn walk(node: &Node, idx: &mut usize, with: &Node) -> Node {
        if *idx == 0 {
            *idx = usize::MAX;
            return with.clone();
        }
        *idx -= 1;
        match node {
            Node::Constant(_) | Node::Variable(_) => node.clone(),
            Node::Unary(op, a) => Node::Unary(*op, Box::new(walk(a, idx, with))),
            Node::Binary(op, a, b) => {
                let left = walk(a, idx, with);
                Node::Binary(*op, Box::new(left), Box::new(walk(b, idx, with)))
            }
        }
    }
    let mut i = idx;
    walk(node, &mut i, with)
}

fn crossover(a: &Node, b: &Node, max_complexity: usize, rng: &mut ChaCha8Rng) -> Node {
    for _ in 0..3 {
        let ia = rng.random_range(0..count(a));
        let ib = rng.random_range(0..count(b));
        let child = replace(a, ia, subtree(b, ib));
        if count(&child) <= max_complexity {
            return child;
        }
    }
    a.clone()
}

fn mutate(node: &Node, rng: &mut ChaCha8Rng, n_syms: usize, symbols: &[String]) -> Node {
    let roll: f64 = rng.random();
    if roll < 0.6 {
        let idx = rng.random_range(0..count(node));
        let sub = random_tree(rng, 3, false, n_syms, symbols);
        replace(node, idx, &sub)
    } else if roll < 0.85 {
        // Jitter one constant, if the tree has any.
        let consts = constant_indices(node);
        if consts.is_empty() {
            let idx = rng.random_range(0..count(node));
            return replace(node, idx, &random_terminal(rng, n_syms, symbols));
        }
        let pick = consts[rng.random_range(0..consts.len())];
        let Node::Constant(c) = subtree(node, pick) else {
            unreachable!()
        };
        let z: f64 = rng.sample(StandardNormal);
        replace(node, pick, &Node::Constant(c + z * 0.3 * (1.0 + c.abs())))
    } else {
        // Hoist a subtree to fight bloat.
        let idx = rng.random_range(0..count(node));
        subtree(node, idx).clone()
    }
}

fn constant_indices(node: &Node) -> Vec<usize> {
    fn walk(node: &Node, next: &mut usize, out: &mut Vec<usize>) {
        let here = *next;
        *next += 1;
        match node {
            Node::Constant(_) => out.push(here),
            Node::Variable(_) => {}
            Node::Unary(_, a) => walk(a, next, out),
            Node::Binary(_, a, b) => {
                walk(a, next, out);
                walk(b, next, out);
            }
        }
    }
    let mut out = Vec::new();
    let mut next = 0;
    walk(node, &mut next, &mut out);
    out
}

/// Coordinate hill-climb over the tree's constants. The candidate ladder
/// includes snapped values (0, ±1, round) so near-integer coefficients land
/// exactly and negligible terms can vanish in simplification.
fn refine_constants(node: &Node, ctx: &mut Ctx) -> Node {
    let consts = constant_indices(node);
    if consts.is_empty() {
        return node.clone();
    }
    let mut best = node.clone();
    let mut best_mse = ctx.mse(&best);
    for _pass in 0..2 {
        for &idx in &consts {
            let mut tries = 0;
            loop {
                let Node::Constant(c) = subtree(&best, idx) else {
                    unreachable!()
                };
                let c = *c;
                let ladder = [
                    c * 1.5,
                    c * 0.5,
                    c + 1.0,
                    c - 1.0,
                    c * 1.05,
                    c * 0.95,
                    c + 0.01,
                    c - 0.01,
                    c.round(),
                    0.0,
                    1.0,
                    -1.0,
                ];
                let mut improved = false;
                for cand in ladder {
                    let tree = replace(&best, idx, &Node::Constant(cand));
                    let mse = ctx.mse(&tree);
                    if mse < best_mse {
                        best = tree;
                        best_mse = mse;
                        improved = true;
                    }
                }
                tries += 1;
                if !improved || tries >= 8 {
                    break;
                }
            }
        }
    }
    best
}
