//! Symbolic regression over property tables, the iterative domain-deepening
//! loop, and Physical Relation Graph assembly with contribution weights.

mod gp;

use crate::expr::{Bindings, ExpressionTree};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Quantization level of a physical property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Action,
    Simulation,
    Effect,
}

impl Level {
    fn rank(self) -> u8 {
        match self {
            Level::Action => 0,
            Level::Simulation => 1,
            Level::Effect => 2,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Action => write!(f, "Action"),
            Level::Simulation => write!(f, "Simulation"),
            Level::Effect => write!(f, "Effect"),
        }
    }
}

impl std::str::FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Action" => Ok(Level::Action),
            "Simulation" => Ok(Level::Simulation),
            "Effect" => Ok(Level::Effect),
            other => Err(format!("unknown level `{other}`")),
        }
    }
}

/// One measured property: a named sample column with its level tag and an
/// optional parent it was derived from (e.g. a velocity differenced from a
/// position trace).
#[derive(Debug, Clone)]
pub struct VariableColumn {
    pub symbol: String,
    pub level: Level,
    pub parent: Option<String>,
    pub unit: String,
    pub samples: Vec<f64>,
}

impl VariableColumn {
    pub fn new(
        symbol: impl Into<String>,
        level: Level,
        parent: Option<&str>,
        unit: impl Into<String>,
        samples: Vec<f64>,
    ) -> Self {
        Self {
            symbol: symbol.into(),
            level,
            parent: parent.map(str::to_owned),
            unit: unit.into(),
            samples,
        }
    }

    /// Population standard deviation of the column.
    pub fn std(&self) -> f64 {
        let n = self.samples.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.samples.iter().sum::<f64>() / n;
        (self.samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}

/// Ordered set of property columns, all the same length.
#[derive(Debug, Clone)]
pub struct VariableTable {
    columns: Vec<VariableColumn>,
}

impl VariableTable {
    pub fn new(columns: Vec<VariableColumn>) -> Result<Self, SregressError> {
        if columns.is_empty() {
            return Err(SregressError::BadTable("no columns".into()));
        }
        let n = columns[0].samples.len();
        if n == 0 {
            return Err(SregressError::BadTable("empty sample columns".into()));
        }
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, c) in columns.iter().enumerate() {
            if c.samples.len() != n {
                return Err(SregressError::BadTable(format!(
                    "column `{}` has {} samples, expected {n}",
                    c.symbol,
                    c.samples.len()
                )));
            }
            if !c.samples.iter().all(|v| v.is_finite()) {
                return Err(SregressError::BadTable(format!(
                    "column `{}` contains non-finite samples",
                    c.symbol
                )));
            }
            if index.insert(c.symbol.as_str(), i).is_some() {
                return Err(SregressError::BadTable(format!(
                    "duplicate column `{}`",
                    c.symbol
                )));
            }
        }
        for c in &columns {
            if let Some(p) = &c.parent {
                let pi = *index.get(p.as_str()).ok_or_else(|| {
                    SregressError::BadTable(format!(
                        "column `{}` names missing parent `{p}`",
                        c.symbol
                    ))
                })?;
                // Children sit at the same or a lower level than their parent.
                if c.level.rank() > columns[pi].level.rank() {
                    return Err(SregressError::BadTable(format!(
                        "column `{}` ({}) outranks its parent `{p}` ({})",
                        c.symbol, c.level, columns[pi].level
                    )));
                }
                if c.level == Level::Effect && columns[pi].level == Level::Action {
                    return Err(SregressError::BadTable(format!(
                        "effect column `{}` has an Action-level parent",
                        c.symbol
                    )));
                }
            }
        }
        // Parent links must form a forest.
        for c in &columns {
            let mut hops = 0usize;
            let mut cur = c.parent.as_deref();
            while let Some(p) = cur {
                hops += 1;
                if hops > columns.len() {
                    return Err(SregressError::BadTable(format!(
                        "parent cycle through `{}`",
                        c.symbol
                    )));
                }
                cur = columns[index[p]].parent.as_deref();
            }
        }
        Ok(Self { columns })
    }

    pub fn n_samples(&self) -> usize {
        self.columns[0].samples.len()
    }

    pub fn columns(&self) -> &[VariableColumn] {
        &self.columns
    }

    pub fn column(&self, symbol: &str) -> Option<&VariableColumn> {
        self.columns.iter().find(|c| c.symbol == symbol)
    }

    pub fn level_of(&self, symbol: &str) -> Option<Level> {
        self.column(symbol).map(|c| c.level)
    }

    pub fn levels(&self) -> BTreeMap<String, Level> {
        self.columns
            .iter()
            .map(|c| (c.symbol.clone(), c.level))
            .collect()
    }

    /// Columns with no parent, excluding `target`.
    pub fn roots(&self, target: &str) -> BTreeSet<String> {
        self.columns
            .iter()
            .filter(|c| c.parent.is_none() && c.symbol != target)
            .map(|c| c.symbol.clone())
            .collect()
    }

    pub fn children_of(&self, symbol: &str) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.parent.as_deref() == Some(symbol))
            .map(|c| c.symbol.clone())
            .collect()
    }

    /// Row-major values for the given symbols, in the given order.
    fn rows(&self, symbols: &[String]) -> Result<Vec<Vec<f64>>, SregressError> {
        let cols: Vec<&VariableColumn> = symbols
            .iter()
            .map(|s| {
                self.column(s)
                    .ok_or_else(|| SregressError::MissingSymbol(s.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok((0..self.n_samples())
            .map(|r| cols.iter().map(|c| c.samples[r]).collect())
            .collect())
    }
}

/// Search budget and stochasticity knobs for one regression pass.
#[derive(Debug, Clone)]
pub struct RegressionConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub max_complexity: usize,
    pub pareto_delta: f64,
    pub seed: u64,
}

impl RegressionConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            population: 500,
            generations: 60,
            tournament: 5,
            p_crossover: 0.85,
            p_mutation: 0.2,
            max_complexity: 25,
            pareto_delta: 0.05,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SregressError> {
        if self.population == 0 || self.generations == 0 {
            return Err(SregressError::BadConfig("zero search budget".into()));
        }
        if self.tournament == 0 || self.tournament > self.population {
            return Err(SregressError::BadConfig("bad tournament size".into()));
        }
        for (name, p) in [("p_crossover", self.p_crossover), ("p_mutation", self.p_mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SregressError::BadConfig(format!("{name} outside [0,1]")));
            }
        }
        if self.pareto_delta < 0.0 {
            return Err(SregressError::BadConfig("negative pareto_delta".into()));
        }
        if self.max_complexity < 1 {
            return Err(SregressError::BadConfig("max_complexity < 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error)]
pub enum SregressError {
    #[error("need at least {need} samples, have {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("regression domain is empty")]
    EmptyDomain,
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("symbol `{0}` not in table")]
    MissingSymbol(String),
    #[error("target `{0}` may not appear in its own domain")]
    TargetInDomain(String),
    #[error("evaluation failed on {failed} of {total} samples")]
    DomainError { failed: usize, total: usize },
    #[error("relation graph cycle through `{0}`")]
    CycleDetected(String),
    #[error("pass target `{0}` is not the effect variable or a prior leaf")]
    DanglingTarget(String),
    #[error("contribution weights for `{target}` sum to {sum}, expected 1")]
    BadWeights { target: String, sum: f64 },
    #[error("bad regression config: {0}")]
    BadConfig(String),
    #[error("bad variable table: {0}")]
    BadTable(String),
}

/// Minimum sample count for a regression pass.
pub const MIN_SAMPLES: usize = 10;

/// Genetic-programming search for an expression over `domain` predicting
/// `target`, Pareto-selected for accuracy against complexity. Deterministic
/// given (data, cfg).
pub fn symbolic_regress(
    data: &VariableTable,
    target: &str,
    domain: &BTreeSet<String>,
    cfg: &RegressionConfig,
) -> Result<ExpressionTree, SregressError> {
    symbolic_regress_scored(data, target, domain, cfg).map(|(t, _)| t)
}

/// As `symbolic_regress`, additionally reporting the selected tree's MSE.
pub fn symbolic_regress_scored(
    data: &VariableTable,
    target: &str,
    domain: &BTreeSet<String>,
    cfg: &RegressionConfig,
) -> Result<(ExpressionTree, f64), SregressError> {
    cfg.validate()?;
    if domain.is_empty() {
        return Err(SregressError::EmptyDomain);
    }
    if domain.contains(target) {
        return Err(SregressError::TargetInDomain(target.to_string()));
    }
    if data.n_samples() < MIN_SAMPLES {
        return Err(SregressError::InsufficientData {
            have: data.n_samples(),
            need: MIN_SAMPLES,
        });
    }
    let y = &data
        .column(target)
        .ok_or_else(|| SregressError::MissingSymbol(target.to_string()))?
        .samples;
    let symbols: Vec<String> = domain.iter().cloned().collect();
    let rows = data.rows(&symbols)?;
    let hall = gp::search(&rows, y, &symbols, cfg);
    let selected = pareto_select_scored(&hall, cfg.pareto_delta)?;
    Ok(selected)
}

/// Among candidates within (1+δ)·min_mse, picks the lowest-complexity tree;
/// ties broken by lower mse, then by serialization order.
pub fn pareto_select(
    candidates: &[(ExpressionTree, f64)],
    delta: f64,
) -> Result<ExpressionTree, SregressError> {
    pareto_select_scored(candidates, delta).map(|(t, _)| t)
}

fn pareto_select_scored(
    candidates: &[(ExpressionTree, f64)],
    delta: f64,
) -> Result<(ExpressionTree, f64), SregressError> {
    let finite: Vec<&(ExpressionTree, f64)> =
        candidates.iter().filter(|(_, mse)| mse.is_finite()).collect();
    if finite.is_empty() {
        return Err(SregressError::EmptyCandidates);
    }
    let min_mse = finite.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    let band = min_mse * (1.0 + delta);
    let best = finite
        .into_iter()
        .filter(|(_, m)| *m <= band)
        .min_by(|(ta, ma), (tb, mb)| {
            ta.complexity()
                .cmp(&tb.complexity())
                .then(ma.total_cmp(mb))
                .then_with(|| ta.to_string().cmp(&tb.to_string()))
        })
        .expect("band contains the minimum");
    Ok((best.0.clone(), best.1))
}

/// Outcome of the domain-deepening loop.
#[derive(Debug, Clone)]
pub struct IdsrOutcome {
    pub tree: ExpressionTree,
    pub mse: f64,
    /// Number of regression passes run.
    pub iterations: usize,
    /// Domain in effect for the final pass.
    pub final_domain: BTreeSet<String>,
}

/// Iterative-deepening symbolic regression: start from the root variables,
/// regress, and replace any unselected variable with its children until a
/// pass deepens nothing. The tree is updated only when a pass improves the
/// fit; the latest accepted tree is returned.
pub fn idsr(
    data: &VariableTable,
    target: &str,
    cfg: &RegressionConfig,
) -> Result<ExpressionTree, SregressError> {
    idsr_with_trace(data, target, cfg).map(|o| o.tree)
}

/// As `idsr`, exposing iteration count and the final domain.
pub fn idsr_with_trace(
    data: &VariableTable,
    target: &str,
    cfg: &RegressionConfig,
) -> Result<IdsrOutcome, SregressError> {
    let mut domain = data.roots(target);
    if domain.is_empty() {
        return Err(SregressError::EmptyDomain);
    }
    let mut best: Option<(ExpressionTree, f64)> = None;
    let mut iterations = 0usize;
    loop {
        // Each pass gets its own derived seed so retries explore fresh
        // populations while the whole loop stays reproducible.
        let pass_cfg = RegressionConfig {
            seed: cfg
                .seed
                .wrapping_add((iterations as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            ..cfg.clone()
        };
        iterations += 1;
        let (tree, mse) = symbolic_regress_scored(data, target, &domain, &pass_cfg)?;
        let mut terminate = true;
        let selected = tree.leaf_symbols();
        for v in domain.clone() {
            if selected.contains(&v) {
                continue;
            }
            let children = data.children_of(&v);
            if !children.is_empty() {
                domain.remove(&v);
                domain.extend(children);
                terminate = false;
            }
        }
        match &best {
            Some((_, prev_mse)) if mse >= *prev_mse => {}
            _ => best = Some((tree, mse)),
        }
        if terminate {
            let (tree, mse) = best.expect("at least one pass ran");
            return Ok(IdsrOutcome {
                tree,
                mse,
                iterations,
                final_domain: domain,
            });
        }
    }
}

/// Per-variable contribution weights: mean absolute sensitivity of the tree
/// to each leaf (central differences over the samples), scaled by the leaf's
/// spread, normalized to sum 1.
pub fn contribution(
    tree: &ExpressionTree,
    data: &VariableTable,
) -> Result<BTreeMap<String, f64>, SregressError> {
    let leaves: Vec<String> = tree.leaf_symbols().into_iter().collect();
    if leaves.is_empty() {
        return Ok(BTreeMap::new());
    }
    let n = data.n_samples();
    let all_symbols: Vec<String> = data.columns().iter().map(|c| c.symbol.clone()).collect();
    let rows = data.rows(&all_symbols)?;
    let mut raw: BTreeMap<String, f64> = BTreeMap::new();
    for leaf in &leaves {
        let col = data
            .column(leaf)
            .ok_or_else(|| SregressError::MissingSymbol(leaf.clone()))?;
        let step = (1e-4 * col.std()).max(1e-8);
        let leaf_idx = all_symbols.iter().position(|s| s == leaf).unwrap();
        let mut total = 0.0;
        let mut ok = 0usize;
        for row in &rows {
            let mut bind = Bindings::new();
            for (i, s) in all_symbols.iter().enumerate() {
                bind.insert(s.clone(), row[i]);
            }
            bind.insert(leaf.clone(), row[leaf_idx] + step);
            let hi = tree.evaluate(&bind);
            bind.insert(leaf.clone(), row[leaf_idx] - step);
            let lo = tree.evaluate(&bind);
            if let (Ok(hi), Ok(lo)) = (hi, lo) {
                let d = (hi - lo) / (2.0 * step);
                if d.is_finite() {
                    total += d.abs();
                    ok += 1;
                }
            }
        }
        if ok * 2 < n {
            return Err(SregressError::DomainError {
                failed: n - ok,
                total: n,
            });
        }
        raw.insert(leaf.clone(), (total / ok as f64) * col.std());
    }
    let sum: f64 = raw.values().sum();
    if sum <= f64::MIN_POSITIVE {
        let w = 1.0 / leaves.len() as f64;
        return Ok(leaves.into_iter().map(|l| (l, w)).collect());
    }
    Ok(raw.into_iter().map(|(k, v)| (k, v / sum)).collect())
}

/// One accepted regression pass, ready for graph insertion.
#[derive(Debug, Clone)]
pub struct RegressionPass {
    pub target: String,
    pub tree: ExpressionTree,
    pub contributions: BTreeMap<String, f64>,
}

/// A property node of the relation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PrgNode {
    pub symbol: String,
    pub level: Level,
}

/// A directed explanatory edge: `source` appears in the expression fitted
/// for `target`, with the stated share of the target's variation.
#[derive(Debug, Clone)]
pub struct PrgEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
    pub expression: ExpressionTree,
    pub pass: usize,
}

/// Directed acyclic graph of learned property relations.
#[derive(Debug, Clone)]
pub struct PhysicalRelationGraph {
    nodes: Vec<PrgNode>,
    edges: Vec<PrgEdge>,
}

impl PhysicalRelationGraph {
    pub fn nodes(&self) -> &[PrgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[PrgEdge] {
        &self.edges
    }

    pub fn level_of(&self, symbol: &str) -> Option<Level> {
        self.nodes.iter().find(|n| n.symbol == symbol).map(|n| n.level)
    }

    /// Edges explaining `target`, in insertion order.
    pub fn edges_into(&self, target: &str) -> Vec<&PrgEdge> {
        self.edges.iter().filter(|e| e.target == target).collect()
    }
}

/// Insert regression passes into a relation graph. The first pass's target is
/// taken as the Effect variable; every later target must be a leaf of an
/// earlier pass's expression.
pub fn build_prg(
    passes: &[RegressionPass],
    levels: &BTreeMap<String, Level>,
) -> Result<PhysicalRelationGraph, SregressError> {
    let mut nodes: Vec<PrgNode> = Vec::new();
    let mut edges: Vec<PrgEdge> = Vec::new();
    let mut known_leaves: BTreeSet<String> = BTreeSet::new();
    let level_of = |s: &str| levels.get(s).copied().unwrap_or(Level::Simulation);
    let ensure_node = |nodes: &mut Vec<PrgNode>, symbol: &str| {
        if !nodes.iter().any(|n| n.symbol == symbol) {
            nodes.push(PrgNode {
                symbol: symbol.to_string(),
                level: level_of(symbol),
            });
        }
    };
    for (pass_idx, pass) in passes.iter().enumerate() {
        if pass_idx > 0 && !known_leaves.contains(&pass.target) {
            return Err(SregressError::DanglingTarget(pass.target.clone()));
        }
        let leaves = pass.tree.leaf_symbols();
        let sum: f64 = leaves
            .iter()
            .map(|l| pass.contributions.get(l).copied().unwrap_or(f64::NAN))
            .sum();
        if !leaves.is_empty() && (sum - 1.0).abs() > 1e-9 {
            return Err(SregressError::BadWeights {
                target: pass.target.clone(),
                sum,
            });
        }
        ensure_node(&mut nodes, &pass.target);
        for leaf in &leaves {
            ensure_node(&mut nodes, leaf);
            edges.push(PrgEdge {
                source: leaf.clone(),
                target: pass.target.clone(),
                weight: pass.contributions[leaf],
                expression: pass.tree.clone(),
                pass: pass_idx,
            });
            known_leaves.insert(leaf.clone());
        }
    }
    let graph = PhysicalRelationGraph { nodes, edges };
    if let Some(symbol) = find_cycle(&graph) {
        return Err(SregressError::CycleDetected(symbol));
    }
    Ok(graph)
}

fn find_cycle(g: &PhysicalRelationGraph) -> Option<String> {
    // DFS three-color cycle check over the edge list.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let idx: BTreeMap<&str, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.symbol.as_str(), i))
        .collect();
    let mut marks = vec![Mark::White; g.nodes.len()];
    fn visit(
        g: &PhysicalRelationGraph,
        idx: &BTreeMap<&str, usize>,
        marks: &mut [Mark],
        i: usize,
    ) -> Option<String> {
        marks[i] = Mark::Grey;
        let sym = &g.nodes[i].symbol;
        for e in g.edges.iter().filter(|e| &e.source == sym) {
            let j = idx[e.target.as_str()];
            match marks[j] {
                Mark::Grey => return Some(e.target.clone()),
                Mark::White => {
                    if let Some(c) = visit(g, idx, marks, j) {
                        return Some(c);
                    }
                }
                Mark::Black => {}
            }
        }
        marks[i] = Mark::Black;
        None
    }
    for i in 0..g.nodes.len() {
        if marks[i] == Mark::White {
            if let Some(c) = visit(g, &idx, &mut marks, i) {
                return Some(c);
            }
        }
    }
    None
}

/// Coefficient of determination of `tree` against the target column.
pub fn r_squared(tree: &ExpressionTree, data: &VariableTable, target: &str) -> f64 {
    let symbols: Vec<String> = data.columns().iter().map(|c| c.symbol.clone()).collect();
    let rows = match data.rows(&symbols) {
        Ok(r) => r,
        Err(_) => return f64::NEG_INFINITY,
    };
    let y = &data.column(target).expect("target column").samples;
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let var: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let mut sse = 0.0;
    for (row, yi) in rows.iter().zip(y) {
        let mut bind = Bindings::new();
        for (i, s) in symbols.iter().enumerate() {
            bind.insert(s.clone(), row[i]);
        }
        match tree.evaluate(&bind) {
            Ok(pred) if pred.is_finite() => sse += (pred - yi).powi(2),
            _ => return f64::NEG_INFINITY,
        }
    }
    if var == 0.0 {
        if sse == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - sse / var
    }
}
