//! Branch-and-bound for 0/1 programs whose constraint matrix has only unit
//! coefficients (set partitioning, packing and covering).
//!
//! Bounds come from the linear relaxation, solved with a dual-simplex warm
//! start from the parent node. Nodes are selected best-bound first; after a
//! node is branched, the up-branch is explored immediately so incumbents
//! appear early.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem, Solution, Variable};

const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

/// One constraint: the sum of the listed 0/1 variables compared to `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cols: Vec<usize>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinaryProgram {
    pub costs: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    /// Stop once (incumbent - bound) / incumbent is at most this.
    pub gap: f64,
    pub time_budget: Option<Duration>,
    /// All costs are integers, so bounds may be rounded up.
    pub integral_costs: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            gap: 0.0,
            time_budget: None,
            integral_costs: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnbStatus {
    /// The search tree was exhausted.
    Optimal,
    /// Stopped early with the proven gap within target.
    GapReached,
    /// Stopped by the time budget; the reported gap is what was proven.
    BudgetExhausted,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub status: BnbStatus,
    /// Indices of the variables set to one.
    pub selection: Vec<usize>,
    pub objective: f64,
    /// Certified lower bound on the optimum.
    pub bound: f64,
    pub nodes: u64,
}

impl BnbResult {
    pub fn gap(&self) -> f64 {
        relative_gap(self.objective, self.bound)
    }
}

pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    if objective.abs() < 1e-12 {
        if bound >= objective - 1e-9 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((objective - bound) / objective.abs()).max(0.0)
    }
}

impl BinaryProgram {
    /// Whether `selection` satisfies every row.
    pub fn is_feasible(&self, selection: &[usize]) -> bool {
        let mut on = vec![false; self.costs.len()];
        for &j in selection {
            if j >= on.len() || on[j] {
                return false;
            }
            on[j] = true;
        }
        self.rows.iter().all(|row| {
            let lhs = row.cols.iter().filter(|&&j| on[j]).count() as f64;
            match row.sense {
                RowSense::Eq => (lhs - row.rhs).abs() < INT_TOL,
                RowSense::Le => lhs <= row.rhs + INT_TOL,
                RowSense::Ge => lhs >= row.rhs - INT_TOL,
            }
        })
    }

    pub fn cost_of(&self, selection: &[usize]) -> f64 {
        selection.iter().map(|&j| self.costs[j]).sum()
    }

    fn relaxation(&self) -> (Problem, Vec<Variable>) {
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<Variable> = self
            .costs
            .iter()
            .map(|&c| lp.add_var(c, (0.0, 1.0)))
            .collect();
        for row in &self.rows {
            let op = match row.sense {
                RowSense::Eq => ComparisonOp::Eq,
                RowSense::Le => ComparisonOp::Le,
                RowSense::Ge => ComparisonOp::Ge,
            };
            lp.add_constraint(row.cols.iter().map(|&j| (vars[j], 1.0)), op, row.rhs);
        }
        (lp, vars)
    }
}

struct Node {
    bound: f64,
    seq: u64,
    lp: Solution,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: smaller bound first, then older node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    program: &'a BinaryProgram,
    vars: Vec<Variable>,
    opts: BnbOptions,
    incumbent: Option<(f64, Vec<usize>)>,
    /// Smallest bound among nodes discarded only because of the gap target.
    gap_pruned: f64,
    nodes: u64,
    seq: u64,
}

impl Search<'_> {
    fn certified(&self, lp_objective: f64) -> f64 {
        let slack = 1e-9 * lp_objective.abs().max(1.0);
        let b = lp_objective - slack;
        if self.opts.integral_costs {
            b.ceil()
        } else {
            b
        }
    }

    /// Whether a node with this bound can be discarded; records bounds of
    /// nodes dropped because of the gap tolerance.
    fn prune(&mut self, bound: f64) -> bool {
        let Some((inc, _)) = &self.incumbent else {
            return false;
        };
        let inc = *inc;
        if bound >= inc - 1e-9 * inc.abs().max(1.0) {
            return true;
        }
        if relative_gap(inc, bound) <= self.opts.gap {
            self.gap_pruned = self.gap_pruned.min(bound);
            return true;
        }
        false
    }

    /// Branching variable, or the integral selection if there is none.
    fn branch_var(&self, lp: &Solution) -> Result<usize, Vec<usize>> {
        let mut best: Option<(f64, usize)> = None;
        let mut selection = Vec::new();
        for (j, &var) in self.vars.iter().enumerate() {
            let x = lp.var_value(var);
            let frac = (x - x.round()).abs();
            if frac > INT_TOL {
                let score = (x - 0.5).abs();
                if best.is_none_or(|(s, _)| score < s - 1e-12) {
                    best = Some((score, j));
                }
            } else if x > 0.5 {
                selection.push(j);
            }
        }
        match best {
            Some((_, j)) => Ok(j),
            None => Err(selection),
        }
    }

    fn offer(&mut self, selection: Vec<usize>) {
        if !self.program.is_feasible(&selection) {
            return;
        }
        let cost = self.program.cost_of(&selection);
        if self.incumbent.as_ref().is_none_or(|(c, _)| cost < *c) {
            self.incumbent = Some((cost, selection));
        }
    }

    fn child(&mut self, parent: &Solution, var: usize, value: f64) -> Option<Node> {
        self.nodes += 1;
        let lp = parent
            .clone()
            .fix_var(self.vars[var], value)
            .ok()?
            .into_solution()
            .ok()?;
        self.seq += 1;
        Some(Node {
            bound: self.certified(lp.objective()),
            seq: self.seq,
            lp,
        })
    }
}

/// Solve `program` to within `opts.gap`. `hint` is an optional starting
/// incumbent; it is ignored if infeasible.
pub fn solve(program: &BinaryProgram, opts: &BnbOptions, hint: Option<&[usize]>) -> BnbResult {
    let started = Instant::now();
    let (lp, vars) = program.relaxation();
    let mut search = Search {
        program,
        vars,
        opts: *opts,
        incumbent: None,
        gap_pruned: f64::INFINITY,
        nodes: 1,
        seq: 0,
    };
    if let Some(h) = hint {
        let mut h = h.to_vec();
        h.sort_unstable();
        search.offer(h);
    }
    let root = match lp.solve().ok().and_then(|o| o.into_solution().ok()) {
        Some(s) => s,
        None => {
            return BnbResult {
                status: BnbStatus::Infeasible,
                selection: Vec::new(),
                objective: f64::INFINITY,
                bound: f64::INFINITY,
                nodes: 1,
            }
        }
    };
    let mut open = BinaryHeap::new();
    open.push(Node {
        bound: search.certified(root.objective()),
        seq: 0,
        lp: root,
    });
    let mut status = BnbStatus::Optimal;

    'outer: while let Some(node) = open.pop() {
        let mut current = Some(node);
        while let Some(node) = current.take() {
            if search.prune(node.bound) {
                continue;
            }
            let open_bound = open.peek().map_or(f64::INFINITY, |n| n.bound);
            let global = node.bound.min(open_bound).min(search.gap_pruned);
            if let Some((inc, _)) = &search.incumbent {
                if relative_gap(*inc, global) <= opts.gap {
                    status = BnbStatus::GapReached;
                    open.push(node);
                    break 'outer;
                }
                if opts.time_budget.is_some_and(|b| started.elapsed() >= b) {
                    status = BnbStatus::BudgetExhausted;
                    open.push(node);
                    break 'outer;
                }
            }
            let var = match search.branch_var(&node.lp) {
                Ok(var) => var,
                Err(selection) => {
                    search.offer(selection);
                    continue;
                }
            };
            let down = search.child(&node.lp, var, 0.0);
            let up = search.child(&node.lp, var, 1.0);
            if let Some(d) = down {
                if !search.prune(d.bound) {
                    open.push(d);
                }
            }
            current = up;
        }
    }

    match search.incumbent.take() {
        Some((objective, selection)) => {
            let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
            let bound = objective.min(open_bound).min(search.gap_pruned);
            if status == BnbStatus::Optimal && bound < objective {
                status = BnbStatus::GapReached;
            }
            BnbResult {
                status,
                selection,
                objective,
                bound,
                nodes: search.nodes,
            }
        }
        None => BnbResult {
            status: BnbStatus::Infeasible,
            selection: Vec::new(),
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            nodes: search.nodes,
        },
    }
}
