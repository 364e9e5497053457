//! The classical Markov chain that drives the noise, and its decomposition
//! into communicating classes.

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};

/// Row sums and invariance are checked to this tolerance.
pub const TOL_CHAIN: f64 = 1e-9;
pub const DEFAULT_MIXING_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    labels: Vec<String>,
    q: DMatrix<f64>,
    gamma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    /// `max_i |Σ_j q_ij − 1|`
    pub stochastic_residual: f64,
    /// `‖γQ − γ‖∞`
    pub invariance_residual: f64,
    pub issues: Vec<String>,
}

impl ChainReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl MarkovChain {
    /// Builds a chain from row-major transition rows. Only shapes are checked
    /// here; see [`validate_chain`].
    pub fn new(labels: Vec<String>, q_rows: Vec<Vec<f64>>, gamma: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Shape("chain needs at least one state".into()));
        }
        if q_rows.len() != n || q_rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("Q must be {n}x{n}")));
        }
        if gamma.len() != n {
            return Err(Error::Shape(format!("gamma must have {n} entries")));
        }
        let q = DMatrix::from_fn(n, n, |i, j| q_rows[i][j]);
        Ok(Self { labels, q, gamma })
    }

    /// Chain with numbered labels.
    pub fn from_rows(q_rows: Vec<Vec<f64>>, gamma: Vec<f64>) -> Result<Self> {
        let labels = (0..q_rows.len()).map(|i| i.to_string()).collect();
        Self::new(labels, q_rows, gamma)
    }

    /// The single-state chain of a memoryless channel.
    pub fn trivial() -> Self {
        Self::from_rows(vec![vec![1.0]], vec![1.0]).expect("1x1 chain")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn q_entry(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn q_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.q.row(i).iter().copied().collect()).collect()
    }
}

pub fn validate_chain(chain: &MarkovChain) -> ChainReport {
    let n = chain.len();
    let mut issues = Vec::new();
    let mut stochastic_residual: f64 = 0.0;
    for i in 0..n {
        let row = chain.q.row(i);
        if row.iter().any(|&x| !(0.0..=1.0).contains(&x) || !x.is_finite()) {
            issues.push(format!("row {i} has an entry outside [0, 1]"));
        }
        stochastic_residual = stochastic_residual.max((row.sum() - 1.0).abs());
    }
    if stochastic_residual > TOL_CHAIN {
        issues.push(format!("rows of Q do not sum to 1 (residual {stochastic_residual:.3e})"));
    }
    if chain.gamma.iter().any(|&g| g < 0.0 || !g.is_finite()) {
        issues.push("gamma has a negative entry".into());
    }
    let gsum: f64 = chain.gamma.iter().sum();
    if (gsum - 1.0).abs() > TOL_CHAIN {
        issues.push(format!("gamma sums to {gsum}"));
    }
    let mut invariance_residual: f64 = 0.0;
    for j in 0..n {
        let gq: f64 = (0..n).map(|i| chain.gamma[i] * chain.q[(i, j)]).sum();
        invariance_residual = invariance_residual.max((gq - chain.gamma[j]).abs());
    }
    if invariance_residual > TOL_CHAIN {
        issues.push(format!("gamma is not invariant (residual {invariance_residual:.3e})"));
    }
    ChainReport { stochastic_residual, invariance_residual, issues }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    Aperiodic,
    /// Deterministic cycle; `members` are listed in cycle order.
    PeriodicCycle {
        period: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommClass {
    pub members: Vec<usize>,
    pub gamma: f64,
    pub kind: ClassKind,
}

impl CommClass {
    pub fn period(&self) -> usize {
        match self.kind {
            ClassKind::Aperiodic => 1,
            ClassKind::PeriodicCycle { period } => period,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, ClassKind::PeriodicCycle { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassDecomposition {
    /// Aperiodic classes first, then periodic ones; each group ordered by
    /// smallest member index.
    pub classes: Vec<CommClass>,
    /// States outside every positive-mass recurrent class.
    pub dropped: Vec<usize>,
}

impl ClassDecomposition {
    pub fn aperiodic(&self) -> Vec<usize> {
        (0..self.classes.len()).filter(|&c| !self.classes[c].is_periodic()).collect()
    }

    pub fn periodic(&self) -> Vec<usize> {
        (0..self.classes.len()).filter(|&c| self.classes[c].is_periodic()).collect()
    }

    pub fn class_of(&self, state: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.members.contains(&state))
    }

    pub fn min_gamma(&self) -> f64 {
        self.classes.iter().map(|c| c.gamma).fold(f64::INFINITY, f64::min)
    }

    /// Least common multiple of all class periods.
    pub fn period_lcm(&self) -> usize {
        self.classes.iter().fold(1, |acc, c| lcm(acc, c.period()))
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

pub fn decompose_classes(chain: &MarkovChain) -> Result<ClassDecomposition> {
    let report = validate_chain(chain);
    if !report.is_valid() {
        return Err(Error::Validation(report.issues.join("; ")));
    }
    let n = chain.len();
    let mut graph = DiGraph::<usize, ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|i| graph.add_node(i)).collect();
    for i in 0..n {
        for j in 0..n {
            if chain.q[(i, j)] > 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut classes = Vec::new();
    let mut dropped = Vec::new();
    for scc in tarjan_scc(&graph) {
        let mut members: Vec<usize> = scc.iter().map(|&v| graph[v]).collect();
        members.sort_unstable();
        let closed = members.iter().all(|&i| (0..n).all(|j| chain.q[(i, j)] <= 0.0 || members.contains(&j)));
        let mass: f64 = members.iter().map(|&i| chain.gamma[i]).sum();
        if !closed || mass <= TOL_CHAIN {
            dropped.extend(members);
            continue;
        }
        let restricted = restrict(chain, &members);
        let period = class_period(&restricted);
        let kind = if period == 1 {
            ClassKind::Aperiodic
        } else {
            members = cycle_order(chain, &members, period)?;
            ClassKind::PeriodicCycle { period }
        };
        classes.push(CommClass { members, gamma: mass, kind });
    }
    classes.sort_by_key(|c| (c.is_periodic(), c.members.iter().copied().min()));
    dropped.sort_unstable();
    Ok(ClassDecomposition { classes, dropped })
}

/// Walks a periodic class as a deterministic cycle starting from its
/// smallest member.
fn cycle_order(chain: &MarkovChain, members: &[usize], period: usize) -> Result<Vec<usize>> {
    let unsupported = || {
        Error::UnsupportedStructure(format!("class {members:?} has period {period} but is not a deterministic cycle"))
    };
    if members.len() != period {
        return Err(unsupported());
    }
    let mut order = vec![members[0]];
    let mut cur = members[0];
    for _ in 1..period {
        let next = (0..chain.len()).find(|&j| (chain.q[(cur, j)] - 1.0).abs() <= TOL_CHAIN).ok_or_else(unsupported)?;
        if order.contains(&next) {
            return Err(unsupported());
        }
        order.push(next);
        cur = next;
    }
    if (chain.q[(cur, order[0])] - 1.0).abs() > TOL_CHAIN {
        return Err(unsupported());
    }
    Ok(order)
}

fn restrict(chain: &MarkovChain, members: &[usize]) -> DMatrix<f64> {
    let k = members.len();
    DMatrix::from_fn(k, k, |a, b| chain.q[(members[a], members[b])])
}

/// Period of an irreducible transition matrix: gcd of `level(u) + 1 − level(v)`
/// over all edges, with BFS levels from state 0.
pub fn class_period(q: &DMatrix<f64>) -> usize {
    let n = q.nrows();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if q[(u, v)] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for u in 0..n {
        for v in 0..n {
            if q[(u, v)] > 0.0 && level[u] != usize::MAX && level[v] != usize::MAX {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
            }
        }
    }
    g.max(1)
}

/// `Qⁿ` by repeated squaring.
pub fn n_step_matrix(chain: &MarkovChain, n: usize) -> DMatrix<f64> {
    matrix_power(&chain.q, n)
}

pub(crate) fn matrix_power(q: &DMatrix<f64>, mut n: usize) -> DMatrix<f64> {
    let mut result = DMatrix::identity(q.nrows(), q.ncols());
    let mut base = q.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Whether every `k`-step transition inside an aperiodic class lies strictly
/// within `(1 ± α)` of `γ_j/γ_C`. Periodic classes count as mixed whenever
/// `k` is a multiple of the period.
pub fn is_mixed_at(chain: &MarkovChain, class: &CommClass, alpha: f64, k: usize) -> bool {
    if let ClassKind::PeriodicCycle { period } = class.kind {
        return k.is_multiple_of(period);
    }
    let members = &class.members;
    let pk = matrix_power(&restrict(chain, members), k);
    (0..members.len()).all(|i| {
        (0..members.len()).all(|j| {
            let t = chain.gamma[members[j]] / class.gamma;
            (1.0 - alpha) * t < pk[(i, j)] && pk[(i, j)] < (1.0 + alpha) * t
        })
    })
}

/// Smallest `k ≥ 1` such that every `k`-step transition probability inside
/// the class lies strictly within `(1 ± α)` of the in-class stationary
/// weight `γ_j/γ_C`. For a periodic class the answer is its period.
pub fn mixing_block(chain: &MarkovChain, class: &CommClass, alpha: f64) -> Result<usize> {
    mixing_block_with(chain, class, alpha, 1, 1, DEFAULT_MIXING_CAP)
}

/// As [`mixing_block`], restricted to `k ≥ min_k` and `k` a multiple of
/// `multiple_of`.
pub fn mixing_block_with(
    chain: &MarkovChain,
    class: &CommClass,
    alpha: f64,
    min_k: usize,
    multiple_of: usize,
    cap: usize,
) -> Result<usize> {
    let step = match class.kind {
        ClassKind::PeriodicCycle { period } => lcm(period, multiple_of.max(1)),
        ClassKind::Aperiodic => multiple_of.max(1),
    };
    let start = min_k.max(1).div_ceil(step) * step;
    if class.is_periodic() {
        return Ok(start);
    }
    let members = &class.members;
    let p = restrict(chain, members);
    let target: Vec<f64> = members.iter().map(|&j| chain.gamma[j] / class.gamma).collect();
    let mixed = |m: &DMatrix<f64>| {
        (0..members.len()).all(|i| {
            (0..members.len()).all(|j| {
                let v = m[(i, j)];
                let t = target[j];
                (1.0 - alpha) * t < v && v < (1.0 + alpha) * t
            })
        })
    };
    let stride = matrix_power(&p, step);
    let mut cur = matrix_power(&p, start);
    let mut k = start;
    while k <= cap {
        if mixed(&cur) {
            return Ok(k);
        }
        cur = &cur * &stride;
        k += step;
    }
    Err(Error::NoMixingWithinCap { cap })
}
