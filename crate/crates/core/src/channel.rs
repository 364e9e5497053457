//! CPT maps in Kraus form and the Markov-modulated block channel.
//!
//! Block outputs are computed by a forward pass over slot positions that
//! keeps one partial output per chain state: at each slot the partial
//! outputs are mixed with the transition probabilities and the map of the
//! new state is applied to that slot only. This is exact for every input
//! (entangled or not) and costs `|I|` single-slot applications per slot
//! instead of one product map per path.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{apply_kraus_on_slot, check_dim, ComplexMatrix, DensityMatrix, C64};
use crate::markov::{decompose_classes, matrix_power, validate_chain, ClassDecomposition, ClassKind, MarkovChain};

pub const TOL_CPT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CptMap {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CptReport {
    /// `‖Σ K†K − I‖∞` (largest entry modulus)
    pub tp_residual: f64,
    pub min_choi_eigenvalue: f64,
}

impl CptReport {
    pub fn is_valid(&self) -> bool {
        self.tp_residual <= TOL_CPT && self.min_choi_eigenvalue >= -TOL_CPT
    }
}

fn pauli(k: usize) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let e = match k {
        0 => vec![o, z, z, o],
        1 => vec![z, o, o, z],
        2 => vec![z, -i, i, z],
        _ => vec![o, z, z, -o],
    };
    ComplexMatrix::from_row_major(2, 2, e).unwrap()
}

impl CptMap {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::Shape("a map needs at least one Kraus operator".into()));
        };
        let (out_dim, in_dim) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != out_dim || k.cols() != in_dim) {
            return Err(Error::Shape("Kraus operators of different shapes".into()));
        }
        Ok(Self { in_dim, out_dim, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self { in_dim: dim, out_dim: dim, kraus: vec![ComplexMatrix::identity(dim)] }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// `ρ ↦ XρX`
    pub fn bit_flip() -> Self {
        Self { in_dim: 2, out_dim: 2, kraus: vec![pauli(1)] }
    }

    /// Qubit depolarizing channel `ρ ↦ (1−p)ρ + p·I/2`.
    pub fn depolarizing(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        let mut kraus = vec![pauli(0).scale((1.0 - 0.75 * p).sqrt())];
        for k in 1..4 {
            kraus.push(pauli(k).scale((p / 4.0).sqrt()));
        }
        Self { in_dim: 2, out_dim: 2, kraus }
    }

    /// Qubit dephasing `ρ ↦ (1−p/2)ρ + (p/2)ZρZ`; `p = 1` kills coherences.
    pub fn dephasing(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            in_dim: 2,
            out_dim: 2,
            kraus: vec![pauli(0).scale((1.0 - p / 2.0).sqrt()), pauli(3).scale((p / 2.0).sqrt())],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        apply_kraus_on_slot(rho, 1, 1, &self.kraus)
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.in_dim {
            return Err(Error::Shape(format!("map expects dim {}, got {}", self.in_dim, rho.dim())));
        }
        Ok(DensityMatrix::from_trusted(self.apply(rho.matrix())))
    }

    /// Heisenberg-picture map `Y ↦ Σ K†YK`.
    pub fn adjoint(&self) -> CptMap {
        CptMap { in_dim: self.out_dim, out_dim: self.in_dim, kraus: self.kraus.iter().map(|k| k.adjoint()).collect() }
    }

    /// `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`
    pub fn choi(&self) -> ComplexMatrix {
        let (din, dout) = (self.in_dim, self.out_dim);
        let mut choi = ComplexMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let mut e = ComplexMatrix::zeros(din, din);
                e.set(i, j, C64::new(1.0, 0.0));
                let out = self.apply(&e);
                for a in 0..dout {
                    for b in 0..dout {
                        choi.set(i * dout + a, j * dout + b, out.get(a, b));
                    }
                }
            }
        }
        choi
    }
}

pub fn validate_cpt(map: &CptMap) -> CptReport {
    let mut sum = ComplexMatrix::zeros(map.in_dim, map.in_dim);
    for k in &map.kraus {
        sum += &(&k.adjoint() * k);
    }
    let tp_residual = sum.max_abs_diff(&ComplexMatrix::identity(map.in_dim));
    let min_choi_eigenvalue = map.choi().eigenvalues_hermitian().last().copied().unwrap_or(0.0);
    CptReport { tp_residual, min_choi_eigenvalue }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BranchId {
    Aperiodic {
        class: usize,
    },
    /// `phase` is the position in the class's cycle order at which the block starts.
    Periodic {
        class: usize,
        phase: usize,
    },
}

impl BranchId {
    pub fn class(&self) -> usize {
        match *self {
            BranchId::Aperiodic { class } | BranchId::Periodic { class, .. } => class,
        }
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchId::Aperiodic { class } => write!(f, "C{class}"),
            BranchId::Periodic { class, phase } => write!(f, "C{class}@{phase}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MemoryChannel {
    chain: MarkovChain,
    maps: Vec<CptMap>,
    decomposition: ClassDecomposition,
}

impl MemoryChannel {
    pub fn new(chain: MarkovChain, maps: Vec<CptMap>) -> Result<Self> {
        let report = validate_chain(&chain);
        if !report.is_valid() {
            return Err(Error::Validation(report.issues.join("; ")));
        }
        if maps.len() != chain.len() {
            return Err(Error::Shape(format!("{} chain states but {} maps", chain.len(), maps.len())));
        }
        let (din, dout) = (maps[0].in_dim, maps[0].out_dim);
        for (i, m) in maps.iter().enumerate() {
            if m.in_dim != din || m.out_dim != dout {
                return Err(Error::Shape(format!("map {i} has different dimensions")));
            }
            let r = validate_cpt(m);
            if !r.is_valid() {
                return Err(Error::Validation(format!(
                    "map {i} is not CPT (trace residual {:.3e}, min Choi eigenvalue {:.3e})",
                    r.tp_residual, r.min_choi_eigenvalue
                )));
            }
        }
        let decomposition = decompose_classes(&chain)?;
        Ok(Self { chain, maps, decomposition })
    }

    pub fn memoryless(map: CptMap) -> Self {
        Self::new(MarkovChain::trivial(), vec![map]).expect("single CPT map")
    }

    /// `Q = I`: each map is its own class and is used for the whole block.
    pub fn convex_combination(maps: Vec<CptMap>, weights: Vec<f64>) -> Result<Self> {
        let n = maps.len();
        let q = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(MarkovChain::from_rows(q, weights)?, maps)
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn maps(&self) -> &[CptMap] {
        &self.maps
    }

    pub fn decomposition(&self) -> &ClassDecomposition {
        &self.decomposition
    }

    pub fn in_dim(&self) -> usize {
        self.maps[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.maps[0].out_dim
    }

    /// Branches in the global order (aperiodic classes, then periodic
    /// phases by class) with their weights.
    pub fn branch_channels(&self) -> Vec<(BranchId, f64)> {
        let mut out = Vec::new();
        for (c, class) in self.decomposition.classes.iter().enumerate() {
            match class.kind {
                ClassKind::Aperiodic => out.push((BranchId::Aperiodic { class: c }, class.gamma)),
                ClassKind::PeriodicCycle { period } => {
                    for phase in 0..period {
                        out.push((BranchId::Periodic { class: c, phase }, class.gamma / period as f64));
                    }
                }
            }
        }
        out
    }

    /// Distribution of the chain state at the first slot: `γ`.
    pub fn stationary_init(&self) -> Vec<f64> {
        self.chain.gamma().to_vec()
    }

    /// `γ` restricted to a class and renormalized.
    pub fn class_init(&self, class: usize) -> Vec<f64> {
        let c = &self.decomposition.classes[class];
        let mut init = vec![0.0; self.chain.len()];
        for &i in &c.members {
            init[i] = self.chain.gamma()[i] / c.gamma;
        }
        init
    }

    pub fn branch_init(&self, branch: BranchId) -> Vec<f64> {
        match branch {
            BranchId::Aperiodic { class } => self.class_init(class),
            BranchId::Periodic { class, phase } => {
                let c = &self.decomposition.classes[class];
                let mut init = vec![0.0; self.chain.len()];
                init[c.members[phase % c.members.len()]] = 1.0;
                init
            }
        }
    }

    /// The same branch seen `shift` slots later.
    pub fn shifted_branch(&self, branch: BranchId, shift: usize) -> BranchId {
        match branch {
            BranchId::Periodic { class, phase } => {
                let l = self.decomposition.classes[class].period();
                BranchId::Periodic { class, phase: (phase + shift) % l }
            }
            other => other,
        }
    }

    fn check_block(&self, rho: &DensityMatrix, n: usize) -> Result<()> {
        let expect = crate::linalg::checked_pow(self.in_dim(), n)?;
        crate::linalg::checked_pow(self.out_dim(), n)?;
        if rho.dim() != expect {
            return Err(Error::Shape(format!("block input must have dim {expect}, got {}", rho.dim())));
        }
        Ok(())
    }

    /// `Φ⁽ⁿ⁾(ρ)`
    pub fn apply_block(&self, rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
        self.check_block(rho, n)?;
        let out = self.apply_law(&self.stationary_init(), rho.matrix(), &consecutive(n), false)?;
        Ok(DensityMatrix::from_trusted(out))
    }

    /// `Φ_C⁽ⁿ⁾(ρ)` for an aperiodic class.
    pub fn apply_class(&self, class: usize, rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
        let c = self.class(class)?;
        if c.is_periodic() {
            return Err(Error::WrongClassKind(format!("class {class} is periodic; use apply_periodic_branch")));
        }
        self.check_block(rho, n)?;
        let out = self.apply_law(&self.class_init(class), rho.matrix(), &consecutive(n), false)?;
        Ok(DensityMatrix::from_trusted(out))
    }

    /// `Φ_{i_k} ⊗ Φ_{i_{k+1}} ⊗ …` for the periodic class starting at `phase`.
    pub fn apply_periodic_branch(
        &self,
        class: usize,
        phase: usize,
        rho: &DensityMatrix,
        n: usize,
    ) -> Result<DensityMatrix> {
        let c = self.class(class)?;
        if !c.is_periodic() {
            return Err(Error::WrongClassKind(format!("class {class} is aperiodic; use apply_class")));
        }
        if phase >= c.period() {
            return Err(Error::Shape(format!("phase {phase} outside a cycle of length {}", c.period())));
        }
        self.check_block(rho, n)?;
        let init = self.branch_init(BranchId::Periodic { class, phase });
        let out = self.apply_law(&init, rho.matrix(), &consecutive(n), false)?;
        Ok(DensityMatrix::from_trusted(out))
    }

    pub fn apply_branch(&self, branch: BranchId, rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
        self.check_block(rho, n)?;
        let out = self.apply_law(&self.branch_init(branch), rho.matrix(), &consecutive(n), false)?;
        Ok(DensityMatrix::from_trusted(out))
    }

    fn class(&self, class: usize) -> Result<&crate::markov::CommClass> {
        self.decomposition.classes.get(class).ok_or_else(|| Error::Shape(format!("no class {class}")))
    }

    /// Output of the chain law `init` (state distribution at slot 0) on the
    /// slots at `positions`; every other slot is traced out. With `adjoint`
    /// the Heisenberg-picture maps are used instead.
    pub fn apply_law(
        &self,
        init: &[f64],
        x: &ComplexMatrix,
        positions: &[usize],
        adjoint: bool,
    ) -> Result<ComplexMatrix> {
        let terminal = self.terminal_outputs(init, x, positions, adjoint)?;
        let mut it = terminal.into_iter().flatten();
        let mut acc = it.next().ok_or_else(|| Error::Validation("law has no mass".into()))?;
        for y in it {
            acc += &y;
        }
        Ok(acc)
    }

    /// Partial outputs grouped by the chain state at the last position.
    pub(crate) fn terminal_outputs(
        &self,
        init: &[f64],
        x: &ComplexMatrix,
        positions: &[usize],
        adjoint: bool,
    ) -> Result<Vec<Option<ComplexMatrix>>> {
        let s = self.chain.len();
        let k = positions.len();
        if k == 0 {
            return Err(Error::Shape("no slot positions".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Shape("slot positions must increase".into()));
        }
        let (din, dout) = if adjoint { (self.out_dim(), self.in_dim()) } else { (self.in_dim(), self.out_dim()) };
        let expect = crate::linalg::checked_pow(din, k)?;
        check_dim(crate::linalg::checked_pow(dout, k)?)?;
        for t in 0..=k {
            check_dim(dout.pow(t as u32) * din.pow((k - t) as u32))?;
        }
        if !x.is_square() || x.rows() != expect {
            return Err(Error::Shape(format!("input must have dim {expect}, got {}", x.rows())));
        }
        let kraus: Vec<Vec<ComplexMatrix>> =
            self.maps.iter().map(|m| if adjoint { m.adjoint().kraus } else { m.kraus.clone() }).collect();
        let mut powers: HashMap<usize, DMatrix<f64>> = HashMap::new();
        let mut power =
            |g: usize| -> DMatrix<f64> { powers.entry(g).or_insert_with(|| matrix_power(self.chain.q(), g)).clone() };

        let q0 = power(positions[0]);
        let dist: Vec<f64> = (0..s).map(|j| (0..s).map(|i| init[i] * q0[(i, j)]).sum()).collect();
        let post0 = din.pow((k - 1) as u32);
        let mut cur: Vec<Option<ComplexMatrix>> =
            par_map(s, |j| (dist[j] > 0.0).then(|| apply_kraus_on_slot(x, 1, post0, &kraus[j]).scale(dist[j])));
        for t in 1..k {
            let p = power(positions[t] - positions[t - 1]);
            let pre = dout.pow(t as u32);
            let post = din.pow((k - t - 1) as u32);
            let prev = &cur;
            cur = par_map(s, |j| {
                let mut z: Option<ComplexMatrix> = None;
                for (i, y) in prev.iter().enumerate() {
                    let w = p[(i, j)];
                    if let (Some(y), true) = (y, w > 0.0) {
                        match z.as_mut() {
                            Some(acc) => acc.add_scaled(w, y),
                            None => z = Some(y.scale(w)),
                        }
                    }
                }
                z.map(|z| apply_kraus_on_slot(&z, pre, post, &kraus[j]))
            });
        }
        Ok(cur)
    }

    /// `T[a][b]`: weight of reaching state `b` at the last position from
    /// state `a` at position 0, times `Tr[proj · Φ_path(x)]`, summed over
    /// paths. Positions are relative to the previous slot, so the first one
    /// must be at least 1.
    pub fn transfer_matrix(
        &self,
        x: &ComplexMatrix,
        positions: &[usize],
        proj: &ComplexMatrix,
    ) -> Result<DMatrix<f64>> {
        let s = self.chain.len();
        let mut t = DMatrix::zeros(s, s);
        for a in 0..s {
            let mut init = vec![0.0; s];
            init[a] = 1.0;
            let row = self.readout(&init, x, positions, proj)?;
            for b in 0..s {
                t[(a, b)] = row[b];
            }
        }
        Ok(t)
    }

    /// Row vector `r[b] = Tr[proj · Y_b]` of terminal partial outputs.
    pub fn readout(
        &self,
        init: &[f64],
        x: &ComplexMatrix,
        positions: &[usize],
        proj: &ComplexMatrix,
    ) -> Result<Vec<f64>> {
        let terminal = self.terminal_outputs(init, x, positions, false)?;
        Ok(terminal.iter().map(|y| y.as_ref().map_or(0.0, |y| y.trace_product(proj))).collect())
    }
}

/// One stretch of slots read out by a projector.
#[derive(Clone, Debug)]
pub struct Segment<'a> {
    pub input: &'a ComplexMatrix,
    /// Absolute slot positions, increasing.
    pub positions: Vec<usize>,
    pub proj: &'a ComplexMatrix,
}

impl MemoryChannel {
    /// `Σ_paths weight · Π_s Tr[proj_s Φ_path(input_s)]` for consecutive
    /// segments of one block, with `init` the state law at slot 0. Each
    /// segment is evaluated separately and glued with transfer matrices.
    pub fn chain_readout(&self, init: &[f64], segments: &[Segment<'_>]) -> Result<f64> {
        Ok(self.chain_vector(init, segments)?.0.iter().sum())
    }

    /// Unsummed form of [`chain_readout`](Self::chain_readout): weights by
    /// chain state at the last read slot, and that slot (`None` when there
    /// are no segments, in which case `init` is returned).
    pub fn chain_vector(&self, init: &[f64], segments: &[Segment<'_>]) -> Result<(Vec<f64>, Option<usize>)> {
        let Some(first) = segments.first() else {
            return Ok((init.to_vec(), None));
        };
        let mut v = self.readout(init, first.input, &first.positions, first.proj)?;
        let mut last = *first.positions.last().expect("nonempty segment");
        for seg in &segments[1..] {
            if seg.positions[0] <= last {
                return Err(Error::Shape("segments overlap".into()));
            }
            let rel: Vec<usize> = seg.positions.iter().map(|p| p - last).collect();
            let t = self.transfer_matrix(seg.input, &rel, seg.proj)?;
            v = (0..v.len()).map(|b| (0..v.len()).map(|a| v[a] * t[(a, b)]).sum()).collect();
            last = *seg.positions.last().expect("nonempty segment");
        }
        Ok((v, Some(last)))
    }
}

pub(crate) fn consecutive(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[cfg(feature = "parallel")]
fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Pure product state `|b₁…b_n⟩` from computational-basis letters.
pub fn basis_product(dim: usize, letters: &[usize]) -> DensityMatrix {
    let total = dim.pow(letters.len() as u32);
    let idx = letters.iter().fold(0, |acc, &l| acc * dim + l);
    DensityMatrix::basis(total, idx)
}

#[cfg(test)]
pub(crate) fn ket(entries: &[(f64, f64)]) -> Vec<C64> {
    entries.iter().map(|&(r, i)| C64::new(r, i)).collect()
}
