//! Telling branches apart: separating input states, the decay of output
//! fidelity over repeated probe blocks, Helstrom splits, and the preamble
//! whose readout identifies the branch in use.
//!
//! Probe blocks sit at offsets that are multiples of the lcm of all class
//! periods, so every periodic branch sees the same phase in each block.
//! Spacer slots between blocks are traced out; since every map is trace
//! preserving their input never matters (the maximally mixed state is
//! used when an explicit filler is needed).

use serde::Serialize;

use crate::channel::{consecutive, BranchId, MemoryChannel, Segment};
use crate::error::{Error, Result};
use crate::linalg::{check_dim, checked_pow, fidelity, fidelity_psd, ComplexMatrix, DensityMatrix, C64};
use crate::markov::{is_mixed_at, DEFAULT_MIXING_CAP};
use crate::random::random_pure_state;

/// Base fidelities at or above `1 − SEPARATION_TOL` count as inseparable.
pub const SEPARATION_TOL: f64 = 1e-9;
pub const DEFAULT_PROBE_BUDGET: usize = 512;
const MAX_PRODUCT_CANDIDATES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PairCase {
    AperAper,
    AperPhase,
    /// Phases of two different periodic classes.
    PerPer,
    /// Two phases of one periodic class.
    PhasePhase,
}

impl PairCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            PairCase::AperAper => "aper-aper",
            PairCase::AperPhase => "aper-perphase",
            PairCase::PerPer => "per-per",
            PairCase::PhasePhase => "phase-phase",
        }
    }

    pub fn needs_spacers(&self) -> bool {
        matches!(self, PairCase::AperAper | PairCase::AperPhase)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BranchPair {
    pub left: BranchId,
    pub right: BranchId,
    pub case: PairCase,
}

impl BranchPair {
    pub fn new(left: BranchId, right: BranchId) -> Result<Self> {
        if left >= right {
            return Err(Error::Shape(format!("pair ({left}, {right}) is not in branch order")));
        }
        let case = match (left, right) {
            (BranchId::Aperiodic { .. }, BranchId::Aperiodic { .. }) => PairCase::AperAper,
            (BranchId::Aperiodic { .. }, _) | (_, BranchId::Aperiodic { .. }) => PairCase::AperPhase,
            (a, b) if a.class() == b.class() => PairCase::PhasePhase,
            _ => PairCase::PerPer,
        };
        Ok(Self { left, right, case })
    }

    pub fn label(&self) -> String {
        format!("{}|{}", self.left, self.right)
    }
}

/// All branch pairs in the global order.
pub fn branch_pairs(channel: &MemoryChannel) -> Vec<BranchPair> {
    let branches = channel.branch_channels();
    let mut out = Vec::new();
    for i in 0..branches.len() {
        for j in i + 1..branches.len() {
            out.push(BranchPair::new(branches[i].0, branches[j].0).expect("ordered"));
        }
    }
    out
}

fn branch_period(channel: &MemoryChannel, b: BranchId) -> usize {
    channel.decomposition().classes[b.class()].period()
}

fn branch_weight(channel: &MemoryChannel, b: BranchId) -> f64 {
    let class = &channel.decomposition().classes[b.class()];
    class.gamma / class.period() as f64
}

#[derive(Clone, Debug)]
pub struct SeparatingState {
    pub pair: BranchPair,
    pub block_len: usize,
    pub state: DensityMatrix,
    pub base_fidelity: f64,
    pub left_output: DensityMatrix,
    pub right_output: DensityMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    /// Random pure probes per block length.
    pub budget: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { budget: DEFAULT_PROBE_BUDGET, seed: 0 }
    }
}

/// Basis states and the `(|i⟩+|j⟩)/√2`, `(|i⟩+i|j⟩)/√2` superpositions.
fn letter_candidates(dim: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::new();
    for i in 0..dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        out.push(v);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in i + 1..dim {
            for phase in [C64::new(r, 0.0), C64::new(0.0, r)] {
                let mut v = vec![C64::new(0.0, 0.0); dim];
                v[i] = C64::new(r, 0.0);
                v[j] = phase;
                out.push(v);
            }
        }
    }
    out
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn product_candidates(dim: usize, b: usize) -> Vec<Vec<C64>> {
    let letters = letter_candidates(dim);
    let total = letters.len().checked_pow(b as u32).unwrap_or(usize::MAX);
    if total > MAX_PRODUCT_CANDIDATES {
        return letters.iter().map(|l| (1..b).fold(l.clone(), |acc, _| kron_vec(&acc, l))).collect();
    }
    let mut out = vec![vec![C64::new(1.0, 0.0)]];
    for _ in 0..b {
        out = out.iter().flat_map(|acc| letters.iter().map(|l| kron_vec(acc, l))).collect();
    }
    out
}

/// Searches blocks `1..=L·L′` for an input whose two branch outputs have
/// fidelity below one. Structured product states go first; random pure
/// states only replace them when strictly better.
pub fn find_separating_state(
    channel: &MemoryChannel,
    pair: BranchPair,
    config: &SearchConfig,
) -> Result<SeparatingState> {
    let max_block = branch_period(channel, pair.left) * branch_period(channel, pair.right);
    let din = channel.in_dim();
    let (init_l, init_r) = (channel.branch_init(pair.left), channel.branch_init(pair.right));
    let mut rng = crate::random::rng(config.seed);
    for b in 1..=max_block {
        let dim = match checked_pow(din, b).and_then(|_| checked_pow(channel.out_dim(), b)) {
            Ok(_) => din.pow(b as u32),
            Err(_) => break,
        };
        let positions = consecutive(b);
        let eval = |state: DensityMatrix| -> Result<(f64, DensityMatrix, DensityMatrix, DensityMatrix)> {
            let l = DensityMatrix::from_trusted(channel.apply_law(&init_l, state.matrix(), &positions, false)?);
            let r = DensityMatrix::from_trusted(channel.apply_law(&init_r, state.matrix(), &positions, false)?);
            Ok((fidelity(&l, &r), state, l, r))
        };
        let mut best: Option<(f64, DensityMatrix, DensityMatrix, DensityMatrix)> = None;
        let mut consider = |cand: (f64, DensityMatrix, DensityMatrix, DensityMatrix)| {
            if best.as_ref().is_none_or(|b| cand.0 < b.0 - SEPARATION_TOL) {
                best = Some(cand);
            }
        };
        for psi in product_candidates(din, b) {
            consider(eval(DensityMatrix::pure(&psi)?)?);
        }
        for _ in 0..config.budget {
            consider(eval(random_pure_state(&mut rng, dim))?);
        }
        if let Some((f, state, l, r)) = best {
            if f < 1.0 - SEPARATION_TOL {
                return Ok(SeparatingState {
                    pair,
                    block_len: b,
                    state,
                    base_fidelity: f,
                    left_output: l,
                    right_output: r,
                });
            }
        }
    }
    Err(Error::IndistinguishableBranches(pair.left.to_string(), pair.right.to_string()))
}

/// Offset between consecutive probe blocks of length `block_len`: a
/// multiple of the lcm of all class periods, and with spacers also long
/// enough that every aperiodic class of the pair is mixed (within `α`)
/// between the end of one block and the start of the next.
pub fn probe_stride(
    channel: &MemoryChannel,
    pair: BranchPair,
    block_len: usize,
    alpha: f64,
    with_spacers: bool,
) -> Result<usize> {
    if !with_spacers && pair.case.needs_spacers() {
        return Err(Error::Inapplicable(format!("{} pairs need spacers between probe blocks", pair.case.as_str())));
    }
    let p = channel.decomposition().period_lcm();
    let mut stride = block_len.div_ceil(p) * p;
    let classes: Vec<_> = [pair.left, pair.right]
        .iter()
        .filter(|b| matches!(b, BranchId::Aperiodic { .. }))
        .map(|b| &channel.decomposition().classes[b.class()])
        .collect();
    if !with_spacers {
        return Ok(stride);
    }
    while stride <= DEFAULT_MIXING_CAP {
        let gap = stride - block_len + 1;
        if classes.iter().all(|c| is_mixed_at(channel.chain(), c, alpha, gap)) {
            return Ok(stride);
        }
        stride += p;
    }
    Err(Error::NoMixingWithinCap { cap: DEFAULT_MIXING_CAP })
}

/// Probe slots of `m` blocks of length `b` spaced by `stride`, from `offset`.
pub fn probe_positions(offset: usize, m: usize, block_len: usize, stride: usize) -> Vec<usize> {
    (0..m).flat_map(|t| (0..block_len).map(move |s| offset + t * stride + s)).collect()
}

/// Upper bound on `F_m` for the pair kind; exact for periodic pairs.
pub fn decay_bound(case: PairCase, f: f64, alpha: f64, m: usize) -> f64 {
    let m1 = m.saturating_sub(1) as f64;
    let fm = f.powi(m as i32);
    match case {
        PairCase::AperAper => (1.0 + alpha).powf(m1) * fm,
        PairCase::AperPhase => (1.0 + alpha).powf(m1 / 2.0) * fm,
        PairCase::PerPer | PairCase::PhasePhase => fm,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayPoint {
    pub m: usize,
    pub fidelity: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCurve {
    pub pair: BranchPair,
    pub base_fidelity: f64,
    pub block_len: usize,
    pub stride: usize,
    pub alpha: f64,
    pub points: Vec<DecayPoint>,
    /// Set when `m_max` was cut short by the dimension cap.
    pub truncated: bool,
}

impl DecayCurve {
    pub fn bound_holds(&self, tol: f64) -> bool {
        self.points.iter().all(|p| p.fidelity <= p.bound + tol)
    }
}

fn fits(channel: &MemoryChannel, slots: usize) -> bool {
    checked_pow(channel.in_dim(), slots).and_then(|_| checked_pow(channel.out_dim(), slots)).is_ok()
}

/// Outputs of the two branches on `m` probe blocks spaced by `stride`.
fn probe_outputs(
    channel: &MemoryChannel,
    sep: &SeparatingState,
    m: usize,
    stride: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let x = sep.state.matrix().kron_power(m)?;
    let pos = probe_positions(0, m, sep.block_len, stride);
    let l = channel.apply_law(&channel.branch_init(sep.pair.left), &x, &pos, false)?;
    let r = channel.apply_law(&channel.branch_init(sep.pair.right), &x, &pos, false)?;
    Ok((l, r))
}

/// `F(σ_left⁽ᵐ⁾, σ_right⁽ᵐ⁾)` on `m` probe blocks for `m = 1..=m_max`.
pub fn fidelity_decay_curve(
    channel: &MemoryChannel,
    sep: &SeparatingState,
    m_max: usize,
    with_spacers: bool,
    alpha: f64,
) -> Result<DecayCurve> {
    let b = sep.block_len;
    let stride = probe_stride(channel, sep.pair, b, alpha, with_spacers)?;
    let mut points = Vec::new();
    let mut truncated = false;
    for m in 1..=m_max {
        if !fits(channel, m * b) {
            truncated = true;
            break;
        }
        let (l, r) = probe_outputs(channel, sep, m, stride)?;
        let f = fidelity_psd(&l, &r).clamp(0.0, 1.0);
        points.push(DecayPoint { m, fidelity: f, bound: decay_bound(sep.pair.case, sep.base_fidelity, alpha, m) });
    }
    Ok(DecayCurve { pair: sep.pair, base_fidelity: sep.base_fidelity, block_len: b, stride, alpha, points, truncated })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairProfileRow {
    pub m: usize,
    pub fidelity: f64,
    pub bound: f64,
    /// Helstrom success for the two branches with their weights
    /// renormalized to the pair.
    pub helstrom_success: f64,
    pub lpi: LpiReport,
}

/// Fidelity, Helstrom success and the split implication check on `m = 1..=m_max` probe
/// blocks (with spacers), stopping early at the dimension cap.
pub fn pair_profile(
    channel: &MemoryChannel,
    sep: &SeparatingState,
    m_max: usize,
    alpha: f64,
) -> Result<Vec<PairProfileRow>> {
    let stride = probe_stride(channel, sep.pair, sep.block_len, alpha, true)?;
    let (wl, wr) = (branch_weight(channel, sep.pair.left), branch_weight(channel, sep.pair.right));
    let (gl, gr) = (wl / (wl + wr), wr / (wl + wr));
    let mut rows = Vec::new();
    for m in 1..=m_max {
        if !fits(channel, m * sep.block_len) {
            break;
        }
        let (l, r) = probe_outputs(channel, sep, m, stride)?;
        let mut a = l.scale(gl);
        a.add_scaled(-gr, &r);
        let split = HelstromSplit::from_difference(a);
        rows.push(PairProfileRow {
            m,
            fidelity: fidelity_psd(&l, &r).clamp(0.0, 1.0),
            bound: decay_bound(sep.pair.case, sep.base_fidelity, alpha, m),
            helstrom_success: split.success(&l, &r, gl, gr),
            lpi: lpi_check(&split, gl, gr, &l, &r),
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct HelstromSplit {
    /// `A = γ₁σ₁ − γ₂σ₂`
    pub a: ComplexMatrix,
    pub pi_plus: ComplexMatrix,
    pub pi_minus: ComplexMatrix,
    pub trace_norm_a: f64,
}

impl HelstromSplit {
    /// Splits a Hermitian difference operator into its nonnegative
    /// (including numerically zero) and negative eigenspaces.
    pub fn from_difference(a: ComplexMatrix) -> Self {
        let eig = a.hermitian_part().eigh();
        // sign cut; the slack only absorbs eigensolver round-off
        let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let cut = -64.0 * f64::EPSILON * scale;
        let pi_plus = eig.projector(|l| l >= cut);
        let pi_minus = eig.projector(|l| l < cut);
        let trace_norm_a = eig.eigenvalues.iter().map(|l| l.abs()).sum();
        Self { a, pi_plus, pi_minus, trace_norm_a }
    }

    /// `γ₁Tr[Π₊σ₁] + γ₂Tr[Π₋σ₂]`
    pub fn success(&self, sigma1: &ComplexMatrix, sigma2: &ComplexMatrix, gamma1: f64, gamma2: f64) -> f64 {
        gamma1 * self.pi_plus.trace_product(sigma1) + gamma2 * self.pi_minus.trace_product(sigma2)
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }
}

/// Helstrom split of `γ₁σ₁^{⊗m} − γ₂σ₂^{⊗m}`.
pub fn helstrom_split(
    sigma1: &DensityMatrix,
    sigma2: &DensityMatrix,
    gamma1: f64,
    gamma2: f64,
    m: usize,
) -> Result<HelstromSplit> {
    if sigma1.dim() != sigma2.dim() {
        return Err(Error::Shape("Helstrom split of states with different dims".into()));
    }
    check_dim(checked_pow(sigma1.dim(), m)?)?;
    let s1 = sigma1.matrix().kron_power(m)?;
    let s2 = sigma2.matrix().kron_power(m)?;
    let mut a = s1.scale(gamma1);
    a.add_scaled(-gamma2, &s2);
    Ok(HelstromSplit::from_difference(a))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpiReport {
    /// `|Tr|A| − (γ_c + γ_c′)|`
    pub delta: f64,
    /// `|Tr[Π₊σ_c] − 1|`
    pub residual_plus: f64,
    /// `|Tr[Π₋σ_c′] − 1|`
    pub residual_minus: f64,
    pub bound_plus: f64,
    pub bound_minus: f64,
    /// Both conclusions hold at the measured `δ` (up to 1e-9).
    pub holds: bool,
    /// `δ ≥ 2·min γ`: the conclusions carry no information.
    pub vacuous: bool,
}

pub fn lpi_check(
    split: &HelstromSplit,
    gamma_c: f64,
    gamma_cp: f64,
    sigma_c: &ComplexMatrix,
    sigma_cp: &ComplexMatrix,
) -> LpiReport {
    let delta = (split.trace_norm_a - (gamma_c + gamma_cp)).abs();
    let residual_plus = (split.pi_plus.trace_product(sigma_c) - 1.0).abs();
    let residual_minus = (split.pi_minus.trace_product(sigma_cp) - 1.0).abs();
    let bound_plus = delta / (2.0 * gamma_c);
    let bound_minus = delta / (2.0 * gamma_cp);
    LpiReport {
        delta,
        residual_plus,
        residual_minus,
        bound_plus,
        bound_minus,
        holds: residual_plus <= bound_plus + 1e-9 && residual_minus <= bound_minus + 1e-9,
        vacuous: delta >= 2.0 * gamma_c.min(gamma_cp) - 1e-12,
    }
}

#[derive(Clone, Debug)]
pub struct PreambleSegment {
    pub sep: SeparatingState,
    /// First slot of the segment; a multiple of the period lcm.
    pub offset: usize,
    pub stride: usize,
    /// Split of `γ_left σ_left − γ_right σ_right` on the segment's probe slots.
    pub split: HelstromSplit,
    pub input: ComplexMatrix,
}

impl PreambleSegment {
    pub fn pair(&self) -> BranchPair {
        self.sep.pair
    }

    pub fn positions(&self, m: usize) -> Vec<usize> {
        probe_positions(self.offset, m, self.sep.block_len, self.stride)
    }

    pub fn len(&self, m: usize) -> usize {
        m * self.stride
    }

    /// `Π₊` for the left branch, `Π₋` for the right one, identity otherwise.
    pub fn gate(&self, branch: BranchId) -> Gate {
        if branch == self.sep.pair.left {
            Gate::Plus
        } else if branch == self.sep.pair.right {
            Gate::Minus
        } else {
            Gate::Identity
        }
    }

    pub fn gate_projector(&self, gate: Gate) -> ComplexMatrix {
        match gate {
            Gate::Plus => self.split.pi_plus.clone(),
            Gate::Minus => self.split.pi_minus.clone(),
            Gate::Identity => ComplexMatrix::identity(self.split.dim()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Gate {
    Plus,
    Minus,
    Identity,
}

/// One probe segment per branch pair, in pair order.
#[derive(Clone, Debug)]
pub struct Preamble {
    pub m: usize,
    pub alpha: f64,
    pub branches: Vec<(BranchId, f64)>,
    pub segments: Vec<PreambleSegment>,
    /// Slots used including spacers; a multiple of the period lcm.
    pub total_len: usize,
}

impl Preamble {
    pub fn pair_count(&self) -> usize {
        self.segments.len()
    }

    pub fn probe_slots(&self) -> usize {
        self.segments.iter().map(|s| self.m * s.sep.block_len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segments read out by the projectors that accept `branch`.
    pub fn gated_segments(&self, branch: BranchId) -> Vec<(Vec<usize>, &ComplexMatrix, ComplexMatrix)> {
        self.segments.iter().map(|s| (s.positions(self.m), &s.input, s.gate_projector(s.gate(branch)))).collect()
    }

    /// `Π̃_c` as one operator on all probe slots.
    pub fn projector(&self, branch: BranchId) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::identity(1);
        for s in &self.segments {
            out = out.kron(&s.gate_projector(s.gate(branch)))?;
        }
        Ok(out)
    }
}

/// Builds the preamble: for each branch pair a separating state repeated
/// over `m` probe blocks with mixing spacers between them.
pub fn build_preamble(channel: &MemoryChannel, m: usize, alpha: f64, config: &SearchConfig) -> Result<Preamble> {
    if m == 0 {
        return Err(Error::Shape("preamble needs m ≥ 1".into()));
    }
    let branches = channel.branch_channels();
    let mut segments = Vec::new();
    let mut offset = 0;
    for (idx, pair) in branch_pairs(channel).into_iter().enumerate() {
        let search = SearchConfig { seed: config.seed.wrapping_add(idx as u64), ..*config };
        let sep = find_separating_state(channel, pair, &search)?;
        let stride = probe_stride(channel, pair, sep.block_len, alpha, true)?;
        let input = sep.state.matrix().kron_power(m)?;
        let rel = probe_positions(0, m, sep.block_len, stride);
        let l = channel.apply_law(&channel.branch_init(pair.left), &input, &rel, false)?;
        let r = channel.apply_law(&channel.branch_init(pair.right), &input, &rel, false)?;
        let mut a = l.scale(branch_weight(channel, pair.left));
        a.add_scaled(-branch_weight(channel, pair.right), &r);
        let split = HelstromSplit::from_difference(a);
        segments.push(PreambleSegment { sep, offset, stride, split, input });
        offset += m * stride;
    }
    Ok(Preamble { m, alpha, branches, segments, total_len: offset })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchIdentification {
    pub branch: BranchId,
    pub weight: f64,
    /// `Tr[Π̃_c Φ_c(preamble)]`
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchProjectors {
    pub entries: Vec<BranchIdentification>,
    /// Largest entry modulus of `Π̃_c Π̃_c′` over distinct branches.
    pub orthogonality_residual: f64,
}

impl BranchProjectors {
    pub fn min_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).fold(1.0, f64::min)
    }
}

/// Identification probability of each branch through its own preamble
/// projector, evaluated exactly segment by segment along the chain.
pub fn branch_projectors(channel: &MemoryChannel, preamble: &Preamble) -> Result<BranchProjectors> {
    let mut entries = Vec::new();
    for &(branch, weight) in &preamble.branches {
        let gated = preamble.gated_segments(branch);
        let segments: Vec<Segment<'_>> = gated
            .iter()
            .map(|(positions, input, proj)| Segment { input, positions: positions.clone(), proj })
            .collect();
        let probability = channel.chain_readout(&channel.branch_init(branch), &segments)?;
        entries.push(BranchIdentification { branch, weight, probability });
    }
    // Entries of a Kronecker product are products of entries, so the
    // largest modulus factorizes over segments.
    let mut orthogonality_residual: f64 = 0.0;
    for (i, &(bi, _)) in preamble.branches.iter().enumerate() {
        for &(bj, _) in &preamble.branches[i + 1..] {
            let r: f64 = preamble
                .segments
                .iter()
                .map(|s| (&s.gate_projector(s.gate(bi)) * &s.gate_projector(s.gate(bj))).max_abs())
                .product();
            orthogonality_residual = orthogonality_residual.max(r);
        }
    }
    Ok(BranchProjectors { entries, orthogonality_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CptMap;
    use approx::assert_abs_diff_eq;

    fn pair_of(maps: Vec<CptMap>) -> (MemoryChannel, BranchPair) {
        let n = maps.len();
        let ch = MemoryChannel::convex_combination(maps, vec![1.0 / n as f64; n]).unwrap();
        let pair = branch_pairs(&ch)[0];
        (ch, pair)
    }

    #[test]
    fn identity_versus_bit_flip_is_orthogonal() {
        let (ch, pair) = pair_of(vec![CptMap::identity(2), CptMap::bit_flip()]);
        let sep = find_separating_state(&ch, pair, &SearchConfig::default()).unwrap();
        assert_eq!(pair.case, PairCase::AperAper);
        assert_eq!(sep.block_len, 1);
        assert_abs_diff_eq!(sep.base_fidelity, 0.0, epsilon = 1e-9);
        let curve = fidelity_decay_curve(&ch, &sep, 4, true, 0.05).unwrap();
        assert!(curve.points.iter().all(|p| p.fidelity < 1e-9));
    }

    #[test]
    fn full_dephasing_separates_at_plus_state() {
        let (ch, pair) = pair_of(vec![CptMap::identity(2), CptMap::dephasing(1.0)]);
        let sep = find_separating_state(&ch, pair, &SearchConfig::default()).unwrap();
        assert_abs_diff_eq!(sep.base_fidelity, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-9);
    }

    #[test]
    fn identical_branches_are_rejected() {
        let (ch, pair) = pair_of(vec![CptMap::depolarizing(0.3), CptMap::depolarizing(0.3)]);
        let err = find_separating_state(&ch, pair, &SearchConfig { budget: 16, seed: 1 }).unwrap_err();
        assert!(matches!(err, Error::IndistinguishableBranches(..)));
    }

    #[test]
    fn helstrom_examples() {
        let z0 = DensityMatrix::basis(2, 0);
        let z1 = DensityMatrix::basis(2, 1);
        let s = helstrom_split(&z0, &z1, 0.5, 0.5, 1).unwrap();
        assert_abs_diff_eq!(s.pi_plus.max_abs_diff(z0.matrix()), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.success(z0.matrix(), z1.matrix(), 0.5, 0.5), 1.0, epsilon = 1e-12);

        let s = helstrom_split(&z0, &z0, 0.3, 0.7, 1).unwrap();
        assert_abs_diff_eq!(s.success(z0.matrix(), z0.matrix(), 0.3, 0.7), 0.7, epsilon = 1e-12);

        let a = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let b = DensityMatrix::maximally_mixed(2);
        let s = helstrom_split(&a, &b, 0.5, 0.5, 1).unwrap();
        assert_abs_diff_eq!(s.success(a.matrix(), b.matrix(), 0.5, 0.5), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn lpi_identical_outputs_are_vacuous() {
        let z0 = DensityMatrix::basis(2, 0);
        let s = helstrom_split(&z0, &z0, 0.4, 0.6, 1).unwrap();
        let r = lpi_check(&s, 0.4, 0.6, z0.matrix(), z0.matrix());
        assert_abs_diff_eq!(r.delta, 0.8, epsilon = 1e-12);
        assert!(r.vacuous && r.holds);
    }

    #[test]
    fn preamble_pair_counts() {
        let single = MemoryChannel::memoryless(CptMap::depolarizing(0.2));
        let p = build_preamble(&single, 2, 0.05, &SearchConfig::default()).unwrap();
        assert_eq!((p.pair_count(), p.total_len), (0, 0));

        // {0} self-loop plus a swap cycle {1, 2}
        let chain = crate::markov::MarkovChain::from_rows(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
            vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        let ch =
            MemoryChannel::new(chain, vec![CptMap::depolarizing(0.5), CptMap::identity(2), CptMap::depolarizing(1.0)])
                .unwrap();
        let p = build_preamble(&ch, 1, 0.05, &SearchConfig::default()).unwrap();
        let cases: Vec<_> = p.segments.iter().map(|s| s.pair().case).collect();
        assert_eq!(cases, vec![PairCase::AperPhase, PairCase::AperPhase, PairCase::PhasePhase]);
        assert!(p.segments.iter().all(|s| s.offset % 2 == 0));
        assert_eq!(p.total_len % 2, 0);
    }

    #[test]
    fn orthogonal_preamble_identifies_exactly() {
        let (ch, _) = pair_of(vec![CptMap::identity(2), CptMap::bit_flip()]);
        let p = build_preamble(&ch, 1, 0.05, &SearchConfig::default()).unwrap();
        let bp = branch_projectors(&ch, &p).unwrap();
        for e in &bp.entries {
            assert_abs_diff_eq!(e.probability, 1.0, epsilon = 1e-9);
        }
        assert!(bp.orthogonality_residual < 1e-10);
    }
}
