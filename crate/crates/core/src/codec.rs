//! Codes over the memory channel: random codebooks with a branch-identifying
//! preamble, pretty-good-measurement decoders, exact error probabilities, and
//! the Fano/Holevo converse quantities.
//!
//! Error probabilities are exact trace formulas. The preamble and payload
//! are read out as separate segments glued by chain transfer matrices, so
//! only the payload (and each preamble segment on its own) has to fit under
//! the dimension cap.

use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{consecutive, BranchId, CptMap, MemoryChannel, Segment};
use crate::discrimination::{build_preamble, Preamble, SearchConfig};
use crate::error::{Error, Result};
use crate::holevo::{mean_chi, optimize_ensemble, Ensemble, OptimizerConfig};
use crate::linalg::{checked_pow, ComplexMatrix, DensityMatrix, Povm, TOL_EIG};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeOptions {
    /// Probe blocks per branch pair in the preamble; 0 disables it.
    pub preamble_m: usize,
    pub alpha: f64,
    pub search: SearchConfig,
}

impl Default for CodeOptions {
    fn default() -> Self {
        Self { preamble_m: 4, alpha: 0.05, search: SearchConfig::default() }
    }
}

#[derive(Clone, Debug)]
pub struct Code {
    pub n: usize,
    pub rate: f64,
    /// Letter indices into the ensemble, one row per codeword (empty for
    /// codes built from explicit states).
    pub letters: Vec<Vec<usize>>,
    /// Payload states on `n` slots.
    pub codewords: Vec<DensityMatrix>,
    pub preamble: Option<Preamble>,
}

impl Code {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn payload_offset(&self) -> usize {
        self.preamble.as_ref().map_or(0, |p| p.total_len)
    }

    pub fn payload_positions(&self) -> Vec<usize> {
        let off = self.payload_offset();
        (off..off + self.n).collect()
    }

    /// Code from explicit payload states.
    pub fn from_codewords(n: usize, codewords: Vec<DensityMatrix>, preamble: Option<Preamble>) -> Result<Self> {
        if codewords.is_empty() {
            return Err(Error::Shape("a code needs at least one codeword".into()));
        }
        let dim = codewords[0].dim();
        if codewords.iter().any(|c| c.dim() != dim) {
            return Err(Error::Shape("codewords of different dims".into()));
        }
        let rate = if n == 0 { 0.0 } else { (codewords.len() as f64).log2() / n as f64 };
        Ok(Self { n, rate, letters: Vec::new(), codewords, preamble })
    }
}

/// `⌈2^{nR}⌉`, with values within 1e-9 of an integer rounded to it.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::Validation(format!("rate {rate} must be a nonnegative number")));
    }
    let x = (n as f64 * rate).exp2();
    let size = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    let cap = crate::linalg::dim_cap();
    if size > cap as f64 {
        return Err(Error::DimensionLimit { dim: size.min(usize::MAX as f64) as usize, cap });
    }
    Ok(size as usize)
}

fn preamble_for(channel: &MemoryChannel, opts: &CodeOptions) -> Result<Option<Preamble>> {
    if channel.branch_channels().len() > 1 && opts.preamble_m > 0 {
        Ok(Some(build_preamble(channel, opts.preamble_m, opts.alpha, &opts.search)?))
    } else {
        Ok(None)
    }
}

/// Random code: each codeword is a product of ensemble states drawn i.i.d.
/// from the ensemble's probabilities. The ensemble's block length must
/// divide `n`.
pub fn build_codebook(
    channel: &MemoryChannel,
    ensemble: &Ensemble,
    n: usize,
    rate: f64,
    seed: u64,
    opts: &CodeOptions,
) -> Result<Code> {
    let b = ensemble.block_len();
    if b == 0 || !n.is_multiple_of(b) {
        return Err(Error::Shape(format!("ensemble block length {b} does not divide n = {n}")));
    }
    if ensemble.dim() != checked_pow(channel.in_dim(), b)? {
        return Err(Error::Shape("ensemble does not match the channel input".into()));
    }
    checked_pow(channel.in_dim(), n)?;
    let size = codebook_size(n, rate)?;
    let dist = WeightedIndex::new(ensemble.probs()).map_err(|e| Error::Validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: Vec<Vec<usize>> = (0..size).map(|_| (0..n / b).map(|_| rng.sample(&dist)).collect()).collect();
    let codewords = letters
        .iter()
        .map(|w| {
            w.iter().skip(1).try_fold(ensemble.states()[w[0]].clone(), |acc, &l| acc.tensor(&ensemble.states()[l]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Code { n, rate, letters, codewords, preamble: preamble_for(channel, opts)? })
}

#[derive(Clone, Debug)]
pub enum Decoder {
    /// Measures the payload only.
    Plain(Povm),
    /// `Σ_c Π̃_c ⊗ E_{k,c}`; a branch without a POVM is never decoded.
    Gated(Vec<(BranchId, Option<Povm>)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecoderTarget {
    /// PGM for the full channel output, ignoring the preamble.
    Full,
    /// PGM for one branch's output, ignoring the preamble.
    Branch(BranchId),
    /// Preamble-gated PGMs for every branch.
    Gated,
    /// Preamble-gated PGMs for the listed branches only.
    GatedOn(Vec<BranchId>),
}

/// Pretty-good measurement `E_k = S^{-1/2} σ_k S^{-1/2}`, `S = Σ σ_j`, with
/// the inverse root taken on the support of `S`.
pub fn pgm(outputs: &[ComplexMatrix]) -> Result<Povm> {
    let Some(first) = outputs.first() else {
        return Err(Error::Validation("PGM of no states".into()));
    };
    let mut s = ComplexMatrix::zeros(first.rows(), first.cols());
    for o in outputs {
        s += o;
    }
    let eig = s.hermitian_part().eigh();
    let top = eig.eigenvalues.first().copied().unwrap_or(0.0).max(1.0);
    let inv_sqrt = eig.map(|l| if l > TOL_EIG * top { 1.0 / l.sqrt() } else { 0.0 });
    let elements = outputs.iter().map(|o| (&(&inv_sqrt * o) * &inv_sqrt).hermitian_part()).collect();
    Povm::new(elements)
}

fn payload_outputs(channel: &MemoryChannel, code: &Code, init: &[f64]) -> Result<Vec<ComplexMatrix>> {
    let pos = consecutive(code.n);
    code.codewords.iter().map(|c| channel.apply_law(init, c.matrix(), &pos, false)).collect()
}

/// Chain law at the first payload slot for a branch seen from slot 0.
fn payload_init(channel: &MemoryChannel, code: &Code, branch: BranchId) -> Vec<f64> {
    channel.branch_init(channel.shifted_branch(branch, code.payload_offset()))
}

pub fn pgm_decoder(code: &Code, channel: &MemoryChannel, target: DecoderTarget) -> Result<Decoder> {
    let gated_on = match target {
        DecoderTarget::Full => {
            return Ok(Decoder::Plain(pgm(&payload_outputs(channel, code, &channel.stationary_init())?)?));
        }
        DecoderTarget::Branch(b) => {
            return Ok(Decoder::Plain(pgm(&payload_outputs(channel, code, &payload_init(channel, code, b))?)?));
        }
        DecoderTarget::Gated => channel.branch_channels().into_iter().map(|(b, _)| b).collect(),
        DecoderTarget::GatedOn(list) => list,
    };
    let gates = channel
        .branch_channels()
        .into_iter()
        .map(|(b, _)| {
            if !gated_on.contains(&b) {
                return Ok((b, None));
            }
            let outs = payload_outputs(channel, code, &payload_init(channel, code, b))?;
            Ok((b, Some(pgm(&outs)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decoder::Gated(gates))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub avg_error: f64,
    /// Indexed by class.
    pub per_class_error: Vec<f64>,
    pub per_branch_error: Vec<(BranchId, f64)>,
    /// `|avg_error − Σ_C γ_C per_class_error_C|`
    pub class_mix_residual: f64,
    pub fano_bound: Option<f64>,
}

/// Average success probability over messages for the chain law `init`.
struct SuccessEngine<'a> {
    channel: &'a MemoryChannel,
    code: &'a Code,
    decoder: &'a Decoder,
    /// `t[g][k][a]`: payload success from chain state `a` at the last
    /// preamble slot, for gate `g` and message `k`.
    payload_rows: Vec<Vec<Vec<f64>>>,
}

impl<'a> SuccessEngine<'a> {
    fn new(channel: &'a MemoryChannel, code: &'a Code, decoder: &'a Decoder) -> Result<Self> {
        let mut payload_rows = Vec::new();
        if let (Decoder::Gated(gates), Some(pre)) = (decoder, code.preamble.as_ref().filter(|p| !p.is_empty())) {
            let last = pre.segments.last().and_then(|s| s.positions(pre.m).last().copied()).expect("segments");
            let rel: Vec<usize> = code.payload_positions().iter().map(|p| p - last).collect();
            for (_, povm) in gates {
                let rows = match povm {
                    None => Vec::new(),
                    Some(povm) => code
                        .codewords
                        .iter()
                        .zip(povm.elements())
                        .map(|(c, e)| {
                            let t = channel.transfer_matrix(c.matrix(), &rel, e)?;
                            Ok(t.row_iter().map(|r| r.sum()).collect())
                        })
                        .collect::<Result<Vec<Vec<f64>>>>()?,
                };
                payload_rows.push(rows);
            }
        }
        Ok(Self { channel, code, decoder, payload_rows })
    }

    fn success(&self, init: &[f64]) -> Result<f64> {
        let code = self.code;
        let pos = code.payload_positions();
        let nmsg = code.len() as f64;
        let direct = |povm: &Povm| -> Result<f64> {
            let mut total = 0.0;
            for (c, e) in code.codewords.iter().zip(povm.elements()) {
                total += self.channel.readout(init, c.matrix(), &pos, e)?.iter().sum::<f64>();
            }
            Ok(total)
        };
        let total = match self.decoder {
            Decoder::Plain(povm) => direct(povm)?,
            Decoder::Gated(gates) => match code.preamble.as_ref().filter(|p| !p.is_empty()) {
                None => {
                    // Single branch: gating is trivial.
                    let mut t = 0.0;
                    for (_, povm) in gates {
                        if let Some(povm) = povm {
                            t += direct(povm)?;
                        }
                    }
                    t
                }
                Some(pre) => {
                    let mut t = 0.0;
                    for (g, (branch, povm)) in gates.iter().enumerate() {
                        if povm.is_none() {
                            continue;
                        }
                        let gated = pre.gated_segments(*branch);
                        let segments: Vec<Segment<'_>> =
                            gated.iter().map(|(p, x, proj)| Segment { input: x, positions: p.clone(), proj }).collect();
                        let (v, _) = self.channel.chain_vector(init, &segments)?;
                        for row in &self.payload_rows[g] {
                            t += v.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                    t
                }
            },
        };
        Ok(total / nmsg)
    }
}

fn check_decoder(code: &Code, decoder: &Decoder) -> Result<()> {
    let povms: Vec<&Povm> = match decoder {
        Decoder::Plain(p) => vec![p],
        Decoder::Gated(g) => g.iter().filter_map(|(_, p)| p.as_ref()).collect(),
    };
    for p in povms {
        if p.len() != code.len() {
            return Err(Error::Shape(format!("decoder has {} outcomes for {} codewords", p.len(), code.len())));
        }
    }
    Ok(())
}

/// Exact average error under the stationary law, per class and per branch.
pub fn simulate_error(code: &Code, channel: &MemoryChannel, decoder: &Decoder) -> Result<ErrorReport> {
    check_decoder(code, decoder)?;
    let engine = SuccessEngine::new(channel, code, decoder)?;
    let avg_error = 1.0 - engine.success(&channel.stationary_init())?;
    let classes = &channel.decomposition().classes;
    let per_class_error =
        (0..classes.len()).map(|c| Ok(1.0 - engine.success(&channel.class_init(c))?)).collect::<Result<Vec<f64>>>()?;
    let per_branch_error = channel
        .branch_channels()
        .into_iter()
        .map(|(b, _)| Ok((b, 1.0 - engine.success(&channel.branch_init(b))?)))
        .collect::<Result<Vec<_>>>()?;
    let mixed: f64 = classes.iter().zip(&per_class_error).map(|(c, e)| c.gamma * e).sum();
    Ok(ErrorReport {
        avg_error,
        per_class_error,
        per_branch_error,
        class_mix_residual: (avg_error - mixed).abs(),
        fano_bound: None,
    })
}

/// The same average error from one materialized operator on all read slots
/// (preamble probes and payload). Only feasible for tiny codes; used as a
/// cross-check of the segment-wise evaluation.
pub fn simulate_error_direct(code: &Code, channel: &MemoryChannel, decoder: &Decoder) -> Result<f64> {
    check_decoder(code, decoder)?;
    let mut positions = Vec::new();
    let mut pre_input = ComplexMatrix::identity(1);
    let pre = code.preamble.as_ref().filter(|p| !p.is_empty());
    if let Some(pre) = pre {
        for s in &pre.segments {
            positions.extend(s.positions(pre.m));
            pre_input = pre_input.kron(&s.input)?;
        }
    }
    positions.extend(code.payload_positions());
    let init = channel.stationary_init();
    let terms: Vec<(ComplexMatrix, &Povm)> = match decoder {
        Decoder::Plain(p) => {
            let dout = checked_pow(channel.out_dim(), positions.len() - code.n)?;
            vec![(ComplexMatrix::identity(dout), p)]
        }
        Decoder::Gated(gates) => {
            let mut out = Vec::new();
            for (b, p) in gates {
                if let Some(p) = p {
                    let proj = match pre {
                        Some(pre) => pre.projector(*b)?,
                        None => ComplexMatrix::identity(1),
                    };
                    out.push((proj, p));
                }
            }
            out
        }
    };
    let mut success = 0.0;
    for (k, c) in code.codewords.iter().enumerate() {
        let x = pre_input.kron(c.matrix())?;
        let y = channel.apply_law(&init, &x, &positions, false)?;
        for (gate, povm) in &terms {
            success += y.trace_product(&gate.kron(&povm.elements()[k])?);
        }
    }
    Ok(1.0 - success / code.len() as f64)
}

/// Preamble-gated PGM when the code carries a preamble, else the full PGM.
pub fn default_decoder(code: &Code, channel: &MemoryChannel) -> Result<Decoder> {
    let target = if code.preamble.is_some() { DecoderTarget::Gated } else { DecoderTarget::Full };
    pgm_decoder(code, channel, target)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub code_size: usize,
    pub errors: Vec<f64>,
    pub mean_error: f64,
}

/// Mean exact error of random codes over `seeds` for each block length.
pub fn achievability_sweep(
    channel: &MemoryChannel,
    ensemble: &Ensemble,
    rate: f64,
    n_list: &[usize],
    seeds: &[u64],
    opts: &CodeOptions,
) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(Error::Validation("sweep needs at least one seed".into()));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let errors = par_try_map(seeds, |&seed| {
            let code = build_codebook(channel, ensemble, n, rate, seed, opts)?;
            let dec = default_decoder(&code, channel)?;
            Ok(simulate_error(&code, channel, &dec)?.avg_error)
        })?;
        let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;
        rows.push(SweepRow { n, code_size: codebook_size(n, rate)?, errors, mean_error });
    }
    Ok(rows)
}

#[cfg(feature = "parallel")]
fn par_try_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_try_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    items.iter().map(f).collect()
}

/// `(1 − (C + 1/n)/R) · min_C γ_C`, clipped at 0.
pub fn fano_converse_bound(capacity: f64, rate: f64, n: usize, min_gamma: f64) -> Result<f64> {
    if rate <= capacity {
        return Err(Error::Inapplicable(format!("rate {rate} does not exceed capacity {capacity}")));
    }
    if n == 0 {
        return Err(Error::Shape("block length must be positive".into()));
    }
    Ok((1.0 - (capacity + 1.0 / n as f64) / rate).max(0.0) * min_gamma)
}

/// `n · χ̄_C` of the uniform codeword ensemble: the Holevo bound on the
/// mutual information between message and class-`C` output.
pub fn holevo_mutual_info_bound(channel: &MemoryChannel, class: usize, code: &Code) -> Result<f64> {
    if code.len() == 1 || code.n == 0 {
        return Ok(0.0);
    }
    let probs = vec![1.0 / code.len() as f64; code.len()];
    let ens = Ensemble::new(code.n, probs, code.codewords.clone())?;
    Ok(code.n as f64 * mean_chi(channel, class, &ens)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongConverseRow {
    pub n: usize,
    pub code_size: usize,
    pub avg_error: f64,
    pub per_branch_error: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConverseBehaviour {
    BoundedAwayFromOne,
    ApproachesOne,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongConverseReport {
    pub chi_star: [f64; 2],
    /// `min χᵢ*`
    pub capacity: f64,
    /// `max χᵢ*`
    pub capacity_upper: f64,
    pub rate: f64,
    /// `C < R < C̄`; outside (only `R ≥ C̄` is allowed) the run is a contrast.
    pub in_window: bool,
    pub strong_branch: BranchId,
    pub threshold: f64,
    pub rows: Vec<StrongConverseRow>,
    pub behaviour: ConverseBehaviour,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrongConverseOptions {
    pub gamma: [f64; 2],
    pub code: CodeOptions,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Errors up to `1 − γ_weak·margin` count as bounded away from one.
    pub margin: f64,
}

impl Default for StrongConverseOptions {
    fn default() -> Self {
        Self {
            gamma: [0.5, 0.5],
            code: CodeOptions::default(),
            optimizer: OptimizerConfig { restarts: 4, ..OptimizerConfig::default() },
            seed: 0,
            margin: 0.5,
        }
    }
}

/// Codebook of distinct computational-basis strings (cycled when `N`
/// exceeds the number of strings).
fn basis_code(dim: usize, n: usize, size: usize, seed: u64) -> Result<Vec<DensityMatrix>> {
    let total = checked_pow(dim, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> =
        if size <= total { sample(&mut rng, total, size).into_vec() } else { (0..size).map(|k| k % total).collect() };
    Ok(picks.into_iter().map(|i| DensityMatrix::basis(total, i)).collect())
}

/// Convex combination `γ₁Φ₁^{⊗n} + γ₂Φ₂^{⊗n}` coded at rate `R` with a
/// decoder that is gated on the stronger branch only.
pub fn strong_converse_experiment(
    phi1: &CptMap,
    phi2: &CptMap,
    rate: f64,
    n_list: &[usize],
    opts: &StrongConverseOptions,
) -> Result<StrongConverseReport> {
    let chi = |phi: &CptMap| -> Result<f64> {
        Ok(optimize_ensemble(&MemoryChannel::memoryless(phi.clone()), 1, &opts.optimizer)?.min_value)
    };
    let chi_star = [chi(phi1)?, chi(phi2)?];
    if (chi_star[0] - chi_star[1]).abs() < 1e-6 {
        return Err(Error::Inapplicable("both maps have the same capacity".into()));
    }
    let capacity = chi_star[0].min(chi_star[1]);
    let capacity_upper = chi_star[0].max(chi_star[1]);
    if rate <= capacity {
        return Err(Error::Inapplicable(format!("rate {rate} is not above C = {capacity:.6}")));
    }
    let channel = MemoryChannel::convex_combination(vec![phi1.clone(), phi2.clone()], opts.gamma.to_vec())?;
    let (strong, weak) = if chi_star[0] >= chi_star[1] { (0, 1) } else { (1, 0) };
    let strong_branch = BranchId::Aperiodic { class: channel.decomposition().class_of(strong).expect("class") };
    let threshold = 1.0 - opts.gamma[weak] * opts.margin;
    let mut rows = Vec::new();
    for &n in n_list {
        let size = codebook_size(n, rate)?;
        let words = basis_code(channel.in_dim(), n, size, opts.seed)?;
        let code =
            Code { n, rate, letters: Vec::new(), codewords: words, preamble: preamble_for(&channel, &opts.code)? };
        let dec = pgm_decoder(&code, &channel, DecoderTarget::GatedOn(vec![strong_branch]))?;
        let rep = simulate_error(&code, &channel, &dec)?;
        rows.push(StrongConverseRow {
            n,
            code_size: size,
            avg_error: rep.avg_error,
            per_branch_error: rep.per_branch_error.iter().map(|(_, e)| *e).collect(),
        });
    }
    let behaviour = if rows.iter().all(|r| r.avg_error <= threshold) {
        ConverseBehaviour::BoundedAwayFromOne
    } else {
        ConverseBehaviour::ApproachesOne
    };
    Ok(StrongConverseReport {
        chi_star,
        capacity,
        capacity_upper,
        rate,
        in_window: rate < capacity_upper,
        strong_branch,
        threshold,
        rows,
        behaviour,
    })
}

/// Greedy packing for tiny outputs: draws candidate codewords from the
/// ensemble and keeps each one if the PGM for the enlarged set still
/// decodes every accepted codeword with error at most `eps`.
pub fn greedy_code(
    channel: &MemoryChannel,
    ensemble: &Ensemble,
    n: usize,
    eps: f64,
    candidates: usize,
    seed: u64,
) -> Result<Code> {
    let b = ensemble.block_len();
    if b == 0 || !n.is_multiple_of(b) {
        return Err(Error::Shape(format!("ensemble block length {b} does not divide n = {n}")));
    }
    let dout = checked_pow(channel.out_dim(), n)?;
    if dout > 16 {
        return Err(Error::DimensionLimit { dim: dout, cap: 16 });
    }
    let dist = WeightedIndex::new(ensemble.probs()).map_err(|e| Error::Validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = channel.stationary_init();
    let pos = consecutive(n);
    let mut letters: Vec<Vec<usize>> = Vec::new();
    let mut words: Vec<DensityMatrix> = Vec::new();
    let mut outs: Vec<ComplexMatrix> = Vec::new();
    for _ in 0..candidates {
        let w: Vec<usize> = (0..n / b).map(|_| rng.sample(&dist)).collect();
        let state =
            w.iter().skip(1).try_fold(ensemble.states()[w[0]].clone(), |acc, &l| acc.tensor(&ensemble.states()[l]))?;
        let out = channel.apply_law(&init, state.matrix(), &pos, false)?;
        let mut trial = outs.clone();
        trial.push(out.clone());
        let povm = pgm(&trial)?;
        let worst = trial.iter().zip(povm.elements()).map(|(o, e)| 1.0 - o.trace_product(e)).fold(0.0, f64::max);
        if worst <= eps {
            letters.push(w);
            words.push(state);
            outs.push(out);
        }
    }
    if words.is_empty() {
        return Err(Error::Validation("no candidate met the error target".into()));
    }
    let mut code = Code::from_codewords(n, words, None)?;
    code.letters = letters;
    Ok(code)
}

/// Estimates `C_n` with the optimizer; convenience for converse checks.
pub fn estimated_capacity(channel: &MemoryChannel, n: usize, config: &OptimizerConfig) -> Result<f64> {
    Ok(optimize_ensemble(channel, n, config)?.min_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn basis_ensemble() -> Ensemble {
        Ensemble::computational_basis(2, 1).unwrap()
    }

    #[test]
    fn codebook_sizes() {
        assert_eq!(codebook_size(5, 0.0).unwrap(), 1);
        assert_eq!(codebook_size(2, 0.5).unwrap(), 2);
        assert_eq!(codebook_size(3, 1.0).unwrap(), 8);
        assert_eq!(codebook_size(3, 0.1).unwrap(), 2);
    }

    #[test]
    fn seeded_codebook_is_reproducible() {
        let ch = MemoryChannel::memoryless(CptMap::identity(2));
        let a = build_codebook(&ch, &basis_ensemble(), 3, 1.0, 7, &CodeOptions::default()).unwrap();
        let b = build_codebook(&ch, &basis_ensemble(), 3, 1.0, 7, &CodeOptions::default()).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a.letters, b.letters);
        assert!(a.preamble.is_none());
    }

    #[test]
    fn pgm_examples() {
        let s = DensityMatrix::maximally_mixed(2);
        let povm = pgm(&[s.matrix().clone(), s.matrix().clone(), s.matrix().clone()]).unwrap();
        for e in povm.elements() {
            assert_abs_diff_eq!(e.trace_product(s.matrix()), 1.0 / 3.0, epsilon = 1e-12);
        }
        let a = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.1, 0.9]).unwrap();
        // S = I, so E_k = σ_k and success is Tr σ_k² = 0.82 (Helstrom would give 0.9).
        let povm = pgm(&[a.matrix().clone(), b.matrix().clone()]).unwrap();
        assert_abs_diff_eq!(povm.elements()[0].trace_product(a.matrix()), 0.82, epsilon = 1e-12);
        assert_abs_diff_eq!(povm.elements()[1].trace_product(b.matrix()), 0.82, epsilon = 1e-12);
    }

    #[test]
    fn fully_depolarizing_two_codewords_fail_half_the_time() {
        let ch = MemoryChannel::memoryless(CptMap::depolarizing(1.0));
        let code = Code::from_codewords(1, vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)], None).unwrap();
        let dec = pgm_decoder(&code, &ch, DecoderTarget::Full).unwrap();
        let rep = simulate_error(&code, &ch, &dec).unwrap();
        assert_abs_diff_eq!(rep.avg_error, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gated_identity_plus_dead_branch_gives_one_quarter() {
        let ch =
            MemoryChannel::convex_combination(vec![CptMap::identity(2), CptMap::depolarizing(1.0)], vec![0.5, 0.5])
                .unwrap();
        let pre = build_preamble(&ch, 4, 0.05, &SearchConfig::default()).unwrap();
        let code =
            Code::from_codewords(1, vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)], Some(pre)).unwrap();
        let dec = pgm_decoder(&code, &ch, DecoderTarget::Gated).unwrap();
        let rep = simulate_error(&code, &ch, &dec).unwrap();
        assert_abs_diff_eq!(rep.avg_error, 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.per_class_error[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.per_class_error[1], 0.5, epsilon = 1e-9);
        assert!(rep.class_mix_residual < 1e-12);
        let direct = simulate_error_direct(&code, &ch, &dec).unwrap();
        assert_abs_diff_eq!(direct, rep.avg_error, epsilon = 1e-9);
    }

    #[test]
    fn fano_examples() {
        assert_abs_diff_eq!(fano_converse_bound(0.5, 1.0, 100, 1.0).unwrap(), 0.49, epsilon = 1e-12);
        assert_abs_diff_eq!(fano_converse_bound(0.5, 1.0, 100, 0.25).unwrap(), 0.1225, epsilon = 1e-12);
        assert!(fano_converse_bound(0.5, 0.5, 10, 1.0).is_err());
    }

    #[test]
    fn holevo_bound_of_two_codeword_code() {
        let ch = MemoryChannel::memoryless(CptMap::depolarizing(0.5));
        let code = Code::from_codewords(1, vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)], None).unwrap();
        let v = holevo_mutual_info_bound(&ch, 0, &code).unwrap();
        assert_abs_diff_eq!(v, 1.0 - crate::linalg::binary_entropy(0.25), epsilon = 1e-9);
    }
}
