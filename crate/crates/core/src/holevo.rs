//! Holevo quantities, per-class mean Holevo quantities and a max-min
//! ensemble optimizer for the capacity at a fixed block length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::channel::{consecutive, BranchId, MemoryChannel};
use crate::error::{Error, Result};
use crate::linalg::{von_neumann_entropy, ComplexMatrix, DensityMatrix, C64, TOL_PSD, TOL_TRACE};
use crate::markov::ClassKind;

/// `S(Σ pⱼσⱼ) − Σ pⱼ S(σⱼ)` in bits.
pub fn holevo_chi(outputs: &[DensityMatrix], probs: &[f64]) -> Result<f64> {
    if outputs.len() != probs.len() || outputs.is_empty() {
        return Err(Error::Shape("one probability per output state required".into()));
    }
    let avg = DensityMatrix::mixture(probs, outputs)?;
    let mut chi = von_neumann_entropy(&avg);
    for (p, s) in probs.iter().zip(outputs) {
        if *p > 0.0 {
            chi -= p * von_neumann_entropy(s);
        }
    }
    Ok(chi.max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    block_len: usize,
    probs: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(block_len: usize, probs: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if probs.len() != states.len() || states.is_empty() {
            return Err(Error::Shape("ensemble needs one probability per state".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::Validation("negative ensemble probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOL_TRACE {
            return Err(Error::Validation(format!("ensemble probabilities sum to {total}")));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::Shape("ensemble states of different dims".into()));
        }
        Ok(Self { block_len, probs, states })
    }

    /// Uniform ensemble of computational basis product states on `n` slots.
    pub fn computational_basis(dim: usize, n: usize) -> Result<Self> {
        let total = crate::linalg::checked_pow(dim, n)?;
        let states = (0..total).map(|k| DensityMatrix::basis(total, k)).collect();
        Self::new(n, vec![1.0 / total as f64; total], states)
    }

    /// Pure-state ensemble; vectors are normalized.
    pub fn pure(block_len: usize, probs: Vec<f64>, vectors: &[Vec<C64>]) -> Result<Self> {
        let states = vectors.iter().map(|v| DensityMatrix::pure(v)).collect::<Result<Vec<_>>>()?;
        Self::new(block_len, probs, states)
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn average_state(&self) -> DensityMatrix {
        DensityMatrix::mixture(&self.probs, &self.states).expect("validated ensemble")
    }

    /// `{pⱼqₖ, ρⱼ ⊗ σₖ}`, index `j` major.
    pub fn tensor(&self, other: &Ensemble) -> Result<Ensemble> {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        let mut states = Vec::with_capacity(self.len() * other.len());
        for (p, a) in self.probs.iter().zip(&self.states) {
            for (q, b) in other.probs.iter().zip(&other.states) {
                probs.push(p * q);
                states.push(a.tensor(b)?);
            }
        }
        Ensemble::new(self.block_len + other.block_len, probs, states)
    }

    pub fn tensor_power(&self, m: usize) -> Result<Ensemble> {
        let mut acc = Ensemble::new(0, vec![1.0], vec![DensityMatrix::basis(1, 0)])?;
        for _ in 0..m {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }

    /// The same labels with each state reduced to its first `l` slots.
    pub fn reduced(&self, l: usize, slot_dim: usize) -> Result<Ensemble> {
        let dims = vec![slot_dim; self.block_len];
        let keep: Vec<usize> = (0..l).collect();
        let states = self
            .states
            .iter()
            .map(|s| if l == 0 { Ok(DensityMatrix::basis(1, 0)) } else { s.partial_trace(&dims, &keep) })
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(l, self.probs.clone(), states)
    }
}

/// The chain laws a class averages over: one for an aperiodic class, one per
/// phase (weight `1/L`) for a periodic one.
pub(crate) fn class_laws(channel: &MemoryChannel, class: usize) -> Vec<(Vec<f64>, f64)> {
    let c = &channel.decomposition().classes[class];
    match c.kind {
        ClassKind::Aperiodic => vec![(channel.class_init(class), 1.0)],
        ClassKind::PeriodicCycle { period } => (0..period)
            .map(|phase| (channel.branch_init(BranchId::Periodic { class, phase }), 1.0 / period as f64))
            .collect(),
    }
}

fn law_outputs(channel: &MemoryChannel, init: &[f64], ensemble: &Ensemble) -> Result<Vec<DensityMatrix>> {
    let positions = consecutive(ensemble.block_len);
    ensemble
        .states
        .iter()
        .map(|s| channel.apply_law(init, s.matrix(), &positions, false).map(DensityMatrix::from_trusted))
        .collect()
}

fn check_ensemble(channel: &MemoryChannel, ensemble: &Ensemble) -> Result<()> {
    let expect = crate::linalg::checked_pow(channel.in_dim(), ensemble.block_len)?;
    if ensemble.dim() != expect {
        return Err(Error::Shape(format!(
            "ensemble states have dim {}, block of {} slots needs {expect}",
            ensemble.dim(),
            ensemble.block_len
        )));
    }
    Ok(())
}

/// `χ̄_C⁽ⁿ⁾` for an aperiodic class.
pub fn mean_chi_aperiodic(channel: &MemoryChannel, class: usize, ensemble: &Ensemble) -> Result<f64> {
    if channel.decomposition().classes.get(class).is_none_or(|c| c.is_periodic()) {
        return Err(Error::WrongClassKind(format!("class {class} is not an aperiodic class")));
    }
    mean_chi(channel, class, ensemble)
}

/// `χ̄_C⁽ⁿ⁾ = (1/nL) Σ_phases χ_{C,i}⁽ⁿ⁾` for a periodic class.
pub fn mean_chi_periodic(channel: &MemoryChannel, class: usize, ensemble: &Ensemble) -> Result<f64> {
    if !channel.decomposition().classes.get(class).is_some_and(|c| c.is_periodic()) {
        return Err(Error::WrongClassKind(format!("class {class} is not a periodic class")));
    }
    mean_chi(channel, class, ensemble)
}

/// Mean Holevo quantity of either class kind.
pub fn mean_chi(channel: &MemoryChannel, class: usize, ensemble: &Ensemble) -> Result<f64> {
    check_ensemble(channel, ensemble)?;
    if ensemble.block_len == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (init, w) in class_laws(channel, class) {
        let outs = law_outputs(channel, &init, ensemble)?;
        total += w * holevo_chi(&outs, &ensemble.probs)?;
    }
    Ok(total / ensemble.block_len as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityEstimate {
    pub n: usize,
    /// Mean Holevo quantity per class, in class order (bits per use).
    pub per_class: Vec<f64>,
    /// Minimum over classes. From the optimizer this is a lower bound on the
    /// supremum over ensembles.
    pub min_value: f64,
    #[serde(skip)]
    pub ensemble: Ensemble,
    /// Objective after each accepted iteration of the winning run.
    pub trace: Vec<f64>,
    pub restarts_used: usize,
}

pub fn min_over_classes(channel: &MemoryChannel, ensemble: &Ensemble) -> Result<CapacityEstimate> {
    let per_class = (0..channel.decomposition().classes.len())
        .map(|c| mean_chi(channel, c, ensemble))
        .collect::<Result<Vec<_>>>()?;
    let min_value = per_class.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CapacityEstimate {
        n: ensemble.block_len,
        per_class,
        min_value,
        ensemble: ensemble.clone(),
        trace: vec![min_value],
        restarts_used: 0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Number of pure states `J`; default `min(2·dim, dim²)` with `dim = d_in^n`.
    pub ensemble_size: Option<usize>,
    pub tol: f64,
    pub patience: usize,
    /// Also refine the computational-basis ensemble and, for `n > 1`, the
    /// tensor power of the single-use optimum.
    pub structured_starts: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 200,
            seed: 0,
            ensemble_size: None,
            tol: 1e-6,
            patience: 20,
            structured_starts: true,
        }
    }
}

/// Pure-state ensemble under optimization.
#[derive(Clone, Debug)]
struct Candidate {
    probs: Vec<f64>,
    vectors: Vec<Vec<C64>>,
}

struct Evaluation {
    per_class: Vec<f64>,
    /// `[class][law][j]` outputs and `[class][law]` averages.
    outputs: Vec<Vec<Vec<DensityMatrix>>>,
    averages: Vec<Vec<DensityMatrix>>,
    entropies: Vec<Vec<Vec<f64>>>,
}

impl Evaluation {
    fn objective(&self) -> f64 {
        self.per_class.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn active(&self) -> Vec<usize> {
        let min = self.objective();
        (0..self.per_class.len()).filter(|&c| self.per_class[c] <= min + 1e-9).collect()
    }
}

struct Problem<'a> {
    channel: &'a MemoryChannel,
    n: usize,
    laws: Vec<Vec<(Vec<f64>, f64)>>,
    positions: Vec<usize>,
}

impl Problem<'_> {
    fn evaluate(&self, cand: &Candidate) -> Result<Evaluation> {
        let mut per_class = Vec::with_capacity(self.laws.len());
        let mut outputs = Vec::with_capacity(self.laws.len());
        let mut averages = Vec::with_capacity(self.laws.len());
        let mut entropies = Vec::with_capacity(self.laws.len());
        for laws in &self.laws {
            let mut value = 0.0;
            let mut class_out = Vec::new();
            let mut class_avg = Vec::new();
            let mut class_ent = Vec::new();
            for (init, w) in laws {
                let outs = cand
                    .vectors
                    .iter()
                    .map(|v| {
                        let rho = ComplexMatrix::outer(v, v);
                        self.channel.apply_law(init, &rho, &self.positions, false).map(DensityMatrix::from_trusted)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let avg = DensityMatrix::mixture(&cand.probs, &outs)?;
                let ent: Vec<f64> = outs.iter().map(von_neumann_entropy).collect();
                let mut chi = von_neumann_entropy(&avg);
                for (p, s) in cand.probs.iter().zip(&ent) {
                    if *p > 0.0 {
                        chi -= p * s;
                    }
                }
                value += w * chi.max(0.0);
                class_out.push(outs);
                class_avg.push(avg);
                class_ent.push(ent);
            }
            per_class.push(value / self.n as f64);
            outputs.push(class_out);
            averages.push(class_avg);
            entropies.push(class_ent);
        }
        Ok(Evaluation { per_class, outputs, averages, entropies })
    }

    /// Blahut–Arimoto style reweighting against the active classes.
    fn prob_update(&self, cand: &Candidate, ev: &Evaluation) -> Vec<f64> {
        let active = ev.active();
        let j = cand.probs.len();
        let mut score = vec![0.0; j];
        for &c in &active {
            for (l, (_, w)) in self.laws[c].iter().enumerate() {
                // S(σ_k‖σ̄) = −S(σ_k) − Tr σ_k log σ̄, with one decomposition of σ̄ per law
                let eig = ev.averages[c][l].eigh();
                let kernel = eig.projector(|x| x <= TOL_PSD);
                let log_avg = eig.map(|x| if x > TOL_PSD { x.log2() } else { 0.0 });
                for (k, s) in score.iter_mut().enumerate() {
                    let out = ev.outputs[c][l][k].matrix();
                    let d = if out.trace_product(&kernel) > TOL_PSD {
                        60.0
                    } else {
                        (-ev.entropies[c][l][k] - out.trace_product(&log_avg)).clamp(0.0, 60.0)
                    };
                    *s += w * d / active.len() as f64;
                }
            }
        }
        let mut p: Vec<f64> = cand.probs.iter().zip(&score).map(|(p, s)| p * s.exp2()).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }

    /// Ascent direction for each state vector, projected onto the tangent
    /// space of the sphere.
    fn gradient(&self, cand: &Candidate, ev: &Evaluation) -> Result<Vec<Vec<C64>>> {
        let active = ev.active();
        let dim = cand.vectors[0].len();
        let mut grads = vec![vec![C64::new(0.0, 0.0); dim]; cand.vectors.len()];
        for &c in &active {
            for (l, (init, w)) in self.laws[c].iter().enumerate() {
                let log_avg = ev.averages[c][l].eigh().map(safe_log2);
                for (k, v) in cand.vectors.iter().enumerate() {
                    if cand.probs[k] <= 0.0 {
                        continue;
                    }
                    let log_out = ev.outputs[c][l][k].eigh().map(safe_log2);
                    let diff = &log_out - &log_avg;
                    let g = self.channel.apply_law(init, &diff, &self.positions, true)?;
                    let coef = 2.0 * cand.probs[k] * w / (active.len() * self.n) as f64;
                    let gv = g.as_dmatrix() * nalgebra::DVector::from_column_slice(v);
                    for (a, x) in grads[k].iter_mut().enumerate() {
                        *x += gv[a] * coef;
                    }
                }
            }
        }
        for (g, v) in grads.iter_mut().zip(&cand.vectors) {
            let overlap: C64 = v.iter().zip(g.iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in g.iter_mut().zip(v) {
                *x -= overlap * y;
            }
        }
        Ok(grads)
    }

    fn run(&self, mut cand: Candidate, config: &OptimizerConfig) -> Result<(Candidate, Evaluation, Vec<f64>)> {
        let mut ev = self.evaluate(&cand)?;
        let mut trace = vec![ev.objective()];
        let mut step: f64 = 0.5;
        for _ in 0..config.max_iters {
            let before = ev.objective();

            let new_p = self.prob_update(&cand, &ev);
            let mut t = 1.0;
            for _ in 0..5 {
                let mixed: Vec<f64> = cand.probs.iter().zip(&new_p).map(|(a, b)| (1.0 - t) * a + t * b).collect();
                let trial = Candidate { probs: mixed, vectors: cand.vectors.clone() };
                let trial_ev = self.evaluate(&trial)?;
                if trial_ev.objective() >= ev.objective() {
                    cand = trial;
                    ev = trial_ev;
                    break;
                }
                t *= 0.5;
            }

            let grads = self.gradient(&cand, &ev)?;
            let norm: f64 = grads.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-12 {
                step = (step * 2.0).min(4.0);
                while step > 1e-6 {
                    let vectors = cand
                        .vectors
                        .iter()
                        .zip(&grads)
                        .map(|(v, g)| normalized(v.iter().zip(g).map(|(a, b)| a + b * step).collect()))
                        .collect();
                    let trial = Candidate { probs: cand.probs.clone(), vectors };
                    let trial_ev = self.evaluate(&trial)?;
                    if trial_ev.objective() > ev.objective() {
                        cand = trial;
                        ev = trial_ev;
                        break;
                    }
                    step *= 0.5;
                }
            }

            trace.push(ev.objective());
            let len = trace.len();
            if len > config.patience && trace[len - 1] - trace[len - 1 - config.patience] < config.tol {
                break;
            }
            if ev.objective() - before <= 0.0 && step <= 1e-6 {
                break;
            }
        }
        Ok((cand, ev, trace))
    }
}

fn safe_log2(x: f64) -> f64 {
    x.max(1e-15).log2()
}

fn normalized(v: Vec<C64>) -> Vec<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn random_candidate(rng: &mut ChaCha8Rng, j: usize, dim: usize) -> Candidate {
    let vectors = (0..j)
        .map(|_| {
            normalized((0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect())
        })
        .collect();
    Candidate { probs: vec![1.0 / j as f64; j], vectors }
}

fn basis_candidate(dim: usize) -> Candidate {
    let vectors = (0..dim)
        .map(|k| {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[k] = C64::new(1.0, 0.0);
            v
        })
        .collect();
    Candidate { probs: vec![1.0 / dim as f64; dim], vectors }
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn tensor_power_candidate(single: &Candidate, n: usize) -> Candidate {
    let mut acc = Candidate { probs: vec![1.0], vectors: vec![vec![C64::new(1.0, 0.0)]] };
    for _ in 0..n {
        let mut probs = Vec::new();
        let mut vectors = Vec::new();
        for (p, a) in acc.probs.iter().zip(&acc.vectors) {
            for (q, b) in single.probs.iter().zip(&single.vectors) {
                if p * q > 0.0 {
                    probs.push(p * q);
                    vectors.push(kron_vec(a, b));
                }
            }
        }
        acc = Candidate { probs, vectors };
    }
    acc
}

/// Seed of restart `r`.
fn restart_seed(seed: u64, r: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ r.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Multi-restart search for the ensemble maximizing `min_C χ̄_C⁽ⁿ⁾`. The
/// result is a lower bound on the supremum.
pub fn optimize_ensemble(channel: &MemoryChannel, n: usize, config: &OptimizerConfig) -> Result<CapacityEstimate> {
    if config.restarts == 0 || config.max_iters == 0 {
        return Err(Error::ZeroBudget);
    }
    if n == 0 {
        return Err(Error::Shape("block length must be positive".into()));
    }
    let dim = crate::linalg::checked_pow(channel.in_dim(), n)?;
    crate::linalg::checked_pow(channel.out_dim(), n)?;
    let problem = Problem {
        channel,
        n,
        laws: (0..channel.decomposition().classes.len()).map(|c| class_laws(channel, c)).collect(),
        positions: consecutive(n),
    };
    let j = config.ensemble_size.unwrap_or(2 * dim).clamp(1, dim * dim);

    let mut starts: Vec<Candidate> = Vec::new();
    if config.structured_starts {
        starts.push(basis_candidate(dim));
        if n > 1 {
            let single = optimize_ensemble(channel, 1, config)?;
            let cand = candidate_from(&single.ensemble);
            if cand.vectors.len().pow(n as u32) <= dim * dim {
                starts.push(tensor_power_candidate(&cand, n));
            }
        }
    }
    for r in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(config.seed, r as u64));
        starts.push(random_candidate(&mut rng, j, dim));
    }

    let runs = par_runs(&starts, |c| problem.run(c.clone(), config));
    let mut best: Option<(Candidate, Evaluation, Vec<f64>)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.1.objective() > b.1.objective()) {
            best = Some(run);
        }
    }
    let (cand, ev, trace) = best.expect("at least one restart");
    let ensemble = Ensemble::pure(n, cand.probs.clone(), &cand.vectors)?;
    let min_value = ev.objective();
    Ok(CapacityEstimate { n, per_class: ev.per_class, min_value, ensemble, trace, restarts_used: starts.len() })
}

/// Recovers pure-state vectors from an ensemble produced by the optimizer.
fn candidate_from(ensemble: &Ensemble) -> Candidate {
    let mut probs = Vec::new();
    let mut vectors = Vec::new();
    for (p, s) in ensemble.probs.iter().zip(&ensemble.states) {
        if *p > 1e-12 {
            let eig = s.eigh();
            probs.push(*p);
            vectors.push(eig.vector(0));
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Candidate { probs, vectors }
}

#[cfg(feature = "parallel")]
fn par_runs<T: Send>(starts: &[Candidate], f: impl Fn(&Candidate) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    starts.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_runs<T: Send>(starts: &[Candidate], f: impl Fn(&Candidate) -> T + Sync + Send) -> Vec<T> {
    starts.iter().map(f).collect()
}

/// Optimized lower bounds for `n = 1..=n_max`.
pub fn capacity_curve(
    channel: &MemoryChannel,
    n_max: usize,
    config: &OptimizerConfig,
) -> Result<Vec<CapacityEstimate>> {
    (1..=n_max).map(|n| optimize_ensemble(channel, n, config)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CheckStatus {
    Passed,
    Failed,
    /// Some chain state has zero invariant weight, so `log γ = −∞`.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperadditivityReport {
    pub n_small: usize,
    pub n_large: usize,
    pub m: usize,
    pub l: usize,
    pub gamma_min: f64,
    /// `min_C χ̄_C⁽ⁿ⁾` of the product ensemble.
    pub lhs: f64,
    /// `(mn′/n)·χ̄_{n′} + (m/n)·log₂ γ`
    pub rhs: f64,
    pub slack: f64,
    pub status: CheckStatus,
}

/// Builds the product ensemble `ρ_{j₁} ⊗ … ⊗ ρ_{j_m} ⊗ ρ^{(l)}_{j_{m+1}}`
/// from `ensemble_small` and compares both sides of the superadditivity
/// inequality.
pub fn superadditivity_check(
    channel: &MemoryChannel,
    n_small: usize,
    n_large: usize,
    ensemble_small: &Ensemble,
) -> Result<SuperadditivityReport> {
    if n_small == 0 || n_large < n_small || ensemble_small.block_len != n_small {
        return Err(Error::Shape("need 1 ≤ n′ ≤ n and an ensemble on n′ slots".into()));
    }
    let m = n_large / n_small;
    let l = n_large - m * n_small;
    let gamma_min = channel.chain().gamma().iter().copied().fold(f64::INFINITY, f64::min);
    let small = min_over_classes(channel, ensemble_small)?.min_value;
    let mut product = ensemble_small.tensor_power(m)?;
    if l > 0 {
        product = product.tensor(&ensemble_small.reduced(l, channel.in_dim())?)?;
    }
    let lhs = min_over_classes(channel, &product)?.min_value;
    if gamma_min <= 0.0 {
        return Ok(SuperadditivityReport {
            n_small,
            n_large,
            m,
            l,
            gamma_min,
            lhs,
            rhs: f64::NEG_INFINITY,
            slack: f64::INFINITY,
            status: CheckStatus::Skipped,
        });
    }
    let (mf, nf) = (m as f64, n_large as f64);
    let rhs = mf * n_small as f64 / nf * small + mf / nf * gamma_min.log2();
    let slack = lhs - rhs;
    let status = if slack >= -1e-9 { CheckStatus::Passed } else { CheckStatus::Failed };
    Ok(SuperadditivityReport { n_small, n_large, m, l, gamma_min, lhs, rhs, slack, status })
}
