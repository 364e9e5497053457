//! Typical and conditionally typical sets over eigenvalue sequences.
//!
//! Everything is computed on types (count vectors over distinct
//! eigenvalues), so coverages are exact sums and no `d^m`-dimensional
//! matrix is formed unless a projector is explicitly requested.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::channel::MemoryChannel;
use crate::error::{Error, Result};
use crate::holevo::Ensemble;
use crate::linalg::{shannon_entropy, ComplexMatrix, DensityMatrix};

const TOL_VALUE: f64 = 1e-12;
/// Largest number of types enumerated by any single call.
const MAX_TYPES: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralMeasure {
    eigenvalues: Vec<f64>,
}

impl SpectralMeasure {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.iter().any(|&x| x < -TOL_VALUE || !x.is_finite()) {
            return Err(Error::Validation("spectral measure needs nonnegative entries".into()));
        }
        let total: f64 = eigenvalues.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("spectral measure sums to {total}")));
        }
        Ok(Self { eigenvalues: eigenvalues.into_iter().map(|x| x.max(0.0)).collect() })
    }

    pub fn of_state(rho: &DensityMatrix) -> Self {
        let spec = rho.spectrum();
        let total: f64 = spec.iter().sum();
        Self { eigenvalues: spec.into_iter().map(|x| x / total).collect() }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.eigenvalues)
    }

    /// Distinct positive values with the letters carrying each.
    fn groups(&self) -> Vec<(f64, Vec<usize>)> {
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (k, &v) in self.eigenvalues.iter().enumerate() {
            if v <= TOL_VALUE {
                continue;
            }
            match groups.iter_mut().find(|g| (g.0 - v).abs() <= TOL_VALUE) {
                Some(g) => g.1.push(k),
                None => groups.push((v, vec![k])),
            }
        }
        groups
    }
}

/// Natural-log factorials `ln k!` for `k ≤ m`.
fn ln_factorials(m: usize) -> Vec<f64> {
    let mut t = vec![0.0; m + 1];
    for k in 1..=m {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// Calls `f` on every composition of `m` into `parts` nonnegative counts.
fn for_each_composition(m: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, idx: usize, counts: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if idx + 1 == counts.len() {
            counts[idx] = rest;
            f(counts);
            return;
        }
        for c in 0..=rest {
            counts[idx] = c;
            rec(rest - c, idx + 1, counts, f);
        }
    }
    if parts == 0 {
        if m == 0 {
            f(&[]);
        }
        return;
    }
    let mut counts = vec![0; parts];
    rec(m, 0, &mut counts, f);
}

fn composition_count(m: usize, parts: usize) -> f64 {
    // C(m + parts − 1, parts − 1)
    let mut c = 1.0;
    for k in 1..parts {
        c = c * (m + k) as f64 / k as f64;
    }
    c
}

/// One type class inside a typical set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeClass {
    /// Counts per distinct eigenvalue, in [`TypicalSet::values`] order.
    pub counts: Vec<usize>,
    /// `log₂` of the probability of each member sequence.
    pub log2_prob: f64,
    /// `log₂` of the number of member sequences.
    pub log2_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypicalSet {
    pub m: usize,
    /// Entropy the set concentrates around (bits per letter).
    pub rate_center: f64,
    /// Members satisfy `|−(1/m) log₂ p − rate_center| < window`.
    pub window: f64,
    /// Total probability of the set.
    pub coverage: f64,
    pub log2_count: f64,
    /// Distinct positive eigenvalues and their letters.
    pub values: Vec<f64>,
    pub letters: Vec<Vec<usize>>,
    pub components: Vec<TypeClass>,
    /// Letters of the underlying measure (including zero-probability ones).
    pub alphabet: usize,
}

impl TypicalSet {
    fn empty(m: usize, rate_center: f64, window: f64, alphabet: usize) -> Self {
        Self {
            m,
            rate_center,
            window,
            coverage: 0.0,
            log2_count: f64::NEG_INFINITY,
            values: Vec::new(),
            letters: Vec::new(),
            components: Vec::new(),
            alphabet,
        }
    }

    fn letter_group(&self, letter: usize) -> Option<usize> {
        self.letters.iter().position(|g| g.contains(&letter))
    }

    pub fn contains(&self, seq: &[usize]) -> bool {
        if seq.len() != self.m {
            return false;
        }
        let mut counts = vec![0; self.values.len()];
        for &l in seq {
            match self.letter_group(l) {
                Some(g) => counts[g] += 1,
                None => return false,
            }
        }
        self.components.iter().any(|c| c.counts == counts)
    }

    /// `log₂` probability of a sequence under the product measure.
    pub fn log2_prob(&self, seq: &[usize]) -> f64 {
        seq.iter().map(|&l| self.letter_group(l).map_or(f64::NEG_INFINITY, |g| self.values[g].log2())).sum()
    }

    /// Largest probability of a single member sequence.
    pub fn max_member_prob(&self) -> f64 {
        self.components.iter().map(|c| c.log2_prob.exp2()).fold(0.0, f64::max)
    }

    /// Enumerates member sequences; refuses when `alphabet^m` exceeds the cap.
    pub fn members(&self) -> Result<Vec<Vec<usize>>> {
        let total = crate::linalg::checked_pow(self.alphabet, self.m)?;
        let mut out = Vec::new();
        let mut seq = vec![0usize; self.m];
        for idx in 0..total {
            let mut r = idx;
            for t in (0..self.m).rev() {
                seq[t] = r % self.alphabet;
                r /= self.alphabet;
            }
            if self.contains(&seq) {
                out.push(seq.clone());
            }
        }
        Ok(out)
    }

    /// Diagonal 0/1 vector over all `alphabet^m` sequences (row-major).
    pub fn indicator(&self) -> Result<Vec<f64>> {
        let total = crate::linalg::checked_pow(self.alphabet, self.m)?;
        let mut out = vec![0.0; total];
        let mut seq = vec![0usize; self.m];
        for (idx, o) in out.iter_mut().enumerate() {
            let mut r = idx;
            for t in (0..self.m).rev() {
                seq[t] = r % self.alphabet;
                r /= self.alphabet;
            }
            if self.contains(&seq) {
                *o = 1.0;
            }
        }
        Ok(out)
    }
}

/// Typical set of the i.i.d. product of `measure` with window `eps`.
pub fn typical_set(measure: &SpectralMeasure, m: usize, eps: f64) -> Result<TypicalSet> {
    if m == 0 {
        return Err(Error::Shape("block length must be positive".into()));
    }
    let h = measure.entropy();
    let groups = measure.groups();
    let alphabet = measure.eigenvalues.len();
    if composition_count(m, groups.len()) > MAX_TYPES as f64 {
        return Err(Error::DimensionLimit { dim: composition_count(m, groups.len()) as usize, cap: MAX_TYPES });
    }
    let lf = ln_factorials(m);
    let ln2 = std::f64::consts::LN_2;
    let values: Vec<f64> = groups.iter().map(|g| g.0).collect();
    let mult: Vec<f64> = groups.iter().map(|g| g.1.len() as f64).collect();
    let mut set = TypicalSet::empty(m, h, eps, alphabet);
    let mut coverage = 0.0;
    let mut log_sizes = Vec::new();
    for_each_composition(m, values.len(), &mut |counts| {
        let log2_prob: f64 = counts.iter().zip(&values).map(|(&c, v)| c as f64 * v.log2()).sum();
        if (-log2_prob / m as f64 - h).abs() < eps {
            let ln_size = lf[m] + counts.iter().zip(&mult).map(|(&c, mu)| c as f64 * mu.ln() - lf[c]).sum::<f64>();
            let log2_size = ln_size / ln2;
            coverage += (log2_size + log2_prob).exp2();
            log_sizes.push(log2_size);
            set.components.push(TypeClass { counts: counts.to_vec(), log2_prob, log2_size });
        }
    });
    set.coverage = coverage.min(1.0);
    set.log2_count = log2_sum(&log_sizes);
    set.values = values;
    set.letters = groups.into_iter().map(|g| g.1).collect();
    Ok(set)
}

fn log2_sum(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp2()).sum::<f64>().log2()
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalProjectorReport {
    pub set: TypicalSet,
    /// `S` of the single-block state.
    pub entropy: f64,
    /// `max eig(P̄ σ^{⊗m} P̄)` from the type classes.
    pub max_eigenvalue: f64,
    /// Same quantity from the materialized matrices, when built.
    pub max_eigenvalue_numeric: Option<f64>,
    /// `2^{−m(S − ε/4)}`
    pub bound: f64,
    pub bound_holds: bool,
    /// `Tr(σ^{⊗m} P̄)` from the materialized matrices, when built.
    pub coverage_numeric: Option<f64>,
    #[serde(skip)]
    pub projector: Option<ComplexMatrix>,
}

/// Projector onto eigenvector products of `σ^{⊗m}` whose eigenvalue lies in
/// the window `ε/4` around the entropy, with both operator checks.
pub fn typical_projector(state: &DensityMatrix, m: usize, eps: f64) -> Result<TypicalProjectorReport> {
    let eig = state.eigh();
    // Letters are indexed in the same (descending) order as the eigenvectors.
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let measure = SpectralMeasure { eigenvalues: clipped.iter().map(|x| x / total).collect() };
    let set = typical_set(&measure, m, eps / 4.0)?;
    let entropy = set.rate_center;
    let bound = (-(m as f64) * (entropy - eps / 4.0)).exp2();
    let max_eigenvalue = set.max_member_prob();

    let (mut projector, mut max_numeric, mut coverage_numeric) = (None, None, None);
    let d = state.dim();
    let materializable = crate::linalg::checked_pow(d, m).is_ok();
    if materializable {
        let diag = set.indicator()?;
        let vm = eig.eigenvectors.kron_power(m)?;
        let p_eig = ComplexMatrix::from_diagonal(&diag);
        let p = &(&vm * &p_eig) * &vm.adjoint();
        let sigma_m = state.matrix().kron_power(m)?;
        let sandwich = &(&p * &sigma_m) * &p;
        max_numeric = sandwich.eigenvalues_hermitian().first().copied();
        coverage_numeric = Some(sigma_m.trace_product(&p));
        projector = Some(p);
    }
    let tol = 1e-12 + 1e-9 * bound;
    let bound_holds = max_eigenvalue <= bound + tol && max_numeric.is_none_or(|v| v <= bound + tol);
    Ok(TypicalProjectorReport {
        set,
        entropy,
        max_eigenvalue,
        max_eigenvalue_numeric: max_numeric,
        bound,
        bound_holds,
        coverage_numeric,
        projector,
    })
}

/// Conditional typicality for codeword letters drawn i.i.d. from `probs`,
/// with per-letter output spectra `spectra`.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalTypicalFamily {
    pub m: usize,
    /// `S̄ = Σ p_x S(σ_x)`
    pub mean_conditional_entropy: f64,
    /// `H({p_x})`
    pub letter_entropy: f64,
    /// Window of the index set `T^{[m]}` (ε/12).
    pub index_window: f64,
    /// Window of each conditional set (ε/4).
    pub conditional_window: f64,
    /// `P[j̲ ∈ T^{[m]}]`
    pub index_coverage: f64,
    /// `Σ_{j̲ ∈ T^{[m]}} p_j̲ · P[k̲ ∈ T_j̲ | j̲]`
    pub coverage: f64,
    /// One entry per letter type (count vector over letters).
    pub types: Vec<ConditionalType>,
    #[serde(skip)]
    spectra: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalType {
    pub letter_counts: Vec<usize>,
    pub in_index_set: bool,
    /// Probability of drawing some codeword of this type.
    pub type_prob: f64,
    /// Conditional coverage for any codeword of this type.
    pub conditional_coverage: f64,
}

/// Fixed-point key for exact accumulation of log-probabilities.
const KEY_SCALE: f64 = 1e9;

fn log_distribution(spectrum: &[f64]) -> BTreeMap<i64, f64> {
    let mut d = BTreeMap::new();
    for &l in spectrum {
        if l > TOL_VALUE {
            *d.entry((-l.log2() * KEY_SCALE).round() as i64).or_insert(0.0) += l;
        }
    }
    d
}

fn convolve(a: &BTreeMap<i64, f64>, b: &BTreeMap<i64, f64>) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (ka, pa) in a {
        for (kb, pb) in b {
            *out.entry(ka + kb).or_insert(0.0) += pa * pb;
        }
    }
    out
}

fn convolve_power(base: &BTreeMap<i64, f64>, n: usize) -> BTreeMap<i64, f64> {
    let mut acc = BTreeMap::from([(0i64, 1.0)]);
    for _ in 0..n {
        acc = convolve(&acc, base);
    }
    acc
}

impl ConditionalTypicalFamily {
    /// Whether eigenvalue-index sequence `k̲` is in the conditional set of
    /// codeword `j̲`.
    pub fn contains(&self, j: &[usize], k: &[usize]) -> bool {
        if j.len() != self.m || k.len() != self.m {
            return false;
        }
        let mut counts = vec![0; self.spectra.len()];
        j.iter().for_each(|&x| counts[x] += 1);
        let in_index = self.types.iter().find(|t| t.letter_counts == counts).is_some_and(|t| t.in_index_set);
        if !in_index {
            return false;
        }
        let log2_prob: f64 = j.iter().zip(k).map(|(&x, &kk)| self.spectra[x][kk].log2()).sum();
        (-log2_prob / self.m as f64 - self.mean_conditional_entropy).abs() < self.conditional_window
    }
}

pub fn conditional_typical_set(
    probs: &[f64],
    spectra: &[Vec<f64>],
    m: usize,
    eps: f64,
) -> Result<ConditionalTypicalFamily> {
    if probs.len() != spectra.len() || probs.is_empty() || m == 0 {
        return Err(Error::Shape("one spectrum per letter and m ≥ 1 required".into()));
    }
    let measures = spectra.iter().map(|s| SpectralMeasure::new(s.clone())).collect::<Result<Vec<_>>>()?;
    SpectralMeasure::new(probs.to_vec())?;
    let s_bar: f64 = probs.iter().zip(&measures).map(|(p, s)| p * s.entropy()).sum();
    let h = shannon_entropy(probs);
    let (iw, cw) = (eps / 12.0, eps / 4.0);
    let letters: Vec<usize> = (0..probs.len()).filter(|&x| probs[x] > 0.0).collect();
    if composition_count(m, letters.len()) > MAX_TYPES as f64 {
        return Err(Error::DimensionLimit { dim: composition_count(m, letters.len()) as usize, cap: MAX_TYPES });
    }
    let dists: Vec<BTreeMap<i64, f64>> = spectra.iter().map(|s| log_distribution(s)).collect();
    let lf = ln_factorials(m);
    let mut types = Vec::new();
    let (mut index_coverage, mut coverage) = (0.0, 0.0);
    let (lo, hi) = (((s_bar - cw) * m as f64 * KEY_SCALE) as i64, ((s_bar + cw) * m as f64 * KEY_SCALE) as i64);
    let mut result: Result<()> = Ok(());
    for_each_composition(m, letters.len(), &mut |sub| {
        if result.is_err() {
            return;
        }
        let mut counts = vec![0; probs.len()];
        for (&x, &c) in letters.iter().zip(sub) {
            counts[x] = c;
        }
        let log2_p: f64 = letters.iter().zip(sub).map(|(&x, &c)| c as f64 * probs[x].log2()).sum();
        let ln_mult = lf[m] - sub.iter().map(|&c| lf[c]).sum::<f64>();
        let type_prob = (ln_mult / std::f64::consts::LN_2 + log2_p).exp2();
        let in_index = (-log2_p / m as f64 - h).abs() < iw;
        let mut cond = 0.0;
        if in_index {
            let mut acc = BTreeMap::from([(0i64, 1.0)]);
            for (&x, &c) in letters.iter().zip(sub) {
                acc = convolve(&acc, &convolve_power(&dists[x], c));
            }
            if acc.len() > MAX_TYPES {
                result = Err(Error::DimensionLimit { dim: acc.len(), cap: MAX_TYPES });
                return;
            }
            // Strict window, matching `contains`.
            cond = acc.iter().filter(|(&k, _)| k > lo && k < hi).map(|(_, p)| p).sum();
            index_coverage += type_prob;
            coverage += type_prob * cond;
        }
        types.push(ConditionalType {
            letter_counts: counts,
            in_index_set: in_index,
            type_prob,
            conditional_coverage: cond,
        });
    });
    result?;
    Ok(ConditionalTypicalFamily {
        m,
        mean_conditional_entropy: s_bar,
        letter_entropy: h,
        index_window: iw,
        conditional_window: cw,
        index_coverage: index_coverage.min(1.0),
        coverage: coverage.min(1.0),
        types,
        spectra: spectra.to_vec(),
    })
}

/// Typical set for a periodic branch built by interlacing one typical set
/// per residue class of slot positions modulo `L`.
#[derive(Clone, Debug, Serialize)]
pub struct InterlacedTypical {
    pub m: usize,
    pub period: usize,
    /// `(1/L) Σ_r S(Φ_{i_r}(ρ̄))`
    pub rate_center: f64,
    /// Per-residue sets; residue `r` covers slots `r, r+L, …`.
    pub components: Vec<TypicalSet>,
    /// Slots of the last incomplete period, left untyped.
    pub remainder: usize,
    pub coverage: f64,
    pub log2_count: f64,
}

impl InterlacedTypical {
    pub fn contains(&self, seq: &[usize]) -> bool {
        if seq.len() != self.m {
            return false;
        }
        let full = self.m - self.remainder;
        (0..self.period).all(|r| {
            let sub: Vec<usize> = (r..full).step_by(self.period).map(|t| seq[t]).collect();
            sub.is_empty() || self.components[r].contains(&sub)
        })
    }
}

pub fn interlaced_periodic_typical(
    channel: &MemoryChannel,
    class: usize,
    phase: usize,
    ensemble: &Ensemble,
    m: usize,
    eps: f64,
) -> Result<InterlacedTypical> {
    let c = channel.decomposition().classes.get(class).ok_or_else(|| Error::Shape(format!("no class {class}")))?;
    if !c.is_periodic() {
        return Err(Error::WrongClassKind(format!("class {class} is aperiodic")));
    }
    if ensemble.block_len() != 1 {
        return Err(Error::Shape("interlacing needs a single-slot letter ensemble".into()));
    }
    let l = c.period();
    let avg = ensemble.average_state();
    let full = m - m % l;
    let per = full / l;
    let mut components = Vec::with_capacity(l);
    let mut rate = 0.0;
    for r in 0..l {
        let state = c.members[(phase + r) % l];
        let out = channel.maps()[state].apply_state(&avg)?;
        let measure = SpectralMeasure::of_state(&out);
        rate += measure.entropy() / l as f64;
        if per > 0 {
            components.push(typical_set(&measure, per, eps)?);
        } else {
            components.push(TypicalSet::empty(0, measure.entropy(), eps, measure.eigenvalues.len()));
        }
    }
    let coverage = if per > 0 { components.iter().map(|s| s.coverage).product() } else { 1.0 };
    let log2_count = if per > 0 { components.iter().map(|s| s.log2_count).sum() } else { 0.0 };
    Ok(InterlacedTypical { m, period: l, rate_center: rate, components, remainder: m - full, coverage, log2_count })
}

/// Smallest `m` in `1..=m_max` from which the coverage of the window-`eps`
/// typical set stays above `threshold` for every larger scanned `m`.
pub fn coverage_threshold(measure: &SpectralMeasure, eps: f64, threshold: f64, m_max: usize) -> Result<Option<usize>> {
    let mut first_good = None;
    for m in 1..=m_max {
        let cov = typical_set(measure, m, eps)?.coverage;
        if cov > threshold {
            first_good.get_or_insert(m);
        } else {
            first_good = None;
        }
    }
    Ok(first_good)
}
