//! Seeded random channels, chains and states for experiments and tests.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{CptMap, MemoryChannel};
use crate::error::Result;
use crate::linalg::{ComplexMatrix, DensityMatrix, C64};
use crate::markov::MarkovChain;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// `K_j = A_j S^{-1/2}` with Gaussian `A_j` and `S = Σ A_j†A_j`.
pub fn random_cpt_map(rng: &mut ChaCha8Rng, dim: usize, kraus_count: usize) -> CptMap {
    let a: Vec<ComplexMatrix> = (0..kraus_count).map(|_| gaussian_matrix(rng, dim, dim)).collect();
    let mut s = ComplexMatrix::zeros(dim, dim);
    for k in &a {
        s += &(&k.adjoint() * k);
    }
    let inv_sqrt = s.hermitian_part().eigh().map(|l| 1.0 / l.sqrt());
    CptMap::new(a.iter().map(|k| k * &inv_sqrt).collect()).expect("same shapes")
}

pub fn random_pure_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    DensityMatrix::pure(&v).expect("nonzero vector")
}

/// Random full-rank (almost surely) state `GG†/Tr GG†`.
pub fn random_mixed_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    DensityMatrix::from_trusted(m.scale(1.0 / t))
}

fn stationary(block: &DMatrix<f64>) -> Vec<f64> {
    let n = block.nrows();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| v[i] * block[(i, j)]).sum()).collect();
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if diff < 1e-15 {
            break;
        }
    }
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainShape {
    pub max_states: usize,
    /// Probability that a class of two or more states is a deterministic cycle.
    pub cycle_prob: f64,
    /// Probability of appending one transient state.
    pub transient_prob: f64,
}

impl Default for ChainShape {
    fn default() -> Self {
        Self { max_states: 3, cycle_prob: 0.25, transient_prob: 0.0 }
    }
}

/// Block-diagonal chain of random classes (positive stochastic blocks or
/// cycles) with a random mixture of their stationary laws as `γ`.
pub fn random_chain(rng: &mut ChaCha8Rng, shape: &ChainShape) -> MarkovChain {
    let transient = shape.max_states > 1 && rng.random::<f64>() < shape.transient_prob;
    let recurrent = rng.random_range(1..=shape.max_states - usize::from(transient));
    let mut sizes = Vec::new();
    let mut left = recurrent;
    while left > 0 {
        let s = rng.random_range(1..=left);
        sizes.push(s);
        left -= s;
    }
    let total = recurrent + usize::from(transient);
    let mut q = DMatrix::<f64>::zeros(total, total);
    let mut gamma = vec![0.0; total];
    let weights: Vec<f64> = sizes.iter().map(|_| rng.random::<f64>() + 0.1).collect();
    let wsum: f64 = weights.iter().sum();
    let mut start = 0;
    for (&s, &w) in sizes.iter().zip(&weights) {
        let cycle = s >= 2 && rng.random::<f64>() < shape.cycle_prob;
        let mut block = DMatrix::<f64>::zeros(s, s);
        for i in 0..s {
            if cycle {
                block[(i, (i + 1) % s)] = 1.0;
            } else {
                let row: Vec<f64> = (0..s).map(|_| rng.random::<f64>() + 0.05).collect();
                let rs: f64 = row.iter().sum();
                for j in 0..s {
                    block[(i, j)] = row[j] / rs;
                }
            }
        }
        let pi = stationary(&block);
        for i in 0..s {
            gamma[start + i] = w / wsum * pi[i];
            for j in 0..s {
                q[(start + i, start + j)] = block[(i, j)];
            }
        }
        start += s;
    }
    if transient {
        let t = total - 1;
        let row: Vec<f64> = (0..total).map(|_| rng.random::<f64>() + 0.05).collect();
        let rs: f64 = row.iter().sum();
        for j in 0..total {
            q[(t, j)] = row[j] / rs;
        }
    }
    let rows = (0..total).map(|i| q.row(i).iter().copied().collect()).collect();
    MarkovChain::from_rows(rows, gamma).expect("square chain")
}

/// Random qubit memory channel with one random map per chain state.
pub fn random_channel(seed: u64, shape: &ChainShape) -> Result<MemoryChannel> {
    let mut rng = rng(seed);
    let chain = random_chain(&mut rng, shape);
    let maps = (0..chain.len())
        .map(|_| {
            let k = rng.random_range(1..=3);
            random_cpt_map(&mut rng, 2, k)
        })
        .collect();
    MemoryChannel::new(chain, maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::validate_cpt;
    use crate::markov::validate_chain;

    #[test]
    fn random_objects_are_valid() {
        let mut r = rng(3);
        for _ in 0..20 {
            assert!(validate_cpt(&random_cpt_map(&mut r, 2, 2)).is_valid());
            let c = random_chain(&mut r, &ChainShape { max_states: 4, cycle_prob: 0.5, transient_prob: 0.5 });
            assert!(validate_chain(&c).is_valid());
        }
    }
}
