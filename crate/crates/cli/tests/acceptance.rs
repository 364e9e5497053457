//! Acceptance runner. Prints one PASS/FAIL line per check; exits non-zero if
//! any check fails, except those listed in `KNOWN_FAILURES`, which still
//! print FAIL.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use mqchan::channel::{BranchId, CptMap};
use mqchan::codec::{
    achievability_sweep, build_codebook, default_decoder, fano_converse_bound, simulate_error, simulate_error_direct,
    strong_converse_experiment, CodeOptions, ConverseBehaviour, StrongConverseOptions,
};
use mqchan::discrimination::{
    fidelity_decay_curve, find_separating_state, helstrom_split, lpi_check, BranchPair, SearchConfig,
};
use mqchan::holevo::{optimize_ensemble, superadditivity_check, CheckStatus, Ensemble, OptimizerConfig};
use mqchan::random::{random_channel, random_mixed_state, rng, ChainShape};
use mqchan::typicality::{coverage_threshold, typical_projector, typical_set, SpectralMeasure};
use mqchan::{DensityMatrix, MarkovChain, MemoryChannel};
use mqchan_cli::{cmd_capacity, optimizer_config};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

type M = DMatrix<Complex64>;

/// Checks that cannot pass as stated; they run and report, but do not fail
/// the target.
const KNOWN_FAILURES: &[&str] = &["typical-coverage"];

struct Check {
    name: &'static str,
    limit: Duration,
    run: fn() -> Result<(bool, String)>,
}

fn main() -> ExitCode {
    let checks = [
        Check { name: "memoryless-depolarizing", limit: secs(60), run: memoryless_depolarizing },
        Check { name: "convex-combination-min", limit: secs(120), run: convex_combination_min },
        Check { name: "periodic-class", limit: secs(120), run: periodic_class },
        Check { name: "branch-decomposition", limit: secs(60), run: branch_decomposition },
        Check { name: "fidelity-decay", limit: secs(120), run: fidelity_decay },
        Check { name: "helstrom-implication", limit: secs(120), run: helstrom_implication },
        Check { name: "typical-coverage", limit: secs(60), run: typical_coverage },
        Check { name: "superadditivity", limit: secs(120), run: superadditivity },
        Check { name: "achievability-trend", limit: secs(300), run: achievability_trend },
        Check { name: "fano-converse", limit: secs(180), run: fano_converse },
        Check { name: "no-strong-converse", limit: secs(120), run: no_strong_converse },
        Check { name: "determinism", limit: secs(600), run: determinism },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    let mut known = 0;
    for c in &checks {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match (c.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e:#}")),
        };
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let pass = ok && in_time;
        let timing = if in_time { String::new() } else { format!(" (over the {}s limit)", c.limit.as_secs()) };
        println!(
            "{} {:<26} {:>7.1}s{timing}  {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64()
        );
        let is_known = KNOWN_FAILURES.contains(&c.name);
        match (pass, is_known) {
            (false, true) => known += 1,
            (false, false) => unexpected += 1,
            (true, true) => {
                println!("     {} passed but is listed as a known failure", c.name);
                unexpected += 1;
            }
            (true, false) => {}
        }
    }
    println!("acceptance: {unexpected} unexpected failure(s), {known} known failure(s)");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn h2(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

fn min_bits(ch: &MemoryChannel, n: usize) -> Result<f64> {
    let t = cmd_capacity(ch, &[n], &optimizer_config(1, 16))?;
    Ok(t.column("min_bits").context("min_bits column")?[0].parse()?)
}

/// Best two-letter pure ensemble for a qubit depolarizing channel, by grid
/// search over the angle between the Bloch vectors and the weight.
fn depolarizing_grid_chi(p: f64) -> f64 {
    let s = 1.0 - p;
    let steps = 400;
    let mut best: f64 = 0.0;
    for a in 0..=steps {
        let theta = std::f64::consts::PI * a as f64 / steps as f64;
        for b in 0..=steps {
            let q = b as f64 / steps as f64;
            let (x, z) = (q + (1.0 - q) * theta.cos(), (1.0 - q) * theta.sin());
            let r = s * (x * x + z * z).sqrt();
            best = best.max(h2((1.0 - r) / 2.0) - h2((1.0 - s) / 2.0));
        }
    }
    best
}

fn memoryless_depolarizing() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.2, 0.5, 0.8] {
        let exact = 1.0 - h2(p / 2.0);
        let grid = depolarizing_grid_chi(p);
        let got = min_bits(&MemoryChannel::memoryless(CptMap::depolarizing(p)), 1)?;
        ok &= (got - exact).abs() <= 1e-3 && (grid - exact).abs() <= 1e-3;
        parts.push(format!("p={p}: {got:.6} vs {exact:.6} (grid {grid:.6})"));
    }
    Ok((ok, parts.join(", ")))
}

/// `χ` of the computational basis ensemble through a qubit depolarizing map:
/// outputs diag(1 − p/2, p/2) and its flip, average I/2.
fn basis_chi_depolarizing(p: f64) -> f64 {
    1.0 - h2(p / 2.0)
}

fn convex_combination_min() -> Result<(bool, String)> {
    let chain = MarkovChain::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5])?;
    let ch = MemoryChannel::new(chain, vec![CptMap::depolarizing(0.2), CptMap::depolarizing(0.6)])?;
    let oracle = basis_chi_depolarizing(0.2).min(basis_chi_depolarizing(0.6));
    let target = 1.0 - h2(0.3);
    let got = min_bits(&ch, 1)?;
    let ok = (got - target).abs() <= 2e-3 && (oracle - target).abs() <= 1e-12;
    Ok((ok, format!("estimate {got:.6}, 1-h(0.3) = {target:.6}, oracle {oracle:.6}")))
}

fn clean_dead_cycle() -> Result<MemoryChannel> {
    let chain = MarkovChain::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5])?;
    Ok(MemoryChannel::new(chain, vec![CptMap::identity(2), CptMap::depolarizing(1.0)])?)
}

fn periodic_class() -> Result<(bool, String)> {
    let ch = clean_dead_cycle()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1, 2, 4] {
        // a phase-φ block has one clean slot per even (φ + t); each carries one bit
        let clean: usize = (0..2).map(|phase| (0..n).filter(|t| (phase + t) % 2 == 0).count()).sum();
        let oracle = clean as f64 / (2 * n) as f64;
        let got = min_bits(&ch, n)?;
        ok &= (got - 0.5).abs() <= 1e-3 && (oracle - 0.5).abs() <= 1e-12;
        parts.push(format!("n={n}: {got:.6}"));
    }
    Ok((ok, parts.join(", ")))
}

fn product_map(maps: &[&CptMap], rho: &M) -> M {
    let mut out = M::zeros(rho.nrows(), rho.ncols());
    let counts: Vec<usize> = maps.iter().map(|m| m.kraus().len()).collect();
    let mut idx = vec![0; maps.len()];
    loop {
        let k = maps.iter().zip(&idx).fold(M::identity(1, 1), |acc, (m, &j)| acc.kronecker(m.kraus()[j].as_dmatrix()));
        out += &k * rho * k.adjoint();
        let mut t = 0;
        while t < idx.len() {
            idx[t] += 1;
            if idx[t] < counts[t] {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
        if t == idx.len() {
            return out;
        }
    }
}

/// Sum over chain paths of path weight times the product map.
fn path_sum(ch: &MemoryChannel, rho: &M, n: usize) -> M {
    let s = ch.chain().len();
    let mut out = M::zeros(rho.nrows(), rho.ncols());
    for code in 0..s.pow(n as u32) {
        let path: Vec<usize> = (0..n).map(|t| (code / s.pow((n - 1 - t) as u32)) % s).collect();
        let mut w = ch.chain().gamma()[path[0]];
        for t in 1..n {
            w *= ch.chain().q_entry(path[t - 1], path[t]);
        }
        if w == 0.0 {
            continue;
        }
        let maps: Vec<&CptMap> = path.iter().map(|&i| &ch.maps()[i]).collect();
        out += product_map(&maps, rho) * Complex64::new(w, 0.0);
    }
    out
}

fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn branch_decomposition() -> Result<(bool, String)> {
    let shape = ChainShape { max_states: 3, cycle_prob: 0.4, transient_prob: 0.3 };
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let ch = random_channel(seed, &shape)?;
        for n in 1..=3 {
            let rho = random_mixed_state(&mut r, 1 << n);
            let x = rho.matrix().as_dmatrix();
            let oracle = path_sum(&ch, x, n);
            let mut mix = M::zeros(1 << n, 1 << n);
            for (b, w) in ch.branch_channels() {
                mix += ch.apply_branch(b, &rho, n)?.matrix().as_dmatrix() * Complex64::new(w, 0.0);
            }
            let full = ch.apply_block(&rho, n)?;
            worst = worst.max(max_diff(&mix, &oracle)).max(max_diff(full.matrix().as_dmatrix(), &oracle));
        }
    }
    Ok((worst <= 1e-9, format!("max deviation {worst:.2e} over 100 channels, n = 1..3")))
}

fn sqrt_psd(a: &M) -> M {
    let e = a.clone().symmetric_eigen();
    let d = M::from_diagonal(&e.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

fn root_fidelity(a: &M, b: &M) -> f64 {
    let sa = sqrt_psd(a);
    let inner = &sa * b * &sa;
    inner.symmetric_eigen().eigenvalues.iter().map(|x| x.max(0.0).sqrt()).sum()
}

fn fidelity_decay() -> Result<(bool, String)> {
    // phase against phase on the clean/half-depolarized cycle
    let chain = MarkovChain::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5])?;
    let cyc = MemoryChannel::new(chain, vec![CptMap::identity(2), CptMap::depolarizing(0.5)])?;
    let pair = BranchPair::new(BranchId::Periodic { class: 0, phase: 0 }, BranchId::Periodic { class: 0, phase: 1 })?;
    let sep = find_separating_state(&cyc, pair, &SearchConfig::default())?;
    let f = root_fidelity(sep.left_output.matrix().as_dmatrix(), sep.right_output.matrix().as_dmatrix());
    let curve = fidelity_decay_curve(&cyc, &sep, 10, false, 0.05)?;
    let phase_err = curve.points.iter().map(|p| (p.fidelity - f.powi(p.m as i32)).abs()).fold(0.0, f64::max);
    let phase_ok = curve.points.len() == 10 && phase_err <= 1e-9 && (f - sep.base_fidelity).abs() <= 1e-9;

    // two mixing classes, probes separated by spacers
    let (a, b) = (4.0 / 7.0, 3.0 / 7.0);
    let chain = MarkovChain::from_rows(
        vec![vec![0.7, 0.3, 0.0, 0.0], vec![0.4, 0.6, 0.0, 0.0], vec![0.0, 0.0, 0.5, 0.5], vec![0.0, 0.0, 0.5, 0.5]],
        vec![0.5 * a, 0.5 * b, 0.25, 0.25],
    )?;
    let aper = MemoryChannel::new(
        chain,
        vec![CptMap::identity(2), CptMap::depolarizing(0.3), CptMap::depolarizing(0.6), CptMap::bit_flip()],
    )?;
    let pair = BranchPair::new(BranchId::Aperiodic { class: 0 }, BranchId::Aperiodic { class: 1 })?;
    let sep = find_separating_state(&aper, pair, &SearchConfig::default())?;
    let curve = fidelity_decay_curve(&aper, &sep, 6, true, 0.05)?;
    let worst = curve.points.iter().map(|p| p.fidelity / p.bound).fold(0.0, f64::max);
    let aper_ok = curve.points.len() == 6 && curve.bound_holds(1e-9);
    Ok((
        phase_ok && aper_ok,
        format!(
            "phase-phase f={f:.6} max |F_m - f^m| {phase_err:.1e}; aper-aper stride {} max F_m/bound {worst:.4}",
            curve.stride
        ),
    ))
}

fn kron_pow(a: &M, m: usize) -> M {
    (0..m).fold(M::identity(1, 1), |acc, _| acc.kronecker(a))
}

fn helstrom_implication() -> Result<(bool, String)> {
    let mut r = rng(6);
    let mut ok = true;
    let mut worst_agree: f64 = 0.0;
    let mut vacuous = 0;
    let mut cases = 0;
    for _ in 0..50 {
        let (s1, s2) = (random_mixed_state(&mut r, 2), random_mixed_state(&mut r, 2));
        let g1: f64 = r.random_range(0.05..0.6);
        let g2: f64 = r.random_range(0.05..0.6);
        for m in [4, 6, 8] {
            let split = helstrom_split(&s1, &s2, g1, g2, m)?;
            let (a, b) = (s1.tensor_power(m)?, s2.tensor_power(m)?);
            let rep = lpi_check(&split, g1, g2, a.matrix(), b.matrix());

            // independent route: eigenprojectors of γ₁σ₁^{⊗m} − γ₂σ₂^{⊗m}
            let (x, y) = (kron_pow(s1.matrix().as_dmatrix(), m), kron_pow(s2.matrix().as_dmatrix(), m));
            let diff = &x * Complex64::new(g1, 0.0) - &y * Complex64::new(g2, 0.0);
            let dim = diff.nrows();
            let e = diff.symmetric_eigen();
            let mut plus = M::zeros(dim, dim);
            for k in 0..dim {
                if e.eigenvalues[k] >= 0.0 {
                    let v = e.eigenvectors.column(k);
                    plus += v * v.adjoint();
                }
            }
            let minus = M::identity(dim, dim) - &plus;
            let tn: f64 = e.eigenvalues.iter().map(|l| l.abs()).sum();
            let delta = (tn - (g1 + g2)).abs();
            let res_plus = ((&plus * &x).trace().re - 1.0).abs();
            let res_minus = ((&minus * &y).trace().re - 1.0).abs();
            worst_agree = worst_agree
                .max((delta - rep.delta).abs())
                .max((res_plus - rep.residual_plus).abs())
                .max((res_minus - rep.residual_minus).abs());
            ok &= res_plus <= delta / (2.0 * g1) + 1e-9 && res_minus <= delta / (2.0 * g2) + 1e-9 && rep.holds;
            vacuous += usize::from(rep.vacuous);
            cases += 1;
        }
    }
    ok &= worst_agree <= 1e-9;
    Ok((ok, format!("{cases} cases ({vacuous} vacuous), routes agree to {worst_agree:.1e}")))
}

/// `ln C(m, k)` by summing logs.
fn ln_binom(m: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((m - k + i) as f64 / i as f64).ln()).sum()
}

/// Exact coverage of the window-`eps` typical set of Bernoulli(`p1`) strings.
fn binomial_coverage(p1: f64, m: usize, eps: f64) -> f64 {
    let p0 = 1.0 - p1;
    let h = h2(p1);
    (0..=m)
        .filter(|&k| {
            let rate = -((m - k) as f64 * p0.log2() + k as f64 * p1.log2()) / m as f64;
            (rate - h).abs() < eps
        })
        .map(|k| (ln_binom(m, k) + (m - k) as f64 * p0.ln() + k as f64 * p1.ln()).exp())
        .sum()
}

fn typical_coverage() -> Result<(bool, String)> {
    let (eps, delta, m_max) = (0.1, 0.2, 200);
    let threshold = 1.0 - delta * delta;
    let mu = SpectralMeasure::new(vec![0.9, 0.1])?;
    let mut agree: f64 = 0.0;
    for m in 1..=m_max {
        agree = agree.max((typical_set(&mu, m, eps)?.coverage - binomial_coverage(0.1, m, eps)).abs());
    }
    let m1 = coverage_threshold(&mu, eps, threshold, m_max)?;

    let state = DensityMatrix::from_diagonal(&[0.9, 0.1])?;
    let mut op_ok = true;
    for m in 1..=10 {
        let rep = typical_projector(&state, m, eps)?;
        op_ok &= rep.bound_holds && rep.max_eigenvalue_numeric.is_some();
    }

    // how far the scan would have to go
    let needed = (1..=2000).rev().take_while(|&m| binomial_coverage(0.1, m, eps) > threshold).last();
    let ok = m1.is_some() && agree <= 1e-9 && op_ok;
    Ok((
        ok,
        format!(
            "m1 in 1..={m_max}: {m1:?}; coverage(200) = {:.4} vs {threshold}; sustained from m = {} (scan to 2000); \
             binomial oracle agrees to {agree:.1e}; operator bound m<=10: {op_ok}",
            binomial_coverage(0.1, 200, eps),
            needed.map_or("-".into(), |m| m.to_string())
        ),
    ))
}

fn superadditivity() -> Result<(bool, String)> {
    let shape = ChainShape::default();
    let config = OptimizerConfig { restarts: 4, seed: 3, ..OptimizerConfig::default() };
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for seed in 0..20 {
        let ch = random_channel(1000 + seed, &shape)?;
        let ens = optimize_ensemble(&ch, 1, &config)?.ensemble;
        let rep = superadditivity_check(&ch, 1, 2, &ens)?;
        ok &= rep.status == CheckStatus::Passed && rep.slack >= -1e-9;
        worst = worst.min(rep.slack);
    }
    Ok((ok, format!("20 channels, min slack {worst:.4}")))
}

fn achievability_trend() -> Result<(bool, String)> {
    let opts = CodeOptions::default();
    let basis = Ensemble::computational_basis(2, 1)?;

    let dep = MemoryChannel::memoryless(CptMap::depolarizing(0.5));
    let seeds: Vec<u64> = (0..64).collect();
    let rows = achievability_sweep(&dep, &basis, 0.1, &[2, 4, 6], &seeds, &opts)?;
    let a: Vec<f64> = rows.iter().map(|r| r.mean_error).collect();

    let chain = MarkovChain::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5])?;
    let cc = MemoryChannel::new(chain, vec![CptMap::depolarizing(0.2), CptMap::depolarizing(0.6)])?;
    let seeds: Vec<u64> = (0..16).collect();
    let rows = achievability_sweep(&cc, &basis, 0.05, &[2, 4], &seeds, &opts)?;
    let b: Vec<f64> = rows.iter().map(|r| r.mean_error).collect();

    // exact engine against the materialized operator, one code per channel
    let mut cross: f64 = 0.0;
    for (ch, rate) in [(&dep, 0.1), (&cc, 0.05)] {
        let code = build_codebook(ch, &basis, 2, rate, 0, &opts)?;
        let dec = default_decoder(&code, ch)?;
        cross = cross.max((simulate_error(&code, ch, &dec)?.avg_error - simulate_error_direct(&code, ch, &dec)?).abs());
    }

    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let ok = decreasing(&a) && decreasing(&b) && cross <= 1e-9;
    Ok((ok, format!("dep(0.5) R=0.1 n=2,4,6: {a:.4?}; mixture R=0.05 n=2,4: {b:.4?}; exact vs direct {cross:.1e}")))
}

fn fano_converse() -> Result<(bool, String)> {
    let shape = ChainShape::default();
    let config = OptimizerConfig { restarts: 4, seed: 9, ..OptimizerConfig::default() };
    let basis = Ensemble::computational_basis(2, 1)?;
    let ns = [1, 2, 3];
    let mut ok = true;
    let mut min_gap = f64::INFINITY;
    let mut tested = 0;
    for seed in 0..10 {
        let ch = random_channel(2000 + seed, &shape)?;
        let caps: Vec<f64> =
            ns.iter().map(|&n| Ok(optimize_ensemble(&ch, n, &config)?.min_value)).collect::<Result<_>>()?;
        let rate = caps.iter().copied().fold(0.0, f64::max) + 0.25;
        let min_gamma = ch.decomposition().min_gamma();
        for (&n, &cap) in ns.iter().zip(&caps) {
            let bound = fano_converse_bound(cap, rate, n, min_gamma)?;
            let code = build_codebook(&ch, &basis, n, rate, seed, &CodeOptions::default())?;
            let err = simulate_error(&code, &ch, &default_decoder(&code, &ch)?)?.avg_error;
            ok &= err >= bound - 1e-9;
            min_gap = min_gap.min(err - bound);
            tested += 1;
        }
    }
    Ok((ok, format!("{tested} (channel, n) cases, min error - bound {min_gap:.4}")))
}

fn no_strong_converse() -> Result<(bool, String)> {
    let opts = StrongConverseOptions { seed: 1, ..StrongConverseOptions::default() };
    let rep = strong_converse_experiment(&CptMap::identity(2), &CptMap::depolarizing(1.0), 0.5, &[2, 4, 6], &opts)?;
    let errs: Vec<f64> = rep.rows.iter().map(|r| r.avg_error).collect();
    let ok = errs.iter().all(|e| (0.4..=0.6).contains(e)) && rep.behaviour == ConverseBehaviour::BoundedAwayFromOne;
    Ok((ok, format!("errors {errs:.4?}, {:?}", rep.behaviour)))
}

fn spec(name: &str) -> String {
    format!("{}/../../specs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run_cli(args: &[String], threads: &str) -> Result<Vec<u8>> {
    let out = Command::new(env!("CARGO_BIN_EXE_mqchan")).args(args).env("RAYON_NUM_THREADS", threads).output()?;
    ensure!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn determinism() -> Result<(bool, String)> {
    let cmds: Vec<Vec<String>> = [
        vec!["classes", "--spec", &spec("mixed_classes.json")],
        vec!["capacity", "--spec", &spec("depolarizing.json"), "--n", "1,2", "--seed", "5", "--restarts", "4"],
        vec!["discriminate", "--spec", &spec("flip_mixture.json"), "--n-max", "3", "--seed", "5"],
        vec!["discriminate", "--spec", &spec("dead_branch.json"), "--n-max", "4", "--seed", "5", "--identify"],
        vec![
            "simulate",
            "--spec",
            &spec("depolarizing_mixture.json"),
            "--rate",
            "0.1",
            "--n",
            "2,3",
            "--seed",
            "5",
            "--seeds",
            "2",
        ],
        vec![
            "converse",
            "--spec",
            &spec("depolarizing.json"),
            "--rate",
            "0.6",
            "--n",
            "2,3",
            "--seed",
            "5",
            "--seeds",
            "2",
            "--capacity-n",
            "2",
        ],
        vec!["strong-converse", "--spec", &spec("dead_branch.json"), "--rate", "0.5", "--n", "2,4", "--seed", "5"],
        vec!["typical", "--probs", "0.9,0.1", "--n-max", "20"],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect();
    let mut same = 0;
    let mut differing = Vec::new();
    for args in &cmds {
        let a = run_cli(args, "1")?;
        let b = run_cli(args, "4")?;
        if a == b && !a.is_empty() {
            same += 1;
        } else {
            differing.push(args[0].clone());
        }
    }
    Ok((differing.is_empty(), format!("{same}/{} commands byte-identical across runs {differing:?}", cmds.len())))
}
