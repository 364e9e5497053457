//! Command implementations behind the `mqchan` binary. Each command returns a
//! [`Table`] so the binary only handles argument parsing and output.

use anyhow::{bail, Context, Result};
use mqchan::codec::{
    build_codebook, default_decoder, fano_converse_bound, simulate_error, strong_converse_experiment, CodeOptions,
    StrongConverseOptions,
};
use mqchan::discrimination::{
    branch_pairs, branch_projectors, build_preamble, find_separating_state, pair_profile, SearchConfig,
};
use mqchan::holevo::{optimize_ensemble, OptimizerConfig};
use mqchan::markov::ClassKind;
use mqchan::typicality::{typical_set, SpectralMeasure};
use mqchan::{ChannelSpecFile, Ensemble, MemoryChannel};

/// Rows of already formatted cells under a header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 cells")
    }

    /// Space-aligned columns for terminals.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| self.rows.iter().map(|r| r[i].len()).chain([self.header[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        for r in &self.rows {
            out += &line(r);
        }
        out
    }
}

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `[-5, 6)`, scientific otherwise, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn load_channel(text: &str) -> Result<MemoryChannel> {
    let spec = ChannelSpecFile::from_json(text)?;
    Ok(spec.to_channel()?)
}

pub fn load_channel_file(path: &std::path::Path) -> Result<MemoryChannel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_channel(&text).with_context(|| format!("in {}", path.display()))
}

pub fn cmd_classes(ch: &MemoryChannel) -> Table {
    let mut t = Table::new(&["class", "kind", "period", "members", "gamma"]);
    let labels = ch.chain().labels();
    let names = |m: &[usize]| m.iter().map(|&i| labels[i].as_str()).collect::<Vec<_>>().join(" ");
    for (c, class) in ch.decomposition().classes.iter().enumerate() {
        let kind = match class.kind {
            ClassKind::Aperiodic => "aperiodic",
            ClassKind::PeriodicCycle { .. } => "periodic",
        };
        t.push(vec![
            format!("C{c}"),
            kind.into(),
            class.period().to_string(),
            names(&class.members),
            fmt_num(class.gamma),
        ]);
    }
    let dropped = &ch.decomposition().dropped;
    if !dropped.is_empty() {
        let mass: f64 = dropped.iter().map(|&i| ch.chain().gamma()[i]).sum();
        t.push(vec!["-".into(), "dropped".into(), "-".into(), names(dropped), fmt_num(mass)]);
    }
    t
}

pub fn optimizer_config(seed: u64, restarts: usize) -> OptimizerConfig {
    OptimizerConfig { seed, restarts, ..OptimizerConfig::default() }
}

/// Optimized per-class `χ̄` (lower bounds on the capacity terms) per block length.
pub fn cmd_capacity(ch: &MemoryChannel, ns: &[usize], config: &OptimizerConfig) -> Result<Table> {
    let mut t = Table::new(&["n", "class", "chi_bar_bits", "min_bits", "optimizer_value", "restarts_used"]);
    for &n in ns {
        let est = optimize_ensemble(ch, n, config)?;
        let objective = est.trace.last().copied().unwrap_or(est.min_value);
        for (c, v) in est.per_class.iter().enumerate() {
            t.push(vec![
                n.to_string(),
                format!("C{c}"),
                fmt_num(*v),
                fmt_num(est.min_value),
                fmt_num(objective),
                est.restarts_used.to_string(),
            ]);
        }
    }
    Ok(t)
}

fn require_branches(ch: &MemoryChannel) -> Result<()> {
    if ch.branch_channels().len() < 2 {
        bail!("the channel has a single branch; nothing to discriminate");
    }
    Ok(())
}

/// Fidelity decay, Helstrom success and the split implication check per branch pair.
pub fn cmd_discriminate(ch: &MemoryChannel, m_max: usize, alpha: f64, seed: u64) -> Result<Table> {
    require_branches(ch)?;
    let mut t = Table::new(&["pair", "case", "m", "fidelity", "bound", "helstrom_success", "lpi_delta", "lpi_pass"]);
    let search = SearchConfig { seed, ..SearchConfig::default() };
    for pair in branch_pairs(ch) {
        let sep = find_separating_state(ch, pair, &search)?;
        for row in pair_profile(ch, &sep, m_max, alpha)? {
            t.push(vec![
                pair.label(),
                pair.case.as_str().into(),
                row.m.to_string(),
                fmt_num(row.fidelity),
                fmt_num(row.bound),
                fmt_num(row.helstrom_success),
                fmt_num(row.lpi.delta),
                row.lpi.holds.to_string(),
            ]);
        }
    }
    Ok(t)
}

/// Branch identification probabilities of the preamble for `m = 1..=m_max`.
pub fn cmd_identify(ch: &MemoryChannel, m_max: usize, alpha: f64, delta: f64, seed: u64) -> Result<Table> {
    require_branches(ch)?;
    let mut t = Table::new(&["branch", "m", "preamble_len", "probability", "meets_target"]);
    let search = SearchConfig { seed, ..SearchConfig::default() };
    for m in 1..=m_max {
        let pre = build_preamble(ch, m, alpha, &search)?;
        let bp = branch_projectors(ch, &pre)?;
        for e in &bp.entries {
            t.push(vec![
                e.branch.to_string(),
                m.to_string(),
                pre.total_len.to_string(),
                fmt_num(e.probability),
                (e.probability >= 1.0 - delta).to_string(),
            ]);
        }
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleChoice {
    /// Uniform computational basis letters.
    Basis,
    /// The optimizer's single-use ensemble.
    Optimal,
}

fn letter_ensemble(ch: &MemoryChannel, choice: EnsembleChoice, config: &OptimizerConfig) -> Result<Ensemble> {
    Ok(match choice {
        EnsembleChoice::Basis => Ensemble::computational_basis(ch.in_dim(), 1)?,
        EnsembleChoice::Optimal => optimize_ensemble(ch, 1, config)?.ensemble,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateArgs {
    pub rate: f64,
    pub ns: Vec<usize>,
    pub seed: u64,
    pub seeds: usize,
    pub ensemble: EnsembleChoice,
    pub optimizer: OptimizerConfig,
    pub code: CodeOptions,
    /// Capacity is estimated at block length `min(n, capacity_n)`.
    pub capacity_n: usize,
}

/// Capacity estimates keyed by the block length actually optimized.
struct CapacityCache<'a> {
    ch: &'a MemoryChannel,
    config: &'a OptimizerConfig,
    cap_n: usize,
    done: std::collections::BTreeMap<usize, f64>,
}

impl<'a> CapacityCache<'a> {
    fn new(ch: &'a MemoryChannel, args: &'a SimulateArgs) -> Result<Self> {
        if args.capacity_n == 0 {
            bail!("capacity block length must be positive");
        }
        Ok(CapacityCache { ch, config: &args.optimizer, cap_n: args.capacity_n, done: Default::default() })
    }

    fn get(&mut self, n: usize) -> Result<(usize, f64)> {
        let k = n.min(self.cap_n);
        if let Some(&c) = self.done.get(&k) {
            return Ok((k, c));
        }
        let c = optimize_ensemble(self.ch, k, self.config)?.min_value;
        self.done.insert(k, c);
        Ok((k, c))
    }
}

/// Exact error of seeded random codes, with the Fano bound when the rate
/// exceeds the estimated `C_n`.
pub fn cmd_simulate(ch: &MemoryChannel, args: &SimulateArgs) -> Result<Table> {
    if args.rate.is_nan() || args.rate <= 0.0 {
        bail!("rate must be positive");
    }
    let classes = ch.decomposition().classes.len();
    let mut header = vec!["n".to_string(), "seed".into(), "code_size".into(), "avg_error".into()];
    header.extend((0..classes).map(|c| format!("error_C{c}")));
    header.extend(["capacity_n".into(), "capacity_estimate".into(), "fano_bound".into()]);
    let mut t = Table { header, rows: Vec::new() };
    let ens = letter_ensemble(ch, args.ensemble, &args.optimizer)?;
    let min_gamma = ch.decomposition().min_gamma();
    let mut caps = CapacityCache::new(ch, args)?;
    for &n in &args.ns {
        let (cap_n, cap) = caps.get(n)?;
        let fano = fano_converse_bound(cap, args.rate, n, min_gamma).ok();
        for s in 0..args.seeds as u64 {
            let seed = args.seed.wrapping_add(s);
            let code = build_codebook(ch, &ens, n, args.rate, seed, &args.code)?;
            let rep = simulate_error(&code, ch, &default_decoder(&code, ch)?)?;
            let mut row = vec![n.to_string(), seed.to_string(), code.len().to_string(), fmt_num(rep.avg_error)];
            row.extend(rep.per_class_error.iter().map(|&e| fmt_num(e)));
            row.push(cap_n.to_string());
            row.push(fmt_num(cap));
            row.push(fano.map_or_else(String::new, fmt_num));
            t.push(row);
        }
    }
    Ok(t)
}

/// Simulated error against the Fano lower bound; fails rows where the bound
/// would be violated.
pub fn cmd_converse(ch: &MemoryChannel, args: &SimulateArgs) -> Result<Table> {
    let mut t =
        Table::new(&["n", "seed", "rate", "capacity_n", "capacity_estimate", "avg_error", "fano_bound", "holds"]);
    let ens = letter_ensemble(ch, args.ensemble, &args.optimizer)?;
    let min_gamma = ch.decomposition().min_gamma();
    let mut caps = CapacityCache::new(ch, args)?;
    for &n in &args.ns {
        let (cap_n, cap) = caps.get(n)?;
        let bound = fano_converse_bound(cap, args.rate, n, min_gamma)
            .with_context(|| format!("rate {} is not above the estimated C_{cap_n} = {cap:.6}", args.rate))?;
        for s in 0..args.seeds as u64 {
            let seed = args.seed.wrapping_add(s);
            let code = build_codebook(ch, &ens, n, args.rate, seed, &args.code)?;
            let rep = simulate_error(&code, ch, &default_decoder(&code, ch)?)?;
            t.push(vec![
                n.to_string(),
                seed.to_string(),
                fmt_num(args.rate),
                cap_n.to_string(),
                fmt_num(cap),
                fmt_num(rep.avg_error),
                fmt_num(bound),
                (rep.avg_error >= bound - 1e-9).to_string(),
            ]);
        }
    }
    Ok(t)
}

/// The two-branch experiment on a spec whose chain is two absorbing states.
pub fn cmd_strong_converse(ch: &MemoryChannel, rate: f64, ns: &[usize], opts: &StrongConverseOptions) -> Result<Table> {
    let q = ch.chain().q();
    if ch.chain().len() != 2 || q[(0, 0)] != 1.0 || q[(1, 1)] != 1.0 {
        bail!("strong-converse needs a two-state spec with Q = I");
    }
    let gamma = ch.chain().gamma();
    let opts = StrongConverseOptions { gamma: [gamma[0], gamma[1]], ..opts.clone() };
    let rep = strong_converse_experiment(&ch.maps()[0], &ch.maps()[1], rate, ns, &opts)?;
    let mut t = Table::new(&[
        "n",
        "code_size",
        "avg_error",
        "error_branch0",
        "error_branch1",
        "threshold",
        "in_window",
        "behaviour",
    ]);
    let behaviour = match rep.behaviour {
        mqchan::codec::ConverseBehaviour::BoundedAwayFromOne => "bounded-away-from-one",
        mqchan::codec::ConverseBehaviour::ApproachesOne => "approaches-one",
    };
    for r in &rep.rows {
        t.push(vec![
            r.n.to_string(),
            r.code_size.to_string(),
            fmt_num(r.avg_error),
            fmt_num(r.per_branch_error[0]),
            fmt_num(r.per_branch_error[1]),
            fmt_num(rep.threshold),
            rep.in_window.to_string(),
            behaviour.into(),
        ]);
    }
    Ok(t)
}

/// Exact coverage of the typical set of a probability vector for
/// `m = 1..=m_max`, against the `1 − δ²` threshold.
pub fn cmd_typical(probs: &[f64], eps: f64, delta: f64, m_max: usize) -> Result<Table> {
    let mu = SpectralMeasure::new(probs.to_vec())?;
    let threshold = 1.0 - delta * delta;
    let mut t = Table::new(&["m", "coverage", "log2_count", "threshold", "above"]);
    for m in 1..=m_max {
        let set = typical_set(&mu, m, eps)?;
        t.push(vec![
            m.to_string(),
            fmt_num(set.coverage),
            fmt_num(set.log2_count),
            fmt_num(threshold),
            (set.coverage > threshold).to_string(),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.188722), "0.188722");
        assert_eq!(fmt_num(0.1887218755), "0.188722");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(123456789.0), "1.23457e+08");
        assert_eq!(fmt_num(1.5e-7), "1.5e-07");
        assert_eq!(fmt_num(-0.25), "-0.25");
        assert_eq!(fmt_num(0.0001234567), "0.000123457");
    }

    #[test]
    fn csv_has_lf_endings_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x,y\"\n");
    }
}
