//! Query-bounded distinguishers, their Monte Carlo advantage estimates, the
//! closed-form advantage ceiling, distribution mass checks, and measurement
//! of the pinned constants.
//!
//! Every Monte Carlo loop runs over a fixed number of chunks with one
//! ChaCha stream per chunk, combined in chunk order, so estimates are
//! bit-identical for a given master seed regardless of thread count.

use crate::error::{Error, Result};
use crate::families::halving_cost_ratio_sup;
use crate::fourier::{level_weight, wht_forward};
use crate::rng::{stream, StreamLabel};
use crate::rorrelation::{
    sample_uniform, Class, HardDistribution, InputMatrix, OrthogonalMatrix,
    RorrelationInstance,
};
use crate::tree::{enumerate_trees, enumeration_count, random_tree, DecisionTree, LeafModel,
    ENUMERATION_CAP};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::fmt::Write as _;

const CHUNKS: u64 = 64;

/// Runs `samples` evaluations of `f` split over fixed seed streams and
/// returns (mean, standard error). `index_base` separates independent loops
/// sharing one master seed.
pub fn chunked_mean<F>(
    samples: usize,
    master_seed: u64,
    index_base: u64,
    f: F,
) -> Result<(f64, f64)>
where
    F: Fn(&mut ChaCha12Rng) -> Result<f64> + Sync,
{
    let per_chunk = samples.div_ceil(CHUNKS as usize);
    let totals: Vec<Result<(f64, f64, usize)>> = (0..CHUNKS)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master_seed, StreamLabel::MonteCarloChunk, index_base + i);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..per_chunk {
                let v = f(&mut rng)?;
                sum += v;
                sum_sq += v * v;
            }
            Ok((sum, sum_sq, per_chunk))
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for t in totals {
        let (s, sq, c) = t?;
        sum += s;
        sum_sq += sq;
        count += c;
    }
    let n = count as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Read-tracking view of an input; every distinct entry read counts against
/// the query budget, and exceeding it is a hard error.
pub struct AuditedInput<'a> {
    x: &'a InputMatrix,
    budget: usize,
    seen: Vec<u64>,
    reads: usize,
}

impl<'a> AuditedInput<'a> {
    pub fn new(x: &'a InputMatrix, budget: usize) -> Self {
        let bits = x.n() * x.k();
        AuditedInput { x, budget, seen: vec![0; bits.div_ceil(64)], reads: 0 }
    }

    pub fn sign(&mut self, i: usize, j: usize) -> Result<i8> {
        let bit = j * self.x.n() + i;
        let (w, b) = (bit / 64, bit % 64);
        if self.seen[w] >> b & 1 == 0 {
            self.reads += 1;
            if self.reads > self.budget {
                return Err(Error::QueryBudget { reads: self.reads, budget: self.budget });
            }
            self.seen[w] |= 1 << b;
        }
        Ok(self.x.sign(i, j))
    }

    pub fn reads(&self) -> usize {
        self.reads
    }
}

/// Shipped query-bounded policies. The closed-form ceiling applies to every
/// depth-d algorithm; these are concrete attacks, not claimed optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Reads nothing and always answers 0.
    ConstantZero,
    /// Reads the whole input and answers the exact classification.
    FullInformation,
    /// Averages random adjacent-column entry pairs weighted by the matching
    /// matrix entry, then votes on the sign.
    RandomProbe { depth: usize },
    /// Reads one set of rows from an adjacent column pair and thresholds
    /// the partial bilinear form through the matrix.
    GreedyProbe { depth: usize },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::ConstantZero => "constant-zero",
            Policy::FullInformation => "full-information",
            Policy::RandomProbe { .. } => "random-probe",
            Policy::GreedyProbe { .. } => "greedy-probe",
        }
    }

    /// Query budget against an n x k input.
    pub fn depth(&self, n: usize, k: usize) -> usize {
        match self {
            Policy::ConstantZero => 0,
            Policy::FullInformation => n * k,
            Policy::RandomProbe { depth } | Policy::GreedyProbe { depth } => *depth,
        }
    }

    pub fn decide<R: Rng>(
        &self,
        inst: &RorrelationInstance,
        x: &mut AuditedInput,
        rng: &mut R,
    ) -> Result<bool> {
        let (n, k) = (inst.n(), inst.k());
        match *self {
            Policy::ConstantZero => Ok(false),
            Policy::FullInformation => {
                let mut signs = Vec::with_capacity(n * k);
                for j in 0..k {
                    for i in 0..n {
                        signs.push(x.sign(i, j)?);
                    }
                }
                let full = InputMatrix::new(n, k, signs)?;
                Ok(inst.classify(&full)? == Class::One)
            }
            Policy::RandomProbe { depth } => {
                let mut s = 0.0;
                if k == 1 {
                    for _ in 0..depth {
                        s += x.sign(rng.gen_range(0..n), 0)? as f64;
                    }
                } else {
                    for _ in 0..depth / 2 {
                        let c = rng.gen_range(0..k - 1);
                        let (i, l) = (rng.gen_range(0..n), rng.gen_range(0..n));
                        s += x.sign(i, c)? as f64
                            * x.sign(l, c + 1)? as f64
                            * inst.matrix().entry(i, l);
                    }
                }
                Ok(s > 0.0)
            }
            Policy::GreedyProbe { depth } => {
                if k == 1 {
                    let rows = sample_rows(n, depth.min(n), rng);
                    let mut s = 0.0;
                    for &i in &rows {
                        s += x.sign(i, 0)? as f64;
                    }
                    return Ok(s > 0.0);
                }
                let rows = sample_rows(n, (depth / 2).min(n), rng);
                let mut a = Vec::with_capacity(rows.len());
                let mut b = Vec::with_capacity(rows.len());
                for &i in &rows {
                    a.push(x.sign(i, 0)? as f64);
                    b.push(x.sign(i, 1)? as f64);
                }
                let mut s = 0.0;
                for (ia, &i) in rows.iter().enumerate() {
                    for (ib, &l) in rows.iter().enumerate() {
                        s += a[ia] * inst.matrix().entry(i, l) * b[ib];
                    }
                }
                Ok(s > 0.0)
            }
        }
    }
}

/// `count` distinct row indices by partial Fisher-Yates.
fn sample_rows<R: Rng>(n: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for j in 0..count {
        let pick = rng.gen_range(j..n);
        idx.swap(j, pick);
    }
    idx.truncate(count);
    idx
}

#[derive(Debug, Clone)]
pub struct AdvantageRow {
    pub policy: String,
    pub depth: usize,
    pub e_uniform: f64,
    pub se_uniform: f64,
    pub e_hard: f64,
    pub se_hard: f64,
    pub advantage: f64,
    pub bound: f64,
}

/// Closed-form ceiling before clamping:
/// (c' d log2^{2-1/k}(n+k) / n^{1-1/k})^{k/2}.
pub fn advantage_bound_raw(n: u64, k: u32, d: u64, c_prime: f64) -> f64 {
    let (n_f, k_f, d_f) = (n as f64, k as f64, d as f64);
    let log = (n_f + k_f).log2();
    (c_prime * d_f * log.powf(2.0 - 1.0 / k_f) / n_f.powf(1.0 - 1.0 / k_f)).powf(k_f / 2.0)
}

/// The ceiling, clamped at the trivial advantage 1.
pub fn advantage_bound(n: u64, k: u32, d: u64, c_prime: f64) -> f64 {
    advantage_bound_raw(n, k, d, c_prime).min(1.0)
}

/// Estimates a policy's acceptance rate on both input distributions and
/// reports the gap next to the clamped ceiling at `c_prime`.
pub fn run_distinguisher(
    policy: Policy,
    inst: &RorrelationInstance,
    epsilon: f64,
    samples: usize,
    master_seed: u64,
    c_prime: f64,
) -> Result<AdvantageRow> {
    let (n, k) = (inst.n(), inst.k());
    let depth = policy.depth(n, k);
    let hard = HardDistribution::new(inst, epsilon)?;
    let eval_uniform = |rng: &mut ChaCha12Rng| -> Result<f64> {
        let x = sample_uniform(n, k, rng)?;
        let mut audited = AuditedInput::new(&x, depth);
        Ok(policy.decide(inst, &mut audited, rng)? as u8 as f64)
    };
    let eval_hard = |rng: &mut ChaCha12Rng| -> Result<f64> {
        let x = hard.sample(rng)?;
        let mut audited = AuditedInput::new(&x, depth);
        Ok(policy.decide(inst, &mut audited, rng)? as u8 as f64)
    };
    let (e_uniform, se_uniform) = chunked_mean(samples, master_seed, 0, eval_uniform)?;
    let (e_hard, se_hard) = chunked_mean(samples, master_seed, 1 << 20, eval_hard)?;
    Ok(AdvantageRow {
        policy: policy.name().into(),
        depth,
        e_uniform,
        se_uniform,
        e_hard,
        se_hard,
        advantage: (e_hard - e_uniform).abs(),
        bound: advantage_bound(n as u64, k as u32, depth as u64, c_prime),
    })
}

pub fn advantage_csv(rows: &[AdvantageRow]) -> String {
    let mut s = String::from(
        "policy,depth,e_uniform,se_uniform,e_hard,se_hard,advantage,bound\n",
    );
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.policy, r.depth, r.e_uniform, r.se_uniform, r.e_hard, r.se_hard, r.advantage,
            r.bound
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct MassReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    /// Fraction of uniform inputs landing outside the zero class.
    pub p_nonzero_uniform: f64,
    pub se_uniform: f64,
    /// Ceiling 2^{-k-1} for the uniform nonzero mass.
    pub bound_uniform: f64,
    pub ok_uniform: bool,
    /// Fraction of planted inputs classified one.
    pub p_one_hard: f64,
    pub se_hard: f64,
    /// Floor 2^{-k} for the planted one-class mass.
    pub bound_hard: f64,
    pub ok_hard: bool,
}

/// Checks that uniform inputs rarely leave the zero class while planted
/// inputs hit the one class often, with 4-sigma Monte Carlo slack.
pub fn mass_checks(
    inst: &RorrelationInstance,
    epsilon: f64,
    samples: usize,
    master_seed: u64,
) -> Result<MassReport> {
    if !inst.separation_regime() {
        return Err(Error::InfeasibleParams(format!(
            "k={} too large for n={}; need k <= log2(n)/3 - 1",
            inst.k(),
            inst.n()
        )));
    }
    let (n, k) = (inst.n(), inst.k());
    let hard = HardDistribution::new(inst, epsilon)?;
    let (p_nonzero_uniform, se_uniform) =
        chunked_mean(samples, master_seed, 2 << 20, |rng| {
            let x = sample_uniform(n, k, rng)?;
            Ok((inst.classify(&x)? != Class::Zero) as u8 as f64)
        })?;
    let (p_one_hard, se_hard) = chunked_mean(samples, master_seed, 3 << 20, |rng| {
        let x = hard.sample(rng)?;
        Ok((inst.classify(&x)? == Class::One) as u8 as f64)
    })?;
    let bound_uniform = 2f64.powi(-(k as i32 + 1));
    let bound_hard = 2f64.powi(-(k as i32));
    Ok(MassReport {
        n,
        k,
        samples,
        p_nonzero_uniform,
        se_uniform,
        bound_uniform,
        ok_uniform: p_nonzero_uniform <= bound_uniform + 4.0 * se_uniform,
        p_one_hard,
        se_hard,
        bound_hard,
        ok_hard: p_one_hard >= bound_hard - 4.0 * se_hard,
    })
}

pub fn mass_csv(reports: &[MassReport]) -> String {
    let mut s = String::from(
        "n,k,samples,p_nonzero_uniform,se_uniform,bound_uniform,ok_uniform,p_one_hard,se_hard,bound_hard,ok_hard\n",
    );
    for r in reports {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.k,
            r.samples,
            r.p_nonzero_uniform,
            r.se_uniform,
            r.bound_uniform,
            r.ok_uniform,
            r.p_one_hard,
            r.se_hard,
            r.bound_hard,
            r.ok_hard
        )
        .unwrap();
    }
    s
}

/// Largest observed ratios of exact level-1/level-2 weights to their
/// depth-2-style denominators over a batch of constant-leaf trees.
#[derive(Debug, Clone, Copy, Default)]
pub struct LevelRatioSweep {
    pub c1: f64,
    pub c2: f64,
    pub trees: u64,
}

fn level_ratio_update(sweep: &mut LevelRatioSweep, tree: &DecisionTree) {
    let (n, d) = (tree.n() as f64, tree.depth() as f64);
    if tree.depth() == 0 {
        return;
    }
    let table = tree.truth_table().unwrap();
    let nonzero = table.values().iter().filter(|&&v| v != 0.0).count();
    if nonzero == 0 {
        return;
    }
    let p = nonzero as f64 / table.values().len() as f64;
    let spectrum = wht_forward(&table);
    let l1 = level_weight(&spectrum, 1).unwrap();
    sweep.c1 = sweep.c1.max(l1 / (d.sqrt() * p * (1.0 - p.ln()).sqrt()));
    if tree.depth() >= 2 {
        let l2 = level_weight(&spectrum, 2).unwrap();
        let denom = (d * (d - 1.0) / 2.0).sqrt()
            * p
            * ((1.0 - p.ln()) * (1.0 + (n / p).ln())).sqrt();
        sweep.c2 = sweep.c2.max(l2 / denom);
    }
    sweep.trees += 1;
}

/// Sweeps every constant-leaf {-1,0,1} tree on the (n, d) grid that fits
/// under the enumeration cap.
pub fn level_ratio_exhaustive(n_max: usize, d_max: usize) -> Result<LevelRatioSweep> {
    let labels = [-1.0, 0.0, 1.0];
    let mut sweep = LevelRatioSweep::default();
    for n in 1..=n_max {
        for d in 1..=d_max.min(n) {
            if enumeration_count(n, d, labels.len()) > ENUMERATION_CAP {
                continue;
            }
            for tree in enumerate_trees(n, d, &labels)? {
                level_ratio_update(&mut sweep, &tree);
            }
        }
    }
    Ok(sweep)
}

/// Same ratios over uniformly labeled random trees at one (n, d) cell.
pub fn level_ratio_random(n: usize, d: usize, samples: usize, seed: u64) -> Result<LevelRatioSweep> {
    let mut rng = stream(seed, StreamLabel::ConstantSweep, 0);
    let mut sweep = LevelRatioSweep::default();
    for _ in 0..samples {
        // Density 2/3 makes each label in {-1, 0, 1} equally likely.
        let tree = random_tree(n, d, LeafModel::Pm01 { density: 2.0 / 3.0 }, &mut rng)?;
        level_ratio_update(&mut sweep, &tree);
    }
    Ok(sweep)
}

/// The measured stand-ins for the existential constants, with the sweep
/// descriptions that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    pub seed: u64,
    /// Partition-recursion constant from the ratio sweep over k <= 60.
    pub c_hat: f64,
    /// Depth-normalized level-1 weight ratio ceiling.
    pub c1_hat: f64,
    /// Level-2 analogue.
    pub c2_hat: f64,
    /// Observed advantage over the closed-form ceiling, floored at 1.
    pub c_prime_hat: f64,
    pub grid: String,
}

impl Constants {
    pub fn to_text(&self) -> String {
        format!(
            "seed={}\ngrid={}\nc_hat={}\nc1_hat={}\nc2_hat={}\nc_prime_hat={}\n",
            self.seed, self.grid, self.c_hat, self.c1_hat, self.c2_hat, self.c_prime_hat
        )
    }

    pub fn from_text(text: &str) -> Result<Constants> {
        let mut c = Constants {
            seed: 0,
            c_hat: f64::NAN,
            c1_hat: f64::NAN,
            c2_hat: f64::NAN,
            c_prime_hat: f64::NAN,
            grid: String::new(),
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad constants line `{line}`")))?;
            let parse = |v: &str| -> Result<f64> {
                v.parse().map_err(|_| Error::Parse(format!("bad value `{v}` for {key}")))
            };
            match key {
                "seed" => {
                    c.seed =
                        value.parse().map_err(|_| Error::Parse(format!("bad seed `{value}`")))?
                }
                "grid" => c.grid = value.to_string(),
                "c_hat" => c.c_hat = parse(value)?,
                "c1_hat" => c.c1_hat = parse(value)?,
                "c2_hat" => c.c2_hat = parse(value)?,
                "c_prime_hat" => c.c_prime_hat = parse(value)?,
                _ => return Err(Error::Parse(format!("unknown constants key `{key}`"))),
            }
        }
        if c.c_hat.is_nan() || c.c1_hat.is_nan() || c.c2_hat.is_nan() || c.c_prime_hat.is_nan()
        {
            return Err(Error::Parse("constants file is missing keys".into()));
        }
        Ok(c)
    }
}

/// Measures every pinned constant from its sweep. Deterministic per seed.
pub fn estimate_constants(seed: u64) -> Result<Constants> {
    let c_hat = halving_cost_ratio_sup(60).max(1.0);
    let exhaustive = level_ratio_exhaustive(4, 3)?;
    let random = level_ratio_random(5, 3, 100_000, seed)?;
    let c1_hat = exhaustive.c1.max(random.c1);
    let c2_hat = exhaustive.c2.max(random.c2);

    // Probe the shipped depth-bounded policies on a small planted instance
    // and record the worst observed advantage-to-ceiling ratio.
    let mut mrng = stream(seed, StreamLabel::HaarMatrix, 0);
    let u = OrthogonalMatrix::haar(64, &mut mrng)?;
    let inst = RorrelationInstance::new(u, 2)?;
    let mut worst = 0.0f64;
    for policy in [Policy::RandomProbe { depth: 16 }, Policy::GreedyProbe { depth: 16 }] {
        let row = run_distinguisher(policy, &inst, HardDistribution::DEFAULT_EPSILON, 4000, seed, 1.0)?;
        let raw = advantage_bound_raw(64, 2, row.depth as u64, 1.0);
        worst = worst.max(row.advantage / raw);
    }
    Ok(Constants {
        seed,
        c_hat,
        c1_hat,
        c2_hat,
        c_prime_hat: worst.max(1.0),
        grid: "halving:k<=60;trees:n<=4,d<=3+random:n=5,d=3,s=1e5;probe:n=64,k=2,d=16".into(),
    })
}

/// How one experiment is set up; parsed from flat key=value text.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub matrix: MatrixSource,
    pub samples: usize,
    pub depths: Vec<usize>,
    pub master_seed: u64,
    pub epsilon: f64,
    pub out_dir: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Hadamard,
    Haar { seed: u64 },
    File(String),
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<ExperimentConfig> {
        let mut n = None;
        let mut k = None;
        let mut matrix = None;
        let mut samples = None;
        let mut depths = vec![1, 4, 16];
        let mut master_seed = 0u64;
        let mut epsilon = HardDistribution::DEFAULT_EPSILON;
        let mut out_dir = String::from(".");
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad config line `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Parse(format!("bad {what} `{value}`"));
            match key {
                "n" => n = Some(value.parse().map_err(|_| bad("n"))?),
                "k" => k = Some(value.parse().map_err(|_| bad("k"))?),
                "matrix" => {
                    matrix = Some(if value == "hadamard" {
                        MatrixSource::Hadamard
                    } else if let Some(seed) = value.strip_prefix("haar:") {
                        MatrixSource::Haar { seed: seed.parse().map_err(|_| bad("haar seed"))? }
                    } else if let Some(path) = value.strip_prefix("file:") {
                        MatrixSource::File(path.to_string())
                    } else {
                        return Err(bad("matrix source"));
                    });
                }
                "samples" => samples = Some(value.parse().map_err(|_| bad("samples"))?),
                "depths" => {
                    depths = value
                        .split(',')
                        .map(|t| t.trim().parse().map_err(|_| bad("depths")))
                        .collect::<Result<Vec<usize>>>()?;
                }
                "master_seed" => master_seed = value.parse().map_err(|_| bad("master_seed"))?,
                "epsilon" => epsilon = value.parse().map_err(|_| bad("epsilon"))?,
                "out_dir" => out_dir = value.to_string(),
                _ => return Err(Error::Parse(format!("unknown config key `{key}`"))),
            }
        }
        let config = ExperimentConfig {
            n: n.ok_or_else(|| Error::Parse("config is missing n".into()))?,
            k: k.ok_or_else(|| Error::Parse("config is missing k".into()))?,
            matrix: matrix.ok_or_else(|| Error::Parse("config is missing matrix".into()))?,
            samples: samples.ok_or_else(|| Error::Parse("config is missing samples".into()))?,
            depths,
            master_seed,
            epsilon,
            out_dir,
        };
        if !config.n.is_power_of_two() {
            return Err(Error::BadDimension(config.n));
        }
        if config.k == 0 || config.samples < 1000 {
            return Err(Error::InfeasibleParams(format!(
                "need k >= 1 and samples >= 1000; got k={}, samples={}",
                config.k, config.samples
            )));
        }
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        let matrix = match &self.matrix {
            MatrixSource::Hadamard => "hadamard".to_string(),
            MatrixSource::Haar { seed } => format!("haar:{seed}"),
            MatrixSource::File(path) => format!("file:{path}"),
        };
        let depths: Vec<String> = self.depths.iter().map(|d| d.to_string()).collect();
        format!(
            "n={}\nk={}\nmatrix={}\nsamples={}\ndepths={}\nmaster_seed={}\nepsilon={}\nout_dir={}\n",
            self.n,
            self.k,
            matrix,
            self.samples,
            depths.join(","),
            self.master_seed,
            self.epsilon,
            self.out_dir
        )
    }

    pub fn load_matrix(&self) -> Result<OrthogonalMatrix> {
        match &self.matrix {
            MatrixSource::Hadamard => OrthogonalMatrix::hadamard(self.n),
            MatrixSource::Haar { seed } => {
                let mut rng = stream(*seed, StreamLabel::HaarMatrix, 0);
                OrthogonalMatrix::haar(self.n, &mut rng)
            }
            MatrixSource::File(path) => {
                let file = std::fs::File::open(path)?;
                let mut reader = std::io::BufReader::new(file);
                let u = crate::rorrelation::read_matrix_binary(&mut reader)?;
                if u.n() != self.n {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix file is {}x{} but config says n={}",
                        u.n(),
                        u.n(),
                        self.n
                    )));
                }
                Ok(u)
            }
        }
    }
}
