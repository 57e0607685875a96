//! Benchmark and verification harness behind the `kdforest` binary.
//!
//! Wall-clock numbers are machine-specific, so every relationship the harness
//! is meant to demonstrate is also captured by deterministic counters: node
//! visits, rebuild counts, rebuild node work, candidate probes, pool peaks.
//! Those columns are byte-identical across runs with the same seed; only
//! `wall_nanos` varies.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forest::{forest_size_plan, ForestConfig, ForestKnnMode, IntervalForest};
use crate::knn::{knn_bruteforce, write_hits_csv, KnnMode, KnnQuery, NeighborHit};
use crate::tree::{KdTree, SplitPolicy, TreeConfig};

/// Benchmark scenario selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Build,
    Knn,
    Forest,
    Verify,
}

/// Input distribution for generated datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    /// I.i.d. uniform in [0, 1)^D.
    #[default]
    Uniform,
    /// Uniform noise on a mean that shifts 0.01 per insert; keeps every
    /// insert landing to the right of most of the tree, which unbalances it.
    Drift,
    /// Strictly decreasing coordinates, all negative: every point falls below
    /// every median the tree has seen, the degenerate case for global-median
    /// splits.
    Orthant,
}

impl Distribution {
    pub fn label(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Drift => "drift",
            Distribution::Orthant => "orthant",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(Distribution::Uniform),
            "drift" => Some(Distribution::Drift),
            "orthant" => Some(Distribution::Orthant),
            _ => None,
        }
    }
}

/// Query mode selector spanning tree and forest searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    PathDescent,
    SingleTree,
    ExactForest,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::PathDescent => "path-descent",
            Mode::SingleTree => "single-tree",
            Mode::ExactForest => "exact-forest",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Mode::Exact),
            "path-descent" => Some(Mode::PathDescent),
            "single-tree" => Some(Mode::SingleTree),
            "exact-forest" => Some(Mode::ExactForest),
            _ => None,
        }
    }

    pub fn as_knn_mode(self) -> Option<KnnMode> {
        match self {
            Mode::Exact => Some(KnnMode::Exact),
            Mode::PathDescent => Some(KnnMode::PathDescent),
            _ => None,
        }
    }

    pub fn as_forest_mode(self) -> Option<ForestKnnMode> {
        match self {
            Mode::SingleTree => Some(ForestKnnMode::SingleTree),
            Mode::ExactForest => Some(ForestKnnMode::ExactForest),
            _ => None,
        }
    }
}

impl SplitPolicy {
    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "global-median" => Some(SplitPolicy::GlobalMedian),
            "node-split" => Some(SplitPolicy::NodeSplit),
            _ => None,
        }
    }
}

/// Full description of one benchmark invocation.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub scenario: Scenario,
    pub sizes: Vec<usize>,
    pub dims: usize,
    pub k: usize,
    pub threshold: f64,
    pub policy: SplitPolicy,
    pub mode: Mode,
    pub rebuild_enabled: bool,
    pub distribution: Distribution,
    pub seed: u64,
    pub repetitions: usize,
    pub out: Option<PathBuf>,
}

impl BenchSpec {
    pub fn new(scenario: Scenario, sizes: Vec<usize>) -> Self {
        BenchSpec {
            scenario,
            sizes,
            dims: 3,
            k: 30,
            threshold: 2.0,
            policy: SplitPolicy::default(),
            mode: Mode::default(),
            rebuild_enabled: true,
            distribution: Distribution::default(),
            seed: 42,
            repetitions: 3,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("sizes must be non-empty"));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("sizes must be strictly ascending"));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1"));
        }
        if self.dims == 0 {
            return Err(Error::InvalidConfig("dimensions must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        Ok(())
    }
}

/// One measurement row; see [`CSV_HEADER`] for the column order.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scenario: String,
    pub n: usize,
    pub threshold: f64,
    pub policy: SplitPolicy,
    pub mode: Mode,
    pub rep: usize,
    pub wall_nanos: u64,
    pub node_visits: u64,
    pub rebuild_count: u64,
    pub rebuild_node_work: u64,
    pub peak_pool_used: usize,
}

pub const CSV_HEADER: &str =
    "scenario,n,threshold,policy,mode,rep,wall_nanos,node_visits,rebuild_count,rebuild_node_work,peak_pool_used";

/// Writes the header plus one row per record. Errors on an empty record list.
pub fn write_csv<W: Write>(w: &mut W, records: &[BenchRecord]) -> io::Result<()> {
    if records.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "no records to emit"));
    }
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.n,
            r.threshold,
            r.policy.label(),
            r.mode.label(),
            r.rep,
            r.wall_nanos,
            r.node_visits,
            r.rebuild_count,
            r.rebuild_node_work,
            r.peak_pool_used
        )?;
    }
    Ok(())
}

/// CSV emission to a file path.
pub fn emit_csv_path(path: &std::path::Path, records: &[BenchRecord]) -> io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_csv(&mut file, records)?;
    file.flush()
}

/// Parses a CSV produced by [`write_csv`] back into records.
pub fn parse_csv<R: BufRead>(reader: R) -> io::Result<Vec<BenchRecord>> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == CSV_HEADER => {}
        _ => return Err(bad("missing or unexpected header")),
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(bad("wrong field count"));
        }
        records.push(BenchRecord {
            scenario: fields[0].to_string(),
            n: fields[1].parse().map_err(|_| bad("n"))?,
            threshold: fields[2].parse().map_err(|_| bad("threshold"))?,
            policy: SplitPolicy::from_label(fields[3]).ok_or_else(|| bad("policy"))?,
            mode: Mode::from_label(fields[4]).ok_or_else(|| bad("mode"))?,
            rep: fields[5].parse().map_err(|_| bad("rep"))?,
            wall_nanos: fields[6].parse().map_err(|_| bad("wall_nanos"))?,
            node_visits: fields[7].parse().map_err(|_| bad("node_visits"))?,
            rebuild_count: fields[8].parse().map_err(|_| bad("rebuild_count"))?,
            rebuild_node_work: fields[9].parse().map_err(|_| bad("rebuild_node_work"))?,
            peak_pool_used: fields[10].parse().map_err(|_| bad("peak_pool_used"))?,
        });
    }
    Ok(records)
}

/// Drops the `wall_nanos` column so two runs can be compared byte-for-byte.
pub fn strip_wall_column(csv: &str) -> String {
    let mut out = String::with_capacity(csv.len());
    for line in csv.lines() {
        let mut first = true;
        for (i, field) in line.split(',').enumerate() {
            if i == 6 {
                continue;
            }
            if !first {
                out.push(',');
            }
            out.push_str(field);
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Deterministic dataset: `n` points of `dims` coordinates, flat layout.
/// Same (seed, n, dims, distribution) always yields identical bytes.
pub fn generate_dataset(seed: u64, n: usize, dims: usize, dist: Distribution) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0f64; n * dims];
    match dist {
        Distribution::Uniform => {
            for v in out.iter_mut() {
                *v = rng.gen::<f64>();
            }
        }
        Distribution::Drift => {
            for i in 0..n {
                let shift = i as f64 * 0.01;
                for d in 0..dims {
                    out[i * dims + d] = rng.gen::<f64>() + shift;
                }
            }
        }
        Distribution::Orthant => {
            for i in 0..n {
                for d in 0..dims {
                    out[i * dims + d] = -(i as f64 + 1.0 + rng.gen::<f64>() * 0.5);
                }
            }
        }
    }
    out
}

const QUERY_SEED_SALT: u64 = 0x5157455259;

/// Query points drawn from the same distribution as the data, on a seed
/// derived from the dataset seed.
pub fn generate_queries(seed: u64, n: usize, dims: usize, dist: Distribution) -> Vec<f64> {
    generate_dataset(seed ^ QUERY_SEED_SALT, n, dims, dist)
}

fn tree_config(spec: &BenchSpec, capacity: usize) -> TreeConfig {
    TreeConfig::new(spec.dims, capacity, spec.k.max(30))
        .with_policy(spec.policy)
        .with_threshold(spec.threshold)
        .with_auto_rebuild(spec.rebuild_enabled)
}

fn record(spec: &BenchSpec, scenario: &str, n: usize, rep: usize) -> BenchRecord {
    BenchRecord {
        scenario: scenario.to_string(),
        n,
        threshold: spec.threshold,
        policy: spec.policy,
        mode: spec.mode,
        rep,
        wall_nanos: 0,
        node_visits: 0,
        rebuild_count: 0,
        rebuild_node_work: 0,
        peak_pool_used: 0,
    }
}

/// Build-time growth: for each n and repetition, a fresh pool is filled with
/// n points (rebuilds per the spec) and the wall time and rebuild counters
/// are recorded.
pub fn run_build(spec: &BenchSpec) -> Result<Vec<BenchRecord>> {
    spec.validate()?;
    let mut records = Vec::new();
    for &n in &spec.sizes {
        let data = generate_dataset(spec.seed, n, spec.dims, spec.distribution);
        for rep in 0..spec.repetitions {
            let mut tree = KdTree::new(tree_config(spec, n))?;
            let start = Instant::now();
            let mut failed = false;
            for i in 0..n {
                if tree.add(&data[i * spec.dims..(i + 1) * spec.dims]).is_err() {
                    failed = true;
                    break;
                }
            }
            let wall = start.elapsed().as_nanos() as u64;
            let mut row = record(spec, if failed { "build-failed" } else { "build" }, n, rep);
            row.wall_nanos = wall;
            row.rebuild_count = tree.rebuild_count();
            row.rebuild_node_work = tree.rebuild_work_total();
            row.peak_pool_used = tree.peak_pool_used();
            records.push(row);
        }
    }
    Ok(records)
}

/// KNN cost: one tree per n, `repetitions` seeded queries against it, wall
/// time and node visits per query.
pub fn run_knn(spec: &BenchSpec) -> Result<Vec<BenchRecord>> {
    spec.validate()?;
    let knn_mode = spec
        .mode
        .as_knn_mode()
        .ok_or(Error::InvalidConfig("knn benchmark runs in exact or path-descent mode"))?;
    let mut records = Vec::new();
    for &n in &spec.sizes {
        let data = generate_dataset(spec.seed, n, spec.dims, spec.distribution);
        let queries = generate_queries(spec.seed, spec.repetitions, spec.dims, spec.distribution);
        let mut tree = KdTree::new(tree_config(spec, n))?;
        for i in 0..n {
            tree.add(&data[i * spec.dims..(i + 1) * spec.dims])?;
        }
        let k = spec.k.min(n);
        for rep in 0..spec.repetitions {
            let q = &queries[rep * spec.dims..(rep + 1) * spec.dims];
            let start = Instant::now();
            tree.knn(&KnnQuery::new(q, k, knn_mode))?;
            let wall = start.elapsed().as_nanos() as u64;
            let mut row = record(spec, "knn", n, rep);
            row.wall_nanos = wall;
            row.node_visits = tree.last_visit_count();
            row.rebuild_count = tree.rebuild_count();
            row.rebuild_node_work = tree.rebuild_work_total();
            row.peak_pool_used = tree.peak_pool_used();
            records.push(row);
        }
    }
    Ok(records)
}

/// Side-by-side rebuild accounting for the single-tree and forest layouts.
#[derive(Debug, Clone, Copy)]
pub struct ForestArmStats {
    pub n: usize,
    pub plan_trees: usize,
    pub plan_capacity: usize,
    pub single_rebuilds: u64,
    pub single_work: u64,
    pub single_max_work: u64,
    pub forest_rebuilds: u64,
    pub forest_work: u64,
    pub forest_max_work: u64,
    pub max_probes: u32,
}

/// Drives the same dataset through one tree and through a forest sized by
/// the sharding plan, recording build and query rows for both, plus the
/// rebuild-work comparison.
pub fn run_forest(spec: &BenchSpec) -> Result<(Vec<BenchRecord>, Vec<ForestArmStats>)> {
    spec.validate()?;
    let mut records = Vec::new();
    let mut stats = Vec::new();
    for &n in &spec.sizes {
        let data = generate_dataset(spec.seed, n, spec.dims, spec.distribution);
        let queries = generate_queries(spec.seed, spec.repetitions, spec.dims, spec.distribution);
        let k = spec.k.min(n);

        let mut tree = KdTree::new(tree_config(spec, n))?;
        let start = Instant::now();
        for i in 0..n {
            tree.add(&data[i * spec.dims..(i + 1) * spec.dims])?;
        }
        let single_wall = start.elapsed().as_nanos() as u64;
        let mut row = record(spec, "forest-single", n, 0);
        row.wall_nanos = single_wall;
        row.rebuild_count = tree.rebuild_count();
        row.rebuild_node_work = tree.rebuild_work_total();
        row.peak_pool_used = tree.peak_pool_used();
        records.push(row);

        let (plan_trees, plan_capacity) = forest_size_plan(n);
        let config = ForestConfig::with_plan(plan_trees, plan_capacity, spec.dims, spec.k.max(30))
            .with_policy(spec.policy)
            .with_threshold(spec.threshold)
            .with_auto_rebuild(spec.rebuild_enabled);
        let mut forest = IntervalForest::new(config)?;
        let start = Instant::now();
        for i in 0..n {
            forest.add(&data[i * spec.dims..(i + 1) * spec.dims])?;
        }
        let forest_wall = start.elapsed().as_nanos() as u64;
        let mut row = record(spec, "forest-forest", n, 0);
        row.wall_nanos = forest_wall;
        row.rebuild_count = forest.total_rebuild_count();
        row.rebuild_node_work = forest.total_rebuild_work();
        row.peak_pool_used = forest.peak_pool_used_total();
        records.push(row);

        let mut max_probes = 0u32;
        for rep in 0..spec.repetitions {
            let q = &queries[rep * spec.dims..(rep + 1) * spec.dims];
            for mode in [ForestKnnMode::SingleTree, ForestKnnMode::ExactForest] {
                let start = Instant::now();
                forest.knn(&KnnQuery::exact(q, k), mode)?;
                let wall = start.elapsed().as_nanos() as u64;
                max_probes = max_probes.max(forest.last_probe_count());
                let mut row = record(spec, "forest-knn", n, rep);
                row.mode = match mode {
                    ForestKnnMode::SingleTree => Mode::SingleTree,
                    ForestKnnMode::ExactForest => Mode::ExactForest,
                };
                row.wall_nanos = wall;
                row.node_visits = forest.last_visit_count();
                row.rebuild_count = forest.total_rebuild_count();
                row.rebuild_node_work = forest.total_rebuild_work();
                row.peak_pool_used = forest.peak_pool_used_total();
                records.push(row);
            }
        }

        stats.push(ForestArmStats {
            n,
            plan_trees,
            plan_capacity,
            single_rebuilds: tree.rebuild_count(),
            single_work: tree.rebuild_work_total(),
            single_max_work: tree.rebuild_work_max(),
            forest_rebuilds: forest.total_rebuild_count(),
            forest_work: forest.total_rebuild_work(),
            forest_max_work: forest.max_rebuild_work(),
            max_probes,
        });
    }
    Ok((records, stats))
}

/// Outcome of one verification check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Collected verification results.
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_table<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for c in &self.checks {
            writeln!(w, "{} {} — {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        writeln!(
            w,
            "{}: {}/{} checks passed",
            if self.all_pass() { "OK" } else { "FAILED" },
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        )
    }
}

fn format_hits(hits: &[NeighborHit], query_id: u64) -> String {
    let mut buf = Vec::new();
    write_hits_csv(&mut buf, query_id, hits).expect("vec write");
    String::from_utf8(buf).expect("ascii")
}

/// Oracle-equivalence run for one (policy, mode, dims, k) cell: every query's
/// hit sequence must equal the brute-force oracle's exactly. Exposed so a
/// test can run the path-descent mode through the same matrix and watch it
/// get caught.
#[allow(clippy::too_many_arguments)]
pub fn exactness_check(
    seed: u64,
    n: usize,
    dims: usize,
    k: usize,
    queries: usize,
    policy: SplitPolicy,
    mode: KnnMode,
    threshold: f64,
) -> CheckResult {
    let name = format!(
        "knn-exactness seed={seed} n={n} D={dims} k={k} policy={} mode={}",
        policy.label(),
        mode.label()
    );
    let run = || -> Result<Option<String>> {
        let data = generate_dataset(seed, n, dims, Distribution::Uniform);
        let qs = generate_queries(seed, queries, dims, Distribution::Uniform);
        let mut tree = KdTree::new(
            TreeConfig::new(dims, n, k.max(30)).with_policy(policy).with_threshold(threshold),
        )?;
        for i in 0..n {
            tree.add(&data[i * dims..(i + 1) * dims])?;
        }
        for qi in 0..queries {
            let q = &qs[qi * dims..(qi + 1) * dims];
            let got: Vec<NeighborHit> = tree.knn(&KnnQuery::new(q, k, mode))?.to_vec();
            let want = knn_bruteforce(dims, &data, q, k);
            let got_seqs: Vec<u64> = got.iter().map(|h| h.seq).collect();
            let want_seqs: Vec<u64> = want.iter().map(|h| h.seq).collect();
            if got_seqs != want_seqs {
                return Ok(Some(format!(
                    "mismatch seed={seed} query#{qi} q={q:?}\nexpected:\n{}actual:\n{}",
                    format_hits(&want, qi as u64),
                    format_hits(&got, qi as u64)
                )));
            }
        }
        Ok(None)
    };
    match run() {
        Ok(None) => CheckResult { name, pass: true, detail: format!("{queries} queries match oracle"), },
        Ok(Some(witness)) => CheckResult { name, pass: false, detail: witness },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

fn forest_exactness_check(seed: u64, n: usize, dims: usize, k: usize, queries: usize) -> CheckResult {
    let name = format!("forest-exactness seed={seed} n={n} D={dims} k={k}");
    let run = || -> Result<Option<String>> {
        let data = generate_dataset(seed, n, dims, Distribution::Uniform);
        let qs = generate_queries(seed, queries, dims, Distribution::Uniform);
        let mut forest = IntervalForest::new(ForestConfig::for_expected_points(n, dims, k.max(30)))?;
        for i in 0..n {
            forest.add(&data[i * dims..(i + 1) * dims])?;
        }
        for qi in 0..queries {
            let q = &qs[qi * dims..(qi + 1) * dims];
            let got: Vec<u64> = forest
                .knn(&KnnQuery::exact(q, k), ForestKnnMode::ExactForest)?
                .iter()
                .map(|h| h.seq)
                .collect();
            let want: Vec<u64> = knn_bruteforce(dims, &data, q, k).iter().map(|h| h.seq).collect();
            if got != want {
                return Ok(Some(format!(
                    "forest mismatch seed={seed} query#{qi} q={q:?} expected {want:?} got {got:?}"
                )));
            }
        }
        Ok(None)
    };
    match run() {
        Ok(None) => CheckResult { name, pass: true, detail: format!("{queries} queries match oracle"), },
        Ok(Some(witness)) => CheckResult { name, pass: false, detail: witness },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

fn ann_miss_witness_check() -> CheckResult {
    let name = "ann-miss-witness".to_string();
    let run = || -> Result<(bool, String)> {
        let mut tree = KdTree::new(TreeConfig::new(2, 4, 2).with_auto_rebuild(false))?;
        tree.add(&[0.0, 10.0])?;
        tree.add(&[-0.1, 0.0])?;
        let q = [0.05, 0.0];
        let pd = tree.knn(&KnnQuery::path_descent(&q, 1))?.to_vec();
        let exact = tree.knn(&KnnQuery::exact(&q, 1))?.to_vec();
        let demonstrated = pd[0].seq == 0 && exact[0].seq == 1;
        Ok((
            demonstrated,
            format!(
                "path-descent returned seq {} (d={:.3}), exact returned seq {} (d={:.3})",
                pd[0].seq, pd[0].distance, exact[0].seq, exact[0].distance
            ),
        ))
    };
    match run() {
        Ok((pass, detail)) => CheckResult { name, pass, detail },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

fn radius_consistency_check(seed: u64, n: usize, dims: usize) -> CheckResult {
    let name = format!("radius-consistency seed={seed} n={n} D={dims}");
    let run = || -> Result<Option<String>> {
        let data = generate_dataset(seed, n, dims, Distribution::Uniform);
        let qs = generate_queries(seed, 20, dims, Distribution::Uniform);
        let mut tree = KdTree::new(TreeConfig::new(dims, n, n))?;
        for i in 0..n {
            tree.add(&data[i * dims..(i + 1) * dims])?;
        }
        for qi in 0..20 {
            let q = &qs[qi * dims..(qi + 1) * dims];
            let radius = 0.2 + 0.02 * qi as f64;
            let in_radius: Vec<NeighborHit> = tree.knn_radius(q, radius)?.to_vec();
            let k = in_radius.len().max(1);
            let knn: Vec<NeighborHit> = tree.knn(&KnnQuery::exact(q, k))?.to_vec();
            // Every radius hit must appear in the kNN prefix, same order.
            if knn[..in_radius.len()] != in_radius[..] {
                return Ok(Some(format!("radius/knn disagree at query#{qi} r={radius}")));
            }
        }
        Ok(None)
    };
    match run() {
        Ok(None) => CheckResult { name, pass: true, detail: "radius hits = kNN prefix on 20 queries".into() },
        Ok(Some(w)) => CheckResult { name, pass: false, detail: w },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

fn allocation_check(seed: u64) -> CheckResult {
    let name = "allocation-freedom".to_string();
    let run = || -> Result<(bool, String)> {
        // Detect whether the counting allocator is registered in this binary.
        // black_box keeps the optimizer from eliding the probe allocation.
        let probe_before = crate::audit::allocation_count();
        let probe = std::hint::black_box(vec![0u8; std::hint::black_box(32)]);
        drop(std::hint::black_box(probe));
        let hook_active = crate::audit::allocation_count() > probe_before;

        let dims = 3;
        let n = 2000;
        let data = generate_dataset(seed, n, dims, Distribution::Uniform);
        let qs = generate_queries(seed, 50, dims, Distribution::Uniform);
        let mut tree = KdTree::new(TreeConfig::new(dims, n, 30))?;
        let mut forest = IntervalForest::new(ForestConfig::for_expected_points(n, dims, 30))?;

        let before = crate::audit::allocation_count();
        for i in 0..n {
            tree.add(&data[i * dims..(i + 1) * dims])?;
            forest.add(&data[i * dims..(i + 1) * dims])?;
        }
        for qi in 0..50 {
            let q = &qs[qi * dims..(qi + 1) * dims];
            tree.knn(&KnnQuery::exact(q, 30))?;
            forest.knn(&KnnQuery::exact(q, 30), ForestKnnMode::ExactForest)?;
        }
        for i in 0..25 {
            tree.delete(&data[i * dims..(i + 1) * dims])?;
        }
        tree.rebuild()?;
        let delta = crate::audit::allocation_count() - before;
        let pass = delta == 0;
        let detail = if hook_active {
            format!("{delta} allocations across build/search/delete/rebuild/forest ops")
        } else {
            "allocator hook not registered in this binary; counters inert".to_string()
        };
        Ok((pass, detail))
    };
    match run() {
        Ok((pass, detail)) => CheckResult { name, pass, detail },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

fn invariant_sweep_check(seed: u64) -> CheckResult {
    let name = "invariant-sweep".to_string();
    let run = || -> Result<(bool, String)> {
        let dims = 3;
        let n = 1500;
        let data = generate_dataset(seed, n, dims, Distribution::Uniform);
        let mut tree = KdTree::new(TreeConfig::new(dims, n, 30))?;
        for i in 0..n {
            tree.add(&data[i * dims..(i + 1) * dims])?;
        }
        for i in (0..n).step_by(7) {
            tree.delete(&data[i * dims..(i + 1) * dims])?;
        }
        let mut problems = Vec::new();
        if !tree.links_consistent() {
            problems.push("tree links inconsistent after deletes");
        }
        if tree.pool().in_use() + tree.pool().free_slots() != tree.pool().capacity() {
            problems.push("pool conservation violated");
        }
        let mut before: Vec<(u64, Vec<f64>)> = Vec::new();
        tree.for_each_inorder(|c, s| before.push((s, c.to_vec())));
        tree.rebuild()?;
        let mut after: Vec<(u64, Vec<f64>)> = Vec::new();
        tree.for_each_inorder(|c, s| after.push((s, c.to_vec())));
        before.sort_by_key(|(s, _)| *s);
        after.sort_by_key(|(s, _)| *s);
        if before != after {
            problems.push("rebuild altered the live point multiset");
        }
        if !tree.links_consistent() {
            problems.push("tree links inconsistent after rebuild");
        }

        let mut forest = IntervalForest::new(ForestConfig::for_expected_points(n, dims, 30))?;
        for i in 0..n {
            forest.add(&data[i * dims..(i + 1) * dims])?;
        }
        let key = forest.sort_key_dim();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..forest.tree_count() {
            let t = forest.tree(i).unwrap();
            if t.live_count() == 0 {
                continue;
            }
            let m = t.medians()[key];
            if m < prev {
                problems.push("forest medians not sorted");
                break;
            }
            prev = m;
        }
        let qs = generate_queries(seed, 200, dims, Distribution::Uniform);
        let bound = (forest.tree_count() as f64).log2().floor() as u32 + 1;
        for qi in 0..200 {
            let (_, probes) = forest.candidate_tree_probed(&qs[qi * dims..(qi + 1) * dims])?;
            if probes > bound {
                problems.push("candidate probe bound exceeded");
                break;
            }
        }
        let pass = problems.is_empty();
        let detail = if pass {
            "links, conservation, rebuild multiset, forest order, probe bound".to_string()
        } else {
            problems.join("; ")
        };
        Ok((pass, detail))
    };
    match run() {
        Ok((pass, detail)) => CheckResult { name, pass, detail },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

fn determinism_check(spec: &BenchSpec) -> CheckResult {
    let name = "determinism".to_string();
    let mut small = spec.clone();
    small.sizes = vec![*spec.sizes.first().unwrap_or(&500)];
    small.repetitions = 3;
    small.scenario = Scenario::Knn;
    small.mode = Mode::Exact;
    let run = || -> Result<bool> {
        let a = run_knn(&small)?;
        let b = run_knn(&small)?;
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&mut csv_a, &a).map_err(|_| Error::InvalidConfig("csv"))?;
        write_csv(&mut csv_b, &b).map_err(|_| Error::InvalidConfig("csv"))?;
        let a = strip_wall_column(&String::from_utf8(csv_a).expect("ascii"));
        let b = strip_wall_column(&String::from_utf8(csv_b).expect("ascii"));
        Ok(a == b)
    };
    match run() {
        Ok(true) => CheckResult {
            name,
            pass: true,
            detail: "two runs byte-identical outside wall_nanos".into(),
        },
        Ok(false) => CheckResult { name, pass: false, detail: "runs diverged".into() },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

/// Runs the verification matrix: oracle equivalence for trees and forests,
/// the approximate-search miss witness, radius/kNN consistency, the
/// allocation audit, invariant sweeps, and a determinism self-check.
pub fn run_verify(spec: &BenchSpec) -> Result<(VerifyReport, Vec<BenchRecord>)> {
    spec.validate()?;
    let n = *spec.sizes.last().expect("validated non-empty");
    let mut report = VerifyReport::default();
    let mut records = Vec::new();

    let mut cell = 0usize;
    for policy in [SplitPolicy::NodeSplit, SplitPolicy::GlobalMedian] {
        for dims in [2usize, 3, 8] {
            for k in [1usize, 5, 30] {
                let k = k.min(n);
                let check = exactness_check(
                    spec.seed,
                    n,
                    dims,
                    k,
                    100,
                    policy,
                    KnnMode::Exact,
                    spec.threshold,
                );
                let mut row = record(spec, "verify", n, cell);
                row.policy = policy;
                row.mode = Mode::Exact;
                row.node_visits = u64::from(check.pass);
                records.push(row);
                report.checks.push(check);
                cell += 1;
            }
        }
    }
    report.checks.push(forest_exactness_check(spec.seed, n, spec.dims, spec.k.min(n), 50));
    report.checks.push(ann_miss_witness_check());
    report.checks.push(radius_consistency_check(spec.seed, 400, spec.dims));
    report.checks.push(allocation_check(spec.seed));
    report.checks.push(invariant_sweep_check(spec.seed));
    report.checks.push(determinism_check(spec));

    Ok((report, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_generation_is_deterministic() {
        let a = generate_dataset(1, 3, 2, Distribution::Uniform);
        let b = generate_dataset(1, 3, 2, Distribution::Uniform);
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        let c = generate_dataset(2, 3, 2, Distribution::Uniform);
        assert_ne!(a, c);
    }

    #[test]
    fn orthant_data_degenerates_global_median_tree() {
        let n = 64;
        let data = generate_dataset(9, n, 2, Distribution::Orthant);
        // Strictly decreasing in every dimension, all negative.
        for i in 1..n {
            for d in 0..2 {
                assert!(data[i * 2 + d] < data[(i - 1) * 2 + d]);
                assert!(data[i * 2 + d] < 0.0);
            }
        }
        let mut tree = KdTree::new(
            TreeConfig::new(2, n, 8)
                .with_policy(SplitPolicy::GlobalMedian)
                .with_threshold(2.0),
        )
        .unwrap();
        for i in 0..n {
            tree.add(&data[i * 2..(i + 1) * 2]).unwrap();
        }
        assert!(tree.depth() >= n / 2, "depth {} < {}", tree.depth(), n / 2);
    }

    #[test]
    fn drift_data_unbalances_node_split_tree() {
        let n = 1000;
        let data = generate_dataset(5, n, 2, Distribution::Drift);
        let mut tree =
            KdTree::new(TreeConfig::new(2, n, 8).with_auto_rebuild(false)).unwrap();
        for i in 0..n {
            tree.add(&data[i * 2..(i + 1) * 2]).unwrap();
        }
        let balanced_depth = ((n + 1) as f64).log2().ceil() as usize;
        assert!(tree.depth() > balanced_depth, "depth {} not imbalanced", tree.depth());
    }

    #[test]
    fn csv_round_trip() {
        let spec = BenchSpec::new(Scenario::Build, vec![10]);
        let mut row = record(&spec, "build", 10, 0);
        row.wall_nanos = 12345;
        row.node_visits = 7;
        row.peak_pool_used = 10;
        let mut out = Vec::new();
        write_csv(&mut out, &[row.clone()]).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(CSV_HEADER));
        let parsed = parse_csv(io::Cursor::new(out)).unwrap();
        assert_eq!(parsed, vec![row]);
    }

    #[test]
    fn csv_rejects_empty_records() {
        let mut out = Vec::new();
        assert!(write_csv(&mut out, &[]).is_err());
    }

    #[test]
    fn strip_wall_removes_only_wall_column() {
        let line = format!("{CSV_HEADER}\nbuild,10,2,node-split,exact,0,999,1,2,3,4\n");
        let stripped = strip_wall_column(&line);
        assert!(stripped.contains("build,10,2,node-split,exact,0,1,2,3,4"));
        assert!(!stripped.contains("999"));
        assert!(stripped.starts_with("scenario,n,threshold,policy,mode,rep,node_visits"));
    }

    #[test]
    fn run_build_emits_rows_and_matches_rebuild_law() {
        let mut spec = BenchSpec::new(Scenario::Build, vec![16, 32]);
        spec.dims = 2;
        spec.repetitions = 2;
        let records = run_build(&spec).unwrap();
        assert_eq!(records.len(), 4);
        // Baseline snapshot at 2 live nodes, rebuilds at 4, 8, 16 (and 32).
        assert!(records.iter().all(|r| r.scenario == "build"));
        assert_eq!(records[0].rebuild_count, 3);
        assert_eq!(records[2].rebuild_count, 4);
        // Counter columns identical across reps.
        assert_eq!(records[0].rebuild_node_work, records[1].rebuild_node_work);
    }

    #[test]
    fn run_knn_small_sizes_return_full_result_sets() {
        let mut spec = BenchSpec::new(Scenario::Knn, vec![125]);
        spec.rebuild_enabled = false;
        spec.repetitions = 2;
        let records = run_knn(&spec).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.node_visits > 0 && r.rebuild_count == 0));

        // The same tree the runner builds answers with a full 30-hit set.
        let data = generate_dataset(spec.seed, 125, spec.dims, spec.distribution);
        let mut tree = KdTree::new(tree_config(&spec, 125)).unwrap();
        for i in 0..125 {
            tree.add(&data[i * spec.dims..(i + 1) * spec.dims]).unwrap();
        }
        let q = generate_queries(spec.seed, 1, spec.dims, spec.distribution);
        assert_eq!(tree.knn(&KnnQuery::exact(&q, 30)).unwrap().len(), 30);
    }

    #[test]
    fn run_knn_rejects_forest_modes() {
        let mut spec = BenchSpec::new(Scenario::Knn, vec![32]);
        spec.mode = Mode::ExactForest;
        assert!(run_knn(&spec).is_err());
    }

    #[test]
    fn run_forest_stats_are_consistent() {
        let mut spec = BenchSpec::new(Scenario::Forest, vec![256]);
        spec.dims = 2;
        spec.repetitions = 2;
        let (records, stats) = run_forest(&spec).unwrap();
        assert_eq!(stats.len(), 1);
        let s = &stats[0];
        assert_eq!((s.plan_trees, s.plan_capacity), forest_size_plan(256));
        assert!(s.forest_max_work <= s.plan_capacity as u64);
        assert!(records.iter().any(|r| r.scenario == "forest-single"));
        assert!(records.iter().any(|r| r.scenario == "forest-forest"));
        assert_eq!(records.iter().filter(|r| r.scenario == "forest-knn").count(), 4);
    }

    #[test]
    fn spec_validation_rejects_bad_inputs() {
        let spec = BenchSpec::new(Scenario::Build, vec![]);
        assert!(spec.validate().is_err());
        let spec = BenchSpec::new(Scenario::Build, vec![10, 10]);
        assert!(spec.validate().is_err());
        let mut spec = BenchSpec::new(Scenario::Build, vec![10]);
        spec.repetitions = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn verify_passes_on_default_matrix() {
        let mut spec = BenchSpec::new(Scenario::Verify, vec![300]);
        spec.repetitions = 1;
        let (report, records) = run_verify(&spec).unwrap();
        for check in &report.checks {
            assert!(check.pass, "{} failed: {}", check.name, check.detail);
        }
        assert_eq!(records.len(), 18); // 2 policies x 3 dims x 3 k
    }

    #[test]
    fn exactness_check_catches_path_descent() {
        let check = exactness_check(7, 400, 2, 5, 50, SplitPolicy::NodeSplit, KnnMode::PathDescent, 2.0);
        assert!(!check.pass, "path descent should miss neighbors on 400 points");
        assert!(check.detail.contains("mismatch"));
        assert!(check.detail.contains("expected"));
    }

    #[test]
    fn mode_and_distribution_labels_round_trip() {
        for mode in [Mode::Exact, Mode::PathDescent, Mode::SingleTree, Mode::ExactForest] {
            assert_eq!(Mode::from_label(mode.label()), Some(mode));
        }
        for dist in [Distribution::Uniform, Distribution::Drift, Distribution::Orthant] {
            assert_eq!(Distribution::from_label(dist.label()), Some(dist));
        }
        for policy in [SplitPolicy::NodeSplit, SplitPolicy::GlobalMedian] {
            assert_eq!(SplitPolicy::from_label(policy.label()), Some(policy));
        }
        assert_eq!(Mode::from_label("bogus"), None);
    }
}
