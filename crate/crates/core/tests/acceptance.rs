//! Acceptance suite: one test per shipped guarantee, each printing an
//! `ACCEPT` line with the measured values (visible with `--nocapture`).
//!
//! The memory-discipline criterion (9) lives in its own test binary,
//! `memory_discipline.rs`: allocation counters are process-global, so that
//! audit needs a process in which nothing else runs concurrently.

use kdforest::bench::{
    self, exactness_check, generate_dataset, generate_queries, BenchSpec, Distribution, Scenario,
};
use kdforest::forest::{forest_size_plan, ForestConfig, ForestKnnMode, IntervalForest};
use kdforest::knn::{knn_bruteforce, KnnMode, KnnQuery};
use kdforest::tree::{estimate_rebuilds, KdTree, SplitPolicy, TreeConfig};

/// Independent oracle for the rebuild trigger: simulate the counter law
/// directly. The first threshold crossing establishes the baseline
/// snapshot; every later crossing is a rebuild that reinserts `live` nodes.
fn simulate_rebuild_law(n: usize, b: f64) -> (u64, u64, u64) {
    let mut prev = 0usize;
    let mut count = 0u64;
    let mut work = 0u64;
    let mut max = 0u64;
    for live in 1..=n {
        if live as f64 / prev.max(1) as f64 >= b {
            if prev == 0 {
                prev = live;
            } else {
                count += 1;
                work += live as u64;
                max = max.max(live as u64);
                prev = live;
            }
        }
    }
    (count, work, max)
}

#[test]
fn criterion_01_exactness_oracle_equivalence() {
    for seed in 1..=10u64 {
        for policy in [SplitPolicy::NodeSplit, SplitPolicy::GlobalMedian] {
            for dims in [2usize, 3, 8] {
                for k in [1usize, 5, 30] {
                    let check =
                        exactness_check(seed, 1000, dims, k, 100, policy, KnnMode::Exact, 2.0);
                    assert!(check.pass, "{} failed:\n{}", check.name, check.detail);
                }
            }
        }
    }
    println!(
        "ACCEPT criterion 1: exact kNN == brute force (seeds 1..10, n=1000, D in {{2,3,8}}, \
         k in {{1,5,30}}, 100 queries, both policies, zero tolerance)"
    );
}

#[test]
fn criterion_02_paper_arithmetic() {
    assert_eq!(estimate_rebuilds(64_000), 12);
    assert_eq!(forest_size_plan(64_000), (13, 4924));
    assert_eq!(forest_size_plan(1), (1, 1));
    println!(
        "ACCEPT criterion 2: estimate_rebuilds(64000)=12, plan(64000)=(13,4924), plan(1)=(1,1)"
    );
}

#[test]
fn criterion_03_rebuild_count_law() {
    // Doubling law, hand-checked: baseline at 2 live nodes, rebuilds at
    // 4, 8, ..., 4096.
    let sim2 = simulate_rebuild_law(4096, 2.0);
    assert_eq!(sim2.0, 11, "doubling-law oracle must give 11 rebuilds");
    // Tripling law, hand-checked: baseline at 3, rebuilds at 9..2187.
    let sim3 = simulate_rebuild_law(4096, 3.0);
    assert_eq!(sim3.0, 6, "tripling-law oracle must give 6 rebuilds");

    for (b, sim) in [(2.0, sim2), (3.0, sim3)] {
        let data = generate_dataset(3, 4096, 2, Distribution::Uniform);
        let mut tree = KdTree::new(TreeConfig::new(2, 4096, 8).with_threshold(b)).unwrap();
        for i in 0..4096 {
            tree.add(&data[i * 2..(i + 1) * 2]).unwrap();
        }
        assert_eq!(tree.rebuild_count(), sim.0, "rebuild count for b={b}");
        assert_eq!(tree.rebuild_work_total(), sim.1, "rebuild work for b={b}");
        assert_eq!(tree.rebuild_work_max(), sim.2, "max rebuild work for b={b}");
    }
    println!(
        "ACCEPT criterion 3: n=4096 instrumented rebuilds match the simulation oracle \
         (b=2: {} rebuilds, b=3: {} rebuilds)",
        sim2.0, sim3.0
    );
}

#[test]
fn criterion_04_balance_law() {
    for n in [7usize, 100, 4096] {
        let data = generate_dataset(4, n, 3, Distribution::Uniform);
        let mut tree =
            KdTree::new(TreeConfig::new(3, n, 8).with_auto_rebuild(false)).unwrap();
        for i in 0..n {
            tree.add(&data[i * 3..(i + 1) * 3]).unwrap();
        }
        tree.rebuild().unwrap();
        let bound = ((n + 1) as f64).log2().ceil() as usize;
        assert!(
            tree.depth() <= bound,
            "n={n}: depth {} exceeds ceil(log2(n+1)) = {bound}",
            tree.depth()
        );
    }
    // The same bound holds right after an automatic rebuild: loading exactly
    // 4096 points under b=2 ends on a rebuild.
    let data = generate_dataset(4, 4096, 3, Distribution::Uniform);
    let mut tree = KdTree::new(TreeConfig::new(3, 4096, 8).with_threshold(2.0)).unwrap();
    for i in 0..4096 {
        tree.add(&data[i * 3..(i + 1) * 3]).unwrap();
    }
    assert_eq!(tree.nodes_at_last_rebuild(), 4096);
    assert!(tree.depth() <= 13);
    println!("ACCEPT criterion 4: post-rebuild depth <= ceil(log2(n+1)) for n in {{7,100,4096}}");
}

#[test]
fn criterion_05_balanced_vs_unbalanced_visits() {
    let dims = 3;
    let k = 30;
    let queries_per_n = 100;
    for n in [8_000usize, 16_000, 32_000, 64_000] {
        let data = generate_dataset(5, n, dims, Distribution::Drift);
        // Queries from the same drifted distribution, spread over its whole
        // range by striding a full-size draw.
        let qdata = generate_queries(5, n, dims, Distribution::Drift);
        let stride = n / queries_per_n;

        let mut visits = [0u64; 2];
        for (arm, rebuild) in [true, false].into_iter().enumerate() {
            let mut tree = KdTree::new(
                TreeConfig::new(dims, n, k)
                    .with_threshold(2.0)
                    .with_auto_rebuild(rebuild),
            )
            .unwrap();
            for i in 0..n {
                tree.add(&data[i * dims..(i + 1) * dims]).unwrap();
            }
            for qi in 0..queries_per_n {
                let base = qi * stride * dims;
                let q = &qdata[base..base + dims];
                tree.knn(&KnnQuery::exact(q, k)).unwrap();
                visits[arm] += tree.last_visit_count();
            }
        }
        let (with_rebuilds, without) = (visits[0], visits[1]);
        assert!(
            with_rebuilds < without,
            "n={n}: rebuilds-on visits {with_rebuilds} not below rebuilds-off {without}"
        );
        println!(
            "ACCEPT criterion 5 (n={n}): mean visits rebuilds-on {} < rebuilds-off {}",
            with_rebuilds / queries_per_n as u64,
            without / queries_per_n as u64
        );
    }
}

#[test]
fn criterion_06_build_time_growth_is_superlinear() {
    let mut spec = BenchSpec::new(Scenario::Build, (1..=12).map(|i| i * 1000).collect());
    spec.policy = SplitPolicy::GlobalMedian;
    spec.threshold = 3.0;
    spec.dims = 3;
    spec.repetitions = 3;
    spec.seed = 42;
    let records = bench::run_build(&spec).unwrap();
    let mean = |n: usize| {
        let walls: Vec<u64> =
            records.iter().filter(|r| r.n == n).map(|r| r.wall_nanos).collect();
        walls.iter().sum::<u64>() / walls.len() as u64
    };
    let (lo, hi) = (mean(1000), mean(12_000));
    assert!(
        hi > 12 * lo,
        "build time not superlinear: mean({}) = {hi} ns <= 12 x mean(1000) = {}",
        12_000,
        12 * lo
    );
    println!(
        "ACCEPT criterion 6: mean build wall 12000 nodes = {hi} ns > 12 x {lo} ns \
         (ratio {:.1})",
        hi as f64 / lo as f64
    );
}

#[test]
fn criterion_07_forest_amortization() {
    let mut spec = BenchSpec::new(Scenario::Forest, vec![4096]);
    spec.threshold = 2.0;
    spec.dims = 3;
    spec.repetitions = 1;
    spec.seed = 42;
    let (_, stats) = bench::run_forest(&spec).unwrap();
    let s = stats[0];
    assert!(
        s.forest_max_work <= s.plan_capacity as u64,
        "a forest rebuild touched {} nodes, above per-tree capacity {}",
        s.forest_max_work,
        s.plan_capacity
    );
    assert!(
        s.single_max_work >= 4096 / 2,
        "single-tree final rebuild touched {} nodes, below n/2",
        s.single_max_work
    );
    assert!(
        s.forest_work < s.single_work,
        "forest rebuild work {} not below single-tree {}",
        s.forest_work,
        s.single_work
    );
    println!(
        "ACCEPT criterion 7: forest work {} < single-tree work {}; max per rebuild {} <= {}; \
         single max {} >= n/2",
        s.forest_work, s.single_work, s.forest_max_work, s.plan_capacity, s.single_max_work
    );
}

#[test]
fn criterion_08_forest_exactness_and_adversarial_case() {
    let dims = 3;
    for seed in 1..=5u64 {
        let n = 1000;
        let config = ForestConfig::for_expected_points(n, dims, 30);
        assert_eq!(config.tree_count, 8, "plan(1000) must shard into 8 trees");
        let mut forest = IntervalForest::new(config).unwrap();
        let data = generate_dataset(seed, n, dims, Distribution::Uniform);
        for i in 0..n {
            forest.add(&data[i * dims..(i + 1) * dims]).unwrap();
        }
        let queries = generate_queries(seed, 50, dims, Distribution::Uniform);
        for qi in 0..50 {
            let q = &queries[qi * dims..(qi + 1) * dims];
            let got: Vec<u64> = forest
                .knn(&KnnQuery::exact(q, 5), ForestKnnMode::ExactForest)
                .unwrap()
                .iter()
                .map(|h| h.seq)
                .collect();
            let want: Vec<u64> =
                knn_bruteforce(dims, &data, q, 5).iter().map(|h| h.seq).collect();
            assert_eq!(got, want, "seed {seed} query {qi}");
        }
    }

    // Adversarial shard split: the query sits inside the first shard's wide
    // interval, but the true nearest lives in the second shard.
    let mut forest = IntervalForest::new(ForestConfig::with_plan(2, 4, 2, 8)).unwrap();
    for p in [[0.0, 0.0], [100.0, 0.0], [0.0, 2.0], [100.0, 2.0], [50.0, 1.0], [51.0, 1.0]] {
        forest.add(&p).unwrap();
    }
    let q = [50.0, 0.9];
    let single = forest.knn(&KnnQuery::exact(&q, 1), ForestKnnMode::SingleTree).unwrap().to_vec();
    let exact = forest.knn(&KnnQuery::exact(&q, 1), ForestKnnMode::ExactForest).unwrap().to_vec();
    assert!(single[0].distance > 50.0, "single-tree mode should return a far point");
    assert_eq!(exact[0].seq, 4, "exact-forest mode finds the cross-shard nearest");
    assert!((exact[0].distance - 0.1).abs() < 1e-12);
    println!(
        "ACCEPT criterion 8: exact-forest == brute force (seeds 1..5, 8 trees, 50 queries); \
         adversarial instance: single-tree d={:.1} vs exact-forest d={:.1}",
        single[0].distance, exact[0].distance
    );
}

#[test]
fn criterion_10_determinism() {
    let mut build_spec = BenchSpec::new(Scenario::Build, vec![500, 1000]);
    build_spec.repetitions = 2;
    let mut knn_spec = BenchSpec::new(Scenario::Knn, vec![500]);
    knn_spec.repetitions = 5;
    let mut forest_spec = BenchSpec::new(Scenario::Forest, vec![256]);
    forest_spec.repetitions = 2;

    let csv_of = |records: &[bench::BenchRecord]| {
        let mut out = Vec::new();
        bench::write_csv(&mut out, records).unwrap();
        bench::strip_wall_column(&String::from_utf8(out).unwrap())
    };

    assert_eq!(
        csv_of(&bench::run_build(&build_spec).unwrap()),
        csv_of(&bench::run_build(&build_spec).unwrap())
    );
    assert_eq!(
        csv_of(&bench::run_knn(&knn_spec).unwrap()),
        csv_of(&bench::run_knn(&knn_spec).unwrap())
    );
    assert_eq!(
        csv_of(&bench::run_forest(&forest_spec).unwrap().0),
        csv_of(&bench::run_forest(&forest_spec).unwrap().0)
    );

    let mut verify_spec = BenchSpec::new(Scenario::Verify, vec![200]);
    verify_spec.repetitions = 1;
    let (report_a, records_a) = bench::run_verify(&verify_spec).unwrap();
    let (report_b, records_b) = bench::run_verify(&verify_spec).unwrap();
    assert!(report_a.all_pass() && report_b.all_pass());
    assert_eq!(csv_of(&records_a), csv_of(&records_b));
    println!(
        "ACCEPT criterion 10: build/knn/forest/verify CSVs byte-identical outside wall_nanos"
    );
}

#[test]
fn criterion_11_candidate_probe_bound() {
    let mut forest = IntervalForest::new(ForestConfig::with_plan(16, 100, 2, 8)).unwrap();
    let data = generate_dataset(11, 1600, 2, Distribution::Uniform);
    for i in 0..1600 {
        forest.add(&data[i * 2..(i + 1) * 2]).unwrap();
    }
    assert_eq!(forest.tree_count(), 16);
    let bound = (16f64).log2().floor() as u32 + 1;
    let queries = generate_queries(11, 1000, 2, Distribution::Uniform);
    let mut worst = 0u32;
    for qi in 0..1000 {
        let q = &queries[qi * 2..(qi + 1) * 2];
        let (_, probes) = forest.candidate_tree_probed(q).unwrap();
        assert!(probes <= bound, "query {qi}: {probes} probes > bound {bound}");
        worst = worst.max(probes);
    }
    println!(
        "ACCEPT criterion 11: candidate search on a 16-tree forest used <= {worst} probes \
         across 1000 queries (bound {bound})"
    );
}
