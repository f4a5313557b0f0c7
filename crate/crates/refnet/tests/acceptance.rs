//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the PASS/FAIL lines always reach stdout; exits non-zero if any
//! criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

mod common;

use std::{
    collections::{BTreeMap, BTreeSet},
    fmt::Write as _,
    fs,
    path::Path,
    time::{Duration, Instant},
};

use common::{refnet, write, Mix};
use refnet::{ingest::read_edge_records, ingest::EdgeFormat, parallel};
use refnet_core::{
    analytics::feature_columns,
    build_network, correlate,
    descriptors::{betweenness_centrality, degree_assortativity, global_clustering, local_clustering},
    partition, Cell, ColumnType, CorrelationMethod, CurvatureConfig, CurvatureKind, CurvatureKinds, FilterConfig,
    Frame, Graph, Symmetrization, TableName,
};
use support::*;

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

/// The 200-graph Erdős-Rényi suite: n cycles through 10..=200, p through
/// {0.02, 0.1, 0.3}.
fn er_suite() -> Vec<Graph> {
    let ps = [0.02, 0.1, 0.3];
    (0..200u64)
        .map(|s| {
            let n = 10 + (s as usize * 37) % 191;
            erdos_renyi(n, ps[s as usize % 3], &mut rng(1000 + s))
        })
        .collect()
}

fn frc_oracle(suite: &[Graph]) -> Outcome {
    let pool = parallel::pool(None).unwrap();
    let t = Instant::now();
    let mut edges = 0;
    let mut mismatches = 0;
    for g in suite {
        let report = parallel::curvature_report(&pool, g, CurvatureKinds::FRC, &CurvatureConfig::default()).unwrap();
        let adj = adjacency_matrix(g);
        for e in &report.edges {
            let expect = 4.0 - brute_degree(&adj, e.i) as f64 - brute_degree(&adj, e.j) as f64
                + 3.0 * brute_triangles(&adj, e.i, e.j) as f64;
            edges += 1;
            if e.frc != Some(expect) {
                mismatches += 1;
            }
        }
    }
    let el = t.elapsed();
    outcome(
        mismatches == 0 && el < Duration::from_secs(30),
        format!("FRC vs adjacency-matrix oracle, 200 ER graphs, {edges} edges, {mismatches} mismatches ({}; limit 30 s)", secs(el)),
    )
}

fn orc_oracle_suite() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut edges = 0;
    for s in 0..100u64 {
        let mut r = rng(5000 + s);
        let n = 4 + (s as usize) % 27;
        let g = erdos_renyi(n, 3.0 / (n - 1) as f64, &mut r);
        let dist = floyd_warshall(&g);
        let report = refnet_core::curvature_all_edges(&g, CurvatureKinds::ORC, &CurvatureConfig::default()).unwrap();
        for e in &report.edges {
            let want = orc_oracle(&g, &dist, e.i, e.j, 0.0);
            worst = worst.max((e.orc.unwrap() - want).abs());
            edges += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        worst <= 1e-9 && el < Duration::from_secs(120),
        format!("exact ORC vs dual-vertex enumeration, 100 graphs (n <= 30), {edges} edges, max error {worst:.1e} ({}; limit 2 min)", secs(el)),
    )
}

fn orc_bounds(suite: &[Graph]) -> Outcome {
    let pool = parallel::pool(None).unwrap();
    let t = Instant::now();
    let (mut lo, mut hi, mut edges) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for g in suite {
        let r = parallel::curvature_report(&pool, g, CurvatureKinds::ORC, &CurvatureConfig::default()).unwrap();
        for v in r.values(CurvatureKind::Orc) {
            lo = lo.min(v);
            hi = hi.max(v);
            edges += 1;
        }
    }
    let mut kn_err: f64 = 0.0;
    for n in 3..=8 {
        let g = complete(n);
        let r = refnet_core::curvature_all_edges(&g, CurvatureKinds::ORC, &CurvatureConfig::default()).unwrap();
        let want = (n - 2) as f64 / (n - 1) as f64;
        for v in r.values(CurvatureKind::Orc) {
            kn_err = kn_err.max((v - want).abs());
        }
    }
    outcome(
        lo >= -2.0 && hi <= 1.0 && kn_err <= 1e-12,
        format!(
            "ORC range [{lo:.4}, {hi:.4}] over {edges} edges of the ER suite; K3..K8 max error {kn_err:.1e} ({})",
            secs(t.elapsed())
        ),
    )
}

fn small_fixtures() -> Outcome {
    let both = |g: &Graph, i: usize, j: usize| {
        let r = refnet_core::curvature_all_edges(g, CurvatureKinds::BOTH, &CurvatureConfig::default()).unwrap();
        let e = r.get(i, j).unwrap();
        (e.frc.unwrap(), e.orc.unwrap())
    };
    let cases = [
        ("K3", both(&complete(3), 0, 1), (3.0, 0.5)),
        ("K2", both(&complete(2), 0, 1), (2.0, 0.0)),
        ("dumbbell bridge", both(&dumbbell(), 0, 1), (-2.0, -2.0 / 3.0)),
    ];
    let mut worst: f64 = 0.0;
    let mut text = Vec::new();
    for (name, got, want) in cases {
        worst = worst.max((got.0 - want.0).abs()).max((got.1 - want.1).abs());
        text.push(format!("{name} ({}, {:.6})", got.0, got.1));
    }
    outcome(worst <= 1e-12, format!("{}; max error {worst:.1e}", text.join(", ")))
}

fn construction_rules() -> Outcome {
    let mut r = Mix(77);
    let mut csv = String::from("npi_a,npi_b,shared_patients,hsa,year\n");
    let mut rows = Vec::new();
    while rows.len() < 1000 {
        let a = format!("P{:02}", r.below(25));
        let b = format!("P{:02}", r.below(25));
        if a == b {
            continue;
        }
        let hsa = format!("h{}", r.below(4));
        let year = 2015 + r.below(3) as i32;
        let w = r.below(20);
        writeln!(csv, "{a},{b},{w},{hsa},{year}").unwrap();
        rows.push((a, b, w, hsa, year));
    }
    let (records, stats) = read_edge_records(csv.as_bytes(), EdgeFormat::Csv, Path::new("synthetic.csv")).unwrap();
    let keys: BTreeSet<(String, i32)> = rows.iter().map(|r| (r.3.clone(), r.4)).collect();
    let buckets = partition(records);

    let mut mismatched_networks = 0;
    let mut retained = 0;
    for sym in [Symmetrization::Sum, Symmetrization::Max] {
        // (hsa, year, lo, hi) -> (count lo->hi, count hi->lo)
        let mut dict: BTreeMap<(String, i32, String, String), (u64, u64)> = BTreeMap::new();
        for (a, b, w, hsa, year) in &rows {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let e = dict.entry((hsa.clone(), *year, lo.clone(), hi.clone())).or_default();
            if a == lo {
                e.0 += w;
            } else {
                e.1 += w;
            }
        }
        let config = FilterConfig {
            symmetrization: sym,
            ..FilterConfig::default()
        };
        for (key, bucket) in &buckets {
            let g = build_network(bucket, &config).unwrap();
            let got: BTreeSet<(String, String, u64)> = g
                .edges()
                .iter()
                .zip(g.weights())
                .map(|(&(i, j), &w)| (g.node_ids()[i].to_string(), g.node_ids()[j].to_string(), w))
                .collect();
            let want: BTreeSet<(String, String, u64)> = dict
                .iter()
                .filter(|((h, y, _, _), _)| *h == key.hsa && *y == key.year)
                .map(|((_, _, lo, hi), &(ab, ba))| {
                    let w = match sym {
                        Symmetrization::Sum => ab + ba,
                        Symmetrization::Max => ab.max(ba),
                    };
                    (lo.clone(), hi.clone(), w)
                })
                .filter(|&(_, _, w)| w >= 11)
                .collect();
            retained += want.len();
            if got != want {
                mismatched_networks += 1;
            }
        }
    }
    outcome(
        mismatched_networks == 0 && buckets.len() == keys.len() && stats.accepted == 1000,
        format!(
            "1000 records, sum and max: {retained} retained edges, {mismatched_networks} networks differ from the dictionary; {} buckets for {} keys",
            buckets.len(),
            keys.len()
        ),
    )
}

fn descriptors() -> Outcome {
    let mut worst: f64 = 0.0;
    for s in 0..60u64 {
        let mut r = rng(9000 + s);
        let n = 5 + (s as usize) % 21;
        let g = erdos_renyi(n, 0.15 + 0.5 * (s % 4) as f64 / 4.0, &mut r);
        let adj = adjacency_matrix(&g);
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        worst = worst.max(opt(global_clustering(&g), brute_transitivity(&adj)));
        worst = worst.max(opt(degree_assortativity(&g), brute_assortativity(&g, &adj)));
        for v in 0..n {
            worst = worst.max((local_clustering(&g, v).unwrap() - brute_local_clustering(&adj, v)).abs());
        }
        for (a, b) in betweenness_centrality(&g).iter().zip(brute_betweenness(&g)) {
            worst = worst.max((a - b).abs());
        }
    }
    let p3 = degree_assortativity(&Graph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap());
    let k4e = global_clustering(&Graph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap());
    outcome(
        worst <= 1e-9 && p3 == Some(-1.0) && k4e.is_some_and(|t| (t - 0.75).abs() <= 1e-12),
        format!("60 random graphs, max error {worst:.1e}; P3 assortativity {p3:?}; K4 minus an edge transitivity {k4e:?}"),
    )
}

fn planted_correlation() -> Outcome {
    let frame_of = |pairs: &[(f64, f64)]| {
        let mut f = Frame::new(vec![("x".into(), ColumnType::Numeric), ("y".into(), ColumnType::Numeric)]).unwrap();
        for &(x, y) in pairs {
            f.push_row(vec![Cell::Num(x), Cell::Num(y)]).unwrap();
        }
        f
    };
    let t = Instant::now();
    let planted = planted_pairs(500, 0.8, 7);
    let r = &correlate(&frame_of(&planted), "x", "y", CorrelationMethod::Pearson, &[], 10_000, 1).unwrap()[0];
    let line: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 * 0.37 - 4.0, 2.5 * (i as f64 * 0.37 - 4.0) + 1.0)).collect();
    let perfect = correlate(&frame_of(&line), "x", "y", CorrelationMethod::Pearson, &[], 0, 0).unwrap()[0].coefficient;
    let p = r.p_value.unwrap();
    outcome(
        (r.coefficient - 0.8).abs() <= 0.05 && p < 0.01 && perfect == 1.0,
        format!(
            "n=500, r=0.8: estimate {:.4}, p {p} at 10000 permutations; perfect line gives {perfect} ({})",
            r.coefficient,
            secs(t.elapsed())
        ),
    )
}

fn scalability() -> Outcome {
    let g = gnm(10_000, 50_000, &mut rng(2024));
    let pool = parallel::pool(None).unwrap();
    let t = Instant::now();
    let frc = parallel::curvature_report(&pool, &g, CurvatureKinds::FRC, &CurvatureConfig::default()).unwrap();
    let t_frc = t.elapsed();
    let t = Instant::now();
    let orc = parallel::curvature_report(&pool, &g, CurvatureKinds::ORC, &CurvatureConfig::default()).unwrap();
    let t_orc = t.elapsed();
    let ratio = t_frc.as_secs_f64() / t_orc.as_secs_f64();
    let complete = frc.edges.len() == 50_000 && orc.values(CurvatureKind::Orc).count() == 50_000;
    outcome(
        complete && t_frc < Duration::from_secs(5) && t_orc < Duration::from_secs(600) && ratio < 0.05,
        format!(
            "10000 nodes, 50000 edges, {} worker(s): FRC {}, exact ORC {}, ratio {:.2}%",
            pool.current_num_threads(),
            secs(t_frc),
            secs(t_orc),
            100.0 * ratio
        ),
    )
}

/// Edge list with many small networks plus one large enough to span
/// several curvature blocks and betweenness chunks.
fn determinism_input(dir: &Path) -> std::path::PathBuf {
    let mut text = common::random_edge_list(40, 3);
    let mut r = Mix(17);
    for i in 0..160 {
        for j in i + 1..160 {
            if r.unit() < 0.06 {
                writeln!(text, "B{i:03},B{j:03},{},big,2017", 11 + r.below(30)).unwrap();
            }
        }
    }
    let path = dir.join("edges.csv");
    write(&path, &text);
    path
}

fn pipeline_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let edges = determinism_input(tmp.path());
    let run = |name: &str, workers: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let root = tmp.path().join(name);
        let out = root.join("export");
        let (e, d, o) = (edges.to_str().unwrap(), root.to_str().unwrap(), out.to_str().unwrap());
        for args in [
            vec!["build", e, "--out", d],
            vec!["curvature", d, "--workers", workers],
            vec!["features", d, "--workers", workers],
            vec!["export", d, "--out", o, "--emit-interactions", "--workers", workers],
        ] {
            let r = refnet(&args);
            if r.code != 0 {
                return Err(format!("{args:?} exited {}: {}", r.code, r.stderr));
            }
        }
        Ok(["features.csv", "export/features.csv", "export/refnet.sqlite", "export/curvature.csv"]
            .iter()
            .map(|f| (f.to_string(), fs::read(root.join(f)).unwrap()))
            .collect())
    };
    let runs = (run("w1_a", "1"), run("w1_b", "1"), run("w8", "8"));
    match runs {
        (Ok(a), Ok(b), Ok(c)) => {
            let differing: Vec<&str> = a
                .iter()
                .zip(&b)
                .zip(&c)
                .filter(|((x, y), z)| x.1 != y.1 || x.1 != z.1)
                .map(|((x, _), _)| x.0.as_str())
                .collect();
            let sizes: Vec<String> = a.iter().map(|(f, b)| format!("{f} {} B", b.len())).collect();
            outcome(
                differing.is_empty(),
                format!("two runs with 1 worker and one with 8: differing files {differing:?}; {}", sizes.join(", ")),
            )
        }
        (a, b, c) => outcome(false, format!("pipeline failed: {:?}", [a.err(), b.err(), c.err()])),
    }
}

fn sql_schema() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let edges = common::fixture_inputs(tmp.path());
    let root = tmp.path().join("data");
    common::run_pipeline(&[edges], &root, 1);
    let out = tmp.path().join("export");
    let r = refnet(&["export", root.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    if r.code != 0 {
        return outcome(false, format!("export exited {}: {}", r.code, r.stderr));
    }
    let conn = rusqlite::Connection::open(out.join("refnet.sqlite")).unwrap();
    let names: BTreeSet<String> = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table'")
        .unwrap()
        .query_map([], |r| r.get(0))
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    let mut want: BTreeSet<String> = TableName::ALL.iter().map(|t| t.as_str().to_string()).collect();
    want.insert(TableName::FEATURES.to_string());
    want.insert(TableName::INTERACTIONS.to_string());
    let cols: BTreeSet<String> = conn
        .prepare("SELECT name FROM pragma_table_info('referral_network_features')")
        .unwrap()
        .query_map([], |r| r.get(0))
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    let required = [
        "density",
        "global_clustering",
        "mean_local_clustering",
        "degree_assortativity",
        "frc_mean",
        "frc_median",
        "frc_std",
        "orc_mean",
        "orc_median",
        "orc_std",
    ];
    let missing: Vec<&str> = required.iter().copied().filter(|c| !cols.contains(*c)).collect();
    let declared: BTreeSet<String> = feature_columns().into_iter().map(|c| c.0).collect();
    outcome(
        names == want && missing.is_empty() && declared == cols,
        format!("{} tables {:?}; missing feature columns {missing:?}", names.len(), names),
    )
}

fn main() {
    let suite = er_suite();
    let checks: Vec<Check> = vec![
        ("FRC exact against oracle", Box::new(|| frc_oracle(&suite))),
        ("ORC against exact transport oracle", Box::new(orc_oracle_suite)),
        ("ORC bounds and complete graphs", Box::new(|| orc_bounds(&suite))),
        ("hand-derived fixtures", Box::new(small_fixtures)),
        ("construction rules", Box::new(construction_rules)),
        ("descriptor oracles", Box::new(descriptors)),
        ("planted correlation", Box::new(planted_correlation)),
        ("scalability", Box::new(scalability)),
        ("pipeline determinism", Box::new(pipeline_determinism)),
        ("SQL export schema", Box::new(sql_schema)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
