//! Fixture datasets and process helpers for the `refnet` integration tests.

#![allow(dead_code)]

use std::{
    fmt::Write as _,
    fs,
    path::{Path, PathBuf},
    process::{Command, Output},
};

use refnet::{
    dataset::{Dataset, DatasetPaths},
    parallel, pipeline,
};
use refnet_core::{CurvatureConfig, CurvatureKinds, FilterConfig};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Self {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

pub fn refnet_cmd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_refnet"));
    for (k, _) in std::env::vars_os() {
        if k.to_string_lossy().starts_with("REFNET_") {
            c.env_remove(k);
        }
    }
    c
}

pub fn refnet<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Run {
    refnet_cmd().args(args).output().expect("spawn refnet").into()
}

/// Three HSAs over two years:
///
/// - `k3`/2017: a triangle, plus one sub-threshold pair that is dropped
/// - `k3`/2018: a path on four nodes
/// - `dumbbell`/2017: two hubs joined by a bridge, two leaves each
/// - `dumbbell`/2018: K4
/// - `north/east`/2017: a five-leaf star
/// - `north/east`/2018: a 5-cycle, one side of which only clears the
///   threshold when both directions are summed
pub const FIXTURE_EDGES: &str = "\
npi_a,npi_b,shared_patients,hsa,year
A,B,12,k3,2017
B,C,15,k3,2017
C,A,20,k3,2017
A,D,5,k3,2017
P1,P2,11,k3,2018
P2,P3,11,k3,2018
P3,P4,30,k3,2018
H1,H2,40,dumbbell,2017
H1,L1,11,dumbbell,2017
H1,L2,11,dumbbell,2017
H2,L3,11,dumbbell,2017
H2,L4,11,dumbbell,2017
Q1,Q2,11,dumbbell,2018
Q1,Q3,11,dumbbell,2018
Q1,Q4,11,dumbbell,2018
Q2,Q3,11,dumbbell,2018
Q2,Q4,11,dumbbell,2018
Q3,Q4,11,dumbbell,2018
S0,S1,11,north/east,2017
S0,S2,11,north/east,2017
S0,S3,11,north/east,2017
S0,S4,11,north/east,2017
S0,S5,11,north/east,2017
C1,C2,6,north/east,2018
C2,C1,6,north/east,2018
C2,C3,11,north/east,2018
C3,C4,11,north/east,2018
C4,C5,11,north/east,2018
C5,C1,11,north/east,2018
";

pub const FIXTURE_REGIONS: &str = "hsa,state,region\nk3,MA,Northeast\ndumbbell,TX,South\n";

pub fn write(path: &Path, text: &str) {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).unwrap();
    }
    fs::write(path, text).unwrap();
}

/// Writes the fixture inputs under `dir` and returns the edge list path.
pub fn fixture_inputs(dir: &Path) -> PathBuf {
    let edges = dir.join("edges.csv");
    write(&edges, FIXTURE_EDGES);
    edges
}

/// Runs build, curvature and features through the library into `root`.
pub fn run_pipeline(edges: &[PathBuf], root: &Path, workers: usize) {
    pipeline::build(edges, None, &FilterConfig::default(), root).unwrap();
    let pool = parallel::pool(Some(workers)).unwrap();
    pipeline::curvature(root, CurvatureKinds::BOTH, &CurvatureConfig::default(), &pool).unwrap();
    pipeline::write_features(root, &pool).unwrap();
}

/// The six-network fixture with region labels, ready to load.
pub fn fixture_dataset(dir: &Path) -> PathBuf {
    let edges = fixture_inputs(dir);
    let root = dir.join("data");
    run_pipeline(&[edges], &root, 2);
    write(&root.join("regions.csv"), FIXTURE_REGIONS);
    root
}

pub fn load(root: &Path) -> Dataset {
    let pool = parallel::pool(Some(2)).unwrap();
    Dataset::load(root, &DatasetPaths::default(), true, &pool).unwrap()
}

/// Deterministic pseudo-random stream (splitmix64) so fixtures do not
/// depend on any RNG crate's value stability.
pub struct Mix(pub u64);

impl Mix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.unit().max(f64::MIN_POSITIVE);
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// `networks` small random networks, one per HSA, all in 2017. Edge
/// densities vary across HSAs so that curvature summaries spread out.
pub fn random_edge_list(networks: usize, seed: u64) -> String {
    let mut r = Mix(seed);
    let mut out = String::from("npi_a,npi_b,shared_patients,hsa,year\n");
    for h in 0..networks {
        let n = 6 + r.below(10) as usize;
        let p = 0.2 + 0.6 * r.unit();
        for i in 0..n {
            for j in i + 1..n {
                if r.unit() < p {
                    let w = 11 + r.below(40);
                    writeln!(out, "h{h:04}_{i},h{h:04}_{j},{w},h{h:04},2017").unwrap();
                }
            }
        }
    }
    out
}

/// Writes `metadata/population_census.csv` under `root` with a column
/// `nonwhite_share` whose population correlation with the standardized
/// `frc_mean` feature is `r`.
pub fn plant_census(root: &Path, r: f64, seed: u64) {
    let features = refnet::table::read_frame_csv(
        &root.join("features.csv"),
        &refnet_core::analytics::feature_columns(),
    )
    .unwrap();
    let hsa = features.column_index("hsa").unwrap();
    let x: Vec<f64> = features
        .numeric_column("frc_mean")
        .unwrap()
        .into_iter()
        .map(|v| v.unwrap())
        .collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut g = Mix(seed);
    let mut csv = String::from("hsa,year,nonwhite_share\n");
    for (row, v) in features.rows().iter().zip(&x) {
        let z = (v - mean) / sd;
        let y = r * z + (1.0 - r * r).sqrt() * g.normal();
        writeln!(csv, "{},2017,{y}", row[hsa].label().unwrap()).unwrap();
    }
    let dir = root.join("metadata");
    write(&dir.join("population_census.csv"), &csv);
    write(&dir.join("population_census.schema.json"), r#"{"nonwhite_share": "numeric"}"#);
}
