//! On-disk run reports: frontier and bounds CSVs, one JSON file per frontier
//! solution, the configuration echo and a run manifest.
//!
//! Everything except `manifest.json` is a pure function of instance, config
//! and seed, so reruns produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::driver::SolverReport;
use crate::error::{Error, Result};
use crate::model::{Deployment, Scenario, Station};
use crate::oracle::OracleResult;
use crate::pareto::ParetoArchive;

pub const FRONTIER_CSV: &str = "frontier.csv";
pub const BOUNDS_CSV: &str = "bounds.csv";
pub const TRACE_CSV: &str = "trace.csv";
pub const CONFIG_JSON: &str = "config.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const SOLUTIONS_DIR: &str = "solutions";

pub const FRONTIER_HEADER: [&str; 4] = ["cost", "uncovered", "covered_fraction", "solution_file"];
pub const BOUNDS_HEADER: [&str; 5] = ["eps_index", "epsilon", "lower_bound", "upper_bound", "bound_kind"];
pub const TRACE_HEADER: [&str; 6] = ["eps_index", "epsilon", "iteration", "lower_bound", "upper_bound", "subgradient_norm"];
pub const PLOT_HEADER: [&str; 3] = ["series", "cost", "covered_fraction"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackhaulPair {
    pub sc: u32,
    pub ban: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveragePair {
    pub subarea: usize,
    pub station: u32,
}

/// One deployment, addressed by site ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub cost: f64,
    pub uncovered: u32,
    pub open_sc: Vec<u32>,
    pub open_ban: Vec<u32>,
    pub backhaul: Vec<BackhaulPair>,
    pub coverage: Vec<CoveragePair>,
}

impl SolutionFile {
    pub fn from_deployment(dep: &Deployment, scn: &Scenario) -> Self {
        let obj = dep.objective(scn);
        let sc_id = |i: usize| scn.station_id(Station::Sc(i));
        let ban_id = |k: usize| scn.station_id(Station::Ban(k));
        SolutionFile {
            cost: obj.cost,
            uncovered: obj.uncovered,
            open_sc: dep.y.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| sc_id(i)).collect(),
            open_ban: dep.z.iter().enumerate().filter(|(_, &o)| o).map(|(k, _)| ban_id(k)).collect(),
            backhaul: dep
                .sc_to_ban
                .iter()
                .enumerate()
                .filter_map(|(i, k)| k.map(|k| BackhaulPair { sc: sc_id(i), ban: ban_id(k) }))
                .collect(),
            coverage: dep
                .coverage
                .iter()
                .map(|&(j, st)| CoveragePair { subarea: j, station: scn.station_id(st) })
                .collect(),
        }
    }

    /// Rebuild the deployment; unknown site ids are schema errors.
    pub fn to_deployment(&self, scn: &Scenario) -> Result<Deployment> {
        let station_of = |id: u32| -> Result<Station> {
            (0..scn.n_stations())
                .map(|s| scn.station(s))
                .find(|&st| scn.station_id(st) == id)
                .ok_or_else(|| Error::Schema(format!("solution names unknown site id {id}")))
        };
        let mut dep = Deployment::empty(scn);
        for &id in &self.open_sc {
            match station_of(id)? {
                Station::Sc(i) => dep.y[i] = true,
                Station::Ban(_) => return Err(Error::Schema(format!("open_sc lists BAN site {id}"))),
            }
        }
        for &id in &self.open_ban {
            match station_of(id)? {
                Station::Ban(k) => dep.z[k] = true,
                Station::Sc(_) => return Err(Error::Schema(format!("open_ban lists SCBS site {id}"))),
            }
        }
        for p in &self.backhaul {
            match (station_of(p.sc)?, station_of(p.ban)?) {
                (Station::Sc(i), Station::Ban(k)) => dep.sc_to_ban[i] = Some(k),
                _ => return Err(Error::Schema(format!("backhaul pair {} -> {} is not SCBS -> BAN", p.sc, p.ban))),
            }
        }
        for p in &self.coverage {
            dep.coverage.push((p.subarea, station_of(p.station)?));
        }
        dep.coverage.sort_unstable();
        Ok(dep)
    }
}

/// Replay information for one run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub algorithm: String,
    pub oracle: bool,
    pub seed: Option<u64>,
    pub instance_path: Option<String>,
    pub instance_sha256: String,
    pub subarea_count: usize,
    pub epsilon0: Option<f64>,
    pub delta_c: Option<f64>,
    pub delta_eps: Option<f64>,
    pub threads: usize,
    /// `"match"` or `"mismatch"` when the frontier was checked against the oracle.
    pub oracle_check: Option<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(algorithm: &str, instance_bytes: &[u8], subarea_count: usize) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: Vec::new(),
            algorithm: algorithm.to_string(),
            oracle: false,
            seed: None,
            instance_path: None,
            instance_sha256: sha256_hex(instance_bytes),
            subarea_count,
            epsilon0: None,
            delta_c: None,
            delta_eps: None,
            threads: 1,
            oracle_check: None,
            started_unix_ms: 0,
            finished_unix_ms: 0,
            wall_time_s: 0.0,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn covered_fraction(uncovered: u32, subarea_count: usize) -> f64 {
    if subarea_count == 0 {
        return 1.0;
    }
    1.0 - uncovered as f64 / subarea_count as f64
}

fn solution_name(n: usize) -> String {
    format!("{SOLUTIONS_DIR}/solution_{n:03}.json")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Schema(e.to_string()))
}

pub fn frontier_csv(frontier: &ParetoArchive, subarea_count: usize) -> Result<Vec<u8>> {
    csv_bytes(
        &FRONTIER_HEADER,
        frontier.entries().iter().enumerate().map(|(n, e)| {
            vec![
                e.objective.cost.to_string(),
                e.objective.uncovered.to_string(),
                format!("{:.6}", covered_fraction(e.objective.uncovered, subarea_count)),
                solution_name(n),
            ]
        }),
    )
}

pub fn bounds_csv(report: &SolverReport) -> Result<Vec<u8>> {
    csv_bytes(
        &BOUNDS_HEADER,
        report.epsilons.iter().map(|e| {
            vec![
                e.index.to_string(),
                e.epsilon.to_string(),
                e.lower_bound.map(|b| b.to_string()).unwrap_or_default(),
                e.upper_bound.to_string(),
                e.bound_kind.name().to_string(),
            ]
        }),
    )
}

pub fn trace_csv(report: &SolverReport) -> Result<Vec<u8>> {
    csv_bytes(
        &TRACE_HEADER,
        report.trace.iter().map(|t| {
            vec![
                t.eps_index.to_string(),
                t.epsilon.to_string(),
                t.iteration.to_string(),
                t.lower_bound.to_string(),
                t.upper_bound.to_string(),
                t.subgradient_norm.to_string(),
            ]
        }),
    )
}

fn write_frontier(dir: &Path, frontier: &ParetoArchive, scn: &Scenario) -> Result<()> {
    fs::create_dir_all(dir.join(SOLUTIONS_DIR)).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(FRONTIER_CSV), &frontier_csv(frontier, scn.subarea_count())?)?;
    for (n, e) in frontier.entries().iter().enumerate() {
        let sol = SolutionFile::from_deployment(&e.deployment, scn);
        write_file(&dir.join(solution_name(n)), &to_json_bytes(&sol))?;
    }
    Ok(())
}

/// Write a solver run into `dir` (created if missing).
pub fn write_report(dir: &Path, report: &SolverReport, scn: &Scenario, manifest: &RunManifest) -> Result<()> {
    write_frontier(dir, &report.frontier, scn)?;
    write_file(&dir.join(BOUNDS_CSV), &bounds_csv(report)?)?;
    write_file(&dir.join(TRACE_CSV), &trace_csv(report)?)?;
    write_file(&dir.join(CONFIG_JSON), &to_json_bytes(&report.config))?;
    write_manifest(dir, manifest)
}

/// Write the exact frontier into `dir`; the manifest is flagged `oracle`.
pub fn write_oracle_report(dir: &Path, result: &OracleResult, scn: &Scenario, manifest: &RunManifest) -> Result<()> {
    write_frontier(dir, &result.frontier, scn)?;
    let mut m = manifest.clone();
    m.oracle = true;
    write_manifest(dir, &m)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    write_file(&dir.join(MANIFEST_JSON), &to_json_bytes(manifest))
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_JSON);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FrontierRow {
    pub cost: f64,
    pub uncovered: u32,
    pub covered_fraction: f64,
    pub solution_file: String,
}

pub fn read_frontier(dir: &Path) -> Result<Vec<FrontierRow>> {
    let path = dir.join(FRONTIER_CSV);
    let mut r = csv::Reader::from_path(&path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(&path, std::io::Error::other(e.to_string())),
        _ => Error::Csv(e),
    })?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(FRONTIER_HEADER) {
        return Err(Error::Schema(format!("{} has header {:?}", path.display(), headers)));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Long-format `series,cost,covered_fraction` rows for every report.
///
/// Series are the manifests' algorithm names; when two reports share a name
/// each series becomes `algorithm:directory`.
pub fn plot_data(dirs: &[PathBuf]) -> Result<Vec<u8>> {
    let mut series = Vec::with_capacity(dirs.len());
    for d in dirs {
        series.push((read_manifest(d)?, read_frontier(d)?));
    }
    let label = |n: usize| {
        let name = if series[n].0.oracle { "oracle".to_string() } else { series[n].0.algorithm.clone() };
        let clash = (0..series.len()).any(|m| {
            m != n && {
                let other = if series[m].0.oracle { "oracle" } else { series[m].0.algorithm.as_str() };
                other == name
            }
        });
        if clash {
            let base = dirs[n].file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            format!("{name}:{base}")
        } else {
            name
        }
    };
    let mut rows = Vec::new();
    for (n, (_, frontier)) in series.iter().enumerate() {
        let l = label(n);
        for row in frontier {
            rows.push(vec![l.clone(), row.cost.to_string(), format!("{:.6}", row.covered_fraction)]);
        }
    }
    csv_bytes(&PLOT_HEADER, rows)
}

/// Write `bytes` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}
