//! Result files: one CSV per table, two-column `.dat` files for plotting,
//! the full study as JSON, and a `manifest.json` describing the run.
//!
//! Nothing time- or host-dependent is written, so rerunning a study with
//! the same inputs and seed reproduces every file byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::studies::{CompareStudy, SrccStudy, TransferabilityStudy};
use crate::error::Result;
use crate::mtco::Variant;

pub const MANIFEST: &str = "manifest.json";
pub const STUDY_JSON: &str = "study.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub study: String,
    pub version: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub config: serde_json::Value,
    /// Files written next to the manifest.
    pub files: Vec<String>,
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Whitespace-separated `x y` lines under a `#` header.
pub fn write_dat(path: impl AsRef<Path>, header: (&str, &str), points: &[(f64, f64)]) -> Result<()> {
    let mut s = format!("# {} {}\n", header.0, header.1);
    for (x, y) in points {
        let _ = writeln!(s, "{x} {y}");
    }
    fs::write(path, s)?;
    Ok(())
}

fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.as_ref().join(MANIFEST))?)?)
}

pub fn load_study<T: DeserializeOwned>(dir: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.as_ref().join(STUDY_JSON))?)?)
}

/// A study that knows how to lay itself out on disk.
pub trait Study: Serialize {
    const NAME: &'static str;

    fn config(&self) -> serde_json::Value;

    /// Writes the tables and plot files into `dir`, returning their names.
    fn write_tables(&self, dir: &Path) -> Result<Vec<String>>;
}

/// Writes `study` into `dir` (created if missing) and returns its manifest.
pub fn save_study<S: Study>(study: &S, dir: impl AsRef<Path>, seed: u64, inputs: &[String]) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = study.write_tables(dir)?;
    write_json(dir.join(STUDY_JSON), study)?;
    files.push(STUDY_JSON.into());
    let manifest = Manifest {
        study: S::NAME.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        inputs: inputs.to_vec(),
        config: study.config(),
        files,
    };
    write_json(dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

impl Study for SrccStudy {
    const NAME: &'static str = "distance-srcc";

    fn config(&self) -> serde_json::Value {
        serde_json::json!({ "samples": self.samples })
    }

    fn write_tables(&self, dir: &Path) -> Result<Vec<String>> {
        write_csv(dir.join("srcc.csv"), &self.rows)?;
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.distance, r.srcc)).collect();
        write_dat(dir.join("srcc.dat"), ("distance", "srcc"), &pts)?;
        let mut files = vec!["srcc.csv".to_string(), "srcc.dat".to_string()];
        if let Some(fit) = &self.fit {
            write_csv(dir.join("fit.csv"), &[fit])?;
            files.push("fit.csv".into());
        }
        Ok(files)
    }
}

impl Study for TransferabilityStudy {
    const NAME: &'static str = "transferability";

    fn config(&self) -> serde_json::Value {
        serde_json::json!({ "samples": self.samples })
    }

    fn write_tables(&self, dir: &Path) -> Result<Vec<String>> {
        write_csv(dir.join("ranks.csv"), &self.rows)?;
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.distance, r.rank as f64)).collect();
        write_dat(dir.join("ranks.dat"), ("distance", "rank"), &pts)?;
        Ok(vec!["ranks.csv".into(), "ranks.dat".into()])
    }
}

#[derive(Serialize)]
struct RunRow {
    pair: usize,
    problem: usize,
    variant: Variant,
    rep: usize,
    seed: u64,
    best_value: f64,
    evals: u64,
    budget: u64,
    fired: usize,
}

#[derive(Serialize)]
struct RpsRow {
    pair: usize,
    variant: Variant,
    score: f64,
    degenerate_problems: usize,
}

#[derive(Serialize)]
struct SpeedupByPr {
    p_r: f64,
    variant: Variant,
    baseline_mean_evals: f64,
    mean_evals: f64,
    ratio: f64,
}

/// File-name form of a variant.
fn slug(v: Variant) -> String {
    v.to_string().replace(['=', ':'], "_")
}

impl Study for CompareStudy {
    const NAME: &'static str = "compare";

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).unwrap_or_default()
    }

    fn write_tables(&self, dir: &Path) -> Result<Vec<String>> {
        let mut files = Vec::new();
        let mut put = |name: &str| files.push(name.to_string());

        write_csv(dir.join("summary.csv"), &self.summary()?)?;
        put("summary.csv");
        write_csv(dir.join("errors.csv"), &self.errors()?)?;
        put("errors.csv");

        let runs: Vec<RunRow> = self
            .runs
            .iter()
            .map(|r| RunRow {
                pair: r.pair,
                problem: r.problem,
                variant: r.variant,
                rep: r.rep,
                seed: r.seed,
                best_value: r.best_value,
                evals: r.evals,
                budget: r.budget,
                fired: r.fired,
            })
            .collect();
        write_csv(dir.join("runs.csv"), &runs)?;
        put("runs.csv");

        let mut rps_rows = Vec::new();
        for (pair, t) in self.rps_by_pair()?.into_iter().enumerate() {
            for (&variant, &score) in self.variants().iter().zip(&t.scores) {
                rps_rows.push(RpsRow { pair, variant, score, degenerate_problems: t.degenerate.len() });
            }
        }
        write_csv(dir.join("rps.csv"), &rps_rows)?;
        put("rps.csv");

        if self.variants().contains(&Variant::Stss) {
            write_csv(dir.join("speedups.csv"), &self.speedups(Variant::Stss))?;
            put("speedups.csv");
            let mut by_pr = Vec::new();
            for &v in self.variants().iter().filter(|&&v| v != Variant::Stss) {
                let rows = self.speedup_by_pr(Variant::Stss, v);
                let name = format!("speedup_{}.dat", slug(v));
                write_dat(dir.join(&name), ("p_r", "ratio"), &rows.iter().map(|r| (r.0, r.3)).collect::<Vec<_>>())?;
                put(&name);
                by_pr.extend(rows.into_iter().map(|(p_r, b, e, ratio)| SpeedupByPr {
                    p_r,
                    variant: v,
                    baseline_mean_evals: b,
                    mean_evals: e,
                    ratio,
                }));
            }
            write_csv(dir.join("speedup_by_pr.csv"), &by_pr)?;
            put("speedup_by_pr.csv");
        }

        let transforms = self.transforms();
        if !transforms.is_empty() {
            write_csv(dir.join("transforms.csv"), &transforms)?;
            put("transforms.csv");
            let pts: Vec<(f64, f64)> = transforms.iter().map(|t| (t.d_before, t.d_after)).collect();
            write_dat(dir.join("transforms.dat"), ("d_before", "d_after"), &pts)?;
            put("transforms.dat");
        }

        for &v in self.variants() {
            let name = format!("convergence_{}.dat", slug(v));
            write_dat(dir.join(&name), ("budget_fraction", "mean_relative_error"), &self.convergence_curve(v, 100))?;
            put(&name);
        }
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::generate_pair;
    use crate::harness::studies::{study_distance_srcc, study_mtco_vs_stss, SrccRow};
    use crate::mtco::RunConfig;
    use crate::testutil::rand_inst;

    fn read_all(dir: &Path, m: &Manifest) -> Vec<(String, Vec<u8>)> {
        m.files.iter().map(|f| (f.clone(), fs::read(dir.join(f)).unwrap())).collect()
    }

    #[test]
    fn srcc_files_round_trip() {
        let base = rand_inst(6, 3, 1);
        let suite: Vec<_> = [0.2, 0.8].iter().map(|&p| generate_pair(&base, p, 4).unwrap()).collect();
        let study = study_distance_srcc(&suite, 200, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = save_study(&study, dir.path(), 3, &["a".into()]).unwrap();
        assert_eq!(load_manifest(dir.path()).unwrap(), m);
        assert_eq!(load_study::<SrccStudy>(dir.path()).unwrap(), study);
        let rows: Vec<SrccRow> = read_csv(dir.path().join("srcc.csv")).unwrap();
        assert_eq!(rows, study.rows);
        let dat = fs::read_to_string(dir.path().join("srcc.dat")).unwrap();
        assert_eq!(dat.lines().count(), 3);
    }

    #[test]
    fn compare_files_are_reproducible() {
        let base = rand_inst(6, 3, 2);
        let suite: Vec<_> = [0.1, 0.9].iter().map(|&p| generate_pair(&base, p, 1).unwrap()).collect();
        let run = RunConfig { max_evals: Some(600), ..RunConfig::default() };
        let save = |dir: &Path| {
            let st = study_mtco_vs_stss(&suite, &run, 2, 8).unwrap();
            save_study(&st, dir, 8, &[]).unwrap()
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (ma, mb) = (save(a.path()), save(b.path()));
        assert_eq!(ma, mb);
        assert!(ma.files.contains(&"convergence_mtco.dat".to_string()));
        assert_eq!(read_all(a.path(), &ma), read_all(b.path(), &mb));
        let back: CompareStudy = load_study(a.path()).unwrap();
        assert_eq!(back.runs.len(), 16);
    }

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug(Variant::MtcoDfixed(0.5)), "mtco-dfixed_0.5");
    }
}
