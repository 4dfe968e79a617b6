//! CSV and manifest writers.
//!
//! Every CSV starts with `#`-prefixed header lines carrying the seed and the
//! full configuration as single-line JSON, followed by a fixed column header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::SimConfig;
use crate::dynamics::MarketState;
use crate::error::{Error, Result};
use crate::metrics::{ClassHistogram, TrajectoryRecord};
use crate::model::{AssetClass, BetaPopulationSpec};
use crate::rescale::BetaSolution;
use crate::runner::{CellResult, HeteroComparison, SimulationResult};

pub const TRAJECTORY_HEADER: &str = "t,asset_id,class,s,xi,a,r";
pub const HISTOGRAM_HEADER: &str =
    "beta1,beta2,class,bin_lo,bin_hi,freq,mean_nonadoption,var_nonadoption";
pub const RESCALE_HEADER: &str = "beta,beta_prime,target_moment,matched_moment,residual,method,samples";
pub const COMPARISON_HEADER: &str =
    "class,hetero_mean_adoption,homo_mean_adoption,difference,hetero_mean_nonadoption,homo_mean_nonadoption";

pub fn summary_header() -> String {
    let mut h = String::from("t,r_tot,accepted_moves");
    for c in AssetClass::ALL {
        write!(h, ",{c}_a_mean,{c}_r_mean").unwrap();
    }
    h
}

fn provenance(kind: &str, seed: u64, config_json: &str) -> String {
    format!(
        "# cryptosel {} {kind}\n# seed={seed}\n# config={config_json}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn push_state_rows(out: &mut String, t: u64, state: &MarketState) {
    for a in state.assets() {
        writeln!(
            out,
            "{t},{},{},{},{},{},{}",
            a.id(),
            a.class(),
            a.security(),
            a.stability(),
            a.adoption,
            a.expected_return
        )
        .unwrap();
    }
}

/// Snapshot rows of the trajectory.
pub fn trajectory_csv(result: &SimulationResult) -> String {
    let cfg = &result.config;
    let mut out = provenance("trajectory", cfg.seed, &cfg.to_json());
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    let assets = result.initial.assets();
    for rec in &result.trajectory {
        if let Some(points) = &rec.snapshot {
            for (a, p) in assets.iter().zip(points) {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    rec.t,
                    a.id(),
                    a.class(),
                    a.security(),
                    a.stability(),
                    p.adoption,
                    p.expected_return
                )
                .unwrap();
            }
        }
    }
    out
}

/// Final (post-contraction) state, trajectory schema.
pub fn final_state_csv(result: &SimulationResult) -> String {
    let cfg = &result.config;
    let mut out = provenance("final_state", cfg.seed, &cfg.to_json());
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    push_state_rows(&mut out, result.final_state.t(), &result.final_state);
    out
}

pub fn summary_csv(result: &SimulationResult) -> String {
    let cfg = &result.config;
    let mut out = provenance("summary", cfg.seed, &cfg.to_json());
    out.push_str(&summary_header());
    out.push('\n');
    for rec in &result.trajectory {
        push_summary_row(&mut out, rec);
    }
    out
}

fn push_summary_row(out: &mut String, rec: &TrajectoryRecord) {
    write!(out, "{},{},{}", rec.t, rec.r_tot, rec.accepted_moves).unwrap();
    for c in &rec.centroids {
        write!(out, ",{},{}", c.mean_adoption, c.mean_return).unwrap();
    }
    out.push('\n');
}

fn push_histogram_rows(out: &mut String, beta1: f64, beta2: f64, hists: &[ClassHistogram]) {
    for h in hists {
        for (k, f) in h.freqs.iter().enumerate() {
            writeln!(
                out,
                "{beta1},{beta2},{},{},{},{},{},{}",
                h.class,
                h.edges[k],
                h.edges[k + 1],
                f,
                h.mean_nonadoption,
                h.var_nonadoption
            )
            .unwrap();
        }
    }
}

/// Attitude value reported for a population: the constant, or the realised mean.
fn reported_beta(spec: &BetaPopulationSpec, realised: f64) -> f64 {
    match *spec {
        BetaPopulationSpec::Constant { value } => value,
        _ => realised,
    }
}

pub fn histogram_csv(result: &SimulationResult) -> Result<String> {
    let cfg = &result.config;
    let means = result.mean_profile();
    let mut out = provenance("histogram", cfg.seed, &cfg.to_json());
    out.push_str(HISTOGRAM_HEADER);
    out.push('\n');
    push_histogram_rows(
        &mut out,
        reported_beta(&cfg.beta.security, means.beta_security),
        reported_beta(&cfg.beta.stability, means.beta_stability),
        &result.histograms()?,
    );
    Ok(out)
}

pub fn sweep_histogram_csv(base: &SimConfig, sweep_json: &str, cells: &[CellResult]) -> String {
    let mut out = provenance("sweep_histogram", base.seed, sweep_json);
    out.push_str(HISTOGRAM_HEADER);
    out.push('\n');
    for cell in cells {
        push_histogram_rows(&mut out, cell.beta1, cell.beta2, &cell.histograms);
    }
    out
}

pub fn rescale_csv(seed: u64, request_json: &str, rows: &[BetaSolution]) -> String {
    let mut out = provenance("rescale", seed, request_json);
    out.push_str(RESCALE_HEADER);
    out.push('\n');
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.beta,
            s.beta_prime,
            s.target_moment,
            s.matched_moment,
            s.residual,
            s.method.label(),
            s.method.samples()
        )
        .unwrap();
    }
    out
}

pub fn comparison_csv(cmp: &HeteroComparison) -> Result<String> {
    let cfg = &cmp.heterogeneous.config;
    let mut out = provenance("hetero_comparison", cfg.seed, &cfg.to_json());
    let m = cmp.realized_means;
    writeln!(
        out,
        "# realized_means: beta_return={} beta_security={} beta_stability={}",
        m.beta_return, m.beta_security, m.beta_stability
    )
    .unwrap();
    out.push_str(COMPARISON_HEADER);
    out.push('\n');
    let het = cmp.heterogeneous.class_mean_adoption();
    let hom = cmp.homogeneous.class_mean_adoption();
    let het_h = cmp.heterogeneous.histograms()?;
    let hom_h = cmp.homogeneous.histograms()?;
    for c in AssetClass::ALL {
        let i = c.index();
        writeln!(
            out,
            "{c},{},{},{},{},{}",
            het[i],
            hom[i],
            het[i] - hom[i],
            het_h[i].mean_nonadoption,
            hom_h[i].mean_nonadoption
        )
        .unwrap();
    }
    Ok(out)
}

pub fn manifest_json(result: &SimulationResult, files: &[&str]) -> String {
    let cfg = &result.config;
    let value = json!({
        "tool": "cryptosel",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": cfg,
        "steps_run": result.steps_run(),
        "t_star": result.t_star,
        "contraction": result.finalize,
        "mean_profile": result.mean_profile(),
        "initial_r_tot": result.initial.r_tot(),
        "equilibrium_r_tot": result.equilibrium.r_tot(),
        "final_r_tot": result.final_state.r_tot(),
        "files": files,
    });
    serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n"
}

/// Writes a set of files, removing whatever it already wrote if any write fails.
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
        Ok(OutputSet { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            if let Err(source) = fs::create_dir_all(parent) {
                self.rollback();
                return Err(Error::Io { path: parent.display().to_string(), source });
            }
        }
        match fs::write(&path, contents) {
            Ok(()) => {
                self.written.push(path.clone());
                Ok(path)
            }
            Err(source) => {
                self.rollback();
                Err(Error::Io { path: path.display().to_string(), source })
            }
        }
    }

    /// Remove every file written so far.
    pub fn rollback(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }
}

pub const RUN_FILES: [&str; 5] =
    ["trajectory.csv", "summary.csv", "final_state.csv", "histogram.csv", "manifest.json"];

/// Write the standard run outputs into `dir`.
pub fn write_run(result: &SimulationResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let histogram = histogram_csv(result)?;
    let mut set = OutputSet::create(dir)?;
    set.write("trajectory.csv", &trajectory_csv(result))?;
    set.write("summary.csv", &summary_csv(result))?;
    set.write("final_state.csv", &final_state_csv(result))?;
    set.write("histogram.csv", &histogram)?;
    set.write("manifest.json", &manifest_json(result, &RUN_FILES))?;
    Ok(set.files().to_vec())
}

pub fn write_comparison(cmp: &HeteroComparison, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = write_run(&cmp.heterogeneous, &dir.join("heterogeneous"))?;
    match write_run(&cmp.homogeneous, &dir.join("homogeneous")) {
        Ok(more) => files.extend(more),
        Err(e) => {
            files.iter().for_each(|p| {
                let _ = fs::remove_file(p);
            });
            return Err(e);
        }
    }
    let mut set = OutputSet::create(dir)?;
    match comparison_csv(cmp).and_then(|csv| set.write("comparison.csv", &csv)) {
        Ok(p) => files.push(p),
        Err(e) => {
            files.iter().for_each(|p| {
                let _ = fs::remove_file(p);
            });
            return Err(e);
        }
    }
    Ok(files)
}
