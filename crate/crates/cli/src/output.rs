//! Artifact emission: CSV tables, JSON reports, provenance hashing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use limitlyap::cycle::LimitCycle;
use limitlyap::decomp::{CriteriaReport, Verdict};
use limitlyap::lyapunov::{Construction, LyapunovReport};
use limitlyap::pipeline::PipelineOutcome;
use limitlyap::system::{PlanarSystem, RadialForm, RadialKind, Transform, Window};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Common, Format};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything that determines a run's output, hashed into the provenance block.
/// Input files enter by content, so the same data under another path hashes
/// the same; the output directory is left out for the same reason.
#[derive(Serialize, Debug)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<(String, String)>,
    pub window: Option<Window>,
    pub grid: usize,
    pub tol: f64,
    pub rmax: f64,
    pub n: usize,
    pub formats: Vec<Format>,
    pub options: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str, common: &Common) -> Self {
        let mut formats = common.format.clone();
        formats.sort();
        formats.dedup();
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            window: common.window,
            grid: common.grid,
            tol: common.tol,
            rmax: common.rmax,
            n: common.n,
            formats,
            options: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, role: &str, text: &str) {
        self.inputs.push((role.to_string(), sha256_hex(text.as_bytes())));
    }

    pub fn option(&mut self, key: &str, value: impl ToString) {
        self.options.insert(key.to_string(), value.to_string());
    }

    pub fn provenance(&self) -> Provenance {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: sha256_hex(&canonical),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

/// 17 significant digits; empty for NaN (a missing value).
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.16e}")
    }
}

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("csv is utf-8")
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Output directory plus the requested formats.
pub struct Artifacts {
    dir: Option<PathBuf>,
    formats: Vec<Format>,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(common: &Common) -> Result<Self, CliError> {
        if let Some(dir) = &common.out {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))
                .map_err(CliError::Io)?;
        }
        Ok(Self {
            dir: common.out.clone(),
            formats: common.format.clone(),
            written: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.dir.is_some() && self.formats.contains(&f)
    }

    /// Write `name` if `f` was requested.
    pub fn emit(&mut self, f: Format, name: &str, contents: impl FnOnce() -> String) -> Result<(), CliError> {
        if !self.wants(f) {
            return Ok(());
        }
        let path = self.dir.as_deref().unwrap_or(Path::new(".")).join(name);
        fs::write(&path, contents())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::Io)?;
        self.written.push(path);
        Ok(())
    }
}

/// Serialized name of a unit enum value, e.g. `pure-radial`.
pub fn tag<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SystemEcho {
    pub fx: String,
    pub fy: String,
}

impl From<&PlanarSystem> for SystemEcho {
    fn from(s: &PlanarSystem) -> Self {
        Self {
            fx: s.fx.to_string(),
            fy: s.fy.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TransformEcho {
    pub u: String,
    pub v: String,
    pub inverse_x: String,
    pub inverse_y: String,
}

impl From<&Transform> for TransformEcho {
    fn from(t: &Transform) -> Self {
        let ((u, v), (ix, iy)) = (t.forward(), t.inverse());
        Self {
            u: u.to_string(),
            v: v.to_string(),
            inverse_x: ix.to_string(),
            inverse_y: iy.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RadialFormEcho {
    pub kind: RadialKind,
    pub rdot: String,
    pub thetadot: String,
    pub upsilon0: Option<String>,
    pub upsilon1: Option<String>,
    pub upsilon2: Option<String>,
    pub diagnostic: Option<String>,
}

impl RadialFormEcho {
    pub fn new(rdot: &limitlyap::expr::Expr, form: &RadialForm) -> Self {
        Self {
            kind: form.kind,
            rdot: rdot.to_string(),
            thetadot: form.psi.to_string(),
            upsilon0: form.upsilon0.as_ref().map(ToString::to_string),
            upsilon1: form.upsilon1.as_ref().map(ToString::to_string),
            upsilon2: form.upsilon2.as_ref().map(ToString::to_string),
            diagnostic: form.diagnostic.clone(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct PotentialEcho {
    pub construction: Construction,
    pub phi_r: Option<String>,
    /// In the transformed coordinates; equals `phi` without a transform.
    pub phi_rectified: String,
    pub phi: String,
    pub error_bound: f64,
    pub infimum: Option<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct LyapunovSummary {
    pub pass: bool,
    pub window: Window,
    pub n: usize,
    pub min_phi: f64,
    pub argmin: (f64, f64),
    pub max_lie: f64,
    pub argmax: (f64, f64),
    pub angular_min: Option<f64>,
    pub stationary_count: usize,
    /// Smallest and largest distance from the origin over the stationary set.
    pub stationary_radii: Option<(f64, f64)>,
    pub stationary: Vec<(f64, f64)>,
}

impl LyapunovSummary {
    pub fn new(r: &LyapunovReport, pass: bool, angular_min: Option<f64>) -> Self {
        let radii = r.stationary.iter().map(|(x, y)| x.hypot(*y));
        let stationary_radii = radii
            .clone()
            .reduce(f64::min)
            .zip(radii.reduce(f64::max));
        Self {
            pass,
            window: r.window,
            n: r.n,
            min_phi: r.min_phi,
            argmin: r.argmin,
            max_lie: r.max_lie,
            argmax: r.argmax,
            angular_min,
            stationary_count: r.stationary.len(),
            stationary_radii,
            stationary: r.stationary.clone(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CriteriaSummary {
    pub radius: f64,
    pub n: usize,
    pub max_abs_hp: f64,
    pub min_div: f64,
    pub max_div: f64,
    pub verdict: Verdict,
    pub disagreements: usize,
}

impl From<&CriteriaReport> for CriteriaSummary {
    fn from(c: &CriteriaReport) -> Self {
        Self {
            radius: c.radius,
            n: c.n,
            max_abs_hp: c.max_abs_hp,
            min_div: c.min_div,
            max_div: c.max_div,
            verdict: c.verdict,
            disagreements: c.disagreements,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum RunVerdict {
    Pass,
    Fail,
}

/// Structured result of `pipeline` and `lyapunov`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub command: String,
    pub system: SystemEcho,
    pub transform: Option<TransformEcho>,
    pub radial_form: RadialFormEcho,
    pub cycles: Vec<LimitCycle>,
    pub potential: PotentialEcho,
    pub lyapunov: LyapunovSummary,
    pub criteria: Option<CriteriaSummary>,
    pub verdict: RunVerdict,
    pub provenance: Provenance,
}

impl AnalysisReport {
    pub fn new(
        command: &str,
        s: &PlanarSystem,
        transform: Option<&Transform>,
        out: &PipelineOutcome,
        provenance: Provenance,
    ) -> Self {
        Self {
            command: command.to_string(),
            system: s.into(),
            transform: transform.map(Into::into),
            radial_form: RadialFormEcho::new(&out.polar.rdot, &out.form),
            cycles: out.cycles.clone(),
            potential: PotentialEcho {
                construction: out.potential.construction,
                phi_r: out.potential.phi_r.as_ref().map(ToString::to_string),
                phi_rectified: out.phi_rectified.to_string(),
                phi: out.phi.to_string(),
                error_bound: out.potential.error_bound,
                infimum: out.infimum.as_ref().map(|c| c.infimum),
            },
            lyapunov: LyapunovSummary::new(&out.lyapunov, out.pass, out.angular.as_ref().map(|a| a.min)),
            criteria: out.criteria.as_ref().map(Into::into),
            verdict: if out.pass { RunVerdict::Pass } else { RunVerdict::Fail },
            provenance,
        }
    }
}
