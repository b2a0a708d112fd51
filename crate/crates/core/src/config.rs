//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::analytic::SVariant;
use crate::error::{Error, Result};
use crate::grid::GridKind;
use crate::pipeline::{ModeRequest, SolveOptions};
use crate::profiles::{builtin_model, BuiltinModel, ModelSpec, Params};

/// Documentation of every accepted key, shown by `--help`.
pub const KEYS_HELP: &str = "\
CONFIG KEYS (one `key = value` per line, `#` starts a comment):
  model.name              cosh-square | rational | poschl-teller | linear-singular | constant-rest
  model.alpha             profile inverse length (cosh-square, rational, poschl-teller)
  model.v0                velocity scale (all but constant-rest)
  model.m0                mass scale (cosh-square, rational, poschl-teller, constant-rest)
  model.A                 mass coefficient m = A/x (linear-singular)
  model.c                 constant velocity (constant-rest)
  mode                    exact | approximate | constant-u | auto        [auto]
  states                  number of levels to solve                      [5]
  grid.n                  interior q-nodes, at least 64                  [2001]
  grid.kind               vertex | cell-centered                         [vertex]
  grid.half_width         initial q half-width on an infinite side       [8]
  grid.delta              required V(wall) - lambda margin when truncating [25]
  tol.quad                quadrature tolerance of the q-map              [1e-12]
  tol.eig                 level movement that ends q-window growth       [1e-8]
  tol.sc                  self-consistency tolerance on E                [1e-12]
  tol.max_iter            self-consistency iteration cap                 [100]
  tol.strict              relative |dE|/E allowed under --strict         [1e-6]
  outputs                 comma list of spectrum, wavefunctions, potential, bic,
                          discrepancy-report                             [spectrum]
  bic.energies            comma list of energies for the bic artifact
  bic.nodes               q-nodes of each bic state                      [2001]
  poschl_teller.s_variant verified | as-published                        [verified]
  scan.param              model parameter to sweep (e.g. m0, alpha)
  scan.min, scan.max      sweep range
  scan.steps              number of points, at least 2
  output.dir              directory for artifacts                        [out]
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Artifact {
    Spectrum,
    Wavefunctions,
    Potential,
    Bic,
    DiscrepancyReport,
}

impl std::str::FromStr for Artifact {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectrum" => Ok(Artifact::Spectrum),
            "wavefunctions" => Ok(Artifact::Wavefunctions),
            "potential" => Ok(Artifact::Potential),
            "bic" => Ok(Artifact::Bic),
            "discrepancy-report" => Ok(Artifact::DiscrepancyReport),
            other => Err(Error::Config(format!("unknown output `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanAxis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ScanAxis {
    pub fn values(&self) -> Vec<f64> {
        let span = self.max - self.min;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + span * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: BuiltinModel,
    pub params: Params,
    pub mode: ModeRequest,
    pub solve: SolveOptions,
    pub strict_tol: f64,
    pub outputs: Vec<Artifact>,
    pub bic_energies: Vec<f64>,
    pub bic_nodes: usize,
    pub s_variant: SVariant,
    pub scan: Option<ScanAxis>,
    pub output_dir: PathBuf,
    /// Resolved key/value pairs, used for hashing.
    entries: BTreeMap<String, String>,
}

const PARAM_KEYS: [&str; 5] = ["alpha", "v0", "m0", "A", "c"];

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a non-negative integer")))
}

fn parse_list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(key, s))
        .collect()
}

/// Splits text into `key = value` pairs.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{k}`",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        RunConfig::from_entries(parse_entries(text)?)
    }

    pub fn from_entries(entries: BTreeMap<String, String>) -> Result<Self> {
        let name = entries
            .get("model.name")
            .ok_or_else(|| Error::Config("missing `model.name`".into()))?;
        let model: BuiltinModel = name.parse()?;
        let mut params = Params::new();
        let mut solve = SolveOptions::default();
        let mut cfg = RunConfig {
            model,
            params: Params::new(),
            mode: ModeRequest::Auto,
            solve,
            strict_tol: 1e-6,
            outputs: vec![Artifact::Spectrum],
            bic_energies: Vec::new(),
            bic_nodes: 2001,
            s_variant: SVariant::Verified,
            scan: None,
            output_dir: PathBuf::from("out"),
            entries: BTreeMap::new(),
        };
        let (mut sp, mut smin, mut smax, mut ssteps) = (None, None, None, None);
        for (k, v) in &entries {
            match k.as_str() {
                "model.name" => {}
                key if key.starts_with("model.") => {
                    let p = &key["model.".len()..];
                    if !PARAM_KEYS.contains(&p) {
                        return Err(Error::Config(format!("unknown key `{key}`")));
                    }
                    params.insert(p.to_string(), parse_f64(key, v)?);
                }
                "mode" => cfg.mode = v.parse()?,
                "states" => solve.states = parse_usize(k, v)?,
                "grid.n" => solve.nodes = parse_usize(k, v)?,
                "grid.kind" => {
                    solve.kind = match v.as_str() {
                        "vertex" => GridKind::Vertex,
                        "cell-centered" => GridKind::CellCentered,
                        other => return Err(Error::Config(format!("unknown grid.kind `{other}`"))),
                    }
                }
                "grid.half_width" => solve.half_width = parse_f64(k, v)?,
                "grid.delta" => solve.delta = parse_f64(k, v)?,
                "tol.quad" => solve.quad_tol = parse_f64(k, v)?,
                "tol.eig" => solve.eig_tol = parse_f64(k, v)?,
                "tol.sc" => solve.sc_tol = parse_f64(k, v)?,
                "tol.max_iter" => solve.max_iter = parse_usize(k, v)?,
                "tol.strict" => cfg.strict_tol = parse_f64(k, v)?,
                "outputs" => cfg.outputs = parse_list(k, v, |_, s| s.parse())?,
                "bic.energies" => cfg.bic_energies = parse_list(k, v, parse_f64)?,
                "bic.nodes" => cfg.bic_nodes = parse_usize(k, v)?,
                "poschl_teller.s_variant" => cfg.s_variant = v.parse()?,
                "scan.param" => sp = Some(v.clone()),
                "scan.min" => smin = Some(parse_f64(k, v)?),
                "scan.max" => smax = Some(parse_f64(k, v)?),
                "scan.steps" => ssteps = Some(parse_usize(k, v)?),
                "output.dir" => cfg.output_dir = PathBuf::from(v),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        cfg.outputs.sort();
        cfg.outputs.dedup();
        cfg.params = params;
        cfg.solve = solve;
        if let Some(param) = sp {
            cfg.scan = Some(ScanAxis {
                param,
                min: smin.ok_or_else(|| Error::Config("missing `scan.min`".into()))?,
                max: smax.ok_or_else(|| Error::Config("missing `scan.max`".into()))?,
                steps: ssteps.ok_or_else(|| Error::Config("missing `scan.steps`".into()))?,
            });
        }
        cfg.entries = entries;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.solve.validate()?;
        if !(self.strict_tol > 0.0) {
            return Err(Error::Config(format!(
                "tol.strict must be positive, got {}",
                self.strict_tol
            )));
        }
        if self.bic_nodes < 64 {
            return Err(Error::Config(format!(
                "bic.nodes must be at least 64, got {}",
                self.bic_nodes
            )));
        }
        if let Some(axis) = &self.scan {
            if axis.steps < 2 {
                return Err(Error::Config(format!(
                    "scan.steps must be at least 2, got {}",
                    axis.steps
                )));
            }
            if !self.model.required_params().contains(&axis.param.as_str()) {
                return Err(Error::Config(format!(
                    "scan.param `{}` is not a parameter of {}",
                    axis.param,
                    self.model.name()
                )));
            }
        }
        Ok(())
    }

    /// Overrides one key, as from a command-line flag.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut entries = self.entries.clone();
        entries.insert(key.to_string(), value.to_string());
        *self = RunConfig::from_entries(entries)?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        builtin_model(self.model, &self.params)
    }

    /// Model with one parameter replaced.
    pub fn build_model_with(&self, name: &str, value: f64) -> Result<(ModelSpec, Params)> {
        let mut params = self.params.clone();
        params.insert(name.to_string(), value);
        Ok((builtin_model(self.model, &params)?, params))
    }

    /// Canonical `key = value` listing of the configuration, without `output.dir`.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .filter(|(k, _)| k.as_str() != "output.dir")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical listing, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "model.name = cosh-square\nmodel.alpha = 1\nmodel.v0 = 1\nmodel.m0 = 0\n";

    #[test]
    fn parses_defaults() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.model, BuiltinModel::CoshSquare);
        assert_eq!(c.solve.nodes, 2001);
        assert_eq!(c.outputs, vec![Artifact::Spectrum]);
        assert_eq!(c.params["alpha"], 1.0);
    }

    #[test]
    fn comments_and_lists() {
        let text = format!(
            "{BASE}# comment\noutputs = potential, spectrum # trailing\nbic.energies = 1.2,1.5\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.outputs, vec![Artifact::Spectrum, Artifact::Potential]);
        assert_eq!(c.bic_energies, vec![1.2, 1.5]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse(&format!("{BASE}grid.n = 10\n")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}grid.size = 100\n")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}mode = fast\n")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}model.m0 = 1\n")).is_err());
        assert!(RunConfig::parse("model.alpha = 1\n").is_err());
        let steps = format!("{BASE}scan.param = m0\nscan.min = 0\nscan.max = 1\nscan.steps = 1\n");
        assert!(RunConfig::parse(&steps).is_err());
    }

    #[test]
    fn missing_parameter_named_at_model_build() {
        let c =
            RunConfig::parse("model.name = cosh-square\nmodel.alpha = 1\nmodel.m0 = 0\n").unwrap();
        let err = c.build_model().unwrap_err();
        assert!(err.to_string().contains("v0"));
        assert!(err.is_config());
    }

    #[test]
    fn hash_tracks_content_not_layout() {
        let a = RunConfig::parse(BASE).unwrap();
        let b = RunConfig::parse(&format!("# header\n\n{}", BASE.replace(" = ", "="))).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.set("mode", "exact").unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn scan_axis_values() {
        let axis = ScanAxis {
            param: "m0".into(),
            min: 0.0,
            max: 2.0,
            steps: 9,
        };
        let v = axis.values();
        assert_eq!(v.len(), 9);
        assert_eq!(v[4], 1.0);
        assert_eq!(v[8], 2.0);
    }
}
