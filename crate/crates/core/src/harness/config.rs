//! TOML experiment configuration. Unknown keys are rejected. Seeds, horizon
//! and path count have no defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::brownian::PathConfig;
use crate::cocycle::{FormKind, PreservedForm, RepFlags, Representation};
use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::harmonic::Degree;
use crate::linalg::{c, CMat, CVec};
use crate::lyapunov::EstimatorConfig;

use super::catalog::{build_preset, surface_by_name, DivisorSpec, Preset, PresetParams};

/// Environment variable that overrides the output root.
pub const OUTPUT_ROOT_ENV: &str = "FLATLYAP_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub surface: SurfaceSection,
    pub representation: RepresentationSection,
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub divisor: Option<DivisorSection>,
    #[serde(default)]
    pub fiber: FiberSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    /// Overrides the preset's surface.
    pub model: Option<String>,
    pub word_cap: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_cmat(&self) -> Result<CMat> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            return Err(Error::Config("matrices must be square and non-empty".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                return Err(Error::Config("imaginary part has the wrong shape".into()));
            }
        }
        Ok(CMat::from_fn(n, n, |i, j| {
            c(self.re[i][j], self.im.as_ref().map_or(0.0, |m| m[i][j]))
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKindSpec {
    Hermitian,
    Symplectic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub kind: FormKindSpec,
    #[serde(flatten)]
    pub matrix: MatrixSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationSection {
    /// Catalog name; mutually exclusive with `generators`.
    pub preset: Option<String>,
    pub generators: Option<Vec<MatrixSpec>>,
    pub form: Option<FormSpec>,
    pub strongly_irreducible: Option<bool>,
    pub unitary: Option<bool>,
    pub matrix_seed: Option<u64>,
    /// k of the type (1,k,1) preset.
    pub k: Option<usize>,
    /// Hypergeometric slot name, e.g. "case_03".
    pub case: Option<String>,
    pub alpha: Option<Vec<String>>,
    pub beta: Option<Vec<String>>,
    /// "thin" or "thick".
    pub label: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuspPolicy {
    /// Drop cusp-trapped paths (warn above 1%, fail above 10%).
    #[default]
    Discard,
    /// Any cusp-trapped path fails the run.
    Fail,
}

fn d_dt() -> f64 {
    0.05
}
fn d_batches() -> usize {
    20
}
fn d_burn() -> f64 {
    0.1
}
fn d_renorm() -> usize {
    16
}
fn d_refine() -> u32 {
    40
}
fn d_cap() -> f64 {
    50.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub seed: u64,
    pub horizon: f64,
    pub n_paths: usize,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_batches")]
    pub n_batches: usize,
    #[serde(default = "d_burn")]
    pub burn_in: f64,
    #[serde(default = "d_renorm")]
    pub renorm_interval: usize,
    #[serde(default = "d_refine")]
    pub max_substep_refinements: u32,
    #[serde(default = "d_cap")]
    pub cusp_y_cap: f64,
    #[serde(default)]
    pub cusp_policy: CuspPolicy,
}

impl EstimatorSection {
    pub fn to_estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            path: PathConfig {
                dt: self.dt,
                horizon: self.horizon,
                max_substep_refinements: self.max_substep_refinements,
                rng_seed: self.seed,
                cusp_y_cap: self.cusp_y_cap,
            },
            n_paths: self.n_paths,
            n_batches: self.n_batches,
            burn_in: self.burn_in,
            renorm_interval: self.renorm_interval,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorMode {
    /// The preset's divisor.
    #[default]
    Preset,
    /// Explicit subspace F given by `subspace` columns.
    Subspace,
    /// Uniformly random F of codimension k.
    Random,
    /// Hyperplane through a point of an independent fiber sample (k = 1).
    ThroughSample,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisorSection {
    #[serde(default)]
    pub mode: DivisorMode,
    /// Codimension of F for the random modes.
    pub k: Option<usize>,
    /// Columns of a basis of F, each entry [re, im].
    pub subspace: Option<Vec<Vec<[f64; 2]>>>,
    /// Rational with optional `/pi` suffix; overrides the preset's degree.
    pub degree: Option<String>,
    pub seed: Option<u64>,
}

fn d_probe_dt() -> f64 {
    4.0
}
fn d_probes() -> usize {
    2000
}
fn d_k() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSection {
    #[serde(default = "d_k")]
    pub k: usize,
    #[serde(default = "d_probe_dt")]
    pub probe_dt: f64,
    #[serde(default = "d_probes")]
    pub n_probes: usize,
    /// Starting vector, entries [re, im]; defaults to the preset's or a fixed
    /// generic vector.
    pub v0: Option<Vec<[f64; 2]>>,
}

impl Default for FiberSection {
    fn default() -> Self {
        Self {
            k: d_k(),
            probe_dt: d_probe_dt(),
            n_probes: d_probes(),
            v0: None,
        }
    }
}

fn d_bound_samples() -> usize {
    500
}
fn d_bound_len() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Exterior power for the consistency check; skipped when absent and the
    /// rank is below 3.
    pub exterior_k: Option<usize>,
    #[serde(default = "d_bound_samples")]
    pub bound_samples: usize,
    #[serde(default = "d_bound_len")]
    pub bound_max_len: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            exterior_k: None,
            bound_samples: d_bound_samples(),
            bound_max_len: d_bound_len(),
        }
    }
}

fn d_dir() -> String {
    "flatlyap-out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "d_dir")]
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: d_dir() }
    }
}

/// A parsed config together with its source text.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)?;
    let config = parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(LoadedConfig { config, text })
}

fn parse_rational(s: &str) -> Result<f64> {
    let d: Degree = s.parse()?;
    if s.trim().ends_with("/pi") {
        return Err(Error::Config(format!("exponent {s:?} must be a plain rational")));
    }
    Ok(d.value())
}

fn four(v: &Option<Vec<String>>, what: &str) -> Result<Option<[f64; 4]>> {
    match v {
        None => Ok(None),
        Some(list) => {
            if list.len() != 4 {
                return Err(Error::Config(format!("{what} needs exactly four entries")));
            }
            let mut out = [0.0; 4];
            for (o, s) in out.iter_mut().zip(list) {
                *o = parse_rational(s)?;
            }
            Ok(Some(out))
        }
    }
}

fn cvec_from_pairs(v: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|p| c(p[0], p[1])))
}

impl ExperimentConfig {
    /// Checks that do not need the representation.
    pub fn validate(&self) -> Result<()> {
        let r = &self.representation;
        match (&r.preset, &r.generators) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("representation: give either preset or generators, not both".into()))
            }
            (None, None) => return Err(Error::Config("representation: preset or generators is required".into())),
            (None, Some(_)) if self.surface.model.is_none() => {
                return Err(Error::Config("surface.model is required for inline generators".into()))
            }
            _ => {}
        }
        if let Some(label) = &r.label {
            if label != "thin" && label != "thick" {
                return Err(Error::Config(format!("representation.label must be thin or thick, got {label:?}")));
            }
        }
        if let Some(case) = &r.case {
            let ok = case
                .strip_prefix("case_")
                .and_then(|n| n.parse::<u32>().ok())
                .is_some_and(|n| (1..=14).contains(&n) && case.len() == 7);
            if !ok {
                return Err(Error::Config(format!("representation.case must be case_01..case_14, got {case:?}")));
            }
        }
        four(&r.alpha, "representation.alpha")?;
        four(&r.beta, "representation.beta")?;
        self.estimator.to_estimator().validate()?;
        if let Some(d) = &self.divisor {
            if let Some(deg) = &d.degree {
                deg.parse::<Degree>()?;
            }
            match d.mode {
                DivisorMode::Subspace if d.subspace.is_none() => {
                    return Err(Error::Config("divisor.mode = \"subspace\" needs divisor.subspace".into()))
                }
                DivisorMode::Random | DivisorMode::ThroughSample if d.seed.is_none() => {
                    return Err(Error::Config("random divisors need an explicit divisor.seed".into()))
                }
                _ => {}
            }
        }
        if !(self.fiber.probe_dt > 0.0) || self.fiber.n_probes < 2 || self.fiber.k == 0 {
            return Err(Error::Config("fiber: need probe_dt > 0, n_probes ≥ 2, k ≥ 1".into()));
        }
        Ok(())
    }

    /// Canonical hash: SHA-256 of the JSON serialization of the parsed config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        self.estimator.to_estimator()
    }

    /// Output directory, rooted at $FLATLYAP_OUT when set and the configured
    /// directory is relative.
    pub fn output_dir(&self) -> PathBuf {
        let dir = PathBuf::from(&self.output.dir);
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
            _ => dir,
        }
    }

    /// Builds the surface, representation and divisor data.
    pub fn build(&self) -> Result<Preset> {
        let r = &self.representation;
        let mut preset = match (&r.preset, &r.generators) {
            (Some(name), None) => build_preset(
                name,
                &PresetParams {
                    matrix_seed: r.matrix_seed,
                    k: r.k,
                    alpha: four(&r.alpha, "alpha")?,
                    beta: four(&r.beta, "beta")?,
                },
            )?,
            (None, Some(gens)) => {
                let gens = gens.iter().map(MatrixSpec::to_cmat).collect::<Result<Vec<_>>>()?;
                let form = match &r.form {
                    None => None,
                    Some(f) => {
                        let m = f.matrix.to_cmat()?;
                        Some(match f.kind {
                            FormKindSpec::Hermitian => PreservedForm::hermitian(m)?,
                            FormKindSpec::Symplectic => PreservedForm::symplectic(m)?,
                        })
                    }
                };
                let flags = RepFlags {
                    unitary: r.unitary.unwrap_or(false),
                    strongly_irreducible: r.strongly_irreducible.unwrap_or(false),
                };
                let surface = surface_by_name(self.surface.model.as_deref().unwrap_or_default())?;
                Preset {
                    name: "inline".into(),
                    surface,
                    rep: Representation::new(gens, form, flags)?,
                    divisor: None,
                    v0: None,
                    schottky: None,
                }
            }
            _ => unreachable!("validated"),
        };
        if let Some(model) = &self.surface.model {
            preset.surface = surface_by_name(model)?;
        }
        if let Some(cap) = self.surface.word_cap {
            preset.surface = preset.surface.with_word_cap(cap);
        }
        if let Some(si) = r.strongly_irreducible {
            preset.rep.flags.strongly_irreducible = si;
        }
        if preset.rep.n_generators() != preset.surface.n_generators() {
            return Err(Error::Config(format!(
                "surface {} has {} generators but the representation has {}",
                preset.surface.name,
                preset.surface.n_generators(),
                preset.rep.n_generators()
            )));
        }
        if let Some(form) = &preset.rep.form {
            debug_assert!(matches!(form.kind, FormKind::Hermitian | FormKind::Symplectic));
        }
        if let Some(d) = &self.divisor {
            let degree = d.degree.as_deref().map(str::parse::<Degree>).transpose()?;
            match d.mode {
                DivisorMode::Preset => {
                    if let Some(spec) = preset.divisor.as_mut() {
                        if degree.is_some() {
                            spec.degree = degree;
                        }
                    } else {
                        return Err(Error::Config(format!("preset {} has no divisor data", preset.name)));
                    }
                }
                DivisorMode::Subspace => {
                    let cols: Vec<CVec> = d
                        .subspace
                        .as_ref()
                        .expect("validated")
                        .iter()
                        .map(|col| cvec_from_pairs(col))
                        .collect();
                    if cols.iter().any(|v| v.len() != preset.rep.n) {
                        return Err(Error::Config("divisor.subspace columns must have the rank's length".into()));
                    }
                    preset.divisor = Some(DivisorSpec::from_subspace(Subspace::from_columns(&cols)?, degree)?);
                }
                // resolved at run time, they need randomness or a fiber sample
                DivisorMode::Random | DivisorMode::ThroughSample => {}
            }
        }
        if let Some(v) = &self.fiber.v0 {
            preset.v0 = Some(cvec_from_pairs(v));
        }
        Ok(preset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[representation]
preset = "fuchsian_genus2"

[estimator]
seed = 1
horizon = 50.0
n_paths = 40
"#;

    #[test]
    fn minimal_loads() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.estimator.dt, 0.05);
        let p = cfg.build().unwrap();
        assert_eq!(p.rep.n, 2);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("seed = 1", "seed = 1\nsede = 2");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("sede"), "{err}");
    }

    #[test]
    fn seed_is_required() {
        let text = MINIMAL.replace("seed = 1\n", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(&MINIMAL.replace("\n\n", "\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(&MINIMAL.replace("seed = 1", "seed = 2")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn form_violation_cites_generator() {
        let text = r#"
[surface]
model = "thrice_punctured_sphere"
[representation]
generators = [ { re = [[1.0, 0.0], [0.0, 1.0]] }, { re = [[2.0, 0.0], [0.0, 0.5]] } ]
form = { kind = "hermitian", re = [[1.0, 0.0], [0.0, 1.0]] }
[estimator]
seed = 3
horizon = 10.0
n_paths = 10
n_batches = 5
"#;
        let cfg = parse_config(text).unwrap();
        match cfg.build().unwrap_err() {
            Error::FormViolation { generator, residual, .. } => {
                assert_eq!(generator, 1);
                assert!(residual > 1.0);
            }
            e => panic!("unexpected {e}"),
        }
    }
}
