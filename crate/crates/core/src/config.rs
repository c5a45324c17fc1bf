//! JSON run configuration.
//!
//! Unknown keys are rejected, defaults are filled in, and every range check
//! reports the offending field as a JSON pointer (`/kernel/s`).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::discretization::{AssemblyOptions, Mesh};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::nonlinearity::{NonlinearitySpec, Profile, ProfileConfig};
use crate::variational::{GeometryOptions, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: DomainConfig,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { a: -1.0, b: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamilyConfig {
    Fractional,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamilyConfig,
    pub s: f64,
    #[serde(default = "one")]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_elements: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { n_elements: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "QuadratureConfig::default_order")]
    pub order: usize,
    #[serde(default = "QuadratureConfig::default_tol")]
    pub assembly_tol: f64,
}

impl QuadratureConfig {
    fn default_order() -> usize {
        8
    }
    fn default_tol() -> f64 {
        1e-8
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { order: Self::default_order(), assembly_tol: Self::default_tol() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityFamilyConfig {
    Affine,
    Saturating,
    BoundedPerturbation,
}

/// Declared `(f1)` growth data overriding the family-derived values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub a: ProfileConfig,
    pub b: f64,
}

fn zero_profile() -> ProfileConfig {
    ProfileConfig::Constant { value: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub family: NonlinearityFamilyConfig,
    pub m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default = "zero_profile")]
    pub g: ProfileConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    Auto,
    CaseA,
    CaseB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self { mode: SolverMode::Auto, tol: d.tol, max_iter: d.max_iter, starts: d.starts, seed: d.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub radii: Vec<f64>,
    pub n_samples: usize,
    pub anchors: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        let d = GeometryOptions::default();
        Self { radii: d.radii, n_samples: d.n_samples, anchors: d.anchors }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = match serde_path_to_error::deserialize(&mut de) {
        Ok(c) => c,
        Err(e) => {
            let path = pointer(&e.path().to_string());
            let inner = e.into_inner();
            if inner.is_data() {
                return Err(Error::ConfigValidation { path, message: inner.to_string() });
            }
            return Err(Error::ConfigParse { line: inner.line(), column: inner.column(), message: inner.to_string() });
        }
    };
    de.end().map_err(|e| Error::ConfigParse { line: e.line(), column: e.column(), message: e.to_string() })?;
    cfg.validate()?;
    Ok(cfg)
}

fn pointer(dotted: &str) -> String {
    if dotted == "." || dotted.is_empty() {
        return "/".into();
    }
    let mut out = String::new();
    for part in dotted.split('.') {
        out.push('/');
        out.push_str(part.trim_start_matches('[').trim_end_matches(']'));
    }
    out
}

fn fail<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::ConfigValidation { path: path.into(), message: message.into() })
}

fn check_profile(path: &str, p: &ProfileConfig) -> Result<()> {
    match Profile::from(p).validate() {
        Ok(()) => Ok(()),
        Err(e) => fail(path, e.to_string()),
    }
}

impl RunConfig {
    /// Range checks for every numeric field.
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.a.is_finite() && d.b.is_finite()) {
            return fail("/domain", "endpoints must be finite");
        }
        if !(d.a < d.b) {
            return fail("/domain/b", format!("b = {} must exceed a = {}", d.b, d.a));
        }
        if !(self.kernel.s > 0.0 && self.kernel.s < 1.0) {
            return fail("/kernel/s", format!("s = {} must lie in (0, 1)", self.kernel.s));
        }
        if !(self.kernel.theta > 0.0 && self.kernel.theta.is_finite()) {
            return fail("/kernel/theta", format!("theta = {} must be positive", self.kernel.theta));
        }
        if self.mesh.n_elements < 2 {
            return fail("/mesh/n_elements", "at least 2 elements are required");
        }
        if self.quadrature.order < 3 {
            return fail("/quadrature/order", "order must be at least 3");
        }
        if !(self.quadrature.assembly_tol > 0.0) {
            return fail("/quadrature/assembly_tol", "assembly_tol must be positive");
        }
        let nl = &self.nonlinearity;
        if !nl.m.is_finite() {
            return fail("/nonlinearity/m", "m must be finite");
        }
        match nl.family {
            NonlinearityFamilyConfig::Affine => {
                if nl.delta.is_some() {
                    return fail("/nonlinearity/delta", "delta applies to the saturating family only");
                }
                if nl.c.is_some() {
                    return fail("/nonlinearity/c", "c applies to the bounded_perturbation family only");
                }
            }
            NonlinearityFamilyConfig::Saturating => match nl.delta {
                None => return fail("/nonlinearity/delta", "saturating family requires delta"),
                Some(v) if !(v >= 0.0 && v.is_finite()) => {
                    return fail("/nonlinearity/delta", format!("delta = {v} must be nonnegative"))
                }
                _ if nl.c.is_some() => {
                    return fail("/nonlinearity/c", "c applies to the bounded_perturbation family only")
                }
                _ => {}
            },
            NonlinearityFamilyConfig::BoundedPerturbation => match nl.c {
                None => return fail("/nonlinearity/c", "bounded_perturbation family requires c"),
                Some(v) if !v.is_finite() => return fail("/nonlinearity/c", "c must be finite"),
                _ if nl.delta.is_some() => {
                    return fail("/nonlinearity/delta", "delta applies to the saturating family only")
                }
                _ => {}
            },
        }
        check_profile("/nonlinearity/g", &nl.g)?;
        if let Some(gr) = &nl.growth {
            check_profile("/nonlinearity/growth/a", &gr.a)?;
            if !(gr.b >= 0.0 && gr.b.is_finite()) {
                return fail("/nonlinearity/growth/b", "b must be nonnegative");
            }
        }
        let s = &self.solver;
        if !(s.tol > 0.0) {
            return fail("/solver/tol", "tol must be positive");
        }
        if s.max_iter == 0 {
            return fail("/solver/max_iter", "max_iter must be positive");
        }
        if s.starts == 0 {
            return fail("/solver/starts", "starts must be positive");
        }
        let p = &self.probe;
        if p.radii.is_empty() || p.radii[0] <= 0.0 || p.radii.windows(2).any(|w| !(w[0] < w[1])) {
            return fail("/probe/radii", "radii must be a nonempty ascending list of positive values");
        }
        if p.n_samples == 0 {
            return fail("/probe/n_samples", "n_samples must be positive");
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::uniform(self.domain.a, self.domain.b, self.mesh.n_elements)
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::fractional_with_theta(self.kernel.s, 1, self.kernel.theta)
    }

    pub fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions {
            quad_order: self.quadrature.order,
            assembly_tol: self.quadrature.assembly_tol,
            skip_audit: false,
        }
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec> {
        let nl = &self.nonlinearity;
        let g = Profile::from(&nl.g);
        let spec = match nl.family {
            NonlinearityFamilyConfig::Affine => NonlinearitySpec::affine(nl.m, g)?,
            NonlinearityFamilyConfig::Saturating => NonlinearitySpec::saturating(nl.m, nl.delta.unwrap_or(0.0), g)?,
            NonlinearityFamilyConfig::BoundedPerturbation => {
                NonlinearitySpec::bounded_perturbation(nl.m, nl.c.unwrap_or(0.0), g)?
            }
        };
        Ok(match &nl.growth {
            Some(gr) => spec.with_growth(Profile::from(&gr.a), gr.b),
            None => spec,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            starts: self.solver.starts,
            seed: self.solver.seed,
            ..SolverOptions::default()
        }
    }

    pub fn geometry_options(&self) -> GeometryOptions {
        GeometryOptions {
            radii: self.probe.radii.clone(),
            n_samples: self.probe.n_samples,
            seed: self.solver.seed,
            anchors: self.probe.anchors,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "kernel": {"family": "fractional", "s": 0.5},
        "mesh": {"n_elements": 64},
        "nonlinearity": {"family": "affine", "m": 0.0, "g": {"type": "constant", "value": 1.0}}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.domain, DomainConfig { a: -1.0, b: 1.0 });
        assert_eq!(c.kernel.theta, 1.0);
        assert_eq!(c.quadrature.order, 8);
        assert_eq!(c.quadrature.assembly_tol, 1e-8);
        assert_eq!(c.solver.mode, SolverMode::Auto);
        assert_eq!(c.solver.tol, 1e-9);
        assert_eq!(c.solver.max_iter, 200);
        assert_eq!(c.solver.seed, 42);
        assert_eq!(c.probe.radii, vec![10.0, 100.0, 1000.0]);
    }

    #[test]
    fn out_of_range_order_points_at_field() {
        let text = MINIMAL.replace("\"s\": 0.5", "\"s\": 1.5");
        match parse_config(&text) {
            Err(Error::ConfigValidation { path, .. }) => assert_eq!(path, "/kernel/s"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replacen('{', "{\"kern\": {},", 1);
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("kern"), "{err}");
    }

    #[test]
    fn nested_unknown_key_has_pointer() {
        let text = MINIMAL.replace("\"n_elements\": 64", "\"n_elements\": 64, \"h\": 0.1");
        match parse_config(&text) {
            Err(Error::ConfigValidation { path, message }) => {
                assert_eq!(path, "/mesh/h");
                assert!(message.contains('h'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        match parse_config("{\n  \"kernel\": ,\n}") {
            Err(Error::ConfigParse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn family_parameters_are_required() {
        let text = MINIMAL.replace("\"family\": \"affine\"", "\"family\": \"saturating\"");
        match parse_config(&text) {
            Err(Error::ConfigValidation { path, .. }) => assert_eq!(path, "/nonlinearity/delta"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
