//! Run configuration: one TOML file plus command-line overrides.
//!
//! ```toml
//! [grid]
//! n = 128
//! half_width = 4.0
//! support_radius = 1.5
//!
//! [potential]
//! kind = "disk"          # disk | gaussian | two-disks | saturating-disk
//! amplitude = 1.0
//! radius = 1.0
//! mu = 0.0
//!
//! [constants]
//! gamma = 0.5
//! c_gamma_source = "probe" # or "override", which reads c_gamma
//! xi_max = 24.0
//!
//! [solver]
//! tol = 1e-9
//! max_iter = 50
//!
//! [output]
//! directory = "out"
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use cgo_scatter::field::GridSpec;
use cgo_scatter::potential::{BuiltinPotential, PotentialKind};

/// A configuration problem tied to the offending key.
#[derive(Debug, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    pub support_radius: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 128, half_width: 4.0, support_radius: 1.5 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: Option<String>,
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub amplitude_im: f64,
    pub radius: Option<f64>,
    #[serde(default)]
    pub mu: f64,
    pub width: Option<f64>,
}

impl PotentialConfig {
    fn disk() -> Self {
        Self { kind: Some("disk".into()), amplitude: Some(1.0), radius: Some(1.0), ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CGammaSource {
    Probe,
    Override,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub gamma: f64,
    pub c_gamma_source: CGammaSource,
    pub c_gamma: Option<f64>,
    /// Largest `|xi|` the run will visit; bounds `e0` in the nonlinearity.
    pub xi_max: f64,
    pub cutoff: Option<f64>,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { gamma: 0.5, c_gamma_source: CGammaSource::Probe, c_gamma: None, xi_max: 24.0, cutoff: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub strict_cutoff: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 50, strict_cutoff: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    pub k: f64,
    /// Incident direction in radians.
    pub angle: f64,
    /// Number of equally spaced observation directions.
    pub directions: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self { k: 1.0, angle: 0.0, directions: 64, tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeConfig {
    Volume,
    Boundary,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TransformConfig {
    pub lattice_n: usize,
    pub lattice_half_width: f64,
    pub mode: ModeConfig,
    pub contour_radius: Option<f64>,
    /// Band of `|xi|` used by the tail fits.
    pub band: [f64; 2],
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self { lattice_n: 64, lattice_half_width: 4.0, mode: ModeConfig::Volume, contour_radius: None, band: [4.0, 20.0] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Any of "field" (binary field files) and "text" (plot tables).
    pub formats: Vec<String>,
    /// Adds wall-clock times to log records, which makes logs differ between runs.
    pub timestamps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec!["field".into(), "text".into()], timestamps: false }
    }
}

impl OutputConfig {
    pub fn fields(&self) -> bool {
        self.formats.iter().any(|f| f == "field")
    }

    pub fn text(&self) -> bool {
        self.formats.iter().any(|f| f == "text")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub potential: Option<PotentialConfig>,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            potential: Some(PotentialConfig::disk()),
            constants: ConstantsConfig::default(),
            solver: SolverConfig::default(),
            forward: ForwardConfig::default(),
            transform: TransformConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Command-line values that replace config entries when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub half_width: Option<f64>,
    pub support_radius: Option<f64>,
    pub kind: Option<String>,
    pub amplitude: Option<f64>,
    pub radius: Option<f64>,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub c_gamma: Option<f64>,
    pub cutoff: Option<f64>,
    pub xi_max: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub strict_cutoff: bool,
    pub k: Option<f64>,
    pub angle: Option<f64>,
    pub lattice_n: Option<usize>,
    pub out: Option<PathBuf>,
    pub timestamps: bool,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("config")
                .to_string();
            ConfigError { field, message: msg }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        set(&mut self.grid.n, o.n);
        set(&mut self.grid.half_width, o.half_width);
        set(&mut self.grid.support_radius, o.support_radius);
        if o.kind.is_some() || o.amplitude.is_some() || o.radius.is_some() || o.mu.is_some() {
            let p = self.potential.get_or_insert_with(PotentialConfig::default);
            if o.kind.is_some() {
                p.kind = o.kind.clone();
            }
            if o.amplitude.is_some() {
                p.amplitude = o.amplitude;
            }
            if o.radius.is_some() {
                p.radius = o.radius;
            }
            set(&mut p.mu, o.mu);
        }
        set(&mut self.constants.gamma, o.gamma);
        if o.c_gamma.is_some() {
            self.constants.c_gamma = o.c_gamma;
            self.constants.c_gamma_source = CGammaSource::Override;
        }
        if o.cutoff.is_some() {
            self.constants.cutoff = o.cutoff;
        }
        set(&mut self.constants.xi_max, o.xi_max);
        set(&mut self.solver.tol, o.tol);
        set(&mut self.solver.max_iter, o.max_iter);
        self.solver.strict_cutoff |= o.strict_cutoff;
        set(&mut self.forward.k, o.k);
        set(&mut self.forward.angle, o.angle);
        set(&mut self.transform.lattice_n, o.lattice_n);
        set(&mut self.output.directory, o.out.clone());
        self.output.timestamps |= o.timestamps;
    }

    pub fn grid_spec(&self) -> Result<GridSpec<f64>, ConfigError> {
        let g = &self.grid;
        GridSpec::new(g.n, g.half_width, g.support_radius).map_err(|e| bad("grid", e.to_string()))
    }

    pub fn lattice_spec(&self) -> Result<GridSpec<f64>, ConfigError> {
        let t = &self.transform;
        let r = self.grid.support_radius.min(t.lattice_half_width / 2.0);
        GridSpec::new(t.lattice_n, t.lattice_half_width, r).map_err(|e| bad("transform.lattice_n", e.to_string()))
    }

    /// The configured potential with `e0` bounded for `|xi| <= xi_max`.
    pub fn potential(&self) -> Result<BuiltinPotential<f64>, ConfigError> {
        let p = self.potential.as_ref().ok_or_else(|| bad("potential", "section is required"))?;
        let kind: PotentialKind = p
            .kind
            .as_deref()
            .ok_or_else(|| bad("potential.kind", "missing"))?
            .parse()
            .map_err(|_| bad("potential.kind", "expected disk, gaussian, two-disks or saturating-disk"))?;
        let amplitude = p.amplitude.ok_or_else(|| bad("potential.amplitude", "missing"))?;
        let radius = p.radius.ok_or_else(|| bad("potential.radius", "missing"))?;
        if !(radius > 0.0 && radius <= self.grid.support_radius) {
            return Err(bad("potential.radius", format!("must lie in (0, {}]", self.grid.support_radius)));
        }
        let e0_max = BuiltinPotential::e0_bound(radius, self.constants.xi_max);
        let built = BuiltinPotential::new(kind, Complex::new(amplitude, p.amplitude_im), radius, p.mu, e0_max)
            .map_err(|e| bad("potential", e.to_string()))?;
        match p.width {
            Some(w) => built.with_width(w).map_err(|e| bad("potential.width", e.to_string())),
            None => Ok(built),
        }
    }

    /// Checks every value the stages may touch.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid_spec()?;
        self.potential()?;
        let c = &self.constants;
        if !(c.gamma > 0.0 && c.gamma < 1.0) {
            return Err(bad("constants.gamma", "must lie in (0, 1)"));
        }
        match (c.c_gamma_source, c.c_gamma) {
            (CGammaSource::Override, None) => return Err(bad("constants.c_gamma", "required when c_gamma_source = \"override\"")),
            (_, Some(v)) if !(v > 0.0 && v.is_finite()) => return Err(bad("constants.c_gamma", "must be positive")),
            _ => {}
        }
        if !(c.xi_max > 0.0 && c.xi_max.is_finite()) {
            return Err(bad("constants.xi_max", "must be positive"));
        }
        if matches!(c.cutoff, Some(v) if !(v > 0.0 && v.is_finite())) {
            return Err(bad("constants.cutoff", "must be positive"));
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(bad("solver.tol", "must lie in (0, 1)"));
        }
        if s.max_iter == 0 {
            return Err(bad("solver.max_iter", "must be at least 1"));
        }
        let f = &self.forward;
        if !(f.k > 0.0 && f.k.is_finite()) {
            return Err(bad("forward.k", "must be positive"));
        }
        if !f.angle.is_finite() {
            return Err(bad("forward.angle", "must be finite"));
        }
        if f.directions == 0 {
            return Err(bad("forward.directions", "must be at least 1"));
        }
        if !(f.tol > 0.0 && f.tol < 1.0) {
            return Err(bad("forward.tol", "must lie in (0, 1)"));
        }
        if f.max_iter == 0 {
            return Err(bad("forward.max_iter", "must be at least 1"));
        }
        self.lattice_spec()?;
        let [lo, hi] = self.transform.band;
        if !(lo > 0.0 && hi > lo) {
            return Err(bad("transform.band", "expected 0 < lo < hi"));
        }
        if let Some(r) = self.transform.contour_radius {
            if !(r > self.grid.support_radius && r < self.grid.half_width / 2.0) {
                return Err(bad("transform.contour_radius", "must lie between the support radius and L/2"));
            }
        }
        for f in &self.output.formats {
            if f != "field" && f != "text" {
                return Err(bad("output.formats", format!("unknown format {f:?}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn empty_potential_names_the_field() {
        let c = RunConfig::from_toml("[potential]\n").unwrap();
        assert_eq!(c.validate().unwrap_err().field, "potential.kind");
        let c = RunConfig::from_toml("[grid]\nn = 128\n").unwrap();
        assert_eq!(c.validate().unwrap_err().field, "potential");
    }

    #[test]
    fn bad_values_are_reported_by_key() {
        let mut c = RunConfig::default();
        c.grid.n = 100;
        assert_eq!(c.validate().unwrap_err().field, "grid");
        let mut c = RunConfig::default();
        c.constants.c_gamma_source = CGammaSource::Override;
        assert_eq!(c.validate().unwrap_err().field, "constants.c_gamma");
        let e = RunConfig::from_toml("[grid]\nsize = 3\n").unwrap_err();
        assert!(e.message.contains("size"), "{e}");
    }

    #[test]
    fn flags_win() {
        let mut c = RunConfig::from_toml("[potential]\nkind = \"gaussian\"\namplitude = 2.0\nradius = 1.0\n").unwrap();
        c.apply(&Overrides { kind: Some("disk".into()), n: Some(64), c_gamma: Some(0.3), ..Default::default() });
        assert_eq!(c.potential.as_ref().unwrap().kind.as_deref(), Some("disk"));
        assert_eq!(c.potential.as_ref().unwrap().amplitude, Some(2.0));
        assert_eq!(c.grid.n, 64);
        assert_eq!(c.constants.c_gamma_source, CGammaSource::Override);
        c.validate().unwrap();
    }
}
