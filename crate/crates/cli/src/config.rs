//! Run configuration. One TOML file describes a whole run; every section is
//! optional and unknown keys are rejected.
//!
//! ```toml
//! [barrier]
//! kappa = 1.0
//! v0 = 1.0
//!
//! [[functions]]
//! kind = "bump"
//! name = "b1"
//! center = 3.0
//! halfwidth = 0.5
//!
//! [transform]
//! function = "b1"
//! mode = "round_trip"
//! r = { start = 2.5, stop = 3.5, count = 11 }
//! ```

use std::path::{Path, PathBuf};

use rhs_spectra_core::eigen::{FamilyTag, Transcription};
use rhs_spectra_core::quadrature::QuadratureSpec;
use rhs_spectra_core::testspace::{make_position_bump, make_spectral_test_function, TestFunction, TestKind};
use rhs_spectra_core::transform::RadialFunction;
use rhs_spectra_core::{BarrierConfig, ComplexEnergy};
use serde::Deserialize;

use crate::error::{CliError, Context};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub barrier: BarrierSection,
    pub quadrature: QuadratureSection,
    pub output: OutputSection,
    pub functions: Vec<FunctionDecl>,
    pub eval: EvalSection,
    pub transform: TransformSection,
    pub evolve: EvolveSection,
    pub verify: VerifySection,
    pub spectrum: SpectrumSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierSection {
    pub kappa: f64,
    pub hbar: f64,
    pub v0: f64,
    pub a: f64,
    pub b: f64,
    /// Defaults to `1e-9 · max(1, v0)`.
    pub eps_energy: Option<f64>,
}

impl Default for BarrierSection {
    fn default() -> Self {
        let d = BarrierConfig::default();
        BarrierSection {
            kappa: d.kappa,
            hbar: d.hbar,
            v0: d.v0,
            a: d.a,
            b: d.b,
            eps_energy: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub r_cutoff: Option<f64>,
    pub e_cutoff: Option<f64>,
    pub nodes_per_panel: usize,
    pub max_panel_phase: f64,
    pub tol: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let d = QuadratureSpec::default();
        QuadratureSection {
            r_cutoff: d.r_cutoff,
            e_cutoff: d.e_cutoff,
            nodes_per_panel: d.nodes_per_panel,
            max_panel_phase: d.max_panel_phase,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    pub path: Option<PathBuf>,
}

/// A named function that commands refer to.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionDecl {
    /// `amplitude · ψ((r - center)/halfwidth)`.
    Bump {
        name: String,
        center: f64,
        halfwidth: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// The packet whose energy profile is `amplitude · ψ((E - center)/halfwidth)`.
    Spectral {
        name: String,
        center: f64,
        halfwidth: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `e^{-rate·r} Σ c_j r^j`.
    ExpPoly { name: String, rate: f64, coeffs: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl FunctionDecl {
    pub fn name(&self) -> &str {
        match self {
            FunctionDecl::Bump { name, .. }
            | FunctionDecl::Spectral { name, .. }
            | FunctionDecl::ExpPoly { name, .. } => name,
        }
    }
}

/// Either an explicit list or `count` equally spaced points.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl GridSpec {
    pub fn range(start: f64, stop: f64, count: usize) -> Self {
        GridSpec::Range { start, stop, count }
    }

    /// The points, checked to be finite and strictly increasing.
    pub fn points(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let pts = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        };
        if pts.is_empty() {
            return Err(CliError::config(format!("{field}: grid is empty")));
        }
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config(format!("{field}: grid values must be finite")));
        }
        if pts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::config(format!("{field}: grid must be strictly increasing")));
        }
        Ok(pts)
    }
}

/// A real energy or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EnergyValue {
    Real(f64),
    Complex([f64; 2]),
}

impl EnergyValue {
    pub fn energy(self) -> ComplexEnergy {
        match self {
            EnergyValue::Real(e) => ComplexEnergy::real(e),
            EnergyValue::Complex([re, im]) => ComplexEnergy::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    #[default]
    Eigenfunction,
    Green,
    Rho,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub quantity: Quantity,
    /// Family names for eigenfunction dumps; defaults to `["chi"]`.
    pub families: Option<Vec<String>>,
    /// Defaults: `[2.0]` for eigenfunctions, `[-1.0]` for the Green function.
    pub energies: Option<Vec<EnergyValue>>,
    /// Energy grid of the density table.
    pub rho_energies: Option<GridSpec>,
    pub r: Option<GridSpec>,
    /// Second Green function argument; defaults to `r`.
    pub s: Option<GridSpec>,
}

impl EvalSection {
    pub fn families(&self) -> Result<Vec<FamilyTag>, CliError> {
        match &self.families {
            None => Ok(vec![FamilyTag::Chi]),
            Some(names) => names
                .iter()
                .map(|n| {
                    n.parse()
                        .map_err(|_| CliError::config(format!("eval.families: unknown family `{n}`")))
                })
                .collect(),
        }
    }

    pub fn energies(&self) -> Vec<ComplexEnergy> {
        let default = match self.quantity {
            Quantity::Green => -1.0,
            _ => 2.0,
        };
        match &self.energies {
            Some(v) => v.iter().map(|e| e.energy()).collect(),
            None => vec![ComplexEnergy::real(default)],
        }
    }

    pub fn r(&self) -> Result<Vec<f64>, CliError> {
        self.r
            .clone()
            .unwrap_or(GridSpec::range(0.25, 4.0, 16))
            .points("eval.r")
    }

    pub fn s(&self) -> Result<Vec<f64>, CliError> {
        match &self.s {
            Some(s) => s.points("eval.s"),
            None => self.r(),
        }
    }

    pub fn rho_energies(&self) -> Result<Vec<f64>, CliError> {
        self.rho_energies
            .clone()
            .unwrap_or(GridSpec::range(0.25, 5.0, 20))
            .points("eval.rho_energies")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformMode {
    /// `f̂` (or `f̃`) on an energy grid.
    #[default]
    Energy,
    /// `U⁻¹Uf` on a radial grid with the relative `L²` error.
    RoundTrip,
    /// Mean, dispersion and uncertainty of `H` in the normalized state.
    Dispersion,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationChoice {
    #[default]
    Delta,
    Rho,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    pub function: Option<String>,
    pub mode: TransformMode,
    pub normalization: NormalizationChoice,
    /// Output energies; defaults to the nodes of the computed grid.
    pub energies: Option<GridSpec>,
    pub r: Option<GridSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub function: Option<String>,
    /// Defaults to `[0.0, 0.5, 1.0, 2.0]`.
    pub times: Option<Vec<f64>>,
    pub r: Option<GridSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptionChoice {
    #[default]
    Corrected,
    Printed,
}

impl From<TranscriptionChoice> for Transcription {
    fn from(t: TranscriptionChoice) -> Self {
        match t {
            TranscriptionChoice::Corrected => Transcription::Corrected,
            TranscriptionChoice::Printed => Transcription::Printed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Seed of the random test family.
    pub seed: u64,
    /// Suites to run; all when absent.
    pub suites: Option<Vec<String>>,
    pub random_functions: usize,
    pub ket_samples: usize,
    pub norm_pairs: usize,
    /// Highest power of `h` in the ket checks.
    pub max_order: u32,
    /// `Ã₂` form used by the coefficient suite.
    pub transcription: TranscriptionChoice,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            seed: 20_240_601,
            suites: None,
            random_functions: 10,
            ket_samples: 50,
            norm_pairs: 100,
            max_order: 3,
            transcription: TranscriptionChoice::Corrected,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub energies: GridSpec,
    /// Interval of the Stone measure.
    pub stone_interval: [f64; 2],
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            energies: GridSpec::range(0.25, 5.0, 20),
            stone_interval: [1.5, 2.5],
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn barrier(&self) -> Result<BarrierConfig, CliError> {
        let b = &self.barrier;
        let cfg = BarrierConfig::new(b.kappa, b.hbar, b.v0, b.a, b.b).during("barrier", || format!("{b:?}"))?;
        match b.eps_energy {
            Some(eps) => cfg
                .with_eps_energy(eps)
                .during("barrier", || format!("eps_energy={eps}")),
            None => Ok(cfg),
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        let q = &self.quadrature;
        let spec = QuadratureSpec {
            r_cutoff: q.r_cutoff,
            e_cutoff: q.e_cutoff,
            nodes_per_panel: q.nodes_per_panel,
            max_panel_phase: q.max_panel_phase,
            tol: q.tol,
        };
        spec.validate().during("quadrature", || format!("{q:?}"))?;
        Ok(spec)
    }

    /// Checks everything that does not need a computation: barrier and
    /// quadrature values, unique function names, references and grids.
    pub fn validate(&self) -> Result<(), CliError> {
        self.barrier()?;
        self.quadrature()?;
        for (i, f) in self.functions.iter().enumerate() {
            if self.functions[..i].iter().any(|g| g.name() == f.name()) {
                return Err(CliError::config(format!("functions: duplicate name `{}`", f.name())));
            }
        }
        for (field, name) in [
            ("transform.function", &self.transform.function),
            ("evolve.function", &self.evolve.function),
        ] {
            if let Some(n) = name {
                self.decl(n)
                    .map_err(|_| CliError::config(format!("{field}: unknown function `{n}`")))?;
            }
        }
        self.eval.families()?;
        self.eval.r()?;
        self.eval.s()?;
        self.eval.rho_energies()?;
        for (field, g) in [
            ("transform.energies", &self.transform.energies),
            ("transform.r", &self.transform.r),
            ("evolve.r", &self.evolve.r),
        ] {
            if let Some(g) = g {
                g.points(field)?;
            }
        }
        if let Some(ts) = &self.evolve.times {
            GridSpec::List(ts.clone()).points("evolve.times")?;
        }
        self.spectrum.energies.points("spectrum.energies")?;
        let [e1, e2] = self.spectrum.stone_interval;
        if !(e1 > 0.0 && e2 > e1 && e2.is_finite()) {
            return Err(CliError::config("spectrum.stone_interval: need 0 < E1 < E2"));
        }
        Ok(())
    }

    pub fn decl(&self, name: &str) -> Result<&FunctionDecl, CliError> {
        self.functions
            .iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| CliError::config(format!("unknown function `{name}`")))
    }

    /// Builds the declared function. Bumps and spectral packets come back as
    /// test functions.
    pub fn build_function(&self, name: &str) -> Result<Built, CliError> {
        let cfg = self.barrier()?;
        let quad = self.quadrature()?;
        let decl = self.decl(name)?;
        let inputs = || format!("{decl:?}");
        Ok(match decl {
            FunctionDecl::Bump {
                center,
                halfwidth,
                amplitude,
                ..
            } => Built::Test(make_position_bump(&cfg, *center, *halfwidth, *amplitude).during("bump", inputs)?),
            FunctionDecl::Spectral {
                center,
                halfwidth,
                amplitude,
                ..
            } => Built::Test(
                make_spectral_test_function(&cfg, *center, *halfwidth, *amplitude, &quad)
                    .during("spectral_test_function", inputs)?,
            ),
            FunctionDecl::ExpPoly { rate, coeffs, .. } => {
                Built::Plain(RadialFunction::exp_poly(&cfg, *rate, coeffs).during("exp_poly", inputs)?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub enum Built {
    Test(TestFunction),
    Plain(RadialFunction),
}

impl Built {
    pub fn function(&self) -> &RadialFunction {
        match self {
            Built::Test(t) => &t.function,
            Built::Plain(f) => f,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Built::Test(t) if t.kind == TestKind::SpectralProfile => "spectral",
            Built::Test(_) => "bump",
            Built::Plain(_) => "exp_poly",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::parse("").unwrap();
        c.validate().unwrap();
        assert_eq!(c.barrier().unwrap(), BarrierConfig::default());
        assert_eq!(c.quadrature().unwrap(), QuadratureSpec::default());
        assert_eq!(c.eval.energies(), vec![ComplexEnergy::real(2.0)]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "[barrier]\nheight = 2.0\n",
            "colour = 1\n",
            "[[functions]]\nkind = \"bump\"\nname = \"x\"\ncenter = 3.0\nhalfwidth = 0.5\nwidth = 1.0\n",
            "[[functions]]\nkind = \"triangle\"\nname = \"x\"\n",
        ] {
            let err = RunConfig::parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = RunConfig::parse("[barrier]\nv0 = 1.0\na = \"one\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn grids() {
        assert_eq!(GridSpec::range(0.0, 1.0, 3).points("g").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(GridSpec::List(vec![1.0, 1.0]).points("g").is_err());
        assert!(GridSpec::List(vec![]).points("g").is_err());
        let c = RunConfig::parse("[eval]\nr = [3.0, 2.0]\n").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::parse("[eval]\nquantity = \"green\"\nr = { start = 0.5, stop = 2.0, count = 4 }\n").unwrap();
        assert_eq!(c.eval.r().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c.eval.energies(), vec![ComplexEnergy::real(-1.0)]);
    }

    #[test]
    fn complex_energies_and_families() {
        let c =
            RunConfig::parse("[eval]\nenergies = [1.5, [2.0, 1.0]]\nfamilies = [\"chi\", \"theta_plus\"]\n").unwrap();
        assert_eq!(c.eval.energies()[1], ComplexEnergy::new(2.0, 1.0));
        assert_eq!(c.eval.families().unwrap(), vec![FamilyTag::Chi, FamilyTag::ThetaPlus]);
        let c = RunConfig::parse("[eval]\nfamilies = [\"phi\"]\n").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn function_references() {
        let text = "[[functions]]\nkind = \"spectral\"\nname = \"p\"\ncenter = 4.0\nhalfwidth = 2.0\n\
                    [transform]\nfunction = \"q\"\n";
        let c = RunConfig::parse(text).unwrap();
        assert!(c.validate().is_err());
        let dup = "[[functions]]\nkind = \"exp_poly\"\nname = \"f\"\nrate = 1.0\ncoeffs = [0.0, 1.0]\n\
                   [[functions]]\nkind = \"exp_poly\"\nname = \"f\"\nrate = 2.0\ncoeffs = [0.0, 1.0]\n";
        assert!(RunConfig::parse(dup).unwrap().validate().is_err());
    }

    #[test]
    fn invalid_barrier_maps_to_config_code() {
        let c = RunConfig::parse("[barrier]\na = 3.0\nb = 2.0\n").unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }
}
