//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use hodge_core::estimator::Coverage;
use hodge_core::manifolds::{Manifold, TestFunction};
use hodge_core::weights::KernelKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexWeights {
    /// k_i = 1/n from the heat weight formula.
    Heat,
    Unit,
    Degree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumOptions {
    /// Skeleton JSON file to analyze instead of a sampled cloud.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    /// Sample on these circle arcs `[start, end)` instead of uniformly.
    #[serde(default)]
    pub arcs: Option<Vec<(f64, f64)>>,
    /// Highest level whose Betti number is reported.
    #[serde(default)]
    pub betti_max_level: Option<usize>,
    #[serde(default = "default_eigen_count")]
    pub eigenvalues: usize,
    #[serde(default = "default_vertex_weights")]
    pub vertex_weights: VertexWeights,
}

fn default_eigen_count() -> usize {
    10
}

fn default_vertex_weights() -> VertexWeights {
    VertexWeights::Heat
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            fixture: None,
            arcs: None,
            betti_max_level: None,
            eigenvalues: default_eigen_count(),
            vertex_weights: default_vertex_weights(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub manifold: Manifold,
    /// f₁,…,f_ℓ; their count is ℓ.
    #[serde(default)]
    pub functions: Vec<TestFunction>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_truncation")]
    pub truncation: Coverage,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    /// Nodes per axis for quadrature; the manifold's default when absent.
    #[serde(default)]
    pub quadrature_grid: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub spectrum: Option<SpectrumOptions>,
    /// Bootstrap resamples for slope intervals.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_truncation() -> Coverage {
    Coverage::Complete
}

fn default_kernel() -> KernelKind {
    KernelKind::Exact
}

fn default_bootstrap() -> usize {
    1000
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn ell(&self) -> usize {
        self.functions.len()
    }

    pub fn grid(&self) -> usize {
        self.quadrature_grid.unwrap_or(match self.manifold {
            Manifold::Circle => hodge_core::manifolds::DEFAULT_CIRCLE_GRID,
            Manifold::Torus => hodge_core::manifolds::DEFAULT_TORUS_GRID,
        })
    }

    fn check_functions(&self) -> Result<(), CliError> {
        if self.functions.is_empty() {
            return Err(invalid("at least one test function is required"));
        }
        for f in &self.functions {
            f.check(self.manifold).map_err(|e| invalid(e.to_string()))?;
        }
        Ok(())
    }

    fn check_times(&self) -> Result<(), CliError> {
        if self.t.is_empty() {
            return Err(invalid("the t grid is empty"));
        }
        if let Some(t) = self.t.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(invalid(format!("t = {t} is outside (0, 1]")));
        }
        Ok(())
    }

    fn check_sizes(&self, min: usize) -> Result<(), CliError> {
        if self.n.is_empty() {
            return Err(invalid("the n grid is empty"));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < min.max(1)) {
            return Err(invalid(format!("n = {n} is below the {min} points a tuple needs")));
        }
        Ok(())
    }

    fn check_truncation(&self) -> Result<(), CliError> {
        match self.truncation {
            Coverage::Complete => Ok(()),
            Coverage::Threshold(tau) if tau >= 0.0 && tau.is_finite() => Ok(()),
            Coverage::MassFraction(f) if f > 0.0 && f <= 1.0 => Ok(()),
            other => Err(invalid(format!("invalid truncation {other:?}"))),
        }
    }

    pub fn validate_dirichlet(&self) -> Result<(), CliError> {
        self.check_functions()?;
        self.check_times()?;
        self.check_sizes(self.ell() + 1)?;
        self.check_truncation()?;
        if self.seeds.is_empty() {
            return Err(invalid("no seeds"));
        }
        Ok(())
    }

    pub fn validate_bias(&self) -> Result<(), CliError> {
        self.check_functions()?;
        self.check_times()?;
        let g = self.grid();
        if g < 8 || !g.is_multiple_of(2) {
            return Err(invalid(format!("quadrature grid {g} must be even and at least 8")));
        }
        Ok(())
    }

    pub fn validate_spectrum(&self) -> Result<(), CliError> {
        let opts = self.spectrum.clone().unwrap_or_default();
        if opts.fixture.is_some() {
            return Ok(());
        }
        self.check_times()?;
        self.check_sizes(2)?;
        self.check_truncation()?;
        if self.seeds.is_empty() {
            return Err(invalid("no seeds"));
        }
        if opts.arcs.is_some() && self.manifold != Manifold::Circle {
            return Err(invalid("arcs are only supported on the circle"));
        }
        Ok(())
    }

    /// Circle, ℓ = 1, f = √2cos(2πx), complete complex.
    pub fn circle_dirichlet() -> Self {
        ExperimentConfig {
            experiment: "circle-l1".into(),
            manifold: Manifold::Circle,
            functions: vec![TestFunction::cos(&[1])],
            n: vec![250, 500, 1000, 2000],
            t: vec![0.04, 0.02, 0.01],
            seeds: (1..=20).collect(),
            truncation: Coverage::Complete,
            kernel: KernelKind::Exact,
            quadrature_grid: None,
            out: None,
            spectrum: None,
            bootstrap: default_bootstrap(),
        }
    }

    /// Torus, ℓ = 2, f₁ = √2cos(2πx), f₂ = √2cos(2πy), τ keeping 99% of
    /// the pairwise kernel mass.
    pub fn torus_dirichlet() -> Self {
        ExperimentConfig {
            experiment: "torus-l2".into(),
            manifold: Manifold::Torus,
            functions: vec![TestFunction::cos(&[1, 0]), TestFunction::cos(&[0, 1])],
            n: vec![200, 400],
            t: vec![0.04, 0.02],
            seeds: (1..=10).collect(),
            truncation: Coverage::MassFraction(0.99),
            ..Self::circle_dirichlet()
        }
    }

    /// Smoothed-energy bias over t for the circle, ℓ = 1.
    pub fn circle_bias() -> Self {
        ExperimentConfig {
            experiment: "circle-bias".into(),
            n: vec![],
            seeds: vec![],
            t: vec![0.04, 0.02, 0.01, 0.005],
            ..Self::circle_dirichlet()
        }
    }

    /// Spectrum of the complete complex on a uniform circle sample.
    pub fn circle_spectrum() -> Self {
        ExperimentConfig {
            experiment: "circle-spectrum".into(),
            manifold: Manifold::Circle,
            functions: vec![],
            n: vec![300],
            t: vec![0.05],
            seeds: vec![1],
            truncation: Coverage::Complete,
            kernel: KernelKind::Exact,
            quadrature_grid: None,
            out: None,
            spectrum: Some(SpectrumOptions { betti_max_level: Some(0), ..SpectrumOptions::default() }),
            bootstrap: default_bootstrap(),
        }
    }

    /// Two separated circle arcs, thresholded so the kernel graph splits.
    pub fn arcs_spectrum() -> Self {
        ExperimentConfig {
            experiment: "arcs-spectrum".into(),
            n: vec![120],
            t: vec![0.001],
            truncation: Coverage::Threshold(1e-3),
            spectrum: Some(SpectrumOptions {
                arcs: Some(vec![(0.0, 0.2), (0.5, 0.7)]),
                betti_max_level: Some(0),
                ..SpectrumOptions::default()
            }),
            ..Self::circle_spectrum()
        }
    }

    /// Applies command-line overrides of n, t and seed.
    pub fn override_with(&mut self, n: Option<usize>, t: Option<f64>, seed: Option<u64>) {
        if let Some(n) = n {
            self.n = vec![n];
        }
        if let Some(t) = t {
            self.t = vec![t];
        }
        if let Some(seed) = seed {
            self.seeds = vec![seed];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::circle_dirichlet().validate_dirichlet().unwrap();
        ExperimentConfig::torus_dirichlet().validate_dirichlet().unwrap();
        ExperimentConfig::circle_bias().validate_bias().unwrap();
        ExperimentConfig::circle_spectrum().validate_spectrum().unwrap();
        ExperimentConfig::arcs_spectrum().validate_spectrum().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::circle_dirichlet();
        c.t = vec![1.5];
        assert!(matches!(c.validate_dirichlet(), Err(CliError::Config(_))));
        let mut c = ExperimentConfig::circle_dirichlet();
        c.n = vec![1];
        assert!(c.validate_dirichlet().is_err());
        let mut c = ExperimentConfig::circle_dirichlet();
        c.functions = vec![TestFunction::cos(&[1, 1])];
        assert!(c.validate_dirichlet().is_err());
        let mut c = ExperimentConfig::circle_bias();
        c.quadrature_grid = Some(7);
        assert!(c.validate_bias().is_err());
        assert!(
            serde_json::from_str::<ExperimentConfig>(r#"{"experiment":"x","manifold":"circle","bogus":1}"#).is_err()
        );
    }

    #[test]
    fn json_round_trip() {
        let c = ExperimentConfig::torus_dirichlet();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn shipped_configs_match_presets() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let cases = [
            ("circle_dirichlet.json", ExperimentConfig::circle_dirichlet()),
            ("torus_dirichlet.json", ExperimentConfig::torus_dirichlet()),
            ("circle_bias.json", ExperimentConfig::circle_bias()),
            ("circle_spectrum.json", ExperimentConfig::circle_spectrum()),
            ("arcs_spectrum.json", ExperimentConfig::arcs_spectrum()),
        ];
        for (file, preset) in cases {
            assert_eq!(ExperimentConfig::load(&dir.join(file)).unwrap(), preset, "{file}");
        }
        let fixture = ExperimentConfig::load(&dir.join("hollow_triangle_spectrum.json")).unwrap();
        fixture.validate_spectrum().unwrap();
    }
}
