//! Experiment configuration: one flat TOML file mapping to solver,
//! estimate and convergence parameters. Unknown keys are rejected, and
//! every run writes the resolved config next to its outputs.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sqg::field::SpectrumRecipe;
use sqg::solver::StepScheme;
use sqg::{SpectralField, TorusGrid};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub gamma: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub seed: u64,
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub holder: HolderConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub lowerbounds: LowerBoundsConfig,
}

fn default_cfl() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub a: f64,
    /// Active band [k_min, k_max] of |k|.
    pub band: [u32; 2],
    pub amplitude: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    /// Wavenumbers of cosine modes.
    #[serde(default)]
    pub modes: Vec<[i64; 2]>,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub interval: f64,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { kappa: 1.0 }
    }
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderConfig {
    /// Overrides the β derived from K∞ when set.
    pub beta: Option<f64>,
    #[serde(default = "default_c3")]
    pub c3: f64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig {
            beta: None,
            c3: 64.0,
        }
    }
}

fn default_c3() -> f64 {
    64.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    /// Critical-flow spin-up applied to the shared data first.
    pub pre_transient: Option<f64>,
    #[serde(default = "default_spread")]
    pub spread_limit: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            gammas: default_gammas(),
            pre_transient: None,
            spread_limit: default_spread(),
        }
    }
}

fn default_gammas() -> Vec<f64> {
    vec![1.4, 1.2, 1.1, 1.05]
}

fn default_spread() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundsConfig {
    #[serde(default = "default_lb_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_images")]
    pub images: usize,
    #[serde(default = "default_shifts")]
    pub shifts: Vec<[i64; 2]>,
    /// Ensemble size of random fields.
    #[serde(default = "default_fields")]
    pub fields: usize,
}

impl Default for LowerBoundsConfig {
    fn default() -> Self {
        LowerBoundsConfig {
            gammas: default_lb_gammas(),
            images: default_images(),
            shifts: default_shifts(),
            fields: default_fields(),
        }
    }
}

fn default_lb_gammas() -> Vec<f64> {
    vec![1.2, 1.5, 1.8]
}

fn default_images() -> usize {
    3
}

fn default_shifts() -> Vec<[i64; 2]> {
    vec![[4, 0], [0, 4], [3, 3]]
}

fn default_fields() -> usize {
    5
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n < 8 || !self.n.is_multiple_of(2) {
            bail!("n = {} must be even and >= 8", self.n);
        }
        if !(1.0..2.0).contains(&self.gamma) {
            bail!("gamma = {} outside the admissible range [1, 2)", self.gamma);
        }
        if self.epsilon < 0.0 {
            bail!("epsilon = {} must be nonnegative", self.epsilon);
        }
        if !(0.0 < self.cfl && self.cfl <= 1.0) {
            bail!("cfl = {} outside (0, 1]", self.cfl);
        }
        if self.t_end <= 0.0 {
            bail!("T = {} must be positive", self.t_end);
        }
        if self.output.interval <= 0.0 {
            bail!("output.interval = {} must be positive", self.output.interval);
        }
        if self.forcing.modes.len() != self.forcing.amplitudes.len() {
            bail!(
                "forcing.modes ({}) and forcing.amplitudes ({}) differ in length",
                self.forcing.modes.len(),
                self.forcing.amplitudes.len()
            );
        }
        if self.forcing.modes.contains(&[0, 0]) {
            bail!("forcing.modes must not contain the mean mode [0, 0]");
        }
        if let Some(beta) = self.holder.beta {
            if !(0.0 < beta && beta <= 0.25) {
                bail!("holder.beta = {beta} outside (0, 1/4]");
            }
        }
        if self.holder.c3 < 64.0 {
            bail!("holder.c3 = {} below the admissible minimum 64", self.holder.c3);
        }
        for g in &self.converge.gammas {
            if !(1.0 < *g && *g <= 1.5) {
                bail!("converge.gammas entry {g} outside (1, 3/2]");
            }
        }
        for g in &self.lowerbounds.gammas {
            if !(1.0 < *g && *g < 2.0) {
                bail!("lowerbounds.gammas entry {g} outside (1, 2)");
            }
        }
        if self.lowerbounds.images < 1 {
            bail!("lowerbounds.images must be >= 1");
        }
        Ok(())
    }

    pub fn grid(&self) -> anyhow::Result<TorusGrid> {
        Ok(TorusGrid::new(self.n)?)
    }

    pub fn recipe(&self) -> SpectrumRecipe {
        SpectrumRecipe {
            decay: self.spectrum.a,
            k_min: self.spectrum.band[0],
            k_max: self.spectrum.band[1],
            amplitude: self.spectrum.amplitude,
            seed: self.seed,
        }
    }

    pub fn initial_data(&self) -> anyhow::Result<SpectralField> {
        Ok(sqg::field::generate_field(&self.recipe(), self.grid()?)?)
    }

    pub fn forcing_field(&self) -> anyhow::Result<SpectralField> {
        let grid = self.grid()?;
        let mut f = SpectralField::zeros(grid);
        for (mode, amp) in self.forcing.modes.iter().zip(&self.forcing.amplitudes) {
            let h = SpectralField::harmonic(grid, (mode[0], mode[1]), *amp, 0.0);
            f.coeffs_mut().zip_mut_with(h.coeffs(), |a, b| *a += b);
        }
        Ok(f)
    }

    pub fn scheme(&self) -> StepScheme {
        StepScheme {
            cfl: self.cfl,
            ..Default::default()
        }
    }

    /// Serializes the fully resolved configuration next to the outputs.
    pub fn write_resolved(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = toml::to_string_pretty(self).context("serializing resolved config")?;
        std::fs::write(dir.join("resolved_config.toml"), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n = 32
gamma = 1.5
T = 0.1
seed = 7
[spectrum]
a = 1.0
band = [1, 4]
amplitude = 0.5
[output]
interval = 0.05
dir = "out"
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.cfl, 0.5);
        assert_eq!(cfg.verify.kappa, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\nunknown_key = 3\n");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn out_of_range_gamma_names_the_key() {
        let bad = MINIMAL.replace("gamma = 1.5", "gamma = 2.5");
        let cfg: ExperimentConfig = toml::from_str(&bad).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("gamma"), "message: {err}");
    }
}
