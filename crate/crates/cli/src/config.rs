//! TOML run configuration. Every section and key is optional; missing values
//! take the defaults of the reference study (cosine wall, δ = 0.05, H = 10,
//! P2, 32 segments per period).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;
use walllaw::cell::{CellResolution, MIN_TRUNCATION};
use walllaw::fem::ElementOrder;
use walllaw::lab::{ExperimentPlan, FamilyTag, DEFAULT_EPSILONS};
use walllaw::profile::RoughnessProfile;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub profile: ProfileSection,
    pub problem: ProblemSection,
    pub cell: CellSection,
    pub mesh: MeshSection,
    pub experiment: ExperimentSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    /// `cosine`, `flat` or `tabulated`.
    pub kind: String,
    pub delta: f64,
    /// One sample of `f` per line over `[0, 2π)`, for `tabulated`.
    pub samples_file: Option<PathBuf>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            kind: "cosine".into(),
            delta: 0.05,
            samples_file: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub c: f64,
    pub epsilons: Vec<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilons: DEFAULT_EPSILONS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellSection {
    pub height: f64,
    pub segments: usize,
    pub refinements: usize,
    pub degree: usize,
    pub trace_samples: usize,
    pub k_max: usize,
    /// Truncation heights for the sensitivity table.
    pub sweep: Vec<f64>,
}

impl Default for CellSection {
    fn default() -> Self {
        Self {
            height: 10.0,
            segments: 32,
            refinements: 2,
            degree: 2,
            trace_samples: 256,
            k_max: 32,
            sweep: vec![4.0, 6.0, 8.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub segments: usize,
    pub refinements: usize,
    pub reference_extra_refinements: usize,
    pub degree: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self {
            segments: 32,
            refinements: 1,
            reference_extra_refinements: 1,
            degree: 2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub families: Vec<String>,
    pub domain_length: f64,
    pub h1: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            families: FamilyTag::TABLE.iter().map(|f| f.name().to_owned()).collect(),
            domain_length: 10.0,
            h1: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

/// Everything a command needs, checked before any solve starts.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub profile: RoughnessProfile,
    pub cell: CellResolution,
    pub cell_height: f64,
    pub sweep: Vec<f64>,
    pub plan: ExperimentPlan,
    pub out: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Validates and converts; `base` resolves relative sample paths.
    pub fn resolve(&self, base: &Path) -> anyhow::Result<Resolved> {
        let p = &self.profile;
        let profile = match p.kind.as_str() {
            "cosine" => RoughnessProfile::cosine(p.delta)?,
            "flat" => RoughnessProfile::flat(p.delta)?,
            "tabulated" => {
                let Some(file) = &p.samples_file else {
                    bail!("profile.kind = \"tabulated\" needs profile.samples_file");
                };
                let path = base.join(file);
                let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
                let samples = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .enumerate()
                    .map(|(i, l)| {
                        l.parse::<f64>()
                            .with_context(|| format!("{}: sample {} is not a number: `{l}`", path.display(), i + 1))
                    })
                    .collect::<anyhow::Result<Vec<f64>>>()?;
                RoughnessProfile::tabulated(samples, p.delta, path.display().to_string())?
            }
            other => bail!("unknown profile.kind `{other}` (expected cosine, flat or tabulated)"),
        };
        let order = |d: usize, key: &str| {
            ElementOrder::from_degree(d).with_context(|| format!("{key} must be 1 or 2, got {d}"))
        };
        let c = &self.cell;
        if c.height < MIN_TRUNCATION {
            bail!("cell.height must be at least {MIN_TRUNCATION}, got {}", c.height);
        }
        if c.trace_samples < 2 * c.k_max + 2 {
            bail!(
                "cell.trace_samples ({}) must be at least 2 * k_max + 2 ({})",
                c.trace_samples,
                2 * c.k_max + 2
            );
        }
        let cell = CellResolution {
            segments: c.segments,
            refinements: c.refinements,
            order: order(c.degree, "cell.degree")?,
            trace_samples: c.trace_samples,
            k_max: c.k_max,
            ..CellResolution::default()
        };
        let families = self
            .experiment
            .families
            .iter()
            .map(|f| f.parse::<FamilyTag>())
            .collect::<walllaw::Result<Vec<_>>>()?;
        if self.run.jobs == 0 {
            bail!("run.jobs must be at least 1");
        }
        let mut plan = ExperimentPlan {
            profile: profile.clone(),
            c: self.problem.c,
            epsilons: self.problem.epsilons.clone(),
            families,
            cell_height: c.height,
            cell_resolution: cell.clone(),
            segments: self.mesh.segments,
            refinements: self.mesh.refinements,
            reference_extra_refinements: self.mesh.reference_extra_refinements,
            order: order(self.mesh.degree, "mesh.degree")?,
            domain_length: self.experiment.domain_length,
            with_h1: self.experiment.h1,
            jobs: self.run.jobs,
        };
        plan.validate()?;
        Ok(Resolved {
            profile,
            cell,
            cell_height: c.height,
            sweep: c.sweep.clone(),
            plan,
            out: self.run.out.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default_study() {
        let r = Config::parse("").unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(r.plan.epsilons.len(), 8);
        assert_eq!(r.plan.families.len(), 6);
        assert_eq!(r.cell_height, 10.0);
        assert_eq!(r.profile.delta(), 0.05);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[problem]\nepsilon = [0.1]\n").is_err());
    }

    #[test]
    fn short_epsilon_list_fails_fast() {
        let cfg = Config::parse("[problem]\nepsilons = [0.1, 0.2]\n").unwrap();
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert!(format!("{err:#}").contains("≥ 4"), "{err:#}");
    }
}
