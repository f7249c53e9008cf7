//! JSON scenario description shared by every subcommand.

use crate::CliError;
use minislot::bounds::MIN_BLOCKS;
use minislot::channel::{Doppler, PowerDelayProfile};
use minislot::constellation::Constellation;
use minislot::fbl::{LinkScenario, MIN_SAMPLES};
use minislot::grid::{MiniSlotGrid, Scheme};
use minislot::special::from_db;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A scalar or an ascending list of sweep points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Scalar(f64),
    List(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Scalar(x) => vec![*x],
            Sweep::List(v) => v.clone(),
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self {
            Sweep::Scalar(x) => Some(*x),
            Sweep::List(v) if v.len() == 1 => Some(v[0]),
            Sweep::List(_) => None,
        }
    }

    fn check(&self, name: &str) -> Result<(), CliError> {
        let v = self.values();
        if v.is_empty() {
            return Err(CliError::Config(format!("{name} sweep is empty")));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("{name} value {x} is not finite")));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!(
                "{name} sweep must be strictly ascending"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    #[default]
    Psk,
    Qam,
}

/// One scheme with its alphabet size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    #[serde(rename = "M")]
    pub order: u32,
    #[serde(default)]
    pub modulation: Modulation,
}

impl SchemeSpec {
    pub fn constellation(&self) -> Result<Constellation, CliError> {
        let c = match self.modulation {
            Modulation::Psk => Constellation::psk(self.order),
            Modulation::Qam => Constellation::qam(self.order),
        };
        c.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdpSpec {
    #[serde(rename = "L")]
    pub paths: usize,
    #[serde(default = "default_decay")]
    pub decay: f64,
}

impl Default for PdpSpec {
    fn default() -> Self {
        Self { paths: 5, decay: 1.0 }
    }
}

fn default_decay() -> f64 {
    1.0
}

fn default_delta_sub() -> usize {
    2
}

fn default_samples() -> usize {
    100_000
}

fn default_blocks() -> usize {
    MIN_BLOCKS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "K")]
    pub subcarriers: usize,
    #[serde(rename = "T")]
    pub symbols: usize,
    #[serde(default = "default_delta_sub")]
    pub delta_sub: usize,
    #[serde(default)]
    pub high_mobility: bool,
    #[serde(default)]
    pub pdp: PdpSpec,
    #[serde(rename = "fdTs")]
    pub fd_ts: Sweep,
    pub gamma_db: Sweep,
    #[serde(rename = "B")]
    pub payload_bits: u32,
    pub schemes: Vec<SchemeSpec>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Blocks simulated per point for the IS and DT bounds.
    #[serde(default = "default_blocks")]
    pub bound_blocks: usize,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.fd_ts.check("fdTs")?;
        self.gamma_db.check("gammaDb")?;
        for fd in self.fd_ts.values() {
            Doppler::new(fd).map_err(config)?;
        }
        if self.payload_bits == 0 {
            return Err(CliError::Config("B must be at least 1".into()));
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(CliError::Config(format!(
                "nSamples must be at least {MIN_SAMPLES}"
            )));
        }
        if self.bound_blocks < MIN_BLOCKS {
            return Err(CliError::Config(format!(
                "boundBlocks must be at least {MIN_BLOCKS}"
            )));
        }
        let pdp = self.pdp()?;
        pdp.check_subcarriers(self.subcarriers).map_err(config)?;
        for s in &self.schemes {
            let c = s.constellation()?;
            if s.scheme.is_differential() && !c.is_psk() {
                return Err(CliError::Config(format!(
                    "{} needs a PSK alphabet, got {c}",
                    s.scheme
                )));
            }
            self.grid(s.scheme)?;
        }
        Ok(())
    }

    pub fn pdp(&self) -> Result<PowerDelayProfile, CliError> {
        PowerDelayProfile::exponential(self.pdp.paths, self.pdp.decay).map_err(config)
    }

    /// Grid seen by `scheme`; only the coherent scheme carries pilots.
    pub fn grid(&self, scheme: Scheme) -> Result<MiniSlotGrid, CliError> {
        let g = if scheme.is_differential() {
            MiniSlotGrid::new(self.subcarriers, self.symbols, None)
        } else {
            MiniSlotGrid::standard(self.subcarriers, self.symbols, self.high_mobility, self.delta_sub)
        };
        g.map_err(config)
    }

    pub fn link(&self, scheme: Scheme, fd_ts: f64, gamma_db: f64) -> Result<LinkScenario, CliError> {
        Ok(LinkScenario {
            grid: self.grid(scheme)?,
            pdp: self.pdp()?,
            doppler: Doppler::new(fd_ts).map_err(config)?,
            gamma: from_db(gamma_db),
            payload_bits: self.payload_bits,
            n_samples: self.n_samples,
            seed: self.seed,
        })
    }
}

fn config(e: minislot::Error) -> CliError {
    CliError::Config(e.to_string())
}
