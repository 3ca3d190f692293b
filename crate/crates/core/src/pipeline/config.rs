use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::extractor::ExtractorConfig;
use crate::color::CpMode;
use crate::dsm::{DsmConfig, ExchangePolicy, MemoryLayout, DEFAULT_CAPACITY};
use crate::error::{Error, Result};
use crate::stats::Epsilon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpModeName {
    Uniform6,
    Coinflip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpSection {
    pub enabled: bool,
    pub mode: CpModeName,
    /// Probability of keeping the raw image under `coinflip`.
    pub p_raw: f64,
}

impl Default for CpSection {
    fn default() -> Self {
        Self {
            enabled: true,
            mode: CpModeName::Coinflip,
            p_raw: 0.5,
        }
    }
}

impl CpSection {
    pub fn mode(&self) -> CpMode {
        match self.mode {
            CpModeName::Uniform6 => CpMode::Uniform6,
            CpModeName::Coinflip => CpMode::CoinFlip { p_raw: self.p_raw },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsmSection {
    pub enabled: bool,
    /// Block whose output is restyled (0 = after the first block).
    pub placement: usize,
    pub exchange: ExchangePolicy,
    pub layout: MemoryLayout,
    pub capacity: usize,
    pub apply_probability: f64,
    pub eps: Epsilon,
}

impl Default for DsmSection {
    fn default() -> Self {
        Self {
            enabled: true,
            placement: 0,
            exchange: ExchangePolicy::Exchange,
            layout: MemoryLayout::Dual,
            capacity: DEFAULT_CAPACITY,
            apply_probability: 1.0,
            eps: Epsilon::DEFAULT,
        }
    }
}

impl DsmSection {
    pub fn config(&self) -> DsmConfig {
        DsmConfig {
            exchange: self.exchange,
            layout: self.layout,
            capacity: self.capacity,
            apply_probability: self.apply_probability,
            eps: self.eps,
        }
    }
}

/// File locations used by the command-line front end.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub images: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub export_styles: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    pub preseed: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub cp: CpSection,
    pub dsm: DsmSection,
    pub extractor: ExtractorConfig,
    pub paths: PathsSection,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.extractor.validate()?;
        self.cp.mode().validate()?;
        self.dsm.config().validate()?;
        if self.dsm.placement >= self.extractor.blocks() {
            return Err(Error::InvalidConfig(format!(
                "placement {} but the extractor has {} blocks",
                self.dsm.placement,
                self.extractor.blocks()
            )));
        }
        Ok(())
    }

    /// Channels of the restyled feature map.
    pub fn feature_channels(&self) -> usize {
        self.extractor.channels[self.dsm.placement]
    }
}

/// Reads a JSON configuration; every field is optional.
pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}
