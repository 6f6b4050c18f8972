//! Tunable parameters with documented defaults.
//!
//! Every threshold that shapes a verdict lives here rather than in code, so a
//! single plain-text config file (parsed by the CLI) can rescale the whole
//! pipeline. The defaults are the calibrated operating point used throughout
//! the test suites.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub entropy: EntropyConfig,
    pub jnd: JndConfig,
    pub detect: DetectConfig,
    pub scrub: ScrubConfig,
    pub embed: EmbedConfig,
}

/// Entropy analysis and placement selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntropyConfig {
    /// Tile edge for entropy maps; also the stride of the placement scan.
    pub tile_size: u32,
    /// Feasibility threshold in bits: windows above this are considered too
    /// busy to carry a payload that survives downstream editing.
    pub threshold_bits: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            tile_size: 32,
            threshold_bits: 3.0,
        }
    }
}

/// Luminance-adaptation + texture-masking JND model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JndConfig {
    /// Threshold at black backgrounds (dark regions tolerate large changes).
    pub t_dark: f64,
    /// Threshold floor at mid-gray, the most sensitive luma range.
    pub t_mid: f64,
    /// Linear rise of the threshold above mid-gray, per luma step.
    pub white_slope: f64,
    /// Texture masking: threshold contribution per unit of local gradient.
    pub masking_slope: f64,
    /// jnd_ratio at or above this is classified invisible.
    pub invisible_cutoff: f64,
    /// jnd_ratio at or below this is classified visible.
    pub visible_cutoff: f64,
}

impl Default for JndConfig {
    fn default() -> Self {
        JndConfig {
            t_dark: 17.0,
            t_mid: 3.0,
            white_slope: 3.0 / 128.0,
            masking_slope: 0.12,
            invisible_cutoff: 0.95,
            visible_cutoff: 0.50,
        }
    }
}

/// Paired and blind payload detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    /// Radius of the median background estimate used by blind detection.
    pub median_radius: u32,
    /// Residual band lower bound; 1 admits strength-1 payloads.
    pub blind_min: u8,
    /// Residual band upper bound; excludes genuine image edges.
    pub blind_max: u8,
    /// Minimum connected-component area (pixels) for a detection.
    pub min_area: usize,
    /// IoU required before claiming a payload identity.
    pub iou_threshold: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            median_radius: 4,
            blind_min: 1,
            blind_max: 12,
            min_area: 64,
            iou_threshold: 0.5,
        }
    }
}

/// Background segmentation and regeneration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScrubConfig {
    /// Maximum 5x5 local luma standard deviation for a pixel to count as
    /// smooth background.
    pub sigma_max: f64,
    /// Standard deviation of the Gaussian noise added to the regenerated
    /// background; 0.7 keeps the regeneration below the mid-gray JND floor.
    pub noise_std: f64,
    /// Seed of the regeneration noise stream.
    pub noise_seed: u64,
}

impl Default for ScrubConfig {
    fn default() -> Self {
        ScrubConfig {
            sigma_max: 2.0,
            noise_std: 0.7,
            noise_seed: 1_000_003,
        }
    }
}

/// Injection defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    /// Default per-channel offset; 2 is the stealthy operating point.
    pub default_strength: u8,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            default_strength: 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_operating_point() {
        let cfg = Config::default();
        assert_eq!(cfg.entropy.tile_size, 32);
        assert_eq!(cfg.entropy.threshold_bits, 3.0);
        assert_eq!(cfg.jnd.t_dark, 17.0);
        assert_eq!(cfg.jnd.t_mid, 3.0);
        assert_eq!(cfg.jnd.masking_slope, 0.12);
        assert_eq!(cfg.jnd.invisible_cutoff, 0.95);
        assert_eq!(cfg.jnd.visible_cutoff, 0.50);
        assert_eq!(cfg.detect.median_radius, 4);
        assert_eq!(cfg.detect.blind_min, 1);
        assert_eq!(cfg.detect.blind_max, 12);
        assert_eq!(cfg.detect.min_area, 64);
        assert_eq!(cfg.detect.iou_threshold, 0.5);
        assert_eq!(cfg.scrub.sigma_max, 2.0);
        assert_eq!(cfg.scrub.noise_std, 0.7);
        assert_eq!(cfg.embed.default_strength, 2);
    }
}
