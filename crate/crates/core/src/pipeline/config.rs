use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::patchmatch::{MatchMode, PMConfig};
use crate::predictor::PredictorConfig;
use crate::zernike::{DEFAULT_DIAMETER, DEFAULT_MAX_ORDER};

/// Window of the magnitude run. Rotated clones need the extra context to
/// stand out from look-alike texture.
pub const MAGNITUDE_DIAMETER: usize = 25;

/// Everything `detect` needs.
///
/// The text form is one `key = value` pair per line; `#` starts a comment.
/// Keys without a prefix apply to both PatchMatch runs; `pm1.` and `pm2.`
/// target the complex-moment and magnitude runs individually.
///
/// | key | meaning |
/// |-----|---------|
/// | `input_height`, `input_width` | working resolution |
/// | `seed` | base seed; the magnitude run uses `seed + 1` |
/// | `threads` | worker threads, 0 for all cores |
/// | `iterations`, `beta`, `mode`, `search_radius`, `exclusion_radius` | PatchMatch |
/// | `error_scale`, `sharpness`, `min_region_area`, `consistency_tol`, `binarize_threshold`, `max_match_cost` | predictor |
/// | `zernike_diameter`, `zernike_order` | moment window; `pm1.`/`pm2.` prefixes set the window of one run |
/// | `scorer` | path to trained scorer parameters |
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub pm1: PMConfig,
    pub pm2: PMConfig,
    pub predictor: PredictorConfig,
    /// Moment window of the complex and the magnitude run.
    pub zernike_diameter: [usize; 2],
    pub zernike_order: u32,
    pub scorer: Option<PathBuf>,
    pub seed: u64,
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut cfg = Self {
            input_height: 448,
            input_width: 448,
            pm1: PMConfig {
                iterations: 30,
                mode: MatchMode::Hard,
                ..PMConfig::default()
            },
            pm2: PMConfig {
                iterations: 45,
                mode: MatchMode::Hard,
                ..PMConfig::default()
            },
            predictor: PredictorConfig::tuned(),
            zernike_diameter: [DEFAULT_DIAMETER, MAGNITUDE_DIAMETER],
            zernike_order: DEFAULT_MAX_ORDER,
            scorer: None,
            seed: 0,
            threads: 0,
        };
        cfg.set_seed(0);
        cfg
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

fn set_pm(pm: &mut PMConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "iterations" => pm.iterations = parse(key, value)?,
        "beta" => pm.beta = parse(key, value)?,
        "mode" => pm.mode = value.parse::<MatchMode>()?,
        "search_radius" => pm.search_radius = parse(key, value)?,
        "exclusion_radius" => pm.exclusion_radius = parse(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

impl PipelineConfig {
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.pm1.seed = seed;
        self.pm2.seed = seed.wrapping_add(1);
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.predictor;
        match key {
            "input_height" => self.input_height = parse(key, value)?,
            "input_width" => self.input_width = parse(key, value)?,
            "seed" => self.set_seed(parse(key, value)?),
            "threads" => self.threads = parse(key, value)?,
            "error_scale" => p.error_scale = parse(key, value)?,
            "sharpness" => p.sharpness = parse(key, value)?,
            "min_region_area" => p.min_region_area = parse(key, value)?,
            "consistency_tol" => p.consistency_tol = parse(key, value)?,
            "binarize_threshold" => p.binarize_threshold = parse(key, value)?,
            "max_match_cost" => p.max_match_cost = parse(key, value)?,
            "zernike_diameter" => self.zernike_diameter = [parse(key, value)?; 2],
            "pm1.zernike_diameter" => self.zernike_diameter[0] = parse(key, value)?,
            "pm2.zernike_diameter" => self.zernike_diameter[1] = parse(key, value)?,
            "zernike_order" => self.zernike_order = parse(key, value)?,
            "scorer" => self.scorer = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            _ => {
                let handled = if let Some(k) = key.strip_prefix("pm1.") {
                    set_pm(&mut self.pm1, k, value)?
                } else if let Some(k) = key.strip_prefix("pm2.") {
                    set_pm(&mut self.pm2, k, value)?
                } else {
                    set_pm(&mut self.pm1, key, value)? && set_pm(&mut self.pm2, key, value)?
                };
                if !handled {
                    return Err(Error::Config(format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::parse_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for d in self.zernike_diameter {
            if self.input_height < d || self.input_width < d {
                return Err(Error::Config("working size must be at least the Zernike window".into()));
            }
            if d % 2 == 0 || d < 3 {
                return Err(Error::Config("Zernike window must be odd and at least 3".into()));
            }
        }
        self.pm1.validate()?;
        self.pm2.validate()?;
        self.predictor.validate()
    }
}
