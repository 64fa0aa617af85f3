//! Differentiable cross-scale PatchMatch.
//!
//! Every round builds 17 candidate offsets per pixel (the carried-over
//! offset, four zero-order and eight first-order propagations realized as
//! whole-map circular shifts, and four random-search perturbations), scores
//! each candidate by the best negated L1 feature distance over all ordered
//! pairs of pyramid levels, and keeps either the argmax candidate (hard
//! mode) or the softmax-weighted mean of candidates (soft mode).
//!
//! All randomness comes from a counter-keyed ChaCha stream per
//! `(seed, round, pixel)`, so results do not depend on how rows are
//! scheduled across threads.

mod evaluate;
mod field;
mod propagate;
mod search;

pub use evaluate::{evaluate, soft_backward};
pub use field::OffsetField;
pub use propagate::{propagate, STENCIL};
pub use search::{init_offset_at, init_offsets, random_search};

use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::imagecore::{BilinearTap, FeatureMap, ScalarMap};

/// Number of candidates evaluated per pixel and round.
pub const NUM_CANDIDATES: usize = 17;
/// Index of the carried-over offset within a [`CandidateSet`].
pub const CARRY: usize = 0;
/// Indices of the zero-order candidates `a, c, e, g`.
pub const ZERO_ORDER: std::ops::Range<usize> = 1..5;
/// Indices of the first-order candidates `aa` through `hh`.
pub const FIRST_ORDER: std::ops::Range<usize> = 5..13;
/// Indices of the random-search candidates.
pub const RANDOM: std::ops::Range<usize> = 13..17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Soft,
    Hard,
}

impl std::str::FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(MatchMode::Soft),
            "hard" => Ok(MatchMode::Hard),
            other => Err(Error::Config(format!("mode must be soft or hard, got `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PMConfig {
    pub iterations: usize,
    /// Softmax temperature.
    pub beta: f64,
    /// Optional per-round temperatures; rounds past its end use `beta`.
    pub beta_schedule: Vec<f64>,
    /// L-infinity radius of random-search perturbations, in pixels.
    pub search_radius: u32,
    /// Offsets with L-infinity norm below this are never selected.
    pub exclusion_radius: u32,
    pub mode: MatchMode,
    pub seed: u64,
}

impl Default for PMConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            beta: 20.0,
            beta_schedule: Vec::new(),
            search_radius: 50,
            exclusion_radius: 8,
            mode: MatchMode::Soft,
            seed: 0,
        }
    }
}

impl PMConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("PatchMatch needs at least one iteration".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) || self.beta_schedule.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Config("softmax temperature must be positive".into()));
        }
        Ok(())
    }

    pub fn beta_at(&self, round: usize) -> f64 {
        self.beta_schedule.get(round).copied().unwrap_or(self.beta)
    }

    #[inline]
    pub(crate) fn excluded(&self, d: (f64, f64)) -> bool {
        d.0.abs().max(d.1.abs()) < self.exclusion_radius as f64
    }
}

/// One pyramid level's feature map and its scale relative to the offset
/// field's grid.
#[derive(Clone, Copy, Debug)]
pub struct Level<'a> {
    pub map: &'a FeatureMap,
    pub scale: f64,
}

/// Feature maps of all pyramid levels. Offsets live on the grid of the
/// scale-1 level; lookups into another level map coordinates through
/// [`crate::imagecore::level_coord`].
///
/// Every level is also kept resampled onto the base grid, so integer
/// offsets read one contiguous `levels x depth` block per pixel instead of
/// interpolating.
#[derive(Clone, Debug)]
pub struct LevelSet<'a> {
    levels: Vec<Level<'a>>,
    height: usize,
    width: usize,
    grid: Vec<f64>,
}

impl<'a> LevelSet<'a> {
    pub fn new(levels: Vec<Level<'a>>) -> Result<Self> {
        let base = levels
            .iter()
            .find(|l| l.scale == 1.0)
            .ok_or_else(|| Error::InvalidArgument("a scale-1 feature level is required".into()))?;
        let (height, width) = (base.map.height(), base.map.width());
        let depth = base.map.depth();
        if levels.len() > 3 {
            return Err(Error::InvalidArgument("at most three feature levels".into()));
        }
        for l in &levels {
            if l.map.depth() != depth {
                return Err(Error::ShapeMismatch("feature levels differ in depth".into()));
            }
            let eh = ((height as f64 * l.scale).round() as usize).max(1);
            let ew = ((width as f64 * l.scale).round() as usize).max(1);
            if (l.map.height(), l.map.width()) != (eh, ew) {
                return Err(Error::ShapeMismatch(format!(
                    "level at scale {} is {}x{}, expected {eh}x{ew}",
                    l.scale,
                    l.map.height(),
                    l.map.width()
                )));
            }
        }
        Ok(Self::with_grid(levels, height, width))
    }

    /// A single level at scale 1.
    pub fn single(map: &'a FeatureMap) -> Self {
        Self::with_grid(vec![Level { map, scale: 1.0 }], map.height(), map.width())
    }

    fn with_grid(levels: Vec<Level<'a>>, height: usize, width: usize) -> Self {
        let block = levels.len() * levels[0].map.depth();
        let mut grid = vec![0.0; height * width * block];
        let mut set = Self {
            levels,
            height,
            width,
            grid: Vec::new(),
        };
        grid.par_chunks_mut(width * block).enumerate().for_each(|(i, row)| {
            let mut taps = vec![BilinearTap::new(1, 1, 0.0, 0.0); set.levels.len()];
            for (j, px) in row.chunks_mut(block).enumerate() {
                evaluate::sample_levels(&set, j as f64, i as f64, px, &mut taps);
            }
        });
        set.grid = grid;
        set
    }

    /// Features of every level at base-grid pixel `(i, j)`, level-major.
    #[inline]
    pub(crate) fn block(&self, i: usize, j: usize) -> &[f64] {
        let b = self.levels.len() * self.depth();
        let at = (i * self.width + j) * b;
        &self.grid[at..at + b]
    }

    pub fn levels(&self) -> &[Level<'a>] {
        &self.levels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn depth(&self) -> usize {
        self.levels[0].map.depth()
    }
}

/// The 17 candidate fields of one round, in index order: carry-over,
/// zero-order `a, c, e, g`, first-order `aa` through `hh`, random `r1..r4`.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    fields: Vec<OffsetField>,
}

impl CandidateSet {
    pub fn new(fields: Vec<OffsetField>) -> Result<Self> {
        if fields.len() != NUM_CANDIDATES {
            return Err(Error::InvalidArgument(format!(
                "a candidate set holds exactly {NUM_CANDIDATES} fields, got {}",
                fields.len()
            )));
        }
        let dims = fields[0].dims();
        if fields.iter().any(|f| f.dims() != dims) {
            return Err(Error::ShapeMismatch("candidate fields differ in size".into()));
        }
        let mut fields = fields;
        for f in &mut fields {
            f.clamp_all();
        }
        Ok(Self { fields })
    }

    /// Carry-over, propagated and random-search candidates for one round.
    pub fn build(current: &OffsetField, cfg: &PMConfig, round: usize) -> Self {
        let mut fields = Vec::with_capacity(NUM_CANDIDATES);
        fields.push(current.clone());
        fields.extend(propagate(current));
        fields.extend(random_search(current, cfg, round));
        Self { fields }
    }

    pub fn fields(&self) -> &[OffsetField] {
        &self.fields
    }

    pub fn dims(&self) -> (usize, usize) {
        self.fields[0].dims()
    }
}

/// Output of one evaluation round.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub offsets: OffsetField,
    /// Best candidate score per pixel (a negated L1 distance, or negative
    /// infinity when every candidate was excluded).
    pub scores: ScalarMap,
    /// Index of the best candidate per pixel.
    pub winner: Vec<u8>,
    /// Ordered pair of level indices `(source level, target level)` that
    /// achieved the best candidate's score.
    pub scale_pair: Vec<(u8, u8)>,
}

/// Iterated PatchMatch over a fixed set of feature levels.
pub struct PatchMatch<'a> {
    levels: LevelSet<'a>,
    cfg: PMConfig,
    field: OffsetField,
    round: usize,
    last: Option<MatchResult>,
}

impl<'a> PatchMatch<'a> {
    pub fn new(levels: LevelSet<'a>, cfg: PMConfig) -> Result<Self> {
        cfg.validate()?;
        let (h, w) = levels.dims();
        let field = init_offsets(h, w, &cfg)?;
        Ok(Self {
            levels,
            cfg,
            field,
            round: 0,
            last: None,
        })
    }

    /// Starts from a caller-provided field instead of a random one.
    pub fn with_initial(levels: LevelSet<'a>, cfg: PMConfig, mut field: OffsetField) -> Result<Self> {
        cfg.validate()?;
        if field.dims() != levels.dims() {
            return Err(Error::ShapeMismatch("initial field does not match features".into()));
        }
        field.clamp_all();
        Ok(Self {
            levels,
            cfg,
            field,
            round: 0,
            last: None,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn field(&self) -> &OffsetField {
        &self.field
    }

    /// Runs one propagate, random-search and evaluate round.
    pub fn step(&mut self) -> &MatchResult {
        let cands = CandidateSet::build(&self.field, &self.cfg, self.round);
        let res = evaluate::evaluate_round(&cands, &self.levels, &self.cfg, self.round, self.last.as_ref());
        self.field = res.offsets.clone();
        self.round += 1;
        self.last.insert(res)
    }

    /// Runs the configured number of rounds and returns the final result.
    pub fn finish(mut self) -> MatchResult {
        while self.round < self.cfg.iterations {
            self.step();
        }
        self.last.expect("at least one round ran")
    }
}

/// Runs `cfg.iterations` rounds from a seeded random initialization.
pub fn run(levels: LevelSet<'_>, cfg: &PMConfig) -> Result<MatchResult> {
    Ok(PatchMatch::new(levels, cfg.clone())?.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(PMConfig::default().validate().is_ok());
        let bad = PMConfig { iterations: 0, ..PMConfig::default() };
        assert!(bad.validate().is_err());
        let bad = PMConfig { beta: 0.0, ..PMConfig::default() };
        assert!(bad.validate().is_err());
        let sched = PMConfig { beta_schedule: vec![1.0, 5.0], ..PMConfig::default() };
        assert_eq!((sched.beta_at(0), sched.beta_at(1), sched.beta_at(7)), (1.0, 5.0, 20.0));
        assert_eq!("hard".parse::<MatchMode>().unwrap(), MatchMode::Hard);
        assert!("medium".parse::<MatchMode>().is_err());
    }

    #[test]
    fn level_set_checks_dims() {
        let o = FeatureMap::zeros(8, 8, 2);
        let b = FeatureMap::zeros(6, 6, 2);
        let bad = FeatureMap::zeros(5, 6, 2);
        assert!(LevelSet::new(vec![Level { map: &o, scale: 1.0 }, Level { map: &b, scale: 0.75 }]).is_ok());
        assert!(LevelSet::new(vec![Level { map: &o, scale: 1.0 }, Level { map: &bad, scale: 0.75 }]).is_err());
        assert!(LevelSet::new(vec![Level { map: &b, scale: 0.75 }]).is_err());
    }

    #[test]
    fn candidate_set_size_is_enforced() {
        let f = OffsetField::zeros(4, 4);
        assert!(CandidateSet::new(vec![f.clone(); 16]).is_err());
        assert!(CandidateSet::new(vec![f; 17]).is_ok());
    }

    #[test]
    fn one_iteration_runs_exactly_one_round() {
        let fm = FeatureMap::from_vec(6, 6, 1, (0..36).map(|v| v as f64).collect()).unwrap();
        let cfg = PMConfig { iterations: 1, exclusion_radius: 1, ..PMConfig::default() };
        let mut pm = PatchMatch::new(LevelSet::single(&fm), cfg.clone()).unwrap();
        let init = pm.field().clone();
        let one = pm.step().clone();
        assert_eq!(pm.round(), 1);
        let via_run = run(LevelSet::single(&fm), &cfg).unwrap();
        assert_eq!(one, via_run);
        let expected = evaluate(&CandidateSet::build(&init, &cfg, 0), &LevelSet::single(&fm), &cfg);
        assert_eq!(expected, via_run);
    }
}
