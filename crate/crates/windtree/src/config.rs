//! Run configuration: flat `key = value` sections in TOML.

use serde::{Deserialize, Serialize};
use windtree_core::homology::Block;
use windtree_core::section::WindTreeParams;
use windtree_core::surface::Cover;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub record: RecordConfig,
    pub search: SearchConfig,
    pub analyze: AnalyzeConfig,
    pub plot: PlotConfig,
    pub hdim: HdimConfig,
    pub simulate: SimulateConfig,
}

/// A periodic parameter record: obstacle sides and the slope `(p + q sqrt d) / r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordConfig {
    pub a: [i64; 2],
    pub b: [i64; 2],
    pub slope: [i64; 4],
    /// `fourfold` or `base`.
    pub cover: String,
    /// Klein block of the invariant function: `-+`, `+-`, `++` or `--`.
    pub block: String,
    pub trace_segments: usize,
    pub induction_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Longest Rauzy loop to enumerate; 0 disables the loop search.
    pub max_len: usize,
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
    /// Obstacle sides `[num, den]` tried for both `a` and `b`.
    pub sizes: Vec<[i64; 2]>,
    pub slopes: Vec<[i64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub depth: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub resolution: f64,
    pub depth: usize,
    /// `level` or `torus`.
    pub mode: String,
    /// Level value; when absent, the value of `h_hat` at `level_point` on sheet 0.
    pub z: Option<f64>,
    pub level_point: f64,
    pub tol: f64,
    pub signs: [i8; 2],
    pub supersample: bool,
    pub budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdimConfig {
    pub max_multiple: usize,
    pub k_max: usize,
    /// Depths used for the box-count estimate of one level set.
    pub box_depths: Vec<usize>,
    pub level_point: f64,
    /// Replace the record by the middle-thirds fixture.
    pub cantor_fixture: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub start: [f64; 2],
    /// Velocity; normalized before use.
    pub velocity: [f64; 2],
    pub t_max: f64,
    pub max_events: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            workers: 1,
            record: RecordConfig::default(),
            search: SearchConfig::default(),
            analyze: AnalyzeConfig::default(),
            plot: PlotConfig::default(),
            hdim: HdimConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl Default for RecordConfig {
    fn default() -> Self {
        RecordConfig {
            a: [1, 2],
            b: [1, 2],
            slope: [-1, 1, 1, 2],
            cover: "fourfold".into(),
            block: "-+".into(),
            trace_segments: 200_000,
            induction_steps: 2_000,
        }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_len: 6,
            top: vec![0, 1],
            bottom: vec![1, 0],
            sizes: vec![[1, 2]],
            slopes: vec![[-1, 1, 1, 2], [1, 1, 2, 5]],
        }
    }
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig { depth: 30, samples: 1000 }
    }
}

impl Default for PlotConfig {
    fn default() -> Self {
        PlotConfig {
            x0: 0.0,
            y0: 0.0,
            x1: 10.0,
            y1: 10.0,
            resolution: 40.0,
            depth: 30,
            mode: "level".into(),
            z: None,
            level_point: 0.3,
            tol: 0.02,
            signs: [1, 1],
            supersample: false,
            budget: 100_000,
        }
    }
}

impl Default for HdimConfig {
    fn default() -> Self {
        HdimConfig { max_multiple: 16, k_max: 5, box_depths: vec![2, 3, 4, 5], level_point: 0.3, cantor_fixture: false }
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { start: [0.4, 0.3], velocity: [0.41421356237309503, 1.0], t_max: 100.0, max_events: 1_000_000 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        let r = &self.record;
        if r.a[1] <= 0 || r.b[1] <= 0 || r.slope[2] == 0 {
            return bad("denominators must be positive");
        }
        if r.trace_segments == 0 || r.induction_steps == 0 || self.plot.budget == 0 || self.simulate.max_events == 0 {
            return bad("budgets must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        if !(self.plot.resolution > 0.0) || self.plot.x1 <= self.plot.x0 || self.plot.y1 <= self.plot.y0 {
            return bad("empty plot window");
        }
        if !matches!(self.plot.mode.as_str(), "level" | "torus") {
            return bad("plot mode is level or torus");
        }
        if self.hdim.max_multiple == 0 {
            return bad("max_multiple must be positive");
        }
        self.cover()?;
        self.block()?;
        Ok(())
    }

    pub fn params(&self) -> WindTreeParams {
        let r = &self.record;
        WindTreeParams { a: (r.a[0], r.a[1]), b: (r.b[0], r.b[1]), slope: (r.slope[0], r.slope[1], r.slope[2], r.slope[3] as u32) }
    }

    pub fn cover(&self) -> Result<Cover, CliError> {
        match self.record.cover.as_str() {
            "fourfold" => Ok(Cover::Fourfold),
            "base" => Ok(Cover::Base),
            other => Err(CliError::Config(format!("unknown cover {other}"))),
        }
    }

    pub fn block(&self) -> Result<Block, CliError> {
        Block::ALL
            .into_iter()
            .find(|b| b.name() == self.record.block)
            .ok_or_else(|| CliError::Config(format!("unknown block {}", self.record.block)))
    }
}
