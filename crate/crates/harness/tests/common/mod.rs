#![allow(dead_code)]

use std::path::Path;

use gnlab::output::OutDir;
use gnlab::ExperimentConfig;

/// A glyph run small enough for a unit test: tiny model, fixed noise levels.
pub const SMALL: &str = "
[dataset]
n_train = 256
n_test = 64

[model]
hidden = 16
epochs = 4

[enhancers]
n_inputs = 3
m_models = 3
sigma_ng = 0.1
fg_mode = halve

[metrics]
faithfulness_iterations = 20
sensitivity_samples = 3
sanity_samples = 8

[run]
samples = 2

[sweep]
sigma_ng = 0, 0.1
sigma_sg = 0, 0.2

[am]
steps = 20
m_models = 2
sigma_ng = 0.1

[calibration]
repeats = 2
samples = 64
";

pub fn small(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
    cfg.run.out = out.to_path_buf();
    cfg.validate().unwrap();
    cfg
}

pub fn open(cfg: &ExperimentConfig) -> OutDir {
    OutDir::open(&cfg.run.out).unwrap()
}

pub fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
