pub mod compare;
pub mod describe;
pub mod effects;
pub mod fit;
pub mod simulate;

use std::path::Path;

use anyhow::{Context as _, Result};
use longmix::data::{load_csv, Cohort};
use longmix::design::ModelSpec;

pub const SCHEMA_VERSION: u32 = 1;

pub fn load(path: &Path) -> Result<Cohort> {
    load_csv(path).with_context(|| format!("reading {}", path.display()))
}

pub fn parse_spec(text: &str) -> Result<ModelSpec> {
    text.parse::<ModelSpec>().with_context(|| format!("model spec `{text}`"))
}
