use std::path::PathBuf;

use anyhow::Result;
use longmix::data::{describe, DescriptiveSummary};
use serde::Serialize;

use super::{load, SCHEMA_VERSION};
use crate::output::{announce, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Cohort CSV.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Serialize)]
struct DescribeFile<'a> {
    schema_version: u32,
    summary: &'a DescriptiveSummary,
}

pub fn run(ctx: &Context, args: &Args) -> Result<()> {
    let cohort = load(&args.input)?;
    let summary = describe(&cohort)?;
    let table = summary.to_table();
    print!("{table}");
    let path = ctx.path("describe.txt")?;
    std::fs::write(&path, &table)?;
    announce(&path);
    announce(&ctx.write_json("describe.json", &DescribeFile { schema_version: SCHEMA_VERSION, summary: &summary })?);
    Ok(())
}
