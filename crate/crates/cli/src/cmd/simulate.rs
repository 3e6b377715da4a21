use anyhow::Result;
use longmix::data::{simulate_cohort, write_csv, DesignParams, Noise, SimulationTruth};
use serde::Serialize;

use super::SCHEMA_VERSION;
use crate::output::{announce, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Number of subjects.
    #[arg(long, default_value_t = 88)]
    subjects: usize,
    /// Exact visits per subject (overrides the min/max range).
    #[arg(long)]
    visits: Option<usize>,
    #[arg(long, default_value_t = 3)]
    visits_min: usize,
    #[arg(long, default_value_t = 5)]
    visits_max: usize,
    /// Generating coefficients: `interaction` (CT-Sum by GA interaction) or `piecewise` (adds a hinge at week 20).
    #[arg(long, default_value = "interaction")]
    truth: String,
    /// Random GA-slope variance of the generating model.
    #[arg(long, default_value_t = 0.0)]
    tau2_sq: f64,
    /// Residual distribution: `normal` or `t:<df>`.
    #[arg(long, default_value = "normal")]
    noise: String,
}

#[derive(Serialize)]
struct TruthFile<'a> {
    schema_version: u32,
    seed: u64,
    design: DesignParams,
    /// Coefficients keyed by column label.
    coefficients: Vec<(String, f64)>,
    truth: &'a SimulationTruth,
}

fn parse_noise(s: &str) -> Result<Noise> {
    if s == "normal" {
        return Ok(Noise::Normal);
    }
    let df = s
        .strip_prefix("t:")
        .and_then(|d| d.parse::<f64>().ok())
        .ok_or_else(|| longmix::Error::InvalidSpec(format!("noise `{s}`; expected `normal` or `t:<df>`")))?;
    Ok(Noise::StudentT(df))
}

pub fn run(ctx: &Context, args: &Args) -> Result<()> {
    let mut truth = match args.truth.as_str() {
        "interaction" => SimulationTruth::interaction(),
        "piecewise" => SimulationTruth::piecewise(),
        other => return Err(longmix::Error::InvalidSpec(format!("unknown truth `{other}`")).into()),
    };
    truth.tau2_sq = args.tau2_sq;
    truth.noise = parse_noise(&args.noise)?;
    let (lo, hi) = args.visits.map_or((args.visits_min, args.visits_max), |v| (v, v));
    let design = DesignParams { n_subjects: args.subjects, visits_min: lo, visits_max: hi };
    let sim = simulate_cohort(&truth, &design, ctx.seed)?;

    let path = ctx.path("cohort.csv")?;
    write_csv(&sim.cohort, ctx.create("cohort.csv")?)?;
    announce(&path);
    announce(&ctx.write_json(
        "truth.json",
        &TruthFile {
            schema_version: SCHEMA_VERSION,
            seed: ctx.seed,
            design,
            coefficients: truth.terms.iter().map(|t| t.label()).zip(truth.beta.iter().copied()).collect(),
            truth: &truth,
        },
    )?);
    println!("{} subjects, {} observations", sim.cohort.n_subjects(), sim.cohort.n_observations());
    Ok(())
}
