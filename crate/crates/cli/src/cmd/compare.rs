use std::path::PathBuf;

use anyhow::Result;
use longmix::bayes::{dic, DicResult};
use longmix::design::{build_design, ModelSpec};
use longmix::lmm::{fit_lmm_with, lrt, Criterion, FitOptions, LrtMethod, LrtResult, MAX_ITER};
use serde::Serialize;

use super::fit::{criterion, BayesArgs};
use super::{load, parse_spec, SCHEMA_VERSION};
use crate::output::{announce, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Cohort CSV.
    #[arg(long)]
    input: PathBuf,
    /// Null (smaller) model spec.
    #[arg(long, default_value = "model4")]
    null: String,
    /// Alternative model spec.
    #[arg(long, default_value = "model2")]
    alt: String,
    /// `reml`, `ml`, or `auto` (ML when the fixed effects differ, else REML).
    #[arg(long, default_value = "auto")]
    method: String,
    /// `standard`, `boundary` (½χ²(1)+½χ²(2)), or `auto` (boundary when only a random slope is added).
    #[arg(long, default_value = "auto")]
    test: String,
    /// Optimizer iteration cap per run.
    #[arg(long, default_value_t = MAX_ITER)]
    max_iter: usize,
    #[command(flatten)]
    bayes: BayesArgs,
}

#[derive(Serialize)]
struct ModelSide {
    model: String,
    loglik: f64,
    n_parameters: usize,
    converged: bool,
}

#[derive(Serialize)]
struct DicComparison {
    null: DicResult,
    alt: DicResult,
    /// `null` or `alt`, whichever has the smaller DIC.
    preferred: String,
}

#[derive(Serialize)]
struct CompareFile {
    schema_version: u32,
    criterion: Criterion,
    null: ModelSide,
    alt: ModelSide,
    lrt: LrtResult,
    dic: Option<DicComparison>,
}

fn choose_method(test: &str, null: &ModelSpec, alt: &ModelSpec) -> Result<LrtMethod> {
    Ok(match test {
        "standard" => LrtMethod::Standard,
        "boundary" => LrtMethod::BoundaryMixture,
        "auto" if null.fixed == alt.fixed && !null.has_random_slope() && alt.has_random_slope() => {
            LrtMethod::BoundaryMixture
        }
        "auto" => LrtMethod::Standard,
        other => return Err(longmix::Error::InvalidSpec(format!("unknown test `{other}`")).into()),
    })
}

pub fn run(ctx: &Context, args: &Args) -> Result<()> {
    let cohort = load(&args.input)?;
    let (null_spec, alt_spec) = (parse_spec(&args.null)?, parse_spec(&args.alt)?);
    let crit = match args.method.as_str() {
        "auto" if null_spec.fixed != alt_spec.fixed => Criterion::Ml,
        "auto" => Criterion::Reml,
        m => criterion(m)?,
    };
    let method = choose_method(&args.test, &null_spec, &alt_spec)?;
    let dm_null = build_design::<f64>(&cohort, &null_spec)?;
    let dm_alt = build_design::<f64>(&cohort, &alt_spec)?;
    let options = FitOptions { max_iter: args.max_iter, ..FitOptions::default() };

    let (null_fit, alt_fit) = std::thread::scope(|s| {
        let a = s.spawn(|| fit_lmm_with(&dm_alt, crit, &options));
        let n = fit_lmm_with(&dm_null, crit, &options);
        (n, a.join().expect("alternative fit thread panicked"))
    });
    let (null_fit, alt_fit) = (null_fit?, alt_fit?);
    for (name, f) in [("null", &null_fit), ("alternative", &alt_fit)] {
        if !f.converged() {
            return Err(longmix::Error::ConvergenceFailure {
                iterations: f.convergence.iterations,
                message: format!("{name} fit did not converge"),
            }
            .into());
        }
    }
    let test = lrt(&null_fit, &alt_fit, method)?;
    println!("LRT statistic {:.4} on {} ({}), p = {:.4}", test.statistic, test.reference, test.df, test.p_value);

    let dic_cmp = if args.bayes.bayes {
        let (cn, ca) = std::thread::scope(|s| {
            let a = s.spawn(|| args.bayes.sample(&dm_alt, ctx.seed));
            (args.bayes.sample(&dm_null, ctx.seed), a.join().expect("alternative chain thread panicked"))
        });
        let (dn, da) = (dic(&cn?, &dm_null)?, dic(&ca?, &dm_alt)?);
        println!("DIC null {:.2}, alternative {:.2}", dn.dic, da.dic);
        let preferred = if dn.dic <= da.dic { "null" } else { "alt" }.to_string();
        Some(DicComparison { null: dn, alt: da, preferred })
    } else {
        None
    };

    let side = |spec: &ModelSpec, f: &longmix::lmm::LmmFit<f64>| ModelSide {
        model: spec.to_string(),
        loglik: f.loglik(),
        n_parameters: f.n_parameters(),
        converged: f.converged(),
    };
    let file = CompareFile {
        schema_version: SCHEMA_VERSION,
        criterion: crit,
        null: side(&null_spec, &null_fit),
        alt: side(&alt_spec, &alt_fit),
        lrt: test,
        dic: dic_cmp,
    };
    announce(&ctx.write_json("compare.json", &file)?);
    Ok(())
}
