use std::path::PathBuf;

use anyhow::Result;
use longmix::bayes::{
    chain_diagnostics, dic, posterior_predictive_pvalue, run_gibbs, write_chain_csv, write_random_effects_csv,
    BayesSummary, GibbsChain, PriorHyperparams, DEFAULT_BURN_FRACTION,
};
use longmix::data::Cohort;
use longmix::design::{build_design, DesignMatrices, ModelSpec};
use longmix::lmm::{fit_lmm_with, fit_report, pearson_residuals, qq_points, Criterion, FitOptions, LmmFit, MAX_ITER};
use longmix::numerics::RngState;

use super::{load, parse_spec};
use crate::output::{announce, num, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Cohort CSV.
    #[arg(long)]
    input: PathBuf,
    /// Model spec, e.g. `model4`, `model4+hinge@20` or `fixed=1+GA random=1+GA`.
    #[arg(long, default_value = "model4")]
    model: String,
    /// Variance-component criterion.
    #[arg(long, default_value = "reml")]
    method: String,
    /// Optimizer iteration cap per run.
    #[arg(long, default_value_t = MAX_ITER)]
    max_iter: usize,
    #[command(flatten)]
    bayes: BayesArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct BayesArgs {
    /// Run the Gibbs sampler: `fit` samples instead of REML/ML, `compare` adds DIC.
    #[arg(long)]
    pub bayes: bool,
    /// Gibbs iterations including burn-in.
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Fraction of iterations discarded as burn-in.
    #[arg(long, default_value_t = DEFAULT_BURN_FRACTION)]
    pub burn: f64,
    /// Prior overrides, e.g. `a=0.01,b=1,c=0.01,d=1,slsq=1e6`.
    #[arg(long, default_value = "")]
    pub prior: String,
    /// Also export per-subject random-effect draws.
    #[arg(long)]
    pub export_b: bool,
}

impl BayesArgs {
    pub fn sample(&self, dm: &DesignMatrices<f64>, seed: u64) -> Result<GibbsChain<f64>> {
        let priors = PriorHyperparams::vague(dm.n_fixed()).with_overrides(&self.prior)?;
        Ok(run_gibbs(dm, &priors, self.iters, self.burn, seed, None)?)
    }
}

pub fn criterion(method: &str) -> Result<Criterion> {
    Ok(method.parse::<Criterion>()?)
}

pub fn run(ctx: &Context, args: &Args) -> Result<()> {
    let cohort = load(&args.input)?;
    let spec = parse_spec(&args.model)?;
    let dm = build_design::<f64>(&cohort, &spec)?;
    if args.bayes.bayes {
        return run_bayes(ctx, args, &spec, &dm);
    }
    let options = FitOptions { max_iter: args.max_iter, ..FitOptions::default() };
    let fit = fit_lmm_with(&dm, criterion(&args.method)?, &options)?;
    write_frequentist(ctx, &cohort, &dm, &fit)?;
    if !fit.converged() {
        return Err(longmix::Error::ConvergenceFailure {
            iterations: fit.convergence.iterations,
            message: format!("optimizer stopped at the cap; gradient norm {:.3e}", fit.convergence.gradient_norm),
        }
        .into());
    }
    Ok(())
}

fn write_frequentist(ctx: &Context, cohort: &Cohort, dm: &DesignMatrices<f64>, fit: &LmmFit<f64>) -> Result<()> {
    let report = fit_report(fit, dm)?;
    println!("{:<12} {:>10} {:>9} {:>8} {:>8} {:>10}", "term", "estimate", "se", "df", "t", "p");
    for c in &report.coefficients {
        let df = c.df.map_or("-".to_string(), |d| format!("{d:.1}"));
        println!("{:<12} {:>10.4} {:>9.4} {:>8} {:>8.3} {:>10.3e}", c.label, c.estimate, c.se, df, c.t, c.p_value);
    }
    announce(&ctx.write_json("fit.json", &report)?);

    let res = pearson_residuals(fit, dm)?;
    let fitted = fit.fitted(dm);
    let rows = cohort
        .subjects()
        .iter()
        .flat_map(|s| s.visits.iter().map(move |v| (s.id.clone(), v.ga_weeks)))
        .zip(fitted.iter().zip(res.values()))
        .map(|((id, ga), (f, r))| vec![id, num(ga), num(*f), num(*r)]);
    announce(&ctx.write_csv("residuals.csv", &["subject", "ga_weeks", "fitted", "pearson_residual"], rows)?);
    let qq = qq_points(&res)?;
    announce(&ctx.write_csv(
        "qq.csv",
        &["theoretical", "empirical"],
        qq.iter().map(|(t, e)| vec![num(*t), num(*e)]),
    )?);
    let blup_rows = dm.subject_ids.iter().enumerate().map(|(i, id)| {
        let mut row = vec![id.clone()];
        row.extend(fit.blups.row(i).iter().map(|v| num(*v)));
        row
    });
    let mut header = vec!["subject"];
    header.extend(fit.random_labels.iter().map(String::as_str));
    announce(&ctx.write_csv("blups.csv", &header, blup_rows)?);
    Ok(())
}

fn run_bayes(ctx: &Context, args: &Args, spec: &ModelSpec, dm: &DesignMatrices<f64>) -> Result<()> {
    let chain = args.bayes.sample(dm, ctx.seed)?;
    let d = dic(&chain, dm)?;
    let ppc = posterior_predictive_pvalue(&chain, dm, &mut RngState::derive(ctx.seed, 1))?;
    let summary = BayesSummary::new(&chain, &spec.to_string(), Some(d), Some(&ppc));

    println!("{:<14} {:>10} {:>10} {:>10} {:>8}", "parameter", "mean", "2.5%", "97.5%", "ess");
    for p in &summary.parameters {
        let ess = p.ess.map_or("-".to_string(), |e| format!("{e:.0}"));
        println!("{:<14} {:>10.4} {:>10.4} {:>10.4} {:>8}", p.name, p.mean, p.lower_95, p.upper_95, ess);
    }
    println!("DIC {:.2} (p_D {:.2}), p_B {:.3}", d.dic, d.p_d, ppc.p_b);
    announce(&ctx.write_json("bayes_summary.json", &summary)?);

    let path = ctx.path("chain.csv")?;
    write_chain_csv(&chain, ctx.create("chain.csv")?)?;
    announce(&path);
    if args.bayes.export_b {
        let path = ctx.path("random_effects.csv")?;
        write_random_effects_csv(&chain, &dm.subject_ids, ctx.create("random_effects.csv")?)?;
        announce(&path);
    }
    let diags = chain_diagnostics(&chain)?;
    let acf_rows = diags
        .iter()
        .flat_map(|d| d.acf.iter().enumerate().map(move |(lag, r)| vec![d.name.clone(), lag.to_string(), num(*r)]));
    announce(&ctx.write_csv("acf.csv", &["parameter", "lag", "acf"], acf_rows)?);
    let ppc_rows =
        ppc.observed.iter().zip(&ppc.replicated).enumerate().map(|(k, (o, r))| vec![k.to_string(), num(*o), num(*r)]);
    announce(&ctx.write_csv("ppc.csv", &["draw", "observed", "replicated"], ppc_rows)?);
    Ok(())
}
