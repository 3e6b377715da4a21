use std::collections::BTreeMap;

use anyhow::{Context as _, Result};
use longmix::bayes::BayesSummary;
use longmix::data::SimulationTruth;
use longmix::lmm::{effect_percent, piecewise_slope_percent, FitReport, Segment};

use crate::output::{announce, num, Context};

const CT: &str = "CT-Sum";
const CT_GA: &str = "CT-Sum*GA";
const GA: &str = "GA";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Coefficient source: `interaction`, `piecewise`, or a `fit.json` / `bayes_summary.json` file.
    #[arg(long, default_value = "interaction")]
    coefs: String,
    /// Coefficient overrides, e.g. `CT-Sum=0,CT-Sum*GA=0`.
    #[arg(long, default_value = "")]
    set: String,
    /// Gestational ages for the CT-Sum effect rows.
    #[arg(long, value_delimiter = ',', default_value = "14,26.7,40")]
    ga: Vec<f64>,
    /// CT-Sum values: the difference for effect rows, the level for weekly-slope rows.
    #[arg(long, value_delimiter = ',', default_value = "0,1,1.2")]
    ct: Vec<f64>,
}

fn from_truth(t: &SimulationTruth) -> BTreeMap<String, f64> {
    t.terms.iter().zip(&t.beta).map(|(term, b)| (term.label(), *b)).collect()
}

fn load_coefficients(source: &str) -> Result<BTreeMap<String, f64>> {
    match source {
        "interaction" => return Ok(from_truth(&SimulationTruth::interaction())),
        "piecewise" => return Ok(from_truth(&SimulationTruth::piecewise())),
        _ => {}
    }
    let text = std::fs::read_to_string(source).with_context(|| format!("reading {source}"))?;
    if let Ok(r) = serde_json::from_str::<FitReport>(&text) {
        return Ok(r.coefficients.into_iter().map(|c| (c.label, c.estimate)).collect());
    }
    if let Ok(s) = serde_json::from_str::<BayesSummary>(&text) {
        return Ok(s.parameters.into_iter().map(|p| (p.name, p.mean)).collect());
    }
    Err(longmix::Error::Parse { line: 1, message: format!("{source} is neither a fit report nor a Bayesian summary") }
        .into())
}

fn apply_overrides(coefs: &mut BTreeMap<String, f64>, spec: &str) -> Result<()> {
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .rsplit_once('=')
            .ok_or_else(|| longmix::Error::InvalidSpec(format!("override `{part}` is not label=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| longmix::Error::InvalidSpec(format!("override `{part}`")))?;
        coefs.insert(k.trim().to_string(), v);
    }
    Ok(())
}

pub fn run(ctx: &Context, args: &Args) -> Result<()> {
    let mut coefs = load_coefficients(&args.coefs)?;
    apply_overrides(&mut coefs, &args.set)?;
    let get = |label: &str| {
        coefs
            .get(label)
            .copied()
            .ok_or_else(|| longmix::Error::InvalidSpec(format!("coefficient `{label}` not available")))
    };
    let (b_ct, b_ctga) = (get(CT)?, get(CT_GA)?);
    let hinge = coefs.iter().find(|(k, _)| k.starts_with("(GA-")).map(|(k, v)| (k.clone(), *v));

    let mut rows = Vec::new();
    for &ct in &args.ct {
        for &ga in &args.ga {
            let e = effect_percent(b_ct, b_ctga, ga, ct);
            rows.push(vec!["effect".into(), num(ga), num(ct), String::new(), num(e.log_effect), num(e.percent_change)]);
            println!("CT-Sum difference {ct} at GA {ga}: {:+.2}%", e.percent_change);
        }
    }
    if let Some((label, b_hinge)) = hinge {
        let b_ga = get(GA)?;
        for &ct in &args.ct {
            for (seg, name) in [(Segment::Before, "before"), (Segment::After, "after")] {
                let pct = piecewise_slope_percent(b_ga, b_hinge, b_ctga, ct, seg);
                let log_slope = b_ga + ct * b_ctga + if seg == Segment::After { b_hinge } else { 0.0 };
                rows.push(vec!["weekly_slope".into(), String::new(), num(ct), name.into(), num(log_slope), num(pct)]);
                println!("CT-Sum {ct}, {name} {label}: {pct:+.2}% per week");
            }
        }
    }
    let header = ["kind", "ga", "ct", "segment", "log_effect", "percent_change"];
    announce(&ctx.write_csv("effects.csv", &header, rows)?);
    Ok(())
}
