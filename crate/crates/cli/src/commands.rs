//! Single-point reports.

use std::fmt::Write;

use anyhow::Result;
use serde_json::json;

use qsteer::protocol::effective_visibility;

use crate::config::SweepConfig;
use crate::point::{error_bars, witness_point, Scenario};

fn check_p(p: f64) -> Result<()> {
    anyhow::ensure!((0.0..=1.0).contains(&p), "p must lie in [0, 1], got {p}");
    Ok(())
}

pub fn witness_report(cfg: &SweepConfig, p: f64) -> Result<String> {
    cfg.validate()?;
    check_p(p)?;
    let sc = Scenario::new(cfg.d)?;
    let w = witness_point(&sc, p, cfg.visibility, cfg.sdp_tol)?;
    let mut s = String::new();
    writeln!(s, "d                     {}", cfg.d)?;
    writeln!(s, "p                     {p}")?;
    writeln!(s, "p_eff                 {:.10}", w.p_eff)?;
    writeln!(s, "S                     {:.10}", w.steering.s)?;
    writeln!(s, "S_LHS                 {:.10}", w.steering.s_lhs)?;
    writeln!(s, "W_S                   {:.10}", w.steering.w_s)?;
    writeln!(s, "W_QRS (table)         {:.10}", w.steering.w_qrs)?;
    writeln!(s, "W_QRS (MDI)           {:.10}", w.mdi.w_qrs)?;
    writeln!(s, "critical p            {:.10}", w.critical_p)?;
    writeln!(s, "steering detected     {}", w.steering.s > w.steering.s_lhs)?;
    writeln!(s, "LHS model exists      {}", w.lhs.is_lhs())?;
    writeln!(s, "steering robustness   {:.6e}", w.lhs.robustness())?;
    Ok(s)
}

/// Text summary, the SDP in dump format and a JSON certificate.
pub struct RandomnessOutput {
    pub summary: String,
    pub dump: String,
    pub certificate: serde_json::Value,
}

pub fn randomness_report(cfg: &SweepConfig, p: f64) -> Result<RandomnessOutput> {
    cfg.validate()?;
    check_p(p)?;
    let sc = Scenario::new(cfg.d)?;
    let p_eff = effective_visibility(p, cfg.visibility)?;
    let r = sc.guess(&sc.table(p_eff)?, cfg.mode, cfg.x_star, cfg.sdp_tol)?;
    let c = &r.certificate;
    let mut s = String::new();
    writeln!(s, "d              {}", cfg.d)?;
    writeln!(s, "p_eff          {:.10}", p_eff)?;
    writeln!(s, "mode           {}", cfg.mode)?;
    writeln!(s, "x*             {}", r.x_star)?;
    writeln!(s, "P_guess        {:.10}", r.p_guess)?;
    writeln!(s, "H_min          {:.10}", r.h_min)?;
    writeln!(s, "primal         {:.10}", c.primal_value)?;
    writeln!(s, "dual           {:.10}", c.dual_value)?;
    writeln!(s, "gap            {:.3e}", c.gap)?;
    writeln!(s, "iterations     {}", c.iterations)?;
    writeln!(s, "blocks         {}", r.problem.blocks().len())?;
    writeln!(s, "constraints    {}", r.problem.constraints().len())?;
    let certificate = json!({
        "d": cfg.d,
        "p": p,
        "p_eff": p_eff,
        "mode": cfg.mode,
        "x_star": r.x_star,
        "p_guess": r.p_guess,
        "h_min": r.h_min,
        "status": format!("{:?}", c.status),
        "primal_value": c.primal_value,
        "dual_value": c.dual_value,
        "gap": c.gap,
        "iterations": c.iterations,
        "dual": c.dual,
    });
    Ok(RandomnessOutput {
        summary: s,
        dump: r.problem.to_dump(),
        certificate,
    })
}

pub fn mc_report(cfg: &SweepConfig, p: f64) -> Result<String> {
    cfg.validate()?;
    check_p(p)?;
    let sc = Scenario::new(cfg.d)?;
    let p_eff = effective_visibility(p, cfg.visibility)?;
    let (s_mc, h_mc) = error_bars(&sc, p_eff, cfg, cfg.seed)?;
    let mut s = String::new();
    writeln!(s, "d                   {}", cfg.d)?;
    writeln!(s, "p_eff               {:.10}", p_eff)?;
    writeln!(s, "counts per setting  {}", cfg.counts_per_setting())?;
    writeln!(s, "trials              {}", s_mc.trials)?;
    writeln!(s, "S                   {:.6} +/- {:.6}", s_mc.mean, s_mc.stddev)?;
    match h_mc {
        Ok(h) => writeln!(s, "H_min ({})  {:.6} +/- {:.6}", cfg.mode, h.mean, h.stddev)?,
        Err(e) => writeln!(s, "H_min ({})  unavailable: {e}", cfg.mode)?,
    }
    Ok(s)
}
