use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use subact_core::maps::{make_map, IntervalMap};
use subact_core::moduli::liminf_ratio;
use subact_core::obstruction::{
    all_bump_indices, build_potential, calibrate_xi, estimate_max_average, sample_points, subaction_violation_certificate,
    verify_positive_sums, verify_stopping_batch, CounterexamplePotential, MaxAverage, M_TOLERANCE,
};
use subact_core::orbits::{
    asymptotic_report, estimate_c0_and_gates, generate_schedule, onset, window_count_from_anchor, GateReport,
    ScheduleParams, WSchedule,
};
use subact_core::subaction::{
    build_omega, check_assumption_a_default, check_backward_pairing, compute_subaction, expansion_data, sanity_bound,
    verify_subaction, AssumptionAVerdict, RandomPotential, SubactionOptions,
};

use crate::config::{ExperimentConfig, PotentialKind, Trim, XiChoice};
use crate::output::{to_value, Artifacts, Cell, Verdict};

/// Ratios (i) and (ii) must end within this distance of 1.
const RATIO_TOL: f64 = 0.05;
/// Periodic orbits of the calibrated potential may average at most this.
const PERIODIC_TOL: f64 = 1e-10;
/// Slack allowed in the backward-pairing inequality.
const PAIRING_TOL: f64 = 1e-9;

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub verbose: bool,
}

impl Ctx<'_> {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[subact] {}", msg.as_ref());
        }
    }

    fn map(&self) -> Result<IntervalMap> {
        Ok(make_map(self.cfg.family.clone())?)
    }

    fn schedule(&self) -> Result<(WSchedule, GateReport)> {
        let s = &self.cfg.schedule;
        let mut p = ScheduleParams::new(s.w0, s.gamma_time, s.k_max, s.n1);
        p.c0_inflation = s.c0_inflation;
        let sched = generate_schedule(&self.map()?, p)?;
        let (_, gates) = estimate_c0_and_gates(&sched);
        Ok((sched, gates))
    }

    fn trimmed_schedule(&self) -> Result<(WSchedule, GateReport)> {
        let (sched, gates) = self.schedule()?;
        let trim = match self.cfg.schedule.trim {
            Trim::Fixed(t) => t,
            Trim::Auto => gates.recommended_trim.unwrap_or(0),
        };
        self.note(format!("schedule: n_kmax = {}, trim = {trim}", sched.n(sched.k_max())));
        Ok((sched.trimmed(trim), gates))
    }

    fn potential(&self, sched: &WSchedule) -> Result<(CounterexamplePotential, Option<Value>)> {
        let omega = self.cfg.modulus.build()?;
        let base = build_potential(sched, &omega, 1.0)?;
        Ok(match self.cfg.obstruction.xi {
            XiChoice::Fixed(xi) => (base.with_xi(xi), None),
            XiChoice::Auto => {
                let cal = calibrate_xi(&base)?;
                self.note(format!("calibrated xi* = {}", cal.xi_star));
                let p = base.with_xi(cal.xi_star);
                (p, Some(to_value(&cal)))
            }
        })
    }

    fn max_average(&self, p: &CounterexamplePotential, max_period: usize, budget: usize) -> MaxAverage {
        let f = |x: f64| p.eval(x);
        estimate_max_average(&p.sched.map, &f, max_period, budget, self.cfg.seed)
    }
}

fn row(cells: impl IntoIterator<Item = Cell>) -> Vec<Cell> {
    cells.into_iter().collect()
}

fn verdict(name: &str, pass: bool, summary: impl Into<String>, details: Value) -> Verdict {
    Verdict { subcommand: name.to_string(), pass, summary: summary.into(), details }
}

fn log_checkpoints(hi: usize) -> Vec<usize> {
    let top = (hi as f64).log10();
    let mut out: Vec<usize> = (0..=(10.0 * top).floor() as usize)
        .map(|j| 10f64.powf(j as f64 / 10.0).round() as usize)
        .filter(|&n| n >= 1 && n <= hi)
        .collect();
    out.dedup();
    out
}

pub fn asymptotics(ctx: &Ctx, art: &mut Artifacts) -> Result<Verdict> {
    let (sched, _) = ctx.schedule()?;
    let hi = sched.w.len() - 2;
    let cps = match &ctx.cfg.checkpoints {
        Some(c) => c.clone(),
        // b(n) is undefined for the first few n on some maps
        None => log_checkpoints(hi).into_iter().filter(|&n| n >= 10 && sched.b(n).is_ok()).collect(),
    };
    let rep = asymptotic_report(&sched, &cps)?;
    art.csv(
        "asymptotics.csv",
        &["n", "w_n", "b_n", "ratio_i", "ratio_ii", "ratio_a"],
        rep.checkpoints
            .iter()
            .map(|c| row([c.n.into(), c.w_n.into(), c.b_n.into(), c.ratio_i.into(), c.ratio_ii.into(), c.ratio_a.into()])),
    )?;
    art.csv(
        "times.csv",
        &["k", "n_k", "ratio_iii", "time_ratio"],
        rep.times.iter().map(|t| row([t.k.into(), t.n_k.into(), t.ratio_iii.into(), t.time_ratio.into()])),
    )?;
    let last = rep.checkpoints.last().context("no checkpoints")?;
    let pass = (last.ratio_i - 1.0).abs() <= RATIO_TOL && (last.ratio_ii - 1.0).abs() <= RATIO_TOL;
    Ok(verdict(
        "asymptotics",
        pass,
        format!("at n = {}: ratio (i) = {:.6}, ratio (ii) = {:.6}", last.n, last.ratio_i, last.ratio_ii),
        json!({ "last": to_value(last), "tolerance": RATIO_TOL }),
    ))
}

pub fn gates(ctx: &Ctx, art: &mut Artifacts) -> Result<Verdict> {
    let (sched, gates) = ctx.schedule()?;
    art.csv(
        "gates.csv",
        &["trim", "c0"],
        gates.c0_by_trim.iter().enumerate().map(|(t, &c)| row([t.into(), c.into()])),
    )?;
    let Some(trim) = gates.recommended_trim else {
        return Ok(verdict(
            "gates",
            false,
            format!("no head trim passes: {}", gates.failing().join("; ")),
            to_value(&gates),
        ));
    };
    let s = sched.trimmed(trim);
    let ks: Vec<usize> = (s.k_start + 1..=s.k_max()).collect();
    let reps = ks.iter().map(|&k| window_count_from_anchor(&s, k)).collect::<subact_core::Result<Vec<_>>>()?;
    art.csv(
        "windows.csv",
        &["k", "count", "r_k", "third", "c1_bound", "c2_bound", "meets_c1", "meets_c2"],
        reps.iter().map(|r| {
            row([
                r.k.into(),
                r.count.into(),
                r.r_k.into(),
                r.third.into(),
                r.c1_bound.into(),
                r.c2_bound.into(),
                r.meets_c1.into(),
                r.meets_c2.into(),
            ])
        }),
    )?;
    let c1: Vec<bool> = reps.iter().map(|r| r.meets_c1).collect();
    let c2: Vec<bool> = reps.iter().map(|r| r.meets_c2).collect();
    let (o1, o2) = (onset(&ks, &c1), onset(&ks, &c2));
    Ok(verdict(
        "gates",
        true,
        format!("gates pass after trimming {trim}; window onsets C1: {o1:?}, C2: {o2:?}"),
        json!({ "gates": to_value(&gates), "onset_c1": o1, "onset_c2": o2 }),
    ))
}

pub fn obstruction(ctx: &Ctx, art: &mut Artifacts) -> Result<Verdict> {
    let (sched, _) = ctx.trimmed_schedule()?;
    let (p, cal) = ctx.potential(&sched)?;
    let sums = verify_positive_sums(&p, &all_bump_indices(&p))?;
    art.csv(
        "segments.csv",
        &["k", "sign", "qualifying", "start_n", "length", "segment_sum", "bump_part", "lower_bound", "running_min"],
        sums.rows.iter().map(|r| {
            row([
                r.k.into(),
                format!("{:?}", r.sign).as_str().into(),
                r.qualifying.into(),
                r.start_n.into(),
                r.length.into(),
                r.segment_sum.into(),
                r.bump_part.into(),
                r.lower_bound.into(),
                r.running_min.into(),
            ])
        }),
    )?;
    let o = &ctx.cfg.obstruction;
    let m = ctx.max_average(&p, o.max_period, o.orbit_budget);
    let depth = o.depth.unwrap_or(sched.k_max());
    let details = json!({
        "regime": to_value(&p.regime),
        "xi": p.xi,
        "calibration": cal,
        "warnings": p.warnings,
        "c5_empirical": sums.c5_empirical,
        "spread_last": sums.spread_last,
        "decay_last": sums.decay_last,
        "max_average": to_value(&m),
    });
    match subaction_violation_certificate(&p, depth, &sums, &m) {
        Ok(cert) => {
            art.csv(
                "increments.csv",
                &["k", "w_nk", "increment"],
                cert.rows.iter().map(|r| row([r.k.into(), r.w_nk.into(), r.increment.into()])),
            )?;
            let mut d = details;
            d["certificate"] = to_value(&cert);
            Ok(verdict("obstruction", cert.asserted, cert.summary.clone(), d))
        }
        Err(e) => Ok(verdict("obstruction", false, format!("no obstruction certified: {e}"), details)),
    }
}

pub fn calibrate(ctx: &Ctx, art: &mut Artifacts) -> Result<Verdict> {
    let (sched, _) = ctx.trimmed_schedule()?;
    let base = build_potential(&sched, &ctx.cfg.modulus.build()?, 1.0)?;
    let cal = calibrate_xi(&base)?;
    art.csv("xi_ratios.csv", &["k", "ratio"], cal.ratios.iter().map(|&(k, r)| row([k.into(), r.into()])))?;
    let p = match ctx.cfg.obstruction.xi {
        XiChoice::Fixed(xi) => base.with_xi(xi),
        XiChoice::Auto => base.with_xi(cal.xi_star),
    };
    let xs = sample_points(&p, ctx.cfg.obstruction.samples, ctx.cfg.seed);
    let (summary, records) = verify_stopping_batch(&p, &xs)?;
    art.csv(
        "stopping.csv",
        &["x", "k", "p", "q", "n_x", "sum", "positive_part", "negative_part", "l_cap"],
        records.iter().map(|r| {
            row([
                r.x.into(),
                r.k.map_or(Cell::S(String::new()), Cell::U),
                r.p.into(),
                r.q.into(),
                r.n_x.into(),
                r.sum.into(),
                r.positive_part.into(),
                r.negative_part.into(),
                r.l_cap.map_or(Cell::S(String::new()), Cell::U),
            ])
        }),
    )?;
    let o = &ctx.cfg.obstruction;
    let m = ctx.max_average(&p, o.max_period, o.orbit_budget);
    let periodic_ok = m.periodic_best.as_ref().map_or(true, |(_, v)| *v <= PERIODIC_TOL);
    let pass = summary.all_nonpositive
        && summary.cap_violations == 0
        && periodic_ok
        && m.dirac0 == 0.0
        && m.value.abs() <= M_TOLERANCE;
    Ok(verdict(
        "calibrate",
        pass,
        format!(
            "xi = {:.6e} (critical {:.6e}); max stopping sum {:.3e} over {} samples; m estimate {:.3e}",
            p.xi, summary.xi_critical, summary.max_sum, summary.samples, m.value
        ),
        json!({ "calibration": to_value(&cal), "stopping": to_value(&summary), "max_average": to_value(&m) }),
    ))
}

pub fn assumption_a(ctx: &Ctx, art: &mut Artifacts) -> Result<Verdict> {
    let map = ctx.map()?;
    let v = map.speed()?;
    let omega = ctx.cfg.modulus.build()?;
    let res = check_assumption_a_default(&omega, v);
    art.csv(
        "lattice.csv",
        &["xi0", "eta0", "decade", "gamma", "extrapolated", "certified"],
        res.lattice().iter().flat_map(|l| {
            l.decade_gammas.iter().map(move |&(d, g)| {
                row([
                    l.xi0.into(),
                    l.eta0.into(),
                    (d as i64).into(),
                    g.into(),
                    l.extrapolated.into(),
                    l.certified.map_or(Cell::S(String::new()), Cell::F),
                ])
            })
        }),
    )?;
    let liminf = liminf_ratio(&omega, v, 12).ok();
    let details = json!({ "verdict": to_value(&res), "liminf": liminf.as_ref().map(to_value) });
    Ok(match res {
        AssumptionAVerdict::Certified { params, .. } => verdict(
            "assumption-a",
            true,
            format!("certified gamma_A = {:.6} at xi0 = {}, eta0 = {}", params.gamma_a, params.xi0, params.eta0),
            details,
        ),
        AssumptionAVerdict::Violated { h, xi, gamma_tested, .. } => verdict(
            "assumption-a",
            false,
            format!("violated at h = {h:.6e}, xi = {xi} (gamma tested {gamma_tested:.3e})"),
            details,
        ),
    })
}

pub fn omega(ctx: &Ctx, art: &mut Artifacts) -> Result<Verdict> {
    let map = ctx.map()?;
    let w = ctx.cfg.modulus.build()?;
    let big = build_omega(&w, map.speed()?, ctx.cfg.subaction.omega_grid)?;
    art.csv(
        "stages.csv",
        &["stage", "x", "y"],
        big.stages().into_iter().flat_map(|(name, g)| g.rows().map(move |(x, y)| row([name.into(), x.into(), y.into()]))),
    )?;
    art.csv("omega.csv", &["x", "Omega"], big.omega_big.rows().map(|(x, y)| row([x.into(), y.into()])))?;
    Ok(verdict(
        "omega",
        true,
        format!("Omega(1) = {:.6e}, chain slack {:.3e}, cap {:.6}", big.eval(1.0), big.chain_slack, big.cap),
        json!({
            "cap_rule": to_value(&big.cap_rule),
            "cap": big.cap,
            "shift": big.shift,
            "chain_slack": big.chain_slack,
            "omega_at_zero": big.eval(0.0),
            "warnings": big.warnings,
        }),
    ))
}

pub fn subaction(ctx: &Ctx, art: &mut Artifacts) -> Result<Verdict> {
    let map = ctx.map()?;
    let v = map.speed()?;
    let w = ctx.cfg.modulus.build()?;
    let sc = &ctx.cfg.subaction;
    let a = match check_assumption_a_default(&w, v) {
        AssumptionAVerdict::Certified { params, .. } => params,
        AssumptionAVerdict::Violated { h, xi, .. } => {
            return Ok(verdict(
                "subaction",
                false,
                format!("growth condition on omega/V not certified (violated at h = {h:.3e}, xi = {xi})"),
                Value::Null,
            ))
        }
    };
    let data = expansion_data(&map, &a)?;
    let big = build_omega(&w, v, sc.omega_grid)?;
    let pot = match sc.potential {
        PotentialKind::Random => Some(RandomPotential::new(&w, sc.terms, ctx.cfg.seed)?),
        PotentialKind::Zero => None,
    };
    let f = |x: f64| pot.as_ref().map_or(0.0, |p| p.eval(x));
    let f_norm = pot.as_ref().map_or(0.0, RandomPotential::norm_bound);
    let m = estimate_max_average(&map, &f, sc.max_period, sc.orbit_budget, ctx.cfg.seed);
    ctx.note(format!("m estimate {} ({:?})", m.value, m.witness));
    let grid = subact_core::subaction::uniform_grid(0.0, 1.0, sc.grid_size);
    let opts = SubactionOptions {
        eps: sc.eps,
        k_cap: sc.k_cap,
        sanity_bound: Some(sanity_bound(&data, f_norm, &big)),
        lift_m: true,
    };
    let r = compute_subaction(&map, &f, m.value, &grid, opts)?;
    ctx.note(format!("value iteration: k = {}, converged = {}", r.k_used, r.converged));
    let rep = verify_subaction(&map, &f, &w, r.m_used, &r.u, &big, sc.eps, Some(&data))?;
    let pairing = (sc.pairs > 0).then(|| check_backward_pairing(&map, &w, &big, &data, sc.pairs, ctx.cfg.seed, PAIRING_TOL));
    art.csv("u.csv", &["x", "U"], r.u.rows().map(|(x, y)| row([x.into(), y.into()])))?;
    art.csv("omega.csv", &["x", "Omega"], big.omega_big.rows().map(|(x, y)| row([x.into(), y.into()])))?;
    let pass = r.converged && rep.pass && r.bound_ok != Some(false) && pairing.as_ref().map_or(true, |p| p.pass);
    Ok(verdict(
        "subaction",
        pass,
        format!(
            "k = {}, max residual {:.3e} vs tol {:.3e}, |U|_Omega >= {:.3e}",
            r.k_used, rep.max_residual, rep.tol, rep.omega_norm_estimate
        ),
        json!({
            "max_residual": rep.max_residual,
            "tol": rep.tol,
            "k_used": r.k_used,
            "omega_norm_estimate": rep.omega_norm_estimate,
            "bound": rep.bound,
            "converged": r.converged,
            "m_estimate": m.value,
            "m_used": r.m_used,
            "m_grid": r.m_grid,
            "notes": r.notes,
            "assumption_a": to_value(&a),
            "expansion": to_value(&data),
            "verification": to_value(&rep),
            "backward_pairing": pairing.as_ref().map(to_value),
        }),
    ))
}

/// Gathers `*/verdict.json` under `out` into one summary.
pub fn report(out: &Path, art: &mut Artifacts) -> Result<Verdict> {
    let mut entries: Vec<_> = fs::read_dir(out)
        .with_context(|| format!("reading {}", out.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("verdict.json"))
        .filter(|p| p.is_file() && !p.starts_with(&art.dir))
        .collect();
    entries.sort();
    if entries.is_empty() {
        bail!("no verdicts found under {}", out.display());
    }
    let mut verdicts = Vec::new();
    for p in &entries {
        let v: Value = serde_json::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?;
        verdicts.push(v);
    }
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| v["pass"] != Value::Bool(true))
        .map(|v| v["subcommand"].as_str().unwrap_or("?").to_string())
        .collect();
    art.csv(
        "report.csv",
        &["subcommand", "pass", "summary"],
        verdicts.iter().map(|v| {
            row([
                v["subcommand"].as_str().unwrap_or("?").into(),
                (v["pass"] == Value::Bool(true)).into(),
                v["summary"].as_str().unwrap_or("").into(),
            ])
        }),
    )?;
    Ok(verdict(
        "report",
        failed.is_empty(),
        if failed.is_empty() {
            format!("all {} verdicts pass", verdicts.len())
        } else {
            format!("failing: {}", failed.join(", "))
        },
        json!({ "verdicts": verdicts }),
    ))
}
