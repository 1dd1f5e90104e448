use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use cusp_growth::audit::{self, default_parabolic_radius, growth_radii, AuditConfig, Status, TheoremAudit};
use cusp_growth::boundary::{sample_band, shadow_lemma_audit};
use cusp_growth::boundary::{cone_growth, MeasureApproximant, TransitionParams};
use cusp_growth::enumeration::{
    ball_counts, horoball_growth, integer_grid, orbit_growth, parabolic_growth, GrowthKind, GrowthTable,
};
use cusp_growth::report::{fmt_value, Provenance, Report};
use cusp_growth::series::{divergence_diagnostic, dop_audit, DopParams, Verdict};
use cusp_growth::{with_model, AnyModel, GroupSpec, Space};

use crate::config::{Command, Format, RunConfig};

pub struct Outcome {
    pub body: String,
    pub inconclusive: bool,
    pub warnings: Vec<String>,
}

const EXPONENT_WINDOW: (f64, f64) = (6.0, 12.0);
const SHADOW_BAND: (f64, f64) = (4.0, 8.0);
const SHADOW_SAMPLES: usize = 100;
const S_FACTOR: f64 = 1.05;
const CUTOFF_T: f64 = 2.0;

pub fn execute(cfg: &RunConfig) -> cusp_growth::Result<Outcome> {
    let spec = GroupSpec::from_path(&cfg.spec)?;
    let model = AnyModel::build(&spec)?;
    with_model!(&model, m => dispatch(m, cfg))
}

fn dispatch<S: Space>(m: &S, cfg: &RunConfig) -> cusp_growth::Result<Outcome> {
    let params = transition_params(m, cfg)?;
    match cfg.command {
        Command::Growth => growth(m, cfg, &params),
        Command::Exponent => exponent(m, cfg),
        Command::Dop => dop(m, cfg),
        Command::ShadowAudit => shadow(m, cfg, &params),
        Command::TheoremAudit => theorem(m, cfg, &params),
    }
}

fn transition_params<S: Space>(m: &S, cfg: &RunConfig) -> cusp_growth::Result<TransitionParams> {
    let d = TransitionParams::default();
    let p = TransitionParams {
        eps: cfg.eps.unwrap_or(d.eps),
        big_r: cfg.big_r.unwrap_or(d.big_r),
        shadow_r: cfg.shadow_r.unwrap_or(d.shadow_r),
        width: cfg.width.unwrap_or(d.width),
    };
    p.validate(m.default_step())?;
    Ok(p)
}

fn exponent_window<S: Space>(m: &S, cfg: &RunConfig) -> (f64, f64) {
    match (cfg.command, cfg.window) {
        (Command::Exponent | Command::Dop | Command::TheoremAudit, Some(w)) => w,
        _ => (EXPONENT_WINDOW.0, EXPONENT_WINDOW.1.min(m.truncation())),
    }
}

/// Parameter echo shared by every output.
fn echo<S: Space>(m: &S, cfg: &RunConfig, extra: Value) -> Value {
    let c = m.constants();
    let mut v = json!({
        "spec": cfg.spec.display().to_string(),
        "backend": m.backend().to_string(),
        "seed": cfg.seed,
        "truncation_radius": m.truncation(),
        "delta_hyperbolicity": c.delta_hat,
        "quasiconvexity_eps": c.quasiconvexity_eps,
        "cocompactness_m": c.cocompactness_m,
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
        base.extend(more);
    }
    v
}

fn parse_centers<S: Space>(m: &S, cfg: &RunConfig) -> cusp_growth::Result<Vec<S::Element>> {
    if cfg.centers.is_empty() {
        Ok(m.sample_centers())
    } else {
        cfg.centers.iter().map(|c| m.parse_element(c)).collect()
    }
}

fn growth<S: Space>(m: &S, cfg: &RunConfig, p: &TransitionParams) -> cusp_growth::Result<Outcome> {
    let fit = audit::exponent(m, exponent_window(m, cfg))?;
    let dh = fit.delta_hat;
    let w = p.width;
    let mut warnings = Vec::new();
    let radii = |hi: f64| match cfg.window {
        Some((lo, top)) => integer_grid(lo, top),
        None => integer_grid(1.0, hi),
    };
    let mut tables = Vec::new();
    match cfg.kind {
        GrowthKind::Orbit => tables.push(orbit_growth(m, &radii(m.truncation() - w), w, dh)?),
        GrowthKind::Horoball => {
            if m.num_parabolic_classes() == 0 {
                warnings.push("spec declares no parabolic classes; the horoball table is empty".into());
                tables.push(GrowthTable::new(GrowthKind::Horoball, w, dh, Vec::new()));
            } else {
                tables.push(horoball_growth(m, &radii(m.truncation() - w), w, dh)?);
            }
        }
        GrowthKind::Parabolic => {
            if m.num_parabolic_classes() == 0 {
                warnings.push("spec declares no parabolic classes; the parabolic table is empty".into());
                tables.push(GrowthTable::new(GrowthKind::Parabolic, w, dh, Vec::new()));
            }
            let ns = radii(default_parabolic_radius(m) - w);
            for k in 0..m.num_parabolic_classes() {
                tables.push(parabolic_growth(m, k, &ns, w, dh)?);
            }
        }
        GrowthKind::Cone | GrowthKind::PartialCone => {
            let partial = cfg.kind == GrowthKind::PartialCone;
            for g in parse_centers(m, cfg)? {
                let ns = match cfg.window {
                    Some((lo, hi)) => integer_grid(lo, hi),
                    None => growth_radii(m, &g, (1.0, m.truncation()), w)?,
                };
                let t = cone_growth(m, &g, p, &ns, dh, partial)?;
                tables.push(t.with_center(&g.to_string()));
            }
        }
    }
    let extra = json!({
        "kind": cfg.kind.to_string(),
        "delta_width": w,
        "delta_hat": dh,
        "delta_hat_window": [fit.window.0, fit.window.1],
        "delta_hat_residual": fit.residual,
        "shadow_r": p.shadow_r,
        "eps": p.eps,
        "big_r": p.big_r,
    });
    let params = echo(m, cfg, extra);
    let body = match cfg.format {
        Format::Csv => {
            let mut out = format!("# command=growth seed={}\n# params={}\n", cfg.seed, params);
            for (i, t) in tables.iter().enumerate() {
                let csv = t.to_csv();
                let (header, body) = csv.split_once('\n').unwrap_or((&csv, ""));
                // one header for the concatenated tables
                if i == 0 {
                    out.push_str(header);
                    out.push('\n');
                }
                if let Some(c) = &t.center {
                    let _ = writeln!(out, "# center={c}");
                }
                if let Some(k) = t.params.get("class") {
                    let _ = writeln!(out, "# class={k}");
                }
                out.push_str(body);
            }
            out
        }
        Format::Structured => pretty(&json!({ "command": "growth", "seed": cfg.seed, "params": params, "tables": tables })),
        Format::Text => {
            let mut out = format!("command: growth\nseed: {}\nparams: {}\n", cfg.seed, params);
            for t in &tables {
                out.push_str(&growth_text(t));
            }
            out
        }
    };
    Ok(Outcome { body, inconclusive: false, warnings })
}

fn growth_text(t: &GrowthTable) -> String {
    let mut out = format!("\n{} (Δ = {}, δ̂ = {})", t.kind, t.delta, fmt_value(t.delta_hat));
    for (k, v) in &t.params {
        let _ = write!(out, " {k}={v}");
    }
    if let Some(c) = &t.center {
        let _ = write!(out, " center={c}");
    }
    out.push('\n');
    let _ = writeln!(out, "{:>6}  {:>12}  {:>20}", "n", "count", "normalized");
    for r in &t.rows {
        let _ = writeln!(out, "{:>6}  {:>12}  {:>20.12e}", r.n, r.count, r.normalized);
    }
    out
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output") + "\n"
}

fn render<T: Serialize>(cfg: &RunConfig, report: &Report, detail: &T, preface: &str) -> String {
    match cfg.format {
        Format::Csv => report.to_csv(),
        Format::Structured => {
            let mut v = serde_json::to_value(report).expect("serializable report");
            if let Value::Object(o) = &mut v {
                o.insert("detail".into(), serde_json::to_value(detail).expect("serializable detail"));
            }
            pretty(&v)
        }
        Format::Text => format!("{preface}{}", report.to_text()),
    }
}

fn run_rows(report: &mut Report, params: &Value) {
    let seed = report.seed as f64;
    report.push("run", params, "seed", seed, Provenance::Exact);
    let t = params["truncation_radius"].as_f64().unwrap_or(f64::NAN);
    report.push("run", params, "truncation_radius", t, Provenance::Exact);
}

fn exponent<S: Space>(m: &S, cfg: &RunConfig) -> cusp_growth::Result<Outcome> {
    let window = exponent_window(m, cfg);
    let fit = audit::exponent(m, window)?;
    let counts = ball_counts(m, &integer_grid(0.0, m.truncation()))?;
    let div = divergence_diagnostic(&audit::ball_distances(m)?, fit.delta_hat)?;
    let params = echo(m, cfg, json!({ "window": [window.0, window.1] }));
    let mut report = Report::new("exponent", cfg.seed, params.clone());
    run_rows(&mut report, &params);
    for (n, c) in &counts {
        report.push("ball_count", &json!({ "n": n }), "count", *c as f64, Provenance::Exact);
    }
    let fp = json!({ "window": [fit.window.0, fit.window.1], "residual": fit.residual });
    report.push("exponent", &fp, "delta_hat", fit.delta_hat, Provenance::Fitted);
    report.push("exponent", &fp, "residual", fit.residual, Provenance::Fitted);
    let dp = json!({ "s": div.s, "verdict": div.verdict.to_string(), "residual": div.residual });
    report.push("divergence", &dp, "terms", div.terms as f64, Provenance::Exact);
    report.push("divergence", &dp, "partial_sum", div.total, Provenance::Exact);
    report.push("divergence", &dp, "tail_slope", div.slope, Provenance::Fitted);
    report.push("divergence", &dp, "decay_rate", div.decay_rate, Provenance::Fitted);
    let c = m.constants();
    let cp = json!({ "triangles": c.triangle_sample });
    report.push("constants", &cp, "delta_hyperbolicity", c.delta_hat, Provenance::Sampled);
    report.push("constants", &cp, "quasiconvexity_eps", c.quasiconvexity_eps, Provenance::Sampled);
    report.push("constants", &cp, "cocompactness_m", c.cocompactness_m, Provenance::Sampled);
    report.notes.push("divergence verdicts are heuristics on a finite partial sum".into());
    let body = render(cfg, &report, &json!({ "exponent": fit, "divergence": div }), "");
    Ok(Outcome { body, inconclusive: false, warnings: Vec::new() })
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Converging => 0.0,
        Verdict::Diverging => 1.0,
        Verdict::Inconclusive => 2.0,
    }
}

fn dop<S: Space>(m: &S, cfg: &RunConfig) -> cusp_growth::Result<Outcome> {
    let window = exponent_window(m, cfg);
    let fit = audit::exponent(m, window)?;
    let dp = DopParams {
        width: cfg.width.unwrap_or(TransitionParams::default().width),
        window,
        radius: default_parabolic_radius(m),
    };
    let rep = dop_audit(m, fit.delta_hat, &dp)?;
    let params = echo(m, cfg, json!({ "window": [window.0, window.1], "delta_width": dp.width, "parabolic_radius": dp.radius }));
    let mut report = Report::new("dop", cfg.seed, params.clone());
    run_rows(&mut report, &params);
    let fp = json!({ "window": [fit.window.0, fit.window.1], "residual": fit.residual });
    report.push("exponent", &fp, "delta_hat", fit.delta_hat, Provenance::Fitted);
    report.push("dop", &json!({}), "vacuous", rep.vacuous as u8 as f64, Provenance::Exact);
    let mut inconclusive = false;
    for c in &rep.classes {
        let k = c.class;
        let pf = json!({ "class": k, "window": [c.delta_p.window.0, c.delta_p.window.1], "residual": c.delta_p.residual });
        report.push("parabolic_exponent", &pf, "delta_p", c.delta_p.delta_hat, Provenance::Fitted);
        report.push("pgp", &json!({ "class": k }), "holds", c.pgp as u8 as f64, Provenance::Fitted);
        let pc = json!({ "class": k, "verdict": c.pcp.verdict.to_string() });
        report.push("pcp", &pc, "partial_sum", c.pcp.total, Provenance::Exact);
        report.push("pcp", &pc, "verdict", verdict_code(c.pcp.verdict), Provenance::Fitted);
        let dq = json!({ "class": k, "verdict": c.dop.verdict.to_string(), "residual": c.dop.residual });
        report.push("dop", &dq, "terms", c.dop.terms as f64, Provenance::Exact);
        report.push("dop", &dq, "partial_sum", c.dop.total, Provenance::Exact);
        report.push("dop", &dq, "tail_slope", c.dop.slope, Provenance::Fitted);
        report.push("dop", &dq, "decay_rate", c.dop.decay_rate, Provenance::Fitted);
        report.push("dop", &dq, "verdict", verdict_code(c.dop.verdict), Provenance::Fitted);
        if let Some(inc) = c.dop.max_increment(128) {
            report.push("dop", &dq, "max_doubling_increment_from_128", inc, Provenance::Exact);
        }
        for cp in &c.dop.checkpoints {
            report.push("dop_checkpoint", &json!({ "class": k, "N": cp.n }), "partial_sum", cp.sum, Provenance::Exact);
        }
        let dd = json!({ "class": k, "delta_width": rep.width });
        report.push("double_sum", &dd, "from_zero", c.double_sum, Provenance::Exact);
        report.push("double_sum", &dd, "from_one", c.double_sum_from_one, Provenance::Exact);
        report.push("double_sum", &dd, "ratio_to_linear", c.agreement, Provenance::Exact);
        inconclusive |= c.dop.verdict == Verdict::Inconclusive;
    }
    report.notes.push("verdict codes: 0 converging, 1 diverging, 2 inconclusive".into());
    let body = render(cfg, &report, &rep, "");
    Ok(Outcome { body, inconclusive, warnings: Vec::new() })
}

fn shadow<S: Space>(m: &S, cfg: &RunConfig, p: &TransitionParams) -> cusp_growth::Result<Outcome> {
    let fit = audit::exponent(m, exponent_window(m, cfg))?;
    let s = cfg.s.unwrap_or(S_FACTOR * fit.delta_hat);
    let t = cfg.cutoff_t.unwrap_or(CUTOFF_T);
    let band = cfg.band.unwrap_or(SHADOW_BAND);
    let count = cfg.samples.unwrap_or(SHADOW_SAMPLES);
    let measure = MeasureApproximant::new(m, s, t, fit.delta_hat)?;
    let sample = sample_band(m, band.0, band.1, count, cfg.seed)?;
    let audit = shadow_lemma_audit(m, &sample, p, &measure)?;
    let params = echo(
        m,
        cfg,
        json!({
            "s": s, "cutoff_t": t, "delta_hat": fit.delta_hat, "shadow_r": p.shadow_r, "eps": p.eps,
            "big_r": p.big_r, "band": [band.0, band.1], "samples": sample.len(), "slack": audit.slack,
        }),
    );
    let mut report = Report::new("shadow-audit", cfg.seed, params.clone());
    run_rows(&mut report, &params);
    for r in &audit.rows {
        let rp = json!({ "g": r.element, "dist": r.dist });
        report.push("shadow", &rp, "plain_rho", r.plain_rho, Provenance::Sampled);
        report.push("partial_shadow", &rp, "partial_rho", r.partial_rho, Provenance::Sampled);
    }
    let sp = json!({ "s": s, "cutoff_t": t });
    report.push("shadow", &sp, "spread", audit.plain_spread, Provenance::Sampled);
    report.push("partial_shadow", &sp, "spread", audit.partial_spread, Provenance::Sampled);
    report.push("partial_shadow", &sp, "partial_le_plain", audit.partial_le_plain as u8 as f64, Provenance::Exact);
    report.push("shadow", &sp, "flagged", audit.flagged.len() as f64, Provenance::Exact);
    report.notes.push("ρ(g) = μ(shadow of g o)·exp(s d(o, g o)); spreads are max/min over the sample".into());
    let inconclusive = !audit.plain_spread.is_finite() || !audit.partial_spread.is_finite();
    let body = render(cfg, &report, &audit, "");
    Ok(Outcome { body, inconclusive, warnings: Vec::new() })
}

fn status_code(s: Status) -> f64 {
    match s {
        Status::Consistent => 0.0,
        Status::Inconsistent => 1.0,
        Status::Inconclusive => 2.0,
        Status::Vacuous => 3.0,
    }
}

fn theorem<S: Space>(m: &S, cfg: &RunConfig, p: &TransitionParams) -> cusp_growth::Result<Outcome> {
    let window = exponent_window(m, cfg);
    let ac = AuditConfig {
        params: *p,
        exponent_window: window,
        growth_window: cfg.window.unwrap_or(AuditConfig::default().growth_window),
        ceiling: cfg.ceiling.unwrap_or(AuditConfig::default().ceiling),
        parabolic_radius: None,
    };
    let centers = parse_centers(m, cfg)?;
    let audit = audit::theorem_audit(m, &centers, &ac)?;
    let params = echo(
        m,
        cfg,
        json!({
            "exponent_window": [ac.exponent_window.0, ac.exponent_window.1],
            "growth_window": [ac.growth_window.0, ac.growth_window.1],
            "ceiling": ac.ceiling, "delta_width": p.width, "shadow_r": p.shadow_r, "eps": p.eps, "big_r": p.big_r,
            "parabolic_radius": default_parabolic_radius(m),
            "centers": centers.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        }),
    );
    let mut report = Report::new("theorem-audit", cfg.seed, params.clone());
    run_rows(&mut report, &params);
    if let Some(e) = &audit.exponent {
        let fp = json!({ "window": [e.window.0, e.window.1], "residual": e.residual });
        report.push("exponent", &fp, "delta_hat", e.delta_hat, Provenance::Fitted);
    }
    if let Some(d) = &audit.divergence {
        let dp = json!({ "verdict": d.verdict.to_string() });
        report.push("divergence", &dp, "partial_sum", d.total, Provenance::Exact);
        report.push("divergence", &dp, "tail_slope", d.slope, Provenance::Fitted);
    }
    for row in &audit.rows {
        let rp = json!({ "condition": row.condition, "status": row.status.to_string() });
        report.push(&format!("condition{}", row.condition), &rp, "status", status_code(row.status), Provenance::Fitted);
        for (k, v) in &row.numbers {
            report.push(&format!("condition{}", row.condition), &rp, k, *v, Provenance::Fitted);
        }
    }
    report.notes.push("status codes: 0 consistent, 1 inconsistent, 2 inconclusive, 3 vacuous".into());
    report.notes.push("verdicts describe finite windows and are never proofs".into());
    let inconclusive = audit.rows.iter().any(|r| r.status == Status::Inconclusive);
    let body = render(cfg, &report, &audit, &verdict_table(&audit));
    Ok(Outcome { body, inconclusive, warnings: Vec::new() })
}

fn verdict_table(a: &TheoremAudit) -> String {
    let mut out = String::from("condition  status        statement\n");
    for r in &a.rows {
        let _ = writeln!(out, "{:<9}  {:<12}  {}", r.condition, r.status.to_string(), r.name);
        for (k, v) in &r.numbers {
            let _ = writeln!(out, "{:<9}  {:<12}    {k} = {}", "", "", fmt_value(*v));
        }
        let _ = writeln!(out, "{:<9}  {:<12}    ({})", "", "", r.note);
    }
    out.push('\n');
    out
}
