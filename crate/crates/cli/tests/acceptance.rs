//! Acceptance suite. Prints one line per criterion and exits nonzero when a
//! criterion fails that is not listed in `EXPECTED_FAILURES`.
//!
//! `ACCEPTANCE_FREEZE=1` additionally prints the measured regression values
//! in the fixture format.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;

use cusp_growth::audit::{self, default_parabolic_radius};
use cusp_growth::boundary::{
    cone_growth, cone_indices, partial_cone_indices, partial_cone_members, partial_shadow_contains, sample_band,
    sample_pairs, shadow_contains, shadow_lemma_audit, transition_stability_audit, MeasureApproximant,
    TransitionParams,
};
use cusp_growth::enumeration::{annulus, horoball_growth, integer_grid, orbit_growth, AnnulusQuery};
use cusp_growth::models::half_plane::{Mat2, IDENTITY, S, T};
use cusp_growth::models::{CuspedModel, HalfPlaneModel};
use cusp_growth::series::{conversion_check, dop_audit, ConjugatePair, DopParams};
use cusp_growth::{AnyModel, GroupSpec, Space};

// criterion 1
const ENUM_MAX_N: u32 = 8;
const ENUM_BUDGET_SECS: f64 = 60.0;
// criterion 2
const TREE_MAX_N: u32 = 12;
const TREE_DELTA_TOL: f64 = 0.01;
const TREE_BUDGET_SECS: f64 = 10.0;
// criteria 2, 3, 5
const FIT_WINDOW: (f64, f64) = (6.0, 12.0);
// criterion 3
const PSL_DELTA: f64 = 1.0;
const PSL_DELTA_TOL: f64 = 0.05;
const PSL_DELTA_P: f64 = 0.5;
const PSL_DELTA_P_TOL: f64 = 0.05;
// criteria 4, 10
const DOP_FROM: usize = 128;
const DOP_INCREMENT_BOUND: f64 = 0.05;
const DOP_RATIO_BOUND: f64 = 3.0;
// regression fixtures
const FROZEN_REL_TOL: f64 = 0.10;
// criterion 5
const GROWTH_BUDGET_SECS: f64 = 300.0;
// criterion 6
const SHADOW_SAMPLES: usize = 100;
const SHADOW_BAND: (f64, f64) = (4.0, 8.0);
const S_FACTOR: f64 = 1.05;
const CUTOFF_T: f64 = 2.0;
// criterion 7
const CONVERSION_GRID: [f64; 4] = [2.0, 3.0, 4.0, 5.0];
const CONVERSION_S: f64 = 1.0;
const CONVERSION_C_MAX: f64 = 10.0;
const CONJUGATE_K_MAX: u32 = 8;
// criterion 8
const STABILITY_PAIRS: usize = 50;
const STABILITY_R: f64 = 1.0;
const STABILITY_BAND: (f64, f64) = (6.0, 10.0);
const STABILITY_ELL: f64 = 4.0;
// criterion 10
const DISTORTION_MAX_N: i64 = 32;
const DISTORTION_BOUND: f64 = 3.0;

const SEED: u64 = 0;

/// Criteria that fail on the shipped configuration, with the reason.
const EXPECTED_FAILURES: &[(u8, &str)] = &[(
    4,
    "at s = δ̂ the parabolic terms are about 2 ln n / n² for T^{±n}, so |S_2N - S_N| ≈ 4 ln N / N: \
     0.15 at N = 128, first below 0.05 at the N = 512 checkpoint; the double sum taken from j = 0 \
     equals the linear-weight sum plus the plain parabolic sum and sits at ratio ≈ 3.7",
)];

struct Check {
    pass: bool,
    detail: String,
    frozen: Vec<(&'static str, f64)>,
}

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn build(name: &str) -> Result<AnyModel, String> {
    let spec = GroupSpec::from_path(specs().join(name)).map_err(|e| e.to_string())?;
    AnyModel::build(&spec).map_err(|e| e.to_string())
}

fn half_plane(m: &AnyModel) -> &HalfPlaneModel {
    match m {
        AnyModel::HalfPlane(h) => h,
        _ => panic!("expected a half-plane model"),
    }
}

fn cusped(m: &AnyModel) -> &CuspedModel {
    match m {
        AnyModel::Cusped(c) => c,
        _ => panic!("expected a cusped-graph model"),
    }
}

fn frozen_values() -> BTreeMap<String, f64> {
    let text = include_str!("fixtures/frozen.toml");
    let table: toml::Table = text.parse().expect("fixture parses");
    table.into_iter().filter_map(|(k, v)| v.as_float().map(|f| (k, f))).collect()
}

/// `measured` within the relative tolerance of the frozen value.
fn matches_frozen(frozen: &BTreeMap<String, f64>, key: &str, measured: f64) -> (bool, String) {
    match frozen.get(key) {
        None => (false, format!("{key}: no frozen value")),
        Some(&f) => {
            let ok = measured.is_finite() && ((measured - f) / f).abs() <= FROZEN_REL_TOL;
            (ok, format!("{key} {measured:.4} vs frozen {f:.4}"))
        }
    }
}

fn e(err: cusp_growth::Error) -> String {
    err.to_string()
}

fn c1_enumerators(psl: &HalfPlaneModel) -> Result<Check, String> {
    let start = Instant::now();
    let bfs = psl.bfs_elements(ENUM_MAX_N as f64, 0.0);
    let mut sizes = Vec::new();
    let mut equal = true;
    for n in 0..=ENUM_MAX_N {
        // d(i, g i) <= n  iff  ‖g‖² <= 2 cosh n
        let bound = (2.0 * (n as f64).cosh()).floor() as i64;
        let by_norm: BTreeSet<Mat2> = HalfPlaneModel::frobenius_elements(bound).into_iter().collect();
        let by_word: BTreeSet<Mat2> = bfs.iter().filter(|(_, d)| *d <= n as f64).map(|(g, _)| *g).collect();
        equal &= by_norm == by_word;
        sizes.push(by_norm.len());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Check {
        pass: equal && secs < ENUM_BUDGET_SECS,
        detail: format!("sets equal for n <= {ENUM_MAX_N}: {equal}; |N(i,n)| = {sizes:?}; {secs:.2} s"),
        frozen: vec![],
    })
}

/// Reduced words over `a, A, b, B` by explicit string generation.
fn reduced_word_spheres(max: u32) -> Vec<u64> {
    let letters = [b'a', b'A', b'b', b'B'];
    let inverse = |c: u8| c ^ 0x20;
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    let mut out = vec![1u64];
    for _ in 0..max {
        let mut next = Vec::with_capacity(layer.len() * 3);
        for w in &layer {
            for &c in &letters {
                if w.last() != Some(&inverse(c)) {
                    let mut v = w.clone();
                    v.push(c);
                    next.push(v);
                }
            }
        }
        out.push(next.len() as u64);
        layer = next;
    }
    out
}

fn c2_tree() -> Result<Check, String> {
    let start = Instant::now();
    let model = build("free2.toml")?;
    let tree = cusped(&model);
    let ball = tree.orbit_ball().map_err(e)?;
    let mut spheres = vec![0u64; TREE_MAX_N as usize + 1];
    for entry in &ball.entries {
        let n = entry.dist.round() as usize;
        if n <= TREE_MAX_N as usize {
            spheres[n] += 1;
        }
    }
    let fit = audit::exponent(tree, FIT_WINDOW).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    let oracle = reduced_word_spheres(TREE_MAX_N);
    let formula: Vec<u64> = (1..=TREE_MAX_N).map(|n| 4 * 3u64.pow(n - 1)).collect();
    let exact = spheres == oracle && spheres[1..] == formula[..];
    let ln3 = 3f64.ln();
    let close = (fit.delta_hat - ln3).abs() <= TREE_DELTA_TOL;
    Ok(Check {
        pass: exact && close && secs < TREE_BUDGET_SECS,
        detail: format!(
            "spheres = 4·3^(n-1) for n <= {TREE_MAX_N}: {exact}; δ̂ = {:.5} (ln 3 = {ln3:.5}); {secs:.2} s",
            fit.delta_hat
        ),
        frozen: vec![],
    })
}

fn c3_exponents(psl: &HalfPlaneModel) -> Result<Check, String> {
    let fit = audit::exponent(psl, FIT_WINDOW).map_err(e)?;
    let params = DopParams { width: 1.0, window: FIT_WINDOW, radius: default_parabolic_radius(psl) };
    let rep = dop_audit(psl, fit.delta_hat, &params).map_err(e)?;
    let class = rep.classes.first().ok_or("no parabolic class")?;
    let dg = fit.delta_hat;
    let dp = class.delta_p.delta_hat;
    let pass = (dg - PSL_DELTA).abs() <= PSL_DELTA_TOL && (dp - PSL_DELTA_P).abs() <= PSL_DELTA_P_TOL && class.pgp;
    Ok(Check {
        pass,
        detail: format!("δ̂_G = {dg:.4} (residual {:.2e}), δ̂_P = {dp:.4}, PGP = {}", fit.residual, class.pgp),
        frozen: vec![],
    })
}

fn dop_summary(space: &impl Space, window: (f64, f64)) -> Result<(f64, f64, f64, f64, f64, bool), String> {
    let fit = audit::exponent(space, window).map_err(e)?;
    let params = DopParams { width: 1.0, window, radius: default_parabolic_radius(space) };
    let rep = dop_audit(space, fit.delta_hat, &params).map_err(e)?;
    let c = rep.classes.first().ok_or("no parabolic class")?;
    let inc = c.dop.max_increment(DOP_FROM).ok_or("too few terms for a doubling past 128")?;
    Ok((fit.delta_hat, c.delta_p.delta_hat, inc, c.agreement, c.double_sum_from_one / c.dop.total, c.pgp))
}

fn c4_dop(psl: &HalfPlaneModel) -> Result<Check, String> {
    let fit = audit::exponent(psl, FIT_WINDOW).map_err(e)?;
    let params = DopParams { width: 1.0, window: FIT_WINDOW, radius: default_parabolic_radius(psl) };
    let rep = dop_audit(psl, fit.delta_hat, &params).map_err(e)?;
    let c = rep.classes.first().ok_or("no parabolic class")?;
    let incs: Vec<String> = c
        .dop
        .checkpoints
        .windows(2)
        .filter(|w| w[0].n >= DOP_FROM)
        .map(|w| format!("N={}:{:.4}", w[0].n, (w[1].sum - w[0].sum).abs()))
        .collect();
    let inc = c.dop.max_increment(DOP_FROM).unwrap_or(f64::NAN);
    let ratio = c.agreement;
    let in_band = ratio >= 1.0 / DOP_RATIO_BOUND && ratio <= DOP_RATIO_BOUND;
    Ok(Check {
        pass: inc < DOP_INCREMENT_BOUND && in_band,
        detail: format!(
            "max |S_2N - S_N| (N >= {DOP_FROM}) = {inc:.4} [{}]; double/linear = {ratio:.3} (from j = 1: {:.3}); \
             verdict {}",
            incs.join(" "),
            c.double_sum_from_one / c.dop.total,
            c.dop.verdict
        ),
        frozen: vec![],
    })
}

fn c5_growth(psl: &HalfPlaneModel, frozen: &BTreeMap<String, f64>) -> Result<Check, String> {
    let start = Instant::now();
    let fit = audit::exponent(psl, FIT_WINDOW).map_err(e)?;
    let dh = fit.delta_hat;
    let params = TransitionParams::default();
    let ns = integer_grid(FIT_WINDOW.0, FIT_WINDOW.1);
    let mut spreads: Vec<(&'static str, f64)> = vec![
        ("c5_orbit_spread", orbit_growth(psl, &ns, params.width, dh).map_err(e)?.spread(6.0, 12.0).unwrap_or(f64::NAN)),
        ("c5_horoball_spread", horoball_growth(psl, &ns, params.width, dh).map_err(e)?.spread(6.0, 12.0).unwrap_or(f64::NAN)),
    ];
    for (key, g) in [("c5_partial_cone_e", IDENTITY), ("c5_partial_cone_t", T), ("c5_partial_cone_st", S.mul(&T))] {
        let table = cone_growth(psl, &g, &params, &ns, dh, true).map_err(e)?;
        spreads.push((key, table.spread(FIT_WINDOW.0, FIT_WINDOW.1).unwrap_or(f64::NAN)));
    }
    let secs = start.elapsed().as_secs_f64();
    let mut pass = secs < GROWTH_BUDGET_SECS;
    let mut parts = Vec::new();
    for (k, v) in &spreads {
        let (ok, text) = matches_frozen(frozen, k, *v);
        pass &= ok;
        parts.push(text);
    }
    Ok(Check { pass, detail: format!("{}; {secs:.1} s", parts.join(", ")), frozen: spreads })
}

fn c6_shadow(psl: &HalfPlaneModel, frozen: &BTreeMap<String, f64>) -> Result<Check, String> {
    let fit = audit::exponent(psl, FIT_WINDOW).map_err(e)?;
    let measure = MeasureApproximant::new(psl, S_FACTOR * fit.delta_hat, CUTOFF_T, fit.delta_hat).map_err(e)?;
    let sample = sample_band(psl, SHADOW_BAND.0, SHADOW_BAND.1, SHADOW_SAMPLES, SEED).map_err(e)?;
    let a = shadow_lemma_audit(psl, &sample, &TransitionParams::default(), &measure).map_err(e)?;
    let (ok1, t1) = matches_frozen(frozen, "c6_plain_spread", a.plain_spread);
    let (ok2, t2) = matches_frozen(frozen, "c6_partial_spread", a.partial_spread);
    Ok(Check {
        pass: a.rows.len() == SHADOW_SAMPLES && ok1 && ok2 && a.partial_le_plain,
        detail: format!(
            "{} elements, s = {:.4}; {t1}, {t2}; partial ρ <= plain ρ for all: {}",
            a.rows.len(),
            measure.s,
            a.partial_le_plain
        ),
        frozen: vec![("c6_plain_spread", a.plain_spread), ("c6_partial_spread", a.partial_spread)],
    })
}

fn c7_conversion(psl: &HalfPlaneModel, frozen: &BTreeMap<String, f64>) -> Result<Check, String> {
    let y = psl.class_horoball(0);
    let o = *psl.basepoint();
    let cutoff = psl.truncation();
    let c = *frozen.get("c7_two_sided").ok_or("c7_two_sided: no frozen value")?;
    // U = S·U_∞ and a point inside U, against V = U_∞ and i
    let u = psl.translate_horoball(&S, &y);
    let x = S.apply(Complex64::new(0.3, 8.0));
    let inside = psl.horoball_distance(&x, &u).map_err(e)?;
    let mut found = None;
    let mut report = None;
    for k in 0..=CONJUGATE_K_MAX {
        let pair = ConjugatePair { u: &u, x: &x, v: &y, y: &o, k: k as f64 };
        let r = conversion_check(psl, &y, &o, &CONVERSION_GRID, 1.0, CONVERSION_S, cutoff, CONVERSION_C_MAX, Some(pair))
            .map_err(e)?;
        let holds = r.conjugate.as_ref().is_some_and(|cc| cc.holds);
        report = Some(r);
        if holds {
            found = Some(k);
            break;
        }
    }
    let r = report.ok_or("no report")?;
    let ratios: Vec<String> =
        r.rows.iter().map(|row| format!("R={}:{}", row.big_r, row.ratio.map_or("skip".into(), |q| format!("{q:.3}")))).collect();
    let (ok, text) = matches_frozen(frozen, "c7_two_sided", r.two_sided);
    let cc = r.conjugate.as_ref().ok_or("no conjugate check")?;
    Ok(Check {
        pass: r.within && ok && c <= CONVERSION_C_MAX && found.is_some() && inside == 0.0,
        detail: format!(
            "ratios [{}]; {text}; c <= {CONVERSION_C_MAX}; conjugate pair (U_∞, S·U_∞) holds with K = {} \
             (constants {:.3}, {:.3})",
            ratios.join(" "),
            found.map_or("none".into(), |k| k.to_string()),
            cc.lower_constant,
            cc.upper_constant
        ),
        frozen: vec![("c7_two_sided", r.two_sided)],
    })
}

fn c8_stability(psl: &HalfPlaneModel, frozen: &BTreeMap<String, f64>) -> Result<Check, String> {
    let params = TransitionParams::default();
    let pairs = sample_pairs(psl, STABILITY_BAND, STABILITY_PAIRS, STABILITY_R, SEED).map_err(e)?;
    let hyp = pairs.iter().all(|(a, c)| psl.distance(a, c).is_ok_and(|d| d < STABILITY_R));
    let a = transition_stability_audit(psl, &pairs, &params, STABILITY_ELL, false).map_err(e)?;
    let (ok, text) = matches_frozen(frozen, "c8_d_hat", a.d_hat);

    let free = build("free2.toml")?;
    let tree = cusped(&free);
    let control_pairs = sample_pairs(tree, STABILITY_BAND, STABILITY_PAIRS, 1.5, SEED).map_err(e)?;
    let control = transition_stability_audit(tree, &control_pairs, &params, STABILITY_ELL, false).map_err(e)?;
    let control_ok = control.pairs_used > 0 && control.d_hat <= control.defect + 1e-12;
    Ok(Check {
        pass: pairs.len() == STABILITY_PAIRS && hyp && a.d_hat.is_finite() && a.pairs_used > 0 && ok && control_ok,
        detail: format!(
            "{} pairs with d(α₊, γ₊) < {STABILITY_R}, {} used; D̂ = {:.4}; {text}; tree control D̂ = {} <= defect {}",
            pairs.len(),
            a.pairs_used,
            a.d_hat,
            control.d_hat,
            control.defect
        ),
        frozen: vec![("c8_d_hat", a.d_hat)],
    })
}

fn inclusions<M: Space>(space: &M, ns: &[f64]) -> Result<(usize, bool), String> {
    let params = TransitionParams::default();
    let mut checked = 0;
    let mut ok = true;
    let mut centers = space.sample_centers();
    centers.extend(sample_band(space, 1.0, 4.0, 6, SEED).map_err(e)?);
    for g in &centers {
        let cone = cone_indices(space, g, params.shadow_r).map_err(e)?;
        let partial = partial_cone_indices(space, g, &cone, &params).map_err(e)?;
        let set: BTreeSet<usize> = cone.iter().cloned().collect();
        ok &= partial.iter().all(|i| set.contains(i));
        checked += partial.len();
    }
    let id = space.identity();
    for &n in ns {
        let omega: BTreeSet<M::Element> = partial_cone_members(space, &id, &params, n, params.width).map_err(e)?.into_iter().collect();
        let a: BTreeSet<M::Element> = annulus(space, &AnnulusQuery::new(id.clone(), n, params.width).map_err(e)?)
            .map_err(e)?
            .into_iter()
            .collect();
        ok &= omega.is_subset(&a);
        checked += omega.len();
    }
    let far = space.truncation() - 1.0;
    let targets = sample_band(space, far - 1.0, far, 12, SEED + 1).map_err(e)?;
    for h in &targets {
        let xi = space.boundary_through(&space.orbit_point(h)).map_err(e)?;
        for g in &centers {
            let partial = partial_shadow_contains(space, &xi, g, &params).map_err(e)?;
            let plain = shadow_contains(space, &xi, g, params.shadow_r).map_err(e)?;
            ok &= !partial || plain;
            checked += 1;
        }
    }
    Ok((checked, ok))
}

fn c9_inclusions(psl: &HalfPlaneModel, graph: &CuspedModel) -> Result<Check, String> {
    let (n1, ok1) = inclusions(psl, &[4.0, 6.0, 8.0])?;
    let (n2, ok2) = inclusions(graph, &[3.0, 5.0, 7.0])?;
    Ok(Check {
        pass: ok1 && ok2,
        detail: format!("half-plane: {n1} memberships, all included: {ok1}; cusped graph: {n2}, all included: {ok2}"),
        frozen: vec![],
    })
}

/// Distances from `(e, 0)` to `(a^m, 0)` by breadth-first search over the
/// horoball attached to `⟨a⟩`: vertices `(m, k)`, edges `(m, 0)–(m ± 1, 0)`,
/// `(m, k)–(m, k + 1)` and `(m, k)–(m + j, k)` for `0 < |j| <= 2^k`.
fn strip_distances(depth: u32, reach: i64) -> BTreeMap<i64, u32> {
    let mut dist: BTreeMap<(i64, u32), u32> = BTreeMap::new();
    let mut queue = VecDeque::from([(0i64, 0u32)]);
    dist.insert((0, 0), 0);
    let bound = reach * 4;
    while let Some((m, k)) = queue.pop_front() {
        let d = dist[&(m, k)];
        let mut next = Vec::new();
        let span = if k == 0 { 1 } else { 1i64 << k };
        for j in 1..=span {
            next.push((m + j, k));
            next.push((m - j, k));
        }
        if k < depth {
            next.push((m, k + 1));
        }
        if k > 0 {
            next.push((m, k - 1));
        }
        for v in next {
            if v.0.abs() <= bound && !dist.contains_key(&v) {
                dist.insert(v, d + 1);
                queue.push_back(v);
            }
        }
    }
    dist.into_iter().filter(|((_, k), _)| *k == 0).map(|((m, _), d)| (m, d)).collect()
}

fn c10_distortion(graph: &CuspedModel) -> Result<Check, String> {
    let oracle = strip_distances(graph.max_depth() as u32, DISTORTION_MAX_N);
    let mut worst = 0.0f64;
    let mut agree = true;
    for n in 1..=DISTORTION_MAX_N {
        let d = graph.parabolic_distortion(0, n).map_err(e)?;
        agree &= oracle.get(&n).map(|&x| x as f64) == Some(d);
        worst = worst.max((d - 2.0 * (n as f64).log2()).abs());
    }
    let window = (FIT_WINDOW.0, FIT_WINDOW.1.min(graph.truncation()));
    let (dg, dp, inc, _, _, pgp) = dop_summary(graph, window)?;
    Ok(Check {
        pass: agree && worst <= DISTORTION_BOUND && dg > dp && pgp && inc < DOP_INCREMENT_BOUND,
        detail: format!(
            "graph distance = strip BFS for n <= {DISTORTION_MAX_N}: {agree}; max |d - 2 log2 n| = {worst:.3}; \
             δ̂_G = {dg:.4} > δ̂_P = {dp:.4}; max |S_2N - S_N| (N >= {DOP_FROM}) = {inc:.2e}"
        ),
        frozen: vec![],
    })
}

fn c11_determinism() -> Result<Check, String> {
    let bin = env!("CARGO_BIN_EXE_cuspgrowth");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("free2.toml", vec!["--command", "growth", "--kind", "orbit"]),
        ("free2.toml", vec!["--command", "growth", "--kind", "horoball"]),
        ("free2.toml", vec!["--command", "exponent"]),
        ("free2.toml", vec!["--command", "dop"]),
        ("free2.toml", vec!["--command", "shadow-audit", "--samples", "5"]),
        ("free2_cusped.toml", vec!["--command", "growth", "--kind", "parabolic"]),
        ("free2_cusped.toml", vec!["--command", "growth", "--kind", "partial_cone"]),
        ("free2_cusped.toml", vec!["--command", "shadow-audit", "--samples", "20", "--seed", "7"]),
        ("free2_cusped.toml", vec!["--command", "theorem-audit", "--format", "json-like"]),
        ("free2_cusped.toml", vec!["--command", "theorem-audit", "--format", "text"]),
        ("psl2z.toml", vec!["--command", "growth", "--kind", "horoball"]),
        ("psl2z.toml", vec!["--command", "growth", "--kind", "cone", "--center", "S T"]),
        ("psl2z.toml", vec!["--command", "exponent"]),
        ("psl2z.toml", vec!["--command", "dop", "--format", "json-like"]),
        ("psl2z.toml", vec!["--command", "shadow-audit", "--samples", "20", "--seed", "3"]),
        ("psl2z.toml", vec!["--command", "growth", "--kind", "orbit", "--format", "text"]),
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for (i, (spec, args)) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("run{i}_{rep}"));
            let status = Command::new(bin)
                .arg("--spec")
                .arg(specs().join(spec))
                .args(args)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if status.code() == Some(2) {
                failures.push(format!("{spec} {args:?}: exit 2"));
            }
            outputs.push(std::fs::read(&out).unwrap_or_default());
        }
        if outputs[0] == outputs[1] && !outputs[0].is_empty() {
            identical += 1;
        } else {
            failures.push(format!("{spec} {args:?}: outputs differ"));
        }
    }
    Ok(Check {
        pass: failures.is_empty(),
        detail: format!("{identical}/{} reruns byte-identical{}", runs.len(), if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }),
        frozen: vec![],
    })
}

fn main() -> ExitCode {
    let frozen = frozen_values();
    let freeze = std::env::var_os("ACCEPTANCE_FREEZE").is_some();
    let psl_model = match build("psl2z.toml") {
        Ok(m) => m,
        Err(err) => {
            println!("cannot build the PSL(2,Z) spec: {err}");
            return ExitCode::FAILURE;
        }
    };
    let graph_model = match build("free2_cusped.toml") {
        Ok(m) => m,
        Err(err) => {
            println!("cannot build the cusped spec: {err}");
            return ExitCode::FAILURE;
        }
    };
    let psl = half_plane(&psl_model);
    let graph = cusped(&graph_model);

    type Run<'a> = Box<dyn Fn() -> Result<Check, String> + 'a>;
    let criteria: Vec<(u8, &str, Run)> = vec![
        (1, "enumerator oracle equivalence", Box::new(|| c1_enumerators(psl))),
        (2, "exact tree growth", Box::new(c2_tree)),
        (3, "PSL(2,Z) exponents and PGP", Box::new(|| c3_exponents(psl))),
        (4, "DOP partial sums stabilize", Box::new(|| c4_dop(psl))),
        (5, "purely exponential growth audit", Box::new(|| c5_growth(psl, &frozen))),
        (6, "shadow lemma audits", Box::new(|| c6_shadow(psl, &frozen))),
        (7, "conversion identities", Box::new(|| c7_conversion(psl, &frozen))),
        (8, "transition stability", Box::new(|| c8_stability(psl, &frozen))),
        (9, "definitional inclusions", Box::new(|| c9_inclusions(psl, graph))),
        (10, "cusped-graph distortion", Box::new(|| c10_distortion(graph))),
        (11, "determinism", Box::new(c11_determinism)),
    ];

    let mut unexpected = Vec::new();
    let mut measured = Vec::new();
    for (id, name, run) in &criteria {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let expected = EXPECTED_FAILURES.iter().find(|(k, _)| k == id);
        let (pass, detail) = match result {
            Ok(c) => {
                measured.extend(c.frozen);
                (c.pass, c.detail)
            }
            Err(err) => (false, format!("error: {err}")),
        };
        let label = match (pass, expected) {
            (true, None) => "PASS",
            (true, Some(_)) => "PASS (listed as expected failure)",
            (false, Some(_)) => "FAIL (expected)",
            (false, None) => "FAIL",
        };
        println!("criterion {id:>2} {label}: {name}: {detail} [{secs:.1} s]");
        if let (false, Some((_, why))) = (pass, expected) {
            println!("             expected failure: {why}");
        }
        if !pass && expected.is_none() {
            unexpected.push(*id);
        }
    }
    if freeze {
        println!("# frozen regression values");
        for (k, v) in &measured {
            println!("{k} = {v:?}");
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: every criterion passes or is a documented expected failure");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
