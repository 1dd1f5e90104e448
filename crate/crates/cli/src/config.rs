use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use cusp_growth::enumeration::GrowthKind;

#[derive(Parser, Debug)]
#[command(name = "cuspgrowth", version, about = "Growth and boundary audits for cusp-uniform group actions")]
pub struct Args {
    /// Group spec file (TOML).
    #[arg(long)]
    pub spec: PathBuf,
    /// growth | exponent | dop | shadow-audit | theorem-audit
    #[arg(long)]
    pub command: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv | json-like | text
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Growth table kind: orbit, horoball, parabolic, cone, partial_cone.
    #[arg(long)]
    pub kind: Option<String>,
    /// Cone center for cone growth; repeat for several. Default: a fixed sample.
    #[arg(long)]
    pub center: Vec<String>,
    /// Annulus width Δ.
    #[arg(long)]
    pub delta_width: Option<f64>,
    /// Shadow and cone radius r.
    #[arg(long)]
    pub shadow_r: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub big_r: Option<f64>,
    /// Measure exponent s; default 1.05 times the fitted exponent.
    #[arg(long)]
    pub s: Option<f64>,
    /// Measure cutoff T.
    #[arg(long)]
    pub cutoff_t: Option<f64>,
    /// Radius window `n1:n2`.
    #[arg(long)]
    pub window: Option<String>,
    /// Max/min ceiling for normalized growth.
    #[arg(long)]
    pub ceiling: Option<f64>,
    /// Number of sampled elements for the shadow audit.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Distance band `lo:hi` of sampled elements for the shadow audit.
    #[arg(long)]
    pub band: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Growth,
    Exponent,
    Dop,
    ShadowAudit,
    TheoremAudit,
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "growth" => Command::Growth,
            "exponent" => Command::Exponent,
            "dop" => Command::Dop,
            "shadow-audit" => Command::ShadowAudit,
            "theorem-audit" => Command::TheoremAudit,
            _ => return Err(format!("unknown command `{s}`")),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Growth => "growth",
            Command::Exponent => "exponent",
            Command::Dop => "dop",
            Command::ShadowAudit => "shadow-audit",
            Command::TheoremAudit => "theorem-audit",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Structured,
    Text,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-like" | "json" | "structured" => Ok(Format::Structured),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format `{s}`; expected csv, json-like or text")),
        }
    }
}

#[derive(Debug)]
pub struct RunConfig {
    pub spec: PathBuf,
    pub command: Command,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub kind: GrowthKind,
    pub centers: Vec<String>,
    pub width: Option<f64>,
    pub shadow_r: Option<f64>,
    pub eps: Option<f64>,
    pub big_r: Option<f64>,
    pub s: Option<f64>,
    pub cutoff_t: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub ceiling: Option<f64>,
    pub samples: Option<usize>,
    pub band: Option<(f64, f64)>,
}

fn parse_range(flag: &str, text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text.split_once(':').ok_or_else(|| format!("--{flag} expects lo:hi, got `{text}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("--{flag}: bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("--{flag}: bad number `{b}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(format!("--{flag} needs 0 <= lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn positive(flag: &str, v: Option<f64>) -> Result<Option<f64>, String> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(format!("--{flag} must be positive and finite, got {x}")),
        _ => Ok(v),
    }
}

impl RunConfig {
    pub fn from_args(a: Args) -> Result<Self, String> {
        use Command::*;
        let command: Command = a.command.parse()?;
        let format: Format = a.format.parse()?;

        // flag -> commands accepting it
        let allowed: [(&str, bool, &[Command]); 12] = [
            ("kind", a.kind.is_some(), &[Growth]),
            ("center", !a.center.is_empty(), &[Growth, TheoremAudit]),
            ("delta-width", a.delta_width.is_some(), &[Growth, Dop, ShadowAudit, TheoremAudit]),
            ("shadow-r", a.shadow_r.is_some(), &[Growth, ShadowAudit, TheoremAudit]),
            ("eps", a.eps.is_some(), &[Growth, ShadowAudit, TheoremAudit]),
            ("big-r", a.big_r.is_some(), &[Growth, ShadowAudit, TheoremAudit]),
            ("s", a.s.is_some(), &[ShadowAudit]),
            ("cutoff-t", a.cutoff_t.is_some(), &[ShadowAudit]),
            ("window", a.window.is_some(), &[Growth, Exponent, Dop, TheoremAudit]),
            ("ceiling", a.ceiling.is_some(), &[TheoremAudit]),
            ("samples", a.samples.is_some(), &[ShadowAudit]),
            ("band", a.band.is_some(), &[ShadowAudit]),
        ];
        for (flag, given, cmds) in allowed {
            if given && !cmds.contains(&command) {
                return Err(format!("--{flag} does not apply to `{command}`"));
            }
        }

        let kind: GrowthKind = match &a.kind {
            None => GrowthKind::Orbit,
            Some(k) => k.parse().map_err(|_| format!("unknown growth kind `{k}`"))?,
        };
        if !a.center.is_empty() && command == Growth && !matches!(kind, GrowthKind::Cone | GrowthKind::PartialCone) {
            return Err("--center applies to cone and partial_cone growth".into());
        }
        if a.samples == Some(0) {
            return Err("--samples must be at least 1".into());
        }
        if let Some(t) = a.cutoff_t {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(format!("--cutoff-t must be nonnegative, got {t}"));
            }
        }
        if let Some(c) = a.ceiling {
            if !(c >= 1.0) {
                return Err(format!("--ceiling must be at least 1, got {c}"));
            }
        }
        Ok(RunConfig {
            spec: a.spec,
            command,
            out: a.out,
            format,
            seed: a.seed,
            kind,
            centers: a.center,
            width: positive("delta-width", a.delta_width)?,
            shadow_r: positive("shadow-r", a.shadow_r)?,
            eps: positive("eps", a.eps)?,
            big_r: positive("big-r", a.big_r)?,
            s: positive("s", a.s)?,
            cutoff_t: a.cutoff_t,
            window: a.window.as_deref().map(|w| parse_range("window", w)).transpose()?,
            ceiling: a.ceiling,
            samples: a.samples,
            band: a.band.as_deref().map(|w| parse_range("band", w)).transpose()?,
        })
    }
}
