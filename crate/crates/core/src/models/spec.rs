//! Group-spec files.
//!
//! A spec is a TOML document:
//!
//! ```toml
//! model = "half_plane"              # or "cusped_cayley"
//! generators = [[1, 1, 0, 1], [0, -1, 1, 0]]
//! parabolics = [[[1, 1, 0, 1]]]     # one list of generators per class
//! horoball_height = 1.0
//! truncation_radius = 12.0
//! basepoint = [0.0, 1.0]
//! ```
//!
//! Cusped-Cayley specs list generator symbols instead of matrices. A symbol
//! may carry a finite order as `"s:2"`; without one it has infinite order.
//! Parabolic classes are lists of symbols, `max_depth` replaces
//! `horoball_height` and `basepoint` is a word such as `"e"` or `"a b^-1"`.
//! Unknown fields are rejected.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::models::half_plane::Mat2;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    model: String,
    generators: toml::Value,
    #[serde(default)]
    parabolics: Option<toml::Value>,
    #[serde(default)]
    horoball_height: Option<f64>,
    #[serde(default)]
    max_depth: Option<i64>,
    truncation_radius: f64,
    #[serde(default)]
    basepoint: Option<toml::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfPlaneSpec {
    pub generators: Vec<Mat2>,
    pub parabolics: Vec<Vec<Mat2>>,
    pub horoball_height: f64,
    pub truncation_radius: f64,
    pub basepoint: Complex64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSymbol {
    pub name: String,
    /// `0` for infinite order.
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CuspedSpec {
    pub generators: Vec<GeneratorSymbol>,
    pub parabolics: Vec<Vec<String>>,
    pub max_depth: u32,
    pub truncation_radius: f64,
    pub basepoint: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupSpec {
    HalfPlane(HalfPlaneSpec),
    CuspedCayley(CuspedSpec),
}

impl GroupSpec {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Spec(e.message().to_string()))?;
        if !(raw.truncation_radius >= 1.0) {
            return Err(Error::Spec("truncation_radius must be at least 1".into()));
        }
        match raw.model.as_str() {
            "half_plane" => {
                if raw.max_depth.is_some() {
                    return Err(Error::Spec("max_depth applies to cusped_cayley models".into()));
                }
                let generators = matrix_list(&raw.generators, "generators")?;
                let parabolics = match &raw.parabolics {
                    None => Vec::new(),
                    Some(v) => array(v, "parabolics")?
                        .iter()
                        .map(|class| matrix_list(class, "parabolics"))
                        .collect::<Result<_>>()?,
                };
                let basepoint = match &raw.basepoint {
                    None => Complex64::new(0.0, 1.0),
                    Some(v) => {
                        let xs = array(v, "basepoint")?;
                        let [re, im] = xs.as_slice() else {
                            return Err(Error::Spec("half-plane basepoint is [re, im]".into()));
                        };
                        Complex64::new(number(re)?, number(im)?)
                    }
                };
                Ok(GroupSpec::HalfPlane(HalfPlaneSpec {
                    generators,
                    parabolics,
                    horoball_height: raw.horoball_height.unwrap_or(1.0),
                    truncation_radius: raw.truncation_radius,
                    basepoint,
                }))
            }
            "cusped_cayley" => {
                if raw.horoball_height.is_some() {
                    return Err(Error::Spec("horoball_height applies to half_plane models".into()));
                }
                let generators = array(&raw.generators, "generators")?
                    .iter()
                    .map(|v| symbol(v).and_then(|s| parse_symbol(&s)))
                    .collect::<Result<Vec<_>>>()?;
                let parabolics = match &raw.parabolics {
                    None => Vec::new(),
                    Some(v) => array(v, "parabolics")?
                        .iter()
                        .map(|class| array(class, "parabolics")?.iter().map(symbol).collect::<Result<Vec<_>>>())
                        .collect::<Result<_>>()?,
                };
                let max_depth = raw.max_depth.unwrap_or(if parabolics.is_empty() { 0 } else { 1 });
                if !(0..=30).contains(&max_depth) {
                    return Err(Error::Spec("max_depth must lie in 0..=30".into()));
                }
                if !parabolics.is_empty() && max_depth < 1 {
                    return Err(Error::Spec("parabolic classes need max_depth >= 1".into()));
                }
                let basepoint = match &raw.basepoint {
                    None => "e".to_string(),
                    Some(v) => symbol(v)?,
                };
                Ok(GroupSpec::CuspedCayley(CuspedSpec {
                    generators,
                    parabolics,
                    max_depth: max_depth as u32,
                    truncation_radius: raw.truncation_radius,
                    basepoint,
                }))
            }
            other => Err(Error::Spec(format!("unknown model kind `{other}`"))),
        }
    }

    pub fn truncation_radius(&self) -> f64 {
        match self {
            GroupSpec::HalfPlane(s) => s.truncation_radius,
            GroupSpec::CuspedCayley(s) => s.truncation_radius,
        }
    }
}

fn array<'a>(v: &'a toml::Value, field: &str) -> Result<&'a Vec<toml::Value>> {
    v.as_array().ok_or_else(|| Error::Spec(format!("`{field}` must be an array")))
}

fn number(v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(n) => Ok(*n as f64),
        _ => Err(Error::Spec("expected a number".into())),
    }
}

fn symbol(v: &toml::Value) -> Result<String> {
    v.as_str().map(str::to_string).ok_or_else(|| Error::Spec("expected a string".into()))
}

fn matrix_list(v: &toml::Value, field: &str) -> Result<Vec<Mat2>> {
    array(v, field)?
        .iter()
        .map(|row| {
            let xs = array(row, field)?;
            let ints = xs
                .iter()
                .map(|x| x.as_integer().ok_or_else(|| Error::Spec(format!("`{field}` entries must be integers"))))
                .collect::<Result<Vec<_>>>()?;
            let [a, b, c, d] = ints.as_slice() else {
                return Err(Error::Spec(format!("`{field}` matrices are rows of 4 integers")));
            };
            let m = Mat2::new(*a, *b, *c, *d);
            if m.det() != 1 {
                return Err(Error::Spec(format!("matrix {m} is not unimodular")));
            }
            Ok(m)
        })
        .collect()
}

fn parse_symbol(s: &str) -> Result<GeneratorSymbol> {
    let (name, order) = match s.split_once(':') {
        None => (s, 0),
        Some((name, order)) => {
            let order: u32 = order.trim().parse().map_err(|_| Error::Spec(format!("bad generator order in `{s}`")))?;
            if order < 2 {
                return Err(Error::Spec(format!("generator order must be at least 2 in `{s}`")));
            }
            (name, order)
        }
    };
    let name = name.trim();
    if name.is_empty() || name == "e" || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::Spec(format!("invalid generator symbol `{s}`")));
    }
    Ok(GeneratorSymbol { name: name.to_string(), order })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODULAR: &str = r#"
model = "half_plane"
generators = [[1, 1, 0, 1], [0, -1, 1, 0]]
parabolics = [[[1, 1, 0, 1]]]
horoball_height = 1.0
truncation_radius = 8
"#;

    #[test]
    fn parses_half_plane() {
        let GroupSpec::HalfPlane(s) = GroupSpec::parse(MODULAR).unwrap() else { panic!() };
        assert_eq!(s.generators.len(), 2);
        assert_eq!(s.parabolics, vec![vec![Mat2::new(1, 1, 0, 1)]]);
        assert_eq!(s.basepoint, Complex64::new(0.0, 1.0));
    }

    #[test]
    fn parses_cusped() {
        let text = "model = \"cusped_cayley\"\ngenerators = [\"a\", \"b\", \"s:2\"]\nparabolics = [[\"a\"]]\nmax_depth = 5\ntruncation_radius = 6\n";
        let GroupSpec::CuspedCayley(s) = GroupSpec::parse(text).unwrap() else { panic!() };
        assert_eq!(s.generators[2], GeneratorSymbol { name: "s".into(), order: 2 });
        assert_eq!(s.max_depth, 5);
        assert_eq!(s.basepoint, "e");
    }

    #[test]
    fn rejects_unknown_fields_and_bad_matrices() {
        assert!(matches!(GroupSpec::parse(&format!("{MODULAR}colour = 3\n")), Err(Error::Spec(_))));
        let bad = MODULAR.replace("[0, -1, 1, 0]", "[2, 0, 0, 1]");
        assert!(matches!(GroupSpec::parse(&bad), Err(Error::Spec(_))));
        assert!(matches!(GroupSpec::parse("model = \"sphere\"\ngenerators = []\ntruncation_radius = 3"), Err(Error::Spec(_))));
    }
}
