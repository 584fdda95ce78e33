//! Scenario configurations with reference defaults, JSON loading, and the
//! value grammar shared by config files and flags: angles as plain radians
//! or rational multiples of π (`"3/16 pi"`), loss parameters as numbers or
//! fractions (`"2/3"`).

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use qwalk::{default_theta1_sweep, DisorderSpec, FrameChoice};

/// Parses `"0.3927"`, `"1/8 pi"`, `"-pi"`, `"2 pi"`, or `"3/2"` (radians).
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty angle".to_string());
    }
    if let Ok(v) = t.parse::<f64>() {
        return finite(v, s);
    }
    let lower = t.to_ascii_lowercase();
    let (prefix, unit) = match lower.strip_suffix("pi") {
        Some(rest) => (rest.trim_end(), PI),
        None => (lower.as_str(), 1.0),
    };
    let factor = match prefix {
        "" | "+" => 1.0,
        "-" => -1.0,
        _ => parse_ratio(prefix).ok_or_else(|| format!("cannot parse angle {s:?}"))?,
    };
    finite(factor * unit, s)
}

/// Parses `"0.36"`, `"2/3"`, or `"1"` and checks the `[0, 1]` range.
pub fn parse_loss(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let v = t
        .parse::<f64>()
        .ok()
        .or_else(|| parse_ratio(t))
        .ok_or_else(|| format!("cannot parse loss parameter {s:?}"))?;
    qwalk::LossParameter::new(v)
        .map(|p| p.value())
        .map_err(|e| e.to_string())
}

pub fn parse_angle_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_angle).collect()
}

pub fn parse_loss_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_loss).collect()
}

fn parse_ratio(s: &str) -> Option<f64> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once('/') {
        let num: f64 = a.trim().parse().ok()?;
        let den: f64 = b.trim().parse().ok()?;
        if den == 0.0 {
            return None;
        }
        Some(num / den)
    } else {
        t.parse().ok()
    }
}

fn finite(v: f64, src: &str) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite angle {src:?}"))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

/// An angle in radians; deserializes from a number or the `"a/b pi"` form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle(pub f64);

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) if v.is_finite() => Ok(Angle(v)),
            NumOrStr::Num(v) => Err(serde::de::Error::custom(format!("non-finite angle {v}"))),
            NumOrStr::Str(s) => parse_angle(&s).map(Angle).map_err(serde::de::Error::custom),
        }
    }
}

/// A loss parameter in `[0, 1]`; deserializes from a number or `"a/b"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Loss(pub f64);

impl Serialize for Loss {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Loss {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => v,
            NumOrStr::Str(s) => parse_loss(&s).map_err(serde::de::Error::custom)?,
        };
        qwalk::LossParameter::new(v)
            .map(|p| Loss(p.value()))
            .map_err(serde::de::Error::custom)
    }
}

/// Which artifact kinds to write.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut f = Formats {
            csv: false,
            json: false,
            svg: false,
        };
        for part in s.split(',') {
            match part.trim() {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => return Err(format!("unknown format {other:?} (expected csv, json, svg)")),
            }
        }
        if !(f.csv || f.json || f.svg) {
            return Err("no output formats selected".to_string());
        }
        Ok(f)
    }
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            csv: true,
            json: true,
            svg: false,
        }
    }
}

fn sweep_angles() -> Vec<Angle> {
    default_theta1_sweep().into_iter().map(Angle).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct DisplacementScanConfig {
    pub theta2: Angle,
    pub theta1_list: Vec<Angle>,
    pub p_list: Vec<Loss>,
    pub steps: u32,
    pub frame: FrameChoice,
}

impl Default for DisplacementScanConfig {
    fn default() -> Self {
        Self {
            theta2: Angle(PI / 4.0),
            theta1_list: sweep_angles(),
            p_list: vec![Loss(1.0), Loss(2.0 / 3.0), Loss(9.0 / 25.0)],
            steps: 7,
            frame: FrameChoice::Prime,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct PhaseDiagramConfig {
    pub theta1_min: Angle,
    pub theta1_max: Angle,
    pub theta2_min: Angle,
    pub theta2_max: Angle,
    /// Grid points per axis (inclusive of both ends).
    pub resolution: usize,
    pub p: Loss,
    pub k_grid: usize,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        Self {
            theta1_min: Angle(-PI),
            theta1_max: Angle(PI),
            theta2_min: Angle(-PI),
            theta2_max: Angle(PI),
            resolution: 41,
            p: Loss(2.0 / 3.0),
            k_grid: 256,
        }
    }
}

/// The three boundary configurations studied at `x₀ = 4`: same phase (`a`),
/// distinct `ν_π` (`b`), distinct `ν₀` and `ν_π` (`c`).
pub const EDGE_CASES: [(char, f64, f64); 3] = [
    ('a', PI / 16.0, PI / 8.0),
    ('b', -7.0 * PI / 16.0, -3.0 * PI / 8.0),
    ('c', -5.0 * PI / 8.0, -9.0 * PI / 16.0),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct EdgeConfig {
    pub inner_theta1: Angle,
    pub inner_theta2: Angle,
    /// Named outer-region presets `"a"`, `"b"`, `"c"`; ignored when both
    /// explicit outer angles are set.
    pub case: Option<String>,
    pub outer_theta1: Option<Angle>,
    pub outer_theta2: Option<Angle>,
    /// Region boundary `x₀`: sites with `|x| ≤ x₀` take the inner angles.
    pub boundary: i32,
    pub p: Loss,
    pub steps: u32,
    pub start: i32,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            inner_theta1: Angle(PI / 8.0),
            inner_theta2: Angle(3.0 * PI / 16.0),
            case: None,
            outer_theta1: None,
            outer_theta2: None,
            boundary: 4,
            p: Loss(2.0 / 3.0),
            steps: 5,
            start: 4,
        }
    }
}

impl EdgeConfig {
    /// Fills in the outer angles from the named case (default `b`) unless
    /// both were given explicitly; errors on a half-specified pair or an
    /// unknown case name.
    pub fn resolved(mut self, default_case: char) -> Result<Self, String> {
        match (self.outer_theta1, self.outer_theta2) {
            (Some(_), Some(_)) => Ok(self),
            (None, None) => {
                let name = match &self.case {
                    Some(c) => {
                        let mut chars = c.chars();
                        match (chars.next(), chars.next()) {
                            (Some(ch), None) => ch,
                            _ => return Err(format!("unknown edge case {c:?}")),
                        }
                    }
                    None => default_case,
                };
                let (_, t1, t2) = EDGE_CASES
                    .iter()
                    .find(|(label, _, _)| *label == name)
                    .copied()
                    .ok_or_else(|| format!("unknown edge case {name:?}"))?;
                self.case = Some(name.to_string());
                self.outer_theta1 = Some(Angle(t1));
                self.outer_theta2 = Some(Angle(t2));
                Ok(self)
            }
            _ => Err("set both outer_theta1 and outer_theta2 or neither".to_string()),
        }
    }

    pub fn layout(&self) -> qwalk::RegionLayout {
        qwalk::RegionLayout {
            boundary: self.boundary,
            inner: qwalk::CoinSpec {
                theta1: self.inner_theta1.0,
                theta2: self.inner_theta2.0,
            },
            outer: qwalk::CoinSpec {
                theta1: self.outer_theta1.expect("resolved").0,
                theta2: self.outer_theta2.expect("resolved").0,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct DisorderEdgeConfig {
    pub inner_theta1: Angle,
    pub inner_theta2: Angle,
    pub case: Option<String>,
    pub outer_theta1: Option<Angle>,
    pub outer_theta2: Option<Angle>,
    pub boundary: i32,
    pub p: Loss,
    pub steps: u32,
    pub start: i32,
    pub amplitude: Angle,
    pub ensemble: usize,
    pub seed: u64,
}

impl Default for DisorderEdgeConfig {
    fn default() -> Self {
        let edge = EdgeConfig::default();
        let spec = DisorderSpec::default();
        Self {
            inner_theta1: edge.inner_theta1,
            inner_theta2: edge.inner_theta2,
            case: None,
            outer_theta1: None,
            outer_theta2: None,
            boundary: edge.boundary,
            p: edge.p,
            steps: edge.steps,
            start: edge.start,
            amplitude: Angle(spec.amplitude),
            ensemble: spec.ensemble_size,
            seed: spec.seed,
        }
    }
}

impl DisorderEdgeConfig {
    /// Resolves the outer-region angles exactly as [`EdgeConfig::resolved`].
    pub fn resolved(self, default_case: char) -> Result<Self, String> {
        let edge = EdgeConfig {
            inner_theta1: self.inner_theta1,
            inner_theta2: self.inner_theta2,
            case: self.case.clone(),
            outer_theta1: self.outer_theta1,
            outer_theta2: self.outer_theta2,
            boundary: self.boundary,
            p: self.p,
            steps: self.steps,
            start: self.start,
        }
        .resolved(default_case)?;
        Ok(Self {
            case: edge.case,
            outer_theta1: edge.outer_theta1,
            outer_theta2: edge.outer_theta2,
            ..self
        })
    }

    pub fn layout(&self) -> qwalk::RegionLayout {
        qwalk::RegionLayout {
            boundary: self.boundary,
            inner: qwalk::CoinSpec {
                theta1: self.inner_theta1.0,
                theta2: self.inner_theta2.0,
            },
            outer: qwalk::CoinSpec {
                theta1: self.outer_theta1.expect("resolved").0,
                theta2: self.outer_theta2.expect("resolved").0,
            },
        }
    }

    pub fn spec(&self) -> DisorderSpec {
        DisorderSpec {
            amplitude: self.amplitude.0,
            seed: self.seed,
            ensemble_size: self.ensemble,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct DisorderScanConfig {
    pub theta2: Angle,
    pub theta1_list: Vec<Angle>,
    pub p: Loss,
    pub steps: u32,
    pub amplitude: Angle,
    pub ensemble: usize,
    pub seed: u64,
    pub frame: FrameChoice,
}

impl Default for DisorderScanConfig {
    fn default() -> Self {
        let spec = DisorderSpec::default();
        Self {
            theta2: Angle(PI / 4.0),
            theta1_list: sweep_angles(),
            p: Loss(2.0 / 3.0),
            steps: 5,
            amplitude: Angle(spec.amplitude),
            ensemble: spec.ensemble_size,
            seed: spec.seed,
            frame: FrameChoice::Prime,
        }
    }
}

impl DisorderScanConfig {
    pub fn spec(&self) -> DisorderSpec {
        DisorderSpec {
            amplitude: self.amplitude.0,
            seed: self.seed,
            ensemble_size: self.ensemble,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct IngestConfig {
    /// CSV count table (`kind,x,t,count`).
    pub input: Option<PathBuf>,
    /// Also write `√N / denominator` standard-error columns.
    pub poisson_errors: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct OracleCheckConfig {
    pub theta1: Angle,
    pub theta2: Angle,
    pub p: Loss,
    pub steps: u32,
    pub trials: u64,
    pub seed: u64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            theta1: Angle(PI / 8.0),
            theta2: Angle(3.0 * PI / 16.0),
            p: Loss(2.0 / 3.0),
            steps: 5,
            trials: 100_000,
            seed: 42,
        }
    }
}

/// Reads a scenario config from JSON; an empty or absent file means all
/// defaults. Unknown keys are rejected.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, String> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    if text.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}
