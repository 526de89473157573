//! Session configuration: a flat `key = value` text format with `[section]` headers.
//!
//! ```text
//! # comments start with '#'
//! [session]
//! s = 0.55
//! N = 32
//! [chi]
//! ramp_ratio = 4
//! ```
//!
//! Keys before the first header belong to `[session]`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kdvnf::audit::SymbolCase;
use kdvnf::field::SpectralField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `<n>^{-decay}` with random phases.
    Smooth,
    /// Unit modulus with random phases.
    White,
    Zero,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smooth" => Ok(Self::Smooth),
            "white" => Ok(Self::White),
            "zero" => Ok(Self::Zero),
            other => Err(format!("unknown profile `{other}` (expected smooth, white or zero)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub picard_tol: f64,
    pub max_iter: usize,
    /// Largest accepted Picard contraction ratio.
    pub contraction: f64,
    /// Largest accepted relative change of a bounded supremum between `Nmax / 2` and `Nmax`.
    pub sup_change: f64,
    /// Allowed distance of the unrestricted fit from `2s - 1`.
    pub fit: f64,
    pub cancellation: f64,
    /// Smallest accepted residual ratio under step halving.
    pub reduction: f64,
    pub order: f64,
    /// Slack on the predicted `-(3/2 - s)` shell slope.
    pub smoothing_slack: f64,
    pub strichartz_growth: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            picard_tol: 1e-14,
            max_iter: 40,
            contraction: 0.5,
            sup_change: 0.05,
            fit: 0.1,
            cancellation: 1e-6,
            reduction: 8.0,
            order: 3.5,
            smoothing_slack: 0.15,
            strichartz_growth: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionConfig {
    pub s: f64,
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T_w")]
    pub t_w: f64,
    /// Reference solver step.
    pub dt: f64,
    /// Smallness threshold on `||f||`.
    pub delta: f64,
    pub seed: u64,
    pub profile: Profile,
    pub decay: f64,
    /// `||f||`; defaults to `delta`.
    pub norm: Option<f64>,
    pub threshold_const: f64,
    pub ramp_ratio: f64,
    pub tolerances: Tolerances,
    pub audit_n_max: usize,
    pub audit_case: Option<String>,
    pub verify_amplitude: f64,
    pub verify_dt: f64,
    pub verify_nf_t_w: f64,
    pub verify_nf_dt: f64,
    pub verify_ensemble: usize,
    /// Where artifacts go; not part of the artifact identity.
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            s: 0.55,
            eps: 0.01,
            n: 32,
            m: 256,
            t_w: 2.0,
            dt: 1e-3,
            delta: 1e-3,
            seed: 1,
            profile: Profile::Smooth,
            decay: 4.0,
            norm: None,
            threshold_const: 3.0,
            ramp_ratio: 4.0,
            tolerances: Tolerances::default(),
            audit_n_max: 128,
            audit_case: None,
            verify_amplitude: 0.3,
            verify_dt: 1e-3,
            verify_nf_t_w: 0.01,
            verify_nf_dt: 4e-5,
            verify_ensemble: 16,
            output_dir: PathBuf::from("."),
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| ConfigError::at(line, format!("bad value `{value}` for `{key}`: {e}")))
}

impl SessionConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::invariant(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        let mut section = String::from("session");
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                    .trim();
                if !["session", "data", "chi", "tolerances", "audit", "verify", "output"].contains(&name) {
                    return Err(ConfigError::at(line, format!("unknown section `[{name}]`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, found `{body}`")))?;
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::at(line, "empty key or value"));
            }
            c.set(&section, key, value, line)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let t = &mut self.tolerances;
        match (section, key) {
            ("session", "s") => self.s = parse(line, key, value)?,
            ("session", "eps") => self.eps = parse(line, key, value)?,
            ("session", "N") => self.n = parse(line, key, value)?,
            ("session", "M") => self.m = parse(line, key, value)?,
            ("session", "T_w") => self.t_w = parse(line, key, value)?,
            ("session", "dt") => self.dt = parse(line, key, value)?,
            ("session", "delta") => self.delta = parse(line, key, value)?,
            ("session", "seed") => self.seed = parse(line, key, value)?,
            ("data", "profile") => self.profile = parse(line, key, value)?,
            ("data", "decay") => self.decay = parse(line, key, value)?,
            ("data", "norm") => self.norm = Some(parse(line, key, value)?),
            ("chi", "threshold_const") => self.threshold_const = parse(line, key, value)?,
            ("chi", "ramp_ratio") => self.ramp_ratio = parse(line, key, value)?,
            ("tolerances", "picard_tol") => t.picard_tol = parse(line, key, value)?,
            ("tolerances", "max_iter") => t.max_iter = parse(line, key, value)?,
            ("tolerances", "contraction") => t.contraction = parse(line, key, value)?,
            ("tolerances", "sup_change") => t.sup_change = parse(line, key, value)?,
            ("tolerances", "fit") => t.fit = parse(line, key, value)?,
            ("tolerances", "cancellation") => t.cancellation = parse(line, key, value)?,
            ("tolerances", "reduction") => t.reduction = parse(line, key, value)?,
            ("tolerances", "order") => t.order = parse(line, key, value)?,
            ("tolerances", "smoothing_slack") => t.smoothing_slack = parse(line, key, value)?,
            ("tolerances", "strichartz_growth") => t.strichartz_growth = parse(line, key, value)?,
            ("audit", "n_max") => self.audit_n_max = parse(line, key, value)?,
            ("audit", "case") => {
                SymbolCase::from_str(value).map_err(|e| ConfigError::at(line, e.to_string()))?;
                self.audit_case = Some(value.to_string());
            }
            ("verify", "amplitude") => self.verify_amplitude = parse(line, key, value)?,
            ("verify", "dt") => self.verify_dt = parse(line, key, value)?,
            ("verify", "nf_T_w") => self.verify_nf_t_w = parse(line, key, value)?,
            ("verify", "nf_dt") => self.verify_nf_dt = parse(line, key, value)?,
            ("verify", "ensemble") => self.verify_ensemble = parse(line, key, value)?,
            ("output", "dir") => self.output_dir = PathBuf::from(value),
            _ => return Err(ConfigError::at(line, format!("unknown key `{key}` in [{section}]"))),
        }
        Ok(())
    }

    /// Checks the session invariants; each message names the one violated.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::invariant(m));
        if !(0.5..2.0 / 3.0).contains(&self.s) {
            return fail(format!("s = {} violates 1/2 <= s < 2/3", self.s));
        }
        if !(self.eps > 0.0 && self.eps < 0.1) {
            return fail(format!("eps = {} violates 0 < eps < 0.1", self.eps));
        }
        if !self.n.is_power_of_two() {
            return fail(format!("N = {} is not a power of two", self.n));
        }
        if !self.m.is_power_of_two() || self.m < 4 {
            return fail(format!("M = {} is not a power of two >= 4", self.m));
        }
        if !self.audit_n_max.is_power_of_two() {
            return fail(format!("audit n_max = {} is not a power of two", self.audit_n_max));
        }
        for (name, v) in [("T_w", self.t_w), ("dt", self.dt), ("verify dt", self.verify_dt), ("verify nf_dt", self.verify_nf_dt), ("verify nf_T_w", self.verify_nf_t_w)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.delta >= 0.0) || self.norm.is_some_and(|n| !(n >= 0.0)) {
            return fail("delta and data norm must be nonnegative".into());
        }
        if !(self.threshold_const > 0.0 && self.ramp_ratio > 1.0) {
            return fail(format!(
                "chi needs threshold_const > 0 and ramp_ratio > 1, got {} and {}",
                self.threshold_const, self.ramp_ratio
            ));
        }
        if self.verify_ensemble == 0 {
            return fail("verify ensemble must be nonempty".into());
        }
        Ok(())
    }

    pub fn data_norm(&self) -> f64 {
        self.norm.unwrap_or(self.delta)
    }

    /// The session data `f`, drawn from the seed and scaled to `data_norm`.
    pub fn data(&self) -> SpectralField {
        self.data_with(self.n, self.data_norm())
    }

    pub fn data_with(&self, n_max: usize, norm: f64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let decay = self.decay;
        let f = match self.profile {
            Profile::Zero => return SpectralField::zeros(n_max),
            Profile::Smooth => SpectralField::random(n_max, &mut rng, |n| (1.0 + (n * n) as f64).powf(-decay / 2.0)),
            Profile::White => SpectralField::random(n_max, &mut rng, |_| 1.0),
        };
        let l2 = f.l2_norm();
        if norm == 0.0 || l2 == 0.0 {
            SpectralField::zeros(n_max)
        } else {
            f.scale(norm / l2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let c = SessionConfig::parse_str("s = 0.6 # top level\n[chi]\nramp_ratio = 3\n\n[output]\ndir = out\n").unwrap();
        assert_eq!(c.s, 0.6);
        assert_eq!(c.ramp_ratio, 3.0);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = SessionConfig::parse_str("s = 0.6\n\nN 32\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = SessionConfig::parse_str("[chi]\nN = 32\n").unwrap_err();
        assert!(e.to_string().starts_with("line 2: unknown key"));
        let e = SessionConfig::parse_str("[bogus]\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = SessionConfig::parse_str("N = 3x\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn invariants_are_named() {
        assert!(SessionConfig::parse_str("s = 0.7").unwrap_err().to_string().contains("s < 2/3"));
        assert!(SessionConfig::parse_str("N = 24").unwrap_err().to_string().contains("power of two"));
    }

    #[test]
    fn data_has_requested_norm_and_is_seeded() {
        let c = SessionConfig::default();
        let f = c.data();
        assert!((f.l2_norm() - 1e-3).abs() < 1e-15);
        assert_eq!(f, c.data());
        let mut zero = c.clone();
        zero.profile = Profile::Zero;
        assert_eq!(zero.data().l2_norm(), 0.0);
    }
}
