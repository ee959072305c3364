//! Run configuration: a small key-value file plus flag overrides.
//!
//! Recognized keys (one `key = value` per line, `#` comments):
//!
//! ```text
//! n            = 1                  # complex dimension (>= 1)
//! r            = 2                  # fiber rank (>= 2)
//! connection   = kahler-abelian    # flat | kahler-abelian | nonabelian-test | perturbed
//! k            = 2.0                # connection strength
//! epsilon      = 0.5                # nonabelian-test amplitude / perturbation amplitude
//! profile      = linear             # linear | power | regularized-power | exponential
//! alpha        = 0.5                # power exponent
//! profile-eps  = 1e-6               # regularized-power shift
//! scheme       = tensor-gauss       # tensor-gauss | monte-carlo
//! resolution   = 64                 # per-axis quadrature resolution (>= 2)
//! seed         = 7
//! quick        = false
//! tol.<check-id> = 1e-7             # per-check tolerance override
//! ```

use cpnym::bundle::{BumpForm, ConnectionSpec};
use cpnym::fym::Profile;
use cpnym::geometry::quadrature::Scheme;
use rand::SeedableRng;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnKind {
    Flat,
    KahlerAbelian,
    NonabelianTest,
    Perturbed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Linear,
    Power,
    RegularizedPower,
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    TensorGauss,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteId {
    Geometry,
    Killing,
    Bochner,
    Variation,
    Stability,
    Gap,
}

impl SuiteId {
    pub fn all() -> Vec<SuiteId> {
        vec![
            SuiteId::Geometry,
            SuiteId::Killing,
            SuiteId::Bochner,
            SuiteId::Variation,
            SuiteId::Stability,
            SuiteId::Gap,
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub r: usize,
    pub connection: ConnKind,
    pub k: f64,
    pub epsilon: f64,
    pub profile: ProfileKind,
    pub alpha: f64,
    pub profile_eps: f64,
    pub scheme: SchemeKind,
    pub resolution: usize,
    pub seed: u64,
    pub quick: bool,
    pub suites: Vec<SuiteId>,
    pub tolerance_overrides: BTreeMap<String, f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n: 1,
            r: 2,
            connection: ConnKind::KahlerAbelian,
            k: 2.0,
            epsilon: 0.5,
            profile: ProfileKind::Linear,
            alpha: 0.5,
            profile_eps: 1e-6,
            scheme: SchemeKind::TensorGauss,
            resolution: 64,
            seed: 7,
            quick: false,
            suites: SuiteId::all(),
            tolerance_overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

impl SuiteConfig {
    /// Applies `key = value` lines on top of the current configuration.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| err(line, "expected `key = value`"))?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        self.validate()
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let parse_f64 =
            |v: &str, k: &str| v.parse::<f64>().map_err(|e| err(k, format!("{e}")));
        let parse_usize =
            |v: &str, k: &str| v.parse::<usize>().map_err(|e| err(k, format!("{e}")));
        match key {
            "n" => self.n = parse_usize(value, key)?,
            "r" => self.r = parse_usize(value, key)?,
            "connection" => {
                self.connection = match value {
                    "flat" => ConnKind::Flat,
                    "kahler-abelian" => ConnKind::KahlerAbelian,
                    "nonabelian-test" => ConnKind::NonabelianTest,
                    "perturbed" => ConnKind::Perturbed,
                    other => return Err(err(key, format!("unknown connection `{other}`"))),
                }
            }
            "k" => self.k = parse_f64(value, key)?,
            "epsilon" => self.epsilon = parse_f64(value, key)?,
            "profile" => {
                self.profile = match value {
                    "linear" => ProfileKind::Linear,
                    "power" => ProfileKind::Power,
                    "regularized-power" => ProfileKind::RegularizedPower,
                    "exponential" => ProfileKind::Exponential,
                    other => return Err(err(key, format!("unknown profile `{other}`"))),
                }
            }
            "alpha" => self.alpha = parse_f64(value, key)?,
            "profile-eps" => self.profile_eps = parse_f64(value, key)?,
            "scheme" => {
                self.scheme = match value {
                    "tensor-gauss" => SchemeKind::TensorGauss,
                    "monte-carlo" => SchemeKind::MonteCarlo,
                    other => return Err(err(key, format!("unknown scheme `{other}`"))),
                }
            }
            "resolution" => self.resolution = parse_usize(value, key)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|e| err(key, format!("{e}")))?
            }
            "quick" => {
                self.quick = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => return Err(err(key, format!("expected bool, got `{other}`"))),
                }
            }
            _ => {
                if let Some(check) = key.strip_prefix("tol.") {
                    let v = parse_f64(value, key)?;
                    self.tolerance_overrides.insert(check.to_string(), v);
                } else {
                    return Err(err(key, "unknown key"));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 1 {
            return Err(err("n", "must be >= 1"));
        }
        if self.r < 2 {
            return Err(err("r", "must be >= 2"));
        }
        if self.resolution < 2 {
            return Err(err("resolution", "must be >= 2"));
        }
        if matches!(self.profile, ProfileKind::Power) && !(self.alpha.is_finite()) {
            return Err(err("alpha", "must be finite"));
        }
        Ok(())
    }

    pub fn connection_spec(&self) -> ConnectionSpec {
        let (n, r) = (self.n, self.r);
        match self.connection {
            ConnKind::Flat => ConnectionSpec::Flat { n, r },
            ConnKind::KahlerAbelian => ConnectionSpec::KahlerAbelian { n, r, k: self.k },
            ConnKind::NonabelianTest => ConnectionSpec::NonabelianTest {
                n,
                r,
                k: self.k,
                eps: self.epsilon,
            },
            ConnKind::Perturbed => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed ^ 0x70657274);
                ConnectionSpec::Perturbed {
                    base: Box::new(ConnectionSpec::KahlerAbelian { n, r, k: self.k }),
                    bump: BumpForm::random(&mut rng, n, r, 1, 1.0).scaled(self.epsilon),
                }
            }
        }
    }

    pub fn profile_spec(&self) -> Profile {
        match self.profile {
            ProfileKind::Linear => Profile::Linear,
            ProfileKind::Power => Profile::Power { alpha: self.alpha },
            ProfileKind::RegularizedPower => Profile::RegularizedPower {
                alpha: self.alpha,
                eps: self.profile_eps,
            },
            ProfileKind::Exponential => Profile::Exponential,
        }
    }

    pub fn scheme_spec(&self) -> Scheme {
        match self.scheme {
            SchemeKind::TensorGauss => Scheme::TensorGauss,
            SchemeKind::MonteCarlo => Scheme::MonteCarlo,
        }
    }

    /// Per-axis resolution for a rule over complex dimension `n`, derated so
    /// tensor grids stay affordable in four real dimensions.
    pub fn resolution_for(&self, n: usize) -> usize {
        let base = if self.quick {
            (self.resolution / 2).max(6)
        } else {
            self.resolution
        };
        if n <= 1 {
            base
        } else {
            (base / 4).clamp(6, 20)
        }
    }

    /// Scales a sample count for quick mode.
    pub fn samples(&self, full: usize) -> usize {
        if self.quick {
            (full / 10).max(10)
        } else {
            full
        }
    }
}
