use serde::{Deserialize, Serialize};

use rbf_advect::analysis::Case;
use rbf_advect::methods::Method;

use crate::{LabError, Result};

pub fn parse_method(s: &str) -> Result<Method> {
    match s.to_ascii_lowercase().as_str() {
        "kansa" => Ok(Method::Kansa),
        "pum" | "rbf-pum" => Ok(Method::Pum),
        "fd" | "rbf-fd" => Ok(Method::Fd),
        _ => Err(LabError::config(format!("unknown method '{s}' (kansa, pum, fd)"))),
    }
}

fn default_q() -> usize {
    1
}

fn default_seed() -> u64 {
    1
}

/// Simulation config as read by `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: String,
    pub h: f64,
    #[serde(default = "default_q")]
    pub q: usize,
    pub p: usize,
    #[serde(default)]
    pub n: Option<usize>,
    pub cfl: f64,
    pub t_final: f64,
    #[serde(default)]
    pub penalty: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub perturb: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn case(&self) -> Result<Case> {
        let mut c = Case::new(parse_method(&self.method)?, self.h, self.q, self.p);
        c.n = self.n;
        c.penalty = self.penalty;
        c.seed = self.seed;
        c.perturb = self.perturb;
        Ok(c)
    }

    /// Same config with the defaults of the case filled in.
    pub fn resolved(&self) -> Result<RunConfig> {
        let c = self.case()?;
        Ok(RunConfig { method: c.method.name().to_string(), n: c.local_size(), ..self.clone() })
    }
}
