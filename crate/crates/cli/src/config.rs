//! Optional `key = value` defaults file (`--config PATH`). Command-line
//! flags win over the file.
//!
//! ```text
//! # comments and blank lines are ignored
//! format = table
//! rel_tol = 1e-8
//! ```

use crate::format::Format;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    /// Limit engine.
    pub base_step: Option<f64>,
    pub levels: Option<usize>,
    pub rel_tol: Option<f64>,
    /// Quadrature.
    pub quad_abs_tol: Option<f64>,
    pub quad_rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    /// ODE step control.
    pub ode_rel_tol: Option<f64>,
    pub ode_abs_tol: Option<f64>,
    pub max_steps: Option<usize>,
    /// Mittag-Leffler series.
    pub ml_tol: Option<f64>,
    pub ml_max_terms: Option<usize>,
}

fn value<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Option<T>, String> {
    v.parse()
        .map(Some)
        .map_err(|_| format!("config line {line}: invalid value `{v}` for `{key}`"))
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, String> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {n}: expected key = value, got `{line}`"))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "format" => c.format = Some(v.parse().map_err(|e| format!("config line {n}: {e}"))?),
                "jobs" => c.jobs = value(n, k, v)?,
                "seed" => c.seed = value(n, k, v)?,
                "base_step" => c.base_step = value(n, k, v)?,
                "levels" => c.levels = value(n, k, v)?,
                "rel_tol" => c.rel_tol = value(n, k, v)?,
                "quad_abs_tol" => c.quad_abs_tol = value(n, k, v)?,
                "quad_rel_tol" => c.quad_rel_tol = value(n, k, v)?,
                "max_subdivisions" => c.max_subdivisions = value(n, k, v)?,
                "ode_rel_tol" => c.ode_rel_tol = value(n, k, v)?,
                "ode_abs_tol" => c.ode_abs_tol = value(n, k, v)?,
                "max_steps" => c.max_steps = value(n, k, v)?,
                "ml_tol" => c.ml_tol = value(n, k, v)?,
                "ml_max_terms" => c.ml_max_terms = value(n, k, v)?,
                other => return Err(format!("config line {n}: unknown key `{other}`")),
            }
        }
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Config, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Config::parse(&text)
    }
}
