//! Plain-text run configuration: `key = value` lines, optionally grouped
//! under `[section]` headers.
//!
//! ```text
//! # comments start with '#'
//! dynamics.gamma = 12
//!
//! [filtration]
//! eps_p = 0.01
//! ```

use std::path::PathBuf;

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::{Error, Result};
use crate::pipeline::EhConfig;
use crate::protein::{ProteinConfig, SweepGrid};

/// Everything a command needs, fully defaulted.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub protein: ProteinConfig,
    pub sweep: SweepGrid,
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means the machine's available parallelism.
    pub workers: usize,
    /// Seed for generated self-test data.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protein: ProteinConfig::default(),
            sweep: SweepGrid::default(),
            inputs: Vec::new(),
            out_dir: PathBuf::from("evohom-out"),
            workers: 0,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn eh(&self) -> &EhConfig {
        &self.protein.eh
    }

    pub fn eh_mut(&mut self) -> &mut EhConfig {
        &mut self.protein.eh
    }

    pub fn workers(&self) -> usize {
        if self.workers == 0 {
            crate::pipeline::default_workers()
        } else {
            self.workers
        }
    }

    /// Every result-affecting setting as `(key, value)`, in a fixed order.
    /// Feeding these lines back through [`parse_config`] reproduces the
    /// configuration. Worker count and output directory are left out since
    /// they never change output contents.
    pub fn echo(&self) -> ConfigEcho {
        let e = self.eh();
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let entries = vec![
            ("dynamics.delta", e.lorenz.delta.to_string()),
            ("dynamics.gamma", e.lorenz.gamma.to_string()),
            ("dynamics.beta", e.lorenz.beta.to_string()),
            ("dynamics.mu", e.mu.to_string()),
            ("dynamics.kappa", e.kappa.to_string()),
            ("dynamics.epsilon", e.epsilon.to_string()),
            ("dynamics.linking", list(&e.linking)),
            ("dynamics.h", e.h.to_string()),
            ("dynamics.horizon", e.horizon.to_string()),
            ("dynamics.max_doublings", e.max_doublings.to_string()),
            ("orbit.burn_in", e.orbit.burn_in.to_string()),
            ("orbit.window", e.orbit.window.to_string()),
            ("orbit.h", e.orbit.h.to_string()),
            ("orbit.fp_tol", e.orbit.fp_tol.to_string()),
            ("perturbation.component", (e.perturbation.component + 1).to_string()),
            ("perturbation.multiplier", e.perturbation.multiplier.to_string()),
            ("filtration.eps_p", e.filtration.eps_p.to_string()),
            ("filtration.eps_sync", e.filtration.eps_sync.to_string()),
            ("filtration.eps_d", e.filtration.eps_d.to_string()),
            ("persistence.max_dim", e.max_dim.to_string()),
            ("persistence.budget", e.budget.to_string()),
            ("protein.chain_split", self.protein.chain_split.to_string()),
            ("sweep.eps_p", list(&self.sweep.eps_p)),
            ("sweep.eps_sync", list(&self.sweep.eps_sync)),
            ("sweep.eps_d", list(&self.sweep.eps_d)),
            ("run.seed", self.seed.to_string()),
        ];
        ConfigEcho(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

/// Ordered `key = value` pairs; serializes as a JSON object in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigEcho(pub Vec<(String, String)>);

impl Serialize for ConfigEcho {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl ConfigEcho {
    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn number(value: &str) -> std::result::Result<f64, String> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got {value:?}")),
    }
}

fn integer<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("expected a non-negative integer, got {value:?}"))
}

fn numbers(value: &str) -> std::result::Result<Vec<f64>, String> {
    value.split(',').map(|v| number(v.trim())).collect()
}

fn at_least(v: f64, min: f64, strict: bool) -> std::result::Result<f64, String> {
    let ok = if strict { v > min } else { v >= min };
    if ok {
        Ok(v)
    } else {
        Err(format!("{v} is out of range; must be {} {min}", if strict { ">" } else { ">=" }))
    }
}

fn positive(value: &str) -> std::result::Result<f64, String> {
    at_least(number(value)?, 0.0, true)
}

fn non_negative(value: &str) -> std::result::Result<f64, String> {
    at_least(number(value)?, 0.0, false)
}

fn grid(value: &str) -> std::result::Result<Vec<f64>, String> {
    let v = numbers(value)?;
    if v.is_empty() || v.iter().any(|x| *x < 0.0) {
        return Err("expected a comma-separated list of non-negative numbers".into());
    }
    Ok(v)
}

/// Applies one setting; the error string names the problem, the caller adds
/// key and line.
fn apply(cfg: &mut RunConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let e = &mut cfg.protein.eh;
    match key {
        "dynamics.delta" => e.lorenz.delta = number(value)?,
        "dynamics.gamma" => e.lorenz.gamma = number(value)?,
        "dynamics.beta" => e.lorenz.beta = positive(value)?,
        "dynamics.mu" => e.mu = positive(value)?,
        "dynamics.kappa" => e.kappa = positive(value)?,
        "dynamics.epsilon" => e.epsilon = non_negative(value)?,
        "dynamics.linking" => {
            let v = numbers(value)?;
            if v.len() != 9 {
                return Err(format!("expected 9 comma-separated numbers (row-major 3 x 3), got {}", v.len()));
            }
            e.linking = v;
        }
        "dynamics.h" => e.h = positive(value)?,
        "dynamics.horizon" => e.horizon = positive(value)?,
        "dynamics.max_doublings" => {
            let v: u32 = integer(value)?;
            if v > 30 {
                return Err(format!("{v} is out of range; must be <= 30"));
            }
            e.max_doublings = v;
        }
        "orbit.burn_in" => e.orbit.burn_in = non_negative(value)?,
        "orbit.window" => e.orbit.window = positive(value)?,
        "orbit.h" => e.orbit.h = positive(value)?,
        "orbit.fp_tol" => e.orbit.fp_tol = positive(value)?,
        "perturbation.component" => {
            let v: usize = integer(value)?;
            if !(1..=3).contains(&v) {
                return Err(format!("{v} is out of range; must be 1, 2 or 3"));
            }
            e.perturbation.component = v - 1;
        }
        "perturbation.multiplier" => e.perturbation.multiplier = number(value)?,
        "filtration.eps_p" => e.filtration.eps_p = non_negative(value)?,
        "filtration.eps_sync" => e.filtration.eps_sync = non_negative(value)?,
        "filtration.eps_d" => e.filtration.eps_d = non_negative(value)?,
        "persistence.max_dim" => {
            let v: usize = integer(value)?;
            if v > crate::persistence::MAX_SUPPORTED_DIM {
                return Err(format!("{v} is out of range; must be <= {}", crate::persistence::MAX_SUPPORTED_DIM));
            }
            e.max_dim = v;
        }
        "persistence.budget" => {
            let v: u64 = integer(value)?;
            if v == 0 {
                return Err("budget must be at least 1".into());
            }
            e.budget = v;
        }
        "protein.chain_split" => {
            let v: usize = integer(value)?;
            if v == 0 {
                return Err("chain_split must be at least 1".into());
            }
            cfg.protein.chain_split = v;
        }
        "sweep.eps_p" => cfg.sweep.eps_p = grid(value)?,
        "sweep.eps_sync" => cfg.sweep.eps_sync = grid(value)?,
        "sweep.eps_d" => cfg.sweep.eps_d = grid(value)?,
        "run.workers" => cfg.workers = integer(value)?,
        "run.seed" => cfg.seed = integer(value)?,
        "output.dir" => {
            if value.is_empty() {
                return Err("empty path".into());
            }
            cfg.out_dir = PathBuf::from(value);
        }
        "input.paths" => {
            let paths: Vec<PathBuf> = value
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(PathBuf::from)
                .collect();
            if let Some(p) = paths.iter().find(|p| !p.exists()) {
                return Err(format!("input path {} does not exist", p.display()));
            }
            cfg.inputs = paths;
        }
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    let trimmed = line.trim();
    if trimmed.starts_with('#') || trimmed.starts_with(';') {
        return "";
    }
    match trimmed.find(" #") {
        Some(i) => trimmed[..i].trim_end(),
        None => trimmed,
    }
}

/// Parses configuration text on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    let mut seen: Vec<String> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = strip_comment(raw);
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Config {
                line,
                key: body.to_string(),
                message: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
            line,
            key: body.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if seen.contains(&full) {
            return Err(Error::Config {
                line,
                key: full,
                message: "set more than once".into(),
            });
        }
        apply(&mut cfg, &full, value.trim()).map_err(|message| Error::Config {
            line,
            key: full.clone(),
            message,
        })?;
        seen.push(full);
    }
    let e = cfg.eh();
    if e.horizon < e.h {
        return Err(Error::Config {
            line: 0,
            key: "dynamics.horizon".into(),
            message: format!("horizon {} is shorter than one step {}", e.horizon, e.h),
        });
    }
    e.validate().map_err(|err| Error::Config {
        line: 0,
        key: "(combined)".into(),
        message: err.to_string(),
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
        assert_eq!(parse_config("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn single_key() {
        let cfg = parse_config("dynamics.gamma = 13").unwrap();
        let mut expected = RunConfig::default();
        expected.protein.eh.lorenz.gamma = 13.0;
        assert_eq!(cfg, expected);
    }

    #[test]
    fn sections() {
        let cfg = parse_config("[filtration]\neps_p = 0.5 # note\n[perturbation]\ncomponent = 1\n").unwrap();
        assert_eq!(cfg.eh().filtration.eps_p, 0.5);
        assert_eq!(cfg.eh().perturbation.component, 0);
    }

    #[test]
    fn range_error_names_key_and_line() {
        match parse_config("\nfiltration.eps_p = -1") {
            Err(Error::Config { line, key, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(key, "filtration.eps_p");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(matches!(parse_config("dynamics.zeta = 1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(
            parse_config("dynamics.mu = 1\n[dynamics]\nmu = 2"),
            Err(Error::Config { line: 3, .. })
        ));
    }

    #[test]
    fn missing_input_path() {
        match parse_config("input.paths = /nonexistent/evohom/x.pdb") {
            Err(Error::Config { key, message, .. }) => {
                assert_eq!(key, "input.paths");
                assert!(message.contains("does not exist"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn echo_round_trips() {
        let text = "dynamics.gamma = 0.1\nfiltration.eps_d = 7.25\nsweep.eps_p = 0.5, 1e-7\nperturbation.component = 2\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&cfg.echo().to_text()).unwrap(), cfg);
        let default_echo = RunConfig::default().echo().to_text();
        assert_eq!(parse_config(&default_echo).unwrap(), RunConfig::default());
    }
}
