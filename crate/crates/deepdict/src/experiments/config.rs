//! Flat `key = value` experiment configuration. One key per line, `#`
//! starts a comment; CLI flags override file values. Unknown keys are
//! rejected so a typo never silently falls back to a default.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::deepfact::{Eps0Rule, FactorizeConfig};
use crate::error::{Error, Result};
use crate::genmodel::{DeepModelSpec, LayerDims, NonzeroDist};

#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parameter(format!("config line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parameter(format!("config line {}: empty key", lineno + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Parameter(format!("duplicate config key `{key}`")));
            }
        }
        Ok(RawConfig {
            values,
            consumed: BTreeSet::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parameter(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Insert or overwrite a value (CLI flags go through here).
    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.values.get(key).cloned()
    }

    pub fn get_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parameter(format!("key `{key}`: expected an integer, got `{v}`"))),
        }
    }

    pub fn get_u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parameter(format!("key `{key}`: expected an integer, got `{v}`"))),
        }
    }

    pub fn get_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parameter(format!("key `{key}`: expected a number, got `{v}`"))),
        }
    }

    pub fn get_list_f64(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|_| {
                        Error::Parameter(format!("key `{key}`: expected numbers, got `{p}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn get_list_u64(&mut self, key: &str) -> Result<Option<Vec<u64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|p| {
                    p.trim().parse::<u64>().map_err(|_| {
                        Error::Parameter(format!("key `{key}`: expected integers, got `{p}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn get_list_usize(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        Ok(self
            .get_list_u64(key)?
            .map(|v| v.into_iter().map(|x| x as usize).collect()))
    }

    /// Error out if any key was never consumed by the command.
    pub fn reject_unknown(&self) -> Result<()> {
        let unknown: Vec<&String> = self
            .values
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "unknown config key(s): {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

fn parse_dist(text: &str) -> Result<NonzeroDist> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts[0] {
        "rademacher" => Ok(NonzeroDist::Rademacher),
        "gaussian_truncated" => Ok(NonzeroDist::GaussianTruncated),
        "uniform_shell" => {
            if parts.len() != 3 {
                return Err(Error::Parameter(
                    "uniform_shell takes two bounds, e.g. uniform_shell:1:2".into(),
                ));
            }
            let lo = parts[1]
                .parse()
                .map_err(|_| Error::Parameter(format!("bad shell bound `{}`", parts[1])))?;
            let hi = parts[2]
                .parse()
                .map_err(|_| Error::Parameter(format!("bad shell bound `{}`", parts[2])))?;
            Ok(NonzeroDist::UniformShell { lo, hi })
        }
        other => Err(Error::Parameter(format!(
            "unknown distribution `{other}` (rademacher | uniform_shell:lo:hi | gaussian_truncated)"
        ))),
    }
}

/// Model keys: `dims` (layer 1 first, `d x r` pairs), `n`,
/// `code_sparsity`, `column_sparsities`, `code_dist`, `dict_dist`, or a
/// `preset` (`desk` / `paper` / `shallow`).
pub fn model_from_config(cfg: &mut RawConfig, paper_scale: bool) -> Result<(DeepModelSpec, usize)> {
    let preset = cfg.get("preset");
    let n_key = cfg.get_usize("n")?;
    if paper_scale || preset.as_deref() == Some("paper") {
        return Ok((DeepModelSpec::paper_scale(), n_key.unwrap_or(6400)));
    }
    match preset.as_deref() {
        Some("desk") | None if cfg.get("dims").is_none() => {
            return Ok((DeepModelSpec::desk_scale(), n_key.unwrap_or(2000)));
        }
        Some("shallow") => {
            return Ok((DeepModelSpec::shallow(50, 100, 3)?, n_key.unwrap_or(1500)));
        }
        Some("desk") => return Ok((DeepModelSpec::desk_scale(), n_key.unwrap_or(2000))),
        Some(other) => {
            return Err(Error::Parameter(format!(
                "unknown preset `{other}` (desk | paper | shallow)"
            )))
        }
        None => {}
    }
    let dims_text = cfg
        .get("dims")
        .ok_or_else(|| Error::Parameter("missing `dims` (e.g. dims = 60x150,40x60)".into()))?;
    let mut dims = Vec::new();
    for part in dims_text.split(',') {
        let (d, r) = part
            .trim()
            .split_once('x')
            .ok_or_else(|| Error::Parameter(format!("bad layer dims `{part}` (want d x r)")))?;
        dims.push(LayerDims {
            d: d.trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad dimension `{d}`")))?,
            r: r.trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad dimension `{r}`")))?,
        });
    }
    let s = cfg
        .get_usize("code_sparsity")?
        .ok_or_else(|| Error::Parameter("missing `code_sparsity`".into()))?;
    let col_s = cfg.get_list_usize("column_sparsities")?.unwrap_or_default();
    let code_dist = match cfg.get("code_dist") {
        Some(t) => parse_dist(&t)?,
        None => NonzeroDist::UniformShell { lo: 1.0, hi: 2.0 },
    };
    let dict_dist = match cfg.get("dict_dist") {
        Some(t) => parse_dist(&t)?,
        None => NonzeroDist::Rademacher,
    };
    let spec = DeepModelSpec::new(dims, s, col_s, code_dist, dict_dist)?;
    let n = n_key.ok_or_else(|| Error::Parameter("missing `n`".into()))?;
    Ok((spec, n))
}

/// Factorization keys: `eps0` (`auto` or a number), `eps0_budget`, `rho`,
/// `max_iters`, `threshold_const`, `stop_err`.
pub fn factorize_from_config(cfg: &mut RawConfig) -> Result<FactorizeConfig> {
    let mut out = FactorizeConfig::default();
    match cfg.get("eps0") {
        None => {}
        Some(ref t) if t == "auto" => {}
        Some(t) => {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Parameter(format!("key `eps0`: expected `auto` or a number, got `{t}`")))?;
            out.eps0 = Eps0Rule::Fixed { value: v };
        }
    }
    if let Some(b) = cfg.get_f64("eps0_budget")? {
        if matches!(out.eps0, Eps0Rule::ThresholdBudget { .. }) {
            out.eps0 = Eps0Rule::ThresholdBudget { budget: b };
        }
    }
    if let Some(v) = cfg.get_f64("rho")? {
        out.rho = v;
    }
    if let Some(v) = cfg.get_usize("max_iters")? {
        out.max_iters = v;
    }
    if let Some(v) = cfg.get_f64("threshold_const")? {
        out.threshold_const = v;
    }
    if let Some(v) = cfg.get_f64("stop_err")? {
        out.stop_err = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown() {
        let mut cfg = RawConfig::parse("a = 1\n# comment\nb = 2.5 # trailing\n").unwrap();
        assert_eq!(cfg.get_usize("a").unwrap(), Some(1));
        assert!(cfg.reject_unknown().is_err());
        assert_eq!(cfg.get_f64("b").unwrap(), Some(2.5));
        assert!(cfg.reject_unknown().is_ok());
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(RawConfig::parse("a = 1\na = 2\n").is_err());
        assert!(RawConfig::parse("just words\n").is_err());
    }

    #[test]
    fn model_round_trip() {
        let mut cfg =
            RawConfig::parse("dims = 60x150,40x60\nn = 100\ncode_sparsity = 3\ncolumn_sparsities = 3\n")
                .unwrap();
        let (spec, n) = model_from_config(&mut cfg, false).unwrap();
        assert_eq!(n, 100);
        assert_eq!(spec.layers(), 2);
        assert_eq!(spec.dims[0].r, 150);
        cfg.reject_unknown().unwrap();
    }

    #[test]
    fn paper_flag_overrides() {
        let mut cfg = RawConfig::parse("").unwrap();
        let (spec, n) = model_from_config(&mut cfg, true).unwrap();
        assert_eq!(spec.dims[0].r, 800);
        assert_eq!(n, 6400);
    }
}
