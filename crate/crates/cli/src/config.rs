//! Pipeline configuration: a flat INI file with one section per stage.

use crate::error::CliError;
use ini::Ini;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use sttpp::rbm::{GradientForm, RbmHyper};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TextConfig {
    pub min_tf: usize,
    pub max_df_ratio: f64,
    pub stopword_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HawkesConfig {
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub mu_update: bool,
    /// Observation window; defaults to the last event time.
    pub horizon: Option<f64>,
    /// Number of beats; defaults to the largest beat index plus one.
    pub d: Option<usize>,
    /// Tied timestamps are separated by this many days.
    pub tie_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ASpec {
    /// Diagonal plus random off-diagonal cells, values uniform in `[low, high]`.
    Random { low: f64, high: f64, density: f64 },
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub d: usize,
    pub horizon: f64,
    pub mu: f64,
    pub beta: f64,
    pub a: ASpec,
    pub marks: usize,
    pub m: usize,
    pub ones: usize,
    pub seed: u64,
    pub max_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalConfig {
    pub n_top: usize,
    pub folds: usize,
    pub seed: u64,
    pub delta_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub text: TextConfig,
    pub rbm: RbmHyper,
    pub hawkes: HawkesConfig,
    pub sim: SimConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            text: TextConfig {
                min_tf: 5,
                max_df_ratio: 0.5,
                stopword_file: None,
            },
            rbm: RbmHyper::default(),
            hawkes: HawkesConfig {
                beta: 2.0,
                tol: 1e-6,
                max_iter: 200,
                seed: 0,
                mu_update: false,
                horizon: None,
                d: None,
                tie_jitter: 1e-6,
            },
            sim: SimConfig {
                d: 5,
                horizon: 500.0,
                mu: 0.05,
                beta: 2.0,
                a: ASpec::Random {
                    low: 0.1,
                    high: 0.5,
                    density: 0.2,
                },
                marks: 8,
                m: 16,
                ones: 3,
                seed: 0,
                max_events: 1_000_000,
            },
            eval: EvalConfig {
                n_top: 500,
                folds: 5,
                seed: 0,
                delta_grid: vec![0.0, 1e-3, 1e-2, 1e-1],
                beta_grid: vec![0.02, 0.2, 2.0, 20.0, 200.0],
            },
        }
    }
}

// Key/value pairs of one section, consumed as they are read so leftovers can
// be reported as unknown.
struct Section {
    name: &'static str,
    values: BTreeMap<String, String>,
}

impl Section {
    fn parse<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, CliError> {
        raw.trim()
            .parse()
            .map_err(|_| CliError::config(format!("[{}] {key} = {raw:?} is not a valid value", self.name)))
    }

    fn take<T: FromStr>(&mut self, key: &str, target: &mut T) -> Result<(), CliError> {
        if let Some(raw) = self.values.remove(key) {
            *target = self.parse(key, &raw)?;
        }
        Ok(())
    }

    fn take_opt<T: FromStr>(&mut self, key: &str, target: &mut Option<T>) -> Result<(), CliError> {
        if let Some(raw) = self.values.remove(key) {
            *target = Some(self.parse(key, &raw)?);
        }
        Ok(())
    }

    fn take_raw(&mut self, key: &str) -> Option<String> {
        self.values.remove(key).map(|v| v.trim().to_owned())
    }

    fn finish(self) -> Result<(), CliError> {
        match self.values.keys().next() {
            Some(key) => Err(CliError::config(format!("unknown key [{}] {key}", self.name))),
            None => Ok(()),
        }
    }
}

fn parse_list(section: &str, key: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("[{section}] {key}: {v:?} is not a number")))
        })
        .collect()
}

fn parse_a_spec(raw: &str, sim: &mut Section, current: &ASpec) -> Result<ASpec, CliError> {
    if raw != "random" {
        let rows: Vec<Vec<f64>> = raw
            .split(';')
            .map(|row| parse_list("sim", "a", row))
            .collect::<Result<_, _>>()?;
        return Ok(ASpec::Explicit(rows));
    }
    let ASpec::Random {
        mut low,
        mut high,
        mut density,
    } = *current
    else {
        unreachable!("defaults use a random spec")
    };
    sim.take("a_low", &mut low)?;
    sim.take("a_high", &mut high)?;
    sim.take("a_density", &mut density)?;
    Ok(ASpec::Random { low, high, density })
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(msg()))
    }
}

fn positive(section: &str, key: &str, v: f64) -> Result<(), CliError> {
    check(v > 0.0 && v.is_finite(), || format!("[{section}] {key} must be positive and finite, got {v}"))
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::config(format!("malformed config: {e}")))?;
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(CliError::config(format!("key {key} appears outside any section")));
                }
                continue;
            };
            let known: &'static str = match name {
                "text" => "text",
                "rbm" => "rbm",
                "hawkes" => "hawkes",
                "sim" => "sim",
                "eval" => "eval",
                other => return Err(CliError::config(format!("unknown section [{other}]"))),
            };
            if sections.contains_key(known) {
                return Err(CliError::config(format!("section [{known}] appears twice")));
            }
            let mut values = BTreeMap::new();
            for (key, value) in props.iter() {
                if values.insert(key.to_owned(), value.to_owned()).is_some() {
                    return Err(CliError::config(format!("key [{known}] {key} appears twice")));
                }
            }
            sections.insert(known.to_owned(), Section { name: known, values });
        }
        let mut section = |name: &'static str| {
            sections.remove(name).unwrap_or(Section {
                name,
                values: BTreeMap::new(),
            })
        };

        let mut cfg = Self::default();

        let mut s = section("text");
        s.take("min_tf", &mut cfg.text.min_tf)?;
        s.take("max_df_ratio", &mut cfg.text.max_df_ratio)?;
        s.take_opt("stopword_file", &mut cfg.text.stopword_file)?;
        s.finish()?;

        let mut s = section("rbm");
        let r = &mut cfg.rbm;
        s.take("m", &mut r.m)?;
        s.take("delta", &mut r.delta)?;
        s.take("tau", &mut r.tau)?;
        s.take("cd_k", &mut r.cd_k)?;
        s.take("lr", &mut r.learning_rate)?;
        s.take("epochs", &mut r.epochs)?;
        s.take("batch", &mut r.batch_size)?;
        s.take("seed", &mut r.seed)?;
        s.take("sigma", &mut r.sigma)?;
        if let Some(form) = s.take_raw("gradient") {
            r.gradient_form = match form.as_str() {
                "exact" => GradientForm::Exact,
                "paper" => GradientForm::PaperLiteral,
                other => return Err(CliError::config(format!("[rbm] gradient must be exact or paper, got {other:?}"))),
            };
        }
        s.finish()?;

        let mut s = section("hawkes");
        let h = &mut cfg.hawkes;
        s.take("beta", &mut h.beta)?;
        s.take("tol", &mut h.tol)?;
        s.take("max_iter", &mut h.max_iter)?;
        s.take("seed", &mut h.seed)?;
        s.take("mu_update", &mut h.mu_update)?;
        s.take_opt("horizon", &mut h.horizon)?;
        s.take_opt("d", &mut h.d)?;
        s.take("tie_jitter", &mut h.tie_jitter)?;
        s.finish()?;

        let mut s = section("sim");
        let m = &mut cfg.sim;
        s.take("d", &mut m.d)?;
        s.take("T", &mut m.horizon)?;
        s.take("mu", &mut m.mu)?;
        s.take("beta", &mut m.beta)?;
        s.take("marks", &mut m.marks)?;
        s.take("m", &mut m.m)?;
        s.take("ones", &mut m.ones)?;
        s.take("seed", &mut m.seed)?;
        s.take("max_events", &mut m.max_events)?;
        let a_raw = s.take_raw("a").unwrap_or_else(|| "random".into());
        m.a = parse_a_spec(&a_raw, &mut s, &m.a)?;
        s.finish()?;

        let mut s = section("eval");
        let e = &mut cfg.eval;
        s.take("N", &mut e.n_top)?;
        s.take("folds", &mut e.folds)?;
        s.take("seed", &mut e.seed)?;
        if let Some(raw) = s.take_raw("delta_grid") {
            e.delta_grid = parse_list("eval", "delta_grid", &raw)?;
        }
        if let Some(raw) = s.take_raw("beta_grid") {
            e.beta_grid = parse_list("eval", "beta_grid", &raw)?;
        }
        s.finish()?;

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.text;
        check(t.min_tf >= 1, || "[text] min_tf must be at least 1".into())?;
        check(t.max_df_ratio > 0.0 && t.max_df_ratio <= 1.0, || {
            format!("[text] max_df_ratio must lie in (0, 1], got {}", t.max_df_ratio)
        })?;

        self.rbm.validate().map_err(|e| CliError::config(format!("[rbm] {e}")))?;
        check(self.rbm.epochs >= 1, || "[rbm] epochs must be at least 1".into())?;

        let h = &self.hawkes;
        positive("hawkes", "beta", h.beta)?;
        check(h.tol >= 0.0 && h.tol.is_finite(), || format!("[hawkes] tol must be >= 0, got {}", h.tol))?;
        if let Some(horizon) = h.horizon {
            positive("hawkes", "horizon", horizon)?;
        }
        check(h.d != Some(0), || "[hawkes] d must be at least 1".into())?;
        positive("hawkes", "tie_jitter", h.tie_jitter)?;

        let s = &self.sim;
        check(s.d >= 1, || "[sim] d must be at least 1".into())?;
        positive("sim", "T", s.horizon)?;
        positive("sim", "mu", s.mu)?;
        positive("sim", "beta", s.beta)?;
        check(s.marks >= 1, || "[sim] marks must be at least 1".into())?;
        check(s.ones >= 1 && s.ones <= s.m, || format!("[sim] ones must lie in [1, m = {}], got {}", s.m, s.ones))?;
        check(s.max_events >= 1, || "[sim] max_events must be at least 1".into())?;
        match &s.a {
            ASpec::Random { low, high, density } => {
                check(*low >= 0.0 && low <= high && high.is_finite(), || {
                    format!("[sim] need 0 <= a_low <= a_high, got {low} and {high}")
                })?;
                check((0.0..=1.0).contains(density), || format!("[sim] a_density must lie in [0, 1], got {density}"))?;
            }
            ASpec::Explicit(rows) => {
                check(rows.len() == s.d && rows.iter().all(|r| r.len() == s.d), || {
                    format!("[sim] a must be {0}x{0}", s.d)
                })?;
                check(rows.iter().flatten().all(|v| *v >= 0.0 && v.is_finite()), || {
                    "[sim] a entries must be nonnegative and finite".into()
                })?;
            }
        }

        let e = &self.eval;
        check(e.folds >= 2, || "[eval] folds must be at least 2".into())?;
        check(!e.delta_grid.is_empty() && e.delta_grid.iter().all(|v| *v >= 0.0 && v.is_finite()), || {
            "[eval] delta_grid must be a non-empty list of nonnegative numbers".into()
        })?;
        check(!e.beta_grid.is_empty() && e.beta_grid.iter().all(|v| *v > 0.0 && v.is_finite()), || {
            "[eval] beta_grid must be a non-empty list of positive numbers".into()
        })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        assert_eq!(PipelineConfig::parse("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn values_override_defaults() {
        let cfg = PipelineConfig::parse(
            "[rbm]\nm = 8\nsigma = 0.5\ngradient = paper\n[hawkes]\nbeta = 10\nmu_update = true\n\
             [sim]\nd = 2\na = 0.1,0;0.2,0.3\n[eval]\nbeta_grid = 1, 10\n",
        )
        .unwrap();
        assert_eq!(cfg.rbm.m, 8);
        assert_eq!(cfg.rbm.gradient_form, GradientForm::PaperLiteral);
        assert_eq!(cfg.hawkes.beta, 10.0);
        assert!(cfg.hawkes.mu_update);
        assert_eq!(cfg.sim.a, ASpec::Explicit(vec![vec![0.1, 0.0], vec![0.2, 0.3]]));
        assert_eq!(cfg.eval.beta_grid, vec![1.0, 10.0]);
    }

    #[test]
    fn rejects_unknown_and_out_of_range() {
        for bad in [
            "[rbm]\nmm = 3\n",
            "[extra]\nx = 1\n",
            "stray = 1\n",
            "[rbm]\nsigma = 0\n",
            "[rbm]\nm = -1\n",
            "[text]\nmax_df_ratio = 1.5\n",
            "[hawkes]\nbeta = nan\n",
            "[sim]\nd = 2\na = 0.1,0\n",
            "[sim]\na = 0.1,0;0,0.1\na_low = 0.1\n",
            "[eval]\nfolds = 1\n",
            "[eval]\ndelta_grid = \n",
            "[rbm]\nm = 3\nm = 4\n",
        ] {
            let err = PipelineConfig::parse(bad).unwrap_err();
            assert_eq!(err.category(), "config", "{bad:?}");
        }
    }
}
