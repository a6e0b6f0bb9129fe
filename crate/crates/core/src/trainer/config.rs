//! Flat `key = value` run configuration for training.
//!
//! ```text
//! # model and optimizer
//! mode = bce_lcp                 # bce | bce_lcp
//! compensation_in_training = false
//! lcp_gradient = soft            # soft | straight_through
//! alpha = 1
//! beta = 24
//! lambda = 0.5
//! threshold = 0.5
//! epochs = 30
//! batch_size = 256
//! learning_rate = 0.001
//! momentum = 0.9
//! seed = 1
//! hidden = 64,64
//! # synthetic data
//! schema = builtin:fh37k
//! n_train = 5000
//! n_val = 1000
//! n_test = 1000
//! feature_dim = 32
//! noise_sigma = 0.8
//! distractor_dims = 8
//! data_seed = 2023
//! ```
//!
//! Every key is optional; missing keys keep their defaults. Unknown or
//! repeated keys are errors.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use super::synth::SyntheticDatasetSpec;
use super::train::{LcpGradient, LossMode, TrainConfig};
use crate::error::{Error, Result};
use crate::schema::BUILTIN_FH37K;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `builtin:fh37k` or a path to a constraint document.
    pub schema: String,
    pub train: TrainConfig,
    pub data: SyntheticDatasetSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { schema: BUILTIN_FH37K.into(), train: TrainConfig::default(), data: SyntheticDatasetSpec::default() }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Input(format!("line {line}: invalid value `{value}` for `{key}`")))
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("line {line}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Input(format!("line {line}: `{key}` set twice")));
            }
            let t = &mut cfg.train;
            let d = &mut cfg.data;
            match key {
                "schema" => cfg.schema = value.to_string(),
                "mode" => {
                    t.mode = match value {
                        "bce" => LossMode::Bce,
                        "bce_lcp" => LossMode::BceLcp,
                        _ => return Err(Error::Input(format!("line {line}: mode must be `bce` or `bce_lcp`"))),
                    }
                }
                "lcp_gradient" => {
                    t.lcp_gradient = match value {
                        "soft" => LcpGradient::Soft,
                        "straight_through" => LcpGradient::StraightThrough,
                        _ => {
                            return Err(Error::Input(format!(
                                "line {line}: lcp_gradient must be `soft` or `straight_through`"
                            )))
                        }
                    }
                }
                "compensation_in_training" => t.compensation_in_training = parse_value(key, value, line)?,
                "alpha" => t.loss.alpha = parse_value(key, value, line)?,
                "beta" => t.loss.beta = parse_value(key, value, line)?,
                "lambda" => t.loss.lambda = parse_value(key, value, line)?,
                "threshold" => t.loss.threshold = parse_value(key, value, line)?,
                "epochs" => t.epochs = parse_value(key, value, line)?,
                "batch_size" => t.batch_size = parse_value(key, value, line)?,
                "learning_rate" => t.learning_rate = parse_value(key, value, line)?,
                "momentum" => t.momentum = parse_value(key, value, line)?,
                "seed" => t.seed = parse_value(key, value, line)?,
                "hidden" => {
                    t.hidden = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|w| parse_value(key, w.trim(), line))
                            .collect::<Result<_>>()?
                    }
                }
                "n_train" => d.n_train = parse_value(key, value, line)?,
                "n_val" => d.n_val = parse_value(key, value, line)?,
                "n_test" => d.n_test = parse_value(key, value, line)?,
                "feature_dim" => d.feature_dim = parse_value(key, value, line)?,
                "noise_sigma" => d.noise_sigma = parse_value(key, value, line)?,
                "distractor_dims" => d.distractor_dims = parse_value(key, value, line)?,
                "data_seed" => d.seed = parse_value(key, value, line)?,
                other => return Err(Error::Input(format!("line {line}: unknown key `{other}`"))),
            }
        }
        cfg.train.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.train;
        let d = &self.data;
        let mode = match t.mode {
            LossMode::Bce => "bce",
            LossMode::BceLcp => "bce_lcp",
        };
        let grad = match t.lcp_gradient {
            LcpGradient::Soft => "soft",
            LcpGradient::StraightThrough => "straight_through",
        };
        let hidden: Vec<String> = t.hidden.iter().map(|h| h.to_string()).collect();
        writeln!(f, "schema = {}", self.schema)?;
        writeln!(f, "mode = {mode}")?;
        writeln!(f, "compensation_in_training = {}", t.compensation_in_training)?;
        writeln!(f, "lcp_gradient = {grad}")?;
        writeln!(f, "alpha = {}", t.loss.alpha)?;
        writeln!(f, "beta = {}", t.loss.beta)?;
        writeln!(f, "lambda = {}", t.loss.lambda)?;
        writeln!(f, "threshold = {}", t.loss.threshold)?;
        writeln!(f, "epochs = {}", t.epochs)?;
        writeln!(f, "batch_size = {}", t.batch_size)?;
        writeln!(f, "learning_rate = {}", t.learning_rate)?;
        writeln!(f, "momentum = {}", t.momentum)?;
        writeln!(f, "seed = {}", t.seed)?;
        writeln!(f, "hidden = {}", hidden.join(","))?;
        writeln!(f, "n_train = {}", d.n_train)?;
        writeln!(f, "n_val = {}", d.n_val)?;
        writeln!(f, "n_test = {}", d.n_test)?;
        writeln!(f, "feature_dim = {}", d.feature_dim)?;
        writeln!(f, "noise_sigma = {}", d.noise_sigma)?;
        writeln!(f, "distractor_dims = {}", d.distractor_dims)?;
        writeln!(f, "data_seed = {}", d.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.train.mode = LossMode::Bce;
        cfg.train.lcp_gradient = LcpGradient::StraightThrough;
        cfg.train.hidden = vec![5];
        cfg.data.noise_sigma = 0.25;
        let parsed: RunConfig = cfg.to_string().parse().unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = "# comment\nepochs = 3   # short\n\nlambda=0.25\n".parse().unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.loss.lambda, 0.25);
        assert_eq!(cfg.train.batch_size, 256);
        assert_eq!(cfg.train.learning_rate, 0.001);
    }

    #[test]
    fn errors() {
        assert!("bogus = 1".parse::<RunConfig>().is_err());
        assert!("epochs = many".parse::<RunConfig>().is_err());
        assert!("epochs = 1\nepochs = 2".parse::<RunConfig>().is_err());
        assert!("epochs".parse::<RunConfig>().is_err());
        assert!("lambda = 2".parse::<RunConfig>().is_err());
        assert!("mode = focal".parse::<RunConfig>().is_err());
    }
}
