//! Flat `key=value` experiment configuration files.

use crate::bpsk::Scheme;
use crate::error::Error;
use crate::fnn::Head;
use crate::train::InitKind;

/// Which optimizer a run uses, with its extra hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerChoice {
    Sgd,
    Momentum { momentum: f64 },
    RmsProp { decay: f64 },
    Adam,
}

impl OptimizerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerChoice::Sgd => "sgd",
            OptimizerChoice::Momentum { .. } => "momentum",
            OptimizerChoice::RmsProp { .. } => "rmsprop",
            OptimizerChoice::Adam => "adam",
        }
    }
}

/// Everything that defines one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub depth: usize,
    pub half_width: usize,
    pub head: Head,
    pub scheme: Scheme,
    pub per_snr_train_n: usize,
    pub per_snr_test_n: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerChoice,
    pub init: InitKind,
    /// Per-row weight-norm band, or `None` to train unconstrained.
    pub constraint: Option<(f64, f64)>,
    pub early_stop_patience: usize,
    pub lr_reduce_patience: usize,
    pub lr_reduce_factor: f64,
    pub seed: u64,
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    /// Defaults for a given head: Adam at 0.01 over 200 epochs, He init,
    /// norm band [1, 5], batch 80 for the linear head and 40 for tanh.
    pub fn defaults(head: Head) -> Self {
        ExperimentConfig {
            depth: 3,
            half_width: 3,
            head,
            scheme: Scheme::AllSnr,
            per_snr_train_n: 20_000,
            per_snr_test_n: 10_000,
            batch_size: match head {
                Head::Linear => 80,
                Head::Tanh => 40,
            },
            max_epochs: 200,
            learning_rate: 0.01,
            optimizer: OptimizerChoice::Adam,
            init: InitKind::HeNormal,
            constraint: Some((1.0, 5.0)),
            early_stop_patience: 20,
            lr_reduce_patience: 40,
            lr_reduce_factor: 0.5,
            seed: 1,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.early_stop_patience < 1 || self.lr_reduce_patience < 1 {
            return Err(Error::Config("patience values must be >= 1".into()));
        }
        if !(self.lr_reduce_factor > 0.0 && self.lr_reduce_factor < 1.0) {
            return Err(Error::Config(format!(
                "lr_reduce_factor must lie in (0,1), got {}",
                self.lr_reduce_factor
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if let Some((cmin, cmax)) = self.constraint {
            if !(0.0 < cmin && cmin <= cmax) {
                return Err(Error::Config(format!("bad constraint band [{cmin}, {cmax}]")));
            }
        }
        Ok(())
    }

    /// Parse a flat `key=value` document. Unknown keys are errors; omitted
    /// keys keep head-appropriate defaults. If `head` appears it must come
    /// before any key whose default depends on it only via explicit values,
    /// so the file is order-insensitive: head is read in a first pass.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let entries = split_entries(text)?;
        let mut head = Head::Linear;
        let mut head_set = false;
        for (key, value) in &entries {
            if key == "head" {
                head = parse_head(value)?;
                head_set = true;
            }
        }
        let mut cfg = ExperimentConfig::defaults(head);
        let mut batch_set = false;
        let mut momentum = 0.9;
        let mut rms_decay = 0.9;
        let mut optimizer_name = String::from("adam");
        let mut constraint_on = true;
        let mut cmin = 1.0;
        let mut cmax = 5.0;
        for (key, value) in &entries {
            let bad = |detail: String| Error::parse(format!("config key '{key}'"), detail);
            match key.as_str() {
                "head" => {}
                "depth" => cfg.depth = parse_num(key, value)?,
                "half_width" => cfg.half_width = parse_num(key, value)?,
                "scheme" => cfg.scheme = Scheme::parse(value).map_err(|e| bad(e.to_string()))?,
                "per_snr_train_n" => cfg.per_snr_train_n = parse_num(key, value)?,
                "per_snr_test_n" => cfg.per_snr_test_n = parse_num(key, value)?,
                "batch_size" => {
                    cfg.batch_size = parse_num(key, value)?;
                    batch_set = true;
                }
                "max_epochs" => cfg.max_epochs = parse_num(key, value)?,
                "learning_rate" => cfg.learning_rate = parse_num(key, value)?,
                "optimizer" => optimizer_name = value.to_ascii_lowercase(),
                "momentum" => momentum = parse_num(key, value)?,
                "rms_decay" => rms_decay = parse_num(key, value)?,
                "init" => {
                    cfg.init = match value.to_ascii_lowercase().as_str() {
                        "he" | "he-normal" => InitKind::HeNormal,
                        "lecun" | "lecun-normal" => InitKind::LecunNormal,
                        other => return Err(bad(format!("unknown initializer '{other}'"))),
                    }
                }
                "constraint" => {
                    constraint_on = match value.to_ascii_lowercase().as_str() {
                        "on" | "true" | "yes" => true,
                        "off" | "false" | "no" | "none" => false,
                        other => return Err(bad(format!("expected on/off, got '{other}'"))),
                    }
                }
                "constraint_min" => cmin = parse_num(key, value)?,
                "constraint_max" => cmax = parse_num(key, value)?,
                "early_stop_patience" => cfg.early_stop_patience = parse_num(key, value)?,
                "lr_reduce_patience" => cfg.lr_reduce_patience = parse_num(key, value)?,
                "lr_reduce_factor" => cfg.lr_reduce_factor = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "out_dir" => cfg.out_dir = Some(value.clone()),
                other => return Err(Error::Config(format!("unknown config key '{other}'"))),
            }
        }
        if head_set && !batch_set {
            cfg.batch_size = ExperimentConfig::defaults(head).batch_size;
        }
        cfg.optimizer = match optimizer_name.as_str() {
            "sgd" => OptimizerChoice::Sgd,
            "momentum" => OptimizerChoice::Momentum { momentum },
            "rmsprop" => OptimizerChoice::RmsProp { decay: rms_decay },
            "adam" => OptimizerChoice::Adam,
            other => return Err(Error::Config(format!("unknown optimizer '{other}'"))),
        };
        cfg.constraint = if constraint_on { Some((cmin, cmax)) } else { None };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Render back to the flat `key=value` form accepted by [`Self::parse`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("depth", self.depth.to_string());
        push("half_width", self.half_width.to_string());
        push(
            "head",
            match self.head {
                Head::Linear => "linear".into(),
                Head::Tanh => "tanh".into(),
            },
        );
        push("scheme", self.scheme.name().into());
        push("per_snr_train_n", self.per_snr_train_n.to_string());
        push("per_snr_test_n", self.per_snr_test_n.to_string());
        push("batch_size", self.batch_size.to_string());
        push("max_epochs", self.max_epochs.to_string());
        push("learning_rate", format!("{}", self.learning_rate));
        push("optimizer", self.optimizer.name().into());
        if let OptimizerChoice::Momentum { momentum } = self.optimizer {
            push("momentum", format!("{momentum}"));
        }
        if let OptimizerChoice::RmsProp { decay } = self.optimizer {
            push("rms_decay", format!("{decay}"));
        }
        push(
            "init",
            match self.init {
                InitKind::HeNormal => "he".into(),
                InitKind::LecunNormal => "lecun".into(),
            },
        );
        match self.constraint {
            Some((cmin, cmax)) => {
                push("constraint", "on".into());
                push("constraint_min", format!("{cmin}"));
                push("constraint_max", format!("{cmax}"));
            }
            None => push("constraint", "off".into()),
        }
        push("early_stop_patience", self.early_stop_patience.to_string());
        push("lr_reduce_patience", self.lr_reduce_patience.to_string());
        push("lr_reduce_factor", format!("{}", self.lr_reduce_factor));
        push("seed", self.seed.to_string());
        if let Some(dir) = &self.out_dir {
            push("out_dir", dir.clone());
        }
        out
    }
}

fn split_entries(text: &str) -> Result<Vec<(String, String)>, Error> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(format!("config line {}", lineno + 1), format!("expected key=value, got '{line}'"))
        })?;
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn parse_head(value: &str) -> Result<Head, Error> {
    match value.to_ascii_lowercase().as_str() {
        "linear" => Ok(Head::Linear),
        "tanh" => Ok(Head::Tanh),
        other => Err(Error::parse("config key 'head'", format!("unknown head '{other}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::parse(format!("config key '{key}'"), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_depend_on_head() {
        assert_eq!(ExperimentConfig::defaults(Head::Linear).batch_size, 80);
        assert_eq!(ExperimentConfig::defaults(Head::Tanh).batch_size, 40);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::defaults(Head::Tanh);
        cfg.scheme = Scheme::LowSnr;
        cfg.optimizer = OptimizerChoice::Momentum { momentum: 0.8 };
        cfg.constraint = None;
        cfg.seed = 99;
        cfg.out_dir = Some("runs/a".into());
        let parsed = ExperimentConfig::parse(&cfg.render()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn unknown_key_is_error() {
        assert!(ExperimentConfig::parse("depth=3\nwat=1\n").is_err());
    }

    #[test]
    fn head_is_order_insensitive() {
        let cfg = ExperimentConfig::parse("scheme=low\nhead=tanh\n").unwrap();
        assert_eq!(cfg.batch_size, 40);
        let cfg = ExperimentConfig::parse("head=tanh\nbatch_size=16\n").unwrap();
        assert_eq!(cfg.batch_size, 16);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = ExperimentConfig::parse("# a comment\n\ndepth=4\n").unwrap();
        assert_eq!(cfg.depth, 4);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::parse("lr_reduce_factor=1.5\n").is_err());
        assert!(ExperimentConfig::parse("batch_size=0\n").is_err());
        assert!(ExperimentConfig::parse("optimizer=adagrad\n").is_err());
        assert!(ExperimentConfig::parse("depth=x\n").is_err());
    }
}
