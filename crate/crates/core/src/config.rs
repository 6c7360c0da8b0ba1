//! Sweep configuration in a `key = value` text format.
//!
//! One setting per line; `#` starts a comment; lists are comma-separated. Every key can also be
//! set from the command line, and later settings override earlier ones.
//!
//! ```text
//! p_loss = 0, 0.05
//! p_comp = 0.004, 0.005, 0.006
//! L = 6, 8, 10
//! trials = 5000
//! seed = 1
//! mode = circuit
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::decoder::WeightMode;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::montecarlo::{DecoderSettings, TrialConfig};
use crate::noise::{GateSchedule, LossTiming, NoiseMode, NoiseParams};

pub const KEYS: [&str; 11] = [
    "p_loss",
    "p_comp",
    "L",
    "trials",
    "seed",
    "mode",
    "loss_timing",
    "degeneracy",
    "weight_mode",
    "gate_schedule",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub p_loss: Vec<f64>,
    /// Computational error rate: `p_P = p_S = p_M = p_2` in circuit mode, `p_flip` otherwise.
    pub p_comp: Vec<f64>,
    pub sizes: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub mode: NoiseMode,
    pub loss_timing: LossTiming,
    pub degeneracy: bool,
    pub weight_mode: WeightMode,
    pub gate_schedule: [u8; 4],
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p_loss: vec![0.0],
            p_comp: Vec::new(),
            sizes: Vec::new(),
            trials: 1000,
            seed: 1,
            mode: NoiseMode::Circuit,
            loss_timing: LossTiming::BeforeGates,
            degeneracy: true,
            weight_mode: WeightMode::LogLikelihood,
            gate_schedule: [0, 1, 2, 3],
            output: None,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| invalid(key, format!("cannot parse `{s}`"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{}`", value.trim())))
}

pub fn parse_mode(s: &str) -> Option<NoiseMode> {
    match s {
        "circuit" => Some(NoiseMode::Circuit),
        "phenomenological" => Some(NoiseMode::Phenomenological),
        _ => None,
    }
}

pub fn mode_name(m: NoiseMode) -> &'static str {
    match m {
        NoiseMode::Circuit => "circuit",
        NoiseMode::Phenomenological => "phenomenological",
    }
}

pub fn parse_loss_timing(s: &str) -> Option<LossTiming> {
    match s {
        "before_gates" => Some(LossTiming::BeforeGates),
        "after_gates" => Some(LossTiming::AfterGates),
        "random_half" => Some(LossTiming::RandomHalf),
        _ => None,
    }
}

pub fn loss_timing_name(t: LossTiming) -> &'static str {
    match t {
        LossTiming::BeforeGates => "before_gates",
        LossTiming::AfterGates => "after_gates",
        LossTiming::RandomHalf => "random_half",
    }
}

pub fn parse_weight_mode(s: &str) -> Option<WeightMode> {
    match s {
        "log_likelihood" => Some(WeightMode::LogLikelihood),
        "distance" => Some(WeightMode::Distance),
        _ => None,
    }
}

pub fn weight_mode_name(w: WeightMode) -> &'static str {
    match w {
        WeightMode::LogLikelihood => "log_likelihood",
        WeightMode::Distance => "distance",
    }
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(invalid(key, format!("expected true or false, got `{other}`"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Config {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "p_loss" => self.p_loss = parse_list(key, value)?,
            "p_comp" => self.p_comp = parse_list(key, value)?,
            "L" | "sizes" => self.sizes = parse_list(key, value)?,
            "trials" => self.trials = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "mode" => {
                self.mode = parse_mode(value.trim())
                    .ok_or_else(|| invalid(key, "expected circuit or phenomenological"))?
            }
            "loss_timing" => {
                self.loss_timing = parse_loss_timing(value.trim())
                    .ok_or_else(|| invalid(key, "expected before_gates, after_gates or random_half"))?
            }
            "degeneracy" => self.degeneracy = parse_bool(key, value)?,
            "weight_mode" => {
                self.weight_mode = parse_weight_mode(value.trim())
                    .ok_or_else(|| invalid(key, "expected log_likelihood or distance"))?
            }
            "gate_schedule" => {
                let v: Vec<u8> = parse_list(key, value)?;
                let perm: [u8; 4] = v
                    .try_into()
                    .map_err(|_| invalid(key, "expected 4 slot numbers"))?;
                GateSchedule::permuted(perm)
                    .ok_or_else(|| invalid(key, "expected a permutation of 0, 1, 2, 3"))?;
                self.gate_schedule = perm;
            }
            "output" => {
                let v = value.trim();
                self.output = (!v.is_empty()).then(|| PathBuf::from(v));
            }
            _ => return Err(invalid(key, "unknown key")),
        }
        Ok(())
    }

    /// Apply a `key=value` override string.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| invalid(kv, "override must look like key=value"))?;
        self.set(k.trim(), v.trim())
    }

    pub fn validate(&self) -> Result<()> {
        for (key, list) in [("p_loss", &self.p_loss), ("p_comp", &self.p_comp)] {
            if list.is_empty() {
                return Err(invalid(key, "list is empty"));
            }
            if let Some(v) = list.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid(key, format!("{v} is not a probability")));
            }
        }
        if self.sizes.is_empty() {
            return Err(invalid("L", "list is empty"));
        }
        for &l in &self.sizes {
            Lattice::new(l).map_err(|e| invalid("L", e.to_string()))?;
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        Ok(())
    }

    pub fn noise(&self, p_loss: f64, p_comp: f64) -> NoiseParams {
        let base = match self.mode {
            NoiseMode::Circuit => NoiseParams::circuit(p_comp, p_loss),
            NoiseMode::Phenomenological => NoiseParams::phenomenological(p_comp, p_loss),
        };
        base.with_loss_timing(self.loss_timing)
    }

    /// Grid points `(p_loss, p_comp, L)` in sorted order, duplicates removed.
    pub fn grid(&self) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        for &q in &self.p_loss {
            for &p in &self.p_comp {
                for &l in &self.sizes {
                    out.push((q, p, l));
                }
            }
        }
        out.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        out.dedup();
        out
    }

    pub fn trial_config(&self, p_loss: f64, p_comp: f64, size: usize) -> TrialConfig {
        let mut cfg = TrialConfig::for_point(self.seed, size, self.noise(p_loss, p_comp), self.trials)
            .with_decoder(DecoderSettings {
                degeneracy: self.degeneracy,
                weight_mode: self.weight_mode,
            });
        cfg.schedule = GateSchedule::permuted(self.gate_schedule).expect("validated on set");
        cfg
    }

    /// Canonical text form; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p_loss = {}", join(&self.p_loss));
        let _ = writeln!(s, "p_comp = {}", join(&self.p_comp));
        let _ = writeln!(s, "L = {}", join(&self.sizes));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mode = {}", mode_name(self.mode));
        let _ = writeln!(s, "loss_timing = {}", loss_timing_name(self.loss_timing));
        let _ = writeln!(s, "degeneracy = {}", self.degeneracy);
        let _ = writeln!(s, "weight_mode = {}", weight_mode_name(self.weight_mode));
        let _ = writeln!(s, "gate_schedule = {}", join(&self.gate_schedule));
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output = {}", p.display());
        }
        s
    }
}
