//! Scenario configuration: a flat `key = value` file format with unit
//! suffixes, parsed onto a fully defaulted scenario struct.
//!
//! Parsing reports every problem it finds in one pass, each tagged with its
//! line number, instead of stopping at the first. All quantities are stored
//! in base units: bits per second, nanoseconds, bytes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Which transport sits between the two hosts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Optical access segment with TDMA upstream, plus the aggregation
    /// switch.
    Pon,
    /// Direct cable between the hosts.
    BackToBack,
}

/// Which way the mobile data flow runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MobileDirection {
    /// Central host towards the radio-side host.
    Downlink,
    /// Radio-side host towards the central host.
    Uplink,
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub mode: Mode,
    pub mobile_dir: MobileDirection,
    /// How long sources emit.
    pub duration_ns: u64,
    /// Extra time after emission stops for in-flight packets to land.
    pub drain_margin_ns: u64,
    /// Keep emitting past `duration_ns` until at least this many packets
    /// have left the mobile source (0 = no minimum).
    pub min_packets: u64,

    pub mobile_rate_bps: u64,
    pub mobile_packet_bytes: u32,
    pub mobile_ramp_ns: u64,
    pub mobile_start_ns: u64,
    pub overload_rate_bps: u64,
    pub overload_packet_bytes: u32,
    pub probe_period_ns: u64,
    pub probe_bytes: u32,
    pub probe_count: u64,

    pub pon_downstream_bps: u64,
    pub pon_upstream_line_bps: u64,
    pub pon_upstream_usable_bps: u64,
    pub cycle_ns: u64,
    /// Time constant of the allocator's demand smoothing; 0 disables
    /// smoothing entirely.
    pub ema_tau_ns: u64,
    pub fiber_km: f64,
    pub group_index: f64,
    pub mobile_assured_bps: u64,
    /// Provisioned rate ceiling for the mobile T-CONT; 0 means uncapped.
    pub mobile_max_bps: u64,
    pub overload_assured_bps: u64,
    pub overload_max_bps: u64,
    pub tcont_buffer_bytes: u64,

    pub degrade_mean_ns: u64,
    pub degrade_sigma_ns: u64,
    pub degrade_floor_ns: u64,

    /// Fixed per-direction host stack processing time.
    pub host_proc_ns: u64,
    /// Mean of the exponential jitter added on top of `host_proc_ns`.
    pub host_jitter_mean_ns: u64,
    /// Receive-side packet processing rate.
    pub budget_bps: u64,
    pub budget_buffer_bytes: u64,
    pub reorder_deadline_ns: u64,
    pub reorder_capacity: usize,

    pub window_ns: u64,
    pub step_ns: u64,
    pub hold_ns: u64,

    /// Bit-rate grid for the downlink sweep.
    pub sweep_rates_bps: Vec<u64>,
    /// Jitter grid for the downlink sweep.
    pub sweep_sigmas_ns: Vec<u64>,

    pub out_dir: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            mode: Mode::Pon,
            mobile_dir: MobileDirection::Downlink,
            duration_ns: 1_000_000_000,
            drain_margin_ns: 200_000_000,
            min_packets: 0,
            mobile_rate_bps: 100_000_000,
            mobile_packet_bytes: 1200,
            mobile_ramp_ns: 0,
            mobile_start_ns: 0,
            overload_rate_bps: 0,
            overload_packet_bytes: 1500,
            probe_period_ns: 0,
            probe_bytes: 64,
            probe_count: 0,
            pon_downstream_bps: 9_953_280_000,
            pon_upstream_line_bps: 9_953_280_000,
            pon_upstream_usable_bps: 8_640_000_000,
            cycle_ns: 125_000,
            ema_tau_ns: 30_000_000,
            fiber_km: 10.0,
            group_index: 1.468,
            mobile_assured_bps: 150_000_000,
            mobile_max_bps: 0,
            overload_assured_bps: 150_000_000,
            overload_max_bps: 0,
            tcont_buffer_bytes: 1 << 20,
            degrade_mean_ns: 0,
            degrade_sigma_ns: 0,
            degrade_floor_ns: 10_000,
            host_proc_ns: 200_000,
            host_jitter_mean_ns: 20_000,
            budget_bps: 160_000_000,
            budget_buffer_bytes: 64 << 10,
            reorder_deadline_ns: 1_000_000,
            reorder_capacity: 256,
            window_ns: 10_000_000,
            step_ns: 1_000_000,
            hold_ns: 50_000_000,
            sweep_rates_bps: Vec::new(),
            sweep_sigmas_ns: Vec::new(),
            out_dir: "out".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {lineno}: expected `key = value`, got `{line}`"));
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                errors.push(format!("line {lineno}: duplicate key `{key}`"));
                continue;
            }
            if let Err(msg) = cfg.apply(key, value) {
                errors.push(format!("line {lineno}: {msg}"));
            }
        }

        cfg.validate(&mut errors);
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = parse_count(value)?,
            "mode" => {
                self.mode = match value {
                    "pon" => Mode::Pon,
                    "b2b" => Mode::BackToBack,
                    other => return Err(format!("mode must be `pon` or `b2b`, got `{other}`")),
                }
            }
            "mobile_dir" => {
                self.mobile_dir = match value {
                    "down" => MobileDirection::Downlink,
                    "up" => MobileDirection::Uplink,
                    other => {
                        return Err(format!("mobile_dir must be `down` or `up`, got `{other}`"))
                    }
                }
            }
            "duration" => self.duration_ns = parse_time_ns(value)?,
            "drain_margin" => self.drain_margin_ns = parse_time_ns(value)?,
            "min_packets" => self.min_packets = parse_count(value)?,
            "mobile_rate" => self.mobile_rate_bps = parse_rate_bps(value)?,
            "mobile_packet_bytes" => self.mobile_packet_bytes = parse_count(value)? as u32,
            "mobile_ramp" => self.mobile_ramp_ns = parse_time_ns(value)?,
            "mobile_start" => self.mobile_start_ns = parse_time_ns(value)?,
            "overload_rate" => self.overload_rate_bps = parse_rate_bps(value)?,
            "overload_packet_bytes" => self.overload_packet_bytes = parse_count(value)? as u32,
            "probe_period" => self.probe_period_ns = parse_time_ns(value)?,
            "probe_bytes" => self.probe_bytes = parse_count(value)? as u32,
            "probe_count" => self.probe_count = parse_count(value)?,
            "pon_downstream" => self.pon_downstream_bps = parse_rate_bps(value)?,
            "pon_upstream_line" => self.pon_upstream_line_bps = parse_rate_bps(value)?,
            "pon_upstream_usable" => self.pon_upstream_usable_bps = parse_rate_bps(value)?,
            "cycle" => self.cycle_ns = parse_time_ns(value)?,
            "ema_tau" => self.ema_tau_ns = parse_time_ns(value)?,
            "fiber_km" => self.fiber_km = parse_float(value)?,
            "group_index" => self.group_index = parse_float(value)?,
            "mobile_assured" => self.mobile_assured_bps = parse_rate_bps(value)?,
            "mobile_max" => self.mobile_max_bps = parse_rate_bps(value)?,
            "overload_assured" => self.overload_assured_bps = parse_rate_bps(value)?,
            "overload_max" => self.overload_max_bps = parse_rate_bps(value)?,
            "tcont_buffer" => self.tcont_buffer_bytes = parse_bytes(value)?,
            "degrade_mean" => self.degrade_mean_ns = parse_time_ns(value)?,
            "degrade_sigma" => self.degrade_sigma_ns = parse_time_ns(value)?,
            "degrade_floor" => self.degrade_floor_ns = parse_time_ns(value)?,
            "host_proc" => self.host_proc_ns = parse_time_ns(value)?,
            "host_jitter_mean" => self.host_jitter_mean_ns = parse_time_ns(value)?,
            "budget" => self.budget_bps = parse_rate_bps(value)?,
            "budget_buffer" => self.budget_buffer_bytes = parse_bytes(value)?,
            "reorder_deadline" => self.reorder_deadline_ns = parse_time_ns(value)?,
            "reorder_capacity" => self.reorder_capacity = parse_count(value)? as usize,
            "window" => self.window_ns = parse_time_ns(value)?,
            "step" => self.step_ns = parse_time_ns(value)?,
            "hold" => self.hold_ns = parse_time_ns(value)?,
            "sweep_rates" => self.sweep_rates_bps = parse_list(value, parse_rate_bps)?,
            "sweep_sigmas" => self.sweep_sigmas_ns = parse_list(value, parse_time_ns)?,
            "out_dir" => self.out_dir = value.to_string(),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    fn validate(&self, errors: &mut Vec<String>) {
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errors.push(msg);
            }
        };

        check(self.duration_ns > 0, "duration must be positive".into());
        check(self.mobile_rate_bps > 0, "mobile_rate must be positive".into());
        check(
            self.mobile_packet_bytes > 0 && self.mobile_packet_bytes <= 16_000,
            "mobile_packet_bytes must be in 1..=16000".into(),
        );
        check(self.cycle_ns > 0, "cycle must be positive".into());
        check(
            self.ema_tau_ns == 0 || self.ema_tau_ns >= self.cycle_ns,
            format!(
                "ema_tau ({} ns) must be 0 or at least one cycle ({} ns)",
                self.ema_tau_ns, self.cycle_ns
            ),
        );
        // Runs shorter than the slowest time constant measure the
        // transient, not the behavior.
        let slowest = self.ema_tau_ns.max(self.mobile_ramp_ns);
        check(
            self.duration_ns >= 10 * slowest,
            format!(
                "duration ({} ns) must be at least 10x the slowest time constant ({} ns)",
                self.duration_ns, slowest
            ),
        );
        check(
            self.pon_downstream_bps > 0
                && self.pon_upstream_line_bps > 0
                && self.pon_upstream_usable_bps > 0,
            "optical rates must be positive".into(),
        );
        check(
            self.pon_upstream_usable_bps <= self.pon_upstream_line_bps,
            "pon_upstream_usable cannot exceed pon_upstream_line".into(),
        );
        let mut assured = self.mobile_assured_bps;
        if self.overload_rate_bps > 0 {
            assured += self.overload_assured_bps;
        }
        check(
            assured <= self.pon_upstream_usable_bps,
            format!(
                "assured commitments ({assured} b/s) exceed usable upstream capacity ({} b/s)",
                self.pon_upstream_usable_bps
            ),
        );
        check(
            self.mobile_max_bps == 0 || self.mobile_max_bps >= self.mobile_assured_bps,
            "mobile_max must be 0 (uncapped) or at least mobile_assured".into(),
        );
        check(
            self.overload_max_bps == 0 || self.overload_max_bps >= self.overload_assured_bps,
            "overload_max must be 0 (uncapped) or at least overload_assured".into(),
        );
        check(
            self.tcont_buffer_bytes >= self.mobile_packet_bytes as u64,
            "tcont_buffer must hold at least one packet".into(),
        );
        check(self.budget_bps > 0, "budget must be positive".into());
        check(
            self.budget_buffer_bytes >= self.mobile_packet_bytes as u64,
            "budget_buffer must hold at least one packet".into(),
        );
        check(self.reorder_capacity > 0, "reorder_capacity must be positive".into());
        check(
            self.probe_count == 0 || self.probe_period_ns > 0,
            "probe_count needs a nonzero probe_period".into(),
        );
        check(
            self.step_ns > 0 && self.window_ns >= self.step_ns,
            "window must be at least one step".into(),
        );
        check(self.hold_ns >= self.window_ns, "hold must cover at least one window".into());
        check(
            self.group_index >= 1.0 && self.group_index < 3.0,
            "group_index must be a plausible refractive index".into(),
        );
        check(
            self.fiber_km >= 0.0 && self.fiber_km <= 100.0,
            "fiber_km must be in 0..=100".into(),
        );
    }

    /// EMA weight per cycle derived from the configured time constant.
    pub fn ema_alpha(&self) -> f64 {
        if self.ema_tau_ns == 0 {
            1.0
        } else {
            (self.cycle_ns as f64 / self.ema_tau_ns as f64).min(1.0)
        }
    }

    pub fn mobile_max_effective_bps(&self) -> u64 {
        if self.mobile_max_bps == 0 {
            u64::MAX
        } else {
            self.mobile_max_bps
        }
    }

    pub fn overload_max_effective_bps(&self) -> u64 {
        if self.overload_max_bps == 0 {
            u64::MAX
        } else {
            self.overload_max_bps
        }
    }

    /// Canonical rendering of the effective configuration: every field, in
    /// base units with explicit suffixes, one per line. Equal configurations
    /// render identically, and the rendering parses back to the same
    /// configuration.
    pub fn canonical(&self) -> String {
        let ns = |v: u64| format!("{v}ns");
        let bps = |v: u64| format!("{v}bps");
        let mut s = String::new();
        let rates = self
            .sweep_rates_bps
            .iter()
            .map(|&v| bps(v))
            .collect::<Vec<_>>()
            .join(",");
        let sigmas = self
            .sweep_sigmas_ns
            .iter()
            .map(|&v| ns(v))
            .collect::<Vec<_>>()
            .join(",");
        let mode = match self.mode {
            Mode::Pon => "pon",
            Mode::BackToBack => "b2b",
        };
        let dir = match self.mobile_dir {
            MobileDirection::Downlink => "down",
            MobileDirection::Uplink => "up",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("budget", bps(self.budget_bps)),
            ("budget_buffer", self.budget_buffer_bytes.to_string()),
            ("cycle", ns(self.cycle_ns)),
            ("degrade_floor", ns(self.degrade_floor_ns)),
            ("degrade_mean", ns(self.degrade_mean_ns)),
            ("degrade_sigma", ns(self.degrade_sigma_ns)),
            ("drain_margin", ns(self.drain_margin_ns)),
            ("duration", ns(self.duration_ns)),
            ("ema_tau", ns(self.ema_tau_ns)),
            ("fiber_km", format!("{:?}", self.fiber_km)),
            ("group_index", format!("{:?}", self.group_index)),
            ("hold", ns(self.hold_ns)),
            ("host_jitter_mean", ns(self.host_jitter_mean_ns)),
            ("host_proc", ns(self.host_proc_ns)),
            ("min_packets", self.min_packets.to_string()),
            ("mobile_assured", bps(self.mobile_assured_bps)),
            ("mobile_dir", dir.to_string()),
            ("mobile_max", bps(self.mobile_max_bps)),
            ("mobile_packet_bytes", self.mobile_packet_bytes.to_string()),
            ("mobile_ramp", ns(self.mobile_ramp_ns)),
            ("mobile_rate", bps(self.mobile_rate_bps)),
            ("mobile_start", ns(self.mobile_start_ns)),
            ("mode", mode.to_string()),
            ("out_dir", self.out_dir.clone()),
            ("overload_assured", bps(self.overload_assured_bps)),
            ("overload_max", bps(self.overload_max_bps)),
            ("overload_packet_bytes", self.overload_packet_bytes.to_string()),
            ("overload_rate", bps(self.overload_rate_bps)),
            ("pon_downstream", bps(self.pon_downstream_bps)),
            ("pon_upstream_line", bps(self.pon_upstream_line_bps)),
            ("pon_upstream_usable", bps(self.pon_upstream_usable_bps)),
            ("probe_bytes", self.probe_bytes.to_string()),
            ("probe_count", self.probe_count.to_string()),
            ("probe_period", ns(self.probe_period_ns)),
            ("reorder_capacity", self.reorder_capacity.to_string()),
            ("reorder_deadline", ns(self.reorder_deadline_ns)),
            ("seed", self.seed.to_string()),
            ("step", ns(self.step_ns)),
            ("sweep_rates", rates),
            ("sweep_sigmas", sigmas),
            ("tcont_buffer", self.tcont_buffer_bytes.to_string()),
            ("window", ns(self.window_ns)),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Hex digest identifying the effective configuration.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            let _ = write!(out, "{byte:02x}");
        }
        out
    }
}

fn split_unit(value: &str) -> (&str, &str) {
    let split = value
        .find(|c: char| c.is_ascii_alphabetic())
        .unwrap_or(value.len());
    (value[..split].trim(), value[split..].trim())
}

fn parse_number(text: &str, what: &str) -> Result<f64, String> {
    text.parse::<f64>()
        .map_err(|_| format!("cannot parse `{text}` as a {what}"))
}

fn to_u64(value: f64, what: &str) -> Result<u64, String> {
    if !value.is_finite() || value < 0.0 || value > u64::MAX as f64 {
        return Err(format!("{what} out of range: {value}"));
    }
    Ok(value.round() as u64)
}

/// Bit rate with unit: `150Mbps`, `9.95328Gbps`, `0`. Bare numbers other
/// than zero are rejected so nobody silently configures 150 b/s.
fn parse_rate_bps(value: &str) -> Result<u64, String> {
    let (num, unit) = split_unit(value);
    let n = parse_number(num, "rate")?;
    let mult = match unit {
        "bps" => 1.0,
        "kbps" => 1e3,
        "Mbps" => 1e6,
        "Gbps" => 1e9,
        "" if n == 0.0 => 1.0,
        "" => return Err(format!("rate `{value}` needs a unit (bps, kbps, Mbps, Gbps)")),
        other => return Err(format!("unknown rate unit `{other}`")),
    };
    to_u64(n * mult, "rate")
}

/// Duration with unit: `125us`, `30ms`, `2s`, `0`.
fn parse_time_ns(value: &str) -> Result<u64, String> {
    let (num, unit) = split_unit(value);
    let n = parse_number(num, "duration")?;
    let mult = match unit {
        "ns" => 1.0,
        "us" => 1e3,
        "ms" => 1e6,
        "s" => 1e9,
        "" if n == 0.0 => 1.0,
        "" => return Err(format!("duration `{value}` needs a unit (ns, us, ms, s)")),
        other => return Err(format!("unknown time unit `{other}`")),
    };
    to_u64(n * mult, "duration")
}

/// Size with optional unit: `1200`, `64KB`, `1MB`. KB and MB are binary.
fn parse_bytes(value: &str) -> Result<u64, String> {
    let (num, unit) = split_unit(value);
    let n = parse_number(num, "size")?;
    let mult = match unit {
        "" | "B" => 1.0,
        "KB" => 1024.0,
        "MB" => 1024.0 * 1024.0,
        other => return Err(format!("unknown size unit `{other}`")),
    };
    to_u64(n * mult, "size")
}

fn parse_count(value: &str) -> Result<u64, String> {
    value
        .parse::<u64>()
        .map_err(|_| format!("cannot parse `{value}` as an integer"))
}

fn parse_float(value: &str) -> Result<f64, String> {
    let v = parse_number(value, "number")?;
    if !v.is_finite() {
        return Err(format!("`{value}` is not finite"));
    }
    Ok(v)
}

fn parse_list<T>(value: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}
