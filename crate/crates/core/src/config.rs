//! Scenario configuration and its flat `key = value` file format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Result, SimError};
use crate::name::Name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Pull,
    Push,
    Hybrid,
    Onion,
    /// Producer uploads straight to the nearest proxy, ignoring censorship.
    Direct,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Pull, Mode::Push, Mode::Hybrid, Mode::Onion, Mode::Direct];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pull => "pull",
            Mode::Push => "push",
            Mode::Hybrid => "hybrid",
            Mode::Onion => "onion",
            Mode::Direct => "direct",
        }
    }

    pub fn uses_peers(self) -> bool {
        matches!(self, Mode::Pull | Mode::Push | Mode::Hybrid)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SimError::Config(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorStrategy {
    /// Answer piece requests with bogus pieces.
    Masquerade,
    /// Record traffic only.
    Observe,
}

impl FromStr for CensorStrategy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "peer-masquerade" | "masquerade" => Ok(CensorStrategy::Masquerade),
            "observe" => Ok(CensorStrategy::Observe),
            other => Err(SimError::Config(format!("unknown censor strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Topology file; the built-in AS1221-scale topology when absent.
    pub topology: Option<PathBuf>,
    pub mode: Mode,
    /// All peers including the producer; zero means `collab_peers + 1`.
    pub peers: usize,
    pub collab_peers: usize,
    pub censor_frac: f64,
    pub censor_strategy: CensorStrategy,
    pub proxies: usize,
    pub data_size: usize,
    pub packet_size: usize,
    pub piece_size: usize,
    pub piece_jitter: f64,
    pub threshold: u32,
    pub max_retries: u32,
    pub min_proxy_distance: usize,
    pub link_delay_ms: f64,
    /// Router-to-router bandwidth in Mbit/s; zero means infinite.
    pub bandwidth_mbps: f64,
    /// Bandwidth of each host's link to its router in Mbit/s; zero means
    /// infinite.
    pub access_mbps: f64,
    /// Upload Interests one host may emit per second. Binds the peers, the
    /// direct uploader and the onion source alike.
    pub egress_rate: f64,
    pub pull_timeout_ms: f64,
    pub pit_lifetime_ms: f64,
    pub cs_capacity: usize,
    pub horizon_s: f64,
    pub q_bits: u64,
    /// Per-layer onion costs. Defaults are reference measurements; use
    /// `calibrate-onion` for figures from the local machine.
    pub onion_encrypt_us: f64,
    pub onion_decrypt_us: f64,
    pub decoy_pool: Vec<Name>,
    pub sync_prefix: Name,
    pub data_name: Name,
    /// Prefix identifying the producer; must never be visible inside the
    /// censoring network.
    pub producer_prefix: Name,
    pub verify_published: bool,
    pub trace: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let n = |s: &str| s.parse::<Name>().expect("static name");
        Self {
            topology: None,
            mode: Mode::Hybrid,
            peers: 0,
            collab_peers: 20,
            censor_frac: 0.0,
            censor_strategy: CensorStrategy::Masquerade,
            proxies: 5,
            data_size: 1 << 20,
            packet_size: 1024,
            piece_size: 8192,
            piece_jitter: 0.2,
            threshold: 3,
            max_retries: 5,
            min_proxy_distance: 5,
            link_delay_ms: 2.0,
            bandwidth_mbps: 0.0,
            access_mbps: 0.0,
            egress_rate: 12000.0,
            pull_timeout_ms: 1000.0,
            pit_lifetime_ms: 4000.0,
            cs_capacity: 1000,
            horizon_s: 600.0,
            q_bits: 256,
            onion_encrypt_us: 130.0,
            onion_decrypt_us: 70.0,
            decoy_pool: ["/Mendeley", "/Dropbox", "/Zotero", "/Overleaf", "/arXiv"]
                .iter()
                .map(|s| n(s))
                .collect(),
            sync_prefix: n("/sync/Game1"),
            data_name: n("/alice/protest/video"),
            producer_prefix: n("/alice"),
            verify_published: true,
            trace: false,
            seed: 1,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| SimError::Config(format!("bad value {v:?} for key {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(SimError::Config(format!("bad boolean {v:?} for key {key}"))),
    }
}

impl ScenarioConfig {
    pub const KEYS: &'static [&'static str] = &[
        "topology", "mode", "peers", "collab_peers", "censor_frac", "censor_strategy", "proxies",
        "data_size", "packet_size", "piece_size", "piece_jitter", "threshold", "max_retries",
        "min_proxy_distance", "link_delay_ms", "bandwidth_mbps", "access_mbps", "egress_rate", "pull_timeout_ms",
        "pit_lifetime_ms", "cs_capacity", "horizon_s", "q_bits", "onion_encrypt_us",
        "onion_decrypt_us", "decoy_pool", "sync_prefix", "data_name", "producer_prefix",
        "verify_published", "trace", "seed",
    ];

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "topology" => self.topology = (!v.is_empty()).then(|| PathBuf::from(v)),
            "mode" => self.mode = v.parse()?,
            "peers" => self.peers = parse_num(key, v)?,
            "collab_peers" => self.collab_peers = parse_num(key, v)?,
            "censor_frac" => self.censor_frac = parse_num(key, v)?,
            "censor_strategy" => self.censor_strategy = v.parse()?,
            "proxies" => self.proxies = parse_num(key, v)?,
            "data_size" => self.data_size = parse_num(key, v)?,
            "packet_size" => self.packet_size = parse_num(key, v)?,
            "piece_size" => self.piece_size = parse_num(key, v)?,
            "piece_jitter" => self.piece_jitter = parse_num(key, v)?,
            "threshold" => self.threshold = parse_num(key, v)?,
            "max_retries" => self.max_retries = parse_num(key, v)?,
            "min_proxy_distance" => self.min_proxy_distance = parse_num(key, v)?,
            "link_delay_ms" => self.link_delay_ms = parse_num(key, v)?,
            "bandwidth_mbps" => self.bandwidth_mbps = parse_num(key, v)?,
            "access_mbps" => self.access_mbps = parse_num(key, v)?,
            "egress_rate" => self.egress_rate = parse_num(key, v)?,
            "pull_timeout_ms" => self.pull_timeout_ms = parse_num(key, v)?,
            "pit_lifetime_ms" => self.pit_lifetime_ms = parse_num(key, v)?,
            "cs_capacity" => self.cs_capacity = parse_num(key, v)?,
            "horizon_s" => self.horizon_s = parse_num(key, v)?,
            "q_bits" => self.q_bits = parse_num(key, v)?,
            "onion_encrypt_us" => self.onion_encrypt_us = parse_num(key, v)?,
            "onion_decrypt_us" => self.onion_decrypt_us = parse_num(key, v)?,
            "decoy_pool" => {
                self.decoy_pool = v
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            "sync_prefix" => self.sync_prefix = v.parse()?,
            "data_name" => self.data_name = v.parse()?,
            "producer_prefix" => self.producer_prefix = v.parse()?,
            "verify_published" => self.verify_published = parse_bool(key, v)?,
            "trace" => self.trace = parse_bool(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            _ => return Err(SimError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, value) in parse_pairs(text)? {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn effective_peers(&self) -> usize {
        if self.peers == 0 {
            self.collab_peers + 1
        } else {
            self.peers
        }
    }

    /// Censoring nodes: the censor fraction of the collaborating peer count.
    pub fn censor_count(&self) -> usize {
        (self.censor_frac * self.collab_peers as f64).round() as usize
    }

    pub fn total_packets(&self) -> u64 {
        self.data_size.div_ceil(self.packet_size) as u64
    }

    pub fn packets_per_piece(&self) -> u64 {
        (self.piece_size / self.packet_size).max(1) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(0.0..=1.0).contains(&self.censor_frac) {
            return bad(format!("censor_frac must lie in [0, 1], got {}", self.censor_frac));
        }
        if self.collab_peers == 0 {
            return bad("collab_peers must be positive".into());
        }
        if self.collab_peers >= self.effective_peers() {
            return bad(format!(
                "collab_peers ({}) must be below peers ({}), which include the producer",
                self.collab_peers,
                self.effective_peers()
            ));
        }
        if self.data_size == 0 || self.packet_size == 0 || self.piece_size < self.packet_size {
            return bad("need data_size > 0 and piece_size >= packet_size > 0".into());
        }
        if !(0.0..1.0).contains(&self.piece_jitter) {
            return bad("piece_jitter must lie in [0, 1)".into());
        }
        if self.threshold == 0 {
            return bad("threshold must be positive".into());
        }
        if self.max_retries < self.threshold {
            return bad(format!(
                "max_retries ({}) must be at least threshold ({}) or Hybrid can never switch",
                self.max_retries, self.threshold
            ));
        }
        if self.proxies == 0 || self.proxies > self.decoy_pool.len() {
            return bad(format!(
                "need 1..={} proxies (one per decoy prefix), got {}",
                self.decoy_pool.len(),
                self.proxies
            ));
        }
        if self.decoy_pool.iter().any(|p| p.len() != 1) {
            return bad("decoy prefixes must have exactly one component".into());
        }
        for (k, v) in [
            ("link_delay_ms", self.link_delay_ms),
            ("bandwidth_mbps", self.bandwidth_mbps),
            ("access_mbps", self.access_mbps),
            ("onion_encrypt_us", self.onion_encrypt_us),
            ("onion_decrypt_us", self.onion_decrypt_us),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{k} must be finite and non-negative"));
            }
        }
        for (k, v) in [
            ("egress_rate", self.egress_rate),
            ("pull_timeout_ms", self.pull_timeout_ms),
            ("pit_lifetime_ms", self.pit_lifetime_ms),
            ("horizon_s", self.horizon_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{k} must be positive"));
            }
        }
        if self.q_bits < 8 {
            return bad("q_bits must be at least 8".into());
        }
        if self.sync_prefix.is_empty() || self.data_name.is_empty() {
            return bad("sync_prefix and data_name must be non-empty".into());
        }
        if !self.producer_prefix.is_prefix_of(&self.data_name) || self.producer_prefix.is_empty() {
            return bad("producer_prefix must be a non-empty prefix of data_name".into());
        }
        Ok(())
    }

    /// Canonical `key = value` rendering accepted by [`ScenarioConfig::parse`].
    pub fn to_text(&self) -> String {
        let pool: Vec<String> = self.decoy_pool.iter().map(Name::to_string).collect();
        let topo = self
            .topology
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let strategy = match self.censor_strategy {
            CensorStrategy::Masquerade => "peer-masquerade",
            CensorStrategy::Observe => "observe",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("topology", topo),
            ("mode", self.mode.to_string()),
            ("peers", self.peers.to_string()),
            ("collab_peers", self.collab_peers.to_string()),
            ("censor_frac", self.censor_frac.to_string()),
            ("censor_strategy", strategy.into()),
            ("proxies", self.proxies.to_string()),
            ("data_size", self.data_size.to_string()),
            ("packet_size", self.packet_size.to_string()),
            ("piece_size", self.piece_size.to_string()),
            ("piece_jitter", self.piece_jitter.to_string()),
            ("threshold", self.threshold.to_string()),
            ("max_retries", self.max_retries.to_string()),
            ("min_proxy_distance", self.min_proxy_distance.to_string()),
            ("link_delay_ms", self.link_delay_ms.to_string()),
            ("bandwidth_mbps", self.bandwidth_mbps.to_string()),
            ("access_mbps", self.access_mbps.to_string()),
            ("egress_rate", self.egress_rate.to_string()),
            ("pull_timeout_ms", self.pull_timeout_ms.to_string()),
            ("pit_lifetime_ms", self.pit_lifetime_ms.to_string()),
            ("cs_capacity", self.cs_capacity.to_string()),
            ("horizon_s", self.horizon_s.to_string()),
            ("q_bits", self.q_bits.to_string()),
            ("onion_encrypt_us", self.onion_encrypt_us.to_string()),
            ("onion_decrypt_us", self.onion_decrypt_us.to_string()),
            ("decoy_pool", pool.join(",")),
            ("sync_prefix", self.sync_prefix.to_string()),
            ("data_name", self.data_name.to_string()),
            ("producer_prefix", self.producer_prefix.to_string()),
            ("verify_published", self.verify_published.to_string()),
            ("trace", self.trace.to_string()),
            ("seed", self.seed.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Splits `key = value` lines, rejecting duplicates.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim().to_owned();
        if out.insert(k.clone(), v.trim().to_owned()).is_some() {
            return Err(SimError::Config(format!("line {}: duplicate key {k:?}", i + 1)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(cfg.effective_peers(), 21);
        assert_eq!(cfg.total_packets(), 1024);
        assert_eq!(cfg.packets_per_piece(), 8);
    }

    #[test]
    fn rejects_invalid_settings() {
        for bad in [
            "censor_frac = 1.5",
            "collab_peers = 30\npeers = 10",
            "max_retries = 2",
            "mode = telepathy",
            "nonsense = 1",
            "seed = 1\nseed = 2",
            "missing equals",
            "proxies = 9",
        ] {
            assert!(ScenarioConfig::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn censor_count_rounds_fraction_of_collaborators() {
        let mut cfg = ScenarioConfig { collab_peers: 20, censor_frac: 0.05, ..Default::default() };
        assert_eq!(cfg.censor_count(), 1);
        cfg.collab_peers = 60;
        cfg.censor_frac = 0.6;
        assert_eq!(cfg.censor_count(), 36);
    }
}
