//! Parameter grids: cartesian expansion, parallel execution, Pull-matched
//! overhead normalization and per-point aggregation.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{parse_pairs, Mode, ScenarioConfig};
use crate::error::{Result, SimError};
use crate::metrics::{RunMetrics, CSV_HEADER};
use crate::scenario::{load_topology, run_on, scenario_group};
use crate::topology::Topology;

/// A grid file: `key = v1, v2, ...` per line. Keys with one value are
/// fixed; `seeds` accepts a list or an inclusive range `a..b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub base: ScenarioConfig,
    pub axes: Vec<(String, Vec<String>)>,
    pub seeds: Vec<u64>,
}

fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    let bad = || SimError::Config(format!("bad seeds {v:?}"));
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return if a <= b { Ok((a..=b).collect()) } else { Err(bad()) };
    }
    v.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self> {
        let mut base = ScenarioConfig::default();
        let mut axes = Vec::new();
        let mut seeds = vec![base.seed];
        // `parse_pairs` sorts keys; axes follow file order instead.
        let order: Vec<String> = text
            .lines()
            .filter_map(|l| l.split('#').next()?.split_once('=').map(|(k, _)| k.trim().to_owned()))
            .collect();
        let pairs = parse_pairs(text)?;
        for key in order {
            let value = &pairs[&key];
            if key == "seeds" {
                seeds = parse_seeds(value)?;
                continue;
            }
            let values: Vec<String> = if key == "decoy_pool" {
                vec![value.clone()]
            } else {
                value.split(',').map(|s| s.trim().to_owned()).collect()
            };
            for v in &values {
                base.set(&key, v)?;
            }
            if values.len() == 1 {
                base.set(&key, &values[0])?;
            } else {
                axes.push((key, values));
            }
        }
        Ok(Self { base, axes, seeds })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// All configurations, axes in file order, seeds innermost.
    pub fn expand(&self) -> Result<Vec<ScenarioConfig>> {
        let mut out = vec![self.base.clone()];
        for (key, values) in &self.axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for cfg in &out {
                for v in values {
                    let mut c = cfg.clone();
                    c.set(key, v)?;
                    next.push(c);
                }
            }
            out = next;
        }
        let mut with_seeds = Vec::with_capacity(out.len() * self.seeds.len());
        for cfg in out {
            cfg.validate()?;
            for &s in &self.seeds {
                with_seeds.push(ScenarioConfig { seed: s, ..cfg.clone() });
            }
        }
        Ok(with_seeds)
    }
}

/// Identifies the Pull run whose overhead normalizes `cfg`.
fn pull_key(cfg: &ScenarioConfig) -> String {
    ScenarioConfig {
        mode: Mode::Pull,
        trace: false,
        verify_published: false,
        ..cfg.clone()
    }
    .to_text()
}

/// Identifies `cfg` up to its seed.
fn point_key(cfg: &ScenarioConfig) -> String {
    ScenarioConfig { seed: 0, ..cfg.clone() }.to_text()
}

pub struct SweepResult {
    pub configs: Vec<ScenarioConfig>,
    pub rows: Vec<std::result::Result<RunMetrics, String>>,
}

impl SweepResult {
    pub fn metrics(&self) -> impl Iterator<Item = &RunMetrics> {
        self.rows.iter().filter_map(|r| r.as_ref().ok())
    }

    /// Means over seeds, one per parameter point, in first-seen order.
    pub fn aggregates(&self) -> Vec<RunMetrics> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: BTreeMap<String, Vec<&RunMetrics>> = BTreeMap::new();
        for (cfg, row) in self.configs.iter().zip(&self.rows) {
            if let Ok(m) = row {
                let k = point_key(cfg);
                if !groups.contains_key(&k) {
                    order.push(k.clone());
                }
                groups.entry(k).or_default().push(m);
            }
        }
        order.iter().map(|k| mean_row(&groups[k])).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for (cfg, row) in self.configs.iter().zip(&self.rows) {
            match row {
                Ok(m) => {
                    let _ = writeln!(out, "{}", m.csv_row());
                }
                Err(e) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{:.4},{},NA,NA,NA,NA,NA,NA,NA # {e}",
                        cfg.mode,
                        cfg.effective_peers(),
                        cfg.collab_peers,
                        cfg.censor_frac,
                        cfg.seed
                    );
                }
            }
        }
        for m in self.aggregates() {
            let row = m.csv_row();
            // The seed column of an aggregate row reads `mean`.
            let mut cols: Vec<&str> = row.split(',').collect();
            cols[4] = "mean";
            let _ = writeln!(out, "{}", cols.join(","));
        }
        out
    }

    /// First run that broke integrity, anonymity or signature validity.
    pub fn invariant_violation(&self) -> Option<String> {
        self.metrics().find_map(|m| {
            let bad = !m.integrity_ok || !m.anonymity_ok() || m.signature_failures.is_some_and(|n| n > 0);
            bad.then(|| format!("{} {} seed {}: invariant violated", m.mode, m.collab_peers, m.seed))
        })
    }
}

fn mean_row(rows: &[&RunMetrics]) -> RunMetrics {
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&RunMetrics) -> f64| rows.iter().map(|m| f(m)).sum::<f64>() / n;
    let norm = rows
        .iter()
        .map(|m| m.overhead_norm)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.iter().sum::<f64>() / n);
    RunMetrics {
        success_rate: mean(&|m| m.success_rate),
        pub_delay_ms: mean(&|m| m.pub_delay_ms),
        complete: rows.iter().all(|m| m.complete),
        overhead_ratio: mean(&|m| m.overhead_ratio),
        overhead_norm: norm,
        blocked_frac: mean(&|m| m.blocked_frac),
        pct_metadata: mean(&|m| m.pct_metadata),
        pct_pieces: mean(&|m| m.pct_pieces),
        pct_egress: mean(&|m| m.pct_egress),
        per_packet_delays_ms: Vec::new(),
        integrity_ok: rows.iter().all(|m| m.integrity_ok),
        published: rows.iter().all(|m| m.published),
        signature_failures: None,
        exposures: rows.iter().map(|m| m.exposures).sum(),
        failures: Vec::new(),
        events: 0,
        ..rows[0].clone()
    }
}

/// Topologies and groups shared by all runs of a sweep.
struct Inputs {
    topologies: BTreeMap<String, Topology>,
    groups: BTreeMap<(u64, u64), harpocrates_crypto::SchnorrGroup>,
}

fn topo_key(cfg: &ScenarioConfig) -> String {
    format!("{:?}@{}", cfg.topology, cfg.link_delay_ms)
}

fn group_key(cfg: &ScenarioConfig) -> (u64, u64) {
    // Only non-default groups depend on the seed.
    (cfg.q_bits, if cfg.q_bits == 256 { 0 } else { cfg.seed })
}

impl Inputs {
    fn prepare(configs: &[ScenarioConfig]) -> Result<Self> {
        let mut topologies = BTreeMap::new();
        let mut groups = BTreeMap::new();
        for cfg in configs {
            if let Entry::Vacant(e) = topologies.entry(topo_key(cfg)) {
                e.insert(load_topology(cfg)?);
            }
            if let Entry::Vacant(e) = groups.entry(group_key(cfg)) {
                e.insert(scenario_group(cfg)?);
            }
        }
        Ok(Self { topologies, groups })
    }

    fn run(&self, cfg: &ScenarioConfig) -> std::result::Result<RunMetrics, String> {
        run_on(&self.topologies[&topo_key(cfg)], &self.groups[&group_key(cfg)], cfg)
            .map(|o| o.metrics)
            .map_err(|e| e.to_string())
    }
}

pub fn run_configs(configs: Vec<ScenarioConfig>, threads: Option<usize>) -> Result<SweepResult> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| SimError::Config(e.to_string()))?;

    let mut missing: Vec<ScenarioConfig> = Vec::new();
    let present: std::collections::BTreeSet<String> =
        configs.iter().filter(|c| c.mode == Mode::Pull).map(pull_key).collect();
    let mut queued = std::collections::BTreeSet::new();
    for cfg in &configs {
        let k = pull_key(cfg);
        if !present.contains(&k) && queued.insert(k) {
            missing.push(ScenarioConfig {
                mode: Mode::Pull,
                trace: false,
                verify_published: false,
                ..cfg.clone()
            });
        }
    }
    let inputs = Inputs::prepare(&configs)?;
    let (mut rows, references) = pool.install(|| {
        let rows: Vec<_> = configs.par_iter().map(|c| inputs.run(c)).collect();
        let refs: Vec<_> = missing.par_iter().map(|c| inputs.run(c)).collect();
        (rows, refs)
    });

    let mut pull_ratio: BTreeMap<String, f64> = BTreeMap::new();
    for (cfg, row) in configs.iter().zip(&rows).chain(missing.iter().zip(&references)) {
        if let (Mode::Pull, Ok(m)) = (cfg.mode, row) {
            pull_ratio.entry(pull_key(cfg)).or_insert(m.overhead_ratio);
        }
    }
    for (cfg, row) in configs.iter().zip(rows.iter_mut()) {
        if let Ok(m) = row {
            m.overhead_norm = pull_ratio.get(&pull_key(cfg)).map(|r| m.overhead_ratio / r);
        }
    }
    Ok(SweepResult { configs, rows })
}

pub fn run_grid(grid: &Grid, threads: Option<usize>) -> Result<SweepResult> {
    run_configs(grid.expand()?, threads)
}
