//! Run metrics, their CSV rendering and the per-packet delay CDF.

use std::fmt::Write;

use crate::config::Mode;
use crate::engine::{to_ms, SimTime};

pub const CSV_HEADER: &str = "mode,peers,collab_peers,censor_frac,seed,success_rate,pub_delay_ms,overhead_norm,blocked_frac,pct_metadata,pct_pieces,pct_egress";

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub mode: Mode,
    pub peers: usize,
    pub collab_peers: usize,
    pub censor_frac: f64,
    pub seed: u64,
    pub success_rate: f64,
    /// Time until the last packet reached the gathering proxy; the horizon
    /// when the upload did not complete.
    pub pub_delay_ms: f64,
    pub complete: bool,
    /// Overhead bytes over data bytes, before normalization.
    pub overhead_ratio: f64,
    /// `overhead_ratio` over that of the matched Pull run, once known.
    pub overhead_norm: Option<f64>,
    pub blocked_frac: f64,
    pub pct_metadata: f64,
    pub pct_pieces: f64,
    pub pct_egress: f64,
    pub per_packet_delays_ms: Vec<f64>,
    /// Whenever the data was published: bytes identical to the producer's
    /// and HMAC verified. Vacuously true for unpublished runs.
    pub integrity_ok: bool,
    pub published: bool,
    /// Published packets whose proxy signature failed consumer
    /// verification; `None` when verification was skipped.
    pub signature_failures: Option<usize>,
    /// Censor-visible packets exposing the producer prefix or certificate.
    pub exposures: usize,
    pub failures: Vec<String>,
    pub events: u64,
}

impl RunMetrics {
    pub fn anonymity_ok(&self) -> bool {
        self.exposures == 0
    }

    pub fn csv_row(&self) -> String {
        let norm = self.overhead_norm.map_or_else(|| "NA".to_owned(), |v| format!("{v:.6}"));
        format!(
            "{},{},{},{:.4},{},{:.6},{:.3},{},{:.6},{:.3},{:.3},{:.3}",
            self.mode,
            self.peers,
            self.collab_peers,
            self.censor_frac,
            self.seed,
            self.success_rate,
            self.pub_delay_ms,
            norm,
            self.blocked_frac,
            self.pct_metadata,
            self.pct_pieces,
            self.pct_egress
        )
    }
}

/// Phase percentages of the publication delay. Phases end at `metadata_end`
/// and `pieces_end`; the remainder up to `total` is egress.
pub fn delay_breakdown(total: SimTime, metadata_end: SimTime, pieces_end: SimTime) -> (f64, f64, f64) {
    if total == 0 {
        return (0.0, 0.0, 100.0);
    }
    let m = metadata_end.min(total);
    let p = pieces_end.clamp(m, total);
    let pct = |v: SimTime| v as f64 / total as f64 * 100.0;
    let (pm, pp) = (pct(m), pct(p - m));
    (pm, pp, 100.0 - pm - pp)
}

/// Empirical CDF as `(delay_ms, cumulative_fraction)` points.
pub fn cdf(delays_ms: &[f64]) -> Vec<(f64, f64)> {
    let mut v = delays_ms.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, d)| (d, (i + 1) as f64 / n)).collect()
}

pub fn cdf_table(delays_ms: &[f64]) -> String {
    let mut out = String::from("delay_ms,cumulative_fraction\n");
    for (d, f) in cdf(delays_ms) {
        let _ = writeln!(out, "{d:.3},{f:.6}");
    }
    out
}

pub fn ms_of(t: SimTime) -> f64 {
    to_ms(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakdown_partitions_total() {
        let (a, b, c) = delay_breakdown(1000, 80, 400);
        assert!((a - 8.0).abs() < 1e-9 && (b - 32.0).abs() < 1e-9);
        assert!((a + b + c - 100.0).abs() < 1e-9);
        let (a, b, c) = delay_breakdown(100, 500, 50);
        assert_eq!((a, b, c), (100.0, 0.0, 0.0));
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let c = cdf(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(c.first().unwrap(), &(1.0, 0.25));
        assert_eq!(c.last().unwrap().1, 1.0);
        assert!(c.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert!(cdf(&[]).is_empty());
    }
}
