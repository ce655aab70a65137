//! Per-UE coverage statistics and distribution aggregation.
//!
//! RSRP here is the per-antenna reference power of an AP (its total power
//! divided across its antennas, per the transmit-power model) plus the
//! wideband mean channel gain `10·log10(mean |H|²)` over RBs and antenna
//! pairs. Zero channels serialize as the documented −400 dBm floor.

use thiserror::Error;

use crate::chanmodel::LinkChannel;
use crate::scene::{Deployment, Scene, TxPowerModel};
use crate::units::{power_to_db, DB_FLOOR};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty value list")]
    EmptyInput,
}

/// One UE's metric row; the unit of the exported metrics CSV.
#[derive(Clone, Debug)]
pub struct UeMetricsRow {
    pub ue_id: u32,
    pub x: f64,
    pub y: f64,
    pub best_server_ap: u32,
    pub rsrp_best_dbm: f64,
    /// RSRP toward every candidate AP, in candidate order.
    pub rsrp_per_ap: Vec<(u32, f64)>,
    pub los_ap_count: usize,
    pub detected_ap_count: usize,
    pub relative_rsrp_2nd_db: f64,
    pub relative_rsrp_3rd_db: f64,
    pub rank: usize,
    pub dl_capacity_zf: f64,
    pub dl_capacity_svd: f64,
    pub ul_capacity: f64,
}

/// RSRP in dBm for a single-AP link under a transmit-power model.
/// `active_aps` is the number of APs sharing the budget when the network
/// total is constant.
pub fn rsrp(link: &LinkChannel, tx: &TxPowerModel, active_aps: usize) -> f64 {
    debug_assert_eq!(link.ap_ids.len(), 1, "RSRP is a single-AP metric");
    let per_antenna_dbm = tx.per_ap_dbm(active_aps) - 10.0 * (link.rows().max(1) as f64).log10();
    let gain = link.mean_power_gain();
    if gain <= 0.0 {
        return DB_FLOOR;
    }
    per_antenna_dbm + power_to_db(gain)
}

/// Best server, detection count, and relative RSRP of the runners-up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionStats {
    pub best_server: u32,
    pub detected_count: usize,
    /// `RSRP_(2) − RSRP_(1)` in dB, ≤ 0; −400 when absent.
    pub relative_2nd_db: f64,
    pub relative_3rd_db: f64,
}

/// Rank APs by RSRP (ties broken by lower AP id) and count detections
/// against the threshold.
pub fn detection_stats(rsrp_per_ap: &[(u32, f64)], threshold_dbm: f64) -> DetectionStats {
    assert!(!rsrp_per_ap.is_empty(), "need at least one AP");
    let order = sorted_by_strength(rsrp_per_ap);
    let best = order[0];
    let rel = |i: usize| -> f64 {
        if i < order.len() {
            order[i].1 - best.1
        } else {
            DB_FLOOR
        }
    };
    DetectionStats {
        best_server: best.0,
        detected_count: rsrp_per_ap
            .iter()
            .filter(|(_, r)| *r >= threshold_dbm)
            .count(),
        relative_2nd_db: rel(1),
        relative_3rd_db: rel(2),
    }
}

/// The `b` strongest APs by RSRP, strongest first, ties by lower id.
pub fn select_aps(rsrp_per_ap: &[(u32, f64)], b: usize) -> Vec<u32> {
    assert!(
        b <= rsrp_per_ap.len(),
        "cannot select more APs than candidates"
    );
    sorted_by_strength(rsrp_per_ap)
        .into_iter()
        .take(b)
        .map(|(id, _)| id)
        .collect()
}

fn sorted_by_strength(rsrp_per_ap: &[(u32, f64)]) -> Vec<(u32, f64)> {
    let mut v = rsrp_per_ap.to_vec();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    v
}

/// Number of active APs with a geometrically unobstructed line of sight to
/// the UE position.
pub fn los_count(
    scene: &Scene,
    deployment: &Deployment,
    active_ids: &[u32],
    ue: crate::geom::Vec3,
) -> usize {
    active_ids
        .iter()
        .filter_map(|id| deployment.ap(*id))
        .filter(|ap| !scene.los_blocked(ap.position, ue))
        .count()
}

/// Empirical distribution of a metric: sorted values with CDF/CCDF lookups
/// and lower-interpolation percentiles.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    values: Vec<f64>,
}

impl DistributionTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Empirical CDF: fraction of samples ≤ x.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let count = self.values.partition_point(|&v| v <= x);
        count as f64 / self.values.len() as f64
    }

    pub fn ccdf_at(&self, x: f64) -> f64 {
        1.0 - self.cdf_at(x)
    }

    /// Lower-interpolation percentile: the sample at index
    /// `floor(p · (n − 1))` of the sorted values, `p ∈ [0, 1]`.
    pub fn percentile(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p));
        let idx = (p * (self.values.len() - 1) as f64).floor() as usize;
        self.values[idx]
    }

    /// Median under the lower-interpolation rule (no averaging).
    pub fn median(&self) -> f64 {
        self.percentile(0.5)
    }

    /// Mean via pairwise summation, insensitive to accumulation order.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// (value, cdf, ccdf) rows for export, one per sample point.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let cdf = (i + 1) as f64 / n;
                (v, cdf, 1.0 - cdf)
            })
            .collect()
    }
}

/// Sort values into an empirical distribution table.
pub fn aggregate(values: &[f64]) -> Result<DistributionTable, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(DistributionTable { values: v })
}

/// Pairwise (cascade) summation for reproducible reductions.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
