//! DL precoding (ZF, SVD) with per-carrier water-filling under a network
//! sum-power constraint, UL centralized ZF detection capacity, and stream
//! rank.
//!
//! Channel orientation: [`crate::chanmodel::LinkChannel`] stores matrices
//! with network antennas as rows. The DL receive-side matrix seen by the
//! UE is the transpose; the stored orientation is already the UL one.
//! Capacities are spectral efficiencies in bits/s/Hz, flat per RB.

use thiserror::Error;

use crate::chanmodel::LinkChannel;
use crate::numerics::{gram_inverse_diagonal, pinv, svd, ComplexMatrix, NumericsError};
use crate::scene::{NoiseModel, TxPowerModel};
use crate::units::dbm_to_mw;

#[derive(Debug, Error)]
pub enum MimoError {
    #[error("channel is rank-deficient for the requested {wanted} layers (rank {rank})")]
    SingularChannel { wanted: usize, rank: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which DL precoder to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecoderKind {
    Zf,
    Svd,
}

/// Water-filling power allocation: maximize `Σ log2(1 + p_i·g_i/n0)`
/// subject to `Σ p_i = total_power`, `p_i ≥ 0`.
///
/// Exact ordering method: sort the noise floors `n0/g_i`, find the largest
/// active set with positive powers, share the water level closed-form.
pub fn waterfill(gains: &[f64], n0_mw: f64, total_power_mw: f64) -> Vec<f64> {
    assert!(total_power_mw > 0.0, "power budget must be positive");
    assert!(!gains.is_empty());
    assert!(
        gains.iter().all(|&g| g > 0.0),
        "water-filling needs positive gains"
    );
    let n = gains.len();
    let mut order: Vec<usize> = (0..n).collect();
    let floors: Vec<f64> = gains.iter().map(|&g| n0_mw / g).collect();
    order.sort_by(|&a, &b| floors[a].partial_cmp(&floors[b]).unwrap());

    let mut powers = vec![0.0; n];
    // try active set sizes from largest down; the first feasible one is optimal
    let mut prefix = vec![0.0; n + 1];
    for (i, &idx) in order.iter().enumerate() {
        prefix[i + 1] = prefix[i] + floors[idx];
    }
    for active in (1..=n).rev() {
        let level = (total_power_mw + prefix[active]) / active as f64;
        if level >= floors[order[active - 1]] {
            for &idx in order.iter().take(active) {
                powers[idx] = level - floors[idx];
            }
            break;
        }
    }
    powers
}

/// Sum rate of an allocation, bits/s/Hz.
pub fn allocation_capacity(gains: &[f64], powers: &[f64], n0_mw: f64) -> f64 {
    gains
        .iter()
        .zip(powers.iter())
        .map(|(&g, &p)| (1.0 + p * g / n0_mw).log2())
        .sum()
}

/// SVD precoding for one RB. `h_rx_tx` is the receive×transmit channel.
/// Returns the transmit precoder (tx × L), the receive combiner (L × rx),
/// and the per-layer power gains σ_i².
pub struct SvdPrecoding {
    pub precoder: ComplexMatrix,
    pub combiner: ComplexMatrix,
    pub effective_gains: Vec<f64>,
}

pub fn precode_svd(h_rx_tx: &ComplexMatrix, layers: usize) -> Result<SvdPrecoding, MimoError> {
    let (rx, tx) = (h_rx_tx.rows(), h_rx_tx.cols());
    assert!(
        layers >= 1 && layers <= rx.min(tx),
        "layers must be within min(M, N)"
    );
    let s = svd(h_rx_tx)?;
    let precoder = ComplexMatrix::from_fn(tx, layers, |r, c| s.right[(r, c)]);
    let combiner = ComplexMatrix::from_fn(layers, rx, |r, c| s.left[(c, r)].conj());
    let effective_gains = s.singular.iter().take(layers).map(|&sv| sv * sv).collect();
    Ok(SvdPrecoding {
        precoder,
        combiner,
        effective_gains,
    })
}

/// ZF precoding for one RB: the right pseudo-inverse of the channel rows
/// serving the first `layers` receive antennas, columns normalized to unit
/// power. Layer `i` then sees gain `1/‖f_i‖²` of the unnormalized inverse
/// column and zero inter-layer interference.
pub struct ZfPrecoding {
    pub precoder: ComplexMatrix,
    pub effective_gains: Vec<f64>,
}

pub fn precode_zf(h_rx_tx: &ComplexMatrix, layers: usize) -> Result<ZfPrecoding, MimoError> {
    let (rx, tx) = (h_rx_tx.rows(), h_rx_tx.cols());
    assert!(layers >= 1 && layers <= rx.min(tx));
    let h_sub = if layers == rx {
        h_rx_tx.clone()
    } else {
        h_rx_tx.row_slice(0, layers)
    };
    let p = pinv(&h_sub)?;
    if p.rank < layers {
        return Err(MimoError::SingularChannel {
            wanted: layers,
            rank: p.rank,
        });
    }
    let mut precoder = ComplexMatrix::zeros(tx, layers);
    let mut effective_gains = Vec::with_capacity(layers);
    for l in 0..layers {
        let norm_sq = p.matrix.col_norm_sqr(l);
        let norm = norm_sq.sqrt();
        for r in 0..tx {
            precoder[(r, l)] = p.matrix[(r, l)] / norm;
        }
        effective_gains.push(1.0 / norm_sq);
    }
    Ok(ZfPrecoding {
        precoder,
        effective_gains,
    })
}

/// Per-RB precoding state: precoder, combiner, layer powers, per-antenna
/// gains (absorbed into the precoder normalization), and effective layer
/// gains.
#[derive(Clone, Debug)]
pub struct PrecodingSolution {
    /// Transmit precoder, tx antennas × layers, unit-power columns.
    pub precoder: ComplexMatrix,
    /// Receive combiner, layers × rx antennas (identity rows for ZF).
    pub combiner: ComplexMatrix,
    /// Water-filled per-layer powers, mW.
    pub layer_powers: Vec<f64>,
    /// Per-antenna amplification gains; unity here since normalization is
    /// absorbed into the precoder columns.
    pub antenna_gains: Vec<f64>,
    pub effective_gains: Vec<f64>,
}

impl PrecodingSolution {
    /// Total radiated power, mW (column-normalized precoder ⇒ sum of layer
    /// powers).
    pub fn radiated_power_mw(&self) -> f64 {
        self.layer_powers.iter().sum()
    }
}

/// Capacity evaluation for one link across all RBs.
#[derive(Clone, Debug)]
pub struct CapacityResult {
    /// Spectral efficiency per RB, bits/s/Hz.
    pub per_rb_bits_per_hz: Vec<f64>,
    pub mean_bits_per_hz: f64,
    /// Per-layer SINR in dB, one vector per RB.
    pub per_layer_sinr_db: Vec<Vec<f64>>,
    /// RBs where the channel was too degenerate for the requested layers.
    pub degenerate_rb_count: usize,
}

impl CapacityResult {
    fn from_rbs(per_rb: Vec<f64>, sinrs: Vec<Vec<f64>>, degenerate: usize) -> CapacityResult {
        let mean = per_rb.iter().sum::<f64>() / per_rb.len().max(1) as f64;
        CapacityResult {
            per_rb_bits_per_hz: per_rb,
            mean_bits_per_hz: mean,
            per_layer_sinr_db: sinrs,
            degenerate_rb_count: degenerate,
        }
    }
}

/// Build the per-RB precoding solution for a given receive×transmit
/// channel, water-filling `budget_mw` over the effective layer gains.
pub fn dl_precoding_solution(
    h_rx_tx: &ComplexMatrix,
    precoder: PrecoderKind,
    layers: usize,
    budget_mw: f64,
    n0_mw: f64,
) -> Result<PrecodingSolution, MimoError> {
    let (gains, f, w) = match precoder {
        PrecoderKind::Svd => {
            let p = precode_svd(h_rx_tx, layers)?;
            (p.effective_gains, p.precoder, p.combiner)
        }
        PrecoderKind::Zf => {
            let p = precode_zf(h_rx_tx, layers)?;
            let identity = ComplexMatrix::identity(layers);
            let combiner = ComplexMatrix::from_fn(layers, h_rx_tx.rows(), |r, c| {
                if c < layers {
                    identity[(r, c)]
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                }
            });
            (p.effective_gains, p.precoder, combiner)
        }
    };
    // drop zero modes before water-filling (rank < layers for SVD)
    let active: Vec<f64> = gains.iter().map(|&g| g.max(1e-300)).collect();
    let layer_powers = waterfill(&active, n0_mw, budget_mw);
    let tx = h_rx_tx.cols();
    Ok(PrecodingSolution {
        precoder: f,
        combiner: w,
        layer_powers,
        antenna_gains: vec![1.0; tx],
        effective_gains: gains,
    })
}

/// Single-user DL capacity: per RB, precode, water-fill the per-RB share
/// of the network sum power, and accumulate `Σ log2(1 + p_i g_i / n0)`.
/// The per-RB budget is the network total divided by the RB count.
pub fn dl_capacity(
    link: &LinkChannel,
    precoder: PrecoderKind,
    layers: usize,
    tx: &TxPowerModel,
    noise: &NoiseModel,
) -> Result<CapacityResult, MimoError> {
    let n0 = noise.n0_mw_per_rb();
    let total_mw = dbm_to_mw(tx.network_total_dbm(link.ap_ids.len()));
    let budget_rb = total_mw / link.rb_count() as f64;
    let mut per_rb = Vec::with_capacity(link.rb_count());
    let mut sinrs = Vec::with_capacity(link.rb_count());
    let mut degenerate = 0usize;
    for h in &link.per_rb {
        // UE-side view of the DL channel
        let h_dl = h.transpose();
        if h_dl.frobenius_norm() == 0.0 {
            per_rb.push(0.0);
            sinrs.push(vec![crate::units::DB_FLOOR; layers]);
            degenerate += 1;
            continue;
        }
        match dl_precoding_solution(&h_dl, precoder, layers, budget_rb, n0) {
            Ok(sol) => {
                let mut cap = 0.0;
                let mut layer_sinr = Vec::with_capacity(layers);
                for l in 0..layers {
                    let snr = sol.layer_powers[l] * sol.effective_gains[l] / n0;
                    cap += (1.0 + snr).log2();
                    layer_sinr.push(crate::units::power_to_db(snr));
                }
                per_rb.push(cap);
                sinrs.push(layer_sinr);
            }
            Err(MimoError::SingularChannel { .. }) => {
                per_rb.push(0.0);
                sinrs.push(vec![crate::units::DB_FLOOR; layers]);
                degenerate += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(CapacityResult::from_rbs(per_rb, sinrs, degenerate))
}

/// UL centralized ZF detection capacity with uniform per-antenna transmit
/// power (no UE-side precoding, no water-filling):
/// `SINR_i = p / (n0 · [(HᴴH)⁻¹]_ii)` per RB.
pub fn ul_zf_capacity(
    link: &LinkChannel,
    per_antenna_mw_per_rb: f64,
    noise: &NoiseModel,
) -> CapacityResult {
    let n0 = noise.n0_mw_per_rb();
    let layers = link.cols();
    let mut per_rb = Vec::with_capacity(link.rb_count());
    let mut sinrs = Vec::with_capacity(link.rb_count());
    let mut degenerate = 0usize;
    for h in &link.per_rb {
        // stored orientation is already network rows × UE columns
        match gram_inverse_diagonal(h) {
            Ok(diag) => {
                let mut cap = 0.0;
                let mut layer_sinr = Vec::with_capacity(layers);
                for &d in &diag {
                    let sinr = per_antenna_mw_per_rb / (n0 * d);
                    cap += (1.0 + sinr).log2();
                    layer_sinr.push(crate::units::power_to_db(sinr));
                }
                per_rb.push(cap);
                sinrs.push(layer_sinr);
            }
            Err(_) => {
                // singular Gram: the affected RB contributes zero capacity
                per_rb.push(0.0);
                sinrs.push(vec![crate::units::DB_FLOOR; layers]);
                degenerate += 1;
            }
        }
    }
    CapacityResult::from_rbs(per_rb, sinrs, degenerate)
}

/// UL ZF detection capacity with the UE's per-RB sum power water-filled
/// over the post-processing gains `1/[(HᴴH)⁻¹]_ii` instead of the default
/// uniform per-antenna split.
pub fn ul_zf_capacity_waterfilled(
    link: &LinkChannel,
    total_ue_mw_per_rb: f64,
    noise: &NoiseModel,
) -> CapacityResult {
    let n0 = noise.n0_mw_per_rb();
    let layers = link.cols();
    let mut per_rb = Vec::with_capacity(link.rb_count());
    let mut sinrs = Vec::with_capacity(link.rb_count());
    let mut degenerate = 0usize;
    for h in &link.per_rb {
        match gram_inverse_diagonal(h) {
            Ok(diag) => {
                let gains: Vec<f64> = diag.iter().map(|&d| 1.0 / d).collect();
                let powers = waterfill(&gains, n0, total_ue_mw_per_rb);
                let mut cap = 0.0;
                let mut layer_sinr = Vec::with_capacity(layers);
                for (&p, &g) in powers.iter().zip(&gains) {
                    let sinr = p * g / n0;
                    cap += (1.0 + sinr).log2();
                    layer_sinr.push(crate::units::power_to_db(sinr));
                }
                per_rb.push(cap);
                sinrs.push(layer_sinr);
            }
            Err(_) => {
                per_rb.push(0.0);
                sinrs.push(vec![crate::units::DB_FLOOR; layers]);
                degenerate += 1;
            }
        }
    }
    CapacityResult::from_rbs(per_rb, sinrs, degenerate)
}

/// Number of significant streams of a single-RB channel: singular-value
/// streams whose received power under uniform power allocation clears the
/// threshold.
///
/// Normalization (documented): the AP radiates `per_antenna_power_dbm` per
/// antenna on this RB, the total `M · P_ant` splits uniformly over
/// `L = min(M, N)` streams, and stream `i` is received with power
/// `(M · P_ant / L) · σ_i²`.
pub fn stream_rank(h_rb: &ComplexMatrix, per_antenna_power_dbm: f64, threshold_dbm: f64) -> usize {
    if h_rb.frobenius_norm() == 0.0 {
        return 0;
    }
    let m = h_rb.rows();
    let l = m.min(h_rb.cols());
    let p_stream_mw = dbm_to_mw(per_antenna_power_dbm) * m as f64 / l as f64;
    let s = match svd(h_rb) {
        Ok(s) => s,
        Err(_) => return 0,
    };
    s.singular
        .iter()
        .take(l)
        .filter(|&&sv| crate::units::mw_to_dbm(p_stream_mw * sv * sv) >= threshold_dbm)
        .count()
}
