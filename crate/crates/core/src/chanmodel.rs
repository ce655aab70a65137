//! Per-RB MIMO channel assembly, stochastic Rayleigh synthesis, coherence
//! bandwidth, and the channel database file.
//!
//! Channel matrices are stored with network (AP) antennas as rows and UE
//! antennas as columns, one matrix per resource block evaluated at the RB
//! center frequency. Multi-AP links are row-stacked single-AP entries.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::ComplexMatrix;
use crate::rng::RandomStream;
use crate::scene::{array_elements, ArrayConfig, Scene};
use crate::tracer::RayPath;

#[derive(Debug, Error)]
pub enum ChanError {
    #[error("no channel entry for AP {ap} / UE {ue}")]
    MissingEntry { ap: u32, ue: u32 },
    #[error("channel database format error: {0}")]
    Format(String),
    #[error("channel database was built for a different scene")]
    DigestMismatch,
    #[error("degenerate all-zero channel")]
    DegenerateChannel,
    #[error("mixed channel models or RB grids cannot be stacked")]
    Incompatible,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which generator produced a channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelModel {
    Rt,
    Rayleigh,
}

impl ChannelModel {
    fn tag(self) -> u8 {
        match self {
            ChannelModel::Rt => 0,
            ChannelModel::Rayleigh => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self, ChanError> {
        match tag {
            0 => Ok(ChannelModel::Rt),
            1 => Ok(ChannelModel::Rayleigh),
            other => Err(ChanError::Format(format!("unknown model tag {other}"))),
        }
    }
}

/// Per-RB complex channel matrices for one (AP set, UE) link.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkChannel {
    pub ap_ids: Vec<u32>,
    pub ue_id: u32,
    pub model: ChannelModel,
    /// One M×N matrix per resource block.
    pub per_rb: Vec<ComplexMatrix>,
    pub rb_center_frequencies: Vec<f64>,
}

impl LinkChannel {
    /// Network antenna count (rows).
    pub fn rows(&self) -> usize {
        self.per_rb[0].rows()
    }

    /// UE antenna count (columns).
    pub fn cols(&self) -> usize {
        self.per_rb[0].cols()
    }

    pub fn rb_count(&self) -> usize {
        self.per_rb.len()
    }

    /// Flag for links where no path survived tracing: every entry zero.
    pub fn is_empty_link(&self) -> bool {
        self.per_rb
            .iter()
            .all(|m| m.data().iter().all(|z| z.re == 0.0 && z.im == 0.0))
    }

    /// Mean |H|² across RBs and antenna pairs (linear power gain).
    pub fn mean_power_gain(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for m in &self.per_rb {
            sum += m.data().iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += m.data().len();
        }
        sum / count.max(1) as f64
    }
}

/// Assemble the deterministic (ray-traced) channel for one AP–UE link.
///
/// Each entry sums the per-path fields sandwiched between the element
/// Jones vectors (which carry the antenna XPD leakage), with far-field
/// array phase offsets from the element positions projected onto the path
/// departure/arrival directions.
pub fn assemble_rt_channel(
    paths: &[RayPath],
    ap_array: &ArrayConfig,
    ue_array: &ArrayConfig,
    carrier_hz: f64,
    rb_center_frequencies: &[f64],
    ap_id: u32,
    ue_id: u32,
) -> LinkChannel {
    let ap_el = array_elements(ap_array, carrier_hz);
    let ue_el = array_elements(ue_array, carrier_hz);
    let m = ap_el.len();
    let n = ue_el.len();
    let k_count = rb_center_frequencies.len();
    let mut per_rb = vec![ComplexMatrix::zeros(m, n); k_count];

    for path in paths {
        // polarization sandwich: scalar per antenna pair, frequency-free
        let g = &path.pol_gain.0;
        let mut pol = vec![Complex64::new(0.0, 0.0); m * n];
        for (mi, ae) in ap_el.iter().enumerate() {
            // field at the UE in (V,H) for this transmit element
            let v_in = ae.jones;
            let field = [
                g[0][0] * v_in.0 + g[0][1] * v_in.1,
                g[1][0] * v_in.0 + g[1][1] * v_in.1,
            ];
            for (ni, ue_e) in ue_el.iter().enumerate() {
                pol[mi * n + ni] = field[0] * ue_e.jones.0 + field[1] * ue_e.jones.1;
            }
        }
        // far-field element phase offsets along departure/arrival
        let dep: Vec<f64> = ap_el.iter().map(|e| e.offset.dot(path.departure)).collect();
        let arr: Vec<f64> = ue_el.iter().map(|e| e.offset.dot(path.arrival)).collect();

        let inv_c = 1.0 / crate::units::SPEED_OF_LIGHT;
        for (k, &f) in rb_center_frequencies.iter().enumerate() {
            // same spreading amplitude and reference phase as path_field
            let amp = crate::units::wavelength(f) / (4.0 * std::f64::consts::PI * path.length);
            let factor = Complex64::from_polar(amp, -std::f64::consts::TAU * f * path.delay);
            let two_pi_f = std::f64::consts::TAU * f;
            for mi in 0..m {
                for ni in 0..n {
                    let extra = arr[ni] - dep[mi];
                    let phase = Complex64::from_polar(1.0, -two_pi_f * extra * inv_c);
                    per_rb[k][(mi, ni)] += pol[mi * n + ni] * factor * phase;
                }
            }
        }
    }

    LinkChannel {
        ap_ids: vec![ap_id],
        ue_id,
        model: ChannelModel::Rt,
        per_rb,
        rb_center_frequencies: rb_center_frequencies.to_vec(),
    }
}

/// Magnitude-matched Rayleigh synthesis: every entry of the RT channel is
/// replaced by `|H_rt| · s` with `s ~ CN(0, 1)` drawn independently per
/// (seed, AP, UE, RB, row, column). Defined on single-AP links; stacked
/// links are synthesized entry-wise before stacking.
pub fn synthesize_rayleigh(rt: &LinkChannel, seed: u64) -> LinkChannel {
    assert_eq!(
        rt.model,
        ChannelModel::Rt,
        "Rayleigh synthesis needs an RT input"
    );
    assert_eq!(
        rt.ap_ids.len(),
        1,
        "synthesize per single-AP entry, then stack"
    );
    let ap = rt.ap_ids[0] as u64;
    let ue = rt.ue_id as u64;
    let mut per_rb = Vec::with_capacity(rt.per_rb.len());
    for (k, h) in rt.per_rb.iter().enumerate() {
        let mut out = ComplexMatrix::zeros(h.rows(), h.cols());
        for r in 0..h.rows() {
            for c in 0..h.cols() {
                let mag = h[(r, c)].norm();
                if mag > 0.0 {
                    let mut stream =
                        RandomStream::new(seed, &[ap, ue, k as u64, r as u64, c as u64]);
                    out[(r, c)] = stream.complex_normal() * mag;
                }
            }
        }
        per_rb.push(out);
    }
    LinkChannel {
        ap_ids: rt.ap_ids.clone(),
        ue_id: rt.ue_id,
        model: ChannelModel::Rayleigh,
        per_rb,
        rb_center_frequencies: rt.rb_center_frequencies.clone(),
    }
}

/// Largest frequency lag (Hz, a multiple of the RB spacing) for which the
/// normalized frequency autocorrelation of the transfer function, averaged
/// over antenna pairs, stays at or above `threshold` for every smaller lag.
/// A flat channel returns the full measurable span `(rb_count − 1) · δf`.
pub fn coherence_bandwidth(link: &LinkChannel, threshold: f64) -> Result<f64, ChanError> {
    assert!(link.rb_count() >= 2, "need at least two RBs");
    assert!((0.0..1.0).contains(&threshold) && threshold > 0.0);
    if link.is_empty_link() {
        return Err(ChanError::DegenerateChannel);
    }
    let spacing = link.rb_center_frequencies[1] - link.rb_center_frequencies[0];
    let kc = link.rb_count();
    let (m, n) = (link.rows(), link.cols());
    let mut max_ok_lag = 0usize;
    for lag in 1..kc {
        let mut acc = 0.0;
        let mut pairs = 0usize;
        for r in 0..m {
            for c in 0..n {
                let mut corr = Complex64::new(0.0, 0.0);
                let mut p0 = 0.0;
                let mut p1 = 0.0;
                for k in 0..kc - lag {
                    let a = link.per_rb[k][(r, c)];
                    let b = link.per_rb[k + lag][(r, c)];
                    corr += b * a.conj();
                    p0 += a.norm_sqr();
                    p1 += b.norm_sqr();
                }
                let norm = (p0 * p1).sqrt();
                if norm > 0.0 {
                    acc += corr.norm() / norm;
                    pairs += 1;
                }
            }
        }
        if pairs == 0 {
            break;
        }
        if acc / pairs as f64 >= threshold {
            max_ok_lag = lag;
        } else {
            break;
        }
    }
    Ok(max_ok_lag as f64 * spacing)
}

/// Row-stack single-AP entries into one network channel, rows ordered by
/// `ap_ids`.
pub fn stack_channels(
    db: &ChannelDatabase,
    ap_ids: &[u32],
    ue_id: u32,
) -> Result<LinkChannel, ChanError> {
    assert!(!ap_ids.is_empty());
    let mut links = Vec::with_capacity(ap_ids.len());
    for &ap in ap_ids {
        let link = db
            .entries
            .get(&(ap, ue_id))
            .ok_or(ChanError::MissingEntry { ap, ue: ue_id })?;
        links.push(link);
    }
    stack_links(&links)
}

/// Stack arbitrary link channels (used both by the database path and by
/// on-the-fly evaluation).
pub fn stack_links(links: &[&LinkChannel]) -> Result<LinkChannel, ChanError> {
    assert!(!links.is_empty());
    let first = links[0];
    if links.len() == 1 {
        return Ok(first.clone());
    }
    let kc = first.rb_count();
    for l in links {
        if l.model != first.model
            || l.rb_count() != kc
            || l.ue_id != first.ue_id
            || l.cols() != first.cols()
        {
            return Err(ChanError::Incompatible);
        }
    }
    let mut per_rb = Vec::with_capacity(kc);
    for k in 0..kc {
        let blocks: Vec<&ComplexMatrix> = links.iter().map(|l| &l.per_rb[k]).collect();
        per_rb.push(ComplexMatrix::vstack(&blocks));
    }
    Ok(LinkChannel {
        ap_ids: links
            .iter()
            .flat_map(|l| l.ap_ids.iter().copied())
            .collect(),
        ue_id: first.ue_id,
        model: first.model,
        per_rb,
        rb_center_frequencies: first.rb_center_frequencies.clone(),
    })
}

/// All single-AP link channels for a deployment, keyed by (AP id, UE id).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDatabase {
    pub scene_digest: [u8; 32],
    pub model: ChannelModel,
    pub seed: u64,
    pub carrier_hz: f64,
    pub entries: BTreeMap<(u32, u32), LinkChannel>,
}

const MAGIC: &[u8; 4] = b"DMCH";
const VERSION: u16 = 1;

impl ChannelDatabase {
    pub fn check_scene(&self, scene: &Scene) -> Result<(), ChanError> {
        if self.scene_digest != scene.digest() {
            return Err(ChanError::DigestMismatch);
        }
        Ok(())
    }

    fn dims(&self) -> Result<(usize, usize, usize), ChanError> {
        let first = self
            .entries
            .values()
            .next()
            .ok_or_else(|| ChanError::Format("empty database".into()))?;
        Ok((first.rows(), first.cols(), first.rb_count()))
    }
}

/// Write the database in the documented binary layout: little-endian
/// header (magic `DMCH`, version, model tag, M, N, rb_count, seed, carrier,
/// RB grid origin/spacing, scene digest, entry count), then per entry the
/// AP/UE ids and `rb_count · M · N` interleaved (re, im) f64 pairs in
/// (rb, row, column) order, entries sorted by (AP id, UE id).
pub fn save_database(db: &ChannelDatabase, path: &Path) -> Result<(), ChanError> {
    let (m, n, kc) = db.dims()?;
    let first = db.entries.values().next().unwrap();
    let rb0 = first.rb_center_frequencies[0];
    let spacing = if kc > 1 {
        first.rb_center_frequencies[1] - rb0
    } else {
        0.0
    };
    for link in db.entries.values() {
        if link.rows() != m || link.cols() != n || link.rb_count() != kc {
            return Err(ChanError::Format("inconsistent entry dimensions".into()));
        }
    }
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(db.model.tag());
    buf.push(0u8);
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(kc as u32).to_le_bytes());
    buf.extend_from_slice(&db.seed.to_le_bytes());
    buf.extend_from_slice(&db.carrier_hz.to_le_bytes());
    buf.extend_from_slice(&rb0.to_le_bytes());
    buf.extend_from_slice(&spacing.to_le_bytes());
    buf.extend_from_slice(&db.scene_digest);
    buf.extend_from_slice(&(db.entries.len() as u32).to_le_bytes());
    for ((ap, ue), link) in &db.entries {
        buf.extend_from_slice(&ap.to_le_bytes());
        buf.extend_from_slice(&ue.to_le_bytes());
        for h in &link.per_rb {
            for z in h.data() {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Read a database back; checks magic and version, and the scene digest
/// when a scene is supplied.
pub fn load_database(path: &Path, scene: Option<&Scene>) -> Result<ChannelDatabase, ChanError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };

    let magic = cur.take(4)?;
    if magic != MAGIC {
        return Err(ChanError::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(ChanError::Format(format!("unsupported version {version}")));
    }
    let model = ChannelModel::from_tag(cur.u8()?)?;
    let _reserved = cur.u8()?;
    let m = cur.u32()? as usize;
    let n = cur.u32()? as usize;
    let kc = cur.u32()? as usize;
    let seed = cur.u64()?;
    let carrier = cur.f64()?;
    let rb0 = cur.f64()?;
    let spacing = cur.f64()?;
    let digest: [u8; 32] = cur
        .take(32)?
        .try_into()
        .map_err(|_| ChanError::Format("short digest".into()))?;
    let entry_count = cur.u32()? as usize;
    if m == 0 || n == 0 || kc == 0 {
        return Err(ChanError::Format("zero dimensions".into()));
    }
    let rb_centers: Vec<f64> = (0..kc).map(|k| rb0 + k as f64 * spacing).collect();

    let mut entries = BTreeMap::new();
    for _ in 0..entry_count {
        let ap = cur.u32()?;
        let ue = cur.u32()?;
        let mut per_rb = Vec::with_capacity(kc);
        for _ in 0..kc {
            let mut h = ComplexMatrix::zeros(m, n);
            for r in 0..m {
                for c in 0..n {
                    let re = cur.f64()?;
                    let im = cur.f64()?;
                    h[(r, c)] = Complex64::new(re, im);
                }
            }
            per_rb.push(h);
        }
        entries.insert(
            (ap, ue),
            LinkChannel {
                ap_ids: vec![ap],
                ue_id: ue,
                model,
                per_rb,
                rb_center_frequencies: rb_centers.clone(),
            },
        );
    }
    if cur.pos != bytes.len() {
        return Err(ChanError::Format("trailing bytes".into()));
    }
    let db = ChannelDatabase {
        scene_digest: digest,
        model,
        seed,
        carrier_hz: carrier,
        entries,
    };
    if let Some(scene) = scene {
        db.check_scene(scene)?;
    }
    Ok(db)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ChanError> {
        if self.pos + n > self.bytes.len() {
            return Err(ChanError::Format("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ChanError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, ChanError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ChanError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, ChanError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
