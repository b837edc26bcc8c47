//! Bond percolation on a finite box of `Z^d`.

mod clusters;
mod estimates;

pub use clusters::{infinite_cluster_proxy, label_clusters, ClusterLabeling, UnionFind};
pub use estimates::{estimate_theta, good_cube_scan, CubeFlags, GoodCubeReport, PercolationEstimates};

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::lattice::{BoxSpec, Lattice};
use crate::rng;
use crate::{Error, Result};

/// Reference critical points, used only to warn about subcritical runs.
/// `p_c(2) = 1/2` is exact; `p_c(3)` is the usual numerical value.
pub fn critical_probability(d: usize) -> Option<f64> {
    match d {
        2 => Some(0.5),
        3 => Some(0.2488),
        _ => None,
    }
}

pub fn warn_if_subcritical(d: usize, p: f64) {
    if let Some(pc) = critical_probability(d) {
        if p <= pc {
            log::warn!("p = {p} is not above p_c({d}) = {pc}; results describe a subcritical system");
        }
    }
}

/// Open/closed status of every edge of a box, one bit per edge slot.
#[derive(Debug, Clone)]
pub struct BondConfiguration {
    lattice: Lattice,
    p: f64,
    seed: u64,
    bits: Vec<u64>,
}

impl PartialEq for BondConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.lattice.spec == other.lattice.spec
            && self.p.to_bits() == other.p.to_bits()
            && self.seed == other.seed
            && self.bits == other.bits
    }
}

/// Open iff the 53-bit uniform drawn for the edge is below `p`. Draws are
/// taken in slot order, so equal seeds couple all `p` monotonically.
#[inline]
fn is_open_draw(u: u64, p: f64) -> bool {
    ((u >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p
}

pub fn sample_configuration(spec: BoxSpec, p: f64, seed: u64) -> Result<BondConfiguration> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} is not a probability")));
    }
    let lattice = Lattice::new(spec)?;
    let n = lattice.edge_count();
    let mut bits = vec![0u64; n.div_ceil(64)];
    let mut stream = rng::stream(seed);
    for slot in 0..n {
        if is_open_draw(stream.next_u64(), p) {
            bits[slot / 64] |= 1 << (slot % 64);
        }
    }
    Ok(BondConfiguration {
        lattice,
        p,
        seed,
        bits,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    d: usize,
    half_width: i64,
    margin: i64,
    p: f64,
    seed: u64,
    edge_count: usize,
    edge_order: String,
    bit_order: String,
}

const FORMAT_TAG: &str = "percolab-bonds/1";

impl BondConfiguration {
    /// Configuration with an explicit set of open slots (fixtures).
    pub fn from_open_slots(spec: BoxSpec, open: impl IntoIterator<Item = usize>) -> Result<Self> {
        let lattice = Lattice::new(spec)?;
        let mut bits = vec![0u64; lattice.edge_count().div_ceil(64)];
        for slot in open {
            if slot >= lattice.edge_count() {
                return Err(Error::Parameter(format!("edge slot {slot} out of range")));
            }
            bits[slot / 64] |= 1 << (slot % 64);
        }
        Ok(BondConfiguration {
            lattice,
            p: f64::NAN,
            seed: 0,
            bits,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn spec(&self) -> BoxSpec {
        self.lattice.spec
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn is_open(&self, slot: usize) -> bool {
        self.bits[slot / 64] >> (slot % 64) & 1 == 1
    }

    pub fn set_open(&mut self, slot: usize, open: bool) {
        if open {
            self.bits[slot / 64] |= 1 << (slot % 64);
        } else {
            self.bits[slot / 64] &= !(1 << (slot % 64));
        }
    }

    pub fn edge_count(&self) -> usize {
        self.lattice.edge_count()
    }

    pub fn open_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn open_fraction(&self) -> f64 {
        self.open_count() as f64 / self.edge_count() as f64
    }

    /// Neighbors of `rank` through open edges.
    pub fn open_neighbors(&self, rank: usize) -> impl Iterator<Item = usize> + '_ {
        self.lattice
            .incident(rank)
            .filter(move |&(_, slot)| self.is_open(slot))
            .map(|(nb, _)| nb)
    }

    pub fn open_degree(&self, rank: usize) -> usize {
        self.open_neighbors(rank).count()
    }

    /// True if every open edge here is open in `other` (same box).
    pub fn is_subset_of(&self, other: &BondConfiguration) -> bool {
        self.lattice.spec == other.lattice.spec
            && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Header line (JSON) followed by the raw bit array, slot `k` at bit
    /// `k % 8` of byte `k / 8`.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = Header {
            format: FORMAT_TAG.into(),
            d: self.lattice.d(),
            half_width: self.lattice.spec.half_width,
            margin: self.lattice.spec.margin,
            p: self.p,
            seed: self.seed,
            edge_count: self.edge_count(),
            edge_order: "canonical index i*V + rank(x), absent edges skipped".into(),
            bit_order: "lsb-first".into(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let nbytes = self.edge_count().div_ceil(8);
        let bytes: Vec<u8> = self
            .bits
            .iter()
            .flat_map(|word| word.to_le_bytes())
            .take(nbytes)
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from(mut r: impl BufRead) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: Header = serde_json::from_str(line.trim_end())?;
        if header.format != FORMAT_TAG {
            return Err(Error::Parameter(format!("unknown format `{}`", header.format)));
        }
        let lattice = Lattice::new(BoxSpec::new(header.d, header.half_width, header.margin)?)?;
        if lattice.edge_count() != header.edge_count {
            return Err(Error::Parameter("edge count does not match the box".into()));
        }
        let mut bytes = vec![0u8; header.edge_count.div_ceil(8)];
        r.read_exact(&mut bytes)?;
        let mut bits = vec![0u64; header.edge_count.div_ceil(64)];
        for (i, b) in bytes.iter().enumerate() {
            bits[i / 8] |= (*b as u64) << (8 * (i % 8));
        }
        Ok(BondConfiguration {
            lattice,
            p: header.p,
            seed: header.seed,
            bits,
        })
    }
}

/// `|∂°H|`: open edges with exactly one endpoint in `h`.
///
/// Every vertex of `h` must lie in the analysis region and away from the
/// outer face, so that all of its `2d` incident edges exist in the box.
pub fn open_edge_boundary(h: &[usize], config: &BondConfiguration) -> Result<usize> {
    let lat = config.lattice();
    let set: HashSet<usize> = h.iter().copied().collect();
    let mut count = 0;
    for &v in &set {
        if v >= lat.vertex_count() || !lat.in_analysis_region(v) || !lat.is_interior(v) {
            return Err(Error::Precondition(format!(
                "vertex {:?} lies in the margin band",
                if v < lat.vertex_count() { lat.coords(v) } else { vec![] }
            )));
        }
        count += config
            .open_neighbors(v)
            .filter(|nb| !set.contains(nb))
            .count();
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, l: i64) -> BoxSpec {
        BoxSpec::with_default_margin(d, l).unwrap()
    }

    #[test]
    fn extreme_probabilities() {
        let all = sample_configuration(spec(2, 3), 1.0, 5).unwrap();
        assert_eq!(all.edge_count(), 84);
        assert_eq!(all.open_count(), 84);
        assert_eq!(all.open_fraction(), 1.0);
        let none = sample_configuration(spec(2, 3), 0.0, 5).unwrap();
        assert_eq!(none.open_count(), 0);
    }

    #[test]
    fn open_fraction_within_binomial_band() {
        let c = sample_configuration(spec(2, 50), 0.5, 7).unwrap();
        let n = c.edge_count() as f64;
        assert_eq!(c.edge_count(), 2 * 101 * 100);
        let sd = (n * 0.25).sqrt();
        assert!((c.open_count() as f64 - 0.5 * n).abs() <= 4.0 * sd);
    }

    #[test]
    fn invalid_probability() {
        assert!(sample_configuration(spec(2, 3), 1.5, 0).is_err());
        assert!(sample_configuration(spec(2, 3), -0.1, 0).is_err());
    }

    #[test]
    fn deterministic_and_monotone() {
        let a = sample_configuration(spec(3, 6), 0.4, 99).unwrap();
        let b = sample_configuration(spec(3, 6), 0.4, 99).unwrap();
        assert_eq!(a, b);
        let hi = sample_configuration(spec(3, 6), 0.6, 99).unwrap();
        assert!(a.is_subset_of(&hi));
        let other = sample_configuration(spec(3, 6), 0.4, 100).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn serialization_round_trip() {
        let c = sample_configuration(spec(2, 7), 0.63, 3).unwrap();
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let back = BondConfiguration::read_from(&buf[..]).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn boundary_of_singleton_and_square() {
        let c = sample_configuration(spec(2, 10), 1.0, 0).unwrap();
        let lat = c.lattice();
        assert_eq!(open_edge_boundary(&[lat.origin()], &c).unwrap(), 4);
        for k in 1..=5i64 {
            let sq: Vec<usize> = (0..k)
                .flat_map(|x| (0..k).map(move |y| (x, y)))
                .map(|(x, y)| lat.rank(&[x, y]).unwrap())
                .collect();
            // Direct enumeration oracle: lattice edges leaving the square.
            let mut oracle = 0;
            for &v in &sq {
                for (nb, _) in lat.incident(v) {
                    if !sq.contains(&nb) {
                        oracle += 1;
                    }
                }
            }
            assert_eq!(oracle, 4 * k as usize);
            assert_eq!(open_edge_boundary(&sq, &c).unwrap(), oracle);
        }
    }

    #[test]
    fn boundary_rejects_margin_vertices() {
        let c = sample_configuration(spec(2, 10), 1.0, 0).unwrap();
        let v = c.lattice().rank(&[9, 0]).unwrap();
        assert!(matches!(open_edge_boundary(&[v], &c), Err(Error::Precondition(_))));
    }

    #[test]
    fn boundary_of_enclosed_cluster_is_zero() {
        // A 2x2 block of open edges strictly inside the region.
        let s = spec(2, 6);
        let lat = Lattice::new(s).unwrap();
        let pts: Vec<usize> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|p| lat.rank(p).unwrap())
            .collect();
        let mut slots = vec![];
        for &a in &pts {
            for &b in &pts {
                if let Some(e) = lat.edge_between(a, b) {
                    slots.push(e);
                }
            }
        }
        let c = BondConfiguration::from_open_slots(s, slots).unwrap();
        assert_eq!(open_edge_boundary(&pts, &c).unwrap(), 0);
    }

    #[test]
    fn boundary_accounting_on_small_boxes() {
        // boundary + internal + (open edges with both ends outside H) = all open.
        for seed in 0..20 {
            let c = sample_configuration(spec(2, 5), 0.5, seed).unwrap();
            let lat = c.lattice();
            let h: Vec<usize> = (0..lat.vertex_count())
                .filter(|&v| lat.linf(v) <= 2 && (v + seed as usize) % 3 != 0)
                .collect();
            let set: HashSet<usize> = h.iter().copied().collect();
            let (mut inside, mut outside, mut across) = (0, 0, 0);
            for slot in 0..c.edge_count() {
                if !c.is_open(slot) {
                    continue;
                }
                let (a, b) = lat.edge_endpoints(slot);
                match (set.contains(&a), set.contains(&b)) {
                    (true, true) => inside += 1,
                    (false, false) => outside += 1,
                    _ => across += 1,
                }
            }
            assert_eq!(open_edge_boundary(&h, &c).unwrap(), across);
            assert_eq!(inside + outside + across, c.open_count());
        }
    }
}
