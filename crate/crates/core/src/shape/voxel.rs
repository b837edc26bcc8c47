//! Bit masks over the analysis region, read as unions of unit cubes centred
//! at lattice points.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::lattice::{for_each_point, Lattice};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelSet {
    d: usize,
    /// The mask covers `[-half_width, half_width]^d`.
    half_width: i64,
    side: usize,
    words: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RleHeader {
    d: usize,
    half_width: i64,
    count: usize,
    /// Number of little-endian `u32` run lengths following the header
    /// line, alternating absent/present and starting with absent.
    runs: usize,
}

impl VoxelSet {
    pub fn empty(d: usize, half_width: i64) -> Result<Self> {
        if d == 0 || half_width < 0 {
            return Err(Error::Parameter(format!("voxel set with d = {d}, half width {half_width}")));
        }
        let side = (2 * half_width + 1) as usize;
        let len = side
            .checked_pow(d as u32)
            .ok_or_else(|| Error::Capacity("voxel mask too large".into()))?;
        Ok(VoxelSet {
            d,
            half_width,
            side,
            words: vec![0; len.div_ceil(64)],
        })
    }

    /// Mask over the lattice's analysis region.
    pub fn for_region(lattice: &Lattice) -> Result<Self> {
        VoxelSet::empty(lattice.d(), lattice.spec.analysis_half_width())
    }

    /// Mask of the given box ranks; ranks outside the region are an error.
    pub fn from_ranks(lattice: &Lattice, ranks: &[usize]) -> Result<Self> {
        let mut v = VoxelSet::for_region(lattice)?;
        for &r in ranks {
            let x = lattice.coords(r);
            if !v.insert(&x) {
                return Err(Error::Precondition(format!("vertex {x:?} lies outside the analysis region")));
            }
        }
        Ok(v)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    fn index(&self, x: &[i64]) -> Option<usize> {
        let mut k = 0usize;
        for &c in x {
            if c.abs() > self.half_width {
                return None;
            }
            k = k * self.side + (c + self.half_width) as usize;
        }
        Some(k)
    }

    fn coords_of(&self, mut k: usize) -> Vec<i64> {
        let mut x = vec![0i64; self.d];
        for i in (0..self.d).rev() {
            x[i] = (k % self.side) as i64 - self.half_width;
            k /= self.side;
        }
        x
    }

    fn bit(&self, k: usize) -> bool {
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.index(x).is_some_and(|k| self.bit(k))
    }

    /// Sets the voxel; false if it lies outside the mask.
    pub fn insert(&mut self, x: &[i64]) -> bool {
        match self.index(x) {
            Some(k) => {
                self.words[k / 64] |= 1 << (k % 64);
                true
            }
            None => false,
        }
    }

    pub fn remove(&mut self, x: &[i64]) {
        if let Some(k) = self.index(x) {
            self.words[k / 64] &= !(1 << (k % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn check_shape(&self, other: &VoxelSet) -> Result<()> {
        if self.d != other.d || self.half_width != other.half_width {
            return Err(Error::Parameter("voxel masks of different shapes".into()));
        }
        Ok(())
    }

    pub fn intersection(&self, other: &VoxelSet) -> Result<VoxelSet> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        Ok(out)
    }

    pub fn union(&self, other: &VoxelSet) -> Result<VoxelSet> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(out)
    }

    pub fn symmetric_difference_count(&self, other: &VoxelSet) -> Result<usize> {
        self.check_shape(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Present voxels in index order (lexicographic in the coordinates).
    pub fn points(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.count());
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out.push(self.coords_of(w * 64 + b));
                bits &= bits - 1;
            }
        }
        out
    }

    /// Box ranks of the present voxels, sorted.
    pub fn to_ranks(&self, lattice: &Lattice) -> Result<Vec<usize>> {
        let mut out = self
            .points()
            .iter()
            .map(|x| {
                lattice
                    .rank(x)
                    .ok_or_else(|| Error::Precondition(format!("voxel {x:?} outside the box")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        Ok(out)
    }

    /// Mask shifted by the integer vector `t`; voxels leaving the mask are
    /// dropped.
    pub fn shifted(&self, t: &[i64]) -> VoxelSet {
        let mut out = VoxelSet {
            words: vec![0; self.words.len()],
            ..self.clone()
        };
        for x in self.points() {
            let y: Vec<i64> = x.iter().zip(t).map(|(a, b)| a + b).collect();
            out.insert(&y);
        }
        out
    }

    /// Number of unit faces between present voxels and absent ones
    /// (voxels outside the mask count as absent).
    pub fn perimeter(&self) -> usize {
        let mut faces = 0;
        for x in self.points() {
            let mut y = x.clone();
            for i in 0..self.d {
                for s in [-1, 1] {
                    y[i] = x[i] + s;
                    if !self.contains(&y) {
                        faces += 1;
                    }
                }
                y[i] = x[i];
            }
        }
        faces
    }

    /// Sum of coordinates of the present voxels.
    pub fn coordinate_sums(&self) -> Vec<i128> {
        let mut s = vec![0i128; self.d];
        for x in self.points() {
            for i in 0..self.d {
                s[i] += x[i] as i128;
            }
        }
        s
    }

    fn runs(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let (mut state, mut len) = (false, 0u32);
        for k in 0..self.len() {
            let b = self.bit(k);
            if b != state {
                runs.push(len);
                state = b;
                len = 0;
            }
            len += 1;
        }
        runs.push(len);
        runs
    }

    /// A JSON header line, then the run lengths as little-endian `u32`.
    pub fn write_rle(&self, mut w: impl Write) -> Result<()> {
        let runs = self.runs();
        let header = RleHeader {
            d: self.d,
            half_width: self.half_width,
            count: self.count(),
            runs: runs.len(),
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for r in runs {
            w.write_all(&r.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_rle(mut r: impl Read) -> Result<VoxelSet> {
        let mut line = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)?;
            if byte[0] == b'\n' {
                break;
            }
            line.push(byte[0]);
        }
        let header: RleHeader = serde_json::from_slice(&line)?;
        let mut v = VoxelSet::empty(header.d, header.half_width)?;
        let (mut k, mut state) = (0usize, false);
        let mut buf = [0u8; 4];
        for _ in 0..header.runs {
            r.read_exact(&mut buf)?;
            let len = u32::from_le_bytes(buf) as usize;
            if k + len > v.len() {
                return Err(Error::Parameter("run lengths overflow the mask".into()));
            }
            if state {
                for j in k..k + len {
                    v.words[j / 64] |= 1 << (j % 64);
                }
            }
            k += len;
            state = !state;
        }
        if k != v.len() || v.count() != header.count {
            return Err(Error::Parameter("run lengths disagree with the header".into()));
        }
        Ok(v)
    }

    /// SVG of two planar masks: `a` in blue, `b` in red, overlap purple.
    pub fn overlay_svg(a: &VoxelSet, b: &VoxelSet, cell: f64) -> Result<String> {
        a.check_shape(b)?;
        if a.d != 2 {
            return Err(Error::Geometry("overlays are drawn for d = 2 only".into()));
        }
        let side = a.side as f64 * cell;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{side}\" viewBox=\"0 0 {side} {side}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        let h = a.half_width;
        for_each_point(&[-h, -h], &[h, h], |x| {
            let color = match (a.contains(x), b.contains(x)) {
                (true, true) => "#7b3f9e",
                (true, false) => "#3a6fd8",
                (false, true) => "#e0584b",
                (false, false) => return,
            };
            // y grows upward in the picture
            let px = (x[0] + h) as f64 * cell;
            let py = (h - x[1]) as f64 * cell;
            s.push_str(&format!(
                "<rect x=\"{px}\" y=\"{py}\" width=\"{cell}\" height=\"{cell}\" fill=\"{color}\"/>\n"
            ));
        });
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Voxel mask of `H` and its face perimeter, raw and divided by `n^(d-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSet {
    pub voxels: VoxelSet,
    pub perimeter: usize,
    pub scaled_perimeter: f64,
}

pub fn continuous_set_and_perimeter(lattice: &Lattice, h: &[usize], n: usize) -> Result<ContinuousSet> {
    let voxels = VoxelSet::from_ranks(lattice, h)?;
    let perimeter = voxels.perimeter();
    Ok(ContinuousSet {
        scaled_perimeter: perimeter as f64 / (n as f64).powi(lattice.d() as i32 - 1),
        voxels,
        perimeter,
    })
}
