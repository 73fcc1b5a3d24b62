//! Jordan decomposition of a projector pair into jointly invariant blocks.
//!
//! Blocks carrying a range vector `v` of Π1 come from the spectrum of Π1Π2Π1
//! restricted to range(Π1), sorted by descending overlap. Blocks where only
//! Π2 acts (range(Π2) ∩ ker(Π1)) follow with `v = None` and `p = 0`. The joint
//! kernel is only counted.

use crate::error::{Error, Result};
use crate::hilbert::{hermitian_eigen, Matrix, Projector, Vector, C64};

pub const DEFAULT_DIM_CAP: usize = 256;
/// Overlaps this close to 0 or 1 are treated as exact.
pub const SNAP_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct JordanBlock {
    pub dim: usize,
    pub p: f64,
    pub v: Option<Vector>,
    pub w: Option<Vector>,
}

impl JordanBlock {
    /// Orthogonal projector onto the block span.
    pub fn projector(&self) -> Matrix {
        let v = self.v.as_ref();
        let w = self.w.as_ref();
        let d = v.or(w).map_or(0, |x| x.len());
        let mut m = Matrix::zeros(d, d);
        if let Some(v) = v {
            m += v * v.adjoint();
        }
        if self.dim == 2 {
            let (v, w) = (v.expect("2-dim block has v"), w.expect("2-dim block has w"));
            let mut u = w - v * v.dotc(w);
            let n = u.norm();
            u /= C64::new(n, 0.0);
            m += &u * u.adjoint();
        } else if v.is_none() {
            let w = w.expect("block carries a vector");
            m += w * w.adjoint();
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct JordanDecomposition {
    pub blocks: Vec<JordanBlock>,
    pub dimension: usize,
    pub kernel_dim: usize,
}

impl JordanDecomposition {
    pub fn pi1_reconstruction(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dimension, self.dimension);
        for v in self.blocks.iter().filter_map(|b| b.v.as_ref()) {
            m += v * v.adjoint();
        }
        m
    }

    pub fn pi2_reconstruction(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dimension, self.dimension);
        for w in self.blocks.iter().filter_map(|b| b.w.as_ref()) {
            m += w * w.adjoint();
        }
        m
    }

    /// Overlaps of the blocks carrying a `v`, in block order.
    pub fn v_overlaps(&self) -> Vec<f64> {
        self.blocks.iter().filter(|b| b.v.is_some()).map(|b| b.p).collect()
    }
}

pub fn jordan_decompose(p1: &Projector, p2: &Projector) -> Result<JordanDecomposition> {
    jordan_decompose_capped(p1, p2, DEFAULT_DIM_CAP)
}

pub fn jordan_decompose_capped(p1: &Projector, p2: &Projector, cap: usize) -> Result<JordanDecomposition> {
    let d = p1.dim();
    if p2.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: p2.dim() });
    }
    if d > cap {
        return Err(Error::InvalidArgument(format!("dimension {d} exceeds cap {cap}")));
    }
    let range1 = range_basis(p1.matrix())?;
    let r1 = range1.ncols();
    let mut blocks = Vec::new();
    let mut found_w: Vec<Vector> = Vec::new();

    if r1 > 0 {
        let restricted = range1.adjoint() * p2.matrix() * &range1;
        let (vals, vecs) = hermitian_eigen(&restricted)?;
        for (i, &raw) in vals.iter().enumerate() {
            let v = &range1 * vecs.column(i);
            let p = snap(raw.clamp(0.0, 1.0));
            if p == 1.0 {
                found_w.push(v.clone());
                blocks.push(JordanBlock { dim: 1, p, w: Some(v.clone()), v: Some(v) });
            } else if p == 0.0 {
                blocks.push(JordanBlock { dim: 1, p, v: Some(v), w: None });
            } else {
                let pw = p2.matrix() * &v;
                let n = pw.norm();
                if n == 0.0 {
                    return Err(Error::NumericFailure("vanishing Π2 v for nonzero overlap".into()));
                }
                let w = pw / C64::new(n, 0.0);
                found_w.push(w.clone());
                blocks.push(JordanBlock { dim: 2, p, v: Some(v), w: Some(w) });
            }
        }
    }
    // Stable order: descending p, ties keep eigen order.
    blocks.sort_by(|a, b| b.p.total_cmp(&a.p));

    let mut rest = p2.matrix().clone();
    for w in &found_w {
        rest -= w * w.adjoint();
    }
    let leftover = range_basis(&rest)?;
    for j in 0..leftover.ncols() {
        blocks.push(JordanBlock { dim: 1, p: 0.0, v: None, w: Some(leftover.column(j).into_owned()) });
    }

    let used: usize = blocks.iter().map(|b| b.dim).sum();
    if used > d {
        return Err(Error::NumericFailure(format!("blocks span {used} > ambient {d}")));
    }
    Ok(JordanDecomposition { blocks, dimension: d, kernel_dim: d - used })
}

pub fn max_overlap(decomp: &JordanDecomposition) -> Result<(f64, Vector)> {
    let mut best: Option<&JordanBlock> = None;
    for b in decomp.blocks.iter().filter(|b| b.v.is_some()) {
        if best.map_or(true, |x| b.p > x.p) {
            best = Some(b);
        }
    }
    let b = best.ok_or(Error::EmptySpectrum)?;
    Ok((b.p, b.v.clone().expect("filtered on v")))
}

fn snap(p: f64) -> f64 {
    if p < SNAP_TOL {
        0.0
    } else if p > 1.0 - SNAP_TOL {
        1.0
    } else {
        p
    }
}

/// Orthonormal columns spanning the eigenvalue-≈1 space of a projector-like matrix.
fn range_basis(m: &Matrix) -> Result<Matrix> {
    let (vals, vecs) = hermitian_eigen(m)?;
    let r = vals.iter().take_while(|&&v| v > 0.5).count();
    Ok(vecs.columns(0, r).into_owned())
}
