//! Independent oracles for the winding number and the Chern number.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{laughlin_value, sup_norm, Site};
use crate::linalg::{eigh, singular_values, CMat};
use crate::operators::{polar_part, qwz_symbol, ssh_symbol, ChiralBlock, LocalOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    KspaceWinding,
    KspaceChern,
    RealspaceWinding,
    ChernMarker,
    KuboChern,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::KspaceWinding => "kspace-winding",
            Method::KspaceChern => "kspace-chern",
            Method::RealspaceWinding => "realspace-winding",
            Method::ChernMarker => "chern-marker",
            Method::KuboChern => "kubo-chern",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantValue {
    pub value: i64,
    pub method: Method,
    pub raw: f64,
    pub residual: f64,
}

impl InvariantValue {
    pub fn from_raw(raw: f64, method: Method) -> Self {
        let value = raw.round();
        Self {
            value: value as i64,
            method,
            raw,
            residual: (raw - value).abs(),
        }
    }

    /// Residual below the acceptance threshold of 0.1.
    pub fn is_sharp(&self) -> bool {
        self.residual < 0.1
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

fn winding_sum<F: Fn(f64) -> CMat>(symbol: &F, nk: usize) -> Result<f64> {
    let mut prev: Option<c64> = None;
    let mut total = 0.0;
    let mut first = None;
    for i in 0..nk {
        let k = 2.0 * PI * i as f64 / nk as f64;
        let s = symbol(k);
        let sv = singular_values(s.as_ref())?;
        let smallest = sv.last().copied().unwrap_or(0.0);
        if !(smallest > 1e-8) {
            return Err(Error::GapClosedOnGrid(smallest));
        }
        let det = s.as_ref().determinant();
        if let Some(p) = prev {
            total += wrap_angle(det.arg() - p.arg());
        } else {
            first = Some(det);
        }
        prev = Some(det);
    }
    if let (Some(p), Some(f)) = (prev, first) {
        total += wrap_angle(f.arg() - p.arg());
    }
    Ok(total / (2.0 * PI))
}

/// `(1 / 2 pi i) ∮ d log det S(k)` by phase unwrapping on `nk` points.
///
/// The pre-rounding value is taken from the `nk` grid; the `2 nk` grid must
/// agree within `1e-6`.
pub fn kspace_winding<F: Fn(f64) -> CMat>(symbol: F, nk: usize) -> Result<InvariantValue> {
    if nk < 3 {
        return Err(Error::InvalidParameter(format!("nk = {nk} too small")));
    }
    let a = winding_sum(&symbol, nk)?;
    let b = winding_sum(&symbol, 2 * nk)?;
    if (a - b).abs() >= 1e-6 {
        return Err(Error::GapClosedOnGrid((a - b).abs()));
    }
    Ok(InvariantValue::from_raw(a, Method::KspaceWinding))
}

pub fn ssh_kspace_winding(v: f64, w: f64, nk: usize) -> Result<InvariantValue> {
    kspace_winding(|k| Mat::from_fn(1, 1, |_, _| ssh_symbol(v, w, k)), nk)
}

fn occupied_frame(h: &CMat) -> Result<(CMat, f64)> {
    let (vals, vecs) = eigh(h.as_ref())?;
    let occ: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < 0.0).collect();
    let gap = vals.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    Ok((Mat::from_fn(vecs.nrows(), occ.len(), |i, j| vecs[(i, occ[j])]), gap))
}

fn link(a: &CMat, b: &CMat) -> c64 {
    let m = a.adjoint() * b;
    let d = m.as_ref().determinant();
    d / d.norm()
}

/// Lattice Berry-curvature sum over the negative-energy bands,
/// `-(1 / 2 pi) Σ arg(U1(k) U2(k + e1) / (U1(k + e2) U2(k)))`.
///
/// The orientation makes the result equal `index(P L P + P^⊥)` for the
/// Laughlin phase `L = exp(i arg(X1 + i X2))`.
pub fn kspace_chern<F: Fn(f64, f64) -> CMat>(symbol: F, nk: usize) -> Result<InvariantValue> {
    if nk < 2 {
        return Err(Error::InvalidParameter(format!("nk = {nk} too small")));
    }
    let mut frames = Vec::with_capacity(nk * nk);
    let mut bands = None;
    for i in 0..nk {
        for j in 0..nk {
            let k1 = 2.0 * PI * i as f64 / nk as f64;
            let k2 = 2.0 * PI * j as f64 / nk as f64;
            let (f, gap) = occupied_frame(&symbol(k1, k2))?;
            if !(gap > 1e-8) {
                return Err(Error::GapClosedOnGrid(gap));
            }
            if *bands.get_or_insert(f.ncols()) != f.ncols() {
                return Err(Error::GapClosedOnGrid(0.0));
            }
            frames.push(f);
        }
    }
    let at = |i: usize, j: usize| &frames[(i % nk) * nk + (j % nk)];
    let mut total = 0.0;
    for i in 0..nk {
        for j in 0..nk {
            let u1 = link(at(i, j), at(i + 1, j));
            let u2 = link(at(i + 1, j), at(i + 1, j + 1));
            let u3 = link(at(i, j + 1), at(i + 1, j + 1));
            let u4 = link(at(i, j), at(i, j + 1));
            total += (u1 * u2 / (u3 * u4)).arg();
        }
    }
    Ok(InvariantValue::from_raw(-total / (2.0 * PI), Method::KspaceChern))
}

pub fn qwz_kspace_chern(m: f64, nk: usize) -> Result<InvariantValue> {
    kspace_chern(
        |k1, k2| {
            let h = qwz_symbol(m, k1, k2);
            Mat::from_fn(2, 2, |a, b| h[a][b])
        },
        nk,
    )
}

fn in_window(s: Site, radius: i64) -> bool {
    sup_norm(s) <= radius
}

fn window_radius(ell: usize, margin: usize) -> Result<i64> {
    if margin >= ell {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} must be below the box radius {ell}"
        )));
    }
    Ok((ell - margin) as i64)
}

/// `-tr_window(T^{-1} [Λ, T])` for `T = S` (`flatten = false`) or `T = pol(S)`.
fn winding_trace(block: &ChiralBlock, margin: usize, flatten: bool) -> Result<f64> {
    let s = block.s();
    let t = if flatten {
        polar_part(s)?
    } else {
        let sv = singular_values(s.as_ref())?;
        let (norm, smallest) = (sv[0], sv[sv.len() - 1]);
        if !(smallest > 1e-12 * norm) {
            return Err(Error::SingularInput { smallest, norm });
        }
        s.clone()
    };
    let inv = if flatten {
        t.adjoint().to_owned()
    } else {
        crate::linalg::inverse(t.as_ref())
    };
    let sites = block.row_sites();
    let radius = window_radius(block.lattice_box().ell(), margin)?;
    let lam: Vec<f64> = sites.iter().map(|s| if s[0] >= 0 { 1.0 } else { 0.0 }).collect();
    // (T^{-1} Λ T)_ii - Λ_ii.
    let mut total = c64::new(0.0, 0.0);
    for (i, &site) in sites.iter().enumerate() {
        if !in_window(site, radius) {
            continue;
        }
        let mut acc = c64::new(0.0, 0.0);
        for (k, &l) in lam.iter().enumerate() {
            if l != 0.0 {
                acc += inv[(i, k)] * t[(k, i)];
            }
        }
        total += acc - c64::new(lam[i], 0.0);
    }
    Ok(-total.re)
}

/// `-tr_window(U* [Λ, U])` with `U = pol(S)` over sites at depth `>= margin`.
pub fn realspace_winding(block: &ChiralBlock, margin: usize) -> Result<InvariantValue> {
    Ok(InvariantValue::from_raw(
        winding_trace(block, margin, true)?,
        Method::RealspaceWinding,
    ))
}

/// The same trace with `S` in place of its polar part.
pub fn realspace_winding_unflattened(block: &ChiralBlock, margin: usize) -> Result<InvariantValue> {
    Ok(InvariantValue::from_raw(
        winding_trace(block, margin, false)?,
        Method::RealspaceWinding,
    ))
}

/// Spectral projection onto the negative eigenvalues; errors if `H` is not gapped.
pub fn fermi_projection(h: &CMat) -> Result<CMat> {
    let (f, gap) = occupied_frame(h)?;
    if !(gap > 1e-8) {
        return Err(Error::GaplessModel(gap));
    }
    Ok(&f * f.adjoint())
}

/// `2 pi i tr_window([P Λ2 P, P Λ1 P])` over sites at depth `>= margin`.
///
/// Ordered so that the value equals `index(P L P + P^⊥)`.
pub fn chern_marker(h: &LocalOperator, margin: usize) -> Result<InvariantValue> {
    let lbox = h.lattice_box();
    if lbox.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            got: lbox.dim(),
        });
    }
    let radius = window_radius(lbox.ell(), margin)?;
    let n = h.internal_dim();
    let p = fermi_projection(h.matrix())?;
    let dim = p.nrows();
    let site_of = |i: usize| lbox.site(i / n);
    let mask = |axis: usize| -> Vec<bool> { (0..dim).map(|i| site_of(i)[axis] >= 0).collect() };
    let (l1, l2) = (mask(0), mask(1));
    // P Λ P with Λ diagonal: scale columns of P by Λ, then multiply by P.
    let pl = |l: &[bool]| -> CMat {
        let scaled = Mat::from_fn(dim, dim, |i, j| if l[j] { p[(i, j)] } else { c64::new(0.0, 0.0) });
        &scaled * &p
    };
    let a = pl(&l1);
    let b = pl(&l2);
    let mut total = c64::new(0.0, 0.0);
    for i in 0..dim {
        if !in_window(site_of(i), radius) {
            continue;
        }
        for k in 0..dim {
            total += b[(i, k)] * a[(k, i)] - a[(i, k)] * b[(k, i)];
        }
    }
    let value = c64::new(0.0, 2.0 * PI) * total;
    Ok(InvariantValue::from_raw(value.re, Method::ChernMarker))
}

/// `tr_window((P - L* P L)^3)`, a trace formula for `index(P L P + P^⊥)`.
pub fn laughlin_index_trace(h: &LocalOperator, margin: usize) -> Result<f64> {
    let lbox = h.lattice_box();
    if lbox.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            got: lbox.dim(),
        });
    }
    let radius = window_radius(lbox.ell(), margin)?;
    let n = h.internal_dim();
    let p = fermi_projection(h.matrix())?;
    let dim = p.nrows();
    let l: Vec<c64> = (0..dim).map(|i| laughlin_value(lbox.site(i / n))).collect();
    let d = Mat::from_fn(dim, dim, |i, j| p[(i, j)] - l[i].conj() * p[(i, j)] * l[j]);
    let d2 = &d * &d;
    let mut total = c64::new(0.0, 0.0);
    for i in 0..dim {
        if !in_window(lbox.site(i / n), radius) {
            continue;
        }
        for k in 0..dim {
            total += d2[(i, k)] * d[(k, i)];
        }
    }
    Ok(total.re)
}

/// Default window margin: a quarter of the box radius.
pub fn default_margin(ell: usize) -> usize {
    ell / 4
}
