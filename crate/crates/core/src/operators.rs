//! Block operators on `box ⊗ C^N`, model builders and locality budgets.
//!
//! Dense index of `(site, a)` is `site * N + a`. For chiral operators the
//! internal indices `a < N/2` span the positive grading.

use std::io::{BufRead, Write};

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Site};
use crate::linalg::{hermitian_defect, re, singular_values, CMat, ONE, ZERO};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Dirichlet truncation: bonds leaving the box are dropped.
    #[default]
    Open,
    /// Bonds leaving the box wrap around (torus of side `2 ell + 1`).
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    lbox: LatticeBox,
    internal_dim: usize,
    matrix: CMat,
    boundary: Boundary,
    hermitian: bool,
    chiral: bool,
}

fn max_entry(m: &CMat) -> f64 {
    let mut w = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            w = w.max(m[(i, j)].norm());
        }
    }
    w
}

impl LocalOperator {
    pub fn new(lbox: LatticeBox, internal_dim: usize, matrix: CMat) -> Result<Self> {
        Self::with_boundary(lbox, internal_dim, matrix, Boundary::Open)
    }

    pub fn with_boundary(
        lbox: LatticeBox,
        internal_dim: usize,
        matrix: CMat,
        boundary: Boundary,
    ) -> Result<Self> {
        let n = lbox.len() * internal_dim;
        if internal_dim == 0 || matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, box with N = {} needs {n}x{n}",
                matrix.nrows(),
                matrix.ncols(),
                internal_dim
            )));
        }
        let scale = max_entry(&matrix);
        let hermitian = hermitian_defect(matrix.as_ref()) <= 1e-13 * scale.max(f64::MIN_POSITIVE);
        let chiral = internal_dim % 2 == 0 && grading_defect(&matrix, internal_dim) <= 1e-13 * scale;
        Ok(Self {
            lbox,
            internal_dim,
            matrix,
            boundary,
            hermitian,
            chiral,
        })
    }

    pub fn diagonal(lbox: LatticeBox, internal_dim: usize, per_site: &[c64]) -> Self {
        assert_eq!(per_site.len(), lbox.len());
        let n = lbox.len() * internal_dim;
        let mut m = Mat::zeros(n, n);
        for (s, &v) in per_site.iter().enumerate() {
            for a in 0..internal_dim {
                m[(s * internal_dim + a, s * internal_dim + a)] = v;
            }
        }
        Self::new(lbox, internal_dim, m).expect("sizes agree by construction")
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.lbox
    }

    pub fn internal_dim(&self) -> usize {
        self.internal_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_chiral(&self) -> bool {
        self.chiral
    }

    /// The `N x N` block `H_{x,y}` between site indices `x` and `y`.
    pub fn block(&self, x: usize, y: usize) -> CMat {
        let n = self.internal_dim;
        self.matrix
            .as_ref()
            .submatrix(x * n, y * n, n, n)
            .to_owned()
    }

    /// Displacement `x - y`, taken as the shortest torus vector for periodic operators.
    pub fn displacement(&self, x: Site, y: Site) -> Site {
        let d = [x[0] - y[0], x[1] - y[1]];
        match self.boundary {
            Boundary::Open => d,
            Boundary::Periodic => self.lbox.wrap(d),
        }
    }

    /// The grading `1 ⊕ -1` on each site.
    pub fn grading(&self) -> Result<CMat> {
        if self.internal_dim % 2 != 0 {
            return Err(Error::NotChiral);
        }
        let half = self.internal_dim / 2;
        let n = self.dim();
        Ok(Mat::from_fn(n, n, |i, j| {
            if i != j {
                ZERO
            } else if i % self.internal_dim < half {
                ONE
            } else {
                -ONE
            }
        }))
    }
}

fn grading_defect(m: &CMat, internal_dim: usize) -> f64 {
    let half = internal_dim / 2;
    let mut w = 0.0f64;
    for j in 0..m.ncols() {
        let gj = j % internal_dim < half;
        for i in 0..m.nrows() {
            if (i % internal_dim < half) == gj {
                w = w.max(m[(i, j)].norm());
            }
        }
    }
    w
}

/// Dense indices of the positive and negative grading.
pub fn grading_indices(sites: usize, internal_dim: usize) -> (Vec<usize>, Vec<usize>) {
    let half = internal_dim / 2;
    let mut plus = Vec::with_capacity(sites * half);
    let mut minus = Vec::with_capacity(sites * half);
    for s in 0..sites {
        for a in 0..half {
            plus.push(s * internal_dim + a);
            minus.push(s * internal_dim + half + a);
        }
    }
    (plus, minus)
}

pub(crate) fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// The block `S : H+ -> H-` of a chiral Hamiltonian `[[0, S*], [S, 0]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiralBlock {
    s: CMat,
    lbox: LatticeBox,
    internal_dim: usize,
    boundary: Boundary,
}

impl ChiralBlock {
    pub fn from_operator(op: &LocalOperator) -> Result<Self> {
        if !op.is_chiral() || !op.is_hermitian() {
            return Err(Error::NotChiral);
        }
        let (plus, minus) = grading_indices(op.lbox.len(), op.internal_dim);
        Ok(Self {
            s: select(&op.matrix, &minus, &plus),
            lbox: op.lbox.clone(),
            internal_dim: op.internal_dim,
            boundary: op.boundary,
        })
    }

    /// Wraps a raw block; rows and columns are `(site, a)` with `a < N/2`.
    pub fn from_matrix(lbox: LatticeBox, internal_dim: usize, s: CMat) -> Result<Self> {
        let m = lbox.len() * internal_dim / 2;
        if internal_dim % 2 != 0 || s.nrows() != m || s.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "chiral block must be {m}x{m}"
            )));
        }
        Ok(Self {
            s,
            lbox,
            internal_dim,
            boundary: Boundary::Open,
        })
    }

    pub fn with_boundary(self, boundary: Boundary) -> Self {
        Self { boundary, ..self }
    }

    pub fn s(&self) -> &CMat {
        &self.s
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.lbox
    }

    pub fn internal_dim(&self) -> usize {
        self.internal_dim
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Site of each row (equivalently column) of `S`.
    pub fn row_sites(&self) -> Vec<Site> {
        let half = self.internal_dim / 2;
        self.lbox
            .sites()
            .iter()
            .flat_map(|&s| std::iter::repeat(s).take(half))
            .collect()
    }

    pub fn reassemble(&self) -> LocalOperator {
        let (plus, minus) = grading_indices(self.lbox.len(), self.internal_dim);
        let n = self.lbox.len() * self.internal_dim;
        let mut m = Mat::zeros(n, n);
        for (j, &pj) in plus.iter().enumerate() {
            for (i, &mi) in minus.iter().enumerate() {
                let v = self.s[(i, j)];
                m[(mi, pj)] = v;
                m[(pj, mi)] = v.conj();
            }
        }
        LocalOperator::with_boundary(self.lbox.clone(), self.internal_dim, m, self.boundary)
            .expect("sizes agree by construction")
    }
}

/// Exponential locality constants `|H_xy| <= C exp(-mu |x - y|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityBudget {
    pub c: f64,
    pub mu: f64,
    pub d: f64,
}

impl LocalityBudget {
    pub fn new(c: f64, mu: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C = {c} must be positive")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu = {mu} must be positive")));
        }
        Ok(Self {
            c,
            mu,
            d: c / (mu.cosh() - 1.0),
        })
    }
}

/// Smallest `C` with `|H_xy| <= C exp(-mu |x - y|)` over the box (Euclidean distance).
pub fn estimate_locality(op: &LocalOperator, mu: f64) -> Result<LocalityBudget> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be positive")));
    }
    let sites = op.lbox.sites();
    let n = op.internal_dim;
    let mut c = 0.0f64;
    for (x, &sx) in sites.iter().enumerate() {
        for (y, &sy) in sites.iter().enumerate() {
            let blk = op.matrix.as_ref().submatrix(x * n, y * n, n, n);
            let nonzero = (0..n).any(|j| (0..n).any(|i| blk[(i, j)] != ZERO));
            if !nonzero {
                continue;
            }
            let norm = singular_values(blk)?[0];
            let r = crate::lattice::euclid(op.displacement(sx, sy));
            c = c.max(norm * (mu * r).exp());
        }
    }
    // An all-zero operator satisfies every budget; keep C positive.
    LocalityBudget::new(c.max(f64::MIN_POSITIVE), mu)
}

/// Result of cutting an operator along `inner ⊂ op.box`.
#[derive(Clone, Debug)]
pub struct Compression {
    pub inner: LocalOperator,
    /// `J_c* M J_c` on the complement, in the parent's index order.
    pub outer: CMat,
    /// `J* M J_c`.
    pub coupling: CMat,
    pub inner_indices: Vec<usize>,
    pub outer_indices: Vec<usize>,
}

impl Compression {
    /// `M_s = inner ⊕ outer + s (coupling + coupling^*)` in the parent ordering.
    ///
    /// The lower-left block is the parent's own block, so `s = 1` is bit-exact
    /// also for non-Hermitian parents.
    pub fn reassemble(&self, s: f64, lower: &CMat) -> CMat {
        let n = self.inner_indices.len() + self.outer_indices.len();
        let mut m = Mat::zeros(n, n);
        let ii = &self.inner_indices;
        let oo = &self.outer_indices;
        for (j, &pj) in ii.iter().enumerate() {
            for (i, &pi) in ii.iter().enumerate() {
                m[(pi, pj)] = self.inner.matrix[(i, j)];
            }
        }
        for (j, &pj) in oo.iter().enumerate() {
            for (i, &pi) in oo.iter().enumerate() {
                m[(pi, pj)] = self.outer[(i, j)];
            }
        }
        for (j, &pj) in oo.iter().enumerate() {
            for (i, &pi) in ii.iter().enumerate() {
                m[(pi, pj)] = self.coupling[(i, j)] * s;
                m[(pj, pi)] = lower[(j, i)] * s;
            }
        }
        m
    }

    /// The parent's `J_c* M J` block.
    pub fn lower_coupling(parent: &LocalOperator, c: &Compression) -> CMat {
        select(&parent.matrix, &c.outer_indices, &c.inner_indices)
    }

    /// Hermitian interpolation `M_s`, using `coupling^*` for the lower block.
    pub fn interpolate(&self, s: f64) -> CMat {
        let lower = self.coupling.adjoint().to_owned();
        self.reassemble(s, &lower)
    }
}

pub fn compress(op: &LocalOperator, inner: &LatticeBox) -> Result<Compression> {
    let outer_box = &op.lbox;
    if inner.dim() != outer_box.dim() || inner.ell() > outer_box.ell() {
        return Err(Error::BoxNotContained {
            inner: inner.ell(),
            outer: outer_box.ell(),
        });
    }
    let n = op.internal_dim;
    let mut inner_indices = Vec::with_capacity(inner.len() * n);
    for &s in inner.sites() {
        let k = outer_box.index_of(s).expect("inner box is contained");
        inner_indices.extend((0..n).map(|a| k * n + a));
    }
    let mut outer_indices = Vec::new();
    for (k, &s) in outer_box.sites().iter().enumerate() {
        if !inner.contains(s) {
            outer_indices.extend((0..n).map(|a| k * n + a));
        }
    }
    let inner_op = LocalOperator::new(
        inner.clone(),
        n,
        select(&op.matrix, &inner_indices, &inner_indices),
    )?;
    Ok(Compression {
        inner: inner_op,
        outer: select(&op.matrix, &outer_indices, &outer_indices),
        coupling: select(&op.matrix, &inner_indices, &outer_indices),
        inner_indices,
        outer_indices,
    })
}

/// Unitary factor `U` of `M = U |M|`.
pub fn polar_part(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("polar part needs a square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let svd = m.svd().map_err(|_| Error::Decomposition)?;
    let s = svd.S().column_vector();
    let norm = s[0].re;
    let smallest = s[s.nrows() - 1].re;
    if !(smallest > 1e-12 * norm) {
        return Err(Error::SingularInput { smallest, norm });
    }
    Ok(svd.U() * svd.V().adjoint())
}

/// Hopping parameters of the SSH chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SshParams {
    pub v: f64,
    pub w: f64,
    pub disorder: f64,
    pub seed: u64,
}

impl SshParams {
    pub fn clean(v: f64, w: f64) -> Self {
        Self {
            v,
            w,
            disorder: 0.0,
            seed: 0,
        }
    }

    /// `(1 + disorder * u)` with `u` uniform on `[-1, 1]`, fixed per bond.
    ///
    /// Each bond has its own stream, so a bond's value does not depend on the box.
    fn factor(&self, x: i64, kind: u64) -> f64 {
        if self.disorder == 0.0 {
            return 1.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((x as u64) << 1) | kind);
        let u: f64 = rng.random_range(-1.0..=1.0);
        1.0 + self.disorder * u
    }

    pub fn intra(&self, x: i64) -> f64 {
        self.v * self.factor(x, 0)
    }

    /// Bond between cell `x` and cell `x + 1`.
    pub fn inter(&self, x: i64) -> f64 {
        self.w * self.factor(x, 1)
    }
}

/// Bloch symbol `S(k) = v + w e^{ik}` of the clean chain.
pub fn ssh_symbol(v: f64, w: f64, k: f64) -> c64 {
    re(v) + c64::new(k.cos(), k.sin()) * w
}

/// SSH chain with `(S psi)_x = v_x psi_x + w_x psi_{x+1}` and `N = 2`.
pub fn build_ssh(lbox: &LatticeBox, v: f64, w: f64, disorder: f64, seed: u64) -> Result<LocalOperator> {
    build_ssh_with(
        lbox,
        SshParams {
            v,
            w,
            disorder,
            seed,
        },
        Boundary::Open,
    )
}

pub fn build_ssh_with(lbox: &LatticeBox, p: SshParams, boundary: Boundary) -> Result<LocalOperator> {
    Ok(ssh_block(lbox, p, boundary)?.reassemble())
}

pub fn ssh_block(lbox: &LatticeBox, p: SshParams, boundary: Boundary) -> Result<ChiralBlock> {
    if lbox.dim() != 1 {
        return Err(Error::WrongDimension {
            expected: 1,
            got: lbox.dim(),
        });
    }
    if !(p.disorder >= 0.0) || !p.v.is_finite() || !p.w.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "SSH parameters v = {}, w = {}, disorder = {}",
            p.v, p.w, p.disorder
        )));
    }
    let n = lbox.len();
    let mut s = Mat::zeros(n, n);
    for (i, &site) in lbox.sites().iter().enumerate() {
        let x = site[0];
        s[(i, i)] += re(p.intra(x));
        let next = [x + 1, 0];
        let j = match (lbox.index_of(next), boundary) {
            (Some(j), _) => Some(j),
            (None, Boundary::Periodic) => lbox.index_of(lbox.wrap(next)),
            (None, Boundary::Open) => None,
        };
        if let Some(j) = j {
            s[(i, j)] += re(p.inter(x));
        }
    }
    Ok(ChiralBlock {
        s,
        lbox: lbox.clone(),
        internal_dim: 2,
        boundary,
    })
}

fn pauli() -> [[[c64; 2]; 2]; 3] {
    let z = ZERO;
    let i = c64::new(0.0, 1.0);
    [
        [[z, ONE], [ONE, z]],
        [[z, -i], [i, z]],
        [[ONE, z], [z, -ONE]],
    ]
}

/// `h(k) = sin k1 s1 + sin k2 s2 + (m - cos k1 - cos k2) s3`.
pub fn qwz_symbol(m: f64, k1: f64, k2: f64) -> [[c64; 2]; 2] {
    let p = pauli();
    let coef = [k1.sin(), k2.sin(), m - k1.cos() - k2.cos()];
    let mut h = [[ZERO; 2]; 2];
    for (c, s) in coef.iter().zip(p.iter()) {
        for a in 0..2 {
            for b in 0..2 {
                h[a][b] += s[a][b] * *c;
            }
        }
    }
    h
}

pub fn build_qwz(lbox: &LatticeBox, m: f64) -> Result<LocalOperator> {
    build_qwz_with(lbox, m, Boundary::Open)
}

/// QWZ model; hops satisfy `h(k) = sum_r H_{x, x+r} e^{i k r}`.
pub fn build_qwz_with(lbox: &LatticeBox, m: f64, boundary: Boundary) -> Result<LocalOperator> {
    if lbox.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            got: lbox.dim(),
        });
    }
    if !m.is_finite() {
        return Err(Error::InvalidParameter(format!("QWZ mass m = {m}")));
    }
    let p = pauli();
    let half_i = c64::new(0.0, 0.5);
    // H_{x, x + e_j} = -i s_j / 2 - s3 / 2.
    let hop = |j: usize| -> [[c64; 2]; 2] {
        let mut t = [[ZERO; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                t[a][b] = -half_i * p[j][a][b] - p[2][a][b] * 0.5;
            }
        }
        t
    };
    let hops = [hop(0), hop(1)];
    let n = lbox.len() * 2;
    let mut h = Mat::zeros(n, n);
    for (x, &sx) in lbox.sites().iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                h[(2 * x + a, 2 * x + b)] += p[2][a][b] * m;
            }
        }
        for (j, t) in hops.iter().enumerate() {
            let mut ny = sx;
            ny[j] += 1;
            let y = match (lbox.index_of(ny), boundary) {
                (Some(y), _) => Some(y),
                (None, Boundary::Periodic) => lbox.index_of(lbox.wrap(ny)),
                (None, Boundary::Open) => None,
            };
            if let Some(y) = y {
                for a in 0..2 {
                    for b in 0..2 {
                        h[(2 * x + a, 2 * y + b)] += t[a][b];
                        h[(2 * y + b, 2 * x + a)] += t[a][b].conj();
                    }
                }
            }
        }
    }
    LocalOperator::with_boundary(lbox.clone(), 2, h, boundary)
}

/// Writes the text dump: header `d N ell hermitian chiral`, then `row col re im`
/// for every nonzero entry in column-major order.
pub fn write_dump<W: Write>(op: &LocalOperator, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "{} {} {} {} {}",
        op.lbox.dim(),
        op.internal_dim,
        op.lbox.ell(),
        op.hermitian,
        op.chiral
    )?;
    for j in 0..op.dim() {
        for i in 0..op.dim() {
            let v = op.matrix[(i, j)];
            if v != ZERO {
                writeln!(out, "{i} {j} {:?} {:?}", v.re, v.im)?;
            }
        }
    }
    Ok(())
}

pub fn read_dump<R: BufRead>(input: R) -> Result<LocalOperator> {
    let bad = |msg: &str| Error::InvalidParameter(format!("dump: {msg}"));
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty input"))?
        .map_err(|e| bad(&e.to_string()))?;
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 5 {
        return Err(bad("header must have 5 fields"));
    }
    let d: usize = f[0].parse().map_err(|_| bad("d"))?;
    let n: usize = f[1].parse().map_err(|_| bad("N"))?;
    let ell: usize = f[2].parse().map_err(|_| bad("ell"))?;
    let lbox = LatticeBox::new(d, ell)?;
    let dim = lbox.len() * n;
    let mut m = Mat::zeros(dim, dim);
    for line in lines {
        let line = line.map_err(|e| bad(&e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad("entry lines have 4 fields"));
        }
        let i: usize = f[0].parse().map_err(|_| bad("row"))?;
        let j: usize = f[1].parse().map_err(|_| bad("col"))?;
        let a: f64 = f[2].parse().map_err(|_| bad("re"))?;
        let b: f64 = f[3].parse().map_err(|_| bad("im"))?;
        if i >= dim || j >= dim {
            return Err(bad("index out of range"));
        }
        m[(i, j)] = c64::new(a, b);
    }
    LocalOperator::new(lbox, n, m)
}

/// Minimum over a `nk`-point grid of the smallest singular value of the Bloch
/// Hamiltonian, and the maximum of its largest one.
pub fn ssh_bulk_gap_norm(v: f64, w: f64, nk: usize) -> (f64, f64) {
    let mut g = f64::INFINITY;
    let mut nrm = 0.0f64;
    for i in 0..nk {
        let k = 2.0 * std::f64::consts::PI * i as f64 / nk as f64;
        let s = ssh_symbol(v, w, k).norm();
        g = g.min(s);
        nrm = nrm.max(s);
    }
    (g, nrm)
}

pub fn qwz_bulk_gap_norm(m: f64, nk: usize) -> (f64, f64) {
    let mut g = f64::INFINITY;
    let mut nrm = 0.0f64;
    for i in 0..nk {
        for j in 0..nk {
            let k1 = 2.0 * std::f64::consts::PI * i as f64 / nk as f64;
            let k2 = 2.0 * std::f64::consts::PI * j as f64 / nk as f64;
            // |h(k)| = |d(k)| for a traceless 2x2 symbol.
            let dv = [k1.sin(), k2.sin(), m - k1.cos() - k2.cos()];
            let r = dv.iter().map(|x| x * x).sum::<f64>().sqrt();
            g = g.min(r);
            nrm = nrm.max(r);
        }
    }
    (g, nrm)
}

/// Random operator with complex Gaussian blocks damped by `exp(-mu |x - y|)`.
pub fn random_local<R: Rng + ?Sized>(
    rng: &mut R,
    lbox: &LatticeBox,
    internal_dim: usize,
    mu: f64,
    hermitian: bool,
) -> LocalOperator {
    let sites = lbox.sites();
    let n = lbox.len() * internal_dim;
    let g = crate::linalg::random_gaussian(rng, n, n);
    let mut m = Mat::from_fn(n, n, |i, j| {
        let r = crate::lattice::euclid([
            sites[i / internal_dim][0] - sites[j / internal_dim][0],
            sites[i / internal_dim][1] - sites[j / internal_dim][1],
        ]);
        g[(i, j)] * (-mu * r).exp()
    });
    if hermitian {
        let h = &m + m.adjoint();
        m = crate::linalg::scaled(h.as_ref(), 0.5);
    }
    LocalOperator::new(lbox.clone(), internal_dim, m).expect("sizes agree")
}
