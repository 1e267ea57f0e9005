//! Weighted Steklov eigenproblem on the disk in the Fourier basis.
//!
//! Harmonic extension of cos(k theta) is r^k cos(k theta) with Dirichlet energy
//! pi k, so the stiffness matrix is `pi diag(0, 1, 1, 2, 2, ...)` and the only
//! discretization error comes from truncating the weight's action.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigen_diag, norm, Mat};
use crate::trig::{
    check_positive, full_basis, mass_matrix_on, project_oversampled, BasisFn, Parity, QuadratureGrid, TrigSeries,
};

/// Relative threshold under which two eigenvalues form one multiplet.
pub const DEGENERACY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeight {
    /// values of w = e^v on the circle
    pub density: TrigSeries,
    /// v itself when the weight was built from a log-density
    pub log_coeffs: Option<TrigSeries>,
    pub symmetry_class: Parity,
}

impl BoundaryWeight {
    pub fn new(density: TrigSeries) -> Result<Self> {
        check_positive(&density, density.n_modes)?;
        let symmetry_class = density.parity;
        Ok(BoundaryWeight { density, log_coeffs: None, symmetry_class })
    }

    pub fn flat() -> Self {
        BoundaryWeight::new(TrigSeries::constant(1.0, 0)).unwrap()
    }

    pub fn constant(c: f64) -> Result<Self> {
        BoundaryWeight::new(TrigSeries::constant(c, 0))
    }

    /// Projects closed-form boundary values at the given degree.
    pub fn from_fn(f: impl Fn(f64) -> f64, degree: usize) -> Result<Self> {
        let pts = (4 * degree + 4).next_power_of_two();
        let density = project_oversampled(&f, degree, pts)?;
        BoundaryWeight::new(density)
    }

    /// w = e^v with v a trigonometric series, projected at the given degree.
    pub fn from_log(v: &TrigSeries, degree: usize) -> Result<Self> {
        let pts = (4 * degree.max(v.n_modes) + 4).next_power_of_two();
        let vals = v.grid_values(pts);
        let samples: Vec<f64> = vals.iter().map(|x| x.exp()).collect();
        let density = crate::trig::project_samples(&samples, degree)?;
        let mut w = BoundaryWeight::new(density)?;
        w.log_coeffs = Some(v.clone());
        Ok(w)
    }

    /// L = int w dtheta
    pub fn length(&self) -> f64 {
        2.0 * PI * self.density.cos_coeffs[0]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut w = BoundaryWeight::new(self.density.scaled(c))?;
        w.log_coeffs = self.log_coeffs.as_ref().map(|v| {
            let mut v = v.clone();
            v.cos_coeffs[0] += c.ln();
            v
        });
        Ok(w)
    }

    /// w(theta - alpha)
    pub fn rotated(&self, alpha: f64) -> Result<Self> {
        let mut w = BoundaryWeight::new(self.density.rotate(alpha))?;
        w.log_coeffs = self.log_coeffs.as_ref().map(|v| v.rotate(alpha));
        Ok(w)
    }

    pub fn evaluate(&self, theta: f64) -> f64 {
        self.density.evaluate(theta)
    }
}

/// The four parity classes of an even_both weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// cos 2k theta: even in x and y (contains the constant)
    CosEven,
    /// cos (2k+1) theta: odd in x, even in y
    CosOdd,
    /// sin (2k+1) theta: even in x, odd in y
    SinOdd,
    /// sin 2k theta: odd in x and y
    SinEven,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::CosEven, Block::CosOdd, Block::SinOdd, Block::SinEven];

    pub fn basis(self, n: usize) -> Vec<BasisFn> {
        match self {
            Block::CosEven => (0..=n).step_by(2).map(BasisFn::Cos).collect(),
            Block::CosOdd => (1..=n).step_by(2).map(BasisFn::Cos).collect(),
            Block::SinOdd => (1..=n).step_by(2).map(BasisFn::Sin).collect(),
            Block::SinEven => (2..=n).step_by(2).map(BasisFn::Sin).collect(),
        }
    }

    /// Block of a basis function.
    pub fn of(f: BasisFn) -> Block {
        match f {
            BasisFn::Cos(k) if k % 2 == 0 => Block::CosEven,
            BasisFn::Cos(_) => Block::CosOdd,
            BasisFn::Sin(k) if k % 2 == 1 => Block::SinOdd,
            BasisFn::Sin(_) => Block::SinEven,
        }
    }

    /// Block reached after rotating by a quarter turn.
    pub fn quarter_turn(self) -> Block {
        match self {
            Block::CosOdd => Block::SinOdd,
            Block::SinOdd => Block::CosOdd,
            b => b,
        }
    }
}

/// One decoupled generalized eigenproblem A u = sigma B u.
#[derive(Clone, Debug)]
pub struct BlockProblem {
    pub block: Option<Block>,
    pub basis: Vec<BasisFn>,
    pub stiffness: Vec<f64>,
    pub mass: Mat,
}

impl BlockProblem {
    fn on_basis(weight: &BoundaryWeight, basis: Vec<BasisFn>, block: Option<Block>) -> Self {
        let stiffness = basis.iter().map(|f| PI * f.order() as f64).collect();
        let mass = mass_matrix_on(&weight.density, &basis);
        BlockProblem { block, basis, stiffness, mass }
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Lowest `k` eigenpairs as (sigma, trace).
    pub fn solve(&self, k: usize, n_modes: usize) -> Result<Vec<(f64, TrigSeries)>> {
        if self.basis.is_empty() || k == 0 {
            return Ok(Vec::new());
        }
        let se = generalized_eigen_diag(&self.stiffness, &self.mass, k)?;
        Ok(se
            .values
            .into_iter()
            .zip(se.vectors)
            .map(|(s, u)| (s, trace_from_coeffs(&self.basis, &u, n_modes)))
            .collect())
    }
}

fn trace_from_coeffs(basis: &[BasisFn], u: &[f64], n: usize) -> TrigSeries {
    let imax = u.iter().enumerate().fold(0, |m, (i, v)| if v.abs() > u[m].abs() { i } else { m });
    let sign = if u[imax] < 0.0 { -1.0 } else { 1.0 };
    let mut a = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    for (f, &c) in basis.iter().zip(u) {
        match *f {
            BasisFn::Cos(k) => a[k] = sign * c,
            BasisFn::Sin(k) => b[k] = sign * c,
        }
    }
    TrigSeries::new(a, b)
}

/// The four blocks over {cos 2k}, {cos (2k+1)}, {sin (2k+1)}, {sin 2k}.
pub fn parity_blocks(weight: &BoundaryWeight, n: usize) -> Result<Vec<BlockProblem>> {
    if weight.symmetry_class != Parity::EvenBoth {
        return Err(Error::Symmetry(format!(
            "parity blocks need an even_both weight, got {:?}",
            weight.symmetry_class
        )));
    }
    check_positive(&weight.density, n)?;
    Ok(Block::ALL.iter().map(|&b| BlockProblem::on_basis(weight, b.basis(n), Some(b))).collect())
}

/// Eigenpairs of one block, ascending.
#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    pub block: Block,
    pub sigmas: Vec<f64>,
    pub traces: Vec<TrigSeries>,
}

/// Lowest `per_block` eigenpairs of every parity block (blocks solved on
/// separate threads when large).
pub fn solve_blocks(weight: &BoundaryWeight, n: usize, per_block: usize) -> Result<Vec<BlockSpectrum>> {
    let problems = parity_blocks(weight, n)?;
    let solve = |p: &BlockProblem| -> Result<BlockSpectrum> {
        let pairs = p.solve(per_block, n)?;
        let (sigmas, traces) = pairs.into_iter().unzip();
        Ok(BlockSpectrum { block: p.block.unwrap(), sigmas, traces })
    };
    let mut out: Vec<Result<BlockSpectrum>> = if n >= 256 {
        std::thread::scope(|s| {
            let handles: Vec<_> = problems.iter().map(|p| s.spawn(move || solve(p))).collect();
            handles.into_iter().map(|h| h.join().expect("block solve panicked")).collect()
        })
    } else {
        problems.iter().map(solve).collect()
    };
    let mut res = Vec::with_capacity(4);
    for r in out.drain(..) {
        let mut bs = r?;
        if bs.block == Block::CosEven && !bs.sigmas.is_empty() && bs.sigmas[0].abs() < 1e-9 {
            bs.sigmas[0] = 0.0;
        }
        res.push(bs);
    }
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteklovSpectrum {
    /// ascending, sigma_0 = 0
    pub sigmas: Vec<f64>,
    /// w-orthonormal boundary traces
    pub eigen_traces: Vec<TrigSeries>,
    /// parity block of each pair when solved blockwise
    pub blocks: Vec<Option<Block>>,
    pub boundary_length: f64,
    pub n_modes: usize,
}

impl SteklovSpectrum {
    /// sigma_k * L
    pub fn normalized(&self, k: usize) -> f64 {
        self.sigmas[k] * self.boundary_length
    }

    pub fn normalized_all(&self) -> Vec<f64> {
        self.sigmas.iter().map(|s| s * self.boundary_length).collect()
    }

    pub fn multiplicity_gaps(&self) -> Vec<f64> {
        self.sigmas.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Indices of the multiplet containing eigenvalue `k`.
    pub fn multiplet(&self, k: usize) -> Vec<usize> {
        let s = self.sigmas[k];
        (0..self.sigmas.len()).filter(|&j| (self.sigmas[j] - s).abs() <= DEGENERACY_TOL * (1.0 + s.abs())).collect()
    }

    /// First index j with sigma_j = sigma in its block, if any.
    pub fn index_in_block(&self, block: Block, nth: usize) -> Option<usize> {
        (0..self.sigmas.len()).filter(|&j| self.blocks[j] == Some(block)).nth(nth)
    }
}

fn merge(blocks: Vec<BlockSpectrum>, k_total: usize, length: f64, n: usize) -> SteklovSpectrum {
    let mut all: Vec<(f64, Block, TrigSeries)> = blocks
        .into_iter()
        .flat_map(|b| {
            let blk = b.block;
            b.sigmas.into_iter().zip(b.traces).map(move |(s, t)| (s, blk, t))
        })
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    all.truncate(k_total);
    SteklovSpectrum {
        sigmas: all.iter().map(|x| x.0).collect(),
        blocks: all.iter().map(|x| Some(x.1)).collect(),
        eigen_traces: all.into_iter().map(|x| x.2).collect(),
        boundary_length: length,
        n_modes: n,
    }
}

/// Lowest k_max + 1 eigenpairs. Even_both weights are solved blockwise (same
/// spectrum, a quarter of the dense work per block).
pub fn solve_spectrum(weight: &BoundaryWeight, n: usize, k_max: usize) -> Result<SteklovSpectrum> {
    if n < k_max + 4 {
        return Err(Error::Resolution(format!("N = {n} must be at least k_max + 4 = {}", k_max + 4)));
    }
    if weight.symmetry_class == Parity::EvenBoth {
        let blocks = solve_blocks(weight, n, k_max + 1)?;
        Ok(merge(blocks, k_max + 1, weight.length(), n))
    } else {
        solve_full(weight, n, k_max)
    }
}

/// Dense solve over the full basis of degree N.
pub fn solve_full(weight: &BoundaryWeight, n: usize, k_max: usize) -> Result<SteklovSpectrum> {
    check_positive(&weight.density, n)?;
    let p = BlockProblem::on_basis(weight, full_basis(n), None);
    let pairs = p.solve(k_max + 1, n)?;
    let mut sigmas: Vec<f64> = pairs.iter().map(|x| x.0).collect();
    if sigmas[0].abs() < 1e-9 {
        sigmas[0] = 0.0;
    }
    let blocks = pairs.iter().map(|(_, t)| block_of_trace(t)).collect();
    Ok(SteklovSpectrum {
        sigmas,
        eigen_traces: pairs.into_iter().map(|x| x.1).collect(),
        blocks,
        boundary_length: weight.length(),
        n_modes: n,
    })
}

fn block_of_trace(t: &TrigSeries) -> Option<Block> {
    match t.parity {
        Parity::EvenBoth => Some(Block::CosEven),
        Parity::OddXEvenY => Some(Block::CosOdd),
        Parity::EvenXOddY => Some(Block::SinOdd),
        _ => None,
    }
}

/// Doubles N until the lowest k_max + 1 eigenvalues agree to `tol` between N
/// and 2N (Cauchy criterion). Returns the spectrum at the larger N.
pub fn solve_converged(
    weight: &BoundaryWeight,
    n0: usize,
    k_max: usize,
    tol: f64,
    n_max: usize,
) -> Result<SteklovSpectrum> {
    let mut n = n0.max(k_max + 4);
    let mut prev = solve_spectrum(weight, n, k_max)?;
    while 2 * n <= n_max {
        let next = solve_spectrum(weight, 2 * n, k_max)?;
        let diff = prev.sigmas.iter().zip(&next.sigmas).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff <= tol {
            return Ok(next);
        }
        prev = next;
        n *= 2;
    }
    Err(Error::Resolution(format!("spectrum not converged to {tol:e} by N = {n}; raise N")))
}

/// int f g w dtheta by quadrature exact for the given degrees.
pub fn weighted_inner(f: &TrigSeries, g: &TrigSeries, w: &TrigSeries) -> f64 {
    let deg = f.n_modes + g.n_modes + w.n_modes;
    let grid = QuadratureGrid::with_points((2 * deg + 2).next_power_of_two());
    let (fv, gv, wv) = (f.grid_values(grid.n_points), g.grid_values(grid.n_points), w.grid_values(grid.n_points));
    grid.integrate(&fv.iter().zip(&gv).zip(&wv).map(|((a, b), c)| a * b * c).collect::<Vec<_>>())
}

/// Dirichlet energy of the harmonic extension over the weighted boundary norm.
pub fn rayleigh_quotient(trial: &TrigSeries, weight: &BoundaryWeight) -> Result<f64> {
    let den = weighted_inner(trial, trial, &weight.density);
    if !(den > 1e-300) {
        return Err(Error::Degenerate("zero weighted boundary norm".into()));
    }
    Ok(trial.dirichlet_energy() / den)
}

/// ||A u - sigma B u|| / ||B u|| in the full basis of degree N.
pub fn eigen_residual(weight: &BoundaryWeight, trace: &TrigSeries, sigma: f64, n: usize) -> f64 {
    let basis = full_basis(n);
    let b = mass_matrix_on(&weight.density, &basis);
    let u = trace.resized(n).to_interleaved();
    let bu = b.mul_vec(&u);
    let r: Vec<f64> =
        basis.iter().zip(&u).zip(&bu).map(|((f, ui), bui)| PI * f.order() as f64 * ui - sigma * bui).collect();
    norm(&r) / norm(&bu)
}
