//! Gaussian-copula sampling of dependent marginals.
//!
//! A latent normal vector `z ~ N(0, Σ)` is built as `L g` from independent
//! normals `g`, pushed through the standard normal CDF to uniforms, and each
//! uniform is mapped through its marginal's quantile function.
//!
//! Randomness is addressed by position: draw `i` of a `d`-dimensional sample
//! consumes stream positions `i*d .. (i+1)*d` relative to the starting
//! counter, so chunked or parallel generation reproduces the serial result.

mod factor;
mod matrix;
mod rng;

use rayon::prelude::*;

pub use self::factor::{CorrelationFactor, FACTOR_TOLERANCE};
pub use self::matrix::{CorrelationMatrix, Symmetry, PSD_TOLERANCE};
pub use self::rng::{derive_seed, RngStream};

use crate::dist::{DistributionSpec, QuantileTable};
use crate::error::{Error, Result};
use crate::special::{std_normal_cdf, std_normal_quantile};

/// Uniforms are clamped to this range before inversion.
pub const UNIFORM_FLOOR: f64 = 1e-300;
pub const UNIFORM_CEIL: f64 = 1.0 - 1e-16;

pub const DEFAULT_CHUNK_SIZE: usize = 65_536;

/// One joint draw: latent normals, their uniforms, and the marginal values.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaDraw {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
}

/// Row-major `rows x cols` matrix of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DrawMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "draw matrix shape");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.cols).copied().collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

#[inline]
fn clamp_uniform(u: f64) -> f64 {
    u.clamp(UNIFORM_FLOOR, UNIFORM_CEIL)
}

/// `x = L g` with `g_i` the standard normal quantile of the next uniforms.
pub fn sample_latent(factor: &CorrelationFactor, rng: &mut RngStream) -> Vec<f64> {
    let g: Vec<f64> = (0..factor.dim())
        .map(|_| std_normal_quantile(rng.next_uniform()))
        .collect();
    let mut z = vec![0.0; g.len()];
    factor.apply(&g, &mut z);
    z
}

/// Maps latent normals to uniforms and marginal values.
pub fn copula_transform(z: &[f64], marginals: &[DistributionSpec]) -> Result<CopulaDraw> {
    check_len(marginals.len(), z.len(), "latent vector")?;
    let u: Vec<f64> = z.iter().map(|&zi| clamp_uniform(std_normal_cdf(zi))).collect();
    let x = u
        .iter()
        .zip(marginals)
        .map(|(&ui, m)| m.quantile_unchecked(ui))
        .collect();
    Ok(CopulaDraw { z: z.to_vec(), u, x })
}

fn check_len(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} has length {got}, expected {expected}"
        )))
    }
}

/// A marginal with an optional interpolation table seeding its quantile.
#[derive(Debug, Clone)]
struct Marginal {
    spec: DistributionSpec,
    table: Option<QuantileTable>,
}

impl Marginal {
    fn new(spec: &DistributionSpec) -> Self {
        Self {
            spec: spec.clone(),
            table: spec.quantile_table(),
        }
    }

    /// Marginal value at latent `z` whose clamped uniform is `u`.
    #[inline]
    fn invert(&self, u: f64, z: f64) -> f64 {
        match self.table.as_ref().and_then(|t| t.guess(z)) {
            Some(hint) => self.spec.quantile_near_unchecked(u, hint),
            None => self.spec.quantile_unchecked(u),
        }
    }
}

/// Prepared sampler for a fixed set of marginals and correlation matrix.
#[derive(Debug, Clone)]
pub struct CopulaSampler {
    marginals: Vec<Marginal>,
    factor: CorrelationFactor,
}

impl CopulaSampler {
    pub fn new(marginals: &[DistributionSpec], sigma: &CorrelationMatrix) -> Result<Self> {
        check_len(sigma.dim(), marginals.len(), "marginal list")?;
        Ok(Self::with_factor(marginals, CorrelationFactor::new(sigma)))
    }

    /// Sampler with independent marginals.
    pub fn independent(marginals: &[DistributionSpec]) -> Self {
        Self::with_factor(marginals, CorrelationFactor::identity(marginals.len()))
    }

    fn with_factor(marginals: &[DistributionSpec], factor: CorrelationFactor) -> Self {
        Self {
            marginals: marginals.iter().map(Marginal::new).collect(),
            factor,
        }
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn factor(&self) -> &CorrelationFactor {
        &self.factor
    }

    /// Fills one row of marginal values from the stream's current position.
    ///
    /// With an identity factor the stream's uniforms are inverted directly,
    /// which is plain independent inverse-transform sampling.
    #[inline]
    fn fill_row(&self, rng: &mut RngStream, g: &mut [f64], x: &mut [f64]) {
        if self.factor.is_identity() {
            for (m, xi) in self.marginals.iter().zip(x.iter_mut()) {
                let u = clamp_uniform(rng.next_uniform());
                let z = if m.table.is_some() { std_normal_quantile(u) } else { 0.0 };
                *xi = m.invert(u, z);
            }
            return;
        }
        for gi in g.iter_mut() {
            *gi = std_normal_quantile(rng.next_uniform());
        }
        self.factor.apply(g, x);
        for (m, xi) in self.marginals.iter().zip(x.iter_mut()) {
            let z = *xi;
            *xi = m.invert(clamp_uniform(std_normal_cdf(z)), z);
        }
    }

    /// One full draw with its latent and uniform components.
    pub fn draw(&self, rng: &mut RngStream) -> CopulaDraw {
        let d = self.dim();
        if self.factor.is_identity() {
            let u: Vec<f64> = (0..d).map(|_| clamp_uniform(rng.next_uniform())).collect();
            let z: Vec<f64> = u.iter().map(|&ui| std_normal_quantile(ui)).collect();
            let x = self
                .marginals
                .iter()
                .zip(u.iter().zip(&z))
                .map(|(m, (&ui, &zi))| m.invert(ui, zi))
                .collect();
            return CopulaDraw { z, u, x };
        }
        let z = sample_latent(&self.factor, rng);
        let u: Vec<f64> = z.iter().map(|&zi| clamp_uniform(std_normal_cdf(zi))).collect();
        let x = self
            .marginals
            .iter()
            .zip(u.iter().zip(&z))
            .map(|(m, (&ui, &zi))| m.invert(ui, zi))
            .collect();
        CopulaDraw { z, u, x }
    }

    /// Writes `out.len() / d` consecutive rows starting at row `first_row`
    /// relative to `base`.
    pub fn fill_rows(&self, base: &RngStream, first_row: usize, out: &mut [f64]) {
        let d = self.dim();
        if d == 0 {
            return;
        }
        let mut rng = base.ahead((first_row * d) as u64);
        let mut g = vec![0.0; d];
        for row in out.chunks_exact_mut(d) {
            self.fill_row(&mut rng, &mut g, row);
        }
    }

    /// `n` draws, generated in parallel chunks of `chunk_size` rows. The
    /// stream is advanced past the values consumed.
    pub fn sample(&self, n: usize, rng: &mut RngStream, chunk_size: usize) -> DrawMatrix {
        let d = self.dim();
        let chunk_size = chunk_size.max(1);
        let mut data = vec![0.0; n * d];
        if d > 0 {
            let base = rng.clone();
            data.par_chunks_mut(chunk_size * d)
                .enumerate()
                .for_each(|(k, chunk)| self.fill_rows(&base, k * chunk_size, chunk));
        }
        rng.skip((n * d) as u64);
        DrawMatrix::from_vec(n, d, data)
    }
}

/// `n` dependent draws from the Gaussian copula with the given marginals.
pub fn draw_dependent_samples(
    marginals: &[DistributionSpec],
    sigma: &CorrelationMatrix,
    n: usize,
    rng: &mut RngStream,
) -> Result<DrawMatrix> {
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    Ok(CopulaSampler::new(marginals, sigma)?.sample(n, rng, DEFAULT_CHUNK_SIZE))
}

/// `n` draws with each marginal sampled independently by inverse transform
/// of consecutive stream uniforms.
pub fn draw_independent_samples(marginals: &[DistributionSpec], n: usize, rng: &mut RngStream) -> Result<DrawMatrix> {
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    Ok(CopulaSampler::independent(marginals).sample(n, rng, DEFAULT_CHUNK_SIZE))
}
