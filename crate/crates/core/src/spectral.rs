//! 3D DFT of video tensors and the PMF motion-fidelity score.
//!
//! PMF compares *where the spectral energy sits*, not pixel values: each
//! video is transformed over `(h, w, t)`, the squared amplitudes are summed
//! over channels and normalized into a distribution, and the score is
//! `−ln d_TV` between the two distributions. Circular shifts only rotate
//! phases and brightness scaling cancels in the normalization, so both leave
//! the score at its ceiling.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::compensated_sum;
use crate::video::VideoTensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("tensor is empty")]
    EmptyTensor,
    #[error("total spectral energy is zero; PMF is undefined for a blank video")]
    ZeroEnergy,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("tv_floor must lie in (0, 1), got {0}")]
    InvalidFloor(f64),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Fourier coefficients `Ṽ(c; u, v, s)`, nested `(c, s, u, v)` like the
/// source tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    channels: usize,
    height: usize,
    width: usize,
    frames: usize,
    coeffs: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        frames: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if coeffs.len() != channels * height * width * frames {
            return Err(SpectralError::DimMismatch(format!(
                "{} coefficients for dims {channels}x{height}x{width}x{frames}",
                coeffs.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            frames,
            coeffs,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.height, self.width, self.frames)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn index(&self, c: usize, u: usize, v: usize, s: usize) -> usize {
        ((c * self.frames + s) * self.height + u) * self.width + v
    }

    pub fn get(&self, c: usize, u: usize, v: usize, s: usize) -> Complex64 {
        self.coeffs[self.index(c, u, v, s)]
    }

    /// `A = |Ṽ|` per coefficient.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|z| z.norm()).collect()
    }

    /// `ψ = arg Ṽ` per coefficient, in `(−π, π]`.
    pub fn phases(&self) -> Vec<f64> {
        self.coeffs.iter().map(|z| z.arg()).collect()
    }

    /// `Σ |Ṽ|²` over all channels and frequencies.
    pub fn total_energy(&self) -> f64 {
        compensated_sum(self.coeffs.iter().map(|z| z.norm_sqr()))
    }
}

/// Normalized energy `E(u, v, s)`, nested `(s, u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    height: usize,
    width: usize,
    frames: usize,
    energy: Vec<f64>,
}

impl EnergySpectrum {
    /// Wraps an arbitrary non-negative distribution. Values are renormalized
    /// so they sum to one.
    pub fn from_weights(height: usize, width: usize, frames: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != height * width * frames {
            return Err(SpectralError::DimMismatch(format!(
                "{} weights for dims {height}x{width}x{frames}",
                weights.len()
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(SpectralError::ZeroEnergy);
        }
        Ok(Self {
            height,
            width,
            frames,
            energy: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.frames)
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn get(&self, u: usize, v: usize, s: usize) -> f64 {
        self.energy[(s * self.height + u) * self.width + v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfConfig {
    /// Lower clamp on `d_TV` before taking `−ln`.
    pub tv_floor: f64,
}

impl Default for PmfConfig {
    fn default() -> Self {
        Self { tv_floor: 1e-9 }
    }
}

impl PmfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tv_floor > 0.0 && self.tv_floor < 1.0 {
            Ok(())
        } else {
            Err(SpectralError::InvalidFloor(self.tv_floor))
        }
    }

    /// The score of two videos with identical spectra.
    pub fn max_score(&self) -> f64 {
        -self.tv_floor.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfReport {
    pub pmf: f64,
    pub tv_distance: f64,
}

/// Forward 3D DFT over `(h, w, t)` for each channel.
pub fn dft3(v: &VideoTensor) -> Result<ComplexSpectrum> {
    transform3(v, FftDirection::Forward)
}

/// Inverse 3D DFT, normalized by `1/(H·W·T)`. Returns the real parts.
pub fn idft3(s: &ComplexSpectrum) -> Result<Vec<f64>> {
    if s.coeffs.is_empty() {
        return Err(SpectralError::EmptyTensor);
    }
    let (_, h, w, t) = s.dims();
    let mut buf = s.coeffs.clone();
    run_lanes(&mut buf, h, w, t, FftDirection::Inverse);
    let scale = 1.0 / (h * w * t) as f64;
    Ok(buf.into_iter().map(|z| z.re * scale).collect())
}

fn transform3(v: &VideoTensor, dir: FftDirection) -> Result<ComplexSpectrum> {
    if v.is_empty() {
        return Err(SpectralError::EmptyTensor);
    }
    let (c, h, w, t) = v.dims();
    let mut buf: Vec<Complex64> = v.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    run_lanes(&mut buf, h, w, t, dir);
    ComplexSpectrum::new(c, h, w, t, buf)
}

/// Runs 1D transforms along `w`, then `h`, then `t` for every channel.
///
/// Each lane is transformed independently, so the result does not depend on
/// how rayon schedules the lanes.
fn run_lanes(buf: &mut [Complex64], h: usize, w: usize, t: usize, dir: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let fft_w = planner.plan_fft(w, dir);
    let fft_h = planner.plan_fft(h, dir);
    let fft_t = planner.plan_fft(t, dir);
    let volume = h * w * t;

    buf.par_chunks_mut(volume).for_each(|chan| {
        // Rows along w are contiguous.
        transform_rows(chan, w, &fft_w);

        // Columns along h: transpose each H×W slab, transform, transpose back.
        chan.par_chunks_mut(h * w).for_each(|slab| {
            let mut tr = transpose(slab, h, w);
            transform_rows(&mut tr, h, &fft_h);
            slab.copy_from_slice(&transpose(&tr, w, h));
        });

        // Time lanes: the channel volume is T × (H·W).
        let mut tr = transpose(chan, t, h * w);
        transform_rows(&mut tr, t, &fft_t);
        chan.copy_from_slice(&transpose(&tr, h * w, t));
    });
}

fn transform_rows(data: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    if len <= 1 {
        return;
    }
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex64::default(); fft.get_inplace_scratch_len()],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

/// Transposes a `rows × cols` row-major matrix.
fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); src.len()];
    for r in 0..rows {
        for (cidx, z) in src[r * cols..(r + 1) * cols].iter().enumerate() {
            out[cidx * rows + r] = *z;
        }
    }
    out
}

/// Direct `O(N²)` evaluation of the 3D DFT sum. Intended as a cross-check
/// for small tensors.
pub fn dft3_naive(v: &VideoTensor) -> Result<ComplexSpectrum> {
    if v.is_empty() {
        return Err(SpectralError::EmptyTensor);
    }
    let (c, h, w, t) = v.dims();
    let tau = std::f64::consts::TAU;
    let mut coeffs = vec![Complex64::default(); v.len()];
    for ch in 0..c {
        for s in 0..t {
            for u in 0..h {
                for vv in 0..w {
                    let mut acc = Complex64::default();
                    for tt in 0..t {
                        for hh in 0..h {
                            for ww in 0..w {
                                // Reduce the integer phase first so the angle stays small.
                                let ph = ((u * hh) % h) as f64 / h as f64
                                    + ((vv * ww) % w) as f64 / w as f64
                                    + ((s * tt) % t) as f64 / t as f64;
                                acc += Complex64::from_polar(v.get(ch, hh, ww, tt), -tau * ph);
                            }
                        }
                    }
                    coeffs[((ch * t + s) * h + u) * w + vv] = acc;
                }
            }
        }
    }
    ComplexSpectrum::new(c, h, w, t, coeffs)
}

/// `E(u,v,s) = Σ_c |Ṽ(c;u,v,s)|² / Σ_{u',v',s'} Σ_c |Ṽ|²`.
pub fn energy_spectrum(s: &ComplexSpectrum) -> Result<EnergySpectrum> {
    let (c, h, w, t) = s.dims();
    let plane = h * w * t;
    let mut per_bin = vec![0.0; plane];
    for ch in 0..c {
        for (acc, z) in per_bin.iter_mut().zip(&s.coeffs[ch * plane..(ch + 1) * plane]) {
            *acc += z.norm_sqr();
        }
    }
    let total = compensated_sum(per_bin.iter().copied());
    if !(total > 0.0) {
        return Err(SpectralError::ZeroEnergy);
    }
    for e in per_bin.iter_mut() {
        *e /= total;
    }
    Ok(EnergySpectrum {
        height: h,
        width: w,
        frames: t,
        energy: per_bin,
    })
}

/// `½ Σ |e1 − e2|`, clamped into `[0, 1]`.
pub fn tv_distance(e1: &EnergySpectrum, e2: &EnergySpectrum) -> Result<f64> {
    if e1.dims() != e2.dims() {
        return Err(SpectralError::DimMismatch(format!(
            "{:?} vs {:?}",
            e1.dims(),
            e2.dims()
        )));
    }
    let d = 0.5 * compensated_sum(e1.energy.iter().zip(&e2.energy).map(|(a, b)| (a - b).abs()));
    Ok(d.clamp(0.0, 1.0))
}

/// Energy spectrum of a video (`dft3` followed by `energy_spectrum`).
pub fn video_energy(v: &VideoTensor) -> Result<EnergySpectrum> {
    energy_spectrum(&dft3(v)?)
}

/// PMF score and the underlying TV distance.
pub fn pmf_report(gen: &VideoTensor, reference: &VideoTensor, cfg: &PmfConfig) -> Result<PmfReport> {
    cfg.validate()?;
    if gen.dims() != reference.dims() {
        return Err(SpectralError::DimMismatch(format!(
            "generated {:?} vs reference {:?}",
            gen.dims(),
            reference.dims()
        )));
    }
    let d = tv_distance(&video_energy(gen)?, &video_energy(reference)?)?;
    Ok(PmfReport {
        pmf: -d.max(cfg.tv_floor).ln(),
        tv_distance: d,
    })
}

/// `−ln max(d_TV(E_gen, E_ref), tv_floor)`.
pub fn pmf(gen: &VideoTensor, reference: &VideoTensor, cfg: &PmfConfig) -> Result<f64> {
    pmf_report(gen, reference, cfg).map(|r| r.pmf)
}
