//! Eigenanalysis of the assembled generator and its adjoint.
//!
//! Provides: dense spectrum with per-pair residual certificates, the largest
//! eigenvalue of the energy-weighted symmetric part (the discrete
//! dissipativity defect tau), adjointness discrepancy sampling, the
//! boundary-trace visibility of eigenfields (no eigenmode is invisible to the
//! three observation traces), and a scan of the visibility and spectral
//! abscissa over a list of domain sizes L.
//!
//! All pairings use the trapezoid-weighted discrete L^2 inner product; the
//! weighted symmetric part is obtained by the similarity transform
//! B = D A D^{-1} with D = diag(sqrt(w)), whose Euclidean symmetric part has
//! the same extremal Rayleigh quotient as the weighted symmetric part of A.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, OperationNorm, UPLO};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KpError, Result};
use crate::grid::{inner_product, norm_sq, Grid2D, StateField};
use crate::operators::{assemble_generator, boundary_traces, FeedbackConfig, GeneratorMatrix};

/// Relative residual threshold for certifying an eigenpair.
pub const CERT_TOL: f64 = 1e-8;

/// One eigenpair of the generator, stored as real/imaginary part fields,
/// normalized to unit discrete L^2 norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: Complex64,
    pub phi_re: StateField,
    pub phi_im: StateField,
    /// ||A phi - lambda phi|| in the weighted norm, relative to ||A||.
    pub residual: f64,
    /// residual <= CERT_TOL
    pub certified: bool,
}

/// Boundary-trace visibility of an eigenfield.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VisibilityRecord {
    pub lambda_re: f64,
    pub lambda_im: f64,
    /// [int |phi_x(0,y)|^2 dy + int |phi(x,L)|^2 dx
    ///  + int |dxinv phi_y(0,y)|^2 dy] / ||phi||^2
    pub visibility: f64,
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Dense spectrum of an assembled generator with certificates and summary
/// statistics.
pub struct SpectrumReport {
    pub pairs: Vec<EigenPair>,
    /// spectral abscissa: max Re lambda over certified pairs
    pub sigma: f64,
    /// largest eigenvalue of the weighted symmetric part
    pub tau: f64,
    /// 1-norm of the generator matrix (certificate scale)
    pub op_norm: f64,
    pub n_uncertified: usize,
    pub visibility: Vec<VisibilityRecord>,
}

impl SpectrumReport {
    /// Minimum visibility over certified pairs.
    pub fn min_visibility(&self) -> f64 {
        self.visibility
            .iter()
            .map(|r| r.visibility)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Largest eigenvalue of the symmetric part of A in the quadrature-weighted
/// inner product (similarity-transformed standard eigenproblem).
pub fn symmetric_part_check(a: &GeneratorMatrix) -> Result<f64> {
    let g = &a.grid;
    let n = a.dim();
    let sqw: Vec<f64> = (0..n)
        .map(|k| {
            let (i, j) = g.node(k);
            g.quad_weight(i, j).sqrt()
        })
        .collect();
    let mut b = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            b[[i, j]] = sqw[i] * a.entries[[i, j]] / sqw[j];
        }
    }
    let sym = (&b + &b.t()) * 0.5;
    let (vals, _) = sym
        .eigh(UPLO::Lower)
        .map_err(|e| KpError::Eigen(format!("symmetric eigensolve failed: {e}")))?;
    Ok(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Dense eigensolve of the generator with residual certificates, weighted
/// symmetric-part eigenvalue, and per-pair visibility records.
pub fn compute_spectrum(a: &GeneratorMatrix) -> Result<SpectrumReport> {
    let g = &a.grid;
    let cfg = &a.config;
    let n = a.dim();
    let (vals, vecs) = a
        .entries
        .eig()
        .map_err(|e| KpError::Eigen(format!("eigensolve failed: {e}")))?;
    let op_norm = a
        .entries
        .opnorm_one()
        .map_err(|e| KpError::Eigen(format!("norm computation failed: {e}")))?;

    let mut pairs = Vec::with_capacity(n);
    let mut visibility = Vec::new();
    let mut sigma = f64::NEG_INFINITY;
    let mut n_uncertified = 0;
    for m in 0..n {
        let lambda = vals[m];
        let col = vecs.column(m);
        let re = Array1::from_iter(col.iter().map(|z| z.re));
        let im = Array1::from_iter(col.iter().map(|z| z.im));
        let mut phi_re = StateField::from_values(g, re)?;
        let mut phi_im = StateField::from_values(g, im)?;
        // normalize ||phi||^2 = ||re||^2 + ||im||^2 = 1 in the weighted norm
        let nrm = (norm_sq(&phi_re) + norm_sq(&phi_im)).sqrt();
        if nrm == 0.0 {
            n_uncertified += 1;
            continue;
        }
        phi_re = phi_re.scaled(1.0 / nrm);
        phi_im = phi_im.scaled(1.0 / nrm);
        // residual r = A phi - lambda phi, complex arithmetic on real parts
        let a_re = a.apply(&phi_re)?;
        let a_im = a.apply(&phi_im)?;
        let r_re = a_re.add_scaled(-lambda.re, &phi_re)?.add_scaled(lambda.im, &phi_im)?;
        let r_im = a_im.add_scaled(-lambda.im, &phi_re)?.add_scaled(-lambda.re, &phi_im)?;
        let residual = (norm_sq(&r_re) + norm_sq(&r_im)).sqrt() / op_norm;
        let certified = residual <= CERT_TOL;
        if certified {
            sigma = sigma.max(lambda.re);
            visibility.push(eigen_visibility_parts(
                lambda, &phi_re, &phi_im, g, cfg,
            )?);
        } else {
            n_uncertified += 1;
        }
        pairs.push(EigenPair {
            lambda,
            phi_re,
            phi_im,
            residual,
            certified,
        });
    }

    let tau = symmetric_part_check(a)?;
    Ok(SpectrumReport {
        pairs,
        sigma,
        tau,
        op_norm,
        n_uncertified,
        visibility,
    })
}

/// Visibility of one eigenpair: the three observation traces applied to the
/// real and imaginary parts and summed, over the squared norm.
pub fn eigen_visibility(
    pair: &EigenPair,
    grid: &Grid2D,
    cfg: &FeedbackConfig,
) -> Result<VisibilityRecord> {
    let nrm = norm_sq(&pair.phi_re) + norm_sq(&pair.phi_im);
    if nrm == 0.0 {
        return Err(KpError::Eigen("zero eigenfield has no visibility".into()));
    }
    eigen_visibility_parts(pair.lambda, &pair.phi_re, &pair.phi_im, grid, cfg)
}

fn eigen_visibility_parts(
    lambda: Complex64,
    phi_re: &StateField,
    phi_im: &StateField,
    grid: &Grid2D,
    cfg: &FeedbackConfig,
) -> Result<VisibilityRecord> {
    let tr_re = boundary_traces(phi_re, grid, cfg)?;
    let tr_im = boundary_traces(phi_im, grid, cfg)?;
    let total = tr_re.i_ux0 + tr_re.i_top + tr_re.i_nloc + tr_im.i_ux0 + tr_im.i_top + tr_im.i_nloc;
    let nrm = norm_sq(phi_re) + norm_sq(phi_im);
    Ok(VisibilityRecord {
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        visibility: total / nrm,
        alpha: cfg.alpha,
        beta: cfg.beta,
        l: grid.l(),
        nx: grid.nx(),
        ny: grid.ny(),
    })
}

/// Adjointness discrepancy statistics over seeded random smooth samples.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AdjointnessStats {
    /// max over samples of |<Au,v> - <u,A*v>| / (||u|| ||v|| ||A||)
    pub max_discrepancy: f64,
    pub mean_discrepancy: f64,
    pub n_samples: usize,
}

/// Samples the weak identity <A u, v> = <u, A* v> on random smooth fields
/// vanishing near all four boundaries (products of interior sine modes with
/// random coefficients).
pub fn adjointness_check(
    a: &GeneratorMatrix,
    astar: &GeneratorMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<AdjointnessStats> {
    use std::f64::consts::PI;
    if a.grid != astar.grid || a.config != astar.config {
        return Err(KpError::Dimension(
            "generator and adjoint live on different grids or configs".into(),
        ));
    }
    if n_samples == 0 {
        return Err(KpError::Config("need at least one adjointness sample".into()));
    }
    let g = &a.grid;
    let l = g.l();
    let op_norm = a
        .entries
        .opnorm_one()
        .map_err(|e| KpError::Eigen(format!("norm computation failed: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_d = 0.0f64;
    let mut sum_d = 0.0f64;
    let draw = |rng: &mut ChaCha8Rng| {
        let mut coef = [[0.0f64; 3]; 3];
        for row in coef.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
        }
        StateField::from_fn(g, |x, y| {
            let mut s = 0.0;
            for (m, row) in coef.iter().enumerate() {
                for (n, &c) in row.iter().enumerate() {
                    s += c
                        * ((m + 1) as f64 * PI * x / l).sin()
                        * ((n + 1) as f64 * PI * y / l).sin();
                }
            }
            s
        })
    };
    for _ in 0..n_samples {
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        let nu = norm_sq(&u).sqrt();
        let nv = norm_sq(&v).sqrt();
        if nu == 0.0 || nv == 0.0 {
            continue;
        }
        let au = a.apply(&u)?;
        let sv = astar.apply(&v)?;
        let d = (inner_product(&au, &v)? - inner_product(&u, &sv)?).abs() / (nu * nv * op_norm);
        max_d = max_d.max(d);
        sum_d += d;
    }
    Ok(AdjointnessStats {
        max_discrepancy: max_d,
        mean_discrepancy: sum_d / n_samples as f64,
        n_samples,
    })
}

/// One row of the domain-size scan.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanRecord {
    pub l: f64,
    pub min_visibility: f64,
    pub sigma: f64,
    pub tau: f64,
    pub n_certified: usize,
    pub n_uncertified: usize,
}

/// For each L: assemble the generator on an n x n grid with the template
/// feedback parameters, solve the spectrum, and record the minimum eigenfield
/// visibility, the spectral abscissa, and the symmetric-part eigenvalue.
pub fn critical_length_scan(
    l_values: &[f64],
    alpha: f64,
    beta: f64,
    drift: bool,
    n: usize,
) -> Result<Vec<ScanRecord>> {
    let mut out = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let cfg = FeedbackConfig::new(alpha, beta, drift, l)?;
        let grid = Grid2D::build(l, n, n)?;
        let a = assemble_generator(&grid, &cfg)?;
        let rep = compute_spectrum(&a)?;
        out.push(ScanRecord {
            l,
            min_visibility: rep.min_visibility(),
            sigma: rep.sigma,
            tau: rep.tau,
            n_certified: rep.visibility.len(),
            n_uncertified: rep.n_uncertified,
        });
    }
    Ok(out)
}
