//! Configuration samplers: uniform, Gaussian-mixture local samplers, the
//! synthesized global mixture, and the λ-mixed sampler planners draw from.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, JointLimit};

/// Default isotropic standard deviation of a mixture component, radians.
pub const DEFAULT_SIGMA: f64 = 0.1;
/// Default probability of drawing from the biased sampler.
pub const DEFAULT_LAMBDA: f64 = 0.5;
/// Smallest covariance eigenvalue a component may have.
pub const MIN_EIGENVALUE: f64 = 1e-8;
const WEIGHT_TOL: f64 = 1e-9;

/// The random stream every sampler and planner draws from.
pub type SamplerRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub trait ConfigSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration;
}

/// Each joint independently uniform over its limits.
pub fn sample_uniform<R: Rng + ?Sized>(limits: &[JointLimit], rng: &mut R) -> Configuration {
    let angles = limits
        .iter()
        .map(|l| {
            let u: f64 = rng.random();
            l.normalize(l.lo + (l.hi - l.lo) * u)
        })
        .collect();
    Configuration::from_normalized(angles)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSampler {
    pub limits: Vec<JointLimit>,
}

impl ConfigSampler for UniformSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        sample_uniform(&self.limits, rng)
    }
}

/// Covariance of one mixture component as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSpec {
    /// `sigma² · I`
    Sigma(f64),
    /// Full symmetric matrix, row-major.
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
struct Component {
    mean: Configuration,
    covariance: CovarianceSpec,
    /// Lower Cholesky factor.
    factor: DMatrix<f64>,
    /// `-(d ln 2π + ln det Σ) / 2`
    log_norm: f64,
    isotropic_var: Option<f64>,
}

impl Component {
    fn new(mean: Configuration, covariance: CovarianceSpec) -> Result<Self> {
        let d = mean.dof();
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        match covariance {
            CovarianceSpec::Sigma(s) => {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::InvalidInput(format!("sigma {s} must be positive")));
                }
                let (sigma, var) = if s * s >= MIN_EIGENVALUE {
                    (s, s * s)
                } else {
                    (MIN_EIGENVALUE.sqrt(), MIN_EIGENVALUE)
                };
                Ok(Component {
                    mean,
                    covariance: CovarianceSpec::Sigma(sigma),
                    factor: DMatrix::identity(d, d) * sigma,
                    log_norm: -0.5 * d as f64 * (ln_2pi + var.ln()),
                    isotropic_var: Some(var),
                })
            }
            CovarianceSpec::Matrix(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: rows.len(),
                    });
                }
                if rows.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(
                        "covariance has non-finite entries".into(),
                    ));
                }
                let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
                let m = floor_eigenvalues(m);
                let chol = m.clone().cholesky().ok_or_else(|| {
                    Error::InvalidInput("covariance is not positive definite".into())
                })?;
                let factor = chol.l();
                let ln_det: f64 = 2.0 * factor.diagonal().iter().map(|x| x.ln()).sum::<f64>();
                let stored = (0..d)
                    .map(|i| (0..d).map(|j| m[(i, j)]).collect())
                    .collect();
                Ok(Component {
                    mean,
                    covariance: CovarianceSpec::Matrix(stored),
                    factor,
                    log_norm: -0.5 * (d as f64 * ln_2pi + ln_det),
                    isotropic_var: None,
                })
            }
        }
    }

    fn pdf(&self, q: &Configuration, limits: &[JointLimit]) -> f64 {
        let diff: Vec<f64> = limits
            .iter()
            .zip(self.mean.angles().iter().zip(q.angles()))
            .map(|(l, (m, x))| l.delta(*m, *x))
            .collect();
        let mahalanobis = match self.isotropic_var {
            Some(var) => diff.iter().map(|x| x * x).sum::<f64>() / var,
            None => {
                let y = self
                    .factor
                    .solve_lower_triangular(&DVector::from_vec(diff))
                    .expect("cholesky factor has a positive diagonal");
                y.norm_squared()
            }
        };
        (self.log_norm - 0.5 * mahalanobis).exp()
    }
}

/// Clamps the spectrum of a symmetric matrix from below.
fn floor_eigenvalues(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&v| v >= MIN_EIGENVALUE) {
        return m;
    }
    let vals = eig.eigenvalues.map(|v| v.max(MIN_EIGENVALUE));
    let vecs = eig.eigenvectors;
    let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
    // symmetrize away round-off
    (&rebuilt + rebuilt.transpose()) * 0.5
}

/// A Gaussian mixture over configurations.
#[derive(Debug, Clone)]
pub struct GmmSampler {
    components: Vec<Component>,
    weights: Vec<f64>,
    limits: Vec<JointLimit>,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidInput(format!("weight {w} must be positive")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidInput(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl GmmSampler {
    pub fn new(
        means: Vec<Configuration>,
        covariances: Vec<CovarianceSpec>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidInput(
                "a mixture needs at least one component".into(),
            ));
        }
        if covariances.len() != means.len() || weights.len() != means.len() {
            return Err(Error::InvalidInput(format!(
                "{} means, {} covariances and {} weights",
                means.len(),
                covariances.len(),
                weights.len()
            )));
        }
        let dof = means[0].dof();
        if let Some(m) = means.iter().find(|m| m.dof() != dof) {
            return Err(Error::DimensionMismatch {
                expected: dof,
                actual: m.dof(),
            });
        }
        check_weights(&weights)?;
        let components = means
            .into_iter()
            .zip(covariances)
            .map(|(m, c)| Component::new(m, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(GmmSampler {
            components,
            weights,
            limits: vec![JointLimit::FULL; dof],
        })
    }

    /// Equally weighted components sharing the covariance `sigma² · I`.
    pub fn isotropic(means: Vec<Configuration>, sigma: f64) -> Result<Self> {
        let m = means.len();
        let weights = vec![1.0 / m as f64; m];
        GmmSampler::new(means, vec![CovarianceSpec::Sigma(sigma); m], weights)
    }

    /// Joint limits used to clamp draws; full circles by default.
    pub fn with_limits(mut self, limits: Vec<JointLimit>) -> Result<Self> {
        if limits.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                actual: limits.len(),
            });
        }
        self.limits = limits;
        Ok(self)
    }

    pub fn dof(&self) -> usize {
        self.limits.len()
    }

    pub fn mixture_count(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn limits(&self) -> &[JointLimit] {
        &self.limits
    }

    pub fn means(&self) -> impl Iterator<Item = &Configuration> {
        self.components.iter().map(|c| &c.mean)
    }

    pub fn covariances(&self) -> impl Iterator<Item = &CovarianceSpec> {
        self.components.iter().map(|c| &c.covariance)
    }

    /// Same mixture with every mean's first joint turned by `theta`.
    pub fn rotated(&self, theta: f64) -> GmmSampler {
        let mut out = self.clone();
        for c in &mut out.components {
            c.mean = c.mean.rotated(theta);
        }
        out
    }

    /// Draws a sample and reports which component produced it.
    pub fn sample_indexed<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Configuration) {
        let idx = pick(&self.weights, rng);
        let c = &self.components[idx];
        let d = self.dof();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let offset = match c.isotropic_var {
            Some(var) => z * var.sqrt(),
            None => &c.factor * z,
        };
        let angles = self
            .limits
            .iter()
            .zip(c.mean.angles().iter().zip(offset.iter()))
            .map(|(l, (m, o))| l.normalize(m + o))
            .collect();
        (idx, Configuration::from_normalized(angles))
    }

    pub fn density(&self, q: &Configuration) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.pdf(q, &self.limits))
            .sum()
    }
}

impl ConfigSampler for GmmSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        self.sample_indexed(rng).1
    }
}

/// Mixture component drawn from a Gaussian mixture.
pub fn sample_gmm<R: Rng + ?Sized>(g: &GmmSampler, rng: &mut R) -> Configuration {
    g.sample(rng)
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    if weights.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Weighted combination of local samplers.
#[derive(Debug, Clone)]
pub struct SynthesizedSampler {
    locals: Vec<GmmSampler>,
    local_weights: Vec<f64>,
}

/// Combines local samplers with weights proportional to their mixture
/// counts, so every component of every local sampler is equally likely.
pub fn synthesize(locals: Vec<GmmSampler>) -> Result<SynthesizedSampler> {
    if locals.is_empty() {
        return Err(Error::EmptySamplerSet);
    }
    let dof = locals[0].dof();
    if let Some(g) = locals.iter().find(|g| g.dof() != dof) {
        return Err(Error::DimensionMismatch {
            expected: dof,
            actual: g.dof(),
        });
    }
    let total: usize = locals.iter().map(GmmSampler::mixture_count).sum();
    let local_weights = locals
        .iter()
        .map(|g| g.mixture_count() as f64 / total as f64)
        .collect();
    Ok(SynthesizedSampler {
        locals,
        local_weights,
    })
}

impl SynthesizedSampler {
    pub fn locals(&self) -> &[GmmSampler] {
        &self.locals
    }

    pub fn local_weights(&self) -> &[f64] {
        &self.local_weights
    }

    pub fn primitive_count(&self) -> usize {
        self.locals.len()
    }

    pub fn mixture_count(&self) -> usize {
        self.locals.iter().map(GmmSampler::mixture_count).sum()
    }

    pub fn dof(&self) -> usize {
        self.locals[0].dof()
    }

    pub fn density(&self, q: &Configuration) -> f64 {
        density(self, q)
    }

    /// The equivalent single mixture over all components.
    pub fn flatten(&self) -> GmmSampler {
        let mut components = Vec::with_capacity(self.mixture_count());
        let mut weights = Vec::with_capacity(self.mixture_count());
        for (g, a) in self.locals.iter().zip(&self.local_weights) {
            components.extend(g.components.iter().cloned());
            weights.extend(g.weights.iter().map(|w| a * w));
        }
        GmmSampler {
            components,
            weights,
            limits: self.locals[0].limits.clone(),
        }
    }

    pub fn with_limits(self, limits: &[JointLimit]) -> Result<Self> {
        let locals = self
            .locals
            .into_iter()
            .map(|g| g.with_limits(limits.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SynthesizedSampler {
            locals,
            local_weights: self.local_weights,
        })
    }
}

impl ConfigSampler for SynthesizedSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let i = pick(&self.local_weights, rng);
        self.locals[i].sample(rng)
    }
}

/// Mixture density `Σ_i a_i Σ_j w_ij N(q; μ_ij, Σ_ij)`.
pub fn density(s: &SynthesizedSampler, q: &Configuration) -> f64 {
    s.locals
        .iter()
        .zip(&s.local_weights)
        .map(|(g, a)| a * g.density(q))
        .sum()
}

/// Outcome of one draw from a [`GlSampler`].
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub config: Configuration,
    pub biased: bool,
}

/// Draws from the synthesized sampler with probability λ, otherwise
/// uniformly over the joint limits.
#[derive(Debug, Clone)]
pub struct GlSampler {
    global: Option<SynthesizedSampler>,
    lambda: f64,
    joint_limits: Vec<JointLimit>,
    rng_seed: u64,
}

impl GlSampler {
    pub fn new(
        global: Option<SynthesizedSampler>,
        lambda: f64,
        joint_limits: Vec<JointLimit>,
        rng_seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidInput(format!(
                "lambda {lambda} outside [0, 1]"
            )));
        }
        let global = match global {
            Some(g) => {
                if g.dof() != joint_limits.len() {
                    return Err(Error::DimensionMismatch {
                        expected: joint_limits.len(),
                        actual: g.dof(),
                    });
                }
                Some(g.with_limits(&joint_limits)?)
            }
            None => None,
        };
        Ok(GlSampler {
            global,
            lambda,
            joint_limits,
            rng_seed,
        })
    }

    /// Plain uniform sampling.
    pub fn uniform(joint_limits: Vec<JointLimit>, rng_seed: u64) -> Self {
        GlSampler {
            global: None,
            lambda: 0.0,
            joint_limits,
            rng_seed,
        }
    }

    pub fn global(&self) -> Option<&SynthesizedSampler> {
        self.global.as_ref()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// λ actually in force: zero without a synthesized sampler.
    pub fn effective_lambda(&self) -> f64 {
        if self.global.is_some() {
            self.lambda
        } else {
            0.0
        }
    }

    pub fn joint_limits(&self) -> &[JointLimit] {
        &self.joint_limits
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Fresh random stream seeded from this sampler's seed.
    pub fn stream(&self) -> SamplerRng {
        seeded_rng(self.rng_seed)
    }

    /// One draw. The λ coin is always consumed so that a sampler without a
    /// synthesized part produces the same stream as uniform sampling.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let coin: f64 = rng.random();
        match &self.global {
            Some(g) if coin < self.lambda => Draw {
                config: g.sample(rng),
                biased: true,
            },
            _ => Draw {
                config: sample_uniform(&self.joint_limits, rng),
                biased: false,
            },
        }
    }
}

impl ConfigSampler for GlSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        self.draw(rng).config
    }
}

pub fn sample_gl<R: Rng + ?Sized>(s: &GlSampler, rng: &mut R) -> Configuration {
    s.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn full(d: usize) -> Vec<JointLimit> {
        vec![JointLimit::FULL; d]
    }

    #[test]
    fn degenerate_interval_is_constant() {
        let limits = vec![JointLimit::new(0.3, 0.3).unwrap(); 4];
        let mut rng = seeded_rng(1);
        for _ in 0..10 {
            assert_eq!(sample_uniform(&limits, &mut rng).angles(), &[0.3; 4]);
        }
    }

    #[test]
    fn uniform_respects_limits() {
        let limits = vec![
            JointLimit::new(-PI, -2.0).unwrap(),
            JointLimit::new(1.0, 1.5).unwrap(),
        ];
        let mut rng = seeded_rng(2);
        for _ in 0..10_000 {
            let q = sample_uniform(&limits, &mut rng);
            assert!(
                q[0] >= -PI && q[0] <= -2.0 && q[1] >= 1.0 && q[1] <= 1.5,
                "{q:?}"
            );
        }
    }

    #[test]
    fn tiny_sigma_collapses_to_mean() {
        let mean = Configuration::new(vec![0.5, -1.0, 2.0]);
        let g = GmmSampler::isotropic(vec![mean.clone()], 1e-9).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            let q = g.sample(&mut rng);
            for (a, b) in q.angles().iter().zip(mean.angles()) {
                assert!((a - b).abs() < 1e-3);
            }
        }
        // regularized to the eigenvalue floor
        assert_eq!(
            g.covariances().next(),
            Some(&CovarianceSpec::Sigma(MIN_EIGENVALUE.sqrt()))
        );
    }

    #[test]
    fn rejects_bad_weights() {
        let means = vec![Configuration::zeros(2), Configuration::zeros(2)];
        let covs = vec![CovarianceSpec::Sigma(0.1); 2];
        assert!(GmmSampler::new(means.clone(), covs.clone(), vec![0.5, 0.4]).is_err());
        assert!(GmmSampler::new(means.clone(), covs.clone(), vec![1.0, 0.0]).is_err());
        assert!(GmmSampler::new(means, covs, vec![0.5, 0.5]).is_ok());
        assert!(GmmSampler::isotropic(vec![], 0.1).is_err());
    }

    #[test]
    fn full_covariance_is_floored_and_usable() {
        let means = vec![Configuration::zeros(2)];
        let singular = CovarianceSpec::Matrix(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let g = GmmSampler::new(means, vec![singular], vec![1.0]).unwrap();
        let CovarianceSpec::Matrix(m) = g.covariances().next().unwrap() else {
            panic!()
        };
        let eig = DMatrix::from_fn(2, 2, |i, j| m[i][j]).symmetric_eigen();
        assert!(eig
            .eigenvalues
            .iter()
            .all(|v| *v >= MIN_EIGENVALUE * (1.0 - 1e-6)));
        assert!(g.density(&Configuration::zeros(2)).is_finite());
    }

    #[test]
    fn gaussian_peak_value() {
        let g = GmmSampler::isotropic(vec![Configuration::zeros(8)], 0.1).unwrap();
        let s = synthesize(vec![g]).unwrap();
        let expect = (2.0 * PI * 0.01f64).powi(-4);
        let got = density(&s, &Configuration::zeros(8));
        assert!((got / expect - 1.0).abs() < 1e-12, "{got} vs {expect}");
        assert!((got - 6.416e4).abs() < 10.0);
    }

    #[test]
    fn synthesize_weights_follow_mixture_counts() {
        let mk = |m: usize| GmmSampler::isotropic(vec![Configuration::zeros(2); m], 0.1).unwrap();
        assert_eq!(synthesize(vec![mk(2)]).unwrap().local_weights(), &[1.0]);
        assert_eq!(
            synthesize(vec![mk(3), mk(1)]).unwrap().local_weights(),
            &[0.75, 0.25]
        );
        assert!(matches!(synthesize(vec![]), Err(Error::EmptySamplerSet)));
    }

    #[test]
    fn mixing_identical_locals_keeps_density() {
        let g = GmmSampler::isotropic(
            vec![
                Configuration::new(vec![0.1, 0.2]),
                Configuration::new(vec![-0.3, 1.0]),
            ],
            0.2,
        )
        .unwrap();
        let one = synthesize(vec![g.clone()]).unwrap();
        let two = synthesize(vec![g.clone(), g]).unwrap();
        let mut rng = seeded_rng(4);
        for _ in 0..50 {
            let q = sample_uniform(&full(2), &mut rng);
            let (a, b) = (one.density(&q), two.density(&q));
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn lambda_zero_matches_uniform_stream() {
        let g = GmmSampler::isotropic(vec![Configuration::zeros(3)], 0.1).unwrap();
        let gl = GlSampler::new(Some(synthesize(vec![g]).unwrap()), 0.0, full(3), 9).unwrap();
        let uni = GlSampler::uniform(full(3), 9);
        let (mut r1, mut r2) = (gl.stream(), uni.stream());
        for _ in 0..1000 {
            let (a, b) = (gl.draw(&mut r1), uni.draw(&mut r2));
            assert!(!a.biased);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lambda_one_always_biased() {
        let g = GmmSampler::isotropic(vec![Configuration::zeros(3)], 0.1).unwrap();
        let gl = GlSampler::new(Some(synthesize(vec![g]).unwrap()), 1.0, full(3), 5).unwrap();
        let mut rng = gl.stream();
        assert!((0..1000).all(|_| gl.draw(&mut rng).biased));
        assert!(GlSampler::new(None, 1.5, full(3), 0).is_err());
        assert_eq!(
            GlSampler::new(None, 0.7, full(3), 0)
                .unwrap()
                .effective_lambda(),
            0.0
        );
    }

    #[test]
    fn seeded_streams_repeat() {
        let g = GmmSampler::isotropic(
            vec![Configuration::zeros(4), Configuration::new(vec![1.0; 4])],
            0.1,
        )
        .unwrap();
        let gl = GlSampler::new(Some(synthesize(vec![g]).unwrap()), 0.5, full(4), 77).unwrap();
        let a: Vec<_> = {
            let mut r = gl.stream();
            (0..200).map(|_| gl.sample(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = gl.stream();
            (0..200).map(|_| gl.sample(&mut r)).collect()
        };
        let bits = |v: &[Configuration]| {
            v.iter()
                .flat_map(|q| q.angles().iter().map(|x| x.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}
