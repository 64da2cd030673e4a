//! Ideal polymer chain models and their ensemble statistics.
//!
//! Two models are provided: the freely-jointed chain (independent bonds of
//! fixed length and uniform orientation, i.e. a plain random walk) and the
//! freely-rotating chain (each bond at a fixed angle from its predecessor,
//! with uniform azimuth). The freely-rotating chain is the reference model
//! for locally self-avoiding walks: bond correlations decay as
//! `cos(theta)^k = exp(-k / Lp)`.

use alloc::format;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gyration::gyration_squared_batch;
use crate::math;
use crate::rng::{substream, StreamRng};
use crate::vector::{self, Vector};

/// Persistence number `Lp = 1 / |ln cos(theta)|`.
pub fn persistence_number(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "persistence number needs 0 < theta < pi/2, got {theta}"
        )));
    }
    Ok(1.0 / math::ln(math::cos(theta)).abs())
}

/// Squared effective bond length `b0^2 (1 + cos theta) / (1 - cos theta)`.
pub fn effective_bond_length_sq(theta: f64, b0: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::domain(format!(
            "effective bond length needs 0 < theta <= pi, got {theta}"
        )));
    }
    if !(b0 > 0.0) {
        return Err(Error::domain("bond length must be positive"));
    }
    let c = math::cos(theta);
    Ok(b0 * b0 * (1.0 + c) / (1.0 - c))
}

/// Expansion ratio `(1 + e^{-1/Lp}) / (1 - e^{-1/Lp})` of a persistent walk
/// over a random walk with the same step count and bond length.
pub fn expansion_ratio(lp: f64) -> Result<f64> {
    if !(lp > 0.0) {
        return Err(Error::domain(format!("persistence number must be > 0, got {lp}")));
    }
    let e = math::exp(-1.0 / lp);
    Ok((1.0 + e) / (1.0 - e))
}

/// A chain of states with its bond vectors, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    dim: usize,
    states: Vec<f64>,
    bonds: Vec<f64>,
}

impl Chain {
    /// Builds a chain from its states; bonds are derived.
    pub fn from_states<S: AsRef<[f64]>>(states: &[S]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InsufficientData("a chain needs >= 1 state".into()))?;
        let dim = first.as_ref().len();
        if dim == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        let mut flat = Vec::with_capacity(dim * states.len());
        for s in states {
            crate::error::check_dim(dim, s.as_ref().len())?;
            flat.extend_from_slice(s.as_ref());
        }
        Ok(Self::from_flat(dim, flat))
    }

    fn from_flat(dim: usize, states: Vec<f64>) -> Self {
        let n = states.len() / dim;
        let mut bonds = Vec::with_capacity(dim * n.saturating_sub(1));
        for i in 1..n {
            for j in 0..dim {
                bonds.push(states[i * dim + j] - states[(i - 1) * dim + j]);
            }
        }
        Chain { dim, states, bonds }
    }

    /// Builds a chain starting at the origin from its bonds.
    fn from_bonds(dim: usize, bonds: Vec<f64>) -> Self {
        let n_bonds = bonds.len() / dim;
        let mut states = Vec::with_capacity(dim * (n_bonds + 1));
        states.extend(core::iter::repeat_n(0.0, dim));
        for i in 0..n_bonds {
            for j in 0..dim {
                let prev = states[i * dim + j];
                states.push(prev + bonds[i * dim + j]);
            }
        }
        Chain { dim, states, bonds }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len() / self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Bond `i` (0-based), `states[i + 1] - states[i]`.
    pub fn bond(&self, i: usize) -> &[f64] {
        &self.bonds[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn bonds(&self) -> impl Iterator<Item = &[f64]> {
        self.bonds.chunks_exact(self.dim)
    }

    /// End-to-end vector `U = sum of bonds`.
    pub fn end_to_end(&self) -> Vector {
        vector::sub(self.state(self.len() - 1), self.state(0)).into()
    }

    /// Squared radius of gyration of the chain's states.
    pub fn gyration_sq(&self) -> Result<f64> {
        let states: Vec<&[f64]> = self.states().collect();
        gyration_squared_batch(&states)
    }
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R, out: &mut [f64]) {
    loop {
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        let n = vector::norm(out);
        if n > 1e-12 {
            out.iter_mut().for_each(|x| *x /= n);
            return;
        }
        debug_assert_eq!(out.len(), dim);
    }
}

fn check_chain_args(dim: usize, n_bonds: usize, b0: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    if n_bonds == 0 {
        return Err(Error::domain("need at least one bond"));
    }
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(Error::domain(format!("bond length must be positive, got {b0}")));
    }
    Ok(())
}

/// Freely-jointed chain from the origin: i.i.d. bonds of length `b0` with
/// uniform orientation.
pub fn generate_fjc<R: Rng + ?Sized>(
    dim: usize,
    n_bonds: usize,
    b0: f64,
    rng: &mut R,
) -> Result<Chain> {
    check_chain_args(dim, n_bonds, b0)?;
    let mut bonds = alloc::vec![0.0; dim * n_bonds];
    for b in bonds.chunks_exact_mut(dim) {
        random_unit(dim, rng, b);
        b.iter_mut().for_each(|x| *x *= b0);
    }
    Ok(Chain::from_bonds(dim, bonds))
}

/// Freely-rotating chain from the origin: the first bond is uniform on the
/// sphere, every next bond sits at angle `theta` from its predecessor with
/// a uniform direction in the orthogonal complement (a fair sign in 2D).
pub fn generate_frc<R: Rng + ?Sized>(
    dim: usize,
    n_bonds: usize,
    b0: f64,
    theta: f64,
    rng: &mut R,
) -> Result<Chain> {
    check_chain_args(dim, n_bonds, b0)?;
    if dim < 2 {
        return Err(Error::Unsupported(
            "freely-rotating chains need dimension >= 2".into(),
        ));
    }
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "correlation angle must be in (0, pi/2), got {theta}"
        )));
    }
    let (c, s) = (math::cos(theta), math::sin(theta));
    let mut bonds = alloc::vec![0.0; dim * n_bonds];
    let mut u = alloc::vec![0.0; dim];
    let mut v = alloc::vec![0.0; dim];
    random_unit(dim, rng, &mut u);
    bonds[..dim].iter_mut().zip(&u).for_each(|(b, x)| *b = b0 * x);
    for i in 1..n_bonds {
        perpendicular_unit(&u, rng, &mut v);
        for j in 0..dim {
            u[j] = c * u[j] + s * v[j];
        }
        // renormalise so round-off never accumulates along the chain
        let n = vector::norm(&u);
        u.iter_mut().for_each(|x| *x /= n);
        bonds[i * dim..(i + 1) * dim]
            .iter_mut()
            .zip(&u)
            .for_each(|(b, x)| *b = b0 * x);
    }
    Ok(Chain::from_bonds(dim, bonds))
}

/// Uniform unit vector orthogonal to the unit vector `u`.
pub(crate) fn perpendicular_unit<R: Rng + ?Sized>(u: &[f64], rng: &mut R, out: &mut [f64]) {
    if u.len() == 2 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        out[0] = -sign * u[1];
        out[1] = sign * u[0];
        return;
    }
    loop {
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        let p = vector::dot(out, u);
        out.iter_mut().zip(u).for_each(|(x, ui)| *x -= p * ui);
        let n = vector::norm(out);
        if n > 1e-9 {
            out.iter_mut().for_each(|x| *x /= n);
            return;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "lowercase"))]
pub enum ChainModel {
    Fjc,
    Frc { theta: f64 },
}

impl ChainModel {
    pub fn generate<R: Rng + ?Sized>(
        &self,
        dim: usize,
        n_bonds: usize,
        b0: f64,
        rng: &mut R,
    ) -> Result<Chain> {
        match *self {
            ChainModel::Fjc => generate_fjc(dim, n_bonds, b0, rng),
            ChainModel::Frc { theta } => generate_frc(dim, n_bonds, b0, theta, rng),
        }
    }
}

/// Lazily generated ensemble; chain `i` uses sub-stream `i` of `seed`.
pub fn ensemble(
    model: ChainModel,
    dim: usize,
    n_bonds: usize,
    b0: f64,
    n_chains: usize,
    seed: u64,
) -> impl Iterator<Item = Result<Chain>> {
    (0..n_chains).map(move |i| {
        let mut rng: StreamRng = substream(seed, i as u64);
        model.generate(dim, n_bonds, b0, &mut rng)
    })
}

/// Mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Welford running mean/variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMean {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two partial accumulations (Chan et al. pairwise update).
    pub fn merge(&mut self, other: &RunningMean) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        let se = if self.n < 2 {
            0.0
        } else {
            math::sqrt(self.variance() / self.n as f64)
        };
        Estimate {
            mean: self.mean,
            se,
        }
    }
}

/// Ensemble averages over a set of chains.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub n_chains: usize,
    pub n_bonds: usize,
    /// `C(k)` for `k = 0..=max_lag`: mean of `w_i . w_{i+k}` over chains and
    /// positions, normalised by the mean squared bond length.
    pub correlation: Vec<Estimate>,
    pub mean_bond_sq: f64,
    pub end_to_end_sq: Estimate,
    pub end_to_end: Estimate,
    pub gyration_sq: Estimate,
    pub gyration: Estimate,
}

/// Streaming accumulator behind [`ensemble_stats`].
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    max_lag: usize,
    shape: Option<(usize, usize)>,
    lag_products: Vec<RunningMean>,
    bond_sq: RunningMean,
    end_sq: RunningMean,
    end: RunningMean,
    gyr_sq: RunningMean,
    gyr: RunningMean,
}

impl EnsembleAccumulator {
    pub fn new(max_lag: usize) -> Self {
        EnsembleAccumulator {
            max_lag,
            shape: None,
            lag_products: alloc::vec![RunningMean::default(); max_lag + 1],
            bond_sq: RunningMean::default(),
            end_sq: RunningMean::default(),
            end: RunningMean::default(),
            gyr_sq: RunningMean::default(),
            gyr: RunningMean::default(),
        }
    }

    pub fn push(&mut self, chain: &Chain) -> Result<()> {
        let shape = (chain.dim(), chain.n_bonds());
        match self.shape {
            None => {
                if self.max_lag >= shape.1 {
                    return Err(Error::domain(format!(
                        "max_lag {} must be below the bond count {}",
                        self.max_lag, shape.1
                    )));
                }
                self.shape = Some(shape);
            }
            Some(s) if s != shape => {
                return Err(Error::domain(
                    "all chains in an ensemble must share dimension and length",
                ))
            }
            Some(_) => {}
        }
        let (dim, nb) = shape;
        let bonds = &chain.bonds;
        for (k, acc) in self.lag_products.iter_mut().enumerate() {
            let mut sum = 0.0;
            for i in 0..nb - k {
                sum += vector::dot(&bonds[i * dim..(i + 1) * dim], &bonds[(i + k) * dim..(i + k + 1) * dim]);
            }
            acc.push(sum / (nb - k) as f64);
        }
        let bsq = chain.bonds().map(vector::norm_sq).sum::<f64>() / nb as f64;
        self.bond_sq.push(bsq);
        let u2 = chain.end_to_end().norm_sq();
        self.end_sq.push(u2);
        self.end.push(math::sqrt(u2));
        let g2 = chain.gyration_sq()?;
        self.gyr_sq.push(g2);
        self.gyr.push(math::sqrt(g2));
        Ok(())
    }

    /// Folds in an accumulator fed with other chains of the same shape.
    pub fn merge(&mut self, other: &EnsembleAccumulator) -> Result<()> {
        if self.max_lag != other.max_lag {
            return Err(Error::domain("cannot merge accumulators with different max_lag"));
        }
        match (self.shape, other.shape) {
            (_, None) => return Ok(()),
            (Some(a), Some(b)) if a != b => {
                return Err(Error::domain(
                    "all chains in an ensemble must share dimension and length",
                ))
            }
            _ => self.shape = other.shape,
        }
        for (a, b) in self.lag_products.iter_mut().zip(&other.lag_products) {
            a.merge(b);
        }
        self.bond_sq.merge(&other.bond_sq);
        self.end_sq.merge(&other.end_sq);
        self.end.merge(&other.end);
        self.gyr_sq.merge(&other.gyr_sq);
        self.gyr.merge(&other.gyr);
        Ok(())
    }

    pub fn finish(&self) -> Result<EnsembleSummary> {
        let (_, n_bonds) = self
            .shape
            .ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
        let norm = self.bond_sq.mean();
        let correlation = self
            .lag_products
            .iter()
            .map(|acc| {
                let e = acc.estimate();
                Estimate {
                    mean: e.mean / norm,
                    se: e.se / norm,
                }
            })
            .collect();
        Ok(EnsembleSummary {
            n_chains: self.end_sq.count(),
            n_bonds,
            correlation,
            mean_bond_sq: norm,
            end_to_end_sq: self.end_sq.estimate(),
            end_to_end: self.end.estimate(),
            gyration_sq: self.gyr_sq.estimate(),
            gyration: self.gyr.estimate(),
        })
    }
}

/// Ensemble estimators of the bond correlation function, squared end-to-end
/// distance and squared radius of gyration.
pub fn ensemble_stats<I, C>(chains: I, max_lag: usize) -> Result<EnsembleSummary>
where
    I: IntoIterator<Item = C>,
    C: Borrow<Chain>,
{
    let mut acc = EnsembleAccumulator::new(max_lag);
    for c in chains {
        acc.push(c.borrow())?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn merged_accumulators_match_sequential() {
        let chains: Vec<Chain> = ensemble(ChainModel::Frc { theta: 0.3 }, 3, 20, 1.0, 30, 5)
            .collect::<Result<_>>()
            .unwrap();
        let whole = ensemble_stats(&chains, 5).unwrap();
        let mut a = EnsembleAccumulator::new(5);
        let mut b = EnsembleAccumulator::new(5);
        for c in &chains[..11] {
            a.push(c).unwrap();
        }
        for c in &chains[11..] {
            b.push(c).unwrap();
        }
        a.merge(&b).unwrap();
        let merged = a.finish().unwrap();
        assert_eq!(merged.n_chains, 30);
        assert!((merged.end_to_end_sq.mean - whole.end_to_end_sq.mean).abs() < 1e-9);
        assert!((merged.end_to_end_sq.se - whole.end_to_end_sq.se).abs() < 1e-9);
        for (x, y) in merged.correlation.iter().zip(&whole.correlation) {
            assert!((x.mean - y.mean).abs() < 1e-12);
        }
        let mut empty = EnsembleAccumulator::new(5);
        empty.merge(&EnsembleAccumulator::new(5)).unwrap();
        assert!(empty.finish().is_err());
        assert!(empty.merge(&EnsembleAccumulator::new(4)).is_err());
    }

    #[test]
    fn persistence_number_examples() {
        let t = math::acos(math::exp(-1.0));
        assert!((persistence_number(t).unwrap() - 1.0).abs() < 1e-12);
        // reference value from an independent mpmath evaluation
        assert!((persistence_number(0.2).unwrap() - 49.665_322_643_425).abs() < 1e-9);
        assert!(persistence_number(0.0).is_err());
        assert!(persistence_number(FRAC_PI_2).is_err());
        assert!(persistence_number(-0.1).is_err());
        assert!(persistence_number(1e-6).unwrap() > 1e11);
    }

    #[test]
    fn effective_bond_length_examples() {
        assert!((effective_bond_length_sq(FRAC_PI_2, 2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(effective_bond_length_sq(PI, 1.0).unwrap().abs() < 1e-15);
        assert!((effective_bond_length_sq(PI / 3.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(effective_bond_length_sq(0.0, 1.0).is_err());
    }

    #[test]
    fn expansion_ratio_examples() {
        assert!((expansion_ratio(1.0).unwrap() - 2.163_953_413_738_653).abs() < 1e-12);
        assert!((expansion_ratio(1e-3).unwrap() - 1.0).abs() < 1e-12);
        for lp in [0.1, 0.5, 1.0, 5.0, 50.0] {
            assert!(expansion_ratio(lp).unwrap() > 1.0);
        }
        assert!(expansion_ratio(0.0).is_err());
    }

    #[test]
    fn single_bond_fjc() {
        let mut rng = substream(1, 0);
        let c = generate_fjc(3, 1, 2.5, &mut rng).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.state(0), &[0.0, 0.0, 0.0]);
        assert!((vector::norm(c.bond(0)) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn fjc_in_one_dimension_is_a_sign_walk() {
        let mut rng = substream(2, 0);
        let c = generate_fjc(1, 50, 1.0, &mut rng).unwrap();
        assert!(c.bonds().all(|b| (b[0].abs() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn frc_rejects_bad_arguments() {
        let mut rng = substream(3, 0);
        assert!(matches!(
            generate_frc(1, 10, 1.0, 0.2, &mut rng),
            Err(Error::Unsupported(_))
        ));
        assert!(generate_frc(3, 10, 1.0, 0.0, &mut rng).is_err());
        assert!(generate_frc(3, 0, 1.0, 0.2, &mut rng).is_err());
        assert!(generate_fjc(3, 10, -1.0, &mut rng).is_err());
    }

    #[test]
    fn chain_from_states_derives_bonds() {
        let c = Chain::from_states(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(c.n_bonds(), 2);
        assert_eq!(c.bond(1), &[0.0, 2.0]);
        assert_eq!(c.end_to_end(), Vector::from([1.0, 2.0]));
    }

    #[test]
    fn ensemble_stats_errors() {
        let chains: Vec<Chain> = ensemble(ChainModel::Fjc, 2, 5, 1.0, 3, 9)
            .collect::<Result<_>>()
            .unwrap();
        assert!(ensemble_stats(&chains, 5).is_err());
        assert!(ensemble_stats(&chains, 4).is_ok());
        let empty: Vec<Chain> = vec![];
        assert!(ensemble_stats(&empty, 1).is_err());
        let other = generate_fjc(2, 6, 1.0, &mut substream(0, 0)).unwrap();
        assert!(ensemble_stats([&chains[0], &other], 1).is_err());
    }

    #[test]
    fn unit_bond_correlation_is_normalised() {
        let s = ensemble_stats(
            ensemble(ChainModel::Frc { theta: 0.3 }, 3, 40, 1.0, 50, 4).map(Result::unwrap),
            3,
        )
        .unwrap();
        assert!((s.correlation[0].mean - 1.0).abs() < 1e-12);
        // adjacent bonds sit at exactly theta
        assert!((s.correlation[1].mean - math::cos(0.3)).abs() < 1e-12);
    }

    #[test]
    fn fjc_small_ensemble_decorrelates() {
        let s = ensemble_stats(
            ensemble(ChainModel::Fjc, 3, 100, 1.0, 2000, 11).map(Result::unwrap),
            5,
        )
        .unwrap();
        for k in 1..=5 {
            assert!(s.correlation[k].mean.abs() < 5.0 * s.correlation[k].se + 1e-3);
        }
        assert!((s.end_to_end_sq.mean - 100.0).abs() < 4.0 * s.end_to_end_sq.se);
    }

    proptest! {
        #[test]
        fn frc_adjacent_cosine_is_exact(dim in 2usize..=8, theta in 0.01f64..1.5, seed in any::<u64>()) {
            let mut rng = substream(seed, 0);
            let c = generate_frc(dim, 64, 1.7, theta, &mut rng).unwrap();
            let ct = math::cos(theta);
            for i in 0..c.n_bonds() {
                prop_assert!((vector::norm(c.bond(i)) - 1.7).abs() < 1e-12);
                if i + 1 < c.n_bonds() {
                    let cos = vector::dot(c.bond(i), c.bond(i + 1)) / (1.7 * 1.7);
                    prop_assert!((cos - ct).abs() < 1e-12);
                }
            }
        }
    }
}
