//! Seeded two-class data with a known variance contrast.
//!
//! Generation is pinned so a seed reproduces the same dataset everywhere:
//!
//! 1. A `ChaCha8Rng` is seeded with `seed_from_u64(seed)`.
//! 2. A `c × c` matrix of standard normals (column-major draw order) is
//!    QR-factorized; `Q` with columns flipped so `diag(R) > 0` is the
//!    orthogonal mixing matrix.
//! 3. Class 1 trials are drawn first, then class 2. For each trial the
//!    `c × T` latent sources are drawn row by row: source 1 has variance
//!    `variance_ratio` in class 1 and 1 in class 2, source 2 the reverse,
//!    all others unit variance.
//! 4. The trial is `Q · S` plus, when `noise_sd > 0`, a `c × T` block of
//!    `noise_sd`-scaled normals drawn row by row.
//!
//! Normals come from `rand_distr::StandardNormal`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::csp::{LabeledDataset, Trial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub channels: usize,
    pub samples: usize,
    pub n1: usize,
    pub n2: usize,
    pub variance_ratio: f64,
    pub noise_sd: f64,
    pub seed: u64,
    pub labels: [String; 2],
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            channels: 6,
            samples: 200,
            n1: 30,
            n2: 30,
            variance_ratio: 10.0,
            noise_sd: 0.1,
            seed: 7,
            labels: ["C1".to_string(), "C2".to_string()],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 {
            return Err(Error::Config(format!(
                "need at least 2 channels, got {}",
                self.channels
            )));
        }
        if self.samples < 2 {
            return Err(Error::Config(format!(
                "need at least 2 samples per trial, got {}",
                self.samples
            )));
        }
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::Config(format!(
                "need at least 2 trials per class, got {} and {}",
                self.n1, self.n2
            )));
        }
        if !(self.variance_ratio > 1.0 && self.variance_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "variance_ratio must be finite and greater than 1, got {}",
                self.variance_ratio
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!(
                "noise_sd must be finite and non-negative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_orthogonal(rng: &mut ChaCha8Rng, c: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(c, c, |_, _| normal(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

fn draw_rows(rng: &mut ChaCha8Rng, c: usize, t: usize, sd: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(c, t);
    for i in 0..c {
        let s = sd(i);
        for j in 0..t {
            m[(i, j)] = s * normal(rng);
        }
    }
    m
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (c, t) = (spec.channels, spec.samples);
    let mixing = random_orthogonal(&mut rng, c);
    let boosted = spec.variance_ratio.sqrt();
    let mut trial = |class: usize| -> Result<Trial> {
        let sources = draw_rows(&mut rng, c, t, |i| match (i, class) {
            (0, 0) | (1, 1) => boosted,
            _ => 1.0,
        });
        let mut x = &mixing * sources;
        if spec.noise_sd > 0.0 {
            x += draw_rows(&mut rng, c, t, |_| spec.noise_sd);
        }
        Trial::new(x)
    };
    let class1 = (0..spec.n1).map(|_| trial(0)).collect::<Result<Vec<_>>>()?;
    let class2 = (0..spec.n2).map(|_| trial(1)).collect::<Result<Vec<_>>>()?;
    let [l1, l2] = spec.labels.clone();
    LabeledDataset::new(l1, class1, l2, class2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec {
            n1: 3,
            n2: 3,
            samples: 20,
            ..Default::default()
        };
        assert_eq!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&spec).unwrap()
        );
        let other = SyntheticSpec {
            seed: 8,
            ..spec.clone()
        };
        assert_ne!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&other).unwrap()
        );
    }

    #[test]
    fn mixing_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_orthogonal(&mut rng, 7);
        let err = (q.transpose() * &q - DMatrix::identity(7, 7)).amax();
        assert!(err < 1e-12);
    }

    #[test]
    fn shape_and_labels() {
        let data = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(data.counts(), [30, 30]);
        assert_eq!(data.channels(), 6);
        assert_eq!(data.class(0)[0].samples(), 200);
        assert_eq!(data.labels(), ["C1", "C2"]);
    }

    #[test]
    fn validation() {
        let bad_ratio = SyntheticSpec {
            variance_ratio: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            generate_synthetic(&bad_ratio),
            Err(Error::Config(_))
        ));
        let bad_noise = SyntheticSpec {
            noise_sd: -0.1,
            ..Default::default()
        };
        assert!(generate_synthetic(&bad_noise).is_err());
        let one_channel = SyntheticSpec {
            channels: 1,
            ..Default::default()
        };
        assert!(generate_synthetic(&one_channel).is_err());
    }
}
