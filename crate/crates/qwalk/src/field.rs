//! Per-site coin-angle layouts: homogeneous, two-region, explicit, disordered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CoinSpec;

/// How a [`CoinField`]'s angle tables were built; carried for output metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayoutKind {
    Homogeneous {
        coin: CoinSpec,
    },
    /// `inner` angles on `|x| ≤ boundary`, `outer` angles on `|x| > boundary`.
    TwoRegion {
        inner: CoinSpec,
        outer: CoinSpec,
        boundary: i32,
    },
    Explicit,
    /// Site-wise uniform offsets in `[-amplitude, amplitude)` added to a base
    /// layout, drawn from the ChaCha8 stream `(seed, stream)`.
    Disordered {
        amplitude: f64,
        seed: u64,
        stream: u64,
    },
}

/// Resolved per-site coin angles over the lattice `[-L, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinField {
    half_width: i32,
    theta1: Vec<f64>,
    theta2: Vec<f64>,
    layout: LayoutKind,
}

impl CoinField {
    fn validated(
        half_width: i32,
        theta1: Vec<f64>,
        theta2: Vec<f64>,
        layout: LayoutKind,
    ) -> Result<Self> {
        if half_width < 1 {
            return Err(Error::InvalidParameter(format!(
                "lattice half-width must be ≥ 1, got {half_width}"
            )));
        }
        let sites = 2 * half_width as usize + 1;
        if theta1.len() != sites || theta2.len() != sites {
            return Err(Error::SizeMismatch(format!(
                "angle tables of length {}/{} for {} sites",
                theta1.len(),
                theta2.len(),
                sites
            )));
        }
        if theta1.iter().chain(theta2.iter()).any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "coin angles must be finite".to_string(),
            ));
        }
        Ok(Self {
            half_width,
            theta1,
            theta2,
            layout,
        })
    }

    /// The same coin angles at every site.
    pub fn homogeneous(half_width: i32, coin: CoinSpec) -> Result<Self> {
        let sites = 2 * half_width.max(0) as usize + 1;
        Self::validated(
            half_width,
            vec![coin.theta1; sites],
            vec![coin.theta2; sites],
            LayoutKind::Homogeneous { coin },
        )
    }

    /// `inner` angles on `|x| ≤ boundary`, `outer` angles on `|x| > boundary`.
    pub fn two_region(
        half_width: i32,
        inner: CoinSpec,
        outer: CoinSpec,
        boundary: i32,
    ) -> Result<Self> {
        if boundary < 0 || boundary > half_width {
            return Err(Error::InvalidParameter(format!(
                "region boundary {boundary} outside lattice of half-width {half_width}"
            )));
        }
        let pick = |x: i32| if x.abs() <= boundary { inner } else { outer };
        let theta1 = (-half_width..=half_width).map(|x| pick(x).theta1).collect();
        let theta2 = (-half_width..=half_width).map(|x| pick(x).theta2).collect();
        Self::validated(
            half_width,
            theta1,
            theta2,
            LayoutKind::TwoRegion {
                inner,
                outer,
                boundary,
            },
        )
    }

    /// One [`CoinSpec`] per site, ordered `x = -L ..= L` (odd length).
    pub fn explicit(specs: &[CoinSpec]) -> Result<Self> {
        if specs.is_empty() || specs.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "explicit layout needs an odd number of sites, got {}",
                specs.len()
            )));
        }
        let half_width = (specs.len() / 2) as i32;
        Self::validated(
            half_width,
            specs.iter().map(|s| s.theta1).collect(),
            specs.iter().map(|s| s.theta2).collect(),
            LayoutKind::Explicit,
        )
    }

    /// Raw angle tables (used by periodicity tests; layout is marked
    /// [`LayoutKind::Explicit`]).
    pub fn from_tables(half_width: i32, theta1: Vec<f64>, theta2: Vec<f64>) -> Result<Self> {
        Self::validated(half_width, theta1, theta2, LayoutKind::Explicit)
    }

    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    pub fn num_sites(&self) -> usize {
        2 * self.half_width as usize + 1
    }

    pub fn layout(&self) -> &LayoutKind {
        &self.layout
    }

    fn site_index(&self, x: i32) -> usize {
        debug_assert!(x.abs() <= self.half_width);
        (x + self.half_width) as usize
    }

    pub fn theta1_at(&self, x: i32) -> f64 {
        self.theta1[self.site_index(x)]
    }

    pub fn theta2_at(&self, x: i32) -> f64 {
        self.theta2[self.site_index(x)]
    }

    pub(crate) fn theta1_table(&self) -> &[f64] {
        &self.theta1
    }

    pub(crate) fn theta2_table(&self) -> &[f64] {
        &self.theta2
    }
}

/// An inner/outer split of the lattice with the boundary at `|x| = boundary`
/// (the boundary sites take the inner angles).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionLayout {
    pub boundary: i32,
    pub inner: CoinSpec,
    pub outer: CoinSpec,
}

impl RegionLayout {
    /// Materializes the layout on a lattice of the given half-width.
    pub fn field(&self, half_width: i32) -> Result<CoinField> {
        CoinField::two_region(half_width, self.inner, self.outer, self.boundary)
    }
}

/// Static-disorder configuration: angle offsets are drawn uniformly from
/// `[-amplitude, amplitude)`, independently per site and per angle index, and
/// stay fixed for the whole run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DisorderSpec {
    /// Half-width of the offset interval, in radians.
    pub amplitude: f64,
    /// Base seed of the ChaCha8 generator; ensemble members use distinct
    /// streams of this seed.
    pub seed: u64,
    /// Number of disorder realizations per ensemble.
    pub ensemble_size: usize,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        Self {
            amplitude: std::f64::consts::PI / 20.0,
            seed: 3,
            ensemble_size: 10,
        }
    }
}

/// Draws one disorder realization on top of `base`.
///
/// The generator is `ChaCha8` seeded from `spec.seed` with the stream id set
/// to `stream` (one stream per ensemble member), so every member is
/// independently reproducible. Offsets are drawn site-ascending, `δθ₁` then
/// `δθ₂` at each site.
pub fn sample_disorder(base: &CoinField, spec: &DisorderSpec, stream: u64) -> CoinField {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let a = spec.amplitude;
    let mut theta1 = Vec::with_capacity(base.num_sites());
    let mut theta2 = Vec::with_capacity(base.num_sites());
    for i in 0..base.num_sites() {
        theta1.push(base.theta1[i] + a * (2.0 * rng.random::<f64>() - 1.0));
        theta2.push(base.theta2[i] + a * (2.0 * rng.random::<f64>() - 1.0));
    }
    CoinField {
        half_width: base.half_width,
        theta1,
        theta2,
        layout: LayoutKind::Disordered {
            amplitude: a,
            seed: spec.seed,
            stream,
        },
    }
}
