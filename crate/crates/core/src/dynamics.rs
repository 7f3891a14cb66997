//! Overdamped Langevin test models discretized by Euler-Maruyama, plus the
//! gambler's-ruin walk used as an exactly solvable model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_path::{ChainModel, MarkovChain};

/// A smooth potential on `R^D`.
pub trait Potential<const D: usize>: Send + Sync {
    fn value(&self, x: &[f64; D]) -> f64;
    fn gradient(&self, x: &[f64; D]) -> [f64; D];

    fn dimension(&self) -> usize {
        D
    }
}

/// `E(x) = mu * x` in one dimension: Brownian motion with constant drift `-mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPotential {
    pub mu: f64,
}

impl Potential<1> for LinearPotential {
    fn value(&self, x: &[f64; 1]) -> f64 {
        self.mu * x[0]
    }
    fn gradient(&self, _: &[f64; 1]) -> [f64; 1] {
        [self.mu]
    }
}

/// `E(x) = stiffness * x^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPotential {
    pub stiffness: f64,
}

impl Potential<1> for HarmonicPotential {
    fn value(&self, x: &[f64; 1]) -> f64 {
        0.5 * self.stiffness * x[0] * x[0]
    }
    fn gradient(&self, x: &[f64; 1]) -> [f64; 1] {
        [self.stiffness * x[0]]
    }
}

/// Two minima near `(+-1, 0)` joined by an upper and a lower channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiChannel;

impl BiChannel {
    const Y0: f64 = 1.0 / 3.0;
    const Y1: f64 = 5.0 / 3.0;
}

impl Potential<2> for BiChannel {
    fn value(&self, p: &[f64; 2]) -> f64 {
        let [x, y] = *p;
        let (y0, y1) = (y - Self::Y0, y - Self::Y1);
        0.2 * x.powi(4) + 0.2 * y0.powi(4) + 3.0 * (-x * x - y0 * y0).exp()
            - 3.0 * (-x * x - y1 * y1).exp()
            - 5.0 * (-(x - 1.0).powi(2) - y * y).exp()
            - 5.0 * (-(x + 1.0).powi(2) - y * y).exp()
    }

    fn gradient(&self, p: &[f64; 2]) -> [f64; 2] {
        let [x, y] = *p;
        let (y0, y1) = (y - Self::Y0, y - Self::Y1);
        let e1 = 3.0 * (-x * x - y0 * y0).exp();
        let e2 = 3.0 * (-x * x - y1 * y1).exp();
        let e3 = 5.0 * (-(x - 1.0).powi(2) - y * y).exp();
        let e4 = 5.0 * (-(x + 1.0).powi(2) - y * y).exp();
        let gx = 0.8 * x.powi(3) - 2.0 * x * e1 + 2.0 * x * e2 + 2.0 * (x - 1.0) * e3 + 2.0 * (x + 1.0) * e4;
        let gy = 0.8 * y0.powi(3) - 2.0 * y0 * e1 + 2.0 * y1 * e2 + 2.0 * y * e3 + 2.0 * y * e4;
        [gx, gy]
    }
}

/// Two-site discretization of the Allen-Cahn energy with coupling `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllenCahn {
    pub gamma: f64,
}

fn double_well(z: f64) -> f64 {
    z.powi(4) / 4.0 - z * z / 2.0
}

fn double_well_derivative(z: f64) -> f64 {
    z.powi(3) - z
}

impl Potential<2> for AllenCahn {
    fn value(&self, p: &[f64; 2]) -> f64 {
        let [x, y] = *p;
        self.gamma * (x - y).powi(2) + 0.5 * (double_well(x) + double_well(y))
    }

    fn gradient(&self, p: &[f64; 2]) -> [f64; 2] {
        let [x, y] = *p;
        let c = 2.0 * self.gamma * (x - y);
        [c + 0.5 * double_well_derivative(x), -c + 0.5 * double_well_derivative(y)]
    }
}

/// Central finite-difference Hessian of `potential` at `x`, built from the gradient.
pub fn hessian_fd<P: Potential<D>, const D: usize>(potential: &P, x: &[f64; D], h: f64) -> [[f64; D]; D] {
    let mut hess = [[0.0; D]; D];
    for j in 0..D {
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        let (gp, gm) = (potential.gradient(&xp), potential.gradient(&xm));
        for i in 0..D {
            hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    hess
}

/// Time step, inverse temperature and potential of an Euler-Maruyama scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinScheme<P> {
    pub dt: f64,
    pub beta: f64,
    pub potential: P,
}

impl<P> LangevinScheme<P> {
    pub fn new(potential: P, dt: f64, beta: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {dt}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { dt, beta, potential })
    }

    /// `sqrt(2 dt / beta)`.
    pub fn noise_scale(&self) -> f64 {
        (2.0 * self.dt / self.beta).sqrt()
    }
}

/// `x - dt grad E(x) + sqrt(2 dt / beta) draw`.
pub fn em_step<P: Potential<D>, const D: usize>(x: &[f64; D], scheme: &LangevinScheme<P>, draw: &[f64; D]) -> [f64; D] {
    let g = scheme.potential.gradient(x);
    let s = scheme.noise_scale();
    std::array::from_fn(|i| x[i] - scheme.dt * g[i] + s * draw[i])
}

fn distance<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// Open regions used for `A` and `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region<const D: usize> {
    /// First coordinate strictly below the bound.
    Below(f64),
    /// First coordinate strictly above the bound.
    Above(f64),
    /// Open Euclidean ball.
    Ball { center: [f64; D], radius: f64 },
}

impl<const D: usize> Region<D> {
    pub fn contains(&self, x: &[f64; D]) -> bool {
        match self {
            Region::Below(b) => x[0] < *b,
            Region::Above(b) => x[0] > *b,
            Region::Ball { center, radius } => distance(x, center) < *radius,
        }
    }
}

/// Which reaction coordinate a 2-D model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiChoice {
    /// Distance to the minimum in `A`.
    Xi1,
    /// `|m_B - m_A|` minus the distance to the minimum in `B`.
    Xi2,
    /// Abscissa.
    Xi3,
    /// Mean of the coordinates.
    Xi4,
}

impl std::fmt::Display for XiChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            XiChoice::Xi1 => "xi1",
            XiChoice::Xi2 => "xi2",
            XiChoice::Xi3 => "xi3",
            XiChoice::Xi4 => "xi4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactionCoordinate<const D: usize> {
    /// First coordinate.
    Abscissa,
    DistanceFrom([f64; D]),
    /// `offset - |x - target|`.
    Approach { target: [f64; D], offset: f64 },
    Mean,
}

impl<const D: usize> ReactionCoordinate<D> {
    pub fn eval(&self, x: &[f64; D]) -> f64 {
        match self {
            ReactionCoordinate::Abscissa => x[0],
            ReactionCoordinate::DistanceFrom(c) => distance(x, c),
            ReactionCoordinate::Approach { target, offset } => offset - distance(x, target),
            ReactionCoordinate::Mean => x.iter().sum::<f64>() / D as f64,
        }
    }
}

/// Where paths are classified into upper and lower transition channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// A path crosses at its first index with abscissa strictly above this value.
    pub crossing_abscissa: f64,
    /// Crossings with ordinate strictly above this value belong to the upper channel.
    pub upper_threshold: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            crossing_abscissa: 0.0,
            upper_threshold: 0.5,
        }
    }
}

/// Euler-Maruyama chain between two regions.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinChain<P, const D: usize> {
    pub scheme: LangevinScheme<P>,
    pub x0: [f64; D],
    pub a: Region<D>,
    pub b: Region<D>,
    pub xi: ReactionCoordinate<D>,
    pub channels: Option<ChannelSpec>,
}

impl<P: Potential<D>, const D: usize> MarkovChain for LangevinChain<P, D> {
    type Point = [f64; D];

    fn initial(&self) -> [f64; D] {
        self.x0
    }

    fn step<R: Rng + ?Sized>(&self, x: &[f64; D], rng: &mut R) -> [f64; D] {
        let draw: [f64; D] = std::array::from_fn(|_| rng.sample(StandardNormal));
        em_step(x, &self.scheme, &draw)
    }

    fn in_a(&self, x: &[f64; D]) -> bool {
        self.a.contains(x)
    }

    fn in_b(&self, x: &[f64; D]) -> bool {
        self.b.contains(x)
    }

    fn xi(&self, x: &[f64; D]) -> f64 {
        self.xi.eval(x)
    }
}

pub type DriftedBmModel = ChainModel<LangevinChain<LinearPotential, 1>>;
pub type BiChannelModel = ChainModel<LangevinChain<BiChannel, 2>>;
pub type AllenCahnModel = ChainModel<LangevinChain<AllenCahn, 2>>;

/// Default time step of the one-dimensional model.
pub const DT_1D: f64 = 0.1;
/// Default time step of the two-dimensional models.
pub const DT_2D: f64 = 0.05;
/// Default radius of the balls `A` and `B` in two dimensions.
pub const RHO: f64 = 0.05;

/// Brownian motion with drift `-mu` started at 1, `A = ]-inf, a[`, `B = ]b, +inf[`, `z_max = b`.
pub fn drifted_bm_model(mu: f64, beta: f64, dt: f64, a: f64, b: f64) -> Result<DriftedBmModel> {
    let x0 = 1.0;
    if !(mu > 0.0) {
        return Err(Error::config(format!("mu must be positive, got {mu}")));
    }
    if !(a < x0 && x0 <= b) {
        return Err(Error::config(format!("need a < 1 <= b, got a = {a}, b = {b}")));
    }
    let chain = LangevinChain {
        scheme: LangevinScheme::new(LinearPotential { mu }, dt, beta)?,
        x0: [x0],
        a: Region::Below(a),
        b: Region::Above(b),
        xi: ReactionCoordinate::Abscissa,
        channels: None,
    };
    Ok(ChainModel::new(chain, b))
}

fn two_well_model<P: Potential<2>>(
    potential: P,
    beta: f64,
    rho: f64,
    xi: XiChoice,
    x0: [f64; 2],
    m_a: [f64; 2],
    m_b: [f64; 2],
    z_max: f64,
    channels: Option<ChannelSpec>,
) -> Result<ChainModel<LangevinChain<P, 2>>> {
    if !(rho > 0.0) {
        return Err(Error::config(format!("rho must be positive, got {rho}")));
    }
    let xi = match xi {
        XiChoice::Xi1 => ReactionCoordinate::DistanceFrom(m_a),
        XiChoice::Xi2 => ReactionCoordinate::Approach {
            target: m_b,
            offset: distance(&m_a, &m_b),
        },
        XiChoice::Xi3 => ReactionCoordinate::Abscissa,
        XiChoice::Xi4 => ReactionCoordinate::Mean,
    };
    let a = Region::Ball { center: m_a, radius: rho };
    let b = Region::Ball { center: m_b, radius: rho };
    if a.contains(&x0) || b.contains(&x0) {
        return Err(Error::config("starting point lies in A or B"));
    }
    let chain = LangevinChain {
        scheme: LangevinScheme::new(potential, DT_2D, beta)?,
        x0,
        a,
        b,
        xi,
        channels,
    };
    Ok(ChainModel::new(chain, z_max))
}

/// The bi-channel model started at `(-0.9, 0)` with `A`, `B` balls around `(-1, 0)`, `(1, 0)`.
pub fn bichannel_model(beta: f64, rho: f64, xi: XiChoice) -> Result<BiChannelModel> {
    let z_max = match xi {
        XiChoice::Xi1 | XiChoice::Xi2 => 1.9,
        XiChoice::Xi3 => 0.9,
        XiChoice::Xi4 => return Err(Error::config("xi4 is only defined for the allen-cahn model")),
    };
    two_well_model(
        BiChannel,
        beta,
        rho,
        xi,
        [-0.9, 0.0],
        [-1.0, 0.0],
        [1.0, 0.0],
        z_max,
        Some(ChannelSpec::default()),
    )
}

/// The Allen-Cahn model started at `(-0.9, -0.9)` with `A`, `B` balls around `(-1, -1)`, `(1, 1)`.
pub fn allen_cahn_model(gamma: f64, beta: f64, rho: f64, xi: XiChoice) -> Result<AllenCahnModel> {
    if !gamma.is_finite() {
        return Err(Error::config(format!("gamma must be finite, got {gamma}")));
    }
    let z_max = match xi {
        XiChoice::Xi1 | XiChoice::Xi2 => 7.6f64.sqrt(),
        XiChoice::Xi3 | XiChoice::Xi4 => 0.9,
    };
    two_well_model(
        AllenCahn { gamma },
        beta,
        rho,
        xi,
        [-0.9, -0.9],
        [-1.0, -1.0],
        [1.0, 1.0],
        z_max,
        None,
    )
}

impl<P: Potential<D>, const D: usize> ChainModel<LangevinChain<P, D>> {
    pub fn with_time_step(mut self, dt: f64) -> Result<Self> {
        self.chain.scheme = LangevinScheme::new(self.chain.scheme.potential, dt, self.chain.scheme.beta)?;
        Ok(self)
    }
}

/// Nearest-neighbour walk on `{0, ..., top}` absorbed at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GamblersRuin {
    pub p_up: f64,
    pub start: u32,
    pub top: u32,
}

impl MarkovChain for GamblersRuin {
    type Point = [f64; 1];

    fn initial(&self) -> [f64; 1] {
        [self.start as f64]
    }

    fn step<R: Rng + ?Sized>(&self, x: &[f64; 1], rng: &mut R) -> [f64; 1] {
        if rng.random::<f64>() < self.p_up {
            [x[0] + 1.0]
        } else {
            [x[0] - 1.0]
        }
    }

    fn in_a(&self, x: &[f64; 1]) -> bool {
        x[0] <= 0.0
    }

    fn in_b(&self, x: &[f64; 1]) -> bool {
        x[0] >= self.top as f64
    }

    fn xi(&self, x: &[f64; 1]) -> f64 {
        x[0]
    }
}

/// Gambler's ruin with `A = {0}`, `B = {top}`, identity coordinate and `z_max = top - 1`.
pub fn gamblers_ruin_model(p_up: f64, start: u32, top: u32) -> Result<ChainModel<GamblersRuin>> {
    if !(p_up > 0.0 && p_up < 1.0) {
        return Err(Error::config(format!("p_up must lie in (0, 1), got {p_up}")));
    }
    if !(0 < start && start < top) {
        return Err(Error::config(format!("need 0 < start < top, got start = {start}, top = {top}")));
    }
    Ok(ChainModel::new(GamblersRuin { p_up, start, top }, top as f64 - 1.0))
}
