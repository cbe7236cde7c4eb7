//! Link channel gains for the four link classes and the Shannon rate.
//!
//! Distances are in meters and elevation angles in degrees. Gains are linear
//! power ratios (dimensionless).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::NodeKind;
use crate::scalar::Scalar;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Position3D<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    /// Linear channel gain at the 1 m reference distance.
    pub g0: T,
    /// Carrier frequency, Hz.
    pub carrier_freq: T,
    pub speed_of_light: T,
    /// Excess LoS loss, dB.
    pub eta_los: T,
    /// Excess NLoS loss, dB.
    pub eta_nlos: T,
    pub kappa1: T,
    /// Per degree.
    pub kappa2: T,
    /// Hz.
    pub bandwidth: T,
    /// Total noise power over the band, W.
    pub noise_power: T,
}

impl<T: Scalar> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            g0: T::of(1e-3),
            carrier_freq: T::of(0.1e9),
            speed_of_light: T::of(SPEED_OF_LIGHT),
            eta_los: T::of(0.1),
            eta_nlos: T::of(21.0),
            kappa1: T::of(10.0),
            kappa2: T::of(0.6),
            bandwidth: T::of(10e6),
            noise_power: T::of(7.96159e-13),
        }
    }
}

impl<T: Scalar> ChannelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g0", self.g0),
            ("carrier_freq", self.carrier_freq),
            ("speed_of_light", self.speed_of_light),
            ("eta_los", self.eta_los),
            ("eta_nlos", self.eta_nlos),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("bandwidth", self.bandwidth),
            ("noise_power", self.noise_power),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::domain(name, v.as_f64()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    /// Ground user to ground server.
    G2G,
    /// Ground user to HAP.
    G2H,
    /// Aerial user to ground server.
    A2G,
    /// Aerial user to HAP.
    A2H,
}

impl LinkKind {
    pub fn between(user: NodeKind, server: NodeKind) -> Result<Self> {
        match (user, server) {
            (NodeKind::GroundUser, NodeKind::GroundServer) => Ok(LinkKind::G2G),
            (NodeKind::GroundUser, NodeKind::Hap) => Ok(LinkKind::G2H),
            (NodeKind::AerialUser, NodeKind::GroundServer) => Ok(LinkKind::A2G),
            (NodeKind::AerialUser, NodeKind::Hap) => Ok(LinkKind::A2H),
            (u, s) => Err(Error::Structural(format!("no link class from {u:?} to {s:?}"))),
        }
    }
}

/// Euclidean distance and elevation angle (degrees, in `[0, 90]`) between two points.
pub fn link_geometry<T: Scalar>(a: &Position3D<T>, b: &Position3D<T>) -> Result<(T, T)> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let dz = b.z - a.z;
    let distance = (dx * dx + dy * dy + dz * dz).sqrt();
    if !(distance > T::zero()) {
        return Err(Error::DegenerateGeometry(format!(
            "coincident positions at ({}, {}, {})",
            a.x, a.y, a.z
        )));
    }
    let ratio = (dz.abs() / distance).min(T::one());
    Ok((distance, ratio.asin().to_degrees()))
}

fn check_distance<T: Scalar>(distance: T) -> Result<()> {
    if distance > T::zero() && distance.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("distance", distance.as_f64()))
    }
}

#[inline]
fn db_to_gain<T: Scalar>(loss_db: T) -> T {
    T::of(10.0).powf(-loss_db / T::of(10.0))
}

/// Free-space term `20 log10(4 pi fc l / c)` in dB.
fn free_space_db<T: Scalar>(distance: T, params: &ChannelParams<T>) -> T {
    let four_pi = T::of(4.0 * std::f64::consts::PI);
    T::of(20.0) * (four_pi * params.carrier_freq * distance / params.speed_of_light).log10()
}

pub fn g2g_gain<T: Scalar>(distance: T, g0: T) -> Result<T> {
    check_distance(distance)?;
    Ok(g0 / (distance * distance))
}

/// Sigmoid LoS probability for an elevation angle in degrees.
pub fn los_probability<T: Scalar>(elevation: T, kappa1: T, kappa2: T) -> T {
    T::one() / (T::one() + kappa1 * (-kappa2 * (elevation - kappa1)).exp())
}

/// G2H path loss in dB: free-space term plus the LoS-weighted excess loss.
pub fn g2h_path_loss<T: Scalar>(distance: T, elevation: T, params: &ChannelParams<T>) -> Result<T> {
    check_distance(distance)?;
    let rho = los_probability(elevation, params.kappa1, params.kappa2);
    Ok(free_space_db(distance, params) + rho * params.eta_los + (T::one() - rho) * params.eta_nlos)
}

pub fn g2h_gain<T: Scalar>(distance: T, elevation: T, params: &ChannelParams<T>) -> Result<T> {
    g2h_path_loss(distance, elevation, params).map(db_to_gain)
}

/// LoS and NLoS branch losses (dB) of the A2G model.
pub fn a2g_branch_losses<T: Scalar>(distance: T, params: &ChannelParams<T>) -> Result<(T, T)> {
    check_distance(distance)?;
    let fs = free_space_db(distance, params);
    Ok((fs + params.eta_los, fs + params.eta_nlos))
}

/// A2G path loss in dB for an explicit LoS probability.
pub fn a2g_path_loss_with_rho<T: Scalar>(distance: T, rho: T, params: &ChannelParams<T>) -> Result<T> {
    let (los, nlos) = a2g_branch_losses(distance, params)?;
    Ok(rho * los + (T::one() - rho) * nlos)
}

pub fn a2g_path_loss<T: Scalar>(distance: T, elevation: T, params: &ChannelParams<T>) -> Result<T> {
    let rho = los_probability(elevation, params.kappa1, params.kappa2);
    a2g_path_loss_with_rho(distance, rho, params)
}

pub fn a2g_gain<T: Scalar>(distance: T, elevation: T, params: &ChannelParams<T>) -> Result<T> {
    a2g_path_loss(distance, elevation, params).map(db_to_gain)
}

/// FSPL in dB with the 32.45 constant, which fixes frequency in MHz and distance in km.
pub fn a2h_path_loss<T: Scalar>(distance: T, params: &ChannelParams<T>) -> Result<T> {
    check_distance(distance)?;
    let fc_mhz = params.carrier_freq / T::of(1e6);
    let d_km = distance / T::of(1e3);
    Ok(T::of(32.45) + T::of(20.0) * fc_mhz.log10() + T::of(20.0) * d_km.log10())
}

pub fn a2h_gain<T: Scalar>(distance: T, params: &ChannelParams<T>) -> Result<T> {
    a2h_path_loss(distance, params).map(db_to_gain)
}

/// Gain of a link of the given class between two positions.
pub fn link_gain<T: Scalar>(
    kind: LinkKind,
    user: &Position3D<T>,
    server: &Position3D<T>,
    params: &ChannelParams<T>,
) -> Result<T> {
    let (distance, elevation) = link_geometry(user, server)?;
    match kind {
        LinkKind::G2G => g2g_gain(distance, params.g0),
        LinkKind::G2H => g2h_gain(distance, elevation, params),
        LinkKind::A2G => a2g_gain(distance, elevation, params),
        LinkKind::A2H => a2h_gain(distance, params),
    }
}

/// Shannon rate `B log2(1 + P g / sigma^2)` in bit/s.
pub fn link_rate<T: Scalar>(params: &ChannelParams<T>, tx_power: T, gain: T) -> Result<T> {
    if !(tx_power > T::zero()) {
        return Err(Error::domain("tx_power", tx_power.as_f64()));
    }
    if !(gain > T::zero()) {
        return Err(Error::domain("gain", gain.as_f64()));
    }
    if !(params.noise_power > T::zero()) {
        return Err(Error::domain("noise_power", params.noise_power.as_f64()));
    }
    let snr = tx_power * gain / params.noise_power;
    Ok(params.bandwidth * snr.ln_1p() / T::of(std::f64::consts::LN_2))
}
