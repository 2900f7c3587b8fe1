use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

/// Physical parameters. Units: `E_C = ħ = e = k_B = 1` by default, so every
/// energy, rate and temperature is measured in units of the charging energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub e_c: f64,
    /// Direct dot–dot tunneling amplitude.
    pub lambda0: C64,
    /// Dot 1 – Majorana amplitude.
    pub lambda1: C64,
    /// Dot 2 – Majorana amplitude.
    pub lambda2: C64,
    /// Flux phase enclosed by the interference loop, radians.
    pub phi: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Gate charge.
    pub n_g: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub temperature: f64,
}

impl Default for SystemParams {
    /// λ1 = λ2 = 0.1, λ0 = 0.01, Γ = 0.01, wide bias window ±0.05, T = 0.
    fn default() -> Self {
        Self {
            e_c: 1.0,
            lambda0: C64::from(0.01),
            lambda1: C64::from(0.1),
            lambda2: C64::from(0.1),
            phi: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            n_g: 0.0,
            gamma1: 0.01,
            gamma2: 0.01,
            mu1: 0.05,
            mu2: -0.05,
            temperature: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("e_c", self.e_c),
            ("phi", self.phi),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("n_g", self.n_g),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("temperature", self.temperature),
        ];
        for (name, v) in reals {
            if !v.is_finite() {
                return Err(Error::Contract(format!("parameter {name} is not finite")));
            }
        }
        for (name, z) in [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Contract(format!("parameter {name} is not finite")));
            }
        }
        if !(self.e_c > 0.0) {
            return Err(Error::Contract("e_c must be positive".into()));
        }
        if self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::Contract("tunneling rates must be non-negative".into()));
        }
        if self.temperature < 0.0 {
            return Err(Error::Contract("temperature must be non-negative".into()));
        }
        Ok(())
    }

    pub fn gamma(&self, reservoir: Reservoir) -> f64 {
        match reservoir {
            Reservoir::One => self.gamma1,
            Reservoir::Two => self.gamma2,
        }
    }

    pub fn mu(&self, reservoir: Reservoir) -> f64 {
        match reservoir {
            Reservoir::One => self.mu1,
            Reservoir::Two => self.mu2,
        }
    }

    /// Sets `Γ1 = Γ2 = gamma`.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma1 = gamma;
        self.gamma2 = gamma;
        self
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Self {
        self.lambda0 = C64::from(lambda0);
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Nearest even reference charge and the gate-charge offset from it,
    /// `δ = n_g − N_ref ∈ [−1, 1]`.
    pub fn gate_offset(&self) -> (i64, f64) {
        let n_ref = 2 * (self.n_g / 2.0).round() as i64;
        (n_ref, self.n_g - n_ref as f64)
    }
}

/// One of the two electron reservoirs; reservoir `j` is attached to dot `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reservoir {
    One,
    Two,
}

impl Reservoir {
    pub const BOTH: [Reservoir; 2] = [Reservoir::One, Reservoir::Two];

    pub fn index(self) -> usize {
        match self {
            Reservoir::One => 1,
            Reservoir::Two => 2,
        }
    }
}
