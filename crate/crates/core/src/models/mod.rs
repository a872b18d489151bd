//! System parameters, Hamiltonians, the Bloch-Siegert perturbative
//! eigensystem and exact parity-resolved diagonalization.

mod bloch_siegert;
mod eigen;
mod hamiltonians;

pub use bloch_siegert::{
    bs_doublet_energy, bs_eigensystem, bs_generator, bs_ground_energy, bs_mixing_angle,
    bs_unitary, doublet_coefficients,
};
pub(crate) use bloch_siegert::mixing_angle_or_limit;
pub use eigen::{
    diagonalize, labeled_eigensystem, rabi_eigensystem, DoubletSign, Eigensystem, Label,
    ADIABATIC_STEPS,
};
pub use hamiltonians::{
    bs_hamiltonian, dispersive_hamiltonian, excitation_number, jc_hamiltonian,
    modulated_dispersive_hamiltonian, rabi_hamiltonian,
};

use crate::error::{Error, Result};

/// Above this value of `Λ = g/Σ` second-order Bloch-Siegert results are
/// reported as unreliable.
pub const PERTURBATIVE_LAMBDA_LIMIT: f64 = 0.3;

/// Qubit splitting, resonator frequency and coupling, all in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega_a: f64,
    pub omega_r: f64,
    pub g: f64,
}

impl SystemParams {
    pub fn new(omega_a: f64, omega_r: f64, g: f64) -> Result<Self> {
        if !(omega_a.is_finite() && omega_a > 0.0) {
            return Err(Error::InvalidParameter(format!("omega_a must be > 0, got {omega_a}")));
        }
        if !(omega_r.is_finite() && omega_r > 0.0) {
            return Err(Error::InvalidParameter(format!("omega_r must be > 0, got {omega_r}")));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParameter(format!("g must be >= 0, got {g}")));
        }
        Ok(Self { omega_a, omega_r, g })
    }

    /// Parameters quoted as `ν = ω/2π` in GHz.
    pub fn from_ghz(nu_a: f64, nu_r: f64, nu_g: f64) -> Result<Self> {
        use crate::units::ghz;
        Self::new(ghz(nu_a), ghz(nu_r), ghz(nu_g))
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.omega_a, self.omega_r, g)
    }

    /// `Σ = ω_a + ω_r`
    pub fn sigma(&self) -> f64 {
        self.omega_a + self.omega_r
    }

    /// `Δ = ω_a − ω_r`
    pub fn delta(&self) -> f64 {
        self.omega_a - self.omega_r
    }

    /// `Λ = g/Σ`
    pub fn big_lambda(&self) -> f64 {
        self.g / self.sigma()
    }

    /// `μ = g²/Σ`, the Bloch-Siegert shift.
    pub fn mu(&self) -> f64 {
        self.g * self.g / self.sigma()
    }

    /// `ξ = gΛ/(2ω_r)`, the squeezing parameter of the transformation.
    pub fn xi(&self) -> f64 {
        self.g * self.big_lambda() / (2.0 * self.omega_r)
    }

    /// `ω̃_q = ω_a + μ`
    pub fn omega_q_tilde(&self) -> f64 {
        self.omega_a + self.mu()
    }

    /// `Δ_n^BS = Δ + 2μn`
    pub fn delta_bs(&self, n: usize) -> f64 {
        self.delta() + 2.0 * self.mu() * n as f64
    }

    fn nonzero_delta(&self) -> Result<f64> {
        let d = self.delta();
        if d == 0.0 {
            return Err(Error::InvalidParameter(
                "dispersive quantities need omega_a != omega_r".into(),
            ));
        }
        Ok(d)
    }

    /// `λ = g/Δ`
    pub fn lambda_disp(&self) -> Result<f64> {
        Ok(self.g / self.nonzero_delta()?)
    }

    /// `χ = g²/Δ`
    pub fn chi(&self) -> Result<f64> {
        Ok(self.g * self.g / self.nonzero_delta()?)
    }

    /// `ζ = g⁴/Δ³`
    pub fn zeta(&self) -> Result<f64> {
        Ok(self.g.powi(4) / self.nonzero_delta()?.powi(3))
    }

    /// Logs a warning when `Λ` exceeds [`PERTURBATIVE_LAMBDA_LIMIT`].
    pub fn check_perturbative(&self) -> bool {
        let l = self.big_lambda();
        let ok = l < PERTURBATIVE_LAMBDA_LIMIT;
        if !ok {
            log::warn!("Lambda = g/Sigma = {l:.3} outside the perturbative Bloch-Siegert regime");
        }
        ok
    }
}
