//! Compressible-Euler state algebra at a single node: conserved variables,
//! pressure reconstruction, wave speeds and physical fluxes.

/// Conserved state at one node. `mom[1]` is unused in 1D.
#[derive(Debug, Clone, Copy)]
pub struct NodeState {
    pub rho: f64,
    pub mom: [f64; 2],
    pub energy: f64,
    pub dim: usize,
}

impl NodeState {
    pub fn from_unknowns(vals: &[f64], dim: usize) -> Self {
        match dim {
            1 => Self { rho: vals[0], mom: [vals[1], 0.0], energy: vals[2], dim },
            2 => Self { rho: vals[0], mom: [vals[1], vals[2]], energy: vals[3], dim },
            _ => unreachable!("dim is 1 or 2"),
        }
    }

    /// Ideal-gas pressure p = (gamma - 1)(rho E - |rho v|^2 / (2 rho)).
    pub fn pressure(&self, gamma: f64) -> f64 {
        let kinetic = (self.mom[0] * self.mom[0] + self.mom[1] * self.mom[1]) / (2.0 * self.rho);
        (gamma - 1.0) * (self.energy - kinetic)
    }

    pub fn velocity(&self, d: usize) -> f64 {
        self.mom[d] / self.rho
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.pressure(gamma) / self.rho).sqrt()
    }

    /// Largest signal speed in direction `d`: |v_d| + c. NaN for
    /// non-physical states, which the criteria pipeline maps to infinity.
    pub fn max_signal(&self, d: usize, gamma: f64) -> f64 {
        self.velocity(d).abs() + self.sound_speed(gamma)
    }

    /// Physical flux in direction `d`, laid out like the unknown vector.
    pub fn flux(&self, d: usize, gamma: f64, out: &mut [f64]) {
        let v = self.velocity(d);
        let p = self.pressure(gamma);
        match self.dim {
            1 => {
                out[0] = self.mom[0];
                out[1] = self.mom[0] * v + p;
                out[2] = v * (self.energy + p);
            }
            2 => {
                out[0] = self.mom[d];
                out[1] = self.mom[0] * v + if d == 0 { p } else { 0.0 };
                out[2] = self.mom[1] * v + if d == 1 { p } else { 0.0 };
                out[3] = v * (self.energy + p);
            }
            _ => unreachable!(),
        }
    }
}
