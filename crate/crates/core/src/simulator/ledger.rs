//! Time series of the mass and energy integrals.

use serde::{Deserialize, Serialize};
use std::io::Write;

use super::SimError;

/// All integrals of the mass and energy laws at one time.
///
/// Rates (`dissipation`, `work_*`, `src_*`) are instantaneous; the energy check integrates
/// them in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub t: f64,
    #[serde(rename = "M_A")]
    pub mass_a: f64,
    #[serde(rename = "M_B")]
    pub mass_b: f64,
    pub surf_mass: f64,
    #[serde(rename = "KE_A")]
    pub ke_a: f64,
    #[serde(rename = "KE_B")]
    pub ke_b: f64,
    pub dissipation: f64,
    #[serde(rename = "work_B")]
    pub work_b: f64,
    pub work_surf: f64,
    #[serde(rename = "src_A")]
    pub src_a: f64,
    #[serde(rename = "src_B")]
    pub src_b: f64,
}

impl LedgerEntry {
    pub fn total_mass(&self) -> f64 {
        self.mass_a + self.mass_b + self.surf_mass
    }

    pub fn kinetic(&self) -> f64 {
        self.ke_a + self.ke_b
    }

    fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.mass_a,
            self.mass_b,
            self.surf_mass,
            self.ke_a,
            self.ke_b,
            self.dissipation,
            self.work_b,
            self.work_surf,
            self.src_a,
            self.src_b,
        ]
    }

    /// Rate of energy supplied by work and exchange.
    fn supply(&self) -> f64 {
        self.work_b + self.work_surf + self.src_a + self.src_b
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn push(&mut self, entry: LedgerEntry) -> Result<(), SimError> {
        if let Some(bad) = entry.values().iter().position(|v| !v.is_finite()) {
            return Err(SimError::Ledger(format!("non-finite entry in column {bad} at t={}", entry.t)));
        }
        if let Some(last) = self.entries.last() {
            if entry.t <= last.t {
                return Err(SimError::Ledger(format!("time {} does not follow {}", entry.t, last.t)));
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    fn index_of(&self, t: f64) -> Result<usize, SimError> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.entries
            .iter()
            .position(|e| (e.t - t).abs() <= tol)
            .ok_or_else(|| SimError::Ledger(format!("no ledger sample at t={t}")))
    }

    fn span(&self, t1: f64, t2: f64) -> Result<(usize, usize), SimError> {
        let (i, j) = (self.index_of(t1)?, self.index_of(t2)?);
        if i > j {
            return Err(SimError::Ledger(format!("t1={t1} after t2={t2}")));
        }
        Ok((i, j))
    }

    /// `|total(t2) - total(t1)| / total(first sample)` for `M_A + M_B + rho_0 |Gamma|`.
    pub fn check_mass_law(&self, t1: f64, t2: f64) -> Result<f64, SimError> {
        let (i, j) = self.span(t1, t2)?;
        let initial = self.entries[0].total_mass();
        Ok((self.entries[j].total_mass() - self.entries[i].total_mass()).abs() / initial.abs())
    }

    /// Signed energy residual `(KE(t2) + int dissipation) - (KE(t1) + int supply)` with
    /// trapezoidal time integrals. `mu_zero` drops the dissipation terms.
    pub fn check_energy_law(&self, t1: f64, t2: f64, mu_zero: bool) -> Result<f64, SimError> {
        let (i, j) = self.span(t1, t2)?;
        let mut diss = 0.0;
        let mut supply = 0.0;
        for w in self.entries[i..=j].windows(2) {
            let h = w[1].t - w[0].t;
            diss += 0.5 * h * (w[0].dissipation + w[1].dissipation);
            supply += 0.5 * h * (w[0].supply() + w[1].supply());
        }
        if mu_zero {
            diss = 0.0;
        }
        Ok(self.entries[j].kinetic() + diss - self.entries[i].kinetic() - supply)
    }

    /// Largest kinetic energy over the series.
    pub fn energy_scale(&self) -> f64 {
        self.entries.iter().map(LedgerEntry::kinetic).fold(0.0, f64::max)
    }

    /// Energy residual over the whole series divided by the kinetic energy scale.
    pub fn relative_energy_residual(&self, mu_zero: bool) -> Result<f64, SimError> {
        let (Some(first), Some(last)) = (self.entries.first(), self.entries.last()) else {
            return Err(SimError::Ledger("empty ledger".into()));
        };
        let r = self.check_energy_law(first.t, last.t, mu_zero)?.abs();
        let scale = self.energy_scale();
        Ok(if scale > 0.0 { r / scale } else { r })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.entries {
            w.serialize(e).map_err(|e| SimError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| SimError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(t: f64) -> LedgerEntry {
        LedgerEntry {
            t,
            mass_a: 1.0,
            mass_b: 2.0,
            surf_mass: 0.5,
            ke_a: 0.0,
            ke_b: 1.0 + t,
            dissipation: 0.0,
            work_b: 1.0,
            work_surf: 0.0,
            src_a: 0.0,
            src_b: 0.0,
        }
    }

    #[test]
    fn rejects_non_increasing_and_non_finite() {
        let mut l = Ledger::new();
        l.push(entry(0.0)).unwrap();
        assert!(l.push(entry(0.0)).is_err());
        let mut bad = entry(1.0);
        bad.src_b = f64::NAN;
        assert!(l.push(bad).is_err());
    }

    #[test]
    fn energy_balance_of_linear_work() {
        let mut l = Ledger::new();
        for k in 0..=10 {
            l.push(entry(0.1 * k as f64)).unwrap();
        }
        assert!(l.check_energy_law(0.0, 1.0, false).unwrap().abs() < 1e-14);
        assert!(l.check_mass_law(0.0, 1.0).unwrap() == 0.0);
        assert!(l.check_energy_law(0.5, 0.2, false).is_err());
    }

    #[test]
    fn csv_header_matches_columns() {
        let mut l = Ledger::new();
        l.push(entry(0.0)).unwrap();
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,M_A,M_B,surf_mass,KE_A,KE_B,dissipation,work_B,work_surf,src_A,src_B\n"));
    }
}
