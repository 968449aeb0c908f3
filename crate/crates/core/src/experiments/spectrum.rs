use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{par_map, ExperimentResult, SweepSpec, Table};
use crate::error::{Error, Result};
use crate::model::{filter_block, single_excitation_block, SystemParams};
use crate::operator::herm_eigvals;

/// Which qubits follow the swept frequency in the qubit–filter spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QubitSweep {
    /// `ν_q1 = ν_q2 = ν`.
    #[default]
    Both,
    /// Only q1 moves; q2 stays at `nu_q2_park`.
    Q1Only,
}

/// Options of the spectroscopy drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSettings {
    pub qubit_sweep: QubitSweep,
    /// Frequency of q2 while q1 is swept alone (GHz); defaults to its idle frequency.
    pub nu_q2_park: Option<f64>,
    /// Half-width beyond the filter band searched for avoided-crossing gaps (GHz).
    pub gap_window: f64,
    /// Coarse grid size of the gap search.
    pub gap_points: usize,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self {
            qubit_sweep: QubitSweep::Both,
            nu_q2_park: None,
            gap_window: 0.5,
            gap_points: 2001,
        }
    }
}

impl SpectrumSettings {
    pub fn resolved(&self, params: &SystemParams) -> Self {
        Self {
            nu_q2_park: Some(self.nu_q2_park.unwrap_or(params.nu_q2_idle)),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap_window > 0.0) {
            return Err(Error::param("gap_window", "> 0"));
        }
        if self.gap_points < 3 {
            return Err(Error::param("gap_points", ">= 3"));
        }
        Ok(())
    }
}

fn eigfreqs(m: &crate::operator::ComplexMatrix) -> Result<Vec<f64>> {
    herm_eigvals(m)
}

/// Closed-form eigenfrequencies of the uniform chain, ascending.
fn chain_closed_form(p: &SystemParams) -> Vec<f64> {
    let n = p.n_cavities;
    let mut v: Vec<f64> = (1..=n)
        .map(|k| p.nu_f + 2.0 * p.g_f * (k as f64 * PI / (n + 1) as f64).cos())
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenfrequencies of the bare filter chain, optionally as a function of `g_f`.
pub fn filter_spectrum(
    params: &SystemParams,
    sweep: Option<&SweepSpec>,
) -> Result<ExperimentResult> {
    params.validate_model()?;
    let mut result = ExperimentResult::new("spectrum", json!({ "sweep": sweep }));
    let levels = eigfreqs(&filter_block(params))?;
    let closed = chain_closed_form(params);
    let dev = levels
        .iter()
        .zip(&closed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    result.tables.push(
        Table::new("spectrum")
            .with("mode", (1..=levels.len()).map(|k| k as f64).collect())
            .with("nu_ghz", levels)
            .with("closed_form_ghz", closed),
    );
    result.push_scalar("max_closed_form_deviation_ghz", dev);
    if let Some(s) = sweep {
        if s.parameter != "g_f" {
            return Err(Error::param("sweep.parameter", "\"g_f\" for spectrum"));
        }
        s.validate()?;
        let mut table = Table::new("spectrum_sweep");
        let (mut g, mut mode, mut nu) = (vec![], vec![], vec![]);
        for gv in s.values() {
            let p = SystemParams {
                g_f: gv,
                ..params.clone()
            };
            for (k, l) in eigfreqs(&filter_block(&p))?.into_iter().enumerate() {
                g.push(gv);
                mode.push((k + 1) as f64);
                nu.push(l);
            }
        }
        table.push("g_f", g);
        table.push("mode", mode);
        table.push("nu_ghz", nu);
        result.tables.push(table);
    }
    Ok(result)
}

fn block_levels(p: &SystemParams, nu1: f64, nu2: f64) -> Result<Vec<f64>> {
    eigfreqs(&single_excitation_block(p, nu1, nu2))
}

/// Single-excitation eigenfrequencies versus qubit frequency, plus the avoided-crossing
/// gap of q1 with every filter mode.
pub fn qubit_filter_spectrum(
    params: &SystemParams,
    sweep: &SweepSpec,
    settings: &SpectrumSettings,
) -> Result<ExperimentResult> {
    params.validate_model()?;
    sweep.validate()?;
    settings.validate()?;
    if sweep.parameter != "nu_q" {
        return Err(Error::param(
            "sweep.parameter",
            "\"nu_q\" for qubit-spectrum",
        ));
    }
    let settings = settings.resolved(params);
    let park = settings.nu_q2_park.unwrap_or(params.nu_q2_idle);
    let nus = sweep.values();
    let rows = par_map(&nus, |&nu| {
        let nu2 = match settings.qubit_sweep {
            QubitSweep::Both => nu,
            QubitSweep::Q1Only => park,
        };
        block_levels(params, nu, nu2)
    })?;
    let mut result = ExperimentResult::new(
        "qubit-spectrum",
        json!({ "sweep": sweep, "settings": settings }),
    );
    let mut table = Table::new("qubit_spectrum").with("nu_q", nus);
    for b in 0..params.n_cavities + 2 {
        table.push(format!("branch_{b}"), rows.iter().map(|r| r[b]).collect());
    }
    result.tables.push(table);
    let (mut mode, mut gap, mut at) = (vec![], vec![], vec![]);
    for k in 1..=params.n_cavities {
        let (g, nu) = avoided_crossing_gap(params, k, park, &settings)?;
        result.push_scalar(format!("gap_mode_{k}_ghz"), g);
        mode.push(k as f64);
        gap.push(g);
        at.push(nu);
    }
    result.tables.push(
        Table::new("crossing_gaps")
            .with("mode", mode)
            .with("gap_ghz", gap)
            .with("nu_q1_at_min", at),
    );
    Ok(result)
}

/// Minimum over the q1 frequency of the splitting between the branches that meet where
/// q1 crosses filter mode `k` (1-based), with q2 parked below the band.
///
/// Branches are the ascending single-excitation eigenvalues `λ_0 ≤ λ_1 ≤ …`, `λ_0`
/// being the parked q2; the crossing with mode `k` opens the gap `λ_{k+1} − λ_k`.
/// Returns `(gap, ν_q1 at the minimum)` in GHz.
pub fn avoided_crossing_gap(
    params: &SystemParams,
    k: usize,
    nu_q2_park: f64,
    settings: &SpectrumSettings,
) -> Result<(f64, f64)> {
    let n = params.n_cavities;
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    let modes = params.filter_modes();
    if nu_q2_park >= modes[0] {
        return Err(Error::param("nu_q2_park", "below the filter band"));
    }
    let lo = (modes[0] - settings.gap_window).max(0.5 * (nu_q2_park + modes[0]));
    let hi = modes[n - 1] + settings.gap_window;
    let split = |nu: f64| -> Result<f64> {
        let l = block_levels(params, nu, nu_q2_park)?;
        Ok(l[k + 1] - l[k])
    };
    let m = settings.gap_points;
    let grid: Vec<f64> = (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect();
    let vals = grid
        .iter()
        .map(|&nu| split(nu))
        .collect::<Result<Vec<_>>>()?;
    let best = (0..m).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(m - 1)];
    // golden-section refinement inside the bracketing cells
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = split(c)?;
    let mut fd = split(d)?;
    while b - a > 1e-13 * b.abs().max(1.0) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = split(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = split(d)?;
        }
    }
    let (mut g, mut at) = if fc <= fd { (fc, c) } else { (fd, d) };
    if vals[best] < g {
        g = vals[best];
        at = grid[best];
    }
    Ok((g, at))
}
