use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{par_map, ExperimentResult, InvariantReport, PreparedSystem, SweepSpec, Table};
use crate::analysis::{fft_spectrum, lz_survival, peak_frequency, LzParams};
use crate::dynamics::SolverSettings;
use crate::error::{Error, Result};
use crate::model::{filter_block, SystemParams, MAX_CAVITIES};
use crate::operator::herm_eig;
use crate::pulses::{Schedule, Segment, Shape, Trajectory};

/// Options of the Landau–Zener ramp sweep and the loading contour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RampSettings {
    /// Filter-chain lengths compared.
    pub cavities: Vec<usize>,
    /// Ramp up + hold + ramp down (ns).
    pub total_period: f64,
    pub t_start: f64,
    /// Time recorded after the pulse (ns).
    pub tail: f64,
    /// q1 start/return frequency (GHz); defaults to `band_min − margin·g_F`.
    pub nu_low: Option<f64>,
    /// q1 turning frequency (GHz); defaults to `band_max + margin·g_F`.
    pub nu_high: Option<f64>,
    /// Band margin in units of `g_F` for the default end points.
    pub margin: f64,
    pub shape: Shape,
    /// Ramps at or below this value form the short-ramp fringe window for the FFT (ns).
    pub short_fft_max: f64,
    /// Ramp windows for the fringe amplitude comparison (ns).
    pub short_window: [f64; 2],
    pub long_window: [f64; 2],
    /// q1 counts as having loaded its photon once `n_q1 ≤ loading_threshold`.
    pub loading_threshold: f64,
}

impl Default for RampSettings {
    fn default() -> Self {
        Self {
            cavities: vec![1, 3, 6],
            total_period: 110.0,
            t_start: 0.0,
            tail: 20.0,
            nu_low: None,
            nu_high: None,
            margin: 4.0,
            shape: Shape::Linear,
            short_fft_max: 20.0,
            short_window: [0.0, 15.0],
            long_window: [40.0, 55.0],
            loading_threshold: 0.2,
        }
    }
}

impl RampSettings {
    /// Default for the loading contour: the 1- and 6-cavity chains.
    pub fn contour() -> Self {
        Self {
            cavities: vec![1, 6],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cavities.is_empty()
            || self
                .cavities
                .iter()
                .any(|&n| !(1..=MAX_CAVITIES).contains(&n))
        {
            return Err(Error::param(
                "cavities",
                format!("a non-empty list of values in 1..={MAX_CAVITIES}"),
            ));
        }
        for (name, v) in [("total_period", self.total_period), ("margin", self.margin)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, "> 0"));
            }
        }
        for (name, v) in [("t_start", self.t_start), ("tail", self.tail)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, ">= 0"));
            }
        }
        if let (Some(lo), Some(hi)) = (self.nu_low, self.nu_high) {
            if !(hi > lo) {
                return Err(Error::param("nu_high", "> nu_low"));
            }
        }
        Ok(())
    }

    fn end_points(&self, p: &SystemParams) -> (f64, f64) {
        let modes = p.filter_modes();
        let lo = self.nu_low.unwrap_or(modes[0] - self.margin * p.g_f);
        let hi = self
            .nu_high
            .unwrap_or(modes[modes.len() - 1] + self.margin * p.g_f);
        (lo, hi)
    }
}

/// Sweep results for one chain length.
struct RampCase {
    n_cavities: usize,
    nu_low: f64,
    nu_high: f64,
    ramps: Vec<f64>,
    end_values: Vec<f64>,
    min_values: Vec<f64>,
    lz: Vec<f64>,
    times: Vec<Vec<f64>>,
    n_q1: Vec<Vec<f64>>,
    invariants: InvariantReport,
}

impl RampCase {
    fn window_amplitude(&self, w: [f64; 2]) -> f64 {
        let vals: Vec<f64> = self
            .ramps
            .iter()
            .zip(&self.end_values)
            .filter(|(r, _)| **r >= w[0] - 1e-9 && **r <= w[1] + 1e-9)
            .map(|(_, v)| *v)
            .collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if vals.is_empty() {
            f64::NAN
        } else {
            hi - lo
        }
    }

    fn short_peak(&self, max_ramp: f64, step: f64) -> Result<f64> {
        let vals: Vec<f64> = self
            .ramps
            .iter()
            .zip(&self.end_values)
            .filter(|(r, _)| **r <= max_ramp + 1e-9)
            .map(|(_, v)| *v)
            .collect();
        let spec = fft_spectrum(&vals, step)?;
        peak_frequency(&spec, spec.bin_width())
    }

    fn min_loading_ramp(&self, threshold: f64) -> f64 {
        self.ramps
            .iter()
            .zip(&self.min_values)
            .find(|(_, m)| **m <= threshold)
            .map_or(f64::NAN, |(r, _)| *r)
    }
}

fn run_case(
    params: &SystemParams,
    n: usize,
    settings: &RampSettings,
    ramps: &[f64],
    solver: &SolverSettings,
) -> Result<RampCase> {
    let p = SystemParams {
        n_cavities: n,
        ..params.lossless()
    };
    p.validate_model()?;
    let (lo, hi) = settings.end_points(&p);
    let sys = PreparedSystem::new(&p, Some(1))?;
    let mut initial = vec![0; n + 2];
    initial[0] = 1;
    let psi0 = sys.basis_ket(&initial)?;
    let t_down = settings.t_start + settings.total_period;
    let t_end = t_down + settings.tail;

    // q1's coupling to each filter eigenmode, for the Landau–Zener estimate
    let eig = herm_eig(&filter_block(&p))?;
    let couplings: Vec<f64> = (0..n)
        .map(|k| p.g_q1f * eig.vectors[(0, k)].norm())
        .collect();

    let runs = par_map(ramps, |&r| {
        let seg = Segment::ramped(
            settings.t_start,
            r,
            settings.total_period - 2.0 * r,
            hi,
            settings.shape,
        );
        let schedule = Schedule {
            q1: Trajectory::new(lo, vec![seg])?,
            q2: Trajectory::constant(p.nu_q2_idle),
        };
        sys.run(
            &schedule,
            None,
            &psi0,
            t_end,
            false,
            solver,
            false,
            &[t_down],
        )
    })?;

    let mut case = RampCase {
        n_cavities: n,
        nu_low: lo,
        nu_high: hi,
        ramps: ramps.to_vec(),
        end_values: vec![],
        min_values: vec![],
        lz: vec![],
        times: vec![],
        n_q1: vec![],
        invariants: InvariantReport::default(),
    };
    for (&r, run) in ramps.iter().zip(&runs) {
        let ts = &run.series;
        let nq = ts.get("n_q1").unwrap_or(&[]).to_vec();
        let i_down = ts.index_near(t_down).unwrap_or(0);
        case.end_values.push(nq[i_down]);
        case.min_values.push(
            ts.times
                .iter()
                .zip(&nq)
                .filter(|(t, _)| **t <= t_down + 1e-9)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min),
        );
        case.lz.push(if r > 0.0 {
            lz_survival(&LzParams::new(couplings.clone(), (hi - lo) / r)?)
        } else {
            1.0
        });
        case.times.push(ts.times.clone());
        case.n_q1.push(nq);
        run.record(&mut case.invariants);
    }
    Ok(case)
}

fn check_sweep(sweep: &SweepSpec, settings: &RampSettings) -> Result<()> {
    sweep.validate()?;
    if sweep.parameter != "ramp" {
        return Err(Error::param("sweep.parameter", "\"ramp\""));
    }
    if sweep.min < 0.0 || sweep.max > 0.5 * settings.total_period {
        return Err(Error::param("sweep ramp", "within [0, total_period / 2]"));
    }
    Ok(())
}

fn run_cases(
    params: &SystemParams,
    settings: &RampSettings,
    sweep: &SweepSpec,
    solver: &SolverSettings,
) -> Result<Vec<RampCase>> {
    params.validate_model()?;
    settings.validate()?;
    solver.validate()?;
    check_sweep(sweep, settings)?;
    let ramps = sweep.values();
    settings
        .cavities
        .iter()
        .map(|&n| run_case(params, n, settings, &ramps, solver))
        .collect()
}

fn series_table(name: &str, cases: &[RampCase]) -> Table {
    let (mut nc, mut rr, mut tt, mut nq) = (vec![], vec![], vec![], vec![]);
    for c in cases {
        for ((r, times), vals) in c.ramps.iter().zip(&c.times).zip(&c.n_q1) {
            nc.extend(std::iter::repeat_n(c.n_cavities as f64, times.len()));
            rr.extend(std::iter::repeat_n(*r, times.len()));
            tt.extend_from_slice(times);
            nq.extend_from_slice(vals);
        }
    }
    Table::new(name)
        .with("n_cavities", nc)
        .with("ramp", rr)
        .with("t_ns", tt)
        .with("n_q1", nq)
}

/// Fringes of q1's occupation at the end of a ramp–hold–ramp excursion across the
/// filter band, versus ramp time, for several chain lengths.
pub fn ramp_sweep(
    params: &SystemParams,
    settings: &RampSettings,
    sweep: &SweepSpec,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    let cases = run_cases(params, settings, sweep, solver)?;
    let mut result = ExperimentResult::new(
        "ramp-sweep",
        json!({
            "settings": settings,
            "sweep": sweep,
            "end_points": cases.iter().map(|c| json!({"n_cavities": c.n_cavities, "nu_low": c.nu_low, "nu_high": c.nu_high})).collect::<Vec<_>>(),
        }),
    );
    let (mut nc, mut rr, mut end, mut mn, mut lz) = (vec![], vec![], vec![], vec![], vec![]);
    for c in &cases {
        let n = c.n_cavities;
        nc.extend(std::iter::repeat_n(n as f64, c.ramps.len()));
        rr.extend_from_slice(&c.ramps);
        end.extend_from_slice(&c.end_values);
        mn.extend_from_slice(&c.min_values);
        lz.extend_from_slice(&c.lz);
        result.push_scalar(
            format!("fringe_amp_short_{n}"),
            c.window_amplitude(settings.short_window),
        );
        result.push_scalar(
            format!("fringe_amp_long_{n}"),
            c.window_amplitude(settings.long_window),
        );
        let peak = c
            .short_peak(settings.short_fft_max, sweep.step())
            .unwrap_or(f64::NAN);
        result.push_scalar(format!("fringe_peak_short_{n}_ghz"), peak);
        result.push_scalar(
            format!("min_loading_ramp_{n}_ns"),
            c.min_loading_ramp(settings.loading_threshold),
        );
        result.invariants.merge(&c.invariants);
    }
    result.tables.push(
        Table::new("ramp_fringes")
            .with("n_cavities", nc)
            .with("ramp", rr)
            .with("n_q1_end", end)
            .with("n_q1_min", mn)
            .with("lz_survival", lz),
    );
    result.tables.push(series_table("ramp_series", &cases));
    Ok(result)
}

/// Occupation of q1 over (ramp time × evolution time) for several chain lengths.
pub fn loading_contour(
    params: &SystemParams,
    settings: &RampSettings,
    sweep: &SweepSpec,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    let cases = run_cases(params, settings, sweep, solver)?;
    let mut result = ExperimentResult::new(
        "contour",
        json!({ "settings": settings, "sweep": sweep, "axes": ["ramp", "t_ns"] }),
    );
    for c in &cases {
        result.push_scalar(
            format!("min_loading_ramp_{}_ns", c.n_cavities),
            c.min_loading_ramp(settings.loading_threshold),
        );
        result.invariants.merge(&c.invariants);
    }
    result.tables.push(series_table("loading_contour", &cases));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_grid_is_identically_one() {
        let p = SystemParams {
            g_q1f: 0.0,
            ..SystemParams::default()
        };
        let s = SweepSpec::linear("ramp", 0.0, 50.0, 3);
        let r =
            loading_contour(&p, &RampSettings::contour(), &s, &SolverSettings::default()).unwrap();
        let grid = r.table("loading_contour").unwrap().column("n_q1").unwrap();
        assert!(grid.iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert!(r.scalar("min_loading_ramp_6_ns").unwrap().is_nan());
    }

    #[test]
    fn contour_rows_equal_sweep_series() {
        let p = SystemParams::default();
        let s = SweepSpec::linear("ramp", 10.0, 30.0, 3);
        let settings = RampSettings {
            cavities: vec![1],
            ..RampSettings::default()
        };
        let solver = SolverSettings::default();
        let a = ramp_sweep(&p, &settings, &s, &solver).unwrap();
        let b = loading_contour(&p, &settings, &s, &solver).unwrap();
        assert_eq!(
            a.table("ramp_series").unwrap().column("n_q1"),
            b.table("loading_contour").unwrap().column("n_q1")
        );
    }

    #[test]
    fn ramp_longer_than_half_period_rejected() {
        let s = SweepSpec::linear("ramp", 0.0, 60.0, 3);
        assert!(ramp_sweep(
            &SystemParams::default(),
            &RampSettings::default(),
            &s,
            &SolverSettings::default()
        )
        .is_err());
    }
}
