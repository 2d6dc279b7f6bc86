//! Material-point load paths that stand in for the full structural
//! benchmarks: two hardening laws integrated along identical prescribed
//! strain histories, with per-step traces and a deviation summary.

use std::fmt::Write as _;

use crate::error::Result;
use crate::johnson_cook::ThermalElasticParams;
use crate::plasticity::{radial_return_step, HardeningLaw, MaterialPointState};
use crate::tensor::SymTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadKind {
    UniaxialTension,
    UniaxialCompression,
}

impl LoadKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniaxial_tension" => Some(LoadKind::UniaxialTension),
            "uniaxial_compression" => Some(LoadKind::UniaxialCompression),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LoadKind::UniaxialTension => "uniaxial_tension",
            LoadKind::UniaxialCompression => "uniaxial_compression",
        }
    }
}

/// A prescribed strain history: one symmetric increment per step, a fixed
/// time increment, and the starting temperature.
#[derive(Debug, Clone)]
pub struct LoadPath {
    pub kind: LoadKind,
    pub strain_increments: Vec<SymTensor>,
    /// Seconds per step.
    pub dt: f64,
    pub initial_temperature: f64,
}

impl LoadPath {
    /// Isochoric uniaxial path: each step applies
    /// `delta * diag(1, -1/2, -1/2)` (negated for compression) over
    /// `delta / rate` seconds, so the equivalent strain rate is `rate` once
    /// the point flows. A larger first increment (`first_delta`) jumps the
    /// yield onset in one step.
    pub fn uniaxial(
        kind: LoadKind,
        first_delta: f64,
        delta: f64,
        steps: usize,
        rate: f64,
        initial_temperature: f64,
    ) -> Self {
        let sign = match kind {
            LoadKind::UniaxialTension => 1.0,
            LoadKind::UniaxialCompression => -1.0,
        };
        let mut strain_increments = Vec::with_capacity(steps);
        if steps > 0 {
            strain_increments.push(SymTensor::diag(
                sign * first_delta,
                -sign * first_delta / 2.0,
                -sign * first_delta / 2.0,
            ));
        }
        for _ in 1..steps {
            strain_increments.push(SymTensor::diag(
                sign * delta,
                -sign * delta / 2.0,
                -sign * delta / 2.0,
            ));
        }
        LoadPath {
            kind,
            strain_increments,
            dt: delta / rate,
            initial_temperature,
        }
    }

    /// Path reaching eps_p_bar ~ 0.51 at 100/s with every visited state
    /// inside the training box.
    pub fn tension_in_range() -> Self {
        LoadPath::uniaxial(LoadKind::UniaxialTension, 0.065, 0.01, 46, 100.0, 20.0)
    }

    /// Path extrapolating to eps_p_bar ~ 2.16 at 500/s; the adiabatic
    /// temperature ends far above the training range.
    pub fn tension_extended() -> Self {
        LoadPath::uniaxial(LoadKind::UniaxialTension, 0.065, 0.01, 211, 500.0, 20.0)
    }
}

/// One row of the per-step trace: both laws' states after the same step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub step: usize,
    pub eps_p_a: f64,
    pub sigma_a: f64,
    pub temp_a: f64,
    pub eps_p_b: f64,
    pub sigma_b: f64,
    pub temp_b: f64,
}

/// Outcome of integrating both laws along a path.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub records: Vec<StepRecord>,
    /// max over steps of |sigma_b - sigma_a| / sigma_a (guarded against
    /// zero-stress steps).
    pub max_sigma_deviation: f64,
    pub final_a: MaterialPointState,
    pub final_b: MaterialPointState,
    /// Sum of per-step adiabatic increments, per law; equals final T minus
    /// initial T.
    pub heat_sum_a: f64,
    pub heat_sum_b: f64,
}

impl BenchResult {
    /// Relative deviation of the final von Mises stresses.
    pub fn final_sigma_deviation(&self) -> f64 {
        let a = self.final_a.stress.von_mises();
        let b = self.final_b.stress.von_mises();
        (b - a).abs() / a.abs().max(1e-12)
    }

    /// Relative deviation of the final temperatures.
    pub fn final_temperature_deviation(&self) -> f64 {
        (self.final_b.temperature - self.final_a.temperature).abs()
            / self.final_a.temperature.abs().max(1e-12)
    }

    /// CSV trace with the columns
    /// `step,eps_p_a,sigma_a,T_a,eps_p_b,sigma_b,T_b`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,eps_p_a,sigma_a,T_a,eps_p_b,sigma_b,T_b\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.step, r.eps_p_a, r.sigma_a, r.temp_a, r.eps_p_b, r.sigma_b, r.temp_b
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "max sigma deviation: {:.6}%\n\
             law A final: eps_p={:.6} sigma={:.4} MPa T={:.4} C\n\
             law B final: eps_p={:.6} sigma={:.4} MPa T={:.4} C\n\
             final deviations: sigma {:.6}%, T {:.6}%",
            100.0 * self.max_sigma_deviation,
            self.final_a.eps_p_bar,
            self.final_a.stress.von_mises(),
            self.final_a.temperature,
            self.final_b.eps_p_bar,
            self.final_b.stress.von_mises(),
            self.final_b.temperature,
            100.0 * self.final_sigma_deviation(),
            100.0 * self.final_temperature_deviation(),
        )
    }
}

/// Integrate both laws along the same path. Errors carry the failing step
/// index.
pub fn run_path_benchmark(
    path: &LoadPath,
    law_a: &dyn HardeningLaw,
    law_b: &dyn HardeningLaw,
    mat: &ThermalElasticParams,
) -> Result<BenchResult> {
    let mut state_a = MaterialPointState::virgin(path.initial_temperature);
    let mut state_b = MaterialPointState::virgin(path.initial_temperature);
    let mut records = Vec::with_capacity(path.strain_increments.len());
    let mut max_dev: f64 = 0.0;
    let mut heat_a = 0.0;
    let mut heat_b = 0.0;
    let annotate = |step: usize, e: crate::error::Error| {
        crate::error::Error::Domain(format!("step {step}: {e}"))
    };
    for (step, d_eps) in path.strain_increments.iter().enumerate() {
        let (next_a, diag_a) = radial_return_step(&state_a, d_eps, path.dt, law_a, mat)
            .map_err(|e| annotate(step, e))?;
        let (next_b, diag_b) = radial_return_step(&state_b, d_eps, path.dt, law_b, mat)
            .map_err(|e| annotate(step, e))?;
        state_a = next_a;
        state_b = next_b;
        heat_a += diag_a.delta_temperature;
        heat_b += diag_b.delta_temperature;
        let sigma_a = state_a.stress.von_mises();
        let sigma_b = state_b.stress.von_mises();
        if sigma_a.abs() > 1e-12 {
            max_dev = max_dev.max((sigma_b - sigma_a).abs() / sigma_a);
        }
        records.push(StepRecord {
            step,
            eps_p_a: state_a.eps_p_bar,
            sigma_a,
            temp_a: state_a.temperature,
            eps_p_b: state_b.eps_p_bar,
            sigma_b,
            temp_b: state_b.temperature,
        });
    }
    Ok(BenchResult {
        records,
        max_sigma_deviation: max_dev,
        final_a: state_a,
        final_b: state_b,
        heat_sum_a: heat_a,
        heat_sum_b: heat_b,
    })
}
