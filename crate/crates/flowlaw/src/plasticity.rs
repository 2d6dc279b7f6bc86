//! J2 radial-return material-point integrator with adiabatic heating,
//! parameterized over an abstract hardening law so the analytic Johnson-Cook
//! form and the trained network are interchangeable.

use crate::error::{Error, Result};
use crate::johnson_cook::{jc_derivatives, jc_flow_stress, JohnsonCookParams, ThermalElasticParams};
use crate::mlp::MlpModel;
use crate::tensor::SymTensor;

/// Newton iteration cap for the consistency solve.
pub const MAX_NEWTON_ITER: usize = 50;
/// Convergence threshold: |residual| <= RTOL * current yield stress.
pub const NEWTON_RTOL: f64 = 1e-8;

const SQRT_2_3: f64 = 0.816_496_580_927_726_1; // sqrt(2/3)
const SQRT_6: f64 = 2.449_489_742_783_178; // sqrt(6)

/// A hardening law answers one query: flow stress and its three derivatives
/// at (eps_p, rate, T). Implementations must accept rate >= 0 and apply
/// their own reference-rate clamping; the return-map queries rate = 0 on its
/// first iterate. Implementations must be shareable across threads.
pub trait HardeningLaw: Sync {
    fn query(&self, eps_p: f64, rate: f64, temperature: f64) -> Result<HardeningResponse>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardeningResponse {
    /// Flow stress (MPa).
    pub sigma_y: f64,
    /// d sigma / d eps_p (MPa).
    pub d_eps: f64,
    /// d sigma / d rate (MPa.s).
    pub d_rate: f64,
    /// d sigma / dT (MPa/C).
    pub d_temp: f64,
}

impl HardeningResponse {
    fn check(self) -> Result<Self> {
        let ok = self.sigma_y.is_finite()
            && self.d_eps.is_finite()
            && self.d_rate.is_finite()
            && self.d_temp.is_finite();
        if !ok {
            return Err(Error::domain("hardening law returned non-finite values"));
        }
        Ok(self)
    }
}

impl HardeningLaw for JohnsonCookParams {
    fn query(&self, eps_p: f64, rate: f64, temperature: f64) -> Result<HardeningResponse> {
        let sigma_y = jc_flow_stress(self, eps_p, rate, temperature)?;
        let (d_eps, d_rate, d_temp) = jc_derivatives(self, eps_p, rate, temperature)?;
        HardeningResponse {
            sigma_y,
            d_eps,
            d_rate,
            d_temp,
        }
        .check()
    }
}

impl HardeningLaw for MlpModel {
    fn query(&self, eps_p: f64, rate: f64, temperature: f64) -> Result<HardeningResponse> {
        // predict_physical clamps rate from below to the reference rate.
        let (sigma_y, d_eps, d_rate, d_temp) = self.predict_physical(eps_p, rate, temperature)?;
        HardeningResponse {
            sigma_y,
            d_eps,
            d_rate,
            d_temp,
        }
        .check()
    }
}

/// State of one integration point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPointState {
    /// Cauchy stress (MPa).
    pub stress: SymTensor,
    /// Accumulated equivalent plastic strain.
    pub eps_p_bar: f64,
    /// Equivalent plastic strain rate of the last step (1/s).
    pub rate_bar: f64,
    /// Temperature (deg C).
    pub temperature: f64,
}

impl MaterialPointState {
    pub fn virgin(temperature: f64) -> Self {
        MaterialPointState {
            stress: SymTensor::ZERO,
            eps_p_bar: 0.0,
            rate_bar: 0.0,
            temperature,
        }
    }
}

/// Per-step diagnostics from the return map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Consistency parameter of the step (0 for elastic steps).
    pub gamma: f64,
    pub newton_iterations: usize,
    /// |residual| / sigma_y at convergence.
    pub relative_residual: f64,
    /// Adiabatic temperature increment of the step (deg C).
    pub delta_temperature: f64,
}

/// Elastic predictor: stress + lambda tr(d_eps) I + 2 G d_eps.
pub fn trial_state(
    state: &MaterialPointState,
    d_eps: &SymTensor,
    elastic: &ThermalElasticParams,
) -> Result<SymTensor> {
    if !d_eps.is_finite() {
        return Err(Error::domain("non-finite strain increment"));
    }
    let lambda = elastic.lame_lambda_mpa();
    let g = elastic.shear_modulus_mpa();
    let volumetric = lambda * d_eps.trace();
    Ok(SymTensor {
        xx: state.stress.xx + volumetric + 2.0 * g * d_eps.xx,
        yy: state.stress.yy + volumetric + 2.0 * g * d_eps.yy,
        zz: state.stress.zz + volumetric + 2.0 * g * d_eps.zz,
        xy: state.stress.xy + 2.0 * g * d_eps.xy,
        yz: state.stress.yz + 2.0 * g * d_eps.yz,
        zx: state.stress.zx + 2.0 * g * d_eps.zx,
    })
}

/// Temperature rise from plastic dissipation: eta sigma_y d_eps_p / (rho Cp),
/// with the MPa -> Pa conversion folded in.
pub fn adiabatic_temperature_update(
    sigma_y_mpa: f64,
    d_eps_p: f64,
    mat: &ThermalElasticParams,
) -> f64 {
    mat.eta * sigma_y_mpa * 1e6 * d_eps_p / (mat.rho * mat.cp)
}

/// Advance one material point by a strain increment over `dt`.
///
/// Elastic trial first; if the trial von Mises stress exceeds the current
/// yield stress, Newton iteration on the consistency parameter Gamma returns
/// the stress to the yield surface along the trial deviatoric direction.
/// The yield-stress derivative with respect to Gamma combines the law's
/// three partials:
///
/// ```text
/// d sigma_y / d Gamma = sqrt(2/3) [ d/d eps_p + (1/dt) d/d rate
///                                   + (eta sigma_y / rho Cp) d/dT ]
/// ```
///
/// Temperature is held fixed during the solve and updated once from the
/// converged plastic increment (staggered coupling); the d/dT term still
/// enters the Newton slope through the composition above.
pub fn radial_return_step(
    state: &MaterialPointState,
    d_eps: &SymTensor,
    dt: f64,
    law: &dyn HardeningLaw,
    mat: &ThermalElasticParams,
) -> Result<(MaterialPointState, StepDiagnostics)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain("time increment must be positive"));
    }
    let trial = trial_state(state, d_eps, mat)?;
    let dev = trial.deviator();
    let vm_trial = (1.5 * dev.double_contraction()).sqrt();

    // Elastic check at the current state; rate 0 is clamped inside the law.
    let yield_now = law.query(state.eps_p_bar, 0.0, state.temperature)?.sigma_y;
    if vm_trial <= yield_now {
        let new_state = MaterialPointState {
            stress: trial,
            rate_bar: 0.0,
            ..*state
        };
        return Ok((
            new_state,
            StepDiagnostics {
                gamma: 0.0,
                newton_iterations: 0,
                relative_residual: 0.0,
                delta_temperature: 0.0,
            },
        ));
    }

    let g = mat.shear_modulus_mpa();
    let dev_norm = dev.norm();
    let direction = dev.scale(1.0 / dev_norm);
    let heat_factor = mat.eta * 1e6 / (mat.rho * mat.cp);

    let mut gamma: f64 = 0.0;
    let mut residuals = Vec::new();
    let mut converged = None;
    for iteration in 0..MAX_NEWTON_ITER {
        let d_eps_p = SQRT_2_3 * gamma;
        let rate = d_eps_p / dt;
        let resp = law.query(state.eps_p_bar + d_eps_p, rate, state.temperature)?;
        let residual = vm_trial - SQRT_6 * g * gamma - resp.sigma_y;
        residuals.push(residual);
        if residual.abs() <= NEWTON_RTOL * resp.sigma_y {
            converged = Some((iteration + 1, resp, residual));
            break;
        }
        let dsy_dgamma = SQRT_2_3
            * (resp.d_eps + resp.d_rate / dt + heat_factor * resp.sigma_y * resp.d_temp);
        let slope = -SQRT_6 * g - dsy_dgamma;
        gamma -= residual / slope;
    }
    let (newton_iterations, resp, residual) = converged.ok_or_else(|| Error::NoConvergence {
        iterations: MAX_NEWTON_ITER,
        last: *residuals.last().unwrap(),
        residuals: residuals.clone(),
    })?;

    let d_eps_p = SQRT_2_3 * gamma;
    let stress = trial.add(&direction.scale(-2.0 * g * gamma));
    let delta_temperature = adiabatic_temperature_update(resp.sigma_y, d_eps_p, mat);
    let new_state = MaterialPointState {
        stress,
        eps_p_bar: state.eps_p_bar + d_eps_p,
        rate_bar: d_eps_p / dt,
        temperature: state.temperature + delta_temperature,
    };
    Ok((
        new_state,
        StepDiagnostics {
            gamma,
            newton_iterations,
            relative_residual: residual.abs() / resp.sigma_y,
            delta_temperature,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat() -> ThermalElasticParams {
        ThermalElasticParams::steel_42crmo4()
    }

    fn jc() -> JohnsonCookParams {
        JohnsonCookParams::steel_42crmo4()
    }

    /// sigma_y identically A with zero derivatives: the closed-form
    /// perfect-plasticity limit of the law (B = 0, C = 0, T held).
    struct ConstantYield(f64);

    impl HardeningLaw for ConstantYield {
        fn query(&self, _: f64, _: f64, _: f64) -> Result<HardeningResponse> {
            Ok(HardeningResponse {
                sigma_y: self.0,
                d_eps: 0.0,
                d_rate: 0.0,
                d_temp: 0.0,
            })
        }
    }

    #[test]
    fn zero_increment_keeps_stress() {
        let state = MaterialPointState::virgin(20.0);
        let trial = trial_state(&state, &SymTensor::ZERO, &mat()).unwrap();
        assert_eq!(trial, state.stress);
    }

    #[test]
    fn volumetric_increment_leaves_deviator() {
        let mut state = MaterialPointState::virgin(20.0);
        state.stress = SymTensor {
            xx: 100.0,
            yy: -30.0,
            zz: 10.0,
            xy: 40.0,
            yz: 0.0,
            zx: 0.0,
        };
        let d_eps = SymTensor::diag(1e-3, 1e-3, 1e-3);
        let trial = trial_state(&state, &d_eps, &mat()).unwrap();
        let before = state.stress.deviator();
        let after = trial.deviator();
        assert!((before.xx - after.xx).abs() < 1e-9);
        assert!((before.xy - after.xy).abs() < 1e-9);
        assert!((before.von_mises() - after.von_mises()).abs() < 1e-9);
    }

    #[test]
    fn pure_shear_trial_is_2g_gamma() {
        let state = MaterialPointState::virgin(20.0);
        let gamma = 0.01;
        let d_eps = SymTensor {
            xy: gamma,
            ..SymTensor::ZERO
        };
        let trial = trial_state(&state, &d_eps, &mat()).unwrap();
        // 2 G gamma with Table-1 constants, frozen from the oracle.
        assert!((trial.xy - 1603.8759689922481).abs() < 1e-9);
        assert_eq!(trial.xx, 0.0);
    }

    #[test]
    fn adiabatic_heating_arithmetic() {
        let m = mat();
        assert_eq!(adiabatic_temperature_update(1000.0, 0.0, &m), 0.0);
        assert_eq!(adiabatic_temperature_update(0.0, 0.1, &m), 0.0);
        let dt = adiabatic_temperature_update(1000.0, 0.1, &m);
        assert!((dt - 24.987506246876562).abs() < 1e-12);
    }

    #[test]
    fn small_step_stays_elastic() {
        let state = MaterialPointState::virgin(20.0);
        let d_eps = SymTensor::diag(1e-4, -0.5e-4, -0.5e-4);
        let (new_state, diag) = radial_return_step(&state, &d_eps, 1e-6, &jc(), &mat()).unwrap();
        assert_eq!(diag.gamma, 0.0);
        assert_eq!(new_state.eps_p_bar, 0.0);
        assert_eq!(new_state.temperature, 20.0);
        assert!(new_state.stress.von_mises() < 806.0);
    }

    #[test]
    fn perfect_plasticity_returns_to_806() {
        let law = ConstantYield(806.0);
        let mut state = MaterialPointState::virgin(20.0);
        let d_eps = SymTensor::diag(2e-3, -1e-3, -1e-3);
        for _ in 0..100 {
            let (next, _) = radial_return_step(&state, &d_eps, 1e-5, &law, &mat()).unwrap();
            state = next;
        }
        assert!(state.eps_p_bar > 0.15);
        assert!(
            (state.stress.von_mises() - 806.0).abs() / 806.0 <= 1e-8,
            "vm = {}",
            state.stress.von_mises()
        );
        // dissipation raised the temperature even though the law ignores it
        assert!(state.temperature > 20.0);
    }

    #[test]
    fn consistency_residual_on_yield_surface() {
        let mut state = MaterialPointState::virgin(20.0);
        let d_eps = SymTensor::diag(2e-3, -1e-3, -1e-3);
        let jc = jc();
        for _ in 0..50 {
            let (next, diag) = radial_return_step(&state, &d_eps, 2e-5, &jc, &mat()).unwrap();
            if diag.gamma > 0.0 {
                assert!(diag.relative_residual <= NEWTON_RTOL);
                let sy = jc
                    .query(next.eps_p_bar, next.rate_bar, state.temperature)
                    .unwrap()
                    .sigma_y;
                assert!(
                    (next.stress.von_mises() - sy).abs() / sy <= 1e-8,
                    "vm {} vs sigma_y {}",
                    next.stress.von_mises(),
                    sy
                );
            }
            state = next;
        }
        assert!(state.eps_p_bar > 0.05);
    }

    #[test]
    fn radial_direction_preserved() {
        let mut state = MaterialPointState::virgin(20.0);
        state.stress = SymTensor {
            xx: 200.0,
            yy: -100.0,
            zz: 0.0,
            xy: 150.0,
            yz: 30.0,
            zx: -80.0,
        };
        let d_eps = SymTensor {
            xx: 3e-3,
            yy: -1e-3,
            zz: -2e-3,
            xy: 1.5e-3,
            yz: 0.0,
            zx: 0.5e-3,
        };
        let trial = trial_state(&state, &d_eps, &mat()).unwrap();
        let (next, diag) = radial_return_step(&state, &d_eps, 1e-5, &jc(), &mat()).unwrap();
        assert!(diag.gamma > 0.0);
        let a = trial.deviator();
        let b = next.stress.deviator();
        let cosine = a.inner(&b) / (a.norm() * b.norm());
        assert!(
            cosine >= 1.0 - 1e-12,
            "deviatoric directions misaligned: cos = {cosine}"
        );
    }

    #[test]
    fn temperature_never_decreases_under_flow() {
        let mut state = MaterialPointState::virgin(100.0);
        let d_eps = SymTensor::diag(1.5e-3, -0.75e-3, -0.75e-3);
        for _ in 0..40 {
            let (next, diag) = radial_return_step(&state, &d_eps, 1e-5, &jc(), &mat()).unwrap();
            if diag.gamma > 0.0 {
                assert!(next.temperature > state.temperature);
                assert!(diag.delta_temperature > 0.0);
            } else {
                assert_eq!(next.temperature, state.temperature);
            }
            assert!(next.eps_p_bar >= state.eps_p_bar);
            state = next;
        }
    }

    #[test]
    fn step_size_robustness() {
        let jc = jc();
        let run = |delta: f64, steps: usize| {
            let mut state = MaterialPointState::virgin(20.0);
            let d_eps = SymTensor::diag(delta, -delta / 2.0, -delta / 2.0);
            for _ in 0..steps {
                state = radial_return_step(&state, &d_eps, delta / 100.0, &jc, &mat())
                    .unwrap()
                    .0;
            }
            state
        };
        let coarse = run(2e-3, 100);
        let fine = run(1e-3, 200);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
        assert!(rel(coarse.stress.von_mises(), fine.stress.von_mises()) <= 5e-3);
        assert!(rel(coarse.eps_p_bar, fine.eps_p_bar) <= 5e-3);
        assert!(rel(coarse.temperature, fine.temperature) <= 5e-3);
    }

    #[test]
    fn bad_dt_rejected() {
        let state = MaterialPointState::virgin(20.0);
        let d_eps = SymTensor::diag(1e-3, 0.0, 0.0);
        assert!(radial_return_step(&state, &d_eps, 0.0, &jc(), &mat()).is_err());
        assert!(radial_return_step(&state, &d_eps, -1.0, &jc(), &mat()).is_err());
    }
}
