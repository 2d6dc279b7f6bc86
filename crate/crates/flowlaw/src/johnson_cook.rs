//! Analytical Johnson-Cook flow law and its three derivatives.
//!
//! The law is the ground-truth oracle for training and validating the
//! network surrogate:
//!
//! ```text
//! sigma = (A + B eps^n) [1 + C ln(rate/rate0)] [1 - theta^m]
//! theta = (T - T0) / (Tm - T0)
//! ```
//!
//! Units are fixed as MPa, 1/s, and degrees Celsius throughout.

use crate::error::{Error, Result};

/// Floor applied to the plastic strain before evaluating d(sigma)/d(eps_p):
/// the exponent n - 1 < 0 makes the derivative diverge at eps_p = 0.
pub const EPS_P_FLOOR: f64 = 1e-8;

/// The five Johnson-Cook constants plus reference rate and temperatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JohnsonCookParams {
    /// Initial yield stress A (MPa).
    pub a: f64,
    /// Hardening modulus B (MPa).
    pub b: f64,
    /// Rate sensitivity C (dimensionless).
    pub c: f64,
    /// Hardening exponent n (dimensionless).
    pub n: f64,
    /// Thermal softening exponent m (dimensionless).
    pub m: f64,
    /// Reference strain rate (1/s).
    pub eps_dot_ref: f64,
    /// Reference temperature (deg C).
    pub t_ref: f64,
    /// Melting temperature (deg C).
    pub t_melt: f64,
}

impl JohnsonCookParams {
    pub fn new(
        a: f64,
        b: f64,
        c: f64,
        n: f64,
        m: f64,
        eps_dot_ref: f64,
        t_ref: f64,
        t_melt: f64,
    ) -> Result<Self> {
        let p = JohnsonCookParams {
            a,
            b,
            c,
            n,
            m,
            eps_dot_ref,
            t_ref,
            t_melt,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            self.a,
            self.b,
            self.c,
            self.n,
            self.m,
            self.eps_dot_ref,
            self.t_ref,
            self.t_melt,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("Johnson-Cook parameters must be finite"));
        }
        if self.a <= 0.0 || self.b < 0.0 || self.c < 0.0 {
            return Err(Error::domain("require A > 0, B >= 0, C >= 0"));
        }
        if self.n <= 0.0 || self.n > 1.0 {
            return Err(Error::domain("require 0 < n <= 1"));
        }
        if self.m <= 0.0 {
            return Err(Error::domain("require m > 0"));
        }
        if self.eps_dot_ref <= 0.0 {
            return Err(Error::domain("require eps_dot_ref > 0"));
        }
        if self.t_melt <= self.t_ref {
            return Err(Error::domain("require T_melt > T_ref"));
        }
        Ok(())
    }

    /// 42CrMo4 steel constants: A=806 MPa, B=614 MPa, C=0.0089, n=0.168,
    /// m=1.1, rate0=1/s, T0=20 C, Tm=1540 C.
    pub fn steel_42crmo4() -> Self {
        JohnsonCookParams {
            a: 806.0,
            b: 614.0,
            c: 0.0089,
            n: 0.168,
            m: 1.1,
            eps_dot_ref: 1.0,
            t_ref: 20.0,
            t_melt: 1540.0,
        }
    }

    /// (eps_p, rate, T) after the clamping policy: eps_p >= 0, rate >= rate0,
    /// T in [T_ref, T_melt].
    fn clamp(&self, eps_p: f64, rate: f64, temperature: f64) -> (f64, f64, f64) {
        (
            eps_p.max(0.0),
            rate.max(self.eps_dot_ref),
            temperature.clamp(self.t_ref, self.t_melt),
        )
    }
}

/// Elastic and thermal constants that accompany the flow law in the
/// material-point update. `E` is stored in GPa as tabulated; `alpha` is kept
/// for completeness of the property set but consumed by no operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalElasticParams {
    /// Young's modulus (GPa).
    pub e: f64,
    /// Poisson's ratio.
    pub nu: f64,
    /// Density (kg/m^3).
    pub rho: f64,
    /// Specific heat (J/kg.C).
    pub cp: f64,
    /// Thermal expansion coefficient (1/C).
    pub alpha: f64,
    /// Taylor-Quinney coefficient: fraction of plastic work converted to heat.
    pub eta: f64,
}

impl ThermalElasticParams {
    pub fn new(e: f64, nu: f64, rho: f64, cp: f64, alpha: f64, eta: f64) -> Result<Self> {
        if ![e, nu, rho, cp, alpha, eta].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("elastic parameters must be finite"));
        }
        if e <= 0.0 || rho <= 0.0 || cp <= 0.0 {
            return Err(Error::domain("require E > 0, rho > 0, Cp > 0"));
        }
        if !(0.0 < nu && nu < 0.5) {
            return Err(Error::domain("require 0 < nu < 0.5"));
        }
        if !(0.0 < eta && eta <= 1.0) {
            return Err(Error::domain("require 0 < eta <= 1"));
        }
        Ok(ThermalElasticParams {
            e,
            nu,
            rho,
            cp,
            alpha,
            eta,
        })
    }

    /// 42CrMo4 steel: E=206.9 GPa, nu=0.29, rho=7830, Cp=460, alpha=12.3e-6,
    /// eta=0.9.
    pub fn steel_42crmo4() -> Self {
        ThermalElasticParams {
            e: 206.9,
            nu: 0.29,
            rho: 7830.0,
            cp: 460.0,
            alpha: 12.3e-6,
            eta: 0.9,
        }
    }

    /// Shear modulus G = E/(2(1+nu)) in MPa.
    pub fn shear_modulus_mpa(&self) -> f64 {
        self.e * 1e3 / (2.0 * (1.0 + self.nu))
    }

    /// First Lame parameter in MPa.
    pub fn lame_lambda_mpa(&self) -> f64 {
        self.e * 1e3 * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
    }
}

fn check_finite(eps_p: f64, rate: f64, temperature: f64) -> Result<()> {
    if !(eps_p.is_finite() && rate.is_finite() && temperature.is_finite()) {
        return Err(Error::domain(format!(
            "non-finite flow-law input: eps_p={eps_p}, rate={rate}, T={temperature}"
        )));
    }
    Ok(())
}

/// Flow stress sigma(eps_p, rate, T) in MPa.
///
/// Inputs are clamped per the policy documented on [`JohnsonCookParams`]:
/// rate below the reference rate, temperature outside [T_ref, T_melt], and
/// negative eps_p are pulled back to the boundary before evaluation. The
/// result is exactly 0 at T = T_melt.
pub fn jc_flow_stress(p: &JohnsonCookParams, eps_p: f64, rate: f64, temperature: f64) -> Result<f64> {
    check_finite(eps_p, rate, temperature)?;
    let (eps_p, rate, temperature) = p.clamp(eps_p, rate, temperature);
    let theta = (temperature - p.t_ref) / (p.t_melt - p.t_ref);
    let hardening = p.a + p.b * eps_p.powf(p.n);
    let rate_term = 1.0 + p.c * (rate / p.eps_dot_ref).ln();
    let thermal = 1.0 - theta.powf(p.m);
    Ok(hardening * rate_term * thermal)
}

/// The three closed-form derivatives (d/d eps_p in MPa, d/d rate in MPa.s,
/// d/dT in MPa/C).
///
/// `eps_p` is floored at [`EPS_P_FLOOR`] for the first component. The
/// temperature derivative is evaluated as
/// `-(A + B eps^n)(1 + C ln(rate/rate0)) m theta^(m-1) / (Tm - T0)`,
/// which is finite at T = T_ref for m > 1.
pub fn jc_derivatives(
    p: &JohnsonCookParams,
    eps_p: f64,
    rate: f64,
    temperature: f64,
) -> Result<(f64, f64, f64)> {
    check_finite(eps_p, rate, temperature)?;
    let (eps_p, rate, temperature) = p.clamp(eps_p, rate, temperature);
    let eps_floored = eps_p.max(EPS_P_FLOOR);
    let theta = (temperature - p.t_ref) / (p.t_melt - p.t_ref);
    let hardening = p.a + p.b * eps_p.powf(p.n);
    let rate_term = 1.0 + p.c * (rate / p.eps_dot_ref).ln();
    let thermal = 1.0 - theta.powf(p.m);

    let d_eps = p.n * p.b * eps_floored.powf(p.n - 1.0) * rate_term * thermal;
    let d_rate = p.c / rate * hardening * thermal;
    let d_temp = -hardening * rate_term * p.m * theta.powf(p.m - 1.0) / (p.t_melt - p.t_ref);
    Ok((d_eps, d_rate, d_temp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> JohnsonCookParams {
        JohnsonCookParams::steel_42crmo4()
    }

    /// Central finite difference of the flow stress, with a relative step.
    pub(crate) fn fd_derivatives(
        p: &JohnsonCookParams,
        eps_p: f64,
        rate: f64,
        temperature: f64,
    ) -> (f64, f64, f64) {
        let he = 1e-6 * eps_p.max(1e-6);
        let hr = 1e-6 * rate;
        let ht = 1e-6 * (p.t_melt - p.t_ref);
        let f = |e, r, t| jc_flow_stress(p, e, r, t).unwrap();
        (
            (f(eps_p + he, rate, temperature) - f(eps_p - he, rate, temperature)) / (2.0 * he),
            (f(eps_p, rate + hr, temperature) - f(eps_p, rate - hr, temperature)) / (2.0 * hr),
            (f(eps_p, rate, temperature + ht) - f(eps_p, rate, temperature - ht)) / (2.0 * ht),
        )
    }

    #[test]
    fn reduces_to_a_at_reference_point() {
        assert_eq!(jc_flow_stress(&p(), 0.0, 1.0, 20.0).unwrap(), 806.0);
    }

    #[test]
    fn vanishes_exactly_at_melt() {
        for (e, r) in [(0.0, 1.0), (0.7, 400.0), (2.5, 50_000.0)] {
            assert_eq!(jc_flow_stress(&p(), e, r, 1540.0).unwrap(), 0.0);
        }
        // above melt clamps to melt
        assert_eq!(jc_flow_stress(&p(), 0.3, 10.0, 2000.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_high_precision_oracle() {
        // Independent mpmath evaluation of the flow law at (0.5, 500, 300).
        let got = jc_flow_stress(&p(), 0.5, 500.0, 300.0).unwrap();
        let expected = 1205.3073467988316;
        assert!(
            ((got - expected) / expected).abs() < 1e-12,
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn derivatives_match_oracle_point() {
        let (de, dr, dt) = jc_derivatives(&p(), 0.5, 500.0, 300.0).unwrap();
        // Frozen from the same mpmath evaluation.
        assert!(((de - 163.64134937038245) / de).abs() < 1e-12);
        assert!(((dr - 0.020330017272189951) / dr).abs() < 1e-12);
        assert!(((dt - -0.87216762394934986) / dt).abs() < 1e-12);
    }

    #[test]
    fn derivative_triple_matches_finite_differences() {
        let (de, dr, dt) = jc_derivatives(&p(), 0.5, 500.0, 300.0).unwrap();
        let (fe, fr, ft) = fd_derivatives(&p(), 0.5, 500.0, 300.0);
        assert!(((de - fe) / fe).abs() < 1e-5);
        assert!(((dr - fr) / fr).abs() < 1e-5);
        assert!(((dt - ft) / ft).abs() < 1e-5);
    }

    #[test]
    fn hardening_derivative_vanishes_at_melt() {
        let (de, _, _) = jc_derivatives(&p(), 0.4, 100.0, 1540.0).unwrap();
        assert_eq!(de, 0.0);
    }

    #[test]
    fn temperature_derivative_vanishes_at_reference() {
        let (_, _, dt) = jc_derivatives(&p(), 0.4, 100.0, 20.0).unwrap();
        assert_eq!(dt, 0.0);
    }

    #[test]
    fn rate_below_reference_clamps() {
        let lo = jc_flow_stress(&p(), 0.2, 0.01, 100.0).unwrap();
        let at = jc_flow_stress(&p(), 0.2, 1.0, 100.0).unwrap();
        assert_eq!(lo, at);
        let cold = jc_flow_stress(&p(), 0.2, 10.0, -40.0).unwrap();
        let ref_t = jc_flow_stress(&p(), 0.2, 10.0, 20.0).unwrap();
        assert_eq!(cold, ref_t);
    }

    #[test]
    fn non_finite_input_is_domain_error() {
        assert!(matches!(
            jc_flow_stress(&p(), f64::NAN, 1.0, 20.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            jc_derivatives(&p(), 0.1, f64::INFINITY, 20.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(JohnsonCookParams::new(806.0, 614.0, 0.0089, 0.168, 1.1, 1.0, 1540.0, 20.0).is_err());
        assert!(JohnsonCookParams::new(-1.0, 614.0, 0.0089, 0.168, 1.1, 1.0, 20.0, 1540.0).is_err());
        assert!(JohnsonCookParams::new(806.0, 614.0, 0.0089, 1.5, 1.1, 1.0, 20.0, 1540.0).is_err());
        assert!(ThermalElasticParams::new(206.9, 0.29, 7830.0, 460.0, 12.3e-6, 0.0).is_err());
        assert!(ThermalElasticParams::new(206.9, 0.6, 7830.0, 460.0, 12.3e-6, 0.9).is_err());
    }

    #[test]
    fn shear_modulus_from_table() {
        let m = ThermalElasticParams::steel_42crmo4();
        assert!((m.shear_modulus_mpa() - 80_193.798449612403).abs() < 1e-9);
        assert!((m.lame_lambda_mpa() - 110_743.8169066076).abs() < 1e-7);
    }

    #[test]
    fn monotonicity_spot_checks() {
        let p = p();
        let f = |e, r, t| jc_flow_stress(&p, e, r, t).unwrap();
        assert!(f(0.5, 100.0, 200.0) > f(0.2, 100.0, 200.0));
        assert!(f(0.5, 1000.0, 200.0) > f(0.5, 100.0, 200.0));
        assert!(f(0.5, 100.0, 400.0) < f(0.5, 100.0, 200.0));
    }
}
