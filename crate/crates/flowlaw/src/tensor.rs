//! Symmetric second-order tensors with six independent components.

/// Symmetric tensor stored as (xx, yy, zz, xy, yz, zx). Shear components are
/// tensor components, not engineering shears.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub yz: f64,
    pub zx: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor {
        xx: 0.0,
        yy: 0.0,
        zz: 0.0,
        xy: 0.0,
        yz: 0.0,
        zx: 0.0,
    };

    pub fn diag(xx: f64, yy: f64, zz: f64) -> Self {
        SymTensor {
            xx,
            yy,
            zz,
            ..SymTensor::ZERO
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn deviator(&self) -> SymTensor {
        let p = self.trace() / 3.0;
        SymTensor {
            xx: self.xx - p,
            yy: self.yy - p,
            zz: self.zz - p,
            ..*self
        }
    }

    /// Full double contraction a : a (off-diagonals counted twice).
    pub fn double_contraction(&self) -> f64 {
        self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.yz * self.yz + self.zx * self.zx)
    }

    /// Frobenius norm sqrt(a : a).
    pub fn norm(&self) -> f64 {
        self.double_contraction().sqrt()
    }

    /// Von Mises equivalent sqrt(3/2 s:s) of the deviatoric part.
    pub fn von_mises(&self) -> f64 {
        (1.5 * self.deviator().double_contraction()).sqrt()
    }

    pub fn scale(&self, k: f64) -> SymTensor {
        SymTensor {
            xx: k * self.xx,
            yy: k * self.yy,
            zz: k * self.zz,
            xy: k * self.xy,
            yz: k * self.yz,
            zx: k * self.zx,
        }
    }

    pub fn add(&self, other: &SymTensor) -> SymTensor {
        SymTensor {
            xx: self.xx + other.xx,
            yy: self.yy + other.yy,
            zz: self.zz + other.zz,
            xy: self.xy + other.xy,
            yz: self.yz + other.yz,
            zx: self.zx + other.zx,
        }
    }

    /// a : b with off-diagonals counted twice.
    pub fn inner(&self, other: &SymTensor) -> f64 {
        self.xx * other.xx
            + self.yy * other.yy
            + self.zz * other.zz
            + 2.0 * (self.xy * other.xy + self.yz * other.yz + self.zx * other.zx)
    }

    pub fn is_finite(&self) -> bool {
        [self.xx, self.yy, self.zz, self.xy, self.yz, self.zx]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviator_is_traceless() {
        let t = SymTensor {
            xx: 3.0,
            yy: -1.0,
            zz: 5.0,
            xy: 2.0,
            yz: 0.5,
            zx: -0.25,
        };
        assert!(t.deviator().trace().abs() < 1e-12);
    }

    #[test]
    fn von_mises_of_uniaxial() {
        // uniaxial sigma_xx = s has von Mises s
        let t = SymTensor::diag(250.0, 0.0, 0.0);
        assert!((t.von_mises() - 250.0).abs() < 1e-10);
    }

    #[test]
    fn von_mises_of_pure_shear() {
        // pure shear tau has von Mises sqrt(3) tau
        let t = SymTensor {
            xy: 100.0,
            ..SymTensor::ZERO
        };
        assert!((t.von_mises() - 100.0 * 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn hydrostatic_has_zero_von_mises() {
        let t = SymTensor::diag(7.0, 7.0, 7.0);
        assert_eq!(t.von_mises(), 0.0);
    }
}
