//! Constitutive models for the MPM solver.
//!
//! Five material families are supported: neo-Hookean elastic solids,
//! von-Mises plasticine, Newtonian fluids, viscoplastic (non-Newtonian)
//! fluids and Drucker–Prager granular media. Every model exposes
//!
//! - [`cauchy_stress`]: the Kirchhoff-style `J·T` tensor, and
//! - [`return_map`]: the plastic projection `Z(F)` back onto the admissible
//!   region (identity for models without plasticity).
//!
//! Plasticity is formulated on the Hencky strain `ε = log Σ` of the proper
//! SVD `F = U Σ Vᵀ`. Since `ε` is diagonal in that basis the strain
//! quantities are carried as 3-vectors. All strain norms are Frobenius.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("Poisson ratio {0} must lie in (-1, 0.5)")]
    InvalidPoisson(f64),
    #[error("Young's modulus {0} must be positive")]
    InvalidModulus(f64),
    #[error("friction angle {0}° must lie in (0, 90)")]
    InvalidAngle(f64),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("deformation gradient has non-positive determinant {0}")]
    NonPositiveJ(f64),
    #[error("deformation gradient has non-positive determinant {0}")]
    SingularF(f64),
    #[error("fluid stress requires a velocity gradient")]
    MissingVelocityGradient,
    #[error("singular value decomposition failed")]
    SvdFailure,
    #[error("time step {0} must be positive")]
    InvalidTimeStep(f64),
}

pub type Result<T> = std::result::Result<T, ConstitutiveError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameParameters {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl LameParameters {
    pub fn from_modulus(youngs_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        lame_from_modulus(youngs_modulus, poisson_ratio)
    }
}

/// `μ = E / (2(1+ν))`, `λ = νE / ((1+ν)(1−2ν))`.
pub fn lame_from_modulus(youngs_modulus: f64, poisson_ratio: f64) -> Result<LameParameters> {
    if !(youngs_modulus > 0.0 && youngs_modulus.is_finite()) {
        return Err(ConstitutiveError::InvalidModulus(youngs_modulus));
    }
    if !(poisson_ratio > -1.0 && poisson_ratio < 0.5) {
        return Err(ConstitutiveError::InvalidPoisson(poisson_ratio));
    }
    let e = youngs_modulus;
    let nu = poisson_ratio;
    Ok(LameParameters {
        youngs_modulus: e,
        poisson_ratio: nu,
        mu: e / (2.0 * (1.0 + nu)),
        lambda: nu * e / ((1.0 + nu) * (1.0 - 2.0 * nu)),
    })
}

/// Drucker–Prager cone slope `α = √(2/3)·2 sin θ / (3 − sin θ)` for a
/// friction angle in degrees.
pub fn drucker_prager_alpha(theta_deg: f64) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg < 90.0) {
        return Err(ConstitutiveError::InvalidAngle(theta_deg));
    }
    let s = theta_deg.to_radians().sin();
    Ok((2.0f64 / 3.0).sqrt() * 2.0 * s / (3.0 - s))
}

/// Which yield measure drives the viscoplastic return map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonNewtonianYield {
    /// `δγ = ‖ε̂‖ − τ_Y/(2μ)`, the plasticine measure reused verbatim.
    StrainSpace,
    /// `δγ = ‖s‖ − τ_Y` with `s = 2μ ε̂`. Reduces to plasticine as `η → 0`.
    #[default]
    StressSpace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialModel {
    ElasticSolid {
        lame: LameParameters,
    },
    Plasticine {
        lame: LameParameters,
        yield_stress: f64,
    },
    NewtonianFluid {
        viscosity: f64,
        bulk_modulus: f64,
    },
    NonNewtonianFluid {
        shear_modulus: f64,
        bulk_modulus: f64,
        yield_stress: f64,
        plastic_viscosity: f64,
        yield_measure: NonNewtonianYield,
    },
    Granular {
        lame: LameParameters,
        /// Degrees.
        friction_angle: f64,
        alpha: f64,
    },
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConstitutiveError::InvalidParameter { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConstitutiveError::InvalidParameter { name, value })
    }
}

impl MaterialModel {
    pub fn elastic(youngs_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        Ok(Self::ElasticSolid {
            lame: lame_from_modulus(youngs_modulus, poisson_ratio)?,
        })
    }

    pub fn plasticine(youngs_modulus: f64, poisson_ratio: f64, yield_stress: f64) -> Result<Self> {
        Ok(Self::Plasticine {
            lame: lame_from_modulus(youngs_modulus, poisson_ratio)?,
            yield_stress: non_negative("yield_stress", yield_stress)?,
        })
    }

    pub fn newtonian(viscosity: f64, bulk_modulus: f64) -> Result<Self> {
        Ok(Self::NewtonianFluid {
            viscosity: positive("viscosity", viscosity)?,
            bulk_modulus: positive("bulk_modulus", bulk_modulus)?,
        })
    }

    pub fn non_newtonian(
        shear_modulus: f64,
        bulk_modulus: f64,
        yield_stress: f64,
        plastic_viscosity: f64,
    ) -> Result<Self> {
        Ok(Self::NonNewtonianFluid {
            shear_modulus: positive("shear_modulus", shear_modulus)?,
            bulk_modulus: positive("bulk_modulus", bulk_modulus)?,
            yield_stress: non_negative("yield_stress", yield_stress)?,
            plastic_viscosity: positive("plastic_viscosity", plastic_viscosity)?,
            yield_measure: NonNewtonianYield::default(),
        })
    }

    pub fn granular(youngs_modulus: f64, poisson_ratio: f64, friction_angle: f64) -> Result<Self> {
        Ok(Self::Granular {
            lame: lame_from_modulus(youngs_modulus, poisson_ratio)?,
            friction_angle,
            alpha: drucker_prager_alpha(friction_angle)?,
        })
    }

    /// Switches the yield measure of a non-Newtonian model; other models are
    /// returned unchanged.
    pub fn with_yield_measure(self, measure: NonNewtonianYield) -> Self {
        match self {
            Self::NonNewtonianFluid {
                shear_modulus,
                bulk_modulus,
                yield_stress,
                plastic_viscosity,
                ..
            } => Self::NonNewtonianFluid {
                shear_modulus,
                bulk_modulus,
                yield_stress,
                plastic_viscosity,
                yield_measure: measure,
            },
            other => other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ElasticSolid { .. } => "elastic_solid",
            Self::Plasticine { .. } => "plasticine",
            Self::NewtonianFluid { .. } => "newtonian_fluid",
            Self::NonNewtonianFluid { .. } => "non_newtonian_fluid",
            Self::Granular { .. } => "granular",
        }
    }

    /// True for models whose `F` is tracked only through `J`.
    pub fn tracks_volume_only(&self) -> bool {
        matches!(self, Self::NewtonianFluid { .. })
    }

    pub fn is_fluid(&self) -> bool {
        matches!(
            self,
            Self::NewtonianFluid { .. } | Self::NonNewtonianFluid { .. }
        )
    }

    /// Shear modulus and dilatational Lamé constant, where defined.
    fn shear_and_lambda(&self) -> Option<(f64, f64)> {
        match *self {
            Self::ElasticSolid { lame } | Self::Plasticine { lame, .. } | Self::Granular { lame, .. } => {
                Some((lame.mu, lame.lambda))
            }
            Self::NonNewtonianFluid {
                shear_modulus,
                bulk_modulus,
                ..
            } => Some((shear_modulus, bulk_modulus - 2.0 * shear_modulus / 3.0)),
            Self::NewtonianFluid { .. } => None,
        }
    }

    /// Rough dilatational wave speed numerator (`λ + 2μ` or `κ`), used for
    /// CFL estimates.
    pub fn stiffness(&self) -> f64 {
        match *self {
            Self::NewtonianFluid { bulk_modulus, .. } => 7.0 * bulk_modulus,
            _ => {
                let (mu, lambda) = self.shear_and_lambda().unwrap_or((0.0, 0.0));
                lambda + 2.0 * mu
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationState {
    pub f: Mat3,
    pub j: f64,
    /// Spatial velocity gradient; required by the Newtonian model.
    pub velocity_gradient: Option<Mat3>,
}

impl DeformationState {
    pub fn new(f: Mat3) -> Self {
        Self {
            f,
            j: f.determinant(),
            velocity_gradient: None,
        }
    }

    pub fn with_velocity_gradient(mut self, grad_v: Mat3) -> Self {
        self.velocity_gradient = Some(grad_v);
        self
    }
}

/// Proper SVD of `F` together with its Hencky strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hencky {
    pub u: Mat3,
    pub sigma: Vec3,
    pub v: Mat3,
    /// Diagonal of `ε = log Σ`.
    pub strain: Vec3,
    /// Diagonal of the deviator `ε̂ = ε − (tr ε / 3) I`.
    pub deviatoric: Vec3,
}

impl Hencky {
    pub fn trace(&self) -> f64 {
        self.strain.sum()
    }

    pub fn deviatoric_norm(&self) -> f64 {
        self.deviatoric.norm()
    }

    pub fn strain_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.strain)
    }

    pub fn deviatoric_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.deviatoric)
    }

    /// `U exp(diag(e)) Vᵀ`.
    fn rebuild(&self, log_sigma: Vec3) -> Mat3 {
        self.u * Mat3::from_diagonal(&log_sigma.map(f64::exp)) * self.v.transpose()
    }
}

/// SVD with `det U = det V = +1`. Requires `det F > 0`.
pub fn proper_svd(f: &Mat3) -> Result<(Mat3, Vec3, Mat3)> {
    let det = f.determinant();
    if !(det > 0.0) {
        return Err(ConstitutiveError::SingularF(det));
    }
    let svd = f.svd(true, true);
    let (mut u, mut v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(ConstitutiveError::SvdFailure),
    };
    let sigma = svd.singular_values;
    if sigma.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(ConstitutiveError::SvdFailure);
    }
    if u.determinant() < 0.0 {
        // det F > 0 forces det U and det V to share a sign, so flipping the
        // same column of both keeps F = U Σ Vᵀ and Σ positive.
        let k = sigma.imin();
        u.column_mut(k).neg_mut();
        v_t.row_mut(k).neg_mut();
    }
    Ok((u, sigma, v_t.transpose()))
}

/// `F = U Σ Vᵀ`, `ε = log Σ`, `ε̂ = ε − (tr ε/3) I`.
pub fn hencky_strain(f: &Mat3) -> Result<Hencky> {
    let (u, sigma, v) = proper_svd(f)?;
    let strain = sigma.map(f64::ln);
    let mean = strain.sum() / 3.0;
    Ok(Hencky {
        u,
        sigma,
        v,
        strain,
        deviatoric: strain.add_scalar(-mean),
    })
}

/// `U (2μ ε + λ tr ε I) Uᵀ`.
fn hencky_stvk_stress(h: &Hencky, mu: f64, lambda: f64) -> Mat3 {
    let tr = h.trace();
    let diag = h.strain.map(|e| 2.0 * mu * e + lambda * tr);
    h.u * Mat3::from_diagonal(&diag) * h.u.transpose()
}

/// The `J·T` stress of `m` at deformation `d`.
pub fn cauchy_stress(m: &MaterialModel, d: &DeformationState) -> Result<Mat3> {
    if !(d.j > 0.0) {
        return Err(ConstitutiveError::NonPositiveJ(d.j));
    }
    let stress = match *m {
        MaterialModel::ElasticSolid { lame } => {
            let f = d.f;
            lame.mu * (f * f.transpose())
                + Mat3::identity() * (lame.lambda * d.j.ln() - lame.mu)
        }
        MaterialModel::Plasticine { lame, .. } | MaterialModel::Granular { lame, .. } => {
            hencky_stvk_stress(&hencky_strain(&d.f)?, lame.mu, lame.lambda)
        }
        MaterialModel::NewtonianFluid {
            viscosity,
            bulk_modulus,
        } => {
            let g = d
                .velocity_gradient
                .ok_or(ConstitutiveError::MissingVelocityGradient)?;
            0.5 * viscosity * (g + g.transpose())
                + Mat3::identity() * (bulk_modulus * (d.j - d.j.powi(-6)))
        }
        MaterialModel::NonNewtonianFluid { .. } => {
            let (mu, lambda) = m.shear_and_lambda().expect("non-Newtonian has moduli");
            hencky_stvk_stress(&hencky_strain(&d.f)?, mu, lambda)
        }
    };
    Ok(stress)
}

/// Plastic projection `Z(F)`. `dt` only matters for the viscoplastic model.
pub fn return_map(m: &MaterialModel, f: &Mat3, dt: f64) -> Result<Mat3> {
    let det = f.determinant();
    if !(det > 0.0) {
        return Err(ConstitutiveError::SingularF(det));
    }
    match *m {
        MaterialModel::ElasticSolid { .. } | MaterialModel::NewtonianFluid { .. } => Ok(*f),
        MaterialModel::Plasticine { lame, yield_stress } => {
            let h = hencky_strain(f)?;
            let norm = h.deviatoric_norm();
            let dgamma = norm - yield_stress / (2.0 * lame.mu);
            if dgamma <= 0.0 || norm == 0.0 {
                return Ok(*f);
            }
            Ok(h.rebuild(h.strain - h.deviatoric * (dgamma / norm)))
        }
        MaterialModel::NonNewtonianFluid {
            shear_modulus: mu,
            yield_stress,
            plastic_viscosity: eta,
            yield_measure,
            ..
        } => {
            if !(dt > 0.0) {
                return Err(ConstitutiveError::InvalidTimeStep(dt));
            }
            let h = hencky_strain(f)?;
            let norm = h.deviatoric_norm();
            let s_norm = 2.0 * mu * norm;
            let dgamma = match yield_measure {
                NonNewtonianYield::StrainSpace => norm - yield_stress / (2.0 * mu),
                NonNewtonianYield::StressSpace => s_norm - yield_stress,
            };
            if dgamma <= 0.0 || norm == 0.0 {
                return Ok(*f);
            }
            let mu_hat = mu * h.sigma.norm_squared() / 3.0;
            let s_hat = s_norm - dgamma / (1.0 + eta / (2.0 * mu_hat * dt));
            let mean = h.trace() / 3.0;
            let target = (h.deviatoric / norm) * (s_hat / (2.0 * mu));
            Ok(h.rebuild(target.add_scalar(mean)))
        }
        MaterialModel::Granular { lame, alpha, .. } => {
            let h = hencky_strain(f)?;
            let tr = h.trace();
            if tr > 0.0 {
                return Ok(h.u * h.v.transpose());
            }
            let norm = h.deviatoric_norm();
            let dgamma = norm
                + alpha * (3.0 * lame.lambda + 2.0 * lame.mu) * tr / (2.0 * lame.mu);
            if dgamma <= 0.0 || norm < 1e-12 {
                return Ok(*f);
            }
            Ok(h.rebuild(h.strain - h.deviatoric * (dgamma / norm)))
        }
    }
}

/// Amount by which `F` violates the model's yield condition; `≤ 0` means
/// admissible. For granular media this is `max(tr ε, δγ)`. Models without
/// plasticity return `0`.
pub fn yield_violation(m: &MaterialModel, f: &Mat3) -> Result<f64> {
    match *m {
        MaterialModel::ElasticSolid { .. } | MaterialModel::NewtonianFluid { .. } => Ok(0.0),
        MaterialModel::Plasticine { lame, yield_stress } => {
            Ok(hencky_strain(f)?.deviatoric_norm() - yield_stress / (2.0 * lame.mu))
        }
        MaterialModel::NonNewtonianFluid {
            shear_modulus: mu,
            yield_stress,
            yield_measure,
            ..
        } => {
            let norm = hencky_strain(f)?.deviatoric_norm();
            Ok(match yield_measure {
                NonNewtonianYield::StrainSpace => norm - yield_stress / (2.0 * mu),
                NonNewtonianYield::StressSpace => 2.0 * mu * norm - yield_stress,
            })
        }
        MaterialModel::Granular { lame, alpha, .. } => {
            let h = hencky_strain(f)?;
            let tr = h.trace();
            let dgamma = h.deviatoric_norm()
                + alpha * (3.0 * lame.lambda + 2.0 * lame.mu) * tr / (2.0 * lame.mu);
            Ok(tr.max(dgamma))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn frob(a: &Mat3, b: &Mat3) -> f64 {
        (a - b).norm()
    }

    fn arb_rotation() -> impl Strategy<Value = Mat3> {
        (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
            .prop_map(|(a, b, c)| Rotation3::from_euler_angles(a, b, c).into_inner())
    }

    /// `R1 diag(s) R2` with singular values in `[lo, hi]`.
    fn arb_f(lo: f64, hi: f64) -> impl Strategy<Value = Mat3> {
        (arb_rotation(), arb_rotation(), lo..hi, lo..hi, lo..hi)
            .prop_map(|(r1, r2, a, b, c)| r1 * Mat3::from_diagonal(&Vec3::new(a, b, c)) * r2)
    }

    #[test]
    fn lame_examples() {
        let l = lame_from_modulus(2.0, 0.0).unwrap();
        assert_eq!((l.mu, l.lambda), (1.0, 0.0));
        let l = lame_from_modulus(1.0, 0.25).unwrap();
        assert!((l.mu - 0.4).abs() < 1e-15 && (l.lambda - 0.4).abs() < 1e-15);
        assert_eq!(
            lame_from_modulus(1.0, 0.5),
            Err(ConstitutiveError::InvalidPoisson(0.5))
        );
        assert!(lame_from_modulus(-1.0, 0.2).is_err());
    }

    #[test]
    fn alpha_examples() {
        let a30 = drucker_prager_alpha(30.0).unwrap();
        assert!((a30 - (2.0f64 / 3.0).sqrt() / 2.5).abs() < 1e-12);
        assert!((a30 - 0.32660).abs() < 1e-5);
        assert!(drucker_prager_alpha(1e-9).unwrap() < 1e-9);
        assert!(drucker_prager_alpha(15.0).unwrap() < drucker_prager_alpha(60.0).unwrap());
        assert!(drucker_prager_alpha(0.0).is_err());
        assert!(drucker_prager_alpha(90.0).is_err());
        let mut prev = 0.0;
        for k in 1..900 {
            let a = drucker_prager_alpha(k as f64 * 0.1).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn elastic_stress_examples() {
        let m = MaterialModel::ElasticSolid {
            lame: LameParameters {
                youngs_modulus: 0.0,
                poisson_ratio: 0.0,
                mu: 1.0,
                lambda: 1.0,
            },
        };
        let s = cauchy_stress(&m, &DeformationState::new(Mat3::identity())).unwrap();
        assert_eq!(s, Mat3::zeros());
        let f = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        let s = cauchy_stress(&m, &DeformationState::new(f)).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let expect = Mat3::from_diagonal(&Vec3::new(3.0 + ln2, ln2, ln2));
        assert!(frob(&s, &expect) < 1e-12);
        assert!((s[(0, 0)] - 3.6931).abs() < 1e-4);
    }

    #[test]
    fn newtonian_rest_state_and_missing_gradient() {
        let m = MaterialModel::newtonian(50.0, 1000.0).unwrap();
        let d = DeformationState::new(Mat3::identity());
        assert_eq!(
            cauchy_stress(&m, &d),
            Err(ConstitutiveError::MissingVelocityGradient)
        );
        let s = cauchy_stress(&m, &d.with_velocity_gradient(Mat3::zeros())).unwrap();
        assert_eq!(s, Mat3::zeros());
    }

    #[test]
    fn non_positive_j_is_an_error() {
        let m = MaterialModel::elastic(1e4, 0.3).unwrap();
        let f = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(matches!(
            cauchy_stress(&m, &DeformationState::new(f)),
            Err(ConstitutiveError::NonPositiveJ(_))
        ));
        assert!(matches!(
            return_map(&m, &f, 1e-3),
            Err(ConstitutiveError::SingularF(_))
        ));
    }

    #[test]
    fn hencky_examples() {
        let h = hencky_strain(&Mat3::identity()).unwrap();
        assert!(h.strain.norm() < 1e-15 && h.deviatoric.norm() < 1e-15);

        let e = std::f64::consts::E;
        let h = hencky_strain(&(Mat3::identity() * e)).unwrap();
        assert!((h.strain - Vec3::repeat(1.0)).norm() < 1e-14);
        assert!(h.deviatoric.norm() < 1e-14);

        let h = hencky_strain(&Mat3::from_diagonal(&Vec3::new(2.0, 0.5, 1.0))).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let mut eps: Vec<f64> = h.strain.iter().copied().collect();
        eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eps[0] + ln2).abs() < 1e-14 && eps[1].abs() < 1e-14 && (eps[2] - ln2).abs() < 1e-14);
        assert!(h.trace().abs() < 1e-14);
        assert!((h.strain - h.deviatoric).norm() < 1e-14);
    }

    #[test]
    fn plasticine_rotation_is_elastic() {
        let m = MaterialModel::plasticine(1e4, 0.3, 5.0).unwrap();
        let r = Rotation3::from_euler_angles(0.3, -1.2, 2.0).into_inner();
        assert_eq!(return_map(&m, &r, 1e-3).unwrap(), r);
    }

    #[test]
    fn granular_expansion_snaps_to_rotation() {
        let m = MaterialModel::granular(1e4, 0.3, 30.0).unwrap();
        let f = Mat3::identity() * 1.2;
        assert!(frob(&return_map(&m, &f, 1e-3).unwrap(), &Mat3::identity()) < 1e-12);
    }

    #[test]
    fn viscoplastic_relaxation_contracts_yield_measure() {
        // With η > 0 one application relaxes the stress-space overshoot by the
        // factor k/(1+k), k = η/(2μ̂Δt).
        let (mu, tau, eta, dt) = (100.0, 2.0, 5.0, 1.0 / 150.0);
        let m = MaterialModel::non_newtonian(mu, 500.0, tau, eta).unwrap();
        let f = Mat3::from_diagonal(&Vec3::new(1.3, 0.8, 1.0 / (1.3 * 0.8)));
        let before = yield_violation(&m, &f).unwrap();
        assert!(before > 0.0);
        let h = hencky_strain(&f).unwrap();
        let k = eta / (2.0 * mu * h.sigma.norm_squared() / 3.0 * dt);
        let after = yield_violation(&m, &return_map(&m, &f, dt).unwrap()).unwrap();
        assert!((after - before * k / (1.0 + k)).abs() < 1e-9 * before);
    }

    #[test]
    fn strain_space_switch_changes_the_map() {
        let base = MaterialModel::non_newtonian(3.0, 10.0, 1.0, 1e-12).unwrap();
        let strain = base.with_yield_measure(NonNewtonianYield::StrainSpace);
        let f = Mat3::from_diagonal(&Vec3::new(1.5, 0.7, 1.0));
        let a = return_map(&base, &f, 1e-2).unwrap();
        let b = return_map(&strain, &f, 1e-2).unwrap();
        assert!(frob(&a, &b) > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn hencky_reconstructs_f(f in arb_f(0.3, 3.0)) {
            let h = hencky_strain(&f).unwrap();
            prop_assert!(h.u.determinant() > 0.0 && h.v.determinant() > 0.0);
            prop_assert!(frob(&h.rebuild(h.strain), &f) < 1e-8);
        }

        #[test]
        fn large_yield_stress_is_elastic(f in arb_f(0.5, 2.0)) {
            let m = MaterialModel::Plasticine {
                lame: LameParameters { youngs_modulus: 2.0, poisson_ratio: 0.0, mu: 1.0, lambda: 0.0 },
                yield_stress: 1e6,
            };
            prop_assert!(yield_violation(&m, &f).unwrap() < 0.0);
            prop_assert_eq!(return_map(&m, &f, 1e-3).unwrap(), f);
        }

        #[test]
        fn elastic_stress_is_rotation_covariant(f in arb_f(0.5, 2.0), r in arb_rotation()) {
            let m = MaterialModel::elastic(1e3, 0.3).unwrap();
            let s = cauchy_stress(&m, &DeformationState::new(f)).unwrap();
            let s_rot = cauchy_stress(&m, &DeformationState::new(r * f)).unwrap();
            let expect = r * s * r.transpose();
            prop_assert!(frob(&s_rot, &expect) <= 1e-8 * expect.norm().max(1.0));
        }

        #[test]
        fn stresses_are_symmetric(f in arb_f(0.5, 2.0)) {
            for m in [
                MaterialModel::elastic(1e3, 0.3).unwrap(),
                MaterialModel::plasticine(1e3, 0.3, 2.0).unwrap(),
                MaterialModel::granular(1e3, 0.3, 30.0).unwrap(),
                MaterialModel::non_newtonian(300.0, 1e3, 2.0, 5.0).unwrap(),
            ] {
                let s = cauchy_stress(&m, &DeformationState::new(f)).unwrap();
                prop_assert!(frob(&s, &s.transpose()) <= 1e-9 * s.norm().max(1.0));
            }
        }

        #[test]
        fn rate_independent_maps_are_idempotent(f in arb_f(0.6, 1.6)) {
            for m in [
                MaterialModel::plasticine(1e3, 0.3, 50.0).unwrap(),
                MaterialModel::granular(1e3, 0.3, 30.0).unwrap(),
                MaterialModel::non_newtonian(300.0, 1e3, 50.0, 1e-12).unwrap(),
                MaterialModel::elastic(1e3, 0.3).unwrap(),
            ] {
                let z = return_map(&m, &f, 1.0 / 150.0).unwrap();
                let zz = return_map(&m, &z, 1.0 / 150.0).unwrap();
                prop_assert!(frob(&z, &zz) < 1e-6);
                prop_assert!(yield_violation(&m, &z).unwrap() <= 1e-8);
            }
        }
    }
}
