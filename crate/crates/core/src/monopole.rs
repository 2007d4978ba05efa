//! Angular profiles, monopole charges and Dirac-string diagnostics.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::beams::{Point, SingularityGuard, StepRule};
use crate::error::{Error, Result};
use crate::gauge_fields::{Connection, ConnectionField, CurvatureField, NumericCurvature};
use crate::linalg::{self, real, CMatrix};
use crate::quadrature::{extrapolate_to_zero, gauss_legendre_on, pairwise_sum};
use crate::su3::Decomposition;

/// Strings count as undetectable when `‖exp(4πiQ) − 𝟙‖` stays below this.
pub const DETECTABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSettings {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Pole samples sit at `multiple · pole_eps` from each pole.
    pub pole_eps: f64,
    pub pole_multiples: Vec<f64>,
    /// Bound on the azimuthal spread of the per-azimuth pole limits.
    pub variation_bound: f64,
    /// Largest accepted gap between the full and the next-lower-order pole extrapolant.
    pub convergence_tolerance: f64,
    /// Extrapolate the azimuthal means in `t²`. Holds when the frames are smooth
    /// through the poles; gauges built from the polar angle itself break it.
    pub even_poles: bool,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self {
            n_theta: 32,
            n_phi: 8,
            pole_eps: 1e-2,
            pole_multiples: vec![8.0, 4.0, 2.0],
            variation_bound: 1e-3,
            convergence_tolerance: 1e-2,
            even_poles: true,
        }
    }
}

/// Samples of `g` approaching one pole.
///
/// For frames that are smooth through the pole the azimuthal mean of `g` is a
/// function of the squared polar offset and is extrapolated in `t²`. Single
/// azimuths carry odd terms and are always extrapolated in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleApproach {
    /// Angular distances from the pole.
    pub offsets: Vec<f64>,
    pub even: bool,
    /// Azimuthal means at each offset.
    pub values: Vec<CMatrix>,
    /// Pole limit extrapolated separately along each azimuth.
    pub per_azimuth_limits: Vec<CMatrix>,
}

impl PoleApproach {
    pub fn limit(&self) -> CMatrix {
        extrapolate_to_zero(&self.abscissae(), &self.values)
    }

    fn abscissae(&self) -> Vec<f64> {
        let power = if self.even { 2 } else { 1 };
        self.offsets.iter().map(|t| t.powi(power)).collect()
    }

    /// Gap between the full extrapolant and the one that drops the farthest sample.
    pub fn spread(&self) -> f64 {
        if self.offsets.len() < 2 {
            return 0.0;
        }
        let lower = extrapolate_to_zero(&self.abscissae()[1..], &self.values[1..]);
        linalg::max_abs_diff(&self.limit(), &lower)
    }

    fn azimuthal_variation(&self) -> f64 {
        let n = self.per_azimuth_limits.len() as f64;
        let mean = pairwise_sum(&self.per_azimuth_limits) * real(1.0 / n);
        self.per_azimuth_limits.iter().fold(0.0, |acc, m| acc.max(linalg::max_abs_diff(m, &mean)))
    }
}

/// `g(θ) = r sinθ ⟨A_φ⟩ / ħ` on a sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    pub radius: f64,
    pub thetas: Vec<f64>,
    pub values: Vec<CMatrix>,
    pub north: PoleApproach,
    pub south: PoleApproach,
    /// Largest deviation of a single-azimuth sample from the azimuthal mean.
    pub raw_variation: f64,
    /// Largest deviation of a single-azimuth pole limit from the mean limit.
    pub pole_variation: f64,
}

fn azimuths(n_phi: usize) -> Vec<f64> {
    (0..n_phi).map(|j| TAU * j as f64 / n_phi as f64).collect()
}

/// `r sinθ A_φ / ħ` at every azimuth of a ring.
fn ring(a: &dyn ConnectionField, r: f64, theta: f64, phis: &[f64], hbar: f64) -> Result<Vec<CMatrix>> {
    phis.iter()
        .map(|&phi| {
            let p = Point::from_spherical(r, theta, phi);
            let conn = a.connection(&p)?;
            Ok(conn.along(&p.e_phi()) * real(r * theta.sin() / hbar))
        })
        .collect()
}

fn mean(samples: &[CMatrix]) -> CMatrix {
    pairwise_sum(samples) * real(1.0 / samples.len() as f64)
}

fn max_deviation(samples: &[CMatrix], m: &CMatrix) -> f64 {
    samples.iter().fold(0.0, |acc, s| acc.max(linalg::max_abs_diff(s, m)))
}

pub fn angular_profile(
    a: &dyn ConnectionField,
    r: f64,
    settings: &ProfileSettings,
    hbar: f64,
) -> Result<AngularProfile> {
    if settings.n_theta < 2 || settings.n_phi == 0 || settings.pole_multiples.is_empty() {
        return Err(Error::InvalidParameter("profile needs n_theta ≥ 2, n_phi ≥ 1 and pole samples".into()));
    }
    let phis = azimuths(settings.n_phi);
    let eps = settings.pole_eps;
    let n = settings.n_theta;
    let thetas: Vec<f64> = (0..n).map(|j| eps + (PI - 2.0 * eps) * j as f64 / (n - 1) as f64).collect();
    let offsets: Vec<f64> = settings.pole_multiples.iter().map(|m| m * eps).collect();

    let mut all_thetas = thetas.clone();
    all_thetas.extend(offsets.iter().copied());
    all_thetas.extend(offsets.iter().map(|t| PI - t));
    let rings: Vec<Vec<CMatrix>> = all_thetas
        .par_iter()
        .map(|&theta| ring(a, r, theta, &phis, hbar))
        .collect::<Result<_>>()?;

    let mut raw_variation: f64 = 0.0;
    let means: Vec<CMatrix> = rings
        .iter()
        .map(|samples| {
            let m = mean(samples);
            raw_variation = raw_variation.max(max_deviation(samples, &m));
            m
        })
        .collect();

    let k = offsets.len();
    let approach = |start: usize| {
        let rs = &rings[start..start + k];
        let per_azimuth_limits = (0..phis.len())
            .map(|j| {
                let vals: Vec<CMatrix> = rs.iter().map(|ring| ring[j].clone()).collect();
                extrapolate_to_zero(&offsets, &vals)
            })
            .collect();
        PoleApproach { offsets: offsets.clone(), even: settings.even_poles, values: means[start..start + k].to_vec(), per_azimuth_limits }
    };
    let north = approach(n);
    let south = approach(n + k);
    let pole_variation = north.azimuthal_variation().max(south.azimuthal_variation());
    if pole_variation > settings.variation_bound {
        return Err(Error::ExcessiveAzimuthalVariation { variation: pole_variation, bound: settings.variation_bound });
    }
    Ok(AngularProfile {
        radius: r,
        thetas,
        values: means[..n].to_vec(),
        north,
        south,
        raw_variation,
        pole_variation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringAnalysis {
    /// String flux `−2π g(0)` carried along `z > 0`.
    pub flux_north: CMatrix,
    /// String flux `−2π g(π)` carried along `z < 0`.
    pub flux_south: CMatrix,
    /// `‖exp(4πiQ) − 𝟙‖_F`.
    pub detectability_residual: f64,
    pub undetectable: bool,
}

pub fn string_analysis(g_north: &CMatrix, g_south: &CMatrix) -> StringAnalysis {
    let q = (g_south - g_north) * real(0.5);
    let phase = linalg::expm_i_hermitian(&q, 4.0 * PI);
    let detectability_residual = (phase - linalg::identity(q.nrows())).norm();
    StringAnalysis {
        flux_north: g_north * real(-TAU),
        flux_south: g_south * real(-TAU),
        detectability_residual,
        undetectable: detectability_residual <= DETECTABILITY_TOLERANCE,
    }
}

/// Charge obtained from the flux through a sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCharge {
    pub caps: Vec<f64>,
    pub values: Vec<CMatrix>,
    pub extrapolated: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeReport {
    pub radius: f64,
    /// Dimensionless charge matrix `(g(π) − g(0))/2`.
    pub charge: CMatrix,
    pub g_north: CMatrix,
    pub g_south: CMatrix,
    pub decomposition: Decomposition,
    /// Coefficient of the reference generator, when one is supplied.
    pub scalar_charge: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub string: StringAnalysis,
    pub surface: Option<SurfaceCharge>,
    pub pole_spread: f64,
    pub raw_variation: f64,
    pub pole_variation: f64,
    /// Largest `‖[Q, g(θ_j)]‖` over the profile samples.
    pub commutator_with_profile: f64,
}

impl ChargeReport {
    pub fn surface_agreement(&self) -> Option<f64> {
        self.surface.as_ref().map(|s| linalg::max_abs_diff(&s.extrapolated, &self.charge))
    }
}

/// `Tr(Q M) / Tr(M M)` for Hermitian `M`.
pub fn coefficient_along(q: &CMatrix, m: &CMatrix) -> f64 {
    linalg::trace(&(q * m)).re / linalg::trace(&(m * m)).re
}

pub fn charge_from_profile(
    profile: &AngularProfile,
    settings: &ProfileSettings,
    reference: Option<&CMatrix>,
) -> Result<ChargeReport> {
    let spread = profile.north.spread().max(profile.south.spread());
    if !spread.is_finite() || spread > settings.convergence_tolerance {
        return Err(Error::ProfileNotConverged { spread });
    }
    let g_north = profile.north.limit();
    let g_south = profile.south.limit();
    let charge = linalg::hermitize(&((&g_south - &g_north) * real(0.5))).0;
    let commutator_with_profile = profile
        .values
        .iter()
        .fold(0.0_f64, |acc, g| acc.max(linalg::max_abs(&linalg::commutator(&charge, g))));
    Ok(ChargeReport {
        radius: profile.radius,
        decomposition: Decomposition::of(&charge)?,
        scalar_charge: reference.map(|m| coefficient_along(&charge, m)),
        eigenvalues: linalg::hermitian_eigenvalues(&charge),
        string: string_analysis(&g_north, &g_south),
        charge,
        g_north,
        g_south,
        surface: None,
        pole_spread: spread,
        raw_variation: profile.raw_variation,
        pole_variation: profile.pole_variation,
        commutator_with_profile,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceSettings {
    pub n_theta: usize,
    pub n_phi: usize,
    pub caps: Vec<f64>,
}

impl Default for SurfaceSettings {
    fn default() -> Self {
        Self { n_theta: 24, n_phi: 4, caps: vec![0.08, 0.04, 0.02] }
    }
}

/// `(1/4πħ) ∮ B·ê_r r² sinθ dθ dφ` over `θ ∈ [ε_cap, π − ε_cap]`.
pub fn charge_surface_integral(
    b: &dyn CurvatureField,
    r: f64,
    eps_cap: f64,
    n_theta: usize,
    n_phi: usize,
    hbar: f64,
) -> Result<CMatrix> {
    let (thetas, weights) = gauss_legendre_on(n_theta, eps_cap, PI - eps_cap);
    let phis = azimuths(n_phi);
    let nodes: Vec<(f64, f64, f64)> = thetas
        .iter()
        .zip(&weights)
        .flat_map(|(&t, &w)| phis.iter().map(move |&p| (t, p, w)))
        .collect();
    let dphi = TAU / n_phi as f64;
    let terms: Vec<CMatrix> = nodes
        .par_iter()
        .map(|&(theta, phi, w)| {
            let p = Point::from_spherical(r, theta, phi);
            let field = b.magnetic(&p)?;
            Ok(field.along(&p.e_r()) * real(r * r * theta.sin() * w * dphi))
        })
        .collect::<Result<_>>()?;
    Ok(linalg::hermitize(&(pairwise_sum(&terms) * real(1.0 / (4.0 * PI * hbar)))).0)
}

/// Surface charge for a decreasing cap sequence, extrapolated to a vanishing cap.
pub fn charge_surface_extrapolated(
    b: &dyn CurvatureField,
    r: f64,
    settings: &SurfaceSettings,
    hbar: f64,
) -> Result<SurfaceCharge> {
    let values = settings
        .caps
        .iter()
        .map(|&eps| charge_surface_integral(b, r, eps, settings.n_theta, settings.n_phi, hbar))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = extrapolate_to_zero(&settings.caps, &values);
    Ok(SurfaceCharge { caps: settings.caps.clone(), values, extrapolated })
}

/// Keeps only the azimuthal mean of `A_φ`: `⟨A_φ⟩(r, θ) ê_φ`.
pub struct AzimuthalProjection {
    pub base: Arc<dyn ConnectionField>,
    pub n_phi: usize,
}

impl ConnectionField for AzimuthalProjection {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn connection(&self, p: &Point) -> Result<Connection> {
        let (r, theta) = (p.r(), p.theta());
        let samples = azimuths(self.n_phi)
            .iter()
            .map(|&phi| {
                let q = Point::from_spherical(r, theta, phi);
                Ok(self.base.connection(&q)?.along(&q.e_phi()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Connection::from_direction(&p.e_phi(), &mean(&samples)))
    }

    fn guard(&self) -> Option<SingularityGuard> {
        self.base.guard()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargeSettings {
    pub profile: ProfileSettings,
    pub surface: SurfaceSettings,
    /// Azimuths averaged by the projection feeding the surface route.
    pub projection_n_phi: usize,
    pub curvature_step: StepRule,
    /// Skip the surface route.
    pub profile_only: bool,
}

impl ChargeSettings {
    pub fn new(k: f64) -> Self {
        Self {
            profile: ProfileSettings::default(),
            surface: SurfaceSettings::default(),
            projection_n_phi: 8,
            curvature_step: StepRule { factor: 1e-4, k, axis_aware: true },
            profile_only: false,
        }
    }
}

/// Profile route plus the surface flux of the azimuthally projected field.
pub fn charge_report(
    a: Arc<dyn ConnectionField>,
    r: f64,
    settings: &ChargeSettings,
    reference: Option<&CMatrix>,
    hbar: f64,
) -> Result<ChargeReport> {
    let profile = angular_profile(a.as_ref(), r, &settings.profile, hbar)?;
    let mut report = charge_from_profile(&profile, &settings.profile, reference)?;
    if !settings.profile_only {
        let projected: Arc<dyn ConnectionField> =
            Arc::new(AzimuthalProjection { base: a, n_phi: settings.projection_n_phi });
        let curvature = NumericCurvature { connection: projected, step: settings.curvature_step, hbar };
        report.surface = Some(charge_surface_extrapolated(&curvature, r, &settings.surface, hbar)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge_fields::{ConnectionFn, CurvatureFn, MagneticField};
    use crate::su3::spin1_operators;

    fn abelian() -> ConnectionFn<impl Fn(&Point) -> Result<Connection> + Send + Sync> {
        ConnectionFn {
            dim: 1,
            f: |p: &Point| {
                let g = -p.theta().cos() / (p.r() * p.theta().sin());
                Ok(Connection::from_direction(&p.e_phi(), &linalg::identity(1)).map(|m| m * real(g)))
            },
        }
    }

    #[test]
    fn abelian_profile_and_charge() {
        let a = abelian();
        let settings = ProfileSettings::default();
        let profile = angular_profile(&a, 1.3, &settings, 1.0).unwrap();
        for (t, g) in profile.thetas.iter().zip(&profile.values) {
            assert!((g[(0, 0)].re + t.cos()).abs() < 1e-12);
        }
        let report = charge_from_profile(&profile, &settings, None).unwrap();
        assert!((report.charge[(0, 0)].re - 1.0).abs() < 1e-10, "{}", report.charge);
        assert!(report.string.undetectable);
    }

    #[test]
    fn exact_monopole_surface_flux() {
        let b = CurvatureFn {
            dim: 1,
            f: |p: &Point| Ok(MagneticField::from_direction(&(p.e_r() / (p.r() * p.r())), &linalg::identity(1))),
        };
        let settings = SurfaceSettings { n_theta: 24, n_phi: 4, caps: vec![0.02, 0.01, 0.005] };
        let q = charge_surface_extrapolated(&b, 0.7, &settings, 1.0).unwrap();
        assert!((q.extrapolated[(0, 0)].re - 1.0).abs() < 1e-6);
        let zero = CurvatureFn { dim: 1, f: |_: &Point| Ok(MagneticField::zeros(1)) };
        assert_eq!(charge_surface_integral(&zero, 1.0, 0.01, 8, 4, 1.0).unwrap()[(0, 0)].norm(), 0.0);
    }

    #[test]
    fn string_detectability_examples() {
        let jx = spin1_operators(1.0).jx;
        let zero = linalg::zeros(3);
        assert!(string_analysis(&(-&jx), &jx).undetectable);
        // Q = 1/2 is still invisible, Q = 1/4 is not.
        let one = linalg::identity(1);
        assert!(string_analysis(&linalg::zeros(1), &one).undetectable);
        assert!(!string_analysis(&linalg::zeros(1), &(one * real(0.5))).undetectable);
        assert!(string_analysis(&zero, &zero).undetectable);
    }

    #[test]
    fn non_profile_field_is_rejected() {
        let a = ConnectionFn {
            dim: 1,
            f: |p: &Point| {
                let g = p.azimuth().cos() / (p.r() * p.theta().sin());
                Ok(Connection::from_direction(&p.e_phi(), &linalg::identity(1)).map(|m| m * real(g)))
            },
        };
        let err = angular_profile(&a, 1.0, &ProfileSettings::default(), 1.0).unwrap_err();
        assert!(matches!(err, Error::ExcessiveAzimuthalVariation { .. }));
    }
}
