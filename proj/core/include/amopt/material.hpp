#pragma once

#include <Eigen/Dense>

namespace amopt {

/// Internal unit system: N, mm, s, K. Stress and moduli in MPa (= N/mm^2),
/// energy in mJ (= N*mm), power in mW. Configuration files use the customary
/// units (W/(m^2 K) for convection etc.) and are converted once at load time.
struct MaterialParams {
  double a = -5.5;              ///< exponent of the modulus temperature factor
  double b = 1.0;               ///< amplitude of the modulus temperature factor
  double theta_0m = 475.0;      ///< modulus reference temperature [K]
  double E_0m = 250.0;          ///< elastic modulus at theta_0m [MPa]
  double nu = 0.35;             ///< Poisson ratio
  double alpha = 9e-5;          ///< thermal expansion coefficient [1/K]
  double c_bar = 2.1;           ///< volumetric heat capacity at reference [mJ/(mm^3 K)]
  double k_cond = 0.25;         ///< thermal conductivity [mJ/(s mm K)]
  double rho_0 = 1.05e-9;       ///< referential mass density [N s^2/mm / mm^3]
  double h_conv = 0.04;         ///< convection coefficient [mJ/(s mm^2 K)]
  double theta_inf = 315.0;     ///< ambient temperature [K]
  double theta_deposit = 500.0; ///< deposition temperature [K]

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Bulk modulus at theta_0m, E/(3(1-2nu)).
  double bulk_modulus() const { return E_0m / (3.0 * (1.0 - 2.0 * nu)); }

  /// Plane-strain elasticity matrix in Voigt order [xx, yy, xy] with
  /// engineering shear strain in the third slot.
  Eigen::Matrix3d elasticity_voigt() const;
};

/// Value and first three temperature derivatives of the dimensionless factor
/// scaling the elastic and bulk moduli with temperature.
struct TemperatureFactor {
  double value;
  double d1;
  double d2;
  double d3;
};

/// Evaluates the modulus temperature factor at theta. The factor equals one
/// at theta_0m by construction. Throws std::domain_error for theta <= 0.
TemperatureFactor temperature_factor(double theta, const MaterialParams& p);

/// State of one material point. theta_ref is the referential temperature the
/// point was given at deposition.
struct PointState {
  Eigen::Matrix2d eps = Eigen::Matrix2d::Zero();
  double theta = 315.0;
  double theta_ref = 315.0;
  Eigen::Matrix2d eps_dot = Eigen::Matrix2d::Zero();
};

/// Helmholtz free energy per referential volume [mJ/mm^3].
/// Throws std::domain_error when 1 + tr(eps) <= 0.
double free_energy(const PointState& ps, const MaterialParams& p);

/// Cauchy stress of the infinitesimal theory [MPa].
Eigen::Matrix2d stress(const PointState& ps, const MaterialParams& p);

/// Stress-temperature modulus, the mixed strain/temperature second derivative
/// of the free energy [MPa/K].
Eigen::Matrix2d stress_temperature_modulus(const PointState& ps, const MaterialParams& p);

/// Volumetric heat capacity, -theta * d^2 psi / d theta^2 [mJ/(mm^3 K)].
/// Equals c_bar exactly at zero strain.
double heat_capacity(const PointState& ps, const MaterialParams& p);

/// Referential heat flux, -k * grad(theta) [mJ/(s mm^2)].
Eigen::Vector2d heat_flux(const Eigen::Vector2d& grad_theta, const MaterialParams& p);

/// Convective boundary flux into the body, h * (theta_inf - theta).
double convection_flux(double theta_surface, const MaterialParams& p);

/// All constitutive derivatives consumed by the tangent and sensitivity
/// matrices. Voigt vectors/matrices follow [xx, yy, xy] with engineering
/// shear in strain slots, plain tensor components in stress-like slots.
struct TangentModuli {
  Eigen::Matrix3d dstress_deps;        ///< d sigma / d eps
  Eigen::Matrix2d dstress_dtheta;      ///< d sigma / d theta (= modulus M)
  Eigen::Matrix3d dmodulus_deps;       ///< d M / d eps
  Eigen::Matrix2d dmodulus_dtheta;     ///< d M / d theta
  Eigen::Vector3d dcapacity_deps;      ///< d c / d eps
  double dcapacity_dtheta;             ///< d c / d theta
  Eigen::Matrix2d dstress_dthetaref;   ///< d sigma / d theta_ref
  Eigen::Matrix2d dmodulus_dthetaref;  ///< d M / d theta_ref
  double dcapacity_dthetaref;          ///< d c / d theta_ref
};

TangentModuli tangent_moduli(const PointState& ps, const MaterialParams& p);

/// Voigt <-> tensor helpers for the 2D symmetric case.
inline Eigen::Vector3d to_voigt_strain(const Eigen::Matrix2d& e) {
  return {e(0, 0), e(1, 1), e(0, 1) + e(1, 0)};
}
inline Eigen::Matrix2d from_voigt_stress(const Eigen::Vector3d& s) {
  Eigen::Matrix2d m;
  m << s(0), s(2), s(2), s(1);
  return m;
}

}  // namespace amopt
