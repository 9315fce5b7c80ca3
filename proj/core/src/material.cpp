#include "amopt/material.hpp"

#include <cmath>
#include <stdexcept>

namespace amopt {

void MaterialParams::validate() const {
  if (theta_0m <= 0.0) throw std::invalid_argument("theta_0m must be positive");
  if (theta_inf <= 0.0) throw std::invalid_argument("theta_inf must be positive");
  if (theta_deposit <= theta_inf)
    throw std::invalid_argument("theta_deposit must exceed theta_inf");
  if (E_0m <= 0.0) throw std::invalid_argument("E_0m must be positive");
  if (nu <= -1.0 || nu >= 0.5) throw std::invalid_argument("nu must be in (-1, 0.5)");
  if (k_cond <= 0.0) throw std::invalid_argument("k_cond must be positive");
  if (rho_0 <= 0.0) throw std::invalid_argument("rho_0 must be positive");
  if (c_bar <= 0.0) throw std::invalid_argument("c_bar must be positive");
  if (h_conv < 0.0) throw std::invalid_argument("h_conv must be non-negative");
}

Eigen::Matrix3d MaterialParams::elasticity_voigt() const {
  const double f = E_0m / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
  c(0, 0) = c(1, 1) = f * (1.0 - nu);
  c(0, 1) = c(1, 0) = f * nu;
  c(2, 2) = f * (1.0 - 2.0 * nu) / 2.0;  // shear entry acts on engineering strain
  return c;
}

TemperatureFactor temperature_factor(double theta, const MaterialParams& p) {
  if (theta <= 0.0) throw std::domain_error("temperature_factor: theta must be positive");
  const double t0 = p.theta_0m;
  const double r = theta / t0;
  const double pw = std::pow(r, p.a);
  TemperatureFactor tf;
  tf.value = p.b * pw + p.b * (p.a - 1.0) + (1.0 - p.a * p.b) * r;
  tf.d1 = p.a * p.b * pw / theta + (1.0 - p.a * p.b) / t0;
  tf.d2 = p.a * (p.a - 1.0) * p.b * pw / (theta * theta);
  tf.d3 = p.a * (p.a - 1.0) * (p.a - 2.0) * p.b * pw / (theta * theta * theta);
  return tf;
}

namespace {

double trace_term(const Eigen::Matrix2d& eps) {
  const double j = 1.0 + eps.trace();
  if (j <= 0.0) throw std::domain_error("material point: 1 + tr(eps) must be positive");
  return j;
}

}  // namespace

double free_energy(const PointState& ps, const MaterialParams& p) {
  const double j = trace_term(ps.eps);
  const TemperatureFactor tf = temperature_factor(ps.theta, p);
  const Eigen::Vector3d ev = to_voigt_strain(ps.eps);
  const double elastic = 0.5 * tf.value * ev.dot(p.elasticity_voigt() * ev);
  const double coupling =
      -tf.value * p.bulk_modulus() * p.alpha * std::log(j) * (ps.theta - ps.theta_ref);
  const double thermal =
      p.c_bar * (ps.theta - ps.theta_ref - ps.theta * std::log(ps.theta / ps.theta_ref));
  return elastic + coupling + thermal;
}

Eigen::Matrix2d stress(const PointState& ps, const MaterialParams& p) {
  const double j = trace_term(ps.eps);
  const TemperatureFactor tf = temperature_factor(ps.theta, p);
  const Eigen::Vector3d ev = to_voigt_strain(ps.eps);
  Eigen::Vector3d sv = tf.value * (p.elasticity_voigt() * ev);
  const double iso = -tf.value * p.bulk_modulus() * p.alpha * (ps.theta - ps.theta_ref) / j;
  sv(0) += iso;
  sv(1) += iso;
  return from_voigt_stress(sv);
}

Eigen::Matrix2d stress_temperature_modulus(const PointState& ps, const MaterialParams& p) {
  const double j = trace_term(ps.eps);
  const TemperatureFactor tf = temperature_factor(ps.theta, p);
  const Eigen::Vector3d ev = to_voigt_strain(ps.eps);
  Eigen::Vector3d mv = tf.d1 * (p.elasticity_voigt() * ev);
  const double iso = -(tf.d1 * (ps.theta - ps.theta_ref) + tf.value) *
                     p.bulk_modulus() * p.alpha / j;
  mv(0) += iso;
  mv(1) += iso;
  return from_voigt_stress(mv);
}

double heat_capacity(const PointState& ps, const MaterialParams& p) {
  const double j = trace_term(ps.eps);
  const TemperatureFactor tf = temperature_factor(ps.theta, p);
  const Eigen::Vector3d ev = to_voigt_strain(ps.eps);
  const double elastic = -ps.theta * tf.d2 * 0.5 * ev.dot(p.elasticity_voigt() * ev);
  // c = -theta d^2 psi/d theta^2; the coupling term carries 2*d1 from the
  // product rule on d1*(theta - theta_ref) + value.
  const double coupling = ps.theta * (tf.d2 * (ps.theta - ps.theta_ref) + 2.0 * tf.d1) *
                          p.bulk_modulus() * p.alpha * std::log(j);
  return elastic + coupling + p.c_bar;
}

Eigen::Vector2d heat_flux(const Eigen::Vector2d& grad_theta, const MaterialParams& p) {
  return -p.k_cond * grad_theta;
}

double convection_flux(double theta_surface, const MaterialParams& p) {
  return p.h_conv * (p.theta_inf - theta_surface);
}

TangentModuli tangent_moduli(const PointState& ps, const MaterialParams& p) {
  const double j = trace_term(ps.eps);
  const TemperatureFactor tf = temperature_factor(ps.theta, p);
  const Eigen::Matrix3d cv = p.elasticity_voigt();
  const Eigen::Vector3d ev = to_voigt_strain(ps.eps);
  const double kap = p.bulk_modulus();
  const double dth = ps.theta - ps.theta_ref;
  const Eigen::Vector3d one{1.0, 1.0, 0.0};
  const Eigen::Matrix3d one_outer = one * one.transpose();

  TangentModuli t;
  t.dstress_deps = tf.value * cv + tf.value * kap * p.alpha * dth / (j * j) * one_outer;
  t.dstress_dtheta = stress_temperature_modulus(ps, p);
  t.dmodulus_deps = tf.d1 * cv + (tf.d1 * dth + tf.value) * kap * p.alpha / (j * j) * one_outer;
  {
    Eigen::Vector3d mv = tf.d2 * (cv * ev);
    const double iso = -(tf.d2 * dth + 2.0 * tf.d1) * kap * p.alpha / j;
    mv(0) += iso;
    mv(1) += iso;
    t.dmodulus_dtheta = from_voigt_stress(mv);
  }
  t.dcapacity_deps = -ps.theta * tf.d2 * (cv * ev) +
                     ps.theta * (tf.d2 * dth + 2.0 * tf.d1) * kap * p.alpha / j * one;
  t.dcapacity_dtheta =
      -(tf.d2 + ps.theta * tf.d3) * 0.5 * ev.dot(cv * ev) +
      ((tf.d2 + ps.theta * tf.d3) * dth + 2.0 * tf.d1 + 3.0 * ps.theta * tf.d2) * kap *
          p.alpha * std::log(j);
  t.dstress_dthetaref = tf.value * kap * p.alpha / j * Eigen::Matrix2d::Identity();
  t.dmodulus_dthetaref = tf.d1 * kap * p.alpha / j * Eigen::Matrix2d::Identity();
  t.dcapacity_dthetaref = -ps.theta * tf.d2 * kap * p.alpha * std::log(j);
  return t;
}

}  // namespace amopt
