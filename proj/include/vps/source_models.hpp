#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vps/types.hpp"

namespace vps {

enum class FieldKind { Potential, Permittivity };

/// Value and first two radial derivatives of one multipole moment.
struct MomentValue {
  Complex f;
  Complex df;
  Complex d2f;
};

using RadialProfile = std::function<MomentValue(double)>;

/// Localized source as multipole moment functions indexed by (l, m).
/// Moments return the full value including the permittivity vacuum baseline
/// sqrt(4 pi) delta_{l0} delta_{m0}. Immutable once built; concurrent reads
/// are safe.
class MultipoleField {
 public:
  MultipoleField(FieldKind kind, double support_radius)
      : kind_(kind), support_radius_(support_radius) {}

  FieldKind kind() const { return kind_; }
  double support_radius() const { return support_radius_; }

  bool declared_real() const { return declared_real_; }
  void declare_real(bool v) { declared_real_ = v; }

  void set_moment(int l, int m, RadialProfile profile);

  /// Moment value at radius r; identically the asymptote for absent indices.
  MomentValue moment(int l, int m, double r) const;

  const std::vector<std::pair<int, int>>& moment_indices() const {
    return indices_;
  }
  int max_source_l() const;

  /// Large-r limit: sqrt(4 pi) for the permittivity monopole, zero otherwise.
  Complex asymptotic(int l, int m) const;

 private:
  FieldKind kind_;
  double support_radius_;
  bool declared_real_ = true;
  std::vector<std::pair<int, int>> indices_;
  std::vector<RadialProfile> profiles_;
};

/// A(1 - tanh[s (r - w)]) / 2.
RadialProfile tanh_step_profile(Complex amplitude, double width, double steepness);
/// A exp(-(r/w)^2).
RadialProfile gaussian_profile(Complex amplitude, double width);
RadialProfile constant_profile(Complex value);
/// Natural cubic spline through (r_i, f_i); clamped to endpoint values
/// outside the table.
RadialProfile spline_profile(std::vector<double> r, std::vector<Complex> f);

/// Smooth dielectric ball: eps_00 = sqrt(4 pi)(1 + h (1 - tanh[s(r-w)])/2).
MultipoleField smooth_ball(double h, double w, double s);

enum class SqrtBranch { Principal, Alternate };

/// Drude-model dielectric with a deformed-sphere profile: monopole plus an
/// (l, m) = (1, 0) moment, both weighted by
/// (2 pi)^2 / [(pi / sigma_p) sqrt(-k^2) - (lambda_p k)^2].
MultipoleField drude_deformed(double lambda_p, double sigma_p, double w,
                              double s, Complex k,
                              SqrtBranch branch = SqrtBranch::Principal);

/// Smooth approximation to the spherical step potential of height V0 and
/// radius a with edge steepness s.
MultipoleField square_well(double v0, double a, double s);

/// Parse the JSON source-spec schema
///   {kind, moments: [{l, m, profile, params, scale?}], support_radius}.
MultipoleField field_from_json(const std::string& json_text);

}  // namespace vps
