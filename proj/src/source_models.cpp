#include "vps/source_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace vps {

void MultipoleField::set_moment(int l, int m, RadialProfile profile) {
  if (l < 0 || std::abs(m) > l)
    throw std::invalid_argument("MultipoleField: invalid moment index");
  for (size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] == std::make_pair(l, m)) {
      profiles_[i] = std::move(profile);
      return;
    }
  }
  indices_.emplace_back(l, m);
  profiles_.push_back(std::move(profile));
}

MomentValue MultipoleField::moment(int l, int m, double r) const {
  for (size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] == std::make_pair(l, m)) return profiles_[i](r);
  }
  return {asymptotic(l, m), 0.0, 0.0};
}

int MultipoleField::max_source_l() const {
  int lmax = 0;
  for (const auto& [l, m] : indices_) lmax = std::max(lmax, l);
  return lmax;
}

Complex MultipoleField::asymptotic(int l, int m) const {
  if (kind_ == FieldKind::Permittivity && l == 0 && m == 0)
    return std::sqrt(4.0 * pi);
  return 0.0;
}

RadialProfile tanh_step_profile(Complex amplitude, double width,
                                double steepness) {
  if (width <= 0.0 || steepness <= 0.0)
    throw std::invalid_argument("tanh_step_profile: width and steepness must be positive");
  return [amplitude, width, steepness](double r) -> MomentValue {
    const double t = std::tanh(steepness * (r - width));
    const double sech2 = 1.0 - t * t;
    return {amplitude * (0.5 * (1.0 - t)),
            amplitude * (-0.5 * steepness * sech2),
            amplitude * (steepness * steepness * sech2 * t)};
  };
}

RadialProfile gaussian_profile(Complex amplitude, double width) {
  if (width <= 0.0)
    throw std::invalid_argument("gaussian_profile: width must be positive");
  return [amplitude, width](double r) -> MomentValue {
    const double g = std::exp(-(r / width) * (r / width));
    const double w2 = width * width;
    return {amplitude * g, amplitude * (-2.0 * r / w2) * g,
            amplitude * (-2.0 / w2 + 4.0 * r * r / (w2 * w2)) * g};
  };
}

RadialProfile constant_profile(Complex value) {
  return [value](double) -> MomentValue { return {value, 0.0, 0.0}; };
}

RadialProfile spline_profile(std::vector<double> r, std::vector<Complex> f) {
  const size_t n = r.size();
  if (n < 3 || f.size() != n)
    throw std::invalid_argument("spline_profile: need at least 3 matching knots");
  for (size_t i = 1; i < n; ++i)
    if (r[i] <= r[i - 1])
      throw std::invalid_argument("spline_profile: knots must be strictly increasing");

  // Natural cubic spline: solve the tridiagonal system for second derivatives.
  std::vector<Complex> m(n, 0.0), diag(n, 1.0), rhs(n, 0.0);
  std::vector<Complex> sub(n, 0.0), sup(n, 0.0);
  for (size_t i = 1; i + 1 < n; ++i) {
    const double h0 = r[i] - r[i - 1], h1 = r[i + 1] - r[i];
    sub[i] = h0 / 6.0;
    diag[i] = (h0 + h1) / 3.0;
    sup[i] = h1 / 6.0;
    rhs[i] = (f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0;
  }
  for (size_t i = 1; i < n; ++i) {
    const Complex w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m[n - 1] = rhs[n - 1] / diag[n - 1];
  for (size_t i = n - 1; i-- > 0;) m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];

  return [r = std::move(r), f = std::move(f), m = std::move(m)](double x) -> MomentValue {
    const size_t n = r.size();
    if (x <= r.front()) return {f.front(), 0.0, 0.0};
    if (x >= r.back()) return {f.back(), 0.0, 0.0};
    size_t i = std::upper_bound(r.begin(), r.end(), x) - r.begin() - 1;
    const double h = r[i + 1] - r[i];
    const double a = (r[i + 1] - x) / h, b = (x - r[i]) / h;
    const Complex val = a * f[i] + b * f[i + 1] +
                        ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) *
                            (h * h) / 6.0;
    const Complex der = (f[i + 1] - f[i]) / h -
                        (3.0 * a * a - 1.0) / 6.0 * h * m[i] +
                        (3.0 * b * b - 1.0) / 6.0 * h * m[i + 1];
    const Complex der2 = a * m[i] + b * m[i + 1];
    return {val, der, der2};
  };
}

namespace {

RadialProfile sum_profiles(RadialProfile a, RadialProfile b) {
  return [a = std::move(a), b = std::move(b)](double r) -> MomentValue {
    const MomentValue va = a(r), vb = b(r);
    return {va.f + vb.f, va.df + vb.df, va.d2f + vb.d2f};
  };
}

double tanh_support(double w, double s) { return w + 40.0 / s; }

}  // namespace

MultipoleField smooth_ball(double h, double w, double s) {
  if (w <= 0.0 || s <= 0.0)
    throw std::invalid_argument("smooth_ball: w and s must be positive");
  const double root4pi = std::sqrt(4.0 * pi);
  MultipoleField field(FieldKind::Permittivity, tanh_support(w, s));
  field.set_moment(0, 0,
                   sum_profiles(constant_profile(root4pi),
                                tanh_step_profile(root4pi * h, w, s)));
  field.declare_real(true);
  return field;
}

MultipoleField drude_deformed(double lambda_p, double sigma_p, double w,
                              double s, Complex k, SqrtBranch branch) {
  if (lambda_p <= 0.0 || sigma_p <= 0.0 || w <= 0.0 || s <= 0.0)
    throw std::invalid_argument("drude_deformed: parameters must be positive");
  if (k == Complex(0.0, 0.0))
    throw std::invalid_argument("drude_deformed: k must be nonzero");
  Complex root = std::sqrt(-k * k);
  if (branch == SqrtBranch::Alternate) root = -root;
  const Complex denom = (pi / sigma_p) * root - (lambda_p * k) * (lambda_p * k);
  if (std::abs(denom) < 1e-300)
    throw std::domain_error("drude_deformed: vanishing denominator");
  const Complex pref = (2.0 * pi) * (2.0 * pi) / denom;
  const double root4pi = std::sqrt(4.0 * pi);

  MultipoleField field(FieldKind::Permittivity, tanh_support(w, s));
  field.set_moment(0, 0,
                   sum_profiles(constant_profile(root4pi),
                                tanh_step_profile(pref * root4pi, w, s)));
  field.set_moment(1, 0, tanh_step_profile(pref, w, s));
  field.declare_real(std::abs(pref.imag()) <= 1e-14 * std::abs(pref));
  return field;
}

MultipoleField square_well(double v0, double a, double s) {
  if (a <= 0.0 || s <= 0.0)
    throw std::invalid_argument("square_well: a and s must be positive");
  MultipoleField field(FieldKind::Potential, tanh_support(a, s));
  if (v0 != 0.0)
    field.set_moment(0, 0, tanh_step_profile(std::sqrt(4.0 * pi) * v0, a, s));
  field.declare_real(true);
  return field;
}

MultipoleField field_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  const std::string kind_str = j.at("kind").get<std::string>();
  FieldKind kind;
  if (kind_str == "potential") {
    kind = FieldKind::Potential;
  } else if (kind_str == "permittivity") {
    kind = FieldKind::Permittivity;
  } else {
    throw std::invalid_argument("field_from_json: kind must be potential or permittivity");
  }
  const double support = j.at("support_radius").get<double>();
  MultipoleField field(kind, support);

  bool all_real = true;
  const double root4pi = std::sqrt(4.0 * pi);
  for (const auto& mj : j.at("moments")) {
    const int l = mj.at("l").get<int>();
    const int m = mj.at("m").get<int>();
    Complex scale(1.0, 0.0);
    if (mj.contains("scale")) {
      scale = Complex(mj["scale"].value("re", 1.0), mj["scale"].value("im", 0.0));
    }
    if (scale.imag() != 0.0) all_real = false;
    const std::string profile = mj.at("profile").get<std::string>();
    const auto& p = mj.at("params");
    RadialProfile rp;
    if (profile == "tanh_step") {
      rp = tanh_step_profile(scale * p.at("height").get<double>(),
                             p.at("width").get<double>(),
                             p.at("steepness").get<double>());
    } else if (profile == "gaussian") {
      rp = gaussian_profile(scale * p.at("height").get<double>(),
                            p.at("width").get<double>());
    } else if (profile == "constant") {
      rp = constant_profile(scale * p.at("value").get<double>());
    } else if (profile == "table") {
      std::vector<double> r = p.at("r").get<std::vector<double>>();
      std::vector<double> re = p.at("re").get<std::vector<double>>();
      std::vector<double> im(r.size(), 0.0);
      if (p.contains("im")) im = p.at("im").get<std::vector<double>>();
      std::vector<Complex> f(r.size());
      for (size_t i = 0; i < r.size(); ++i) {
        f[i] = scale * Complex(re[i], im[i]);
        if (f[i].imag() != 0.0) all_real = false;
      }
      rp = spline_profile(std::move(r), std::move(f));
    } else {
      throw std::invalid_argument("field_from_json: unknown profile " + profile);
    }
    // The permittivity monopole carries the vacuum baseline.
    if (kind == FieldKind::Permittivity && l == 0 && m == 0) {
      rp = sum_profiles(constant_profile(root4pi), std::move(rp));
    }
    field.set_moment(l, m, std::move(rp));
  }
  field.declare_real(all_real);
  return field;
}

}  // namespace vps
