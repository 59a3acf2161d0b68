#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "hullmetry/core.hpp"

namespace hullmetry {

enum class ProfileForm { Plain, LogLog };

/// log N(T, eps) = O(eps^-chi |log eps|^psi) for the plain form, or
/// O(eps^-2 |log|log eps||^psi) for the loglog form.
struct EntropyProfile {
  double chi = 2.0;
  double psi = 0.0;
  ProfileForm form = ProfileForm::Plain;
};

inline EntropyProfile make_profile(double chi, double psi) {
  if (!(chi >= 2.0) || !std::isfinite(chi) || !std::isfinite(psi))
    throw Error(ErrorCode::ParamOutOfRange, "chi must be >= 2 and psi finite");
  return {chi, psi, ProfileForm::Plain};
}

/// Entropy profile of the convex hull for the three listed regimes.
inline EntropyProfile hull_profile(const EntropyProfile& p) {
  if (p.form != ProfileForm::Plain) throw Error(ErrorCode::PreconditionFailed, "hull_profile takes a plain profile");
  if (p.chi > 2.0) return p;
  if (p.psi > -2.0) return {2.0, p.psi + 2.0, ProfileForm::Plain};
  if (p.psi == -3.0) return {2.0, 2.0 + p.psi, ProfileForm::LogLog};
  throw Error(ErrorCode::Unsupported, "no hull estimate for chi = 2 with this psi");
}

enum class RatioKind { Constant, LogSq, Log3OverLogLog };

inline const char* to_string(RatioKind k) {
  switch (k) {
    case RatioKind::Constant: return "constant";
    case RatioKind::LogSq: return "logsq";
    case RatioKind::Log3OverLogLog: return "log3_over_loglog";
  }
  return "?";
}

/// Upper bound f(eps) on log N(T_h, eps) / log N(T, eps).
struct RatioFunction {
  RatioKind kind = RatioKind::Constant;
  double C = 1.0;

  const char* label() const {
    switch (kind) {
      case RatioKind::Constant: return "C3";
      case RatioKind::LogSq: return "C4";
      case RatioKind::Log3OverLogLog: return "C5";
    }
    return "?";
  }

  double operator()(double eps) const {
    const double l = std::abs(std::log(eps));
    switch (kind) {
      case RatioKind::Constant: return C;
      case RatioKind::LogSq: return C * l * l;
      case RatioKind::Log3OverLogLog: return C * l * l * l / std::abs(std::log(l));
    }
    return 0.0;
  }

  /// Points of (0, inf) where f is infinite.
  std::vector<double> singular_points() const {
    if (kind == RatioKind::Log3OverLogLog) return {std::exp(-1.0), std::exp(1.0)};
    return {};
  }
};

inline RatioFunction ratio_bound(const EntropyProfile& p, double C = 1.0) {
  if (p.form != ProfileForm::Plain) throw Error(ErrorCode::PreconditionFailed, "ratio_bound takes a plain profile");
  if (p.chi > 2.0) return {RatioKind::Constant, C};
  if (p.psi > -2.0) return {RatioKind::LogSq, C};
  if (p.psi == -3.0) return {RatioKind::Log3OverLogLog, C};
  throw Error(ErrorCode::Unsupported, "no ratio bound for chi = 2 with this psi");
}

enum class Diagnosis { None, Endpoint, InteriorSingularity, Budget };

inline const char* to_string(Diagnosis d) {
  switch (d) {
    case Diagnosis::None: return "none";
    case Diagnosis::Endpoint: return "endpoint";
    case Diagnosis::InteriorSingularity: return "interior_singularity";
    case Diagnosis::Budget: return "budget";
  }
  return "?";
}

struct QuadratureLevel {
  int level = 0;
  double eta = 0.0;     // lower cutoff
  double window = 0.0;  // half-width of the windows cut around singular points
  double value = 0.0;   // integral over the kept region
  double increment = 0.0;
};

struct IntegrabilityVerdict {
  bool converges = false;
  std::optional<double> value;
  Diagnosis diagnosis = Diagnosis::None;
  std::optional<double> singular_point;
  std::optional<double> analytic;  // closed form where one exists
  std::vector<QuadratureLevel> trace;
};

struct QuadratureOptions {
  int max_levels = 40;
  double rel_tol = 1e-4;
  int stall_levels = 6;       // consecutive non-decaying increments that mean divergence
  double stall_ratio = 0.95;  // increment ratio counted as non-decaying
};

namespace detail {

/// Integral of f over [a, b] in the variable v = ln eps.
inline double log_gk(const RatioFunction& f, double a, double b) {
  if (!(b > a)) return 0.0;
  auto g = [&](double v) {
    const double e = std::exp(v);
    return f(e) * e;
  };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, std::log(a), std::log(b), 12, 1e-10);
}

inline std::optional<double> closed_form(const RatioFunction& f, double delta) {
  if (f.kind == RatioKind::Constant) return f.C * delta;
  if (f.kind == RatioKind::LogSq) {
    const double l = std::log(delta);
    return f.C * delta * (l * l - 2 * l + 2);
  }
  return std::nullopt;
}

struct Component {
  double last = 0.0;
  int stalled = 0;

  /// true once the increments have stopped decaying for long enough
  bool push(double inc, const QuadratureOptions& opt) {
    if (inc > 0 && last > 0 && inc >= opt.stall_ratio * last)
      ++stalled;
    else
      stalled = 0;
    last = inc;
    return stalled >= opt.stall_levels;
  }
};

}  // namespace detail

/// Does the integral of f over (0, delta] exist? Level 0 integrates the region
/// away from 0 and from the singular points; level j moves the cutoff at 0
/// down by 16 and halves the windows around each singular point. Converges
/// when one level changes the value by at most rel_tol; diverges when a part
/// keeps adding non-decaying increments.
inline IntegrabilityVerdict integral_exists(const RatioFunction& f, double delta, const QuadratureOptions& opt = {}) {
  if (!(delta > 0) || !std::isfinite(delta)) throw Error(ErrorCode::ParamOutOfRange, "delta must be positive");
  IntegrabilityVerdict v;
  v.analytic = detail::closed_form(f, delta);

  std::vector<double> sing;
  for (double s : f.singular_points())
    if (s <= delta) sing.push_back(s);
  // breakpoints: cutoff anchor, singular points, 1 (kink of |log|), delta
  std::vector<double> stops{delta};
  for (double s : sing) stops.push_back(s);
  if (delta > 1.0) stops.push_back(1.0);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  // initial half-widths: a quarter of the gap to the nearest stop
  std::vector<double> w0(sing.size());
  for (std::size_t i = 0; i < sing.size(); ++i) {
    double gap = sing[i];
    for (double s : stops)
      if (s != sing[i]) gap = std::min(gap, std::abs(s - sing[i]));
    w0[i] = 0.25 * gap;
  }
  auto is_sing = [&](double x) { return std::find(sing.begin(), sing.end(), x) != sing.end(); };
  auto width = [&](double x) { return w0[static_cast<std::size_t>(std::find(sing.begin(), sing.end(), x) - sing.begin())]; };

  const double anchor = is_sing(stops.front()) ? stops.front() - width(stops.front()) : stops.front();
  double value = 0.0;
  {
    double lo = anchor;
    for (double s : stops) {
      const double hi = is_sing(s) ? s - width(s) : s;
      value += detail::log_gk(f, lo, hi);
      lo = is_sing(s) ? s + width(s) : s;
    }
  }
  v.trace.push_back({0, anchor, sing.empty() ? 0.0 : w0.front(), value, 0.0});

  detail::Component end_part;
  std::vector<detail::Component> sing_part(sing.size());
  double prev_inc = 0.0;
  for (int j = 1; j <= opt.max_levels; ++j) {
    const double eta_hi = anchor * std::pow(16.0, -(j - 1)), eta_lo = anchor * std::pow(16.0, -j);
    const double e_inc = detail::log_gk(f, eta_lo, eta_hi);
    double inc = e_inc;
    std::optional<std::size_t> blown;
    for (std::size_t i = 0; i < sing.size(); ++i) {
      const double s = sing[i];
      const double wa = w0[i] * std::ldexp(1.0, -(j - 1)), wb = w0[i] * std::ldexp(1.0, -j);
      double w_inc = detail::log_gk(f, s - wa, s - wb);
      if (s < delta) w_inc += detail::log_gk(f, s + wb, s + wa);
      inc += w_inc;
      if (sing_part[i].push(w_inc, opt) && !blown) blown = i;
    }
    const bool end_blown = end_part.push(e_inc, opt);
    value += inc;
    v.trace.push_back({j, eta_lo, sing.empty() ? 0.0 : w0.front() * std::ldexp(1.0, -j), value, inc});
    if (blown) {
      v.diagnosis = Diagnosis::InteriorSingularity;
      v.singular_point = sing[*blown];
      return v;
    }
    if (end_blown) {
      v.diagnosis = Diagnosis::Endpoint;
      return v;
    }
    if (j >= 2 && std::abs(inc) <= opt.rel_tol * std::abs(value)) {
      // geometric tail of the remaining levels
      const double r = prev_inc > 0 ? inc / prev_inc : 0.0;
      v.converges = true;
      v.value = value + (r > 0 && r < 1 ? inc * r / (1 - r) : 0.0);
      return v;
    }
    prev_inc = inc;
  }
  v.diagnosis = Diagnosis::Budget;
  return v;
}

struct LExistenceReport {
  EntropyProfile profile;
  EntropyProfile hull;
  RatioFunction ratio;
  double delta = 1.0;
  IntegrabilityVerdict verdict;
  bool L_exists = false;
};

inline LExistenceReport l_existence_report(const EntropyProfile& p, double delta, double C = 1.0,
                                           const QuadratureOptions& opt = {}) {
  LExistenceReport r;
  r.profile = p;
  r.hull = hull_profile(p);
  r.ratio = ratio_bound(p, C);
  r.delta = delta;
  r.verdict = integral_exists(r.ratio, delta, opt);
  r.L_exists = r.verdict.converges;
  return r;
}

// ---- JSON ----

struct ProfileScenario {
  EntropyProfile profile;
  double delta = 1.0;
  double C = 1.0;
};

inline ProfileScenario profile_from_json(const nlohmann::json& j) {
  try {
    ProfileScenario s;
    s.profile = make_profile(j.at("chi").get<double>(), j.at("psi").get<double>());
    s.delta = j.value("delta", 1.0);
    s.C = j.value("C", 1.0);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("profile: ") + e.what());
  }
}

inline nlohmann::json to_json(const EntropyProfile& p) {
  return {{"chi", p.chi}, {"psi", p.psi}, {"form", p.form == ProfileForm::Plain ? "plain" : "loglog"}};
}

inline nlohmann::json to_json(const RatioFunction& f) {
  return {{"kind", to_string(f.kind)}, {"constant_label", f.label()}, {"C", f.C}};
}

inline nlohmann::json to_json(const IntegrabilityVerdict& v) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& l : v.trace)
    trace.push_back({{"level", l.level}, {"eta", l.eta}, {"window", l.window}, {"value", l.value},
                     {"increment", l.increment}});
  auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  return {{"converges", v.converges},          {"value", opt(v.value)},
          {"diagnosis", to_string(v.diagnosis)}, {"singular_point", opt(v.singular_point)},
          {"analytic", opt(v.analytic)},         {"quadrature_trace", trace}};
}

inline nlohmann::json to_json(const LExistenceReport& r) {
  return {{"profile", to_json(r.profile)}, {"hull_profile", to_json(r.hull)}, {"ratio", to_json(r.ratio)},
          {"delta", r.delta},             {"verdict", to_json(r.verdict)},    {"L_exists", r.L_exists}};
}

}  // namespace hullmetry
