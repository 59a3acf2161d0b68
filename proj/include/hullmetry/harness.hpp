#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hullmetry/chaining.hpp"
#include "hullmetry/core.hpp"
#include "hullmetry/covering.hpp"
#include "hullmetry/entropy.hpp"
#include "hullmetry/geometry.hpp"
#include "hullmetry/io.hpp"
#include "hullmetry/minkowski.hpp"

namespace hullmetry::harness {

using json = nlohmann::json;

enum class Kind { Body, Cloud, Profile };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::Body: return "body";
    case Kind::Cloud: return "cloud";
    case Kind::Profile: return "profile";
  }
  return "?";
}

inline const std::vector<std::string>& valid_checks(Kind k) {
  static const std::vector<std::string> body{"volume_xcheck", "ratio_poly", "revbm",      "convexify",
                                             "cover_ratio",   "gamma_hull", "mm_two_sided"};
  static const std::vector<std::string> cloud{"ratio_poly", "convexify", "cover_ratio", "gamma_hull", "mm_two_sided"};
  static const std::vector<std::string> profile{"l_existence"};
  return k == Kind::Body ? body : k == Kind::Cloud ? cloud : profile;
}

struct Scenario {
  std::string id;
  Kind kind = Kind::Body;
  json payload;
  std::vector<std::string> checks;
  json params = json::object();
};

struct Suite {
  std::vector<Scenario> scenarios;
  std::optional<std::uint64_t> seed;
};

/// Suite file: {"seed": N?, "scenarios": [{"id", "kind", "payload" | "file",
/// "checks", "params"?}]}. "file" is resolved against the suite directory.
inline Suite parse_suite(const json& doc, const std::filesystem::path& base = {}) {
  try {
    Suite s;
    if (doc.contains("seed")) s.seed = doc.at("seed").get<std::uint64_t>();
    std::set<std::string> ids;
    for (const auto& sc : doc.at("scenarios")) {
      Scenario x;
      x.id = sc.at("id").get<std::string>();
      if (x.id.empty() || !ids.insert(x.id).second) throw Error(ErrorCode::ParseError, "duplicate or empty id '" + x.id + "'");
      const auto kind = sc.at("kind").get<std::string>();
      if (kind == "body") x.kind = Kind::Body;
      else if (kind == "cloud") x.kind = Kind::Cloud;
      else if (kind == "profile") x.kind = Kind::Profile;
      else throw Error(ErrorCode::ParseError, x.id + ": unknown kind '" + kind + "'");
      if (sc.contains("payload")) x.payload = sc.at("payload");
      else x.payload = io::read_json_file((base / sc.at("file").get<std::string>()).string());
      for (const auto& c : sc.at("checks")) {
        const auto name = c.get<std::string>();
        const auto& ok = valid_checks(x.kind);
        if (std::find(ok.begin(), ok.end(), name) == ok.end())
          throw Error(ErrorCode::ParseError, x.id + ": check '" + name + "' is not valid for kind " + kind);
        x.checks.push_back(name);
      }
      if (sc.contains("params")) x.params = sc.at("params");
      s.scenarios.push_back(std::move(x));
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("suite: ") + e.what());
  }
}

inline Suite load_suite(const std::string& path) {
  return parse_suite(io::read_json_file(path), std::filesystem::path(path).parent_path());
}

struct Record {
  std::string scenario, check, variant;
  bool holds = false;
  std::optional<double> lhs, rhs;
  double slack = 0.0;
  json constants = json::object();
  json details = json::object();
  double runtime_ms = 0.0;
};

struct PlotFile {
  std::string name;
  std::string content;
};

struct SuiteResult {
  std::vector<Record> records;
  std::vector<PlotFile> plots;
  std::string chaining_csv;
  std::uint64_t seed = 0;
  bool all_hold() const {
    return std::all_of(records.begin(), records.end(), [](const Record& r) { return r.holds; });
  }
};

/// Stable per-check seed: FNV-1a of the label mixed into the master seed.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) h = (h ^ c) * 0x100000001b3ULL;
  return trial_seed(master, h);
}

namespace detail {

template <class T>
std::vector<T> list_param(const json& p, const char* key, std::vector<T> def) {
  if (!p.contains(key)) return def;
  const auto& v = p.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

template <class T>
T param(const json& p, const char* key, T def) {
  return p.contains(key) ? p.at(key).get<T>() : def;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

inline RatioMode parse_mode(const std::string& m) {
  if (m == "poly") return RatioMode::Poly;
  if (m == "general") return RatioMode::General;
  throw Error(ErrorCode::ParseError, "unknown mode '" + m + "'");
}

inline json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

/// Everything one scenario needs, loaded once and shared between its checks.
class Context {
 public:
  Context(const Scenario& sc, std::uint64_t master) : sc_(sc), master_(master) {
    if (sc.kind == Kind::Body) poly_ = io::polytope_from_json(sc.payload);
    if (sc.kind == Kind::Cloud) cloud_ = io::cloud_from_json(sc.payload);
    if (sc.kind == Kind::Profile) profile_ = profile_from_json(sc.payload);
    general_.k_max = param(sc.params, "k_max", 8);
  }

  const Scenario& scenario() const { return sc_; }
  const json& params() const { return sc_.params; }
  bool is_body() const { return poly_.has_value(); }
  const Polytope& poly() const { return *poly_; }
  const ProfileScenario& profile() const { return *profile_; }
  PointCloud cloud() const { return cloud_ ? *cloud_ : vertex_cloud(*poly_); }
  std::uint64_t seed(const std::string& check, const std::string& variant) const {
    return derive_seed(master_, sc_.id + "/" + check + "/" + variant);
  }
  const GeneralModeOptions& general() const { return general_; }

  /// Convexification trace up to k_max, computed once.
  const std::vector<ConvexificationTrace>& trace() {
    if (!trace_) {
      if (is_body()) {
        trace_ = convexification_gap(body(), general_.k_max, general_.sampling);
      } else {
        FiniteTraceOptions fo;
        fo.k_max = general_.k_max;
        fo.grid_per_axis = general_.sampling.grid_per_axis;
        trace_ = finite_convexification(*cloud_, fo);
      }
    }
    return *trace_;
  }

  const BodyApprox& body() {
    if (!body_) body_ = body_from_polytope(*poly_, general_.sampling);
    return *body_;
  }

  const HullRatio& ratio(RatioMode mode) {
    auto it = ratios_.find(mode);
    if (it != ratios_.end()) return it->second;
    HullRatio r;
    if (mode == RatioMode::Poly)
      r = is_body() ? hull_ratio(*poly_, mode, general_) : hull_ratio(*cloud_, mode, general_);
    else if (is_body())
      r = general_ratio_from_trace(body(), trace(), vertex_cloud(*poly_).diameter(), general_);
    else
      r = general_ratio_from_trace(*cloud_, trace(), general_);
    return ratios_.emplace(mode, r).first->second;
  }

  std::vector<RatioMode> modes() const {
    std::vector<RatioMode> out;
    for (const auto& m : list_param<std::string>(sc_.params, "modes", {"poly", "general"})) out.push_back(parse_mode(m));
    return out;
  }

 private:
  const Scenario& sc_;
  std::uint64_t master_;
  std::optional<Polytope> poly_;
  std::optional<PointCloud> cloud_;
  std::optional<ProfileScenario> profile_;
  GeneralModeOptions general_;
  std::optional<BodyApprox> body_;
  std::optional<std::vector<ConvexificationTrace>> trace_;
  std::map<RatioMode, HullRatio> ratios_;
};

struct Output {
  std::vector<Record> records;
  std::vector<PlotFile> plots;
  std::vector<ChainingRow> chaining;
};

inline Record make_record(const Context& ctx, const std::string& check, const std::string& variant) {
  Record r;
  r.scenario = ctx.scenario().id;
  r.check = check;
  r.variant = variant;
  return r;
}

inline void finish(Record& r) { r.holds = r.slack >= -kVolTol; }

inline void volume_xcheck(Context& ctx, Output& out) {
  Record r = make_record(ctx, "volume_xcheck", "");
  const double a = volume_det(ctx.poly().boundary), b = volume_projected(ctx.poly().boundary);
  r.lhs = a;
  r.rhs = b;
  // relative disagreement against the volume tolerance
  r.slack = -std::abs(a - b) / std::max(1.0, std::abs(a));
  r.constants["volume"] = a;
  finish(r);
  out.records.push_back(std::move(r));
}

inline void ratio_poly_check(Context& ctx, Output& out) {
  Record r = make_record(ctx, "ratio_poly", "");
  const HullRatio& h = ctx.ratio(RatioMode::Poly);
  r.lhs = 1.0;
  r.rhs = h.R;
  r.slack = h.R - 1.0;
  r.constants["R"] = h.R;
  r.details = to_json(h);
  if (ctx.is_body()) {
    r.constants["beta"] = beta_ratio(ctx.poly());
    r.details["convex"] = h.R == 1.0;
  }
  finish(r);
  out.records.push_back(std::move(r));
}

inline void revbm_check(Context& ctx, Output& out) {
  const auto& p = ctx.params();
  const auto ss = list_param<double>(p, "s", {0.5, 1.0, 2.0});
  const auto ts = list_param<double>(p, "t", {0.5, 1.0, 2.0});
  const auto ms = list_param<int>(p, "m", {1, 2});
  const double cap = param(p, "c1_cap", 10.0);
  const BodyApprox& a = ctx.body();
  for (double s : ss)
    for (double t : ts)
      for (int m : ms) {
        Record r = make_record(ctx, "revbm", "s=" + fmt(s) + ",t=" + fmt(t) + ",m=" + std::to_string(m));
        const auto rep = check_reverse_bm(a, a, s, t, m);
        r.lhs = rep.lhs;
        r.rhs = rep.rhs_terms.first + rep.rhs_terms.second;
        r.slack = std::isfinite(rep.empirical_C1) ? cap - rep.empirical_C1 : -1.0;
        r.constants = {{"C1", rep.empirical_C1}, {"beta_A", rep.beta_A}, {"beta_B", rep.beta_B}};
        r.details = to_json(rep);
        r.details["c1_cap"] = cap;
        finish(r);
        out.records.push_back(std::move(r));
      }
}

inline void convexify_check(Context& ctx, Output& out) {
  Record r = make_record(ctx, "convexify", "k_max=" + std::to_string(ctx.general().k_max));
  const auto& trace = ctx.trace();
  double tol = 0.0, vol_a = 0.0;
  if (ctx.is_body()) {
    tol = ctx.body().spacing();  // grid resolution of the gaps
    vol_a = ctx.body().sample_volume();
  } else {
    vol_a = finite_cells(ctx.cloud()).volume;
    tol = 1e-9 * std::max(ctx.cloud().diameter(), 1e-300);
  }
  // volumes stay under the bound; gaps do not grow beyond the resolution
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (vol_a > 0) slack = std::min(slack, (trace[i].bound_value - trace[i].vol_Ak) / vol_a);
    if (ctx.is_body() && i > 0)
      slack = std::min(slack, trace[i - 1].hausdorff_to_hull + tol - trace[i].hausdorff_to_hull);
  }
  if (!std::isfinite(slack)) slack = 0.0;
  r.lhs = trace.back().hausdorff_to_hull;
  r.rhs = trace.front().hausdorff_to_hull;
  r.slack = slack;
  r.constants["C2_hat"] = estimate_c2(trace);
  json rows = json::array();
  for (const auto& t : trace) rows.push_back(to_json(t));
  r.details = {{"trace", rows}, {"resolution", tol}, {"k_reached", trace.back().k}};
  finish(r);
  out.plots.push_back({ctx.scenario().id + "_convexify_gap_vs_k.csv", trace_csv(trace)});
  out.records.push_back(std::move(r));
}

inline void cover_ratio_check(Context& ctx, Output& out) {
  const auto eps_list = list_param<double>(ctx.params(), "epsilons", {0.2, 0.4, 0.8});
  // the counts do not depend on R
  std::vector<HullCoverRecord> base;
  for (double eps : eps_list)
    base.push_back(ctx.is_body() ? check_hull_cover_ratio(ctx.poly(), eps, HullRatio{})
                                 : check_hull_cover_ratio(ctx.cloud(), eps, HullRatio{}));
  for (RatioMode mode : ctx.modes()) {
    const HullRatio& ratio = ctx.ratio(mode);
    std::ostringstream plot;
    plot.precision(17);
    plot << "epsilon,n_hull,n_body,rhs\n";
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
      const double eps = eps_list[i];
      Record r = make_record(ctx, "cover_ratio", std::string(to_string(mode)) + ",eps=" + fmt(eps));
      const auto rec = rescore(base[i], ratio);
      r.lhs = static_cast<double>(rec.n_hull);
      r.rhs = rec.rhs;
      r.slack = rec.slack;
      r.constants = {{"R", rec.R}, {"n", rec.n}};
      r.details = to_json(rec);
      finish(r);
      plot << eps << ',' << rec.n_hull << ',' << rec.n_body << ',' << rec.rhs << '\n';
      out.records.push_back(std::move(r));
    }
    out.plots.push_back({ctx.scenario().id + "_cover_" + to_string(mode) + "_n_vs_eps.csv", plot.str()});
  }
}

inline void gamma_hull_check(Context& ctx, Output& out) {
  const auto alphas = list_param<double>(ctx.params(), "alpha", {2.0});
  GammaSampleOptions go;
  go.general = ctx.general();
  // gamma values do not depend on R
  std::vector<GammaRatioReport> base;
  for (double alpha : alphas)
    base.push_back(ctx.is_body() ? certify_hull_gamma(ctx.poly(), alpha, HullRatio{}, go)
                                 : certify_hull_gamma(ctx.cloud(), alpha, HullRatio{}, go));
  for (RatioMode mode : ctx.modes())
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      const double alpha = alphas[i];
      Record r = make_record(ctx, "gamma_hull", std::string(to_string(mode)) + ",alpha=" + fmt(alpha));
      const auto rep = rescore(base[i], ctx.ratio(mode));
      r.lhs = rep.gamma_Th;
      r.rhs = rep.L_bound * rep.gamma_T;
      r.slack = rep.slack;
      r.constants = {{"R", rep.R}, {"L", rep.L_bound}, {"n", rep.n}};
      r.details = to_json(rep);
      finish(r);
      out.chaining.push_back({ctx.scenario().id + "/" + to_string(mode), alpha, rep.gamma_T, rep.gamma_Th,
                              rep.L_bound, std::nullopt, std::nullopt});
      out.records.push_back(std::move(r));
    }
}

inline void mm_check(Context& ctx, Output& out) {
  const auto trials = param<std::size_t>(ctx.params(), "trials", 20000);
  const double cap = param(ctx.params(), "L_hat_cap", 10.0);
  Record r = make_record(ctx, "mm_two_sided", "trials=" + std::to_string(trials));
  const PointCloud c = ctx.cloud();
  if (c.size() > kGammaGreedyMax) throw Error(ErrorCode::TooLarge, "mm_two_sided is limited to 4096 points");
  const auto rep = certify_mm_two_sided(c, trials, ctx.seed("mm_two_sided", r.variant));
  r.lhs = rep.gamma2;
  r.rhs = rep.esup.mean;
  r.slack = rep.degenerate ? 0.0 : cap - rep.L_hat;
  r.constants = {{"L_hat", rep.degenerate ? json(nullptr) : json(rep.L_hat)}, {"gamma2", rep.gamma2}, {"esup", rep.esup.mean}};
  r.details = to_json(rep);
  r.details["L_hat_cap"] = cap;
  finish(r);
  if (!rep.degenerate)
    out.chaining.push_back({ctx.scenario().id, 2.0, rep.gamma2, std::nullopt, std::nullopt, rep.esup.mean, rep.L_hat});
  out.records.push_back(std::move(r));
}

inline void l_existence_check(Context& ctx, Output& out) {
  const auto& s = ctx.profile();
  Record r = make_record(ctx, "l_existence", "");
  const auto rep = l_existence_report(s.profile, s.delta, s.C);
  r.lhs = rep.verdict.value;
  r.details = to_json(rep);
  r.constants = {{rep.ratio.label(), rep.ratio.C}, {"L_exists", rep.L_exists}};
  // a verdict is certified when the quadrature reached one; an expected
  // outcome, when given, must match
  bool ok = rep.verdict.diagnosis != Diagnosis::Budget;
  if (ctx.params().contains("expect_L_exists")) ok = ok && ctx.params().at("expect_L_exists").get<bool>() == rep.L_exists;
  r.slack = ok ? 0.0 : -1.0;
  finish(r);
  out.records.push_back(std::move(r));
}

inline void run_check(Context& ctx, const std::string& check, Output& out) {
  using Fn = void (*)(Context&, Output&);
  static const std::map<std::string, Fn> table{
      {"volume_xcheck", volume_xcheck}, {"ratio_poly", ratio_poly_check}, {"revbm", revbm_check},
      {"convexify", convexify_check},   {"cover_ratio", cover_ratio_check}, {"gamma_hull", gamma_hull_check},
      {"mm_two_sided", mm_check},       {"l_existence", l_existence_check}};
  table.at(check)(ctx, out);
}

inline Output run_scenario(const Scenario& sc, std::uint64_t master) {
  Output out;
  std::optional<Context> ctx;
  for (const auto& check : sc.checks) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t first = out.records.size();
    try {
      if (!ctx) ctx.emplace(sc, master);
      run_check(*ctx, check, out);
    } catch (const Error& e) {
      Record r;
      r.scenario = sc.id;
      r.check = check;
      r.slack = -1.0;
      r.details = {{"error", to_string(e.code())}, {"message", e.what()}};
      out.records.resize(first);
      out.records.push_back(std::move(r));
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t i = first; i < out.records.size(); ++i)
      out.records[i].runtime_ms = ms / static_cast<double>(out.records.size() - first);
  }
  return out;
}

}  // namespace detail

/// Runs every scenario, jobs at a time. Records come back ordered by
/// (scenario, check, variant) whatever the schedule.
inline SuiteResult run_suite(const Suite& suite, std::uint64_t seed, unsigned jobs = 1) {
  std::vector<detail::Output> outs(suite.scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < suite.scenarios.size();) outs[i] = detail::run_scenario(suite.scenarios[i], seed);
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(suite.scenarios.size(), 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  SuiteResult res;
  res.seed = seed;
  std::vector<ChainingRow> rows;
  for (auto& o : outs) {
    for (auto& r : o.records) res.records.push_back(std::move(r));
    for (auto& p : o.plots) res.plots.push_back(std::move(p));
    for (auto& c : o.chaining) rows.push_back(std::move(c));
  }
  auto key = [](const Record& r) { return std::tie(r.scenario, r.check, r.variant); };
  std::stable_sort(res.records.begin(), res.records.end(), [&](const Record& a, const Record& b) { return key(a) < key(b); });
  std::sort(res.plots.begin(), res.plots.end(), [](const PlotFile& a, const PlotFile& b) { return a.name < b.name; });
  std::stable_sort(rows.begin(), rows.end(), [](const ChainingRow& a, const ChainingRow& b) {
    return std::tie(a.scenario, a.alpha) < std::tie(b.scenario, b.alpha);
  });
  res.chaining_csv = chaining_csv(rows);
  return res;
}

inline json to_json(const Record& r) {
  return {{"scenario", r.scenario}, {"check", r.check},   {"variant", r.variant},
          {"holds", r.holds},       {"lhs", detail::opt_json(r.lhs)}, {"rhs", detail::opt_json(r.rhs)},
          {"slack", r.slack},       {"constants", r.constants}, {"details", r.details}};
}

/// results.json carries no timings, so equal seeds give equal bytes.
inline json results_json(const SuiteResult& res) {
  json recs = json::array();
  std::size_t failed = 0;
  double max_lhat = 0.0, max_c1 = 0.0;
  for (const auto& r : res.records) {
    recs.push_back(to_json(r));
    failed += !r.holds;
    if (r.constants.contains("L_hat") && r.constants["L_hat"].is_number())
      max_lhat = std::max(max_lhat, r.constants["L_hat"].get<double>());
    if (r.constants.contains("C1") && r.constants["C1"].is_number())
      max_c1 = std::max(max_c1, r.constants["C1"].get<double>());
  }
  return {{"seed", res.seed},
          {"summary", {{"records", res.records.size()}, {"failed", failed}, {"max_L_hat", max_lhat}, {"max_C1", max_c1}}},
          {"records", recs}};
}

inline json timings_json(const SuiteResult& res) {
  json out = json::array();
  for (const auto& r : res.records)
    out.push_back({{"scenario", r.scenario}, {"check", r.check}, {"variant", r.variant}, {"runtime_ms", r.runtime_ms}});
  return out;
}

inline std::string results_csv(const SuiteResult& res) {
  std::ostringstream os;
  os.precision(17);
  os << "scenario,check,variant,holds,lhs,rhs,slack\n";
  for (const auto& r : res.records) {
    os << r.scenario << ',' << r.check << ",\"" << r.variant << "\"," << (r.holds ? "true" : "false") << ',';
    if (r.lhs) os << *r.lhs;
    os << ',';
    if (r.rhs) os << *r.rhs;
    os << ',' << r.slack << '\n';
  }
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::PreconditionFailed, "cannot write " + p.string());
  f << s;
}

inline void write_outputs(const SuiteResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "plots");
  write_text(dir / "results.json", results_json(res).dump(2) + "\n");
  write_text(dir / "timings.json", timings_json(res).dump(2) + "\n");
  write_text(dir / "results.csv", results_csv(res));
  write_text(dir / "chaining.csv", res.chaining_csv);
  for (const auto& p : res.plots) write_text(dir / "plots" / p.name, p.content);
}

}  // namespace hullmetry::harness
