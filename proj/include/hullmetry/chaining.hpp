#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hullmetry/convex_region.hpp"
#include "hullmetry/core.hpp"
#include "hullmetry/covering.hpp"
#include "hullmetry/polytope.hpp"

namespace hullmetry {

inline constexpr std::size_t kGammaExactMax = 5;
inline constexpr std::size_t kGammaGreedyMax = 4096;

/// N_0 = 1, N_m = 2^(2^m); saturates at size_t max.
inline std::size_t admissible_limit(int m) {
  if (m <= 0) return 1;
  if (m >= 6) return std::numeric_limits<std::size_t>::max();
  return std::size_t{1} << (std::size_t{1} << m);
}

/// partitions[m][i] is the cell label of point i at level m. Labels are
/// 0..cells-1 in order of first appearance.
struct AdmissibleSequence {
  std::vector<std::vector<int>> partitions;

  std::size_t cells(std::size_t m) const {
    const auto& p = partitions[m];
    return p.empty() ? 0 : static_cast<std::size_t>(*std::max_element(p.begin(), p.end())) + 1;
  }

  bool valid() const {
    for (std::size_t m = 0; m < partitions.size(); ++m) {
      if (cells(m) > admissible_limit(static_cast<int>(m))) return false;
      if (m == 0) continue;
      // refinement: each level-m cell sits inside one level-(m-1) cell
      std::vector<int> parent(cells(m), -1);
      for (std::size_t i = 0; i < partitions[m].size(); ++i) {
        int& p = parent[static_cast<std::size_t>(partitions[m][i])];
        if (p == -1) p = partitions[m - 1][i];
        if (p != partitions[m - 1][i]) return false;
      }
    }
    return true;
  }
};

enum class GammaMethod { Exact, Greedy, EntropyIntegral };

inline const char* to_string(GammaMethod m) {
  switch (m) {
    case GammaMethod::Exact: return "exact";
    case GammaMethod::Greedy: return "greedy";
    case GammaMethod::EntropyIntegral: return "entropy_integral";
  }
  return "?";
}

struct GammaEstimate {
  double alpha = 2.0;
  double value = 0.0;
  GammaMethod method = GammaMethod::Greedy;
  std::optional<AdmissibleSequence> witness;
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw Error(ErrorCode::ParamOutOfRange, "alpha must be positive");
}

/// sup_t sum_m 2^(m/alpha) diam(A_m(t)) for a given sequence.
inline double sequence_value(const AdmissibleSequence& seq, const PointCloud& c, double alpha) {
  const std::size_t n = c.size();
  std::vector<double> acc(n, 0.0);
  for (std::size_t m = 0; m < seq.partitions.size(); ++m) {
    const auto& lab = seq.partitions[m];
    std::vector<double> diam(seq.cells(m), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (lab[i] == lab[j]) {
          double& d = diam[static_cast<std::size_t>(lab[i])];
          d = std::max(d, c.distance(i, j));
        }
    const double w = std::pow(2.0, static_cast<double>(m) / alpha);
    for (std::size_t i = 0; i < n; ++i) acc[i] += w * diam[static_cast<std::size_t>(lab[i])];
  }
  return *std::max_element(acc.begin(), acc.end());
}

inline std::vector<int> relabel(const std::vector<int>& lab) {
  std::vector<int> map, out(lab.size());
  int next = 0;
  for (std::size_t i = 0; i < lab.size(); ++i) {
    const auto l = static_cast<std::size_t>(lab[i]);
    if (map.size() <= l) map.resize(l + 1, -1);
    if (map[l] == -1) map[l] = next++;
    out[i] = map[l];
  }
  return out;
}

}  // namespace detail

/// Exact gamma for at most five points. Level 0 is forced, and from the first
/// m with N_m >= |T| singletons are optimal, so the search runs over every
/// level-1 partition (restricted growth strings with at most N_1 blocks).
inline GammaEstimate gamma_exact_small(const PointCloud& cloud, double alpha) {
  detail::check_alpha(alpha);
  const std::size_t n = cloud.size();
  if (n > kGammaExactMax) throw Error(ErrorCode::TooLarge, "exact gamma is limited to 5 points");
  GammaEstimate g;
  g.alpha = alpha;
  g.method = GammaMethod::Exact;
  AdmissibleSequence best;
  best.partitions.push_back(std::vector<int>(n, 0));
  if (n == 1) {
    g.witness = best;
    return g;
  }
  std::vector<int> singles(n);
  std::iota(singles.begin(), singles.end(), 0);
  const int limit = static_cast<int>(std::min<std::size_t>(admissible_limit(1), n));
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<int> rgs(n, 0);
  // enumerate restricted growth strings: rgs[i] <= 1 + max(rgs[0..i-1])
  while (true) {
    const int blocks = *std::max_element(rgs.begin(), rgs.end()) + 1;
    if (blocks <= limit) {
      AdmissibleSequence s;
      s.partitions = {std::vector<int>(n, 0), rgs};
      if (blocks < static_cast<int>(n)) s.partitions.push_back(singles);
      const double v = detail::sequence_value(s, cloud, alpha);
      if (v < best_value) {
        best_value = v;
        best = s;
      }
    }
    std::size_t i = n - 1;
    while (i > 0) {
      int mx = 0;
      for (std::size_t j = 0; j < i; ++j) mx = std::max(mx, rgs[j]);
      if (rgs[i] <= mx) {
        ++rgs[i];
        break;
      }
      rgs[i] = 0;
      --i;
    }
    if (i == 0) break;
  }
  g.value = best_value;
  g.witness = best;
  return g;
}

/// Greedy admissible sequence: level m refines level m-1 by splitting the
/// cell of largest diameter along its diameter pair (each point to the nearer
/// endpoint, ties to the first) until N_m cells exist or every cell is a
/// single location. Lowest indices win every tie.
inline GammaEstimate gamma_greedy(const PointCloud& cloud, double alpha, bool keep_witness = false) {
  detail::check_alpha(alpha);
  const std::size_t n = cloud.size();
  if (n > kGammaGreedyMax) throw Error(ErrorCode::TooLarge, "greedy gamma is limited to 4096 points");
  const Eigen::MatrixXd& x = cloud.matrix();
  auto dist = [&](std::size_t i, std::size_t j) {
    return (x.col(static_cast<Eigen::Index>(i)) - x.col(static_cast<Eigen::Index>(j))).norm();
  };
  struct Cell {
    std::vector<std::size_t> members;
    double diam = 0.0;
    std::size_t a = 0, b = 0;
  };
  auto make_cell = [&](std::vector<std::size_t> members) {
    Cell c;
    c.members = std::move(members);
    c.a = c.b = c.members.front();
    for (std::size_t p = 0; p < c.members.size(); ++p)
      for (std::size_t q = p + 1; q < c.members.size(); ++q) {
        const double d = dist(c.members[p], c.members[q]);
        if (d > c.diam) {
          c.diam = d;
          c.a = c.members[p];
          c.b = c.members[q];
        }
      }
    return c;
  };

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<Cell> cells{make_cell(all)};
  std::vector<double> acc(n, cells[0].diam);
  AdmissibleSequence seq;
  if (keep_witness) seq.partitions.push_back(std::vector<int>(n, 0));

  for (int m = 1;; ++m) {
    bool splittable = false;
    for (const auto& c : cells) splittable |= c.diam > 0;
    if (!splittable) break;
    const std::size_t limit = admissible_limit(m);
    if (limit >= n) {
      // distinct locations become singletons; duplicates share a zero-diameter cell
      std::vector<Cell> next;
      for (const auto& c : cells) {
        std::vector<char> used(c.members.size(), 0);
        for (std::size_t p = 0; p < c.members.size(); ++p) {
          if (used[p]) continue;
          std::vector<std::size_t> group{c.members[p]};
          for (std::size_t q = p + 1; q < c.members.size(); ++q)
            if (!used[q] && dist(c.members[p], c.members[q]) == 0.0) {
              used[q] = 1;
              group.push_back(c.members[q]);
            }
          Cell s;
          s.members = std::move(group);
          s.a = s.b = s.members.front();
          next.push_back(std::move(s));
        }
      }
      cells = std::move(next);
    } else {
      while (cells.size() < limit) {
        std::size_t widest = 0;
        for (std::size_t k = 1; k < cells.size(); ++k)
          if (cells[k].diam > cells[widest].diam) widest = k;
        if (cells[widest].diam == 0.0) break;
        const Cell c = std::move(cells[widest]);
        std::vector<std::size_t> left, right;
        for (std::size_t i : c.members) (dist(i, c.a) <= dist(i, c.b) ? left : right).push_back(i);
        cells[widest] = make_cell(std::move(left));
        cells.insert(cells.begin() + static_cast<std::ptrdiff_t>(widest) + 1, make_cell(std::move(right)));
      }
    }
    const double w = std::pow(2.0, static_cast<double>(m) / alpha);
    for (const auto& c : cells)
      for (std::size_t i : c.members) acc[i] += w * c.diam;
    if (keep_witness) {
      std::vector<int> lab(n);
      for (std::size_t k = 0; k < cells.size(); ++k)
        for (std::size_t i : cells[k].members) lab[i] = static_cast<int>(k);
      seq.partitions.push_back(detail::relabel(lab));
    }
  }
  GammaEstimate g;
  g.alpha = alpha;
  g.method = GammaMethod::Greedy;
  g.value = *std::max_element(acc.begin(), acc.end());
  if (keep_witness) g.witness = std::move(seq);
  return g;
}

/// Upper sum of the integral of (ln N(eps))^(1/alpha) over (0, diam] with
/// greedy covering numbers. Grid eps_j = diam 2^(-j/4) down to the smallest
/// positive gap; each piece takes the integrand at its lower end (N is
/// non-increasing in eps) and the last piece (0, gap] uses the count of
/// distinct points.
inline GammaEstimate entropy_integral(const PointCloud& cloud, double alpha) {
  detail::check_alpha(alpha);
  GammaEstimate g;
  g.alpha = alpha;
  g.method = GammaMethod::EntropyIntegral;
  const FarthestFirst ff(cloud.matrix());
  const auto& rad = ff.radius();
  if (rad.size() < 2) return g;
  const double gap = rad.back();  // smallest positive interpoint distance
  const double diam = cloud.diameter();
  auto f = [&](double eps) { return std::pow(std::log(static_cast<double>(ff.count(eps))), 1.0 / alpha); };
  const double ratio = std::pow(2.0, -0.25);
  double hi = diam;
  while (hi > gap) {
    const double lo = std::max(hi * ratio, gap);
    g.value += (hi - lo) * f(lo);
    hi = lo;
  }
  g.value += gap * std::pow(std::log(static_cast<double>(rad.size())), 1.0 / alpha);
  return g;
}

struct SupEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

/// Seed of trial i under master seed s.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t i) {
  std::uint64_t z = master + (i + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Monte Carlo E max_t <t, g>. Trial i draws from its own generator, so the
/// result does not depend on jobs.
inline SupEstimate gaussian_sup_mc(const PointCloud& cloud, std::size_t trials, std::uint64_t seed,
                                   unsigned jobs = 1) {
  if (trials < 100) throw Error(ErrorCode::ParamOutOfRange, "at least 100 trials are required");
  const Eigen::MatrixXd& t = cloud.matrix();
  const auto n = t.rows();
  std::vector<double> best(trials);
  auto run = [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd g(n);
    for (std::size_t i = begin; i < end; ++i) {
      std::mt19937_64 rng(trial_seed(seed, i));
      std::normal_distribution<double> normal;
      for (Eigen::Index k = 0; k < n; ++k) g[k] = normal(rng);
      best[i] = (t.transpose() * g).maxCoeff();
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(trials)));
  if (jobs == 1) {
    run(0, trials);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(run, trials * j / jobs, trials * (j + 1) / jobs);
    for (auto& th : pool) th.join();
  }
  SupEstimate s;
  s.trials = trials;
  s.seed = seed;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double d = best[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (best[i] - mean);
  }
  s.mean = mean;
  s.std_error = std::sqrt(m2 / static_cast<double>(trials - 1)) / std::sqrt(static_cast<double>(trials));
  return s;
}

/// (ln(R 3^n)/ln 2 + 1)^(1/alpha)
inline double l_constant(double R, int n, double alpha) {
  if (!(R >= 1.0) || !std::isfinite(R)) throw Error(ErrorCode::ParamOutOfRange, "R must be >= 1");
  if (n < 1) throw Error(ErrorCode::ParamOutOfRange, "n must be >= 1");
  detail::check_alpha(alpha);
  const double lg = (std::log(R) + n * std::log(3.0)) / std::log(2.0);
  return std::pow(lg + 1.0, 1.0 / alpha);
}

struct GammaRatioReport {
  double alpha = 2.0;
  RatioMode mode = RatioMode::Poly;
  double R = 1.0;
  int n = 1;
  double gamma_T = 0.0;
  double gamma_Th = 0.0;
  double L_bound = 1.0;
  double slack = 0.0;  // L gamma_T - gamma_Th
  std::size_t sample_T = 0, sample_Th = 0;
  bool holds = false;
};

/// The same gamma values judged against another R.
inline GammaRatioReport rescore(GammaRatioReport r, const HullRatio& ratio) {
  r.mode = ratio.mode;
  r.R = ratio.R;
  r.L_bound = l_constant(ratio.R, r.n, r.alpha);
  r.slack = r.L_bound * r.gamma_T - r.gamma_Th;
  r.holds = r.slack >= -kVolTol;
  return r;
}

struct GammaSampleOptions {
  double resolution = 1.0 / 16.0;  // grid step as a fraction of diam
  double max_nodes = 3000;
  std::size_t max_points = kGammaGreedyMax;
  GeneralModeOptions general{};
};

namespace detail {

/// Evenly strided subsample down to at most cap columns.
inline Eigen::MatrixXd thin(const Eigen::MatrixXd& pts, std::size_t cap) {
  const auto n = static_cast<std::size_t>(pts.cols());
  if (n <= cap) return pts;
  Eigen::MatrixXd out(pts.rows(), static_cast<Eigen::Index>(cap));
  for (std::size_t j = 0; j < cap; ++j) out.col(static_cast<Eigen::Index>(j)) = pts.col(static_cast<Eigen::Index>(j * n / cap));
  return out;
}

inline GammaRatioReport gamma_ratio_report(const Eigen::MatrixXd& t, const Eigen::MatrixXd& th, double alpha,
                                           const HullRatio& ratio, int n) {
  GammaRatioReport r;
  r.alpha = alpha;
  r.n = n;
  const PointCloud ct(t), ch(th);
  r.gamma_T = t.cols() <= static_cast<Eigen::Index>(kGammaExactMax) ? gamma_exact_small(ct, alpha).value
                                                                      : gamma_greedy(ct, alpha).value;
  r.gamma_Th = gamma_greedy(ch, alpha).value;
  r.sample_T = static_cast<std::size_t>(t.cols());
  r.sample_Th = static_cast<std::size_t>(th.cols());
  return rescore(r, ratio);
}

inline CoverSampleOptions gamma_cover_options(const GammaSampleOptions& opt) {
  CoverSampleOptions c;
  c.resolution_factor = 1.0;
  c.max_nodes = opt.max_nodes;
  c.dirichlet_points = opt.max_points - 96;
  return c;
}

}  // namespace detail

/// gamma(T_h) <= L gamma(T) for a polytope, both sides by greedy gamma on
/// deterministic samples.
inline GammaRatioReport certify_hull_gamma(const Polytope& poly, double alpha, const HullRatio& ratio,
                                           const GammaSampleOptions& opt = {}) {
  const Eigen::MatrixXd verts = detail::vertex_matrix(poly);
  const double step = opt.resolution * PointCloud(verts).diameter();
  const auto co = detail::gamma_cover_options(opt);
  const Eigen::MatrixXd t = detail::thin(body_sample(poly, step, co), opt.max_points);
  const Eigen::MatrixXd th = detail::thin(hull_sample(verts, step, co), opt.max_points);
  return detail::gamma_ratio_report(t, th, alpha, ratio, poly.dim());
}

/// Finite T: exact gamma on T when it is small, greedy otherwise; the hull
/// sample is a frame grid or seeded convex combinations. n is the affine
/// dimension of T.
inline GammaRatioReport certify_hull_gamma(const PointCloud& cloud, double alpha, const HullRatio& ratio,
                                           const GammaSampleOptions& opt = {}) {
  const double step = opt.resolution * cloud.diameter();
  const Eigen::MatrixXd t = detail::thin(cloud.matrix(), opt.max_points);
  const Eigen::MatrixXd th =
      step > 0 ? detail::thin(hull_sample(cloud.matrix(), step, detail::gamma_cover_options(opt)), opt.max_points)
               : cloud.matrix();
  return detail::gamma_ratio_report(t, th, alpha, ratio, std::max(affine_frame(cloud.matrix()).rank, 1));
}

inline GammaRatioReport certify_hull_gamma(const Polytope& poly, double alpha, RatioMode mode,
                                           const GammaSampleOptions& opt = {}) {
  return certify_hull_gamma(poly, alpha, hull_ratio(poly, mode, opt.general), opt);
}

inline GammaRatioReport certify_hull_gamma(const PointCloud& cloud, double alpha, RatioMode mode,
                                           const GammaSampleOptions& opt = {}) {
  return certify_hull_gamma(cloud, alpha, hull_ratio(cloud, mode, opt.general), opt);
}

struct TwoSidedRecord {
  double gamma2 = 0.0;
  SupEstimate esup;
  double L_hat = 1.0;
  bool degenerate = false;  // a single point: both sides vanish
};

/// L_hat = max(gamma_2/Esup, Esup/gamma_2) with exact gamma where it runs.
inline TwoSidedRecord certify_mm_two_sided(const PointCloud& cloud, std::size_t trials, std::uint64_t seed,
                                           unsigned jobs = 1) {
  TwoSidedRecord r;
  r.gamma2 = cloud.size() <= kGammaExactMax ? gamma_exact_small(cloud, 2.0).value : gamma_greedy(cloud, 2.0).value;
  r.esup = gaussian_sup_mc(cloud, trials, seed, jobs);
  if (r.gamma2 == 0.0 || r.esup.mean <= 0.0) {
    r.degenerate = true;
    return r;
  }
  r.L_hat = std::max(r.gamma2 / r.esup.mean, r.esup.mean / r.gamma2);
  return r;
}

// ---- output ----

inline nlohmann::json to_json(const AdmissibleSequence& s) { return s.partitions; }

inline nlohmann::json to_json(const GammaEstimate& g) {
  return {{"alpha", g.alpha}, {"value", g.value}, {"method", to_string(g.method)},
          {"witness", g.witness ? to_json(*g.witness) : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const SupEstimate& s) {
  return {{"mean", s.mean}, {"std_error", s.std_error}, {"trials", s.trials}, {"seed", s.seed}};
}

inline nlohmann::json to_json(const GammaRatioReport& r) {
  return {{"alpha", r.alpha},     {"mode", to_string(r.mode)}, {"R", r.R},           {"n", r.n},
          {"gamma_T", r.gamma_T}, {"gamma_Th", r.gamma_Th},    {"L_bound", r.L_bound}, {"slack", r.slack},
          {"sample_T", r.sample_T}, {"sample_Th", r.sample_Th}, {"holds", r.holds}};
}

inline nlohmann::json to_json(const TwoSidedRecord& r) {
  return {{"gamma2", r.gamma2}, {"esup", to_json(r.esup)}, {"L_hat", r.L_hat}, {"degenerate", r.degenerate}};
}

struct ChainingRow {
  std::string scenario;
  double alpha = 2.0;
  std::optional<double> gamma_T, gamma_Th, L_bound, esup, L_hat;
};

inline std::string chaining_csv(const std::vector<ChainingRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "scenario,alpha,gamma_T,gamma_Th,L_bound,esup,L_hat\n";
  auto put = [&](const std::optional<double>& v) {
    os << ',';
    if (v) os << *v;
  };
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.alpha;
    put(r.gamma_T);
    put(r.gamma_Th);
    put(r.L_bound);
    put(r.esup);
    put(r.L_hat);
    os << '\n';
  }
  return os.str();
}

}  // namespace hullmetry
