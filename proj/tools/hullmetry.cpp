// hullmetry: certification suites and single checks from the command line.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hullmetry/harness.hpp"

namespace hm = hullmetry;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::uint64_t>& suite) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HULLMETRY_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw hm::Error(hm::ErrorCode::ParseError, "HULLMETRY_SEED is not an unsigned integer");
  }
  return suite.value_or(kDefaultSeed);
}

hm::Polytope load_body(const std::string& path) { return hm::io::polytope_from_json(hm::io::read_json_file(path)); }
hm::PointCloud load_cloud(const std::string& path) { return hm::io::cloud_from_json(hm::io::read_json_file(path)); }

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hullmetry: convex hull, Minkowski, covering and chaining certification"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a scenario suite and write reports");
  std::string suite_path, out_dir;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  run->add_option("suite", suite_path, "suite JSON")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "master seed (falls back to HULLMETRY_SEED)");
  run->add_option("--jobs", jobs, "parallel scenarios")->check(CLI::Range(1u, 256u));

  // single checks
  std::string body, cloud, body_b;
  auto* hull = app.add_subcommand("hull", "convex hull and volume ratio");
  hull->add_option("--body", body);
  hull->add_option("--cloud", cloud);
  std::string mode = "poly";
  hull->add_option("--mode", mode)->check(CLI::IsMember({"poly", "general"}));

  auto* volume = app.add_subcommand("volume", "polytope volume by both formulas");
  volume->add_option("--body", body)->required();

  auto* minkavg = app.add_subcommand("minkavg", "convexification trace of A(k)");
  int k_max = 8;
  minkavg->add_option("--body", body)->required();
  minkavg->add_option("--k", k_max, "largest k")->check(CLI::Range(1, 64));

  auto* revbm = app.add_subcommand("revbm", "reverse Brunn-Minkowski ledger entry");
  double s = 1.0, t = 1.0;
  int m = 1;
  revbm->add_option("--a", body)->required();
  revbm->add_option("--b", body_b, "second body (defaults to --a)");
  revbm->add_option("--s", s);
  revbm->add_option("--t", t);
  revbm->add_option("--m", m);

  auto* cover = app.add_subcommand("cover", "covering numbers at eps");
  double eps = 0.5;
  cover->add_option("--cloud", cloud);
  cover->add_option("--body", body, "hull-cover check on a body");
  cover->add_option("--eps", eps)->required();
  cover->add_option("--mode", mode)->check(CLI::IsMember({"poly", "general"}));

  auto* gamma = app.add_subcommand("gamma", "gamma functional of a cloud");
  double alpha = 2.0;
  std::string method = "greedy";
  gamma->add_option("--cloud", cloud)->required();
  gamma->add_option("--alpha", alpha);
  gamma->add_option("--method", method)->check(CLI::IsMember({"exact", "greedy", "entropy"}));

  auto* supgauss = app.add_subcommand("supgauss", "Monte Carlo E sup of the canonical Gaussian process");
  std::size_t trials = 100000;
  std::uint64_t mc_seed = 0;
  supgauss->add_option("--cloud", cloud)->required();
  supgauss->add_option("--trials", trials);
  supgauss->add_option("--seed", mc_seed);

  auto* profile = app.add_subcommand("profile", "existence of L for an entropy profile");
  double chi = 2.0, psi = 0.0, delta = 1.0, C = 1.0;
  profile->add_option("--chi", chi)->required();
  profile->add_option("--psi", psi)->required();
  profile->add_option("--delta", delta);
  profile->add_option("--C", C);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const hm::harness::Suite suite = hm::harness::load_suite(suite_path);
      const auto res = hm::harness::run_suite(suite, resolve_seed(seed, suite.seed), jobs);
      hm::harness::write_outputs(res, out_dir);
      for (const auto& r : res.records)
        if (!r.holds) std::cerr << "FAIL " << r.scenario << " " << r.check << " " << r.variant << "\n";
      return res.all_hold() ? 0 : 1;
    }
    if (*hull) {
      if (body.empty() == cloud.empty()) throw hm::Error(hm::ErrorCode::ParseError, "give exactly one of --body, --cloud");
      const auto m_ = mode == "poly" ? hm::RatioMode::Poly : hm::RatioMode::General;
      if (!body.empty()) {
        const auto poly = load_body(body);
        const auto h = hm::quickhull(hm::vertex_cloud(poly));
        print({{"hull_vertices", h.vertices().size()}, {"hull_volume", hm::polytope_volume(h)},
               {"volume", hm::polytope_volume(poly)}, {"ratio", hm::to_json(hm::hull_ratio(poly, m_))}});
      } else {
        const auto c = load_cloud(cloud);
        print({{"points", c.size()}, {"ratio", hm::to_json(hm::hull_ratio(c, m_))}});
      }
    } else if (*volume) {
      const auto poly = load_body(body);
      print({{"volume", hm::polytope_volume(poly)}, {"volume_det", hm::volume_det(poly.boundary)},
             {"volume_projected", hm::volume_projected(poly.boundary)}});
    } else if (*minkavg) {
      const auto trace = hm::convexification_gap(hm::body_from_polytope(load_body(body)), k_max);
      json rows = json::array();
      for (const auto& r : trace) rows.push_back(hm::to_json(r));
      print({{"trace", rows}, {"c2_hat", hm::estimate_c2(trace)}});
    } else if (*revbm) {
      const auto a = hm::body_from_polytope(load_body(body));
      const auto b = body_b.empty() ? a : hm::body_from_polytope(load_body(body_b));
      print(hm::to_json(hm::check_reverse_bm(a, b, s, t, m)));
    } else if (*cover) {
      if (body.empty() == cloud.empty()) throw hm::Error(hm::ErrorCode::ParseError, "give exactly one of --body, --cloud");
      if (!cloud.empty()) {
        print(hm::to_json(hm::greedy_cover(load_cloud(cloud), eps)));
      } else {
        const auto poly = load_body(body);
        const auto m_ = mode == "poly" ? hm::RatioMode::Poly : hm::RatioMode::General;
        print(hm::to_json(hm::check_hull_cover_ratio(poly, eps, hm::hull_ratio(poly, m_))));
      }
    } else if (*gamma) {
      const auto c = load_cloud(cloud);
      const auto g = method == "exact"    ? hm::gamma_exact_small(c, alpha)
                     : method == "greedy" ? hm::gamma_greedy(c, alpha)
                                          : hm::entropy_integral(c, alpha);
      print(hm::to_json(g));
    } else if (*supgauss) {
      print(hm::to_json(hm::gaussian_sup_mc(load_cloud(cloud), trials, mc_seed)));
    } else if (*profile) {
      print(hm::to_json(hm::l_existence_report(hm::make_profile(chi, psi), delta, C)));
    }
    return 0;
  } catch (const hm::Error& e) {
    std::cerr << "hullmetry: " << e.what() << "\n";
    // bad input is a usage problem; anything else failed to certify
    switch (e.code()) {
      case hm::ErrorCode::ParseError:
      case hm::ErrorCode::ParamOutOfRange:
      case hm::ErrorCode::DimensionMismatch:
      case hm::ErrorCode::NonpositiveScale:
        return 2;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "hullmetry: " << e.what() << "\n";
    return 2;
  }
}
