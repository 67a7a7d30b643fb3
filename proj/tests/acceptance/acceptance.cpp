// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is 1 when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include <ssep/core.hpp>
#include <ssep/exact.hpp>
#include <ssep/harness/cli.hpp>
#include <ssep/harness/suites.hpp>
#include <ssep/interchange.hpp>
#include <ssep/perturbation.hpp>
#include <ssep/rng.hpp>
#include <ssep/skeleton.hpp>
#include <ssep/spectral.hpp>

namespace {

using ssep::Configuration;
using ssep::ModelParams;
namespace exact = ssep::exact;
namespace spectral = ssep::spectral;
namespace harness = ssep::harness;

constexpr std::uint64_t kSeed = 20261016;
constexpr double kEvolveTol = 1e-13;

struct Outcome {
  bool passed = true;
  std::vector<std::string> lines;

  void require(bool ok, const std::string& what) {
    passed = passed && ok;
    lines.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", what));
  }
  void note(const std::string& what) { lines.push_back("note " + what); }
};

int run(int id, const std::string& name, const std::function<void(Outcome&)>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, fmt::format("exception: {}", e.what()));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << fmt::format("{} {:>2} {} ({:.1f} s)\n", out.passed ? "PASS" : "FAIL", id, name, secs);
  for (const auto& l : out.lines) std::cout << "       " << l << "\n";
  std::cout.flush();
  return out.passed ? 0 : 1;
}

void stationary_product(Outcome& out) {
  double worst = 0.0;
  for (int n : {4, 6, 8})
    for (double p : {0.2, 0.5}) {
      const auto pi = exact::stationary(exact::build_generator({n, p, p, true}));
      worst = std::max(worst, exact::tv_distance(pi, exact::DistributionVector::product_bernoulli(n, p)));
    }
  out.require(worst <= 1e-10, fmt::format("max TV to Ber(p)^N = {:.3e} <= 1e-10", worst));
}

void stationary_mean(Outcome& out) {
  double worst = 0.0;
  for (int n : {4, 6, 8})
    for (auto [p, q] : {std::pair{0.3, 0.7}, std::pair{0.2, 0.5}}) {
      const auto pi = exact::stationary(exact::build_generator({n, p, q, true}));
      worst = std::max(worst, std::abs(exact::weight_moments(pi).mean - n * (p + q) / 2.0));
    }
  out.require(worst <= 1e-9, fmt::format("max |E_pi[S] - N(p+q)/2| = {:.3e} <= 1e-9", worst));
}

void spectral_vs_exact(Outcome& out) {
  double worst = 0.0;
  for (int n = 1; n <= 10; ++n) {
    const auto gen = exact::build_generator({n, 0.0, 0.0, true});
    auto dist = exact::DistributionVector::point_mass(Configuration::ones(n));
    double now = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double t = 0.05 * k;
      dist = exact::evolve(gen, dist, t - now, kEvolveTol);
      now = t;
      worst = std::max(worst, std::abs(exact::weight_moments(dist).mean - spectral::expected_red_mass(n, t)));
    }
  }
  out.require(worst <= 1e-8, fmt::format("max |heat - exact| over N<=10, t=0.05..1.0 = {:.3e} <= 1e-8", worst));
}

void tstar_gap(Outcome& out) {
  double worst = 0.0;
  std::string where;
  for (int n : {16, 64, 256, 1024, 4096})
    for (double p : {1.0 / n, 0.1, 0.5, 0.9}) {
      const double gap = std::abs(spectral::t_star(n, p) - spectral::t_star_asymptotic(n, p));
      if (gap > worst) {
        worst = gap;
        where = fmt::format("N={} p={:.4g}", n, p);
      }
    }
  out.require(worst <= 0.5, fmt::format("max |t* - t*_asym| = {:.4f} at {} <= 0.5", worst, where));
}

void mixing_vs_tstar(Outcome& out) {
  constexpr double kTol = 1e-6;
  const double p = 0.3;
  std::vector<double> offsets;
  std::vector<double> widths;
  double window = 0.0;  // calibrated at N = 6
  for (int n : {6, 8, 10}) {
    const auto gen = exact::build_generator({n, p, p, true});
    const auto pi = exact::stationary(gen);
    const double ts = spectral::t_star(n, p);
    const double t25 = exact::mixing_time(gen, pi, 0.25, kTol);
    const double t10 = exact::mixing_time(gen, pi, 0.1, kTol);
    const double t90 = exact::mixing_time(gen, pi, 0.9, kTol);
    offsets.push_back(t25 - ts);
    widths.push_back(t10 - t90);
    out.require(std::abs(t25 - ts) <= 3.0, fmt::format("N={}: |t_mix(0.25) - t*| = |{:.4f} - {:.4f}| <= 3", n, t25, ts));
    out.require(t10 - t90 <= 3.0, fmt::format("N={}: t_mix(0.1) - t_mix(0.9) = {:.4f} <= 3", n, t10 - t90));
    if (n == 6) {
      // Smallest C with t* - C(1+log(1/e)) <= t_mix(1-e) and t_mix(e) <= t* + C(1+log(1/e)).
      for (double e : {0.05, 0.1, 0.25, 0.5}) {
        const double scale = 1.0 + std::log(1.0 / e);
        window = std::max(window, (exact::mixing_time(gen, pi, e, kTol) - ts) / scale);
        window = std::max(window, (ts - exact::mixing_time(gen, pi, 1.0 - e, kTol)) / scale);
      }
    }
    if (n == 8) {
      auto block = exact::detail::DistributionBlock::identity(gen.dim());
      const double before = std::max(ts - 3.0, 0.0);
      exact::detail::evolve_block(gen, block, before, kEvolveTol);
      const double d_before = exact::detail::max_row_distance(block, pi).first;
      exact::detail::evolve_block(gen, block, ts + 3.0 * window - before, kEvolveTol);
      const double d_after = exact::detail::max_row_distance(block, pi).first;
      out.require(d_before >= 0.5, fmt::format("N=8: d(t* - 3) = {:.4f} >= 0.5", d_before));
      out.require(d_after <= 0.25,
                  fmt::format("N=8: d(t* + 3C) = {:.4f} <= 0.25 with C = {:.4f} calibrated at N=6", d_after, window));
    }
  }
  auto trend = [](const std::vector<double>& v) -> std::string {
    if (std::is_sorted(v.begin(), v.end())) return "non-decreasing";
    if (std::is_sorted(v.rbegin(), v.rend())) return "non-increasing";
    return "not monotone";
  };
  const auto offset_trend = trend(offsets);
  const auto width_trend = trend(widths);
  out.require(offset_trend != "not monotone", fmt::format("t_mix(0.25) - t* for N=6,8,10: {:.4f} {:.4f} {:.4f} ({})",
                                                          offsets[0], offsets[1], offsets[2], offset_trend));
  out.require(width_trend != "not monotone", fmt::format("t_mix(0.1) - t_mix(0.9) for N=6,8,10: {:.4f} {:.4f} {:.4f} ({})",
                                                         widths[0], widths[1], widths[2], width_trend));
}

void coupling_law(Outcome& out) {
  constexpr int kReplicas = 100000;
  const ModelParams params{5, 0.3, 0.6, true};
  const auto start = Configuration::parse("11001");
  const auto gen = exact::build_generator(params);
  double max_z = 0.0;
  double max_chi2 = 0.0;
  int tests = 0;
  int over = 0;
  for (double t : {0.05, 0.2, 1.0}) {
    const auto law = exact::evolve(gen, exact::DistributionVector::point_mass(start), t, kEvolveTol);
    for (bool coupled : {false, true}) {
      std::vector<std::size_t> index(kReplicas);
      const auto base = ssep::rng::derive_seed(kSeed, static_cast<std::uint64_t>(t * 1000) * 2 + coupled);
      ssep::parallel_for(index.size(), [&](std::size_t r) {
        const auto rs = ssep::rng::derive_seed(base, r);
        index[r] = (coupled ? ssep::sim::coupled_sample(start, params, t, rs)
                            : ssep::sim::simulate_ssep(start, params, t, rs))
                       .index();
      });
      std::vector<double> counts(law.dim(), 0.0);
      for (auto s : index) counts[s] += 1.0;
      double local = 0.0;
      double chi2 = 0.0;
      for (std::size_t s = 0; s < law.dim(); ++s) {
        const double p = law[s];
        if (p > 0.0) chi2 += (counts[s] - p * kReplicas) * (counts[s] - p * kReplicas) / (p * kReplicas);
        const double freq = counts[s] / kReplicas;
        const double se = std::sqrt(p * (1.0 - p) / kReplicas);
        const double z = se > 0.0 ? std::abs(freq - p) / se : (freq == p ? 0.0 : INFINITY);
        ++tests;
        if (z > 3.0) ++over;
        local = std::max(local, z);
      }
      max_z = std::max(max_z, local);
      max_chi2 = std::max(max_chi2, chi2);
      out.require(local <= 3.0,
                  fmt::format("t={} {}: max |freq - exact| / se = {:.3f} <= 3", t, coupled ? "coupled" : "direct", local));
    }
  }
  out.note(fmt::format("{} state tests, {} beyond 3 se, max z {:.3f}; at 3 se about {:.2f} exceedances are expected "
                       "by chance",
                       tests, over, max_z, tests * 0.0027));
  out.note(fmt::format("largest Pearson chi-square over the six laws: {:.1f} on 31 df (99th percentile 52.2)", max_chi2));
}

void nd_suites(Outcome& out, const harness::SuiteReport& lemma) {
  double worst = -INFINITY;
  double worst_var = -INFINITY;
  std::size_t laws = 0;
  for (int n = 1; n <= 5; ++n)
    for (auto [p, q] : {std::pair{0.3, 0.7}, std::pair{0.2, 0.5}, std::pair{0.5, 0.5}, std::pair{0.1, 0.9}}) {
      const ModelParams params{n, p, q, true};
      const auto scan = harness::exact_nd_scan(params, harness::default_nd_times(params));
      worst = std::max(worst, scan.max_violation);
      worst_var = std::max(worst_var, scan.max_variance_excess);
      laws += scan.laws_checked;
    }
  out.require(worst <= 1e-10, fmt::format("exact ND over {} laws (N<=5, 10 times, all starts): max {:.3e} <= 1e-10",
                                          laws, worst));
  out.require(worst_var <= 1e-10, fmt::format("exact Var(S_t) - E(S_t) max {:.3e} <= 1e-10", worst_var));

  const auto report = harness::verify_nd_suite({4, 0.3, 0.7, true}, {}, harness::NdMode::Conditional, 100000, kSeed);
  for (const auto& c : report.checks)
    out.require(c.passed, fmt::format("{}: {:.4g} {} {:.4g} ({})", c.name, c.statistic, c.relation, c.threshold, c.detail));
  for (const auto& c : lemma.checks)
    if (c.name == "conditional_marginal")
      out.require(c.passed,
                  fmt::format("{}: {:.4g} {} {:.4g} ({})", c.name, c.statistic, c.relation, c.threshold, c.detail));
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k, double sparsity) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution drop(sparsity);
  std::vector<double> v(k);
  double total = 0.0;
  for (auto& x : v) total += (x = drop(rng) ? 0.0 : e(rng));
  if (total == 0.0) v[0] = total = 1.0;
  for (auto& x : v) x /= total;
  return v;
}

void perturbation(Outcome& out) {
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<int> pick_n(1, 4);
  std::uniform_real_distribution<double> pick_p(0.05, 0.95);
  int lemma_fail = 0;
  int nd_cases = 0;
  int nd_fail = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    exact::PerturbedProductSpec spec;
    spec.n = pick_n(rng);
    spec.p = pick_p(rng);
    const std::size_t dim = std::size_t{1} << spec.n;
    // Alternate product set laws (ND) with arbitrary ones.
    spec.set_law = trial % 2 == 0 ? exact::DistributionVector::product_bernoulli(spec.n, pick_p(rng)).probs()
                                  : random_simplex(rng, dim, 0.3);
    spec.conditional_laws.resize(dim);
    for (std::size_t s = 0; s < dim; ++s)
      spec.conditional_laws[s] = random_simplex(rng, std::size_t{1} << std::popcount(s), 0.2);
    const auto b = exact::verify_product_perturbation(spec);
    const double slack = 1e-10 * (1.0 + b.rhs);
    if (b.lhs > b.rhs + slack) ++lemma_fail;
    if (b.rhs > 0.0) worst_ratio = std::max(worst_ratio, b.lhs / b.rhs);
    if (b.nd_bound) {
      ++nd_cases;
      if (b.lhs > *b.nd_bound + slack) ++nd_fail;
    }
  }
  out.require(lemma_fail == 0, fmt::format("4TV^2 <= E[a^|S∩S'|] - 1 violated in {} of 1000 specs", lemma_fail));
  out.require(nd_cases >= 500 && nd_fail == 0,
              fmt::format("4TV^2 <= exp((a-1) sum P(i in S)^2) - 1 violated in {} of {} ND specs", nd_fail, nd_cases));
  out.note(fmt::format("max lhs/rhs = {:.4f}", worst_ratio));
}

void lemma_statistics(Outcome& out, const harness::SuiteReport& lemma) {
  for (const auto& c : lemma.checks) {
    if (c.name == "conditional_marginal" || c.name == "crossing_inequality") continue;
    out.require(c.passed, fmt::format("{}: {:.6g} {} {:.6g} ({})", c.name, c.statistic, c.relation, c.threshold, c.detail));
  }
  out.note(fmt::format("c_hat = {:.4f}, 2 lambda_1 = {:.4f}, t2 = {:.4f}, C = {:.4f}", lemma.constants["c_hat"].get<double>(),
                       lemma.constants["two_lambda_1"].get<double>(), lemma.constants["t2"].get<double>(),
                       lemma.constants["crossing_constant"].get<double>()));
}

void crossing_inequality(Outcome& out, const harness::SuiteReport& lemma) {
  for (const auto& c : lemma.checks)
    if (c.name == "crossing_inequality")
      out.require(c.passed, fmt::format("{}: {:.4g} {} {:.4g} ({})", c.name, c.statistic, c.relation, c.threshold, c.detail));
}

std::string run_cli(const std::vector<std::string>& args, const std::filesystem::path& file) {
  std::vector<const char*> argv{"ssep", "--seed", "77", "--out"};
  const std::string path = file.string();
  argv.push_back(path.c_str());
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream sink;
  std::ostringstream err;
  const int code = harness::cli_dispatch(static_cast<int>(argv.size()), argv.data(), sink, err);
  std::ifstream in(file, std::ios::binary);
  std::stringstream content;
  content << in.rdbuf();
  return fmt::format("exit={}\n", code) + content.str();
}

void determinism(Outcome& out) {
  const auto dir = std::filesystem::temp_directory_path() / fmt::format("ssep_acceptance_{}", kSeed);
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"exact", {"exact", "--n", "6", "--p", "0.3", "--q", "0.3"}},
      {"simulate", {"simulate", "--n", "5", "--p", "0.3", "--q", "0.6", "--t", "0.2", "--replicas", "20000"}},
      {"simulate-coupled",
       {"simulate", "--n", "5", "--p", "0.3", "--q", "0.6", "--t", "0.2", "--replicas", "20000", "--coupled"}},
      {"profile", {"--format", "json", "profile", "--n", "6", "--p", "0.3", "--q", "0.3", "--mode", "simulate",
                   "--replicas", "2000"}},
      {"verify-nd", {"verify", "nd", "--n", "4", "--p", "0.3", "--q", "0.7"}},
      {"verify-lemma", {"verify", "lemma", "--n", "6", "--p", "0.3", "--q", "0.3", "--replicas", "2000", "--resamples",
                        "20000"}},
      {"skeleton", {"skeleton", "sample", "--n", "5", "--p", "0.3", "--q", "0.6", "--t", "1.0"}}};
  for (const auto& [name, args] : runs) {
    const auto first = run_cli(args, dir / (name + "_1.out"));
    const auto second = run_cli(args, dir / (name + "_2.out"));
    out.require(first == second && first.size() > 8,
                fmt::format("{}: {} bytes, identical = {}", name, first.size(), first == second));
  }
  std::filesystem::remove_all(dir);
}

}  // namespace

int main() {
  std::cout << fmt::format("acceptance run, seed {}\n", kSeed);
  int failed = 0;
  failed += run(1, "stationary product law", stationary_product);
  failed += run(2, "stationary mean weight", stationary_mean);
  failed += run(3, "heat solution vs exact absorbing chain", spectral_vs_exact);
  failed += run(4, "t* vs asymptotic formula", tstar_gap);
  failed += run(5, "mixing time vs t*", mixing_vs_tstar);
  failed += run(6, "coupling law equality", coupling_law);

  // One lemma-suite run feeds criteria 7 (conditional marginal), 9 and 10.
  harness::LemmaBudget budget;
  budget.replicas = 10000;
  budget.resamples = 100000;
  budget.epsilon = 0.25;
  budget.small_n = 4;
  harness::SuiteReport lemma;
  const int lemma_status = run(0, "lemma suite run (N=8; fixed-skeleton parts at N=4)", [&](Outcome& out) {
    lemma = harness::verify_lemma_suite({8, 0.3, 0.3, true}, budget, kSeed);
    out.note(fmt::format("{} checks", lemma.checks.size()));
  });
  failed += lemma_status;

  failed += run(7, "negative dependence suites", [&](Outcome& out) { nd_suites(out, lemma); });
  failed += run(8, "perturbed product bounds", perturbation);
  failed += run(9, "red-region decay and crossings", [&](Outcome& out) { lemma_statistics(out, lemma); });
  failed += run(10, "crossing inequality", [&](Outcome& out) { crossing_inequality(out, lemma); });
  failed += run(11, "determinism", determinism);
  std::cout << fmt::format("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
