#pragma once

// Command-line front end.
//
//   ssep [--seed S] [--config FILE] [--out PATH] [--format csv|json] <command>
//
//   exact             d(t) curve, or t_mix(eps) with --eps
//   simulate          empirical law of η_t, or one interchange trajectory
//   tstar             t* table
//   profile           cutoff profile (exact d(t) or Wilson lower bound)
//   verify nd|lemma   verification suites
//   skeleton sample   green skeleton as JSON
//   skeleton replay   replays of a stored skeleton
//
// Exit status: 0 success, 1 usage or validation error, 2 failed check.
// Settings come from defaults, then --config, then explicit flags.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "../core.hpp"
#include "../errors.hpp"
#include "../exact.hpp"
#include "../interchange.hpp"
#include "../rng.hpp"
#include "../skeleton.hpp"
#include "../skeleton_io.hpp"
#include "../spectral.hpp"
#include "config.hpp"
#include "profile.hpp"
#include "report.hpp"
#include "suites.hpp"

namespace ssep::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitCheckFailed = 2;

inline int suite_exit_code(const SuiteReport& report) { return report.passed() ? kExitOk : kExitCheckFailed; }

namespace cli_detail {

struct ModelFlags {
  int n = 0;
  double p = 0.5;
  double q = 0.5;
  bool unit_rates = false;
  CLI::Option* n_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* q_opt = nullptr;
  CLI::Option* unit_opt = nullptr;

  void attach(CLI::App* app) {
    n_opt = app->add_option("--n", n, "number of sites N");
    p_opt = app->add_option("--p", p, "left reservoir density");
    q_opt = app->add_option("--q", q, "right reservoir density");
    unit_opt = app->add_flag("--unit-rates", unit_rates, "unit-rate clocks instead of the N^2 acceleration");
  }

  /// Overlays explicit flags on cfg.model.
  void apply(ExperimentConfig& cfg) const {
    if (n_opt->count()) cfg.model.n_sites = n;
    if (p_opt->count()) cfg.model.p = p;
    if (q_opt->count()) cfg.model.q = q;
    if (unit_opt->count()) cfg.model.accelerate = !unit_rates;
  }
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cli_detail

inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  using cli_detail::ModelFlags;
  using cli_detail::UsageError;

  CLI::App app{"SSEP with reservoirs: exact analysis, simulation and verification"};
  app.name("ssep");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_path;
  std::string format_name = "csv";
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--config", config_path, "JSON configuration file");
  auto* out_opt = app.add_option("--out", out_path, "output path (default stdout)");
  auto* format_opt =
      app.add_option("--format", format_name, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  // exact
  auto* exact_cmd = sub("exact", "worst-case distance d(t) or mixing times");
  ModelFlags exact_model;
  exact_model.attach(exact_cmd);
  std::vector<double> exact_times;
  std::vector<double> exact_eps;
  double exact_tol = 1e-6;
  exact_cmd->add_option("--times", exact_times, "absolute times (default: t* + offsets)");
  exact_cmd->add_option("--eps", exact_eps, "report t_mix(eps) for these eps instead of d(t)");
  exact_cmd->add_option("--tol", exact_tol, "time tolerance of the t_mix bisection");

  // simulate
  auto* sim_cmd = sub("simulate", "empirical laws and trajectories");
  ModelFlags sim_model;
  sim_model.attach(sim_cmd);
  double sim_t = 0.0;
  int sim_replicas = 1000;
  std::string sim_start;
  bool sim_coupled = false;
  bool sim_trajectory = false;
  auto* sim_t_opt = sim_cmd->add_option("--t", sim_t, "time horizon");
  auto* sim_rep_opt = sim_cmd->add_option("--replicas", sim_replicas, "number of replicas");
  sim_cmd->add_option("--start", sim_start, "initial configuration, e.g. 1101 (default all ones)");
  sim_cmd->add_flag("--coupled", sim_coupled, "sample through the coloured interchange coupling");
  sim_cmd->add_flag("--trajectory", sim_trajectory, "one interchange trajectory from the all-red identity");

  // tstar
  auto* tstar_cmd = sub("tstar", "t* table");
  std::vector<int> tstar_n;
  std::vector<double> tstar_p;
  tstar_cmd->add_option("--n", tstar_n, "segment lengths");
  tstar_cmd->add_option("--p", tstar_p, "densities (default 0.5)");

  // profile
  auto* profile_cmd = sub("profile", "cutoff profile around t*");
  ModelFlags profile_model;
  profile_model.attach(profile_cmd);
  std::string profile_mode;
  std::vector<double> profile_times;
  std::vector<double> profile_offsets;
  int profile_replicas = 0;
  auto* profile_mode_opt =
      profile_cmd->add_option("--mode", profile_mode, "exact or simulate")->check(CLI::IsMember({"exact", "simulate"}));
  auto* profile_times_opt = profile_cmd->add_option("--times", profile_times, "absolute times");
  auto* profile_offsets_opt = profile_cmd->add_option("--offsets", profile_offsets, "offsets around t*");
  auto* profile_rep_opt = profile_cmd->add_option("--replicas", profile_replicas, "replicas in simulate mode");

  // verify
  auto* verify_cmd = sub("verify", "verification suites");
  verify_cmd->require_subcommand(1);
  auto* nd_cmd = verify_cmd->add_subcommand("nd", "negative dependence suite");
  nd_cmd->fallthrough();
  ModelFlags nd_model;
  nd_model.attach(nd_cmd);
  std::vector<double> nd_times;
  std::string nd_mode = "both";
  int nd_resamples = 100000;
  nd_cmd->add_option("--times", nd_times, "time grid (default: ten points over [0, 2t*])");
  nd_cmd->add_option("--mode", nd_mode, "exact, conditional or both")
      ->check(CLI::IsMember({"exact", "conditional", "both"}));
  nd_cmd->add_option("--resamples", nd_resamples, "fixed-skeleton resamples");
  auto* lemma_cmd = verify_cmd->add_subcommand("lemma", "red-region and crossing suite");
  lemma_cmd->fallthrough();
  ModelFlags lemma_model;
  lemma_model.attach(lemma_cmd);
  LemmaBudget lemma_budget;
  lemma_cmd->add_option("--replicas", lemma_budget.replicas, "replicas for decay and crossing statistics");
  lemma_cmd->add_option("--resamples", lemma_budget.resamples, "fixed-skeleton resamples");
  auto* lemma_eps_opt = lemma_cmd->add_option("--epsilon", lemma_budget.epsilon, "epsilon of the crossing check");
  lemma_cmd->add_option("--small-n", lemma_budget.small_n, "segment length of the fixed-skeleton checks");

  // skeleton
  auto* skel_cmd = sub("skeleton", "green skeletons");
  skel_cmd->require_subcommand(1);
  auto* skel_sample = skel_cmd->add_subcommand("sample", "sample a skeleton on [0, t]");
  skel_sample->fallthrough();
  ModelFlags skel_model;
  skel_model.attach(skel_sample);
  double skel_t = 0.0;
  std::string skel_green;
  auto* skel_t_opt = skel_sample->add_option("--t", skel_t, "horizon");
  skel_sample->add_option("--initial-green", skel_green, "initial green region, e.g. 0001");
  auto* skel_replay = skel_cmd->add_subcommand("replay", "replay a stored skeleton");
  skel_replay->fallthrough();
  std::string replay_file;
  std::string replay_x0;
  int replay_resamples = 1;
  skel_replay->add_option("--file", replay_file, "skeleton JSON")->required();
  skel_replay->add_option("--x0", replay_x0, "initial colours by site, e.g. RRBG (default all red)");
  skel_replay->add_option("--resamples", replay_resamples, "number of replays");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  if (!active->get_subcommands().empty()) active = active->get_subcommands().front();

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) apply_json(cfg, read_json_file(config_path));
    if (seed_opt->count()) cfg.seed = seed;
    if (out_opt->count()) cfg.output = out_path;
    if (format_opt->count()) cfg.format = parse_format(format_name);

    auto need_model = [&](const ModelFlags& flags) {
      const bool from_config = !config_path.empty() && read_json_file(config_path).contains("model");
      if (!flags.n_opt->count() && !from_config) throw UsageError("--n is required");
      flags.apply(cfg);
      cfg.model.validate();
    };
    auto emit = [&](const Table& table) { write_output(table.render(cfg.format), cfg.output, out); };

    if (active == exact_cmd) {
      need_model(exact_model);
      if (!exact_times.empty()) cfg.times = exact_times;
      cfg.mode = Mode::Exact;
      cfg.validate();
      const auto gen = exact::build_generator(cfg.model);
      const auto pi = exact::stationary(gen);
      if (!exact_eps.empty()) {
        Table table({"eps", "t_mix", "t_star"});
        for (double e : exact_eps) table.add_row({e, exact::mixing_time(gen, pi, e, exact_tol), cfg.t_star()});
        table.metadata() = base_metadata("exact", cfg.seed);
        table.metadata()["model"] = to_json(cfg.model);
        emit(table);
        return kExitOk;
      }
      const auto times = cfg.resolved_times();
      Table table({"t", "d", "argmax"});
      auto block = exact::detail::DistributionBlock::identity(gen.dim());
      double now = 0.0;
      for (double t : times) {
        exact::detail::evolve_block(gen, block, t - now, 1e-12);
        now = t;
        const auto [d, arg] = exact::detail::max_row_distance(block, pi);
        table.add_row({t, d, Configuration::from_index(arg, cfg.model.n_sites).to_string()});
      }
      table.metadata() = base_metadata("exact", cfg.seed);
      table.metadata()["model"] = to_json(cfg.model);
      table.metadata()["t_star"] = cfg.t_star();
      emit(table);
      return kExitOk;
    }

    if (active == sim_cmd) {
      need_model(sim_model);
      if (sim_t_opt->count()) {
        cfg.times = {sim_t};
      } else if (cfg.times.empty()) {
        throw UsageError("--t is required");
      }
      if (sim_rep_opt->count()) cfg.replicas = sim_replicas;
      cfg.mode = Mode::Simulate;
      cfg.validate();
      const double t = cfg.times.back();
      const int n = cfg.model.n_sites;
      if (sim_trajectory) {
        const auto res = sim::simulate_interchange(sim::InterchangeState::identity(n), cfg.model, t, cfg.seed);
        Table table({"time", "R", "B", "G", "L"});
        for (const auto& s : res.samples)
          table.add_row({s.time, std::int64_t{s.red}, std::int64_t{s.blue}, std::int64_t{s.green},
                         std::int64_t{s.crossings}});
        table.metadata() = base_metadata("simulate", cfg.seed);
        table.metadata()["model"] = to_json(cfg.model);
        table.metadata()["horizon"] = t;
        emit(table);
        return kExitOk;
      }
      const auto start = sim_start.empty() ? Configuration::ones(n) : Configuration::parse(sim_start);
      if (start.n_sites() != n) throw ValidationError("--start length differs from --n");
      std::vector<std::string> states(static_cast<std::size_t>(cfg.replicas));
      parallel_for(states.size(), [&](std::size_t r) {
        const auto rs = rng::derive_seed(cfg.seed, r);
        states[r] = (sim_coupled ? sim::coupled_sample(start, cfg.model, t, rs)
                                 : sim::simulate_ssep(start, cfg.model, t, rs))
                        .to_string();
      });
      std::map<std::string, std::int64_t> counts;
      for (const auto& s : states) ++counts[s];
      Table table({"state", "count", "frequency"});
      for (const auto& [state, c] : counts)
        table.add_row({state, c, static_cast<double>(c) / cfg.replicas});
      table.metadata() = base_metadata("simulate", cfg.seed);
      table.metadata()["model"] = to_json(cfg.model);
      table.metadata()["t"] = t;
      table.metadata()["replicas"] = cfg.replicas;
      table.metadata()["sampler"] = sim_coupled ? "coupled" : "direct";
      emit(table);
      return kExitOk;
    }

    if (active == tstar_cmd) {
      if (tstar_n.empty()) throw UsageError("--n is required");
      if (tstar_p.empty()) tstar_p = {0.5};
      Table table({"N", "p", "t_star", "t_star_asymptotic", "gap"});
      for (int n : tstar_n) {
        if (n < 1) throw ValidationError("N must be >= 1");
        for (double p : tstar_p) {
          if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0, 1]");
          const double ts = spectral::t_star(n, p);
          const double ta = spectral::t_star_asymptotic(n, p);
          table.add_row({std::int64_t{n}, p, ts, ta, ts - ta});
        }
      }
      table.metadata() = base_metadata("tstar", cfg.seed);
      emit(table);
      return kExitOk;
    }

    if (active == profile_cmd) {
      need_model(profile_model);
      if (profile_mode_opt->count()) cfg.mode = parse_mode(profile_mode);
      if (profile_times_opt->count()) cfg.times = profile_times;
      if (profile_offsets_opt->count()) {
        cfg.offsets = profile_offsets;
        cfg.times.clear();
      }
      if (profile_rep_opt->count()) cfg.replicas = profile_replicas;
      cfg.validate();
      emit(profile_table(cutoff_profile(cfg), cfg));
      return kExitOk;
    }

    if (active == nd_cmd) {
      need_model(nd_model);
      if (!nd_times.empty()) cfg.times = nd_times;
      const auto report = verify_nd_suite(cfg.model, cfg.times, parse_nd_mode(nd_mode), nd_resamples, cfg.seed);
      auto table = report.table(cfg.seed);
      table.metadata()["model"] = to_json(cfg.model);
      emit(table);
      return suite_exit_code(report);
    }

    if (active == lemma_cmd) {
      need_model(lemma_model);
      if (!lemma_eps_opt->count() && !config_path.empty()) lemma_budget.epsilon = cfg.epsilon;
      const auto report = verify_lemma_suite(cfg.model, lemma_budget, cfg.seed);
      auto table = report.table(cfg.seed);
      table.metadata()["model"] = to_json(cfg.model);
      emit(table);
      return suite_exit_code(report);
    }

    if (active == skel_sample) {
      need_model(skel_model);
      if (!skel_t_opt->count()) throw UsageError("--t is required");
      std::optional<Configuration> green;
      if (!skel_green.empty()) green = Configuration::parse(skel_green);
      const auto skel = sim::sample_green_skeleton(cfg.model, skel_t, cfg.seed, green);
      write_output(sim::skeleton_to_json(skel).dump(2) + "\n", cfg.output, out);
      return kExitOk;
    }

    if (active == skel_replay) {
      const auto skel = sim::skeleton_from_json(read_json_file(replay_file));
      const int n = skel.n_sites();
      const auto x0 = replay_x0.empty() ? sim::InterchangeState::identity(n)
                                        : sim::InterchangeState::from_colors(replay_x0);
      if (x0.n_sites() != n) throw ValidationError("--x0 length differs from the skeleton");
      if (replay_resamples < 1) throw ValidationError("--resamples must be >= 1");
      Table table({"replica", "colors", "R", "B", "G", "L"});
      for (int r = 0; r < replay_resamples; ++r) {
        const auto res = sim::resample_given_skeleton(x0, skel, rng::derive_seed(cfg.seed, r));
        const auto& x = res.final_state;
        table.add_row({std::int64_t{r}, x.colors_by_site(), std::int64_t{x.count(sim::Color::Red)},
                       std::int64_t{x.count(sim::Color::Blue)}, std::int64_t{x.count(sim::Color::Green)},
                       std::int64_t{res.crossings_final}});
      }
      table.metadata() = base_metadata("skeleton replay", cfg.seed);
      table.metadata()["horizon"] = skel.horizon();
      emit(table);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << active->help();
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ReducibleModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace ssep::harness
