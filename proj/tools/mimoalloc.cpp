// mimoalloc command-line driver.
//
//   mimoalloc alloc         --config link.cfg [--out DIR]
//   mimoalloc capacity-vs-k --config fig1.cfg [--threads N]
//   mimoalloc ber-sweep     --config fig2.cfg [--seed S]
//   mimoalloc profile       --config link.cfg
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mimoalloc/mimoalloc.hpp"

namespace fs = std::filesystem;
using namespace mimoalloc;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::size_t> threads;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load(const Options& opt, Experiment e) {
  RunConfig cfg = parse_config(opt.config_path);
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.given.insert("seed");
  }
  validate_for(cfg, e);
  return cfg;
}

std::size_t thread_count(const Options& opt) {
  if (opt.threads) {
    if (*opt.threads == 0) throw UsageError("--threads must be positive");
    return *opt.threads;
  }
  return default_threads();
}

// The manifest always lands before any result file.
fs::path prepare(const Options& opt, Experiment e, const RunConfig& cfg, const std::vector<std::string>& outputs) {
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  report::write_file(dir / (std::string(to_string(e)) + ".manifest"), report::manifest_text(e, cfg, outputs));
  return dir;
}

SubchannelProfile link_profile(const RunConfig& cfg) {
  const auto& link = cfg.link;
  if (link.profile == ProfileSource::asymptotic) return asymptotic_profile(link.n, link.noise_variance());
  const auto ch = sample_channel(link.n, cfg.seed, 0);
  return profile_from_svd(svd(ch.H), link.noise_variance());
}

int cmd_alloc(const Options& opt) {
  const RunConfig cfg = load(opt, Experiment::alloc);
  const auto dir = prepare(opt, Experiment::alloc, cfg, {"alloc.csv"});
  const auto profile = link_profile(cfg);
  const LinkPlan plan = build_plan(cfg.link, profile);
  const auto rows = report::alloc_rows(profile, plan);

  std::ostringstream csv;
  report::write_alloc_csv(csv, rows);
  report::write_file(dir / "alloc.csv", csv.str());

  std::cout << std::setw(5) << "i" << std::setw(14) << "eta" << std::setw(14) << "p" << std::setw(8) << "M"
            << std::setw(14) << "ber" << "\n";
  std::cout << std::setprecision(6);
  for (const auto& r : rows) {
    std::cout << std::setw(5) << r.index << std::setw(14) << r.eta << std::setw(14) << r.p << std::setw(8) << r.M
              << std::setw(14) << r.ber << "\n";
  }
  std::cout << "rate=" << plan.plan.rate() << "\n";
  std::cout << "k_opt=" << plan.k_opt << "\n";
  return 0;
}

int cmd_capacity(const Options& opt) {
  const RunConfig cfg = load(opt, Experiment::capacity_vs_k);
  const auto dir = prepare(opt, Experiment::capacity_vs_k, cfg, {"capacity_vs_k.csv", "capacity_vs_k.py"});

  CapacityExperiment exp;
  exp.n = cfg.link.n;
  exp.power = cfg.link.power;
  exp.snr_db = cfg.link.snr_db;
  exp.k_grid = cfg.effective_k_grid();
  exp.trials = cfg.trials;
  exp.seed = cfg.seed;
  if (cfg.link.target_ser) {
    exp.target_ser = *cfg.link.target_ser;
    exp.schemes.push_back(CapacityScheme::palomar);
  }
  const auto result = capacity_vs_k(exp, thread_count(opt));

  std::ostringstream csv;
  report::write_capacity_csv(csv, result);
  report::write_file(dir / "capacity_vs_k.csv", csv.str());
  report::write_file(dir / "capacity_vs_k.py", report::capacity_plot_script("capacity_vs_k.csv"));
  return 0;
}

int cmd_ber(const Options& opt) {
  const RunConfig cfg = load(opt, Experiment::ber_sweep);
  const auto dir = prepare(opt, Experiment::ber_sweep, cfg, {"ber_sweep.csv", "ber_sweep.py"});

  std::vector<BerScheme> schemes;
  for (auto pre : cfg.precoders) {
    for (auto a : cfg.allocators) {
      schemes.push_back({default_scheme_name(pre, a, cfg.link.aqam), a, cfg.link.aqam, pre, cfg.profile_for(pre)});
    }
  }
  BerSweepOptions bo;
  bo.seed = cfg.seed;
  bo.min_trials = cfg.trials;
  bo.threads = thread_count(opt);
  const auto result = ber_sweep(cfg.link, schemes, cfg.snr_grid_db, bo);

  std::ostringstream csv;
  report::write_ber_csv(csv, result);
  report::write_file(dir / "ber_sweep.csv", csv.str());
  report::write_file(dir / "ber_sweep.py", report::ber_plot_script("ber_sweep.csv"));
  return 0;
}

int cmd_profile(const Options& opt) {
  const RunConfig cfg = load(opt, Experiment::profile);
  const auto dir = prepare(opt, Experiment::profile, cfg, {"profile.csv"});
  // Asymptotic unless the config explicitly asks for a sampled channel.
  RunConfig view = cfg;
  view.link.profile = cfg.profile.value_or(ProfileSource::asymptotic);
  std::ostringstream csv;
  report::write_profile_csv(csv, link_profile(view));
  report::write_file(dir / "profile.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power allocation, adaptive QAM and bit loading for SVD-precoded MIMO links"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "key=value configuration file")->required();
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, std::string("worker threads (default: $") + kThreadsEnv + " or all cores)");
  };
  auto* alloc = app.add_subcommand("alloc", "print the per-subchannel plan for one channel");
  auto* cap = app.add_subcommand("capacity-vs-k", "mean capacity against the number of deactivated subchannels");
  auto* ber = app.add_subcommand("ber-sweep", "Monte Carlo BER over an SNR grid");
  auto* prof = app.add_subcommand("profile", "dump the subchannel gain profile");
  for (auto* sub : {alloc, cap, ber, prof}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*alloc) return cmd_alloc(opt);
    if (*cap) return cmd_capacity(opt);
    if (*ber) return cmd_ber(opt);
    if (*prof) return cmd_profile(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
