#pragma once

// CSV tables, plot scripts and run manifests. All numbers go through
// format_number (std::to_chars), so output is locale-independent and
// byte-stable for identical inputs.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mimoalloc/config.hpp"
#include "mimoalloc/sim.hpp"
#include "mimoalloc/version.hpp"

namespace mimoalloc::report {

inline constexpr const char* kAllocHeader = "i,eta,p,M,ber";
inline constexpr const char* kCapacityHeader = "k,scheme,mean_capacity,ci95,trials";
inline constexpr const char* kBerHeader = "snr_db,scheme,ber,ci95,bits,k_opt";
inline constexpr const char* kProfileHeader = "i,gain,eta";

struct AllocRow {
  std::size_t index = 0;
  double eta = 0.0;
  double p = 0.0;
  std::uint64_t M = 1;
  double ber = 0.0;
};

inline std::vector<AllocRow> alloc_rows(const SubchannelProfile& profile, const LinkPlan& plan) {
  std::vector<AllocRow> rows;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const auto M = plan.plan.order(i);
    const double ber = plan.plan.active(i) ? ber_analytic(M, plan.alloc.p[i], profile.eta[i]) : 0.0;
    rows.push_back({i + 1, profile.eta[i], plan.alloc.p[i], M, ber});
  }
  return rows;
}

inline void write_alloc_csv(std::ostream& out, const std::vector<AllocRow>& rows) {
  out << kAllocHeader << "\n";
  for (const auto& r : rows) {
    out << r.index << "," << format_number(r.eta) << "," << format_number(r.p) << "," << r.M << ","
        << format_number(r.ber) << "\n";
  }
}

inline void write_capacity_csv(std::ostream& out, const ExperimentResult<CapacityRow>& result) {
  out << kCapacityHeader << "\n";
  for (const auto& r : result.rows) {
    out << r.k << "," << r.scheme << "," << format_number(r.mean_capacity) << "," << format_number(r.ci95) << ","
        << r.trials << "\n";
  }
}

inline void write_ber_csv(std::ostream& out, const ExperimentResult<BerRow>& result) {
  out << kBerHeader << "\n";
  for (const auto& r : result.rows) {
    out << format_number(r.snr_db) << "," << r.scheme << "," << format_number(r.ber) << "," << format_number(r.ci95)
        << "," << r.bits << "," << format_number(r.k_opt) << "\n";
  }
}

inline void write_profile_csv(std::ostream& out, const SubchannelProfile& profile) {
  out << kProfileHeader << "\n";
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double gain = std::sqrt(profile.noise_variance / (profile.n * profile.eta[i]));
    out << (i + 1) << "," << format_number(gain) << "," << format_number(profile.eta[i]) << "\n";
  }
}

/// matplotlib script drawing mean capacity against k, one line per scheme.
inline std::string capacity_plot_script(const std::string& csv_name) {
  std::ostringstream s;
  s << "import csv\n"
       "from collections import defaultdict\n"
       "import matplotlib.pyplot as plt\n\n"
       "curves = defaultdict(list)\n"
       "with open('" << csv_name << "') as f:\n"
       "    for row in csv.DictReader(f):\n"
       "        curves[row['scheme']].append((int(row['k']), float(row['mean_capacity']), float(row['ci95'])))\n\n"
       "for scheme, pts in sorted(curves.items()):\n"
       "    pts.sort()\n"
       "    ks, cs, ci = zip(*pts)\n"
       "    plt.errorbar(ks, cs, yerr=ci, marker='o', markersize=3, capsize=2, label=scheme)\n"
       "plt.xlabel('number of deactivated subchannels k')\n"
       "plt.ylabel('average capacity (bits/channel use)')\n"
       "plt.grid(True, alpha=0.3)\n"
       "plt.legend()\n"
       "plt.savefig('" << csv_name.substr(0, csv_name.rfind('.')) << ".pdf', bbox_inches='tight')\n";
  return s.str();
}

/// matplotlib script drawing BER against SNR on a log axis.
inline std::string ber_plot_script(const std::string& csv_name) {
  std::ostringstream s;
  s << "import csv\n"
       "from collections import defaultdict\n"
       "import matplotlib.pyplot as plt\n\n"
       "curves = defaultdict(list)\n"
       "with open('" << csv_name << "') as f:\n"
       "    for row in csv.DictReader(f):\n"
       "        curves[row['scheme']].append((float(row['snr_db']), float(row['ber']), float(row['ci95'])))\n\n"
       "for scheme, pts in sorted(curves.items()):\n"
       "    pts.sort()\n"
       "    snr, ber, ci = zip(*pts)\n"
       "    lo = [min(c, b * 0.999) for b, c in zip(ber, ci)]\n"
       "    plt.errorbar(snr, ber, yerr=[lo, ci], marker='o', capsize=2, label=scheme)\n"
       "plt.yscale('log')\n"
       "plt.xlabel('SNR (dB)')\n"
       "plt.ylabel('BER')\n"
       "plt.grid(True, which='both', alpha=0.3)\n"
       "plt.legend()\n"
       "plt.savefig('" << csv_name.substr(0, csv_name.rfind('.')) << ".pdf', bbox_inches='tight')\n";
  return s.str();
}

/// Manifest text: metadata as comments followed by the canonical config, so
/// the manifest itself can be passed back through --config.
inline std::string manifest_text(Experiment e, const RunConfig& cfg, const std::vector<std::string>& outputs) {
  std::ostringstream s;
  s << "# mimoalloc run manifest\n";
  s << "# experiment=" << to_string(e) << "\n";
  s << "# version=" << kVersion << "\n";
  s << "# outputs=";
  for (std::size_t i = 0; i < outputs.size(); ++i) s << (i ? "," : "") << outputs[i];
  s << "\n";
  s << serialize_config(cfg);
  return s.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace mimoalloc::report
