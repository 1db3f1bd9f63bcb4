#pragma once

// Flat key=value run configuration.
//
//   # comment
//   n = 96
//   power = 192
//   snr_grid_db = 16, 18, 20
//   rate = 384
//   allocator = ewf, mwf
//   precoder = truncated_svd, full_svd
//
// Keys: n, power, snr_db | snr_grid_db, rate, allocator, aqam, target_ser,
// precoder, profile, trials, seed, k_grid. `allocator` and `precoder` take
// comma-separated lists (ber-sweep runs every combination; other commands use
// the first entry). `k_grid` is a list or an inclusive range "lo:hi".

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mimoalloc/errors.hpp"
#include "mimoalloc/sim.hpp"

namespace mimoalloc {

enum class Experiment { alloc, capacity_vs_k, ber_sweep, profile };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::alloc: return "alloc";
    case Experiment::capacity_vs_k: return "capacity-vs-k";
    case Experiment::ber_sweep: return "ber-sweep";
    case Experiment::profile: return "profile";
  }
  return "?";
}

struct RunConfig {
  LinkConfig link;  // carries the first allocator / precoder
  std::vector<Policy> allocators{Policy::ewf};
  std::vector<Precoder> precoders{Precoder::full_svd};
  std::optional<ProfileSource> profile;
  std::vector<double> snr_grid_db;
  bool snr_is_grid = false;
  std::set<std::string> given;  // keys present in the source
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::optional<std::vector<int>> k_grid;  // absent: 0 .. n-1

  ProfileSource profile_for(Precoder p) const {
    if (profile) return *profile;
    return p == Precoder::truncated_svd ? ProfileSource::asymptotic : ProfileSource::empirical;
  }

  std::vector<int> effective_k_grid() const {
    if (k_grid) return *k_grid;
    std::vector<int> all(static_cast<std::size_t>(link.n));
    for (int k = 0; k < link.n; ++k) all[static_cast<std::size_t>(k)] = k;
    return all;
  }

  LinkConfig link_for(Policy allocator, Precoder precoder) const {
    LinkConfig c = link;
    c.allocator = allocator;
    c.precoder = precoder;
    c.profile = profile_for(precoder);
    return c;
  }
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("cannot parse value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

inline Policy parse_policy(std::string_view v) {
  if (v == "wf") return Policy::wf;
  if (v == "mwf") return Policy::mwf;
  if (v == "ewf") return Policy::ewf;
  if (v == "ser_wf") return Policy::ser_wf;
  throw ConfigError("unknown allocator '" + std::string(v) + "' (expected wf, mwf, ewf, ser_wf)");
}

inline Precoder parse_precoder(std::string_view v) {
  if (v == "full_svd") return Precoder::full_svd;
  if (v == "truncated_svd") return Precoder::truncated_svd;
  throw ConfigError("unknown precoder '" + std::string(v) + "' (expected full_svd, truncated_svd)");
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"n",        "power",      "snr_db",   "snr_grid_db", "rate",  "allocator",
                                          "aqam",     "target_ser", "precoder", "profile",     "trials", "seed",
                                          "k_grid"};
  return keys;
}

}  // namespace config_detail

inline RunConfig parse_config_text(std::string_view text) {
  using namespace config_detail;
  std::map<std::string, std::string> kv;
  std::vector<std::string> unknown;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().contains(key)) {
      unknown.push_back(key);
      continue;
    }
    if (kv.contains(key)) throw ConfigError("duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError("empty value for key '" + key + "'");
    kv[key] = value;
  }
  if (!unknown.empty()) {
    std::string msg = "unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  RunConfig cfg;
  for (const auto& [k, v] : kv) cfg.given.insert(k);
  for (const char* key : {"n", "power"}) {
    if (!kv.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
  }
  if (kv.contains("snr_db") == kv.contains("snr_grid_db")) {
    throw ConfigError("exactly one of 'snr_db' or 'snr_grid_db' is required");
  }

  cfg.link.n = parse_number<int>("n", kv["n"]);
  cfg.link.power = parse_number<double>("power", kv["power"]);
  if (kv.contains("snr_db")) {
    cfg.snr_grid_db = {parse_number<double>("snr_db", kv["snr_db"])};
  } else {
    cfg.snr_is_grid = true;
    for (auto item : split_list(kv["snr_grid_db"])) cfg.snr_grid_db.push_back(parse_number<double>("snr_grid_db", item));
    for (std::size_t i = 1; i < cfg.snr_grid_db.size(); ++i) {
      if (!(cfg.snr_grid_db[i] > cfg.snr_grid_db[i - 1])) throw ConfigError("snr_grid_db must be ascending");
    }
  }
  cfg.link.snr_db = cfg.snr_grid_db.empty() ? 0.0 : cfg.snr_grid_db.front();

  if (kv.contains("rate")) {
    cfg.link.rate = parse_number<long long>("rate", kv["rate"]);
    if (cfg.link.rate < 0 || cfg.link.rate % 2 != 0) {
      throw ConfigError("rate must be an even nonnegative integer, got " + kv["rate"]);
    }
  }
  if (kv.contains("allocator")) {
    cfg.allocators.clear();
    for (auto item : split_list(kv["allocator"])) cfg.allocators.push_back(parse_policy(item));
    if (cfg.allocators.empty()) throw ConfigError("allocator list is empty");
  }
  if (kv.contains("aqam")) {
    const auto& v = kv["aqam"];
    if (v == "lemma4") cfg.link.aqam = AqamRule::lemma4;
    else if (v == "palomar") cfg.link.aqam = AqamRule::palomar;
    else throw ConfigError("unknown aqam '" + v + "' (expected lemma4, palomar)");
  }
  if (kv.contains("target_ser")) cfg.link.target_ser = parse_number<double>("target_ser", kv["target_ser"]);
  if (kv.contains("precoder")) {
    cfg.precoders.clear();
    for (auto item : split_list(kv["precoder"])) cfg.precoders.push_back(parse_precoder(item));
    if (cfg.precoders.empty()) throw ConfigError("precoder list is empty");
  }
  if (kv.contains("profile")) {
    const auto& v = kv["profile"];
    if (v == "empirical") cfg.profile = ProfileSource::empirical;
    else if (v == "asymptotic") cfg.profile = ProfileSource::asymptotic;
    else throw ConfigError("unknown profile '" + v + "' (expected empirical, asymptotic)");
  }
  if (kv.contains("trials")) {
    const auto t = parse_number<long long>("trials", kv["trials"]);
    if (t < 1) throw ConfigError("trials must be positive");
    cfg.trials = static_cast<std::size_t>(t);
  }
  if (kv.contains("seed")) cfg.seed = parse_number<std::uint64_t>("seed", kv["seed"]);
  if (kv.contains("k_grid")) {
    const auto& v = kv["k_grid"];
    cfg.k_grid.emplace();
    if (const auto colon = v.find(':'); colon != std::string::npos) {
      const int lo = parse_number<int>("k_grid", trim(std::string_view(v).substr(0, colon)));
      const int hi = parse_number<int>("k_grid", trim(std::string_view(v).substr(colon + 1)));
      for (int k = lo; k <= hi; ++k) cfg.k_grid->push_back(k);
    } else {
      for (auto item : split_list(v)) cfg.k_grid->push_back(parse_number<int>("k_grid", item));
    }
    for (int k : *cfg.k_grid) {
      if (k < 0 || k >= cfg.link.n) throw ConfigError("k_grid entries must lie in [0, n)");
    }
  }

  cfg.link.allocator = cfg.allocators.front();
  cfg.link.precoder = cfg.precoders.front();
  cfg.link.profile = cfg.profile_for(cfg.link.precoder);
  for (auto a : cfg.allocators) {
    LinkConfig probe = cfg.link;
    probe.allocator = a;
    probe.validate();
  }
  return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Checks the keys a subcommand needs beyond the always-required ones.
inline void validate_for(const RunConfig& cfg, Experiment e) {
  auto require = [&](const char* key) {
    if (!cfg.given.contains(key)) {
      throw ConfigError(std::string("missing required key '") + key + "' for " + to_string(e));
    }
  };
  switch (e) {
    case Experiment::alloc:
      require("rate");
      require("allocator");
      if (cfg.snr_is_grid) throw ConfigError("alloc takes a single snr_db");
      break;
    case Experiment::ber_sweep:
      require("rate");
      require("allocator");
      break;
    case Experiment::capacity_vs_k:
    case Experiment::profile:
      if (cfg.snr_is_grid) throw ConfigError(std::string(to_string(e)) + " takes a single snr_db");
      if (e == Experiment::profile && cfg.link.n < 2) throw ConfigError("profile requires n >= 2");
      break;
  }
}

/// Canonical key=value text; parses back to an equivalent configuration.
inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "n=" << cfg.link.n << "\n";
  out << "power=" << format_number(cfg.link.power) << "\n";
  if (cfg.snr_is_grid) {
    out << "snr_grid_db=";
    for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i) out << (i ? "," : "") << format_number(cfg.snr_grid_db[i]);
    if (cfg.snr_grid_db.empty()) out << ",";
    out << "\n";
  } else {
    out << "snr_db=" << format_number(cfg.link.snr_db) << "\n";
  }
  if (cfg.given.contains("rate")) out << "rate=" << cfg.link.rate << "\n";
  if (cfg.given.contains("allocator")) {
    out << "allocator=";
    for (std::size_t i = 0; i < cfg.allocators.size(); ++i) out << (i ? "," : "") << to_string(cfg.allocators[i]);
    out << "\n";
  }
  out << "aqam=" << to_string(cfg.link.aqam) << "\n";
  if (cfg.link.target_ser) out << "target_ser=" << format_number(*cfg.link.target_ser) << "\n";
  out << "precoder=";
  for (std::size_t i = 0; i < cfg.precoders.size(); ++i) out << (i ? "," : "") << to_string(cfg.precoders[i]);
  out << "\n";
  if (cfg.profile) out << "profile=" << to_string(*cfg.profile) << "\n";
  out << "trials=" << cfg.trials << "\n";
  out << "seed=" << cfg.seed << "\n";
  if (cfg.k_grid) {
    out << "k_grid=";
    for (std::size_t i = 0; i < cfg.k_grid->size(); ++i) out << (i ? "," : "") << (*cfg.k_grid)[i];
    if (cfg.k_grid->empty()) out << ",";
    out << "\n";
  }
  return out.str();
}

}  // namespace mimoalloc
