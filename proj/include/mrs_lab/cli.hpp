// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command-line front end: flag/JSON scenario resolution, experiment
// dispatch and CSV + manifest emission.
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage/config error,
// 3 numerical accuracy failure.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mrs_lab/experiments.hpp"

namespace mrs::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSeedEnv = "MRS_LAB_SEED";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAccuracy = 3;

class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ parsing

inline double parse_double(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw usage_error("not a number: '" + s + "'");
  }
  if (used != s.size()) throw usage_error("not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

/// "start:step:stop" (inclusive), "a,b,c" or a single value.
inline std::vector<double> parse_snr_grid(const std::string& spec) {
  if (spec.find(':') != std::string::npos) {
    const auto p = split(spec, ':');
    if (p.size() != 3) throw usage_error("SNR range must be start:step:stop");
    const double start = parse_double(p[0]), step = parse_double(p[1]), stop = parse_double(p[2]);
    if (!(step > 0.0) || !(stop >= start) || !std::isfinite(start) || !std::isfinite(stop))
      throw usage_error("SNR range needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 100000) throw usage_error("SNR range has too many points");
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = start + static_cast<double>(i) * step;
    return grid;
  }
  std::vector<double> grid;
  for (const auto& p : split(spec, ',')) grid.push_back(parse_double(p));
  if (grid.empty()) throw usage_error("empty SNR grid");
  return grid;
}

inline std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  for (const auto& p : split(spec, ',')) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
    if (ec != std::errc() || ptr != p.data() + p.size()) throw usage_error("not an integer: '" + p + "'");
    out.push_back(v);
  }
  if (out.empty()) throw usage_error("empty integer list");
  return out;
}

/// Shortest-independent, round-trip exact rendering with 17 significant digits.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::logic_error("format_double failed");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------- scenario

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::sum_rate_sweep: return "sum_rate_sweep";
    case Experiment::rate_region: return "rate_region";
    case Experiment::lar_convergence: return "lar_convergence";
    case Experiment::estimation_sweep: return "estimation_sweep";
  }
  return "?";
}

template <class E>
E enum_from(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw usage_error(std::string("unknown ") + what + ": '" + s + "'");
}

template <class E>
std::string enum_name(E v, std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [name, value] : table)
    if (v == value) return name;
  return "?";
}

inline const std::initializer_list<std::pair<const char*, Experiment>> kExperiments = {
    {"sum_rate_sweep", Experiment::sum_rate_sweep},
    {"rate_region", Experiment::rate_region},
    {"lar_convergence", Experiment::lar_convergence},
    {"estimation_sweep", Experiment::estimation_sweep}};
inline const std::initializer_list<std::pair<const char*, DecodingOrder>> kOrders = {
    {"column_norm", DecodingOrder::column_norm}, {"greedy_sinr", DecodingOrder::greedy_sinr}};
inline const std::initializer_list<std::pair<const char*, MrsSnrForm>> kSnrForms = {
    {"tx_averaged", MrsSnrForm::tx_averaged}, {"matched_filter", MrsSnrForm::matched_filter}};
inline const std::initializer_list<std::pair<const char*, LarRxConstant>> kLarConstants = {
    {"nr_independent", LarRxConstant::nr_independent}, {"as_printed", LarRxConstant::as_printed}};
inline const std::initializer_list<std::pair<const char*, EstBoundSnr>> kBoundForms = {
    {"per_tx_antenna", EstBoundSnr::per_tx_antenna}, {"total", EstBoundSnr::total}};
inline const std::initializer_list<std::pair<const char*, GrowDim>> kGrowDims = {{"nr", GrowDim::nr},
                                                                                {"nt", GrowDim::nt}};

inline nlohmann::json json_db(double db) {
  if (std::isinf(db)) return db < 0 ? "-inf" : "inf";
  return db;
}

inline double db_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

/// The fully resolved scenario. `alpha` is stored as [re, im] so a manifest
/// reproduces it bit for bit; alpha_db/alpha_phase_rad are informational.
inline nlohmann::json scenario_to_json(const Scenario& sc) {
  const auto& c = sc.cfg;
  nlohmann::json j;
  j["experiment"] = to_string(sc.experiment);
  j["nt"] = c.nt;
  j["nr"] = c.nr;
  j["k"] = c.K;
  j["alpha"] = {c.alpha.real(), c.alpha.imag()};
  j["alpha_db"] = json_db(10.0 * std::log10(c.alpha_power()));
  j["alpha_phase_rad"] = std::arg(c.alpha);
  j["sigma2"] = c.sigma2;
  j["rho_d"] = c.rho_d_override ? nlohmann::json(*c.rho_d_override) : nlohmann::json(nullptr);
  j["rho_p"] = c.rho_p_override ? nlohmann::json(*c.rho_p_override) : nlohmann::json(nullptr);
  j["m0"] = c.m0;
  j["m1"] = c.m1_resolved();
  j["n"] = c.N;
  j["snr_grid_db"] = nlohmann::json::array();
  for (double s : sc.snr_grid_db) j["snr_grid_db"].push_back(json_db(s));
  j["trials"] = sc.trials;
  j["seed"] = sc.seed;
  j["workers"] = sc.workers == 0 ? nlohmann::json("auto") : nlohmann::json(sc.workers);
  j["decoding_order"] = enum_name(sc.model.receiver.order, kOrders);
  j["mrs_snr"] = enum_name(sc.model.receiver.snr_form, kSnrForms);
  j["lar_constant"] = enum_name(sc.model.lar_constant, kLarConstants);
  j["est_bound_snr"] = enum_name(sc.model.est_bound, kBoundForms);
  j["polyphase_order"] = sc.model.polyphase_order;
  if (sc.experiment == Experiment::lar_convergence) {
    j["grow"] = enum_name(sc.grow, kGrowDims);
    j["grid"] = sc.grid;
  }
  return j;
}

/// Overlays the keys present in `j` onto `sc`. A manifest (an object with a
/// "scenario" member) is accepted as well as a bare scenario object.
inline void apply_json(Scenario& sc, const nlohmann::json& doc) {
  const nlohmann::json& j = doc.contains("scenario") ? doc.at("scenario") : doc;
  if (!j.is_object()) throw usage_error("config must be a JSON object");
  try {
    auto& c = sc.cfg;
    if (j.contains("experiment")) sc.experiment = enum_from(j["experiment"].get<std::string>(), kExperiments, "experiment");
    if (j.contains("nt")) c.nt = j["nt"].get<int>();
    if (j.contains("nr")) c.nr = j["nr"].get<int>();
    if (j.contains("k")) c.K = j["k"].get<int>();
    if (j.contains("alpha")) {
      const auto& a = j["alpha"];
      if (!a.is_array() || a.size() != 2) throw usage_error("alpha must be [re, im]");
      c.alpha = {a[0].get<double>(), a[1].get<double>()};
    } else if (j.contains("alpha_db")) {
      c.alpha = alpha_from_db(db_from_json(j["alpha_db"]), j.value("alpha_phase_rad", 0.0));
    }
    if (j.contains("sigma2")) c.sigma2 = j["sigma2"].get<double>();
    if (j.contains("rho_d"))
      c.rho_d_override = j["rho_d"].is_null() ? std::nullopt : std::optional<double>(j["rho_d"].get<double>());
    if (j.contains("rho_p"))
      c.rho_p_override = j["rho_p"].is_null() ? std::nullopt : std::optional<double>(j["rho_p"].get<double>());
    if (j.contains("m0")) c.m0 = j["m0"].get<int>();
    if (j.contains("m1")) c.m1 = j["m1"].get<int>();
    if (j.contains("n")) c.N = j["n"].get<int>();
    if (j.contains("snr_grid_db")) {
      sc.snr_grid_db.clear();
      for (const auto& s : j["snr_grid_db"]) sc.snr_grid_db.push_back(db_from_json(s));
    }
    if (j.contains("trials")) sc.trials = j["trials"].get<std::size_t>();
    if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers"))
      sc.workers = j["workers"].is_string() ? 0u : j["workers"].get<unsigned>();
    if (j.contains("decoding_order"))
      sc.model.receiver.order = enum_from(j["decoding_order"].get<std::string>(), kOrders, "decoding order");
    if (j.contains("mrs_snr"))
      sc.model.receiver.snr_form = enum_from(j["mrs_snr"].get<std::string>(), kSnrForms, "MRS SNR form");
    if (j.contains("lar_constant"))
      sc.model.lar_constant = enum_from(j["lar_constant"].get<std::string>(), kLarConstants, "LAR constant");
    if (j.contains("est_bound_snr"))
      sc.model.est_bound = enum_from(j["est_bound_snr"].get<std::string>(), kBoundForms, "bound SNR form");
    if (j.contains("polyphase_order")) sc.model.polyphase_order = j["polyphase_order"].get<int>();
    if (j.contains("grow")) sc.grow = enum_from(j["grow"].get<std::string>(), kGrowDims, "grow dimension");
    if (j.contains("grid")) sc.grid = j["grid"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw usage_error(std::string("bad config value: ") + e.what());
  }
}

// --------------------------------------------------------------------- CSV

inline std::string sum_rate_csv(const SweepResult& r) {
  const int k = r.scenario.cfg.K;
  const std::string tail = "," + std::to_string(r.scenario.trials) + "," + std::to_string(r.scenario.seed) + "\n";
  std::string out = "snr_db,metric,mean_bits,stderr_bits,k,trials,seed\n";
  auto row = [&](double snr, const char* metric, const Estimate& e, int kk) {
    out += format_double(snr) + "," + metric + "," + format_double(e.mean) + "," + format_double(e.std_error) + "," +
           std::to_string(kk) + tail;
  };
  for (const auto& p : r.points) {
    row(p.snr_db, "sum_rate", p.sum_rate, k);
    row(p.snr_db, "legacy_alone", p.legacy_alone, 0);
    if (k == 1) {
      row(p.snr_db, "mrs_wpc", p.mrs_wpc, 1);
      row(p.snr_db, "mrs_gauss_bound", p.mrs_gauss_bound, 1);
    }
    row(p.snr_db, "est_lower_bound", p.est_lower_bound, k);
    if (k > 0) row(p.snr_db, "est_lower_bound", p.est_lower_bound_k0, 0);
    row(p.snr_db, "lar_nr", p.lar_nr, k);
    if (k > 0) row(p.snr_db, "lar_nr", p.lar_nr_k0, 0);
  }
  return out;
}

inline std::string rate_region_csv(const RegionResult& r) {
  std::string out = "snr_db,vertex,legacy_bits,legacy_stderr,mrs_bits,mrs_stderr\n";
  auto row = [&](double snr, const std::string& name, const Estimate& legacy, const Estimate& mrs) {
    out += format_double(snr) + "," + name + "," + format_double(legacy.mean) + "," + format_double(legacy.std_error) +
           "," + format_double(mrs.mean) + "," + format_double(mrs.std_error) + "\n";
  };
  for (const auto& p : r.points) {
    for (const auto* v : {&p.A, &p.B, &p.C, &p.D}) row(p.snr_db, std::string(1, v->vertex), v->legacy_rate_bits, v->mrs_rate_bits);
    row(p.snr_db, "legacy_alone", p.legacy_alone, {});
  }
  return out;
}

inline std::string lar_csv(const LarResult& r) {
  std::string out = "grow_dim,value,exact_bits,lar_bits,rel_gap\n";
  const std::string dim = enum_name(r.scenario.grow, kGrowDims);
  for (const auto& p : r.points)
    out += dim + "," + std::to_string(p.value) + "," + format_double(p.exact.mean) + "," + format_double(p.lar.mean) +
           "," + format_double(p.rel_gap) + "\n";
  return out;
}

// ---------------------------------------------------------------- manifest

/// Git blob id: SHA-1 over "blob <size>\0" followed by the content.
inline std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw std::runtime_error("sha1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

// --------------------------------------------------------------------- run

namespace detail {

struct Flags {
  std::optional<int> nt, nr, k, m0, m1, n, polyphase;
  std::optional<double> alpha_db, alpha_phase, sigma2, rho_d, rho_p;
  std::optional<std::string> snr, workers, order, mrs_snr, lar_constant, est_bound, grow, grid, config;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::string out_dir = ".";
};

inline void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--nt", f.nt, "Transmit antennas");
  cmd->add_option("--nr", f.nr, "Receive antennas");
  cmd->add_option("--K", f.k, "MRS antennas");
  cmd->add_option("--alpha-db", f.alpha_db, "MRS scale factor |alpha|^2 in dB (-inf for alpha = 0)");
  cmd->add_option("--alpha-phase", f.alpha_phase, "Phase of alpha in radians");
  cmd->add_option("--snr-db", f.snr, "SNR grid: start:step:stop or comma list");
  cmd->add_option("--sigma2", f.sigma2, "Noise variance");
  cmd->add_option("--rho-d", f.rho_d, "Data symbol power override (linear)");
  cmd->add_option("--rho-p", f.rho_p, "Pilot symbol power override (linear, default rho_d)");
  cmd->add_option("--m0", f.m0, "Legacy pilot length (power of two)");
  cmd->add_option("--m1", f.m1, "MRS pilot repetitions (power of two >= K+1)");
  cmd->add_option("--N", f.n, "Coherence interval in samples");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials per point");
  cmd->add_flag("--paper-scale", f.paper_scale, "Use 2e5 trials per point");
  cmd->add_option("--seed", f.seed, std::string("Master seed (fallback: $") + kSeedEnv + ")");
  cmd->add_option("--workers", f.workers, "Worker threads or 'auto'");
  cmd->add_option("--config", f.config, "JSON scenario or manifest; explicit flags override it");
  cmd->add_option("--out", f.out_dir, "Output directory");
  cmd->add_option("--order", f.order, "Legacy decoding order: column_norm | greedy_sinr");
  cmd->add_option("--mrs-snr", f.mrs_snr, "MRS post-SIC SNR: tx_averaged | matched_filter");
  cmd->add_option("--lar-constant", f.lar_constant, "nr->inf limit constant: nr_independent | as_printed");
  cmd->add_option("--est-bound-snr", f.est_bound, "Estimated-CSI bound SNR: per_tx_antenna | total");
  cmd->add_option("--polyphase", f.polyphase, "M-ary polyphase MRS alphabet (0 = continuous phase)");
}

// Glue "--opt -3" / "--opt -inf" into "--opt=-3" so negative values are not
// mistaken for short flags.
inline std::vector<std::string> normalize_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (!args.empty() && a.size() > 1 && a[0] == '-' && args.back().rfind("--", 0) == 0 &&
        args.back().find('=') == std::string::npos) {
      bool numeric = true;
      try {
        parse_double(a);
      } catch (const usage_error&) {
        numeric = false;
      }
      if (numeric) {
        args.back() += "=" + a;
        continue;
      }
    }
    args.push_back(std::move(a));
  }
  return args;
}

inline Scenario resolve(const std::string& command, const Flags& f) {
  Scenario sc;
  sc.cfg = SystemConfig{};
  sc.cfg.alpha = alpha_from_db(-3.0);
  if (command == "sum-rate") {
    sc.experiment = Experiment::sum_rate_sweep;
    sc.snr_grid_db = parse_snr_grid("0:2:30");
  } else if (command == "rate-region") {
    sc.experiment = Experiment::rate_region;
    sc.snr_grid_db = {10.0, 20.0, 30.0};
  } else {
    sc.experiment = Experiment::lar_convergence;
    sc.snr_grid_db = {20.0};
    sc.trials = 100;
    sc.grid = {64, 256, 1024, 4096};
  }

  bool have_nt = false, have_nr = false;
  bool have_seed = false;
  if (f.config) {
    std::ifstream in(*f.config);
    if (!in) throw usage_error("cannot read config file " + *f.config);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw usage_error(std::string("config is not valid JSON: ") + e.what());
    }
    const nlohmann::json& j = doc.contains("scenario") ? doc["scenario"] : doc;
    have_nt = j.contains("nt");
    have_nr = j.contains("nr");
    have_seed = j.contains("seed");
    const Experiment wanted = sc.experiment;
    apply_json(sc, doc);
    sc.experiment = wanted;
  }

  auto& c = sc.cfg;
  if (f.nt) c.nt = *f.nt, have_nt = true;
  if (f.nr) c.nr = *f.nr, have_nr = true;
  if (f.k) c.K = *f.k;
  if (f.alpha_db || f.alpha_phase) {
    const double db = f.alpha_db ? *f.alpha_db : 10.0 * std::log10(c.alpha_power());
    c.alpha = alpha_from_db(db, f.alpha_phase.value_or(std::arg(c.alpha)));
  }
  if (f.sigma2) c.sigma2 = *f.sigma2;
  if (f.rho_d) c.rho_d_override = *f.rho_d;
  if (f.rho_p) c.rho_p_override = *f.rho_p;
  if (f.m0) c.m0 = *f.m0;
  if (f.m1) c.m1 = *f.m1;
  if (f.n) c.N = *f.n;
  if (f.snr) sc.snr_grid_db = parse_snr_grid(*f.snr);
  if (f.trials) sc.trials = *f.trials;
  if (f.paper_scale) sc.trials = kPaperScaleTrials;
  if (f.seed) {
    sc.seed = *f.seed;
  } else if (!have_seed) {
    if (const char* env = std::getenv(kSeedEnv); env && *env) {
      std::uint64_t v = 0;
      const std::string s = env;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) throw usage_error(std::string(kSeedEnv) + " is not an integer");
      sc.seed = v;
    }
  }
  if (f.workers) {
    if (*f.workers == "auto") {
      sc.workers = 0;
    } else {
      const auto w = parse_int_list(*f.workers);
      if (w.size() != 1 || w[0] < 1) throw usage_error("--workers must be 'auto' or a positive integer");
      sc.workers = static_cast<unsigned>(w[0]);
    }
  }
  if (f.order) sc.model.receiver.order = enum_from(*f.order, kOrders, "decoding order");
  if (f.mrs_snr) sc.model.receiver.snr_form = enum_from(*f.mrs_snr, kSnrForms, "MRS SNR form");
  if (f.lar_constant) sc.model.lar_constant = enum_from(*f.lar_constant, kLarConstants, "LAR constant");
  if (f.est_bound) sc.model.est_bound = enum_from(*f.est_bound, kBoundForms, "bound SNR form");
  if (f.polyphase) sc.model.polyphase_order = *f.polyphase;
  if (f.grow) sc.grow = enum_from(*f.grow, kGrowDims, "grow dimension");
  if (f.grid) sc.grid = parse_int_list(*f.grid);

  if (command != "lar") {
    if (!have_nt) throw usage_error("--nt is required");
    if (!have_nr) throw usage_error("--nr is required");
  }
  if (sc.trials < 1) throw usage_error("--trials must be >= 1");
  if (sc.model.polyphase_order < 0) throw usage_error("--polyphase must be >= 0");
  return sc;
}

inline nlohmann::json manifest(const std::string& command, const Scenario& sc, const std::string& file,
                               const std::string& content, std::chrono::system_clock::time_point started,
                               double seconds) {
  nlohmann::json m;
  m["tool"] = "mrs_lab";
  m["version"] = kVersion;
  m["command"] = command;
  m["scenario"] = scenario_to_json(sc);
  m["seed"] = sc.seed;
  m["started_utc"] = utc_timestamp(started);
  m["wall_clock_seconds"] = seconds;
  m["outputs"] = {{{"file", file}, {"bytes", content.size()}, {"git_blob_sha1", git_blob_sha1(content)}}};
  if (command == "sum-rate") {
    m["pilot_schedule"] =
        "legacy pilot block (m0 symbols, first nt Sylvester-Hadamard rows scaled by sqrt(rho_p)) repeated m1 times; "
        "MRS antenna k holds X1p(k+1, j) constant during repetition j; X1p = first K+1 Hadamard rows of order m1";
    m["metrics_note"] = "rows with k=0 use the K=0 normalization beta_0 = 1/nr on the same G0 draws";
  } else if (command == "rate-region") {
    m["polyline"] = "A-B-C";
    m["time_sharing_segment"] = "B-C";
    m["vertex_d"] = "(E[R0], 0): legacy MMSE-SIC rate with x1 unknown and treated as noise";
    m["vertex_c"] = "(E[sum rate], 0): full-CSIR composite-channel sum rate";
  }
  return m;
}

inline int execute(const std::string& command, const Flags& f, std::ostream& out) {
  const Scenario sc = resolve(command, f);
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();

  std::string name, csv;
  bool checks_ok = true;
  std::string check_message;
  if (command == "sum-rate") {
    const SweepResult r = run_sum_rate_sweep(sc);
    for (const auto& p : r.points)
      if (p.bound_violations > 0) {
        checks_ok = false;
        check_message = "estimated-CSI bound exceeded its perfect-CSI ceiling at " + format_double(p.snr_db) + " dB";
      }
    name = "sum_rate.csv";
    csv = sum_rate_csv(r);
  } else if (command == "rate-region") {
    const RegionResult r = run_rate_region(sc);
    name = "rate_region.csv";
    csv = rate_region_csv(r);
  } else {
    const LarResult r = run_lar_convergence(sc);
    name = "lar.csv";
    csv = lar_csv(r);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::filesystem::path dir(f.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / name, csv);
  const std::string stem = name.substr(0, name.find('.'));
  write_file(dir / (stem + ".manifest.json"), manifest(command, sc, name, csv, started, seconds).dump(2) + "\n");
  out << "wrote " << (dir / name).string() << " (" << seconds << " s)\n";
  if (!checks_ok) throw accuracy_error(check_message, 0.0, 0.0);
  return kExitOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Monte Carlo achievable-rate lab for modulated re-scatter MIMO links", "mrs_lab"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  detail::Flags sum_flags, region_flags, lar_flags;
  CLI::App* sum_cmd = app.add_subcommand("sum-rate", "Sum-rate sweep over SNR (perfect and estimated CSI)");
  CLI::App* region_cmd = app.add_subcommand("rate-region", "Legacy/MRS rate-region vertices per SNR");
  CLI::App* lar_cmd = app.add_subcommand("lar", "Convergence of the exact sum rate to its large-array limit");
  detail::add_common(sum_cmd, sum_flags);
  detail::add_common(region_cmd, region_flags);
  detail::add_common(lar_cmd, lar_flags);
  lar_cmd->add_option("--grow", lar_flags.grow, "Growing dimension: nr | nt");
  lar_cmd->add_option("--grid", lar_flags.grid, "Comma list of dimension values");

  std::vector<std::string> args = detail::normalize_args(argc, argv);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (sum_cmd->parsed()) return detail::execute("sum-rate", sum_flags, out);
    if (region_cmd->parsed()) return detail::execute("rate-region", region_flags, out);
    return detail::execute("lar", lar_flags, out);
  } catch (const usage_error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const config_error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const input_error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const size_error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const accuracy_error& e) {
    err << "accuracy failure: " << e.what() << "\n";
    return kExitAccuracy;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace mrs::cli
