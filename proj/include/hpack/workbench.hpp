#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpack/packer.hpp"

namespace hpack {

/// complete: K_n^(k). binomial: each k-set with probability d.
/// multipartite: r parts of size n over a reduced graph ("single" edge on the
/// first k parts, "complete", or `reduced_edges` random edges).
struct HostSpec {
  std::string kind = "complete";
  std::size_t n = 30;
  int k = 3;
  double d = 1.0;
  bool certify = false;  // binomial/multipartite: regenerate until typical
  int r = 3;
  std::string reduced = "single";
  int reduced_edges = 1;
};

/// tight_cycle_factor, sphere, ktree, perfect_matching on the host order;
/// blowup_matching and blowup_random inside the multipartite reduced graph.
struct GuestSpec {
  std::string family = "tight_cycle_factor";
  int count = 1;
  double load = 0;  // > 0: count = floor(load e(G) / e(H))
  std::size_t cycle_length = 0;
  std::vector<std::size_t> lengths;
  std::size_t floor = 0;
  int level = -1;  // sphere: subdivision level; < 0 means order = host n
  std::size_t n_edges = 0;
  std::size_t max_degree = 3;
  std::size_t per_edge = 0;  // blowup families: edges per reduced edge (0 = n)
};

struct TesterPlan {
  int sets = 0;
  int vertices = 0;
  int max_m = 2;
  int max_I = 2;
  double w_max = 4;
  double min_fraction = 0.25;
  double alpha = 0.3;         // set window alpha n, vertex window (1±alpha)
  double additive_exp = 0.5;  // vertex window n^additive_exp
};

struct ExperimentConfig {
  std::string label = "run";
  std::uint64_t seed = 1;
  HostSpec host;
  GuestSpec guests;
  ParameterLadder ladder;
  TesterPlan testers;
  int classes = 0;  // general pipeline: 0 means round(1/beta)
  int slices = 1;
  std::string report_path;  // empty: no file
  std::string csv_path;     // empty: no file

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; "tolerance_profile" picks the ladder base.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct GeneratedInstance {
  KGraph host;
  std::vector<int> host_parts;  // multipartite only
  KGraph reduced;               // multipartite only
  std::vector<KGraph> guests;
  std::vector<std::vector<int>> guest_parts;  // multipartite only
  bool multipartite = false;
  std::size_t part_size = 0;
};

/// Host and guests for a config; checks e(guests) <= (1-alpha) e(G) and the
/// generators' own audits.
GeneratedInstance generate_instance(const ExperimentConfig& cfg, std::mt19937_64& rng);

/// Random set and vertex testers per the plan. Multipartite: W inside one
/// V_i, tuples one vertex per cluster of I. Otherwise cluster 0 spans all.
TesterSuite random_tester_suite(const GeneratedInstance& g, const TesterPlan& plan, std::mt19937_64& rng);

struct CsvRow {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  int k = 0;
  std::size_t guests = 0;
  double coverage = 0;
  int retries = 0;
  double max_tester_deviation = 0;
  double runtime_ms = 0;

  static std::string header();
  std::string line() const;
};

struct ExperimentResult {
  nlohmann::json report;
  bool ok = false;  // audit clean and every requested tester inside its window
  bool packed = false;  // the pipeline produced a total packing
  std::string stage;    // last stage reached, "done" on success
  std::vector<Phi> phi;  // total packing of the generated guests when packed
  GeneratedInstance instance;
  CsvRow row;
};

/// Builds the instance, runs the general or multipartite pipeline and writes
/// the report (and CSV row) when paths are set. Pipeline failures are caught
/// and reported with their stage; the report is a function of config alone.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Git-style blob hash (sha1 of "blob <len>\0" + content), hex.
std::string content_hash(const std::string& content);

/// Writes to path.tmp then renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

/// Appends one CSV row, writing the header first when the file is new.
void append_csv(const std::string& path, const CsvRow& row);

}  // namespace hpack
