// hpack: generate instances, pack them, audit packings, summarise reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpack/errors.hpp"
#include "hpack/workbench.hpp"

namespace fs = std::filesystem;
using namespace hpack;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string profile;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

ExperimentConfig load_config(const Common& c) {
  nlohmann::json j = c.config.empty() ? nlohmann::json::object() : read_json(c.config);
  if (!c.profile.empty()) {
    j["tolerance_profile"] = c.profile;
    if (j.contains("ladder")) j["ladder"]["profile"] = c.profile;
  }
  auto cfg = ExperimentConfig::from_json(j);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.ladder.seed = *c.seed;
  }
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment config (JSON)");
  sub->add_option("--seed", c.seed, "seed, overrides the config");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--tolerance-profile", c.profile, "desk or strict");
}

std::string out_path(const Common& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

GeneratedInstance generate(const ExperimentConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return generate_instance(cfg, rng);
}

nlohmann::json host_json(const GeneratedInstance& g) {
  nlohmann::json j = {{"host", g.host.to_json()}, {"multipartite", g.multipartite}};
  if (g.multipartite) {
    j["host_parts"] = g.host_parts;
    j["reduced"] = g.reduced.to_json();
  }
  return j;
}

nlohmann::json guests_json(const GeneratedInstance& g) {
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& h : g.guests) gs.push_back(h.to_json());
  nlohmann::json j = {{"guests", gs}};
  if (g.multipartite) j["guest_parts"] = g.guest_parts;
  return j;
}

void print_summary(const nlohmann::json& r) {
  std::cout << r.value("label", std::string("?")) << " seed=" << r.value("seed", 0ull)
            << " stage=" << r.value("stage", std::string("?")) << " ok=" << (r.value("ok", false) ? "yes" : "no")
            << " coverage=" << r.value("coverage", 0.0) << " retries=" << r.value("retries", 0);
  if (r.contains("tester_results") && r["tester_results"].is_object())
    std::cout << " testers=" << r["tester_results"].value("passed", 0) << "/"
              << r["tester_results"].value("total", 0);
  if (r.contains("error")) std::cout << " error=\"" << r["error"].get<std::string>() << "\"";
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypergraph packing workbench"};
  app.require_subcommand(1);
  Common c;

  auto* gh = app.add_subcommand("gen-host", "write the host graph of a config");
  add_common(gh, c);
  auto* gg = app.add_subcommand("gen-guests", "write the guest family of a config");
  add_common(gg, c);
  auto* pk = app.add_subcommand("pack", "run the pipeline and write report.json, packing.json, summary.csv");
  add_common(pk, c);
  std::string packing;
  auto* vf = app.add_subcommand("verify", "audit a packing against the config's instance");
  add_common(vf, c);
  vf->add_option("--packing", packing, "packing JSON written by pack")->required();
  std::vector<std::string> reports;
  auto* rp = app.add_subcommand("report", "summarise report files");
  rp->add_option("reports", reports, "report JSON files")->required();
  std::string csv;
  rp->add_option("--csv", csv, "also write a CSV of the summaries");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gh || *gg) {
      auto cfg = load_config(c);
      auto g = generate(cfg);
      fs::create_directories(c.out);
      if (*gh) write_file_atomic(out_path(c, "host.json"), host_json(g).dump() + "\n");
      else write_file_atomic(out_path(c, "guests.json"), guests_json(g).dump() + "\n");
      std::cout << (*gh ? "host: " : "guests: ") << (*gh ? g.host.num_edges() : g.guests.size())
                << (*gh ? " edges\n" : " graphs\n");
      return 0;
    }
    if (*pk) {
      auto cfg = load_config(c);
      cfg.report_path = out_path(c, "report.json");
      cfg.csv_path = out_path(c, "summary.csv");
      auto res = run_experiment(cfg);
      if (res.packed) write_file_atomic(out_path(c, "packing.json"), nlohmann::json(res.phi).dump() + "\n");
      print_summary(res.report);
      return res.ok ? 0 : 1;
    }
    if (*vf) {
      auto cfg = load_config(c);
      auto g = generate(cfg);
      auto phi = read_json(packing).get<std::vector<Phi>>();
      auto audit = g.multipartite ? verify_packing(g.host, g.guests, phi, &g.host_parts, &g.guest_parts)
                                  : verify_packing(g.host, g.guests, phi);
      std::cout << audit.to_json().dump(2) << "\n";
      return audit.ok ? 0 : 1;
    }
    if (*rp) {
      std::ofstream out;
      if (!csv.empty()) out.open(csv);
      if (!csv.empty()) out << CsvRow::header() << "\n";
      for (const auto& path : reports) {
        auto r = read_json(path);
        print_summary(r);
        if (!csv.empty()) {
          CsvRow row;
          row.seed = r.value("seed", 0ull);
          row.n = r["config"]["host"].value("n", 0ul);
          row.k = r["config"]["host"].value("k", 0);
          row.guests = r.value("guests", 0ul);
          row.coverage = r.value("coverage", 0.0);
          row.retries = r.value("retries", 0);
          if (r.contains("tester_results") && r["tester_results"].is_object())
            row.max_tester_deviation = r["tester_results"].value("max_deviation", 0.0);
          out << row.line() << "\n";
        }
      }
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
