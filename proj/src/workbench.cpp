#include "hpack/workbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/uuid/detail/sha1.hpp>

#include "hpack/errors.hpp"
#include "hpack/generators.hpp"

namespace hpack {

// ---- config ------------------------------------------------------------------

nlohmann::json ExperimentConfig::to_json() const {
  return {{"label", label},
          {"seed", seed},
          {"host",
           {{"kind", host.kind},
            {"n", host.n},
            {"k", host.k},
            {"d", host.d},
            {"certify", host.certify},
            {"r", host.r},
            {"reduced", host.reduced},
            {"reduced_edges", host.reduced_edges}}},
          {"guests",
           {{"family", guests.family},
            {"count", guests.count},
            {"load", guests.load},
            {"cycle_length", guests.cycle_length},
            {"lengths", guests.lengths},
            {"floor", guests.floor},
            {"level", guests.level},
            {"n_edges", guests.n_edges},
            {"max_degree", guests.max_degree},
            {"per_edge", guests.per_edge}}},
          {"ladder", ladder.to_json()},
          {"testers",
           {{"sets", testers.sets},
            {"vertices", testers.vertices},
            {"max_m", testers.max_m},
            {"max_I", testers.max_I},
            {"w_max", testers.w_max},
            {"min_fraction", testers.min_fraction},
            {"alpha", testers.alpha},
            {"additive_exp", testers.additive_exp}}},
          {"classes", classes},
          {"slices", slices},
          {"report_path", report_path},
          {"csv_path", csv_path}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.label = j.value("label", c.label);
    c.seed = j.value("seed", c.seed);
    if (j.contains("host")) {
      const auto& h = j["host"];
      c.host.kind = h.value("kind", c.host.kind);
      c.host.n = h.value("n", c.host.n);
      c.host.k = h.value("k", c.host.k);
      c.host.d = h.value("d", c.host.d);
      c.host.certify = h.value("certify", c.host.certify);
      c.host.r = h.value("r", c.host.r);
      c.host.reduced = h.value("reduced", c.host.reduced);
      c.host.reduced_edges = h.value("reduced_edges", c.host.reduced_edges);
    }
    if (j.contains("guests")) {
      const auto& g = j["guests"];
      c.guests.family = g.value("family", c.guests.family);
      c.guests.count = g.value("count", c.guests.count);
      c.guests.load = g.value("load", c.guests.load);
      c.guests.cycle_length = g.value("cycle_length", c.guests.cycle_length);
      c.guests.lengths = g.value("lengths", c.guests.lengths);
      c.guests.floor = g.value("floor", c.guests.floor);
      c.guests.level = g.value("level", c.guests.level);
      c.guests.n_edges = g.value("n_edges", c.guests.n_edges);
      c.guests.max_degree = g.value("max_degree", c.guests.max_degree);
      c.guests.per_edge = g.value("per_edge", c.guests.per_edge);
    }
    auto base = ParameterLadder::from_profile(j.value("tolerance_profile", std::string("desk")));
    if (j.contains("ladder")) {
      auto lj = j["ladder"];
      if (!lj.contains("profile")) lj["profile"] = base.profile;
      c.ladder = ParameterLadder::from_json(lj);
    } else {
      c.ladder = base;
    }
    if (j.contains("testers")) {
      const auto& t = j["testers"];
      c.testers.sets = t.value("sets", c.testers.sets);
      c.testers.vertices = t.value("vertices", c.testers.vertices);
      c.testers.max_m = t.value("max_m", c.testers.max_m);
      c.testers.max_I = t.value("max_I", c.testers.max_I);
      c.testers.w_max = t.value("w_max", c.testers.w_max);
      c.testers.min_fraction = t.value("min_fraction", c.testers.min_fraction);
      c.testers.alpha = t.value("alpha", c.testers.alpha);
      c.testers.additive_exp = t.value("additive_exp", c.testers.additive_exp);
    }
    c.classes = j.value("classes", c.classes);
    c.slices = j.value("slices", c.slices);
    c.report_path = j.value("report_path", c.report_path);
    c.csv_path = j.value("csv_path", c.csv_path);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  c.ladder.seed = c.seed;
  return c;
}

// ---- instances -----------------------------------------------------------------

namespace {

KGraph reduced_graph(const HostSpec& h, std::mt19937_64& rng) {
  if (h.r < h.k) throw InputError("host: multipartite needs r >= k");
  if (h.reduced == "single") {
    VSet e(h.k);
    std::iota(e.begin(), e.end(), 0);
    return KGraph(h.k, h.r, {e});
  }
  if (h.reduced == "complete") return gen_complete_kgraph(h.r, h.k);
  if (h.reduced == "random") {
    KGraph R(h.k, h.r);
    VSet all(h.r);
    std::iota(all.begin(), all.end(), 0);
    for (int guard = 0; static_cast<int>(R.num_edges()) < h.reduced_edges && guard < 1000 * h.reduced_edges; ++guard) {
      std::shuffle(all.begin(), all.end(), rng);
      R.add_edge(VSet(all.begin(), all.begin() + h.k));
    }
    return R;
  }
  throw InputError("host: unknown reduced graph '" + h.reduced + "'");
}

std::vector<std::size_t> cycle_lengths(const GuestSpec& g, std::size_t n, int k) {
  if (!g.lengths.empty()) return g.lengths;
  std::size_t L = g.cycle_length ? g.cycle_length : n;
  if (L < static_cast<std::size_t>(k + 1) || L > n) throw InputError("guests: cycle length out of range");
  std::size_t c = n / L;
  std::vector<std::size_t> out(c, L);
  for (std::size_t a = 0; a < n % L; ++a) ++out[a % c];
  return out;
}

KGraph permuted(const KGraph& g, std::size_t n, std::mt19937_64& rng) {
  std::vector<Vertex> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  KGraph out(g.k(), n);
  for (const auto& e : g.edges()) {
    VSet f;
    for (Vertex x : e) f.push_back(p[x]);
    out.add_edge(sorted_set(f));
  }
  return out;
}

KGraph one_guest(const GuestSpec& g, std::size_t n, int k, std::mt19937_64& rng) {
  if (g.family == "tight_cycle_factor") return gen_tight_cycle_factor(n, k, cycle_lengths(g, n, k), g.floor);
  if (g.family == "sphere") {
    if (k != 3) throw InputError("guests: sphere triangulations are 3-graphs");
    return g.level >= 0 ? gen_sphere_triangulation(g.level) : gen_sphere_triangulation_order(n, rng);
  }
  if (g.family == "ktree") {
    auto t = gen_ktree(g.n_edges ? g.n_edges : n - k + 1, k, g.max_degree, rng);
    return t.graph;
  }
  if (g.family == "perfect_matching") {
    KGraph out(k, n);
    for (std::size_t a = 0; a + k <= n; a += k) {
      VSet e(k);
      std::iota(e.begin(), e.end(), static_cast<Vertex>(a));
      out.add_edge(e);
    }
    return out;
  }
  throw InputError("guests: unknown family '" + g.family + "'");
}

// Guest inside the multipartite frame: per reduced edge, per_edge edges with
// one vertex in each of its parts; matchings or independent random picks.
KGraph blowup_guest(const GuestSpec& g, const GeneratedInstance& inst, int k, std::mt19937_64& rng) {
  const std::size_t n = inst.part_size;
  std::size_t per = g.per_edge ? g.per_edge : n;
  std::size_t N = inst.host.n();
  KGraph out(k, N);
  bool matching = g.family == "blowup_matching";
  if (!matching && g.family != "blowup_random") throw InputError("guests: unknown family '" + g.family + "'");
  std::vector<std::size_t> deg(N, 0);
  for (const auto& re : inst.reduced.edges()) {
    std::vector<std::vector<Vertex>> pool;
    for (Vertex c : re) {
      std::vector<Vertex> p(n);
      std::iota(p.begin(), p.end(), static_cast<Vertex>(c * n));
      std::shuffle(p.begin(), p.end(), rng);
      pool.push_back(p);
    }
    std::size_t added = 0;
    for (std::size_t a = 0; added < std::min(per, n) && a < 50 * n; ++a) {
      VSet e;
      for (auto& p : pool) e.push_back(matching ? p[a] : p[rng() % n]);
      e = sorted_set(e);
      bool room = std::all_of(e.begin(), e.end(), [&](Vertex x) { return deg[x] < g.max_degree; });
      if (!room && !matching) continue;
      if (out.add_edge(e)) {
        for (Vertex x : e) ++deg[x];
        ++added;
      }
      if (matching && a + 1 >= n) break;
    }
  }
  return out;
}

}  // namespace

GeneratedInstance generate_instance(const ExperimentConfig& cfg, std::mt19937_64& rng) {
  const auto& hs = cfg.host;
  if (hs.k < 2) throw InputError("host: k must be at least 2");
  if (!(hs.d > 0 && hs.d <= 1)) throw InputError("host: d must lie in (0,1]");
  GeneratedInstance g;
  if (hs.kind == "complete") {
    g.host = gen_complete_kgraph(hs.n, hs.k);
  } else if (hs.kind == "binomial") {
    g.host = hs.certify ? gen_binomial_kgraph_certified(hs.n, hs.k, hs.d, 0.15, 2, rng)
                        : gen_binomial_kgraph(hs.n, hs.k, hs.d, rng);
  } else if (hs.kind == "multipartite") {
    g.multipartite = true;
    g.part_size = hs.n;
    g.reduced = reduced_graph(hs, rng);
    auto mh = gen_multipartite_host(hs.n, hs.k, hs.r, g.reduced, hs.d, rng, hs.certify);
    g.host = std::move(mh.graph);
    g.host_parts = std::move(mh.parts);
  } else {
    throw InputError("host: unknown kind '" + hs.kind + "'");
  }
  const std::size_t N = g.host.n();

  int count = cfg.guests.count;
  if (cfg.guests.load > 0) {
    auto probe = std::mt19937_64(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    KGraph one = g.multipartite ? blowup_guest(cfg.guests, g, hs.k, probe) : one_guest(cfg.guests, N, hs.k, probe);
    if (one.num_edges() == 0) throw InputError("guests: family yields no edges");
    count = static_cast<int>(std::floor(cfg.guests.load * g.host.num_edges() / one.num_edges()));
  }
  if (count < 0) throw InputError("guests: negative count");
  for (int h = 0; h < count; ++h) {
    if (g.multipartite) {
      g.guests.push_back(blowup_guest(cfg.guests, g, hs.k, rng));
      std::vector<int> parts(N);
      for (std::size_t v = 0; v < N; ++v) parts[v] = g.host_parts[v];
      g.guest_parts.push_back(std::move(parts));
    } else {
      auto one = one_guest(cfg.guests, N, hs.k, rng);
      if (one.n() > N) throw InputError("guests: guest larger than the host");
      g.guests.push_back(permuted(one, one.n(), rng));
    }
  }
  double eg = 0;
  for (const auto& h : g.guests) eg += h.num_edges();
  double alpha = cfg.ladder.alpha;
  if (eg > (1 - alpha) * g.host.num_edges() + 1e-9)
    throw InputError("guests: total edges exceed (1-alpha) e(G)");
  return g;
}

TesterSuite random_tester_suite(const GeneratedInstance& g, const TesterPlan& plan, std::mt19937_64& rng) {
  TesterSuite suite;
  if (g.guests.empty()) return suite;
  const int r = g.multipartite ? static_cast<int>(g.reduced.n()) : 1;
  auto part_of_host = [&](Vertex v) { return g.multipartite ? g.host_parts[v] : 0; };
  auto part_of_guest = [&](std::size_t h, Vertex x) { return g.multipartite ? g.guest_parts[h][x] : 0; };
  std::vector<std::vector<Vertex>> V(r);
  for (Vertex v = 0; v < g.host.n(); ++v) V[part_of_host(v)].push_back(v);
  auto X = [&](std::size_t h, int i) {
    std::vector<Vertex> out;
    for (Vertex x = 0; x < g.guests[h].n(); ++x)
      if (part_of_guest(h, x) == i) out.push_back(x);
    return out;
  };
  auto subset = [&](std::vector<Vertex> pool) {
    std::shuffle(pool.begin(), pool.end(), rng);
    auto lo = static_cast<std::size_t>(std::ceil(plan.min_fraction * pool.size()));
    std::size_t size = std::uniform_int_distribution<std::size_t>(std::min(lo, pool.size()), pool.size())(rng);
    pool.resize(size);
    return sorted_set(pool);
  };
  std::uniform_real_distribution<double> wdist(0, plan.w_max);

  for (int a = 0; a < plan.sets; ++a) {
    SetTester t;
    t.cluster = std::uniform_int_distribution<int>(0, r - 1)(rng);
    t.W = subset(V[t.cluster]);
    int m = std::uniform_int_distribution<int>(1, std::min<int>(plan.max_m, static_cast<int>(g.guests.size())))(rng);
    std::vector<std::uint32_t> gs(g.guests.size());
    std::iota(gs.begin(), gs.end(), 0);
    std::shuffle(gs.begin(), gs.end(), rng);
    for (int j = 0; j < m; ++j) t.Y.push_back({gs[j], subset(X(gs[j], t.cluster))});
    suite.sets.push_back(std::move(t));
  }
  for (int a = 0; a < plan.vertices; ++a) {
    VertexTester t;
    t.cap = plan.w_max;
    int size = std::uniform_int_distribution<int>(1, plan.max_I)(rng);
    if (g.multipartite) {
      std::vector<int> cl(r);
      std::iota(cl.begin(), cl.end(), 0);
      std::shuffle(cl.begin(), cl.end(), rng);
      cl.resize(std::min(size, r));
      std::sort(cl.begin(), cl.end());
      t.I = cl;
      for (int i : cl) t.centres.push_back(V[i][rng() % V[i].size()]);
    } else {
      std::vector<Vertex> all = V[0];
      std::shuffle(all.begin(), all.end(), rng);
      for (int i = 0; i < size; ++i) {
        t.I.push_back(i);
        t.centres.push_back(all[i]);
      }
    }
    for (std::uint32_t h = 0; h < g.guests.size(); ++h) {
      const auto& H = g.guests[h];
      if (t.I.size() == 1) {
        for (Vertex x : X(h, g.multipartite ? t.I[0] : 0)) t.w[{h, {x}}] = wdist(rng);
        continue;
      }
      // ordered pairs inside an edge, matching the clusters of I
      for (const auto& e : H.edges())
        for (Vertex x : e)
          for (Vertex y : e) {
            if (x == y) continue;
            if (g.multipartite && (part_of_guest(h, x) != t.I[0] || part_of_guest(h, y) != t.I[1])) continue;
            t.w[{h, {x, y}}] = wdist(rng);
          }
    }
    suite.vertices.push_back(std::move(t));
  }
  return suite;
}

// ---- csv / files ----------------------------------------------------------------

std::string CsvRow::header() { return "seed,n,k,guests,coverage,retries,max_tester_deviation,runtime_ms"; }

std::string CsvRow::line() const {
  std::ostringstream o;
  o << seed << ',' << n << ',' << k << ',' << guests << ',' << std::setprecision(6) << coverage << ',' << retries
    << ',' << max_tester_deviation << ',' << std::fixed << std::setprecision(1) << runtime_ms;
  return o.str();
}

std::string content_hash(const std::string& content) {
  boost::uuids::detail::sha1 sha;
  std::string head = "blob " + std::to_string(content.size());
  sha.process_bytes(head.data(), head.size());
  char zero = 0;
  sha.process_byte(static_cast<unsigned char>(zero));
  sha.process_bytes(content.data(), content.size());
  boost::uuids::detail::sha1::digest_type d;
  sha.get_digest(d);
  std::ostringstream o;
  for (unsigned w : d) o << std::hex << std::setw(8) << std::setfill('0') << w;
  return o.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw InputError("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

void append_csv(const std::string& path, const CsvRow& row) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  bool fresh = !fs::exists(p) || fs::file_size(p) == 0;
  std::ofstream out(p, std::ios::app);
  if (!out) throw InputError("cannot write " + path);
  if (fresh) out << CsvRow::header() << '\n';
  out << row.line() << '\n';
}

// ---- pipelines -------------------------------------------------------------------

namespace {

struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string s, const std::string& what) : std::runtime_error(what), stage(std::move(s)) {}
};

template <class F>
auto stage(const std::string& name, std::string& at, F&& f) {
  at = name;
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Sizes of every class in cls, per class index.
std::vector<std::size_t> class_sizes(const std::vector<int>& cls, int B) {
  std::vector<std::size_t> s(B, 0);
  for (int c : cls) ++s[c];
  return s;
}

// Maps each guest class onto a host part of equal size, ties broken at random.
std::vector<int> match_classes(const std::vector<std::size_t>& guest, const std::vector<std::size_t>& host,
                               std::mt19937_64& rng) {
  std::map<std::size_t, std::vector<int>> free;
  for (int p = 0; p < static_cast<int>(host.size()); ++p) free[host[p]].push_back(p);
  for (auto& [sz, ps] : free) std::shuffle(ps.begin(), ps.end(), rng);
  std::vector<int> out(guest.size());
  for (int c = 0; c < static_cast<int>(guest.size()); ++c) {
    auto it = free.find(guest[c]);
    if (it == free.end() || it->second.empty())
      throw PreconditionError("class sizes do not match the host parts");
    out[c] = it->second.back();
    it->second.pop_back();
  }
  return out;
}

std::size_t max_degree(const KGraph& g) {
  std::size_t d = 0;
  for (Vertex v = 0; v < g.n(); ++v) d = std::max(d, g.degree(v));
  return d;
}

struct SliceOutcome {
  PartialPacking partial;
  CompletionResult completion;
};

// Round, assertion and completion summaries for the report.
nlohmann::json slice_json(const SliceOutcome& o) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : o.partial.rounds) {
    auto j = r.to_json();
    j.erase("assertions");
    rounds.push_back(j);
  }
  nlohmann::json hyp = nlohmann::json::array();
  for (const auto& a : o.completion.hypotheses) hyp.push_back(a.to_json());
  return {{"r", o.partial.inst.r},
          {"guests", o.partial.inst.guests.size()},
          {"leftover_per_cluster", o.partial.leftover_per_cluster},
          {"registry_size", o.partial.registry_size},
          {"split", {{"ok", o.partial.split.ok}, {"worst_deviation", o.partial.split.worst_deviation}}},
          {"rounds", rounds},
          {"completion", {{"retries", o.completion.retries}, {"hypotheses", hyp}}}};
}

nlohmann::json assertions_json(const std::vector<Assertion>& as) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : as) out.push_back(a.to_json());
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  std::mt19937_64 rng(cfg.seed);
  auto ladder = cfg.ladder;
  ladder.seed = cfg.seed;
  ladder.d = cfg.host.kind == "complete" ? 1.0 : cfg.host.d;
  nlohmann::json report;
  report["label"] = cfg.label;
  report["seed"] = cfg.seed;
  report["config"] = cfg.to_json();
  report["config"].erase("report_path");
  report["config"].erase("csv_path");

  std::string at;
  std::vector<Assertion> sq;
  std::vector<nlohmann::json> slices_json;
  std::vector<std::size_t> leftover;
  int retries = 0;
  TesterSuite suite;
  std::string error;
  try {
    res.instance = stage("generate", at, [&] { return generate_instance(cfg, rng); });
    auto& g = res.instance;
    {
      std::string blob = report["config"].dump() + g.host.to_json().dump();
      for (const auto& h : g.guests) blob += h.to_json().dump();
      report["input_hash"] = content_hash(blob);
    }
    report["pipeline"] = g.multipartite ? "multipartite" : "general";
    report["host_edges"] = g.host.num_edges();
    double eg = 0;
    for (const auto& h : g.guests) eg += h.num_edges();
    report["guest_edges"] = eg;
    report["guests"] = g.guests.size();
    suite = random_tester_suite(g, cfg.testers, rng);
    std::vector<Phi> phi(g.guests.size());

    if (g.multipartite) {
      BlowupInstance b;
      b.n = g.part_size;
      b.k = cfg.host.k;
      b.r = static_cast<int>(g.reduced.n());
      b.host = g.host;
      b.host_parts = g.host_parts;
      b.reduced = g.reduced;
      b.guests = g.guests;
      b.guest_parts = g.guest_parts;
      bool matchings = true;
      for (std::size_t h = 0; h < b.guests.size() && matchings; ++h) {
        std::map<VSet, std::set<Vertex>> seen;
        for (const auto& e : b.guests[h].edges()) {
          VSet cl;
          for (Vertex x : e) cl.push_back(static_cast<Vertex>(b.guest_parts[h][x]));
          auto& used = seen[sorted_set(cl)];
          for (Vertex x : e) matchings = matchings && used.insert(x).second;
        }
      }
      double alpha_sched = 0;
      TesterSuite inner = suite;
      report["refined"] = !matchings;
      if (!matchings) {
        auto ref = stage("refine", at, [&] {
          return refine_partitions(b.guests, b.guest_parts, b.r, ladder.beta, {}, rng);
        });
        const int B = ref.classes;
        // split each host part into classes sized like the guests'
        std::vector<std::vector<Vertex>> Vp(b.r);
        for (Vertex v = 0; v < b.host.n(); ++v) Vp[b.host_parts[v]].push_back(v);
        std::vector<int> hp(b.host.n());
        std::vector<std::size_t> hsizes(static_cast<std::size_t>(b.r) * B, 0);
        for (int i = 0; i < b.r; ++i) {
          std::shuffle(Vp[i].begin(), Vp[i].end(), rng);
          for (std::size_t a = 0; a < Vp[i].size(); ++a) {
            hp[Vp[i][a]] = i * B + static_cast<int>(a % B);
            ++hsizes[i * B + a % B];
          }
        }
        std::vector<std::vector<int>> gp(b.guests.size());
        stage("refine", at, [&] {
          for (std::size_t h = 0; h < b.guests.size(); ++h) {
            std::vector<int> flat(b.guests[h].n());
            for (Vertex x = 0; x < flat.size(); ++x) flat[x] = ref.refined(b.guest_parts, h, x);
            auto map = match_classes(class_sizes(flat, b.r * B), hsizes, rng);
            gp[h].resize(flat.size());
            for (Vertex x = 0; x < flat.size(); ++x) gp[h][x] = map[flat[x]];
          }
          return 0;
        });
        KGraph R(b.k, static_cast<std::size_t>(b.r) * B);
        for (const auto& re : b.reduced.edges()) {
          std::vector<int> idx(b.k, 0);
          while (true) {
            VSet e;
            for (int a = 0; a < b.k; ++a) e.push_back(static_cast<Vertex>(re[a] * B + idx[a]));
            R.add_edge(sorted_set(e));
            int a = 0;
            while (a < b.k && ++idx[a] == B) idx[a++] = 0;
            if (a == b.k) break;
          }
        }
        b.r *= B;
        b.n = (b.n + B - 1) / B;
        b.reduced = std::move(R);
        b.host_parts = std::move(hp);
        b.guest_parts = std::move(gp);
        alpha_sched = 1.0 / std::max<std::size_t>(1, max_degree(b.reduced));
        inner = {};
      }
      SliceOutcome o;
      o.partial = stage("run_iterative", at, [&] { return run_iterative(b, inner, ladder, rng, alpha_sched); });
      o.completion = stage("complete_packing", at, [&] { return complete_packing(o.partial, rng); });
      for (std::size_t h = 0; h < g.guests.size(); ++h) phi[h] = o.completion.phi[h];
      retries += o.partial.retries + o.completion.retries;
      for (const auto& a : o.partial.sq_assertions) sq.push_back(a);
      for (const auto& a : o.completion.hypotheses) sq.push_back(a);
      leftover = o.partial.leftover_per_cluster;
      slices_json.push_back(slice_json(o));
    } else {
      const std::size_t N = g.host.n();
      const int k = cfg.host.k;
      const int B = cfg.classes > 0 ? cfg.classes : static_cast<int>(std::lround(1.0 / ladder.beta));
      if (B < k) throw StageError("generate", "classes must be at least k");
      SliceOptions so;
      so.d = ladder.d;
      auto sl = stage("group_and_slice", at, [&] { return group_and_slice(g.guests, g.host, cfg.slices, rng, so); });
      KGraph R = gen_complete_kgraph(B, k);
      double alpha_sched = 1.0 / std::max<std::size_t>(1, max_degree(R));
      leftover.assign(B, 0);
      for (int p = 0; p < cfg.slices; ++p) {
        const auto& group = sl.groups[p];
        std::vector<KGraph> padded;
        for (auto h : group) padded.emplace_back(k, N, g.guests[h].edges());
        auto ref = stage("refine", at, [&] {
          return refine_partitions_single(padded, 1.0 / B, {}, rng);
        });
        // random host equipartition into B parts
        std::vector<Vertex> perm(N);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<int> hp(N);
        for (std::size_t a = 0; a < N; ++a) hp[perm[a]] = static_cast<int>(a % B);
        auto hsizes = class_sizes(hp, B);
        BlowupInstance b;
        b.k = k;
        b.r = B;
        b.n = (N + B - 1) / B;
        b.reduced = R;
        b.host = KGraph(k, N);
        for (const auto& e : sl.hosts[p].edges()) {
          std::set<int> cl;
          for (Vertex v : e) cl.insert(hp[v]);
          if (static_cast<int>(cl.size()) == k) b.host.add_edge(e);
        }
        b.host_parts = hp;
        stage("refine", at, [&] {
          for (std::size_t a = 0; a < padded.size(); ++a) {
            auto map = match_classes(class_sizes(ref.cls[a], B), hsizes, rng);
            std::vector<int> parts(N);
            for (Vertex x = 0; x < N; ++x) parts[x] = map[ref.cls[a][x]];
            b.guest_parts.push_back(std::move(parts));
          }
          return 0;
        });
        b.guests = std::move(padded);
        auto L = ladder;
        L.d = so.d / cfg.slices;
        L.dA = L.dB = 0;
        SliceOutcome o;
        o.partial = stage("run_iterative", at, [&] { return run_iterative(b, {}, L, rng, alpha_sched); });
        o.completion = stage("complete_packing", at, [&] { return complete_packing(o.partial, rng); });
        for (std::size_t a = 0; a < group.size(); ++a) {
          Phi f = o.completion.phi[a];
          f.resize(g.guests[group[a]].n());
          phi[group[a]] = std::move(f);
        }
        retries += o.partial.retries + o.completion.retries;
        for (const auto& a : o.partial.sq_assertions) sq.push_back(a);
        for (const auto& a : o.completion.hypotheses) sq.push_back(a);
        for (int i = 0; i < B; ++i) leftover[i] = std::max(leftover[i], o.partial.leftover_per_cluster[i]);
        slices_json.push_back(slice_json(o));
      }
    }
    at = "verify";
    auto audit = g.multipartite ? verify_packing(g.host, g.guests, phi, &g.host_parts, &g.guest_parts)
                                : verify_packing(g.host, g.guests, phi);
    report["audit"] = audit.to_json();
    report["coverage"] = audit.coverage;
    report["packed_fraction"] = audit.ok ? 1.0 : 0.0;
    double n_eval = g.multipartite ? static_cast<double>(g.part_size) : static_cast<double>(g.host.n());
    auto ev = evaluate_tester_suite(suite, phi, n_eval, cfg.testers.alpha, cfg.testers.additive_exp);
    report["tester_results"] = ev.to_json();
    res.packed = true;
    res.ok = audit.ok && ev.passed == ev.results.size();
    res.row.coverage = audit.coverage;
    res.row.max_tester_deviation = ev.max_deviation;
    res.phi = std::move(phi);
    at = "done";
  } catch (const StageError& e) {
    error = e.what();
    at = e.stage;
  } catch (const std::exception& e) {
    error = e.what();
  }
  res.stage = at;
  report["stage"] = at;
  report["ok"] = res.ok;
  report["packed"] = res.packed;
  if (!error.empty()) {
    report["error"] = error;
    report["coverage"] = 0.0;
    report["packed_fraction"] = 0.0;
    report["tester_results"] = nullptr;
  }
  report["ladder"] = ladder.to_json();
  report["leftover_per_cluster"] = leftover;
  report["sq_assertions"] = assertions_json(sq);
  report["slices"] = slices_json;
  report["retries"] = retries;
  res.report = report;

  res.row.seed = cfg.seed;
  res.row.n = cfg.host.n;
  res.row.k = cfg.host.k;
  res.row.guests = res.instance.guests.size();
  res.row.retries = retries;
  res.row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg.report_path.empty()) write_file_atomic(cfg.report_path, report.dump(2) + "\n");
  if (!cfg.csv_path.empty()) append_csv(cfg.csv_path, res.row);
  return res;
}

}  // namespace hpack
