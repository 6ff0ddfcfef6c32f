#include "iwdg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "iwdg/clt_harness.hpp"
#include "iwdg/cumulants.hpp"
#include "iwdg/error.hpp"
#include "iwdg/expansions.hpp"
#include "iwdg/gibbs_exact.hpp"
#include "iwdg/parallel.hpp"
#include "iwdg/patterns.hpp"
#include "iwdg/sampler.hpp"
#include "iwdg/treelen.hpp"
#include "iwdg/wdg.hpp"
#include "json.hpp"
#include "schema.hpp"
#include "schema_text.hpp"

#ifndef IWDG_VERSION
#define IWDG_VERSION "unknown"
#endif

namespace iwdg::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// ---- output -------------------------------------------------------------------

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Doubles are printed with 17 significant digits. `pretty` indents objects
// and non-flat arrays by two spaces per level.
void dump17(const ojson& j, std::string& out, int level, bool pretty) {
  const std::string pad = pretty ? std::string(static_cast<std::size_t>(2 * (level + 1)), ' ') : "";
  const std::string close = pretty ? "\n" + std::string(static_cast<std::size_t>(2 * level), ' ') : "";
  const std::string nl = pretty ? "\n" : "";
  const std::string sep = pretty ? ", " : ",";
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{" + nl;
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += "," + nl;
        first = false;
        out += pad + ojson(key).dump() + (pretty ? ": " : ":");
        dump17(value, out, level + 1, pretty);
      }
      out += close + "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const ojson& e) { return e.is_primitive(); });
      out += flat ? "[" : "[" + nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat ? sep : "," + nl;
        if (!flat) out += pad;
        dump17(j[i], out, level + 1, pretty);
      }
      out += flat ? "]" : close + "]";
      return;
    }
    case ojson::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt17(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

std::string to_text(const ojson& j) {
  std::string s;
  dump17(j, s, 0, true);
  return s + "\n";
}

std::string compact(const ojson& j) {
  std::string s;
  dump17(j, s, 0, false);
  return s;
}

ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

// ---- run context -----------------------------------------------------------------

struct Context {
  std::string command;
  ojson config;
  ojson resolved;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  fs::path out_dir = ".";
  bool self_test = false;
  std::ostream* out = nullptr;
  std::ostream* log = nullptr;  // progress notes; stdout stays machine-readable
  std::vector<std::pair<fs::path, std::string>> pending;  // written only on success

  int dimension() const { return resolved.at("dimension").get<int>(); }

  ojson provenance() const {
    ojson p;
    p["tool"] = "iwdg";
    p["version"] = version();
    p["command"] = command;
    p["config"] = resolved;
    return p;
  }

  std::string csv_header() const {
    return "# " + version() + " " + command + "\n# config " + compact(resolved) + "\n";
  }

  void emit(const std::string& name, std::string content) { pending.emplace_back(out_dir / name, std::move(content)); }

  void flush() {
    if (pending.empty()) return;
    fs::create_directories(out_dir);
    for (const auto& [path, content] : pending) {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + path.string());
      f << content;
      *log << "wrote " << path.string() << "\n";
    }
  }
};

ojson& block(Context& ctx, const std::string& name) {
  if (!ctx.resolved.contains(name)) throw ConfigError("/" + name, "missing required block for '" + ctx.command + "'");
  return ctx.resolved[name];
}

template <class T>
T with_default(ojson& b, const std::string& key, T fallback) {
  if (!b.contains(key)) b[key] = fallback;
  return b.at(key).get<T>();
}

IsingParams parse_params(Context& ctx) {
  if (!ctx.resolved.contains("params")) throw ConfigError("/params", "missing required block for '" + ctx.command + "'");
  ojson& b = ctx.resolved["params"];
  IsingParams p;
  p.d = ctx.dimension();
  p.beta = b.at("beta").get<double>();
  p.h = with_default(b, "h", 0.0);
  p.bc = parse_boundary_condition(with_default<std::string>(b, "bc", "free"));
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw ConfigError("/params", e.what());
  }
  return p;
}

Site parse_site(const ojson& j, int d, const std::string& path) {
  const auto coords = j.get<std::vector<int>>();
  if (static_cast<int>(coords.size()) != d) {
    throw ConfigError(path, "site has " + std::to_string(coords.size()) + " coordinates, dimension is " +
                                std::to_string(d));
  }
  return Site(coords);
}

std::vector<Site> parse_sites(const ojson& j, int d, const std::string& path) {
  std::vector<Site> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_site(j[i], d, path + "/" + std::to_string(i)));
  return out;
}

Box parse_box(const ojson& j, int d, const std::string& path) {
  if (j.contains("n")) return Box::centered(j.at("n").get<int>(), d);
  const auto ext = j.at("extents").get<std::vector<int>>();
  if (static_cast<int>(ext.size()) != d) throw ConfigError(path + "/extents", "box extents must have dimension entries");
  return Box::from_extents(ext);
}

ojson box_json(const Box& box) {
  ojson b;
  std::vector<int> lo, hi;
  for (int k = 0; k < box.dim(); ++k) {
    lo.push_back(box.lo()[k]);
    hi.push_back(box.hi()[k]);
  }
  b["lo"] = lo;
  b["hi"] = hi;
  b["sites"] = box.size();
  return b;
}

ojson site_json(const Site& s) {
  std::vector<int> c;
  for (int k = 0; k < s.dim(); ++k) c.push_back(s[k]);
  return c;
}

Pattern parse_pattern_block(const ojson& j, int d, const std::string& path) {
  try {
    Pattern p = parse_pattern(j.dump());
    const int pd = std::visit([](const auto& x) { return x.dim(); }, p);
    if (pd != d) throw std::invalid_argument("pattern dimension " + std::to_string(pd) + " differs from " + std::to_string(d));
    return p;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

UpdateKind parse_update(const std::string& s) { return s == "cluster" ? UpdateKind::ClusterAtZeroField : UpdateKind::SingleFlip; }

std::string table_csv(const Context& ctx, const CumulantTable& table) {
  std::ostringstream os;
  os << ctx.csv_header();
  table.write_csv(os);
  return os.str();
}

// ---- commands ----------------------------------------------------------------------

int cmd_exact(Context& ctx) {
  const IsingParams p = parse_params(ctx);
  ojson& b = block(ctx, "exact");
  const Box box = parse_box(b.at("box"), p.d, "/exact/box");
  const auto cap = with_default<std::size_t>(b, "site_cap", 25);
  const int order = with_default(b, "cumulant_order", 2);
  if (!b.contains("expectations")) b["expectations"] = ojson::array();
  std::vector<std::vector<Site>> sets;
  for (std::size_t i = 0; i < b["expectations"].size(); ++i) {
    auto s = parse_sites(b["expectations"][i], p.d, "/exact/expectations/" + std::to_string(i));
    for (const Site& x : s) {
      if (!box.contains(x)) throw ConfigError("/exact/expectations/" + std::to_string(i), "site " + x.str() + " is outside the box");
    }
    sets.push_back(std::move(s));
  }
  const ExactOptions opts{cap, std::min<std::size_t>(cap, 24), ctx.workers};

  const LogValue z = partition_function(box, p, opts);
  std::vector<Observable> fs = {
      [](const SpinConfiguration& c) { return static_cast<double>(c.magnetization()); },
      [&p](const SpinConfiguration& c) { return hamiltonian(c, p); },
  };
  for (const auto& s : sets) {
    std::vector<std::size_t> idx;
    for (const Site& x : s) idx.push_back(box.index_of(x));
    fs.push_back([idx](const SpinConfiguration& c) {
      double v = 1.0;
      for (std::size_t i : idx) v *= c.at(i);
      return v;
    });
  }
  const std::vector<double> e = expectations(box, p, fs, opts);

  ojson doc;
  doc["provenance"] = ctx.provenance();
  doc["box"] = box_json(box);
  doc["log_z"] = z.log;
  doc["z"] = finite_or_null(z.value());
  const auto [mant, expo] = z.mantissa_exponent();
  doc["z_mantissa"] = mant;
  doc["z_exponent10"] = expo;
  doc["mean_magnetization"] = e[0];
  doc["mean_energy"] = e[1];
  ojson ex = ojson::array();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    ojson row;
    row["sites"] = format_site_multiset(sets[i]);
    row["value"] = e[2 + i];
    ex.push_back(row);
  }
  doc["expectations"] = ex;

  if (order > 0) {
    const ExactMomentTable table(box, p, opts);
    CumulantTable out(CumulantTable::Provenance::Exact);
    for (const auto& key : site_combinations(box, order, false)) out.insert(key, table.cumulant(key));
    ctx.emit("cumulants.csv", table_csv(ctx, out));
    doc["cumulant_entries"] = out.size();
  }
  ctx.emit("exact.json", to_text(doc));
  *ctx.out << "Z = " << fmt17(mant) << "e" << expo << "\n";
  return kOk;
}

int cmd_sample(Context& ctx) {
  const IsingParams p = parse_params(ctx);
  ojson& b = block(ctx, "sample");
  ChainSpec spec;
  spec.params = p;
  spec.box = parse_box(b.at("box"), p.d, "/sample/box");
  spec.seed = ctx.seed;
  spec.burn_in = with_default<std::size_t>(b, "burn_in", 1000);
  spec.thinning = with_default<std::size_t>(b, "thinning", 10);
  spec.n_samples = with_default<std::size_t>(b, "n_samples", 100);
  spec.update = parse_update(with_default<std::string>(b, "update", "single_flip"));
  spec.stream = with_default<std::uint64_t>(b, "stream", 0);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/sample", e.what());
  }
  const SampleBatch batch = run_chain(spec);

  ojson doc;
  doc["provenance"] = ctx.provenance();
  doc["box"] = box_json(spec.box);
  doc["samples"] = batch.size();
  const double n_sites = static_cast<double>(spec.box.size());
  auto estimate = [&](const Observable& f) {
    ojson e;
    if (batch.size() < 20) {
      double s = 0.0;
      for (std::size_t k = 0; k < batch.size(); ++k) s += f(batch.configuration(k));
      e["mean"] = s / static_cast<double>(batch.size());
      e["std_error"] = nullptr;
    } else {
      const Estimate est = estimate_observable(batch, f);
      e["mean"] = est.mean;
      e["std_error"] = est.std_error;
    }
    return e;
  };
  doc["magnetization_per_site"] =
      estimate([&](const SpinConfiguration& c) { return static_cast<double>(c.magnetization()) / n_sites; });
  doc["energy_per_site"] = estimate([&](const SpinConfiguration& c) { return hamiltonian(c, p) / n_sites; });
  if (b.contains("spool")) {
    std::ostringstream os;
    write_spool(os, batch);
    ctx.emit(b.at("spool").get<std::string>(), os.str());
  }
  ctx.emit("sample.json", to_text(doc));
  return kOk;
}

int cmd_cumulants(Context& ctx) {
  const IsingParams p = parse_params(ctx);
  ojson& b = block(ctx, "cumulants");
  const Box box = parse_box(b.at("box"), p.d, "/cumulants/box");
  const int order = with_default(b, "max_order", 4);
  const std::string source = with_default<std::string>(b, "source", "exact");
  const auto keys = site_combinations(box, order, false);
  if (keys.size() > 200000) throw CapExceededError(std::to_string(keys.size()) + " site sets exceed the table cap of 200000");
  if (source == "exact") {
    const ExactMomentTable table(box, p, ExactOptions{25, 24, ctx.workers});
    CumulantTable out(CumulantTable::Provenance::Exact);
    for (const auto& key : keys) out.insert(key, table.cumulant(key));
    ctx.emit("cumulants.csv", table_csv(ctx, out));
  } else {
    if (order > kMaxEstimatedOrder) {
      throw ConfigError("/cumulants/max_order", "estimated cumulants are limited to order " + std::to_string(kMaxEstimatedOrder));
    }
    ChainSpec spec;
    spec.params = p;
    spec.box = box;
    spec.seed = ctx.seed;
    spec.burn_in = with_default<std::size_t>(b, "burn_in", 1000);
    spec.thinning = with_default<std::size_t>(b, "thinning", 10);
    spec.n_samples = with_default<std::size_t>(b, "n_samples", 2000);
    const SampleBatch batch = run_chain(spec);
    CumulantTable out(CumulantTable::Provenance::Estimated);
    std::vector<Estimate> est(keys.size());
    parallel_for(keys.size(), ctx.workers, [&](std::size_t i) { est[i] = estimated_cumulant(batch, keys[i]); });
    for (std::size_t i = 0; i < keys.size(); ++i) out.insert(keys[i], est[i].mean, est[i].std_error);
    ctx.emit("cumulants.csv", table_csv(ctx, out));
  }
  *ctx.out << keys.size() << " cumulants\n";
  return kOk;
}

int cmd_treelen(Context& ctx) {
  ojson& b = block(ctx, "treelen");
  const auto terminals = parse_sites(b.at("terminals"), ctx.dimension(), "/treelen/terminals");
  const TwoFactorCheck c = check_two_factor(terminals);
  ojson result;
  result["lT"] = c.steiner;
  result["lT_prime"] = c.spanning;
  ojson doc;
  doc["provenance"] = ctx.provenance();
  doc["lT"] = c.steiner;
  doc["lT_prime"] = c.spanning;
  doc["two_factor_ok"] = c.ok;
  ctx.emit("treelen.json", to_text(doc));
  *ctx.out << compact(result) << "\n";
  return c.ok ? kOk : kAcceptanceFailure;
}

int cmd_wdg_check(Context& ctx) {
  const IsingParams p = parse_params(ctx);
  ojson& b = block(ctx, "wdg_check");
  const Box box = parse_box(b.at("box"), p.d, "/wdg_check/box");
  const int order = with_default(b, "max_order", 4);
  const auto bins = with_default<std::size_t>(b, "histogram_bins", 8);
  const ExactMomentTable moments(box, p, ExactOptions{25, 24, ctx.workers});
  CumulantTable table(CumulantTable::Provenance::Exact);
  for (const auto& key : site_combinations(box, order, true)) table.insert(key, moments.cumulant(key));

  ojson doc;
  doc["provenance"] = ctx.provenance();
  doc["box"] = box_json(box);
  IsingWdgSpec spec;
  spec.d = p.d;
  if (b.contains("epsilon")) {
    spec.epsilon = b.at("epsilon").get<double>();
    doc["epsilon_source"] = "config";
  } else {
    const EpsilonFit fit = fit_epsilon_from_pairs(table);
    spec.epsilon = fit.epsilon;
    doc["epsilon_source"] = "pair fit";
    ojson env = ojson::array();
    for (const auto& [dist, v] : fit.envelope) env.push_back(ojson{{"distance", dist}, {"max_abs_kappa2", v}});
    doc["pair_envelope"] = env;
  }
  doc["epsilon"] = spec.epsilon;
  const WdgReport report = check_wdg_inequality(table, spec.graph(), order, bins);
  bool finite = true;
  ojson orders = ojson::array();
  for (const auto& o : report.orders) {
    ojson row;
    row["r"] = o.r;
    row["c_r"] = finite_or_null(o.c_r);
    row["tested"] = o.tested;
    ojson worst = ojson::array();
    for (const Site& s : o.worst) worst.push_back(site_json(s));
    row["worst"] = worst;
    row["margin_histogram"] = o.margin_histogram;
    orders.push_back(row);
    finite = finite && std::isfinite(o.c_r);
  }
  doc["orders"] = orders;
  doc["all_finite"] = finite;
  ctx.emit("wdg.json", to_text(doc));
  *ctx.out << "epsilon = " << fmt17(spec.epsilon) << "\n";
  return finite ? kOk : kAcceptanceFailure;
}

int cmd_pattern_count(Context& ctx) {
  const int d = ctx.dimension();
  BoundaryCondition bc = BoundaryCondition::Free;
  if (ctx.resolved.contains("params")) bc = parse_params(ctx).bc;
  ojson& b = block(ctx, "pattern_count");
  const Pattern pattern = parse_pattern_block(b.at("pattern"), d, "/pattern_count/pattern");
  const double budget = with_default(b, "budget", kDefaultGlobalBudget);
  const SpoolContents spool = read_spool(b.at("spool").get<std::string>(), bc);
  if (spool.box.dim() != d) throw ConfigError("/pattern_count/spool", "spool dimension differs from the config");
  const Box box = b.contains("box") ? parse_box(b.at("box"), d, "/pattern_count/box") : spool.box;
  std::vector<std::int64_t> counts;
  for (const auto& cfg : spool.configurations) {
    if (const auto* l = std::get_if<LocalPattern>(&pattern)) {
      counts.push_back(count_local(cfg, *l, box).value);
    } else {
      counts.push_back(count_global(cfg, std::get<GlobalPattern>(pattern), box, budget).value);
    }
  }
  ojson doc;
  doc["provenance"] = ctx.provenance();
  doc["box"] = box_json(box);
  doc["pattern"] = ojson::parse(pattern_to_json(pattern));
  doc["counts"] = counts;
  double mean = 0.0;
  for (auto c : counts) mean += static_cast<double>(c);
  doc["mean"] = counts.empty() ? 0.0 : mean / static_cast<double>(counts.size());
  ctx.emit("pattern_count.json", to_text(doc));
  *ctx.out << counts.size() << " configurations counted\n";
  return kOk;
}

int cmd_verify_expansions(Context& ctx) {
  if (!ctx.resolved.contains("verify_expansions")) ctx.resolved["verify_expansions"] = ojson::object();
  ojson& b = ctx.resolved["verify_expansions"];
  ExpansionSuite suite;
  const int d = ctx.dimension();
  if (d < 2 && !b.contains("extents")) b["extents"] = {{1}, {2}, {3}, {5}};
  suite.extents = with_default(b, "extents", suite.extents);
  for (std::size_t i = 0; i < suite.extents.size(); ++i) {
    if (static_cast<int>(suite.extents[i].size()) != d) {
      throw ConfigError("/verify_expansions/extents/" + std::to_string(i), "box extents must have dimension entries");
    }
  }
  suite.betas = with_default(b, "betas", suite.betas);
  suite.fields = with_default(b, "fields", suite.fields);
  const double tol = with_default(b, "tolerance", 1e-8);
  if (ctx.self_test) {
    suite.perturbation = 1e-6;
    ctx.resolved["self_test_perturbation"] = suite.perturbation;
  }
  ExpansionOptions opts;
  opts.workers = ctx.workers;
  const auto checks = run_expansion_suite(suite, opts);
  ojson rows = ojson::array();
  std::size_t failures = 0;
  for (const auto& c : checks) {
    const bool pass = c.rel_error <= tol;
    failures += !pass;
    ojson row;
    row["representation"] = c.representation;
    row["detail"] = c.detail;
    row["box"] = box_json(c.box);
    row["beta"] = c.beta;
    row["h"] = c.h;
    row["lhs"] = c.lhs;
    row["rhs"] = c.rhs;
    row["rel_error"] = c.rel_error;
    row["pass"] = pass;
    rows.push_back(row);
  }
  ojson doc;
  doc["provenance"] = ctx.provenance();
  doc["checks"] = rows;
  doc["failures"] = failures;
  ctx.emit("expansions.json", to_text(doc));
  *ctx.out << checks.size() << " identities checked, " << failures << " failed\n";
  return failures ? kAcceptanceFailure : kOk;
}

ojson row_json(const NormalityRow& r) {
  ojson j;
  j["statistic"] = r.statistic;
  j["n"] = r.n;
  j["sites"] = r.sites;
  j["replicas"] = r.replicas;
  j["mean"] = r.mean;
  j["variance"] = r.variance;
  j["variance_per_site"] = r.variance_per_site;
  j["skewness"] = r.skewness;
  j["excess_kurtosis"] = r.excess_kurtosis;
  j["ks_statistic"] = r.ks_statistic;
  j["ks_pvalue"] = r.ks_pvalue;
  j["assessed"] = r.assessed;
  j["normal"] = r.normal;
  return j;
}

ojson fit_json(const LinearFit& f) {
  return ojson{{"slope", f.slope}, {"intercept", f.intercept}, {"slope_se", f.slope_se},
               {"ci_low", f.ci_low}, {"ci_high", f.ci_high}};
}

int cmd_clt(Context& ctx) {
  CltExperiment exp;
  exp.params = parse_params(ctx);
  ojson& b = block(ctx, "clt");
  if (!b.contains("statistics")) b["statistics"] = ojson::array({"magnetization"});
  exp.statistics.clear();
  for (std::size_t i = 0; i < b["statistics"].size(); ++i) {
    const ojson& s = b["statistics"][i];
    if (s.is_string()) {
      exp.statistics.emplace_back(Magnetization{});
    } else {
      const Pattern p = parse_pattern_block(s, exp.params.d, "/clt/statistics/" + std::to_string(i));
      if (const auto* l = std::get_if<LocalPattern>(&p)) exp.statistics.emplace_back(*l);
      else exp.statistics.emplace_back(std::get<GlobalPattern>(p));
    }
  }
  exp.sizes = b.at("sizes").get<std::vector<int>>();
  exp.replicas.replicas = with_default<std::size_t>(b, "replicas", 500);
  exp.replicas.burn_in = with_default<std::size_t>(b, "burn_in", 1000);
  exp.replicas.update = parse_update(with_default<std::string>(b, "update", "single_flip"));
  exp.replicas.seed = ctx.seed;
  exp.replicas.workers = ctx.workers;
  try {
    exp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/clt", e.what());
  }
  const NormalityReport report = run_clt_experiment(exp);

  ojson doc;
  doc["provenance"] = ctx.provenance();
  ojson names = ojson::array();
  for (const auto& s : exp.statistics) names.push_back(statistic_name(s));
  doc["statistics"] = names;
  ojson rows = ojson::array();
  bool ok = true;
  std::ostringstream csv;
  csv << ctx.csv_header() << "statistic,n,replica,value\n";
  for (const auto& r : report.rows) {
    rows.push_back(row_json(r));
    ok = ok && (!r.assessed || r.normal);
    const auto idx = static_cast<std::size_t>(std::find(names.begin(), names.end(), r.statistic) - names.begin());
    for (std::size_t k = 0; k < r.values.size(); ++k) csv << idx << ',' << r.n << ',' << k << ',' << fmt17(r.values[k]) << '\n';
  }
  doc["rows"] = rows;
  doc["all_assessed_normal"] = ok;
  ctx.emit("clt_report.json", to_text(doc));
  ctx.emit("clt_values.csv", csv.str());
  *ctx.out << report.rows.size() << " rows, normality " << (ok ? "ok" : "FAILED") << "\n";
  return ok ? kOk : kAcceptanceFailure;
}

int cmd_variance_scaling(Context& ctx) {
  const IsingParams p = parse_params(ctx);
  ojson& b = block(ctx, "variance_scaling");
  const Pattern pat = parse_pattern_block(b.at("pattern"), p.d, "/variance_scaling/pattern");
  const auto* g = std::get_if<GlobalPattern>(&pat);
  if (!g) throw ConfigError("/variance_scaling/pattern", "variance scaling needs a global pattern");
  if (!g->all_plus()) throw ConfigError("/variance_scaling/pattern", "variance scaling needs all-plus signs");
  if (g->m > 3) throw ConfigError("/variance_scaling/pattern", "variance scaling supports m <= 3");
  const auto sizes = b.at("sizes").get<std::vector<int>>();
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw ConfigError("/variance_scaling/sizes", "sizes must be strictly increasing");
  }
  ReplicaOptions opts;
  opts.replicas = with_default<std::size_t>(b, "replicas", 500);
  opts.burn_in = with_default<std::size_t>(b, "burn_in", 1000);
  opts.seed = ctx.seed;
  opts.workers = ctx.workers;
  const double tol = with_default(b, "tolerance", 0.3);
  const VarianceScaling vs = global_variance_scaling(p, *g, sizes, opts);
  const double expected = 2.0 * g->m - 1.0;
  const bool pass = std::abs(vs.versus_sites.slope - expected) <= tol;

  ojson doc;
  doc["provenance"] = ctx.provenance();
  doc["sizes"] = vs.sizes;
  doc["sites"] = vs.sites;
  doc["variances"] = vs.variances;
  doc["log_variance_se"] = vs.log_variance_se;
  doc["fit_vs_n"] = fit_json(vs.versus_n);
  doc["fit_vs_sites"] = fit_json(vs.versus_sites);
  doc["expected_exponent_vs_sites"] = expected;
  doc["pass"] = pass;
  ojson rows = ojson::array();
  for (const auto& r : vs.rows) rows.push_back(row_json(r));
  doc["rows"] = rows;
  ctx.emit("variance_scaling.json", to_text(doc));
  *ctx.out << "slope vs |box| = " << fmt17(vs.versus_sites.slope) << "\n";
  return pass ? kOk : kAcceptanceFailure;
}

using Command = int (*)(Context&);

struct CommandEntry {
  const char* name;
  const char* help;
  Command fn;
};

const CommandEntry kCommands[] = {
    {"exact", "exact partition function, expectations and cumulant table", cmd_exact},
    {"sample", "run a Markov chain, optionally spooling configurations", cmd_sample},
    {"cumulants", "joint cumulant table, exact or estimated", cmd_cumulants},
    {"treelen", "Steiner and spanning tree lengths of a terminal set", cmd_treelen},
    {"wdg-check", "fit epsilon and the dependency-graph constants C_r", cmd_wdg_check},
    {"pattern-count", "count pattern occurrences in spooled configurations", cmd_pattern_count},
    {"verify-expansions", "check the three expansion identities against enumeration", cmd_verify_expansions},
    {"clt", "replicated normality experiment", cmd_clt},
    {"variance-scaling", "variance growth of a global pattern count", cmd_variance_scaling},
};

}  // namespace

std::string version() { return std::string("iwdg ") + IWDG_VERSION; }

std::string_view config_schema() { return detail::kSchemaText; }

std::optional<std::string> schema_violation(std::string_view config_text) {
  json inst;
  try {
    inst = json::parse(config_text);
  } catch (const json::parse_error& e) {
    return std::string("/: invalid JSON: ") + e.what();
  }
  const auto errs = detail::validate_schema(inst, json::parse(config_schema()));
  if (errs.empty()) return std::nullopt;
  return errs.front();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ising cumulant and dependency-graph verification toolkit", "iwdg"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir = ".";
  bool self_test = false;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed, "base seed (overrides the config)");
  app.add_option("--workers", workers, "worker threads (default: IWDG_WORKERS, then config, then all cores)");
  app.add_option("--out", out_dir, "output directory");
  app.set_version_flag("--version", version());
  std::string chosen;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->callback([&chosen, name = c.name] { chosen = name; });
    if (std::string(c.name) == "verify-expansions") {
      sub->add_flag("--self-test", self_test, "perturb every direct value by 1e-6; the run must fail");
    }
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  Context ctx;
  ctx.command = chosen;
  ctx.out = &out;
  ctx.log = &err;
  ctx.out_dir = out_dir;
  ctx.self_test = self_test;
  try {
    std::ifstream f(config_path);
    if (!f) throw ConfigError("/", "cannot read config file " + config_path);
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();
    if (auto v = schema_violation(text)) {
      err << "config error at " << *v << "\n";
      return kConfigError;
    }
    ctx.config = ojson::parse(text);
    ctx.resolved = ctx.config;
    ctx.seed = seed ? *seed : ctx.config.value("seed", std::uint64_t{1});
    ctx.resolved["seed"] = ctx.seed;
    ctx.resolved.erase("workers");
    if (workers) {
      ctx.workers = *workers;
    } else if (const char* env = std::getenv("IWDG_WORKERS"); env && *env) {
      try {
        ctx.workers = static_cast<unsigned>(std::stoul(env));
      } catch (const std::exception&) {
        throw ConfigError("/workers", std::string("IWDG_WORKERS is not a number: ") + env);
      }
    } else {
      ctx.workers = ctx.config.value("workers", 0U);
    }
    set_default_workers(ctx.workers);
    const auto* entry = std::find_if(std::begin(kCommands), std::end(kCommands),
                                     [&](const CommandEntry& c) { return chosen == c.name; });
    const int code = entry->fn(ctx);
    ctx.flush();
    return code;
  } catch (const ConfigError& e) {
    err << "config error at " << e.path() << ": " << e.what() << "\n";
    return kConfigError;
  } catch (const CapExceededError& e) {
    err << "resource cap exceeded: " << e.what() << "\n";
    return kCapExceeded;
  } catch (const UndefinedQuantityError& e) {
    err << "undefined quantity: " << e.what() << "\n";
    return kAcceptanceFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace iwdg::cli
