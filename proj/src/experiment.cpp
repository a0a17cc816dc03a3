#include "tsaw/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tsaw/acceptance.hpp"
#include "tsaw/error.hpp"
#include "tsaw/path_chains.hpp"
#include "tsaw/percolation.hpp"
#include "tsaw/renewal.hpp"
#include "tsaw/rng.hpp"
#include "tsaw/tree_io.hpp"

#ifndef TSAW_VERSION
#define TSAW_VERSION "0.0.0"
#endif

namespace tsaw::experiment {

using nlohmann::json;

const char* version() { return TSAW_VERSION; }

const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::ruin: return "ruin";
    case Subcommand::kernels: return "kernels";
    case Subcommand::brr: return "brr";
    case Subcommand::percolate: return "percolate";
    case Subcommand::phase: return "phase";
    case Subcommand::verify: return "verify";
  }
  return "?";
}

Subcommand subcommand_from_string(const std::string& s) {
  for (auto c : {Subcommand::ruin, Subcommand::kernels, Subcommand::brr, Subcommand::percolate, Subcommand::phase,
                 Subcommand::verify})
    if (s == to_string(c)) return c;
  throw ValidationError("unknown subcommand '" + s + "' (ruin, kernels, brr, percolate, phase, verify)",
                        "subcommand");
}

namespace {

const char* module_tag(Subcommand s) {
  switch (s) {
    case Subcommand::ruin: return "path-chains";
    case Subcommand::kernels: return "renewal";
    case Subcommand::brr: return "tree";
    case Subcommand::percolate:
    case Subcommand::phase: return "percolation";
    case Subcommand::verify: return "acceptance";
  }
  return "?";
}

template <class T>
T read_scalar(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("wrong type", key);
  }
}

template <class T>
std::vector<T> read_list(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& a = j.at(key);
  if (!a.is_array()) throw ValidationError("expected an array", key);
  std::vector<T> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string path = std::string(key) + "[" + std::to_string(i) + "]";
    if (!a[i].is_number()) throw ValidationError("expected a number", path);
    if constexpr (std::is_integral_v<T>) {
      if (!a[i].is_number_integer()) throw ValidationError("expected an integer", path);
    }
    out.push_back(a[i].get<T>());
  }
  return out;
}

template <class T>
void check_grid(const std::vector<T>& g, const char* field, T min_value, bool increasing) {
  if (g.empty()) throw ValidationError("grid must be non-empty", field);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::string path = std::string(field) + "[" + std::to_string(i) + "]";
    if (!(g[i] >= min_value)) {
      std::ostringstream os;
      os << "must be >= " << min_value;
      throw ValidationError(os.str(), path);
    }
    if (increasing && i > 0 && !(g[i] > g[i - 1])) throw ValidationError("grid must be strictly increasing", path);
  }
}

const std::set<std::string> kKeys{"subcommand", "beta",       "tree",       "tree_path",   "n_grid",
                                  "j_grid",     "k_grid",     "depth_grid", "b_grid",      "gamma_grid",
                                  "reps",       "pairs",      "master_seed", "leak_budget", "output_dir",
                                  "threads",    "criteria"};

chains::ChainOptions chain_opt(const ExperimentConfig& c) {
  chains::ChainOptions o;
  o.beta = c.beta;
  o.leak_budget = c.leak_budget;
  return o;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object", "config");
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw ValidationError("unknown field", k);
  ExperimentConfig c;
  if (j.contains("subcommand")) c.subcommand = subcommand_from_string(read_scalar<std::string>(j, "subcommand", ""));
  c.beta = read_scalar(j, "beta", c.beta);
  if (j.contains("tree")) c.tree = tree::growth_spec_from_json(j.at("tree"), "tree");
  c.tree_path = read_scalar(j, "tree_path", c.tree_path);
  c.n_grid = read_list(j, "n_grid", c.n_grid);
  c.j_grid = read_list(j, "j_grid", c.j_grid);
  c.k_grid = read_list(j, "k_grid", c.k_grid);
  c.depth_grid = read_list(j, "depth_grid", c.depth_grid);
  c.b_grid = read_list(j, "b_grid", c.b_grid);
  c.gamma_grid = read_list(j, "gamma_grid", c.gamma_grid);
  c.reps = read_scalar(j, "reps", c.reps);
  c.pairs = read_scalar(j, "pairs", c.pairs);
  c.master_seed = read_scalar(j, "master_seed", c.master_seed);
  c.leak_budget = read_scalar(j, "leak_budget", c.leak_budget);
  c.output_dir = read_scalar(j, "output_dir", c.output_dir);
  c.threads = read_scalar(j, "threads", c.threads);
  c.criteria = read_list(j, "criteria", c.criteria);
  if (j.contains("reps") && j.at("reps").is_number_integer() && j.at("reps").get<std::int64_t>() < 0)
    throw ValidationError("must be >= 1", "reps");
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"subcommand", to_string(c.subcommand)},
         {"beta", c.beta},
         {"tree", tree::growth_spec_to_json(c.tree)},
         {"n_grid", c.n_grid},
         {"j_grid", c.j_grid},
         {"k_grid", c.k_grid},
         {"depth_grid", c.depth_grid},
         {"b_grid", c.b_grid},
         {"gamma_grid", c.gamma_grid},
         {"reps", c.reps},
         {"pairs", c.pairs},
         {"master_seed", c.master_seed},
         {"leak_budget", c.leak_budget},
         {"output_dir", c.output_dir},
         {"threads", c.threads},
         {"criteria", c.criteria}};
  if (!c.tree_path.empty()) j["tree_path"] = c.tree_path;
  return j;
}

void validate(const ExperimentConfig& c) {
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ValidationError("must be a finite positive number", "beta");
  if (!(c.leak_budget > 0.0) || !(c.leak_budget < 1.0)) throw ValidationError("must lie in (0, 1)", "leak_budget");
  check_grid<int>(c.n_grid, "n_grid", 1, false);
  check_grid<int>(c.j_grid, "j_grid", 1, false);
  check_grid<long>(c.k_grid, "k_grid", 1, true);
  check_grid<int>(c.depth_grid, "depth_grid", 1, true);
  check_grid<double>(c.b_grid, "b_grid", 0.0, false);
  check_grid<double>(c.gamma_grid, "gamma_grid", 0.0, true);
  if (c.reps < 1) throw ValidationError("must be >= 1", "reps");
  if (c.pairs < 1) throw ValidationError("must be >= 1", "pairs");
  if (c.threads < 1) throw ValidationError("must be >= 1", "threads");
  if (c.output_dir.empty()) throw ValidationError("must be non-empty", "output_dir");
  for (std::size_t i = 0; i < c.criteria.size(); ++i)
    if (c.criteria[i] < 1 || c.criteria[i] > acceptance::kCriterionCount)
      throw ValidationError("criterion ids are 1..15", "criteria[" + std::to_string(i) + "]");
  (void)c.tree.targets();
  if (c.subcommand == Subcommand::brr && c.depth_grid.size() < 2)
    throw ValidationError("brr needs at least two depths", "depth_grid");
  if (c.subcommand == Subcommand::percolate && c.tree.mode == tree::GrowthSpec::Mode::explicit_sizes &&
      static_cast<std::size_t>(c.depth_grid.back()) >= c.tree.sizes.size())
    throw ValidationError("depth exceeds the explicit tree", "depth_grid");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'", "config");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("cannot parse config: ") + e.what(), "config");
  }
  return config_from_json(j);
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : width_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
  rows_ = 0;
}

CsvTable& CsvTable::raw(const std::string& s) {
  if (filled_ > 0) text_ += ',';
  ++filled_;
  text_ += s;
  return *this;
}

CsvTable& CsvTable::cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return raw(buf);
}

CsvTable& CsvTable::cell(const std::string& v) { return raw(quote(v)); }

void CsvTable::end_row() {
  if (filled_ != width_)
    throw std::logic_error("csv row has " + std::to_string(filled_) + " cells, header has " + std::to_string(width_));
  text_ += '\n';
  filled_ = 0;
  ++rows_;
}

json ResultManifest::to_json() const {
  json files = json::array();
  for (const auto& [name, sum] : checksums) files.push_back({{"file", name}, {"fnv1a64", sum}});
  return {{"config", config},
          {"version", version},
          {"wall_seconds", wall_seconds},
          {"master_seed", master_seed},
          {"files", files}};
}

namespace {

using Files = std::vector<std::pair<std::string, CsvTable>>;

std::string fmt(double v, int prec = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

void ruin_tables(const ExperimentConfig& c, Tables& out) {
  const int n_max = *std::max_element(c.n_grid.begin(), c.n_grid.end());
  const auto opt = chain_opt(c);
  const auto rs = chains::ruin_series(n_max, opt);
  CsvTable ruin({"n", "r", "r_leak", "r_sqrt_n"});
  for (int n : c.n_grid) {
    const auto i = static_cast<std::size_t>(n);
    ruin.cell(n).cell(rs.r[i]).cell(rs.leak[i]).cell(rs.r[i] * std::sqrt(static_cast<double>(n))).end_row();
  }
  const auto ks = chains::killed_series(n_max, {}, opt);
  CsvTable surv({"m", "survival", "survival_leak"});
  for (int m : c.n_grid) {
    const auto i = static_cast<std::size_t>(m);
    surv.cell(m).cell(ks.survival[i]).cell(ks.leak[i]).end_row();
  }
  std::vector<int> sorted = c.n_grid;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> steps;
  for (int n : sorted) steps.push_back(n - 1);
  const auto laws = chains::y_laws(steps, opt);
  CsvTable gen({"n", "j", "r_j", "r_j_leak"});
  for (int n : c.n_grid) {
    const auto& law = laws[static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), n) - sorted.begin())];
    for (int j : c.j_grid) gen.cell(n).cell(j).cell(law.sum_range(0, j - 1)).cell(law.leaked()).end_row();
  }
  std::ostringstream s;
  s << "ruin: " << c.n_grid.size() << " n values up to " << n_max << ", r_" << n_max << " = " << fmt(rs.r.back(), 10)
    << "\n";
  out.summary = s.str();
  out.files.emplace_back("ruin.csv", std::move(ruin));
  out.files.emplace_back("survival.csv", std::move(surv));
  out.files.emplace_back("gen_ruin.csv", std::move(gen));
}

void kernel_tables(const ExperimentConfig& c, Tables& out) {
  renewal::FirstReturnOptions fo;
  fo.leak_budget = c.leak_budget;
  const auto rs = chains::ruin_series(2048, chain_opt(c));
  const std::vector<int> fit_ns{256, 512, 1024, 2048};
  std::vector<double> fit_r;
  for (int n : fit_ns) fit_r.push_back(rs.r[static_cast<std::size_t>(n)]);
  const auto fit = renewal::fit_ruin_constant(fit_ns, fit_r);

  CsvTable kt({"K", "gamma", "c_star", "c_fit", "c_fit_spread", "pi0", "pi_residual", "gamma_step",
               "max_row_deficit", "series_gap", "series_tail_bound", "solve_residual", "regression_residual",
               "unstable"});
  CsvTable lt({"K", "u", "v", "P", "P_series", "P_gap", "Lambda"});
  std::vector<renewal::LambdaResult> lams;
  std::vector<renewal::FirstReturnData> frds;
  for (long K : c.k_grid) {
    frds.push_back(renewal::first_return_matrix(K, c.beta, fo));
    lams.push_back(renewal::lambda_extraction(frds.back(), 0.02, 16, fo.regression_tolerance));
  }
  std::ostringstream s;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    const auto& f = frds[i];
    const auto& l = lams[i];
    const double step = i + 1 < lams.size() ? std::fabs(lams[i + 1].gamma - l.gamma) / l.gamma : NAN;
    kt.cell(c.k_grid[i]).cell(l.gamma).cell(l.c_star).cell(fit.c_hat).cell(fit.spread).cell(l.pi[0])
        .cell(l.pi_residual).cell(step).cell(f.max_row_deficit).cell(f.series_gap).cell(f.series_tail_bound)
        .cell(f.solve_residual).cell(l.max_relative_residual).cell(l.unstable ? 1 : 0).end_row();
    for (std::size_t u = 0; u < f.states; ++u)
      for (std::size_t v = 0; v < f.states; ++v)
        lt.cell(c.k_grid[i]).cell(u).cell(v).cell(f.P(u, v))
            .cell(f.P_series(u, v)).cell(std::fabs(f.P_series(u, v) - f.P(u, v))).cell(l.Lambda(u, v)).end_row();
    s << "K=" << c.k_grid[i] << " gamma " << fmt(l.gamma) << " c* " << fmt(l.c_star, 8)
      << (l.unstable ? " (unstable extraction)" : "") << "\n";
  }
  s << "fitted ruin constant " << fmt(fit.c_hat, 8) << "\n";

  CsvTable dt({"kind", "K", "n_lo", "n_hi", "slope", "rms_residual", "points", "leak"});
  const int n_lo = *std::min_element(c.n_grid.begin(), c.n_grid.end());
  const int n_hi = *std::max_element(c.n_grid.begin(), c.n_grid.end());
  if (n_hi >= 2 * n_lo) {
    for (long K : c.k_grid)
      for (auto kind : {renewal::WalkKind::S, renewal::WalkKind::Y}) {
        const auto ek = renewal::excursion_kernel(kind, c.beta, K, n_hi, {K + 1}, c.leak_budget);
        const auto lf = ek.diagonal_decay(K + 1, n_lo, n_hi);
        dt.cell(renewal::to_string(kind)).cell(K).cell(n_lo).cell(n_hi).cell(lf.slope).cell(lf.rms_residual)
            .cell(lf.points).cell(ek.leak[0]).end_row();
      }
  }
  out.summary = s.str();
  out.files.emplace_back("kernels.csv", std::move(kt));
  out.files.emplace_back("first_return.csv", std::move(lt));
  out.files.emplace_back("decay.csv", std::move(dt));
}

void brr_tables(const ExperimentConfig& c, Tables& out) {
  const auto br = tree::estimate_branching_ruin(c.tree, c.depth_grid, c.gamma_grid);
  CsvTable vt({"gamma", "depth", "min_cutset_value", "trend"});
  for (const auto& p : br.points)
    for (std::size_t i = 0; i < c.depth_grid.size(); ++i)
      vt.cell(p.gamma).cell(c.depth_grid[i]).cell(p.values[i]).cell(tree::to_string(p.trend)).end_row();
  CsvTable bt({"gamma_lo", "gamma_hi", "conclusive"});
  bt.cell(br.gamma_lo).cell(br.gamma_hi).cell(br.conclusive ? 1 : 0).end_row();
  out.summary = "branching-ruin bracket [" + fmt(br.gamma_lo) + ", " + fmt(br.gamma_hi) + "]" +
                (br.conclusive ? "" : " (inconclusive)") + "\n";
  out.files.emplace_back("brr_values.csv", std::move(vt));
  out.files.emplace_back("brr_bracket.csv", std::move(bt));
}

void percolate_tables(const ExperimentConfig& c, Tables& out) {
  const auto t = tree::build_spherical_tree(c.tree);
  const int depth = t.depth();
  std::vector<int> levels;
  for (int d : c.depth_grid)
    if (d <= depth) levels.push_back(d);
  if (levels.empty()) throw ValidationError("no depth within the tree depth " + std::to_string(depth), "depth_grid");

  const auto table = perc::adapted_conductances(c.beta, depth, c.leak_budget);
  const auto me = perc::open_frequencies(t, c.beta, levels, {}, c.reps, derive_replica_seed(c.master_seed, 0),
                                         c.threads);
  CsvTable mt({"level", "p_hat", "p_hat_se", "determined", "r_exact", "r_exact_leak"});
  for (const auto& l : me.levels) {
    const auto i = static_cast<std::size_t>(l.level);
    mt.cell(l.level).cell(l.p()).cell(l.se()).cell(l.determined).cell(table.r[i]).cell(table.leak[i]).end_row();
  }
  CsvTable ct({"level", "r", "r_leak", "conductance", "c_over_sqrt_level"});
  for (int n = 1; n <= depth; ++n) {
    const auto i = static_cast<std::size_t>(n);
    ct.cell(n).cell(table.r[i]).cell(table.leak[i]).cell(table.conductance[i]).cell(table.c_over_sqrt(n)).end_row();
  }

  const auto pairs = perc::stratified_pairs(t, c.pairs, derive_replica_seed(c.master_seed, 1));
  perc::QiOptions qo;
  qo.runs = c.reps;
  qo.max_runs = std::max<std::uint64_t>(qo.max_runs, c.reps);
  qo.threads = c.threads;
  const auto est = perc::qi_sweep(t, c.beta, pairs, qo, derive_replica_seed(c.master_seed, 2));
  CsvTable qt({"e_level", "e1_level", "e2_level", "runs", "excluded", "conditioning_hits", "joint", "joint_se", "p1",
               "p1_se", "p2", "p2_se", "M", "M_se", "mixture", "mixture_diff", "mixture_se", "widened"});
  int mixture_fail = 0;
  double max_m = 0.0;
  for (const auto& e : est) {
    qt.cell(tree::edge_level(t, e.pair.e)).cell(tree::edge_level(t, e.pair.e1)).cell(tree::edge_level(t, e.pair.e2))
        .cell(e.runs).cell(e.excluded).cell(e.conditioning_hits).cell(e.joint).cell(e.joint_se).cell(e.p1)
        .cell(e.p1_se).cell(e.p2).cell(e.p2_se).cell(e.M).cell(e.M_se).cell(e.mixture).cell(e.mixture_diff)
        .cell(e.mixture_se).cell(e.widened ? 1 : 0).end_row();
    if (!e.mixture_ok()) ++mixture_fail;
    max_m = std::max(max_m, e.M);
  }

  CsvTable yt({"gamma", "depth", "min_cutset_value", "flow_strength", "energy", "conservation_defect",
               "mincut_trend", "energy_trend", "increment_ratio"});
  std::ostringstream s;
  if (c.tree.mode == tree::GrowthSpec::Mode::exponent || c.depth_grid.back() < static_cast<int>(c.tree.sizes.size())) {
    for (double g : c.gamma_grid) {
      const auto ly = perc::lyons_checks(c.tree, c.beta, g, c.depth_grid);
      for (const auto& d : ly.depths)
        yt.cell(g).cell(d.depth).cell(d.mincut).cell(d.strength).cell(d.energy).cell(d.conservation)
            .cell(tree::to_string(ly.mincut_trend)).cell(perc::to_string(ly.energy_trend)).cell(ly.increment_ratio)
            .end_row();
      s << "lyons gamma=" << fmt(g, 3) << ": min-cut " << tree::to_string(ly.mincut_trend) << ", energy "
        << perc::to_string(ly.energy_trend) << "\n";
    }
  }
  s << "marginals over " << me.runs << " excursions (" << me.capped << " capped); " << est.size()
    << " pairs, max M " << fmt(max_m, 4) << ", mixture identity outside 4 SE on " << mixture_fail << "\n";
  out.summary = s.str();
  out.files.emplace_back("marginals.csv", std::move(mt));
  out.files.emplace_back("conductances.csv", std::move(ct));
  out.files.emplace_back("qi_pairs.csv", std::move(qt));
  out.files.emplace_back("lyons.csv", std::move(yt));
}

void phase_tables(const ExperimentConfig& c, Tables& out) {
  perc::PhaseOptions po;
  po.markers = c.depth_grid;
  po.runs = c.reps;
  po.threads = c.threads;
  const auto rows = perc::phase_experiment(c.b_grid, c.beta, po, c.master_seed);
  CsvTable pt({"b", "depth", "reach", "reach_se", "determined", "runs", "capped", "trend"});
  CsvTable wt({"b", "walks", "escaped", "never_returned", "mean_returns"});
  std::ostringstream s;
  for (const auto& r : rows) {
    for (const auto& m : r.markers)
      pt.cell(r.b).cell(m.depth).cell(m.p()).cell(m.se()).cell(m.determined).cell(r.runs).cell(r.capped)
          .cell(perc::to_string(r.trend)).end_row();
    double mean = 0.0;
    for (auto x : r.returns) mean += static_cast<double>(x);
    if (!r.returns.empty()) mean /= static_cast<double>(r.returns.size());
    wt.cell(r.b).cell(r.returns.size()).cell(r.escaped).cell(r.never_returned)
        .cell(mean).end_row();
    s << "b=" << fmt(r.b, 3) << ": " << perc::to_string(r.trend) << "\n";
  }
  out.summary = s.str();
  out.files.emplace_back("phase.csv", std::move(pt));
  out.files.emplace_back("phase_walks.csv", std::move(wt));
}

void verify_tables(const ExperimentConfig& c, Tables& out) {
  acceptance::AcceptanceOptions ao;
  ao.master_seed = c.master_seed;
  ao.threads = c.threads;
  ao.only = c.criteria;
  std::ostringstream s;
  const auto results = acceptance::run_acceptance(ao, [&](const acceptance::CriterionResult& r) {
    s << acceptance::format_line(r) << "\n";
  });
  CsvTable vt({"criterion", "name", "passed", "measured", "threshold"});
  int failed = 0;
  for (const auto& r : results) {
    vt.cell(r.id).cell(r.name).cell(r.passed ? 1 : 0).cell(r.measured).cell(r.threshold).end_row();
    failed += !r.passed;
  }
  s << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed\n";
  out.acceptance_failed = failed > 0;
  out.summary = s.str();
  out.files.emplace_back("verify.csv", std::move(vt));
}

}  // namespace

Tables compute_tables(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (!c.tree_path.empty()) c.tree = tree::load_growth_spec(c.tree_path);
  validate(c);
  Tables out;
  const std::string tag = std::string("[") + module_tag(c.subcommand) + "] ";
  try {
    switch (c.subcommand) {
      case Subcommand::ruin: ruin_tables(c, out); break;
      case Subcommand::kernels: kernel_tables(c, out); break;
      case Subcommand::brr: brr_tables(c, out); break;
      case Subcommand::percolate: percolate_tables(c, out); break;
      case Subcommand::phase: phase_tables(c, out); break;
      case Subcommand::verify: verify_tables(c, out); break;
    }
  } catch (const ValidationError& e) {
    throw ValidationError(tag + e.what());
  } catch (const NumericBudgetError& e) {
    throw NumericBudgetError(tag + e.what());
  }
  return out;
}

RunResult run_subcommand(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = config;
  if (!c.tree_path.empty()) c.tree = tree::load_growth_spec(c.tree_path);
  validate(c);
  auto tables = compute_tables(c);

  namespace fs = std::filesystem;
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  RunResult res;
  res.manifest.config = config_to_json(c);
  res.manifest.version = version();
  res.manifest.master_seed = c.master_seed;
  for (const auto& [name, table] : tables.files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << table.text();
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    res.files.push_back(name);
    res.manifest.checksums.emplace_back(name, fnv1a64_hex(table.text()));
  }
  res.manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream m(dir / "manifest.json", std::ios::binary);
  m << res.manifest.to_json().dump(2) << "\n";
  if (!m) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  res.summary = std::move(tables.summary);
  res.exit_code = tables.acceptance_failed ? kExitAcceptance : kExitOk;
  return res;
}

}  // namespace tsaw::experiment
