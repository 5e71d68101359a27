// command-line front end: experiments are fully determined by (flags, seed)
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "fpp/coupling.hpp"
#include "fpp/estimate.hpp"
#include "fpp/fpp.hpp"
#include "fpp/graph.hpp"
#include "fpp/io.hpp"
#include "fpp/limits.hpp"
#include "fpp/parallel.hpp"
#include "fpp/regen.hpp"
#include "fpp/rng.hpp"
#include "fpp/stats.hpp"

using nlohmann::json;
using namespace fpp;

namespace {

PeriodCell parse_graph(const std::string& spec) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  if (kind == "line") return build_tube(1, 2);
  if (kind == "tube" || kind == "cylinder") {
    if (colon == std::string::npos) throw std::invalid_argument("graph spec needs K,d");
    auto rest = spec.substr(colon + 1);
    auto comma = rest.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("graph spec needs K,d");
    int K = std::stoi(rest.substr(0, comma));
    int d = std::stoi(rest.substr(comma + 1));
    return kind == "tube" ? build_tube(K, d) : build_cylinder(K, d);
  }
  return cell_from_file(spec);  // anything else: path to a cell JSON document
}

std::string join_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

json verdicts_to_json(const std::vector<Verdict>& vs) {
  json arr = json::array();
  for (const auto& v : vs)
    arr.push_back({{"check", v.check},
                   {"statistic", v.statistic},
                   {"threshold", v.threshold},
                   {"pass", v.pass}});
  return arr;
}

void write_json(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

struct CommonOpts {
  std::string graph = "tube:2,2";
  std::string dist = "exp:1";
  std::uint64_t seed = 7;
  int replicas = 200;
  long long n = 2000;
  std::string out = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--graph", o.graph, "graph spec: tube:K,d | cylinder:K,d | line | file.json");
  cmd->add_option("--dist", o.dist, "distribution spec, e.g. exp:1 or uniform:0,1");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--replicas", o.replicas, "independent replicas");
  cmd->add_option("--n", o.n, "target level");
  cmd->add_option("--out", o.out, "output directory");
}

// widen the scan window so each replica is expected to yield ~40 increments;
// keeps short --n invocations meaningful on low-block-probability instances
long long effective_window(const RegenParams& rp, long long n) {
  double want = (2.0 * rp.M + 1) * 40.0 / std::max(rp.p_block, 1e-12);
  want = std::min(want, 4e6);
  return std::max(n, static_cast<long long>(want));
}

std::vector<RegenIncrement> gather_increments(const PeriodCell& cell, const Distribution& dist,
                                              const RegenParams& rp, long long n, int replicas,
                                              std::uint64_t seed, double* p_hat = nullptr) {
  std::vector<std::vector<RegenIncrement>> per(static_cast<std::size_t>(replicas));
  std::vector<double> phats(static_cast<std::size_t>(replicas), 0.0);
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    WeightField f(dist, derive_seed(seed, r));
    auto d = decompose(cell, f, rp, 0, n);
    per[r] = std::move(d.increments);
    phats[r] = d.p_hat;
  });
  std::vector<RegenIncrement> all;
  for (auto& v : per) all.insert(all.end(), v.begin(), v.end());
  if (p_hat) *p_hat = mean(phats);
  return all;
}

ConstantsEstimate constants_for(const PeriodCell& cell, const Distribution& dist,
                                std::uint64_t seed) {
  RegenParams rp = auto_params(dist, cell);
  auto inc = gather_increments(cell, dist, rp, effective_window(rp, 0), 200,
                               hash_combine(seed, 0xe57ULL));
  return estimate_constants(inc);
}

int run_estimate(const CommonOpts& o, double q) {
  auto cell = parse_graph(o.graph);
  auto dist = Distribution::parse(o.dist);
  RegenParams rp = q > 0 ? choose_params(dist, cell, q) : auto_params(dist, cell);
  double p_hat = 0;
  auto inc =
      gather_increments(cell, dist, rp, effective_window(rp, o.n), o.replicas, o.seed, &p_hat);
  auto est = estimate_constants(inc);

  std::vector<std::vector<double>> rows;
  for (const auto& i : inc)
    rows.push_back({static_cast<double>(i.S), i.tau, static_cast<double>(i.length)});
  write_text_file(join_path(o.out, "increments.csv"), csv_string({"S", "tau", "length"}, rows));

  json j{{"graph", o.graph},
         {"dist", o.dist},
         {"seed", o.seed},
         {"replicas", o.replicas},
         {"n", o.n},
         {"params", {{"t_lo", rp.t_lo}, {"t_hi", rp.t_hi}, {"M", rp.M}, {"p_block", rp.p_block}}},
         {"p_hat", p_hat},
         {"increments", est.increments},
         {"mu", est.mu},
         {"se_mu", est.se_mu},
         {"sigma2", est.sigma2},
         {"se_sigma2", est.se_sigma2},
         {"alpha", est.alpha},
         {"se_alpha", est.se_alpha},
         {"sigma_N2", est.sigma_N2},
         {"se_sigma_N2", est.se_sigma_N2},
         {"mu_S", est.mu_S},
         {"mu_tau", est.mu_tau}};
  write_json(join_path(o.out, "estimate_summary.json"), j);
  return 0;
}

int run_verify(const CommonOpts& o, const std::string& kind) {
  auto cell = parse_graph(o.graph);
  auto dist = Distribution::parse(o.dist);
  auto est = constants_for(cell, dist, o.seed);

  std::vector<long long> levels;
  const long long n = o.n;
  if (kind == "lln") {
    levels = {n / 16, n / 8, n / 4, n / 2, n};
  } else if (kind == "clt" || kind == "geodesic") {
    levels = {500, 501, n / 2, n / 2 + 1, n, n + 1};
  } else if (kind == "lil") {
    for (long long l = 64; l < n; l = l * 3 / 2) levels.push_back(l);
    levels.push_back(n);
  } else if (kind == "donsker") {
    for (int t = 1; t <= 10; ++t) levels.push_back(n * t / 10);
  } else if (kind == "drift") {
    levels = {500, 501, n / 2, n / 2 + 1, n, n + 1};
  } else {
    throw std::invalid_argument("unknown verify kind: " + kind);
  }

  auto s = sample_levels(cell, dist, levels, o.replicas, hash_combine(o.seed, 0x5a11ULL));

  std::vector<Verdict> vs;
  if (kind == "lln") {
    // tolerance anchored at the deepest level: three sigma of T/n plus slack
    vs = lln_check(levels, s.T, est.mu,
                   3.0 * std::sqrt(est.sigma2 / static_cast<double>(levels.back())));
  } else if (kind == "clt") {
    vs = clt_check(s.T.back(), n, est.mu, est.sigma2);
  } else if (kind == "lil") {
    vs = lil_check(levels, s.T, est.mu, est.sigma2);
  } else if (kind == "donsker") {
    vs = donsker_check(levels, s.T, n, est.mu, est.sigma2, 2, est.se_sigma2);
    std::vector<PlotSeries> series;
    for (int r = 0; r < std::min(o.replicas, 12); ++r) {
      PlotSeries ps;
      ps.label = "path" + std::to_string(r);
      ps.points.emplace_back(0.0, 0.0);
      for (std::size_t li = 0; li < levels.size(); ++li)
        ps.points.emplace_back(static_cast<double>(levels[li]) / static_cast<double>(n),
                               (s.T[li][static_cast<std::size_t>(r)] -
                                est.mu * static_cast<double>(levels[li])) /
                                   std::sqrt(est.sigma2 * static_cast<double>(n)));
      series.push_back(std::move(ps));
    }
    write_text_file(join_path(o.out, "donsker_paths.svg"),
                    svg_line_plot(series, "rescaled passage-time paths"));
  } else if (kind == "drift") {
    vs = drift_check(levels, s.T, est.mu, est.se_mu, est.sigma2, est.se_sigma2);
    PlotSeries ps;
    ps.label = "mean drift";
    for (std::size_t li = 0; li < levels.size(); ++li)
      ps.points.emplace_back(static_cast<double>(levels[li]),
                             mean(s.T[li]) - est.mu * static_cast<double>(levels[li]));
    write_text_file(join_path(o.out, "drift_curve.svg"),
                    svg_line_plot({ps}, "mean passage time minus mu n"));
  } else if (kind == "geodesic") {
    // edge counts live on an integer lattice; use the dithered KS variant
    vs = clt_check_lattice(s.N.back(), n, est.alpha, est.sigma_N2,
                           hash_combine(o.seed, 0xd17ULL));
    auto dv = drift_check(levels, s.N, est.alpha, est.se_alpha, est.sigma_N2, est.se_sigma_N2);
    vs.insert(vs.end(), dv.begin(), dv.end());
  }

  std::vector<std::vector<double>> rows;
  for (std::size_t li = 0; li < levels.size(); ++li)
    for (int r = 0; r < o.replicas; ++r)
      rows.push_back({static_cast<double>(levels[li]), static_cast<double>(r),
                      s.T[li][static_cast<std::size_t>(r)], s.N[li][static_cast<std::size_t>(r)]});
  write_text_file(join_path(o.out, "verify_" + kind + "_samples.csv"),
                  csv_string({"level", "replica", "T", "N"}, rows));

  json j{{"kind", kind},          {"graph", o.graph},       {"dist", o.dist},
         {"seed", o.seed},        {"replicas", o.replicas}, {"n", n},
         {"mu", est.mu},          {"sigma2", est.sigma2},   {"alpha", est.alpha},
         {"sigma_N2", est.sigma_N2}, {"verdicts", verdicts_to_json(vs)},
         {"all_pass", all_pass(vs)}};
  write_json(join_path(o.out, "verify_" + kind + "_summary.json"), j);
  return all_pass(vs) ? 0 : 1;
}

int run_couple(const CommonOpts& o, const std::string& kind, const std::string& mode) {
  const bool discrete = kind == "discrete";
  auto cell = parse_graph(o.graph);
  auto dist = Distribution::parse(o.dist);

  std::vector<VertexRef> I{{0, 1}};
  std::vector<VertexRef> Ip = discrete ? std::vector<VertexRef>{{2, 1}}
                                       : std::vector<VertexRef>{{1, std::min(2, cell.K)}};

  CouplingOptions copts;
  copts.mode = mode == "event" ? CouplingMode::EventDriven : CouplingMode::Explicit;
  copts.force_blocks = copts.mode == CouplingMode::Explicit;
  if (copts.mode == CouplingMode::EventDriven) copts.max_walk_steps = 4'000'000'000LL;

  std::vector<CouplingReport> reps(static_cast<std::size_t>(o.replicas));
  parallel_for(reps.size(), [&](std::size_t r) {
    auto s = derive_seed(o.seed, r);
    reps[r] = discrete ? couple_infections_discrete(cell, dist, I, Ip, s, copts)
                       : couple_infections_continuous(cell, dist, I, Ip, s, copts);
  });

  bool all_completed = true, all_equal = true;
  double min_ks = 1.0;
  int low_p = 0;  // p-values below 0.01 are expected at about the nominal rate
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& rep = reps[r];
    all_completed = all_completed && rep.completed;
    if (copts.mode == CouplingMode::Explicit) all_equal = all_equal && rep.equality_ok;
    min_ks = std::min(min_ks, rep.marginal_ks_p);
    if (rep.marginal_ks_p < 0.01) ++low_p;
    rows.push_back({static_cast<double>(r), static_cast<double>(rep.completed),
                    static_cast<double>(rep.N_c_level), rep.N_c_time,
                    static_cast<double>(rep.verified_levels),
                    static_cast<double>(rep.equality_ok), rep.marginal_ks_p, rep.initial_delay,
                    static_cast<double>(rep.walk_steps)});
  }
  write_text_file(join_path(o.out, "couple_runs.csv"),
                  csv_string({"run", "completed", "N_c_level", "N_c_time", "verified_levels",
                              "equality_ok", "marginal_ks_p", "initial_delay", "walk_steps"},
                             rows));

  std::vector<std::vector<double>> traj;
  for (std::size_t i = 0; i < reps[0].walk_trajectory.size(); ++i)
    traj.push_back({static_cast<double>(i), static_cast<double>(reps[0].walk_trajectory[i])});
  std::string traj_path = join_path(o.out, "couple_walk_trajectory.csv");
  write_text_file(traj_path, csv_string({"step", "state"}, traj));

  json j{{"kind", kind},
         {"mode", mode},
         {"graph", o.graph},
         {"dist", o.dist},
         {"seed", o.seed},
         {"replicas", o.replicas},
         {"N_c_level", reps[0].N_c_level},
         {"N_c_time", reps[0].N_c_time},
         {"verified_levels", reps[0].verified_levels},
         {"marginal_ks_p", reps[0].marginal_ks_p},
         {"walk_trajectory_csv_path", traj_path},
         {"all_completed", all_completed},
         {"all_equal", all_equal},
         {"min_marginal_ks_p", min_ks},
         {"marginal_low_p_fraction", static_cast<double>(low_p) / o.replicas}};
  write_json(join_path(o.out, "couple_summary.json"), j);
  bool marginal_ok = low_p <= std::max(1, o.replicas / 20);
  return (all_completed && all_equal && marginal_ok) ? 0 : 1;
}

int run_tree_demo(double rate, double tmax, int replicas, std::uint64_t seed,
                  const std::string& out) {
  auto res = tree_branching_demo(rate, tmax, replicas, seed);
  std::vector<Verdict> vs;
  double dev = std::fabs(res.mean_W - 3.0);
  vs.push_back({"tree_mean_W", dev, 3 * res.se_W, dev <= 3 * res.se_W});
  vs.push_back({"tree_var_W_positive", res.var_W_ci_lo, 0.0, res.var_W_ci_lo > 0});
  double ldev = std::fabs(res.lambda_hat - rate);
  vs.push_back({"tree_lambda", ldev, 0.05 * rate, ldev <= 0.05 * rate});

  std::vector<std::vector<double>> rows;
  for (const auto& [t, lf] : res.log_mean_front) rows.push_back({t, lf});
  write_text_file(join_path(out, "tree_front.csv"), csv_string({"t", "log_mean_front"}, rows));

  json j{{"rate", rate},
         {"t_max", tmax},
         {"replicas", replicas},
         {"seed", seed},
         {"lambda_hat", res.lambda_hat},
         {"mean_W", res.mean_W},
         {"se_W", res.se_W},
         {"var_W", res.var_W},
         {"var_W_ci", {res.var_W_ci_lo, res.var_W_ci_hi}},
         {"verdicts", verdicts_to_json(vs)},
         {"all_pass", all_pass(vs)}};
  write_json(join_path(out, "tree_demo_summary.json"), j);
  return all_pass(vs) ? 0 : 1;
}

int run_mu_vs_k(const CommonOpts& o) {
  auto dist = Distribution::parse(o.dist);
  auto study = mu_vs_K_study(2, {1, 2, 3, 4}, dist, o.n, o.replicas, o.seed);

  std::vector<Verdict> vs;
  bool pointwise = true;
  for (std::size_t k = 0; k + 1 < study.T.size(); ++k)
    for (std::size_t r = 0; r < study.T[k].size(); ++r)
      if (study.T[k][r] < study.T[k + 1][r] - 1e-12) pointwise = false;
  vs.push_back({"mu_vs_k_pointwise_coupling", pointwise ? 1.0 : 0.0, 1.0, pointwise});
  bool monotone = true;
  for (std::size_t k = 0; k + 1 < study.rows.size(); ++k)
    if (!(study.rows[k].mu_hat > study.rows[k + 1].mu_hat)) monotone = false;
  vs.push_back({"mu_vs_k_monotone", monotone ? 1.0 : 0.0, 1.0, monotone});

  std::vector<std::vector<double>> rows;
  for (const auto& r : study.rows)
    rows.push_back({static_cast<double>(r.K), r.mu_hat, r.se, r.ci_lo, r.ci_hi});
  write_text_file(join_path(o.out, "mu_vs_k.csv"),
                  csv_string({"K", "mu_hat", "se", "ci_lo", "ci_hi"}, rows));
  json j{{"dist", o.dist},       {"n", o.n},
         {"replicas", o.replicas}, {"seed", o.seed},
         {"verdicts", verdicts_to_json(vs)}, {"all_pass", all_pass(vs)}};
  write_json(join_path(o.out, "mu_vs_k_summary.json"), j);
  return all_pass(vs) ? 0 : 1;
}

int run_continuity(const CommonOpts& o) {
  auto cell = parse_graph(o.graph);
  std::vector<std::pair<std::string, Distribution>> dists;
  for (int m : {1, 2, 4, 8, 16})
    dists.emplace_back("uniform(0,1+1/" + std::to_string(m) + ")",
                       Distribution::uniform(0, 1.0 + 1.0 / m));
  dists.emplace_back("uniform(0,1)", Distribution::uniform(0, 1));

  auto rows = continuity_study(dists, cell, o.n, o.replicas, o.seed);
  std::vector<Verdict> vs;
  bool monotone = true;
  for (std::size_t i = 0; i + 2 < rows.size(); ++i)
    if (!(rows[i].mu_hat > rows[i + 1].mu_hat)) monotone = false;
  vs.push_back({"continuity_monotone", monotone ? 1.0 : 0.0, 1.0, monotone});
  const auto& lim = rows.back();
  // inverse-cdf coupling bounds the true gap by alpha * sup|F_m^-1 - F^-1|,
  // here mu/m exactly (pure rescaling); check each m against a 1.5/m band
  bool band_ok = true;
  double worst = 0;
  {
    int ms[] = {1, 2, 4, 8, 16};
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      double rel = std::fabs(rows[i].mu_hat / lim.mu_hat - 1.0) * ms[i];
      worst = std::max(worst, rel);
      if (rel > 1.5) band_ok = false;
    }
  }
  vs.push_back({"continuity_rate_band", worst, 1.5, band_ok});
  // and at m = 16 the estimate must match the limit up to the known modulus
  const auto& last = rows[rows.size() - 2];
  double dev = std::fabs(last.mu_hat - lim.mu_hat * (1.0 + 1.0 / 16.0));
  double ci = 1.96 * std::sqrt(last.se * last.se + lim.se * lim.se);
  vs.push_back({"continuity_limit", dev, ci, dev <= ci});

  std::vector<std::vector<double>> csv_rows;
  for (std::size_t i = 0; i < rows.size(); ++i)
    csv_rows.push_back({static_cast<double>(i), rows[i].mu_hat, rows[i].se});
  write_text_file(join_path(o.out, "continuity.csv"),
                  csv_string({"row", "mu_hat", "se"}, csv_rows));
  json j{{"graph", o.graph}, {"n", o.n}, {"replicas", o.replicas}, {"seed", o.seed},
         {"verdicts", verdicts_to_json(vs)}, {"all_pass", all_pass(vs)}};
  write_json(join_path(o.out, "continuity_summary.json"), j);
  return all_pass(vs) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-passage percolation toolkit for periodic chain graphs"};
  app.require_subcommand(1);

  CommonOpts eo;
  double q = 0;
  auto* est = app.add_subcommand("estimate", "regenerative constant estimation");
  add_common(est, eo);
  est->add_option("--q", q, "block quantile (0 = optimize automatically)");

  CommonOpts vo;
  std::string verify_kind;
  auto* ver = app.add_subcommand("verify", "limit-theorem diagnostics");
  ver->add_option("kind", verify_kind, "lln|clt|lil|donsker|drift|geodesic")->required();
  add_common(ver, vo);

  CommonOpts co;
  co.graph = "tube:3,2";
  co.dist = "uniform:0,1";
  std::string couple_kind, couple_mode = "explicit";
  auto* cpl = app.add_subcommand("couple", "exact infection coupling");
  cpl->add_option("kind", couple_kind, "continuous|discrete")->required();
  add_common(cpl, co);
  cpl->add_option("--mode", couple_mode, "explicit|event");

  double rate = 1.0, tmax = 10.0;
  int tree_replicas = 2000;
  std::uint64_t tree_seed = 7;
  std::string tree_out = ".";
  auto* tree = app.add_subcommand("tree-demo", "branching counterexample on the binary tree");
  tree->add_option("--rate", rate);
  tree->add_option("--tmax", tmax);
  tree->add_option("--replicas", tree_replicas);
  tree->add_option("--seed", tree_seed);
  tree->add_option("--out", tree_out);

  CommonOpts mo;
  mo.dist = "uniform:0,1";
  mo.n = 300;
  auto* muk = app.add_subcommand("mu-vs-k", "time constant vs tube width");
  add_common(muk, mo);

  CommonOpts no;
  no.dist = "uniform:0,1";
  no.n = 400;
  auto* cont = app.add_subcommand("continuity", "time constant under inverse-cdf coupling");
  add_common(cont, no);

  try {
    app.parse(argc, argv);
    if (est->parsed()) return run_estimate(eo, q);
    if (ver->parsed()) {
      if (couple_kind.empty() && verify_kind != "lln" && verify_kind != "clt" &&
          verify_kind != "lil" && verify_kind != "donsker" && verify_kind != "drift" &&
          verify_kind != "geodesic")
        throw std::invalid_argument("unknown verify kind: " + verify_kind);
      return run_verify(vo, verify_kind);
    }
    if (cpl->parsed()) {
      if (couple_kind != "continuous" && couple_kind != "discrete")
        throw std::invalid_argument("couple kind must be continuous or discrete");
      if (couple_mode != "explicit" && couple_mode != "event")
        throw std::invalid_argument("couple mode must be explicit or event");
      if (couple_kind == "discrete" && co.graph == "tube:3,2" && co.dist == "uniform:0,1") {
        co.graph = "tube:2,2";
        co.dist = "discrete:1=0.5,2=0.5";
      }
      return run_couple(co, couple_kind, couple_mode);
    }
    if (tree->parsed()) return run_tree_demo(rate, tmax, tree_replicas, tree_seed, tree_out);
    if (muk->parsed()) return run_mu_vs_k(mo);
    if (cont->parsed()) return run_continuity(no);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
