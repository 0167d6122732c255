#include "aniso/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "aniso/kernels.hpp"
#include "aniso/ladder.hpp"

namespace aniso {

using nlohmann::json;

int resolve_workers(int hint) {
  if (hint > 0) return hint;
  if (const char* env = std::getenv("ANISO_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_paths(std::uint64_t n_paths, int workers,
                    const std::function<void(std::uint64_t, std::uint64_t,
                                             int)>& body) {
  const int w = std::max(1, std::min<int>(workers, 256));
  if (w == 1 || n_paths < 2) {
    body(0, n_paths, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  const std::uint64_t chunk = (n_paths + w - 1) / w;
  for (int i = 0; i < w; ++i) {
    const std::uint64_t begin = chunk * static_cast<std::uint64_t>(i);
    const std::uint64_t end = std::min(n_paths, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end, i] { body(begin, end, i); });
  }
  for (auto& th : pool) th.join();
}

namespace {

Multiplier parse_multiplier(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? "" : spec.substr(colon + 1);
  const auto get = [&rest](const std::string& key) {
    const auto pos = rest.find(key + "=");
    if (pos == std::string::npos)
      throw ConfigError("multiplier: missing " + key + " in " + rest);
    const auto start = pos + key.size() + 1;
    auto end = rest.find(',', start);
    if (end == std::string::npos) end = rest.size();
    return std::stod(rest.substr(start, end - start));
  };
  if (kind == "constant") return Multiplier::constant(std::stod(rest));
  if (kind == "checkerboard")
    return Multiplier::checkerboard(get("p"), get("low"), get("high"));
  if (kind == "wave") return Multiplier::smooth_wave(get("f"), get("amp"));
  throw ConfigError("multiplier: unknown kind " + kind);
}

std::uint64_t effective_seed(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("ANISO_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
  }
  return cfg.seed;
}

json verdict_json(Verdict v) { return to_string(v); }

// Writes the tabular section of a report (rows or cells) as CSV with a
// header drawn from the first row's keys.
void write_table_csv(const json& results, const std::string& path) {
  const json* table = nullptr;
  if (results.contains("rows"))
    table = &results["rows"];
  else if (results.contains("cells"))
    table = &results["cells"];
  if (table == nullptr || !table->is_array() || table->empty()) return;
  std::ofstream out(path);
  if (!out) throw ConfigError("csv: cannot open " + path);
  const json& first = table->front();
  bool head = true;
  for (auto it = first.begin(); it != first.end(); ++it) {
    out << (head ? "" : ",") << it.key();
    head = false;
  }
  out << "\n";
  for (const auto& row : *table) {
    bool lead = true;
    for (auto it = row.begin(); it != row.end(); ++it) {
      out << (lead ? "" : ",");
      lead = false;
      if (it.value().is_array()) {
        bool inner = true;
        for (const auto& v : it.value()) {
          out << (inner ? "" : ";") << v.dump();
          inner = false;
        }
      } else if (it.value().is_string()) {
        out << it.value().get<std::string>();
      } else {
        out << it.value().dump();
      }
    }
    out << "\n";
  }
}

}  // namespace

SimSetup make_sim_setup(const ExperimentConfig& cfg, double time_scale_eps) {
  KernelSpec kernel;
  kernel.phi = parse_scaling(cfg.phi);
  kernel.dim = cfg.dim;
  kernel.lambda_bound = cfg.lambda;
  kernel.multiplier = parse_multiplier(cfg.multiplier);

  double eps = cfg.eps;
  if (cfg.eps_rel > 0.0) eps = cfg.eps_rel * time_scale_eps;

  SimConfig sim;
  sim.kernel = std::move(kernel);
  sim.eps = eps;
  sim.horizon = cfg.horizon > 0.0 ? cfg.horizon : cfg.t;
  sim.small_jump_mode = cfg.small_jumps == "drop" ? SmallJumpMode::kDrop
                                                  : SmallJumpMode::kGaussian;
  sim.n_paths = cfg.n_paths;
  sim.base_seed = effective_seed(cfg);
  sim.validate();

  TailSampler tail(sim.kernel.phi, eps);
  SimSetup setup{std::move(sim), std::move(tail), cfg.process == "x", {}};
  setup.start.assign(cfg.dim, 0.0);
  if (!cfg.start.empty()) {
    if (static_cast<int>(cfg.start.size()) != cfg.dim)
      throw ConfigError("config: start has wrong dimension");
    setup.start = cfg.start;
  }
  return setup;
}

namespace {

// Streams terminal positions for a contiguous path range to `consume`,
// using the widest vector engine available. Per-path output does not
// depend on batch grouping, so worker splits cannot change results.
template <class Consumer>
void for_each_terminal_range(const SimSetup& setup, std::uint64_t begin,
                             std::uint64_t end, Consumer&& consume) {
  const int d = setup.sim.dim();
  const int width = terminal_batch_width(setup.sim);
  if (width > 0) {
    const auto batch = width == 8 ? sample_terminal_batch8
                                  : sample_terminal_batch4;
    double rows[8 * 8];
    std::uint64_t p = begin;
    const std::uint64_t uw = static_cast<std::uint64_t>(width);
    for (; p + uw <= end; p += uw) {
      batch(setup.sim, setup.tail, setup.thinned, p, setup.start, rows);
      for (int l = 0; l < width; ++l)
        consume(p + l, std::span<const double>(rows + l * d, d));
    }
    if (p < end) {
      batch(setup.sim, setup.tail, setup.thinned, p, setup.start, rows);
      for (std::uint64_t q = p; q < end; ++q)
        consume(q, std::span<const double>(rows + (q - p) * d, d));
    }
    return;
  }
  double out[8];
  std::span<double> pt(out, d);
  for (std::uint64_t p = begin; p < end; ++p) {
    sample_terminal(setup.sim, setup.tail, setup.thinned, p, setup.start, pt);
    consume(p, std::span<const double>(out, d));
  }
}

}  // namespace

DensityHistogram terminal_histogram(const SimSetup& setup, double t,
                                    double bin_width, double half_width,
                                    int workers) {
  const int w = resolve_workers(workers);
  std::vector<DensityHistogram> parts(
      static_cast<std::size_t>(w),
      DensityHistogram(setup.sim.dim(), setup.start, half_width, bin_width));
  parallel_paths(setup.sim.n_paths, w,
                 [&](std::uint64_t begin, std::uint64_t end, int worker) {
                   for_each_terminal_range(
                       setup, begin, end,
                       [&](std::uint64_t, std::span<const double> pt) {
                         parts[worker].add(pt);
                       });
                 });
  DensityHistogram hist = std::move(parts[0]);
  for (int i = 1; i < w; ++i) hist.merge(parts[i]);
  (void)t;
  return hist;
}

RunResult envelope_experiment(const ExperimentConfig& cfg) {
  const double t = cfg.t;
  SimSetup setup = make_sim_setup(cfg, 0.0);
  const double rho = setup.sim.phi().inverse(t);

  RunResult rr;
  // Density-comparison trust gate: the small-jump scale must be well
  // below the spatial scale of the comparison.
  const double sigma = std::sqrt(setup.tail.sigma2());
  rr.report["sigma_eps"] = sigma;
  rr.report["sigma_gate"] = 0.01 * rho;
  if (sigma > 0.01 * rho) {
    rr.verdict = Verdict::kInconclusive;
    rr.report["verdict"] = verdict_json(rr.verdict);
    rr.report["note"] = "sigma(eps) exceeds 1% of phi^{-1}(t); lower eps";
    return rr;
  }

  DensityHistogram hist =
      terminal_histogram(setup, t, cfg.bin_width_rel * rho,
                         cfg.box_halfwidth_rel * rho, cfg.workers);
  const RatioReport report =
      envelope_ratio_report(hist, t, setup.start, setup.sim.phi());

  rr.verdict = report.verdict;
  json cells = json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"cell", c.cell},
                     {"count", c.count},
                     {"density", c.density},
                     {"envelope", c.envelope},
                     {"ratio", c.ratio}});
  rr.report["t"] = t;
  rr.report["rho"] = rho;
  rr.report["overflow"] = hist.overflow();
  rr.report["n_trusted_cells"] = report.cells.size();
  rr.report["cells"] = std::move(cells);
  rr.report["summary"] = {{"c1", report.c1},
                          {"c2", report.c2},
                          {"spread", report.spread}};
  rr.report["verdict"] = verdict_json(report.verdict);
  if (!report.note.empty()) rr.report["note"] = report.note;
  return rr;
}

RunResult exit_experiment(const ExperimentConfig& cfg) {
  if (cfg.radii.empty())
    throw ConfigError("exit: requires radii (in phi^{-1}(t) units, >= 1)");
  for (const double r : cfg.radii)
    if (r < 1.0) throw ConfigError("exit: radii must be >= 1");
  std::vector<double> radii = cfg.radii;
  std::sort(radii.begin(), radii.end());

  const double t = cfg.t;
  SimSetup setup = make_sim_setup(cfg, 0.0);
  const double rho = setup.sim.phi().inverse(t);
  std::vector<double> abs_radii;
  for (const double r : radii) abs_radii.push_back(r * rho);

  RunResult rr;
  // Missed-exit gates per small-jump mode.
  const double sigma = std::sqrt(setup.tail.sigma2());
  if (setup.sim.small_jump_mode == SmallJumpMode::kGaussian) {
    if (sigma * std::sqrt(setup.sim.horizon) > abs_radii.front() / 100.0) {
      rr.verdict = Verdict::kInconclusive;
      rr.report["verdict"] = verdict_json(rr.verdict);
      rr.report["note"] =
          "gaussian mode: sigma(eps) sqrt(T) above r/100; lower eps";
      return rr;
    }
  } else if (setup.sim.eps > abs_radii.front() / 20.0) {
    rr.verdict = Verdict::kInconclusive;
    rr.report["verdict"] = verdict_json(rr.verdict);
    rr.report["note"] = "drop mode: eps must be well below the smallest radius";
    return rr;
  }

  const int w = resolve_workers(cfg.workers);
  std::vector<std::vector<std::uint64_t>> hits(
      static_cast<std::size_t>(w), std::vector<std::uint64_t>(radii.size(), 0));
  parallel_paths(setup.sim.n_paths, w,
                 [&](std::uint64_t begin, std::uint64_t end, int worker) {
                   for (std::uint64_t p = begin; p < end; ++p) {
                     const ExitRecord rec =
                         sample_exit(setup.sim, setup.tail, setup.thinned, p,
                                     setup.start, abs_radii);
                     for (std::size_t j = 0; j < radii.size(); ++j)
                       if (rec.exit_time[j] < t) ++hits[worker][j];
                   }
                 });
  std::vector<std::uint64_t> total(radii.size(), 0);
  for (int i = 0; i < w; ++i)
    for (std::size_t j = 0; j < radii.size(); ++j) total[j] += hits[i][j];

  std::vector<ExitTailRow> rows;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    ExitTailRow row;
    row.radius_rel = radii[j];
    row.exits = total[j];
    row.trials = setup.sim.n_paths;
    row.prob = wilson_interval(row.exits, row.trials);
    const double norm = setup.sim.phi()(rho * radii[j]) / t;
    row.normalized = row.prob.estimate * norm;
    row.normalized_hi = row.prob.hi * norm;
    row.normalized_width = (row.prob.hi - row.prob.lo) * norm;
    rows.push_back(row);
  }
  const ExitTailReport report = exit_tail_report(rows);

  rr.verdict = report.verdict;
  json jrows = json::array();
  for (const auto& row : report.rows)
    jrows.push_back({{"r", row.radius_rel},
                     {"exits", row.exits},
                     {"p", row.prob.estimate},
                     {"ci", {row.prob.lo, row.prob.hi}},
                     {"normalized", row.normalized}});
  rr.report["t"] = t;
  rr.report["rows"] = std::move(jrows);
  rr.report["summary"] = {{"sup_const", report.sup_normalized}};
  rr.report["verdict"] = verdict_json(report.verdict);
  if (!report.note.empty()) rr.report["note"] = report.note;
  return rr;
}

RunResult mean_exit_experiment(const ExperimentConfig& cfg) {
  const double r = cfg.radius;
  if (!(r > 0.0)) throw ConfigError("mean-exit: radius must be positive");

  ExperimentConfig local = cfg;
  SimSetup probe = make_sim_setup(local, 0.0);
  const double phi_r = probe.sim.phi()(r);
  if (local.horizon <= 0.0) {
    // Horizon long enough that truncation bias of the mean is negligible.
    local.horizon = 50.0 * phi_r;
  }
  if (local.horizon < 50.0 * phi_r)
    throw ConfigError("mean-exit: horizon must be >= 50 phi(r)");
  SimSetup setup = make_sim_setup(local, 0.0);

  RunResult rr;
  if (setup.sim.eps > r / 20.0) {
    rr.verdict = Verdict::kInconclusive;
    rr.report["verdict"] = verdict_json(rr.verdict);
    rr.report["note"] = "eps must be well below r";
    return rr;
  }
  if (setup.sim.small_jump_mode == SmallJumpMode::kGaussian) {
    const double sigma = std::sqrt(setup.tail.sigma2());
    if (sigma * std::sqrt(setup.sim.horizon) > r / 100.0) {
      rr.verdict = Verdict::kInconclusive;
      rr.report["verdict"] = verdict_json(rr.verdict);
      rr.report["note"] =
          "gaussian mode: sigma(eps) sqrt(T) above r/100; lower eps or drop";
      return rr;
    }
  }

  const double radius[1] = {r};
  std::vector<double> tau(setup.sim.n_paths, 0.0);
  parallel_paths(setup.sim.n_paths, resolve_workers(cfg.workers),
                 [&](std::uint64_t begin, std::uint64_t end, int) {
                   for (std::uint64_t p = begin; p < end; ++p) {
                     const ExitRecord rec = sample_exit(
                         setup.sim, setup.tail, setup.thinned, p, setup.start,
                         radius);
                     tau[p] = rec.exit_time[0];
                   }
                 });
  const MeanExitReport report =
      mean_exit_report(r, phi_r, tau, setup.sim.horizon);

  rr.verdict = report.verdict;
  rr.report["radius"] = r;
  rr.report["phi_r"] = phi_r;
  rr.report["censored"] = report.censored;
  rr.report["mean"] = report.mean;
  rr.report["mean_ci"] = report.mean_ci;
  rr.report["second_moment"] = report.second;
  rr.report["summary"] = {{"mean_ratio", report.mean_ratio},
                          {"second_ratio", report.second_ratio}};
  rr.report["verdict"] = verdict_json(report.verdict);
  if (!report.note.empty()) rr.report["note"] = report.note;
  return rr;
}

RunResult diag_experiment(const ExperimentConfig& cfg) {
  if (cfg.t_list.size() < 2)
    throw ConfigError("diag: requires t_list with >= 2 entries");
  std::vector<double> ts = cfg.t_list;
  std::sort(ts.begin(), ts.end());
  if (ts.back() / ts.front() < 10.0)
    throw ConfigError("diag: t_list must span at least a factor of 10");

  RunResult rr;
  std::vector<DiagPoint> points;
  json jpoints = json::array();
  std::uint64_t t_index = 0;
  for (const double t : ts) {
    ExperimentConfig local = cfg;
    local.t = t;
    local.horizon = t;
    // Independent substream per time point. With a shared seed and a
    // cutoff proportional to phi^{-1}(t), power-law runs would be exact
    // rescalings of each other and the slope fit would be vacuous.
    local.seed = cfg.seed + 1000003 * t_index++;
    const ScalingFunction phi = parse_scaling(cfg.phi);
    const double rho = phi.inverse(t);
    SimSetup setup = make_sim_setup(local, rho);
    // Near-diagonal cell: every |x_i - start_i| <= rho/8.
    const double cell_half = rho / 8.0;
    const int w = resolve_workers(cfg.workers);
    std::vector<std::uint64_t> hits(static_cast<std::size_t>(w), 0);
    parallel_paths(setup.sim.n_paths, w,
                   [&](std::uint64_t begin, std::uint64_t end, int worker) {
                     for_each_terminal_range(
                         setup, begin, end,
                         [&](std::uint64_t, std::span<const double> pt) {
                           bool inside = true;
                           for (int a = 0; a < setup.sim.dim(); ++a)
                             inside = inside && std::fabs(pt[a] -
                                                          setup.start[a]) <=
                                                    cell_half;
                           if (inside) ++hits[worker];
                         });
                   });
    DiagPoint point;
    point.t = t;
    point.kappa = rho;
    point.trials = setup.sim.n_paths;
    for (int i = 0; i < w; ++i) point.hits += hits[i];
    const double volume = std::pow(rho / 4.0, setup.sim.dim());
    point.density = static_cast<double>(point.hits) /
                    (static_cast<double>(point.trials) * volume);
    point.normalized = point.density * std::pow(rho, setup.sim.dim());
    points.push_back(point);
    jpoints.push_back({{"t", t},
                       {"kappa", rho},
                       {"hits", point.hits},
                       {"density", point.density},
                       {"normalized", point.normalized}});
  }
  const DiagReport report = diag_report(points, cfg.dim);
  rr.verdict = report.verdict;
  rr.report["rows"] = std::move(jpoints);
  rr.report["summary"] = {{"slope", report.slope},
                          {"slope_stderr", report.slope_stderr},
                          {"normalized_spread", report.normalized_spread}};
  rr.report["verdict"] = verdict_json(report.verdict);
  if (!report.note.empty()) rr.report["note"] = report.note;
  return rr;
}

RunResult ladder_experiment(const ExperimentConfig& cfg) {
  const ThetaTable table = theta_table(cfg.dim, cfg.alpha_lower, cfg.alpha_upper);
  const auto schedule = ladder_schedule(cfg.dim, cfg.alpha_lower, cfg.alpha_upper);
  RunResult rr;
  rr.verdict = Verdict::kPass;
  rr.report["theta"] = table.theta;
  rr.report["steps"] = table.steps;
  rr.report["b0"] = table.b0;
  rr.report["k0"] = table.k0;
  rr.report["threshold"] = table.threshold;
  json steps = json::array();
  for (const auto& s : schedule)
    steps.push_back({{"q", s.state.q}, {"l", s.state.level}, {"rule", s.rule}});
  rr.report["schedule"] = std::move(steps);
  rr.report["final"] = {{"q", schedule.back().state.q},
                        {"l", schedule.back().state.level}};
  rr.report["verdict"] = verdict_json(rr.verdict);
  return rr;
}

RunResult nash_experiment(const ExperimentConfig& cfg) {
  KernelSpec kernel;
  kernel.phi = parse_scaling(cfg.phi);
  kernel.dim = cfg.dim;
  kernel.lambda_bound = cfg.lambda;
  kernel.multiplier = parse_multiplier(cfg.multiplier);
  const NashReport report = nash_check(kernel);
  RunResult rr;
  rr.verdict = report.pass ? Verdict::kPass : Verdict::kFail;
  rr.report["scales"] = report.scales;
  rr.report["ratios"] = report.ratios;
  rr.report["summary"] = {{"max_ratio", report.max_ratio},
                          {"spread", report.spread}};
  rr.report["verdict"] = verdict_json(rr.verdict);
  return rr;
}

RunResult phi_check_experiment(const ExperimentConfig& cfg) {
  const ScalingFunction phi = parse_scaling(cfg.phi);
  const WsReport report = phi.check_ws(200);
  const WsCertificate fitted = phi.fit_ws(200);
  RunResult rr;
  rr.verdict = report.ok() ? Verdict::kPass : Verdict::kFail;
  rr.report["certificate"] = {{"alpha_lower", phi.certificate().alpha_lower},
                              {"alpha_upper", phi.certificate().alpha_upper},
                              {"c_lower", phi.certificate().c_lower},
                              {"c_upper", phi.certificate().c_upper}};
  rr.report["fitted"] = {{"c_lower", fitted.c_lower},
                         {"c_upper", fitted.c_upper}};
  rr.report["summary"] = {{"n_pairs", report.n_pairs},
                          {"violations", report.n_violations},
                          {"worst_ratio", report.worst_ratio}};
  rr.report["verdict"] = verdict_json(rr.verdict);
  return rr;
}

RunResult simulate_experiment(const ExperimentConfig& cfg) {
  SimSetup setup = make_sim_setup(cfg, 0.0);
  if (cfg.out.empty()) throw ConfigError("simulate: requires out = <path>");
  std::ofstream out(cfg.out);
  if (!out) throw ConfigError("simulate: cannot open " + cfg.out);
  for (std::uint64_t p = 0; p < setup.sim.n_paths; ++p) {
    const PathSample path =
        setup.thinned ? sample_x_path(setup.sim, setup.tail, p, setup.start)
                      : sample_z_path(setup.sim, setup.tail, p, setup.start);
    json line = {{"path_index", p},
                 {"terminal", path.terminal},
                 {"n_events", path.n_proposed},
                 {"n_accepted", path.n_accepted}};
    if (cfg.events) {
      json events = json::array();
      for (const auto& e : path.events)
        events.push_back(
            {{"t", e.time}, {"axis", e.axis}, {"jump", e.jump},
             {"accepted", e.accepted}});
      line["events"] = std::move(events);
    }
    out << line.dump() << "\n";
  }
  RunResult rr;
  rr.verdict = Verdict::kPass;
  rr.report["paths_written"] = cfg.n_paths;
  rr.report["out"] = cfg.out;
  rr.report["verdict"] = verdict_json(rr.verdict);
  return rr;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunResult rr;
  if (cfg.experiment == "envelope") {
    rr = envelope_experiment(cfg);
  } else if (cfg.experiment == "exit") {
    rr = exit_experiment(cfg);
  } else if (cfg.experiment == "mean-exit") {
    rr = mean_exit_experiment(cfg);
  } else if (cfg.experiment == "diag") {
    rr = diag_experiment(cfg);
  } else if (cfg.experiment == "ladder") {
    rr = ladder_experiment(cfg);
  } else if (cfg.experiment == "nash") {
    rr = nash_experiment(cfg);
  } else if (cfg.experiment == "phi-check") {
    rr = phi_check_experiment(cfg);
  } else if (cfg.experiment == "simulate") {
    rr = simulate_experiment(cfg);
  } else {
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  }
  const auto stop = std::chrono::steady_clock::now();

  json wrapped;
  wrapped["schema_version"] = 1;
  wrapped["experiment"] = cfg.experiment;
  char digest[32];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(cfg.digest()));
  wrapped["config_digest"] = digest;
  wrapped["seed"] = cfg.seed;
  wrapped["n_paths"] = cfg.n_paths;
  wrapped["results"] = std::move(rr.report);
  wrapped["verdict"] = to_string(rr.verdict);
  wrapped["wall_time_s"] =
      std::chrono::duration<double>(stop - start).count();
  rr.report = std::move(wrapped);

  if (!cfg.csv.empty()) write_table_csv(rr.report["results"], cfg.csv);
  return rr;
}

}  // namespace aniso
