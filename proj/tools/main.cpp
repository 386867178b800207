#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "damplqr/data.hpp"
#include "damplqr/errors.hpp"
#include "damplqr/json_io.hpp"
#include "damplqr/linalg.hpp"
#include "damplqr/offpolicy_pi.hpp"
#include "damplqr/qlearning.hpp"
#include "damplqr/report.hpp"

namespace {

using namespace damplqr;

constexpr int kExitRank = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitConfig = 4;

const Eigen::IOFormat kPrintFmt(4, 0, ", ", "\n", "  [", "]");

struct AlgoFlags {
  double beta_init = 0.9;
  double beta_ratio = 0.5;
  double alpha0 = 1e-4;
  double frac_a = 0.4;
  double eps = 1e-5;
  int max_phase1 = 64;
  int max_phase2 = 500;
  int max_phase3 = 500;

  AlgoConfig to_config() const {
    AlgoConfig cfg;
    cfg.beta_schedule.beta_init = beta_init;
    cfg.beta_schedule.ratio = beta_ratio;
    cfg.alpha0 = alpha0;
    cfg.frac_a = frac_a;
    cfg.eps1 = eps;
    cfg.eps2 = eps;
    cfg.max_phase1 = max_phase1;
    cfg.max_phase2 = max_phase2;
    cfg.max_phase3 = max_phase3;
    return cfg;
  }

  void add_options(CLI::App* cmd) {
    cmd->add_option("--beta-init", beta_init,
                    "First damping coefficient of the decreasing schedule");
    cmd->add_option("--beta-ratio", beta_ratio, "Schedule decay ratio");
    cmd->add_option("--alpha0", alpha0, "Initial damping step");
    cmd->add_option("--frac-a", frac_a,
                    "Fraction of the step upper bound taken each iteration");
    cmd->add_option("--eps", eps, "Refinement stopping threshold");
    cmd->add_option("--max-phase1", max_phase1, "Phase-1 trial cap");
    cmd->add_option("--max-phase2", max_phase2, "Phase-2 iteration cap");
    cmd->add_option("--max-phase3", max_phase3, "Phase-3 iteration cap");
  }
};

Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
  Vector v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i];
  return v;
}

void print_rank(const char* label, const RankCheck& rc, int n_samples) {
  if (rc.ok) {
    std::cout << label << ": ok (margin " << rc.margin << ")\n";
  } else {
    std::cout << "warning: rank condition unmet (" << std::min(n_samples, rc.rank)
              << " < " << rc.required << ") for " << label << "\n";
  }
}

int run_collect(const std::string& system_path, int samples,
                const std::string& noise_spec, int reset_every,
                std::uint64_t seed, const std::string& x0_text,
                const std::string& out_path) {
  const SystemModel sys = load_system(system_path);
  const NoiseConfig noise = NoiseConfig::parse(noise_spec, seed);
  std::optional<Vector> x0;
  if (!x0_text.empty()) x0 = parse_vector(x0_text);

  const SamplePool pool = collect(sys, noise, samples, reset_every, x0);
  save_pool(pool, out_path);

  std::cout << "collected " << pool.size() << " samples -> " << out_path
            << "\n";
  print_rank("value-recursion rank condition", rank_condition_pi(pool),
             pool.size());
  print_rank("Q-recursion rank condition", rank_condition_q(pool),
             pool.size());
  return 0;
}

void print_report_summary(const SynthesisReport& report) {
  std::cout << "algorithm: " << report.algorithm << "\n"
            << "beta_tilde: " << report.beta_tilde
            << " (rejections: " << report.phase1_rejections << ")\n"
            << "phase-2 steps: " << report.phase2_steps
            << ", gamma_final: " << report.gamma_final << "\n"
            << "stabilizing gain:\n"
            << report.stabilizing_gain.format(kPrintFmt) << "\n"
            << "phase-3 steps: " << report.phase3_steps
            << ", final delta: " << report.final_delta << "\n"
            << "K:\n"
            << report.K.format(kPrintFmt) << "\n"
            << "P:\n"
            << report.P.dense().format(kPrintFmt) << "\n";
  if (report.H)
    std::cout << "H:\n" << report.H->dense().format(kPrintFmt) << "\n";
}

int run_synthesis(const std::string& algo, const std::string& pool_path,
                  const std::string& weights_path,
                  const std::string& system_path, const AlgoFlags& flags,
                  const std::string& out_path, const std::string& trace_path) {
  const SamplePool pool = load_pool(pool_path);
  const CostWeights w = load_weights(weights_path);
  const AlgoConfig cfg = flags.to_config();

  SynthesisReport report = algo == "pi" ? run_algorithm1(pool, w, cfg)
                                        : run_algorithm2(pool, w, cfg);
  if (!system_path.empty())
    annotate_spectral_radii(report, load_system(system_path));

  if (!out_path.empty()) save_report(report, out_path);
  if (!trace_path.empty()) save_trace_csv(report, trace_path);
  print_report_summary(report);
  return 0;
}

int run_oracle(const std::string& system_path, double tol,
               const std::string& out_path) {
  const SystemModel sys = load_system(system_path);
  const CostWeights w = load_weights(system_path);
  const DareSolution sol = solve_dare(sys, w, tol);
  const QMatrix h = h_from_p(sys, w, sol.P);

  std::cout << "P*:\n"
            << sol.P.dense().format(kPrintFmt) << "\n"
            << "K*:\n"
            << sol.K.format(kPrintFmt) << "\n"
            << "H*:\n"
            << h.H.dense().format(kPrintFmt) << "\n"
            << "iterations: " << sol.iterations
            << ", residual: " << sol.residual << "\n";

  if (!out_path.empty()) {
    Json j;
    j["schema_version"] = 1;
    j["P"] = matrix_to_json(sol.P.dense());
    j["K"] = matrix_to_json(sol.K);
    j["H"] = matrix_to_json(h.H.dense());
    j["iterations"] = sol.iterations;
    j["residual"] = sol.residual;
    save_json(j, out_path);
  }
  return 0;
}

int run_compare(const std::string& pool_path, const std::string& weights_path,
                const std::string& system_path, const AlgoFlags& flags,
                double frac_a_pi, double frac_a_qlearn,
                const std::string& out_path) {
  const SamplePool pool = load_pool(pool_path);
  const CostWeights w = load_weights(weights_path);

  AlgoFlags flags_pi = flags;
  AlgoFlags flags_q = flags;
  if (frac_a_pi > 0.0) flags_pi.frac_a = frac_a_pi;
  if (frac_a_qlearn > 0.0) flags_q.frac_a = frac_a_qlearn;
  const bool comparable = flags_pi.frac_a == flags_q.frac_a;
  if (!comparable)
    std::cout << "warning: differing frac_a between runs; "
                 "gain sequences are not comparable\n";

  SynthesisReport pi = run_algorithm1(pool, w, flags_pi.to_config());
  SynthesisReport ql = run_algorithm2(pool, w, flags_q.to_config());

  std::vector<const TraceRow*> pi2, ql2;
  for (const TraceRow& row : pi.trace)
    if (row.phase == 2) pi2.push_back(&row);
  for (const TraceRow& row : ql.trace)
    if (row.phase == 2) ql2.push_back(&row);

  double max_dev = 0.0;
  Json per_step = Json::array();
  const std::size_t common = std::min(pi2.size(), ql2.size());
  for (std::size_t i = 0; i < common; ++i) {
    const double dev =
        (pi2[i]->gain - ql2[i]->gain).cwiseAbs().maxCoeff();
    max_dev = std::max(max_dev, dev);
    Json step;
    step["index"] = pi2[i]->index;
    step["gain_deviation"] = dev;
    per_step.push_back(step);
  }
  const double final_gain_dev = (pi.K - ql.K).cwiseAbs().maxCoeff();
  const double final_value_dev = (pi.P.dense() - ql.P.dense()).norm();

  Json j;
  j["schema_version"] = 1;
  j["comparable"] = comparable;
  j["phase2_steps"] = Json::array({pi.phase2_steps, ql.phase2_steps});
  j["phase2_max_gain_deviation"] = max_dev;
  j["per_step"] = per_step;
  j["final_gain_deviation"] = final_gain_dev;
  j["final_value_deviation"] = final_value_dev;

  if (!system_path.empty()) {
    const SystemModel sys = load_system(system_path);
    j["diagnostics"] = true;
    j["spectral_radius_pi"] = spectral_radius(sys.A - sys.B * pi.K);
    j["spectral_radius_qlearn"] = spectral_radius(sys.A - sys.B * ql.K);
  }

  if (!out_path.empty()) save_json(j, out_path);
  std::cout << "phase-2 steps: pi=" << pi.phase2_steps
            << " qlearn=" << ql.phase2_steps << "\n"
            << "max phase-2 gain deviation: " << max_dev << "\n"
            << "final gain deviation: " << final_gain_dev << "\n"
            << "final value deviation: " << final_value_dev << "\n";
  return 0;
}

int run_sweep(const std::string& config_path, int jobs) {
  const Json cfg = load_json(config_path);
  if (!cfg.contains("schema_version") || cfg["schema_version"].get<int>() != 1)
    throw ConfigError("sweep config: unsupported or missing schema_version");
  for (const char* key : {"weights", "algo", "out_csv"})
    if (!cfg.contains(key))
      throw ConfigError(std::string("sweep config: missing '") + key + "'");

  const std::string algo = cfg["algo"].get<std::string>();
  if (algo != "pi" && algo != "qlearn")
    throw ConfigError("sweep config: algo must be 'pi' or 'qlearn'");

  SamplePool pool;
  if (cfg.contains("pool")) {
    pool = load_pool(cfg["pool"].get<std::string>());
  } else {
    for (const char* key : {"system", "samples"})
      if (!cfg.contains(key))
        throw ConfigError(
            std::string("sweep config: missing '") + key +
            "' (required when no pool file is given)");
    const SystemModel sys = load_system(cfg["system"].get<std::string>());
    const std::uint64_t seed = cfg.value("seed", 0);
    const NoiseConfig noise =
        NoiseConfig::parse(cfg.value("noise", std::string("uniform:-1:1")),
                           seed);
    pool = collect(sys, noise, cfg["samples"].get<int>(),
                   cfg.value("reset_every", 10));
  }

  const CostWeights w = load_weights(cfg["weights"].get<std::string>());
  std::optional<SystemModel> diag_sys;
  if (cfg.contains("system") && cfg.value("diagnostics", false))
    diag_sys = load_system(cfg["system"].get<std::string>());

  std::vector<double> beta_inits = cfg.contains("beta_init")
                                       ? cfg["beta_init"].get<std::vector<double>>()
                                       : std::vector<double>{0.9};
  std::vector<double> frac_as = cfg.contains("frac_a")
                                    ? cfg["frac_a"].get<std::vector<double>>()
                                    : std::vector<double>{0.4};

  struct Combo {
    double beta_init;
    double frac_a;
  };
  std::vector<Combo> combos;
  for (double b : beta_inits)
    for (double a : frac_as) combos.push_back({b, a});

  auto run_one = [&](const Combo& combo) {
    AlgoConfig run_cfg;
    run_cfg.beta_schedule.beta_init = combo.beta_init;
    run_cfg.beta_schedule.ratio = cfg.value("beta_ratio", 0.5);
    run_cfg.alpha0 = cfg.value("alpha0", 1e-4);
    run_cfg.frac_a = combo.frac_a;
    run_cfg.eps1 = run_cfg.eps2 = cfg.value("eps", 1e-5);
    return algo == "pi" ? run_algorithm1(pool, w, run_cfg)
                        : run_algorithm2(pool, w, run_cfg);
  };

  // Independent configs over one immutable pool; run them concurrently but
  // emit rows in config order.
  std::vector<SynthesisReport> reports(combos.size());
  std::size_t next = 0;
  while (next < combos.size()) {
    const std::size_t batch =
        std::min<std::size_t>(std::max(jobs, 1), combos.size() - next);
    std::vector<std::future<SynthesisReport>> futures;
    for (std::size_t i = 0; i < batch; ++i)
      futures.push_back(std::async(std::launch::async, run_one,
                                   combos[next + i]));
    for (std::size_t i = 0; i < batch; ++i)
      reports[next + i] = futures[i].get();
    next += batch;
  }

  std::ostringstream csv;
  csv << "algo,beta_init,frac_a,beta_accepted,phase1_rejections,phase2_steps,"
         "phase3_steps,gamma_final";
  const int n_u = pool.n_u, n_x = pool.n_x;
  for (int r = 0; r < n_u; ++r)
    for (int c = 0; c < n_x; ++c) csv << ",k_" << r << "_" << c;
  csv << ",spectral_radius\n";
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const SynthesisReport& rep = reports[i];
    csv << algo << "," << combos[i].beta_init << "," << combos[i].frac_a << ","
        << rep.beta_tilde << "," << rep.phase1_rejections << ","
        << rep.phase2_steps << "," << rep.phase3_steps << ","
        << rep.gamma_final;
    for (int r = 0; r < n_u; ++r)
      for (int c = 0; c < n_x; ++c) csv << "," << rep.K(r, c);
    csv << ",";
    if (diag_sys)
      csv << spectral_radius(diag_sys->A - diag_sys->B * rep.K);
    csv << "\n";
  }

  const std::string out_csv = cfg["out_csv"].get<std::string>();
  std::ofstream out(out_csv);
  if (!out) throw ConfigError("cannot write '" + out_csv + "'");
  out << csv.str();
  std::cout << "wrote " << combos.size() << " sweep rows -> " << out_csv
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Data-driven stabilizing and optimal state-feedback synthesis for "
      "unknown discrete-time linear systems"};
  app.require_subcommand(1);

  // collect
  auto* collect_cmd =
      app.add_subcommand("collect", "Simulate the plant under probing noise "
                                    "and write a sample pool");
  std::string c_system, c_noise = "uniform:-1:1", c_x0, c_out = "pool.json";
  int c_samples = 40, c_reset = 10;
  std::uint64_t c_seed = 0;
  collect_cmd->add_option("--system", c_system, "System JSON file")
      ->required();
  collect_cmd->add_option("--samples", c_samples, "Number of transitions");
  collect_cmd->add_option("--noise", c_noise,
                          "uniform:<lo>:<hi> or sines:<f,..>:<a,..>");
  collect_cmd->add_option("--reset-every", c_reset,
                          "Restart the state every N steps");
  collect_cmd->add_option("--seed", c_seed, "RNG seed");
  collect_cmd->add_option("--x0", c_x0, "Initial state (comma-separated)");
  collect_cmd->add_option("--out", c_out, "Output pool path");

  // run
  auto* run_cmd = app.add_subcommand(
      "run", "Run a synthesis algorithm on a collected pool");
  std::string r_algo, r_pool, r_weights, r_system, r_out = "report.json",
                                                   r_trace;
  AlgoFlags r_flags;
  run_cmd->add_option("algo", r_algo, "Algorithm: pi or qlearn")
      ->required()
      ->check(CLI::IsMember({"pi", "qlearn"}));
  run_cmd->add_option("--pool", r_pool, "Sample pool JSON")->required();
  run_cmd->add_option("--weights", r_weights, "File carrying Q and R")
      ->required();
  run_cmd->add_option("--system", r_system,
                      "Optional true model; enables spectral-radius "
                      "diagnostics in the report");
  r_flags.add_options(run_cmd);
  run_cmd->add_option("--out", r_out, "Report JSON path");
  run_cmd->add_option("--trace", r_trace, "Per-iteration CSV path");

  // oracle
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "Solve the Riccati equation directly from the model");
  std::string o_system, o_out;
  double o_tol = 1e-12;
  oracle_cmd->add_option("--system", o_system, "System JSON with A, B, Q, R")
      ->required();
  oracle_cmd->add_option("--tol", o_tol, "Relative residual tolerance");
  oracle_cmd->add_option("--out", o_out, "Optional JSON output path");

  // compare
  auto* compare_cmd = app.add_subcommand(
      "compare", "Run both algorithms on one pool and report deviations");
  std::string m_pool, m_weights, m_system, m_out;
  AlgoFlags m_flags;
  double m_frac_a_pi = -1.0, m_frac_a_q = -1.0;
  compare_cmd->add_option("--pool", m_pool, "Sample pool JSON")->required();
  compare_cmd->add_option("--weights", m_weights, "File carrying Q and R")
      ->required();
  compare_cmd->add_option("--system", m_system,
                          "Optional true model for diagnostics");
  m_flags.add_options(compare_cmd);
  compare_cmd->add_option("--frac-a-pi", m_frac_a_pi,
                          "Override frac_a for the pi run only");
  compare_cmd->add_option("--frac-a-qlearn", m_frac_a_q,
                          "Override frac_a for the qlearn run only");
  compare_cmd->add_option("--out", m_out, "Comparison JSON path");

  // sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Run a grid of damping configs from an experiment config");
  std::string s_config;
  int s_jobs = 4;
  sweep_cmd->add_option("--config", s_config, "Experiment config JSON")
      ->required();
  sweep_cmd->add_option("--jobs", s_jobs, "Concurrent runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (collect_cmd->parsed())
      return run_collect(c_system, c_samples, c_noise, c_reset, c_seed, c_x0,
                         c_out);
    if (run_cmd->parsed())
      return run_synthesis(r_algo, r_pool, r_weights, r_system, r_flags, r_out,
                           r_trace);
    if (oracle_cmd->parsed()) return run_oracle(o_system, o_tol, o_out);
    if (compare_cmd->parsed())
      return run_compare(m_pool, m_weights, m_system, m_flags, m_frac_a_pi,
                         m_frac_a_q, m_out);
    if (sweep_cmd->parsed()) return run_sweep(s_config, s_jobs);
  } catch (const RankError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRank;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
