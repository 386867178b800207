#include "damplqr/json_io.hpp"

#include <fstream>

#include "damplqr/errors.hpp"

namespace damplqr {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("expected a matrix as an array of rows");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols)
      throw ConfigError("ragged matrix rows in JSON");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

namespace {

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const Json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

SystemModel load_system(const std::string& path) {
  const Json j = load_json(path);
  if (!j.contains("A") || !j.contains("B"))
    throw ConfigError("system file '" + path + "' needs A and B");
  SystemModel sys{matrix_from_json(j["A"]), matrix_from_json(j["B"])};
  if (sys.A.rows() != sys.A.cols() || sys.B.rows() != sys.A.rows())
    throw ConfigError("system file '" + path + "': A/B dimension mismatch");
  return sys;
}

CostWeights load_weights(const std::string& path) {
  const Json j = load_json(path);
  if (!j.contains("Q") || !j.contains("R"))
    throw ConfigError("weights file '" + path + "' needs Q and R");
  try {
    return CostWeights::checked(matrix_from_json(j["Q"]),
                                matrix_from_json(j["R"]));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("weights file '" + path + "': " + e.what());
  }
}

Json pool_to_json(const SamplePool& pool) {
  Json j;
  j["n_x"] = pool.n_x;
  j["n_u"] = pool.n_u;
  j["seed"] = pool.seed;
  Json samples = Json::array();
  for (const Sample& s : pool.samples) {
    Json entry;
    entry["x"] = vector_to_json(s.x);
    entry["u"] = vector_to_json(s.u);
    entry["x_next"] = vector_to_json(s.x_next);
    samples.push_back(entry);
  }
  j["samples"] = samples;
  return j;
}

SamplePool pool_from_json(const Json& j) {
  SamplePool pool;
  try {
    pool.n_x = j.at("n_x").get<int>();
    pool.n_u = j.at("n_u").get<int>();
    pool.seed = j.at("seed").get<std::uint64_t>();
    for (const Json& entry : j.at("samples")) {
      Sample s{vector_from_json(entry.at("x")), vector_from_json(entry.at("u")),
               vector_from_json(entry.at("x_next"))};
      if (s.x.size() != pool.n_x || s.u.size() != pool.n_u ||
          s.x_next.size() != pool.n_x)
        throw ConfigError("sample dimensions disagree with pool header");
      pool.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pool JSON: ") + e.what());
  }
  return pool;
}

void save_pool(const SamplePool& pool, const std::string& path) {
  save_json(pool_to_json(pool), path);
}

SamplePool load_pool(const std::string& path) {
  return pool_from_json(load_json(path));
}

Json report_to_json(const SynthesisReport& report) {
  Json j;
  j["schema_version"] = 1;
  j["algorithm"] = report.algorithm;
  j["beta_tilde"] = report.beta_tilde;
  j["alphas"] = report.alphas;
  j["gamma_final"] = report.gamma_final;
  j["stabilizing_gain"] = matrix_to_json(report.stabilizing_gain);
  j["K"] = matrix_to_json(report.K);
  j["P"] = matrix_to_json(report.P.dense());
  if (report.H) j["H"] = matrix_to_json(report.H->dense());
  j["phase1_rejections"] = report.phase1_rejections;
  j["phase2_steps"] = report.phase2_steps;
  j["phase3_steps"] = report.phase3_steps;
  j["final_delta"] = report.final_delta;
  j["final_residual"] = report.final_residual;
  j["diagnostics"] = report.diagnostics;
  Json trace = Json::array();
  for (const TraceRow& row : report.trace) {
    Json r;
    r["phase"] = row.phase;
    r["index"] = row.index;
    r["gamma"] = row.gamma;
    r["alpha"] = row.alpha;
    r["gain"] = matrix_to_json(row.gain);
    r["delta_norm"] = row.delta_norm;
    r["residual"] = row.residual;
    r["accepted"] = row.accepted;
    if (row.spectral_radius) r["spectral_radius"] = *row.spectral_radius;
    trace.push_back(r);
  }
  j["trace"] = trace;
  return j;
}

void save_report(const SynthesisReport& report, const std::string& path) {
  save_json(report_to_json(report), path);
}

void save_trace_csv(const SynthesisReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << trace_to_csv(report);
}

}  // namespace damplqr
