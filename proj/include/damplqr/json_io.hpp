#pragma once

#include <string>

#include <json.hpp>

#include "damplqr/data.hpp"
#include "damplqr/linalg.hpp"
#include "damplqr/report.hpp"

namespace damplqr {

// ordered_json keeps insertion order so emitted files are byte-stable.
using Json = nlohmann::ordered_json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// System file: {"schema_version":1, "A":[[..]], "B":[[..]], "Q":[[..]],
// "R":[[..]]}. Q and R are optional for consumers that only simulate.
SystemModel load_system(const std::string& path);
// Reads the Q/R entries of the same file; throws ConfigError when absent.
CostWeights load_weights(const std::string& path);

// Pool file: {"n_x":.., "n_u":.., "seed":.., "samples":[{"x":[..],
// "u":[..], "x_next":[..]}, ..]}.
Json pool_to_json(const SamplePool& pool);
SamplePool pool_from_json(const Json& j);
void save_pool(const SamplePool& pool, const std::string& path);
SamplePool load_pool(const std::string& path);

Json report_to_json(const SynthesisReport& report);
void save_report(const SynthesisReport& report, const std::string& path);
void save_trace_csv(const SynthesisReport& report, const std::string& path);

Json load_json(const std::string& path);
void save_json(const Json& j, const std::string& path);

}  // namespace damplqr
