#pragma once

#include "srhc/sysmodel.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>

namespace srhc {

/// Everything a model file describes: plant, split sizes, horizon and weights.
struct ProblemDefinition {
    SystemModel model;
    int n1 = 0;
    int n2 = 0;
    std::optional<int> kappa;
    HorizonConfig horizon;
    CostWeights weights;
};

Matrix matrix_from_json(const nlohmann::json& j, const char* name);
Vector vector_from_json(const nlohmann::json& j, const char* name);
nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);

/// Throws Error(Parse) on malformed input, Error(Io) when the file can't be read.
ProblemDefinition parse_problem(const nlohmann::json& j);
ProblemDefinition load_problem(const std::filesystem::path& path);
nlohmann::json problem_to_json(const ProblemDefinition& def);

nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace srhc
