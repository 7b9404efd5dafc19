#include "srhc/model_io.hpp"
#include "srhc/errors.hpp"

#include <fstream>

namespace srhc {
namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw Error(ErrorKind::Parse, std::string("missing key '") + key + "'");
    }
    return j.at(key);
}

template <typename T>
T number(const nlohmann::json& j, const char* name)
{
    if (!j.is_number()) {
        throw Error(ErrorKind::Parse, std::string(name) + " must be a number");
    }
    return j.get<T>();
}

std::vector<Matrix> weight_list(const nlohmann::json& j, const char* name, int N)
{
    std::vector<Matrix> out;
    // A single matrix (not wrapped in a list) is accepted as shorthand.
    if (j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() && j.front().front().is_number()) {
        out.assign(static_cast<std::size_t>(N), matrix_from_json(j, name));
        return out;
    }
    if (!j.is_array() || j.empty()) {
        throw Error(ErrorKind::Parse, std::string(name) + " must be a matrix or a non-empty list of matrices");
    }
    for (const auto& item : j) {
        out.push_back(matrix_from_json(item, name));
    }
    if (out.size() == 1) {
        out.assign(static_cast<std::size_t>(N), out.front());
    }
    if (static_cast<int>(out.size()) != N) {
        throw Error(ErrorKind::Parse, std::string(name) + " must list 1 or N matrices");
    }
    return out;
}

}  // namespace

Matrix matrix_from_json(const nlohmann::json& j, const char* name)
{
    if (j.is_number()) {
        return Matrix::Constant(1, 1, j.get<double>());
    }
    if (!j.is_array()) {
        throw Error(ErrorKind::Parse, std::string(name) + " must be a nested array");
    }
    if (j.empty()) {
        return Matrix(0, 0);
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().is_array() ? j.front().size() : 0);
    if (cols == 0) {
        throw Error(ErrorKind::Parse, std::string(name) + " rows must be non-empty arrays");
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(ErrorKind::Parse, std::string(name) + " is ragged");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = number<double>(row[static_cast<std::size_t>(c)], name);
        }
    }
    return m;
}

Vector vector_from_json(const nlohmann::json& j, const char* name)
{
    if (!j.is_array()) {
        throw Error(ErrorKind::Parse, std::string(name) + " must be an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = number<double>(j[i], name);
    }
    return v;
}

nlohmann::json matrix_to_json(const Matrix& m)
{
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        out.push_back(std::move(row));
    }
    return out;
}

nlohmann::json vector_to_json(const Vector& v)
{
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

ProblemDefinition parse_problem(const nlohmann::json& j)
{
    ProblemDefinition def;
    SystemModel& m = def.model;
    m.A = matrix_from_json(require(j, "A"), "A");
    m.B = matrix_from_json(require(j, "B"), "B");
    m.C = matrix_from_json(require(j, "C"), "C");
    m.sigma_w = matrix_from_json(require(j, "sigma_w"), "sigma_w");
    m.sigma_v = matrix_from_json(require(j, "sigma_v"), "sigma_v");
    m.sigma_x0 = matrix_from_json(require(j, "sigma_x0"), "sigma_x0");
    m.xhat0 = j.contains("xhat0") ? vector_from_json(j.at("xhat0"), "xhat0") : Vector::Zero(m.A.rows());

    const auto& split = require(j, "split");
    def.n1 = number<int>(require(split, "n1"), "split.n1");
    def.n2 = number<int>(require(split, "n2"), "split.n2");
    if (split.contains("kappa")) {
        def.kappa = number<int>(split.at("kappa"), "split.kappa");
    }

    const auto& h = require(j, "horizon");
    def.horizon.N = number<int>(require(h, "N"), "horizon.N");
    def.horizon.Nc = number<int>(require(h, "Nc"), "horizon.Nc");
    def.horizon.u_max = number<double>(require(h, "u_max"), "horizon.u_max");
    def.horizon.phi_max = number<double>(require(h, "phi_max"), "horizon.phi_max");
    if (def.horizon.N < 1) {
        throw Error(ErrorKind::Parse, "horizon.N must be positive");
    }

    const auto& w = require(j, "weights");
    def.weights.Wx = weight_list(require(w, "Wx"), "weights.Wx", def.horizon.N);
    def.weights.WxN = w.contains("WxN") ? matrix_from_json(w.at("WxN"), "weights.WxN") : def.weights.Wx.back();
    def.weights.Wu = weight_list(require(w, "Wu"), "weights.Wu", def.horizon.N);
    return def;
}

nlohmann::json load_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

ProblemDefinition load_problem(const std::filesystem::path& path)
{
    return parse_problem(load_json_file(path));
}

nlohmann::json problem_to_json(const ProblemDefinition& def)
{
    nlohmann::json j;
    j["A"] = matrix_to_json(def.model.A);
    j["B"] = matrix_to_json(def.model.B);
    j["C"] = matrix_to_json(def.model.C);
    j["sigma_w"] = matrix_to_json(def.model.sigma_w);
    j["sigma_v"] = matrix_to_json(def.model.sigma_v);
    j["sigma_x0"] = matrix_to_json(def.model.sigma_x0);
    j["xhat0"] = vector_to_json(def.model.xhat0);
    j["split"] = {{"n1", def.n1}, {"n2", def.n2}};
    if (def.kappa) {
        j["split"]["kappa"] = *def.kappa;
    }
    j["horizon"] = {{"N", def.horizon.N},
                    {"Nc", def.horizon.Nc},
                    {"u_max", def.horizon.u_max},
                    {"phi_max", def.horizon.phi_max}};
    nlohmann::json wx = nlohmann::json::array();
    for (const auto& m : def.weights.Wx) {
        wx.push_back(matrix_to_json(m));
    }
    nlohmann::json wu = nlohmann::json::array();
    for (const auto& m : def.weights.Wu) {
        wu.push_back(matrix_to_json(m));
    }
    j["weights"] = {{"Wx", wx}, {"WxN", matrix_to_json(def.weights.WxN)}, {"Wu", wu}};
    return j;
}

}  // namespace srhc
