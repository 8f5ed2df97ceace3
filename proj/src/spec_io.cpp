#include "avar/spec_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avar/error.hpp"

namespace avar {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* name) {
    if (!j.contains(name)) throw Error(ErrorKind::ParseError, std::string("missing field '") + name + "'");
    return j.at(name);
}

Vector to_vector(const json& j, const char* what) {
    if (!j.is_array()) throw Error(ErrorKind::ParseError, std::string(what) + " must be a list");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw Error(ErrorKind::ParseError, std::string(what) + " has a non-number");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

Matrix to_matrix(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw Error(ErrorKind::ParseError, std::string(what) + " must be a list of rows");
    const std::size_t cols = j[0].size();
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw Error(ErrorKind::DimensionMismatch, std::string(what) + " has ragged rows");
        m.row(static_cast<Index>(i)) = to_vector(j[i], what);
    }
    return m;
}

Start parse_start(const json& j, Index n_states) {
    if (!j.contains("start")) return Start::from_stationary();
    const json& s = j.at("start");
    if (s.is_string() && s.get<std::string>() == "stationary") return Start::from_stationary();
    if (s.is_number_integer()) {
        const auto x = s.get<Index>();
        if (x < 0 || x >= n_states)
            throw Error(ErrorKind::InvalidStart, "start state " + std::to_string(x) + " out of range");
        return Start::at(x);
    }
    throw Error(ErrorKind::InvalidStart, "start must be \"stationary\" or a state index");
}

std::optional<FeatureMatrix> parse_phi(const json& j, Index rows) {
    if (!j.contains("Phi")) return std::nullopt;
    Matrix phi = to_matrix(j.at("Phi"), "Phi");
    if (phi.rows() != rows)
        throw Error(ErrorKind::DimensionMismatch, "Phi must have one row per state");
    if (j.contains("d") && field(j, "d").get<Index>() != phi.cols())
        throw Error(ErrorKind::DimensionMismatch, "d does not match the columns of Phi");
    return FeatureMatrix::rescaled(std::move(phi));
}

Index parse_count(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number_integer() || v.get<Index>() < 1)
        throw Error(ErrorKind::ParseError, std::string(name) + " must be a positive integer");
    return v.get<Index>();
}

ChainSpec parse_chain(const json& j) {
    const Index n = parse_count(j, "states");
    Matrix p = to_matrix(field(j, "P"), "P");
    if (p.rows() != n || p.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "P must be states x states");
    const json& fj = field(j, "f");
    Matrix f = (fj.is_array() && !fj.empty() && fj[0].is_array()) ? to_matrix(fj, "f")
                                                                   : Matrix(to_vector(fj, "f"));
    if (f.rows() != n) throw Error(ErrorKind::DimensionMismatch, "f must have one entry per state");
    return ChainSpec{TransitionMatrix(std::move(p)), StateFunction(std::move(f)), parse_start(j, n),
                     parse_phi(j, n)};
}

MDPSpec parse_mdp(const json& j) {
    const Index s = parse_count(j, "states");
    const Index a = parse_count(j, "actions");
    const json& pj = field(j, "p");
    if (!pj.is_array() || static_cast<Index>(pj.size()) != a)
        throw Error(ErrorKind::DimensionMismatch, "p must hold one S x S block per action");
    std::vector<Matrix> blocks;
    for (const auto& b : pj) blocks.push_back(to_matrix(b, "p"));
    Matrix r = to_matrix(field(j, "r"), "r");
    Matrix mu = to_matrix(field(j, "mu"), "mu");
    if (r.rows() != s || r.cols() != a || mu.rows() != s || mu.cols() != a)
        throw Error(ErrorKind::DimensionMismatch, "r and mu must be states x actions");
    return MDPSpec{MDP(std::move(blocks), std::move(r)), Policy(std::move(mu)),
                   parse_start(j, s * a), parse_phi(j, s * a)};
}

}  // namespace

ProblemSpec parse_problem(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    try {
        if (!j.is_object()) throw Error(ErrorKind::ParseError, "spec must be an object");
        if (j.contains("actions")) return parse_mdp(j);
        return parse_chain(j);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ProblemSpec load_problem(const std::filesystem::path& path) {
    return parse_problem(read_text_file(path));
}

}  // namespace avar
