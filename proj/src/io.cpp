#include "gntd/io.hpp"

#include <fstream>
#include <set>

namespace gntd::io {

namespace {

void reject_unknown_keys(const Json& doc, const std::set<std::string>& allowed,
                         const std::string& what) {
    for (const auto& [key, _] : doc.items())
        if (!allowed.contains(key))
            throw ContractViolation(what + ": unknown key '" + key + "'");
}

const Json& field(const Json& doc, const char* key, const std::string& what) {
    if (!doc.contains(key))
        throw ContractViolation(what + ": missing field '" + key + "'");
    return doc.at(key);
}

} // namespace

Matrix matrix_from_json(const Json& doc) {
    const Json& rows = doc.is_object() ? field(doc, "phi", "matrix") : doc;
    require(rows.is_array() && !rows.empty(), "matrix: expected a non-empty 2-D array");
    const auto n = static_cast<Index>(rows.size());
    const auto m = static_cast<Index>(rows.at(0).size());
    Matrix out(n, m);
    for (Index i = 0; i < n; ++i) {
        const Json& row = rows.at(static_cast<std::size_t>(i));
        require(row.is_array() && static_cast<Index>(row.size()) == m,
                "matrix: ragged row " + std::to_string(i));
        for (Index j = 0; j < m; ++j)
            out(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    return out;
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

TabularMdp mdp_from_json(const Json& doc) {
    const std::string what = "MDP document";
    require(doc.is_object(), what + ": expected an object");
    reject_unknown_keys(doc, {"n_states", "n_actions", "discount", "r_max", "reward", "transition"},
                        what);
    const auto n_states = field(doc, "n_states", what).get<Index>();
    const auto n_actions = field(doc, "n_actions", what).get<Index>();
    require(n_states >= 1 && n_actions >= 1, what + ": sizes must be positive");

    const Matrix reward = matrix_from_json(field(doc, "reward", what));
    require(reward.rows() == n_states && reward.cols() == n_actions,
            what + ": reward shape mismatch");

    const Json& tr = field(doc, "transition", what);
    require(tr.is_array() && static_cast<Index>(tr.size()) == n_states,
            what + ": transition must have n_states entries");
    Matrix transition(n_states * n_actions, n_states);
    for (Index s = 0; s < n_states; ++s) {
        const Matrix block = matrix_from_json(tr.at(static_cast<std::size_t>(s)));
        require(block.rows() == n_actions && block.cols() == n_states,
                what + ": transition[" + std::to_string(s) + "] shape mismatch");
        transition.middleRows(s * n_actions, n_actions) = block;
    }
    return TabularMdp(transition, reward, field(doc, "discount", what).get<double>(),
                      field(doc, "r_max", what).get<double>());
}

Json mdp_to_json(const TabularMdp& mdp) {
    Json tr = Json::array();
    for (Index s = 0; s < mdp.n_states(); ++s)
        tr.push_back(matrix_to_json(mdp.transition().middleRows(s * mdp.n_actions(),
                                                               mdp.n_actions())));
    return Json{{"n_states", mdp.n_states()},   {"n_actions", mdp.n_actions()},
                {"discount", mdp.discount()},   {"r_max", mdp.r_max()},
                {"reward", matrix_to_json(mdp.reward())}, {"transition", std::move(tr)}};
}

Policy policy_from_json(const Json& doc) {
    if (doc.is_object()) {
        reject_unknown_keys(doc, {"probs"}, "policy document");
        return Policy(matrix_from_json(field(doc, "probs", "policy document")));
    }
    return Policy(matrix_from_json(doc));
}

Json policy_to_json(const Policy& policy) { return Json{{"probs", matrix_to_json(policy.probs())}}; }

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ContractViolation("'" + path.string() + "': " + e.what());
    }
}

void write_json(const Json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << doc.dump(2) << '\n';
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

TabularMdp load_mdp(const std::filesystem::path& path) { return mdp_from_json(read_json(path)); }

Policy load_policy(const std::filesystem::path& path) {
    return policy_from_json(read_json(path));
}

} // namespace gntd::io
