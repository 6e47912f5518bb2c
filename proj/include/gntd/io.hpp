#pragma once

#include "gntd/mdp.hpp"

#include <json.hpp>

#include <filesystem>

namespace gntd::io {

using Json = nlohmann::json;

// MDP documents: {"n_states", "n_actions", "discount", "r_max",
// "reward": [S][A], "transition": [S][A][S]}. All invariants are checked by
// the TabularMdp constructor.
TabularMdp mdp_from_json(const Json& doc);
Json mdp_to_json(const TabularMdp& mdp);

// Policy documents: {"probs": [S][A]} or a bare [S][A] array.
Policy policy_from_json(const Json& doc);
Json policy_to_json(const Policy& policy);

/// Bare 2-D array, or {"phi": [[...]]}.
Matrix matrix_from_json(const Json& doc);
Json matrix_to_json(const Matrix& m);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& doc, const std::filesystem::path& path);

TabularMdp load_mdp(const std::filesystem::path& path);
Policy load_policy(const std::filesystem::path& path);

} // namespace gntd::io
