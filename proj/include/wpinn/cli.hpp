#pragma once

// The `wpinn` command line: train, export, sweep, verify.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical
// failure (training abort or a failed verification suite).

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "wpinn/trainer.hpp"

namespace wpinn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// {experiment, entropy, E_T_ensemble, E_T_members[], best_loss_members[],
//  config_hash, wall_time_s}
nlohmann::json results_json(const trainer::TrainConfig& cfg, const trainer::EnsembleResult& ens);
// Throws ContractError when a field is missing, mistyped or non-finite.
void validate_results(const nlohmann::json& results);

}  // namespace wpinn::cli
