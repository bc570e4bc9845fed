#pragma once

// Experiment configuration files: flat `key = value` lines under the
// sections [problem], [network], [training] and [sampling]. Keys mirror the
// TrainConfig field names. A value written as `[a, b, ...]` is a list, which
// only `sweep` accepts.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wpinn/trainer.hpp"

namespace wpinn::config {

struct Entry {
  std::string section;
  std::string key;
  std::string value;
};

struct ConfigText {
  std::vector<Entry> entries;

  const Entry* find(std::string_view key) const;
  // Replaces an existing value or appends the key under its own section.
  void set(std::string_view key, std::string value);
};

// Throws ConfigError naming the offending line or key. Comments are whole
// lines starting with # or ;.
ConfigText parse_text(std::string_view text);
ConfigText read_file(const std::string& path);

// Section a key belongs to; throws ConfigError for unknown keys.
std::string_view section_of(std::string_view key);

bool is_list(std::string_view value);
std::vector<std::string> split_list(std::string_view value);

// Every min-max loop hyperparameter plus the experiment must be present.
inline constexpr std::string_view kRequiredKeys[] = {
    "experiment", "N_int", "N_tb", "N_ini", "N_min", "N_max",
    "N_c",        "N_ep",  "tau_min", "tau_max", "rho", "r"};

// Validated TrainConfig; list values are rejected.
trainer::TrainConfig to_train_config(const ConfigText& text);

// Canonical text with every key; parses back to the same TrainConfig.
std::string serialize(const trainer::TrainConfig& cfg);

// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const trainer::TrainConfig& cfg);

// Optional runner key: largest allowed sweep product.
inline constexpr std::size_t kDefaultSweepCap = 64;
std::size_t sweep_cap(const ConfigText& text);

struct SweepCell {
  trainer::TrainConfig cfg;
  std::vector<std::pair<std::string, std::string>> assignment;  // swept key -> value
};

// Cartesian product of the list-valued keys, in file order with the last key
// varying fastest. Throws ConfigError when no key is a list or the product
// exceeds `cap`.
std::vector<SweepCell> expand_sweep(const ConfigText& text, std::size_t cap);

}  // namespace wpinn::config
