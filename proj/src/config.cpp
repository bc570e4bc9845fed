#include "wpinn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wpinn/errors.hpp"

namespace wpinn::config {

namespace {

struct KeyInfo {
  std::string_view key;
  std::string_view section;
};

constexpr KeyInfo kKeys[] = {
    {"experiment", "problem"},      {"T", "problem"},
    {"entropy", "problem"},         {"arch_theta", "network"},
    {"arch_eta", "network"},        {"activation_theta", "network"},
    {"activation_eta", "network"},  {"cutoff", "network"},
    {"cutoff_time", "network"},     {"N_min", "training"},
    {"N_max", "training"},          {"N_c", "training"},
    {"N_ep", "training"},           {"tau_min", "training"},
    {"tau_max", "training"},        {"rho", "training"},
    {"r", "training"},              {"optimizer", "training"},
    {"ensemble_size", "training"},  {"seed", "training"},
    {"sweep_cap", "training"},      {"N_int", "sampling"},
    {"N_tb", "sampling"},           {"N_ini", "sampling"},
    {"generator", "sampling"},
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const Entry& e) { return " (" + e.key + " in [" + e.section + "])"; }

long to_long(const Entry& e) {
  long v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError("'" + e.key + "' expects an integer, got '" + e.value + "'");
  }
  return v;
}

double to_double(const Entry& e) {
  double v = 0.0;
  const char* end = e.value.data() + e.value.size();
  const auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError("'" + e.key + "' expects a number, got '" + e.value + "'");
  }
  return v;
}

bool to_bool(const Entry& e) {
  const std::string& v = e.value;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + e.key + "' expects true or false, got '" + v + "'");
}

void apply(trainer::TrainConfig& cfg, const Entry& e) {
  const std::string& k = e.key;
  try {
    if (k == "experiment") cfg.experiment = reference::parse_experiment(e.value);
    else if (k == "T") cfg.T = to_double(e);
    else if (k == "entropy") cfg.entropy = residual::parse_entropy(e.value);
    else if (k == "arch_theta") cfg.arch_theta = trainer::parse_layers(e.value);
    else if (k == "arch_eta") cfg.arch_eta = trainer::parse_layers(e.value);
    else if (k == "activation_theta") cfg.activation_theta = network::parse_activation(e.value);
    else if (k == "activation_eta") cfg.activation_eta = network::parse_activation(e.value);
    else if (k == "cutoff") cfg.cutoff = network::parse_cutoff_form(e.value);
    else if (k == "cutoff_time") cfg.cutoff_time = to_bool(e);
    else if (k == "N_min") cfg.N_min = static_cast<int>(to_long(e));
    else if (k == "N_max") cfg.N_max = static_cast<int>(to_long(e));
    else if (k == "N_c") cfg.N_c = static_cast<int>(to_long(e));
    else if (k == "N_ep") cfg.N_ep = to_long(e);
    else if (k == "tau_min") cfg.tau_min = to_double(e);
    else if (k == "tau_max") cfg.tau_max = to_double(e);
    else if (k == "rho") cfg.rho = to_double(e);
    else if (k == "r") cfg.r = to_long(e);
    else if (k == "optimizer") cfg.optimizer = trainer::parse_optimizer(e.value);
    else if (k == "ensemble_size") cfg.ensemble_size = static_cast<int>(to_long(e));
    else if (k == "seed") {
      const long s = to_long(e);
      if (s < 0) throw ConfigError("seed must be nonnegative");
      cfg.seed = static_cast<std::uint64_t>(s);
    }
    else if (k == "N_int") cfg.N_int = to_long(e);
    else if (k == "N_tb") cfg.N_tb = to_long(e);
    else if (k == "N_ini") cfg.N_ini = to_long(e);
    else if (k == "generator") cfg.generator = sampler::parse_generator(e.value);
    else if (k == "sweep_cap") to_long(e);
    else throw ConfigError("unknown key '" + k + "'");
  } catch (const ConfigError& err) {
    throw ConfigError(err.what() + where(e));
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const Entry* ConfigText::find(std::string_view key) const {
  for (const Entry& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void ConfigText::set(std::string_view key, std::string value) {
  for (Entry& e : entries) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  entries.push_back({std::string(section_of(key)), std::string(key), std::move(value)});
}

std::string_view section_of(std::string_view key) {
  for (const KeyInfo& k : kKeys) {
    if (k.key == key) return k.section;
  }
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

ConfigText parse_text(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ConfigText out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
    if (section != "problem" && section != "network" && section != "training" &&
        section != "sampling") {
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      const std::string at = " in [" + section + "]";
      if (!node.empty()) throw ConfigError("nested key '" + key + "'" + at);
      const std::string value = node.data();
      if (value.empty()) throw ConfigError("empty value for '" + key + "'" + at);
      std::string_view expected;
      try {
        expected = section_of(key);
      } catch (const ConfigError&) {
        throw ConfigError("unknown key '" + key + "'" + at);
      }
      if (expected != section) {
        throw ConfigError("key '" + key + "' belongs in [" + std::string(expected) + "], found" + at);
      }
      if (out.find(key)) throw ConfigError("duplicate key '" + key + "'");
      out.entries.push_back({section, key, value});
    }
  }
  return out;
}

ConfigText read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

bool is_list(std::string_view value) {
  value = trim(value);
  return !value.empty() && value.front() == '[';
}

std::vector<std::string> split_list(std::string_view value) {
  value = trim(value);
  if (!is_list(value) || value.back() != ']') {
    throw ConfigError("malformed list '" + std::string(value) + "'");
  }
  std::vector<std::string> items;
  std::string_view body = value.substr(1, value.size() - 2);
  while (true) {
    const auto comma = body.find(',');
    const std::string_view item = trim(body.substr(0, comma));
    if (item.empty()) throw ConfigError("empty list item in '" + std::string(value) + "'");
    items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    body = body.substr(comma + 1);
  }
  return items;
}

trainer::TrainConfig to_train_config(const ConfigText& text) {
  for (std::string_view key : kRequiredKeys) {
    if (!text.find(key)) throw ConfigError("missing required key '" + std::string(key) + "'");
  }
  trainer::TrainConfig cfg;
  for (const Entry& e : text.entries) {
    if (is_list(e.value)) {
      throw ConfigError("list value for '" + e.key + "' is only allowed in sweeps" + where(e));
    }
    apply(cfg, e);
  }
  cfg.validate();
  return cfg;
}

std::string serialize(const trainer::TrainConfig& cfg) {
  std::ostringstream out;
  out << "[problem]\n"
      << "experiment = " << reference::to_string(cfg.experiment) << '\n';
  if (cfg.T) out << "T = " << num(*cfg.T) << '\n';
  out << "entropy = " << residual::to_string(cfg.entropy) << "\n\n"
      << "[network]\n"
      << "arch_theta = " << trainer::to_string(cfg.arch_theta) << '\n'
      << "arch_eta = " << trainer::to_string(cfg.arch_eta) << '\n'
      << "activation_theta = " << network::to_string(cfg.activation_theta) << '\n'
      << "activation_eta = " << network::to_string(cfg.activation_eta) << '\n'
      << "cutoff = " << network::to_string(cfg.cutoff) << '\n'
      << "cutoff_time = " << (cfg.cutoff_time ? "true" : "false") << "\n\n"
      << "[training]\n"
      << "N_min = " << cfg.N_min << '\n'
      << "N_max = " << cfg.N_max << '\n'
      << "N_c = " << cfg.N_c << '\n'
      << "N_ep = " << cfg.N_ep << '\n'
      << "tau_min = " << num(cfg.tau_min) << '\n'
      << "tau_max = " << num(cfg.tau_max) << '\n'
      << "rho = " << num(cfg.rho) << '\n'
      << "r = " << cfg.r << '\n'
      << "optimizer = " << trainer::to_string(cfg.optimizer) << '\n'
      << "ensemble_size = " << cfg.ensemble_size << '\n'
      << "seed = " << cfg.seed << "\n\n"
      << "[sampling]\n"
      << "N_int = " << cfg.N_int << '\n'
      << "N_tb = " << cfg.N_tb << '\n'
      << "N_ini = " << cfg.N_ini << '\n'
      << "generator = " << sampler::to_string(cfg.generator) << '\n';
  return out.str();
}

std::string config_hash(const trainer::TrainConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t sweep_cap(const ConfigText& text) {
  const Entry* e = text.find("sweep_cap");
  if (!e) return kDefaultSweepCap;
  const long v = to_long(*e);
  if (v < 1) throw ConfigError("sweep_cap must be at least 1");
  return static_cast<std::size_t>(v);
}

std::vector<SweepCell> expand_sweep(const ConfigText& text, std::size_t cap) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::size_t product = 1;
  for (const Entry& e : text.entries) {
    if (!is_list(e.value)) continue;
    auto items = split_list(e.value);
    product *= items.size();
    if (product > cap) {
      throw ConfigError("sweep has more than " + std::to_string(cap) + " combinations");
    }
    axes.emplace_back(e.key, std::move(items));
  }
  if (axes.empty()) throw ConfigError("sweep needs at least one list-valued key");

  std::vector<SweepCell> cells;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0; n < product; ++n) {
    ConfigText cell = text;
    SweepCell out;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      cell.set(axes[a].first, axes[a].second[idx[a]]);
      out.assignment.emplace_back(axes[a].first, axes[a].second[idx[a]]);
    }
    out.cfg = to_train_config(cell);
    cells.push_back(std::move(out));
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
    }
  }
  return cells;
}

}  // namespace wpinn::config
