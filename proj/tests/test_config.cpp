#include <doctest.h>

#include <string>

#include "wpinn/config.hpp"
#include "wpinn/errors.hpp"

using namespace wpinn;

namespace {

const char* kBase = R"(# comment
[problem]
experiment = moving
entropy = square

[network]
arch_theta = 12x3
activation_theta = tanh

[training]
N_min = 1
N_max = 4
N_c = 8
N_ep = 50
tau_min = 0.01
tau_max = 0.02
; whole-line comment
rho = 5
r = 25
optimizer = sgd

[sampling]
N_int = 512
N_tb = 128
N_ini = 128
generator = sobol
)";

std::string without(std::string text, const std::string& line) {
  text.erase(text.find(line), line.size());
  return text;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parse into a training config") {
    const auto cfg = config::to_train_config(config::parse_text(kBase));
    CHECK(cfg.experiment == reference::Experiment::Moving);
    CHECK(cfg.entropy == residual::EntropyKind::Square);
    CHECK(cfg.arch_theta.width == 12);
    CHECK(cfg.arch_theta.depth == 3);
    CHECK(cfg.N_ep == 50);
    CHECK(cfg.rho == 5.0);
    CHECK(cfg.optimizer == trainer::Optimizer::Sgd);
    CHECK(cfg.generator == sampler::Generator::Sobol);
    CHECK(cfg.activation_theta == network::Activation::Tanh);
  }

  TEST_CASE("canonical text round trip and stable hash") {
    const auto cfg = config::to_train_config(config::parse_text(kBase));
    const std::string text = config::serialize(cfg);
    const auto back = config::to_train_config(config::parse_text(text));
    CHECK(config::serialize(back) == text);
    CHECK(config::config_hash(back) == config::config_hash(cfg));
    CHECK(config::config_hash(cfg).size() == 16);
    auto other = cfg;
    other.N_ep = 51;
    CHECK(config::config_hash(other) != config::config_hash(cfg));
  }

  TEST_CASE("errors name the problem") {
    CHECK_THROWS_AS(config::to_train_config(config::parse_text(without(kBase, "N_ep = 50\n"))), ConfigError);
    CHECK_THROWS_AS(config::parse_text(std::string(kBase) + "bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_text(std::string(kBase) + "N_ep = 2\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_text("[training]\nexperiment = moving\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_text("[weird]\nN_ep = 1\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_text("[training]\nN_ep\n"), ConfigError);
    try {
      config::parse_text("[training]\nN_ep = 3\nfoo\n");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    try {
      config::parse_text("[training]\nN_ep = 3\nfoo = 1\n");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("'foo'") != std::string::npos);
    }
    CHECK_THROWS_AS(config::parse_text("N_ep = 3\n"), ConfigError);
    auto text = config::parse_text(kBase);
    text.set("N_ep", "-4");
    CHECK_THROWS_AS(config::to_train_config(text), ConfigError);
    text.set("N_ep", "[1, 2]");
    CHECK_THROWS_AS(config::to_train_config(text), ConfigError);
  }

  TEST_CASE("list values and sweeps") {
    CHECK(config::is_list("[a, b]"));
    CHECK_FALSE(config::is_list("a"));
    CHECK(config::split_list("[0.01, 0.02 ,0.05]") == std::vector<std::string>{"0.01", "0.02", "0.05"});
    auto text = config::parse_text(kBase);
    CHECK_THROWS_AS(config::expand_sweep(text, 64), ConfigError);
    text.set("tau_min", "[0.01, 0.02]");
    text.set("N_c", "[4, 8]");
    const auto cells = config::expand_sweep(text, 64);
    REQUIRE(cells.size() == 4);
    // File order, last key fastest.
    CHECK(cells[0].assignment[0].first == "N_c");
    CHECK(cells[0].cfg.N_c == 4);
    CHECK(cells[0].cfg.tau_min == 0.01);
    CHECK(cells[1].cfg.N_c == 4);
    CHECK(cells[1].cfg.tau_min == 0.02);
    CHECK(cells[3].cfg.N_c == 8);
    CHECK_THROWS_AS(config::expand_sweep(text, 3), ConfigError);
    CHECK(config::sweep_cap(text) == config::kDefaultSweepCap);
    text.set("sweep_cap", "2");
    CHECK(config::sweep_cap(text) == 2);
  }

  TEST_CASE("desk configs load") {
    for (const char* name : {"standing", "moving", "rarefaction", "sine"}) {
      const std::string path = std::string(WPINN_SOURCE_DIR) + "/configs/" + name + "_desk.cfg";
      const auto cfg = config::to_train_config(config::read_file(path));
      CHECK(reference::to_string(cfg.experiment) == name);
      CHECK(cfg.ensemble_size == 3);
    }
    CHECK_THROWS_AS(config::read_file("/nonexistent/x.cfg"), ConfigError);
  }
}
