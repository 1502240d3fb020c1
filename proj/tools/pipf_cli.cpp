// pipf: run the filtering benchmarks and write per-step CSV results.

#include "pipf/harness.hpp"

#include <CLI11.hpp>

#include <array>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Command {
  CLI::App* app = nullptr;
  pipf::ExperimentConfig config;
  std::string config_file;
};

void add_run(CLI::App& root, const std::string& name, const std::string& help, Command& cmd) {
  cmd.app = root.add_subcommand(name, help);
  pipf::bind_config(*cmd.app, cmd.config);
  cmd.app->add_option("--config", cmd.config_file, "TOML/INI file with config fields (flags take precedence)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pipf::ConfigError("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Cli {
  CLI::App root{"Path integral particle filter benchmarks"};
  Command ou, sweep, nd, benes;
  CLI::App* validate = nullptr;
  std::uint64_t validate_seed = 1;

  Cli() {
    root.require_subcommand(1);
    ou.config = pipf::default_config("ou");
    sweep.config = pipf::default_config("ou");
    nd.config = pipf::default_config("linear_nd");
    benes.config = pipf::default_config("benes");
    add_run(root, "run-ou", "SIR, PIPF-zero and PIPF-LQR on the scalar OU model", ou);
    add_run(root, "run-h-sweep", "PIPF on the OU model for each window length in --h-list", sweep);
    add_run(root, "run-linear-nd", "SIR and PIPF on random stable systems for each dimension in --n-list", nd);
    add_run(root, "run-benes", "SIR, PIPF-zero and PIPF-iLQR on the Benes model", benes);
    validate = root.add_subcommand("validate", "run the invariant suite");
    validate->add_option("--seed", validate_seed, "base seed");
  }

  std::array<Command*, 4> commands() { return {&ou, &sweep, &nd, &benes}; }
};

// Mean mse over the final third of steps and mean final effective ratio, per estimator.
void print_summary(const pipf::ScenarioResult& result, std::size_t steps) {
  struct Acc {
    double mse = 0.0;
    std::size_t n = 0;
    double gamma = 0.0;
    std::size_t finals = 0;
  };
  std::map<std::string, Acc> acc;
  const std::size_t from = steps - steps / 3;
  for (const auto& r : result.rows) {
    auto& a = acc[r.estimator];
    if (r.step >= from) {
      a.mse += r.mse_mean;
      ++a.n;
    }
    if (r.step == steps) {
      a.gamma += r.effective_ratio;
      ++a.finals;
    }
  }
  for (const auto& [tag, a] : acc) {
    std::cout << tag << ": mse_mean(final third) " << a.mse / std::max<std::size_t>(a.n, 1) << ", final gamma "
              << a.gamma / std::max<std::size_t>(a.finals, 1) << '\n';
  }
  if (!result.distances.empty()) {
    std::map<std::pair<double, std::string>, std::pair<double, int>> l1;
    for (const auto& d : result.distances) {
      auto& e = l1[{d.time, d.source}];
      e.first += d.l1;
      ++e.second;
    }
    for (const auto& [key, e] : l1) {
      std::cout << "L1 " << key.second << " t=" << key.first << ": " << e.first / e.second << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  // Flags are parsed twice when --config is given: once to find the file, then
  // again on top of the file's values so that flags take precedence.
  auto cli = std::make_unique<Cli>();
  try {
    cli->root.parse(argc, argv);
    for (std::size_t i = 0; i < 4; ++i) {
      const Command* cmd = cli->commands()[i];
      if (!cmd->app->parsed() || cmd->config_file.empty()) continue;
      const std::string text = read_file(cmd->config_file);
      auto again = std::make_unique<Cli>();
      Command* target = again->commands()[i];
      target->config = pipf::parse_config(text, target->config);
      again->root.parse(argc, argv);
      cli = std::move(again);
      break;
    }
  } catch (const CLI::CallForHelp& e) {
    return cli->root.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli->root.exit(e);
  } catch (const CLI::ParseError& e) {
    cli->root.exit(e);
    return kConfigError;
  } catch (const pipf::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  auto& ou = cli->ou;
  auto& sweep = cli->sweep;
  auto& nd = cli->nd;
  auto& benes = cli->benes;
  CLI::App* validate = cli->validate;
  const std::uint64_t validate_seed = cli->validate_seed;

  try {
    if (validate->parsed()) {
      bool ok = true;
      for (const auto& c : pipf::run_invariant_suite(validate_seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        ok = ok && c.passed;
      }
      return ok ? 0 : kNumericalError;
    }

    for (Command* cmd : {&ou, &sweep, &nd, &benes}) {
      if (!cmd->app->parsed()) continue;
      const auto& c = cmd->config;
      pipf::validate_config(c);
      pipf::ScenarioResult result;
      if (cmd == &ou) {
        result = pipf::run_ou(c);
      } else if (cmd == &sweep) {
        result = pipf::run_h_sweep(c, c.h_list);
      } else if (cmd == &nd) {
        result = pipf::run_linear_nd(c, c.n_list);
      } else {
        result = pipf::run_benes(c);
      }
      pipf::write_result_files(result, c.out);
      print_summary(result, c.steps);
      std::cout << "wrote " << c.out << '\n';
    }
    return 0;
  } catch (const pipf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const pipf::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}
