// Command-line front end: run experiment sweeps, inspect built-in specs,
// validate spec files, and evaluate the analytic oracles.
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ezag/harness.hpp"
#include "ezag/oracles.hpp"

namespace {

int cmd_run(const std::string& ref, const ezag::RunOverrides& ov) {
  ezag::ExperimentSpec spec = ezag::resolve_spec(ref);
  const ezag::ExperimentResult result = ezag::run_experiment(spec, ov);
  std::printf("spec %s: wrote %zu files to %s\n", result.spec.name.c_str(),
              result.files.size(), result.out_dir.c_str());
  for (const std::string& f : result.files) std::printf("  %s\n", f.c_str());
  return 0;
}

int cmd_list_specs() {
  for (const std::string& name : ezag::builtin_spec_names()) {
    ezag::ExperimentSpec s;
    ezag::find_builtin_spec(name, s);
    std::string ns;
    for (size_t i = 0; i < s.n_list.size(); ++i)
      ns += (i ? "," : "") + std::to_string(s.n_list[i]);
    std::printf("%-10s kind=%-8s n=%-28s trials=%d\n", name.c_str(),
                ezag::to_string(s.kind), ns.c_str(), s.trials);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  ezag::ExperimentSpec spec = ezag::load_spec_file(path);
  spec.validate();
  std::printf("%s: OK (spec '%s')\n", path.c_str(), spec.name.c_str());
  return 0;
}

int cmd_oracle(const std::string& name, const std::vector<std::string>& args) {
  auto need = [&](size_t k) {
    if (args.size() != k)
      throw ezag::ConfigError("oracle " + name + " expects " + std::to_string(k) +
                              " argument(s)");
  };
  if (name == "coupon") {
    need(1);
    std::printf("%.12g\n", ezag::coupon_expected_draws(std::stoi(args[0])));
    return 0;
  }
  if (name == "markov") {
    need(1);
    std::vector<std::vector<int>> adj;
    if (args[0] == "path2") adj = {{1}, {0}};
    else if (args[0] == "cycle4") adj = {{1, 3}, {0, 2}, {1, 3}, {0, 2}};
    else if (args[0] == "clique4")
      adj = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    else
      throw ezag::ConfigError("oracle markov: expected path2, cycle4 or clique4");
    std::printf("%.12g\n", ezag::markov_cover_expectation(adj, 0));
    return 0;
  }
  if (name == "hier-messages") {
    need(2);
    std::printf("%" PRId64 "\n",
                ezag::predicted_hier_messages(std::stoi(args[0]), std::stoi(args[1])));
    return 0;
  }
  if (name == "gossip") {
    need(2);
    std::printf("%.12g\n", ezag::gossip_projection(std::stoi(args[0]), std::stod(args[1])));
    return 0;
  }
  throw ezag::ConfigError("unknown oracle '" + name +
                          "' (try coupon, markov, hier-messages, gossip)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-free aggregation simulator"};
  app.require_subcommand(1);

  std::string run_ref;
  ezag::RunOverrides ov;
  CLI::App* run = app.add_subcommand("run", "Run a spec file or built-in spec");
  run->add_option("spec", run_ref, "Spec file path or built-in name")->required();
  run->add_option("--trials", ov.trials, "Override trials per sweep point");
  run->add_option("--jobs", ov.jobs, "Worker threads (0 = hardware)");
  uint64_t seed_opt = 0;
  CLI::Option* seed_flag = run->add_option("--seed", seed_opt, "Override base seed");
  run->add_option("--out", ov.out, "Output directory");
  run->add_flag("--full", ov.full, "Unlock sweep points beyond N=1000");

  CLI::App* list = app.add_subcommand("list-specs", "Print the built-in specs");

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "Parse and validate a spec file");
  validate->add_option("spec", validate_path, "Spec file path")->required();

  std::string oracle_name;
  std::vector<std::string> oracle_args;
  CLI::App* oracle = app.add_subcommand("oracle", "Evaluate an analytic oracle");
  oracle->add_option("name", oracle_name, "coupon | markov | hier-messages | gossip")
      ->required();
  oracle->add_option("args", oracle_args, "Oracle arguments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fprintf(stderr, "%s", app.help().c_str());
    return 2;
  }

  try {
    if (run->parsed()) {
      ov.has_seed = seed_flag->count() > 0;
      ov.seed = seed_opt;
      return cmd_run(run_ref, ov);
    }
    if (list->parsed()) return cmd_list_specs();
    if (validate->parsed()) return cmd_validate(validate_path);
    if (oracle->parsed()) return cmd_oracle(oracle_name, oracle_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
