// Command-line front end: run one experiment, verify a manifest, or dump a kernel slice.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fdlab/cli.hpp"
#include "fdlab/field_io.hpp"
#include "fdlab/kernel.hpp"

namespace cli = fdlab::cli;

int main(int argc, char** argv) {
  CLI::App app{"fdlab: fractional diffusion experiments"};
  app.set_version_flag("--version", cli::code_version());
  app.require_subcommand(1);

  std::string config_path, output, manifest_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Override the output directory");
  run->add_option("--seed", seed, "Override the seed");

  auto* verify = app.add_subcommand("verify", "Run every experiment of a manifest");
  verify->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);

  double alpha = 0.5, t = 1.0, L = 32.0;
  int n = 1, N = 512;
  std::string kernel_out;
  bool waive = false;
  auto* dump = app.add_subcommand("dump-kernel", "Write the periodised kernel slice K_t on a grid");
  dump->add_option("alpha", alpha, "Order in (0,1]")->required();
  dump->add_option("t", t, "Time")->required();
  dump->add_option("n", n, "Dimension (1 or 2)")->required();
  dump->add_option("L", L, "Box length")->required();
  dump->add_option("N", N, "Points per axis")->required();
  dump->add_option("-o,--output", kernel_out, "Output file (.csv or binary); CSV to stdout if absent");
  dump->add_flag("--waive-guard", waive, "Skip the resolvability guard");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cli::ExperimentConfig cfg = cli::load_config(config_path);
      if (!output.empty()) cfg.output_dir = output;
      if (seed) cfg.seed = seed;
      auto r = cli::run(cfg);
      std::cout << cfg.name << ": " << (r.exit_code == cli::kSuccess ? "PASS" : r.exit_code == cli::kAssertionFailure ? "FAIL" : "ERROR")
                << "  " << r.message << "\n";
      for (const auto& f : r.files) std::cout << "  " << f << "\n";
      return r.exit_code;
    }
    if (*verify) return cli::verify_all(manifest_path, std::cout);
    if (*dump) {
      auto grid = fdlab::make_grid(n, L, N, 1.0, 2);
      fdlab::SpectralKernelOptions opts;
      opts.waive_guard = waive;
      auto k = fdlab::spectral_kernel(alpha, t, grid, opts);
      if (kernel_out.empty()) {
        fdlab::write_field_csv(std::cout, k.values);
      } else {
        fdlab::save_field(kernel_out, k.values);
      }
      return cli::kSuccess;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kConfigError;
  } catch (const fdlab::ResolutionError& e) {
    std::cerr << "error: " << e.what() << " (smallest resolvable value " << e.attainable() << ")\n";
    return cli::kConfigError;
  } catch (const fdlab::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kConfigError;
  } catch (const fdlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kAssertionFailure;
  }
  return cli::kSuccess;
}
