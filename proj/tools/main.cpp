#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "quantis/cli.hpp"
#include "quantis/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "quantis: quantization-driven importance sampling for Monte Carlo "
      "option pricing"};
  app.footer(
      "commands:\n"
      "  build-grid        fit a normal quantizer grid and cache it\n"
      "  build-quantizer   build a product path quantizer and cache it\n"
      "  optimize          fit the variance-minimizing translation/drift\n"
      "  price             paired crude vs importance-sampled pricing (CSV)\n"
      "  table <name>      reproduce a full benchmark table (CSV)\n"
      "table names: basket, spark, asian-bs, asian-lv, asian-schwartz,\n"
      "             dic-lv, dic-bs");

  std::string command;
  std::string table;
  std::string config_path;
  std::string preset;
  std::string out;
  std::string cache_dir = "cache";
  std::uint64_t seed = 0;
  int threads = 0;

  app.add_option("command", command,
                 "build-grid | build-quantizer | optimize | price | table")
      ->required();
  app.add_option("table", table, "table name (table command only)");
  auto* config_opt =
      app.add_option("--config", config_path, "key = value config file");
  app.add_option("--preset", preset, "preset name used as the config base");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides [mc] seed)");
  app.add_option("--out", out, "output file path");
  app.add_option("--threads", threads, "worker thread count");
  app.add_option("--cache-dir", cache_dir, "grid/quantizer cache directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    quantis::RunConfig config;
    if (config_opt->count() > 0) {
      config = quantis::parse_config_file(config_path);
    }
    config.command = command;
    config.table = table;
    config.preset = preset;
    config.cache_dir = cache_dir;
    config.threads = threads;
    if (seed_opt->count() > 0) {
      config.set("mc", "seed", std::to_string(seed));
    }
    if (!out.empty()) config.set("output", "path", out);
    return quantis::run(config);
  } catch (const quantis::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
