#ifndef QUANTIS_CLI_HPP
#define QUANTIS_CLI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace quantis {

// Batch-run description: one command plus flat key = value sections. The
// section/key vocabulary is closed; parse_config and merge_config reject
// anything outside it, so a typo cannot silently fall back to a default.
//
// Sections and keys (symbols follow the product conventions):
//   [model]        kind (black-scholes | schwartz | local-vol), d, r, T,
//                  S0, sigma, lambda, alpha, beta   (lists comma-separated;
//                  scalars broadcast; alpha also accepts "auto" = log S0)
//   [payoff]       kind (basket | spark | asian | dic), K, w, hR, C, p, L
//                  (w accepts "equal" or a comma list)
//   [quantization] N, d_N, decomposition, n_samples, sweeps, rk_stages,
//                  quad_cells
//   [basis]        kind (constant | shifted-legendre | karhunen-loeve | haar), m
//   [optimizer]    tol, max_iter, theta (comma list: skip the optimization
//                  and price with this fixed translation/drift)
//   [mc]           n, M, seed
//   [output]       path
struct RunConfig {
  std::string command;  // build-grid | build-quantizer | optimize | price | table
  std::string table;    // table name when command == "table"
  std::string preset;   // optional preset used as the config base
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string cache_dir = "cache";
  int threads = 0;  // 0 keeps the current worker count

  bool has(const std::string& section, const std::string& key) const;
  // Throws ConfigError when the key is absent, so presets and configs must
  // be fully specified before use.
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);
};

// Parses "[section]\nkey = value" text. '#' and ';' start comments; blank
// lines are skipped. Unknown sections or keys raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Overlays src onto dst (src wins key by key).
void merge_config(RunConfig& dst, const RunConfig& src);

// Fully-specified configs reproducing the published experiments. Valid
// names: basket, spark, asian-bs, asian-lv, asian-schwartz, dic-lv, dic-bs.
// An unknown name raises ConfigError listing the valid names.
std::vector<std::string> preset_names();
RunConfig preset_config(const std::string& name);

// Executes the command, writing artifacts (cache files, CSV) as configured.
// Returns the process exit code: 0 ok, 1 numerical failure, 2 bad config.
// Progress notices (cache auto-builds, row completions) go to stderr;
// result file paths are echoed on stdout.
int run(const RunConfig& config);

// Same, but lets errors propagate instead of mapping them to exit codes.
void run_checked(const RunConfig& config);

}  // namespace quantis

#endif
