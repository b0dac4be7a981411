#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tret {

struct BuildConfig {
  std::string graph_path;
  std::string out_dir;
  int levels = 3;
  double lambda = 1.0;
  std::string bandwidth = "auto";  // "auto" or a positive real
  int k = 6;                       // default k recorded in the manifest
  std::uint64_t seed = 42;
  std::string embedder = "hash";   // hash | http
  int embed_dim = 64;
  std::string summarizer = "extractive";  // extractive | http
  int token_budget = 200;
  int exact_threshold = 12;
  int subsample_cap = 2048;
  bool ann = false;
  int ann_m = 16;
  int ann_ef = 64;
  int threads = 1;
  std::string node_embeddings;  // optional sidecar overriding provider node embeddings
  int timeout_ms = 30000;
  int attempts = 3;
  int backoff_ms = 200;

  // Throws UsageError; runs before any work touches the filesystem.
  void validate() const;

  // Numeric bandwidth, or unset for "auto".
  bool bandwidth_is_auto() const;
  double fixed_bandwidth() const;
};

// Entry point shared by the binary and the in-process CLI tests. `args`
// excludes the program name. Errors print a single
// "error[<category>]: <message>" line on err; exit codes: 0 ok, 2 usage,
// 3 data, 4 provider, 5 internal.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tret
