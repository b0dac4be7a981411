#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tret/embedding.hpp"
#include "tret/graph.hpp"

namespace tret::test {

// Two triangles {a,b,c} and {d,e,f} joined by the single bridge edge c--d.
// Degrees: a,b,e,f = 2; c,d = 3; total volume 14.
inline TextualAttributedGraph bridge_graph() {
  std::vector<NodeRecord> nodes = {
      {"a", "red apple fruit"},     {"b", "green pear fruit"},
      {"c", "yellow banana fruit"}, {"d", "steel hammer tool"},
      {"e", "iron wrench tool"},    {"f", "brass screwdriver tool"},
  };
  std::vector<RawEdge> edges = {
      {"a", "b", "both fruit"}, {"b", "c", ""}, {"c", "a", ""},
      {"d", "e", "both tools"}, {"e", "f", ""}, {"f", "d", ""},
      {"c", "d", "bridge"},
  };
  return TextualAttributedGraph(std::move(nodes), edges);
}

inline std::string bridge_jsonl() {
  std::string s;
  s += R"({"kind":"node","id":"a","text":"red apple fruit"})" "\n";
  s += R"({"kind":"node","id":"b","text":"green pear fruit"})" "\n";
  s += R"({"kind":"node","id":"c","text":"yellow banana fruit"})" "\n";
  s += R"({"kind":"node","id":"d","text":"steel hammer tool"})" "\n";
  s += R"({"kind":"node","id":"e","text":"iron wrench tool"})" "\n";
  s += R"({"kind":"node","id":"f","text":"brass screwdriver tool"})" "\n";
  s += R"({"kind":"edge","src":"a","dst":"b","text":"both fruit"})" "\n";
  s += R"({"kind":"edge","src":"b","dst":"c","text":""})" "\n";
  s += R"({"kind":"edge","src":"c","dst":"a","text":""})" "\n";
  s += R"({"kind":"edge","src":"d","dst":"e","text":"both tools"})" "\n";
  s += R"({"kind":"edge","src":"e","dst":"f","text":""})" "\n";
  s += R"({"kind":"edge","src":"f","dst":"d","text":""})" "\n";
  s += R"({"kind":"edge","src":"c","dst":"d","text":"bridge"})" "\n";
  return s;
}

inline TextualAttributedGraph triangle_graph() {
  std::vector<NodeRecord> nodes = {{"a", "alpha"}, {"b", "beta"}, {"c", "gamma"}};
  std::vector<RawEdge> edges = {{"a", "b", ""}, {"b", "c", ""}, {"c", "a", ""}};
  return TextualAttributedGraph(std::move(nodes), edges);
}

// Raw (not necessarily unit-norm) d=2 rows for pinned-value entropy tests.
inline EmbeddingMatrix rows2(const std::vector<std::pair<float, float>>& pts) {
  EmbeddingMatrix m(2, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m.row(i)[0] = pts[i].first;
    m.row(i)[1] = pts[i].second;
  }
  return m;
}

// Unique scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / ("tret-test-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

}  // namespace tret::test
