#include "tret/text.hpp"

#include <cctype>

namespace tret {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

long long whitespace_tokens(std::string_view text) {
  long long count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i < text.size()) ++count;
    while (i < text.size() && !is_space(text[i])) ++i;
  }
  return count;
}

std::string truncate_tokens(std::string_view text, int budget) {
  if (budget < 1) budget = 1;
  if (whitespace_tokens(text) <= budget) return std::string(text);
  long long kept = 0;
  std::size_t i = 0;
  std::size_t cut = 0;
  while (i < text.size() && kept < budget) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    while (i < text.size() && !is_space(text[i])) ++i;
    ++kept;
    cut = i;
  }
  return std::string(text.substr(0, cut));
}

}  // namespace tret
