#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tret {

// Whitespace tokenization is the project-wide token metric; documented as
// approximate relative to any model tokenizer.
std::vector<std::string_view> split_whitespace(std::string_view text);

long long whitespace_tokens(std::string_view text);

// Longest prefix containing at most `budget` whole tokens, never fewer
// than one when the input has any.
std::string truncate_tokens(std::string_view text, int budget);

}  // namespace tret
