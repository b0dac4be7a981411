#pragma once

#include <stdexcept>
#include <string>

namespace tret {

// Error categories map onto CLI exit codes: usage=2, data=3, provider=4,
// internal=5.
class Error : public std::runtime_error {
 public:
  enum class Category { usage, data, provider, internal };

  Error(Category category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  Category category() const noexcept { return category_; }

  const char* category_name() const noexcept {
    switch (category_) {
      case Category::usage:
        return "usage";
      case Category::data:
        return "data";
      case Category::provider:
        return "provider";
      case Category::internal:
        return "internal";
    }
    return "internal";
  }

 private:
  Category category_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& message) : Error(Category::usage, message) {}
};

struct DataError : Error {
  explicit DataError(const std::string& message) : Error(Category::data, message) {}
};

struct ProviderError : Error {
  explicit ProviderError(const std::string& message) : Error(Category::provider, message) {}
};

struct InternalError : Error {
  explicit InternalError(const std::string& message) : Error(Category::internal, message) {}
};

}  // namespace tret
