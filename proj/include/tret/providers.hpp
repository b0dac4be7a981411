#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tret/embedding.hpp"

namespace tret {

struct EmbedderSpec {
  std::string kind = "hash";  // hash | http
  int dim = 64;
  std::uint64_t seed = 42;  // hash mode

  // http mode
  std::string base_url;
  std::string api_key;
  std::string model;
  int batch_size = 64;
  int timeout_ms = 30000;
  int attempts = 3;
  int backoff_ms = 200;

  void validate() const;
};

struct SummarizerSpec {
  std::string kind = "extractive";  // extractive | http
  int token_budget = 200;

  // http mode
  std::string base_url;
  std::string api_key;
  std::string model;
  int timeout_ms = 30000;
  int attempts = 3;
  int backoff_ms = 200;
  int prompt_template_version = 1;

  void validate() const;
};

struct ChatSpec {
  std::string base_url;
  std::string api_key;
  std::string model;
  int timeout_ms = 30000;
  int attempts = 3;
  int backoff_ms = 200;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  virtual std::string id() const = 0;
  virtual EmbeddingMatrix embed(const std::vector<std::string>& texts) = 0;
};

struct EdgeTextRef {
  std::string src;
  std::string dst;
  std::string text;
};

class Summarizer {
 public:
  virtual ~Summarizer() = default;
  virtual std::string id() const = 0;
  virtual std::string summarize(const std::vector<std::pair<std::string, std::string>>& node_texts,
                                const std::vector<EdgeTextRef>& edge_texts) = 0;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
};

// Deterministic cross-platform embedding: per whitespace token, the token's
// FNV-1a hash xor seed feeds a splitmix64 stream of `dim` values in [-1,1);
// token vectors sum and L2-normalize. Empty text maps to e1.
EmbeddingMatrix hash_embed(const std::vector<std::string>& texts, const EmbedderSpec& spec);

// Canonical, order-independent concatenation summary:
// "id: text; ...; edges: src--dst: text; ..." truncated to the token
// budget on a whole-token boundary. Edges with empty text are omitted.
std::string extractive_summarize(std::vector<std::pair<std::string, std::string>> node_texts,
                                 std::vector<EdgeTextRef> edge_texts,
                                 const SummarizerSpec& spec);

EmbeddingMatrix http_embed(const std::vector<std::string>& texts, const EmbedderSpec& spec,
                           int* retries_out = nullptr);
std::string http_chat(const std::string& prompt, const ChatSpec& spec, int* retries_out = nullptr);

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);
std::unique_ptr<Summarizer> make_summarizer(const SummarizerSpec& spec);
std::unique_ptr<ChatProvider> make_chat(const ChatSpec& spec);

}  // namespace tret
