#include "tret/providers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tret/errors.hpp"
#include "tret/rng.hpp"
#include "tret/text.hpp"

namespace tret {

using nlohmann::json;

void EmbedderSpec::validate() const {
  if (kind != "hash" && kind != "http") throw UsageError("embedder kind must be hash or http");
  if (dim < 1) throw UsageError("embedding dim must be >= 1");
  if (kind == "http" && model.empty()) throw UsageError("http embedder needs a model");
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
}

void SummarizerSpec::validate() const {
  if (kind != "extractive" && kind != "http") {
    throw UsageError("summarizer kind must be extractive or http");
  }
  if (token_budget < 8) throw UsageError("summary token budget must be >= 8");
  if (kind == "http" && model.empty()) throw UsageError("http summarizer needs a model");
}

EmbeddingMatrix hash_embed(const std::vector<std::string>& texts, const EmbedderSpec& spec) {
  const int d = spec.dim;
  EmbeddingMatrix out(d, texts.size());
  std::vector<double> acc(static_cast<std::size_t>(d));
  for (std::size_t t = 0; t < texts.size(); ++t) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::string_view token : split_whitespace(texts[t])) {
      SplitMix64 stream(fnv1a64(token) ^ spec.seed);
      for (int j = 0; j < d; ++j) acc[static_cast<std::size_t>(j)] += stream.next_symmetric();
    }
    double norm2 = 0.0;
    for (double a : acc) norm2 += a * a;
    auto row = out.row(t);
    if (norm2 == 0.0) {
      row[0] = 1.0f;
    } else {
      double norm = std::sqrt(norm2);
      for (int j = 0; j < d; ++j) {
        row[static_cast<std::size_t>(j)] = static_cast<float>(acc[static_cast<std::size_t>(j)] / norm);
      }
    }
  }
  return out;
}

std::string extractive_summarize(std::vector<std::pair<std::string, std::string>> node_texts,
                                 std::vector<EdgeTextRef> edge_texts,
                                 const SummarizerSpec& spec) {
  if (node_texts.empty()) throw InternalError("extractive summary needs at least one node text");
  std::sort(node_texts.begin(), node_texts.end());
  std::sort(edge_texts.begin(), edge_texts.end(), [](const EdgeTextRef& a, const EdgeTextRef& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });

  std::string s;
  for (std::size_t i = 0; i < node_texts.size(); ++i) {
    if (i) s += "; ";
    s += node_texts[i].first;
    s += ": ";
    s += node_texts[i].second;
  }
  bool first_edge = true;
  for (const EdgeTextRef& e : edge_texts) {
    if (e.text.empty()) continue;
    s += first_edge ? "; edges: " : "; ";
    first_edge = false;
    s += e.src;
    s += "--";
    s += e.dst;
    s += ": ";
    s += e.text;
  }
  return truncate_tokens(s, spec.token_budget);
}

namespace {

bool transient_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

// POST with retry/backoff; returns the parsed 2xx body.
json post_json(const std::string& base_url, const std::string& path, const std::string& api_key,
               const json& body, int timeout_ms, int attempts, int backoff_ms, int* retries_out) {
  if (base_url.empty()) throw ProviderError("provider base url not configured");
  if (api_key.empty()) throw ProviderError("missing api key");

  httplib::Client client(base_url);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  httplib::Headers headers{{"Authorization", "Bearer " + api_key}};

  std::string payload = body.dump();
  int retries = 0;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      ++retries;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms << (attempt - 1)));
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) continue;
    if (transient_status(res->status)) continue;
    if (res->status < 200 || res->status >= 300) {
      throw ProviderError("request to " + path + " failed: HTTP " + std::to_string(res->status));
    }
    if (retries_out) *retries_out = retries;
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw ProviderError("malformed provider response");
    return parsed;
  }
  throw ProviderError("request to " + path + " failed after " + std::to_string(attempts) +
                      " attempts");
}

void normalize_row(std::span<float> row) {
  double norm2 = 0.0;
  for (float x : row) norm2 += static_cast<double>(x) * static_cast<double>(x);
  if (norm2 == 0.0) {
    row[0] = 1.0f;
    return;
  }
  double norm = std::sqrt(norm2);
  for (float& x : row) x = static_cast<float>(static_cast<double>(x) / norm);
}

}  // namespace

EmbeddingMatrix http_embed(const std::vector<std::string>& texts, const EmbedderSpec& spec,
                           int* retries_out) {
  EmbeddingMatrix out(spec.dim, texts.size());
  int total_retries = 0;
  for (std::size_t start = 0; start < texts.size(); start += static_cast<std::size_t>(spec.batch_size)) {
    std::size_t end = std::min(texts.size(), start + static_cast<std::size_t>(spec.batch_size));
    json input = json::array();
    for (std::size_t i = start; i < end; ++i) input.push_back(texts[i]);
    int retries = 0;
    json res = post_json(spec.base_url, "/embeddings", spec.api_key,
                         json{{"model", spec.model}, {"input", std::move(input)}}, spec.timeout_ms,
                         spec.attempts, spec.backoff_ms, &retries);
    total_retries += retries;

    if (!res.contains("data") || !res["data"].is_array()) {
      throw ProviderError("embedding response missing data array");
    }
    const auto& data = res["data"];
    if (data.size() != end - start) {
      throw ProviderError("count mismatch: sent " + std::to_string(end - start) +
                          " inputs, got " + std::to_string(data.size()) + " vectors");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& vec = data[i].at("embedding");
      if (!vec.is_array() || static_cast<int>(vec.size()) != spec.dim) {
        throw ProviderError("embedding dimension mismatch in response");
      }
      auto row = out.row(start + i);
      for (int j = 0; j < spec.dim; ++j) row[static_cast<std::size_t>(j)] = vec[static_cast<std::size_t>(j)].get<float>();
      normalize_row(row);
    }
  }
  if (retries_out) *retries_out = total_retries;
  return out;
}

std::string http_chat(const std::string& prompt, const ChatSpec& spec, int* retries_out) {
  json res = post_json(spec.base_url, "/chat/completions", spec.api_key,
                       json{{"model", spec.model},
                            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}},
                       spec.timeout_ms, spec.attempts, spec.backoff_ms, retries_out);
  try {
    return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ProviderError("chat response missing choices[0].message.content");
  }
}

namespace {

class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {}
  int dim() const override { return spec_.dim; }
  std::string id() const override {
    return "hash-v1-d" + std::to_string(spec_.dim) + "-s" + std::to_string(spec_.seed);
  }
  EmbeddingMatrix embed(const std::vector<std::string>& texts) override {
    return hash_embed(texts, spec_);
  }

 private:
  EmbedderSpec spec_;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {}
  int dim() const override { return spec_.dim; }
  std::string id() const override { return "http-" + spec_.model + "-d" + std::to_string(spec_.dim); }
  EmbeddingMatrix embed(const std::vector<std::string>& texts) override {
    return http_embed(texts, spec_);
  }

 private:
  EmbedderSpec spec_;
};

class ExtractiveSummarizer final : public Summarizer {
 public:
  explicit ExtractiveSummarizer(SummarizerSpec spec) : spec_(std::move(spec)) {}
  std::string id() const override { return "extractive-v1-b" + std::to_string(spec_.token_budget); }
  std::string summarize(const std::vector<std::pair<std::string, std::string>>& node_texts,
                        const std::vector<EdgeTextRef>& edge_texts) override {
    return extractive_summarize(node_texts, edge_texts, spec_);
  }

 private:
  SummarizerSpec spec_;
};

class HttpSummarizer final : public Summarizer {
 public:
  explicit HttpSummarizer(SummarizerSpec spec) : spec_(std::move(spec)) {}
  std::string id() const override {
    return "http-" + spec_.model + "-pt" + std::to_string(spec_.prompt_template_version);
  }
  std::string summarize(const std::vector<std::pair<std::string, std::string>>& node_texts,
                        const std::vector<EdgeTextRef>& edge_texts) override {
    // Prompt template v1.
    std::string prompt =
        "Summarize the following graph fragment in at most " +
        std::to_string(spec_.token_budget) +
        " tokens, preserving entity names and their relationships.\nNodes:\n";
    for (const auto& [id, text] : node_texts) {
      prompt += "- " + id + ": " + text + "\n";
    }
    if (!edge_texts.empty()) {
      prompt += "Edges:\n";
      for (const auto& e : edge_texts) {
        prompt += "- " + e.src + " -- " + e.dst + ": " + (e.text.empty() ? "-" : e.text) + "\n";
      }
    }
    prompt += "Summary:";
    ChatSpec chat{spec_.base_url, spec_.api_key, spec_.model,
                  spec_.timeout_ms, spec_.attempts, spec_.backoff_ms};
    return http_chat(prompt, chat);
  }

 private:
  SummarizerSpec spec_;
};

class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(ChatSpec spec) : spec_(std::move(spec)) {}
  std::string id() const override { return "http-" + spec_.model; }
  std::string complete(const std::string& prompt) override { return http_chat(prompt, spec_); }

 private:
  ChatSpec spec_;
};

}  // namespace

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == "hash") return std::make_unique<HashEmbedder>(spec);
  return std::make_unique<HttpEmbedder>(spec);
}

std::unique_ptr<Summarizer> make_summarizer(const SummarizerSpec& spec) {
  spec.validate();
  if (spec.kind == "extractive") return std::make_unique<ExtractiveSummarizer>(spec);
  return std::make_unique<HttpSummarizer>(spec);
}

std::unique_ptr<ChatProvider> make_chat(const ChatSpec& spec) {
  if (spec.model.empty()) throw UsageError("chat provider needs a model");
  return std::make_unique<HttpChatProvider>(spec);
}

}  // namespace tret
