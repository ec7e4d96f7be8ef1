#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

// resolv.h defines _res as a macro, which collides with Eigen internals.
#ifdef _res
#undef _res
#endif

#include "reasonpath/embedspace.hpp"
#include "reasonpath/error.hpp"
#include "reasonpath/segmenter.hpp"

namespace reasonpath {

struct FetchOptions {
  std::size_t batch_size = 32;
  int max_retries = 3;                              // extra attempts per batch
  std::chrono::milliseconds backoff{200};           // doubled after each failure
  std::chrono::seconds timeout{60};
  unsigned max_in_flight = 1;
};

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base;    // path prefix without trailing slash
};

inline Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("invalid embedding endpoint URL: " + url);
  Endpoint e{m[1].str(), m[2].matched ? m[2].str() : ""};
  while (!e.base.empty() && e.base.back() == '/') e.base.pop_back();
  return e;
}

struct BatchResult {
  std::vector<std::vector<double>> vectors;
  std::size_t dim = 0;
};

// One POST /embed with retries. Non-retryable 4xx answers raise ProtocolError.
inline BatchResult post_batch(const Endpoint& ep, const std::vector<std::string>& texts,
                              std::size_t batch_index, const FetchOptions& opt) {
  httplib::Client cli(ep.origin);
  cli.set_connection_timeout(opt.timeout);
  cli.set_read_timeout(opt.timeout);
  cli.set_write_timeout(opt.timeout);
  const std::string body = nlohmann::json{{"texts", texts}}.dump();
  auto wait = opt.backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(wait);
      wait *= 2;
    }
    auto res = cli.Post(ep.base + "/embed", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    std::string message = res->body;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
      if (res->status != 200) {
        if (j.contains("error")) message = j["error"].get<std::string>();
        throw ProtocolError("embedding batch " + std::to_string(batch_index) + ": HTTP " +
                            std::to_string(res->status) + ": " + message);
      }
      BatchResult out;
      out.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
      out.dim = j.at("dim").get<std::size_t>();
      if (out.vectors.size() != texts.size()) {
        throw ProtocolError("embedding batch " + std::to_string(batch_index) + ": server returned " +
                            std::to_string(out.vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
      }
      for (const auto& v : out.vectors) {
        if (v.size() != out.dim) {
          throw ValidationError("embedding batch " + std::to_string(batch_index) +
                                ": vector length differs from declared dim");
        }
        for (double x : v) {
          if (!std::isfinite(x)) {
            throw ValidationError("embedding batch " + std::to_string(batch_index) +
                                  ": non-finite component");
          }
        }
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError("embedding batch " + std::to_string(batch_index) +
                          ": malformed response: " + e.what());
    }
  }
  throw TransportError("embedding batch " + std::to_string(batch_index) + " failed after " +
                       std::to_string(opt.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace detail

/// Embeds chunk texts through POST {endpoint}/embed in order-aligned batches.
/// Zero chunks make no request.
inline std::vector<EmbeddedSentence> fetch_embeddings(const std::string& endpoint,
                                                      const std::vector<SentenceChunk>& chunks,
                                                      const FetchOptions& opt = {}) {
  if (opt.batch_size < 1) throw ConfigError("fetch_embeddings: batch_size must be >= 1");
  if (chunks.empty()) return {};
  const auto ep = detail::parse_endpoint(endpoint);
  const std::size_t n_batches = (chunks.size() + opt.batch_size - 1) / opt.batch_size;
  std::vector<std::optional<detail::BatchResult>> results(n_batches);
  std::vector<std::exception_ptr> errors(n_batches);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < n_batches; b = next++) {
      std::vector<std::string> texts;
      const auto lo = b * opt.batch_size, hi = std::min(chunks.size(), lo + opt.batch_size);
      for (auto i = lo; i < hi; ++i) texts.push_back(chunks[i].text);
      try {
        results[b] = detail::post_batch(ep, texts, b, opt);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.max_in_flight, static_cast<unsigned>(n_batches)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<EmbeddedSentence> out;
  out.reserve(chunks.size());
  const std::size_t dim = results[0]->dim;
  for (std::size_t b = 0; b < n_batches; ++b) {
    if (results[b]->dim != dim) {
      throw ValidationError("embedding dimension drifted from " + std::to_string(dim) + " to " +
                            std::to_string(results[b]->dim) + " at batch " + std::to_string(b));
    }
    for (std::size_t i = 0; i < results[b]->vectors.size(); ++i) {
      const auto& c = chunks[b * opt.batch_size + i];
      out.push_back({ChunkRef{c.ref, c.position}, std::move(results[b]->vectors[i])});
    }
  }
  return out;
}

}  // namespace reasonpath
