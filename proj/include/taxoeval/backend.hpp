#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "taxoeval/matcher.hpp"
#include "taxoeval/prediction.hpp"
#include "taxoeval/prompt.hpp"

namespace taxoeval {

enum class BackendKind { http, local, fixture, cached };

std::string_view to_string(BackendKind kind);

struct BackendDescriptor {
    BackendKind kind = BackendKind::fixture;
    std::string model_id;
    std::string mask_token = "[MASK]";
};

// Uniform fill-mask interface. Implementations must accept concurrent calls.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;

    // Validates the query (mask token exactly once, top_k >= 1), fetches, and
    // checks the ranking invariants. Returns at most top_k items.
    PredictionList fill_mask(const PromptQuery& query, std::size_t top_k);

protected:
    virtual std::vector<Prediction> fetch(const std::string& prompt, std::size_t top_k) = 0;
};

// 1-based rank of the first prediction matching `target` within the top
// `max_rank`; nullopt when the target is not reachable.
std::optional<std::size_t> fill_mask_rank(Backend& backend, const PromptQuery& query, std::string_view target,
                                          std::size_t max_rank, const MatchPolicy& policy = {});

// Deterministic offline backend over a prompt -> ranked predictions table.
// Unknown prompts yield an empty list.
class FixtureBackend final : public Backend {
public:
    using Table = std::unordered_map<std::string, std::vector<Prediction>>;

    FixtureBackend(Table table, std::string model_id, std::string mask_token = "[MASK]");

    // Either {"prompt": [{"token","score"}, ...], ...} or
    // {"model": ..., "mask_token": ..., "prompts": {...}}. Explicit arguments
    // override values found in the document.
    static std::unique_ptr<FixtureBackend> from_json(std::string_view text, std::optional<std::string> model_id = {},
                                                     std::optional<std::string> mask_token = {});
    static std::unique_ptr<FixtureBackend> load(const std::string& path, std::optional<std::string> model_id = {},
                                                std::optional<std::string> mask_token = {});

    static std::string to_json(const Table& table, std::string_view model_id, std::string_view mask_token);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    std::size_t calls() const { return calls_.load(); }

protected:
    std::vector<Prediction> fetch(const std::string& prompt, std::size_t top_k) override;

private:
    BackendDescriptor descriptor_;
    Table table_;
    std::atomic<std::size_t> calls_{0};
};

struct HttpOptions {
    std::chrono::milliseconds timeout{30000};
    // Extra attempts after a retryable transport failure.
    int retries = 2;
    std::chrono::milliseconds backoff{200};
};

// POST {base}/fill-mask with {"model","prompt","top_k"}; expects
// {"predictions": [{"token","score"}, ...]}.
class HttpBackend final : public Backend {
public:
    HttpBackend(std::string base_url, std::string model_id, std::string mask_token = "[MASK]",
                HttpOptions options = {});

    const BackendDescriptor& descriptor() const override { return descriptor_; }

protected:
    std::vector<Prediction> fetch(const std::string& prompt, std::size_t top_k) override;

private:
    std::vector<Prediction> fetch_once(const std::string& prompt, std::size_t top_k);

    BackendDescriptor descriptor_;
    std::string base_url_;
    HttpOptions options_;
};

#ifdef TAXOEVAL_LOCAL_BACKEND
// Runs `command` through /bin/sh as a persistent child process and exchanges
// one JSON request/response per line over its stdin/stdout, using the same
// objects as the HTTP protocol. Requests are serialized.
class LocalBackend final : public Backend {
public:
    LocalBackend(std::string command, std::string model_id, std::string mask_token = "[MASK]");
    ~LocalBackend() override;
    LocalBackend(const LocalBackend&) = delete;
    LocalBackend& operator=(const LocalBackend&) = delete;

    const BackendDescriptor& descriptor() const override { return descriptor_; }

protected:
    std::vector<Prediction> fetch(const std::string& prompt, std::size_t top_k) override;

private:
    BackendDescriptor descriptor_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};
#endif

// Decodes a {"predictions": [...]} response body; shared by the HTTP and
// local backends. Throws TransportError on malformed bodies.
std::vector<Prediction> decode_predictions(std::string_view body);
std::string encode_request(std::string_view model, std::string_view prompt, std::size_t top_k);

using WarningSink = std::function<void(const std::string&)>;

// Memoizes an inner backend in an append-only JSON-lines file keyed by
// (model, prompt). The largest k fetched per key is kept and prefixes are
// served from it.
class CachedBackend final : public Backend {
public:
    CachedBackend(std::shared_ptr<Backend> inner, std::string cache_path, WarningSink warn = {});

    const BackendDescriptor& descriptor() const override { return descriptor_; }

    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }

protected:
    std::vector<Prediction> fetch(const std::string& prompt, std::size_t top_k) override;

private:
    struct Entry {
        std::size_t k = 0;
        std::vector<Prediction> items;
        // Fewer items than k were returned: the list covers the vocabulary.
        bool exhaustive() const { return items.size() < k; }
    };

    std::shared_ptr<Backend> inner_;
    BackendDescriptor descriptor_;
    std::string path_;
    std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, Entry> entries_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

struct CacheStats {
    std::size_t records = 0;
    std::size_t corrupt = 0;
    std::size_t keys = 0;
    std::map<std::string, std::size_t> keys_per_model;
};

CacheStats inspect_cache(const std::string& path);

// Rewrites the cache keeping only the largest-k record per key, sorted by
// (model, prompt). Corrupt records are dropped.
CacheStats compact_cache(const std::string& path);

}  // namespace taxoeval
