#include <fstream>
#include <set>

#include <json.hpp>

#include "taxoeval/backend.hpp"
#include "taxoeval/error.hpp"
#include "util/text.hpp"

namespace taxoeval {

using nlohmann::json;

namespace {

struct Record {
    std::string model;
    std::string prompt;
    std::size_t k = 0;
    std::vector<Prediction> items;
};

std::optional<Record> decode_record(std::string_view line) {
    try {
        auto doc = json::parse(line);
        Record r;
        r.model = doc.at("model").get<std::string>();
        r.prompt = doc.at("prompt").get<std::string>();
        r.k = doc.at("k").get<std::size_t>();
        for (const auto& p : doc.at("predictions")) {
            r.items.push_back({p.at("token").get<std::string>(), p.at("score").get<double>()});
        }
        if (r.k == 0 || r.items.size() > r.k) return std::nullopt;
        validate_ranking(r.items, "cache");
        return r;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string encode_record(const Record& r) {
    json preds = json::array();
    for (const auto& p : r.items) preds.push_back({{"token", p.token}, {"score", p.probability}});
    return json{{"model", r.model}, {"prompt", r.prompt}, {"k", r.k}, {"predictions", preds}}.dump();
}

// Reads every line; for each key, keeps the record with the largest k
// (later records win ties).
template <typename OnCorrupt>
std::map<std::pair<std::string, std::string>, Record> read_cache(const std::string& path, std::size_t& records,
                                                                 OnCorrupt on_corrupt) {
    std::map<std::pair<std::string, std::string>, Record> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        auto r = decode_record(line);
        if (!r) {
            on_corrupt(line_no);
            continue;
        }
        ++records;
        auto key = std::pair{r->model, r->prompt};
        auto it = out.find(key);
        if (it == out.end() || it->second.k <= r->k) out[key] = std::move(*r);
    }
    return out;
}

}  // namespace

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, std::string cache_path, WarningSink warn)
    : inner_(std::move(inner)), path_(std::move(cache_path)) {
    if (!inner_) throw ConfigError("cached backend needs an inner backend");
    descriptor_ = inner_->descriptor();
    descriptor_.kind = BackendKind::cached;
    std::size_t records = 0;
    auto loaded = read_cache(path_, records, [&](std::size_t line_no) {
        if (warn) warn("cache " + path_ + ": skipping corrupt record on line " + std::to_string(line_no));
    });
    for (auto& [key, r] : loaded) entries_[key] = Entry{r.k, std::move(r.items)};
    std::ofstream probe(path_, std::ios::app);
    if (!probe) throw IoError("cache file not writable: " + path_);
}

std::vector<Prediction> CachedBackend::fetch(const std::string& prompt, std::size_t top_k) {
    const auto key = std::pair{descriptor_.model_id, prompt};
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) {
            const auto& e = it->second;
            if (top_k <= e.k || e.exhaustive()) {
                ++hits_;
                auto n = std::min(top_k, e.items.size());
                return {e.items.begin(), e.items.begin() + static_cast<std::ptrdiff_t>(n)};
            }
        }
    }
    ++misses_;
    PromptQuery q{"", "", prompt};
    auto items = inner_->fill_mask(q, top_k).items;

    std::lock_guard lock(mutex_);
    auto& e = entries_[key];
    if (top_k >= e.k) {
        e.k = top_k;
        e.items = items;
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) throw IoError("cannot append to cache " + path_);
        out << encode_record(Record{key.first, key.second, top_k, items}) << '\n';
        out.flush();
    }
    return items;
}

CacheStats inspect_cache(const std::string& path) {
    CacheStats stats;
    if (!std::ifstream(path)) throw IoError("cannot open cache " + path);
    auto records = read_cache(path, stats.records, [&](std::size_t) { ++stats.corrupt; });
    stats.keys = records.size();
    for (const auto& [key, r] : records) ++stats.keys_per_model[key.first];
    return stats;
}

CacheStats compact_cache(const std::string& path) {
    auto stats = inspect_cache(path);
    std::size_t ignored = 0;
    auto records = read_cache(path, ignored, [](std::size_t) {});
    std::string out;
    for (const auto& [key, r] : records) {
        out += encode_record(r);
        out.push_back('\n');
    }
    const auto tmp = path + ".tmp";
    util::write_file(tmp, out);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot replace cache " + path);
    return stats;
}

}  // namespace taxoeval
