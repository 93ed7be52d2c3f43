#include "taxoeval/backend.hpp"

#include <json.hpp>

#include "taxoeval/error.hpp"
#include "util/text.hpp"

namespace taxoeval {

using nlohmann::json;

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::http: return "http";
        case BackendKind::local: return "local";
        case BackendKind::fixture: return "fixture";
        case BackendKind::cached: return "cached";
    }
    return "unknown";
}

void validate_ranking(const std::vector<Prediction>& items, const std::string& context) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        const double p = items[i].probability;
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InputError(context + ": probability out of [0,1] at rank " + std::to_string(i + 1));
        }
        if (i > 0 && p > items[i - 1].probability) {
            throw InputError(context + ": probabilities increase at rank " + std::to_string(i + 1));
        }
    }
}

PredictionList Backend::fill_mask(const PromptQuery& query, std::size_t top_k) {
    const auto& d = descriptor();
    if (top_k == 0) throw InputError("top_k must be at least 1");
    if (util::count_occurrences(query.rendered, d.mask_token) != 1) {
        throw InputError("query \"" + query.rendered + "\" must contain the mask token " + d.mask_token +
                         " exactly once");
    }
    auto items = fetch(query.rendered, top_k);
    if (items.size() > top_k) items.resize(top_k);
    validate_ranking(items, d.model_id + " \"" + query.rendered + "\"");
    return PredictionList{query, d.model_id, std::move(items)};
}

std::optional<std::size_t> fill_mask_rank(Backend& backend, const PromptQuery& query, std::string_view target,
                                          std::size_t max_rank, const MatchPolicy& policy) {
    if (max_rank == 0) throw InputError("max_rank must be at least 1");
    return rank_of(target, backend.fill_mask(query, max_rank), policy);
}

std::string encode_request(std::string_view model, std::string_view prompt, std::size_t top_k) {
    return json{{"model", model}, {"prompt", prompt}, {"top_k", top_k}}.dump();
}

namespace {

std::vector<Prediction> read_prediction_array(const json& arr) {
    if (!arr.is_array()) throw std::invalid_argument("predictions must be an array");
    std::vector<Prediction> out;
    out.reserve(arr.size());
    for (const auto& item : arr) {
        out.push_back(Prediction{item.at("token").get<std::string>(), item.at("score").get<double>()});
    }
    return out;
}

json write_prediction_array(const std::vector<Prediction>& items) {
    json arr = json::array();
    for (const auto& p : items) arr.push_back({{"token", p.token}, {"score", p.probability}});
    return arr;
}

}  // namespace

std::vector<Prediction> decode_predictions(std::string_view body) {
    try {
        auto doc = json::parse(body);
        return read_prediction_array(doc.at("predictions"));
    } catch (const std::exception& e) {
        throw TransportError(std::string("malformed fill-mask response: ") + e.what(), false);
    }
}

FixtureBackend::FixtureBackend(Table table, std::string model_id, std::string mask_token)
    : descriptor_{BackendKind::fixture, std::move(model_id), std::move(mask_token)}, table_(std::move(table)) {
    if (descriptor_.mask_token.empty()) throw ConfigError("empty mask token");
    for (const auto& [prompt, items] : table_) validate_ranking(items, "fixture \"" + prompt + "\"");
}

std::unique_ptr<FixtureBackend> FixtureBackend::from_json(std::string_view text, std::optional<std::string> model_id,
                                                          std::optional<std::string> mask_token) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid fixture JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("fixture document must be an object");
    std::string model = "fixture";
    std::string mask = "[MASK]";
    const json* prompts = &doc;
    if (doc.contains("prompts") && doc["prompts"].is_object()) {
        if (doc.contains("model")) model = doc["model"].get<std::string>();
        if (doc.contains("mask_token")) mask = doc["mask_token"].get<std::string>();
        prompts = &doc["prompts"];
    }
    Table table;
    for (const auto& [prompt, arr] : prompts->items()) {
        try {
            table.emplace(prompt, read_prediction_array(arr));
        } catch (const std::exception& e) {
            throw ParseError("fixture entry \"" + prompt + "\": " + e.what());
        }
    }
    return std::make_unique<FixtureBackend>(std::move(table), model_id.value_or(model), mask_token.value_or(mask));
}

std::unique_ptr<FixtureBackend> FixtureBackend::load(const std::string& path, std::optional<std::string> model_id,
                                                     std::optional<std::string> mask_token) {
    return from_json(util::read_file(path), std::move(model_id), std::move(mask_token));
}

std::string FixtureBackend::to_json(const Table& table, std::string_view model_id, std::string_view mask_token) {
    json prompts = json::object();
    for (const auto& [prompt, items] : table) prompts[prompt] = write_prediction_array(items);
    return json{{"model", model_id}, {"mask_token", mask_token}, {"prompts", prompts}}.dump() + "\n";
}

std::vector<Prediction> FixtureBackend::fetch(const std::string& prompt, std::size_t top_k) {
    ++calls_;
    auto it = table_.find(prompt);
    if (it == table_.end()) return {};
    const auto& items = it->second;
    return {items.begin(), items.begin() + static_cast<std::ptrdiff_t>(std::min(top_k, items.size()))};
}

}  // namespace taxoeval
