#include <thread>

#include <httplib.h>

#include "taxoeval/backend.hpp"
#include "taxoeval/error.hpp"

namespace taxoeval {

HttpBackend::HttpBackend(std::string base_url, std::string model_id, std::string mask_token, HttpOptions options)
    : descriptor_{BackendKind::http, std::move(model_id), std::move(mask_token)},
      base_url_(std::move(base_url)),
      options_(options) {
    if (base_url_.empty()) throw ConfigError("HTTP backend needs a base URL");
    if (descriptor_.mask_token.empty()) throw ConfigError("empty mask token");
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::vector<Prediction> HttpBackend::fetch_once(const std::string& prompt, std::size_t top_k) {
    // One client per request; httplib clients are not safe to share across threads.
    httplib::Client client(base_url_);
    if (!client.is_valid()) throw ConfigError("invalid backend URL " + base_url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());

    auto res = client.Post("/fill-mask", encode_request(descriptor_.model_id, prompt, top_k), "application/json");
    if (!res) {
        throw TransportError(base_url_ + "/fill-mask unreachable: " + httplib::to_string(res.error()));
    }
    switch (res->status) {
        case 200: return decode_predictions(res->body);
        case 400: throw InputError("backend rejected \"" + prompt + "\": " + res->body);
        case 404: throw BackendConfigError("backend does not serve model \"" + descriptor_.model_id + "\"");
        default:
            throw TransportError(base_url_ + "/fill-mask returned HTTP " + std::to_string(res->status),
                                 res->status >= 500 || res->status == 429);
    }
}

std::vector<Prediction> HttpBackend::fetch(const std::string& prompt, std::size_t top_k) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fetch_once(prompt, top_k);
        } catch (const TransportError& e) {
            if (!e.retryable() || attempt >= options_.retries) throw;
            std::this_thread::sleep_for(options_.backoff * (attempt + 1));
        }
    }
}

}  // namespace taxoeval
