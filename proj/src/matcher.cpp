#include "taxoeval/matcher.hpp"

#include <algorithm>

#include <json.hpp>

#include "taxoeval/error.hpp"
#include "util/hash.hpp"
#include "util/text.hpp"

namespace taxoeval {

using nlohmann::json;

namespace {

// Irregular plurals and plural-looking words that the suffix rules get wrong.
// Identity entries pin invariant nouns.
const std::pair<const char*, const char*> kBuiltinExceptions[] = {
    {"men", "man"},           {"women", "woman"},       {"children", "child"},
    {"feet", "foot"},         {"teeth", "tooth"},       {"geese", "goose"},
    {"mice", "mouse"},        {"people", "person"},     {"oxen", "ox"},
    {"cookies", "cookie"},    {"brownies", "brownie"},  {"smoothies", "smoothie"},
    {"movies", "movie"},      {"calories", "calorie"},  {"veggies", "veggie"},
    {"hoagies", "hoagie"},    {"goodies", "goodie"},    {"zombies", "zombie"},
    {"rookies", "rookie"},    {"olives", "olive"},      {"chives", "chive"},
    {"cloves", "clove"},      {"gloves", "glove"},      {"curves", "curve"},
    {"waves", "wave"},        {"caves", "cave"},        {"stoves", "stove"},
    {"grooves", "groove"},    {"quiches", "quiche"},    {"ganaches", "ganache"},
    {"cliches", "cliche"},    {"canoes", "canoe"},      {"menus", "menu"},
    {"buses", "bus"},         {"gases", "gas"},         {"series", "series"},
    {"species", "species"},   {"news", "news"},         {"molasses", "molasses"},
    {"swiss", "swiss"},       {"fish", "fish"},         {"sheep", "sheep"},
    {"deer", "deer"},         {"mahi mahi", "mahi mahi"},
};

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string apply_rules(const std::string& w) {
    const auto n = w.size();
    if (n <= 3) return w;
    if (ends_with(w, "ies") && n >= 5) return w.substr(0, n - 3) + "y";
    if (ends_with(w, "ves") && n >= 5) {
        auto stem = w.substr(0, n - 3);
        return stem.back() == 'i' ? stem + "fe" : stem + "f";
    }
    if (ends_with(w, "oes") && n >= 6) return w.substr(0, n - 2);
    if (ends_with(w, "sses") || ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes")) {
        return w.substr(0, n - 2);
    }
    if (w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
        return w.substr(0, n - 1);
    }
    return w;
}

}  // namespace

MatchPolicy::MatchPolicy() {
    for (auto [plural, singular] : kBuiltinExceptions) exceptions_.emplace(plural, singular);
    set_equivalences({{"dessert", "desert"}, {"vegetable", "vegetables", "veggie", "veggies"}});
}

std::string MatchPolicy::surface(std::string_view term) const {
    auto s = util::collapse_ws(term);
    return case_fold_ ? util::to_lower(s) : s;
}

std::string MatchPolicy::singularize_word(const std::string& word) const {
    if (auto it = exceptions_.find(word); it != exceptions_.end()) return it->second;
    return apply_rules(word);
}

std::string MatchPolicy::singularize(std::string_view term) const {
    std::string s(term);
    if (auto it = exceptions_.find(s); it != exceptions_.end()) return it->second;
    auto space = s.rfind(' ');
    std::string head = space == std::string::npos ? std::string() : s.substr(0, space + 1);
    std::string word = space == std::string::npos ? s : s.substr(space + 1);
    // Iterate to a fixed point so that normalize() is idempotent even with
    // user-supplied exception tables.
    for (int i = 0; i < 8; ++i) {
        auto next = singularize_word(word);
        if (next == word) break;
        word = std::move(next);
    }
    return head + word;
}

std::string MatchPolicy::normalize(std::string_view term) const {
    auto s = surface(term);
    if (auto it = representative_.find(s); it != representative_.end()) return it->second;
    auto single = singularize(s);
    if (auto it = representative_.find(single); it != representative_.end()) return it->second;
    return single;
}

bool MatchPolicy::is_stopped(std::string_view token) const {
    return !stop_.empty() && stop_.count(surface(token)) > 0;
}

void MatchPolicy::rebuild_class_index() {
    representative_.clear();
    for (const auto& cls : classes_) {
        if (cls.empty()) continue;
        const auto rep = surface(cls.front());
        for (const auto& member : cls) {
            for (auto key : {surface(member), singularize(surface(member))}) {
                auto [it, inserted] = representative_.try_emplace(key, rep);
                if (!inserted && it->second != rep) {
                    throw ConfigError("equivalence classes overlap on \"" + key + "\"");
                }
            }
        }
    }
}

void MatchPolicy::set_equivalences(std::vector<std::vector<std::string>> classes) {
    classes_ = std::move(classes);
    rebuild_class_index();
}

void MatchPolicy::add_plural_exception(std::string plural, std::string singular) {
    plural = surface(plural);
    singular = surface(singular);
    if (plural.empty() || singular.empty()) throw ConfigError("empty plural exception entry");
    exceptions_[plural] = singular;
    rebuild_class_index();
}

void MatchPolicy::set_stop_list(std::set<std::string> stop) {
    stop_.clear();
    for (const auto& s : stop) stop_.insert(surface(s));
}

MatchPolicy MatchPolicy::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid policy JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("policy document must be an object");
    static const char* known[] = {"case_fold", "edit_distance_one", "plural_exceptions", "equivalences", "stop_list"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw ConfigError("unknown policy key \"" + key + "\"");
        }
    }
    MatchPolicy p;
    try {
        if (doc.contains("case_fold")) p.case_fold_ = doc.at("case_fold").get<bool>();
        if (doc.contains("edit_distance_one")) p.edit_distance_one_ = doc.at("edit_distance_one").get<bool>();
        if (doc.contains("plural_exceptions")) {
            for (const auto& [plural, singular] : doc.at("plural_exceptions").items()) {
                p.exceptions_[p.surface(plural)] = p.surface(singular.get<std::string>());
            }
        }
        if (doc.contains("equivalences")) {
            p.set_equivalences(doc.at("equivalences").get<std::vector<std::vector<std::string>>>());
        } else {
            p.rebuild_class_index();
        }
        if (doc.contains("stop_list")) p.set_stop_list(doc.at("stop_list").get<std::set<std::string>>());
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed policy: ") + e.what());
    }
    return p;
}

MatchPolicy MatchPolicy::load(const std::string& path) { return from_json(util::read_file(path)); }

std::string MatchPolicy::to_json() const {
    json doc = {
        {"case_fold", case_fold_},
        {"edit_distance_one", edit_distance_one_},
        {"equivalences", classes_},
        {"plural_exceptions", exceptions_},
        {"stop_list", stop_},
    };
    return doc.dump(2) + "\n";
}

std::string MatchPolicy::hash() const { return util::hex64(util::fnv1a64(to_json())); }

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

// `parent` already normalized and not stop-listed.
bool matches_normalized(std::string_view token, const std::string& parent, const MatchPolicy& policy) {
    if (policy.is_stopped(token)) return false;
    const auto a = policy.normalize(token);
    if (a.empty()) return false;
    if (a == parent) return true;
    return policy.edit_distance_one() && edit_distance(a, parent) <= 1;
}

}  // namespace

bool matches(std::string_view prediction_token, std::string_view parent, const MatchPolicy& policy) {
    if (policy.is_stopped(parent)) return false;
    const auto b = policy.normalize(parent);
    return !b.empty() && matches_normalized(prediction_token, b, policy);
}

std::optional<std::size_t> rank_of(std::string_view parent, const PredictionList& predictions,
                                   const MatchPolicy& policy) {
    if (policy.is_stopped(parent)) return std::nullopt;
    const auto b = policy.normalize(parent);
    if (b.empty()) return std::nullopt;
    for (std::size_t i = 0; i < predictions.items.size(); ++i) {
        if (matches_normalized(predictions.items[i].token, b, policy)) return i + 1;
    }
    return std::nullopt;
}

bool is_positive(std::string_view parent, const std::vector<PredictionList>& pools, std::size_t k,
                 const MatchPolicy& policy) {
    if (k == 0) throw InputError("k must be at least 1");
    return std::any_of(pools.begin(), pools.end(), [&](const PredictionList& pool) {
        auto r = rank_of(parent, pool, policy);
        return r && *r <= k;
    });
}

}  // namespace taxoeval
