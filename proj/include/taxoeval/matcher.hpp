#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "taxoeval/prediction.hpp"

namespace taxoeval {

// Decides when a predicted token counts as the parent term. Rule-based
// singularization, explicit equivalence classes, optional stop list.
class MatchPolicy {
public:
    // Defaults: dessert/desert and veggie(s)/vegetable(s) classes and the
    // built-in plural exception table.
    MatchPolicy();

    static MatchPolicy from_json(std::string_view text);
    static MatchPolicy load(const std::string& path);
    std::string to_json() const;
    // Content hash of to_json(), for report configuration echo.
    std::string hash() const;

    // Classes must be disjoint after normalization; throws ConfigError.
    void set_equivalences(std::vector<std::vector<std::string>> classes);
    void add_plural_exception(std::string plural, std::string singular);
    void set_stop_list(std::set<std::string> stop);

    void set_case_fold(bool on) { case_fold_ = on; }
    void set_edit_distance_one(bool on) { edit_distance_one_ = on; }

    bool case_fold() const { return case_fold_; }
    bool edit_distance_one() const { return edit_distance_one_; }
    const std::vector<std::vector<std::string>>& equivalences() const { return classes_; }
    const std::map<std::string, std::string>& plural_exceptions() const { return exceptions_; }
    const std::set<std::string>& stop_list() const { return stop_; }

    // Singular form of a single word (or the last word of a phrase).
    std::string singularize(std::string_view word) const;

    // Case-folded, whitespace-collapsed, singularized, mapped to its
    // equivalence-class representative. Idempotent.
    std::string normalize(std::string_view term) const;

    bool is_stopped(std::string_view token) const;

private:
    std::string surface(std::string_view term) const;
    std::string singularize_word(const std::string& word) const;
    void rebuild_class_index();

    bool case_fold_ = true;
    bool edit_distance_one_ = false;
    std::vector<std::vector<std::string>> classes_;
    std::unordered_map<std::string, std::string> representative_;
    std::map<std::string, std::string> exceptions_;
    std::set<std::string> stop_;
};

inline std::string normalize(std::string_view term, const MatchPolicy& policy) { return policy.normalize(term); }

// Symmetric; false when either side is stop-listed.
bool matches(std::string_view prediction_token, std::string_view parent, const MatchPolicy& policy);

std::optional<std::size_t> rank_of(std::string_view parent, const PredictionList& predictions,
                                   const MatchPolicy& policy);

// True iff the parent is found within the top k of at least one pool.
bool is_positive(std::string_view parent, const std::vector<PredictionList>& pools, std::size_t k,
                 const MatchPolicy& policy);

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace taxoeval
