#pragma once

// Reference fill-mask fixtures. Only the top few predictions and the rank of
// the parent are known for each prompt; the gap up to
// that rank is padded with filler tokens at decreasing probabilities.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "taxoeval/backend.hpp"
#include "taxoeval/prompt.hpp"
#include "taxoeval/taxonomy.hpp"

namespace taxoeval::testing {

struct PublishedRow {
    std::string prompt;
    std::vector<std::pair<std::string, double>> top;  // probability < 0 means not published
    std::string target;
    std::optional<std::size_t> target_rank;  // nullopt: target outside the vocabulary
    std::size_t vocabulary = 0;              // list length when target_rank is nullopt
};

inline std::string filler(std::size_t rank) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "filler%05zu", rank);
    return buf;
}

// Expands a published row to a full ranked list. Probabilities after the
// published ones decay geometrically from the last published value. A target
// ranked inside the published prefix is already present there.
inline std::vector<Prediction> expand(const PublishedRow& row) {
    std::vector<Prediction> items;
    double p = 0.3;
    for (std::size_t i = 0; i < row.top.size(); ++i) {
        const double given = row.top[i].second;
        p = given >= 0 ? given : (i == 0 ? 0.3 : p * 0.9);
        items.push_back({row.top[i].first, p});
    }
    const std::size_t length = row.target_rank ? std::max(*row.target_rank + 10, row.top.size())
                                               : std::max(row.vocabulary, row.top.size());
    for (std::size_t r = row.top.size() + 1; r <= length; ++r) {
        p *= 0.999;
        const bool is_target = row.target_rank && r == *row.target_rank;
        items.push_back({is_target ? row.target : filler(r), p});
    }
    return items;
}

inline std::string p3b(const std::string& child) { return child + " is a type of [MASK]"; }

// Top-5 "c is a type of [MASK]" predictions with the rank of "seafood".
inline std::vector<PublishedRow> type_of_rows() {
    return {
        {p3b("mussel"), {{"fish", .227}, {"dish", .144}, {"seafood", .140}, {"meat", .037}, {"soup", .033}}, "seafood", 3},
        {p3b("clam"), {{"fish", .203}, {"dish", .095}, {"seafood", .076}, {"crab", .030}, {"thing", .027}}, "seafood", 3},
        {p3b("lobster"), {{"seafood", .222}, {"dish", .145}, {"lobster", .131}, {"food", .052}, {"sauce", .052}}, "seafood", 1},
        {p3b("chicken"), {{"dish", .167}, {"meat", .110}, {"chicken", .079}, {"thing", .058}, {"sauce", .052}}, "seafood", 73},
        {p3b("beef"), {{"meat", .274}, {"beef", .161}, {"dish", .063}, {"food", .027}, {"thing", .024}}, "seafood", 57},
    };
}

inline FixtureBackend::Table type_of_table() {
    FixtureBackend::Table t;
    for (const auto& row : type_of_rows()) t[row.prompt] = expand(row);
    return t;
}

// The seafood subtree: five children, two of them (beef, pork) wrong.
inline Taxonomy seafood_taxonomy() {
    return parse_tree(R"({"name": "seafood", "children": ["mussel", "clam", "lobster", "beef", "pork"]})", "HiExpan1");
}

struct ShrimpRow {
    const char* id;
    std::vector<std::string> top;
    std::size_t rank;
};

// Eleven prompts for (seafood, shrimp): top-5 and rank of seafood.
inline std::vector<ShrimpRow> shrimp_rows() {
    return {
        {"p1a", {"salad", "cocktail", "pasta", "soup", "rice"}, 359},
        {"p1b", {"fried", "no", "garlic", "coconut", "fresh"}, 117},
        {"p2a", {"joke", "must", "winner", "favorite", "hit"}, 959},
        {"p2b", {"option", "issue", "experience", "art", "order"}, 4407},
        {"p3a", {"joke", "thing", "dish", "treat", "disappointment"}, 146},
        {"p3b", {"dish", "thing", "food", "sauce", "seafood"}, 5},
        {"p3c", {"that", "this", "shrimp", "food", "seafood"}, 5},
        {"p4a", {"sides", "food", "seafood", "fish", "shrimp"}, 3},
        {"p4b", {"lot", "variety", "side", "combination", "protein"}, 40},
        {"p4c", {"ingredient", "item", "option", "order", "animal"}, 197},
        {"p5a", {"dish", "thing", "part", "item", "roll"}, 16},
    };
}

inline const std::vector<std::size_t>& shrimp_ranks() {
    static const std::vector<std::size_t> ranks{359, 117, 959, 4407, 146, 5, 5, 3, 40, 197, 16};
    return ranks;
}

inline FixtureBackend::Table shrimp_table() {
    FixtureBackend::Table t;
    const auto& templates = default_templates();
    for (const auto& row : shrimp_rows()) {
        const PromptTemplate* tmpl = nullptr;
        for (const auto& x : templates) {
            if (x.id == row.id) tmpl = &x;
        }
        PublishedRow pr{render(*tmpl, "shrimp", "[MASK]").rendered, {}, "seafood", row.rank};
        for (const auto& tok : row.top) pr.top.emplace_back(tok, -1.0);
        t[pr.prompt] = expand(pr);
    }
    return t;
}

struct SirloinRow {
    const char* model;
    std::vector<std::string> top;
    std::size_t rank;
};

// "my favorite [MASK] is sirloin": top-4 and rank of steak per model.
inline std::vector<SirloinRow> sirloin_rows() {
    return {
        {"m1a", {"burger", "dish", "sandwich", "steak"}, 4},
        {"m1b", {"dish", "burger", "beer", "sandwich"}, 10},
        {"m2a", {"steak", "dish", "meat", "cut"}, 1},
        {"m2b", {"steak", "dish", "burger", "meat"}, 1},
        {"m0a", {"dish", "burger", "steak", "meat"}, 3},
        {"m0b", {"cut", "steak", "meat", "beef"}, 2},
        {"B-l", {"fruit", "flavor", "food", "color"}, 69},
        {"B-b", {"food", "drink", "color", "dessert"}, 71},
    };
}

inline FixtureBackend::Table sirloin_table(const SirloinRow& row) {
    const auto prompt = render(default_templates()[10], "sirloin", "[MASK]").rendered;
    PublishedRow pr{prompt, {}, "steak", row.rank};
    for (const auto& tok : row.top) pr.top.emplace_back(tok, -1.0);
    return {{prompt, expand(pr)}};
}

// "[MASK] such as mozzarella sticks" for a base-vocabulary model: appetizer
// is split into subword units and never appears as a single prediction.
inline FixtureBackend::Table mozzarella_base_vocab_table() {
    const auto prompt = render(default_templates()[7], "mozzarella sticks", "[MASK]").rendered;
    PublishedRow pr{prompt, {{"foods", -1}, {"items", -1}, {"products", -1}, {"food", -1}}, "appetizer", std::nullopt,
                    3000};
    auto items = expand(pr);
    items[100].token = "app";
    items[101].token = "##eti";
    items[102].token = "##zer";
    return {{prompt, items}};
}

}  // namespace taxoeval::testing
