#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taxoeval/backend.hpp"
#include "taxoeval/matcher.hpp"
#include "taxoeval/prompt.hpp"
#include "taxoeval/taxonomy.hpp"

namespace taxoeval {

inline constexpr std::size_t kDefaultTopK = 10;

struct PromptRank {
    std::string template_id;
    std::optional<std::size_t> rank;

    friend bool operator==(const PromptRank&, const PromptRank&) = default;
};

struct BestRank {
    std::string template_id;
    std::size_t rank = 0;

    friend bool operator==(const BestRank&, const BestRank&) = default;
};

struct EdgeVerdict {
    Edge edge;
    std::string model_id;
    // One entry per issued template, in pool order.
    std::vector<PromptRank> per_prompt_rank;
    bool positive = false;
    // Minimum rank over prompts; ties go to the earlier template.
    std::optional<BestRank> best_rank;
    // Set when the edge failed under keep_going; such edges count negative.
    std::optional<std::string> error;
};

// Relation accuracy: positives over unique parent-child pairs. Stored as
// counts; score() is exact up to the final division.
struct RateScore {
    std::string taxonomy_name;
    std::string model_id;
    std::size_t n_edges = 0;
    std::size_t n_positive = 0;

    double score() const {
        return n_edges == 0 ? 0.0 : static_cast<double>(n_positive) / static_cast<double>(n_edges);
    }
};

struct VoteResult {
    Edge edge;
    std::size_t votes_for = 0;
    std::size_t total_models = 0;
    bool positive = false;
};

struct ScoreOptions {
    std::size_t k = kDefaultTopK;
    RenderOptions render;
    std::size_t jobs = 1;
    bool keep_going = false;
};

struct TaxonomyScore {
    RateScore score;
    std::vector<EdgeVerdict> verdicts;
};

struct VoteOutcome {
    RateScore score;
    std::vector<VoteResult> votes;
};

// Builds a verdict from per-prompt prediction lists (one per template).
EdgeVerdict verdict_from_pools(const Edge& edge, const std::string& model_id,
                               const std::vector<PredictionList>& pools, std::size_t k,
                               const MatchPolicy& policy);

// Issues the full query pool for edge.child. Backend errors are rethrown as
// the same error class with the edge prepended to the message.
EdgeVerdict score_edge(const Edge& edge, Backend& backend, const std::vector<PromptTemplate>& templates,
                       const ScoreOptions& options, const MatchPolicy& policy);

// Edges are scored on options.jobs workers; verdicts come back in edge order.
TaxonomyScore score_taxonomy(const Taxonomy& t, Backend& backend, const std::vector<PromptTemplate>& templates,
                             const ScoreOptions& options, const MatchPolicy& policy);

RateScore tally(const std::string& taxonomy_name, const std::string& model_id,
                const std::vector<EdgeVerdict>& verdicts);

// ceil(total / 2): 3 of 6 for the six-model setting.
std::size_t default_vote_threshold(std::size_t total_models);

// All lists must cover the same edge set (any order); results follow the
// edge order of the first model by id. Throws InputError on mismatch or a
// threshold outside [1, total_models].
VoteOutcome majority_vote(const std::map<std::string, std::vector<EdgeVerdict>>& verdicts,
                          std::size_t vote_threshold, const std::string& taxonomy_name = {});

// Descending by exact score; ties by taxonomy name.
std::vector<RateScore> rank_taxonomies(std::vector<RateScore> scores);

}  // namespace taxoeval
