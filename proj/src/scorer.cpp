#include "taxoeval/scorer.hpp"

#include <algorithm>
#include <set>

#include "taxoeval/error.hpp"
#include "util/parallel.hpp"

namespace taxoeval {

EdgeVerdict verdict_from_pools(const Edge& edge, const std::string& model_id,
                               const std::vector<PredictionList>& pools, std::size_t k,
                               const MatchPolicy& policy) {
    if (k == 0) throw InputError("k must be at least 1");
    EdgeVerdict v{edge, model_id, {}, false, std::nullopt, std::nullopt};
    v.per_prompt_rank.reserve(pools.size());
    for (const auto& pool : pools) {
        auto r = rank_of(edge.parent, pool, policy);
        v.per_prompt_rank.push_back({pool.query.template_id, r});
        if (r && (!v.best_rank || *r < v.best_rank->rank)) v.best_rank = BestRank{pool.query.template_id, *r};
    }
    v.positive = v.best_rank && v.best_rank->rank <= k;
    return v;
}

namespace {

template <typename E>
[[noreturn]] void rethrow_with_context(const E& e, const Edge& edge) {
    throw E("edge (" + edge.parent + ", " + edge.child + "): " + e.what());
}

}  // namespace

EdgeVerdict score_edge(const Edge& edge, Backend& backend, const std::vector<PromptTemplate>& templates,
                       const ScoreOptions& options, const MatchPolicy& policy) {
    if (options.k == 0) throw InputError("k must be at least 1");
    try {
        auto queries = query_pool(edge.child, templates, backend.descriptor().mask_token, options.render);
        std::vector<PredictionList> pools;
        pools.reserve(queries.size());
        for (const auto& q : queries) pools.push_back(backend.fill_mask(q, options.k));
        return verdict_from_pools(edge, backend.descriptor().model_id, pools, options.k, policy);
    } catch (const TransportError& e) {
        throw TransportError("edge (" + edge.parent + ", " + edge.child + "): " + e.what(), e.retryable());
    } catch (const BackendConfigError& e) {
        rethrow_with_context(e, edge);
    } catch (const InputError& e) {
        rethrow_with_context(e, edge);
    }
}

RateScore tally(const std::string& taxonomy_name, const std::string& model_id,
                const std::vector<EdgeVerdict>& verdicts) {
    RateScore s{taxonomy_name, model_id, verdicts.size(), 0};
    for (const auto& v : verdicts) s.n_positive += v.positive ? 1 : 0;
    return s;
}

TaxonomyScore score_taxonomy(const Taxonomy& t, Backend& backend, const std::vector<PromptTemplate>& templates,
                             const ScoreOptions& options, const MatchPolicy& policy) {
    const auto& edges = t.edges();
    std::vector<EdgeVerdict> verdicts(edges.size());
    util::parallel_for(edges.size(), std::max<std::size_t>(1, options.jobs), [&](std::size_t i) {
        try {
            verdicts[i] = score_edge(edges[i], backend, templates, options, policy);
        } catch (const Error& e) {
            if (!options.keep_going) throw;
            verdicts[i] = EdgeVerdict{edges[i], backend.descriptor().model_id, {}, false, std::nullopt, e.what()};
        }
    });
    auto score = tally(t.name(), backend.descriptor().model_id, verdicts);
    return TaxonomyScore{std::move(score), std::move(verdicts)};
}

std::size_t default_vote_threshold(std::size_t total_models) { return (total_models + 1) / 2; }

VoteOutcome majority_vote(const std::map<std::string, std::vector<EdgeVerdict>>& verdicts,
                          std::size_t vote_threshold, const std::string& taxonomy_name) {
    if (verdicts.empty()) throw InputError("majority vote needs at least one model");
    const std::size_t total = verdicts.size();
    if (vote_threshold < 1 || vote_threshold > total) {
        throw InputError("vote threshold " + std::to_string(vote_threshold) + " outside [1, " +
                         std::to_string(total) + "]");
    }
    const auto& [first_model, reference] = *verdicts.begin();
    std::map<Edge, std::size_t> position;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (!position.emplace(reference[i].edge, i).second) {
            throw InputError("model " + first_model + " lists edge (" + reference[i].edge.parent + ", " +
                             reference[i].edge.child + ") twice");
        }
    }
    std::vector<VoteResult> votes(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) votes[i] = VoteResult{reference[i].edge, 0, total, false};

    for (const auto& [model, list] : verdicts) {
        if (list.size() != reference.size()) {
            throw InputError("model " + model + " covers " + std::to_string(list.size()) + " edges, model " +
                             first_model + " covers " + std::to_string(reference.size()));
        }
        std::vector<char> seen(reference.size(), 0);
        for (const auto& v : list) {
            auto it = position.find(v.edge);
            if (it == position.end() || seen[it->second]) {
                throw InputError("edge sets differ: model " + model + " has (" + v.edge.parent + ", " +
                                 v.edge.child + ")");
            }
            seen[it->second] = 1;
            votes[it->second].votes_for += v.positive ? 1 : 0;
        }
    }
    RateScore score{taxonomy_name, "majority(" + std::to_string(vote_threshold) + "/" + std::to_string(total) + ")",
                    votes.size(), 0};
    for (auto& v : votes) {
        v.positive = v.votes_for >= vote_threshold;
        score.n_positive += v.positive ? 1 : 0;
    }
    return VoteOutcome{std::move(score), std::move(votes)};
}

std::vector<RateScore> rank_taxonomies(std::vector<RateScore> scores) {
    // Cross-multiplied comparison keeps ties exact; empty taxonomies score 0.
    auto greater = [](const RateScore& a, const RateScore& b) {
        const unsigned long long lhs = a.n_edges == 0 ? 0ULL : 1ULL * a.n_positive * b.n_edges;
        const unsigned long long rhs = b.n_edges == 0 ? 0ULL : 1ULL * b.n_positive * a.n_edges;
        if (a.n_edges == 0 || b.n_edges == 0) {
            const bool a_zero = a.n_edges == 0 || a.n_positive == 0;
            const bool b_zero = b.n_edges == 0 || b.n_positive == 0;
            if (a_zero != b_zero) return b_zero;
            if (a_zero) return a.taxonomy_name < b.taxonomy_name;
        }
        if (lhs != rhs) return lhs > rhs;
        return a.taxonomy_name < b.taxonomy_name;
    };
    std::stable_sort(scores.begin(), scores.end(), greater);
    return scores;
}

}  // namespace taxoeval
