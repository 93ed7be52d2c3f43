#include <doctest.h>

#include <algorithm>
#include <random>

#include "reference_fixtures.hpp"
#include "taxoeval/error.hpp"
#include "taxoeval/report.hpp"
#include "taxoeval/scorer.hpp"

using namespace taxoeval;

namespace {

const std::vector<PromptTemplate>& only(const char* id) {
    static std::map<std::string, std::vector<PromptTemplate>> cache;
    auto& v = cache[id];
    if (v.empty()) {
        for (const auto& t : default_templates()) {
            if (t.id == id) v.push_back(t);
        }
    }
    return v;
}

EdgeVerdict verdict(std::string parent, std::string child, bool positive, std::string model = "m") {
    EdgeVerdict v;
    v.edge = {std::move(parent), std::move(child)};
    v.model_id = std::move(model);
    v.positive = positive;
    return v;
}

// Throws on every query.
class FailingBackend final : public Backend {
public:
    const BackendDescriptor& descriptor() const override { return d_; }

protected:
    std::vector<Prediction> fetch(const std::string& prompt, std::size_t) override {
        if (prompt.find("beef") != std::string::npos) throw TransportError("connection reset");
        return {{"seafood", 0.5}};
    }

private:
    BackendDescriptor d_{BackendKind::http, "flaky", "[MASK]"};
};

}  // namespace

TEST_CASE("single edge over eleven prompts") {
    FixtureBackend b(testing::shrimp_table(), "bert-large");
    MatchPolicy policy;
    auto v = score_edge({"seafood", "shrimp"}, b, default_templates(), {}, policy);
    CHECK(v.positive);
    REQUIRE(v.best_rank);
    CHECK(*v.best_rank == BestRank{"p4a", 3});
    REQUIRE(v.per_prompt_rank.size() == 11);
    // Only ranks within k are observable at k = 10.
    for (std::size_t i = 0; i < 11; ++i) {
        const auto r = testing::shrimp_ranks()[i];
        CHECK(v.per_prompt_rank[i].template_id == default_templates()[i].id);
        if (r <= 10) {
            CHECK(v.per_prompt_rank[i].rank == r);
        } else {
            CHECK_FALSE(v.per_prompt_rank[i].rank);
        }
    }

    ScoreOptions deep;
    deep.k = 5000;
    auto all = score_edge({"seafood", "shrimp"}, b, default_templates(), deep, policy);
    for (std::size_t i = 0; i < 11; ++i) CHECK(all.per_prompt_rank[i].rank == testing::shrimp_ranks()[i]);

    ScoreOptions tight;
    tight.k = 2;
    CHECK_FALSE(score_edge({"seafood", "shrimp"}, b, default_templates(), tight, policy).positive);
}

TEST_CASE("negatives") {
    FixtureBackend b(testing::type_of_table(), "bert-large");
    MatchPolicy policy;
    auto beef = score_edge({"seafood", "beef"}, b, only("p3b"), {}, policy);
    CHECK_FALSE(beef.positive);
    CHECK_FALSE(beef.best_rank);

    FixtureBackend empty({}, "empty");
    auto v = score_edge({"seafood", "shrimp"}, empty, default_templates(), {}, policy);
    CHECK_FALSE(v.positive);
    CHECK(v.per_prompt_rank.size() == 11);
}

TEST_CASE("taxonomy score") {
    FixtureBackend b(testing::type_of_table(), "bert-large");
    MatchPolicy policy;
    auto result = score_taxonomy(testing::seafood_taxonomy(), b, only("p3b"), {}, policy);
    CHECK(result.score.n_edges == 5);
    CHECK(result.score.n_positive == 3);
    CHECK(result.score.score() == doctest::Approx(0.6));
    CHECK(format_score(result.score.score()) == "0.600");
    CHECK(result.score.taxonomy_name == "HiExpan1");
    const bool expected[] = {true, true, true, false, false};
    for (std::size_t i = 0; i < 5; ++i) CHECK(result.verdicts[i].positive == expected[i]);

    auto root_only = parse_tree(R"({"name":"food"})", "solo");
    auto zero = score_taxonomy(root_only, b, only("p3b"), {}, policy);
    CHECK(zero.score.n_edges == 0);
    CHECK(zero.score.score() == 0.0);

    FixtureBackend always({{"mussel is a type of [MASK]", {{"seafood", .9}}},
                           {"clam is a type of [MASK]", {{"seafood", .9}}}},
                          "m");
    auto perfect = score_taxonomy(parse_edge_list("seafood\tmussel\nseafood\tclam\n"), always, only("p3b"), {}, policy);
    CHECK(perfect.score.score() == 1.0);

    ScoreOptions bad;
    bad.k = 0;
    CHECK_THROWS_AS(score_taxonomy(testing::seafood_taxonomy(), b, only("p3b"), bad, policy), InputError);
}

TEST_CASE("parallel scoring gives the same verdicts") {
    FixtureBackend b(testing::type_of_table(), "bert-large");
    MatchPolicy policy;
    ScoreOptions serial, parallel;
    parallel.jobs = 8;
    auto a = score_taxonomy(testing::seafood_taxonomy(), b, default_templates(), serial, policy);
    auto c = score_taxonomy(testing::seafood_taxonomy(), b, default_templates(), parallel, policy);
    EvaluationReport ra{{}, a.score, a.verdicts}, rc{{}, c.score, c.verdicts};
    CHECK(to_json(ra) == to_json(rc));
}

TEST_CASE("backend failures") {
    FailingBackend b;
    MatchPolicy policy;
    auto t = testing::seafood_taxonomy();
    try {
        score_taxonomy(t, b, only("p3b"), {}, policy);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("(seafood, beef)") != std::string::npos);
        CHECK(e.retryable());
    }

    ScoreOptions opts;
    opts.keep_going = true;
    auto result = score_taxonomy(t, b, only("p3b"), opts, policy);
    CHECK(result.score.n_edges == 5);
    CHECK(result.score.n_positive == 4);
    REQUIRE(result.verdicts[3].error);
    CHECK_FALSE(result.verdicts[3].positive);
    CHECK_FALSE(result.verdicts[0].error);
}

TEST_CASE("majority vote against brute force") {
    // Every assignment of one edge's six votes, as a 64-edge taxonomy.
    std::map<std::string, std::vector<EdgeVerdict>> lists;
    for (unsigned mask = 0; mask < 64; ++mask) {
        for (int m = 0; m < 6; ++m) {
            lists["m" + std::to_string(m)].push_back(
                verdict("p", "c" + std::to_string(mask), (mask >> m) & 1u, "m" + std::to_string(m)));
        }
    }
    CHECK(default_vote_threshold(6) == 3);
    CHECK(default_vote_threshold(5) == 3);
    CHECK(default_vote_threshold(1) == 1);
    for (std::size_t threshold = 1; threshold <= 6; ++threshold) {
        auto out = majority_vote(lists, threshold, "all");
        REQUIRE(out.votes.size() == 64);
        std::size_t expected_positive = 0;
        for (unsigned mask = 0; mask < 64; ++mask) {
            const auto pop = static_cast<std::size_t>(__builtin_popcount(mask));
            const auto& v = out.votes[mask];
            CHECK(v.edge.child == "c" + std::to_string(mask));
            CHECK(v.votes_for == pop);
            CHECK(v.total_models == 6);
            CHECK(v.positive == (pop >= threshold));
            expected_positive += pop >= threshold;
        }
        CHECK(out.score.n_positive == expected_positive);
        CHECK(out.score.n_edges == 64);
        CHECK(out.score.model_id == "majority(" + std::to_string(threshold) + "/6)");
    }
    CHECK_THROWS_AS(majority_vote(lists, 0), InputError);
    CHECK_THROWS_AS(majority_vote(lists, 7), InputError);
    CHECK_THROWS_AS(majority_vote({}, 1), InputError);
}

TEST_CASE("majority vote edge bookkeeping") {
    std::map<std::string, std::vector<EdgeVerdict>> lists;
    lists["a"] = {verdict("p", "x", true), verdict("p", "y", false)};
    lists["b"] = {verdict("p", "y", true), verdict("p", "x", true)};
    auto out = majority_vote(lists, 2);
    CHECK(out.votes[0].edge.child == "x");
    CHECK(out.votes[0].positive);
    CHECK_FALSE(out.votes[1].positive);

    lists["c"] = {verdict("p", "x", true)};
    CHECK_THROWS_AS(majority_vote(lists, 2), InputError);
    lists["c"] = {verdict("p", "x", true), verdict("p", "z", true)};
    CHECK_THROWS_AS(majority_vote(lists, 2), InputError);
    lists["c"] = {verdict("p", "x", true), verdict("p", "x", true)};
    CHECK_THROWS_AS(majority_vote(lists, 2), InputError);
}

TEST_CASE("property: vote thresholds bracket the single models") {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t models = 1 + gen() % 6, edges = gen() % 30;
        std::map<std::string, std::vector<EdgeVerdict>> lists;
        std::vector<std::string> names;
        for (std::size_t m = 0; m < models; ++m) {
            names.push_back("m" + std::to_string(m));
            lists[names.back()];
            for (std::size_t e = 0; e < edges; ++e) {
                lists[names.back()].push_back(verdict("p", "c" + std::to_string(e), gen() % 2, names.back()));
            }
        }
        const auto any = majority_vote(lists, 1).score.n_positive;
        const auto all = majority_vote(lists, models).score.n_positive;
        for (const auto& name : names) {
            const auto single = tally("t", name, lists[name]).n_positive;
            CHECK(any >= single);
            CHECK(all <= single);
        }
        const auto mid = majority_vote(lists, default_vote_threshold(models)).score.n_positive;

        // Permuting each model's list leaves the outcome unchanged.
        auto shuffled = lists;
        for (auto& [name, list] : shuffled) std::shuffle(list.begin(), list.end(), gen);
        CHECK(majority_vote(shuffled, default_vote_threshold(models)).score.n_positive == mid);

        // Dropping an edge drops at most one positive.
        if (edges > 0) {
            auto fewer = lists;
            for (auto& [name, list] : fewer) list.pop_back();
            const auto after = majority_vote(fewer, default_vote_threshold(models)).score.n_positive;
            CHECK(after <= mid);
            CHECK(after + 1 >= mid);
        }
    }
}

TEST_CASE("ranking") {
    std::vector<RateScore> scores{
        {"CoRel1", "v", 1000, 443}, {"CoRel2", "v", 1000, 572}, {"CoRel3", "v", 1000, 535},
        {"CoRel4", "v", 1000, 347}, {"HiExpan1", "v", 1000, 590}, {"TaxoGen1", "v", 1000, 12},
        {"TaxoGen2", "v", 1000, 0},
    };
    auto ranked = rank_taxonomies(scores);
    const char* order[] = {"HiExpan1", "CoRel2", "CoRel3", "CoRel1", "CoRel4", "TaxoGen1", "TaxoGen2"};
    for (std::size_t i = 0; i < 7; ++i) CHECK(ranked[i].taxonomy_name == order[i]);

    // Equal fractions with different denominators tie exactly and fall back to name.
    auto tied = rank_taxonomies({{"b", "v", 3, 1}, {"a", "v", 6, 2}, {"c", "v", 0, 0}, {"d", "v", 7, 7}});
    CHECK(tied[0].taxonomy_name == "d");
    CHECK(tied[1].taxonomy_name == "a");
    CHECK(tied[2].taxonomy_name == "b");
    CHECK(tied[3].taxonomy_name == "c");
}

TEST_CASE("report JSON") {
    FixtureBackend b(testing::shrimp_table(), "bert-large");
    MatchPolicy policy;
    auto t = parse_edge_list("seafood\tshrimp\nseafood\tsalmon\n", "mini");
    ScoreOptions opts;
    opts.keep_going = true;
    auto result = score_taxonomy(t, b, default_templates(), opts, policy);
    ReportConfig cfg{"bert-large", "fixture", "[MASK]", 10, false, template_set_hash(default_templates()),
                     policy.hash()};
    EvaluationReport report{cfg, result.score, result.verdicts};
    const auto text = to_json(report);
    CHECK(text.back() == '\n');
    CHECK(text.find("\"score\": 0.5") != std::string::npos);

    auto back = report_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.score.n_positive == 1);
    CHECK(back.config.templates_hash == cfg.templates_hash);
    CHECK(back.verdicts[0].best_rank == BestRank{"p4a", 3});

    auto tampered = text;
    tampered.replace(tampered.find("\"n_positive\": 1"), 15, "\"n_positive\": 2");
    CHECK_THROWS_AS(report_from_json(tampered), ParseError);
    CHECK_THROWS_AS(report_from_json("{}"), ParseError);
}
