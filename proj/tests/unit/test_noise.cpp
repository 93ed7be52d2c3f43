#include <doctest.h>

#include <cmath>
#include <set>

#include "taxoeval/error.hpp"
#include "taxoeval/noise.hpp"
#include "temp_dir.hpp"

using namespace taxoeval;

namespace {

const std::vector<PromptTemplate>& type_of_only() {
    static const std::vector<PromptTemplate> t{default_templates()[5]};
    return t;
}

// n disjoint pairs p_i -> c_i.
Taxonomy pairs(std::size_t n) {
    Taxonomy::Builder b("pairs");
    for (std::size_t i = 0; i < n; ++i) b.add_edge("p" + std::to_string(i), "c" + std::to_string(i));
    return std::move(b).build();
}

// The model names p_i for c_i and nothing else, so exactly the original
// edges are positive.
FixtureBackend truth(const Taxonomy& t, const std::set<std::size_t>& blind = {}) {
    FixtureBackend::Table table;
    for (std::size_t i = 0; i < t.edges().size(); ++i) {
        if (blind.count(i)) continue;
        const auto& e = t.edges()[i];
        table[render(type_of_only()[0], e.child, "[MASK]").rendered] = {{e.parent, 0.9}, {"thing", 0.05}};
    }
    return {std::move(table), "truth"};
}

std::size_t surviving(const Taxonomy& original, const Taxonomy& degraded) {
    std::size_t n = 0;
    for (const auto& e : degraded.edges()) n += original.has_edge(e.parent, e.child);
    return n;
}

}  // namespace

TEST_CASE("fraction zero is the identity") {
    auto t = pairs(10);
    NoiseSpec spec;
    auto r = degrade(t, 0.0, 1, spec);
    CHECK(r.replaced == 0);
    CHECK(serialize_edge_list(r.taxonomy) == serialize_edge_list(t));
    CHECK(r.taxonomy.node_count() == t.node_count());
}

TEST_CASE("fraction one relabels every child") {
    auto t = pairs(10);
    NoiseSpec spec;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto r = degrade(t, 1.0, seed, spec);
        CHECK(r.replaced == 10);
        CHECK(r.unreplaceable == 0);
        CHECK(surviving(t, r.taxonomy) == 0);
        CHECK(r.taxonomy.edge_count() + r.collapsed.size() == 10);
    }
}

TEST_CASE("half of ten children") {
    auto t = pairs(10);
    NoiseSpec spec;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto r = degrade(t, 0.5, seed, spec);
        CHECK(r.replaced == 5);
        CHECK(surviving(t, r.taxonomy) == 5);
        // Parents stay; only children move.
        for (std::size_t i = 0; i < r.taxonomy.edges().size(); ++i) {
            CHECK(r.taxonomy.edges()[i].parent == t.edges()[i].parent);
        }
    }
}

TEST_CASE("determinism") {
    auto t = pairs(12);
    NoiseSpec spec;
    auto a = degrade(t, 0.4, 99, spec);
    auto b = degrade(t, 0.4, 99, spec);
    CHECK(serialize_edge_list(a.taxonomy) == serialize_edge_list(b.taxonomy));
    std::set<std::string> distinct;
    for (std::uint64_t s = 0; s < 10; ++s) distinct.insert(serialize_edge_list(degrade(t, 0.4, s, spec).taxonomy));
    CHECK(distinct.size() > 1);
}

TEST_CASE("configuration errors") {
    NoiseSpec spec;
    CHECK_THROWS_AS(degrade(parse_tree(R"({"name":"x"})"), 0.5, 0, spec), ConfigError);
    CHECK_THROWS_AS(degrade(pairs(3), 1.5, 0, spec), ConfigError);
    spec.pool = ReplacementPool::external_vocabulary;
    spec.vocabulary = {"only", "ONLY "};
    CHECK_THROWS_AS(degrade(pairs(3), 0.5, 0, spec), ConfigError);

    NoiseSpec levels;
    levels.levels = {0.0, 0.5, 0.2};
    CHECK_THROWS_AS(validate(levels), ConfigError);
    levels.levels = {0.0, 1.2};
    CHECK_THROWS_AS(validate(levels), ConfigError);
}

TEST_CASE("external vocabulary") {
    testing::TempDir dir;
    auto vocab = load_vocabulary(dir.write("vocab.txt", "# words\nBrick\nbrick\n\ncloud\nviolin\n"));
    CHECK(vocab == std::vector<std::string>{"brick", "cloud", "violin"});
    NoiseSpec spec;
    spec.pool = ReplacementPool::external_vocabulary;
    spec.vocabulary = vocab;
    auto t = pairs(6);
    auto r = degrade(t, 0.5, 3, spec);
    CHECK(r.replaced == 3);
    std::size_t from_vocab = 0;
    for (const auto& e : r.taxonomy.edges()) {
        from_vocab += std::count(vocab.begin(), vocab.end(), e.child) > 0;
    }
    CHECK(from_vocab + r.collapsed.size() == 3);
}

TEST_CASE("any-node targets keep the result acyclic") {
    NoiseSpec spec;
    spec.target = ReplaceTarget::any_node;
    auto t = parse_edge_list("food\tseafood\nseafood\tclam\nseafood\tmussel\nfood\tmeat\nmeat\tbeef\n");
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        for (double f : {0.2, 0.6, 1.0}) {
            auto r = degrade(t, f, seed, spec);
            CHECK(r.replaced + r.unreplaceable == static_cast<std::size_t>(std::llround(f * 6)));
            for (const auto& e : r.taxonomy.edges()) CHECK(e.parent != e.child);
        }
    }
}

TEST_CASE("score after degrading matches a counting oracle") {
    // Every fraction of a six-edge taxonomy, every seed in range: the score is
    // the untouched share of edges.
    auto t = pairs(6);
    auto backend = truth(t);
    NoiseSpec spec;
    MatchPolicy policy;
    for (int m = 0; m <= 6; ++m) {
        const double f = m / 6.0;
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            auto r = degrade(t, f, seed, spec);
            auto s = score_taxonomy(r.taxonomy, backend, type_of_only(), {}, policy);
            CHECK(s.score.n_positive == static_cast<std::size_t>(6 - m));
            CHECK(s.score.n_edges + r.collapsed.size() == 6);
        }
    }
}

TEST_CASE("sweep") {
    auto t = pairs(10);
    auto backend = truth(t);
    NoiseSpec spec;
    spec.seed = 42;
    MatchPolicy policy;
    ScoreOptions opts;
    opts.jobs = 4;
    auto result = sweep(t, spec, backend, type_of_only(), opts, policy, 5);
    REQUIRE(result.cells.size() == 30);
    REQUIRE(result.points.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(result.points[i].level == doctest::Approx(0.2 * static_cast<double>(i)));
        CHECK(result.points[i].mean == doctest::Approx(1.0 - 0.2 * static_cast<double>(i)));
        CHECK(result.points[i].stddev == doctest::Approx(0.0));
    }
    CHECK(result.cells[7].level == doctest::Approx(0.2));
    CHECK(result.cells[7].repeat == 2);

    opts.jobs = 1;
    CHECK(sweep_csv(sweep(t, spec, backend, type_of_only(), opts, policy, 5)) == sweep_csv(result));

    const auto csv = sweep_csv(result);
    CHECK(csv.rfind("level,repeat,score\n0,0,1.000000\n", 0) == 0);
    CHECK(csv.find("level,mean,std\n0,1.000000,0.000000\n0.2,0.800000,0.000000\n") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 30 + 1 + 6);

    const auto svg = sweep_svg(result, "pairs <10>");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("pairs &lt;10&gt;") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 6);

    CHECK_THROWS_AS(sweep(t, spec, backend, type_of_only(), opts, policy, 0), ConfigError);
}

TEST_CASE("imperfect model: the curve still falls") {
    auto t = pairs(20);
    auto backend = truth(t, {1, 7, 13, 18});
    NoiseSpec spec;
    spec.seed = 5;
    MatchPolicy policy;
    auto result = sweep(t, spec, backend, type_of_only(), {}, policy, 40);
    CHECK(result.points.front().mean == doctest::Approx(0.8));
    CHECK(result.points.back().mean == doctest::Approx(0.0));
    for (std::size_t i = 1; i < result.points.size(); ++i) {
        CHECK(result.points[i].mean < result.points[i - 1].mean);
    }
    // Mixed outcomes at intermediate levels give nonzero spread.
    CHECK(result.points[2].stddev > 0.0);
}
