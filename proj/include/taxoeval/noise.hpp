#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "taxoeval/scorer.hpp"
#include "taxoeval/taxonomy.hpp"

namespace taxoeval {

enum class ReplacementPool { taxonomy_nodes, external_vocabulary };
enum class ReplaceTarget { child_only, any_node };

struct NoiseSpec {
    std::vector<double> levels{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::uint64_t seed = 0;
    ReplacementPool pool = ReplacementPool::taxonomy_nodes;
    // Used when pool == external_vocabulary.
    std::vector<std::string> vocabulary;
    ReplaceTarget target = ReplaceTarget::child_only;
};

// Throws ConfigError unless levels are ascending and within [0, 1].
void validate(const NoiseSpec& spec);

std::vector<std::string> load_vocabulary(const std::string& path);

struct DegradeResult {
    Taxonomy taxonomy;
    // Target concepts relabeled.
    std::size_t replaced = 0;
    // Chosen targets left as-is because every pool member would create a
    // self-loop or a cycle.
    std::size_t unreplaceable = 0;
    // Edges that became duplicates after relabeling and were merged.
    std::vector<Edge> collapsed;
};

// Relabels round(fraction * |targets|) target concepts with pool members
// distinct from the replaced surface. Targets are the distinct child concepts
// (child_only) or all nodes (any_node); a relabeled concept changes at every
// occurrence in its target role. Deterministic in (t, fraction, seed, spec).
DegradeResult degrade(const Taxonomy& t, double fraction, std::uint64_t seed, const NoiseSpec& spec);

struct SweepCell {
    double level = 0.0;
    std::size_t repeat = 0;
    double score = 0.0;
};

struct SweepPoint {
    double level = 0.0;
    double mean = 0.0;
    // Population standard deviation over repeats.
    double stddev = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::vector<SweepPoint> points;
};

// Repeat r at every level uses seed spec.seed + r. Cells run on
// options.jobs workers; output is in (level, repeat) order.
SweepResult sweep(const Taxonomy& t, const NoiseSpec& spec, Backend& backend,
                  const std::vector<PromptTemplate>& templates, const ScoreOptions& options,
                  const MatchPolicy& policy, std::size_t repeats);

// "level,repeat,score" rows followed by a "level,mean,std" section.
std::string sweep_csv(const SweepResult& result);

// Minimal SVG line chart of mean score against noise level.
std::string sweep_svg(const SweepResult& result, const std::string& title);

}  // namespace taxoeval
