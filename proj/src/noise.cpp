#include "taxoeval/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "taxoeval/error.hpp"
#include "util/parallel.hpp"
#include "util/rng.hpp"
#include "util/text.hpp"

namespace taxoeval {

void validate(const NoiseSpec& spec) {
    for (std::size_t i = 0; i < spec.levels.size(); ++i) {
        const double l = spec.levels[i];
        if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("noise level outside [0, 1]");
        if (i > 0 && l < spec.levels[i - 1]) throw ConfigError("noise levels must be ascending");
    }
}

std::vector<std::string> load_vocabulary(const std::string& path) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    const auto text = util::read_file(path);
    for (auto line : util::split_lines(text)) {
        auto s = canonical_surface(line);
        if (s.empty() || s.front() == '#') continue;
        if (seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
}

namespace {

struct Slot {
    std::string parent;
    std::string child;
};

bool has_cycle(const std::vector<Slot>& edges) {
    std::unordered_map<std::string, std::size_t> id;
    auto intern = [&](const std::string& s) { return id.try_emplace(s, id.size()).first->second; };
    std::vector<std::pair<std::size_t, std::size_t>> ids;
    ids.reserve(edges.size());
    for (const auto& e : edges) ids.emplace_back(intern(e.parent), intern(e.child));
    std::vector<std::vector<std::size_t>> out(id.size());
    std::vector<std::size_t> in_degree(id.size(), 0);
    for (auto [p, c] : ids) {
        out[p].push_back(c);
        ++in_degree[c];
    }
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < id.size(); ++i) {
        if (in_degree[i] == 0) stack.push_back(i);
    }
    std::size_t seen = 0;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        ++seen;
        for (auto c : out[v]) {
            if (--in_degree[c] == 0) stack.push_back(c);
        }
    }
    return seen != id.size();
}

}  // namespace

DegradeResult degrade(const Taxonomy& t, double fraction, std::uint64_t seed, const NoiseSpec& spec) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("noise fraction outside [0, 1]");

    std::vector<std::string> pool;
    if (spec.pool == ReplacementPool::taxonomy_nodes) {
        for (const auto& n : t.nodes()) pool.push_back(n.surface);
    } else {
        std::set<std::string> seen;
        for (const auto& w : spec.vocabulary) {
            auto s = canonical_surface(w);
            if (!s.empty() && seen.insert(s).second) pool.push_back(std::move(s));
        }
    }
    if (pool.size() < 2) throw ConfigError("replacement pool needs at least 2 members");

    std::vector<std::string> targets;
    if (spec.target == ReplaceTarget::child_only) {
        std::unordered_set<std::string> seen;
        for (const auto& e : t.edges()) {
            if (seen.insert(e.child).second) targets.push_back(e.child);
        }
    } else {
        for (const auto& n : t.nodes()) targets.push_back(n.surface);
    }

    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(targets.size())));
    DegradeResult result{t, 0, 0, {}};
    if (count == 0) return result;

    util::Rng rng(seed);
    std::vector<std::size_t> order(targets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<Slot> edges;
    for (const auto& e : t.edges()) edges.push_back({e.parent, e.child});
    const std::vector<Slot> original = edges;
    const bool any_node = spec.target == ReplaceTarget::any_node;

    for (std::size_t n = 0; n < count; ++n) {
        const auto& target = targets[order[n]];
        std::vector<std::size_t> parent_slots;
        std::vector<std::size_t> child_slots;
        for (std::size_t i = 0; i < original.size(); ++i) {
            if (original[i].child == target) child_slots.push_back(i);
            if (any_node && original[i].parent == target) parent_slots.push_back(i);
        }
        std::vector<std::size_t> candidates(pool.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
        rng.shuffle(candidates);

        bool placed = false;
        for (auto ci : candidates) {
            const auto& replacement = pool[ci];
            if (replacement == target) continue;
            auto trial = edges;
            for (auto i : child_slots) trial[i].child = replacement;
            for (auto i : parent_slots) trial[i].parent = replacement;
            auto loops = std::any_of(trial.begin(), trial.end(), [](const Slot& s) { return s.parent == s.child; });
            if (loops || has_cycle(trial)) continue;
            edges = std::move(trial);
            placed = true;
            break;
        }
        if (placed) {
            ++result.replaced;
        } else {
            ++result.unreplaceable;
        }
    }

    Taxonomy::Builder b(t.name());
    for (const auto& e : edges) {
        if (!b.add_edge(e.parent, e.child)) result.collapsed.push_back(Edge{e.parent, e.child});
    }
    for (const auto& node : t.nodes()) {
        const bool isolated = std::none_of(original.begin(), original.end(), [&](const Slot& s) {
            return s.parent == node.surface || s.child == node.surface;
        });
        if (isolated) b.add_node(node.surface);
    }
    result.taxonomy = std::move(b).build();
    return result;
}

SweepResult sweep(const Taxonomy& t, const NoiseSpec& spec, Backend& backend,
                  const std::vector<PromptTemplate>& templates, const ScoreOptions& options,
                  const MatchPolicy& policy, std::size_t repeats) {
    validate(spec);
    if (repeats == 0) throw ConfigError("repeats must be at least 1");
    SweepResult result;
    result.cells.resize(spec.levels.size() * repeats);
    ScoreOptions inner = options;
    inner.jobs = 1;
    util::parallel_for(result.cells.size(), std::max<std::size_t>(1, options.jobs), [&](std::size_t i) {
        const double level = spec.levels[i / repeats];
        const std::size_t repeat = i % repeats;
        auto degraded = degrade(t, level, spec.seed + repeat, spec);
        auto scored = score_taxonomy(degraded.taxonomy, backend, templates, inner, policy);
        result.cells[i] = SweepCell{level, repeat, scored.score.score()};
    });
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
        double sum = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) sum += result.cells[l * repeats + r].score;
        const double mean = sum / static_cast<double>(repeats);
        double sq = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) {
            const double d = result.cells[l * repeats + r].score - mean;
            sq += d * d;
        }
        result.points.push_back({spec.levels[l], mean, std::sqrt(sq / static_cast<double>(repeats))});
    }
    return result;
}

std::string sweep_csv(const SweepResult& result) {
    std::string out = "level,repeat,score\n";
    char buf[96];
    for (const auto& c : result.cells) {
        std::snprintf(buf, sizeof buf, "%g,%zu,%.6f\n", c.level, c.repeat, c.score);
        out += buf;
    }
    out += "level,mean,std\n";
    for (const auto& p : result.points) {
        std::snprintf(buf, sizeof buf, "%g,%.6f,%.6f\n", p.level, p.mean, p.stddev);
        out += buf;
    }
    return out;
}

std::string sweep_svg(const SweepResult& result, const std::string& title) {
    constexpr double width = 480, height = 320, margin = 48;
    auto x = [&](double level) { return margin + level * (width - 2 * margin); };
    auto y = [&](double score) { return height - margin - score * (height - 2 * margin); };
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                  "viewBox=\"0 0 %g %g\">\n",
                  width, height, width, height);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n"
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                  margin, height - margin, width - margin, height - margin, margin, margin, margin,
                  height - margin);
    out += buf;
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = tick / 5.0;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%g\" y=\"%g\" font-size=\"10\" text-anchor=\"middle\">%.1f</text>\n"
                      "<text x=\"%g\" y=\"%g\" font-size=\"10\" text-anchor=\"end\">%.1f</text>\n",
                      x(v), height - margin + 14, v, margin - 6, y(v) + 3, v);
        out += buf;
    }
    std::string path;
    for (const auto& p : result.points) {
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", path.empty() ? "" : " ", x(p.level), y(p.mean));
        path += buf;
    }
    out += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" + path + "\"/>\n";
    for (const auto& p : result.points) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"steelblue\"/>\n", x(p.level),
                      y(p.mean));
        out += buf;
    }
    std::string escaped;
    for (char c : title) {
        if (c == '<') escaped += "&lt;";
        else if (c == '>') escaped += "&gt;";
        else if (c == '&') escaped += "&amp;";
        else escaped.push_back(c);
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">", width / 2);
    out += buf + escaped + "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">noise level</text>\n",
                  width / 2, height - 12);
    out += buf;
    out += "</svg>\n";
    return out;
}

}  // namespace taxoeval
