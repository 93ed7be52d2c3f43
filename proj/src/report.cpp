#include "taxoeval/report.hpp"

#include <cstdio>

#include <json.hpp>

#include "taxoeval/error.hpp"
#include "util/text.hpp"

namespace taxoeval {

using ojson = nlohmann::ordered_json;

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", score);
    return buf;
}

namespace {

ojson score_json(const RateScore& s) {
    return ojson{{"taxonomy", s.taxonomy_name},
                 {"model", s.model_id},
                 {"score", s.score()},
                 {"n_positive", s.n_positive},
                 {"n_edges", s.n_edges}};
}

}  // namespace

std::string to_json(const EvaluationReport& r) {
    ojson edges = ojson::array();
    for (const auto& v : r.verdicts) {
        ojson ranks = ojson::object();
        for (const auto& pr : v.per_prompt_rank) {
            ranks[pr.template_id] = pr.rank ? ojson(*pr.rank) : ojson(nullptr);
        }
        ojson e{{"parent", v.edge.parent}, {"child", v.edge.child}, {"positive", v.positive}};
        e["best"] = v.best_rank ? ojson{{"template", v.best_rank->template_id}, {"rank", v.best_rank->rank}}
                                : ojson(nullptr);
        e["ranks"] = std::move(ranks);
        if (v.error) e["error"] = *v.error;
        edges.push_back(std::move(e));
    }
    ojson doc = score_json(r.score);
    doc["config"] = ojson{{"model_id", r.config.model_id},
                          {"backend", r.config.backend},
                          {"mask_token", r.config.mask_token},
                          {"k", r.config.k},
                          {"terminal_period", r.config.terminal_period},
                          {"templates_hash", r.config.templates_hash},
                          {"policy_hash", r.config.policy_hash}};
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

EvaluationReport report_from_json(std::string_view text) {
    try {
        auto doc = ojson::parse(text);
        EvaluationReport r;
        r.score.taxonomy_name = doc.at("taxonomy").get<std::string>();
        r.score.model_id = doc.at("model").get<std::string>();
        const auto& c = doc.at("config");
        r.config.model_id = c.at("model_id").get<std::string>();
        r.config.backend = c.value("backend", "");
        r.config.mask_token = c.value("mask_token", "");
        r.config.k = c.at("k").get<std::size_t>();
        r.config.terminal_period = c.value("terminal_period", false);
        r.config.templates_hash = c.value("templates_hash", "");
        r.config.policy_hash = c.value("policy_hash", "");
        for (const auto& e : doc.at("edges")) {
            EdgeVerdict v;
            v.edge = Edge{e.at("parent").get<std::string>(), e.at("child").get<std::string>()};
            v.model_id = r.score.model_id;
            v.positive = e.at("positive").get<bool>();
            if (e.contains("best") && !e["best"].is_null()) {
                v.best_rank = BestRank{e["best"].at("template").get<std::string>(), e["best"].at("rank").get<std::size_t>()};
            }
            if (e.contains("ranks")) {
                for (const auto& [id, rank] : e["ranks"].items()) {
                    v.per_prompt_rank.push_back(
                        {id, rank.is_null() ? std::nullopt : std::optional<std::size_t>(rank.get<std::size_t>())});
                }
            }
            if (e.contains("error")) v.error = e["error"].get<std::string>();
            r.verdicts.push_back(std::move(v));
        }
        r.score = tally(r.score.taxonomy_name, r.score.model_id, r.verdicts);
        if (doc.at("n_edges").get<std::size_t>() != r.score.n_edges ||
            doc.at("n_positive").get<std::size_t>() != r.score.n_positive) {
            throw ParseError("report counts disagree with its edge verdicts");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
}

EvaluationReport load_report(const std::string& path) {
    try {
        return report_from_json(util::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string to_json(const VoteReport& r) {
    ojson doc = score_json(r.score);
    doc["threshold"] = r.threshold;
    doc["models"] = r.models;
    ojson edges = ojson::array();
    for (const auto& v : r.votes) {
        edges.push_back(ojson{{"parent", v.edge.parent},
                              {"child", v.edge.child},
                              {"votes_for", v.votes_for},
                              {"total_models", v.total_models},
                              {"positive", v.positive}});
    }
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

}  // namespace taxoeval
