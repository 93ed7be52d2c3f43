#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "taxoeval/scorer.hpp"

namespace taxoeval {

// Effective configuration echoed into every report. Parallelism is
// deliberately absent: it must not change report bytes.
struct ReportConfig {
    std::string model_id;
    std::string backend;
    std::string mask_token;
    std::size_t k = kDefaultTopK;
    bool terminal_period = false;
    std::string templates_hash;
    std::string policy_hash;
};

struct EvaluationReport {
    ReportConfig config;
    RateScore score;
    std::vector<EdgeVerdict> verdicts;
};

struct VoteReport {
    RateScore score;
    std::size_t threshold = 0;
    std::vector<std::string> models;
    std::vector<VoteResult> votes;
};

// Canonical pretty-printed JSON with a trailing newline.
std::string to_json(const EvaluationReport& report);
EvaluationReport report_from_json(std::string_view text);
EvaluationReport load_report(const std::string& path);

std::string to_json(const VoteReport& report);

// Fixed three decimals, e.g. "0.600".
std::string format_score(double score);

}  // namespace taxoeval
