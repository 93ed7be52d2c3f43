#pragma once

#include <string>
#include <vector>

#include "taxoeval/prompt.hpp"

namespace taxoeval {

struct Prediction {
    std::string token;
    double probability = 0.0;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Ranked fill-mask output for one query; items[0] is rank 1.
struct PredictionList {
    PromptQuery query;
    std::string model_id;
    std::vector<Prediction> items;
};

// Throws InputError unless every probability is in [0, 1] and the sequence
// is non-increasing.
void validate_ranking(const std::vector<Prediction>& items, const std::string& context);

}  // namespace taxoeval
