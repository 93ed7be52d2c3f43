#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taxoeval/taxonomy.hpp"

namespace taxoeval {

// Masking priority, highest first.
enum class EntityClass { main, other, autophrase, random };

std::string_view to_string(EntityClass cls);

struct Token {
    std::size_t start = 0;
    std::size_t end = 0;
    bool punctuation = false;
};

// Whitespace splitting with every ASCII punctuation byte as its own token.
// Offsets are byte positions into the input.
std::vector<Token> tokenize(std::string_view text);

class EntityInventory {
public:
    EntityInventory() = default;
    EntityInventory(std::set<std::string> main_topics, std::set<std::string> other_terms,
                    std::set<std::string> autophrase_terms);

    // Main topics are level-1 topics plus every node with children; other
    // terms are the remaining nodes.
    static EntityInventory from_taxonomy(const Taxonomy& t, std::set<std::string> autophrase_terms = {});

    void add(EntityClass cls, std::string_view surface);

    // Highest class containing the surface; nullopt when absent.
    std::optional<EntityClass> class_of(std::string_view surface) const;

    // Surfaces listed in more than one set.
    std::vector<std::string> overlaps() const;

    const std::set<std::string>& main_topics() const { return main_; }
    const std::set<std::string>& other_terms() const { return other_; }
    const std::set<std::string>& autophrase_terms() const { return autophrase_; }

    // Longest entry, in tokens.
    std::size_t max_phrase_tokens() const { return max_tokens_; }

private:
    std::set<std::string> main_;
    std::set<std::string> other_;
    std::set<std::string> autophrase_;
    std::size_t max_tokens_ = 0;
};

struct EntitySpan {
    // Token index range [first, last).
    std::size_t first = 0;
    std::size_t last = 0;
    std::string surface;
    EntityClass cls = EntityClass::other;
};

// Left-to-right, longest match, non-overlapping; case-insensitive.
std::vector<EntitySpan> tag_entities(std::string_view sentence, const EntityInventory& inv);

struct MaskLabel {
    std::size_t token_index = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string surface;
    EntityClass cls = EntityClass::random;
};

struct MaskingExample {
    std::string original;
    std::string masked;
    // Ascending by position.
    std::vector<MaskLabel> labels;
};

inline constexpr std::string_view kDefaultMaskToken = "[MASK]";
inline constexpr double kDefaultMaskBudget = 0.15;

// Inverse of masking; returns the original text.
std::string reconstruct(const MaskingExample& example, std::string_view mask_token = kDefaultMaskToken);

// ceil(budget * tokens) tokens masked, consuming entity spans by class
// priority and topping up with random word tokens.
MaskingExample mask_entity_15(std::string_view sentence, const EntityInventory& inv, std::uint64_t seed,
                              double budget = kDefaultMaskBudget, std::string_view mask_token = kDefaultMaskToken);

// One taxonomy entity (main before other, random within the class), at every
// occurrence unless single_occurrence is set. nullopt without taxonomy entities.
std::optional<MaskingExample> mask_entity_one(std::string_view sentence, const EntityInventory& inv,
                                              std::uint64_t seed, bool single_occurrence = false,
                                              std::string_view mask_token = kDefaultMaskToken);

MaskingExample mask_token_15(std::string_view sentence, std::uint64_t seed, double budget = kDefaultMaskBudget,
                             std::string_view mask_token = kDefaultMaskToken);

enum class MaskingPolicy { entity15, entity_one, token15 };

MaskingPolicy parse_masking_policy(std::string_view name);
std::string_view to_string(MaskingPolicy policy);

struct DatasetOptions {
    MaskingPolicy policy = MaskingPolicy::entity15;
    double fraction = 1.0;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    bool single_occurrence = false;
};

struct DatasetStats {
    std::size_t lines_read = 0;
    std::size_t lines_usable = 0;
    std::size_t lines_selected = 0;
    std::size_t examples = 0;
    // Selected lines that produced no example (entity_one without entities).
    std::size_t skipped = 0;
    std::map<EntityClass, std::size_t> masked_tokens;
    std::vector<std::string> warnings;
};

// Selects line i iff hash(seed, i) < fraction, masks it with the per-line
// seed hash(seed, i), and writes JSON-lines
// {"text", "masks": [{"start","end","surface","class"}]} in input order.
DatasetStats build_dataset(const std::string& corpus_path, const std::string& output_path,
                           const EntityInventory& inv, const DatasetOptions& options);

// Same, over in-memory lines.
DatasetStats build_dataset(const std::vector<std::string>& lines, std::string& output, const EntityInventory& inv,
                           const DatasetOptions& options);

std::string to_jsonl(const MaskingExample& example);
MaskingExample from_jsonl(std::string_view line, std::string_view mask_token = kDefaultMaskToken);

// Singular forms of parents absent from the base vocabulary; sorted, unique.
std::vector<std::string> missing_vocab(const std::set<std::string>& parents, const std::set<std::string>& base_vocab);
std::set<std::string> load_vocab(const std::string& path);

}  // namespace taxoeval
