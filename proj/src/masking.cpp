#include "taxoeval/masking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "taxoeval/error.hpp"
#include "taxoeval/matcher.hpp"
#include "util/parallel.hpp"
#include "util/rng.hpp"
#include "util/text.hpp"

namespace taxoeval {

using nlohmann::json;

std::string_view to_string(EntityClass cls) {
    switch (cls) {
        case EntityClass::main: return "main";
        case EntityClass::other: return "other";
        case EntityClass::autophrase: return "autophrase";
        case EntityClass::random: return "random";
    }
    return "random";
}

namespace {

EntityClass parse_class(std::string_view s) {
    if (s == "main") return EntityClass::main;
    if (s == "other") return EntityClass::other;
    if (s == "autophrase") return EntityClass::autophrase;
    if (s == "random") return EntityClass::random;
    throw ParseError("unknown mask class \"" + std::string(s) + "\"");
}

bool is_punct(unsigned char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Lowercased tokens of an inventory entry joined by single spaces, so
// "Weird  texture" and the sentence tokens "weird","texture" agree.
std::string token_key(std::string_view text) {
    std::string key;
    for (const auto& t : tokenize(text)) {
        if (!key.empty()) key.push_back(' ');
        key += util::to_lower(text.substr(t.start, t.end - t.start));
    }
    return key;
}

std::size_t token_count(std::string_view text) { return tokenize(text).size(); }

std::size_t budget_tokens(double budget, std::size_t n) {
    // The epsilon keeps exact products such as 0.15 * 20 from rounding up.
    return static_cast<std::size_t>(std::ceil(budget * static_cast<double>(n) - 1e-9));
}

MaskingExample assemble(std::string_view sentence, const std::vector<Token>& tokens,
                        std::vector<std::pair<std::size_t, EntityClass>> masked, std::string_view mask_token) {
    std::sort(masked.begin(), masked.end());
    MaskingExample ex;
    ex.original = std::string(sentence);
    std::size_t pos = 0;
    for (auto [index, cls] : masked) {
        const auto& tok = tokens[index];
        ex.masked.append(sentence.substr(pos, tok.start - pos));
        ex.masked.append(mask_token);
        ex.labels.push_back(MaskLabel{index, tok.start, tok.end,
                                      std::string(sentence.substr(tok.start, tok.end - tok.start)), cls});
        pos = tok.end;
    }
    ex.masked.append(sentence.substr(pos));
    return ex;
}

std::vector<std::size_t> random_fill_candidates(const std::vector<Token>& tokens, const std::vector<char>& taken) {
    std::vector<std::size_t> words, any;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (taken[i]) continue;
        any.push_back(i);
        if (!tokens[i].punctuation) words.push_back(i);
    }
    return words.empty() ? any : words;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (util::is_space(static_cast<char>(c))) {
            ++i;
        } else if (is_punct(c)) {
            out.push_back({i, i + 1, true});
            ++i;
        } else {
            const auto start = i;
            while (i < text.size() && !util::is_space(text[i]) && !is_punct(static_cast<unsigned char>(text[i]))) ++i;
            out.push_back({start, i, false});
        }
    }
    return out;
}

EntityInventory::EntityInventory(std::set<std::string> main_topics, std::set<std::string> other_terms,
                                 std::set<std::string> autophrase_terms) {
    for (const auto& s : main_topics) add(EntityClass::main, s);
    for (const auto& s : other_terms) add(EntityClass::other, s);
    for (const auto& s : autophrase_terms) add(EntityClass::autophrase, s);
}

EntityInventory EntityInventory::from_taxonomy(const Taxonomy& t, std::set<std::string> autophrase_terms) {
    EntityInventory inv;
    const auto levels = t.levels();
    std::set<std::string> parents;
    for (const auto& e : t.edges()) parents.insert(e.parent);
    for (const auto& n : t.nodes()) {
        const bool main = levels[n.id] == 1 || parents.count(n.surface) > 0;
        inv.add(main ? EntityClass::main : EntityClass::other, n.surface);
    }
    for (const auto& s : autophrase_terms) inv.add(EntityClass::autophrase, s);
    return inv;
}

void EntityInventory::add(EntityClass cls, std::string_view surface) {
    auto key = token_key(surface);
    if (key.empty()) return;
    max_tokens_ = std::max(max_tokens_, token_count(key));
    switch (cls) {
        case EntityClass::main: main_.insert(std::move(key)); break;
        case EntityClass::other: other_.insert(std::move(key)); break;
        case EntityClass::autophrase: autophrase_.insert(std::move(key)); break;
        case EntityClass::random: throw InputError("random is not an inventory class");
    }
}

std::optional<EntityClass> EntityInventory::class_of(std::string_view surface) const {
    const auto key = token_key(surface);
    if (main_.count(key)) return EntityClass::main;
    if (other_.count(key)) return EntityClass::other;
    if (autophrase_.count(key)) return EntityClass::autophrase;
    return std::nullopt;
}

std::vector<std::string> EntityInventory::overlaps() const {
    std::set<std::string> out;
    for (const auto& s : main_) {
        if (other_.count(s) || autophrase_.count(s)) out.insert(s);
    }
    for (const auto& s : other_) {
        if (autophrase_.count(s)) out.insert(s);
    }
    return {out.begin(), out.end()};
}

std::vector<EntitySpan> tag_entities(std::string_view sentence, const EntityInventory& inv) {
    const auto tokens = tokenize(sentence);
    std::vector<std::string> lowered;
    lowered.reserve(tokens.size());
    for (const auto& t : tokens) lowered.push_back(util::to_lower(sentence.substr(t.start, t.end - t.start)));

    std::vector<EntitySpan> spans;
    std::size_t i = 0;
    while (i < tokens.size()) {
        bool found = false;
        const auto longest = std::min(inv.max_phrase_tokens(), tokens.size() - i);
        for (std::size_t len = longest; len >= 1 && !found; --len) {
            std::string key = lowered[i];
            for (std::size_t j = 1; j < len; ++j) key += " " + lowered[i + j];
            if (auto cls = inv.class_of(key)) {
                spans.push_back(EntitySpan{i, i + len, key, *cls});
                i += len;
                found = true;
            }
        }
        if (!found) ++i;
    }
    return spans;
}

std::string reconstruct(const MaskingExample& ex, std::string_view mask_token) {
    std::string out;
    std::size_t masked_pos = 0;
    std::size_t orig_pos = 0;
    for (const auto& l : ex.labels) {
        if (l.start < orig_pos) throw InputError("mask labels overlap or are unordered");
        const auto gap = l.start - orig_pos;
        if (masked_pos + gap + mask_token.size() > ex.masked.size() ||
            ex.masked.compare(masked_pos + gap, mask_token.size(), mask_token) != 0) {
            throw InputError("masked text does not align with its labels");
        }
        out.append(ex.masked, masked_pos, gap);
        out.append(l.surface);
        masked_pos += gap + mask_token.size();
        orig_pos = l.end;
    }
    out.append(ex.masked, masked_pos);
    return out;
}

MaskingExample mask_entity_15(std::string_view sentence, const EntityInventory& inv, std::uint64_t seed,
                              double budget, std::string_view mask_token) {
    const auto tokens = tokenize(sentence);
    if (tokens.empty()) throw InputError("sentence has no tokens");
    const auto limit = budget_tokens(budget, tokens.size());
    util::Rng rng(seed);

    std::vector<char> taken(tokens.size(), 0);
    std::vector<std::pair<std::size_t, EntityClass>> masked;
    auto spans = tag_entities(sentence, inv);
    for (auto cls : {EntityClass::main, EntityClass::other, EntityClass::autophrase}) {
        std::vector<const EntitySpan*> pick;
        for (const auto& s : spans) {
            if (s.cls == cls) pick.push_back(&s);
        }
        rng.shuffle(pick);
        for (const auto* s : pick) {
            for (auto t = s->first; t < s->last && masked.size() < limit; ++t) {
                taken[t] = 1;
                masked.emplace_back(t, cls);
            }
        }
    }
    if (masked.size() < limit) {
        auto candidates = random_fill_candidates(tokens, taken);
        rng.shuffle(candidates);
        for (auto t : candidates) {
            if (masked.size() >= limit) break;
            masked.emplace_back(t, EntityClass::random);
        }
    }
    return assemble(sentence, tokens, std::move(masked), mask_token);
}

std::optional<MaskingExample> mask_entity_one(std::string_view sentence, const EntityInventory& inv,
                                              std::uint64_t seed, bool single_occurrence,
                                              std::string_view mask_token) {
    const auto tokens = tokenize(sentence);
    const auto spans = tag_entities(sentence, inv);
    util::Rng rng(seed);
    for (auto cls : {EntityClass::main, EntityClass::other}) {
        std::set<std::string> surfaces;
        for (const auto& s : spans) {
            if (s.cls == cls) surfaces.insert(s.surface);
        }
        if (surfaces.empty()) continue;
        auto chosen = *std::next(surfaces.begin(), static_cast<std::ptrdiff_t>(rng.index(surfaces.size())));
        std::vector<const EntitySpan*> occurrences;
        for (const auto& s : spans) {
            if (s.cls == cls && s.surface == chosen) occurrences.push_back(&s);
        }
        if (single_occurrence) occurrences = {occurrences[rng.index(occurrences.size())]};
        std::vector<std::pair<std::size_t, EntityClass>> masked;
        for (const auto* s : occurrences) {
            for (auto t = s->first; t < s->last; ++t) masked.emplace_back(t, cls);
        }
        return assemble(sentence, tokens, std::move(masked), mask_token);
    }
    return std::nullopt;
}

MaskingExample mask_token_15(std::string_view sentence, std::uint64_t seed, double budget,
                             std::string_view mask_token) {
    const auto tokens = tokenize(sentence);
    if (tokens.empty()) throw InputError("sentence has no tokens");
    const auto limit = budget_tokens(budget, tokens.size());
    util::Rng rng(seed);
    auto candidates = random_fill_candidates(tokens, std::vector<char>(tokens.size(), 0));
    rng.shuffle(candidates);
    std::vector<std::pair<std::size_t, EntityClass>> masked;
    for (auto t : candidates) {
        if (masked.size() >= limit) break;
        masked.emplace_back(t, EntityClass::random);
    }
    return assemble(sentence, tokens, std::move(masked), mask_token);
}

MaskingPolicy parse_masking_policy(std::string_view name) {
    if (name == "entity15") return MaskingPolicy::entity15;
    if (name == "entity_one") return MaskingPolicy::entity_one;
    if (name == "token15") return MaskingPolicy::token15;
    throw ConfigError("unknown masking policy \"" + std::string(name) + "\"");
}

std::string_view to_string(MaskingPolicy policy) {
    switch (policy) {
        case MaskingPolicy::entity15: return "entity15";
        case MaskingPolicy::entity_one: return "entity_one";
        case MaskingPolicy::token15: return "token15";
    }
    return "entity15";
}

std::string to_jsonl(const MaskingExample& ex) {
    json masks = json::array();
    for (const auto& l : ex.labels) {
        masks.push_back({{"start", l.start}, {"end", l.end}, {"surface", l.surface}, {"class", to_string(l.cls)}});
    }
    return json{{"text", ex.original}, {"masks", masks}}.dump();
}

MaskingExample from_jsonl(std::string_view line, std::string_view mask_token) {
    try {
        auto doc = json::parse(line);
        const auto text = doc.at("text").get<std::string>();
        const auto tokens = tokenize(text);
        std::vector<std::pair<std::size_t, EntityClass>> masked;
        for (const auto& m : doc.at("masks")) {
            const auto start = m.at("start").get<std::size_t>();
            const auto end = m.at("end").get<std::size_t>();
            auto it = std::find_if(tokens.begin(), tokens.end(),
                                   [&](const Token& t) { return t.start == start && t.end == end; });
            if (it == tokens.end()) throw ParseError("mask offsets do not fall on a token");
            masked.emplace_back(static_cast<std::size_t>(it - tokens.begin()),
                                parse_class(m.at("class").get<std::string>()));
        }
        return assemble(text, tokens, std::move(masked), mask_token);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed dataset record: ") + e.what());
    }
}

namespace {

std::uint64_t line_seed(std::uint64_t seed, std::size_t index) {
    return util::splitmix64(seed ^ 0x6a09e667f3bcc909ULL) + util::splitmix64(index);
}

struct LineOutcome {
    bool usable = false;
    bool selected = false;
    std::optional<MaskingExample> example;
};

LineOutcome process_line(std::string_view raw, std::size_t index, const EntityInventory& inv,
                         const DatasetOptions& o) {
    LineOutcome out;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.usable = !tokenize(line).empty();
    out.selected = out.usable && util::hash_unit(o.seed, index) < o.fraction;
    if (!out.selected) return out;
    const auto s = line_seed(o.seed, index);
    switch (o.policy) {
        case MaskingPolicy::entity15: out.example = mask_entity_15(line, inv, s); break;
        case MaskingPolicy::entity_one: out.example = mask_entity_one(line, inv, s, o.single_occurrence); break;
        case MaskingPolicy::token15: out.example = mask_token_15(line, s); break;
    }
    return out;
}

class DatasetWriter {
public:
    DatasetWriter(const EntityInventory& inv, const DatasetOptions& o) : inv_(inv), o_(o) {
        if (!(o.fraction > 0.0 && o.fraction <= 1.0)) throw ConfigError("fraction must be in (0, 1]");
    }

    // Processes one chunk of consecutive lines starting at `first_index`.
    void chunk(const std::vector<std::string>& lines, std::size_t first_index, std::string& out) {
        std::vector<LineOutcome> results(lines.size());
        util::parallel_for(lines.size(), std::max<std::size_t>(1, o_.jobs), [&](std::size_t i) {
            results[i] = process_line(lines[i], first_index + i, inv_, o_);
        });
        for (const auto& r : results) {
            ++stats_.lines_read;
            stats_.lines_usable += r.usable ? 1 : 0;
            if (!r.selected) continue;
            ++stats_.lines_selected;
            if (!r.example) {
                ++stats_.skipped;
                continue;
            }
            ++stats_.examples;
            for (const auto& l : r.example->labels) ++stats_.masked_tokens[l.cls];
            out += to_jsonl(*r.example);
            out.push_back('\n');
        }
    }

    DatasetStats finish() {
        if (stats_.examples == 0) stats_.warnings.push_back("dataset is empty: no line produced a masking example");
        if (o_.policy == MaskingPolicy::entity_one && stats_.skipped > 0) {
            stats_.warnings.push_back(std::to_string(stats_.skipped) +
                                      " selected lines had no taxonomy entity and were skipped");
        }
        return stats_;
    }

private:
    const EntityInventory& inv_;
    DatasetOptions o_;
    DatasetStats stats_;
};

}  // namespace

DatasetStats build_dataset(const std::vector<std::string>& lines, std::string& output, const EntityInventory& inv,
                           const DatasetOptions& options) {
    DatasetWriter w(inv, options);
    w.chunk(lines, 0, output);
    return w.finish();
}

DatasetStats build_dataset(const std::string& corpus_path, const std::string& output_path,
                           const EntityInventory& inv, const DatasetOptions& options) {
    DatasetWriter w(inv, options);
    std::ifstream in(corpus_path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus " + corpus_path);
    std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write dataset " + output_path);

    constexpr std::size_t kChunk = 4096;
    std::vector<std::string> lines;
    std::size_t index = 0;
    std::string line;
    std::string buffer;
    auto flush = [&] {
        buffer.clear();
        w.chunk(lines, index, buffer);
        out << buffer;
        index += lines.size();
        lines.clear();
    };
    while (std::getline(in, line)) {
        lines.push_back(line);
        if (lines.size() == kChunk) flush();
    }
    if (in.bad()) throw IoError("read failed: " + corpus_path);
    flush();
    if (!out) throw IoError("write failed: " + output_path);
    return w.finish();
}

std::vector<std::string> missing_vocab(const std::set<std::string>& parents, const std::set<std::string>& base_vocab) {
    const MatchPolicy policy;
    std::set<std::string> out;
    for (const auto& p : parents) {
        auto lemma = policy.singularize(canonical_surface(p));
        if (lemma.empty() || base_vocab.count(lemma)) continue;
        out.insert(std::move(lemma));
    }
    return {out.begin(), out.end()};
}

std::set<std::string> load_vocab(const std::string& path) {
    std::set<std::string> vocab;
    const auto text = util::read_file(path);
    for (auto line : util::split_lines(text)) {
        auto t = util::trim(line);
        if (!t.empty()) vocab.emplace(t);
    }
    return vocab;
}

}  // namespace taxoeval
