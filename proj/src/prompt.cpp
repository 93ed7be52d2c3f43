#include "taxoeval/prompt.hpp"

#include <algorithm>
#include <set>

#include "taxoeval/error.hpp"
#include "util/hash.hpp"
#include "util/text.hpp"

namespace taxoeval {

PatternGroup group_of(std::string_view id) {
    if (id.size() < 2 || id[0] != 'p') return PatternGroup::custom;
    for (std::size_t i = 2; i < id.size(); ++i) {
        if (id[i] < 'a' || id[i] > 'z') return PatternGroup::custom;
    }
    switch (id[1]) {
        case '1': return PatternGroup::p1;
        case '2': return PatternGroup::p2;
        case '3': return PatternGroup::p3;
        case '4': return PatternGroup::p4;
        case '5': return PatternGroup::p5;
        default: return PatternGroup::custom;
    }
}

const std::vector<PromptTemplate>& default_templates() {
    static const std::vector<PromptTemplate> templates = [] {
        const std::pair<const char*, const char*> rows[] = {
            {"p1a", "{c} {mask}"},
            {"p1b", "{mask} {c}"},
            {"p2a", "{c} is a {mask}"},
            {"p2b", "{c} is an {mask}"},
            {"p3a", "{c} is a kind of {mask}"},
            {"p3b", "{c} is a type of {mask}"},
            {"p3c", "{c} is an example of {mask}"},
            {"p4a", "{mask} such as {c}"},
            {"p4b", "A {mask} such as {c}"},
            {"p4c", "An {mask} such as {c}"},
            {"p5a", "My favorite {mask} is {c}"},
        };
        std::vector<PromptTemplate> out;
        for (auto [id, pattern] : rows) out.push_back({id, pattern, group_of(id)});
        return out;
    }();
    return templates;
}

void validate_template(const PromptTemplate& tmpl) {
    if (util::count_occurrences(tmpl.pattern, kChildSlot) != 1) {
        throw ConfigError("template " + tmpl.id + ": pattern needs exactly one {c}");
    }
    if (util::count_occurrences(tmpl.pattern, kMaskSlot) != 1) {
        throw ConfigError("template " + tmpl.id + ": pattern needs exactly one {mask}");
    }
}

PromptQuery render(const PromptTemplate& tmpl, std::string_view child, std::string_view mask_token,
                   const RenderOptions& options) {
    validate_template(tmpl);
    if (child.empty()) throw InputError("empty child term");
    if (mask_token.empty()) throw InputError("empty mask token");
    if (child.find(mask_token) != std::string_view::npos) {
        throw InputError("child term \"" + std::string(child) + "\" contains the mask token");
    }

    const auto& p = tmpl.pattern;
    const auto c_at = p.find(kChildSlot);
    const auto m_at = p.find(kMaskSlot);
    std::string out;
    out.reserve(p.size() + child.size() + mask_token.size());
    auto first = std::min(c_at, m_at);
    auto second = std::max(c_at, m_at);
    auto fill = [&](std::size_t at) -> std::pair<std::string_view, std::size_t> {
        return at == c_at ? std::pair{child, kChildSlot.size()} : std::pair{mask_token, kMaskSlot.size()};
    };
    auto [v1, len1] = fill(first);
    auto [v2, len2] = fill(second);
    out.append(p, 0, first);
    out.append(v1);
    out.append(p, first + len1, second - first - len1);
    out.append(v2);
    out.append(p, second + len2);
    if (options.terminal_period) out.append(" .");
    return PromptQuery{tmpl.id, std::string(child), std::move(out)};
}

std::vector<PromptQuery> query_pool(std::string_view child, const std::vector<PromptTemplate>& templates,
                                    std::string_view mask_token, const RenderOptions& options) {
    if (templates.empty()) throw ConfigError("empty template set");
    std::vector<PromptQuery> pool;
    pool.reserve(templates.size());
    for (const auto& t : templates) pool.push_back(render(t, child, mask_token, options));
    return pool;
}

std::vector<PromptTemplate> parse_templates(std::string_view text) {
    std::vector<PromptTemplate> out;
    std::set<std::string> ids;
    std::size_t line_no = 0;
    for (auto line : util::split_lines(text)) {
        ++line_no;
        auto trimmed = util::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("missing tab separator", line_no);
        std::string id(util::trim(line.substr(0, tab)));
        std::string pattern(util::trim(line.substr(tab + 1)));
        if (id.empty()) throw ParseError("empty template id", line_no);
        if (!ids.insert(id).second) throw ParseError("duplicate template id " + id, line_no);
        PromptTemplate t{id, pattern, group_of(id)};
        try {
            validate_template(t);
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), line_no);
        }
        out.push_back(std::move(t));
    }
    if (out.empty()) throw ConfigError("template file defines no templates");
    return out;
}

std::vector<PromptTemplate> load_templates(const std::string& path) {
    return parse_templates(util::read_file(path));
}

std::string template_set_hash(const std::vector<PromptTemplate>& templates) {
    std::uint64_t h = util::fnv1a64("");
    for (const auto& t : templates) {
        h = util::fnv1a64(t.id, h);
        h = util::fnv1a64("\t", h);
        h = util::fnv1a64(t.pattern, h);
        h = util::fnv1a64("\n", h);
    }
    return util::hex64(h);
}

}  // namespace taxoeval
