#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taxoeval {

inline constexpr std::string_view kChildSlot = "{c}";
inline constexpr std::string_view kMaskSlot = "{mask}";

enum class PatternGroup { p1, p2, p3, p4, p5, custom };

struct PromptTemplate {
    std::string id;
    std::string pattern;
    PatternGroup group = PatternGroup::custom;
};

struct PromptQuery {
    std::string template_id;
    std::string child;
    std::string rendered;
};

struct RenderOptions {
    // Append " ." to every rendered prompt.
    bool terminal_period = false;
};

// Derived from an id of the form "p<digit><letters>"; anything else is custom.
PatternGroup group_of(std::string_view template_id);

// The eleven hypernymy cloze patterns, p1a through p5a.
const std::vector<PromptTemplate>& default_templates();

// Throws ConfigError unless `tmpl.pattern` has each placeholder exactly once.
void validate_template(const PromptTemplate& tmpl);

// Plain substitution: no article adjustment and no case change to `child`.
PromptQuery render(const PromptTemplate& tmpl, std::string_view child, std::string_view mask_token,
                   const RenderOptions& options = {});

// One query per template, in template order.
std::vector<PromptQuery> query_pool(std::string_view child, const std::vector<PromptTemplate>& templates,
                                    std::string_view mask_token, const RenderOptions& options = {});

// "id<TAB>pattern" lines; '#' comments and blank lines skipped.
std::vector<PromptTemplate> parse_templates(std::string_view text);
std::vector<PromptTemplate> load_templates(const std::string& path);

// Content hash over ids and patterns, for report configuration echo.
std::string template_set_hash(const std::vector<PromptTemplate>& templates);

}  // namespace taxoeval
