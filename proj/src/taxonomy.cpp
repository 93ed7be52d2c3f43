#include "taxoeval/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>

#include <json.hpp>

#include "taxoeval/error.hpp"
#include "util/text.hpp"

namespace taxoeval {

using nlohmann::json;

std::string canonical_surface(std::string_view raw) {
    return util::to_lower(util::collapse_ws(raw));
}

std::optional<ConceptId> Taxonomy::find(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool Taxonomy::has_edge(std::string_view parent, std::string_view child) const {
    return std::any_of(edges_.begin(), edges_.end(),
                       [&](const Edge& e) { return e.parent == parent && e.child == child; });
}

std::vector<std::size_t> Taxonomy::levels() const {
    constexpr auto unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::vector<ConceptId>> children(nodes_.size());
    std::vector<std::size_t> in_degree(nodes_.size(), 0);
    for (const auto& e : edges_) {
        auto p = index_.at(e.parent);
        auto c = index_.at(e.child);
        children[p].push_back(c);
        ++in_degree[c];
    }
    std::vector<std::size_t> level(nodes_.size(), unset);
    std::deque<ConceptId> queue;
    for (ConceptId id = 0; id < nodes_.size(); ++id) {
        if (in_degree[id] == 0) {
            level[id] = 0;
            queue.push_back(id);
        }
    }
    while (!queue.empty()) {
        auto id = queue.front();
        queue.pop_front();
        for (auto c : children[id]) {
            if (level[c] == unset) {
                level[c] = level[id] + 1;
                queue.push_back(c);
            }
        }
    }
    return level;
}

std::vector<std::string> Taxonomy::parents_of(std::string_view child) const {
    std::vector<std::string> out;
    for (const auto& e : edges_) {
        if (e.child == child) out.push_back(e.parent);
    }
    return out;
}

std::vector<std::string> Taxonomy::children_of(std::string_view parent) const {
    std::vector<std::string> out;
    for (const auto& e : edges_) {
        if (e.parent == parent) out.push_back(e.child);
    }
    return out;
}

Taxonomy Taxonomy::renamed(std::string name) const {
    Taxonomy t = *this;
    t.name_ = std::move(name);
    return t;
}

Taxonomy::Builder::Builder(std::string name) { t_.name_ = std::move(name); }

ConceptId Taxonomy::Builder::intern(const std::string& surface) {
    auto [it, inserted] = t_.index_.try_emplace(surface, t_.nodes_.size());
    if (inserted) t_.nodes_.push_back(Concept{surface, it->second});
    return it->second;
}

Taxonomy::Builder& Taxonomy::Builder::add_node(std::string_view surface) {
    auto s = canonical_surface(surface);
    if (s.empty()) throw InputError("empty concept surface");
    intern(s);
    return *this;
}

bool Taxonomy::Builder::add_edge(std::string_view parent, std::string_view child) {
    auto p = canonical_surface(parent);
    auto c = canonical_surface(child);
    if (p.empty() || c.empty()) throw InputError("empty concept surface");
    if (p == c) throw StructuralError("self-loop on \"" + p + "\"");
    intern(p);
    intern(c);
    std::string key = p;
    key.push_back('\t');
    key += c;
    auto [it, inserted] = edge_index_.try_emplace(std::move(key), t_.edges_.size());
    if (inserted) t_.edges_.push_back(Edge{std::move(p), std::move(c)});
    return inserted;
}

namespace {

// Kahn's algorithm; true when the graph is acyclic.
bool acyclic(std::size_t n, const std::vector<std::pair<ConceptId, ConceptId>>& edges) {
    std::vector<std::vector<ConceptId>> out(n);
    std::vector<std::size_t> in_degree(n, 0);
    for (auto [p, c] : edges) {
        out[p].push_back(c);
        ++in_degree[c];
    }
    std::vector<ConceptId> stack;
    for (ConceptId i = 0; i < n; ++i) {
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
    return seen == n;
}

bool reachable(const std::vector<std::vector<ConceptId>>& out, ConceptId from, ConceptId to) {
    std::vector<char> visited(out.size(), 0);
    std::vector<ConceptId> stack{from};
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        if (visited[v]) continue;
        visited[v] = 1;
        for (auto c : out[v]) stack.push_back(c);
    }
    return false;
}

}  // namespace

Taxonomy Taxonomy::Builder::build() && {
    std::vector<std::pair<ConceptId, ConceptId>> ids;
    ids.reserve(t_.edges_.size());
    for (const auto& e : t_.edges_) ids.emplace_back(t_.index_.at(e.parent), t_.index_.at(e.child));
    if (!acyclic(t_.nodes_.size(), ids)) {
        // Replay in insertion order to name the edge that closes the cycle.
        std::vector<std::vector<ConceptId>> out(t_.nodes_.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto [p, c] = ids[i];
            if (reachable(out, c, p)) {
                const auto& e = t_.edges_[i];
                throw StructuralError("cycle closed by edge \"" + e.parent + "\" -> \"" + e.child + "\"");
            }
            out[p].push_back(c);
        }
    }
    return std::move(t_);
}

Taxonomy parse_edge_list(std::string_view text, std::string name) {
    Taxonomy::Builder b(std::move(name));
    std::size_t line_no = 0;
    for (auto line : util::split_lines(text)) {
        ++line_no;
        auto trimmed = util::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("missing tab separator", line_no);
        if (line.find('\t', tab + 1) != std::string_view::npos) {
            throw ParseError("more than one tab separator", line_no);
        }
        auto parent = util::trim(line.substr(0, tab));
        auto child = util::trim(line.substr(tab + 1));
        if (parent.empty() || child.empty()) throw ParseError("empty field", line_no);
        try {
            b.add_edge(parent, child);
        } catch (const StructuralError& e) {
            throw StructuralError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return std::move(b).build();
}

namespace {

std::string node_name(const json& node, const std::string& where) {
    if (node.is_string()) return node.get<std::string>();
    if (!node.is_object()) throw ParseError(where + ": node must be an object or string");
    auto it = node.find("name");
    if (it == node.end() || !it->is_string()) throw ParseError(where + ": missing string \"name\"");
    return it->get<std::string>();
}

void walk_tree(const json& node, const std::string& surface, Taxonomy::Builder& b) {
    if (node.is_string()) return;
    auto it = node.find("children");
    if (it == node.end() || it->is_null()) return;
    if (!it->is_array()) throw ParseError("\"" + surface + "\": \"children\" must be an array");
    std::set<std::string> siblings;
    for (const auto& child : *it) {
        auto child_surface = canonical_surface(node_name(child, "child of \"" + surface + "\""));
        if (child_surface.empty()) throw ParseError("empty name under \"" + surface + "\"");
        if (!siblings.insert(child_surface).second) {
            throw ParseError("duplicate sibling \"" + child_surface + "\" under \"" + surface + "\"");
        }
        b.add_edge(surface, child_surface);
        walk_tree(child, child_surface, b);
    }
}

}  // namespace

Taxonomy parse_tree(std::string_view text, std::string name) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (doc.is_array()) throw ParseError("tree document must have a single root object");
    auto root = canonical_surface(node_name(doc, "root"));
    if (root.empty()) throw ParseError("empty root name");
    Taxonomy::Builder b(std::move(name));
    b.add_node(root);
    walk_tree(doc, root, b);
    return std::move(b).build();
}

Taxonomy load_taxonomy(const std::string& path) {
    auto text = util::read_file(path);
    auto name = std::filesystem::path(path).stem().string();
    auto body = util::trim(text);
    if (!body.empty() && body.front() == '{') return parse_tree(text, std::move(name));
    return parse_edge_list(text, std::move(name));
}

std::string serialize_edge_list(const Taxonomy& t) {
    std::string out;
    for (const auto& e : t.edges()) {
        out += e.parent;
        out.push_back('\t');
        out += e.child;
        out.push_back('\n');
    }
    return out;
}

std::string serialize_tree(const Taxonomy& t) {
    std::unordered_map<std::string, std::vector<std::string>> children;
    std::unordered_map<std::string, std::size_t> in_degree;
    for (const auto& e : t.edges()) {
        children[e.parent].push_back(e.child);
        if (++in_degree[e.child] > 1) {
            throw StructuralError("\"" + e.child + "\" has several parents; not a tree");
        }
    }
    std::vector<std::string> roots;
    for (const auto& n : t.nodes()) {
        if (!in_degree.count(n.surface)) roots.push_back(n.surface);
    }
    if (roots.size() != 1) {
        throw StructuralError("tree serialization needs exactly one root, found " +
                              std::to_string(roots.size()));
    }
    std::function<json(const std::string&)> emit = [&](const std::string& s) {
        json node = {{"name", s}, {"children", json::array()}};
        if (auto it = children.find(s); it != children.end()) {
            for (const auto& c : it->second) node["children"].push_back(emit(c));
        }
        return node;
    };
    return emit(roots.front()).dump(2) + "\n";
}

}  // namespace taxoeval
