#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taxoeval {

using ConceptId = std::size_t;

struct Concept {
    std::string surface;
    ConceptId id = 0;
};

// A hypernymy link: `parent` is the broader term, `child` the narrower one.
struct Edge {
    std::string parent;
    std::string child;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Canonical surface form: ASCII-lowercased, trimmed, internal whitespace
// collapsed to single spaces.
std::string canonical_surface(std::string_view raw);

// Immutable concept hierarchy reduced to its unique parent-child edges.
// Multiple parents per child are allowed; the edge relation is acyclic.
class Taxonomy {
public:
    class Builder;

    Taxonomy() = default;

    const std::string& name() const noexcept { return name_; }
    const std::vector<Concept>& nodes() const noexcept { return nodes_; }

    // Unique edges in first-occurrence order. Its size is the score denominator.
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    std::optional<ConceptId> find(std::string_view surface) const;
    bool has_edge(std::string_view parent, std::string_view child) const;

    // Shortest distance from a root (a node without parents); roots are level 0.
    // Indexed by ConceptId.
    std::vector<std::size_t> levels() const;

    std::vector<std::string> parents_of(std::string_view child) const;
    std::vector<std::string> children_of(std::string_view parent) const;

    Taxonomy renamed(std::string name) const;

private:
    std::string name_;
    std::vector<Concept> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, ConceptId> index_;
};

// Accumulates edges, deduplicating on the canonical (parent, child) pair.
class Taxonomy::Builder {
public:
    explicit Builder(std::string name = {});

    Builder& add_node(std::string_view surface);
    // Returns false when the edge was already present.
    bool add_edge(std::string_view parent, std::string_view child);

    // Throws StructuralError naming the first edge (in insertion order) that
    // closes a cycle.
    Taxonomy build() &&;

private:
    ConceptId intern(const std::string& surface);

    Taxonomy t_;
    std::unordered_map<std::string, std::size_t> edge_index_;
};

// Tab-separated "parent<TAB>child" lines; '#' comment and blank lines skipped.
Taxonomy parse_edge_list(std::string_view text, std::string name = {});

// JSON tree: {"name": ..., "children": [...]} with a single root. Children may
// be nested objects or bare strings (leaves).
Taxonomy parse_tree(std::string_view text, std::string name = {});

// Dispatches on content: a document whose first non-space byte is '{' is a
// tree, anything else an edge list. The taxonomy is named after the file stem.
Taxonomy load_taxonomy(const std::string& path);

std::string serialize_edge_list(const Taxonomy& t);

// Requires every node to have at most one parent and exactly one root;
// throws StructuralError otherwise.
std::string serialize_tree(const Taxonomy& t);

inline const std::vector<Edge>& edge_set(const Taxonomy& t) { return t.edges(); }

}  // namespace taxoeval
