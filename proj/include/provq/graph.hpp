#pragma once

// PROV-core property graph: three vertex types, five edge types, dense ids.

#include <array>
#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "provq/error.hpp"

namespace provq {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr VertexId kNoVertex = static_cast<VertexId>(-1);

enum class VertexType : std::uint8_t { Entity = 0, Activity = 1, Agent = 2 };
inline constexpr std::size_t kVertexTypeCount = 3;

enum class EdgeType : std::uint8_t {
    Used = 0,
    WasGeneratedBy = 1,
    WasAssociatedWith = 2,
    WasAttributedTo = 3,
    WasDerivedFrom = 4,
};
inline constexpr std::size_t kEdgeTypeCount = 5;

inline constexpr std::array<VertexType, kVertexTypeCount> kAllVertexTypes{
    VertexType::Entity, VertexType::Activity, VertexType::Agent};
inline constexpr std::array<EdgeType, kEdgeTypeCount> kAllEdgeTypes{
    EdgeType::Used, EdgeType::WasGeneratedBy, EdgeType::WasAssociatedWith,
    EdgeType::WasAttributedTo, EdgeType::WasDerivedFrom};

constexpr std::string_view to_string(VertexType t)
{
    switch (t) {
    case VertexType::Entity: return "ENTITY";
    case VertexType::Activity: return "ACTIVITY";
    case VertexType::Agent: return "AGENT";
    }
    return "?";
}

constexpr std::string_view to_string(EdgeType t)
{
    switch (t) {
    case EdgeType::Used: return "used";
    case EdgeType::WasGeneratedBy: return "wasGeneratedBy";
    case EdgeType::WasAssociatedWith: return "wasAssociatedWith";
    case EdgeType::WasAttributedTo: return "wasAttributedTo";
    case EdgeType::WasDerivedFrom: return "wasDerivedFrom";
    }
    return "?";
}

inline VertexType parse_vertex_type(std::string_view s)
{
    for (auto t : kAllVertexTypes)
        if (to_string(t) == s)
            return t;
    throw DataError("unknown vertex type '" + std::string(s) + "'");
}

inline EdgeType parse_edge_type(std::string_view s)
{
    for (auto t : kAllEdgeTypes)
        if (to_string(t) == s)
            return t;
    throw DataError("unknown edge type '" + std::string(s) + "'");
}

/// Endpoint typing of the five PROV-core relations.
constexpr VertexType edge_source_type(EdgeType t)
{
    switch (t) {
    case EdgeType::Used:
    case EdgeType::WasAssociatedWith: return VertexType::Activity;
    default: return VertexType::Entity;
    }
}

constexpr VertexType edge_target_type(EdgeType t)
{
    switch (t) {
    case EdgeType::Used:
    case EdgeType::WasDerivedFrom: return VertexType::Entity;
    case EdgeType::WasGeneratedBy: return VertexType::Activity;
    default: return VertexType::Agent;
    }
}

/// Ancestry edges participate in the acyclicity requirement.
constexpr bool is_ancestry_edge(EdgeType t)
{
    return t == EdgeType::Used || t == EdgeType::WasGeneratedBy || t == EdgeType::WasDerivedFrom;
}

using PropValue = std::variant<std::string, std::int64_t, double, bool>;
using Props = std::map<std::string, PropValue, std::less<>>;

inline std::string prop_to_string(const PropValue& v)
{
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>)
                return x;
            else if constexpr (std::is_same_v<T, bool>)
                return x ? "true" : "false";
            else
                return std::to_string(x);
        },
        v);
}

struct Vertex
{
    VertexId id = 0;
    VertexType type = VertexType::Entity;
    std::int64_t seq = 0; // order of being
    Props props;

    friend bool operator==(const Vertex&, const Vertex&) = default;
};

struct Edge
{
    EdgeId id = 0;
    EdgeType type = EdgeType::Used;
    VertexId src = 0;
    VertexId dst = 0;
    Props props;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// One adjacency slot: the neighbor on the other side and the edge used.
struct Adj
{
    VertexId v;
    EdgeId e;
};

/// Immutable typed property DAG. Built once, read concurrently.
class ProvGraph
{
public:
    ProvGraph() { finish(); }

    /// Places vertices and edges by id and builds adjacency. Does not validate.
    /// Throws DataError on duplicate or non-dense ids and dangling endpoints.
    static ProvGraph build(std::vector<Vertex> vertices, std::vector<Edge> edges,
                           std::set<std::string, std::less<>> property_types = {})
    {
        ProvGraph g;
        const auto nv = vertices.size();
        g.vertices_.resize(nv);
        std::vector<bool> seen(nv, false);
        for (auto& v : vertices) {
            if (v.id >= nv)
                throw DataError("vertex ids are not dense: id " + std::to_string(v.id) +
                                " with " + std::to_string(nv) + " vertices");
            if (seen[v.id])
                throw DataError("duplicate vertex id " + std::to_string(v.id));
            seen[v.id] = true;
            for (const auto& [k, _] : v.props)
                property_types.insert(k);
            g.vertices_[v.id] = std::move(v);
        }
        const auto ne = edges.size();
        g.edges_.resize(ne);
        std::vector<bool> eseen(ne, false);
        for (auto& e : edges) {
            if (e.id >= ne)
                throw DataError("edge ids are not dense: id " + std::to_string(e.id) + " with " +
                                std::to_string(ne) + " edges");
            if (eseen[e.id])
                throw DataError("duplicate edge id " + std::to_string(e.id));
            if (e.src >= nv || e.dst >= nv)
                throw DataError("edge " + std::to_string(e.id) + " has a dangling endpoint");
            eseen[e.id] = true;
            for (const auto& [k, _] : e.props)
                property_types.insert(k);
            g.edges_[e.id] = std::move(e);
        }
        g.property_types_ = std::move(property_types);
        g.finish();
        return g;
    }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    const Vertex& vertex(VertexId v) const { return vertices_[v]; }
    const Edge& edge(EdgeId e) const { return edges_[e]; }
    std::span<const Vertex> vertices() const noexcept { return vertices_; }
    std::span<const Edge> edges() const noexcept { return edges_; }

    VertexType type(VertexId v) const { return vertices_[v].type; }
    std::int64_t seq(VertexId v) const { return vertices_[v].seq; }

    std::span<const Adj> out(VertexId v, EdgeType t) const { return out_[idx(t)].row(v); }
    std::span<const Adj> in(VertexId v, EdgeType t) const { return in_[idx(t)].row(v); }

    /// Dense index of v among the vertices of its own type.
    std::uint32_t local_index(VertexId v) const { return local_index_[v]; }
    std::size_t count(VertexType t) const { return by_type_[idx(t)].size(); }
    /// Vertices of one type in ascending id order.
    std::span<const VertexId> vertices_of(VertexType t) const { return by_type_[idx(t)]; }

    const std::set<std::string, std::less<>>& property_types() const noexcept
    {
        return property_types_;
    }

    /// True when every USED target is older than its activity and every generated
    /// entity is newer than its activity. Early stopping relies on this.
    bool temporally_ordered() const noexcept { return temporally_ordered_; }

    /// Entities sorted by order of being (oldest first).
    std::vector<VertexId> entities_by_seq() const
    {
        auto ents = std::vector<VertexId>(by_type_[0].begin(), by_type_[0].end());
        std::sort(ents.begin(), ents.end(),
                  [&](VertexId a, VertexId b) { return seq(a) < seq(b); });
        return ents;
    }

    friend bool operator==(const ProvGraph& a, const ProvGraph& b)
    {
        return a.vertices_ == b.vertices_ && a.edges_ == b.edges_ &&
               a.property_types_ == b.property_types_;
    }

private:
    struct Csr
    {
        std::vector<std::uint32_t> offsets;
        std::vector<Adj> items;
        std::span<const Adj> row(VertexId v) const
        {
            return {items.data() + offsets[v], items.data() + offsets[v + 1]};
        }
    };

    static constexpr std::size_t idx(EdgeType t) { return static_cast<std::size_t>(t); }
    static constexpr std::size_t idx(VertexType t) { return static_cast<std::size_t>(t); }

    void finish()
    {
        const auto nv = vertices_.size();
        for (std::size_t t = 0; t < kEdgeTypeCount; ++t) {
            auto& o = out_[t];
            auto& i = in_[t];
            o.offsets.assign(nv + 1, 0);
            i.offsets.assign(nv + 1, 0);
            for (const auto& e : edges_)
                if (idx(e.type) == t) {
                    ++o.offsets[e.src + 1];
                    ++i.offsets[e.dst + 1];
                }
            for (std::size_t v = 0; v < nv; ++v) {
                o.offsets[v + 1] += o.offsets[v];
                i.offsets[v + 1] += i.offsets[v];
            }
            o.items.resize(o.offsets[nv]);
            i.items.resize(i.offsets[nv]);
            auto ofill = std::vector<std::uint32_t>(o.offsets.begin(), o.offsets.end() - 1);
            auto ifill = std::vector<std::uint32_t>(i.offsets.begin(), i.offsets.end() - 1);
            // edges_ is in id order, so each row is sorted by edge id
            for (const auto& e : edges_)
                if (idx(e.type) == t) {
                    o.items[ofill[e.src]++] = Adj{e.dst, e.id};
                    i.items[ifill[e.dst]++] = Adj{e.src, e.id};
                }
        }
        for (auto& b : by_type_)
            b.clear();
        local_index_.resize(nv);
        for (const auto& v : vertices_) {
            auto& b = by_type_[idx(v.type)];
            local_index_[v.id] = static_cast<std::uint32_t>(b.size());
            b.push_back(v.id);
        }
        temporally_ordered_ = true;
        for (const auto& e : edges_) {
            if (e.type == EdgeType::Used && !(seq(e.dst) < seq(e.src)))
                temporally_ordered_ = false;
            if (e.type == EdgeType::WasGeneratedBy && !(seq(e.dst) < seq(e.src)))
                temporally_ordered_ = false;
        }
    }

    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::set<std::string, std::less<>> property_types_;
    std::array<Csr, kEdgeTypeCount> out_;
    std::array<Csr, kEdgeTypeCount> in_;
    std::array<std::vector<VertexId>, kVertexTypeCount> by_type_;
    std::vector<std::uint32_t> local_index_;
    bool temporally_ordered_ = true;
};

/// Incremental construction in order of being: each added vertex gets the next
/// id and seq = id.
class GraphBuilder
{
public:
    VertexId add_vertex(VertexType t, Props props = {})
    {
        const auto id = static_cast<VertexId>(vertices_.size());
        vertices_.push_back({id, t, static_cast<std::int64_t>(id), std::move(props)});
        return id;
    }
    VertexId entity(Props props = {}) { return add_vertex(VertexType::Entity, std::move(props)); }
    VertexId activity(Props props = {}) { return add_vertex(VertexType::Activity, std::move(props)); }
    VertexId agent(Props props = {}) { return add_vertex(VertexType::Agent, std::move(props)); }

    EdgeId add_edge(EdgeType t, VertexId src, VertexId dst, Props props = {})
    {
        const auto id = static_cast<EdgeId>(edges_.size());
        edges_.push_back({id, t, src, dst, std::move(props)});
        return id;
    }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    const Vertex& vertex(VertexId v) const { return vertices_[v]; }

    ProvGraph build(std::set<std::string, std::less<>> property_types = {}) const
    {
        return ProvGraph::build(vertices_, edges_, std::move(property_types));
    }

private:
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation
{
    enum class Kind { EndpointTyping, Cycle, SeqNotPermutation };
    Kind kind;
    std::string message;
    std::vector<VertexId> vertices; // offending vertices (the cycle, for Kind::Cycle)
};

using ValidationReport = std::vector<Violation>;

/// Reports endpoint-typing violations, cycles over used/wasGeneratedBy/wasDerivedFrom,
/// and seq values that are not a permutation of 0..|V|-1. Empty means valid.
inline ValidationReport validate(const ProvGraph& g)
{
    ValidationReport report;
    for (const auto& e : g.edges()) {
        const auto st = g.type(e.src), dt = g.type(e.dst);
        if (st != edge_source_type(e.type) || dt != edge_target_type(e.type)) {
            report.push_back({Violation::Kind::EndpointTyping,
                              "edge " + std::to_string(e.id) + " (" +
                                  std::string(to_string(e.type)) + ") connects " +
                                  std::string(to_string(st)) + " -> " + std::string(to_string(dt)),
                              {e.src, e.dst}});
        }
    }

    // Kahn's algorithm; whatever is left over sits on or behind a cycle.
    const auto n = g.num_vertices();
    std::vector<std::uint32_t> indeg(n, 0);
    for (const auto& e : g.edges())
        if (is_ancestry_edge(e.type))
            ++indeg[e.dst];
    std::vector<VertexId> stack;
    for (VertexId v = 0; v < n; ++v)
        if (indeg[v] == 0)
            stack.push_back(v);
    std::size_t removed = 0;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        ++removed;
        for (auto t : {EdgeType::Used, EdgeType::WasGeneratedBy, EdgeType::WasDerivedFrom})
            for (const auto& a : g.out(v, t))
                if (--indeg[a.v] == 0)
                    stack.push_back(a.v);
    }
    if (removed != n) {
        std::vector<VertexId> left;
        for (VertexId v = 0; v < n; ++v)
            if (indeg[v] != 0)
                left.push_back(v);
        report.push_back({Violation::Kind::Cycle,
                          "ancestry edges form a cycle through " + std::to_string(left.size()) +
                              " vertices",
                          std::move(left)});
    }

    std::vector<bool> seen(n, false);
    bool perm = true;
    for (const auto& v : g.vertices()) {
        if (v.seq < 0 || static_cast<std::size_t>(v.seq) >= n || seen[v.seq]) {
            perm = false;
            break;
        }
        seen[v.seq] = true;
    }
    if (!perm)
        report.push_back({Violation::Kind::SeqNotPermutation,
                          "seq values are not a permutation of 0..|V|-1", {}});
    return report;
}

} // namespace provq
