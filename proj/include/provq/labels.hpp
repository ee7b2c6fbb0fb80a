#pragma once

// Effective vertex and edge labels seen by the grammar solvers.
// A vertex label is a small integer; kEpsilon marks an excluded vertex.
// Edges carry no label payload beyond their type, so only their liveness is stored.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "provq/graph.hpp"

namespace provq {

inline constexpr std::uint32_t kEpsilon = UINT32_MAX;

class LabelOracle
{
public:
    LabelOracle() = default;

    /// Plain labels: each vertex is labeled by its type alone.
    explicit LabelOracle(const ProvGraph& g)
        : vlabel_(g.num_vertices()), edge_alive_(g.num_edges(), 1)
    {
        for (const auto& v : g.vertices())
            vlabel_[v.id] = static_cast<std::uint32_t>(v.type);
    }

    /// Extended labels: vertices of a listed type are labeled by (type, value of the
    /// given property). A missing property is its own value.
    LabelOracle(const ProvGraph& g, const std::map<VertexType, std::string>& label_props)
        : LabelOracle(g)
    {
        if (label_props.empty())
            return;
        std::unordered_map<std::string, std::uint32_t> intern;
        for (auto t : kAllVertexTypes)
            intern.emplace(std::string(1, static_cast<char>('0' + static_cast<int>(t))),
                           static_cast<std::uint32_t>(t));
        for (const auto& v : g.vertices()) {
            auto it = label_props.find(v.type);
            if (it == label_props.end())
                continue;
            std::string key(1, static_cast<char>('0' + static_cast<int>(v.type)));
            auto p = v.props.find(it->second);
            key += p == v.props.end() ? std::string("\x1f") : "=" + prop_to_string(p->second);
            auto [pos, _] = intern.emplace(key, static_cast<std::uint32_t>(intern.size()));
            vlabel_[v.id] = pos->second;
        }
        extended_ = true;
    }

    std::uint32_t vertex_label(VertexId v) const { return vlabel_[v]; }
    bool vertex_alive(VertexId v) const { return vlabel_[v] != kEpsilon; }
    bool edge_alive(EdgeId e) const { return edge_alive_[e] != 0; }
    bool extended() const noexcept { return extended_; }

    void exclude_vertex(VertexId v) { vlabel_[v] = kEpsilon; }
    void exclude_edge(EdgeId e) { edge_alive_[e] = 0; }

    /// Equal non-epsilon labels.
    bool same_label(VertexId a, VertexId b) const
    {
        return vlabel_[a] != kEpsilon && vlabel_[a] == vlabel_[b];
    }

private:
    std::vector<std::uint32_t> vlabel_;
    std::vector<std::uint8_t> edge_alive_;
    bool extended_ = false;
};

} // namespace provq
