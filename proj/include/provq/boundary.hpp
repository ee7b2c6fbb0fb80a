#pragma once

// Boundary criteria: exclusion predicates over vertices and edges, and
// expansion requests (entities, k).
//
// An excluder is a conjunction of conditions; a vertex or edge matching any
// excluder is excluded and its label becomes epsilon.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "provq/graph_io.hpp"
#include "provq/labels.hpp"

namespace provq {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge, Contains };

inline std::string_view to_string(CmpOp op)
{
    switch (op) {
    case CmpOp::Eq: return "eq";
    case CmpOp::Ne: return "ne";
    case CmpOp::Lt: return "lt";
    case CmpOp::Le: return "le";
    case CmpOp::Gt: return "gt";
    case CmpOp::Ge: return "ge";
    case CmpOp::Contains: return "contains";
    }
    return "eq";
}

inline CmpOp parse_cmp_op(std::string_view s)
{
    for (auto op : {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Contains})
        if (to_string(op) == s)
            return op;
    throw DataError("unknown comparison operator '" + std::string(s) + "'");
}

/// Compares a stored property with a requested value. Numbers compare across
/// int/float; strings compare lexicographically; mismatched kinds never match
/// (except Ne).
inline bool compare_prop(const PropValue& have, CmpOp op, const PropValue& want)
{
    auto num = [](const PropValue& v) -> std::optional<double> {
        if (auto* i = std::get_if<std::int64_t>(&v))
            return static_cast<double>(*i);
        if (auto* d = std::get_if<double>(&v))
            return *d;
        return std::nullopt;
    };
    int cmp = 0;
    if (auto a = num(have), b = num(want); a && b) {
        cmp = *a < *b ? -1 : (*a > *b ? 1 : 0);
    } else if (have.index() == want.index()) {
        if (auto* s = std::get_if<std::string>(&have)) {
            const auto& w = std::get<std::string>(want);
            if (op == CmpOp::Contains)
                return s->find(w) != std::string::npos;
            cmp = s->compare(w);
            cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
        } else {
            const bool x = std::get<bool>(have), y = std::get<bool>(want);
            cmp = x == y ? 0 : (x ? 1 : -1);
        }
    } else {
        return op == CmpOp::Ne;
    }
    switch (op) {
    case CmpOp::Eq: return cmp == 0;
    case CmpOp::Ne: return cmp != 0;
    case CmpOp::Lt: return cmp < 0;
    case CmpOp::Le: return cmp <= 0;
    case CmpOp::Gt: return cmp > 0;
    case CmpOp::Ge: return cmp >= 0;
    case CmpOp::Contains: return false;
    }
    return false;
}

struct PropCondition
{
    std::string prop;
    CmpOp op = CmpOp::Eq;
    PropValue value;

    bool matches(const Props& props) const
    {
        auto it = props.find(prop);
        return it != props.end() && compare_prop(it->second, op, value);
    }
};

struct VertexPredicate
{
    std::optional<VertexType> type;
    std::vector<VertexId> ids;            // empty: any id
    std::vector<PropCondition> props;
    std::optional<std::int64_t> seq_lt;   // when: created before
    std::optional<std::int64_t> seq_ge;   // when: created at or after
    std::optional<std::string> agent;     // who: linked by wasAssociatedWith/wasAttributedTo to an agent with this name

    bool matches(const ProvGraph& g, VertexId v) const
    {
        const auto& vx = g.vertex(v);
        if (type && vx.type != *type)
            return false;
        if (!ids.empty() && std::find(ids.begin(), ids.end(), v) == ids.end())
            return false;
        for (const auto& c : props)
            if (!c.matches(vx.props))
                return false;
        if (seq_lt && !(vx.seq < *seq_lt))
            return false;
        if (seq_ge && !(vx.seq >= *seq_ge))
            return false;
        if (agent) {
            bool found = false;
            for (auto t : {EdgeType::WasAssociatedWith, EdgeType::WasAttributedTo})
                for (const auto& a : g.out(v, t)) {
                    auto it = g.vertex(a.v).props.find("name");
                    if (it != g.vertex(a.v).props.end() && prop_to_string(it->second) == *agent)
                        found = true;
                }
            if (!found)
                return false;
        }
        return true;
    }
};

struct EdgePredicate
{
    std::optional<EdgeType> type;
    std::vector<EdgeId> ids;
    std::vector<PropCondition> props;

    bool matches(const ProvGraph& g, EdgeId e) const
    {
        const auto& ex = g.edge(e);
        if (type && ex.type != *type)
            return false;
        if (!ids.empty() && std::find(ids.begin(), ids.end(), e) == ids.end())
            return false;
        for (const auto& c : props)
            if (!c.matches(ex.props))
                return false;
        return true;
    }
};

struct Expansion
{
    std::vector<VertexId> entities;
    std::uint32_t k = 0;
};

inline constexpr std::uint32_t kDefaultMaxExpansionK = 8;

struct BoundarySpec
{
    std::vector<VertexPredicate> vertex_excluders;
    std::vector<EdgePredicate> edge_excluders;
    std::vector<Expansion> expansions;

    bool empty() const
    {
        return vertex_excluders.empty() && edge_excluders.empty() && expansions.empty();
    }

    bool excludes_vertex(const ProvGraph& g, VertexId v) const
    {
        for (const auto& p : vertex_excluders)
            if (p.matches(g, v))
                return true;
        return false;
    }

    bool excludes_edge(const ProvGraph& g, EdgeId e) const
    {
        for (const auto& p : edge_excluders)
            if (p.matches(g, e))
                return true;
        return false;
    }

    /// Applies the exclusions to a label oracle. Vertices in `exempt` (the query's
    /// own source and destination entities) keep their labels.
    void apply(const ProvGraph& g, LabelOracle& lab, const std::set<VertexId>& exempt) const
    {
        if (!vertex_excluders.empty())
            for (VertexId v = 0; v < g.num_vertices(); ++v)
                if (!exempt.count(v) && excludes_vertex(g, v))
                    lab.exclude_vertex(v);
        if (!edge_excluders.empty())
            for (EdgeId e = 0; e < g.num_edges(); ++e)
                if (excludes_edge(g, e))
                    lab.exclude_edge(e);
    }
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Json conditions_to_json(const std::vector<PropCondition>& cs)
{
    Json a = Json::array();
    for (const auto& c : cs)
        a.push_back(Json{{"prop", c.prop}, {"op", to_string(c.op)}, {"value", prop_to_json(c.value)}});
    return a;
}

inline std::vector<PropCondition> conditions_from_json(const Json& j)
{
    std::vector<PropCondition> out;
    auto one = [&](const Json& c) {
        if (!c.is_object() || !c.contains("prop") || !c["prop"].is_string() || !c.contains("value"))
            throw DataError("property condition needs 'prop' and 'value'");
        PropCondition pc;
        pc.prop = c["prop"].get<std::string>();
        pc.op = c.contains("op") ? parse_cmp_op(c["op"].get<std::string>()) : CmpOp::Eq;
        pc.value = prop_from_json(c["value"], pc.prop);
        out.push_back(std::move(pc));
    };
    if (j.contains("props")) {
        if (!j["props"].is_array())
            throw DataError("'props' must be an array of conditions");
        for (const auto& c : j["props"])
            one(c);
    }
    if (j.contains("prop"))
        one(j);
    return out;
}

template <class Id>
std::vector<Id> ids_from_json(const Json& j, const char* key)
{
    std::vector<Id> out;
    if (!j.contains(key))
        return out;
    if (!j[key].is_array())
        throw DataError(std::string("'") + key + "' must be an array of ids");
    for (const auto& x : j[key]) {
        if (!x.is_number_integer() || x.get<std::int64_t>() < 0)
            throw DataError(std::string("'") + key + "' entries must be non-negative integers");
        out.push_back(static_cast<Id>(x.get<std::int64_t>()));
    }
    return out;
}

} // namespace detail

inline Json to_json(const BoundarySpec& b)
{
    Json j;
    auto& vx = j["vertexExcluders"] = Json::array();
    for (const auto& p : b.vertex_excluders) {
        Json o = Json::object();
        if (p.type)
            o["type"] = to_string(*p.type);
        if (!p.ids.empty())
            o["ids"] = p.ids;
        if (!p.props.empty())
            o["props"] = detail::conditions_to_json(p.props);
        if (p.seq_lt)
            o["seqLt"] = *p.seq_lt;
        if (p.seq_ge)
            o["seqGe"] = *p.seq_ge;
        if (p.agent)
            o["agent"] = *p.agent;
        vx.push_back(std::move(o));
    }
    auto& ex = j["edgeExcluders"] = Json::array();
    for (const auto& p : b.edge_excluders) {
        Json o = Json::object();
        if (p.type)
            o["type"] = to_string(*p.type);
        if (!p.ids.empty())
            o["ids"] = p.ids;
        if (!p.props.empty())
            o["props"] = detail::conditions_to_json(p.props);
        ex.push_back(std::move(o));
    }
    auto& xs = j["expansions"] = Json::array();
    for (const auto& x : b.expansions)
        xs.push_back(Json{{"entities", x.entities}, {"k", x.k}});
    return j;
}

inline BoundarySpec boundary_from_json(const Json& j)
{
    BoundarySpec b;
    if (j.is_null())
        return b;
    if (!j.is_object())
        throw DataError("boundary must be an object");
    auto arr = [&](const char* key) -> const Json* {
        if (!j.contains(key))
            return nullptr;
        if (!j[key].is_array())
            throw DataError(std::string("'") + key + "' must be an array");
        return &j[key];
    };
    if (auto* a = arr("vertexExcluders"))
        for (const auto& o : *a) {
            if (!o.is_object())
                throw DataError("vertex excluder must be an object");
            VertexPredicate p;
            if (o.contains("type"))
                p.type = parse_vertex_type(o["type"].get<std::string>());
            p.ids = detail::ids_from_json<VertexId>(o, "ids");
            p.props = detail::conditions_from_json(o);
            if (o.contains("seqLt"))
                p.seq_lt = o["seqLt"].get<std::int64_t>();
            if (o.contains("seqGe"))
                p.seq_ge = o["seqGe"].get<std::int64_t>();
            if (o.contains("agent"))
                p.agent = o["agent"].get<std::string>();
            b.vertex_excluders.push_back(std::move(p));
        }
    if (auto* a = arr("edgeExcluders"))
        for (const auto& o : *a) {
            if (!o.is_object())
                throw DataError("edge excluder must be an object");
            EdgePredicate p;
            if (o.contains("type"))
                p.type = parse_edge_type(o["type"].get<std::string>());
            p.ids = detail::ids_from_json<EdgeId>(o, "ids");
            p.props = detail::conditions_from_json(o);
            b.edge_excluders.push_back(std::move(p));
        }
    if (auto* a = arr("expansions"))
        for (const auto& o : *a) {
            if (!o.is_object() || !o.contains("k") || !o["k"].is_number_integer() ||
                o["k"].get<std::int64_t>() < 0)
                throw DataError("expansion needs 'entities' and a non-negative integer 'k'");
            Expansion x;
            x.entities = detail::ids_from_json<VertexId>(o, "entities");
            x.k = static_cast<std::uint32_t>(o["k"].get<std::int64_t>());
            b.expansions.push_back(std::move(x));
        }
    return b;
}

} // namespace provq
