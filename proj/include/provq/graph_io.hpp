#pragma once

// JSON document format and DOT export for ProvGraph.

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "provq/graph.hpp"

namespace provq {

using Json = nlohmann::ordered_json;

inline Json prop_to_json(const PropValue& v)
{
    return std::visit([](const auto& x) { return Json(x); }, v);
}

inline PropValue prop_from_json(const Json& j, std::string_view key)
{
    switch (j.type()) {
    case Json::value_t::string: return j.get<std::string>();
    case Json::value_t::boolean: return j.get<bool>();
    case Json::value_t::number_integer: return j.get<std::int64_t>();
    case Json::value_t::number_unsigned: {
        auto u = j.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(INT64_MAX))
            throw DataError("property '" + std::string(key) + "' overflows int64");
        return static_cast<std::int64_t>(u);
    }
    case Json::value_t::number_float: return j.get<double>();
    default:
        throw DataError("property '" + std::string(key) + "' is not a scalar");
    }
}

inline Json props_to_json(const Props& props)
{
    Json o = Json::object();
    for (const auto& [k, v] : props)
        o[k] = prop_to_json(v);
    return o;
}

inline Props props_from_json(const Json& j)
{
    Props p;
    if (j.is_null())
        return p;
    if (!j.is_object())
        throw DataError("props must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        p.emplace(it.key(), prop_from_json(it.value(), it.key()));
    return p;
}

inline Json to_json(const ProvGraph& g)
{
    Json doc;
    doc["propertyTypes"] = Json::array();
    for (const auto& p : g.property_types())
        doc["propertyTypes"].push_back(p);
    auto& vs = doc["vertices"] = Json::array();
    for (const auto& v : g.vertices())
        vs.push_back(Json{{"id", v.id},
                          {"type", to_string(v.type)},
                          {"seq", v.seq},
                          {"props", props_to_json(v.props)}});
    auto& es = doc["edges"] = Json::array();
    for (const auto& e : g.edges())
        es.push_back(Json{{"id", e.id},
                          {"type", to_string(e.type)},
                          {"src", e.src},
                          {"dst", e.dst},
                          {"props", props_to_json(e.props)}});
    return doc;
}

namespace detail {

template <class T>
T required(const Json& obj, const char* key, const char* what)
{
    auto it = obj.find(key);
    if (it == obj.end())
        throw DataError(std::string(what) + " is missing '" + key + "'");
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError(std::string(what) + " field '" + key + "' has the wrong type");
    }
}

inline std::uint32_t required_id(const Json& obj, const char* key, const char* what)
{
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0 ||
        it->get<std::int64_t>() > static_cast<std::int64_t>(UINT32_MAX - 1))
        throw DataError(std::string(what) + " needs a non-negative integer '" + key + "'");
    return static_cast<std::uint32_t>(it->get<std::int64_t>());
}

} // namespace detail

inline ProvGraph from_json(const Json& doc)
{
    if (!doc.is_object())
        throw DataError("graph document must be a JSON object");
    std::set<std::string, std::less<>> ptypes;
    if (auto it = doc.find("propertyTypes"); it != doc.end()) {
        if (!it->is_array())
            throw DataError("propertyTypes must be an array");
        for (const auto& p : *it) {
            if (!p.is_string())
                throw DataError("propertyTypes entries must be strings");
            ptypes.insert(p.get<std::string>());
        }
    }
    auto vit = doc.find("vertices");
    auto eit = doc.find("edges");
    if (vit == doc.end() || !vit->is_array() || eit == doc.end() || !eit->is_array())
        throw DataError("graph document needs 'vertices' and 'edges' arrays");

    std::vector<Vertex> vertices;
    vertices.reserve(vit->size());
    for (const auto& jv : *vit) {
        if (!jv.is_object())
            throw DataError("vertex entries must be objects");
        Vertex v;
        v.id = detail::required_id(jv, "id", "vertex");
        v.type = parse_vertex_type(detail::required<std::string>(jv, "type", "vertex"));
        v.seq = detail::required<std::int64_t>(jv, "seq", "vertex");
        if (auto p = jv.find("props"); p != jv.end())
            v.props = props_from_json(*p);
        vertices.push_back(std::move(v));
    }
    std::vector<Edge> edges;
    edges.reserve(eit->size());
    for (const auto& je : *eit) {
        if (!je.is_object())
            throw DataError("edge entries must be objects");
        Edge e;
        e.id = detail::required_id(je, "id", "edge");
        e.type = parse_edge_type(detail::required<std::string>(je, "type", "edge"));
        e.src = detail::required_id(je, "src", "edge");
        e.dst = detail::required_id(je, "dst", "edge");
        if (auto p = je.find("props"); p != je.end())
            e.props = props_from_json(*p);
        edges.push_back(std::move(e));
    }
    return ProvGraph::build(std::move(vertices), std::move(edges), std::move(ptypes));
}

/// Canonical text form: two-space indent, keys in insertion order.
inline std::string save(const ProvGraph& g) { return to_json(g).dump(2); }

inline void save(const ProvGraph& g, std::ostream& out) { out << save(g); }

inline ProvGraph load(std::string_view text)
{
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("malformed graph document: ") + e.what());
    }
    return from_json(doc);
}

inline ProvGraph load(std::istream& in)
{
    std::stringstream ss;
    ss << in.rdbuf();
    return load(ss.str());
}

// ---------------------------------------------------------------------------
// DOT

inline std::string dot_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

/// Short display name: the first of name/command/artifact props, else the id.
inline std::string display_name(const Vertex& v)
{
    for (const char* key : {"name", "command", "artifact"})
        if (auto it = v.props.find(key); it != v.props.end()) {
            auto s = prop_to_string(it->second);
            if (auto ver = v.props.find("version"); ver != v.props.end())
                s += "-" + prop_to_string(ver->second);
            return s;
        }
    return std::string(to_string(v.type)).substr(0, 1) + std::to_string(v.id);
}

inline const char* dot_shape(VertexType t)
{
    switch (t) {
    case VertexType::Entity: return "ellipse";
    case VertexType::Activity: return "box";
    case VertexType::Agent: return "house";
    }
    return "ellipse";
}

inline std::string to_dot(const ProvGraph& g)
{
    std::ostringstream o;
    o << "digraph prov {\n  rankdir=RL;\n";
    for (const auto& v : g.vertices())
        o << "  v" << v.id << " [shape=" << dot_shape(v.type) << ", label=\""
          << dot_escape(display_name(v)) << "\"];\n";
    for (const auto& e : g.edges())
        o << "  v" << e.src << " -> v" << e.dst << " [label=\"" << to_string(e.type) << "\"];\n";
    o << "}\n";
    return o.str();
}

} // namespace provq
