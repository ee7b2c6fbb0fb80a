#pragma once

// Context-free grammars over the PROV alphabet: vertex labels, edge labels
// (forward or inverse), and destination-vertex identifiers.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "provq/graph.hpp"

namespace provq {

struct Symbol
{
    enum class Kind : std::uint8_t { Nonterminal, Edge, VertexLabel, Vertex };

    Kind kind = Kind::Nonterminal;
    std::uint32_t nt = 0;           // Nonterminal
    EdgeType edge = EdgeType::Used; // Edge
    bool inverse = false;           // Edge: traverse against the stored direction
    VertexType vtype = VertexType::Entity; // VertexLabel
    /// VertexLabel inside a binary rule: the consumed vertex must carry the same
    /// label as the other endpoint of the fact. Equivalent to expanding the rule
    /// once per concrete label; a no-op under plain type labels.
    bool match = false;
    VertexId vertex = 0;            // Vertex

    static Symbol nonterminal(std::uint32_t n) { return Symbol{Kind::Nonterminal, n}; }
    static Symbol edge_sym(EdgeType t, bool inv = false)
    {
        Symbol s;
        s.kind = Kind::Edge;
        s.edge = t;
        s.inverse = inv;
        return s;
    }
    static Symbol label(VertexType t, bool match = false)
    {
        Symbol s;
        s.kind = Kind::VertexLabel;
        s.vtype = t;
        s.match = match;
        return s;
    }
    static Symbol vertex_id(VertexId v)
    {
        Symbol s;
        s.kind = Kind::Vertex;
        s.vertex = v;
        return s;
    }

    bool is_terminal() const { return kind != Kind::Nonterminal; }

    friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Production
{
    std::uint32_t lhs = 0;
    std::vector<Symbol> rhs;
};

struct NonterminalInfo
{
    std::string name;
    /// Vertex types of the first and second fact component; nullopt means any.
    std::optional<VertexType> row;
    std::optional<VertexType> col;
};

class Grammar
{
public:
    std::uint32_t add_nonterminal(std::string name, std::optional<VertexType> row = std::nullopt,
                                  std::optional<VertexType> col = std::nullopt)
    {
        nts_.push_back({std::move(name), row, col});
        return static_cast<std::uint32_t>(nts_.size() - 1);
    }

    void add_production(std::uint32_t lhs, std::vector<Symbol> rhs)
    {
        prods_.push_back({lhs, std::move(rhs)});
    }

    void set_start(std::uint32_t s) { start_ = s; }

    std::uint32_t start() const noexcept { return start_; }
    std::span<const Production> productions() const noexcept { return prods_; }
    std::span<const NonterminalInfo> nonterminals() const noexcept { return nts_; }
    std::size_t num_nonterminals() const noexcept { return nts_.size(); }
    const NonterminalInfo& info(std::uint32_t n) const { return nts_[n]; }

    std::uint32_t find(std::string_view name) const
    {
        for (std::uint32_t i = 0; i < nts_.size(); ++i)
            if (nts_[i].name == name)
                return i;
        throw std::out_of_range("no nonterminal named " + std::string(name));
    }

    /// Every production has at most two right-hand symbols.
    bool normal_form() const
    {
        for (const auto& p : prods_)
            if (p.rhs.size() > 2 || p.rhs.empty())
                return false;
        return true;
    }

    /// Every nonterminal used on a right-hand side has a production.
    bool well_formed() const
    {
        std::vector<bool> defined(nts_.size(), false);
        for (const auto& p : prods_)
            defined[p.lhs] = true;
        for (const auto& p : prods_)
            for (const auto& s : p.rhs)
                if (s.kind == Symbol::Kind::Nonterminal && !defined[s.nt])
                    return false;
        return start_ < nts_.size();
    }

    std::string symbol_name(const Symbol& s) const
    {
        switch (s.kind) {
        case Symbol::Kind::Nonterminal: return nts_[s.nt].name;
        case Symbol::Kind::Edge: return edge_letter(s.edge) + std::string(s.inverse ? "^-1" : "");
        case Symbol::Kind::VertexLabel: return std::string(provq::to_string(s.vtype)).substr(0, 1);
        case Symbol::Kind::Vertex: return "v" + std::to_string(s.vertex);
        }
        return "?";
    }

    std::string to_string() const
    {
        std::string out;
        for (const auto& p : prods_) {
            out += nts_[p.lhs].name + " ->";
            for (const auto& s : p.rhs)
                out += " " + symbol_name(s);
            out += "\n";
        }
        return out;
    }

    static std::string edge_letter(EdgeType t)
    {
        switch (t) {
        case EdgeType::Used: return "U";
        case EdgeType::WasGeneratedBy: return "G";
        case EdgeType::WasAssociatedWith: return "S";
        case EdgeType::WasAttributedTo: return "T";
        case EdgeType::WasDerivedFrom: return "D";
        }
        return "?";
    }

private:
    std::vector<NonterminalInfo> nts_;
    std::vector<Production> prods_;
    std::uint32_t start_ = 0;
};

namespace detail {

inline std::vector<VertexId> checked_dst(const ProvGraph& g, std::span<const VertexId> dst)
{
    std::set<VertexId> uniq;
    for (auto d : dst) {
        if (d >= g.num_vertices())
            throw QueryError("destination " + std::to_string(d) + " is not a vertex");
        if (g.type(d) != VertexType::Entity)
            throw QueryError("destination " + std::to_string(d) + " is not an entity");
        uniq.insert(d);
    }
    return {uniq.begin(), uniq.end()};
}

} // namespace detail

/// Rewritten similar-path grammar, start Ee:
///   Ee -> v_j (one per destination) | U^-1 Aa U | E Ee E
///   Aa -> G^-1 Ee G | A Aa A
inline Grammar build_sim_grammar(const ProvGraph& g, std::span<const VertexId> dst)
{
    const auto ds = detail::checked_dst(g, dst);
    Grammar gr;
    const auto ee = gr.add_nonterminal("Ee", VertexType::Entity, VertexType::Entity);
    const auto aa = gr.add_nonterminal("Aa", VertexType::Activity, VertexType::Activity);
    using S = Symbol;
    for (auto d : ds)
        gr.add_production(ee, {S::vertex_id(d)});
    gr.add_production(ee, {S::edge_sym(EdgeType::Used, true), S::nonterminal(aa),
                           S::edge_sym(EdgeType::Used)});
    gr.add_production(ee, {S::label(VertexType::Entity), S::nonterminal(ee),
                           S::label(VertexType::Entity, true)});
    gr.add_production(aa, {S::edge_sym(EdgeType::WasGeneratedBy, true), S::nonterminal(ee),
                           S::edge_sym(EdgeType::WasGeneratedBy)});
    gr.add_production(aa, {S::label(VertexType::Activity), S::nonterminal(aa),
                           S::label(VertexType::Activity, true)});
    gr.set_start(ee);
    return gr;
}

/// Normal form of the similar-path grammar, start Re:
///   r0 Qd -> v_j            r3 La -> A Rg       r6 Ru -> Lu U
///   r1 Lg -> G^-1 Qd        r4 Ra -> La A       r7 Le -> E Ru
///         | G^-1 Re         r5 Lu -> U^-1 Ra    r8 Re -> Le E
///   r2 Rg -> Lg G
inline Grammar build_sim_normal_form(const ProvGraph& g, std::span<const VertexId> dst)
{
    const auto ds = detail::checked_dst(g, dst);
    constexpr auto E = VertexType::Entity;
    constexpr auto A = VertexType::Activity;
    Grammar gr;
    const auto qd = gr.add_nonterminal("Qd", E, E);
    const auto lg = gr.add_nonterminal("Lg", A, E);
    const auto rg = gr.add_nonterminal("Rg", A, A);
    const auto la = gr.add_nonterminal("La", A, A);
    const auto ra = gr.add_nonterminal("Ra", A, A);
    const auto lu = gr.add_nonterminal("Lu", E, A);
    const auto ru = gr.add_nonterminal("Ru", E, E);
    const auto le = gr.add_nonterminal("Le", E, E);
    const auto re = gr.add_nonterminal("Re", E, E);
    using S = Symbol;
    const auto G = EdgeType::WasGeneratedBy;
    const auto U = EdgeType::Used;
    for (auto d : ds)
        gr.add_production(qd, {S::vertex_id(d)});
    gr.add_production(lg, {S::edge_sym(G, true), S::nonterminal(qd)});
    gr.add_production(lg, {S::edge_sym(G, true), S::nonterminal(re)});
    gr.add_production(rg, {S::nonterminal(lg), S::edge_sym(G)});
    gr.add_production(la, {S::label(A), S::nonterminal(rg)});
    gr.add_production(ra, {S::nonterminal(la), S::label(A, true)});
    gr.add_production(lu, {S::edge_sym(U, true), S::nonterminal(ra)});
    gr.add_production(ru, {S::nonterminal(lu), S::edge_sym(U)});
    gr.add_production(le, {S::label(E), S::nonterminal(ru)});
    gr.add_production(re, {S::nonterminal(le), S::label(E, true)});
    gr.set_start(re);
    return gr;
}

} // namespace provq
