#pragma once

// Worklist W and history H of grammar facts N(i, j).
//
// Facts are kept per nonterminal in row-organized pair sets over type-local
// vertex indices. W is a pair set of pending facts plus a queue of rows that
// became non-empty; popping a row hands out all its pending facts at once. Each
// fact enters W at most once, because it enters W only when it first enters H.

#include <deque>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include "provq/bitset.hpp"
#include "provq/error.hpp"
#include "provq/grammar.hpp"

namespace provq {

struct Fact
{
    std::uint32_t nt = 0;
    VertexId i = 0;
    VertexId j = 0;

    friend auto operator<=>(const Fact&, const Fact&) = default;
};

enum class WorkOrder { Fifo, Lifo };

template <class Set>
class FactStore
{
public:
    /// need_cols[n] keeps a transposed copy of H for nonterminal n so that
    /// Col(v, n) can be enumerated.
    FactStore(const ProvGraph& g, const Grammar& gr, std::vector<bool> need_cols = {},
              std::size_t budget = 0, WorkOrder order = WorkOrder::Fifo)
        : g_(&g), budget_(budget), order_(order)
    {
        const auto n = gr.num_nonterminals();
        need_cols.resize(n, false);
        per_.reserve(n);
        for (std::uint32_t k = 0; k < n; ++k) {
            const auto& info = gr.info(k);
            Per p;
            p.row = info.row;
            p.col = info.col;
            const auto rows = universe(info.row), cols = universe(info.col);
            p.h = Set(rows, cols);
            p.w = Set(rows, cols);
            if (need_cols[k])
                p.hcol = std::make_unique<Set>(cols, rows);
            p.queued.assign(rows, 0);
            per_.push_back(std::move(p));
        }
    }

    /// Adds N(i, j) to H and W unless already in H. Throws BudgetExceeded once
    /// the total fact count passes the budget.
    bool add(std::uint32_t nt, VertexId i, VertexId j)
    {
        auto& p = per_[nt];
        const auto ri = index(p.row, i), cj = index(p.col, j);
        if (!p.h.insert(ri, cj))
            return false;
        if (p.hcol)
            p.hcol->insert(cj, ri);
        ++size_;
        if (budget_ != 0 && size_ > budget_)
            throw BudgetExceeded(budget_, size_);
        p.w.insert(ri, cj);
        if (!p.queued[ri]) {
            p.queued[ri] = 1;
            queue_.push_back({nt, ri});
        }
        return true;
    }

    bool contains(std::uint32_t nt, VertexId i, VertexId j) const
    {
        const auto& p = per_[nt];
        if (!fits(p.row, i) || !fits(p.col, j))
            return false;
        return p.h.contains(index(p.row, i), index(p.col, j));
    }

    /// Pops one row of pending facts: N(i, j) for every j in `js`. Returns false
    /// when W is empty.
    bool pop(std::uint32_t& nt, VertexId& i, std::vector<VertexId>& js)
    {
        while (!queue_.empty()) {
            std::pair<std::uint32_t, std::uint32_t> top;
            if (order_ == WorkOrder::Fifo) {
                top = queue_.front();
                queue_.pop_front();
            } else {
                top = queue_.back();
                queue_.pop_back();
            }
            auto& p = per_[top.first];
            p.queued[top.second] = 0;
            p.w.take_row(top.second, scratch_);
            if (scratch_.empty())
                continue;
            nt = top.first;
            i = vertex(p.row, top.second);
            js.clear();
            for (auto c : scratch_)
                js.push_back(vertex(p.col, c));
            dequeued_ += js.size();
            return true;
        }
        return false;
    }

    template <class F>
    void for_each_in_row(std::uint32_t nt, VertexId i, F&& f) const
    {
        const auto& p = per_[nt];
        if (!fits(p.row, i))
            return;
        p.h.for_each_in_row(index(p.row, i), [&](std::uint32_t c) { f(vertex(p.col, c)); });
    }

    /// Requires the transposed copy for nt.
    template <class F>
    void for_each_in_col(std::uint32_t nt, VertexId j, F&& f) const
    {
        const auto& p = per_[nt];
        if (!p.hcol)
            throw std::logic_error("column index not kept for this nonterminal");
        if (!fits(p.col, j))
            return;
        p.hcol->for_each_in_row(index(p.col, j), [&](std::uint32_t r) { f(vertex(p.row, r)); });
    }

    bool has_cols(std::uint32_t nt) const { return per_[nt].hcol != nullptr; }

    /// Candidates (indices in the column domain of nt) minus Row(i, nt).
    void diff_row(std::uint32_t nt, VertexId i, DenseBitset& cand) const
    {
        const auto& p = per_[nt];
        p.h.diff_row(index(p.row, i), cand);
    }

    /// Candidates (indices in the row domain of nt) minus Col(j, nt).
    void diff_col(std::uint32_t nt, VertexId j, DenseBitset& cand) const
    {
        const auto& p = per_[nt];
        p.hcol->diff_row(index(p.col, j), cand);
    }

    std::size_t size() const noexcept { return size_; }
    std::size_t size(std::uint32_t nt) const { return per_[nt].h.size(); }
    std::size_t dequeued() const noexcept { return dequeued_; }
    bool worklist_empty() const
    {
        for (const auto& p : per_)
            if (p.w.size() != 0)
                return false;
        return true;
    }

    std::size_t row_universe(std::uint32_t nt) const { return universe(per_[nt].row); }
    std::size_t col_universe(std::uint32_t nt) const { return universe(per_[nt].col); }
    std::uint32_t row_index(std::uint32_t nt, VertexId v) const { return index(per_[nt].row, v); }
    std::uint32_t col_index(std::uint32_t nt, VertexId v) const { return index(per_[nt].col, v); }
    VertexId row_vertex(std::uint32_t nt, std::uint32_t r) const { return vertex(per_[nt].row, r); }
    VertexId col_vertex(std::uint32_t nt, std::uint32_t c) const { return vertex(per_[nt].col, c); }
    bool fits_row(std::uint32_t nt, VertexId v) const { return fits(per_[nt].row, v); }
    bool fits_col(std::uint32_t nt, VertexId v) const { return fits(per_[nt].col, v); }

    /// All facts of H, sorted.
    std::vector<Fact> facts() const
    {
        std::vector<Fact> out;
        for (std::uint32_t nt = 0; nt < per_.size(); ++nt) {
            const auto& p = per_[nt];
            for (std::uint32_t r = 0; r < universe(p.row); ++r)
                p.h.for_each_in_row(r, [&](std::uint32_t c) {
                    out.push_back({nt, vertex(p.row, r), vertex(p.col, c)});
                });
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Debug dump of H: one "nonterminal,i,j" line per fact, sorted.
    void dump_csv(std::ostream& out, const Grammar& gr) const
    {
        out << "nonterminal,i,j\n";
        for (const auto& f : facts())
            out << gr.info(f.nt).name << ',' << f.i << ',' << f.j << '\n';
    }

private:
    struct Per
    {
        std::optional<VertexType> row, col;
        Set h, w;
        std::unique_ptr<Set> hcol;
        std::vector<std::uint8_t> queued;
    };

    std::size_t universe(std::optional<VertexType> t) const
    {
        return t ? g_->count(*t) : g_->num_vertices();
    }
    bool fits(std::optional<VertexType> t, VertexId v) const
    {
        return v < g_->num_vertices() && (!t || g_->type(v) == *t);
    }
    std::uint32_t index(std::optional<VertexType> t, VertexId v) const
    {
        if (!fits(t, v))
            throw std::logic_error("vertex " + std::to_string(v) + " outside the fact domain");
        return t ? g_->local_index(v) : v;
    }
    VertexId vertex(std::optional<VertexType> t, std::uint32_t i) const
    {
        return t ? g_->vertices_of(*t)[i] : i;
    }

    const ProvGraph* g_;
    std::vector<Per> per_;
    std::deque<std::pair<std::uint32_t, std::uint32_t>> queue_;
    std::vector<std::uint32_t> scratch_;
    std::size_t size_ = 0;
    std::size_t dequeued_ = 0;
    std::size_t budget_ = 0;
    WorkOrder order_;
};

} // namespace provq
