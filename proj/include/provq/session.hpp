#pragma once

// Id-keyed store of graphs, segments and summaries with per-kind LRU eviction.

#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "provq/seg.hpp"
#include "provq/sum.hpp"

namespace provq {

template <class T>
class LruMap
{
public:
    explicit LruMap(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

    std::shared_ptr<const T> get(const std::string& id)
    {
        auto it = index_.find(id);
        if (it == index_.end())
            return nullptr;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    void put(const std::string& id, std::shared_ptr<const T> value)
    {
        if (auto it = index_.find(id); it != index_.end()) {
            order_.erase(it->second);
            index_.erase(it);
        }
        order_.emplace_front(id, std::move(value));
        index_[id] = order_.begin();
        while (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    std::size_t size() const noexcept { return order_.size(); }

private:
    using Entry = std::pair<std::string, std::shared_ptr<const T>>;
    std::size_t capacity_;
    std::list<Entry> order_;
    std::unordered_map<std::string, typename std::list<Entry>::iterator> index_;
};

struct SegmentSession
{
    std::string graph_id;
    Segment segment;
};

struct SummarySession
{
    std::vector<std::string> segment_ids;
    SummaryGraph summary;
    Json document;
};

class StaleSegment : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Thread-safe. Stored values are immutable; readers keep them alive through
/// shared pointers even if they are evicted meanwhile.
class SessionStore
{
public:
    explicit SessionStore(std::size_t capacity = 64)
        : graphs_(capacity), segments_(capacity), summaries_(capacity)
    {
    }

    std::string add_graph(ProvGraph g)
    {
        std::lock_guard lock(mu_);
        auto id = "g" + std::to_string(++next_);
        graphs_.put(id, std::make_shared<const ProvGraph>(std::move(g)));
        return id;
    }

    std::shared_ptr<const ProvGraph> graph(const std::string& id)
    {
        std::lock_guard lock(mu_);
        return graphs_.get(id);
    }

    std::string add_segment(std::string graph_id, Segment s)
    {
        std::lock_guard lock(mu_);
        auto id = "s" + std::to_string(++next_);
        segments_.put(id, std::make_shared<const SegmentSession>(SegmentSession{std::move(graph_id), std::move(s)}));
        return id;
    }

    std::shared_ptr<const SegmentSession> segment(const std::string& id)
    {
        std::lock_guard lock(mu_);
        return segments_.get(id);
    }

    /// The segment and its graph. Throws StaleSegment if the graph is gone.
    std::pair<std::shared_ptr<const SegmentSession>, std::shared_ptr<const ProvGraph>>
    segment_with_graph(const std::string& id)
    {
        std::lock_guard lock(mu_);
        auto s = segments_.get(id);
        if (!s)
            return {};
        auto g = graphs_.get(s->graph_id);
        if (!g)
            throw StaleSegment("segment " + id + " refers to evicted graph " + s->graph_id);
        return {s, g};
    }

    std::string add_summary(SummarySession s)
    {
        std::lock_guard lock(mu_);
        auto id = "m" + std::to_string(++next_);
        summaries_.put(id, std::make_shared<const SummarySession>(std::move(s)));
        return id;
    }

    std::shared_ptr<const SummarySession> summary(const std::string& id)
    {
        std::lock_guard lock(mu_);
        return summaries_.get(id);
    }

private:
    std::mutex mu_;
    std::uint64_t next_ = 0;
    LruMap<ProvGraph> graphs_;
    LruMap<SegmentSession> segments_;
    LruMap<SummarySession> summaries_;
};

} // namespace provq
