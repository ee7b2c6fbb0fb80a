#pragma once

// Membership sets over a fixed universe [0, n): a dense bitset and a
// roaring-style compressed set (sorted-array or bitmap containers per 2^16 chunk).

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace provq {

class DenseBitset
{
public:
    DenseBitset() = default;
    explicit DenseBitset(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    std::size_t universe() const noexcept { return n_; }

    bool test(std::uint32_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
    void set(std::uint32_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::uint32_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    /// Sets bit i and reports whether it was previously clear.
    bool insert(std::uint32_t i)
    {
        auto& w = words_[i >> 6];
        const auto m = std::uint64_t{1} << (i & 63);
        if (w & m)
            return false;
        w |= m;
        return true;
    }

    void clear() { std::fill(words_.begin(), words_.end(), 0); }

    std::size_t count() const
    {
        std::size_t c = 0;
        for (auto w : words_)
            c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    bool any() const
    {
        return std::any_of(words_.begin(), words_.end(), [](auto w) { return w != 0; });
    }

    template <class F>
    void for_each(F&& f) const
    {
        for (std::size_t wi = 0; wi < words_.size(); ++wi)
            for (auto w = words_[wi]; w; w &= w - 1)
                f(static_cast<std::uint32_t>(wi * 64 + std::countr_zero(w)));
    }

    DenseBitset& operator|=(const DenseBitset& o)
    {
        for (std::size_t i = 0; i < words_.size(); ++i)
            words_[i] |= o.words_[i];
        return *this;
    }

    DenseBitset& operator&=(const DenseBitset& o)
    {
        for (std::size_t i = 0; i < words_.size(); ++i)
            words_[i] &= o.words_[i];
        return *this;
    }

    /// this \= o
    DenseBitset& subtract(const DenseBitset& o)
    {
        for (std::size_t i = 0; i < words_.size(); ++i)
            words_[i] &= ~o.words_[i];
        return *this;
    }

    std::vector<std::uint32_t> to_vector() const
    {
        std::vector<std::uint32_t> out;
        for_each([&](std::uint32_t i) { out.push_back(i); });
        return out;
    }

    std::uint64_t* data() noexcept { return words_.data(); }
    const std::uint64_t* data() const noexcept { return words_.data(); }
    std::size_t word_count() const noexcept { return words_.size(); }

    friend bool operator==(const DenseBitset&, const DenseBitset&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Roaring-style set of 32-bit values. Each 2^16 chunk is either a sorted array
/// of low halves (up to 4096 entries) or a 1024-word bitmap.
class RoaringSet
{
    static constexpr std::size_t kArrayMax = 4096;

    struct Container
    {
        std::vector<std::uint16_t> array;            // used while bits == nullptr
        std::unique_ptr<std::array<std::uint64_t, 1024>> bits;
        std::uint32_t cardinality = 0;

        Container() = default;
        Container(const Container& o) : array(o.array), cardinality(o.cardinality)
        {
            if (o.bits)
                bits = std::make_unique<std::array<std::uint64_t, 1024>>(*o.bits);
        }
        Container& operator=(const Container& o)
        {
            if (this != &o) {
                array = o.array;
                cardinality = o.cardinality;
                bits = o.bits ? std::make_unique<std::array<std::uint64_t, 1024>>(*o.bits) : nullptr;
            }
            return *this;
        }
        Container(Container&&) noexcept = default;
        Container& operator=(Container&&) noexcept = default;

        bool contains(std::uint16_t lo) const
        {
            if (bits)
                return ((*bits)[lo >> 6] >> (lo & 63)) & 1U;
            return std::binary_search(array.begin(), array.end(), lo);
        }

        bool insert(std::uint16_t lo)
        {
            if (bits) {
                auto& w = (*bits)[lo >> 6];
                const auto m = std::uint64_t{1} << (lo & 63);
                if (w & m)
                    return false;
                w |= m;
                ++cardinality;
                return true;
            }
            auto it = std::lower_bound(array.begin(), array.end(), lo);
            if (it != array.end() && *it == lo)
                return false;
            array.insert(it, lo);
            ++cardinality;
            if (array.size() > kArrayMax) {
                bits = std::make_unique<std::array<std::uint64_t, 1024>>();
                bits->fill(0);
                for (auto x : array)
                    (*bits)[x >> 6] |= std::uint64_t{1} << (x & 63);
                std::vector<std::uint16_t>().swap(array);
            }
            return true;
        }

        template <class F>
        void for_each(std::uint32_t base, F&& f) const
        {
            if (bits) {
                for (std::size_t wi = 0; wi < 1024; ++wi)
                    for (auto w = (*bits)[wi]; w; w &= w - 1)
                        f(base + static_cast<std::uint32_t>(wi * 64 + std::countr_zero(w)));
            } else {
                for (auto x : array)
                    f(base + x);
            }
        }
    };

public:
    bool contains(std::uint32_t v) const
    {
        const auto key = static_cast<std::uint16_t>(v >> 16);
        auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
        if (it == keys_.end() || *it != key)
            return false;
        return containers_[static_cast<std::size_t>(it - keys_.begin())].contains(
            static_cast<std::uint16_t>(v & 0xFFFF));
    }

    bool insert(std::uint32_t v)
    {
        const auto key = static_cast<std::uint16_t>(v >> 16);
        auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
        const auto pos = static_cast<std::size_t>(it - keys_.begin());
        if (it == keys_.end() || *it != key) {
            keys_.insert(it, key);
            containers_.insert(containers_.begin() + static_cast<std::ptrdiff_t>(pos), Container{});
        }
        if (containers_[pos].insert(static_cast<std::uint16_t>(v & 0xFFFF))) {
            ++size_;
            return true;
        }
        return false;
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    void clear()
    {
        keys_.clear();
        containers_.clear();
        size_ = 0;
    }

    template <class F>
    void for_each(F&& f) const
    {
        for (std::size_t i = 0; i < keys_.size(); ++i)
            containers_[i].for_each(std::uint32_t{keys_[i]} << 16, f);
    }

    std::vector<std::uint32_t> to_vector() const
    {
        std::vector<std::uint32_t> out;
        out.reserve(size_);
        for_each([&](std::uint32_t x) { out.push_back(x); });
        return out;
    }

private:
    std::vector<std::uint16_t> keys_;
    std::vector<Container> containers_;
    std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Row-organized pair sets. Both backends expose the same interface:
//   insert(i, j) -> bool (newly added), contains(i, j), row_size(i),
//   for_each_in_row(i, f), take_row(i, out) (move the row's members out and clear it),
//   diff_row(i, candidates) -> candidates \ row(i), size().

enum class Backend { Plain, Compressed };

inline const char* to_string(Backend b) { return b == Backend::Plain ? "PLAIN" : "COMPRESSED"; }

/// Uncompressed bitmap rows, allocated on first insertion.
class PlainPairSet
{
public:
    PlainPairSet() = default;
    PlainPairSet(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64), data_(rows)
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return size_; }

    bool insert(std::uint32_t i, std::uint32_t j)
    {
        check(i, j);
        auto& row = data_[i];
        if (row.empty())
            row.assign(words_per_row_, 0);
        auto& w = row[j >> 6];
        const auto m = std::uint64_t{1} << (j & 63);
        if (w & m)
            return false;
        w |= m;
        ++size_;
        return true;
    }

    bool contains(std::uint32_t i, std::uint32_t j) const
    {
        check(i, j);
        const auto& row = data_[i];
        return !row.empty() && ((row[j >> 6] >> (j & 63)) & 1U);
    }

    template <class F>
    void for_each_in_row(std::uint32_t i, F&& f) const
    {
        const auto& row = data_[i];
        for (std::size_t wi = 0; wi < row.size(); ++wi)
            for (auto w = row[wi]; w; w &= w - 1)
                f(static_cast<std::uint32_t>(wi * 64 + std::countr_zero(w)));
    }

    void take_row(std::uint32_t i, std::vector<std::uint32_t>& out)
    {
        out.clear();
        auto& row = data_[i];
        for (std::size_t wi = 0; wi < row.size(); ++wi) {
            for (auto w = row[wi]; w; w &= w - 1)
                out.push_back(static_cast<std::uint32_t>(wi * 64 + std::countr_zero(w)));
            row[wi] = 0;
        }
        size_ -= out.size();
    }

    /// Word-parallel difference of a candidate bitmap against row i.
    void diff_row(std::uint32_t i, DenseBitset& candidates) const
    {
        const auto& row = data_[i];
        if (row.empty())
            return;
        auto* c = candidates.data();
        for (std::size_t wi = 0; wi < words_per_row_; ++wi)
            c[wi] &= ~row[wi];
    }

    std::size_t bytes() const
    {
        std::size_t b = 0;
        for (const auto& r : data_)
            b += r.size() * sizeof(std::uint64_t);
        return b;
    }

private:
    void check(std::uint32_t i, std::uint32_t j) const
    {
        if (i >= rows_ || j >= cols_)
            throw std::out_of_range("pair (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") outside the set universe");
    }

    std::size_t rows_ = 0, cols_ = 0, words_per_row_ = 0;
    std::vector<std::vector<std::uint64_t>> data_;
    std::size_t size_ = 0;
};

/// Compressed rows (RoaringSet per row).
class CompressedPairSet
{
public:
    CompressedPairSet() = default;
    CompressedPairSet(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return size_; }

    bool insert(std::uint32_t i, std::uint32_t j)
    {
        check(i, j);
        if (data_[i].insert(j)) {
            ++size_;
            return true;
        }
        return false;
    }

    bool contains(std::uint32_t i, std::uint32_t j) const
    {
        check(i, j);
        return data_[i].contains(j);
    }

    template <class F>
    void for_each_in_row(std::uint32_t i, F&& f) const
    {
        data_[i].for_each(f);
    }

    void take_row(std::uint32_t i, std::vector<std::uint32_t>& out)
    {
        out = data_[i].to_vector();
        size_ -= out.size();
        data_[i] = RoaringSet{};
    }

    void diff_row(std::uint32_t i, DenseBitset& candidates) const
    {
        data_[i].for_each([&](std::uint32_t j) { candidates.reset(j); });
    }

private:
    void check(std::uint32_t i, std::uint32_t j) const
    {
        if (i >= rows_ || j >= cols_)
            throw std::out_of_range("pair (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") outside the set universe");
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<RoaringSet> data_;
    std::size_t size_ = 0;
};

} // namespace provq
