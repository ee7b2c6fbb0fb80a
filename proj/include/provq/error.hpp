#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace provq {

/// Malformed input: bad documents, dangling ids, unknown enum strings.
class DataError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A well-formed request that makes no sense for the graph it targets
/// (e.g. a non-entity source vertex).
class QueryError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the fact-producing solvers when the configured fact budget is hit.
class BudgetExceeded : public std::runtime_error
{
public:
    BudgetExceeded(std::size_t budget, std::size_t reached)
        : std::runtime_error("fact budget exceeded: " + std::to_string(reached) +
                             " facts > budget " + std::to_string(budget)),
          budget_(budget), reached_(reached)
    {
    }

    std::size_t budget() const noexcept { return budget_; }
    std::size_t reached() const noexcept { return reached_; }

private:
    std::size_t budget_;
    std::size_t reached_;
};

} // namespace provq
