#include "todo/counters.hpp"

namespace todo {

OpCounters& counters() noexcept
{
    static OpCounters instance;
    return instance;
}

void reset_counters() noexcept
{
    auto& c = counters();
    c.similarity_pairs = 0;
    c.tokens_touched = 0;
    c.zero_vector_cosines = 0;
}

} // namespace todo
