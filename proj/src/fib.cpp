#include "ccnmig/fib.hpp"

namespace ccnmig {

std::optional<FaceId> FibTable::lookup(const Name& name) const {
    const std::pair<const Name, FaceId>* best = nullptr;
    for (const auto& e : entries_) {
        if (e.first.is_prefix_of(name) &&
            (!best || e.first.size() > best->first.size()))
            best = &e;
    }
    return best ? std::optional<FaceId>(best->second) : std::nullopt;
}

}  // namespace ccnmig
