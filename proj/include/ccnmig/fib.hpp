#pragma once

#include <map>
#include <optional>

#include "ccnmig/name.hpp"

namespace ccnmig {

using FaceId = uint32_t;

/// Longest-prefix-match forwarding table from name prefixes to faces.
/// At most one entry per prefix.
class FibTable {
public:
    void set(const Name& prefix, FaceId face) { entries_[prefix] = face; }
    void remove(const Name& prefix) { entries_.erase(prefix); }
    void clear() { entries_.clear(); }

    /// Returns the face of the longest prefix matching `name`, if any.
    std::optional<FaceId> lookup(const Name& name) const;

    const std::map<Name, FaceId>& entries() const { return entries_; }

private:
    std::map<Name, FaceId> entries_;
};

}  // namespace ccnmig
