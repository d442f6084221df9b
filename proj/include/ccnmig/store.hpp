#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>

#include "ccnmig/message.hpp"

namespace ccnmig {

/// Dedup accounting. Byte figures use encoded body size (TLV framing plus
/// payload) so they line up with wire metrics.
struct DedupStats {
    uint64_t unique_objects = 0;
    uint64_t logical_references = 0;
    uint64_t unique_bytes = 0;
    uint64_t logical_bytes = 0;

    uint64_t saved_bytes() const { return logical_bytes - unique_bytes; }
};

/// Hash-indexed, reference-counted, de-duplicating store of Content Objects.
/// Ownership granularity is the checkpoint identifier (vm name + version);
/// release(owner) drops that checkpoint's references and evicts entries whose
/// refcount reaches zero.
class ContentStore {
public:
    /// Idempotent on content: a byte-identical object bumps refcounts but
    /// allocates no new storage. Returns the content hash.
    Hash256 put(const ContentObject& obj, const std::string& owner);

    /// Hash lookup if hash_restr is present (the name prefix is routing
    /// scope only); otherwise exact-name lookup.
    std::optional<ContentObject> get(const NamedAddress& address) const;

    std::optional<ContentObject> get_by_hash(const Hash256& h) const;
    bool contains(const Hash256& h) const;

    /// Drops one refcount per object held by this owner, evicting entries
    /// that reach zero. Unknown owner is a no-op. Returns evictions.
    size_t release(const std::string& owner);

    DedupStats stats() const { return stats_; }
    size_t size() const { return entries_.size(); }

private:
    struct Entry {
        ContentObject object;
        size_t body_bytes = 0;
        uint64_t refcount = 0;
        uint64_t logical_refs = 0;
    };

    std::unordered_map<Hash256, Entry, Hash256Hasher> entries_;
    std::map<Name, Hash256> by_name_;
    // owner -> hash -> refs held
    std::unordered_map<std::string, std::unordered_map<Hash256, uint64_t, Hash256Hasher>> owners_;
    DedupStats stats_;
};

}  // namespace ccnmig
