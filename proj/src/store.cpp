#include "ccnmig/store.hpp"

namespace ccnmig {

Hash256 ContentStore::put(const ContentObject& obj, const std::string& owner) {
    Hash256 h = compute_object_hash(obj);
    auto it = entries_.find(h);
    if (it == entries_.end()) {
        Entry e;
        e.object = obj;
        e.body_bytes = encoded_size(obj) - wire::FIXED_HEADER_LEN;
        it = entries_.emplace(h, std::move(e)).first;
        stats_.unique_objects++;
        stats_.unique_bytes += it->second.body_bytes;
        if (obj.name) by_name_[*obj.name] = h;
    }
    it->second.refcount++;
    it->second.logical_refs++;
    stats_.logical_references++;
    stats_.logical_bytes += it->second.body_bytes;
    owners_[owner][h]++;
    return h;
}

std::optional<ContentObject> ContentStore::get(const NamedAddress& address) const {
    if (address.hash_restr) return get_by_hash(*address.hash_restr);
    auto it = by_name_.find(address.name);
    if (it == by_name_.end()) return std::nullopt;
    auto eit = entries_.find(it->second);
    if (eit == entries_.end()) return std::nullopt;
    return eit->second.object;
}

std::optional<ContentObject> ContentStore::get_by_hash(const Hash256& h) const {
    auto it = entries_.find(h);
    if (it == entries_.end()) return std::nullopt;
    return it->second.object;
}

bool ContentStore::contains(const Hash256& h) const {
    return entries_.contains(h);
}

size_t ContentStore::release(const std::string& owner) {
    auto oit = owners_.find(owner);
    if (oit == owners_.end()) return 0;
    size_t evicted = 0;
    for (const auto& [h, refs] : oit->second) {
        auto eit = entries_.find(h);
        if (eit == entries_.end()) continue;
        eit->second.refcount -= std::min(eit->second.refcount, refs);
        if (eit->second.refcount == 0) {
            if (eit->second.object.name) by_name_.erase(*eit->second.object.name);
            entries_.erase(eit);
            evicted++;
        }
    }
    owners_.erase(oit);
    return evicted;
}

}  // namespace ccnmig
