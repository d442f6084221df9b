#pragma once

#include <functional>
#include <set>
#include <vector>

#include "ccnmig/machine.hpp"
#include "ccnmig/message.hpp"
#include "ccnmig/store.hpp"

namespace ccnmig {

enum class Phase : uint8_t { push = 0, stop_and_copy = 1, pull = 2 };

const char* phase_name(Phase p);

/// One checkpoint element: a resource slot plus how to fetch its bytes.
/// Strong entries are hash-addressed (self-verifying, dedupable); weak
/// entries carry an explicit enumerated name.
struct ManifestEntry {
    ResourceKind kind = ResourceKind::config;
    int32_t disk = -1;
    uint64_t index = 0;
    bool strong = true;
    Name locator_prefix;  // strong: routing prefix for the nameless object
    Hash256 hash;         // strong only
    Name explicit_name;   // weak only

    bool operator==(const ManifestEntry&) const = default;
};

struct ManifestSection {
    ResourceKind kind = ResourceKind::config;
    int32_t disk = -1;
    bool strong = true;
    Name locator_prefix;
    std::vector<ManifestEntry> entries;  // sorted by index, no duplicates

    bool operator==(const ManifestSection&) const = default;
};

struct Manifest {
    Name vm_name;
    uint64_t version = 0;
    Phase phase = Phase::push;
    uint32_t chunk_count = 1;
    std::vector<ManifestSection> sections;

    std::vector<const ManifestEntry*> all_entries() const;
    bool operator==(const Manifest&) const = default;
};

class ManifestError : public std::runtime_error {
public:
    enum class Kind { incomplete, corrupt, build };
    ManifestError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

/// /<prefix>/checkpoint/ver=j
Name checkpoint_prefix(const Name& vm_prefix, uint64_t version);
/// Store-ownership key for a checkpoint version.
std::string checkpoint_owner(const Name& vm_name, uint64_t version);

struct BuildOptions {
    Name vm_prefix;          // naming base (generic or location-dependent)
    uint64_t version = 0;
    Phase phase = Phase::push;
    size_t chunk_payload_limit = 60000;  // leaves room for name + TLV framing under the u16 packet length
    /// chooses strong (hash name) vs weak (enumerated name) per section
    std::function<bool(ResourceKind, int32_t disk)> strong_for;
    /// optional routing prefix override per section (e.g. a shared
    /// /nyc/objectstore prefix for common read-only blocks)
    std::function<std::optional<Name>(ResourceKind, int32_t disk)> prefix_override;
};

struct BuiltManifest {
    Manifest manifest;
    std::vector<ContentObject> chunks;  // named .../manifest/chunk=k
};

/// Builds a checkpoint manifest over `selection` from a snapshot. Strong-mode
/// resources are stored as nameless objects under the checkpoint's owner key;
/// weak-mode resources are referenced by enumerated names and served live.
BuiltManifest build_manifest(const Snapshot& snap, const VmConfig& config,
                             const std::set<Locator>& selection, ContentStore& store,
                             const BuildOptions& options);

/// Inverse of build: accepts the chunk objects in any order.
Manifest parse_manifest(const std::vector<ContentObject>& chunks);

struct ManifestMeta {
    Name vm_name;
    uint64_t version = 0;
    Phase phase = Phase::push;
    uint32_t chunk_count = 1;
};

/// Reads the root chunk's metadata without requiring the other chunks.
ManifestMeta parse_manifest_meta(const Bytes& root_payload);

NamedAddress entry_fetch_address(const ManifestEntry& entry);

/// Writes the entry's payload into the destination image, verifying the
/// content hash for strong entries. Destination dirty tracking is untouched.
void apply_entry(VmImage& dest, const ManifestEntry& entry, const ContentObject& obj);

std::string manifest_to_text(const Manifest& m);

/// Byte-overhead comparison of the three chunk-naming schemes for a config:
/// hash-based nameless objects vs a metadata name field vs prepended links.
struct NamingComparison {
    uint64_t objects = 0;
    uint64_t payload_bytes = 0;
    uint64_t hash_scheme_bytes = 0;      // 16B framing + 40B manifest entry each
    uint64_t metadata_scheme_bytes = 0;  // named chunks + placement metadata
    uint64_t link_scheme_bytes = 0;      // named chunks + prepended full link
};

NamingComparison compare_naming(const VmConfig& config, uint64_t version);

}  // namespace ccnmig
