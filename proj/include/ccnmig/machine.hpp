#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "ccnmig/bytes.hpp"
#include "ccnmig/name.hpp"

namespace ccnmig {

enum class ResourceKind : uint8_t {
    config = 0,
    cpu_regfile = 1,
    cpu_tlb = 2,
    ram_page = 3,
    disk_block = 4,
    vhd_struct = 5,
    net = 6,
};

/// vhd control structure tags (vhd_struct locator index).
enum VhdStruct : uint64_t { vhd_header = 0, vhd_bat = 1, vhd_footer = 2 };

/// Identifies one resource inside a VmImage. `disk` is the disk ordinal for
/// disk_block / vhd_struct and for a per-disk config; -1 elsewhere (the
/// machine-level config).
struct Locator {
    ResourceKind kind = ResourceKind::config;
    int32_t disk = -1;
    uint64_t index = 0;

    bool operator==(const Locator&) const = default;
    auto operator<=>(const Locator&) const = default;
};

struct DiskConfig {
    std::string disk_name;      // e.g. "hda"
    uint64_t capacity_bytes = 0;  // decimal units (2 GB = 2e9)
    uint64_t block_size = 512;
    double fill_ratio = 1.0;

    // image-generation knobs
    double dup_fraction = 0.0;  // fraction of populated blocks that are copies
    std::optional<uint64_t> shared_seed;  // read-only shared content (same seed => same bytes)

    uint64_t populated_blocks() const;
};

struct VmConfig {
    Name vm_name;
    uint32_t cpu_n = 1;
    uint64_t ram_bytes = 0;  // binary units (2 GiB = 1<<31)
    uint64_t page_size = 4096;
    std::vector<DiskConfig> disks;
    std::vector<std::string> net_interfaces;

    uint64_t regfile_bytes = 512;
    uint64_t tlb_bytes = 4096;
    uint64_t vhd_struct_bytes = 512;

    // generation knob: make this many RAM pages byte-equal to disk-0 blocks
    // (requires page_size == disk block_size)
    uint64_t cross_dup_pages = 0;

    uint64_t ram_pages() const { return ram_bytes / page_size; }
    void validate() const;  // throws std::invalid_argument

    std::string to_json() const;
    static VmConfig from_json(const std::string& text);
};

struct ObjectCount {
    std::vector<uint64_t> per_disk;  // data blocks + 3 vhd structs + 1 disk config
    uint64_t disk_total = 0;
    uint64_t ram_pages = 0;
    uint64_t cpu_objects = 0;   // regfile + tlb per CPU
    uint64_t config_objects = 1;
    uint64_t net_objects = 0;
    uint64_t total = 0;
};

ObjectCount object_count(const VmConfig& config);

/// All names of the machine ontology, one per Content Object.
std::vector<Name> enumerate_names(const VmConfig& config);

/// Name suffix for a resource relative to the VM root (or a checkpoint
/// prefix for weak enumerated names), e.g. ram/page/3, disk/hda/block/17.
Name resource_subpath(const VmConfig& config, const Locator& loc);

/// Streams (locator, payload size) over the whole ontology without
/// materializing an image; payload sizes match VmImage::build.
void for_each_resource(const VmConfig& config,
                       const std::function<void(const Locator&, uint64_t)>& fn);

using Blob = std::shared_ptr<const Bytes>;

/// Immutable view of all resource bytes at snapshot time, shared
/// copy-on-write with the live image.
class Snapshot {
public:
    uint64_t version() const { return version_; }
    const Bytes& read(const Locator& loc) const;
    bool contains(const Locator& loc) const { return data_.contains(loc); }
    const std::map<Locator, Blob>& data() const { return data_; }

private:
    friend class VmImage;
    uint64_t version_ = 0;
    std::map<Locator, Blob> data_;
};

class VmImage {
public:
    const VmConfig& config() const { return config_; }

    const Bytes& read(const Locator& loc) const;
    std::optional<Bytes> try_read(const Locator& loc) const;
    bool contains(const Locator& loc) const { return data_.contains(loc); }

    /// Replaces resource bytes and marks the locator dirty. Rejected while
    /// frozen or on size mismatch.
    void apply_write(const Locator& loc, Bytes data);

    /// Destination-side placement: like apply_write but creates absent
    /// blocks and leaves dirty tracking untouched.
    void place(const Locator& loc, Bytes data);

    void freeze() { frozen_ = true; }
    void unfreeze() { frozen_ = false; }
    bool frozen() const { return frozen_; }

    /// Captures the current state; clears the dirty set it captures.
    /// Versions must be strictly increasing.
    Snapshot snapshot(uint64_t version);

    /// Locators written since the given version's snapshot.
    std::set<Locator> dirty_set(uint64_t since_version) const;

    std::vector<Locator> all_locators() const;
    uint64_t resource_size(const Locator& loc) const;

    static VmImage build(const VmConfig& config, uint64_t seed);
    /// Blank image (zero pages, no disk blocks) for the migration target.
    static VmImage allocate(const VmConfig& config);

private:
    VmConfig config_;
    std::map<Locator, Blob> data_;
    bool frozen_ = false;
    std::set<Locator> dirty_;
    std::vector<std::pair<uint64_t, std::set<Locator>>> dirty_history_;
    std::optional<uint64_t> last_version_;
};

struct WorkloadModel {
    std::set<Locator> hot_set;
    double hot_write_prob = 0.0;
    double cold_write_prob = 0.0;
    uint32_t writes_per_step = 1;
};

/// One synthetic workload step: a Bernoulli sweep over writable resources
/// (RAM pages and populated disk blocks), hot locators dirtied with
/// hot_write_prob and the rest with cold_write_prob, repeated
/// writes_per_step times. Returns the number of writes applied.
size_t workload_step(VmImage& image, const WorkloadModel& model, std::mt19937_64& rng);

/// Byte-compare two images. Returns nullopt if identical, else the first
/// divergence as (locator, first differing byte offset).
std::optional<std::pair<Locator, size_t>> first_divergence(const VmImage& a, const VmImage& b);
std::optional<std::pair<Locator, size_t>> first_divergence(const Snapshot& a, const VmImage& b);

std::string locator_to_string(const VmConfig& config, const Locator& loc);

}  // namespace ccnmig
