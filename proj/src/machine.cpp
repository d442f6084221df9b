#include "ccnmig/machine.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace ccnmig {

uint64_t DiskConfig::populated_blocks() const {
    return static_cast<uint64_t>(
        std::ceil(fill_ratio * static_cast<double>(capacity_bytes) / static_cast<double>(block_size)));
}

void VmConfig::validate() const {
    if (cpu_n < 1) throw std::invalid_argument("cpu_n must be >= 1");
    if (page_size == 0 || ram_bytes % page_size != 0)
        throw std::invalid_argument("ram_bytes must be divisible by page_size");
    for (const auto& d : disks) {
        if (d.block_size == 0) throw std::invalid_argument("block_size must be nonzero");
        if (d.fill_ratio < 0.0 || d.fill_ratio > 1.0)
            throw std::invalid_argument("fill_ratio must be in [0,1]");
        if (d.dup_fraction < 0.0 || d.dup_fraction > 1.0)
            throw std::invalid_argument("dup_fraction must be in [0,1]");
        if (d.disk_name.empty()) throw std::invalid_argument("disk_name must be non-empty");
    }
    if (cross_dup_pages > 0) {
        if (disks.empty() || disks[0].block_size != page_size)
            throw std::invalid_argument("cross_dup_pages requires disk 0 with block_size == page_size");
        if (cross_dup_pages > ram_pages() || cross_dup_pages > disks[0].populated_blocks())
            throw std::invalid_argument("cross_dup_pages exceeds pages or blocks");
    }
}

std::string VmConfig::to_json() const {
    nlohmann::ordered_json j;
    j["vm_name"] = vm_name.to_text();
    j["cpu_n"] = cpu_n;
    j["ram_bytes"] = ram_bytes;
    j["page_size"] = page_size;
    j["disks"] = nlohmann::ordered_json::array();
    for (const auto& d : disks) {
        nlohmann::ordered_json dj;
        dj["disk_name"] = d.disk_name;
        dj["capacity_bytes"] = d.capacity_bytes;
        dj["block_size"] = d.block_size;
        dj["fill_ratio"] = d.fill_ratio;
        dj["dup_fraction"] = d.dup_fraction;
        if (d.shared_seed) dj["shared_seed"] = *d.shared_seed;
        j["disks"].push_back(dj);
    }
    j["net_interfaces"] = net_interfaces;
    j["regfile_bytes"] = regfile_bytes;
    j["tlb_bytes"] = tlb_bytes;
    j["vhd_struct_bytes"] = vhd_struct_bytes;
    j["cross_dup_pages"] = cross_dup_pages;
    return j.dump();
}

VmConfig VmConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    VmConfig c;
    c.vm_name = Name::parse(j.at("vm_name").get<std::string>());
    c.cpu_n = j.at("cpu_n").get<uint32_t>();
    c.ram_bytes = j.at("ram_bytes").get<uint64_t>();
    c.page_size = j.at("page_size").get<uint64_t>();
    for (const auto& dj : j.value("disks", nlohmann::json::array())) {
        DiskConfig d;
        d.disk_name = dj.at("disk_name").get<std::string>();
        d.capacity_bytes = dj.at("capacity_bytes").get<uint64_t>();
        d.block_size = dj.at("block_size").get<uint64_t>();
        d.fill_ratio = dj.value("fill_ratio", 1.0);
        d.dup_fraction = dj.value("dup_fraction", 0.0);
        if (dj.contains("shared_seed")) d.shared_seed = dj["shared_seed"].get<uint64_t>();
        c.disks.push_back(d);
    }
    c.net_interfaces = j.value("net_interfaces", std::vector<std::string>{});
    c.regfile_bytes = j.value("regfile_bytes", uint64_t{512});
    c.tlb_bytes = j.value("tlb_bytes", uint64_t{4096});
    c.vhd_struct_bytes = j.value("vhd_struct_bytes", uint64_t{512});
    c.cross_dup_pages = j.value("cross_dup_pages", uint64_t{0});
    c.validate();
    return c;
}

ObjectCount object_count(const VmConfig& config) {
    ObjectCount oc;
    for (const auto& d : config.disks) {
        uint64_t n = d.populated_blocks() + 3 + 1;  // blocks + vhd structs + disk config
        oc.per_disk.push_back(n);
        oc.disk_total += n;
    }
    oc.ram_pages = config.ram_pages();
    oc.cpu_objects = 2ull * config.cpu_n;
    oc.config_objects = 1;
    oc.net_objects = config.net_interfaces.size();
    oc.total = oc.disk_total + oc.ram_pages + oc.cpu_objects + oc.config_objects + oc.net_objects;
    return oc;
}

Name resource_subpath(const VmConfig& config, const Locator& loc) {
    switch (loc.kind) {
        case ResourceKind::config:
            if (loc.disk >= 0)
                return Name{{ "disk", config.disks.at(loc.disk).disk_name, "config" }};
            return Name{{"config"}};
        case ResourceKind::cpu_regfile:
            return Name{{"cpu", std::to_string(loc.index), "regfile"}};
        case ResourceKind::cpu_tlb:
            return Name{{"cpu", std::to_string(loc.index), "tlb"}};
        case ResourceKind::ram_page:
            return Name{{"ram", "page", std::to_string(loc.index)}};
        case ResourceKind::disk_block:
            return Name{{"disk", config.disks.at(loc.disk).disk_name, "block",
                         std::to_string(loc.index)}};
        case ResourceKind::vhd_struct: {
            static const char* tags[] = {"header", "bat", "footer"};
            return Name{{"disk", config.disks.at(loc.disk).disk_name, "vhd",
                         tags[loc.index]}};
        }
        case ResourceKind::net:
            return Name{{"net", config.net_interfaces.at(loc.index)}};
    }
    throw std::logic_error("bad resource kind");
}

std::string locator_to_string(const VmConfig& config, const Locator& loc) {
    return resource_subpath(config, loc).to_text();
}

std::vector<Name> enumerate_names(const VmConfig& config) {
    std::vector<Name> names;
    names.push_back(config.vm_name.append(Name{{"config"}}));
    for (uint32_t i = 0; i < config.cpu_n; i++) {
        names.push_back(config.vm_name.append(resource_subpath(config, {ResourceKind::cpu_regfile, -1, i})));
        names.push_back(config.vm_name.append(resource_subpath(config, {ResourceKind::cpu_tlb, -1, i})));
    }
    for (uint64_t p = 0; p < config.ram_pages(); p++)
        names.push_back(config.vm_name.append(resource_subpath(config, {ResourceKind::ram_page, -1, p})));
    for (int32_t d = 0; d < static_cast<int32_t>(config.disks.size()); d++) {
        names.push_back(config.vm_name.append(resource_subpath(config, {ResourceKind::config, d, 0})));
        for (uint64_t s = 0; s < 3; s++)
            names.push_back(config.vm_name.append(resource_subpath(config, {ResourceKind::vhd_struct, d, s})));
        for (uint64_t b = 0; b < config.disks[d].populated_blocks(); b++)
            names.push_back(config.vm_name.append(resource_subpath(config, {ResourceKind::disk_block, d, b})));
    }
    for (uint64_t n = 0; n < config.net_interfaces.size(); n++)
        names.push_back(config.vm_name.append(resource_subpath(config, {ResourceKind::net, -1, n})));
    return names;
}

void for_each_resource(const VmConfig& config,
                       const std::function<void(const Locator&, uint64_t)>& fn) {
    fn({ResourceKind::config, -1, 0}, config.to_json().size());
    for (uint32_t i = 0; i < config.cpu_n; i++) {
        fn({ResourceKind::cpu_regfile, -1, i}, config.regfile_bytes);
        fn({ResourceKind::cpu_tlb, -1, i}, config.tlb_bytes);
    }
    for (uint64_t p = 0; p < config.ram_pages(); p++)
        fn({ResourceKind::ram_page, -1, p}, config.page_size);
    for (int32_t d = 0; d < static_cast<int32_t>(config.disks.size()); d++) {
        const DiskConfig& dc = config.disks[d];
        fn({ResourceKind::config, d, 0}, 5 + dc.disk_name.size());
        for (uint64_t s = 0; s < 3; s++)
            fn({ResourceKind::vhd_struct, d, s}, config.vhd_struct_bytes);
        for (uint64_t b = 0; b < dc.populated_blocks(); b++)
            fn({ResourceKind::disk_block, d, b}, dc.block_size);
    }
    for (uint64_t n = 0; n < config.net_interfaces.size(); n++)
        fn({ResourceKind::net, -1, n}, config.net_interfaces[n].size());
}

const Bytes& Snapshot::read(const Locator& loc) const {
    auto it = data_.find(loc);
    if (it == data_.end()) throw std::out_of_range("no such resource in snapshot");
    return *it->second;
}

const Bytes& VmImage::read(const Locator& loc) const {
    auto it = data_.find(loc);
    if (it == data_.end()) throw std::out_of_range("no such resource in image");
    return *it->second;
}

std::optional<Bytes> VmImage::try_read(const Locator& loc) const {
    auto it = data_.find(loc);
    if (it == data_.end()) return std::nullopt;
    return *it->second;
}

uint64_t VmImage::resource_size(const Locator& loc) const {
    switch (loc.kind) {
        case ResourceKind::cpu_regfile: return config_.regfile_bytes;
        case ResourceKind::cpu_tlb: return config_.tlb_bytes;
        case ResourceKind::ram_page: return config_.page_size;
        case ResourceKind::disk_block: return config_.disks.at(loc.disk).block_size;
        case ResourceKind::vhd_struct: return config_.vhd_struct_bytes;
        case ResourceKind::config:
        case ResourceKind::net: {
            auto it = data_.find(loc);
            return it == data_.end() ? 0 : it->second->size();
        }
    }
    throw std::logic_error("bad resource kind");
}

void VmImage::apply_write(const Locator& loc, Bytes data) {
    if (frozen_) throw std::runtime_error("image is frozen");
    auto it = data_.find(loc);
    if (it == data_.end()) throw std::out_of_range("no such resource in image");
    if (data.size() != it->second->size())
        throw std::invalid_argument("write size mismatch");
    it->second = std::make_shared<const Bytes>(std::move(data));
    dirty_.insert(loc);
}

void VmImage::place(const Locator& loc, Bytes data) {
    uint64_t want = resource_size(loc);
    // config/net payloads are variable length; fixed resources must match
    if (want != 0 && data.size() != want && loc.kind != ResourceKind::config &&
        loc.kind != ResourceKind::net)
        throw std::invalid_argument("placement size mismatch");
    data_[loc] = std::make_shared<const Bytes>(std::move(data));
}

Snapshot VmImage::snapshot(uint64_t version) {
    if (last_version_ && version <= *last_version_)
        throw std::invalid_argument("snapshot versions must be strictly increasing");
    Snapshot s;
    s.version_ = version;
    s.data_ = data_;  // shares blobs; later writes replace pointers
    dirty_history_.emplace_back(version, std::move(dirty_));
    dirty_.clear();
    last_version_ = version;
    return s;
}

std::set<Locator> VmImage::dirty_set(uint64_t since_version) const {
    std::set<Locator> out = dirty_;
    for (const auto& [ver, set] : dirty_history_) {
        if (ver > since_version) out.insert(set.begin(), set.end());
    }
    return out;
}

std::vector<Locator> VmImage::all_locators() const {
    std::vector<Locator> out;
    out.reserve(data_.size());
    for (const auto& [loc, _] : data_) out.push_back(loc);
    return out;
}

namespace {

// Deterministic opaque content for a resource, parameterized by seed.
Bytes gen_bytes(uint64_t seed, uint64_t tag_a, uint64_t tag_b, uint64_t size) {
    // seed_seq mixes all three words; cheap xor schemes alias nearby
    // (seed, tag) pairs onto the same stream
    std::seed_seq sq{seed, tag_a, tag_b};
    std::mt19937_64 rng(sq);
    Bytes out(size);
    for (auto& b : out) b = static_cast<uint8_t>(rng());
    return out;
}

}  // namespace

VmImage VmImage::build(const VmConfig& config, uint64_t seed) {
    config.validate();
    VmImage img;
    img.config_ = config;
    auto set = [&](const Locator& loc, Bytes b) {
        img.data_[loc] = std::make_shared<const Bytes>(std::move(b));
    };

    set({ResourceKind::config, -1, 0}, to_bytes(config.to_json()));
    for (uint32_t i = 0; i < config.cpu_n; i++) {
        set({ResourceKind::cpu_regfile, -1, i}, gen_bytes(seed, 1, i, config.regfile_bytes));
        set({ResourceKind::cpu_tlb, -1, i}, gen_bytes(seed, 2, i, config.tlb_bytes));
    }
    for (int32_t d = 0; d < static_cast<int32_t>(config.disks.size()); d++) {
        const DiskConfig& dc = config.disks[d];
        uint64_t dtag = 100 + static_cast<uint64_t>(d);
        set({ResourceKind::config, d, 0}, to_bytes("disk " + dc.disk_name));
        for (uint64_t s = 0; s < 3; s++)
            set({ResourceKind::vhd_struct, d, s}, gen_bytes(seed, dtag * 10 + 3, s, config.vhd_struct_bytes));
        uint64_t n = dc.populated_blocks();
        uint64_t ndup = static_cast<uint64_t>(dc.dup_fraction * static_cast<double>(n));
        uint64_t nuniq = n - ndup;
        uint64_t content_seed = dc.shared_seed ? *dc.shared_seed : seed;
        uint64_t content_tag = dc.shared_seed ? 0xabcd : dtag * 10 + 4;
        for (uint64_t b = 0; b < n; b++) {
            uint64_t src = nuniq == 0 ? 0 : (b < nuniq ? b : b % nuniq);
            set({ResourceKind::disk_block, d, b}, gen_bytes(content_seed, content_tag, src, dc.block_size));
        }
    }
    for (uint64_t p = 0; p < config.ram_pages(); p++) {
        if (p < config.cross_dup_pages) {
            // byte-equal to disk-0 block p
            set({ResourceKind::ram_page, -1, p},
                *img.data_.at({ResourceKind::disk_block, 0, p}));
        } else {
            set({ResourceKind::ram_page, -1, p}, gen_bytes(seed, 5, p, config.page_size));
        }
    }
    for (uint64_t i = 0; i < config.net_interfaces.size(); i++)
        set({ResourceKind::net, -1, i}, to_bytes(config.net_interfaces[i]));
    return img;
}

VmImage VmImage::allocate(const VmConfig& config) {
    config.validate();
    VmImage img;
    img.config_ = config;
    for (uint64_t p = 0; p < config.ram_pages(); p++)
        img.data_[{ResourceKind::ram_page, -1, p}] =
            std::make_shared<const Bytes>(config.page_size, 0);
    // config, cpu state, disk contents arrive via checkpoint placement
    return img;
}

size_t workload_step(VmImage& image, const WorkloadModel& model, std::mt19937_64& rng) {
    if (image.frozen()) return 0;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    size_t applied = 0;
    for (uint32_t s = 0; s < model.writes_per_step; s++) {
        for (const Locator& loc : image.all_locators()) {
            if (loc.kind != ResourceKind::ram_page && loc.kind != ResourceKind::disk_block)
                continue;
            double p = model.hot_set.contains(loc) ? model.hot_write_prob : model.cold_write_prob;
            if (p <= 0.0) continue;
            if (coin(rng) < p) {
                image.apply_write(loc, gen_bytes(rng(), 7, loc.index, image.resource_size(loc)));
                applied++;
            }
        }
    }
    return applied;
}

namespace {

template <typename A>
std::optional<std::pair<Locator, size_t>> divergence(const A& a_data, const VmImage& b) {
    for (const auto& [loc, blob] : a_data) {
        auto other = b.try_read(loc);
        if (!other) return std::make_pair(loc, size_t{0});
        const Bytes& av = *blob;
        if (av != *other) {
            size_t off = 0;
            size_t n = std::min(av.size(), other->size());
            while (off < n && av[off] == (*other)[off]) off++;
            return std::make_pair(loc, off);
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::pair<Locator, size_t>> first_divergence(const VmImage& a, const VmImage& b) {
    std::map<Locator, Blob> a_data;
    for (const Locator& loc : a.all_locators())
        a_data[loc] = std::make_shared<const Bytes>(a.read(loc));
    return divergence(a_data, b);
}

std::optional<std::pair<Locator, size_t>> first_divergence(const Snapshot& a, const VmImage& b) {
    return divergence(a.data(), b);
}

}  // namespace ccnmig
