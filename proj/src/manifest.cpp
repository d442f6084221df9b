#include "ccnmig/manifest.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <sstream>

namespace ccnmig {

namespace {

constexpr uint16_t M_META = 0x0010;
constexpr uint16_t M_SECTION = 0x0011;

// Keep encoded section TLVs under the 16-bit length cap.
constexpr size_t MAX_ENTRIES_PER_TLV = 1200;

void put_u16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u32(Bytes& out, uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

void put_u64(Bytes& out, uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

void put_text(Bytes& out, const std::string& s) {
    if (s.size() > 0xffff) throw ManifestError(ManifestError::Kind::build, "text too long");
    put_u16(out, static_cast<uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
    const Bytes& buf;
    size_t pos = 0;
    size_t end;

    size_t remaining() const { return end - pos; }
    void need(size_t n) const {
        if (remaining() < n)
            throw ManifestError(ManifestError::Kind::corrupt, "manifest stream truncated");
    }
    uint8_t u8() { need(1); return buf[pos++]; }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>((buf[pos] << 8) | buf[pos + 1]);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; i++) v = (v << 8) | u8();
        return v;
    }
    uint64_t u64() {
        uint64_t v = 0;
        for (int i = 0; i < 8; i++) v = (v << 8) | u8();
        return v;
    }
    std::string text() {
        uint16_t n = u16();
        need(n);
        std::string s(buf.begin() + pos, buf.begin() + pos + n);
        pos += n;
        return s;
    }
    Hash256 hash() {
        need(32);
        Hash256 h;
        std::memcpy(h.value.data(), buf.data() + pos, 32);
        pos += 32;
        return h;
    }
};

Name kind_prefix_path(const VmConfig& config, ResourceKind kind, int32_t disk) {
    switch (kind) {
        case ResourceKind::config: return Name{{"config"}};
        case ResourceKind::cpu_regfile: return Name{{"cpu", "regfile"}};
        case ResourceKind::cpu_tlb: return Name{{"cpu", "tlb"}};
        case ResourceKind::ram_page: return Name{{"ram"}};
        case ResourceKind::disk_block:
            return Name{{"disk", config.disks.at(disk).disk_name}};
        case ResourceKind::vhd_struct:
            return Name{{"disk", config.disks.at(disk).disk_name, "vhd"}};
        case ResourceKind::net: return Name{{"net"}};
    }
    throw std::logic_error("bad resource kind");
}

void encode_section_tlvs(Bytes& out, const ManifestSection& sec) {
    for (size_t base = 0; base < sec.entries.size() || sec.entries.empty();
         base += MAX_ENTRIES_PER_TLV) {
        size_t n = std::min(MAX_ENTRIES_PER_TLV, sec.entries.size() - base);
        Bytes v;
        v.push_back(static_cast<uint8_t>(sec.kind));
        put_u32(v, static_cast<uint32_t>(sec.disk + 1));
        v.push_back(sec.strong ? 1 : 0);
        put_text(v, sec.locator_prefix.to_text());
        put_u32(v, static_cast<uint32_t>(n));
        for (size_t i = base; i < base + n; i++) {
            const ManifestEntry& e = sec.entries[i];
            put_u64(v, e.index);
            if (sec.strong) {
                v.insert(v.end(), e.hash.value.begin(), e.hash.value.end());
            } else {
                put_text(v, e.explicit_name.to_text());
            }
        }
        put_u16(out, M_SECTION);
        put_u16(out, static_cast<uint16_t>(v.size()));
        out.insert(out.end(), v.begin(), v.end());
        if (sec.entries.empty()) break;
    }
}

Bytes encode_stream(const Manifest& m) {
    Bytes out;
    Bytes meta;
    put_text(meta, m.vm_name.to_text());
    put_u64(meta, m.version);
    meta.push_back(static_cast<uint8_t>(m.phase));
    put_u32(meta, m.chunk_count);
    put_u16(out, M_META);
    put_u16(out, static_cast<uint16_t>(meta.size()));
    out.insert(out.end(), meta.begin(), meta.end());
    for (const auto& sec : m.sections) encode_section_tlvs(out, sec);
    return out;
}

}  // namespace

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::push: return "push";
        case Phase::stop_and_copy: return "stop_and_copy";
        case Phase::pull: return "pull";
    }
    return "?";
}

std::vector<const ManifestEntry*> Manifest::all_entries() const {
    std::vector<const ManifestEntry*> out;
    for (const auto& sec : sections)
        for (const auto& e : sec.entries) out.push_back(&e);
    return out;
}

Name checkpoint_prefix(const Name& vm_prefix, uint64_t version) {
    return vm_prefix.append("checkpoint").append("ver=" + std::to_string(version));
}

std::string checkpoint_owner(const Name& vm_name, uint64_t version) {
    return vm_name.to_text() + "/ver=" + std::to_string(version);
}

BuiltManifest build_manifest(const Snapshot& snap, const VmConfig& config,
                             const std::set<Locator>& selection, ContentStore& store,
                             const BuildOptions& options) {
    Name ckpt = checkpoint_prefix(options.vm_prefix, options.version);
    std::string owner = checkpoint_owner(config.vm_name, options.version);

    Manifest m;
    m.vm_name = config.vm_name;
    m.version = options.version;
    m.phase = options.phase;

    // group by (kind, disk), iteration order is deterministic (Locator <)
    std::map<std::pair<ResourceKind, int32_t>, ManifestSection> sections;
    for (const Locator& loc : selection) {
        if (!snap.contains(loc))
            throw ManifestError(ManifestError::Kind::build,
                                "selection references missing resource " +
                                    locator_to_string(config, loc));
        auto key = std::make_pair(loc.kind, loc.disk);
        auto it = sections.find(key);
        if (it == sections.end()) {
            ManifestSection sec;
            sec.kind = loc.kind;
            sec.disk = loc.disk;
            sec.strong = options.strong_for ? options.strong_for(loc.kind, loc.disk) : true;
            std::optional<Name> prefix;
            if (options.prefix_override) prefix = options.prefix_override(loc.kind, loc.disk);
            sec.locator_prefix =
                prefix ? *prefix : ckpt.append(kind_prefix_path(config, loc.kind, loc.disk));
            it = sections.emplace(key, std::move(sec)).first;
        }
        ManifestSection& sec = it->second;
        ManifestEntry e;
        e.kind = loc.kind;
        e.disk = loc.disk;
        e.index = loc.index;
        e.strong = sec.strong;
        if (sec.strong) {
            e.locator_prefix = sec.locator_prefix;
            e.hash = store.put(make_nameless(snap.read(loc)), owner);
        } else {
            e.explicit_name = ckpt.append(resource_subpath(config, loc));
        }
        sec.entries.push_back(std::move(e));
    }
    for (auto& [_, sec] : sections) m.sections.push_back(std::move(sec));

    // chunk_count is fixed-width inside META, so the stream length does not
    // depend on its value; encode, compute, patch, re-encode.
    m.chunk_count = 1;
    Bytes stream = encode_stream(m);
    uint32_t nchunks = static_cast<uint32_t>(
        std::max<size_t>(1, (stream.size() + options.chunk_payload_limit - 1) /
                                options.chunk_payload_limit));
    m.chunk_count = nchunks;
    stream = encode_stream(m);

    BuiltManifest out;
    out.manifest = m;
    Name mprefix = ckpt.append("manifest");
    for (uint32_t k = 0; k < nchunks; k++) {
        size_t lo = k * options.chunk_payload_limit;
        size_t hi = std::min(stream.size(), lo + options.chunk_payload_limit);
        ContentObject chunk;
        chunk.name = mprefix.append("chunk=" + std::to_string(k));
        chunk.payload = Bytes(stream.begin() + lo, stream.begin() + hi);
        out.chunks.push_back(std::move(chunk));
    }
    return out;
}

ManifestMeta parse_manifest_meta(const Bytes& root_payload) {
    Reader r{root_payload, 0, root_payload.size()};
    if (r.u16() != M_META)
        throw ManifestError(ManifestError::Kind::corrupt, "root chunk does not start with META");
    uint16_t len = r.u16();
    r.need(len);
    Reader m{root_payload, r.pos, r.pos + len};
    ManifestMeta meta;
    meta.vm_name = Name::parse(m.text());
    meta.version = m.u64();
    uint8_t ph = m.u8();
    if (ph > 2) throw ManifestError(ManifestError::Kind::corrupt, "bad phase tag");
    meta.phase = static_cast<Phase>(ph);
    meta.chunk_count = m.u32();
    return meta;
}

Manifest parse_manifest(const std::vector<ContentObject>& chunks) {
    std::map<uint32_t, const ContentObject*> by_index;
    for (const auto& c : chunks) {
        if (!c.name || c.name->empty())
            throw ManifestError(ManifestError::Kind::corrupt, "manifest chunk without name");
        const std::string& last = c.name->at(c.name->size() - 1);
        if (last.rfind("chunk=", 0) != 0)
            throw ManifestError(ManifestError::Kind::corrupt, "chunk name missing chunk=k");
        by_index[static_cast<uint32_t>(std::stoul(last.substr(6)))] = &c;
    }
    auto root = by_index.find(0);
    if (root == by_index.end())
        throw ManifestError(ManifestError::Kind::incomplete, "missing root chunk");

    // META leads chunk 0; read it to learn the chunk count.
    ManifestMeta meta = parse_manifest_meta(root->second->payload);
    Manifest m;
    m.vm_name = meta.vm_name;
    m.version = meta.version;
    m.phase = meta.phase;
    m.chunk_count = meta.chunk_count;

    Bytes stream;
    for (uint32_t k = 0; k < m.chunk_count; k++) {
        auto it = by_index.find(k);
        if (it == by_index.end())
            throw ManifestError(ManifestError::Kind::incomplete,
                                "missing manifest chunk " + std::to_string(k));
        stream.insert(stream.end(), it->second->payload.begin(), it->second->payload.end());
    }

    Reader r{stream, 0, stream.size()};
    r.u16();  // META, validated above
    uint16_t meta_len = r.u16();
    r.need(meta_len);
    r.pos += meta_len;

    while (r.remaining() > 0) {
        if (r.u16() != M_SECTION)
            throw ManifestError(ManifestError::Kind::corrupt, "unexpected TLV in manifest stream");
        uint16_t len = r.u16();
        r.need(len);
        Reader s{stream, r.pos, r.pos + len};
        r.pos += len;

        uint8_t kind_raw = s.u8();
        if (kind_raw > static_cast<uint8_t>(ResourceKind::net))
            throw ManifestError(ManifestError::Kind::corrupt, "bad section kind");
        ManifestSection sec;
        sec.kind = static_cast<ResourceKind>(kind_raw);
        sec.disk = static_cast<int32_t>(s.u32()) - 1;
        sec.strong = s.u8() != 0;
        sec.locator_prefix = Name::parse(s.text());
        uint32_t count = s.u32();
        for (uint32_t i = 0; i < count; i++) {
            ManifestEntry e;
            e.kind = sec.kind;
            e.disk = sec.disk;
            e.strong = sec.strong;
            e.index = s.u64();
            if (sec.strong) {
                e.locator_prefix = sec.locator_prefix;
                e.hash = s.hash();
            } else {
                e.explicit_name = Name::parse(s.text());
            }
            sec.entries.push_back(std::move(e));
        }
        if (s.remaining() != 0)
            throw ManifestError(ManifestError::Kind::corrupt, "section length mismatch");

        // merge continuation TLVs of a split section
        if (!m.sections.empty()) {
            ManifestSection& prev = m.sections.back();
            if (prev.kind == sec.kind && prev.disk == sec.disk && prev.strong == sec.strong &&
                prev.locator_prefix == sec.locator_prefix) {
                prev.entries.insert(prev.entries.end(), sec.entries.begin(), sec.entries.end());
                continue;
            }
        }
        m.sections.push_back(std::move(sec));
    }
    return m;
}

NamedAddress entry_fetch_address(const ManifestEntry& entry) {
    if (entry.strong) return NamedAddress{entry.locator_prefix, std::nullopt, entry.hash};
    return NamedAddress{entry.explicit_name, std::nullopt, std::nullopt};
}

void apply_entry(VmImage& dest, const ManifestEntry& entry, const ContentObject& obj) {
    if (entry.strong && compute_object_hash(obj) != entry.hash)
        throw ManifestError(ManifestError::Kind::corrupt,
                            "integrity error: object hash does not match entry");
    const VmConfig& c = dest.config();
    Locator loc{entry.kind, entry.disk, entry.index};
    switch (entry.kind) {
        case ResourceKind::ram_page:
            if (entry.index >= c.ram_pages())
                throw ManifestError(ManifestError::Kind::build, "ram page index out of range");
            break;
        case ResourceKind::disk_block: {
            if (entry.disk < 0 || entry.disk >= static_cast<int32_t>(c.disks.size()))
                throw ManifestError(ManifestError::Kind::build, "disk index out of range");
            const DiskConfig& d = c.disks[entry.disk];
            if (entry.index >= d.capacity_bytes / d.block_size)
                throw ManifestError(ManifestError::Kind::build,
                                    "disk block index beyond disk capacity");
            break;
        }
        case ResourceKind::cpu_regfile:
        case ResourceKind::cpu_tlb:
            if (entry.index >= c.cpu_n)
                throw ManifestError(ManifestError::Kind::build, "cpu index out of range");
            break;
        case ResourceKind::vhd_struct:
            if (entry.index > 2)
                throw ManifestError(ManifestError::Kind::build, "bad vhd structure tag");
            break;
        default:
            break;
    }
    dest.place(loc, obj.payload);
}

std::string manifest_to_text(const Manifest& m) {
    std::ostringstream out;
    out << "manifest " << m.vm_name.to_text() << " ver=" << m.version << " phase="
        << phase_name(m.phase) << " chunks=" << m.chunk_count << "\n";
    for (const auto& sec : m.sections) {
        out << "  section kind=" << static_cast<int>(sec.kind) << " disk=" << sec.disk
            << (sec.strong ? " strong" : " weak") << " prefix=" << sec.locator_prefix.to_text()
            << " entries=" << sec.entries.size() << "\n";
        for (const auto& e : sec.entries) {
            if (e.strong)
                out << "    " << e.index << " hash=" << e.hash.to_hex().substr(0, 16) << "...\n";
            else
                out << "    " << e.index << " name=" << e.explicit_name.to_text() << "\n";
        }
    }
    return out.str();
}

namespace {

size_t name_tlv_size(const Name& n) {
    size_t inner = 0;
    for (const auto& s : n.segments()) inner += 4 + s.size();
    return 4 + inner;
}

}  // namespace

NamingComparison compare_naming(const VmConfig& config, uint64_t version) {
    NamingComparison c;
    Name ckpt = checkpoint_prefix(config.vm_name, version);
    uint64_t k = 0;
    for_each_resource(config, [&](const Locator& loc, uint64_t size) {
        c.objects++;
        c.payload_bytes += size;
        // hash scheme: nameless object (16B framing) + 40B manifest entry
        c.hash_scheme_bytes += size + wire::NAMELESS_OVERHEAD + 8 + 32;
        // metadata scheme: named chunk /…/ver=j/chunk=k plus a placement
        // metadata TLV (kind + disk + index)
        Name chunk_name = ckpt.append("chunk=" + std::to_string(k));
        c.metadata_scheme_bytes +=
            size + wire::NAMELESS_OVERHEAD + name_tlv_size(chunk_name) + 4 + 1 + 4 + 8;
        // link scheme: named chunk with the spelled-out content name
        // prepended as a link
        Name full = ckpt.append(resource_subpath(config, loc));
        c.link_scheme_bytes +=
            size + wire::NAMELESS_OVERHEAD + name_tlv_size(chunk_name) + 4 + name_tlv_size(full);
        k++;
    });
    return c;
}

}  // namespace ccnmig
