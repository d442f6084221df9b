#include <doctest.h>

#include "ccnmig/manifest.hpp"

using namespace ccnmig;

namespace {

VmConfig test_config() {
    VmConfig cfg;
    cfg.vm_name = Name::parse("/parc/vm3");
    cfg.ram_bytes = 1 << 20;  // 256 pages
    cfg.page_size = 4096;
    DiskConfig d;
    d.disk_name = "hda";
    d.capacity_bytes = 1 << 20;
    d.block_size = 4096;
    d.fill_ratio = 1.0;
    cfg.disks.push_back(d);
    return cfg;
}

std::set<Locator> full_selection(const VmImage& img) {
    auto v = img.all_locators();
    return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("strong manifest round-trips and its objects land in the store") {
    VmConfig cfg = test_config();
    VmImage img = VmImage::build(cfg, 1);
    Snapshot snap = img.snapshot(0);
    ContentStore store;

    BuildOptions opts;
    opts.vm_prefix = cfg.vm_name;
    opts.version = 0;
    BuiltManifest built = build_manifest(snap, cfg, full_selection(img), store, opts);

    CHECK(built.manifest.vm_name == cfg.vm_name);
    CHECK(built.chunks.size() == built.manifest.chunk_count);
    CHECK(built.chunks[0].name->to_text() == "/parc/vm3/checkpoint/ver=0/manifest/chunk=0");

    // every strong entry's bytes are retrievable by hash
    for (const ManifestEntry* e : built.manifest.all_entries()) {
        REQUIRE(e->strong);
        CHECK(store.get_by_hash(e->hash).has_value());
    }
    CHECK(parse_manifest(built.chunks) == built.manifest);
}

TEST_CASE("chunking granularity does not change the parsed manifest") {
    VmConfig cfg = test_config();
    VmImage img = VmImage::build(cfg, 2);
    Snapshot snap = img.snapshot(0);

    BuildOptions coarse;
    coarse.vm_prefix = cfg.vm_name;
    BuildOptions fine = coarse;
    fine.chunk_payload_limit = 600;  // force many chunks

    ContentStore s1, s2;
    BuiltManifest a = build_manifest(snap, cfg, full_selection(img), s1, coarse);
    BuiltManifest b = build_manifest(snap, cfg, full_selection(img), s2, fine);
    CHECK(b.chunks.size() > a.chunks.size());

    Manifest ma = parse_manifest(a.chunks);
    Manifest mb = parse_manifest(b.chunks);
    CHECK(mb.all_entries().size() == ma.all_entries().size());
    // entry sets agree even though section records were split across chunks
    auto ea = ma.all_entries();
    auto eb = mb.all_entries();
    for (size_t i = 0; i < ea.size(); i++) CHECK(*ea[i] == *eb[i]);

    // chunks parse in any order
    std::reverse(b.chunks.begin(), b.chunks.end());
    CHECK(parse_manifest(b.chunks).all_entries().size() == ea.size());
}

TEST_CASE("weak sections use enumerated names under the checkpoint prefix") {
    VmConfig cfg = test_config();
    VmImage img = VmImage::build(cfg, 3);
    Snapshot snap = img.snapshot(0);
    ContentStore store;

    BuildOptions opts;
    opts.vm_prefix = cfg.vm_name;
    opts.version = 2;
    opts.strong_for = [](ResourceKind k, int32_t) {
        return k != ResourceKind::ram_page && k != ResourceKind::disk_block;
    };
    BuiltManifest built = build_manifest(snap, cfg, full_selection(img), store, opts);

    bool saw_weak = false;
    for (const ManifestEntry* e : built.manifest.all_entries()) {
        if (e->kind == ResourceKind::ram_page) {
            CHECK_FALSE(e->strong);
            CHECK(Name::parse("/parc/vm3/checkpoint/ver=2").is_prefix_of(e->explicit_name));
            saw_weak = true;
        }
    }
    CHECK(saw_weak);
    // weak entries put nothing in the store; strong remainder does
    CHECK(store.size() < full_selection(img).size());
    CHECK(parse_manifest(built.chunks) == built.manifest);
}

TEST_CASE("metadata is readable from the root chunk alone") {
    VmConfig cfg = test_config();
    VmImage img = VmImage::build(cfg, 4);
    Snapshot snap = img.snapshot(0);
    ContentStore store;
    BuildOptions opts;
    opts.vm_prefix = cfg.vm_name;
    opts.version = 5;
    opts.phase = Phase::stop_and_copy;
    opts.chunk_payload_limit = 600;
    BuiltManifest built = build_manifest(snap, cfg, full_selection(img), store, opts);
    REQUIRE(built.chunks.size() > 1);

    ManifestMeta meta = parse_manifest_meta(built.chunks[0].payload);
    CHECK(meta.vm_name == cfg.vm_name);
    CHECK(meta.version == 5);
    CHECK(meta.phase == Phase::stop_and_copy);
    CHECK(meta.chunk_count == built.chunks.size());

    // a non-root chunk alone is rejected as incomplete
    CHECK_THROWS_AS(parse_manifest({built.chunks[1]}), ManifestError);
}

TEST_CASE("apply_entry places bytes and verifies strong hashes") {
    VmConfig cfg = test_config();
    VmImage src = VmImage::build(cfg, 6);
    Snapshot snap = src.snapshot(0);
    ContentStore store;
    BuildOptions opts;
    opts.vm_prefix = cfg.vm_name;
    BuiltManifest built = build_manifest(snap, cfg, full_selection(src), store, opts);

    VmImage dst = VmImage::allocate(cfg);
    for (const ManifestEntry* e : built.manifest.all_entries()) {
        auto obj = store.get_by_hash(e->hash);
        REQUIRE(obj.has_value());
        apply_entry(dst, *e, *obj);
    }
    CHECK_FALSE(first_divergence(snap, dst).has_value());

    // corrupted payload fails the integrity check instead of landing
    const ManifestEntry* page_entry = nullptr;
    for (const ManifestEntry* e : built.manifest.all_entries())
        if (e->kind == ResourceKind::ram_page) page_entry = e;
    REQUIRE(page_entry);
    ContentObject bad = *store.get_by_hash(page_entry->hash);
    bad.payload[0] ^= 1;
    CHECK_THROWS_AS(apply_entry(dst, *page_entry, bad), ManifestError);

    // out-of-range block index is rejected
    ManifestEntry oob = *page_entry;
    oob.kind = ResourceKind::disk_block;
    oob.disk = 0;
    oob.index = 1u << 20;
    CHECK_THROWS_AS(apply_entry(dst, oob, *store.get_by_hash(page_entry->hash)), ManifestError);
}

TEST_CASE("naming comparison: hash names beat metadata and link schemes") {
    NamingComparison c = compare_naming(test_config(), 0);
    CHECK(c.objects == object_count(test_config()).total);
    CHECK(c.hash_scheme_bytes > c.payload_bytes);  // framing + manifest entries
    // the explicit-name schemes repeat long names per object and cost more
    CHECK(c.metadata_scheme_bytes > c.hash_scheme_bytes);
    CHECK(c.link_scheme_bytes > c.hash_scheme_bytes);
}
