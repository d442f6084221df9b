#include <doctest.h>

#include <random>

#include "ccnmig/machine.hpp"

using namespace ccnmig;

static VmConfig paper_config() {
    // 2 GiB RAM (binary), one 2 GB disk (decimal) 25% full of 512-byte blocks
    VmConfig cfg;
    cfg.vm_name = Name::parse("/parc/vm3");
    cfg.cpu_n = 1;
    cfg.ram_bytes = 1ull << 31;
    cfg.page_size = 4096;
    DiskConfig d;
    d.disk_name = "hda";
    d.capacity_bytes = 2'000'000'000;
    d.block_size = 512;
    d.fill_ratio = 0.25;
    cfg.disks.push_back(d);
    cfg.net_interfaces = {"en0"};
    return cfg;
}

static VmConfig small_config() {
    VmConfig cfg;
    cfg.vm_name = Name::parse("/parc/vm3");
    cfg.ram_bytes = 1 << 20;
    cfg.page_size = 4096;
    DiskConfig d;
    d.disk_name = "hda";
    d.capacity_bytes = 1 << 20;
    d.block_size = 4096;
    d.fill_ratio = 1.0;
    cfg.disks.push_back(d);
    return cfg;
}

TEST_CASE("object counts reproduce the 2GB/2GiB reference machine") {
    ObjectCount c = object_count(paper_config());
    // ceil(0.25 * 2e9 / 512) data blocks
    CHECK(paper_config().disks[0].populated_blocks() == 976'563);
    // + 3 vhd structures + 1 disk config object
    CHECK(c.per_disk[0] == 976'567);
    CHECK(c.ram_pages == 524'288);
    // component sum; the naive grand total also counts cpu/net/config objects
    CHECK(c.per_disk[0] + c.ram_pages == 1'500'855);
    CHECK(c.total == c.disk_total + c.ram_pages + c.cpu_objects + c.config_objects +
                         c.net_objects);
}

TEST_CASE("enumerate_names covers the ontology, one name per object") {
    VmConfig cfg = small_config();
    std::vector<Name> names = enumerate_names(cfg);
    CHECK(names.size() == object_count(cfg).total);
    auto has = [&](const std::string& text) {
        return std::find(names.begin(), names.end(), Name::parse(text)) != names.end();
    };
    CHECK(has("/parc/vm3/config"));
    CHECK(has("/parc/vm3/cpu/0/regfile"));
    CHECK(has("/parc/vm3/ram/page/255"));
    CHECK(has("/parc/vm3/disk/hda/block/0"));
    CHECK(has("/parc/vm3/disk/hda/vhd/bat"));
}

TEST_CASE("snapshots are isolated from later writes") {
    VmImage img = VmImage::build(small_config(), 1);
    Locator page{ResourceKind::ram_page, -1, 3};
    Bytes before = img.read(page);
    Snapshot snap = img.snapshot(0);

    Bytes changed(before.size(), 0x5a);
    img.apply_write(page, changed);
    CHECK(img.read(page) == changed);
    CHECK(snap.read(page) == before);  // copy-on-write kept the old bytes
}

TEST_CASE("dirty tracking reports exactly the writes since a version") {
    VmImage img = VmImage::build(small_config(), 1);
    img.snapshot(0);

    Locator p1{ResourceKind::ram_page, -1, 1};
    Locator b2{ResourceKind::disk_block, 0, 2};
    img.apply_write(p1, Bytes(4096, 1));
    img.apply_write(b2, Bytes(4096, 2));
    img.apply_write(p1, Bytes(4096, 3));  // rewrite is still one dirty locator
    CHECK(img.dirty_set(0) == std::set<Locator>{p1, b2});

    img.snapshot(1);
    CHECK(img.dirty_set(1).empty());
    Locator p5{ResourceKind::ram_page, -1, 5};
    img.apply_write(p5, Bytes(4096, 4));
    CHECK(img.dirty_set(1) == std::set<Locator>{p5});
    // asking "since version 0" unions the captured round and the live writes
    CHECK(img.dirty_set(0) == std::set<Locator>{p1, b2, p5});
}

TEST_CASE("dirty set is complete under a random workload (external write log oracle)") {
    VmImage img = VmImage::build(small_config(), 7);
    img.snapshot(0);
    std::mt19937_64 rng(99);
    std::set<Locator> log;
    for (int i = 0; i < 200; i++) {
        bool page = rng() % 2;
        Locator loc = page ? Locator{ResourceKind::ram_page, -1, rng() % 256}
                           : Locator{ResourceKind::disk_block, 0, rng() % 256};
        Bytes b(4096);
        for (auto& x : b) x = static_cast<uint8_t>(rng());
        img.apply_write(loc, b);
        log.insert(loc);
    }
    CHECK(img.dirty_set(0) == log);
}

TEST_CASE("frozen images reject writes") {
    VmImage img = VmImage::build(small_config(), 1);
    img.freeze();
    CHECK_THROWS(img.apply_write({ResourceKind::ram_page, -1, 0}, Bytes(4096, 1)));
    img.unfreeze();
    img.apply_write({ResourceKind::ram_page, -1, 0}, Bytes(4096, 1));
}

TEST_CASE("first_divergence pinpoints the byte that differs") {
    VmImage a = VmImage::build(small_config(), 3);
    VmImage b = VmImage::build(small_config(), 3);
    CHECK_FALSE(first_divergence(a, b).has_value());

    Locator page{ResourceKind::ram_page, -1, 7};
    Bytes mod = b.read(page);
    mod[100] ^= 1;
    b.apply_write(page, mod);
    auto div = first_divergence(a, b);
    REQUIRE(div.has_value());
    CHECK(div->first == page);
    CHECK(div->second == 100);
}

TEST_CASE("identical seeds give identical images; different seeds do not") {
    VmImage a = VmImage::build(small_config(), 5);
    VmImage b = VmImage::build(small_config(), 5);
    VmImage c = VmImage::build(small_config(), 6);
    CHECK_FALSE(first_divergence(a, b).has_value());
    CHECK(first_divergence(a, c).has_value());
}

TEST_CASE("a shared-seed disk carries the same bytes in two different VMs") {
    VmConfig cfg = small_config();
    cfg.disks[0].shared_seed = 1234;
    VmConfig other = cfg;
    other.vm_name = Name::parse("/parc/vm9");
    VmImage a = VmImage::build(cfg, 10);
    VmImage b = VmImage::build(other, 20);
    Locator block{ResourceKind::disk_block, 0, 17};
    CHECK(a.read(block) == b.read(block));
    // per-VM state still differs
    CHECK(a.read({ResourceKind::ram_page, -1, 0}) != b.read({ResourceKind::ram_page, -1, 0}));
}

TEST_CASE("config json round-trips") {
    VmConfig cfg = paper_config();
    VmConfig back = VmConfig::from_json(cfg.to_json());
    CHECK(back.vm_name == cfg.vm_name);
    CHECK(back.ram_bytes == cfg.ram_bytes);
    CHECK(back.disks[0].capacity_bytes == cfg.disks[0].capacity_bytes);
    CHECK(back.disks[0].fill_ratio == cfg.disks[0].fill_ratio);
}
