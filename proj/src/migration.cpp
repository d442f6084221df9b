#include "ccnmig/migration.hpp"

#include <algorithm>
#include <cassert>

namespace ccnmig {

bool should_stop_push(const std::vector<uint64_t>& trace, const StopPolicy& policy) {
    if (trace.empty()) return false;
    uint64_t last = trace.back();
    if (last == 0) return true;
    if (trace.size() >= policy.max_rounds) return true;
    if (trace.size() >= 2) {
        uint64_t prev = trace[trace.size() - 2];
        if (static_cast<double>(last) > policy.alpha * static_cast<double>(prev)) return true;
    }
    return false;
}

ResourceClassifier ResourceClassifier::classify(const VmImage& vm, double hot_page_fraction,
                                                double lazy_block_fraction) {
    ResourceClassifier c;
    const VmConfig& cfg = vm.config();
    uint64_t hot_pages = static_cast<uint64_t>(
        std::ceil(hot_page_fraction * static_cast<double>(cfg.ram_pages())));
    std::map<int32_t, uint64_t> lazy_from;
    for (int32_t d = 0; d < static_cast<int32_t>(cfg.disks.size()); d++) {
        uint64_t n = cfg.disks[d].populated_blocks();
        uint64_t lazy = static_cast<uint64_t>(lazy_block_fraction * static_cast<double>(n));
        lazy_from[d] = n - lazy;
    }
    for (const Locator& loc : vm.all_locators()) {
        if (loc.kind == ResourceKind::cpu_regfile || loc.kind == ResourceKind::cpu_tlb) {
            c.hot.insert(loc);
        } else if (loc.kind == ResourceKind::ram_page && loc.index < hot_pages) {
            c.hot.insert(loc);
        } else if (loc.kind == ResourceKind::disk_block && loc.index >= lazy_from[loc.disk]) {
            c.lazy.insert(loc);
        } else {
            c.cold.insert(loc);
        }
    }
    return c;
}

Name MigrationParams::transfer_base() const {
    return routing == RoutingModel::external ? location_base() : vm_name;
}

namespace {

std::optional<uint64_t> parse_kv_segment(const std::string& seg, const char* key) {
    std::string prefix = std::string(key) + "=";
    if (seg.rfind(prefix, 0) != 0) return std::nullopt;
    try {
        return std::stoull(seg.substr(prefix.size()));
    } catch (...) {
        return std::nullopt;
    }
}

// Inverse of resource_subpath over a segment span.
std::optional<Locator> parse_subpath(const VmConfig& cfg, const std::vector<std::string>& segs,
                                     size_t from) {
    size_t n = segs.size() - from;
    auto seg = [&](size_t i) -> const std::string& { return segs[from + i]; };
    try {
        if (n == 1 && seg(0) == "config") return Locator{ResourceKind::config, -1, 0};
        if (n == 3 && seg(0) == "cpu") {
            uint64_t i = std::stoull(seg(1));
            if (seg(2) == "regfile") return Locator{ResourceKind::cpu_regfile, -1, i};
            if (seg(2) == "tlb") return Locator{ResourceKind::cpu_tlb, -1, i};
        }
        if (n == 3 && seg(0) == "ram" && seg(1) == "page")
            return Locator{ResourceKind::ram_page, -1, std::stoull(seg(2))};
        if (n == 2 && seg(0) == "net") {
            for (uint64_t i = 0; i < cfg.net_interfaces.size(); i++)
                if (cfg.net_interfaces[i] == seg(1)) return Locator{ResourceKind::net, -1, i};
        }
        if (n >= 3 && seg(0) == "disk") {
            int32_t d = -1;
            for (int32_t i = 0; i < static_cast<int32_t>(cfg.disks.size()); i++)
                if (cfg.disks[i].disk_name == seg(1)) d = i;
            if (d < 0) return std::nullopt;
            if (n == 3 && seg(2) == "config") return Locator{ResourceKind::config, d, 0};
            if (n == 4 && seg(2) == "vhd") {
                if (seg(3) == "header") return Locator{ResourceKind::vhd_struct, d, vhd_header};
                if (seg(3) == "bat") return Locator{ResourceKind::vhd_struct, d, vhd_bat};
                if (seg(3) == "footer") return Locator{ResourceKind::vhd_struct, d, vhd_footer};
            }
            if (n == 4 && seg(2) == "block")
                return Locator{ResourceKind::disk_block, d, std::stoull(seg(3))};
        }
    } catch (...) {
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

SourceAgent::SourceAgent(Simulator& sim, Network& net, NodeId node, VmImage vm,
                         MigrationParams params)
    : sim_(sim), net_(net), node_(node), vm_(std::move(vm)), params_(std::move(params)) {
    classifier_ = ResourceClassifier::classify(vm_, params_.hot_page_fraction,
                                               params_.lazy_block_fraction);
    workload_model_.hot_set = classifier_.hot;
}

Name SourceAgent::base_for(Phase phase) const {
    return phase == Phase::pull ? params_.location_base() : params_.transfer_base();
}

uint64_t SourceAgent::selection_bytes(const std::set<Locator>& sel) const {
    uint64_t total = 0;
    for (const Locator& loc : sel) total += vm_.resource_size(loc);
    return total;
}

void SourceAgent::start() {
    auto handler = [this](const Interest& i) { return serve(i); };
    net_.node(node_).register_producer(params_.transfer_base(), handler);
    if (params_.location_base() != params_.transfer_base())
        net_.node(node_).register_producer(params_.location_base(), handler);
    publish_checkpoint(0, Phase::push, classifier_.cold);
}

void SourceAgent::rollback() {
    vm_.unfreeze();
    for (const auto& [v, _] : published_)
        store_.release(checkpoint_owner(vm_.config().vm_name, v));
    published_.clear();
    frozen_snapshot_.reset();
    freeze_time_.reset();
}

void SourceAgent::publish_checkpoint(uint64_t version, Phase phase,
                                     const std::set<Locator>& selection) {
    Snapshot snap = vm_.snapshot(version);
    BuildOptions opts;
    opts.vm_prefix = base_for(phase);
    opts.version = version;
    opts.phase = phase;
    opts.chunk_payload_limit = params_.chunk_payload_limit;
    if (params_.naming == NamingMode::weak && phase == Phase::push) {
        opts.strong_for = [](ResourceKind kind, int32_t) {
            return kind != ResourceKind::ram_page && kind != ResourceKind::disk_block;
        };
    }
    if (params_.objectstore_prefix) {
        const VmConfig& cfg = vm_.config();
        opts.prefix_override = [this, &cfg](ResourceKind kind,
                                            int32_t disk) -> std::optional<Name> {
            if (kind == ResourceKind::disk_block && disk >= 0 &&
                cfg.disks[disk].shared_seed)
                return params_.objectstore_prefix;
            return std::nullopt;
        };
    }
    BuiltManifest built = build_manifest(snap, vm_.config(), selection, store_, opts);
    transferred_.insert(selection.begin(), selection.end());
    if (phase == Phase::push) dirty_trace_.push_back(selection_bytes(selection));
    history_.push_back(PushRound{version, phase, selection_bytes(selection),
                                 static_cast<uint64_t>(built.manifest.all_entries().size()),
                                 sim_.now(), std::nullopt});
    published_.emplace(version, std::move(built));
    snapshots_.emplace(version, std::move(snap));
    version_ = version;
    phase_ = phase;
    if (on_published) on_published(version, phase);
}

std::optional<ContentObject> SourceAgent::serve(const Interest& interest) {
    if (interest.address.hash_restr) {
        auto obj = store_.get_by_hash(*interest.address.hash_restr);
        return obj;
    }
    const Name& name = interest.address.name;
    for (const Name& base : {params_.transfer_base(), params_.location_base()}) {
        if (!base.is_prefix_of(name) || name.size() <= base.size()) continue;
        std::vector<std::string> rest(name.segments().begin() + base.size(),
                                      name.segments().end());
        if (rest[0] == "checkpoint") return serve_checkpoint(Name{rest}, interest);
        if (rest[0] == "probe") {
            // identify the answering node so handover is observable
            ContentObject o;
            o.name = name;
            o.payload = to_bytes(net_.node(node_).label());
            return o;
        }
    }
    return std::nullopt;
}

std::optional<ContentObject> SourceAgent::serve_checkpoint(const Name& rest,
                                                           const Interest& interest) {
    // rest = checkpoint/ver=j/...
    if (rest.size() < 3) return std::nullopt;
    auto ver = parse_kv_segment(rest.at(1), "ver");
    if (!ver) return std::nullopt;
    auto pub = published_.find(*ver);
    if (pub == published_.end()) return std::nullopt;  // not built yet; poll retries
    const std::string& what = rest.at(2);

    if (what == "manifest") {
        uint32_t k = 0;
        if (rest.size() >= 4) {
            auto chunk = parse_kv_segment(rest.at(3), "chunk");
            if (!chunk) return std::nullopt;
            k = static_cast<uint32_t>(*chunk);
        }
        if (k >= pub->second.chunks.size()) return std::nullopt;
        if (rest.size() == 3) {
            // bare .../manifest poll: answer with the root chunk under the
            // polled name
            ContentObject root = pub->second.chunks[0];
            root.name = interest.address.name;
            return root;
        }
        return pub->second.chunks[k];
    }
    if (what == "close") {
        close_seen_.insert(*ver);
        return make_ack(interest.address.name);
    }
    if (what == "close-ack") {
        if (!close_seen_.contains(*ver)) return std::nullopt;
        if (!closed_.contains(*ver)) {
            closed_.insert(*ver);
            on_version_closed(*ver);
        }
        return make_ack(interest.address.name);
    }
    // weak enumerated name: serve current bytes from the (live or frozen)
    // image; dirtied elements are simply resent in a later round
    auto loc = parse_subpath(vm_.config(), rest.segments(), 2);
    if (!loc) return std::nullopt;
    auto bytes = vm_.try_read(*loc);
    if (!bytes) return std::nullopt;
    ContentObject obj;
    obj.name = interest.address.name;
    obj.payload = std::move(*bytes);
    return obj;
}

void SourceAgent::on_version_closed(uint64_t version) {
    for (auto& r : history_)
        if (r.version == version) r.closed_at = sim_.now();
    Phase closed_phase = published_.at(version).manifest.phase;

    if (closed_phase == Phase::push) {
        std::set<Locator> dirty = vm_.dirty_set(version);
        uint64_t dirty_bytes = selection_bytes(dirty);
        std::vector<uint64_t> trace = dirty_trace_;
        trace.push_back(dirty_bytes);
        if (should_stop_push(trace, params_.stop)) {
            vm_.freeze();
            freeze_time_ = sim_.now();
            std::set<Locator> sel = dirty;
            sel.insert(classifier_.hot.begin(), classifier_.hot.end());
            // the machine config rides along with the critical state
            sel.insert(Locator{ResourceKind::config, -1, 0});
            publish_checkpoint(version + 1, Phase::stop_and_copy, sel);
            frozen_snapshot_ = snapshots_.at(version + 1);
        } else {
            publish_checkpoint(version + 1, Phase::push, dirty);
        }
    } else if (closed_phase == Phase::stop_and_copy) {
        handover_time_ = sim_.now();
        if (on_stop_and_copy_closed) on_stop_and_copy_closed();
        std::set<Locator> remaining;
        for (const Locator& loc : vm_.all_locators())
            if (!transferred_.contains(loc)) remaining.insert(loc);
        publish_checkpoint(version + 1, Phase::pull, remaining);
    } else {
        released_all_ = true;
    }
    store_.release(checkpoint_owner(vm_.config().vm_name, version));
}

DestinationAgent::DestinationAgent(Simulator& sim, Network& net, NodeId node,
                                   MigrationParams params, ContentStore* shared_store)
    : sim_(sim), net_(net), node_(node), params_(std::move(params)),
      store_(shared_store ? shared_store : &own_store_) {}

Name DestinationAgent::base_for_version() const {
    return pull_mode_ ? params_.location_base() : params_.transfer_base();
}

DestPhaseMetrics& DestinationAgent::phase_metrics() {
    return metrics_[phase_name(current_phase_)];
}

void DestinationAgent::start(std::function<void(bool)> done) {
    done_ = std::move(done);
    poll(0, 0);
}

void DestinationAgent::fail(const std::string& why) {
    failure_ = why;
    done_(false);
}

void DestinationAgent::poll(uint64_t version, uint32_t attempts) {
    if (attempts >= params_.poll_max) {
        fail("poll exhausted for version " + std::to_string(version));
        return;
    }
    Name manifest_name = checkpoint_prefix(base_for_version(), version).append("manifest");
    FetchParams p = params_.fetch;
    p.max_retries = 0;  // polling is its own retry loop
    auto session = std::make_shared<FetchSession>(sim_, net_, node_, p);
    sessions_.push_back(session);
    session->start({NamedAddress{manifest_name, {}, {}}},
                   [this, version, attempts, session](bool ok) {
                       if (!ok) {
                           sim_.after(params_.poll_interval,
                                      [this, version, attempts] { poll(version, attempts + 1); });
                           return;
                       }
                       fetch_chunks(version, *session->results()[0]);
                   });
}

void DestinationAgent::fetch_chunks(uint64_t version, ContentObject root) {
    ManifestMeta meta;
    try {
        meta = parse_manifest_meta(root.payload);
    } catch (const ManifestError& e) {
        fail(std::string("bad root manifest chunk: ") + e.what());
        return;
    }
    current_phase_ = meta.phase;
    versions_seen_.emplace_back(version, meta.phase);
    phase_metrics().manifests_fetched += meta.chunk_count;

    Name mprefix = checkpoint_prefix(base_for_version(), version).append("manifest");
    root.name = mprefix.append("chunk=0");

    if (meta.chunk_count <= 1) {
        try {
            process_manifest(version, parse_manifest({root}));
        } catch (const ManifestError& e) {
            fail(std::string("manifest parse: ") + e.what());
        }
        return;
    }
    std::vector<NamedAddress> addrs;
    for (uint32_t k = 1; k < meta.chunk_count; k++)
        addrs.push_back(NamedAddress{mprefix.append("chunk=" + std::to_string(k)), {}, {}});
    auto session = std::make_shared<FetchSession>(sim_, net_, node_, params_.fetch);
    sessions_.push_back(session);
    session->start(addrs, [this, version, root = std::move(root), session](bool ok) {
        if (!ok) {
            fail("manifest chunk fetch failed");
            return;
        }
        phase_metrics().fetch.accumulate(session->metrics());
        std::vector<ContentObject> chunks{root};
        for (const auto& r : session->results()) chunks.push_back(*r);
        try {
            process_manifest(version, parse_manifest(chunks));
        } catch (const ManifestError& e) {
            fail(std::string("manifest parse: ") + e.what());
        }
    });
}

void DestinationAgent::process_manifest(uint64_t version, Manifest m) {
    auto entries = m.all_entries();
    std::vector<std::pair<const ManifestEntry*, ContentObject>> local;
    std::vector<const ManifestEntry*> to_fetch;
    for (const ManifestEntry* e : entries) {
        if (e->strong && store_->contains(e->hash)) {
            local.emplace_back(e, *store_->get_by_hash(e->hash));
            phase_metrics().dedup_skipped++;
        } else {
            to_fetch.push_back(e);
        }
    }
    std::vector<NamedAddress> addrs;
    addrs.reserve(to_fetch.size());
    for (const ManifestEntry* e : to_fetch) addrs.push_back(entry_fetch_address(*e));

    auto manifest = std::make_shared<Manifest>(std::move(m));
    auto session = std::make_shared<FetchSession>(sim_, net_, node_, params_.fetch);
    sessions_.push_back(session);
    session->start(addrs, [this, version, manifest, session, local = std::move(local),
                           to_fetch = std::move(to_fetch)](bool ok) {
        phase_metrics().fetch.accumulate(session->metrics());
        if (!ok) {
            fail("entry fetch failed (" + std::to_string(session->missing().size()) +
                 " addresses unresolved)");
            return;
        }
        std::vector<std::pair<const ManifestEntry*, ContentObject>> fetched = local;
        for (size_t i = 0; i < to_fetch.size(); i++)
            fetched.emplace_back(to_fetch[i], *session->results()[i]);
        apply_and_close(version, manifest->phase, *manifest, std::move(fetched));
    });
}

void DestinationAgent::apply_and_close(
    uint64_t version, Phase phase, const Manifest& m,
    std::vector<std::pair<const ManifestEntry*, ContentObject>> fetched) {
    if (!image_) {
        // checkpoint 0 carries the VM config; allocate the blank image from it
        const ContentObject* config_obj = nullptr;
        for (const auto& [e, obj] : fetched)
            if (e->kind == ResourceKind::config && e->disk < 0) config_obj = &obj;
        if (!config_obj) {
            fail("first checkpoint carries no VM config");
            return;
        }
        try {
            image_ = VmImage::allocate(VmConfig::from_json(to_string(config_obj->payload)));
        } catch (const std::exception& e) {
            fail(std::string("bad VM config: ") + e.what());
            return;
        }
    }
    std::string owner = checkpoint_owner(params_.vm_name, version);
    try {
        for (const auto& [e, obj] : fetched) {
            if (e->strong) store_->put(obj, owner);
            apply_entry(*image_, *e, obj);
            phase_metrics().entries_applied++;
            phase_metrics().applied_bytes += obj.payload.size();
        }
    } catch (const std::exception& e) {
        fail(std::string("apply failed: ") + e.what());
        return;
    }
    // the full machine state is in place once stop-and-copy applies; the VM
    // starts here, concurrently with the close handshake
    if (phase == Phase::stop_and_copy) vm_start_time_ = sim_.now();
    close_version(version, phase);
}

void DestinationAgent::close_version(uint64_t version, Phase phase) {
    closer_ = std::make_shared<CloseRequester>(sim_, net_, node_, params_.fetch);
    closer_->start(checkpoint_prefix(base_for_version(), version),
                   [this, version, phase](bool ok) {
                       phase_metrics().fetch.accumulate(closer_->metrics());
                       if (!ok) {
                           fail("close handshake failed for version " + std::to_string(version));
                           return;
                       }
                       if (phase == Phase::push) {
                           poll(version + 1, 0);
                       } else if (phase == Phase::stop_and_copy) {
                           pull_mode_ = true;
                           poll(version + 1, 0);
                       } else {
                           done_(true);
                       }
                   });
}

}  // namespace ccnmig
