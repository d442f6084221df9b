#include "ccnmig/scenario.hpp"

#include <json.hpp>

namespace ccnmig {

using nlohmann::json;
using nlohmann::ordered_json;

void Scenario::validate() const {
    vm.validate();
    auto node_exists = [&](const std::string& n) {
        for (const auto& ns : nodes)
            if (ns.name == n) return true;
        return false;
    };
    if (!node_exists("source") || !node_exists("destination"))
        throw std::invalid_argument("scenario requires 'source' and 'destination' nodes");
    for (const auto& l : links) {
        if (!node_exists(l.a) || !node_exists(l.b))
            throw std::invalid_argument("link endpoint does not exist: " + l.a + "-" + l.b);
        if (l.loss < 0.0 || l.loss >= 1.0)
            throw std::invalid_argument("link loss must be in [0,1)");
    }
    if (probes.enabled && !node_exists("probe"))
        throw std::invalid_argument("probes enabled but no 'probe' node");
    if (use_objectstore && !node_exists("objectstore"))
        throw std::invalid_argument("use_objectstore but no 'objectstore' node");
    if (hot_page_fraction < 0 || hot_page_fraction > 1 || lazy_block_fraction < 0 ||
        lazy_block_fraction > 1)
        throw std::invalid_argument("fractions must be in [0,1]");
}

static NamingMode naming_from_string(const std::string& s) {
    if (s == "strong") return NamingMode::strong;
    if (s == "weak") return NamingMode::weak;
    throw std::invalid_argument("naming_mode must be strong|weak");
}

static RoutingModel routing_from_string(const std::string& s) {
    if (s == "external") return RoutingModel::external;
    if (s == "software_defined" || s == "sdn") return RoutingModel::software_defined;
    if (s == "distributed") return RoutingModel::distributed;
    throw std::invalid_argument("routing_model must be external|software_defined|distributed");
}

static const char* routing_to_string(RoutingModel m) {
    switch (m) {
        case RoutingModel::external: return "external";
        case RoutingModel::software_defined: return "software_defined";
        case RoutingModel::distributed: return "distributed";
    }
    return "?";
}

Scenario Scenario::from_json(const std::string& text) {
    json j = json::parse(text);
    Scenario s;
    s.seed = j.value("seed", uint64_t{1});
    for (const auto& nj : j.at("topology").at("nodes")) {
        NodeSpec ns;
        ns.name = nj.at("name").get<std::string>();
        if (nj.contains("prefix")) ns.prefix = Name::parse(nj["prefix"].get<std::string>());
        s.nodes.push_back(ns);
    }
    for (const auto& lj : j.at("topology").at("links")) {
        LinkSpec ls;
        ls.a = lj.at("a").get<std::string>();
        ls.b = lj.at("b").get<std::string>();
        ls.latency_us = lj.value("latency_us", uint64_t{1000});
        ls.loss = lj.value("loss", 0.0);
        s.links.push_back(ls);
    }
    s.vm = VmConfig::from_json(j.at("vm").dump());
    if (j.contains("workload")) {
        const auto& w = j["workload"];
        s.workload.hot_write_prob = w.value("hot_write_prob", 0.0);
        s.workload.cold_write_prob = w.value("cold_write_prob", 0.0);
        s.workload.writes_per_step = w.value("writes_per_step", 1u);
        s.workload.step_interval_us = w.value("step_interval_us", uint64_t{5000});
    }
    s.naming = naming_from_string(j.value("naming_mode", "strong"));
    s.routing = routing_from_string(j.value("routing_model", "external"));
    if (j.contains("stop_policy")) {
        s.stop.alpha = j["stop_policy"].value("alpha", 0.9);
        s.stop.max_rounds = j["stop_policy"].value("max_rounds", 10u);
    }
    if (j.contains("transport")) {
        const auto& t = j["transport"];
        s.fetch.window = t.value("window", size_t{8});
        s.fetch.rto = t.value("rto_us", uint64_t{4000});
        s.fetch.max_retries = t.value("max_retries", 3);
        s.poll_interval_us = t.value("poll_interval_us", uint64_t{20000});
        s.poll_max = t.value("poll_max", 200u);
    }
    if (j.contains("migration")) {
        const auto& m = j["migration"];
        s.hot_page_fraction = m.value("hot_page_fraction", 0.1);
        s.lazy_block_fraction = m.value("lazy_block_fraction", 0.0);
        s.chunk_payload_limit = m.value("chunk_payload_limit", size_t{60000});
    }
    if (j.contains("dedup")) {
        s.use_objectstore = j["dedup"].value("objectstore", false);
        s.second_vm = j["dedup"].value("second_vm", false);
    }
    if (j.contains("probes")) {
        s.probes.enabled = j["probes"].value("enabled", false);
        s.probes.interval_us = j["probes"].value("interval_us", uint64_t{2000});
    }
    s.validate();
    return s;
}

std::string Scenario::to_json() const {
    ordered_json j;
    j["seed"] = seed;
    j["topology"]["nodes"] = ordered_json::array();
    for (const auto& n : nodes) {
        ordered_json nj;
        nj["name"] = n.name;
        if (n.prefix) nj["prefix"] = n.prefix->to_text();
        j["topology"]["nodes"].push_back(nj);
    }
    j["topology"]["links"] = ordered_json::array();
    for (const auto& l : links)
        j["topology"]["links"].push_back(
            {{"a", l.a}, {"b", l.b}, {"latency_us", l.latency_us}, {"loss", l.loss}});
    j["vm"] = json::parse(vm.to_json());
    j["workload"] = {{"hot_write_prob", workload.hot_write_prob},
                     {"cold_write_prob", workload.cold_write_prob},
                     {"writes_per_step", workload.writes_per_step},
                     {"step_interval_us", workload.step_interval_us}};
    j["naming_mode"] = naming == NamingMode::strong ? "strong" : "weak";
    j["routing_model"] = routing_to_string(routing);
    j["stop_policy"] = {{"alpha", stop.alpha}, {"max_rounds", stop.max_rounds}};
    j["transport"] = {{"window", fetch.window},
                      {"rto_us", fetch.rto},
                      {"max_retries", fetch.max_retries},
                      {"poll_interval_us", poll_interval_us},
                      {"poll_max", poll_max}};
    j["migration"] = {{"hot_page_fraction", hot_page_fraction},
                      {"lazy_block_fraction", lazy_block_fraction},
                      {"chunk_payload_limit", chunk_payload_limit}};
    j["dedup"] = {{"objectstore", use_objectstore}, {"second_vm", second_vm}};
    j["probes"] = {{"enabled", probes.enabled}, {"interval_us", probes.interval_us}};
    return j.dump(2);
}

Scenario Scenario::small_default() {
    Scenario s;
    s.nodes = {{"source", Name::parse("/nyc/host7")},
               {"router", std::nullopt},
               {"destination", Name::parse("/sfo/host2")}};
    s.links = {{"source", "router", 1000, 0.0}, {"router", "destination", 1000, 0.0}};
    s.vm.vm_name = Name::parse("/parc/vm3");
    s.vm.cpu_n = 1;
    s.vm.ram_bytes = 4ull << 20;
    s.vm.page_size = 4096;
    DiskConfig d;
    d.disk_name = "hda";
    d.capacity_bytes = 16ull << 20;
    d.block_size = 4096;
    d.fill_ratio = 0.25;
    s.vm.disks.push_back(d);
    s.vm.net_interfaces = {"en0"};
    s.workload.hot_write_prob = 0.05;
    s.workload.cold_write_prob = 0.002;
    s.hot_page_fraction = 0.1;
    s.lazy_block_fraction = 0.1;
    s.fetch.window = 32;
    s.fetch.rto = 16000;
    return s;
}

EquivalenceResult verify_equivalence(const Snapshot& frozen_source, const VmImage& destination) {
    auto div = first_divergence(frozen_source, destination);
    if (!div) return {true, ""};
    return {false, locator_to_string(destination.config(), div->first) + " offset " +
                       std::to_string(div->second)};
}

std::string MetricsReport::to_json() const {
    ordered_json j;
    j["completed"] = completed;
    j["abort_cause"] = abort_cause;
    j["seed"] = seed;
    j["naming"] = naming;
    j["routing"] = routing;
    j["push_rounds"] = push_rounds;
    j["checkpoints"] = ordered_json::array();
    for (const auto& c : checkpoints) {
        ordered_json cj;
        cj["version"] = c.version;
        cj["phase"] = phase_name(c.phase);
        cj["selection_bytes"] = c.selection_bytes;
        cj["entries"] = c.entries;
        cj["published_at_us"] = c.published_at;
        if (c.closed_at) cj["closed_at_us"] = *c.closed_at;
        j["checkpoints"].push_back(cj);
    }
    auto opt = [](const std::optional<Micros>& v) {
        return v ? ordered_json(*v) : ordered_json(nullptr);
    };
    j["freeze_time_us"] = opt(freeze_time_us);
    j["vm_start_time_us"] = opt(vm_start_time_us);
    j["handover_time_us"] = opt(handover_time_us);
    j["downtime_us"] = opt(downtime_us);
    j["wire"] = ordered_json::object();
    for (const auto& [phase, s] : wire)
        j["wire"][phase] = {{"interests_sent", s.interests_sent},
                            {"objects_sent", s.objects_sent},
                            {"bytes_sent", s.bytes_sent},
                            {"packets_lost", s.packets_lost}};
    j["dest"] = ordered_json::object();
    for (const auto& [phase, m] : dest)
        j["dest"][phase] = {{"interests_sent", m.fetch.interests_sent},
                            {"retransmissions", m.fetch.retransmissions},
                            {"duplicates_discarded", m.fetch.duplicates_discarded},
                            {"objects_received", m.fetch.objects_received},
                            {"bytes_received", m.fetch.bytes_received},
                            {"manifests_fetched", m.manifests_fetched},
                            {"entries_applied", m.entries_applied},
                            {"applied_bytes", m.applied_bytes},
                            {"dedup_skipped", m.dedup_skipped}};
    j["dedup"] = {{"unique_objects", dest_store.unique_objects},
                  {"logical_references", dest_store.logical_references},
                  {"unique_bytes", dest_store.unique_bytes},
                  {"logical_bytes", dest_store.logical_bytes},
                  {"saved_bytes", dest_store.saved_bytes()},
                  {"logical_entries", logical_entries},
                  {"unique_objects_fetched", unique_objects_fetched}};
    j["probes"] = ordered_json::array();
    for (const auto& p : probes) {
        ordered_json pj;
        pj["sent_at_us"] = p.sent_at;
        pj["answered_at_us"] = p.answered_at ? ordered_json(*p.answered_at) : ordered_json(nullptr);
        pj["responder"] = p.responder;
        j["probes"].push_back(pj);
    }
    j["equivalence"] = {{"verdict", equivalence.pass ? "PASS" : "FAIL"},
                        {"divergence", equivalence.divergence}};
    if (second_vm_entries) {
        j["second_vm"] = {{"entries", *second_vm_entries},
                          {"dedup_skipped", *second_vm_dedup_skipped},
                          {"equivalence", second_vm_equivalence ? "PASS" : "FAIL"}};
    }
    return j.dump(2);
}

namespace {

struct Runtime {
    Simulator sim;
    std::unique_ptr<Network> net;
    std::map<std::string, NodeId> node_ids;
    bool done = false;
};

MigrationParams params_from(const Scenario& s, const Name& vm_name,
                            const Name& source_prefix, const Name& dest_prefix,
                            std::optional<Name> objectstore_prefix) {
    MigrationParams p;
    p.vm_name = vm_name;
    p.source_prefix = source_prefix;
    p.dest_prefix = dest_prefix;
    p.routing = s.routing;
    p.naming = s.naming;
    p.stop = s.stop;
    p.fetch = s.fetch;
    p.poll_interval = s.poll_interval_us;
    p.poll_max = s.poll_max;
    p.chunk_payload_limit = s.chunk_payload_limit;
    p.hot_page_fraction = s.hot_page_fraction;
    p.lazy_block_fraction = s.lazy_block_fraction;
    p.objectstore_prefix = std::move(objectstore_prefix);
    return p;
}

// One VM migration over an already-built network. Returns when the sim
// drains; outcome lands in `ok` / agents.
struct MigrationRun {
    std::unique_ptr<SourceAgent> source;
    std::unique_ptr<DestinationAgent> dest;
    bool finished = false;
    bool ok = false;
};

void wire_handover(SourceAgent& src, Network& net, const Scenario& s, const Name& vm_name,
                   NodeId src_node, NodeId dst_node) {
    src.on_stop_and_copy_closed = [&net, s, vm_name, src_node, dst_node] {
        if (s.routing == RoutingModel::software_defined) {
            net.sdn_repoint(vm_name, dst_node);
        } else if (s.routing == RoutingModel::distributed) {
            net.withdraw(src_node, vm_name);
            net.advertise(dst_node, vm_name);
        } else {
            return;  // external: the orchestrator's namespace, nothing to do
        }
        // the destination now owns the generic name; answer probes there
        net.node(dst_node).register_producer(
            vm_name, [&net, vm_name, dst_node](const Interest& i) -> std::optional<ContentObject> {
                const Name& n = i.address.name;
                if (n.size() > vm_name.size() && n.at(vm_name.size()) == "probe") {
                    ContentObject o;
                    o.name = n;
                    o.payload = to_bytes(net.node(dst_node).label());
                    return o;
                }
                return std::nullopt;
            });
    };
}

void start_migration(Runtime& rt, MigrationRun& run, const Scenario& s, const VmConfig& vm_cfg,
                     uint64_t vm_seed, ContentStore* shared_dest_store,
                     std::function<void(bool)> on_done) {
    Network& net = *rt.net;
    NodeId src_node = rt.node_ids.at("source");
    NodeId dst_node = rt.node_ids.at("destination");

    Name source_prefix, dest_prefix;
    std::optional<Name> objectstore_prefix;
    for (const auto& n : s.nodes) {
        if (n.name == "source") source_prefix = n.prefix.value_or(Name::parse("/src"));
        if (n.name == "destination") dest_prefix = n.prefix.value_or(Name::parse("/dst"));
        if (n.name == "objectstore" && n.prefix) objectstore_prefix = n.prefix;
    }
    if (!s.use_objectstore) objectstore_prefix.reset();

    MigrationParams params = params_from(s, vm_cfg.vm_name, source_prefix, dest_prefix,
                                         objectstore_prefix);
    VmImage image = VmImage::build(vm_cfg, vm_seed);
    run.source = std::make_unique<SourceAgent>(rt.sim, net, src_node, std::move(image), params);
    run.dest = std::make_unique<DestinationAgent>(rt.sim, net, dst_node, params,
                                                  shared_dest_store);
    wire_handover(*run.source, net, s, vm_cfg.vm_name, src_node, dst_node);
    run.source->on_published = [&net](uint64_t, Phase phase) { net.set_phase(phase_name(phase)); };

    // generic-name routing per model
    if (s.routing == RoutingModel::software_defined) {
        net.static_route(vm_cfg.vm_name, src_node);
    } else if (s.routing == RoutingModel::distributed) {
        net.advertise(src_node, vm_cfg.vm_name);
    }

    // synthetic dirty-page workload, gated on migration completion
    WorkloadModel wl = run.source->workload();
    wl.hot_write_prob = s.workload.hot_write_prob;
    wl.cold_write_prob = s.workload.cold_write_prob;
    wl.writes_per_step = s.workload.writes_per_step;
    run.source->set_workload(wl);
    auto wl_rng = std::make_shared<std::mt19937_64>(s.seed ^ 0x776f726bull);
    auto pump = std::make_shared<std::function<void()>>();
    SourceAgent* src_ptr = run.source.get();
    MigrationRun* run_ptr = &run;
    *pump = [&rt, run_ptr, src_ptr, wl_rng, pump, interval = s.workload.step_interval_us] {
        if (run_ptr->finished) return;
        if (!src_ptr->vm().frozen())
            workload_step(src_ptr->vm(), src_ptr->workload(), *wl_rng);
        rt.sim.after(interval, *pump);
    };
    rt.sim.after(s.workload.step_interval_us, *pump);

    net.set_phase("push");
    run.source->start();
    run.dest->start([run_ptr, on_done = std::move(on_done)](bool ok) {
        run_ptr->finished = true;
        run_ptr->ok = ok;
        on_done(ok);
    });
}

}  // namespace

MetricsReport run_scenario(const Scenario& scenario) {
    scenario.validate();
    Runtime rt;
    rt.net = std::make_unique<Network>(rt.sim, scenario.seed);
    Network& net = *rt.net;

    for (const auto& n : scenario.nodes) rt.node_ids[n.name] = net.add_node(n.name);
    for (const auto& l : scenario.links)
        net.add_link(rt.node_ids.at(l.a), rt.node_ids.at(l.b), l.latency_us, l.loss);

    // location-dependent prefixes are routable throughout
    for (const auto& n : scenario.nodes)
        if (n.prefix) net.static_route(*n.prefix, rt.node_ids.at(n.name));

    // optional read-only shared object store node
    ContentStore objectstore;
    if (scenario.use_objectstore) {
        VmImage seed_img = VmImage::build(scenario.vm, scenario.seed);
        for (const Locator& loc : seed_img.all_locators()) {
            if (loc.kind == ResourceKind::disk_block && loc.disk >= 0 &&
                scenario.vm.disks[loc.disk].shared_seed)
                objectstore.put(make_nameless(seed_img.read(loc)), "objectstore");
        }
        NodeId os_node = rt.node_ids.at("objectstore");
        for (const auto& n : scenario.nodes) {
            if (n.name == "objectstore" && n.prefix) {
                net.node(os_node).register_producer(
                    *n.prefix, [&objectstore](const Interest& i) -> std::optional<ContentObject> {
                        if (!i.address.hash_restr) return std::nullopt;
                        return objectstore.get_by_hash(*i.address.hash_restr);
                    });
            }
        }
    }

    MetricsReport report;
    report.seed = scenario.seed;
    report.naming = scenario.naming == NamingMode::strong ? "strong" : "weak";
    report.routing = scenario.routing == RoutingModel::external      ? "external"
                     : scenario.routing == RoutingModel::software_defined ? "software_defined"
                                                                          : "distributed";

    // probe stream for the generic name (routing handover observation)
    auto probe_records = std::make_shared<std::vector<ProbeRecord>>();
    if (scenario.probes.enabled) {
        NodeId probe_node = rt.node_ids.at("probe");
        Name probe_name = scenario.vm.vm_name.append("probe");
        auto pump = std::make_shared<std::function<void()>>();
        Runtime* rtp = &rt;
        *pump = [rtp, probe_node, probe_name, probe_records, pump,
                 interval = scenario.probes.interval_us] {
            if (rtp->done) return;
            size_t idx = probe_records->size();
            probe_records->push_back(ProbeRecord{rtp->sim.now(), std::nullopt, ""});
            rtp->net->express_interest(probe_node, Interest{NamedAddress{probe_name, {}, {}}},
                                       [rtp, probe_records, idx](const ContentObject& obj) {
                                           (*probe_records)[idx].answered_at = rtp->sim.now();
                                           (*probe_records)[idx].responder =
                                               to_string(obj.payload);
                                       });
            rtp->sim.after(interval, *pump);
        };
        rt.sim.after(scenario.probes.interval_us, *pump);
    }

    MigrationRun run;
    MigrationRun second;
    bool ok = false;
    bool second_ok = true;
    start_migration(rt, run, scenario, scenario.vm, scenario.seed, nullptr, [&](bool good) {
        ok = good;
        if (!scenario.second_vm || !good) {
            rt.done = true;
            return;
        }
        // co-hosted VM sharing the destination store; its read-only shared
        // disks carry the same bytes, everything else differs
        VmConfig vm2 = scenario.vm;
        vm2.vm_name = scenario.vm.vm_name.append("b");
        start_migration(rt, second, scenario, vm2, scenario.seed + 1, &run.dest->store(),
                        [&](bool good2) {
                            second_ok = good2;
                            rt.done = true;
                        });
    });
    rt.sim.run();

    report.completed = ok;
    if (!ok) {
        report.abort_cause = run.dest->failure();
        run.source->rollback();
    }
    report.checkpoints = run.source->history();
    for (const auto& c : report.checkpoints)
        if (c.phase == Phase::push) report.push_rounds++;
    report.freeze_time_us = run.source->freeze_time();
    report.vm_start_time_us = run.dest->vm_start_time();
    report.handover_time_us = run.source->handover_time();
    if (report.freeze_time_us && report.vm_start_time_us)
        report.downtime_us = *report.vm_start_time_us - *report.freeze_time_us;
    report.wire = net.stats();
    report.dest = run.dest->metrics();
    report.dest_store = run.dest->store().stats();
    for (const auto& [_, m] : report.dest) {
        report.logical_entries += m.entries_applied;
        report.unique_objects_fetched += m.fetch.objects_received;
    }
    report.probes = *probe_records;
    if (ok && run.source->frozen_snapshot() && run.dest->image()) {
        report.equivalence = verify_equivalence(*run.source->frozen_snapshot(),
                                                *run.dest->image());
    } else {
        report.equivalence = {false, ok ? "missing final state" : "aborted"};
    }
    if (scenario.second_vm && second.dest) {
        uint64_t entries = 0, skipped = 0;
        for (const auto& [_, m] : second.dest->metrics()) {
            entries += m.entries_applied;
            skipped += m.dedup_skipped;
        }
        report.second_vm_entries = entries;
        report.second_vm_dedup_skipped = skipped;
        report.second_vm_equivalence =
            second_ok && second.source->frozen_snapshot() && second.dest->image() &&
            verify_equivalence(*second.source->frozen_snapshot(), *second.dest->image()).pass;
        report.completed = report.completed && second_ok;
    }
    return report;
}

}  // namespace ccnmig
