#pragma once

#include "ccnmig/migration.hpp"

namespace ccnmig {

struct NodeSpec {
    std::string name;
    std::optional<Name> prefix;  // location-dependent routing prefix
};

struct LinkSpec {
    std::string a, b;
    Micros latency_us = 1000;
    double loss = 0.0;
};

struct WorkloadSpec {
    double hot_write_prob = 0.0;
    double cold_write_prob = 0.0;
    uint32_t writes_per_step = 1;
    Micros step_interval_us = 5000;
};

struct ProbeSpec {
    bool enabled = false;
    Micros interval_us = 2000;
};

/// A fully deterministic simulation input: topology, VM, workload, naming
/// and routing choices, transport parameters, dedup options.
struct Scenario {
    uint64_t seed = 1;
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    VmConfig vm;
    WorkloadSpec workload;
    NamingMode naming = NamingMode::strong;
    RoutingModel routing = RoutingModel::external;
    StopPolicy stop;
    FetchParams fetch;
    Micros poll_interval_us = 20000;
    uint32_t poll_max = 200;
    size_t chunk_payload_limit = 60000;  // leaves room for name + TLV framing under the u16 packet length
    double hot_page_fraction = 0.1;
    double lazy_block_fraction = 0.0;
    bool use_objectstore = false;
    bool second_vm = false;  // migrate a co-hosted VM after the first, sharing the store
    ProbeSpec probes;

    void validate() const;  // throws std::invalid_argument
    static Scenario from_json(const std::string& text);
    std::string to_json() const;

    /// Built-in desk-scale default: source - router - destination,
    /// 4 MiB RAM / 16 MiB disk VM.
    static Scenario small_default();
};

struct ProbeRecord {
    Micros sent_at = 0;
    std::optional<Micros> answered_at;
    std::string responder;  // node label, empty if unanswered
};

struct EquivalenceResult {
    bool pass = false;
    std::string divergence;  // empty when pass
};

/// Byte-compares the frozen source state against the destination image.
EquivalenceResult verify_equivalence(const Snapshot& frozen_source, const VmImage& destination);

struct MetricsReport {
    bool completed = false;
    std::string abort_cause;
    uint64_t seed = 0;
    std::string naming, routing;

    uint64_t push_rounds = 0;
    std::vector<PushRound> checkpoints;
    std::optional<Micros> freeze_time_us, vm_start_time_us, handover_time_us;
    std::optional<Micros> downtime_us;

    std::map<std::string, PhaseStats> wire;  // per phase
    std::map<std::string, DestPhaseMetrics> dest;
    DedupStats dest_store;
    uint64_t logical_entries = 0;
    uint64_t unique_objects_fetched = 0;

    std::vector<ProbeRecord> probes;
    EquivalenceResult equivalence;

    // second co-hosted VM, when the scenario asks for one
    std::optional<uint64_t> second_vm_entries;
    std::optional<uint64_t> second_vm_dedup_skipped;
    bool second_vm_equivalence = true;

    std::string to_json() const;  // stable key order
};

MetricsReport run_scenario(const Scenario& scenario);

}  // namespace ccnmig
