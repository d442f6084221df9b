#pragma once

#include "ccnmig/manifest.hpp"
#include "ccnmig/transport.hpp"

namespace ccnmig {

enum class RoutingModel { external, software_defined, distributed };
enum class NamingMode { strong, weak };

struct StopPolicy {
    double alpha = 0.9;
    uint32_t max_rounds = 10;
};

/// Diminishing-returns cutoff over the per-round dirty-byte trace: stop when
/// the last round went clean, shrank too little (last > alpha * previous),
/// or the round cap is hit.
bool should_stop_push(const std::vector<uint64_t>& dirty_bytes_per_round,
                      const StopPolicy& policy);

/// Splits a VM's resources into the hot set (transferred at stop-and-copy),
/// the lazily pulled set, and the cold remainder (push phase rounds).
struct ResourceClassifier {
    std::set<Locator> hot;   // high-turnover RAM pages + CPU state
    std::set<Locator> lazy;  // deferred to the pull checkpoint
    std::set<Locator> cold;  // everything else; round-0 push selection

    static ResourceClassifier classify(const VmImage& vm, double hot_page_fraction,
                                       double lazy_block_fraction);
};

struct MigrationParams {
    Name vm_name;        // generic prefix, e.g. /parc/vm3
    Name source_prefix;  // location-dependent, e.g. /nyc/host7
    Name dest_prefix;
    RoutingModel routing = RoutingModel::external;
    NamingMode naming = NamingMode::strong;
    StopPolicy stop;
    FetchParams fetch;
    Micros poll_interval = 20000;
    uint32_t poll_max = 200;
    size_t chunk_payload_limit = 60000;  // leaves room for name + TLV framing under the u16 packet length
    double hot_page_fraction = 0.1;
    double lazy_block_fraction = 0.0;
    std::optional<Name> objectstore_prefix;  // route shared read-only disks here

    /// Checkpoint naming base before the stop-and-copy handover.
    Name transfer_base() const;
    /// Location-dependent base used for the pull phase.
    Name location_base() const { return source_prefix.append(vm_name); }
};

struct PushRound {
    uint64_t version = 0;
    Phase phase = Phase::push;
    uint64_t selection_bytes = 0;
    uint64_t entries = 0;
    Micros published_at = 0;
    std::optional<Micros> closed_at;
};

/// Source-side migration agent: builds and publishes checkpoints, serves
/// manifest/object/close Interests, advances the pre-copy state machine on
/// close-acks, and releases checkpoint resources after each close.
class SourceAgent {
public:
    SourceAgent(Simulator& sim, Network& net, NodeId node, VmImage vm, MigrationParams params);

    /// Builds checkpoint 0 and registers producers. The destination's polls
    /// go unanswered until this runs.
    void start();

    /// Abort path: discard migration state and resume the VM.
    void rollback();

    VmImage& vm() { return vm_; }
    ContentStore& store() { return store_; }
    const std::vector<PushRound>& history() const { return history_; }
    std::optional<Micros> freeze_time() const { return freeze_time_; }
    std::optional<Micros> handover_time() const { return handover_time_; }
    bool released_all() const { return released_all_; }
    uint64_t current_version() const { return version_; }
    Phase phase() const { return phase_; }
    const WorkloadModel& workload() const { return workload_model_; }
    void set_workload(WorkloadModel m) { workload_model_ = std::move(m); }
    const ResourceClassifier& classifier() const { return classifier_; }
    const Snapshot* frozen_snapshot() const {
        return frozen_snapshot_ ? &*frozen_snapshot_ : nullptr;
    }

    /// Invoked when the stop-and-copy close-ack lands (handover point);
    /// the harness wires the routing-model action here.
    std::function<void()> on_stop_and_copy_closed;
    /// Invoked after each checkpoint publish (metrics phase tagging).
    std::function<void(uint64_t version, Phase phase)> on_published;

private:
    std::optional<ContentObject> serve(const Interest& interest);
    std::optional<ContentObject> serve_checkpoint(const Name& rest, const Interest& interest);
    void publish_checkpoint(uint64_t version, Phase phase, const std::set<Locator>& selection);
    void on_version_closed(uint64_t version);
    uint64_t selection_bytes(const std::set<Locator>& sel) const;
    Name base_for(Phase phase) const;

    Simulator& sim_;
    Network& net_;
    NodeId node_;
    VmImage vm_;
    MigrationParams params_;
    ContentStore store_;
    ResourceClassifier classifier_;
    WorkloadModel workload_model_;

    uint64_t version_ = 0;
    Phase phase_ = Phase::push;
    std::vector<PushRound> history_;
    std::vector<uint64_t> dirty_trace_;  // selection bytes per push round
    std::set<Locator> transferred_;
    std::map<uint64_t, BuiltManifest> published_;
    std::map<uint64_t, Snapshot> snapshots_;
    std::set<uint64_t> close_seen_;
    std::set<uint64_t> closed_;
    std::optional<Micros> freeze_time_;
    std::optional<Micros> handover_time_;
    std::optional<Snapshot> frozen_snapshot_;
    bool released_all_ = false;
};

struct DestPhaseMetrics {
    FetchMetrics fetch;
    uint64_t manifests_fetched = 0;
    uint64_t entries_applied = 0;
    uint64_t applied_bytes = 0;
    uint64_t dedup_skipped = 0;  // entries satisfied from the local store
};

/// Destination-side agent: polls for checkpoint manifests starting at
/// version 0, fetches and applies entries (skipping content already in the
/// local store), closes each version, starts the VM on the stop-and-copy
/// checkpoint, then pulls the final checkpoint lazily.
class DestinationAgent {
public:
    /// `shared_store` lets co-hosted VMs dedup against each other; pass
    /// nullptr for a private store.
    DestinationAgent(Simulator& sim, Network& net, NodeId node, MigrationParams params,
                     ContentStore* shared_store = nullptr);

    void start(std::function<void(bool ok)> done);

    const VmImage* image() const { return image_ ? &*image_ : nullptr; }
    VmImage* image() { return image_ ? &*image_ : nullptr; }
    ContentStore& store() { return *store_; }
    std::optional<Micros> vm_start_time() const { return vm_start_time_; }
    const std::map<std::string, DestPhaseMetrics>& metrics() const { return metrics_; }
    const std::vector<std::pair<uint64_t, Phase>>& versions_seen() const { return versions_seen_; }
    const std::string& failure() const { return failure_; }

private:
    void poll(uint64_t version, uint32_t attempts);
    void fetch_chunks(uint64_t version, ContentObject root);
    void process_manifest(uint64_t version, Manifest m);
    void apply_and_close(uint64_t version, Phase phase, const Manifest& m,
                         std::vector<std::pair<const ManifestEntry*, ContentObject>> fetched);
    void close_version(uint64_t version, Phase phase);
    void fail(const std::string& why);
    Name base_for_version() const;
    DestPhaseMetrics& phase_metrics();

    Simulator& sim_;
    Network& net_;
    NodeId node_;
    MigrationParams params_;
    ContentStore own_store_;
    ContentStore* store_;
    std::optional<VmImage> image_;
    bool pull_mode_ = false;  // after the stop-and-copy checkpoint closed
    std::optional<Micros> vm_start_time_;
    std::map<std::string, DestPhaseMetrics> metrics_;
    std::vector<std::pair<uint64_t, Phase>> versions_seen_;
    std::vector<std::shared_ptr<FetchSession>> sessions_;
    std::shared_ptr<CloseRequester> closer_;
    std::function<void(bool)> done_;
    std::string failure_;
    Phase current_phase_ = Phase::push;
};

}  // namespace ccnmig
