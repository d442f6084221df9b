#pragma once

#include "ccnmig/sim.hpp"

namespace ccnmig {

struct FetchParams {
    size_t window = 8;
    Micros rto = 4000;  // fixed; default 4x one-way link latency
    int max_retries = 3;
};

struct FetchMetrics {
    uint64_t interests_sent = 0;
    uint64_t retransmissions = 0;
    uint64_t duplicates_discarded = 0;
    uint64_t objects_received = 0;
    uint64_t bytes_received = 0;

    void accumulate(const FetchMetrics& o);
};

enum class SessionState { active, closing, closed, failed };

/// Reliable Interest-driven fetch: windowed pipelining, Interest
/// retransmission on timeout, duplicate-response suppression. Each address
/// resolves at most once; exceeding max_retries on any address fails the
/// session (partial results remain readable).
class FetchSession {
public:
    FetchSession(Simulator& sim, Network& net, NodeId node, FetchParams params)
        : sim_(sim), net_(net), node_(node), params_(params) {}

    using CompleteFn = std::function<void(bool ok)>;
    void start(std::vector<NamedAddress> addresses, CompleteFn on_complete);

    SessionState state() const { return state_; }
    const FetchMetrics& metrics() const { return metrics_; }

    /// Resolved objects, in address order; nullopt for failed addresses.
    const std::vector<std::optional<ContentObject>>& results() const { return results_; }
    std::vector<NamedAddress> missing() const;

private:
    struct Slot {
        NamedAddress addr;
        int attempts = 0;
        bool done = false;
        bool exhausted = false;
    };

    void pump();
    void send(size_t i);
    void on_response(size_t i, const ContentObject& obj);
    void on_timeout(size_t i, int attempt);
    void finish();

    Simulator& sim_;
    Network& net_;
    NodeId node_;
    FetchParams params_;
    std::vector<Slot> slots_;
    std::vector<std::optional<ContentObject>> results_;
    size_t next_ = 0;
    size_t inflight_ = 0;
    size_t resolved_ = 0;
    bool any_failed_ = false;
    SessionState state_ = SessionState::active;
    FetchMetrics metrics_;
    CompleteFn on_complete_;
};

/// Requester half of the checkpoint close handshake:
///   Interest ver=j/close -> ACK, Interest ver=j/close-ack -> ACK.
/// The requester enters `closing` when it sends the first close Interest and
/// `closed` after the final ACK. Lost messages retransmit like any Interest.
class CloseRequester {
public:
    CloseRequester(Simulator& sim, Network& net, NodeId node, FetchParams params)
        : sim_(sim), net_(net), node_(node), params_(params) {}

    void start(const Name& checkpoint_prefix, std::function<void(bool closed)> done);

    SessionState state() const { return state_; }
    FetchMetrics metrics() const;

private:
    Simulator& sim_;
    Network& net_;
    NodeId node_;
    FetchParams params_;
    SessionState state_ = SessionState::active;
    std::shared_ptr<FetchSession> close_fetch_, ack_fetch_;
};

/// ACK payload used by close-path responders: 1 byte 0x01, named after the
/// Interest.
ContentObject make_ack(const Name& name);

}  // namespace ccnmig
