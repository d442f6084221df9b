#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccnmig/fib.hpp"
#include "ccnmig/message.hpp"

namespace ccnmig {

using Micros = uint64_t;  // virtual time
using NodeId = uint32_t;

/// Deterministic discrete-event loop. Events at equal times fire in
/// scheduling order.
class Simulator {
public:
    Micros now() const { return now_; }

    void at(Micros t, std::function<void()> fn);
    void after(Micros delay, std::function<void()> fn) { at(now_ + delay, std::move(fn)); }

    /// Runs until the queue drains (or past `until`). Returns events fired.
    size_t run(std::optional<Micros> until = std::nullopt);

private:
    struct Event {
        Micros t;
        uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Event& o) const {
            return t != o.t ? t > o.t : seq > o.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    Micros now_ = 0;
    uint64_t seq_ = 0;
};

/// Producer hook: return an object to answer the Interest, or nullopt to
/// leave it unanswered (consumer retries).
using ProducerFn = std::function<std::optional<ContentObject>(const Interest&)>;
using ResponseFn = std::function<void(const ContentObject&)>;

struct PhaseStats {
    uint64_t interests_sent = 0;
    uint64_t objects_sent = 0;
    uint64_t bytes_sent = 0;  // includes transmissions that were then lost
    uint64_t packets_lost = 0;
};

class Network;

class Node {
public:
    NodeId id() const { return id_; }
    const std::string& label() const { return label_; }
    FibTable& fib() { return fib_; }

    void register_producer(const Name& prefix, ProducerFn fn);
    void unregister_producer(const Name& prefix);

private:
    friend class Network;
    NodeId id_ = 0;
    std::string label_;
    FibTable fib_;
    std::vector<std::pair<Name, ProducerFn>> producers_;
    // prefix -> advertising node, for the distributed routing model
    std::map<Name, NodeId> advertisers_;
};

/// Point-to-point simulated network: nodes joined by latency/loss links,
/// hop-by-hop Interest forwarding via each node's FIB, responses retracing
/// the Interest's path. No PIT aggregation and no on-path caching.
class Network {
public:
    explicit Network(Simulator& sim, uint64_t seed) : sim_(sim), seed_(seed) {}

    NodeId add_node(const std::string& label);
    /// Returns the link id. Loss is an independent Bernoulli per traversal,
    /// deterministic for the network seed.
    size_t add_link(NodeId a, NodeId b, Micros latency, double loss);

    Node& node(NodeId id) { return *nodes_[id]; }
    size_t node_count() const { return nodes_.size(); }
    std::optional<NodeId> find_node(const std::string& label) const;

    /// Overrides random loss on a link with an explicit per-traversal
    /// schedule (consumed front to back; falls back to random when empty).
    void script_loss(size_t link, std::deque<bool> schedule);

    /// Sends an Interest from `from`. The callback fires once per delivered
    /// response for this transmission token. Returns the token.
    uint64_t express_interest(NodeId from, const Interest& interest, ResponseFn on_response);
    void cancel(uint64_t token) { pending_.erase(token); }

    // routing
    /// Installs shortest-path routes for `prefix` toward `target` in every
    /// FIB, immediately (External model setup / SDN controller action).
    void static_route(const Name& prefix, NodeId target);
    /// SDN atomic cut-over; throws std::invalid_argument for a prefix with
    /// no installed routes.
    void sdn_repoint(const Name& prefix, NodeId new_node);
    /// Distributed model: floods the announcement outward, FIBs updating
    /// after one link latency per hop. Dual advertisements resolve to the
    /// lowest advertising node id.
    void advertise(NodeId node, const Name& prefix);
    void withdraw(NodeId node, const Name& prefix);

    void set_phase(const std::string& phase) { phase_ = phase; }
    const std::map<std::string, PhaseStats>& stats() const { return stats_; }
    PhaseStats total_stats() const;

private:
    struct Link {
        NodeId a, b;
        Micros latency;
        double loss;
        std::mt19937_64 rng;
        std::deque<bool> scripted;
        bool roll_loss();
    };

    struct Trace {
        uint64_t token;
        NodeId origin;
        std::vector<NodeId> path;  // nodes traversed, origin first
    };

    void deliver_interest(NodeId at, Interest interest, Trace trace);
    void deliver_response(ContentObject obj, Trace trace, size_t path_pos);
    void send_over(size_t link, NodeId to, bool is_interest, size_t bytes,
                   std::function<void()> on_arrival);
    std::optional<size_t> link_between(NodeId a, NodeId b) const;

    Simulator& sim_;
    uint64_t seed_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<Link> links_;
    std::vector<std::vector<size_t>> adjacency_;  // node -> link ids
    std::unordered_map<uint64_t, ResponseFn> pending_;
    uint64_t next_token_ = 1;
    std::string phase_ = "setup";
    std::map<std::string, PhaseStats> stats_;
};

}  // namespace ccnmig
