#include "ccnmig/sim.hpp"

#include <stdexcept>

namespace ccnmig {

void Simulator::at(Micros t, std::function<void()> fn) {
    if (t < now_) t = now_;
    queue_.push(Event{t, seq_++, std::move(fn)});
}

size_t Simulator::run(std::optional<Micros> until) {
    size_t fired = 0;
    while (!queue_.empty()) {
        if (until && queue_.top().t > *until) break;
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.t;
        ev.fn();
        fired++;
    }
    if (until && *until > now_) now_ = *until;
    return fired;
}

void Node::register_producer(const Name& prefix, ProducerFn fn) {
    unregister_producer(prefix);
    producers_.emplace_back(prefix, std::move(fn));
}

void Node::unregister_producer(const Name& prefix) {
    std::erase_if(producers_, [&](const auto& p) { return p.first == prefix; });
}

bool Network::Link::roll_loss() {
    if (!scripted.empty()) {
        bool lost = scripted.front();
        scripted.pop_front();
        return lost;
    }
    if (loss <= 0.0) return false;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < loss;
}

NodeId Network::add_node(const std::string& label) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    auto n = std::make_unique<Node>();
    n->id_ = id;
    n->label_ = label;
    nodes_.push_back(std::move(n));
    adjacency_.emplace_back();
    return id;
}

size_t Network::add_link(NodeId a, NodeId b, Micros latency, double loss) {
    size_t id = links_.size();
    links_.push_back(Link{a, b, latency, loss,
                          std::mt19937_64(seed_ ^ (0x6c696e6bull + id * 0x9e3779b9ull)), {}});
    adjacency_[a].push_back(id);
    adjacency_[b].push_back(id);
    return id;
}

std::optional<NodeId> Network::find_node(const std::string& label) const {
    for (const auto& n : nodes_)
        if (n->label_ == label) return n->id_;
    return std::nullopt;
}

void Network::script_loss(size_t link, std::deque<bool> schedule) {
    links_.at(link).scripted = std::move(schedule);
}

void Network::send_over(size_t link, NodeId to, bool is_interest, size_t bytes,
                        std::function<void()> on_arrival) {
    Link& l = links_[link];
    PhaseStats& st = stats_[phase_];
    (is_interest ? st.interests_sent : st.objects_sent)++;
    st.bytes_sent += bytes;
    if (l.roll_loss()) {
        st.packets_lost++;
        return;
    }
    sim_.after(l.latency, std::move(on_arrival));
}

uint64_t Network::express_interest(NodeId from, const Interest& interest, ResponseFn on_response) {
    uint64_t token = next_token_++;
    pending_[token] = std::move(on_response);
    Trace trace{token, from, {from}};
    sim_.after(0, [this, from, interest, trace] { deliver_interest(from, interest, trace); });
    return token;
}

void Network::deliver_interest(NodeId at, Interest interest, Trace trace) {
    Node& n = *nodes_[at];
    // producer check first; longest registered prefix wins
    const std::pair<Name, ProducerFn>* best = nullptr;
    for (const auto& p : n.producers_) {
        if (p.first.is_prefix_of(interest.address.name) &&
            (!best || p.first.size() > best->first.size()))
            best = &p;
    }
    if (best) {
        auto obj = best->second(interest);
        if (obj) deliver_response(std::move(*obj), trace, trace.path.size() - 1);
        return;  // matched producer with no content: unanswered Interest
    }
    auto face = n.fib_.lookup(interest.address.name);
    if (!face) return;  // no route
    Link& l = links_.at(*face);
    NodeId next = l.a == at ? l.b : l.a;
    for (NodeId seen : trace.path)
        if (seen == next) return;  // loop
    size_t bytes = encode_interest(interest).size();
    Trace next_trace = trace;
    next_trace.path.push_back(next);
    send_over(*face, next, true, bytes, [this, next, interest, next_trace] {
        deliver_interest(next, interest, next_trace);
    });
}

void Network::deliver_response(ContentObject obj, Trace trace, size_t path_pos) {
    if (path_pos == 0) {
        auto it = pending_.find(trace.token);
        if (it == pending_.end()) return;
        ResponseFn fn = it->second;
        pending_.erase(it);
        fn(obj);
        return;
    }
    NodeId at = trace.path[path_pos];
    NodeId prev = trace.path[path_pos - 1];
    auto link = link_between(at, prev);
    if (!link) return;
    size_t bytes = encoded_size(obj);
    send_over(*link, prev, false, bytes, [this, obj = std::move(obj), trace, path_pos]() mutable {
        deliver_response(std::move(obj), trace, path_pos - 1);
    });
}

std::optional<size_t> Network::link_between(NodeId a, NodeId b) const {
    for (size_t id : adjacency_[a]) {
        const Link& l = links_[id];
        if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return id;
    }
    return std::nullopt;
}

namespace {

struct BfsResult {
    std::vector<int64_t> parent_link;  // toward the BFS root, -1 if unreached
    std::vector<Micros> delay;         // cumulative latency from the root
};

}  // namespace

// BFS tree rooted at `root`; parent_link points each node toward the root.
static BfsResult bfs_tree(const std::vector<std::vector<size_t>>& adjacency,
                          const std::vector<std::tuple<NodeId, NodeId, Micros>>& links,
                          NodeId root) {
    BfsResult r;
    r.parent_link.assign(adjacency.size(), -1);
    r.delay.assign(adjacency.size(), 0);
    std::vector<bool> seen(adjacency.size(), false);
    std::deque<NodeId> q{root};
    seen[root] = true;
    while (!q.empty()) {
        NodeId at = q.front();
        q.pop_front();
        for (size_t lid : adjacency[at]) {
            auto [a, b, lat] = links[lid];
            NodeId peer = a == at ? b : a;
            if (seen[peer]) continue;
            seen[peer] = true;
            r.parent_link[peer] = static_cast<int64_t>(lid);
            r.delay[peer] = r.delay[at] + lat;
            q.push_back(peer);
        }
    }
    return r;
}

void Network::static_route(const Name& prefix, NodeId target) {
    std::vector<std::tuple<NodeId, NodeId, Micros>> lt;
    for (const Link& l : links_) lt.emplace_back(l.a, l.b, l.latency);
    BfsResult r = bfs_tree(adjacency_, lt, target);
    for (NodeId n = 0; n < nodes_.size(); n++) {
        if (n == target) {
            nodes_[n]->fib_.remove(prefix);
            continue;
        }
        if (r.parent_link[n] >= 0)
            nodes_[n]->fib_.set(prefix, static_cast<FaceId>(r.parent_link[n]));
    }
}

void Network::sdn_repoint(const Name& prefix, NodeId new_node) {
    bool known = false;
    for (const auto& n : nodes_)
        if (n->fib_.entries().contains(prefix)) known = true;
    if (!known) throw std::invalid_argument("sdn_repoint: unknown prefix " + prefix.to_text());
    static_route(prefix, new_node);
}

void Network::advertise(NodeId node, const Name& prefix) {
    std::vector<std::tuple<NodeId, NodeId, Micros>> lt;
    for (const Link& l : links_) lt.emplace_back(l.a, l.b, l.latency);
    BfsResult r = bfs_tree(adjacency_, lt, node);
    nodes_[node]->advertisers_[prefix] = node;
    for (NodeId n = 0; n < nodes_.size(); n++) {
        if (n == node || r.parent_link[n] < 0) continue;
        FaceId face = static_cast<FaceId>(r.parent_link[n]);
        Micros delay = r.delay[n];
        sim_.after(delay, [this, n, prefix, face, node] {
            Node& m = *nodes_[n];
            auto it = m.advertisers_.find(prefix);
            // dual advertisement: lowest node id wins until withdrawn
            if (it != m.advertisers_.end() && it->second < node) return;
            m.advertisers_[prefix] = node;
            m.fib_.set(prefix, face);
        });
    }
}

void Network::withdraw(NodeId node, const Name& prefix) {
    std::vector<std::tuple<NodeId, NodeId, Micros>> lt;
    for (const Link& l : links_) lt.emplace_back(l.a, l.b, l.latency);
    BfsResult r = bfs_tree(adjacency_, lt, node);
    nodes_[node]->advertisers_.erase(prefix);
    for (NodeId n = 0; n < nodes_.size(); n++) {
        if (n == node || r.parent_link[n] < 0) continue;
        Micros delay = r.delay[n];
        sim_.after(delay, [this, n, prefix, node] {
            Node& m = *nodes_[n];
            auto it = m.advertisers_.find(prefix);
            if (it == m.advertisers_.end() || it->second != node) return;
            m.advertisers_.erase(it);
            m.fib_.remove(prefix);
        });
    }
}

PhaseStats Network::total_stats() const {
    PhaseStats t;
    for (const auto& [_, s] : stats_) {
        t.interests_sent += s.interests_sent;
        t.objects_sent += s.objects_sent;
        t.bytes_sent += s.bytes_sent;
        t.packets_lost += s.packets_lost;
    }
    return t;
}

}  // namespace ccnmig
