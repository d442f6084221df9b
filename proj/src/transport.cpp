#include "ccnmig/transport.hpp"

namespace ccnmig {

void FetchMetrics::accumulate(const FetchMetrics& o) {
    interests_sent += o.interests_sent;
    retransmissions += o.retransmissions;
    duplicates_discarded += o.duplicates_discarded;
    objects_received += o.objects_received;
    bytes_received += o.bytes_received;
}

void FetchSession::start(std::vector<NamedAddress> addresses, CompleteFn on_complete) {
    on_complete_ = std::move(on_complete);
    slots_.reserve(addresses.size());
    for (auto& a : addresses) slots_.push_back(Slot{std::move(a)});
    results_.assign(slots_.size(), std::nullopt);
    if (slots_.empty()) {
        state_ = SessionState::closed;
        sim_.after(0, [this] { on_complete_(true); });
        return;
    }
    pump();
}

void FetchSession::pump() {
    while (inflight_ < params_.window && next_ < slots_.size()) send(next_++);
}

void FetchSession::send(size_t i) {
    Slot& s = slots_[i];
    s.attempts++;
    if (s.attempts == 1) inflight_++;
    metrics_.interests_sent++;
    if (s.attempts > 1) metrics_.retransmissions++;
    int attempt = s.attempts;
    Interest interest{s.addr};
    net_.express_interest(node_, interest,
                          [this, i](const ContentObject& obj) { on_response(i, obj); });
    sim_.after(params_.rto, [this, i, attempt] { on_timeout(i, attempt); });
}

void FetchSession::on_response(size_t i, const ContentObject& obj) {
    Slot& s = slots_[i];
    if (s.done || s.exhausted) {
        metrics_.duplicates_discarded++;
        return;
    }
    if (!match_restrictions(Interest{s.addr}, obj)) return;  // not ours
    s.done = true;
    results_[i] = obj;
    metrics_.objects_received++;
    metrics_.bytes_received += encoded_size(obj);
    inflight_--;
    resolved_++;
    if (resolved_ == slots_.size())
        finish();
    else
        pump();
}

void FetchSession::on_timeout(size_t i, int attempt) {
    Slot& s = slots_[i];
    if (s.done || s.exhausted || s.attempts != attempt) return;
    if (s.attempts > params_.max_retries) {
        s.exhausted = true;
        any_failed_ = true;
        inflight_--;
        resolved_++;
        if (resolved_ == slots_.size())
            finish();
        else
            pump();
        return;
    }
    send(i);
}

void FetchSession::finish() {
    state_ = any_failed_ ? SessionState::failed : SessionState::closed;
    if (on_complete_) on_complete_(!any_failed_);
}

std::vector<NamedAddress> FetchSession::missing() const {
    std::vector<NamedAddress> out;
    for (const auto& s : slots_)
        if (!s.done) out.push_back(s.addr);
    return out;
}

ContentObject make_ack(const Name& name) {
    ContentObject ack;
    ack.name = name;
    ack.payload = Bytes{0x01};
    return ack;
}

void CloseRequester::start(const Name& checkpoint_prefix, std::function<void(bool)> done) {
    state_ = SessionState::closing;
    close_fetch_ = std::make_shared<FetchSession>(sim_, net_, node_, params_);
    close_fetch_->start({NamedAddress{checkpoint_prefix.append("close"), {}, {}}},
                        [this, checkpoint_prefix, done](bool ok) {
                            if (!ok) {
                                state_ = SessionState::failed;
                                done(false);
                                return;
                            }
                            ack_fetch_ = std::make_shared<FetchSession>(sim_, net_, node_, params_);
                            ack_fetch_->start(
                                {NamedAddress{checkpoint_prefix.append("close-ack"), {}, {}}},
                                [this, done](bool ok2) {
                                    state_ = ok2 ? SessionState::closed : SessionState::failed;
                                    done(ok2);
                                });
                        });
}

FetchMetrics CloseRequester::metrics() const {
    FetchMetrics m;
    if (close_fetch_) m.accumulate(close_fetch_->metrics());
    if (ack_fetch_) m.accumulate(ack_fetch_->metrics());
    return m;
}

}  // namespace ccnmig
