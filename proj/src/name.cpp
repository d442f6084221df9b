#include "ccnmig/name.hpp"

#include <sstream>

namespace ccnmig {

Name::Name(std::vector<std::string> segments) : segments_(std::move(segments)) {
    for (const auto& s : segments_) {
        if (s.empty()) throw std::invalid_argument("empty name segment");
    }
}

Name Name::parse(const std::string& text) {
    if (text.empty() || text[0] != '/')
        throw std::invalid_argument("name must begin with '/': \"" + text + "\"");
    if (text == "/") return Name{};
    std::vector<std::string> segs;
    size_t pos = 1;
    while (pos <= text.size()) {
        size_t next = text.find('/', pos);
        if (next == std::string::npos) next = text.size();
        if (next == pos) throw std::invalid_argument("empty name segment in \"" + text + "\"");
        segs.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
    return Name{std::move(segs)};
}

std::string Name::to_text() const {
    if (segments_.empty()) return "/";
    std::ostringstream out;
    for (const auto& s : segments_) out << '/' << s;
    return out.str();
}

bool Name::is_prefix_of(const Name& n) const {
    if (segments_.size() > n.segments_.size()) return false;
    for (size_t i = 0; i < segments_.size(); i++) {
        if (segments_[i] != n.segments_[i]) return false;
    }
    return true;
}

Name Name::append(const std::string& segment) const {
    auto segs = segments_;
    segs.push_back(segment);
    return Name{std::move(segs)};
}

Name Name::append(const Name& suffix) const {
    auto segs = segments_;
    segs.insert(segs.end(), suffix.segments_.begin(), suffix.segments_.end());
    return Name{std::move(segs)};
}

}  // namespace ccnmig
