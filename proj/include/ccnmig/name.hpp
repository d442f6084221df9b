#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccnmig {

/// Hierarchical CCNx name: an ordered list of non-empty text segments.
/// Typed segments such as "ver=7" or "chunk=3" are stored as their literal
/// text; there is no binary typed-segment encoding.
class Name {
public:
    Name() = default;
    explicit Name(std::vector<std::string> segments);

    /// Parse a URI-like path: "/vm-name/config". "/" is the empty root name.
    /// Throws std::invalid_argument on empty input or empty segments ("//").
    static Name parse(const std::string& text);

    std::string to_text() const;

    const std::vector<std::string>& segments() const { return segments_; }
    size_t size() const { return segments_.size(); }
    bool empty() const { return segments_.empty(); }
    const std::string& at(size_t i) const { return segments_.at(i); }

    /// True iff this name's segments are a per-segment prefix of n.
    bool is_prefix_of(const Name& n) const;

    Name append(const std::string& segment) const;
    Name append(const Name& suffix) const;

    bool operator==(const Name&) const = default;
    auto operator<=>(const Name&) const = default;

private:
    std::vector<std::string> segments_;
};

}  // namespace ccnmig
