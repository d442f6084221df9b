#pragma once

#include <array>
#include <optional>
#include <stdexcept>

#include "ccnmig/bytes.hpp"
#include "ccnmig/name.hpp"

namespace ccnmig {

/// SHA-256 digest; equality is byte equality, displayed as lowercase hex.
struct Hash256 {
    std::array<uint8_t, 32> value{};

    std::string to_hex() const;
    static Hash256 from_hex(const std::string& hex);

    bool operator==(const Hash256&) const = default;
    auto operator<=>(const Hash256&) const = default;
};

struct Hash256Hasher {
    size_t operator()(const Hash256& h) const {
        size_t v = 0;
        for (int i = 0; i < 8; i++) v = (v << 8) | h.value[i];
        return v;
    }
};

/// The addressing tuple {CCNxName, KeyIdRestr, HashRestr}. A nameless object
/// is addressed by (routing prefix, hash_restr) where the prefix is used only
/// for forwarding.
struct NamedAddress {
    Name name;
    std::optional<Hash256> key_id_restr;
    std::optional<Hash256> hash_restr;

    bool operator==(const NamedAddress&) const = default;
    auto operator<=>(const NamedAddress&) const = default;
};

struct Interest {
    NamedAddress address;

    bool operator==(const Interest&) const = default;
};

/// Response message. Nameless objects carry no name and no key_id; their wire
/// body is exactly 8 bytes of TLV framing plus the payload.
struct ContentObject {
    std::optional<Name> name;
    std::optional<Hash256> key_id;
    Bytes payload;

    bool nameless() const { return !name.has_value(); }

    bool operator==(const ContentObject&) const = default;
};

inline ContentObject make_nameless(Bytes payload) {
    return ContentObject{std::nullopt, std::nullopt, std::move(payload)};
}

class EncodeError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    enum class Kind { truncated, length_mismatch, unknown_type, malformed };
    DecodeError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

// Wire layout.
//
// Fixed header (8 bytes): version=0x01, packet type (0x00 Interest,
// 0x01 Content Object), total packet length (u16 BE), 3 reserved zero bytes,
// header length = 8.
//
// TLVs are 2-byte type + 2-byte length, big-endian. The top-level message
// TLV (T_INTEREST / T_OBJECT) length covers the whole message body including
// its own 4-byte header; inner TLV lengths cover the value only. A nameless
// Content Object therefore costs a constant 16 bytes: 8 header + 4 opening
// T_OBJECT + 4 opening T_PAYLOAD.
namespace wire {
constexpr uint16_t T_INTEREST = 0x0001;
constexpr uint16_t T_OBJECT = 0x0002;
constexpr uint16_t T_NAME = 0x0000;
constexpr uint16_t T_NAMESEG = 0x0001;
constexpr uint16_t T_PAYLOAD = 0x0001;
constexpr uint16_t T_KEYID = 0x0002;
constexpr uint16_t T_KEYID_RESTR = 0x0002;
constexpr uint16_t T_HASH_RESTR = 0x0003;
constexpr uint8_t PT_INTEREST = 0x00;
constexpr uint8_t PT_OBJECT = 0x01;
constexpr size_t FIXED_HEADER_LEN = 8;
constexpr size_t NAMELESS_OVERHEAD = 16;
constexpr size_t MAX_NAMELESS_PAYLOAD = 65503;
}  // namespace wire

Bytes encode_content_object(const ContentObject& obj);
ContentObject decode_content_object(const Bytes& wire);

Bytes encode_interest(const Interest& interest);
Interest decode_interest(const Bytes& wire);

/// SHA-256 over the message body only (everything after the 8-byte fixed
/// header). Pure in (name, key_id, payload); never sees the fixed header.
Hash256 compute_object_hash(const ContentObject& obj);

/// The forwarding match rule: name agrees (or the object is nameless and the
/// Interest name acts as a routing prefix under a hash restriction), key_id
/// byte-matches any KeyIdRestr, and the computed hash matches any HashRestr.
bool match_restrictions(const Interest& interest, const ContentObject& obj);

size_t encoded_size(const ContentObject& obj);

}  // namespace ccnmig
