#include "ccnmig/message.hpp"

#include <openssl/sha.h>

#include <cstring>

namespace ccnmig {

std::string hex_encode(const Bytes& b) {
    static const char* lut = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (uint8_t c : b) {
        out.push_back(lut[c >> 4]);
        out.push_back(lut[c & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit");
}

Bytes hex_decode(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd hex length");
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); i++)
        out[i] = static_cast<uint8_t>((hex_nibble(hex[2 * i]) << 4) | hex_nibble(hex[2 * i + 1]));
    return out;
}

std::string Hash256::to_hex() const {
    return hex_encode(Bytes(value.begin(), value.end()));
}

Hash256 Hash256::from_hex(const std::string& hex) {
    Bytes raw = hex_decode(hex);
    if (raw.size() != 32) throw std::invalid_argument("hash must be 32 bytes");
    Hash256 h;
    std::memcpy(h.value.data(), raw.data(), 32);
    return h;
}

namespace {

void put_u16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v & 0xff));
}

void put_tlv_header(Bytes& out, uint16_t type, size_t len) {
    if (len > 0xffff) throw EncodeError("TLV length overflow");
    put_u16(out, type);
    put_u16(out, static_cast<uint16_t>(len));
}

void put_tlv(Bytes& out, uint16_t type, const Bytes& value) {
    put_tlv_header(out, type, value.size());
    out.insert(out.end(), value.begin(), value.end());
}

Bytes encode_name_tlv(const Name& name) {
    Bytes inner;
    for (const auto& seg : name.segments())
        put_tlv(inner, wire::T_NAMESEG, to_bytes(seg));
    Bytes out;
    put_tlv(out, wire::T_NAME, inner);
    return out;
}

// Message body: top-level TLV (length covers the body including its own
// header) followed by the nested TLVs.
Bytes encode_object_body(const ContentObject& obj) {
    Bytes inner;
    if (obj.name) inner = encode_name_tlv(*obj.name);
    if (obj.key_id)
        put_tlv(inner, wire::T_KEYID, Bytes(obj.key_id->value.begin(), obj.key_id->value.end()));
    put_tlv_header(inner, wire::T_PAYLOAD, obj.payload.size());
    inner.insert(inner.end(), obj.payload.begin(), obj.payload.end());

    Bytes body;
    put_tlv_header(body, wire::T_OBJECT, 4 + inner.size());
    body.insert(body.end(), inner.begin(), inner.end());
    return body;
}

Bytes encode_interest_body(const Interest& interest) {
    Bytes inner = encode_name_tlv(interest.address.name);
    if (interest.address.key_id_restr) {
        const auto& v = interest.address.key_id_restr->value;
        put_tlv(inner, wire::T_KEYID_RESTR, Bytes(v.begin(), v.end()));
    }
    if (interest.address.hash_restr) {
        const auto& v = interest.address.hash_restr->value;
        put_tlv(inner, wire::T_HASH_RESTR, Bytes(v.begin(), v.end()));
    }
    Bytes body;
    put_tlv_header(body, wire::T_INTEREST, 4 + inner.size());
    body.insert(body.end(), inner.begin(), inner.end());
    return body;
}

Bytes with_fixed_header(uint8_t packet_type, const Bytes& body) {
    size_t total = wire::FIXED_HEADER_LEN + body.size();
    if (total > 0xffff) throw EncodeError("packet too large for 16-bit length");
    Bytes out;
    out.reserve(total);
    out.push_back(0x01);  // version
    out.push_back(packet_type);
    put_u16(out, static_cast<uint16_t>(total));
    out.push_back(0);
    out.push_back(0);
    out.push_back(0);
    out.push_back(wire::FIXED_HEADER_LEN);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

struct Cursor {
    const Bytes& buf;
    size_t pos;
    size_t end;

    size_t remaining() const { return end - pos; }
    void need(size_t n) const {
        if (remaining() < n)
            throw DecodeError(DecodeError::Kind::truncated, "truncated buffer");
    }
    uint8_t u8() {
        need(1);
        return buf[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>((buf[pos] << 8) | buf[pos + 1]);
        pos += 2;
        return v;
    }
    Bytes take(size_t n) {
        need(n);
        Bytes out(buf.begin() + pos, buf.begin() + pos + n);
        pos += n;
        return out;
    }
};

Name decode_name_tlv_value(Cursor cur) {
    std::vector<std::string> segs;
    while (cur.remaining() > 0) {
        uint16_t type = cur.u16();
        uint16_t len = cur.u16();
        if (type != wire::T_NAMESEG)
            throw DecodeError(DecodeError::Kind::unknown_type, "unknown TLV inside name");
        segs.push_back(ccnmig::to_string(cur.take(len)));
    }
    return Name{std::move(segs)};
}

// Returns (top-level type, cursor over nested TLVs).
std::pair<uint16_t, Cursor> open_packet(const Bytes& buf, uint8_t expect_ptype) {
    Cursor cur{buf, 0, buf.size()};
    cur.need(wire::FIXED_HEADER_LEN);
    uint8_t version = cur.u8();
    uint8_t ptype = cur.u8();
    uint16_t total = cur.u16();
    cur.take(3);
    uint8_t hlen = cur.u8();
    if (version != 0x01)
        throw DecodeError(DecodeError::Kind::malformed, "unsupported version");
    if (ptype != expect_ptype)
        throw DecodeError(DecodeError::Kind::malformed, "unexpected packet type");
    if (hlen != wire::FIXED_HEADER_LEN)
        throw DecodeError(DecodeError::Kind::malformed, "bad header length");
    if (total != buf.size())
        throw DecodeError(DecodeError::Kind::length_mismatch,
                          "fixed-header length mismatch vs buffer");
    uint16_t top_type = cur.u16();
    uint16_t top_len = cur.u16();
    if (top_len != buf.size() - wire::FIXED_HEADER_LEN)
        throw DecodeError(DecodeError::Kind::length_mismatch, "top-level TLV length mismatch");
    return {top_type, cur};
}

Hash256 take_hash(Cursor& cur, uint16_t len) {
    if (len != 32)
        throw DecodeError(DecodeError::Kind::malformed, "hash TLV must be 32 bytes");
    Bytes raw = cur.take(32);
    Hash256 h;
    std::memcpy(h.value.data(), raw.data(), 32);
    return h;
}

}  // namespace

Bytes encode_content_object(const ContentObject& obj) {
    if (obj.nameless()) {
        if (obj.key_id)
            throw EncodeError("nameless object must not carry a key_id");
        if (obj.payload.size() > wire::MAX_NAMELESS_PAYLOAD)
            throw EncodeError("nameless payload exceeds 65503 bytes");
    }
    return with_fixed_header(wire::PT_OBJECT, encode_object_body(obj));
}

ContentObject decode_content_object(const Bytes& buf) {
    auto [type, cur] = open_packet(buf, wire::PT_OBJECT);
    if (type != wire::T_OBJECT)
        throw DecodeError(DecodeError::Kind::unknown_type, "expected T_OBJECT");
    ContentObject obj;
    bool saw_payload = false;
    while (cur.remaining() > 0) {
        uint16_t t = cur.u16();
        uint16_t len = cur.u16();
        if (!saw_payload && t == wire::T_NAME && !obj.name) {
            cur.need(len);
            obj.name = decode_name_tlv_value(Cursor{buf, cur.pos, cur.pos + len});
            cur.pos += len;
        } else if (!saw_payload && t == wire::T_KEYID && obj.name) {
            obj.key_id = take_hash(cur, len);
        } else if (t == wire::T_PAYLOAD && !saw_payload) {
            obj.payload = cur.take(len);
            saw_payload = true;
        } else {
            throw DecodeError(DecodeError::Kind::unknown_type, "unknown TLV in object body");
        }
    }
    if (!saw_payload)
        throw DecodeError(DecodeError::Kind::malformed, "object missing payload");
    return obj;
}

Bytes encode_interest(const Interest& interest) {
    return with_fixed_header(wire::PT_INTEREST, encode_interest_body(interest));
}

Interest decode_interest(const Bytes& buf) {
    auto [type, cur] = open_packet(buf, wire::PT_INTEREST);
    if (type != wire::T_INTEREST)
        throw DecodeError(DecodeError::Kind::unknown_type, "expected T_INTEREST");
    Interest interest;
    bool saw_name = false;
    while (cur.remaining() > 0) {
        uint16_t t = cur.u16();
        uint16_t len = cur.u16();
        if (!saw_name && t == wire::T_NAME) {
            cur.need(len);
            interest.address.name = decode_name_tlv_value(Cursor{buf, cur.pos, cur.pos + len});
            cur.pos += len;
            saw_name = true;
        } else if (saw_name && t == wire::T_KEYID_RESTR && !interest.address.key_id_restr) {
            interest.address.key_id_restr = take_hash(cur, len);
        } else if (saw_name && t == wire::T_HASH_RESTR && !interest.address.hash_restr) {
            interest.address.hash_restr = take_hash(cur, len);
        } else {
            throw DecodeError(DecodeError::Kind::unknown_type, "unknown TLV in interest body");
        }
    }
    if (!saw_name)
        throw DecodeError(DecodeError::Kind::malformed, "interest missing name");
    return interest;
}

Hash256 compute_object_hash(const ContentObject& obj) {
    Bytes body = encode_object_body(obj);
    Hash256 h;
    SHA256(body.data(), body.size(), h.value.data());
    return h;
}

bool match_restrictions(const Interest& interest, const ContentObject& obj) {
    const NamedAddress& a = interest.address;
    bool name_ok;
    if (obj.nameless()) {
        // Interest name is routing scope only; a hash restriction must vouch
        // for the content.
        name_ok = a.hash_restr.has_value();
    } else {
        name_ok = a.name.empty() || a.name == *obj.name;
    }
    if (!name_ok) return false;
    if (a.key_id_restr) {
        if (!obj.key_id || *obj.key_id != *a.key_id_restr) return false;
    }
    if (a.hash_restr) {
        if (compute_object_hash(obj) != *a.hash_restr) return false;
    }
    return true;
}

size_t encoded_size(const ContentObject& obj) {
    return wire::FIXED_HEADER_LEN + encode_object_body(obj).size();
}

}  // namespace ccnmig
