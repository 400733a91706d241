#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fedloc/errors.hpp"

namespace fedloc {

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

struct Block {
    std::uint64_t index = 0;
    std::int64_t timestamp = 0;  // unix seconds, supplied by the caller
    std::vector<std::string> device_ids;
    std::string prev_hash;  // 64 lowercase hex chars
    std::string hash;
};

inline const std::string kZeroHash(64, '0');

// Canonical byte encoding hashed per block:
//   decimal index 0x1F decimal timestamp 0x1F ids joined by 0x1E 0x1F prev_hash
inline std::string block_payload(const Block& b) {
    std::string s = std::to_string(b.index);
    s.push_back('\x1f');
    s += std::to_string(b.timestamp);
    s.push_back('\x1f');
    for (std::size_t i = 0; i < b.device_ids.size(); ++i) {
        if (i) s.push_back('\x1e');
        s += b.device_ids[i];
    }
    s.push_back('\x1f');
    s += b.prev_hash;
    return s;
}

inline std::string block_hash(const Block& b) { return sha256_hex(block_payload(b)); }

struct VerifyReport {
    bool ok = true;
    std::optional<std::size_t> first_bad_index;
    std::string detail;
};

// Immutable hash-linked ledger of trusted device IDs. Appends produce a new
// value; existing Chain objects are never modified.
class Chain {
public:
    Chain() = default;
    explicit Chain(std::vector<Block> blocks) : blocks_(std::move(blocks)) {}

    const std::vector<Block>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    const std::string& tip_hash() const { return blocks_.back().hash; }

private:
    std::vector<Block> blocks_;
};

inline VerifyReport verify_chain(const Chain& chain) {
    const auto& blocks = chain.blocks();
    if (blocks.empty()) return {false, std::nullopt, "empty chain"};
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Block& b = blocks[i];
        if (b.index != i) return {false, i, "index mismatch"};
        if (i == 0) {
            if (b.prev_hash != kZeroHash) return {false, i, "genesis prev_hash not all-zero"};
        } else if (b.prev_hash != blocks[i - 1].hash) {
            return {false, i, "broken linkage to previous block"};
        }
        if (b.hash != block_hash(b)) return {false, i, "stored hash does not recompute"};
    }
    return {};
}

namespace detail {
inline void check_id(const std::string& id) {
    if (id.empty()) throw DuplicateIdError("device id must be non-empty");
    for (char c : id)
        if (c == '|' || c == ',' || (unsigned char)c < 0x20)
            throw DuplicateIdError("device id '" + id + "' contains a reserved character");
}
}  // namespace detail

inline Chain genesis(std::int64_t timestamp = 0) {
    Block b;
    b.index = 0;
    b.timestamp = timestamp;
    b.prev_hash = kZeroHash;
    b.hash = block_hash(b);
    return Chain({b});
}

inline bool is_authorized(const Chain& chain, std::string_view device_id) {
    const VerifyReport report = verify_chain(chain);
    if (!report.ok) {
        std::cerr << "[ledger] integrity alert: " << report.detail;
        if (report.first_bad_index) std::cerr << " at block " << *report.first_bad_index;
        std::cerr << "; refusing lookup\n";
        return false;
    }
    for (const Block& b : chain.blocks())
        for (const std::string& id : b.device_ids)
            if (id == device_id) return true;
    return false;
}

inline Chain append_block(const Chain& chain, std::vector<std::string> device_ids,
                          std::int64_t timestamp) {
    const VerifyReport report = verify_chain(chain);
    if (!report.ok)
        throw ChainIntegrityError("append_block: chain fails verification (" + report.detail +
                                  ")");
    if (device_ids.empty()) throw DuplicateIdError("append_block: no device ids given");
    for (std::size_t i = 0; i < device_ids.size(); ++i) {
        detail::check_id(device_ids[i]);
        for (std::size_t j = i + 1; j < device_ids.size(); ++j)
            if (device_ids[i] == device_ids[j])
                throw DuplicateIdError("append_block: duplicate id '" + device_ids[i] +
                                       "' within block");
        if (is_authorized(chain, device_ids[i]))
            throw DuplicateIdError("append_block: id '" + device_ids[i] +
                                   "' is already authorized");
    }
    Block b;
    b.index = chain.size();
    b.timestamp = timestamp;
    b.device_ids = std::move(device_ids);
    b.prev_hash = chain.tip_hash();
    b.hash = block_hash(b);
    std::vector<Block> blocks = chain.blocks();
    blocks.push_back(std::move(b));
    return Chain(std::move(blocks));
}

/// --- line-delimited text format: index|timestamp|id1,id2,...|prev_hash|hash ---

inline std::string chain_to_text(const Chain& chain) {
    std::string out;
    for (const Block& b : chain.blocks()) {
        out += std::to_string(b.index);
        out.push_back('|');
        out += std::to_string(b.timestamp);
        out.push_back('|');
        for (std::size_t i = 0; i < b.device_ids.size(); ++i) {
            if (i) out.push_back(',');
            out += b.device_ids[i];
        }
        out.push_back('|');
        out += b.prev_hash;
        out.push_back('|');
        out += b.hash;
        out.push_back('\n');
    }
    return out;
}

inline Chain chain_from_text(std::string_view text) {
    std::vector<Block> blocks;
    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (line.empty()) continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '|') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 5)
            throw ChainIntegrityError("chain line " + std::to_string(lineno) +
                                      ": expected 5 fields, got " +
                                      std::to_string(fields.size()));
        Block b;
        try {
            b.index = std::stoull(std::string(fields[0]));
            b.timestamp = std::stoll(std::string(fields[1]));
        } catch (const std::exception&) {
            throw ChainIntegrityError("chain line " + std::to_string(lineno) +
                                      ": unparsable index or timestamp");
        }
        if (!fields[2].empty()) {
            std::size_t s = 0;
            const std::string_view ids = fields[2];
            for (std::size_t i = 0; i <= ids.size(); ++i) {
                if (i == ids.size() || ids[i] == ',') {
                    b.device_ids.emplace_back(ids.substr(s, i - s));
                    s = i + 1;
                }
            }
        }
        b.prev_hash = std::string(fields[3]);
        b.hash = std::string(fields[4]);
        blocks.push_back(std::move(b));
    }
    return Chain(std::move(blocks));
}

inline void save_chain(const Chain& chain, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ChainIntegrityError("cannot open chain file for writing: " + path);
    f << chain_to_text(chain);
}

inline Chain load_chain(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ChainIntegrityError("cannot open chain file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return chain_from_text(ss.str());
}

}  // namespace fedloc
