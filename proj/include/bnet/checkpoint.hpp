#pragma once

#include "bnet/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace bnet {

/// Ordered named-tensor container with a small metadata map, written as the
/// binary "BNCK" format:
///   magic "BNCK", u32 version, u32 meta count, (u32 len + bytes) key/value
///   pairs, u32 tensor count, then per tensor: u32 name len + bytes,
///   u32 rank, u64 extents, raw little-endian f64 values (row-major).
/// Round-trips bit-exactly.
struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> tensors;
    std::map<std::string, std::string> meta;

    void add(const std::string& name, const Tensor& t);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

} // namespace bnet
