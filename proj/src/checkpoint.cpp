#include "bnet/checkpoint.hpp"

#include "bnet/common.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace bnet {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void put_u32(std::ofstream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ofstream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_str(std::ofstream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::ifstream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::uint64_t get_u64(std::ifstream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::string get_str(std::ifstream& is) {
    const std::uint32_t n = get_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}

constexpr char kMagic[4] = {'B', 'N', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

} // namespace

void Checkpoint::add(const std::string& name, const Tensor& t) {
    tensors.emplace_back(name, t);
}

const Tensor& Checkpoint::get(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw DataError("checkpoint: no tensor named '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return true;
    return false;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    put_u32(os, kFormatVersion);
    put_u32(os, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
        put_str(os, k);
        put_str(os, v);
    }
    put_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_str(os, name);
        put_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t a = 0; a < t.rank(); ++a) put_u64(os, t.extent(a));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw DataError("checkpoint: write to '" + path + "' failed");
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic in '" + path + "'");
    const std::uint32_t version = get_u32(is);
    if (version != kFormatVersion)
        throw DataError("checkpoint: unsupported version in '" + path + "'");
    Checkpoint ck;
    const std::uint32_t nmeta = get_u32(is);
    for (std::uint32_t i = 0; i < nmeta; ++i) {
        std::string k = get_str(is);
        ck.meta[k] = get_str(is);
    }
    const std::uint32_t ntens = get_u32(is);
    for (std::uint32_t i = 0; i < ntens; ++i) {
        std::string name = get_str(is);
        const std::uint32_t rank = get_u32(is);
        std::vector<std::size_t> shape(rank);
        std::size_t n = 1;
        for (std::uint32_t a = 0; a < rank; ++a) {
            shape[a] = static_cast<std::size_t>(get_u64(is));
            n *= shape[a];
        }
        std::vector<double> data(n);
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw DataError("checkpoint: truncated tensor data in '" + path + "'");
        ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return ck;
}

} // namespace bnet
