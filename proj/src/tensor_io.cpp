#include "logsad/tensor_io.hpp"

#include "logsad/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace logsad {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

}  // namespace

Tensor::Tensor(std::vector<std::uint32_t> d, std::vector<float> values)
    : dims(std::move(d)), data(std::move(values)) {
    check();
}

void Tensor::check() const {
    if (dims.empty()) throw ValidationError("tensor must have ndim >= 1");
    std::size_t count = 1;
    for (auto d : dims) {
        if (d == 0) throw ValidationError("tensor dims must all be >= 1");
        count *= d;
    }
    if (count != data.size()) {
        std::ostringstream msg;
        msg << "tensor dims imply " << count << " elements but data holds " << data.size();
        throw ValidationError(msg.str());
    }
}

const char* to_string(TensorErrorKind kind) noexcept {
    switch (kind) {
        case TensorErrorKind::io: return "io";
        case TensorErrorKind::bad_magic: return "bad magic";
        case TensorErrorKind::bad_version: return "bad version";
        case TensorErrorKind::bad_header: return "bad header";
        case TensorErrorKind::truncated: return "truncated";
        case TensorErrorKind::size_mismatch: return "size mismatch";
    }
    return "unknown";
}

TensorError::TensorError(TensorErrorKind kind, const std::filesystem::path& path, const std::string& detail)
    : std::runtime_error(std::string("tensor ") + to_string(kind) + " error in '" + path.string() + "': " + detail),
      kind_(kind) {}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
    tensor.check();
    std::vector<std::uint8_t> out;
    out.reserve(12 + 4 * tensor.dims.size() + 4 * tensor.data.size());
    out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
    put_u32(out, kTensorVersion);
    put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (auto d : tensor.dims) put_u32(out, d);
    for (float f : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::filesystem::path& origin) {
    using K = TensorErrorKind;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0)
        throw TensorError(K::bad_magic, origin, "expected \"LSAD\"");
    if (bytes.size() < 12) throw TensorError(K::truncated, origin, "header shorter than 12 bytes");
    const auto version = get_u32(bytes, 4);
    if (version != kTensorVersion)
        throw TensorError(K::bad_version, origin, "version " + std::to_string(version) + ", expected 1");
    const auto ndim = get_u32(bytes, 8);
    if (ndim == 0) throw TensorError(K::bad_header, origin, "ndim is 0");
    const std::size_t header = 12 + 4 * static_cast<std::size_t>(ndim);
    if (bytes.size() < header) throw TensorError(K::truncated, origin, "dims extend past end of file");

    Tensor t;
    t.dims.reserve(ndim);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        const auto d = get_u32(bytes, 12 + 4 * i);
        if (d == 0) throw TensorError(K::bad_header, origin, "dim " + std::to_string(i) + " is 0");
        t.dims.push_back(d);
        count *= d;
    }
    const std::size_t need = header + 4 * count;
    if (bytes.size() < need) {
        throw TensorError(K::truncated, origin,
                          "payload needs " + std::to_string(4 * count) + " bytes, found " +
                              std::to_string(bytes.size() - header));
    }
    if (bytes.size() > need) {
        throw TensorError(K::size_mismatch, origin,
                          std::to_string(bytes.size() - need) + " trailing bytes after payload");
    }
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
    return t;
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& destination) {
    const auto bytes = encode_tensor(tensor);
    std::ofstream out(destination, std::ios::binary | std::ios::trunc);
    if (!out) throw TensorError(TensorErrorKind::io, destination, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw TensorError(TensorErrorKind::io, destination, "write failed");
}

Tensor read_tensor(const std::filesystem::path& source) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw TensorError(TensorErrorKind::io, source, "cannot open for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_tensor(bytes, source);
}

}  // namespace logsad
