#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace logsad {

// Dense row-major float32 array. The on-disk container is
//   "LSAD" | u32 version=1 | u32 ndim | u32 dims[ndim] | f32 data[prod(dims)]
// with every integer and float little-endian.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<std::uint32_t> d, std::vector<float> values);

    std::size_t numel() const noexcept { return data.size(); }
    std::size_t ndim() const noexcept { return dims.size(); }

    // Throws ValidationError when ndim == 0, a dim is 0, or the element
    // count does not match the data length.
    void check() const;
};

inline constexpr char kTensorMagic[4] = {'L', 'S', 'A', 'D'};
inline constexpr std::uint32_t kTensorVersion = 1;

enum class TensorErrorKind {
    io,
    bad_magic,
    bad_version,
    bad_header,  // ndim == 0 or a zero dimension
    truncated,   // fewer payload bytes than the dims require
    size_mismatch,  // trailing bytes after the payload
};

const char* to_string(TensorErrorKind kind) noexcept;

class TensorError : public std::runtime_error {
public:
    TensorError(TensorErrorKind kind, const std::filesystem::path& path, const std::string& detail);
    TensorErrorKind kind() const noexcept { return kind_; }

private:
    TensorErrorKind kind_;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::filesystem::path& origin = {});

void write_tensor(const Tensor& tensor, const std::filesystem::path& destination);
Tensor read_tensor(const std::filesystem::path& source);

}  // namespace logsad
