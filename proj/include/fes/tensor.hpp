#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fes {

/// Tensor extents. Feature maps are (C, H, W); flat tensors are (1, N) or (1, N, M).
using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major binary32 tensor, last extent fastest.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    /// Bitwise equality of shape and every element (distinguishes NaN payloads and signed zeros).
    bool bit_equal(const Tensor& other) const;

private:
    Shape shape_;
    std::vector<float> data_;
};

std::uint32_t float_bits(float v);
float bits_float(std::uint32_t bits);

/// 64-bit FNV-1a over the shape and the raw element encodings.
std::uint64_t digest(const Tensor& t);
std::uint64_t digest(std::span<const Tensor> ts);
std::string hex64(std::uint64_t v);

/// Raw little-endian binary32 files; the shape lives in the accompanying metadata.
Tensor read_raw(const std::filesystem::path& path, const Shape& shape);
void write_raw(const std::filesystem::path& path, const Tensor& t);

} // namespace fes
