#include "fes/tensor.hpp"

#include "fes/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace fes {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
static_assert(std::endian::native == std::endian::little, "raw tensor IO assumes a little-endian host");

std::size_t element_count(const Shape& shape)
{
    std::size_t n = 1;
    for (auto e : shape)
        n *= e;
    return n;
}

std::string to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? ", " : "") << shape[i];
    os << ')';
    return os.str();
}

static void check_shape(const Shape& shape)
{
    if (shape.empty())
        throw ShapeError("tensor shape must have at least one extent");
    for (auto e : shape)
        if (e == 0)
            throw ShapeError("tensor extents must be >= 1, got " + to_string(shape));
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape))
{
    check_shape(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    check_shape(shape_);
    if (element_count(shape_) != data_.size())
        throw ShapeError("tensor of shape " + to_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)) + " values, got " +
                         std::to_string(data_.size()));
}

bool Tensor::bit_equal(const Tensor& other) const
{
    return shape_ == other.shape_ &&
           (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0);
}

std::uint32_t float_bits(float v) { return std::bit_cast<std::uint32_t>(v); }
float bits_float(std::uint32_t bits) { return std::bit_cast<float>(bits); }

namespace {

constexpr std::uint64_t fnv_offset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t fnv_prime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* p, std::size_t n)
{
    auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= fnv_prime;
    }
}

void fnv_tensor(std::uint64_t& h, const Tensor& t)
{
    for (auto e : t.shape()) {
        std::uint64_t v = e;
        fnv_bytes(h, &v, sizeof v);
    }
    fnv_bytes(h, t.data().data(), t.size() * sizeof(float));
}

} // namespace

std::uint64_t digest(const Tensor& t)
{
    std::uint64_t h = fnv_offset;
    fnv_tensor(h, t);
    return h;
}

std::uint64_t digest(std::span<const Tensor> ts)
{
    std::uint64_t h = fnv_offset;
    for (auto& t : ts)
        fnv_tensor(h, t);
    return h;
}

std::string hex64(std::uint64_t v)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[i] = digits[v & 0xf];
    return s;
}

Tensor read_raw(const std::filesystem::path& path, const Shape& shape)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open tensor file " + path.string());
    in.seekg(0, std::ios::end);
    auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    const auto expected = element_count(shape);
    if (bytes != expected * sizeof(float))
        throw ShapeError("tensor file " + path.string() + " holds " + std::to_string(bytes) +
                         " bytes, shape " + to_string(shape) + " needs " +
                         std::to_string(expected * sizeof(float)));
    std::vector<float> data(expected);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in)
        throw DataError("short read on " + path.string());
    return Tensor(shape, std::move(data));
}

void write_raw(const std::filesystem::path& path, const Tensor& t)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot write tensor file " + path.string());
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!out)
        throw DataError("write failed on " + path.string());
}

} // namespace fes
