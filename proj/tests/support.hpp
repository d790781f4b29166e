#pragma once

#include "fes/graph.hpp"
#include "fes/rng.hpp"
#include "fes/tensor.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

namespace fes::test {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "fes")
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + uniform_index(rng, hi - lo + 1); }

inline Tensor random_tensor(const Shape& shape, Rng& rng, float lo = -2.0f, float hi = 2.0f)
{
    Tensor t(shape);
    for (auto& v : t.data())
        v = static_cast<float>(uniform_real(rng, lo, hi));
    return t;
}

inline OperatorNode make_node(std::string id, OpKind kind, std::vector<std::string> inputs)
{
    OperatorNode n;
    n.id = std::move(id);
    n.kind = kind;
    n.inputs = std::move(inputs);
    return n;
}

} // namespace fes::test
