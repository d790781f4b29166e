#pragma once

#include "fes/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fes {

enum class OpKind {
    Conv2D,
    BatchNorm,
    BiasAdd,
    Add,
    Mul,
    Div,
    Exp,
    LeakyReLU,
    Sigmoid,
    MaxPool,
    Dense,
    Flatten,
    Softmax,
};

inline constexpr std::size_t op_kind_count = 13;

std::string_view to_string(OpKind kind);
std::optional<OpKind> parse_op_kind(std::string_view name);
const std::vector<OpKind>& all_op_kinds();

/// Kind-specific hyperparameters. Only the fields relevant to the node's kind are read.
struct Hyperparams {
    std::size_t kernel = 1;       // Conv2D
    std::size_t stride = 1;       // Conv2D, MaxPool
    std::size_t padding = 0;      // Conv2D
    std::size_t out_channels = 0; // Conv2D
    float slope = 0.1f;           // LeakyReLU
    std::size_t window = 2;       // MaxPool
    float epsilon = 1e-5f;        // BatchNorm
};

struct OperatorNode {
    std::string id;
    OpKind kind = OpKind::LeakyReLU;
    Hyperparams hyper;
    std::map<std::string, Tensor> weights;
    std::vector<std::string> inputs;

    /// Filled by shape inference when the owning Graph is built.
    Shape output_shape;

    const Tensor* weight(const std::string& name) const;
};

struct GraphInput {
    std::string name;
    Shape shape;
};

/// Validated, immutable dataflow graph. Nodes are stored in execution (topological) order.
class Graph {
public:
    /// Validates references, orders nodes topologically and infers every output shape.
    static Graph build(std::vector<GraphInput> inputs, std::vector<OperatorNode> nodes,
                       std::vector<std::string> outputs);

    const std::vector<GraphInput>& inputs() const { return inputs_; }
    const std::vector<OperatorNode>& nodes() const { return nodes_; }
    const std::vector<std::string>& outputs() const { return outputs_; }

    const OperatorNode& node(std::size_t index) const { return nodes_[index]; }
    const OperatorNode& node(std::string_view id) const;
    std::optional<std::size_t> index_of(std::string_view id) const;
    std::optional<std::size_t> input_index(std::string_view name) const;
    std::size_t output_node(std::size_t i) const { return output_index_[i]; }

    /// Resolved upstream of a node input: a node index, or a graph input index.
    struct Source {
        bool is_graph_input = false;
        std::size_t index = 0;
    };
    const std::vector<Source>& sources(std::size_t node) const { return sources_[node]; }

    /// Downstream consumers of a node, in execution order.
    const std::vector<std::size_t>& consumers(std::size_t node) const { return consumers_[node]; }

    /// Digest over structure, hyperparameters and weights.
    std::uint64_t digest() const;

private:
    std::vector<GraphInput> inputs_;
    std::vector<OperatorNode> nodes_;
    std::vector<std::string> outputs_;
    std::vector<std::size_t> output_index_;
    std::vector<std::vector<Source>> sources_;
    std::vector<std::vector<std::size_t>> consumers_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
};

/// Output shape of a node given its input shapes; throws ShapeError naming the node.
Shape infer_shape(const OperatorNode& node, const std::vector<Shape>& input_shapes);

/// Loads a JSON model manifest and the raw weight files it references.
Graph load_model(const std::filesystem::path& manifest_path);

/// Writes a manifest plus one raw file per weight into `dir`.
void save_model(const Graph& graph, const std::filesystem::path& dir, const std::string& name = "model");

} // namespace fes
