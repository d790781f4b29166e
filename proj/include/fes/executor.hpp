#pragma once

#include "fes/graph.hpp"
#include "fes/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace fes {

enum class Backend { Parallel, Reference };

/// Node outputs keyed by node id.
using Trace = std::map<std::string, Tensor>;
/// Graph input tensors keyed by input name.
using InputMap = std::map<std::string, Tensor>;

/// Evaluates one operator. Input shapes must match the node's declared inputs.
Tensor apply_operator(const OperatorNode& node, const std::vector<const Tensor*>& inputs,
                      Backend backend = Backend::Parallel);

/// Runs the whole graph and returns every node's output.
Trace execute(const Graph& graph, const InputMap& inputs, Backend backend = Backend::Parallel);

/// Only the graph outputs, in declaration order.
std::vector<Tensor> execute_outputs(const Graph& graph, const InputMap& inputs, Backend backend = Backend::Parallel);

/// The graph cut at an injection site. `prefix` is everything upstream that the
/// suffix needs; `suffix` is every node reachable from the site's consumers;
/// `frontier` lists the non-suffix nodes whose outputs the suffix (or the graph
/// outputs) read, the site first.
struct Split {
    std::size_t site = 0;
    std::vector<std::size_t> prefix;
    std::vector<std::size_t> suffix;
    std::vector<std::size_t> frontier;
};

Split split_at(const Graph& graph, std::size_t site);

/// Computes the frontier tensors from the graph inputs, in `split.frontier` order.
std::vector<Tensor> run_prefix(const Graph& graph, const Split& split, const InputMap& inputs,
                               Backend backend = Backend::Parallel);

/// Runs the suffix with `site_value` in place of the site's output and returns the graph outputs.
std::vector<Tensor> run_suffix(const Graph& graph, const Split& split, const std::vector<Tensor>& frontier,
                               const Tensor& site_value, const InputMap& inputs, Backend backend = Backend::Parallel);

/// Re-executes the graph downstream of `start_node` using `replaced_output` as its value.
/// Upstream tensors the suffix needs are taken from `golden` when given, otherwise recomputed.
/// The returned trace holds the frontier tensors (with the replacement) and every recomputed node.
Trace execute_from(const Graph& graph, const std::string& start_node, const Tensor& replaced_output,
                   const InputMap& inputs, const Trace* golden = nullptr, Backend backend = Backend::Parallel);

} // namespace fes
