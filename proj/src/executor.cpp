#include "fes/executor.hpp"

#include "fes/error.hpp"
#include "fes/kernels.hpp"

#include <algorithm>
#include <optional>

namespace fes {

namespace {

void check_inputs(const OperatorNode& node, const std::vector<const Tensor*>& inputs)
{
    std::vector<Shape> shapes;
    for (auto* t : inputs)
        shapes.push_back(t->shape());
    auto expected = infer_shape(node, shapes);
    if (!node.output_shape.empty() && expected != node.output_shape)
        throw ShapeError("node '" + node.id + "': inputs yield shape " + to_string(expected) +
                         ", declared output shape " + to_string(node.output_shape));
}

const Tensor& lookup_input(const InputMap& inputs, const GraphInput& spec)
{
    auto it = inputs.find(spec.name);
    if (it == inputs.end())
        throw DataError("missing graph input '" + spec.name + "'");
    if (it->second.shape() != spec.shape)
        throw ShapeError("graph input '" + spec.name + "' expected shape " + to_string(spec.shape) + ", actual " +
                         to_string(it->second.shape()));
    return it->second;
}

/// Evaluates `order` into `values`, reading graph inputs from `inputs`.
void run_nodes(const Graph& graph, const std::vector<std::size_t>& order, std::vector<std::optional<Tensor>>& values,
               const InputMap& inputs, Backend backend)
{
    for (auto idx : order) {
        const auto& node = graph.node(idx);
        std::vector<const Tensor*> args;
        for (auto& src : graph.sources(idx)) {
            if (src.is_graph_input) {
                args.push_back(&lookup_input(inputs, graph.inputs()[src.index]));
            } else {
                if (!values[src.index])
                    throw EngineError("node '" + node.id + "' evaluated before its input '" +
                                      graph.node(src.index).id + "'");
                args.push_back(&*values[src.index]);
            }
        }
        try {
            values[idx] = apply_operator(node, args, backend);
        } catch (const ShapeError&) {
            throw;
        } catch (const std::exception& e) {
            throw EngineError("node '" + node.id + "': " + e.what());
        }
    }
}

} // namespace

Tensor apply_operator(const OperatorNode& node, const std::vector<const Tensor*>& inputs, Backend backend)
{
    check_inputs(node, inputs);
    const bool par = backend == Backend::Parallel;
    const auto& h = node.hyper;
    const Tensor& x = *inputs[0];
    namespace k = kernels;
    namespace r = kernels::reference;
    switch (node.kind) {
    case OpKind::Conv2D:
        return par ? k::conv2d(x, *node.weight("filter"), node.weight("bias"), h.stride, h.padding)
                   : r::conv2d(x, *node.weight("filter"), node.weight("bias"), h.stride, h.padding);
    case OpKind::BatchNorm: {
        auto& g = *node.weight("gamma");
        auto& b = *node.weight("beta");
        auto& m = *node.weight("mean");
        auto& v = *node.weight("variance");
        return par ? k::batch_norm(x, g, b, m, v, h.epsilon) : r::batch_norm(x, g, b, m, v, h.epsilon);
    }
    case OpKind::BiasAdd:
        return par ? k::bias_add(x, *node.weight("bias")) : r::bias_add(x, *node.weight("bias"));
    case OpKind::Add:
        return par ? k::add(x, *inputs[1]) : r::add(x, *inputs[1]);
    case OpKind::Mul:
        return par ? k::mul(x, *inputs[1]) : r::mul(x, *inputs[1]);
    case OpKind::Div:
        return par ? k::div(x, *inputs[1]) : r::div(x, *inputs[1]);
    case OpKind::Exp:
        return par ? k::exp(x) : r::exp(x);
    case OpKind::LeakyReLU:
        return par ? k::leaky_relu(x, h.slope) : r::leaky_relu(x, h.slope);
    case OpKind::Sigmoid:
        return par ? k::sigmoid(x) : r::sigmoid(x);
    case OpKind::MaxPool:
        return par ? k::max_pool(x, h.window, h.stride) : r::max_pool(x, h.window, h.stride);
    case OpKind::Dense:
        return par ? k::dense(x, *node.weight("weight"), node.weight("bias"))
                   : r::dense(x, *node.weight("weight"), node.weight("bias"));
    case OpKind::Flatten: {
        auto d = x.data();
        return Tensor({1, x.size()}, std::vector<float>(d.begin(), d.end()));
    }
    case OpKind::Softmax:
        return par ? k::softmax(x) : r::softmax(x);
    }
    throw EngineError("node '" + node.id + "': unsupported operator kind");
}

Trace execute(const Graph& graph, const InputMap& inputs, Backend backend)
{
    std::vector<std::optional<Tensor>> values(graph.nodes().size());
    std::vector<std::size_t> order(graph.nodes().size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    run_nodes(graph, order, values, inputs, backend);
    Trace trace;
    for (std::size_t i = 0; i < values.size(); ++i)
        trace.emplace(graph.node(i).id, std::move(*values[i]));
    return trace;
}

std::vector<Tensor> execute_outputs(const Graph& graph, const InputMap& inputs, Backend backend)
{
    std::vector<std::optional<Tensor>> values(graph.nodes().size());
    std::vector<std::size_t> order(graph.nodes().size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    run_nodes(graph, order, values, inputs, backend);
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < graph.outputs().size(); ++i)
        out.push_back(*values[graph.output_node(i)]);
    return out;
}

Split split_at(const Graph& graph, std::size_t site)
{
    const auto n = graph.nodes().size();
    if (site >= n)
        throw DataError("split site index out of range");
    Split s;
    s.site = site;

    // Topological order means every descendant has a larger index.
    std::vector<bool> downstream(n, false);
    for (auto c : graph.consumers(site))
        downstream[c] = true;
    for (std::size_t i = site + 1; i < n; ++i) {
        if (!downstream[i])
            continue;
        s.suffix.push_back(i);
        for (auto c : graph.consumers(i))
            downstream[c] = true;
    }

    std::vector<bool> needed(n, false);
    needed[site] = true;
    for (auto i : s.suffix)
        for (auto& src : graph.sources(i))
            if (!src.is_graph_input && !downstream[src.index])
                needed[src.index] = true;
    for (std::size_t o = 0; o < graph.outputs().size(); ++o) {
        auto idx = graph.output_node(o);
        if (!downstream[idx])
            needed[idx] = true;
    }
    s.frontier.push_back(site);
    for (std::size_t i = 0; i < n; ++i)
        if (needed[i] && i != site)
            s.frontier.push_back(i);

    // Prefix: ancestors of the frontier.
    std::vector<bool> in_prefix(n, false);
    for (auto f : s.frontier)
        in_prefix[f] = true;
    for (std::size_t i = n; i-- > 0;) {
        if (!in_prefix[i])
            continue;
        for (auto& src : graph.sources(i))
            if (!src.is_graph_input)
                in_prefix[src.index] = true;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (in_prefix[i])
            s.prefix.push_back(i);
    return s;
}

std::vector<Tensor> run_prefix(const Graph& graph, const Split& split, const InputMap& inputs, Backend backend)
{
    std::vector<std::optional<Tensor>> values(graph.nodes().size());
    run_nodes(graph, split.prefix, values, inputs, backend);
    std::vector<Tensor> frontier;
    frontier.reserve(split.frontier.size());
    for (auto f : split.frontier)
        frontier.push_back(std::move(*values[f]));
    return frontier;
}

std::vector<Tensor> run_suffix(const Graph& graph, const Split& split, const std::vector<Tensor>& frontier,
                               const Tensor& site_value, const InputMap& inputs, Backend backend)
{
    if (frontier.size() != split.frontier.size())
        throw EngineError("frontier size does not match the split");
    const auto& site = graph.node(split.site);
    if (site_value.shape() != site.output_shape)
        throw ShapeError("replacement for node '" + site.id + "' expected shape " + to_string(site.output_shape) +
                         ", actual " + to_string(site_value.shape()));
    std::vector<std::optional<Tensor>> values(graph.nodes().size());
    values[split.site] = site_value;
    for (std::size_t i = 1; i < frontier.size(); ++i)
        values[split.frontier[i]] = frontier[i];
    run_nodes(graph, split.suffix, values, inputs, backend);
    std::vector<Tensor> out;
    for (std::size_t o = 0; o < graph.outputs().size(); ++o)
        out.push_back(std::move(*values[graph.output_node(o)]));
    return out;
}

Trace execute_from(const Graph& graph, const std::string& start_node, const Tensor& replaced_output,
                   const InputMap& inputs, const Trace* golden, Backend backend)
{
    auto site = graph.index_of(start_node);
    if (!site)
        throw DataError("unknown node id '" + start_node + "'");
    const auto& node = graph.node(*site);
    if (replaced_output.shape() != node.output_shape)
        throw ShapeError("replacement for node '" + start_node + "' expected shape " + to_string(node.output_shape) +
                         ", actual " + to_string(replaced_output.shape()));
    auto split = split_at(graph, *site);

    std::vector<Tensor> frontier;
    bool served = golden != nullptr;
    if (golden)
        for (auto f : split.frontier) {
            auto it = golden->find(graph.node(f).id);
            if (it == golden->end()) {
                served = false;
                break;
            }
            frontier.push_back(it->second);
        }
    if (!served) {
        // The site itself never needs recomputing.
        Split upstream = split;
        upstream.frontier.erase(upstream.frontier.begin());
        std::vector<std::optional<Tensor>> values(graph.nodes().size());
        std::vector<std::size_t> order;
        std::vector<bool> keep(graph.nodes().size(), false);
        for (auto f : upstream.frontier)
            keep[f] = true;
        for (std::size_t i = graph.nodes().size(); i-- > 0;) {
            if (!keep[i])
                continue;
            for (auto& src : graph.sources(i))
                if (!src.is_graph_input)
                    keep[src.index] = true;
        }
        for (auto i : split.prefix)
            if (keep[i])
                order.push_back(i);
        run_nodes(graph, order, values, inputs, backend);
        frontier.clear();
        frontier.push_back(replaced_output);
        for (auto f : upstream.frontier)
            frontier.push_back(std::move(*values[f]));
    }

    std::vector<std::optional<Tensor>> values(graph.nodes().size());
    values[*site] = replaced_output;
    for (std::size_t i = 1; i < frontier.size(); ++i)
        values[split.frontier[i]] = frontier[i];
    run_nodes(graph, split.suffix, values, inputs, backend);

    Trace trace;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i])
            trace.emplace(graph.node(i).id, std::move(*values[i]));
    return trace;
}

} // namespace fes
