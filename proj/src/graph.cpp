#include "fes/graph.hpp"

#include "fes/error.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <queue>
#include <set>

namespace fes {

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, op_kind_count> kind_names{{
    {OpKind::Conv2D, "Conv2D"},
    {OpKind::BatchNorm, "BatchNorm"},
    {OpKind::BiasAdd, "BiasAdd"},
    {OpKind::Add, "Add"},
    {OpKind::Mul, "Mul"},
    {OpKind::Div, "Div"},
    {OpKind::Exp, "Exp"},
    {OpKind::LeakyReLU, "LeakyReLU"},
    {OpKind::Sigmoid, "Sigmoid"},
    {OpKind::MaxPool, "MaxPool"},
    {OpKind::Dense, "Dense"},
    {OpKind::Flatten, "Flatten"},
    {OpKind::Softmax, "Softmax"},
}};

[[noreturn]] void shape_fail(const OperatorNode& node, const std::string& what)
{
    throw ShapeError("node '" + node.id + "' (" + std::string(to_string(node.kind)) + "): " + what);
}

void expect_arity(const OperatorNode& node, const std::vector<Shape>& in, std::size_t n)
{
    if (in.size() != n)
        shape_fail(node, "expects " + std::to_string(n) + " input(s), got " + std::to_string(in.size()));
}

const Tensor& require_weight(const OperatorNode& node, const std::string& name, const Shape& expected)
{
    auto* w = node.weight(name);
    if (!w)
        shape_fail(node, "missing weight '" + name + "'");
    if (w->shape() != expected)
        shape_fail(node, "weight '" + name + "' expected shape " + to_string(expected) + ", actual " +
                             to_string(w->shape()));
    return *w;
}

void optional_weight(const OperatorNode& node, const std::string& name, const Shape& expected)
{
    if (node.weight(name))
        require_weight(node, name, expected);
}

void expect_rank3(const OperatorNode& node, const Shape& s)
{
    if (s.size() != 3)
        shape_fail(node, "expects a (C, H, W) input, got " + to_string(s));
}

} // namespace

std::string_view to_string(OpKind kind)
{
    return kind_names[static_cast<std::size_t>(kind)].second;
}

std::optional<OpKind> parse_op_kind(std::string_view name)
{
    for (auto& [k, n] : kind_names)
        if (n == name)
            return k;
    return std::nullopt;
}

const std::vector<OpKind>& all_op_kinds()
{
    static const std::vector<OpKind> kinds = [] {
        std::vector<OpKind> v;
        for (auto& kn : kind_names)
            v.push_back(kn.first);
        return v;
    }();
    return kinds;
}

const Tensor* OperatorNode::weight(const std::string& name) const
{
    auto it = weights.find(name);
    return it == weights.end() ? nullptr : &it->second;
}

Shape infer_shape(const OperatorNode& node, const std::vector<Shape>& in)
{
    const auto& h = node.hyper;
    switch (node.kind) {
    case OpKind::Conv2D: {
        expect_arity(node, in, 1);
        expect_rank3(node, in[0]);
        if (h.kernel < 1 || h.stride < 1)
            shape_fail(node, "kernel and stride must be >= 1");
        if (h.out_channels < 1)
            shape_fail(node, "out_channels must be >= 1");
        require_weight(node, "filter", {h.out_channels, in[0][0], h.kernel, h.kernel});
        optional_weight(node, "bias", {h.out_channels});
        const auto ph = in[0][1] + 2 * h.padding, pw = in[0][2] + 2 * h.padding;
        if (ph < h.kernel || pw < h.kernel)
            shape_fail(node, "kernel " + std::to_string(h.kernel) + " larger than padded input " + to_string(in[0]));
        return {h.out_channels, (ph - h.kernel) / h.stride + 1, (pw - h.kernel) / h.stride + 1};
    }
    case OpKind::BatchNorm: {
        expect_arity(node, in, 1);
        expect_rank3(node, in[0]);
        const Shape per_channel{in[0][0]};
        require_weight(node, "gamma", per_channel);
        require_weight(node, "beta", per_channel);
        require_weight(node, "mean", per_channel);
        auto& var = require_weight(node, "variance", per_channel);
        for (std::size_t c = 0; c < var.size(); ++c)
            if (!(var[c] + h.epsilon > 0.0f))
                shape_fail(node, "variance + epsilon must be positive (channel " + std::to_string(c) + ")");
        return in[0];
    }
    case OpKind::BiasAdd: {
        expect_arity(node, in, 1);
        const auto n = in[0].size() == 3 ? in[0][0] : in[0].back();
        require_weight(node, "bias", {n});
        return in[0];
    }
    case OpKind::Add:
    case OpKind::Mul:
    case OpKind::Div:
        expect_arity(node, in, 2);
        if (in[0] != in[1])
            shape_fail(node, "operand shapes differ: expected " + to_string(in[0]) + ", actual " + to_string(in[1]));
        return in[0];
    case OpKind::LeakyReLU:
        if (!(h.slope > 0.0f && h.slope < 1.0f))
            shape_fail(node, "slope must lie in (0, 1)");
        [[fallthrough]];
    case OpKind::Exp:
    case OpKind::Sigmoid:
    case OpKind::Softmax:
        expect_arity(node, in, 1);
        return in[0];
    case OpKind::MaxPool: {
        expect_arity(node, in, 1);
        expect_rank3(node, in[0]);
        if (h.window < 1 || h.stride < 1)
            shape_fail(node, "window and stride must be >= 1");
        if (in[0][1] < h.window || in[0][2] < h.window)
            shape_fail(node, "window larger than input " + to_string(in[0]));
        return {in[0][0], (in[0][1] - h.window) / h.stride + 1, (in[0][2] - h.window) / h.stride + 1};
    }
    case OpKind::Dense: {
        expect_arity(node, in, 1);
        auto* w = node.weight("weight");
        if (!w || w->rank() != 2)
            shape_fail(node, "missing rank-2 weight 'weight'");
        require_weight(node, "weight", {w->shape()[0], element_count(in[0])});
        optional_weight(node, "bias", {w->shape()[0]});
        return {1, w->shape()[0]};
    }
    case OpKind::Flatten:
        expect_arity(node, in, 1);
        return {1, element_count(in[0])};
    }
    shape_fail(node, "unknown operator kind");
}

Graph Graph::build(std::vector<GraphInput> inputs, std::vector<OperatorNode> nodes, std::vector<std::string> outputs)
{
    Graph g;
    std::map<std::string, std::size_t, std::less<>> input_ids;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!input_ids.emplace(inputs[i].name, i).second)
            throw DataError("duplicate graph input '" + inputs[i].name + "'");
        Tensor probe(inputs[i].shape); // validates extents
    }
    std::map<std::string, std::size_t, std::less<>> decl;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id.empty())
            throw DataError("node with empty id");
        if (input_ids.count(nodes[i].id))
            throw DataError("node id '" + nodes[i].id + "' collides with a graph input");
        if (!decl.emplace(nodes[i].id, i).second)
            throw DataError("duplicate node id '" + nodes[i].id + "'");
    }

    // Kahn's algorithm, ties broken by declaration order.
    std::vector<std::size_t> pending(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> users(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (auto& ref : nodes[i].inputs) {
            if (input_ids.count(ref))
                continue;
            auto it = decl.find(ref);
            if (it == decl.end())
                throw DataError("node '" + nodes[i].id + "' references unknown input '" + ref + "'");
            ++pending[i];
            users[it->second].push_back(i);
        }
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (pending[i] == 0)
            ready.push(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto i = ready.top();
        ready.pop();
        order.push_back(i);
        for (auto u : users[i])
            if (--pending[u] == 0)
                ready.push(u);
    }
    if (order.size() != nodes.size()) {
        std::string stuck;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (pending[i] > 0)
                stuck += (stuck.empty() ? "" : ", ") + nodes[i].id;
        throw DataError("cyclic graph (nodes involved: " + stuck + ")");
    }

    g.inputs_ = std::move(inputs);
    for (auto i : order)
        g.nodes_.push_back(std::move(nodes[i]));
    for (std::size_t i = 0; i < g.nodes_.size(); ++i)
        g.by_id_.emplace(g.nodes_[i].id, i);

    g.sources_.resize(g.nodes_.size());
    g.consumers_.resize(g.nodes_.size());
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
        auto& node = g.nodes_[i];
        std::vector<Shape> in_shapes;
        for (auto& ref : node.inputs) {
            Source src;
            if (auto gi = input_ids.find(ref); gi != input_ids.end()) {
                src = {true, gi->second};
                in_shapes.push_back(g.inputs_[gi->second].shape);
            } else {
                src = {false, g.by_id_.at(ref)};
                in_shapes.push_back(g.nodes_[src.index].output_shape);
                auto& cons = g.consumers_[src.index];
                if (cons.empty() || cons.back() != i)
                    cons.push_back(i);
            }
            g.sources_[i].push_back(src);
        }
        node.output_shape = infer_shape(node, in_shapes);
    }

    if (outputs.empty())
        throw DataError("graph declares no outputs");
    for (auto& o : outputs) {
        auto it = g.by_id_.find(o);
        if (it == g.by_id_.end())
            throw DataError("graph output '" + o + "' is not a node");
        g.output_index_.push_back(it->second);
    }
    g.outputs_ = std::move(outputs);
    return g;
}

const OperatorNode& Graph::node(std::string_view id) const
{
    auto idx = index_of(id);
    if (!idx)
        throw DataError("unknown node id '" + std::string(id) + "'");
    return nodes_[*idx];
}

std::optional<std::size_t> Graph::index_of(std::string_view id) const
{
    auto it = by_id_.find(id);
    if (it == by_id_.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Graph::input_index(std::string_view name) const
{
    for (std::size_t i = 0; i < inputs_.size(); ++i)
        if (inputs_[i].name == name)
            return i;
    return std::nullopt;
}

std::uint64_t Graph::digest() const
{
    std::vector<Tensor> parts;
    auto tag = [&](const std::string& s) {
        std::vector<float> v;
        for (unsigned char ch : s)
            v.push_back(static_cast<float>(ch));
        v.push_back(-1.0f);
        parts.emplace_back(Shape{v.size()}, std::move(v));
    };
    for (auto& in : inputs_)
        tag(in.name + to_string(in.shape));
    for (auto& n : nodes_) {
        tag(n.id);
        tag(std::string(to_string(n.kind)));
        auto& h = n.hyper;
        parts.emplace_back(Shape{7}, std::vector<float>{float(h.kernel), float(h.stride), float(h.padding),
                                                        float(h.out_channels), h.slope, float(h.window), h.epsilon});
        for (auto& ref : n.inputs)
            tag(ref);
        for (auto& [name, w] : n.weights) {
            tag(name);
            parts.push_back(w);
        }
    }
    for (auto& o : outputs_)
        tag(o);
    return fes::digest(parts);
}

// ---- manifest IO ----------------------------------------------------------

namespace {

using nlohmann::json;

Shape parse_shape(const json& j, const std::string& where)
{
    if (!j.is_array() || j.empty())
        throw DataError(where + ": shape must be a non-empty array");
    Shape s;
    for (auto& e : j) {
        if (!e.is_number_integer() || e.get<long long>() < 1)
            throw DataError(where + ": extents must be positive integers");
        s.push_back(e.get<std::size_t>());
    }
    return s;
}

template <typename T>
void read_hyper(const json& hp, const char* key, T& field, const std::string& where)
{
    if (!hp.contains(key))
        return;
    auto& v = hp.at(key);
    if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number())
            throw DataError(where + ": hyperparameter '" + key + "' must be a number");
        field = v.get<T>();
    } else {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw DataError(where + ": hyperparameter '" + key + "' must be a non-negative integer");
        field = v.get<T>();
    }
}

} // namespace

Graph load_model(const std::filesystem::path& manifest_path)
{
    std::ifstream in(manifest_path);
    if (!in)
        throw DataError("cannot open model manifest " + manifest_path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed model manifest " + manifest_path.string() + ": " + e.what());
    }
    const auto base = manifest_path.parent_path();

    try {
        std::vector<GraphInput> inputs;
        for (auto& ji : doc.at("inputs"))
            inputs.push_back({ji.at("name").get<std::string>(), parse_shape(ji.at("shape"), "input")});

        std::vector<OperatorNode> nodes;
        for (auto& jn : doc.at("nodes")) {
            OperatorNode node;
            node.id = jn.at("id").get<std::string>();
            const auto where = "node '" + node.id + "'";
            auto kind_name = jn.at("kind").get<std::string>();
            auto kind = parse_op_kind(kind_name);
            if (!kind)
                throw DataError(where + ": unknown operator kind '" + kind_name + "'");
            node.kind = *kind;
            if (jn.contains("hyperparams")) {
                auto& hp = jn.at("hyperparams");
                read_hyper(hp, "kernel", node.hyper.kernel, where);
                read_hyper(hp, "stride", node.hyper.stride, where);
                read_hyper(hp, "padding", node.hyper.padding, where);
                read_hyper(hp, "out_channels", node.hyper.out_channels, where);
                read_hyper(hp, "slope", node.hyper.slope, where);
                read_hyper(hp, "window", node.hyper.window, where);
                read_hyper(hp, "epsilon", node.hyper.epsilon, where);
            }
            for (auto& ref : jn.at("inputs"))
                node.inputs.push_back(ref.get<std::string>());
            if (jn.contains("weights"))
                for (auto& [wname, jw] : jn.at("weights").items()) {
                    auto shape = parse_shape(jw.at("shape"), where + " weight '" + wname + "'");
                    node.weights.emplace(wname, read_raw(base / jw.at("file").get<std::string>(), shape));
                }
            nodes.push_back(std::move(node));
        }
        std::vector<std::string> outputs;
        for (auto& o : doc.at("outputs"))
            outputs.push_back(o.get<std::string>());
        return Graph::build(std::move(inputs), std::move(nodes), std::move(outputs));
    } catch (const json::exception& e) {
        throw DataError("malformed model manifest " + manifest_path.string() + ": " + e.what());
    }
}

void save_model(const Graph& graph, const std::filesystem::path& dir, const std::string& name)
{
    std::filesystem::create_directories(dir);
    json doc;
    doc["name"] = name;
    doc["inputs"] = json::array();
    for (auto& in : graph.inputs())
        doc["inputs"].push_back({{"name", in.name}, {"shape", in.shape}});
    doc["nodes"] = json::array();
    for (auto& n : graph.nodes()) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = std::string(to_string(n.kind));
        jn["inputs"] = n.inputs;
        json hp = json::object();
        switch (n.kind) {
        case OpKind::Conv2D:
            hp = {{"kernel", n.hyper.kernel}, {"stride", n.hyper.stride}, {"padding", n.hyper.padding},
                  {"out_channels", n.hyper.out_channels}};
            break;
        case OpKind::MaxPool:
            hp = {{"window", n.hyper.window}, {"stride", n.hyper.stride}};
            break;
        case OpKind::LeakyReLU:
            hp = {{"slope", n.hyper.slope}};
            break;
        case OpKind::BatchNorm:
            hp = {{"epsilon", n.hyper.epsilon}};
            break;
        default:
            break;
        }
        jn["hyperparams"] = hp;
        json jw = json::object();
        for (auto& [wname, w] : n.weights) {
            auto file = n.id + "." + wname + ".bin";
            write_raw(dir / file, w);
            jw[wname] = {{"file", file}, {"shape", w.shape()}};
        }
        jn["weights"] = jw;
        doc["nodes"].push_back(jn);
    }
    doc["outputs"] = graph.outputs();
    std::ofstream out(dir / "model.json");
    out << doc.dump(2) << '\n';
    if (!out)
        throw DataError("cannot write " + (dir / "model.json").string());
}

} // namespace fes
