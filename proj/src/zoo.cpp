#include "fes/zoo.hpp"

#include <cmath>

namespace fes::zoo {

Tensor random_tensor(const Shape& shape, Rng& rng, float lo, float hi)
{
    Tensor t(shape);
    for (auto& v : t.data())
        v = static_cast<float>(uniform_real(rng, lo, hi));
    return t;
}

namespace {

struct Builder {
    Rng rng;
    std::vector<OperatorNode> nodes;
    std::string last = "image";

    explicit Builder(std::uint64_t seed) : rng(seed) {}

    OperatorNode& push(std::string id, OpKind kind)
    {
        OperatorNode n;
        n.id = std::move(id);
        n.kind = kind;
        n.inputs = {last};
        last = n.id;
        nodes.push_back(std::move(n));
        return nodes.back();
    }

    // Glorot-style uniform bound.
    Tensor init(const Shape& shape, std::size_t fan_in, std::size_t fan_out)
    {
        const float a = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
        return random_tensor(shape, rng, -a, a);
    }

    void conv(std::string id, std::size_t cin, std::size_t cout, std::size_t k)
    {
        auto filter = init({cout, cin, k, k}, cin * k * k, cout * k * k);
        auto bias = random_tensor({cout}, rng, -0.05f, 0.05f);
        auto& n = push(std::move(id), OpKind::Conv2D);
        n.hyper.kernel = k;
        n.hyper.out_channels = cout;
        n.weights.emplace("filter", std::move(filter));
        n.weights.emplace("bias", std::move(bias));
    }

    void dense(std::string id, std::size_t in, std::size_t out)
    {
        auto w = init({out, in}, in, out);
        auto bias = random_tensor({out}, rng, -0.05f, 0.05f);
        auto& n = push(std::move(id), OpKind::Dense);
        n.weights.emplace("weight", std::move(w));
        n.weights.emplace("bias", std::move(bias));
    }

    void relu(std::string id) { push(std::move(id), OpKind::LeakyReLU).hyper.slope = 0.01f; }

    void pool(std::string id)
    {
        auto& n = push(std::move(id), OpKind::MaxPool);
        n.hyper.window = 2;
        n.hyper.stride = 2;
    }

    Graph finish() { return Graph::build({{"image", {1, 32, 32}}}, std::move(nodes), {last}); }
};

} // namespace

Graph lenet5(std::uint64_t seed)
{
    Builder b(seed);
    b.conv("conv1", 1, 6, 5);
    b.relu("relu1");
    b.pool("pool1");
    b.conv("conv2", 6, 16, 5);
    b.relu("relu2");
    b.pool("pool2");
    b.push("flatten", OpKind::Flatten);
    b.dense("fc1", 16 * 5 * 5, 120);
    b.relu("relu3");
    b.dense("fc2", 120, 84);
    b.relu("relu4");
    b.dense("fc3", 84, 10);
    b.push("softmax", OpKind::Softmax);
    return b.finish();
}

Graph lenet_small(std::uint64_t seed)
{
    Builder b(seed);
    b.conv("conv1", 1, 6, 5);
    b.pool("pool1");
    b.conv("conv2", 6, 16, 5);
    b.pool("pool2");
    b.push("flatten", OpKind::Flatten);
    b.dense("fc", 16 * 5 * 5, 10);
    b.push("softmax", OpKind::Softmax);
    return b.finish();
}

Graph relu_add(const Shape& shape)
{
    OperatorNode relu;
    relu.id = "relu";
    relu.kind = OpKind::LeakyReLU;
    relu.inputs = {"x"};
    OperatorNode sum;
    sum.id = "sum";
    sum.kind = OpKind::Add;
    sum.inputs = {"relu", "x"};
    return Graph::build({{"x", shape}}, {relu, sum}, {"sum"});
}

Tensor random_input(const Graph& graph, std::uint64_t seed)
{
    Rng rng(seed);
    return random_tensor(graph.inputs().at(0).shape, rng, 0.0f, 1.0f);
}

} // namespace fes::zoo
