// Writes a seeded reference model, input images and a campaign config.
#include "fes/zoo.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Write a reference model with inputs and a campaign config", "fes_mkzoo"};
    std::string out, model = "lenet5";
    std::uint64_t seed = 1;
    std::size_t inputs = 1, experiments = 1000;
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--model", model, "lenet5 or lenet_small")
        ->check(CLI::IsMember({"lenet5", "lenet_small"}))
        ->capture_default_str();
    app.add_option("--seed", seed, "Weight and input seed")->capture_default_str();
    app.add_option("--inputs", inputs, "Number of input images")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--experiments", experiments, "Experiments in the generated config")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        namespace fs = std::filesystem;
        auto graph = model == "lenet5" ? fes::zoo::lenet5(seed) : fes::zoo::lenet_small(seed);
        fs::create_directories(out);
        fes::save_model(graph, out, "model");
        nlohmann::json files = nlohmann::json::array();
        for (std::size_t i = 0; i < inputs; ++i) {
            auto name = "input" + std::to_string(i) + ".bin";
            fes::write_raw(fs::path(out) / name, fes::zoo::random_input(graph, fes::derive_seed(seed, 1000 + i)));
            files.push_back(name);
        }
        std::ofstream cfg(fs::path(out) / "campaign.json");
        cfg << nlohmann::json{{"experiments", experiments},
                              {"seed", seed},
                              {"model", "model.json"},
                              {"inputs", files},
                              {"fallback", true},
                              {"classifier", "top1"}}
                   .dump(2)
            << '\n';
        std::cout << "wrote " << graph.nodes().size() << "-node " << model << " to " << out << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
