#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>

#include "haibench/causal.hpp"
#include "oracles.hpp"

namespace support {

inline std::string node_name(std::size_t i) { return "V" + std::to_string(i); }

inline haibench::causal::Dag to_dag(const oracle::Graph& g) {
    std::vector<std::string> names;
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t v = 0; v < g.n; ++v) {
        names.push_back(node_name(v));
        for (auto p : g.parents[v]) edges.emplace_back(node_name(p), node_name(v));
    }
    return haibench::causal::Dag(names, edges);
}

inline haibench::causal::DiscreteModel to_model(const oracle::Network& net) {
    std::vector<haibench::causal::Cpt> cpts;
    for (const auto& t : net.cpt) cpts.push_back({t});
    return haibench::causal::DiscreteModel(to_dag(net.g), net.card, cpts);
}

inline haibench::causal::NodeSet names(const std::set<std::size_t>& s) {
    haibench::causal::NodeSet out;
    for (auto v : s) out.insert(node_name(v));
    return out;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("haibench-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace support
