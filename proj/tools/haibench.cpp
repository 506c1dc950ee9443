#include <csignal>
#include <thread>

#include <pthread.h>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "haibench/benchmark.hpp"
#include "haibench/causal.hpp"
#include "haibench/error.hpp"
#include "haibench/report.hpp"
#include "haibench/service.hpp"

namespace fs = std::filesystem;
using namespace haibench;
using namespace haibench::harness;

namespace {

int fail(const std::string& kind, const std::string& message) {
    std::cerr << Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << std::endl;
    return kind == "usage" ? 2 : 1;
}

void emit(const Json& j, const std::string& out) {
    if (out.empty() || out == "-") std::cout << dump(j);
    else write_text(out, dump(j));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-automation interaction benchmark harness", "haibench"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    auto* run = app.add_subcommand("run", "Run every level x schedule x agent cell and write reports");
    run->add_option("config", config_path, "Benchmark config file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the master seed");
    run->add_option("--out", out_dir, "Output directory");

    std::vector<std::string> logs;
    std::string score_config, score_out;
    auto* score = app.add_subcommand("score", "Score existing event logs");
    score->add_option("logs", logs, "Event log files")->required()->check(CLI::ExistingFile);
    score->add_option("--config", score_config, "Benchmark config (metric selection and coefficients)")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("-o,--output", score_out, "Write the report here instead of stdout");

    std::string report_a, report_b, compare_out;
    auto* compare = app.add_subcommand("compare", "Compare two cell reports");
    compare->add_option("a", report_a, "Baseline report")->required()->check(CLI::ExistingFile);
    compare->add_option("b", report_b, "Comparison report")->required()->check(CLI::ExistingFile);
    compare->add_option("-o,--output", compare_out, "Write the comparison here instead of stdout");

    std::string bind = "127.0.0.1:8080", serve_config;
    std::optional<std::string> serve_out;
    auto* serve = app.add_subcommand("serve", "Serve live trials over HTTP");
    serve->add_option("--bind", bind, "host:port")->capture_default_str();
    serve->add_option("--config", serve_config, "Benchmark config")->required()->check(CLI::ExistingFile);
    serve->add_option("--out", serve_out, "Output directory for completed sessions");

    std::string model_path, query_path, causal_out;
    auto* causal_cmd = app.add_subcommand("causal", "Evaluate causal queries against a discrete model");
    causal_cmd->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    causal_cmd->add_option("query", query_path, "Query file")->required()->check(CLI::ExistingFile);
    causal_cmd->add_option("-o,--output", causal_out, "Write results here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*run) {
            auto config = load_config(config_path);
            if (seed) config.seed = *seed;
            const auto dir = resolve_output_dir(config, out_dir);
            auto summary = run_benchmark(config, dir);
            std::cout << Json{{"output_dir", dir.generic_string()},
                              {"fingerprint", summary.at("fingerprint")},
                              {"cells", summary.at("cells").size()}}
                             .dump()
                      << std::endl;
        } else if (*score) {
            auto config = load_config(score_config);
            std::vector<fs::path> paths(logs.begin(), logs.end());
            emit(score_logs(paths, config), score_out);
        } else if (*compare) {
            emit(compare_designs(read_json(report_a), read_json(report_b)), compare_out);
        } else if (*serve) {
            auto config = load_config(serve_config);
            const auto colon = bind.rfind(':');
            if (colon == std::string::npos) return fail("usage", "--bind expects host:port");
            const auto host = bind.substr(0, colon);
            int port = 0;
            try {
                port = std::stoi(bind.substr(colon + 1));
            } catch (const std::exception&) {
                return fail("usage", "bad port in --bind");
            }
            // Block the stop signals in every thread, then wait for one here.
            sigset_t stop_signals;
            sigemptyset(&stop_signals);
            sigaddset(&stop_signals, SIGINT);
            sigaddset(&stop_signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

            SessionService service(config, resolve_output_dir(config, serve_out));
            HttpFrontend frontend(service);
            const int bound = frontend.bind(host, port);
            std::cerr << Json{{"listening", host + ":" + std::to_string(bound)}}.dump() << std::endl;
            std::thread server([&] { frontend.listen(); });
            int sig = 0;
            sigwait(&stop_signals, &sig);
            frontend.stop();
            server.join();
        } else if (*causal_cmd) {
            auto model = causal::model_from_json(read_json(model_path));
            emit(causal::run_queries(model, read_json(query_path)), causal_out);
        }
    } catch (const InvalidInput& e) {
        return fail("invalid_input", e.what());
    } catch (const Undefined& e) {
        return fail("undefined", e.what());
    } catch (const Error& e) {
        return fail("error", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
