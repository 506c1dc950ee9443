#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "haibench/benchmark.hpp"
#include "haibench/error.hpp"
#include "haibench/service.hpp"
#include "support.hpp"

using namespace haibench;
using namespace haibench::harness;
namespace fs = std::filesystem;

namespace {

BenchmarkConfig small_config(std::int64_t sessions = 10, std::int64_t trials = 12) {
    return config_from_json(Json{{"seed", 42},
                                 {"sessions_per_cell", sessions},
                                 {"trials_per_session", trials},
                                 {"levels", {"information", "low_decision", "medium_decision", "high_decision"}},
                                 {"schedules", {{{"name", "perfect"}, {"rate", 1.0}}, {{"name", "r70"}, {"rate", 0.7}}}},
                                 {"agents", {{{"kind", "compliant"}}, {{"kind", "manual"}}}},
                                 {"inventory",
                                  {{"front_end", {{{"id", "map"}}, {{"id", "panel"}}}},
                                   {"back_end", {{{"id", "ranker"}, {"provides_feedback", true}}}}}}});
}

Json read_file_json(const fs::path& p) { return read_json(p); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const Json& cell_of(const Json& summary, const std::string& name) {
    for (const auto& c : summary.at("cells"))
        if (c.at("cell").at("name") == name) return c;
    FAIL("no cell " << name);
    return summary;
}

}  // namespace

TEST_CASE("config defaults and validation") {
    auto c = config_from_json(Json{{"seed", 7}});
    CHECK(c.levels.size() == 1);
    CHECK(c.schedules.front().rate == 1.0);
    CHECK(c.agents.front().kind == sim::AgentKind::compliant);
    CHECK(c.metrics == metric_catalogue());

    CHECK_THROWS_AS(config_from_json(Json::object()), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"seed", "x"}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"seed", 1}, {"sead", 2}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"seed", 1}, {"levels", {"low_decision", "low_decision"}}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"seed", 1}, {"levels", Json::array()}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"seed", 1}, {"metrics", {"accuracy", "nonsense"}}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"seed", 1}, {"schedules", {{{"name", "x"}, {"rate", 1.5}}}}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(Json{{"seed", 1}, {"agents", {{{"kind", "psychic"}}}}}), InvalidInput);

    auto sel = config_from_json(Json{{"seed", 1}, {"metrics", {{"select", {"sdt", "accuracy"}}, {"coefficients", {{"alpha", 2.0}}}}}});
    CHECK(sel.metrics == std::vector<std::string>{"accuracy", "sdt"});
    CHECK(sel.coefficients.alpha == 2.0);
}

TEST_CASE("config fingerprint") {
    auto a = config_from_json(Json{{"seed", 1}});
    auto b = config_from_json(Json{{"seed", 1}, {"output_dir", "elsewhere"}});
    auto c = config_from_json(Json{{"seed", 2}});
    auto d = config_from_json(Json{{"seed", 1}, {"metrics", {{"select", "all"}, {"coefficients", {{"beta", 3.0}}}}}});
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    CHECK(config_fingerprint(a) != config_fingerprint(c));
    CHECK(config_fingerprint(a) != config_fingerprint(d));
    CHECK(config_fingerprint(a).size() == 64);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("default config loads") {
    auto c = load_config(fs::path(HAIBENCH_SOURCE_DIR) / "configs" / "default.json");
    CHECK(c.levels.size() == 5);
    CHECK(c.causal.size() == 1);
    CHECK(c.causal.front().model.contains("nodes"));
    auto jobs = run_causal_jobs(c);
    CHECK(jobs.at(0).at("results").is_array());
}

TEST_CASE("output directory precedence") {
    auto c = config_from_json(Json{{"seed", 1}, {"output_dir", "from-config"}});
    ::unsetenv(kOutputDirEnv);
    CHECK(resolve_output_dir(c) == fs::path("from-config"));
    ::setenv(kOutputDirEnv, "from-env", 1);
    CHECK(resolve_output_dir(c) == fs::path("from-env"));
    CHECK(resolve_output_dir(c, std::string("from-cli")) == fs::path("from-cli"));
    ::unsetenv(kOutputDirEnv);
}

TEST_CASE("benchmark run over a design grid") {
    support::TempDir dir("run");
    auto config = small_config();
    auto summary = run_benchmark(config, dir.path);

    CHECK(summary.at("cells").size() == 16);
    std::size_t logs = 0, keys = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir.path / "logs")) {
        const auto name = e.path().filename().string();
        if (name.ends_with(".key.json")) ++keys;
        else if (name.ends_with(".jsonl")) ++logs;
    }
    CHECK(logs == 160);
    CHECK(keys == 160);
    CHECK(fs::exists(dir.path / "summary.json"));
    CHECK(fs::exists(dir.path / "summary.csv"));
    CHECK(read_file_json(dir.path / "summary.json") == summary);

    for (const char* level : {"low_decision", "medium_decision", "high_decision"}) {
        const auto& agg = cell_of(summary, std::string(level) + "__perfect__compliant").at("aggregate");
        CHECK(agg.at("accuracy").at("mean").get<double>() == 1.0);
        CHECK(agg.at("accuracy").at("n").get<int>() == 10);
    }

    SUBCASE("compare") {
        auto info = read_file_json(dir.path / "cells" / "information__perfect__compliant.json");
        auto high = read_file_json(dir.path / "cells" / "high_decision__perfect__compliant.json");
        auto same = compare_designs(info, info);
        CHECK(same.at("summary").at("increased") == 0);
        CHECK(same.at("summary").at("decreased") == 0);
        auto diff = compare_designs(info, high);
        bool found = false;
        for (const auto& row : diff.at("rows"))
            if (row.at("field") == "rt.mean_ms") {
                found = true;
                CHECK(row.at("sign") == "-");
                CHECK(row.at("delta").get<double>() < 0);
            }
        CHECK(found);
        auto trimmed = high;
        trimmed["metrics"] = {"accuracy"};
        CHECK_THROWS_WITH_AS(compare_designs(info, trimmed), doctest::Contains("metric sets differ"), InvalidInput);
    }

    SUBCASE("rescoring logs matches the run") {
        const auto cell = read_file_json(dir.path / "cells" / "medium_decision__r70__compliant.json");
        std::vector<fs::path> paths;
        for (const auto& s : cell.at("sessions")) paths.push_back(dir.path / s.at("log").get<std::string>());
        auto scored = score_logs(paths, config);
        REQUIRE(scored.at("sessions").size() == cell.at("sessions").size());
        for (std::size_t i = 0; i < paths.size(); ++i)
            CHECK(scored.at("sessions")[i].at("values") == cell.at("sessions")[i].at("values"));
        CHECK(scored.at("aggregate") == cell.at("aggregate"));
    }
}

TEST_CASE("benchmark runs are reproducible") {
    support::TempDir a("rep-a"), b("rep-b");
    auto config = small_config(3, 8);
    run_benchmark(config, a.path);
    run_benchmark(config, b.path);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a.path)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a.path);
        CHECK(slurp(e.path()) == slurp(b.path / rel));
        ++files;
    }
    CHECK(files > 16);

    auto other = config;
    other.seed = 43;
    support::TempDir c("rep-c");
    run_benchmark(other, c.path);
    CHECK(slurp(a.path / "summary.json") != slurp(c.path / "summary.json"));
}

TEST_CASE("scoring without a key reports per-field errors") {
    support::TempDir dir("nokey");
    auto config = small_config(1, 6);
    config.levels = {sim::AutomationLevel::high_decision};
    config.schedules = {config.schedules.front()};
    config.agents = {config.agents.front()};
    run_benchmark(config, dir.path);
    fs::path log;
    for (const auto& e : fs::recursive_directory_iterator(dir.path / "logs"))
        if (e.path().string().ends_with(".jsonl")) log = e.path();
    fs::remove(key_path_for(log));
    auto report = score_logs({log}, config);
    const auto& v = report.at("sessions")[0].at("values");
    CHECK(v.at("accuracy").contains("error"));
    CHECK(v.at("rt.mean_ms").is_number());
    CHECK_THROWS_AS(score_logs({}, config), InvalidInput);
}

// ---------------------------------------------------------------------------

namespace {

struct ServiceFixture {
    support::TempDir dir{"svc"};
    Millis now = 0;
    BenchmarkConfig config = config_from_json(Json{{"seed", 5},
                                                   {"levels", {"high_decision", "information", "none"}},
                                                   {"service", {{"tolerance_ms", 2000}}},
                                                   {"inventory",
                                                    {{"front_end", {{{"id", "map"}}}},
                                                     {"back_end", {{{"id", "ranker"}, {"provides_feedback", true}}}}}}});
    SessionService service{config, dir.path, [this] { return now; }};

    ServiceResponse post(const std::string& path, const Json& body) { return service.handle("POST", path, body.dump()); }
    ServiceResponse get(const std::string& path) { return service.handle("GET", path, ""); }

    static Json decide(Millis t, std::int64_t trial, const Json& option) {
        return {{"t", t},
                {"trial", trial},
                {"kind", "operator_action"},
                {"payload", {{"action", "decide"}, {"enemy", option.at("enemy")}, {"friendly", option.at("friendly")}}}};
    }
};

}  // namespace

TEST_CASE_FIXTURE(ServiceFixture, "service session lifecycle") {
    auto created = post("/sessions", {{"level", "high_decision"}, {"trials", 3}});
    REQUIRE(created.status == 201);
    const auto id = created.body.at("session_id").get<std::string>();
    const auto& first = created.body.at("trial");
    CHECK(first.at("n") == 1);
    CHECK(first.at("scenario").at("enemies").size() == 5);
    CHECK(first.at("advice").at("level") == "high_decision");
    CHECK(first.at("advice").at("options")[0].at("rank") == 1);

    for (std::int64_t n = 1; n <= 3; ++n) {
        auto view = get("/sessions/" + id + "/trials/" + std::to_string(n));
        REQUIRE(view.status == 200);
        // Repeated fetches return the same stamped view.
        CHECK(get("/sessions/" + id + "/trials/" + std::to_string(n)).body == view.body);
        const Millis t = n * 1000;
        now = t + 300;
        auto r = post("/sessions/" + id + "/events", decide(t, n, view.body.at("advice").at("options")[0]));
        REQUIRE(r.status == 200);
        CHECK(r.body.at("responses")[0].at("latency_ms") == 300);
        auto probe = post("/sessions/" + id + "/events",
                          {{"t", t + 700}, {"trial", n}, {"kind", "operator_action"},
                           {"payload", {{"action", "probe_response"}, {"correct", true}}}});
        CHECK(probe.status == 200);
    }

    SUBCASE("rejections") {
        auto regress = post("/sessions/" + id + "/events",
                            {{"t", 2900}, {"trial", 3}, {"kind", "operator_action"}, {"payload", {{"action", "inspect"}}}});
        CHECK(regress.status == 422);
        CHECK(regress.body.at("error").at("message").get<std::string>().find("timestamp regression") != std::string::npos);

        auto drift = post("/sessions/" + id + "/events",
                          {{"t", now + 5000}, {"trial", 3}, {"kind", "operator_action"}, {"payload", {{"action", "inspect"}}}});
        CHECK(drift.status == 422);

        auto server_kind = post("/sessions/" + id + "/events",
                                {{"t", now}, {"trial", 3}, {"kind", "feedback"}, {"payload", Json::object()}});
        CHECK(server_kind.status == 422);

        auto twice = post("/sessions/" + id + "/events", decide(now, 3, Json{{"enemy", "E1"}, {"friendly", "F1"}}));
        CHECK(twice.status == 422);

        CHECK(service.handle("POST", "/sessions/" + id + "/events", "{not json").status == 400);
        CHECK(get("/sessions/nobody/trials/1").status == 404);
        CHECK(get("/sessions/" + id + "/trials/4").status == 404);
        CHECK(post("/sessions/" + id + "/questionnaire", {{"items", {{{"name", "workload"}, {"value", 9}}}}}).status == 422);
        CHECK(service.handle("DELETE", "/sessions", "").status == 405);
        CHECK(post("/sessions", {{"schedule", "missing"}}).status == 422);

        // A rejected batch leaves the session untouched.
        const Millis t = now;
        auto batch = post("/sessions/" + id + "/events",
                          Json{{"events",
                                {{{"t", t}, {"trial", 3}, {"kind", "operator_action"}, {"payload", {{"action", "inspect"}}}},
                                 {{"t", t - 10}, {"trial", 3}, {"kind", "operator_action"}, {"payload", {{"action", "inspect"}}}}}}});
        CHECK(batch.status == 422);
    }

    SUBCASE("complete and score") {
        CHECK(post("/sessions/" + id + "/questionnaire",
                   {{"items", {{{"name", "workload"}, {"value", 3}}, {{"name", "trust"}, {"value", 6}},
                               {{"name", "self_confidence"}, {"value", 5}}, {{"name", "clarity"}, {"value", 6}}}}})
                  .status == 200);
        auto done = post("/sessions/" + id + "/complete", Json::object());
        REQUIRE(done.status == 200);
        CHECK(done.body.at("decided") == 3);
        CHECK(done.body.at("abandoned").empty());
        CHECK(post("/sessions/" + id + "/complete", Json::object()).status == 409);
        CHECK(post("/sessions/" + id + "/events", decide(now, 1, Json{{"enemy", "E1"}, {"friendly", "F1"}})).status == 409);

        auto report = score_logs({done.body.at("path").get<std::string>()}, config);
        const auto& v = report.at("sessions")[0].at("values");
        CHECK(v.at("ol.mean_ms") == 300.0);
        CHECK(v.at("ol.max_ms") == 300.0);
        CHECK(v.at("accuracy").is_number());
        CHECK(v.at("secondary.accuracy") == 1.0);
        CHECK(v.at("questionnaire.trust") == 6.0);
        CHECK(v.at("wsaf.raw") == 0.0);
        CHECK(v.at("sdt.score").is_object() == v.at("sdt.d_prime").is_object());
    }
}

TEST_CASE_FIXTURE(ServiceFixture, "service records unanswered trials as abandoned") {
    auto created = post("/sessions", {{"level", "none"}, {"trials", 4}});
    REQUIRE(created.status == 201);
    const auto id = created.body.at("session_id").get<std::string>();
    CHECK(created.body.at("trial").at("advice").is_null());
    now = 500;
    get("/sessions/" + id + "/trials/2");
    auto done = post("/sessions/" + id + "/complete", Json::object());
    REQUIRE(done.status == 200);
    CHECK(done.body.at("abandoned") == Json{1, 2});
    auto log = ingest_log(slurp(done.body.at("path").get<std::string>()));
    CHECK(log.abandoned == std::vector<TrialId>{1, 2});
}

TEST_CASE_FIXTURE(ServiceFixture, "service sessions are distinct and seeded") {
    auto a = post("/sessions", {{"level", "information"}});
    auto b = post("/sessions", {{"level", "information"}});
    CHECK(a.body.at("session_id") != b.body.at("session_id"));
    CHECK(a.body.at("trial").at("scenario") != b.body.at("trial").at("scenario"));
    CHECK(a.body.at("trial").at("advice").at("options")[0].contains("rank") == false);

    ServiceFixture again;
    auto c = again.post("/sessions", {{"level", "information"}});
    CHECK(c.body.at("trial").at("scenario") == a.body.at("trial").at("scenario"));
}

TEST_CASE("http front end") {
    support::TempDir dir("http");
    SessionService service(config_from_json(Json{{"seed", 9}, {"levels", {"medium_decision"}}}), dir.path);
    HttpFrontend front(service);
    const int port = front.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread server([&] { front.listen(); });

    httplib::Client cli("127.0.0.1", port);
    httplib::Result res;
    for (int attempt = 0; attempt < 100 && !res; ++attempt) {
        res = cli.Post("/sessions", R"({"trials": 2})", "application/json");
        if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    auto body = Json::parse(res->body);
    const auto id = body.at("session_id").get<std::string>();

    auto trial = cli.Get("/sessions/" + id + "/trials/2");
    REQUIRE(trial);
    CHECK(trial->status == 200);
    CHECK(Json::parse(trial->body).at("advice").at("level") == "medium_decision");

    auto bad = cli.Post("/sessions/" + id + "/events", "[", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(Json::parse(bad->body).at("error").at("status") == 400);

    auto done = cli.Post("/sessions/" + id + "/complete", "", "application/json");
    REQUIRE(done);
    CHECK(done->status == 200);
    CHECK(fs::exists(Json::parse(done->body).at("path").get<std::string>()));

    front.stop();
    server.join();
}
