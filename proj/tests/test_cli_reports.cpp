#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "geoflow/errors.hpp"
#include "geoflow/scene.hpp"

using namespace geoflow;
using nlohmann::json;

namespace {

json minimal_scene() {
    return json::parse(R"json({
      "schema_version": 1,
      "name": "minimal",
      "seed": 3,
      "samples": 16,
      "charts": [{"name": "torus", "dim": 2, "box": [0, 6.283185307179586], "periods": [true, true]}],
      "metrics": [{"name": "g", "chart": "torus", "diagonal": ["1", "1"]}],
      "vector_fields": [{"name": "v", "chart": "torus", "components": ["sin(x1)", "cos(x0)"]}],
      "tasks": [{"kind": "identities", "metric": "g", "field": "v"}]
    })json");
}

std::string load_error(const json& doc) {
    try {
        parse_scene(doc);
    } catch (const SceneError& e) {
        return e.what();
    }
    return "";
}

std::string error_where(const json& doc) {
    try {
        parse_scene(doc);
    } catch (const SceneError& e) {
        return e.where();
    }
    return "<no error>";
}

/// Random smooth positive metric and field on the 2-torus as expression strings.
json random_torus_scene(std::mt19937_64& rng, int tasks) {
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    auto coef = [&] {
        std::ostringstream s;
        s.precision(6);
        s << u(rng);
        return s.str();
    };
    json s = minimal_scene();
    s["metrics"] = json::array();
    s["vector_fields"] = json::array();
    s["tasks"] = json::array();
    for (int i = 0; i < tasks; ++i) {
        const std::string a = "2 + " + coef() + "*sin(x0) + " + coef() + "*cos(x1)";
        const std::string b = "2 + " + coef() + "*cos(x0 + x1)";
        const std::string c = coef() + "*sin(x0 - x1)";
        s["metrics"].push_back({{"name", "g" + std::to_string(i)}, {"chart", "torus"}, {"components", json::array({json::array({a, c}), json::array({c, b})})}});
        s["vector_fields"].push_back({{"name", "v" + std::to_string(i)},
                                      {"chart", "torus"},
                                      {"components", {coef() + "*sin(x1) + 0.3", coef() + "*cos(2*x0)"}}});
        s["tasks"].push_back({{"kind", "identities"}, {"metric", "g" + std::to_string(i)}, {"field", "v" + std::to_string(i)}});
    }
    return s;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GEOFLOW_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("geoflow_test_" + std::to_string(::getpid()) + "_" + name)).string();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

const json& quantity(const json& task, const std::string& prefix) {
    for (const auto& q : task["statistics"]["quantities"])
        if (q["name"].get<std::string>().rfind(prefix, 0) == 0) return q;
    throw std::runtime_error("missing quantity " + prefix);
}

}  // namespace

TEST_CASE("minimal scene loads and its identity task passes with residuals reported") {
    const SceneConfig s = parse_scene(minimal_scene());
    CHECK(s.charts.size() == 1);
    CHECK(s.tasks.size() == 1);
    CHECK(s.tasks[0].kind == TaskKind::Identities);
    const json r = run_tasks(s);
    const json& t = r["tasks"][0];
    CHECK(t["verdict"] == "pass");
    for (const char* n : {"trace_lie2", "weitzenbock", "bianchi"}) {
        REQUIRE(t["statistics"].contains(n));
        CHECK(t["statistics"][n]["max"].get<double>() < 1e-8);
        CHECK(t["statistics"][n]["mean"].get<double>() <= t["statistics"][n]["max"].get<double>());
    }
    CHECK_FALSE(t["statistics"].contains("div_lie"));
    CHECK(r["summary"]["pass"] == 1);
    CHECK(r["provenance"]["seed"] == 3);
    CHECK(r["provenance"]["samples"] == 16);
}

TEST_CASE("misspelled metric reference is a dangling reference at the task") {
    json doc = minimal_scene();
    doc["tasks"][0]["metric"] = "gg";
    const std::string msg = load_error(doc);
    CHECK(msg.find("dangling reference at /tasks/0/metric") != std::string::npos);
    CHECK(msg.find("'gg'") != std::string::npos);
    CHECK(error_where(doc) == "/tasks/0/metric");
}

TEST_CASE("expression parse errors carry the JSON location and the character position") {
    json doc = minimal_scene();
    doc["vector_fields"][0]["components"][1] = "cos(x0";
    const std::string msg = load_error(doc);
    CHECK(msg.find("parse error at /vector_fields/0/components/1") != std::string::npos);
    CHECK(msg.find("position") != std::string::npos);

    doc = minimal_scene();
    doc["metrics"][0]["diagonal"][0] = "1 + q";
    CHECK(error_where(doc) == "/metrics/0/diagonal/0");
}

TEST_CASE("schema violations are located by JSON pointer") {
    auto where = [](auto&& edit) {
        json doc = minimal_scene();
        edit(doc);
        return error_where(doc);
    };
    CHECK(where([](json& d) { d["bogus"] = 1; }) == "/bogus");
    CHECK(where([](json& d) { d.erase("schema_version"); }) == "");
    CHECK(where([](json& d) { d["schema_version"] = 2; }) == "/schema_version");
    CHECK(where([](json& d) { d["samples"] = "many"; }) == "/samples");
    CHECK(where([](json& d) { d["samples"] = 1; }) == "/samples");
    CHECK(where([](json& d) { d["tolerances"] = {{"identity", -1}}; }) == "/tolerances/identity");
    CHECK(where([](json& d) { d["charts"][0]["box"] = {1, 0}; }) == "/charts/0/box");
    CHECK(where([](json& d) { d["charts"][0]["periods"] = {true}; }) == "/charts/0/periods");
    CHECK(where([](json& d) { d["metrics"][0]["diagonal"] = {"1"}; }) == "/metrics/0/diagonal");
    CHECK(where([](json& d) { d["metrics"][0]["signature"] = 3; }) == "/metrics/0/signature");
    CHECK(where([](json& d) { d["metrics"][0]["chart"] = "plane"; }) == "/metrics/0/chart");
    CHECK(where([](json& d) { d["metrics"][0]["components"] = json::array({json::array({"1", "0"}), json::array({"0", "1"})}); }) ==
          "/metrics/0");
    CHECK(where([](json& d) {
              d["metrics"][0].erase("diagonal");
              d["metrics"][0]["components"] = json::array({json::array({"1", "0.1"}), json::array({"0.2", "1"})});
          }) == "/metrics/0/components/0/1");
    CHECK(where([](json& d) { d["vector_fields"][0]["name"] = "g"; }) == "/vector_fields/0/name");
    CHECK(where([](json& d) { d["tasks"][0]["kind"] = "integrate"; }) == "/tasks/0/kind");
    CHECK(where([](json& d) { d["tasks"][0].erase("field"); }) == "/tasks/0");
    CHECK(where([](json& d) { d["tasks"][0]["extra"] = true; }) == "/tasks/0/extra");
    CHECK(where([](json& d) { d["tasks"][0]["identities"] = {"bianchi", "jacobi"}; }) == "/tasks/0/identities/1");
    CHECK(where([](json& d) { d["tasks"][0]["identities"] = {"bochner"}; }) == "/tasks/0/identities/0");
    CHECK(where([](json& d) { d["tasks"] = json::object(); }) == "/tasks");
    CHECK(where([](json& d) { d["tasks"][0] = {{"kind", "example"}, {"id", "4.9"}}; }) == "/tasks/0/id");
    CHECK(where([](json& d) {
              d["tasks"][0] = {{"kind", "flow_grid"}, {"metric", "g"}, {"points", 8}, {"dt", 0.01}, {"final_time", 0.1}};
          }) == "/tasks/0/points");
    CHECK(where([](json& d) {
              d["tasks"][0] = {{"kind", "flow_family"}, {"metric", "g"}, {"field", "v"}, {"constants", {{"lambda", 1}}}};
          }) == "/tasks/0/constants");
}

TEST_CASE("chart mismatch between metric and field is rejected") {
    json doc = minimal_scene();
    doc["charts"].push_back({{"name", "plane"}, {"dim", 2}, {"box", {-1, 1}}});
    doc["vector_fields"][0]["chart"] = "plane";
    CHECK(error_where(doc) == "/tasks/0/field");
}

TEST_CASE("load_scene reports unreadable and malformed files") {
    CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), SceneError);
    const std::string path = temp_path("bad.json");
    write_file(path, "{\"schema_version\": 1,");
    try {
        load_scene(path);
        FAIL("expected an error");
    } catch (const SceneError& e) {
        CHECK(std::string(e.what()).find("invalid JSON") != std::string::npos);
    }
    write_file(path, minimal_scene().dump());
    CHECK(load_scene(path).tasks.size() == 1);
    std::filesystem::remove(path);
}

TEST_CASE("scene with products builds products eagerly and parses warps in product coordinates") {
    const SceneConfig s = parse_scene(bundled_example("4.3"));
    const ProductSpec& rw = s.products.at("rw");
    CHECK(rw.kind() == ProductKind::Warped);
    CHECK(rw.metric().signature() == 1);
    CHECK(rw.factor_dim(0) == 1);
    CHECK(rw.factor_dim(1) == 3);
    CHECK(rw.chart()->coordinate_names() == std::vector<std::string>{"t", "x", "y", "z"});
    const std::vector<double> p{0.2, 0.1, -0.3, 0.4};
    CHECK(rw.scale(1).evaluate(p) == doctest::Approx(std::exp(0.5)).epsilon(1e-14));

    json bad = bundled_example("4.3");
    bad["products"][0]["warps"] = {"exp(t + w)"};
    CHECK(error_where(bad) == "/products/0/warps/0");
    bad = bundled_example("4.3");
    bad["products"][0]["warps"] = {"x - 5"};
    CHECK(error_where(bad) == "/products/0/warps");
    bad = bundled_example("4.3");
    bad["products"][0]["factors"] = {"time"};
    CHECK(error_where(bad) == "/products/0/factors");
}

TEST_CASE("Robertson-Walker example: interval factor constancy passes with 12 c1^2") {
    const json r = run_tasks(parse_scene(bundled_example("4.3")));
    const json& t = r["tasks"][0];
    CHECK(t["verdict"] == "pass");
    CHECK(t["product"]["lorentzian"] == true);
    const json& q = quantity(t, "rbar - r_0");
    CHECK(q["mean"].get<double>() == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(q["constant"] == true);
    // signed values from Lap f = -f'' on (I, -dt^2) and the absolute values c1^2
    const json& w = t["statistics"]["warping"];
    CHECK(w["laplacian_over_f"]["mean"].get<double>() == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(w["abs_laplacian_over_f"]["mean"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w["grad_norm2_over_f2"]["mean"].get<double>() == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(w["abs_grad_norm2_over_f2"]["mean"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w["scalar_curvature"]["value"]["mean"].get<double>() == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(r["tasks"][1]["verdict"] == "pass");
}

TEST_CASE("fiber examples report zeta_0(ln f) = k and zeta_0 zeta_0 f / f = k^2") {
    const json r4 = run_tasks(parse_scene(bundled_example("4.4")));
    const json& t4 = r4["tasks"][0];
    CHECK(t4["verdict"] == "pass");
    CHECK(quantity(t4, "zeta_0(ln f)")["mean"].get<double>() == doctest::Approx(0.7).epsilon(1e-12));
    // 12 - 0 + 2 (0.7^2 + 0.7^2)
    CHECK(quantity(t4, "rbar - r_1")["mean"].get<double>() == doctest::Approx(13.96).epsilon(1e-9));
    CHECK(t4["statistics"]["warping"]["zeta0_zeta0_f_over_f"]["mean"].get<double>() == doctest::Approx(0.49).epsilon(1e-12));

    const json r5 = run_tasks(parse_scene(bundled_example("4.5")));
    CHECK(r5["tasks"][0]["verdict"] == "pass");
    CHECK(quantity(r5["tasks"][0], "rbar - r_0")["mean"].get<double>() == doctest::Approx(-6.0).epsilon(1e-9));
    CHECK(r5["tasks"][0]["statistics"]["warping"]["laplacian_over_f"]["mean"].get<double>() == doctest::Approx(3.0).epsilon(1e-9));

    const json r6 = run_tasks(parse_scene(bundled_example("4.6")));
    const json& t6 = r6["tasks"][0];
    CHECK(t6["verdict"] == "pass");
    CHECK(quantity(t6, "zeta_0(ln f)")["mean"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(quantity(t6, "rbar - r_1")["mean"].get<double>() == doctest::Approx(-5.0).epsilon(1e-9));
}

TEST_CASE("every bundled example passes and every broken variant fails") {
    for (const auto& id : bundled_example_ids()) {
        CAPTURE(id);
        const json good = run_tasks(parse_scene(bundled_example(id, false)));
        const VerdictCounts g = count_verdicts(good);
        CHECK(g.fail == 0);
        CHECK(g.inconclusive == 0);
        CHECK(g.pass == static_cast<int>(good["tasks"].size()));
        const json bad = run_tasks(parse_scene(bundled_example(id, true)));
        CHECK(count_verdicts(bad).fail > 0);
    }
    CHECK_THROWS_AS(bundled_example("4.7"), SceneError);
}

TEST_CASE("example tasks nest the bundled report") {
    json doc = minimal_scene();
    doc["tasks"] = {{{"kind", "example"}, {"id", "4.1"}}, {{"kind", "example"}, {"id", "4.1"}, {"broken", true}}};
    const json r = run_tasks(parse_scene(doc));
    CHECK(r["tasks"][0]["verdict"] == "pass");
    CHECK(r["tasks"][0]["report"]["tasks"].size() == 2);
    CHECK(r["tasks"][1]["verdict"] == "fail");
    CHECK(r["summary"]["fail"] == 1);
}

TEST_CASE("flow_family on the flat position soliton passes with an O(h^2) table") {
    json doc = minimal_scene();
    doc["charts"].push_back({{"name", "plane"}, {"dim", 2}, {"box", {-1, 1}}});
    doc["metrics"].push_back({{"name", "flat"}, {"chart", "plane"}, {"diagonal", {"1", "1"}}});
    doc["vector_fields"].push_back({{"name", "pos"}, {"chart", "plane"}, {"position", true}});
    doc["tasks"] = {{{"kind", "flow_family"}, {"metric", "flat"}, {"field", "pos"},
                     {"constants", {{"lambda", 2.0}, {"mu", 8.0}}}, {"rungs", 3}, {"samples", 3}}};
    const json r = run_tasks(parse_scene(doc));
    const json& t = r["tasks"][0];
    CHECK(t["verdict"] == "pass");
    const json& ladder = t["statistics"]["ladder"];
    REQUIRE(ladder.size() == 3);
    // leading term F''''(0) h^2 / 12 with F''''(0) = 4 (lambda - 1)(lambda + 2)^2 = 64
    CHECK(ladder[0]["residual"]["max"].get<double>() == doctest::Approx(64.0 * 1e-6 / 12.0).epsilon(2e-3));
    for (int i = 1; i < 3; ++i) {
        CHECK(ladder[i]["ratio"].get<double>() >= 3.6);
        CHECK(ladder[i]["ratio"].get<double>() <= 4.4);
    }
    // off the soliton line the residual is order one
    doc["tasks"][0]["constants"]["mu"] = 0.0;
    CHECK(run_tasks(parse_scene(doc))["tasks"][0]["verdict"] == "fail");
}

TEST_CASE("soliton tasks: fit finds the line mu = 2 lambda + 4, check rejects off it") {
    json doc = minimal_scene();
    doc["charts"].push_back({{"name", "plane"}, {"dim", 3}, {"box", {-1, 1}}});
    doc["metrics"].push_back({{"name", "flat"}, {"chart", "plane"}, {"diagonal", {"1", "1", "1"}}});
    doc["vector_fields"].push_back({{"name", "pos"}, {"chart", "plane"}, {"position", true}});
    doc["tasks"] = {{{"kind", "soliton_fit"}, {"metric", "flat"}, {"field", "pos"}},
                    {{"kind", "soliton_check"}, {"metric", "flat"}, {"field", "pos"}, {"constants", {{"lambda", 1.0}, {"mu", 6.0}}}},
                    {{"kind", "soliton_check"}, {"metric", "flat"}, {"field", "pos"}, {"constants", {{"lambda", 1.0}, {"mu", 6.5}}}}};
    const json r = run_tasks(parse_scene(doc));
    const json& fit = r["tasks"][0]["fit"];
    CHECK(r["tasks"][0]["verdict"] == "pass");
    CHECK(fit["rank_deficient"] == true);
    const double a = fit["line"]["a"], b = fit["line"]["b"], c = fit["line"]["c"];
    CHECK(a / b == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(c / b == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(r["tasks"][1]["verdict"] == "pass");
    CHECK(r["tasks"][2]["verdict"] == "fail");
}

TEST_CASE("hypersurface task on a round sphere: formulas pass and A is metallic") {
    json doc = minimal_scene();
    doc["charts"].push_back({{"name", "cap"}, {"coordinates", {"u", "v"}}, {"box", {{0.4, 2.6}, {0.1, 6.0}}}});
    doc["embeddings"] = {{{"name", "S"}, {"chart", "cap"}, {"map", {"3*sin(u)*cos(v)", "3*sin(u)*sin(v)", "3*cos(u)"}}}};
    doc["tasks"] = {{{"kind", "hypersurface"}, {"embedding", "S"}, {"metallic_target", "shape"}, {"constants", {{"lambda", 1}, {"mu", 2}}}}};
    const json r = run_tasks(parse_scene(doc));
    const json& t = r["tasks"][0];
    CHECK(t["verdict"] == "pass");
    CHECK(t["statistics"]["gauss"]["max"].get<double>() < 1e-7);
    CHECK(t["metallic_fit"]["metallic"] == true);
    // scalar curvature of the radius-3 sphere
    CHECK(t["theorem_coefficients"]["scalar_curvature"].get<double>() == doctest::Approx(2.0 / 9.0).epsilon(1e-9));
    doc["embeddings"][0]["map"][2] = "3*cos(u";
    CHECK(error_where(doc) == "/embeddings/0/map/2");
}

TEST_CASE("product_blocks task matches brute force on a multiply twisted product") {
    json doc = minimal_scene();
    doc["charts"] = {{{"name", "line"}, {"coordinates", {"s"}}, {"box", {-1, 1}}},
                     {{"name", "sq"}, {"coordinates", {"a", "b"}}, {"box", {-1, 1}}},
                     {{"name", "seg"}, {"coordinates", {"c"}}, {"box", {0, 1}}}};
    doc["metrics"] = {{{"name", "m0"}, {"chart", "line"}, {"diagonal", {"-1"}}, {"signature", 1}},
                      {{"name", "m1"}, {"chart", "sq"}, {"diagonal", {"1 + 0.2*a^2", "1"}}},
                      {{"name", "m2"}, {"chart", "seg"}, {"diagonal", {"1"}}}};
    doc["vector_fields"] = {{{"name", "z0"}, {"chart", "line"}, {"components", {"1 + 0.3*s"}}},
                            {{"name", "z1"}, {"chart", "sq"}, {"components", {"b", "-a"}}},
                            {{"name", "z2"}, {"chart", "seg"}, {"components", {"c"}}}};
    doc["products"] = {{{"name", "P"}, {"kind", "multiply_twisted"}, {"factors", {"m0", "m1", "m2"}},
                        {"warps", {"2 + 0.4*sin(s + a*b)", "1.5 + 0.3*s*c"}}}};
    doc["tasks"] = {{{"kind", "product_blocks"}, {"product", "P"}, {"zeta", {"z0", "z1", "z2"}}}};
    const json r = run_tasks(parse_scene(doc));
    const json& t = r["tasks"][0];
    CHECK(t["verdict"] == "pass");
    CHECK(t["statistics"]["blocks"].size() == 3);
    doc["tasks"][0]["zeta"] = {"z0", "z1"};
    CHECK(error_where(doc) == "/tasks/0/zeta");
    doc["tasks"][0]["zeta"] = {"z0", "z2", "z1"};
    CHECK(error_where(doc) == "/tasks/0/zeta");
}

TEST_CASE("flow_grid tasks check the termination against expect and the closed form") {
    json doc = minimal_scene();
    doc["tasks"] = {{{"kind", "flow_grid"}, {"homogeneous", {{"r0", 2}}}, {"dt", 0.01}, {"final_time", 0.5}},
                    {{"kind", "flow_grid"}, {"homogeneous", {{"r0", 2}}}, {"dt", 0.01}, {"final_time", 1.5}, {"expect", "degenerated"}},
                    {{"kind", "flow_grid"}, {"homogeneous", {{"r0", 2}}}, {"dt", 0.01}, {"final_time", 1.5}},
                    {{"kind", "flow_grid"}, {"metric", "g"}, {"points", 16}, {"dt", 0.05}, {"final_time", 0.5}, {"velocity_scale", 0.5}}};
    const json r = run_tasks(parse_scene(doc));
    CHECK(r["tasks"][0]["verdict"] == "pass");
    // phi(t) = 1 - t^2
    CHECK(r["tasks"][0]["statistics"]["closed_form"]["phi"].get<double>() == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r["tasks"][1]["verdict"] == "pass");
    CHECK(r["tasks"][1]["statistics"]["termination"] == "degenerated");
    CHECK(r["tasks"][2]["verdict"] == "fail");
    CHECK(r["tasks"][3]["verdict"] == "pass");

    const FlowTrajectory traj = run_flow_task(parse_scene(doc), 3);
    // linear growth (1 + 0.5 t) g0 on the flat torus
    CHECK(traj.states.back().metric[0] == doctest::Approx(1.25).epsilon(1e-12));
    CHECK_THROWS_AS(run_flow_task(parse_scene(doc), 7), SceneError);
    CHECK_THROWS_AS(run_flow_task(parse_scene(minimal_scene()), 0), SceneError);
}

TEST_CASE("a failing task is recorded and the run continues") {
    json doc = minimal_scene();
    doc["tasks"] = {{{"kind", "flow_grid"}, {"homogeneous", {{"r0", 2}}}, {"dt", 0.03}, {"final_time", 0.1}},
                    {{"kind", "identities"}, {"metric", "g"}, {"field", "v"}}};
    const json r = run_tasks(parse_scene(doc));
    CHECK(r["tasks"][0]["verdict"] == "fail");
    CHECK(r["tasks"][0].contains("error"));
    CHECK(r["tasks"][1]["verdict"] == "pass");
    CHECK(r["summary"]["fail"] == 1);
    CHECK(r["summary"]["pass"] == 1);
}

TEST_CASE("options override seed, samples and every tolerance") {
    SceneConfig s = parse_scene(minimal_scene());
    apply_options(s, {std::uint64_t{99}, 8, 1e-30});
    CHECK(s.seed == 99);
    CHECK(s.samples == 8);
    CHECK(s.tolerances.identity == 1e-30);
    CHECK(s.tolerances.flow_family == 1e-30);
    const json r = run_tasks(s);
    CHECK(r["provenance"]["seed"] == 99);
    CHECK(r["tasks"][0]["samples"] == 8);
    // round-off in the residuals exceeds 1e-30
    CHECK(r["tasks"][0]["verdict"] == "fail");
    CHECK_THROWS_AS(apply_options(s, {std::nullopt, 1, std::nullopt}), SceneError);
    CHECK_THROWS_AS(apply_options(s, {std::nullopt, std::nullopt, 0.0}), SceneError);
}

TEST_CASE("identity tasks on random torus data pass; seeds change the samples") {
    std::mt19937_64 rng(17);
    const json doc = random_torus_scene(rng, 4);
    const json r = run_tasks(parse_scene(doc));
    for (const auto& t : r["tasks"]) CHECK(t["verdict"] == "pass");
    SceneConfig other = parse_scene(doc);
    other.seed = 4;
    CHECK(strip_timing(run_tasks(other))["tasks"] != strip_timing(r)["tasks"]);
}

TEST_CASE("replays are byte-identical apart from timing, across thread counts") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        json doc = random_torus_scene(rng, 2);
        doc["tasks"].push_back({{"kind", "example"}, {"id", bundled_example_ids()[static_cast<std::size_t>(trial)]}});
        doc["tasks"].push_back({{"kind", "flow_grid"}, {"metric", "g0"}, {"points", 16}, {"dt", 0.02}, {"final_time", 0.1}});
        const SceneConfig s = parse_scene(doc);
        setenv("GEOFLOW_THREADS", "1", 1);
        const std::string a = strip_timing(run_tasks(s)).dump();
        setenv("GEOFLOW_THREADS", "4", 1);
        const std::string b = strip_timing(run_tasks(s)).dump();
        const std::string c = strip_timing(run_tasks(s)).dump();
        unsetenv("GEOFLOW_THREADS");
        CHECK(a == b);
        CHECK(b == c);
    }
}

TEST_CASE("strip_timing removes wall_time_s at every depth") {
    const json r = {{"wall_time_s", 1.0}, {"tasks", {{{"wall_time_s", 2.0}, {"report", {{"wall_time_s", 3.0}, {"x", 1}}}}}}};
    const json s = strip_timing(r);
    CHECK(s.dump() == R"({"tasks":[{"report":{"x":1}}]})");
    const json counts = {{"tasks", {{{"verdict", "pass"}}, {{"verdict", "fail"}}, {{"verdict", "inconclusive"}}, json::object()}}};
    const VerdictCounts v = count_verdicts(counts);
    CHECK(v.pass == 1);
    CHECK(v.fail == 2);
    CHECK(v.inconclusive == 1);
}

TEST_CASE("shipped scenes load and pass") {
    for (const char* name : {"tour.json", "collapse.json"}) {
        CAPTURE(name);
        const SceneConfig s = load_scene(std::string(GEOFLOW_SCENES) + "/" + name);
        const VerdictCounts v = count_verdicts(run_tasks(s));
        CHECK(v.fail == 0);
        CHECK(v.inconclusive == 0);
    }
}

TEST_CASE("command line: exit codes and outputs") {
    const std::string scenes = GEOFLOW_SCENES;
    const std::string out = temp_path("report.json");
    CHECK(run_cli("example 4.3 --out " + out) == 0);
    CHECK(std::filesystem::exists(out));
    CHECK(json::parse(std::ifstream(out))["summary"]["pass"] == 2);
    CHECK(run_cli("example 4.3 --broken --out " + out) == 1);
    CHECK(run_cli("example 4.8") == 2);
    CHECK(run_cli("example 4.2 --dump --out " + out) == 0);
    CHECK(parse_scene(json::parse(std::ifstream(out))).tasks.size() == 1);
    CHECK(run_cli("run " + scenes + "/collapse.json --out " + out + " --seed 5 --samples 4") == 0);
    CHECK(json::parse(std::ifstream(out))["provenance"]["seed"] == 5);
    CHECK(run_cli("run " + scenes + "/tour.json --out " + out + " --tol 1e-30") == 1);
    CHECK(run_cli("run /nonexistent.json") == 2);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);

    const std::string bad = temp_path("bad_scene.json");
    json doc = minimal_scene();
    doc["tasks"][0]["metric"] = "typo";
    write_file(bad, doc.dump());
    CHECK(run_cli("run " + bad) == 2);

    const std::string csv = temp_path("traj.csv");
    CHECK(run_cli("flow " + scenes + "/collapse.json --task 1 --csv " + csv) == 0);
    std::ifstream f(csv);
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,node,i,j,value");
    CHECK(run_cli("flow " + scenes + "/collapse.json --csv " + csv) == 1);
    CHECK(run_cli("flow " + scenes + "/tour.json --task 0 --csv " + csv) == 2);
    for (const auto& p : {out, bad, csv}) std::filesystem::remove(p);
}
