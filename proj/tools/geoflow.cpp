#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoflow/errors.hpp"
#include "geoflow/scene.hpp"

using nlohmann::json;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

void print_summary(const json& report) {
    for (const auto& t : report["tasks"]) {
        std::fprintf(stderr, "[%zu] %-18s %-13s %s", t["index"].get<std::size_t>(), t["kind"].get<std::string>().c_str(),
                     t["verdict"].get<std::string>().c_str(), t["name"].get<std::string>().c_str());
        if (t.contains("error")) std::fprintf(stderr, "  (%s)", t["error"].get<std::string>().c_str());
        std::fprintf(stderr, "\n");
    }
    const auto& s = report["summary"];
    std::fprintf(stderr, "%d pass, %d fail, %d inconclusive\n", s["pass"].get<int>(), s["fail"].get<int>(),
                 s["inconclusive"].get<int>());
}

void emit(const json& doc, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    std::ofstream f(out);
    if (!f) throw geoflow::SceneError("cannot write '" + out + "'", "--out");
    f << doc.dump(2) << "\n";
}

int report_and_exit(geoflow::SceneConfig& scene, const geoflow::RunOptions& opts, const std::string& out) {
    geoflow::apply_options(scene, opts);
    const json report = geoflow::run_tasks(scene);
    emit(report, out);
    print_summary(report);
    return geoflow::count_verdicts(report).fail > 0 ? kExitFailed : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geoflow: hyperbolic Yamabe soliton and flow checks"};
    app.require_subcommand(1);

    std::string scene_path, out, csv;
    geoflow::RunOptions opts;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<double> tol;

    auto* run = app.add_subcommand("run", "Run every task of a scene and write the JSON report");
    run->add_option("scene", scene_path, "Scene JSON file")->required();
    run->add_option("--out", out, "Report path (default: stdout)");
    run->add_option("--seed", seed, "Override the scene seed");
    run->add_option("--samples", samples, "Override the sample count");
    run->add_option("--tol", tol, "Replace every tolerance");

    std::string id;
    bool broken = false, dump = false;
    auto* example = app.add_subcommand("example", "Run a bundled example scene");
    example->add_option("id", id, "Example id")->required()->check(CLI::IsMember(geoflow::bundled_example_ids()));
    example->add_flag("--broken", broken, "Use the deliberately broken variant");
    example->add_flag("--dump", dump, "Print the scene JSON instead of running it");
    example->add_option("--out", out, "Report path (default: stdout)");
    example->add_option("--seed", seed, "Override the scene seed");
    example->add_option("--samples", samples, "Override the sample count");

    std::optional<std::size_t> task_index;
    auto* flow = app.add_subcommand("flow", "Run a flow_grid task and write its trajectory as CSV");
    flow->add_option("scene", scene_path, "Scene JSON file")->required();
    flow->add_option("--csv", csv, "Trajectory CSV path")->required();
    flow->add_option("--task", task_index, "Task index (default: first flow_grid task)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    opts.seed = seed;
    opts.samples = samples;
    opts.tolerance = tol;

    try {
        if (*run) {
            geoflow::SceneConfig scene = geoflow::load_scene(scene_path);
            return report_and_exit(scene, opts, out);
        }
        if (*example) {
            const json doc = geoflow::bundled_example(id, broken);
            if (dump) {
                emit(doc, out);
                return 0;
            }
            geoflow::SceneConfig scene = geoflow::parse_scene(doc);
            return report_and_exit(scene, opts, out);
        }
        if (*flow) {
            const geoflow::SceneConfig scene = geoflow::load_scene(scene_path);
            std::size_t index = scene.tasks.size();
            if (task_index) {
                index = *task_index;
            } else {
                for (std::size_t i = 0; i < scene.tasks.size() && index == scene.tasks.size(); ++i)
                    if (scene.tasks[i].kind == geoflow::TaskKind::FlowGrid) index = i;
                if (index == scene.tasks.size()) throw geoflow::SceneError("scene has no flow_grid task", "/tasks");
            }
            const geoflow::FlowTrajectory traj = geoflow::run_flow_task(scene, index);
            std::ofstream f(csv);
            if (!f) throw geoflow::SceneError("cannot write '" + csv + "'", "--csv");
            geoflow::write_trajectory_csv(traj, f);
            std::cout << geoflow::trajectory_summary(traj).dump(2) << "\n";
            return traj.termination == geoflow::Termination::Completed ? 0 : kExitFailed;
        }
    } catch (const geoflow::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
