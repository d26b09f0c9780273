#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoflow/fields.hpp"
#include "geoflow/flow.hpp"
#include "geoflow/hypersurface.hpp"
#include "geoflow/product.hpp"
#include "geoflow/soliton.hpp"

namespace geoflow {

inline constexpr int kSceneSchemaVersion = 1;

struct Tolerances {
    double identity = 1e-8;      // relative identity residuals
    double soliton = 1e-6;       // residual <= tol (1 + sup |g|)
    double product = 1e-8;       // closed-form blocks against brute force, relative
    double constancy = 1e-7;     // spread <= tol (1 + magnitude)
    double hypersurface = 1e-7;  // concurrent formulas and Gauss check, relative
    double flow_family = 1e-5;   // sup-norm of the family residual at the first h
};

enum class TaskKind {
    Identities,
    SolitonFit,
    SolitonCheck,
    ProductBlocks,
    FactorConditions,
    Hypersurface,
    FlowFamily,
    FlowGrid,
    Example,
};

std::string to_string(TaskKind k);

struct TaskSpec {
    TaskKind kind;
    std::string name;
    nlohmann::json params;  // validated task object as written in the scene
};

/// Fully resolved scene: every expression parsed, every reference checked, products built.
struct SceneConfig {
    std::string name;
    std::string description;
    std::uint64_t seed = 0;
    int samples = 64;
    Tolerances tolerances;

    std::map<std::string, ChartPtr> charts;
    std::map<std::string, MetricField> metrics;
    std::map<std::string, VectorField> vector_fields;
    std::map<std::string, ScalarField> scalar_fields;
    std::map<std::string, Embedding> embeddings;
    std::map<std::string, ProductSpec> products;
    std::map<std::string, SolitonConstants> constants;
    std::vector<TaskSpec> tasks;

    nlohmann::json source;
};

/// Throws SceneError with a JSON-pointer location for schema violations, dangling
/// references, expression parse errors and invalid geometric data.
SceneConfig parse_scene(const nlohmann::json& doc);
SceneConfig load_scene(const std::string& path);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    /// Replaces every tolerance of the scene.
    std::optional<double> tolerance;
};

/// Applies the overrides in place.
void apply_options(SceneConfig& scene, const RunOptions& options);

/// Runs the tasks in order. Failures of individual tasks are recorded in the report with
/// verdict "fail" and an error message; nothing escapes.
nlohmann::json run_tasks(const SceneConfig& scene);

/// Runs a flow_grid task and returns its full trajectory. Throws SceneError when the
/// index is out of range or the task has another kind.
FlowTrajectory run_flow_task(const SceneConfig& scene, std::size_t index);

/// Counts of verdicts in a report.
struct VerdictCounts {
    int pass = 0;
    int fail = 0;
    int inconclusive = 0;
};
VerdictCounts count_verdicts(const nlohmann::json& report);

/// Copy without "wall_time_s" members, for replay comparisons.
nlohmann::json strip_timing(const nlohmann::json& report);

/// Bundled example scenes, ids "4.1" .. "4.6". The broken variant changes one ingredient
/// (warping or mu) so that its verdict fails.
std::vector<std::string> bundled_example_ids();
nlohmann::json bundled_example(const std::string& id, bool broken = false);

}  // namespace geoflow
