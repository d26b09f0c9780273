#include "geoflow/errors.hpp"
#include "geoflow/scene.hpp"

namespace geoflow {

using nlohmann::json;

namespace {

// Interval factor with the Lorentzian metric -dt^2.
json time_chart(double lo, double hi) { return {{"name", "I"}, {"coordinates", {"t"}}, {"box", {{lo, hi}}}}; }
json time_metric() { return {{"name", "time"}, {"chart", "I"}, {"diagonal", {"-1"}}, {"signature", 1}}; }

json sphere_chart() {
    return {{"name", "S2"},
            {"coordinates", {"theta", "phi"}},
            {"box", {{0.3, 2.8}, {0.0, 6.283185307179586}}},
            {"periods", {nullptr, true}}};
}
json sphere_metric() { return {{"name", "round"}, {"chart", "S2"}, {"diagonal", {"1", "sin(theta)^2"}}}; }

json space_chart(double half) { return {{"name", "R3"}, {"coordinates", {"x", "y", "z"}}, {"box", {-half, half}}}; }
json space_metric() { return {{"name", "flat"}, {"chart", "R3"}, {"diagonal", {"1", "1", "1"}}}; }

json header(const std::string& id, bool broken, const std::string& description) {
    return {{"schema_version", kSceneSchemaVersion},
            {"name", "example-" + id + (broken ? "-broken" : "")},
            {"description", description},
            {"seed", 20240601},
            {"samples", 24}};
}

// M x_f I with M = S^2 and zeta = d/dphi + d/dt.
json example_sphere_by_time(bool broken) {
    json s = header("4.1", broken, "S^2 x_f (I, -dt^2), f = 2 + cos(theta), zeta = d/dphi + d/dt, lambda = 1, mu = r = 2");
    s["charts"] = {sphere_chart(), time_chart(-1, 1)};
    s["metrics"] = {sphere_metric(), time_metric()};
    s["vector_fields"] = {{{"name", "rotation"}, {"chart", "S2"}, {"components", {"0", "1"}}},
                          {{"name", "ddt"}, {"chart", "I"}, {"components", {"1"}}}};
    s["products"] = {{{"name", "spacetime"}, {"kind", "warped"}, {"factors", {"round", "time"}}, {"warps", {"2 + cos(theta)"}}}};
    s["constants"] = {{{"name", "k"}, {"lambda", 1.0}, {"mu", broken ? 3.0 : 2.0}}};
    s["tasks"] = {{{"kind", "factor_conditions"},
                   {"name", "sphere factor is a soliton"},
                   {"product", "spacetime"},
                   {"zeta", {"rotation", "ddt"}},
                   {"factor", 0},
                   {"constants", "k"},
                   {"conditions", {"target"}},
                   {"require_two_killing", true}},
                  {{"kind", "soliton_check"},
                   {"name", "sphere soliton residual"},
                   {"metric", "round"},
                   {"field", "rotation"},
                   {"constants", "k"}}};
    return s;
}

// I x_f M with f^2 = exp(t) + 0.5 exp(-t), the solution for |mu - r| = 1.
json example_time_by_sphere(bool broken) {
    json s = header("4.2", broken, "(I, -dt^2) x_f S^2, f^2 = exp(t) + exp(-t)/2, zeta = d/dt + d/dphi, lambda = 3, mu = 1");
    s["charts"] = {time_chart(-1, 1), sphere_chart()};
    s["metrics"] = {time_metric(), sphere_metric()};
    s["vector_fields"] = {{{"name", "ddt"}, {"chart", "I"}, {"components", {"1"}}},
                          {{"name", "rotation"}, {"chart", "S2"}, {"components", {"0", "1"}}}};
    s["products"] = {{{"name", "spacetime"},
                      {"kind", "warped"},
                      {"factors", {"time", "round"}},
                      {"warps", {"sqrt(exp(t) + 0.5*exp(-t))"}}}};
    s["constants"] = {{{"name", "k"}, {"lambda", 3.0}, {"mu", broken ? 3.0 : 1.0}}};
    s["tasks"] = {{{"kind", "factor_conditions"},
                   {"name", "sphere fiber is a soliton"},
                   {"product", "spacetime"},
                   {"zeta", {"ddt", "rotation"}},
                   {"factor", 1},
                   {"constants", "k"},
                   {"conditions", {"target"}}}};
    return s;
}

json robertson_walker(const std::string& id, bool broken, const std::string& zeta_t, int factor,
                      const std::string& description) {
    json s = header(id, broken, description);
    s["charts"] = {time_chart(-1, 1), space_chart(1.0)};
    s["metrics"] = {time_metric(), space_metric()};
    s["vector_fields"] = {{{"name", "zeta_t"}, {"chart", "I"}, {"components", {zeta_t}}},
                          {{"name", "position"}, {"chart", "R3"}, {"position", true}}};
    s["products"] = {{{"name", "rw"},
                      {"kind", "warped"},
                      {"factors", {"time", "flat"}},
                      {"warps", {broken ? "1 + exp(t)" : "exp(t + 0.3)"}}}};
    s["tasks"] = {{{"kind", "factor_conditions"},
                   {"name", factor == 0 ? "interval factor constancy" : "spatial fiber constancy"},
                   {"product", "rw"},
                   {"zeta", {"zeta_t", "position"}},
                   {"factor", factor},
                   {"conditions", {"constancy"}}},
                  {{"kind", "product_blocks"}, {"name", "block expansion"}, {"product", "rw"}, {"zeta", {"zeta_t", "position"}}}};
    return s;
}

json space_by_time(const std::string& id, bool broken, const std::string& warp, const std::string& zeta_x, int factor,
                   const std::string& description) {
    json s = header(id, broken, description);
    s["charts"] = {space_chart(0.5), time_chart(0, 1)};
    s["metrics"] = {space_metric(), time_metric()};
    s["vector_fields"] = {{{"name", "zeta_x"}, {"chart", "R3"}, {"components", {zeta_x, "0", "0"}}},
                          {{"name", "ddt"}, {"chart", "I"}, {"components", {"1"}}}};
    s["products"] = {{{"name", "static"}, {"kind", "warped"}, {"factors", {"flat", "time"}}, {"warps", {warp}}}};
    s["tasks"] = {{{"kind", "factor_conditions"},
                   {"name", factor == 0 ? "spatial factor constancy" : "interval fiber constancy"},
                   {"product", "static"},
                   {"zeta", {"zeta_x", "ddt"}},
                   {"factor", factor},
                   {"conditions", {"constancy"}}}};
    return s;
}

}  // namespace

std::vector<std::string> bundled_example_ids() { return {"4.1", "4.2", "4.3", "4.4", "4.5", "4.6"}; }

json bundled_example(const std::string& id, bool broken) {
    if (id == "4.1") return example_sphere_by_time(broken);
    if (id == "4.2") return example_time_by_sphere(broken);
    if (id == "4.3")
        return robertson_walker("4.3", broken, "1", 0,
                                "Robertson-Walker (I, -dt^2) x_f R^3 with f = exp(t + 0.3): rbar - r_I = 12 c1^2 is constant");
    if (id == "4.4")
        return robertson_walker("4.4", broken, "0.7", 1,
                                "Robertson-Walker with zeta = 0.7 d/dt + position: zeta_1(ln f) = 0.7 and the fiber quantity are constant");
    if (id == "4.5")
        return space_by_time("4.5", broken, broken ? "exp(x*y + z)" : "exp(x + y + z)", "0", 0,
                             "R^3 x_f (I, -dt^2) with f = exp(x + y + z): Lap f / f = 3, rbar = -6");
    if (id == "4.6")
        return space_by_time("4.6", broken, broken ? "exp(x^2/2 + y + z)" : "exp(x + y + z)", "0.5", 1,
                             "R^3 x_f (I, -dt^2) with zeta = 0.5 d/dx + d/dt: zeta_1(ln f) = 0.5 and the fiber quantity is -6 + 4 k^2 = -5");
    throw SceneError("unknown example id '" + id + "'", "example");
}

}  // namespace geoflow
