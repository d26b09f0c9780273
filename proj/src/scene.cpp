#include "geoflow/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "geoflow/errors.hpp"

namespace geoflow {

using nlohmann::json;

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Identities: return "identities";
        case TaskKind::SolitonFit: return "soliton_fit";
        case TaskKind::SolitonCheck: return "soliton_check";
        case TaskKind::ProductBlocks: return "product_blocks";
        case TaskKind::FactorConditions: return "factor_conditions";
        case TaskKind::Hypersurface: return "hypersurface";
        case TaskKind::FlowFamily: return "flow_family";
        case TaskKind::FlowGrid: return "flow_grid";
        case TaskKind::Example: return "example";
    }
    return "unknown";
}

namespace {

std::string at(const std::string& where, const std::string& key) { return where + "/" + key; }
std::string at(const std::string& where, std::size_t i) { return where + "/" + std::to_string(i); }

const json& member(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SceneError("missing required field '" + key + "'", where);
    return *it;
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw SceneError("expected an object", where.empty() ? "/" : where);
}

void require_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw SceneError("expected an array", where);
}

void allowed_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) throw SceneError("unknown field '" + it.key() + "'", at(where, it.key()));
    }
}

std::string get_string(const json& j, const std::string& where) {
    if (!j.is_string()) throw SceneError("expected a string", where);
    return j.get<std::string>();
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw SceneError("expected a number", where);
    return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw SceneError("expected an integer", where);
    return j.get<int>();
}

bool get_bool(const json& j, const std::string& where) {
    if (!j.is_boolean()) throw SceneError("expected a boolean", where);
    return j.get<bool>();
}

std::string name_of(const json& obj, const std::string& where) {
    const std::string n = get_string(member(obj, "name", where), at(where, "name"));
    if (n.empty()) throw SceneError("empty name", at(where, "name"));
    return n;
}

/// Expression from a string or a number.
Expr expression(const Chart& chart, const json& j, const std::string& where) {
    if (j.is_number()) return Expr::constant(j.get<double>());
    if (!j.is_string()) throw SceneError("expected an expression string or a number", where);
    try {
        return chart.parse(j.get<std::string>());
    } catch (const ParseError& e) {
        throw SceneError("parse error", where, e.what());
    }
}

std::vector<Expr> expressions(const Chart& chart, const json& j, const std::string& where, std::size_t count) {
    require_array(j, where);
    if (j.size() != count)
        throw SceneError("expected " + std::to_string(count) + " entries, found " + std::to_string(j.size()), where);
    std::vector<Expr> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expression(chart, j[i], at(where, i)));
    return out;
}

template <class Map>
const typename Map::mapped_type& lookup(const Map& m, const json& j, const std::string& where, const char* what) {
    const std::string n = get_string(j, where);
    auto it = m.find(n);
    if (it == m.end()) throw SceneError("dangling reference", where, std::string(what) + " '" + n + "' is not defined");
    return it->second;
}

template <class Map>
void unique(const Map& m, const std::string& n, const std::string& where, std::set<std::string>& all) {
    if (m.count(n) || all.count(n)) throw SceneError("duplicate name '" + n + "'", where);
    all.insert(n);
}

ChartPtr parse_chart(const json& j, const std::string& where) {
    require_object(j, where);
    allowed_keys(j, where, {"name", "dim", "coordinates", "box", "periods"});
    const std::string name = name_of(j, where);
    std::vector<std::string> coords;
    int dim = -1;
    if (j.contains("coordinates")) {
        const auto& c = j["coordinates"];
        require_array(c, at(where, "coordinates"));
        for (std::size_t i = 0; i < c.size(); ++i) coords.push_back(get_string(c[i], at(at(where, "coordinates"), i)));
        dim = static_cast<int>(coords.size());
    }
    if (j.contains("dim")) {
        const int d = get_int(j["dim"], at(where, "dim"));
        if (dim >= 0 && d != dim) throw SceneError("dim does not match the coordinate list", at(where, "dim"));
        dim = d;
    }
    if (dim < 1) throw SceneError("chart needs 'dim' or 'coordinates'", where);
    if (coords.empty())
        for (int i = 0; i < dim; ++i) coords.push_back("x" + std::to_string(i));

    const auto& b = member(j, "box", where);
    const std::string bw = at(where, "box");
    require_array(b, bw);
    std::vector<Interval> box;
    auto interval = [&](const json& e, const std::string& w) {
        require_array(e, w);
        if (e.size() != 2) throw SceneError("expected [lo, hi]", w);
        Interval iv{get_number(e[0], at(w, 0)), get_number(e[1], at(w, 1))};
        if (!(iv.hi > iv.lo)) throw SceneError("empty interval", w);
        return iv;
    };
    if (b.size() == 2 && b[0].is_number()) {
        box.assign(static_cast<std::size_t>(dim), interval(b, bw));
    } else {
        if (b.size() != static_cast<std::size_t>(dim)) throw SceneError("expected one interval per coordinate", bw);
        for (std::size_t i = 0; i < b.size(); ++i) box.push_back(interval(b[i], at(bw, i)));
    }
    std::vector<std::optional<double>> periods(static_cast<std::size_t>(dim));
    if (j.contains("periods")) {
        const auto& p = j["periods"];
        const std::string pw = at(where, "periods");
        require_array(p, pw);
        if (p.size() != static_cast<std::size_t>(dim)) throw SceneError("expected one entry per coordinate", pw);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i].is_null()) continue;
            if (p[i].is_boolean()) {
                if (p[i].get<bool>()) periods[i] = box[i].width();
                continue;
            }
            const double v = get_number(p[i], at(pw, i));
            if (std::abs(v - box[i].width()) > 1e-12 * v)
                throw SceneError("period must equal the box width", at(pw, i));
            periods[i] = v;
        }
    }
    try {
        return std::make_shared<const Chart>(name, coords, box, periods);
    } catch (const Error& e) {
        throw SceneError(e.what(), where);
    }
}

const ChartPtr& chart_ref(const SceneConfig& s, const json& obj, const std::string& where) {
    return lookup(s.charts, member(obj, "chart", where), at(where, "chart"), "chart");
}

MetricField parse_metric(const SceneConfig& s, const json& j, const std::string& where) {
    require_object(j, where);
    allowed_keys(j, where, {"name", "chart", "components", "diagonal", "signature"});
    const ChartPtr& chart = chart_ref(s, j, where);
    const int n = chart->dim();
    const int signature = j.contains("signature") ? get_int(j["signature"], at(where, "signature")) : 0;
    if (signature < 0 || signature > n) throw SceneError("signature out of range", at(where, "signature"));
    const bool has_c = j.contains("components"), has_d = j.contains("diagonal");
    if (has_c == has_d) throw SceneError("exactly one of 'components' or 'diagonal' is required", where);
    try {
        if (has_d) return MetricField::diagonal(chart, expressions(*chart, j["diagonal"], at(where, "diagonal"), static_cast<std::size_t>(n)), signature);
        const auto& rows = j["components"];
        const std::string cw = at(where, "components");
        require_array(rows, cw);
        if (rows.size() != static_cast<std::size_t>(n)) throw SceneError("expected " + std::to_string(n) + " rows", cw);
        std::vector<Expr> comps;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto row = expressions(*chart, rows[i], at(cw, i), static_cast<std::size_t>(n));
            comps.insert(comps.end(), row.begin(), row.end());
        }
        for (int i = 0; i < n; ++i)
            for (int k = i + 1; k < n; ++k)
                if (comps[static_cast<std::size_t>(i * n + k)].to_string() != comps[static_cast<std::size_t>(k * n + i)].to_string())
                    throw SceneError("metric components are not symmetric", at(at(cw, static_cast<std::size_t>(i)), static_cast<std::size_t>(k)));
        return MetricField(chart, comps, signature);
    } catch (const SceneError&) {
        throw;
    } catch (const Error& e) {
        throw SceneError(e.what(), where);
    }
}

VectorField parse_vector_field(const SceneConfig& s, const json& j, const std::string& where) {
    require_object(j, where);
    allowed_keys(j, where, {"name", "chart", "components", "position", "zero"});
    const ChartPtr& chart = chart_ref(s, j, where);
    const int forms = int(j.contains("components")) + int(j.contains("position")) + int(j.contains("zero"));
    if (forms != 1) throw SceneError("exactly one of 'components', 'position' or 'zero' is required", where);
    if (j.contains("position")) {
        if (!get_bool(j["position"], at(where, "position"))) throw SceneError("'position' must be true", at(where, "position"));
        return VectorField::position(chart);
    }
    if (j.contains("zero")) {
        if (!get_bool(j["zero"], at(where, "zero"))) throw SceneError("'zero' must be true", at(where, "zero"));
        return VectorField::zero(chart);
    }
    return VectorField(chart, expressions(*chart, j["components"], at(where, "components"), static_cast<std::size_t>(chart->dim())));
}

ScalarField parse_scalar_field(const SceneConfig& s, const json& j, const std::string& where) {
    require_object(j, where);
    allowed_keys(j, where, {"name", "chart", "expr"});
    const ChartPtr& chart = chart_ref(s, j, where);
    return ScalarField(chart, expression(*chart, member(j, "expr", where), at(where, "expr")));
}

Embedding parse_embedding(const SceneConfig& s, const json& j, const std::string& where) {
    require_object(j, where);
    allowed_keys(j, where, {"name", "chart", "map", "ambient_signature", "orientation"});
    const ChartPtr& chart = chart_ref(s, j, where);
    auto map = expressions(*chart, member(j, "map", where), at(where, "map"), static_cast<std::size_t>(chart->dim() + 1));
    const int sig = j.contains("ambient_signature") ? get_int(j["ambient_signature"], at(where, "ambient_signature")) : 0;
    if (sig < 0 || sig > chart->dim() + 1) throw SceneError("ambient signature out of range", at(where, "ambient_signature"));
    NormalOrientation o = NormalOrientation::Auto;
    if (j.contains("orientation")) {
        const std::string v = get_string(j["orientation"], at(where, "orientation"));
        if (v == "auto") o = NormalOrientation::Auto;
        else if (v == "naive") o = NormalOrientation::Naive;
        else if (v == "flipped") o = NormalOrientation::Flipped;
        else throw SceneError("orientation must be auto, naive or flipped", at(where, "orientation"));
    }
    try {
        return Embedding(chart, map, sig, o);
    } catch (const Error& e) {
        throw SceneError(e.what(), where);
    }
}

ProductSpec build_spec(ProductKind kind, const std::vector<MetricField>& factors, const std::vector<Expr>& warps) {
    switch (kind) {
        case ProductKind::Warped: return ProductSpec::warped(factors[0], factors[1], warps[0]);
        case ProductKind::DoublyWarped: return ProductSpec::doubly_warped(factors[0], factors[1], warps[0], warps[1]);
        case ProductKind::MultiplyWarped:
            return ProductSpec::multiply_warped(factors[0], {factors.begin() + 1, factors.end()}, warps);
        case ProductKind::MultiplyTwisted:
            return ProductSpec::multiply_twisted(factors[0], {factors.begin() + 1, factors.end()}, warps);
    }
    throw std::logic_error("unknown product kind");
}

ProductSpec parse_product(const SceneConfig& s, const json& j, const std::string& where) {
    require_object(j, where);
    allowed_keys(j, where, {"name", "kind", "factors", "warps"});
    const std::string k = get_string(member(j, "kind", where), at(where, "kind"));
    ProductKind kind;
    if (k == "warped") kind = ProductKind::Warped;
    else if (k == "doubly_warped") kind = ProductKind::DoublyWarped;
    else if (k == "multiply_warped") kind = ProductKind::MultiplyWarped;
    else if (k == "multiply_twisted") kind = ProductKind::MultiplyTwisted;
    else throw SceneError("kind must be warped, doubly_warped, multiply_warped or multiply_twisted", at(where, "kind"));
    const auto& f = member(j, "factors", where);
    const std::string fw = at(where, "factors");
    require_array(f, fw);
    std::vector<MetricField> factors;
    for (std::size_t i = 0; i < f.size(); ++i) factors.push_back(lookup(s.metrics, f[i], at(fw, i), "metric"));
    const bool two = kind == ProductKind::Warped || kind == ProductKind::DoublyWarped;
    if (two ? factors.size() != 2 : factors.size() < 2)
        throw SceneError(two ? "expected exactly 2 factors" : "expected a base and at least one fiber", fw);
    const std::size_t nwarps = kind == ProductKind::Warped ? 1 : kind == ProductKind::DoublyWarped ? 2 : factors.size() - 1;
    // the product chart does not depend on the warps; build once with unit warps to parse them
    std::vector<Expr> unit(nwarps, Expr::constant(1.0));
    const std::string ww = at(where, "warps");
    try {
        const ProductSpec provisional = build_spec(kind, factors, unit);
        auto warps = expressions(*provisional.chart(), member(j, "warps", where), ww, nwarps);
        try {
            return build_spec(kind, factors, warps);
        } catch (const SceneError&) {
            throw;
        } catch (const Error& e) {
            throw SceneError(e.what(), ww);
        }
    } catch (const SceneError&) {
        throw;
    } catch (const Error& e) {
        throw SceneError(e.what(), where);
    }
}

SolitonConstants parse_constants_object(const json& j, const std::string& where) {
    require_object(j, where);
    allowed_keys(j, where, {"name", "lambda", "mu"});
    return {get_number(member(j, "lambda", where), at(where, "lambda")), get_number(member(j, "mu", where), at(where, "mu"))};
}

/// Task parameter table: required and optional keys per kind.
struct TaskSchema {
    TaskKind kind;
    const char* name;
    std::vector<const char*> required;
    std::vector<const char*> optional;
};

const std::vector<TaskSchema>& task_schemas() {
    static const std::vector<TaskSchema> t = {
        {TaskKind::Identities, "identities", {"metric", "field"}, {"scalar", "identities", "samples"}},
        {TaskKind::SolitonFit, "soliton_fit", {"metric", "field"}, {"samples"}},
        {TaskKind::SolitonCheck, "soliton_check", {"metric", "field", "constants"}, {"samples"}},
        {TaskKind::ProductBlocks, "product_blocks", {"product", "zeta"}, {"samples"}},
        {TaskKind::FactorConditions, "factor_conditions", {"product", "zeta", "factor"},
         {"constants", "conditions", "require_two_killing", "samples"}},
        {TaskKind::Hypersurface, "hypersurface", {"embedding"}, {"constants", "metallic_target", "samples"}},
        {TaskKind::FlowFamily, "flow_family", {"metric", "field", "constants"}, {"h", "rungs", "samples"}},
        {TaskKind::FlowGrid, "flow_grid", {},
         {"metric", "points", "dt", "final_time", "velocity_scale", "velocity", "output_every", "homogeneous", "expect"}},
        {TaskKind::Example, "example", {"id"}, {"broken"}},
    };
    return t;
}

void check_task(const SceneConfig& s, TaskSpec& task, const std::string& where);

bool is_identity_name(const std::string& n) {
    return n == "div_lie" || n == "trace_lie2" || n == "weitzenbock" || n == "bianchi" || n == "bochner";
}

void check_task(const SceneConfig& s, TaskSpec& task, const std::string& where) {
    const json& j = task.params;
    auto metric = [&](const char* key) -> const MetricField& { return lookup(s.metrics, j[key], at(where, key), "metric"); };
    auto field = [&](const char* key) -> const VectorField& { return lookup(s.vector_fields, j[key], at(where, key), "vector field"); };
    auto same = [&](const Chart& a, const Chart& b, const char* key) {
        if (!same_chart(a, b)) throw SceneError("chart mismatch with the metric", at(where, key));
    };
    auto constants = [&]() {
        const auto& c = j["constants"];
        if (c.is_string()) {
            lookup(s.constants, c, at(where, "constants"), "constants");
        } else {
            parse_constants_object(c, at(where, "constants"));
        }
    };
    if (j.contains("samples")) {
        const int n = get_int(j["samples"], at(where, "samples"));
        if (n < 2) throw SceneError("samples must be at least 2", at(where, "samples"));
    }
    switch (task.kind) {
        case TaskKind::Identities: {
            const auto& g = metric("metric");
            same(g.chart(), field("field").chart(), "field");
            if (j.contains("scalar")) same(g.chart(), lookup(s.scalar_fields, j["scalar"], at(where, "scalar"), "scalar field").chart(), "scalar");
            if (j.contains("identities")) {
                const auto& ids = j["identities"];
                require_array(ids, at(where, "identities"));
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    const std::string n = get_string(ids[i], at(at(where, "identities"), i));
                    if (!is_identity_name(n))
                        throw SceneError("unknown identity '" + n + "' (div_lie, trace_lie2, weitzenbock, bianchi, bochner)",
                                         at(at(where, "identities"), i));
                    if (n == "bochner" && !j.contains("scalar")) throw SceneError("bochner needs 'scalar'", at(at(where, "identities"), i));
                }
            }
            break;
        }
        case TaskKind::SolitonFit:
            same(metric("metric").chart(), field("field").chart(), "field");
            break;
        case TaskKind::SolitonCheck:
        case TaskKind::FlowFamily:
            same(metric("metric").chart(), field("field").chart(), "field");
            constants();
            if (j.contains("h")) {
                const double h = get_number(j["h"], at(where, "h"));
                if (!(h >= 1e-4 && h <= 1e-2)) throw SceneError("h must lie in [1e-4, 1e-2]", at(where, "h"));
            }
            if (j.contains("rungs")) {
                const int r = get_int(j["rungs"], at(where, "rungs"));
                if (r < 1 || r > 8) throw SceneError("rungs must lie in [1, 8]", at(where, "rungs"));
            }
            break;
        case TaskKind::ProductBlocks:
        case TaskKind::FactorConditions: {
            const auto& spec = lookup(s.products, j["product"], at(where, "product"), "product");
            const auto& z = j["zeta"];
            const std::string zw = at(where, "zeta");
            require_array(z, zw);
            if (z.size() != static_cast<std::size_t>(spec.factor_count()))
                throw SceneError("expected one field per factor", zw);
            std::vector<VectorField> parts;
            for (std::size_t i = 0; i < z.size(); ++i) parts.push_back(lookup(s.vector_fields, z[i], at(zw, i), "vector field"));
            try {
                ProductField pf(spec, parts);
            } catch (const Error& e) {
                throw SceneError(e.what(), zw);
            }
            if (task.kind == TaskKind::FactorConditions) {
                const int k = get_int(j["factor"], at(where, "factor"));
                if (k < 0 || k >= spec.factor_count()) throw SceneError("factor index out of range", at(where, "factor"));
                if (j.contains("constants")) constants();
                if (j.contains("conditions")) {
                    const auto& c = j["conditions"];
                    require_array(c, at(where, "conditions"));
                    if (c.empty()) throw SceneError("at least one condition is required", at(where, "conditions"));
                    for (std::size_t i = 0; i < c.size(); ++i) {
                        const std::string v = get_string(c[i], at(at(where, "conditions"), i));
                        if (v != "constancy" && v != "target")
                            throw SceneError("condition must be constancy or target", at(at(where, "conditions"), i));
                        if (v == "target" && !j.contains("constants"))
                            throw SceneError("the target condition needs 'constants'", at(at(where, "conditions"), i));
                    }
                }
                if (j.contains("require_two_killing")) get_bool(j["require_two_killing"], at(where, "require_two_killing"));
            }
            break;
        }
        case TaskKind::Hypersurface:
            lookup(s.embeddings, j["embedding"], at(where, "embedding"), "embedding");
            if (j.contains("constants")) constants();
            if (j.contains("metallic_target")) {
                const std::string v = get_string(j["metallic_target"], at(where, "metallic_target"));
                if (v != "shape" && v != "concurrent")
                    throw SceneError("metallic_target must be shape or concurrent", at(where, "metallic_target"));
            }
            break;
        case TaskKind::FlowGrid: {
            if (j.contains("expect")) {
                const std::string v = get_string(j["expect"], at(where, "expect"));
                if (v != "completed" && v != "degenerated" && v != "unstable")
                    throw SceneError("expect must be completed, degenerated or unstable", at(where, "expect"));
            }
            if (j.contains("homogeneous")) {
                for (const char* k : {"metric", "points", "velocity_scale", "velocity"})
                    if (j.contains(k)) throw SceneError("not allowed together with 'homogeneous'", at(where, k));
                const auto& h = j["homogeneous"];
                const std::string hw = at(where, "homogeneous");
                require_object(h, hw);
                allowed_keys(h, hw, {"r0", "phi0", "v0", "dim", "g0"});
                for (const char* k : {"r0", "phi0", "v0"})
                    if (h.contains(k)) get_number(h[k], at(hw, k));
                if (h.contains("dim") && get_int(h["dim"], at(hw, "dim")) < 1) throw SceneError("dim must be positive", at(hw, "dim"));
                if (h.contains("g0")) {
                    require_array(h["g0"], at(hw, "g0"));
                    for (std::size_t i = 0; i < h["g0"].size(); ++i) get_number(h["g0"][i], at(at(hw, "g0"), i));
                }
            } else {
                const auto& g = lookup(s.metrics, member(j, "metric", where), at(where, "metric"), "metric");
                if (!g.chart().fully_periodic()) throw SceneError("flow_grid needs a fully periodic chart", at(where, "metric"));
                const auto& p = member(j, "points", where);
                if (p.is_array()) {
                    if (p.size() != static_cast<std::size_t>(g.dim())) throw SceneError("expected one count per axis", at(where, "points"));
                    for (std::size_t i = 0; i < p.size(); ++i)
                        if (get_int(p[i], at(at(where, "points"), i)) < 16) throw SceneError("at least 16 points per axis", at(at(where, "points"), i));
                } else if (get_int(p, at(where, "points")) < 16) {
                    throw SceneError("at least 16 points per axis", at(where, "points"));
                }
                if (j.contains("velocity_scale")) get_number(j["velocity_scale"], at(where, "velocity_scale"));
                if (j.contains("velocity")) {
                    const auto& rows = j["velocity"];
                    require_array(rows, at(where, "velocity"));
                    if (rows.size() != static_cast<std::size_t>(g.dim())) throw SceneError("expected n rows", at(where, "velocity"));
                    for (std::size_t i = 0; i < rows.size(); ++i)
                        expressions(g.chart(), rows[i], at(at(where, "velocity"), i), static_cast<std::size_t>(g.dim()));
                }
            }
            const double dt = get_number(member(j, "dt", where), at(where, "dt"));
            if (!(dt > 0)) throw SceneError("dt must be positive", at(where, "dt"));
            if (!(get_number(member(j, "final_time", where), at(where, "final_time")) >= 0))
                throw SceneError("final_time must be nonnegative", at(where, "final_time"));
            if (j.contains("output_every") && get_int(j["output_every"], at(where, "output_every")) < 0)
                throw SceneError("output_every must be nonnegative", at(where, "output_every"));
            break;
        }
        case TaskKind::Example: {
            const std::string id = get_string(j["id"], at(where, "id"));
            const auto ids = bundled_example_ids();
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw SceneError("unknown example id '" + id + "'", at(where, "id"));
            if (j.contains("broken")) get_bool(j["broken"], at(where, "broken"));
            break;
        }
    }
}

}  // namespace

SceneConfig parse_scene(const json& doc) {
    require_object(doc, "");
    allowed_keys(doc, "", {"schema_version", "name", "description", "seed", "samples", "tolerances", "charts", "metrics",
                         "vector_fields", "scalar_fields", "embeddings", "products", "constants", "tasks"});
    SceneConfig s;
    s.source = doc;
    const int version = get_int(member(doc, "schema_version", ""), "/schema_version");
    if (version != kSceneSchemaVersion)
        throw SceneError("unsupported schema_version " + std::to_string(version), "/schema_version");
    if (doc.contains("name")) s.name = get_string(doc["name"], "/name");
    if (doc.contains("description")) s.description = get_string(doc["description"], "/description");
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
            throw SceneError("expected a nonnegative integer", "/seed");
        s.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("samples")) {
        s.samples = get_int(doc["samples"], "/samples");
        if (s.samples < 2) throw SceneError("samples must be at least 2", "/samples");
    }
    if (doc.contains("tolerances")) {
        const auto& t = doc["tolerances"];
        require_object(t, "/tolerances");
        allowed_keys(t, "/tolerances", {"identity", "soliton", "product", "constancy", "hypersurface", "flow_family"});
        auto tol = [&](const char* k, double& dst) {
            if (!t.contains(k)) return;
            dst = get_number(t[k], at("/tolerances", k));
            if (!(dst > 0)) throw SceneError("tolerances must be positive", at("/tolerances", k));
        };
        tol("identity", s.tolerances.identity);
        tol("soliton", s.tolerances.soliton);
        tol("product", s.tolerances.product);
        tol("constancy", s.tolerances.constancy);
        tol("hypersurface", s.tolerances.hypersurface);
        tol("flow_family", s.tolerances.flow_family);
    }

    std::set<std::string> names;
    auto section = [&](const char* key, auto&& body) {
        if (!doc.contains(key)) return;
        const std::string w = std::string("/") + key;
        require_array(doc[key], w);
        for (std::size_t i = 0; i < doc[key].size(); ++i) body(doc[key][i], at(w, i));
    };
    section("charts", [&](const json& j, const std::string& w) {
        auto c = parse_chart(j, w);
        unique(s.charts, c->name(), at(w, "name"), names);
        s.charts.emplace(c->name(), c);
    });
    section("metrics", [&](const json& j, const std::string& w) {
        auto m = parse_metric(s, j, w);
        const std::string n = name_of(j, w);
        unique(s.metrics, n, at(w, "name"), names);
        s.metrics.emplace(n, std::move(m));
    });
    section("vector_fields", [&](const json& j, const std::string& w) {
        auto v = parse_vector_field(s, j, w);
        const std::string n = name_of(j, w);
        unique(s.vector_fields, n, at(w, "name"), names);
        s.vector_fields.emplace(n, std::move(v));
    });
    section("scalar_fields", [&](const json& j, const std::string& w) {
        auto f = parse_scalar_field(s, j, w);
        const std::string n = name_of(j, w);
        unique(s.scalar_fields, n, at(w, "name"), names);
        s.scalar_fields.emplace(n, std::move(f));
    });
    section("embeddings", [&](const json& j, const std::string& w) {
        auto e = parse_embedding(s, j, w);
        const std::string n = name_of(j, w);
        unique(s.embeddings, n, at(w, "name"), names);
        s.embeddings.emplace(n, std::move(e));
    });
    section("products", [&](const json& j, const std::string& w) {
        auto p = parse_product(s, j, w);
        const std::string n = name_of(j, w);
        unique(s.products, n, at(w, "name"), names);
        s.products.emplace(n, std::move(p));
    });
    section("constants", [&](const json& j, const std::string& w) {
        auto c = parse_constants_object(j, w);
        const std::string n = name_of(j, w);
        unique(s.constants, n, at(w, "name"), names);
        s.constants.emplace(n, c);
    });

    const auto& tasks = member(doc, "tasks", "");
    require_array(tasks, "/tasks");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string w = at("/tasks", i);
        const json& j = tasks[i];
        require_object(j, w);
        const std::string kind = get_string(member(j, "kind", w), at(w, "kind"));
        const TaskSchema* schema = nullptr;
        for (const auto& t : task_schemas())
            if (kind == t.name) schema = &t;
        if (!schema) throw SceneError("unknown task kind '" + kind + "'", at(w, "kind"));
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            bool ok = k == "kind" || k == "name";
            for (const char* r : schema->required) ok = ok || k == r;
            for (const char* o : schema->optional) ok = ok || k == o;
            if (!ok) throw SceneError("unknown field '" + k + "' for task kind " + kind, at(w, k));
        }
        for (const char* r : schema->required) member(j, r, w);
        TaskSpec task{schema->kind, j.contains("name") ? get_string(j["name"], at(w, "name")) : kind + " " + std::to_string(i), j};
        check_task(s, task, w);
        s.tasks.push_back(std::move(task));
    }
    return s;
}

SceneConfig load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene file", path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SceneError("invalid JSON", path, e.what());
    }
    return parse_scene(doc);
}

void apply_options(SceneConfig& scene, const RunOptions& options) {
    if (options.seed) scene.seed = *options.seed;
    if (options.samples) {
        if (*options.samples < 2) throw SceneError("samples must be at least 2", "--samples");
        scene.samples = *options.samples;
    }
    if (options.tolerance) {
        if (!(*options.tolerance > 0)) throw SceneError("tolerance must be positive", "--tol");
        auto& t = scene.tolerances;
        t.identity = t.soliton = t.product = t.constancy = t.hypersurface = t.flow_family = *options.tolerance;
    }
}

}  // namespace geoflow
