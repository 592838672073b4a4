#include "nlflow/descriptor.hpp"

#include "nlflow/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace nlflow {

const Json& descriptor_schema() {
    static const Json schema = Json::parse(descriptor_schema_text());
    return schema;
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const Json& deref(const Json& node, const Json& root) {
    if (node.is_object() && node.contains("$ref")) {
        const std::string ref = node["$ref"].get<std::string>();
        const std::string prefix = "#/$defs/";
        if (ref.rfind(prefix, 0) != 0) throw std::logic_error("unsupported $ref " + ref);
        return root["$defs"][ref.substr(prefix.size())];
    }
    return node;
}

bool type_matches(const Json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    if (type == "null") return v.is_null();
    return false;
}

std::string brief(const Json& v) {
    std::string s = v.dump();
    return s.size() > 40 ? s.substr(0, 37) + "..." : s;
}

void check(const Json& v, const Json& node, const Json& root, const std::string& path,
           std::vector<std::string>& errors) {
    const Json& s = deref(node, root);
    const std::string where = path.empty() ? "<root>" : path;
    if (s.contains("type")) {
        const std::string type = s["type"].get<std::string>();
        if (!type_matches(v, type)) {
            errors.push_back(where + ": expected " + type + ", got " + brief(v));
            return;
        }
    }
    if (s.contains("enum")) {
        bool found = false;
        for (const auto& e : s["enum"]) found = found || e == v;
        if (!found) errors.push_back(where + ": " + brief(v) + " is not one of " + s["enum"].dump());
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (s.contains("minimum") && x < s["minimum"].get<double>()) {
            errors.push_back(where + ": " + brief(v) + " is below the minimum " + s["minimum"].dump());
        }
        if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>())) {
            errors.push_back(where + ": " + brief(v) + " must be greater than " + s["exclusiveMinimum"].dump());
        }
        if (s.contains("maximum") && x > s["maximum"].get<double>()) {
            errors.push_back(where + ": " + brief(v) + " is above the maximum " + s["maximum"].dump());
        }
    }
    if (v.is_array()) {
        if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
            errors.push_back(where + ": needs at least " + s["minItems"].dump() + " items");
        }
        if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) {
            errors.push_back(where + ": allows at most " + s["maxItems"].dump() + " items");
        }
        if (s.contains("items")) {
            for (std::size_t k = 0; k < v.size(); ++k) {
                check(v[k], s["items"], root, where + "[" + std::to_string(k) + "]", errors);
            }
        }
    }
    if (v.is_object()) {
        if (s.contains("required")) {
            for (const auto& key : s["required"]) {
                if (!v.contains(key.get<std::string>())) {
                    errors.push_back(join(path, key.get<std::string>()) + ": required field is missing");
                }
            }
        }
        const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (s.contains("properties") && s["properties"].contains(it.key())) {
                check(it.value(), s["properties"][it.key()], root, join(path, it.key()), errors);
            } else if (closed) {
                errors.push_back(join(path, it.key()) + ": unknown key");
            }
        }
    }
}

Json fill(const Json& v, const Json& node, const Json& root) {
    const Json& s = deref(node, root);
    if (!v.is_object() || !s.contains("properties")) return v;
    Json out = v;
    for (auto it = s["properties"].begin(); it != s["properties"].end(); ++it) {
        const Json& sub = deref(it.value(), root);
        if (!out.contains(it.key())) {
            if (sub.contains("default")) out[it.key()] = fill(sub["default"], sub, root);
        } else {
            out[it.key()] = fill(out[it.key()], sub, root);
        }
    }
    return out;
}

} // namespace

std::vector<std::string> schema_errors(const Json& doc, const Json& schema) {
    std::vector<std::string> errors;
    check(doc, schema, schema, "", errors);
    return errors;
}

Json with_defaults(const Json& doc, const Json& schema) { return fill(doc, schema, schema); }

Json resolve_descriptor(const Json& doc) {
    const auto errors = schema_errors(doc, descriptor_schema());
    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "invalid run descriptor:";
        for (const auto& e : errors) msg << "\n  " << e;
        throw ConfigError(msg.str());
    }
    return with_defaults(doc, descriptor_schema());
}

Json load_descriptor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read descriptor " + path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return resolve_descriptor(doc);
}

namespace {

Point vec2(const Json& a, int dim, const std::string& what) {
    if (static_cast<int>(a.size()) != dim) {
        throw ConfigError(what + ": expected " + std::to_string(dim) + " components for a " + std::to_string(dim) +
                          "-D grid");
    }
    Point p{0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = a[k].get<double>();
    return p;
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
    const std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    return (std::filesystem::path(base_dir) / path).string();
}

double bump_value(double q) {
    if (q >= 1.0) return 0.0;
    const double s = 1.0 - q;
    return s * s * s;
}

} // namespace

std::function<double(const Point&)> datum_function(const Json& spec, const Grid& grid, const std::string& base_dir) {
    const std::string kind = spec.at("kind").get<std::string>();
    const double scale = spec.value("scale", 1.0);
    const int dim = grid.dim;
    if (kind == "zero") return [](const Point&) { return 0.0; };
    if (kind == "indicator") {
        if (!spec.contains("lower") || !spec.contains("upper")) {
            throw ConfigError("initial: indicator needs lower and upper");
        }
        const Point lo = vec2(spec["lower"], dim, "indicator.lower");
        const Point hi = vec2(spec["upper"], dim, "indicator.upper");
        const double value = scale * spec.value("value", 1.0);
        return [=](const Point& x) {
            for (int a = 0; a < dim; ++a) {
                if (x[a] < lo[a] || x[a] > hi[a]) return 0.0;
            }
            return value;
        };
    }
    if (kind == "bump") {
        if (!spec.contains("center") || !spec.contains("radius")) {
            throw ConfigError("initial: bump needs center and radius");
        }
        const Point c = vec2(spec["center"], dim, "bump.center");
        const double r = spec["radius"].get<double>();
        const double amp = scale * spec.value("amplitude", 1.0);
        return [=](const Point& x) {
            double q = 0.0;
            for (int a = 0; a < dim; ++a) q += (x[a] - c[a]) * (x[a] - c[a]);
            return amp * bump_value(q / (r * r));
        };
    }
    if (kind == "csv") {
        if (!spec.contains("path")) throw ConfigError("initial: csv needs path");
        auto f = std::make_shared<Field>(read_field_csv(resolve_path(spec["path"].get<std::string>(), base_dir), grid));
        return [f, scale](const Point& x) { return scale * interpolate(*f, x); };
    }
    throw ConfigError("unknown datum kind " + kind);
}

Field build_datum(const Json& spec, const Grid& grid, const std::string& base_dir) {
    if (spec.at("kind").get<std::string>() == "csv") {
        if (!spec.contains("path")) throw ConfigError("initial: csv needs path");
        Field f = read_field_csv(resolve_path(spec["path"].get<std::string>(), base_dir), grid);
        f *= spec.value("scale", 1.0);
        return f;
    }
    return Field::from_function(grid, datum_function(spec, grid, base_dir));
}

Problem build_problem(const Json& d, const std::string& base_dir) {
    Problem p;
    p.descriptor = d;
    p.base_dir = base_dir;
    p.seed = d.value("seed", std::uint64_t{1});
    p.output_dir = d.value("output_dir", std::string("nlflow_out"));

    const Json& g = d.at("grid");
    const int dim = static_cast<int>(g["cells"].size());
    if (g["origin"].size() != g["cells"].size() || g["extents"].size() != g["cells"].size()) {
        throw ConfigError("grid: origin, extents and cells must have the same length");
    }
    if (dim == 1) {
        p.grid = Grid::line(g["origin"][0].get<double>(), g["extents"][0].get<double>(), g["cells"][0].get<int>());
    } else {
        p.grid = Grid::plane({g["origin"][0].get<double>(), g["origin"][1].get<double>()},
                             {g["extents"][0].get<double>(), g["extents"][1].get<double>()},
                             {g["cells"][0].get<int>(), g["cells"][1].get<int>()});
    }

    const Json& s = d.at("solver");
    p.solver.cfl = s["cfl"].get<double>();
    p.solver.t_end = s["t_end"].get<double>();
    p.solver.boundary = boundary_from_string(s["boundary"].get<std::string>());
    p.solver.record_every = s["record_every"].get<int>();
    p.solver.flux = flux_from_string(s["flux"].get<std::string>());
    p.solver.validate();

    const Json& prm = d["params"];
    const std::string model = d.at("model").get<std::string>();
    if (model == "supply_chain") {
        if (dim != 1) throw ConfigError("model: supply_chain needs a 1-D grid");
        SupplyChainParams sp;
        sp.vmax = prm["vmax"].get<double>();
        sp.window_lo = prm["load_window"][0].get<double>();
        sp.window_hi = prm["load_window"][1].get<double>();
        p.model = std::make_unique<SupplyChainModel>(sp);
    } else {
        if (dim != 2) throw ConfigError("model: pedestrian needs a 2-D grid");
        if (!prm.contains("kernel_radius")) throw ConfigError("params.kernel_radius: required for pedestrian");
        PedestrianParams pp;
        const Json& law = prm["speed_law"];
        pp.law.kind = speed_law_from_string(law["kind"].get<std::string>());
        pp.law.vmax = law["vmax"].get<double>();
        pp.law.cap = law["cap"].get<double>();
        pp.kernel_radius = prm["kernel_radius"].get<double>();
        if (prm.contains("direction")) {
            const Json& dir = prm["direction"];
            const std::string kind = dir["kind"].get<std::string>();
            if (kind == "uniform") {
                pp.direction = uniform_direction(p.grid, dir.value("angle", 0.0));
            } else if (kind == "corridor_to_exit") {
                if (!dir.contains("exit")) throw ConfigError("params.direction.exit: required for corridor_to_exit");
                pp.direction = corridor_to_exit(p.grid, vec2(dir["exit"], 2, "params.direction.exit"));
            } else {
                if (!dir.contains("path")) throw ConfigError("params.direction.path: required for csv");
                pp.direction = direction_from_csv(resolve_path(dir["path"].get<std::string>(), base_dir), p.grid);
            }
        } else {
            pp.direction = uniform_direction(p.grid, 0.0);
        }
        p.model = std::make_unique<PedestrianModel>(p.grid, std::move(pp));
    }

    p.initial = build_datum(d.at("initial"), p.grid, base_dir);
    if (d.contains("perturbation")) p.perturbation = build_datum(d["perturbation"], p.grid, base_dir);

    const Json& ds = d["descent"];
    p.descent.max_iters = ds["max_iters"].get<int>();
    p.descent.step0 = ds["step0"].get<double>();
    p.descent.armijo_c = ds["armijo_c"].get<double>();
    p.descent.backtrack = ds["backtrack"].get<double>();
    p.descent.lower = ds["box"][0].get<double>();
    p.descent.upper = ds["box"][1].get<double>();
    p.descent.tol_grad = ds["tol_grad"].get<double>();
    p.descent.probes = ds["probes"].get<int>();
    p.descent.seed = p.seed;
    p.descent.validate();
    p.setup.solver = p.solver;

    if (d.contains("functional")) {
        const Json& fj = d["functional"];
        const FunctionalKind kind = functional_from_string(fj["kind"].get<std::string>());
        std::vector<double> schedule;
        if (kind == FunctionalKind::JPED) {
            if (!fj.contains("threshold")) throw ConfigError("functional.threshold: required for JPED");
            if (!fj.contains("region")) throw ConfigError("functional.region: required for JPED");
            if (p.solver.record_every != 1) {
                throw ConfigError("solver.record_every: JPED integrates over every step and needs 1");
            }
            double margin = 2.0 * p.grid.min_spacing();
            if (auto* ped = dynamic_cast<const PedestrianModel*>(p.model.get())) margin = 2.0 * ped->kernel().radius();
            margin = fj.value("margin", margin);
            const Point lo = vec2(fj["region"]["lower"], dim, "functional.region.lower");
            const Point hi = vec2(fj["region"]["upper"], dim, "functional.region.upper");
            p.functional = make_threshold(fj["threshold"].get<double>(), smooth_indicator(p.grid, lo, hi, margin),
                                          p.solver.t_end);
        } else {
            if (dim != 1) throw ConfigError("functional: J1 and J2 need a 1-D grid");
            if (!fj.contains("demand")) throw ConfigError("functional.demand: required for J1/J2");
            const Json& dem = fj["demand"];
            const std::string dk = dem["kind"].get<std::string>();
            Field demand(p.grid);
            if (dk == "manufactured") {
                if (!dem.contains("target")) throw ConfigError("functional.demand.target: required for manufactured");
                p.target = build_datum(dem["target"], p.grid, base_dir);
                const Trajectory tr = solve(*p.target, *p.model, p.solver);
                demand = tr.final_state();
                schedule = tr.dt_sequence;
            } else if (dk == "constant") {
                if (!dem.contains("value")) throw ConfigError("functional.demand.value: required for constant");
                demand = Field(p.grid, dem["value"].get<double>());
            } else {
                if (!dem.contains("path")) throw ConfigError("functional.demand.path: required for csv");
                demand = read_field_csv(resolve_path(dem["path"].get<std::string>(), base_dir), p.grid);
            }
            p.functional = make_tracking(kind, std::move(demand), p.solver.t_end, fj["window"][0].get<double>(),
                                         fj["window"][1].get<double>());
        }
        if (ds["schedule"].get<std::string>() == "fixed") {
            if (schedule.empty()) schedule = solve(p.initial, *p.model, p.solver).dt_sequence;
            p.setup.schedule = std::move(schedule);
        }
    }
    return p;
}

} // namespace nlflow
