// Run descriptors: JSON schema validation, defaults, and construction of the
// grid, model, initial datum and functional they describe.
#pragma once

#include "nlflow/control.hpp"
#include "nlflow/forward.hpp"
#include "nlflow/models.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nlflow {

using Json = nlohmann::ordered_json;

const std::string& descriptor_schema_text();
const Json& descriptor_schema();

/// Validates `doc` against a schema subset (type, enum, required, properties,
/// additionalProperties = false, items, minItems, maxItems, minimum, maximum,
/// exclusiveMinimum, $ref into $defs). Returns "path: message" strings.
std::vector<std::string> schema_errors(const Json& doc, const Json& schema);

/// Copies schema defaults into missing object members.
Json with_defaults(const Json& doc, const Json& schema);

/// Parses, validates (ConfigError listing field paths) and fills defaults.
Json load_descriptor(const std::string& path);
Json resolve_descriptor(const Json& doc);

struct Problem {
    Json descriptor;
    std::string base_dir; ///< relative CSV paths resolve against this
    Grid grid;
    std::unique_ptr<VelocityModel> model;
    SolverConfig solver;
    Field initial;
    std::optional<Field> perturbation; ///< tangent-check direction; seeded random when absent
    std::optional<CostFunctional> functional;
    std::optional<Field> target; ///< manufactured-demand control
    DescentConfig descent;
    ForwardSetup setup;          ///< how the control layer runs the forward problem
    std::uint64_t seed = 1;
    std::string output_dir;
};

Problem build_problem(const Json& resolved, const std::string& base_dir = ".");
Field build_datum(const Json& spec, const Grid& grid, const std::string& base_dir);
/// The datum as a function of position; CSV data are interpolated from `grid`.
std::function<double(const Point&)> datum_function(const Json& spec, const Grid& grid, const std::string& base_dir);

} // namespace nlflow
