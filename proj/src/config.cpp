#include "stochflow/config.hpp"

#include "stochflow/csv.hpp"
#include "stochflow/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace stochflow {

namespace {

std::vector<std::size_t> powers_of_two(int lo, int hi) {
    std::vector<std::size_t> out;
    for (int e = lo; e <= hi; ++e) out.push_back(std::size_t{1} << e);
    return out;
}

// ---------------------------------------------------------------------------
// Typed field access

std::string node_kind(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null: return "null";
        case YAML::NodeType::Scalar: return "scalar '" + n.Scalar() + "'";
        case YAML::NodeType::Sequence: return "sequence";
        case YAML::NodeType::Map: return "mapping";
        default: return "undefined";
    }
}

[[noreturn]] void type_error(const std::string& field, const std::string& expected, const YAML::Node& n) {
    throw SchemaError(field + ": expected " + expected + ", got " + node_kind(n));
}

double as_real(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) type_error(field, "real", n);
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        type_error(field, "real", n);
    }
}

std::uint64_t as_uint(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar() || n.Scalar().empty() || n.Scalar().front() == '-') type_error(field, "unsigned integer", n);
    try {
        return n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
        type_error(field, "unsigned integer", n);
    }
}

std::string as_string(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) type_error(field, "string", n);
    return n.Scalar();
}

template <class T, class F>
std::vector<T> as_list(const YAML::Node& n, const std::string& field, F&& element, const char* expected) {
    if (!n.IsSequence()) type_error(field, expected, n);
    std::vector<T> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        out.push_back(static_cast<T>(element(n[i], field + "[" + std::to_string(i) + "]")));
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const YAML::Node&, const std::string&)>;

template <class Section, class T>
Setter field(Section ExperimentConfig::*section, T Section::*member) {
    return [section, member](ExperimentConfig& cfg, const YAML::Node& n, const std::string& name) {
        T& slot = cfg.*section.*member;
        if constexpr (std::is_same_v<T, double>) {
            slot = as_real(n, name);
        } else if constexpr (std::is_same_v<T, std::string>) {
            slot = as_string(n, name);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            slot = as_list<double>(n, name, as_real, "list of reals");
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
            slot = as_list<std::size_t>(n, name, as_uint, "list of unsigned integers");
        } else {
            slot = static_cast<T>(as_uint(n, name));
        }
    };
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    using C = ExperimentConfig;
    static const std::map<std::string, std::map<std::string, Setter>> table{
        {"model",
         {{"dim", field(&C::model, &ModelConfig::dim)},
          {"noise_count", field(&C::model, &ModelConfig::noise_count)},
          {"bound", field(&C::model, &ModelConfig::bound)},
          {"drift_norm", field(&C::model, &ModelConfig::drift_norm)},
          {"family_seed", field(&C::model, &ModelConfig::family_seed)},
          {"alpha", field(&C::model, &ModelConfig::alpha)},
          {"sigma", field(&C::model, &ModelConfig::sigma)},
          {"alpha_rule", field(&C::model, &ModelConfig::alpha_rule)},
          {"sigma_rule", field(&C::model, &ModelConfig::sigma_rule)},
          {"skorokhod_sigma", field(&C::model, &ModelConfig::skorokhod_sigma)},
          {"cutoff", field(&C::model, &ModelConfig::cutoff)},
          {"p", field(&C::model, &ModelConfig::p)},
          {"n_max", field(&C::model, &ModelConfig::n_max)}}},
        {"grid",
         {{"s", field(&C::grid, &GridConfig::s)},
          {"t_end", field(&C::grid, &GridConfig::t_end)},
          {"steps", field(&C::grid, &GridConfig::steps)},
          {"ladder", field(&C::grid, &GridConfig::ladder)},
          {"k_ladder", field(&C::grid, &GridConfig::k_ladder)},
          {"t_min", field(&C::grid, &GridConfig::t_min)},
          {"t_max", field(&C::grid, &GridConfig::t_max)},
          {"t_points", field(&C::grid, &GridConfig::t_points)}}},
        {"monte_carlo",
         {{"n_paths", field(&C::monte_carlo, &MonteCarloConfig::n_paths)},
          {"seed", field(&C::monte_carlo, &MonteCarloConfig::seed)},
          {"n_seeds", field(&C::monte_carlo, &MonteCarloConfig::n_seeds)}}},
        {"solver",
         {{"chaos_order", field(&C::solver, &SolverConfig::chaos_order)},
          {"moment_l", field(&C::solver, &SolverConfig::moment_l)},
          {"picard_iterations", field(&C::solver, &SolverConfig::picard_iterations)},
          {"picard_tolerance", field(&C::solver, &SolverConfig::picard_tolerance)},
          {"euler_scheme", field(&C::solver, &SolverConfig::euler_scheme)}}},
        {"output", {{"dir", field(&C::output, &OutputConfig::dir)}}},
    };
    return table;
}

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw SchemaError(field + ": " + message);
}

bool strictly_increasing(const std::vector<std::size_t>& v) {
    return std::adjacent_find(v.begin(), v.end(), [](auto a, auto b) { return a >= b; }) == v.end();
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{
        "cross_solver",   "chaos_convergence", "inverse_flow_convergence", "moment_bound", "diagonal_moments",
        "skorokhod_vs_trace", "three_series",  "schatten_gamma",           "picard",       "orthogonality",
    };
    return names;
}

ExperimentConfig default_config(const std::string& experiment) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
        throw SchemaError("experiment: unknown experiment '" + experiment + "'");
    }
    ExperimentConfig c;
    c.experiment = experiment;
    auto& m = c.model;
    auto& g = c.grid;
    auto& mc = c.monte_carlo;
    if (experiment == "cross_solver") {
        m.dim = 4;
        m.noise_count = 2;
        m.bound = 0.6;
        m.drift_norm = 0.2;
        g.steps = 16384;
        g.ladder = powers_of_two(8, 13);
        mc.n_paths = 64;
    } else if (experiment == "chaos_convergence") {
        m.dim = 3;
        m.noise_count = 2;
        m.bound = 0.6;
        m.drift_norm = 0.2;
        g.steps = 1024;
        mc.n_paths = 1;
    } else if (experiment == "inverse_flow_convergence") {
        m.dim = 3;
        m.noise_count = 2;
        m.bound = 0.5;
        m.drift_norm = 0.2;
        g.ladder = powers_of_two(8, 13);
        mc.n_paths = 100;
    } else if (experiment == "moment_bound") {
        m.dim = 3;
        m.noise_count = 2;
        m.bound = 0.5;
        g.steps = 1024;
        g.ladder = powers_of_two(0, 6);
        mc.n_paths = 10000;
    } else if (experiment == "diagonal_moments") {
        for (double a : {-0.5, 0.0, 0.5}) {
            for (double s : {0.25, 0.5, 1.0}) {
                m.alpha.push_back(a);
                m.sigma.push_back(s);
            }
        }
        mc.n_paths = 100000;
    } else if (experiment == "skorokhod_vs_trace") {
        g.k_ladder = powers_of_two(6, 16);
    } else if (experiment == "schatten_gamma") {
        m.p = {2.0, 2.5, 3.0, 4.0, 6.0};
    } else if (experiment == "picard") {
        m.n_max = 3;
        m.dim = 9;
        m.noise_count = 2;
        m.bound = 0.5;
        g.steps = 256;
        mc.n_paths = 8;
    } else if (experiment == "orthogonality") {
        m.dim = 4;
        m.noise_count = 3;
        m.bound = 1.5;
        g.steps = 256;
        mc.n_paths = 100;
    }
    return c;
}

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw SchemaError(std::string("config: malformed YAML: ") + e.what());
    }
    if (!root.IsMap()) throw SchemaError("config: expected a mapping at the top level, got " + node_kind(root));
    const YAML::Node name = root["experiment"];
    if (!name) throw SchemaError("experiment: required field is missing");
    ExperimentConfig cfg = default_config(as_string(name, "experiment"));

    for (const auto& entry : root) {
        const std::string section = entry.first.as<std::string>();
        if (section == "experiment") continue;
        const auto it = schema().find(section);
        if (it == schema().end()) throw SchemaError(section + ": unknown section");
        if (entry.second.IsNull()) continue;
        if (!entry.second.IsMap()) type_error(section, "mapping", entry.second);
        for (const auto& kv : entry.second) {
            const std::string key = kv.first.as<std::string>();
            const std::string full = section + "." + key;
            const auto setter = it->second.find(key);
            if (setter == it->second.end()) throw SchemaError(full + ": unknown field");
            setter->second(cfg, kv.second, full);
        }
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("config: cannot open " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void validate(const ExperimentConfig& c) {
    const auto& names = experiment_names();
    require(std::find(names.begin(), names.end(), c.experiment) != names.end(), "experiment",
            "unknown experiment '" + c.experiment + "'");
    require(c.model.dim >= 1, "model.dim", "must be >= 1");
    require(c.model.bound >= 0.0, "model.bound", "must be >= 0");
    require(c.model.drift_norm >= 0.0, "model.drift_norm", "must be >= 0");
    require(c.model.alpha.size() == c.model.sigma.size(), "model.sigma", "must have as many entries as model.alpha");
    for (double s : c.model.sigma) require(s >= 0.0, "model.sigma", "entries must be >= 0");
    require(c.model.alpha_rule.size() == 3, "model.alpha_rule", "expected [coef, power, log_power]");
    require(c.model.sigma_rule.size() == 3, "model.sigma_rule", "expected [coef, power, log_power]");
    require(c.model.skorokhod_sigma >= 0.0, "model.skorokhod_sigma", "must be >= 0");
    require(c.model.cutoff >= 1, "model.cutoff", "must be >= 1");
    for (double p : c.model.p) require(p >= 1.0, "model.p", "Schatten exponents must be >= 1");
    require(c.grid.t_end > c.grid.s, "grid.t_end", "must exceed grid.s");
    require(c.grid.steps >= 1, "grid.steps", "must be >= 1");
    require(strictly_increasing(c.grid.ladder), "grid.ladder", "must be strictly increasing");
    require(strictly_increasing(c.grid.k_ladder), "grid.k_ladder", "must be strictly increasing");
    require(c.grid.t_min > 0.0 && c.grid.t_max > c.grid.t_min && c.grid.t_max <= 1.0, "grid.t_min",
            "need 0 < t_min < t_max <= 1");
    require(c.grid.t_points >= 8, "grid.t_points", "must be >= 8");
    require(c.monte_carlo.n_paths >= 1, "monte_carlo.n_paths", "must be >= 1");
    require(c.monte_carlo.n_seeds >= 1, "monte_carlo.n_seeds", "must be >= 1");
    require(c.solver.chaos_order >= 1, "solver.chaos_order", "must be >= 1");
    require(c.solver.moment_l >= 1, "solver.moment_l", "must be >= 1");
    require(c.solver.picard_iterations >= 1, "solver.picard_iterations", "must be >= 1");
    require(c.solver.euler_scheme == "exponential" || c.solver.euler_scheme == "plain", "solver.euler_scheme",
            "expected 'exponential' or 'plain'");
    require(!c.output.dir.empty(), "output.dir", "must not be empty");
}

std::string to_yaml(const ExperimentConfig& c) {
    YAML::Emitter e;
    auto reals = [&](const std::vector<double>& v) {
        e << YAML::Flow << YAML::BeginSeq;
        for (double x : v) e << csv::format_double(x);
        e << YAML::EndSeq;
    };
    auto uints = [&](const std::vector<std::size_t>& v) {
        e << YAML::Flow << YAML::BeginSeq;
        for (auto x : v) e << x;
        e << YAML::EndSeq;
    };
    auto real = [&](const char* key, double v) { e << YAML::Key << key << YAML::Value << csv::format_double(v); };
    e << YAML::BeginMap;
    e << YAML::Key << "experiment" << YAML::Value << c.experiment;
    e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dim" << YAML::Value << c.model.dim;
    e << YAML::Key << "noise_count" << YAML::Value << c.model.noise_count;
    real("bound", c.model.bound);
    real("drift_norm", c.model.drift_norm);
    e << YAML::Key << "family_seed" << YAML::Value << c.model.family_seed;
    e << YAML::Key << "alpha" << YAML::Value;
    reals(c.model.alpha);
    e << YAML::Key << "sigma" << YAML::Value;
    reals(c.model.sigma);
    e << YAML::Key << "alpha_rule" << YAML::Value;
    reals(c.model.alpha_rule);
    e << YAML::Key << "sigma_rule" << YAML::Value;
    reals(c.model.sigma_rule);
    real("skorokhod_sigma", c.model.skorokhod_sigma);
    e << YAML::Key << "cutoff" << YAML::Value << c.model.cutoff;
    e << YAML::Key << "p" << YAML::Value;
    reals(c.model.p);
    e << YAML::Key << "n_max" << YAML::Value << c.model.n_max;
    e << YAML::EndMap;
    e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    real("s", c.grid.s);
    real("t_end", c.grid.t_end);
    e << YAML::Key << "steps" << YAML::Value << c.grid.steps;
    e << YAML::Key << "ladder" << YAML::Value;
    uints(c.grid.ladder);
    e << YAML::Key << "k_ladder" << YAML::Value;
    uints(c.grid.k_ladder);
    real("t_min", c.grid.t_min);
    real("t_max", c.grid.t_max);
    e << YAML::Key << "t_points" << YAML::Value << c.grid.t_points;
    e << YAML::EndMap;
    e << YAML::Key << "monte_carlo" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "n_paths" << YAML::Value << c.monte_carlo.n_paths;
    e << YAML::Key << "seed" << YAML::Value << c.monte_carlo.seed;
    e << YAML::Key << "n_seeds" << YAML::Value << c.monte_carlo.n_seeds;
    e << YAML::EndMap;
    e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "chaos_order" << YAML::Value << c.solver.chaos_order;
    e << YAML::Key << "moment_l" << YAML::Value << c.solver.moment_l;
    e << YAML::Key << "picard_iterations" << YAML::Value << c.solver.picard_iterations;
    real("picard_tolerance", c.solver.picard_tolerance);
    e << YAML::Key << "euler_scheme" << YAML::Value << c.solver.euler_scheme;
    e << YAML::EndMap;
    e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dir" << YAML::Value << c.output.dir;
    e << YAML::EndMap;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

}  // namespace stochflow
