#include "eeb/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace eeb {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

/// Object view that records every key it reads, so unknown keys can be rejected.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    std::string at(const std::string& key) const { return join(path_, key); }

    const json& get(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) throw ConfigError(at(key), "required field is missing");
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(at(key), "must be finite");
        return d;
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

    int integer(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<int>();
    }
    int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : mark(key, fallback); }

    std::string text(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string text(const std::string& key, const std::string& fallback) {
        return has(key) ? text(key) : mark(key, fallback);
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return mark(key, fallback);
        const json& v = get(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = get(key);
        if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    void reject_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }

private:
    template <class T>
    T mark(const std::string& key, T v) {
        seen_.insert(key);
        return v;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json curve_json(const Curve& c) {
    const auto& p = c.params();
    switch (c.kind()) {
    case Curve::Kind::constant:
        return p[0];
    case Curve::Kind::exp_decay:
        return {{"type", "exp_decay"}, {"c0", p[0]}, {"c1", p[1]}, {"c2", p[2]}};
    case Curve::Kind::linear_ttm:
        return {{"type", "linear_ttm"}, {"c0", p[0]}, {"c1", p[1]}, {"maturity", p[2]}};
    case Curve::Kind::piecewise_constant:
        return {{"type", "piecewise_constant"}, {"breaks", c.breaks()}, {"values", p}};
    }
    return nullptr;
}

Curve curve_field(Fields& f, const std::string& key, json& out) {
    const Curve c = parse_curve(f.get(key), f.at(key));
    out[key] = curve_json(c);
    return c;
}

ModelSpec parse_model(const json& j, json& out, bool& sigma_per_strike) {
    Fields f(j, "model");
    const std::string type = f.text("type");
    out["type"] = type;
    ModelSpec m;
    if (type == "black_scholes" || type == "ou") {
        Curve r = curve_field(f, "r", out), q = curve_field(f, "q", out), s = curve_field(f, "sigma", out);
        if (type == "ou") {
            m = ArithmeticOU{r, q, s};
            out["sigma_per_strike"] = sigma_per_strike = f.boolean("sigma_per_strike", false);
        } else
        {
            m = BlackScholesTD{r, q, s};
        }
    } else if (type == "heston") {
        Heston h;
        h.r = curve_field(f, "r", out);
        h.q = curve_field(f, "q", out);
        h.kappa = curve_field(f, "kappa", out);
        h.theta = curve_field(f, "theta", out);
        h.eps = curve_field(f, "eps", out);
        h.rho = curve_field(f, "rho", out);
        out["v0"] = h.v0 = f.number("v0");
        m = h;
    } else if (type == "three_halves") {
        ThreeHalves t;
        out["kappa"] = t.kappa = f.number("kappa");
        out["eps"] = t.eps = f.number("eps");
        out["rho"] = t.rho = f.number("rho");
        t.theta = curve_field(f, "theta", out);
        t.r = curve_field(f, "r", out);
        t.q = curve_field(f, "q", out);
        out["v0"] = t.v0 = f.number("v0");
        m = t;
    } else if (type == "nig") {
        NIG n;
        out["alpha"] = n.alpha = f.number("alpha");
        out["beta"] = n.beta = f.number("beta");
        out["delta"] = n.delta = f.number("delta");
        out["mu"] = n.mu = f.number("mu", 0.0);
        n.r = curve_field(f, "r", out);
        n.q = curve_field(f, "q", out);
        m = n;
    } else {
        throw ConfigError("model.type", "unknown model '" + type +
                                            "' (black_scholes, ou, heston, three_halves, nig)");
    }
    f.reject_unknown();
    try {
        validate(m);
    } catch (const ValidationError& e) {
        throw ConfigError("model", e.what());
    }
    return m;
}

}  // namespace

Curve parse_curve(const json& j, const std::string& path) {
    if (j.is_number()) return Curve::constant(j.get<double>());
    Fields f(j, path);
    const std::string type = f.text("type");
    Curve c;
    try {
        if (type == "constant") {
            c = Curve::constant(f.number("c0"));
        } else if (type == "exp_decay") {
            c = Curve::exp_decay(f.number("c0"), f.number("c1"), f.number("c2"));
        } else if (type == "linear_ttm") {
            c = Curve::linear_ttm(f.number("c0"), f.number("c1"), f.number("maturity"));
        } else if (type == "piecewise_constant") {
            c = Curve::piecewise_constant(f.numbers("breaks"), f.numbers("values"));
        } else {
            throw ConfigError(join(path, "type"), "unknown curve type '" + type + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    f.reject_unknown();
    return c;
}

ModelSpec RunConfig::model_for(double K, double vol_scale) const {
    const double s = (sigma_per_strike ? K : 1.0) * vol_scale;
    return s == 1.0 ? model : with_vol_scale(model, s);
}

std::optional<CosConfig> RunConfig::cos_for(double K) const {
    if (!cos) return std::nullopt;
    CosConfig c = *cos;
    if (cos_half_width > 0.0) {
        c.a = std::log(K) - cos_half_width;
        c.b = std::log(K) + cos_half_width;
    }
    return c;
}

RunConfig parse_config(const json& j, std::uint64_t seed) {
    Fields root(j, "");
    RunConfig cfg;
    json& out = cfg.resolved;
    out = json::object();

    const json& schema = root.get("schema");
    if (!schema.is_number_integer() || schema.get<int>() != 1)
        throw ConfigError("schema", "unsupported schema version (expected 1)");
    out["schema"] = 1;

    json model_out = json::object();
    cfg.model = parse_model(root.get("model"), model_out, cfg.sigma_per_strike);
    out["model"] = model_out;
    const bool cf_model = has_characteristic_function(cfg.model);
    const bool nig = std::holds_alternative<NIG>(cfg.model);

    {
        Fields f(root.get("contract"), "contract");
        const std::string kind = f.text("kind", "put");
        if (kind == "put")
            cfg.kind = OptionKind::put;
        else if (kind == "call")
            cfg.kind = OptionKind::call;
        else
            throw ConfigError("contract.kind", "expected \"put\" or \"call\"");
        if (f.has("strikes") && f.has("strike"))
            throw ConfigError("contract", "give either strike or strikes, not both");
        cfg.strikes = f.has("strikes") ? f.numbers("strikes") : std::vector<double>{f.number("strike")};
        if (cfg.strikes.empty()) throw ConfigError("contract.strikes", "strike list is empty");
        for (std::size_t i = 0; i < cfg.strikes.size(); ++i)
            if (!(cfg.strikes[i] > 0.0))
                throw ConfigError("contract.strikes[" + std::to_string(i) + "]", "strike must be positive");
        cfg.maturity = f.number("maturity");
        if (!(cfg.maturity > 0.0)) throw ConfigError("contract.maturity", "must be positive");
        f.reject_unknown();
        out["contract"] = {{"kind", kind}, {"strikes", cfg.strikes}, {"maturity", cfg.maturity}};
    }

    {
        const json empty = json::object();
        Fields f(root.has("solver") ? root.get("solver") : empty, "solver");
        cfg.solver.steps = f.integer("steps", cfg.solver.steps);
        cfg.solver.tolerance = f.number("tolerance", 0.0);
        cfg.solver.max_iterations = f.integer("max_iterations", cfg.solver.max_iterations);
        const std::string rule = f.text("rule", "trapezoid");
        if (rule == "trapezoid")
            cfg.solver.rule = SolverConfig::Rule::trapezoid;
        else if (rule == "simpson")
            cfg.solver.rule = SolverConfig::Rule::simpson;
        else
            throw ConfigError("solver.rule", "expected \"trapezoid\" or \"simpson\"");
        cfg.solver.substeps = f.integer("substeps", 1);
        cfg.t0 = f.number("t0", 0.0);
        f.reject_unknown();
        try {
            cfg.solver.validate();
        } catch (const ValidationError& e) {
            throw ConfigError("solver", e.what());
        }
        if (!(cfg.t0 >= 0.0 && cfg.t0 < cfg.maturity)) throw ConfigError("solver.t0", "need 0 <= t0 < maturity");
        out["solver"] = {{"steps", cfg.solver.steps},       {"tolerance", cfg.solver.tolerance},
                         {"max_iterations", cfg.solver.max_iterations}, {"rule", rule},
                         {"substeps", cfg.solver.substeps}, {"t0", cfg.t0}};
    }

    if (root.has("cos")) {
        Fields f(root.get("cos"), "cos");
        const bool opt_in = f.boolean("opt_in", false);
        if (!cf_model)
            throw ConfigError("cos", "model " + model_name(cfg.model) + " has no characteristic function");
        if (!opt_in && std::holds_alternative<BlackScholesTD>(cfg.model))
            throw ConfigError("cos.opt_in", "black_scholes uses its closed-form density unless opt_in is true");
        CosConfig c;
        c.n = f.integer("n", 64);
        json cos_out = {{"n", c.n}, {"opt_in", opt_in}};
        if (f.has("half_width")) {
            if (f.has("a") || f.has("b")) throw ConfigError("cos", "give either half_width or a and b");
            cfg.cos_half_width = f.number("half_width");
            if (!(cfg.cos_half_width > 0.0)) throw ConfigError("cos.half_width", "must be positive");
            cos_out["half_width"] = cfg.cos_half_width;
        } else {
            c.a = f.number("a", -10.0);
            c.b = f.number("b", 10.0);
            cos_out["a"] = c.a;
            cos_out["b"] = c.b;
        }
        f.reject_unknown();
        try {
            c.validate();
        } catch (const ValidationError& e) {
            throw ConfigError("cos", e.what());
        }
        cfg.cos = c;
        out["cos"] = cos_out;
    } else if (cf_model && !std::holds_alternative<BlackScholesTD>(cfg.model)) {
        throw ConfigError("cos", "required for model " + model_name(cfg.model));
    }

    if (root.has("v_grid")) {
        if (!std::holds_alternative<ThreeHalves>(cfg.model))
            throw ConfigError("v_grid", "a variance grid is only valid with the three_halves model");
        cfg.v_grid = root.numbers("v_grid");
        if (cfg.v_grid.empty()) throw ConfigError("v_grid", "variance grid is empty");
        for (std::size_t i = 0; i < cfg.v_grid.size(); ++i)
            if (!(cfg.v_grid[i] > 0.0))
                throw ConfigError("v_grid[" + std::to_string(i) + "]", "variance must be positive");
        out["v_grid"] = cfg.v_grid;
    }

    if (root.has("lattice")) {
        Fields f(root.get("lattice"), "lattice");
        if (f.has("times")) cfg.lattice.times = f.numbers("times");
        if (f.has("spots")) cfg.lattice.spots = f.numbers("spots");
        cfg.fd_compare = f.boolean("fd_compare", false);
        f.reject_unknown();
    }
    if (cfg.lattice.times.empty()) cfg.lattice.times = {cfg.t0};
    for (std::size_t i = 0; i < cfg.lattice.times.size(); ++i) {
        const double t = cfg.lattice.times[i];
        if (!(t >= cfg.t0 && t <= cfg.maturity))
            throw ConfigError("lattice.times[" + std::to_string(i) + "]", "outside [t0, maturity]");
    }
    for (std::size_t i = 0; i < cfg.lattice.spots.size(); ++i)
        if (!std::isfinite(cfg.lattice.spots[i]))
            throw ConfigError("lattice.spots[" + std::to_string(i) + "]", "must be finite");
    out["lattice"] = {{"times", cfg.lattice.times}, {"spots", cfg.lattice.spots}, {"fd_compare", cfg.fd_compare}};

    {
        const json empty = json::object();
        Fields f(root.has("oracle") ? root.get("oracle") : empty, "oracle");
        OracleOptions& o = cfg.oracle;
        o.binomial_steps = f.integer("binomial_steps", o.binomial_steps);
        o.lattice.space_nodes = f.integer("space_nodes", o.lattice.space_nodes);
        o.lattice.time_steps = f.integer("time_steps", o.lattice.time_steps);
        o.price_tolerance = f.number("price_tolerance", o.price_tolerance);
        o.boundary_tolerance = f.number("boundary_tolerance", o.boundary_tolerance);
        f.reject_unknown();
        if (o.binomial_steps < 1) throw ConfigError("oracle.binomial_steps", "must be positive");
        if (!(o.price_tolerance > 0.0)) throw ConfigError("oracle.price_tolerance", "must be positive");
        if (!(o.boundary_tolerance > 0.0)) throw ConfigError("oracle.boundary_tolerance", "must be positive");
        try {
            o.lattice.validate();
        } catch (const ValidationError& e) {
            throw ConfigError("oracle", e.what());
        }
        out["oracle"] = {{"binomial_steps", o.binomial_steps},     {"space_nodes", o.lattice.space_nodes},
                         {"time_steps", o.lattice.time_steps},     {"price_tolerance", o.price_tolerance},
                         {"boundary_tolerance", o.boundary_tolerance}};
    }

    if (root.has("jump")) {
        if (!nig) throw ConfigError("jump", "jump options are only valid with the nig model");
        Fields f(root.get("jump"), "jump");
        cfg.jump.table_points = f.integer("table_points", cfg.jump.table_points);
        cfg.jump.flat_tolerance = f.number("flat_tolerance", cfg.jump.flat_tolerance);
        f.reject_unknown();
        if (cfg.jump.table_points < 3) throw ConfigError("jump.table_points", "need at least 3 points");
    }
    if (nig) out["jump"] = {{"table_points", cfg.jump.table_points}, {"flat_tolerance", cfg.jump.flat_tolerance}};

    root.reject_unknown();
    cfg.seed = seed;
    out["seed"] = seed;
    return cfg;
}

RunConfig load_config(const std::string& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j, seed);
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = cfg.resolved.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace eeb
