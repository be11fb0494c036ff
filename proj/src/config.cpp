#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "error.hpp"

namespace ps {

using nlohmann::json;

const char* to_string(Task t) {
    switch (t) {
        case Task::Forward: return "forward";
        case Task::Verify: return "verify";
        case Task::Constants: return "constants";
        case Task::Probe: return "probe";
        case Task::Enclosure: return "enclosure";
        case Task::Sweep: return "sweep";
    }
    return "?";
}

Task parse_task(const std::string& s) {
    for (Task t : {Task::Forward, Task::Verify, Task::Constants, Task::Probe, Task::Enclosure, Task::Sweep})
        if (s == to_string(t)) return t;
    throw ConfigError("unknown task '" + s + "'");
}

namespace {

/// Strict view of a JSON object: every key must be consumed before `finish`.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError("missing key " + sub(key));
        return j_.at(key);
    }

    double num(const std::string& key, double def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(sub(key) + " must be a number");
        return v.get<double>();
    }

    int integer(const std::string& key, int def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(sub(key) + " must be an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(sub(key) + " must be a boolean");
        return v.get<bool>();
    }

    std::string str(const std::string& key, const std::string& def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(sub(key) + " must be a string");
        return v.get<std::string>();
    }

    std::vector<double> nums(const std::string& key, std::vector<double> def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(sub(key) + " must be an array of numbers");
        std::vector<double> out;
        for (auto& x : v) {
            if (!x.is_number()) throw ConfigError(sub(key) + " must be an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    Point2 point(const std::string& key, Point2 def) {
        if (!has(key)) return def;
        return to_point(j_.at(key), sub(key));
    }

    cplx complex(const std::string& key, cplx def) {
        if (!has(key)) return def;
        return to_complex(j_.at(key), sub(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key " + sub(it.key()));
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "config" : path_; }

    static Point2 to_point(const json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(path + " must be [x, y]");
        return {v[0].get<double>(), v[1].get<double>()};
    }

    static cplx to_complex(const json& v, const std::string& path) {
        if (v.is_number()) return {v.get<double>(), 0.0};
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(path + " must be a number or [re, im]");
        return {v[0].get<double>(), v[1].get<double>()};
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

Shape parse_shape(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string type = o.str("type", "");
    Shape s;
    if (type == "disk") {
        s = Shape::disk(o.point("center", {0, 0}), o.num("radius", 0));
    } else if (type == "ellipse") {
        s = Shape::ellipse(o.point("center", {0, 0}), o.num("a", 0), o.num("b", 0), o.num("rotation", 0));
    } else if (type == "polygon") {
        std::vector<Point2> v;
        const json& a = o.at("vertices");
        require(a.is_array(), o.sub("vertices") + " must be an array");
        for (size_t i = 0; i < a.size(); ++i) v.push_back(Obj::to_point(a[i], o.sub("vertices")));
        s = Shape::polygon(std::move(v));
    } else {
        throw ConfigError(o.sub("type") + " must be disk, ellipse or polygon");
    }
    o.finish();
    try {
        validate_shape(s);
    } catch (const GeometryError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return s;
}

void parse_needle(const json& j, NeedleParams& p) {
    Obj o(j, "probe.needle");
    p.n_max = o.integer("n_max", p.n_max);
    p.n_sources = o.integer("n_sources", p.n_sources);
    p.source_radius = o.num("source_radius", p.source_radius);
    p.d_first = o.num("d_first", p.d_first);
    p.d_last = o.num("d_last", p.d_last);
    p.d0_abs = o.num("d0", p.d0_abs);
    p.rho = o.num("rho", p.rho);
    p.alpha_first = o.num("alpha_first", p.alpha_first);
    p.alpha_last = o.num("alpha_last", p.alpha_last);
    p.max_misfit = o.num("max_misfit", p.max_misfit);
    o.finish();
    p.validate();
}

void parse_probe(const json& j, ProbeBlock& b) {
    Obj o(j, "probe");
    b.mode = o.str("mode", b.mode);
    require(b.mode == "reconstruct" || b.mode == "side_a" || b.mode == "needle_energy",
            "probe.mode must be reconstruct, side_a or needle_energy");
    b.gap_mode = o.str("gap_mode", b.gap_mode);
    require(b.gap_mode == "exact" || b.gap_mode == "fe", "probe.gap_mode must be exact or fe");
    b.samples = o.integer("samples", b.samples);
    require(b.samples >= 0, "probe.samples must be nonnegative");
    b.sample_r_min = o.num("sample_r_min", b.sample_r_min);
    b.sample_r_max = o.num("sample_r_max", b.sample_r_max);
    require(b.sample_r_min >= 0 && b.sample_r_max >= b.sample_r_min, "probe sample radii must satisfy 0 <= min <= max");
    b.ray_anchor = o.point("ray_anchor", b.ray_anchor);
    b.ray_distances = o.nums("ray_distances", b.ray_distances);
    for (double d : b.ray_distances) require(d > 0, "probe.ray_distances must be positive");
    if (o.has("ring")) {
        Obj r(o.at("ring"), "probe.ring");
        b.ring.distance = r.num("distance", b.ring.distance);
        b.ring.count = r.integer("count", b.ring.count);
        r.finish();
        require(b.ring.distance > 0 && b.ring.count > 0, "probe.ring needs positive distance and count");
    }
    b.grid_delta = o.num("grid_delta", b.grid_delta);
    require(b.grid_delta > 0, "probe.grid_delta must be positive");
    if (o.has("needle")) parse_needle(o.at("needle"), b.needle);
    if (o.has("classify")) {
        Obj c(o.at("classify"), "probe.classify");
        b.classify.tail = c.integer("tail", b.classify.tail);
        b.classify.converge_tol = c.num("converge_tol", b.classify.converge_tol);
        b.classify.blowup_factor = c.num("blowup_factor", b.classify.blowup_factor);
        c.finish();
        require(b.classify.tail >= 2 && b.classify.converge_tol > 0 && b.classify.blowup_factor > 0,
                "probe.classify values out of range");
    }
    if (o.has("policy")) {
        Obj c(o.at("policy"), "probe.policy");
        b.policy.fallback = c.boolean("fallback", b.policy.fallback);
        b.policy.boundary_margin = c.num("boundary_margin", b.policy.boundary_margin);
        b.policy.reaim_step = c.num("reaim_step", b.policy.reaim_step);
        c.finish();
        require(b.policy.boundary_margin >= 0 && b.policy.reaim_step > 0, "probe.policy values out of range");
    }
    if (o.has("needle_check")) {
        Obj c(o.at("needle_check"), "probe.needle_check");
        auto& n = b.needle_check;
        n.tip = c.point("tip", n.tip);
        n.anchor = c.point("anchor", n.anchor);
        n.cone_aperture_deg = c.num("cone_aperture_deg", n.cone_aperture_deg);
        n.cone_height = c.num("cone_height", n.cone_height);
        n.mid_ball_radius = c.num("mid_ball_radius", n.mid_ball_radius);
        if (c.has("off_balls")) {
            const json& a = c.at("off_balls");
            require(a.is_array(), "probe.needle_check.off_balls must be an array");
            n.off_balls.clear();
            for (auto& e : a) {
                Obj bo(e, "probe.needle_check.off_balls[]");
                n.off_balls.push_back({bo.point("center", {0, 0}), bo.num("radius", 0)});
                bo.finish();
                require(n.off_balls.back().second > 0, "off-needle ball radius must be positive");
            }
        }
        c.finish();
        require(n.cone_aperture_deg > 0 && n.cone_aperture_deg < 180, "cone aperture must lie in ]0, 180[ degrees");
        require(n.mid_ball_radius > 0 && n.cone_height >= 0, "needle check radii out of range");
    }
    o.finish();
}

void parse_enclosure(const json& j, EnclosureBlock& b) {
    Obj o(j, "enclosure");
    b.directions = o.integer("directions", b.directions);
    auto& p = b.params;
    p.tau = o.nums("tau", p.tau);
    p.regime_margin = o.num("regime_margin", p.regime_margin);
    p.growth_threshold = o.num("growth_threshold", p.growth_threshold);
    const std::string fit = o.str("fit", "asymptotic");
    require(fit == "asymptotic" || fit == "linear", "enclosure.fit must be asymptotic or linear");
    p.fit = fit == "linear" ? FitModel::Linear : FitModel::Asymptotic;
    p.prefactor_power = o.num("prefactor_power", p.prefactor_power);
    const std::string gm = o.str("gap_mode", "exact");
    require(gm == "exact" || gm == "fe", "enclosure.gap_mode must be exact or fe");
    p.mode = gm == "fe" ? GapMode::FiniteElement : GapMode::ExactField;
    o.finish();
    require(b.directions >= 8, "enclosure.directions must be at least 8");
    p.validate();
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    c.source = j;
    Obj o(j, "");
    c.task = parse_task(o.str("task", "forward"));
    const json& seed = o.has("seed") ? o.at("seed") : json(1);
    require(seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<long long>() >= 0),
            "seed must be a nonnegative integer");
    c.seed = seed.get<std::uint64_t>();
    c.output_dir = o.str("output_dir", c.output_dir);
    c.threads = o.integer("threads", c.threads);
    require(c.threads >= 0, "threads must be nonnegative");
    c.domain = o.has("domain") ? parse_shape(o.at("domain"), "domain") : c.domain;
    c.k = o.num("k", c.k);
    require(c.k >= 0, "k must be nonnegative");
    if (o.has("mesh")) {
        Obj m(o.at("mesh"), "mesh");
        c.h = m.num("h_target", c.h);
        m.finish();
    }
    require(c.h > 0, "mesh.h_target must be positive");
    if (o.has("obstacle")) {
        Obj ob(o.at("obstacle"), "obstacle");
        if (ob.has("components")) {
            const json& a = ob.at("components");
            require(a.is_array(), "obstacle.components must be an array");
            for (size_t i = 0; i < a.size(); ++i)
                c.obstacle.components.push_back(parse_shape(a[i], "obstacle.components[" + std::to_string(i) + "]"));
        }
        if (ob.has("lambda")) {
            const json& a = ob.at("lambda");
            require(a.is_array(), "obstacle.lambda must be an array (one value per component)");
            for (auto& v : a) c.obstacle.lambda.values.push_back(Obj::to_complex(v, "obstacle.lambda[]"));
        }
        ob.finish();
        require(c.obstacle.lambda.values.size() == c.obstacle.components.size(),
                "obstacle.lambda needs one value per component");
        for (cplx l : c.obstacle.lambda.values) require(l.imag() > 0, "Im lambda must be positive");
    }
    if (o.has("forward")) {
        Obj f(o.at("forward"), "forward");
        c.forward.data = f.str("data", c.forward.data);
        require(c.forward.data == "constant" || c.forward.data == "plane_wave" || c.forward.data == "random",
                "forward.data must be constant, plane_wave or random");
        c.forward.value = f.complex("value", c.forward.value);
        c.forward.direction = f.num("direction", c.forward.direction);
        c.forward.reference = f.boolean("reference", c.forward.reference);
        c.forward.convergence_h = f.nums("convergence_h", {});
        for (double h : c.forward.convergence_h) require(h > 0, "forward.convergence_h must be positive");
        f.finish();
    }
    if (o.has("verify")) {
        Obj v(o.at("verify"), "verify");
        c.verify.samples = v.integer("samples", c.verify.samples);
        v.finish();
        require(c.verify.samples > 0, "verify.samples must be positive");
    }
    if (o.has("constants")) {
        Obj v(o.at("constants"), "constants");
        c.constants.calibration = v.boolean("calibration", c.constants.calibration);
        c.constants.audit_samples = v.integer("audit_samples", c.constants.audit_samples);
        c.constants.chain_samples = v.integer("chain_samples", c.constants.chain_samples);
        c.constants.refine = v.boolean("refine", c.constants.refine);
        v.finish();
        require(c.constants.audit_samples >= 0 && c.constants.chain_samples >= 0, "constants sample counts must be nonnegative");
    }
    if (o.has("probe")) parse_probe(o.at("probe"), c.probe);
    if (o.has("enclosure")) {
        parse_enclosure(o.at("enclosure"), c.enclosure);
    } else {
        for (int t = 2; t <= 12; ++t) c.enclosure.params.tau.push_back(t);
    }
    if (o.has("sweep")) {
        Obj s(o.at("sweep"), "sweep");
        c.sweep.ray_anchor = s.point("ray_anchor", c.sweep.ray_anchor);
        c.sweep.ray_distances = s.nums("ray_distances", c.sweep.ray_distances);
        if (s.has("needle_tips")) {
            const json& a = s.at("needle_tips");
            require(a.is_array(), "sweep.needle_tips must be an array");
            for (auto& p : a) c.sweep.needle_tips.push_back(Obj::to_point(p, "sweep.needle_tips[]"));
        }
        c.sweep.eps = s.num("eps", c.sweep.eps);
        c.sweep.ratio_fit = s.integer("ratio_fit", c.sweep.ratio_fit);
        c.sweep.ratio_holdout = s.integer("ratio_holdout", c.sweep.ratio_holdout);
        s.finish();
        require(c.sweep.eps < 0 || (c.sweep.eps > 0 && c.sweep.eps < 1), "sweep.eps must lie in ]0, 1[");
        require(c.sweep.ratio_fit > 0 && c.sweep.ratio_holdout >= 0, "sweep ratio sample counts out of range");
        for (double d : c.sweep.ray_distances) require(d > 0, "sweep.ray_distances must be positive");
    }
    o.finish();
    try {
        validate_obstacle(c.domain, c.obstacle);
    } catch (const GeometryError&) {
        throw;
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_config(j);
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &j;
    std::stringstream ks(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ks, part, '.')) {
        if (part.empty()) throw ConfigError("empty path component in override " + key);
        parts.push_back(part);
    }
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object()) throw ConfigError("override path " + key + " crosses a non-object");
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ConfigError("override path " + key + " crosses a non-object");
    (*node)[parts.back()] = value;
}

std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ps
