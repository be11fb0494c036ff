#include <probescope/probescope.h>

#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"
#include "runner.hpp"

using nlohmann::json;

struct ps_config {
    json base;                           // configuration as loaded
    std::vector<std::string> overrides;  // applied on top of base, recorded in run manifests
    json source;                         // base with overrides
    ps::ExperimentConfig cfg;
    std::string task;
};

struct ps_run {
    ps::RunResult result;
    std::string summary;
};

struct ps_problem {
    ps::ExperimentConfig cfg;
    ps::TriMesh mesh;
    std::unique_ptr<ps::DtnContext> dtn;
};

namespace {

thread_local std::string g_error;

template <class F>
ps_status guarded(F&& f) {
    try {
        f();
        g_error.clear();
        return PS_OK;
    } catch (const ps::Error& e) {
        g_error = e.what();
        return static_cast<ps_status>(e.code());
    } catch (const json::exception& e) {
        g_error = e.what();
        return PS_ERR_CONFIG;
    } catch (const std::exception& e) {
        g_error = e.what();
        return PS_ERR_INTERNAL;
    } catch (...) {
        g_error = "unknown error";
        return PS_ERR_INTERNAL;
    }
}

ps_status bad_argument(const char* what) {
    g_error = what;
    return PS_ERR_ARGUMENT;
}

ps_status make_config(json j, ps_config** out) {
    return guarded([&] {
        auto c = std::make_unique<ps_config>();
        c->cfg = ps::parse_config(j);
        c->base = j;
        c->source = std::move(j);
        c->task = ps::to_string(c->cfg.task);
        *out = c.release();
    });
}

}  // namespace

extern "C" {

const char* ps_version(void) { return ps::kVersion; }

const char* ps_last_error(void) { return g_error.c_str(); }

void ps_set_quiet(int quiet) { ps::set_quiet(quiet != 0); }

ps_status ps_config_load(const char* path, ps_config** out) {
    if (!path || !out) return bad_argument("null argument");
    *out = nullptr;
    json j;
    const ps_status s = guarded([&] {
        std::ifstream in(path);
        if (!in) throw ps::ConfigError(std::string("cannot read config ") + path);
        j = json::parse(in);
    });
    if (s != PS_OK) return s;
    return make_config(std::move(j), out);
}

ps_status ps_config_parse(const char* json_text, ps_config** out) {
    if (!json_text || !out) return bad_argument("null argument");
    *out = nullptr;
    json j;
    const ps_status s = guarded([&] { j = json::parse(json_text); });
    if (s != PS_OK) return s;
    return make_config(std::move(j), out);
}

ps_status ps_config_override(ps_config* cfg, const char* assignment) {
    if (!cfg || !assignment) return bad_argument("null argument");
    return guarded([&] {
        json j = cfg->source;
        ps::apply_override(j, assignment);
        cfg->cfg = ps::parse_config(j);
        cfg->source = std::move(j);
        cfg->overrides.push_back(assignment);
        cfg->task = ps::to_string(cfg->cfg.task);
    });
}

ps_status ps_config_hash(const ps_config* cfg, char* buf, size_t buf_len) {
    if (!cfg || !buf) return bad_argument("null argument");
    if (buf_len < 17) return bad_argument("hash buffer needs 17 bytes");
    const std::string h = ps::config_hash(cfg->source);
    std::memcpy(buf, h.c_str(), h.size() + 1);
    return PS_OK;
}

const char* ps_config_task(const ps_config* cfg) { return cfg ? cfg->task.c_str() : ""; }

void ps_config_free(ps_config* cfg) { delete cfg; }

ps_status ps_run_execute(const ps_config* cfg, const char* task, const char* out_dir, int threads, int64_t seed,
                         ps_run** out) {
    if (!cfg || !out) return bad_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        ps::RunOptions o;
        o.overrides = cfg->overrides;
        if (task) o.task = ps::parse_task(task);
        if (out_dir) o.out_dir = out_dir;
        if (threads > 0) o.threads = threads;
        if (seed >= 0) o.seed = static_cast<std::uint64_t>(seed);
        auto r = std::make_unique<ps_run>();
        r->result = ps::run_experiment(cfg->base, o);
        r->summary = r->result.summary.dump();
        *out = r.release();
    });
}

const char* ps_run_output_dir(const ps_run* run) { return run ? run->result.output_dir.c_str() : ""; }

size_t ps_run_file_count(const ps_run* run) { return run ? run->result.files.size() : 0; }

const char* ps_run_file(const ps_run* run, size_t index) {
    if (!run || index >= run->result.files.size()) return nullptr;
    return run->result.files[index].c_str();
}

const char* ps_run_summary(const ps_run* run) { return run ? run->summary.c_str() : ""; }

void ps_run_free(ps_run* run) { delete run; }

ps_status ps_problem_create(const ps_config* cfg, ps_problem** out) {
    if (!cfg || !out) return bad_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        auto p = std::make_unique<ps_problem>();
        p->cfg = cfg->cfg;
        p->mesh = ps::mesh_domain(p->cfg.domain, p->cfg.obstacle, p->cfg.h);
        p->dtn = std::make_unique<ps::DtnContext>(p->mesh, p->cfg.k, p->cfg.obstacle.lambda);
        *out = p.release();
    });
}

size_t ps_problem_outer_count(const ps_problem* p) { return p ? static_cast<size_t>(p->mesh.n_outer) : 0; }

ps_status ps_problem_outer_nodes(const ps_problem* p, double* xy) {
    if (!p || !xy) return bad_argument("null argument");
    for (int i = 0; i < p->mesh.n_outer; ++i) {
        xy[2 * i] = p->mesh.nodes[i].x;
        xy[2 * i + 1] = p->mesh.nodes[i].y;
    }
    return PS_OK;
}

ps_status ps_problem_gap(const ps_problem* p, const double* f_re, const double* f_im, double* gap_re, double* gap_im) {
    if (!p || !f_re || !gap_re || !gap_im) return bad_argument("null argument");
    return guarded([&] {
        ps::VecC f(p->mesh.n_outer);
        for (int i = 0; i < p->mesh.n_outer; ++i) f[i] = ps::cplx(f_re[i], f_im ? f_im[i] : 0.0);
        const ps::DtnGap g = p->dtn->gap(f);
        *gap_re = g.parts.real_sum();
        *gap_im = g.parts.imag;
    });
}

ps_status ps_problem_indicator(const ps_problem* p, double x, double y, double* value) {
    if (!p || !value) return bad_argument("null argument");
    return guarded([&] { *value = ps::indicator_function(*p->dtn, p->cfg.obstacle, {x, y}).value; });
}

void ps_problem_free(ps_problem* p) { delete p; }

}  // extern "C"
