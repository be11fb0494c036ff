#include <probescope/probescope.h>

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

namespace {

struct Flags {
    std::string config;
    std::string out;
    int threads = 0;
    long long seed = -1;
    std::vector<std::string> overrides;
    bool quiet = false;
};

void add_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    app->add_option("--out", f.out, "output directory (overrides PROBESCOPE_OUT and output_dir)");
    app->add_option("--threads", f.threads, "worker threads (0 = available parallelism)")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", f.seed, "random seed")->check(CLI::NonNegativeNumber);
    app->add_option("--override", f.overrides, "key=value applied to the config (repeatable)");
    app->add_flag("--quiet", f.quiet, "suppress warnings");
}

int fail(ps_status s) {
    std::fprintf(stderr, "probescope: %s\n", ps_last_error());
    return static_cast<int>(s);
}

int run(const Flags& f, const char* task) {
    ps_set_quiet(f.quiet ? 1 : 0);
    ps_config* cfg = nullptr;
    ps_status s = ps_config_load(f.config.c_str(), &cfg);
    if (s != PS_OK) return fail(s);
    for (const auto& o : f.overrides) {
        s = ps_config_override(cfg, o.c_str());
        if (s != PS_OK) {
            ps_config_free(cfg);
            return fail(s);
        }
    }
    ps_run* r = nullptr;
    s = ps_run_execute(cfg, task, f.out.empty() ? nullptr : f.out.c_str(), f.threads, f.seed, &r);
    ps_config_free(cfg);
    if (s != PS_OK) return fail(s);
    std::printf("%s\n", ps_run_output_dir(r));
    for (size_t i = 0; i < ps_run_file_count(r); ++i) std::printf("  %s\n", ps_run_file(r, i));
    ps_run_free(r);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probe and enclosure experiments for impedance obstacles (Helmholtz DtN)"};
    app.set_version_flag("--version", std::string(ps_version()));
    app.require_subcommand(1);

    Flags flags;
    const char* chosen = nullptr;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {{"run", "run the task named in the config"},
                        {"forward", "forward impedance solve"},
                        {"verify", "gap identity check on random data"},
                        {"constants", "domain constants and smallness conditions"},
                        {"probe", "probe method (side A, reconstruction, needle energies)"},
                        {"enclosure", "enclosure method support estimates and hull"},
                        {"sweep", "reflected-energy sweep and needle-series checks"}};
    for (const Sub& sub : subs) {
        CLI::App* c = app.add_subcommand(sub.name, sub.help);
        add_flags(c, flags);
        const char* name = sub.name;
        c->callback([&chosen, name] { chosen = std::string(name) == "run" ? nullptr : name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run(flags, chosen);
}
