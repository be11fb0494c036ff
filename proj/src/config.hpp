#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "enclosure.hpp"
#include "needle.hpp"
#include "probe.hpp"

namespace ps {

enum class Task { Forward, Verify, Constants, Probe, Enclosure, Sweep };
const char* to_string(Task t);
Task parse_task(const std::string& s);

struct ForwardBlock {
    std::string data = "constant";  // constant | plane_wave | random
    cplx value{1.0, 0.0};           // constant datum
    double direction = 0.0;         // plane wave angle (radians)
    bool reference = false;         // compare with the concentric-disk series solution
    std::vector<double> convergence_h;  // extra mesh sizes for an error-ratio study
};

struct VerifyBlock {
    int samples = 10;
};

struct ConstantsBlock {
    bool calibration = true;   // disk eigenvalue oracles on the obstacle-free domain
    int audit_samples = 100;
    int chain_samples = 10;
    bool refine = true;        // repeat on the mesh with h/2
};

struct RingSpec {
    double distance = 0.2;
    int count = 16;
};

struct NeedleCheckSpec {
    Point2 tip{0.3, 0.0};
    Point2 anchor{1.0, 0.0};
    double cone_aperture_deg = 60.0;
    double cone_height = 0.0;  // 0 -> half the needle length
    double mid_ball_radius = 0.1;
    std::vector<std::pair<Point2, double>> off_balls;
};

struct ProbeBlock {
    std::string mode = "reconstruct";  // reconstruct | side_a | needle_energy
    std::string gap_mode = "exact";    // exact | fe
    int samples = 20;
    double sample_r_min = 0.5;
    double sample_r_max = 0.8;
    Point2 ray_anchor{0.0, 0.0};       // boundary point the ray leaves from
    std::vector<double> ray_distances{0.2, 0.1, 0.05, 0.025};
    RingSpec ring;
    double grid_delta = 0.05;
    NeedleParams needle;
    ClassifyParams classify;
    NeedlePolicy policy;
    NeedleCheckSpec needle_check;
};

struct EnclosureBlock {
    int directions = 16;
    EnclosureParams params;
};

struct SweepBlock {
    Point2 ray_anchor{0.0, 0.0};
    std::vector<double> ray_distances{0.2, 0.1, 0.05, 0.025};
    std::vector<Point2> needle_tips;   // probes whose series feed the dominance and reflected-energy checks
    double eps = -1.0;                 // < 0: eps* of the smallness report
    int ratio_fit = 50;
    int ratio_holdout = 50;
};

struct ExperimentConfig {
    Shape domain = Shape::disk({0.0, 0.0}, 1.0);
    ObstacleSpec obstacle;
    double k = 1.0;
    double h = 0.05;
    Task task = Task::Forward;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int threads = 0;
    ForwardBlock forward;
    VerifyBlock verify;
    ConstantsBlock constants;
    ProbeBlock probe;
    EnclosureBlock enclosure;
    SweepBlock sweep;
    nlohmann::json source;  // effective JSON after overrides
    std::vector<std::string> overrides;
};

/// Parses and validates; unknown keys and out-of-range values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Applies "a.b.c=value" to the JSON; value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace ps
