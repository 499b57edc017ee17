// Batch front-end: generate synthetic scenes, run force-aware pose
// optimization, evaluate metrics, and run ablation sweeps. Every command
// is deterministic given its inputs and seed; scene-level parallelism
// (--jobs) never changes output bytes because results are assembled in
// scene order.

#include "dff/dffield.hpp"
#include "dff/geometry.hpp"
#include "dff/hand_model.hpp"
#include "dff/metrics.hpp"
#include "dff/optimizer.hpp"
#include "dff/scenegen.hpp"
#include "dff/tactile.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dff;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

// ------------------------------------------------------------------ logging

enum class LogLevel { Debug = 0, Info, Warn, Error };

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("DFF_LOG");
        std::string s = env ? env : "warn";
        if (s == "debug") return LogLevel::Debug;
        if (s == "info") return LogLevel::Info;
        if (s == "error") return LogLevel::Error;
        return LogLevel::Warn;
    }();
    return level;
}

void log(LogLevel level, const std::string& msg) {
    static const char* names[] = {"debug", "info", "warn", "error"};
    if (level >= log_level())
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

// ------------------------------------------------------------- config file

// Flat key=value lines; '#' starts a comment. Keys use the flag spelling
// without the leading dashes (e.g. "iterations=50", "pair-mode=keypoints").
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

bool parse_bool(const std::string& s) {
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw std::runtime_error("not a boolean: " + s);
}

// Options shared by optimize/ablate; config file first, flags override.
struct OptimFlags {
    OptimConfig cfg;
    bool fixed_force_mode = false;
    std::string pair_mode = "keypoints";

    void apply_config(const std::map<std::string, std::string>& kv) {
        for (const auto& [k, v] : kv) {
            if (k == "iterations") cfg.iterations = std::stoi(v);
            else if (k == "lr") cfg.learning_rate = std::stod(v);
            else if (k == "weight-energy") cfg.weight_energy = std::stod(v);
            else if (k == "weight-lr") cfg.weight_lr = std::stod(v);
            else if (k == "weight-lo") cfg.weight_lo = std::stod(v);
            else if (k == "repair-every") cfg.repair_every = std::stoi(v);
            else if (k == "surface-density") cfg.surface_density = std::stoi(v);
            else if (k == "disable-barrier") cfg.disable_barrier = parse_bool(v);
            else if (k == "disable-relative") cfg.disable_relative = parse_bool(v);
            else if (k == "disable-lr") cfg.disable_lr = parse_bool(v);
            else if (k == "disable-lo") cfg.disable_lo = parse_bool(v);
            else if (k == "fixed-force") fixed_force_mode = parse_bool(v);
            else if (k == "pair-mode") pair_mode = v;
            else if (k == "barrier-threshold") cfg.dffield.barrier_threshold = std::stod(v);
            else if (k == "query-radius") cfg.dffield.query_radius = std::stod(v);
            else log(LogLevel::Warn, "ignoring unknown config key: " + k);
        }
    }

    void finalize() {
        if (pair_mode == "keypoints") cfg.dffield.pair_mode = PairMode::Keypoints;
        else if (pair_mode == "all-surface") cfg.dffield.pair_mode = PairMode::AllSurfacePoints;
        else throw std::runtime_error("unknown pair mode: " + pair_mode);
        cfg.validate();
    }
};

void add_optim_flags(CLI::App* cmd, OptimFlags& of) {
    cmd->add_option("--iterations", of.cfg.iterations, "Adam iterations");
    cmd->add_option("--lr", of.cfg.learning_rate, "learning rate");
    cmd->add_option("--pair-mode", of.pair_mode, "keypoints | all-surface");
    cmd->add_flag("--disable-barrier", of.cfg.disable_barrier, "drop the barrier term");
    cmd->add_flag("--disable-relative", of.cfg.disable_relative,
                  "drop the relative potential term");
    cmd->add_flag("--disable-lr", of.cfg.disable_lr, "drop the joint regularizer");
    cmd->add_flag("--disable-lo", of.cfg.disable_lo, "drop the deviation term");
    cmd->add_flag("--fixed-force", of.fixed_force_mode,
                  "ignore tactile files; fixed per-region force 0.5");
    cmd->add_option("--repair-every", of.cfg.repair_every, "pair refresh period");
    cmd->add_option("--surface-density", of.cfg.surface_density,
                    "samples per bone in all-surface mode");
}

// ------------------------------------------------------------ worker pool

// Runs fn(i) for i in [0, n) on `jobs` threads. Exceptions are collected
// and the first one rethrown.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::mutex err_mutex;
    std::exception_ptr first_error;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ----------------------------------------------------------------- helpers

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct LoadedScene {
    std::string id;       // scene directory name
    std::string dir;
    Scene scene;
    bool has_tactile = false;
};

LoadedScene load_scene_checked(const std::string& manifest_path) {
    LoadedScene ls;
    fs::path p(manifest_path);
    if (!fs::exists(p)) throw std::runtime_error("no such manifest: " + manifest_path);
    ls.scene = load_scene(manifest_path);
    ls.dir = p.parent_path().string();
    ls.id = p.parent_path().filename().string();
    ls.has_tactile = fs::exists(p.parent_path() / "tactile.json") &&
                     !ls.scene.tactile.readings.empty();
    return ls;
}

std::vector<std::string> read_index(const std::string& index_path) {
    std::ifstream in(index_path);
    if (!in) throw std::runtime_error("cannot open index: " + index_path);
    json idx = json::parse(in);
    std::vector<std::string> manifests;
    fs::path base = fs::path(index_path).parent_path();
    for (const auto& m : idx.at("scenes"))
        manifests.push_back((base / m.get<std::string>()).string());
    if (manifests.empty()) throw std::runtime_error("scene index is empty");
    return manifests;
}

// Region forces for one scene under the given mode. Missing tactile data
// falls back to the tactile-independent fixed-force mode.
RegionForces scene_forces(const LoadedScene& ls, const HandDescription& desc,
                          const SensorLayout& layout, bool fixed_force_mode,
                          const SpatialIndex& object_index) {
    if (!fixed_force_mode && ls.has_tactile)
        return region_average(ls.scene.tactile, layout);
    if (!fixed_force_mode)
        log(LogLevel::Warn, "scene " + ls.id + ": no tactile frame, using fixed-force fallback");
    HandState state = forward_kinematics(desc, ls.scene.init_pose);
    return fixed_force(state, object_index);
}

MetricsReport evaluate_pose(const HandDescription& desc, const Scene& scene,
                            const MeshQuery& query, const HandPose& pose) {
    HandState state = forward_kinematics(desc, pose);
    HandState gt = forward_kinematics(desc, scene.gt_pose);
    PointCloud samples = surface_samples(desc, state, 32);
    PointCloud gt_samples = surface_samples(desc, gt, 32);
    MetricsReport r;
    r.mpjpe_mm = mpjpe(state.joints, gt.joints);
    r.pd_mm = penetration_depth(samples, query);
    r.ciou = contact_iou(contact_mask(scene.object, samples, 3.0), scene.gt_contact_mask);
    r.cd_mm = chamfer_distance(samples, gt_samples);
    return r;
}

std::string metrics_csv_row(const std::string& scene_id, const std::string& frame,
                            const MetricsReport& r) {
    std::string row = scene_id + "," + frame + "," + format_double(r.mpjpe_mm) + "," +
                      format_double(r.pd_mm) + "," + format_double(r.ciou) + ",";
    if (r.cd_mm) row += format_double(*r.cd_mm);
    row += ",";
    if (r.iou) row += format_double(*r.iou);
    return row;
}

void write_file(const std::string& path, const std::string& content) {
    if (!path.empty() && fs::path(path).has_parent_path())
        fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << content;
}

// --------------------------------------------------------------- generate

int cmd_generate(const std::string& out_dir, int count, uint64_t seed, const SceneSpec& base,
                 int jobs) {
    HandDescription desc = HandDescription::default_hand();
    SensorLayout layout = SensorLayout::default_layout(desc);

    fs::create_directories(out_dir);
    std::vector<std::string> manifest_names(count);
    parallel_for(count, jobs, [&](int i) {
        SceneSpec spec = base;
        spec.seed = seed + uint64_t(i);
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d", i);
        Scene scene = generate_scene(spec, desc, layout);
        save_scene(scene, (fs::path(out_dir) / name).string());
        manifest_names[i] = std::string(name) + "/manifest.json";
        log(LogLevel::Info, std::string("generated ") + name);
    });

    json index;
    index["seed"] = seed;
    index["scenes"] = manifest_names;
    write_file((fs::path(out_dir) / "index.json").string(), index.dump(2) + "\n");
    return kExitOk;
}

// --------------------------------------------------------------- optimize

struct OptimizeOutcome {
    OptimResult result;
    RegionForces forces;
};

OptimizeOutcome run_optimize(const LoadedScene& ls, const HandDescription& desc,
                             const SensorLayout& layout, const OptimFlags& of) {
    PointCloud cloud;
    cloud.points = ls.scene.object.vertices;
    SpatialIndex index(cloud);
    OptimScene os;
    os.desc = &desc;
    os.object_index = &index;
    os.layout = &layout;
    os.forces = scene_forces(ls, desc, layout, of.fixed_force_mode, index);
    OptimizeOutcome out;
    out.forces = os.forces;
    out.result = optimize(ls.scene.init_pose, os, of.cfg);
    return out;
}

int cmd_optimize(const std::string& scene_path, const std::string& index_path,
                 const std::string& out_path, const std::string& pose_out, OptimFlags of,
                 int jobs, bool emit_timing) {
    HandDescription desc = HandDescription::default_hand();
    SensorLayout layout = SensorLayout::default_layout(desc);
    of.finalize();

    std::vector<std::string> manifests =
        index_path.empty() ? std::vector<std::string>{scene_path} : read_index(index_path);

    std::vector<OptimStatus> statuses(manifests.size(), OptimStatus::Completed);
    parallel_for(static_cast<int>(manifests.size()), jobs, [&](int i) {
        LoadedScene ls = load_scene_checked(manifests[i]);
        OptimizeOutcome out = run_optimize(ls, desc, layout, of);
        statuses[i] = out.result.status;

        std::string result_path =
            !out_path.empty() && index_path.empty()
                ? out_path
                : (fs::path(ls.dir) / "result.json").string();
        write_file(result_path, result_to_json(out.result, emit_timing) + "\n");
        std::string refined_path = !pose_out.empty() && index_path.empty()
                                       ? pose_out
                                       : (fs::path(ls.dir) / "refined.json").string();
        save_pose(out.result.final, refined_path);
        log(LogLevel::Info, "optimized " + ls.id);
    });

    for (OptimStatus s : statuses)
        if (s == OptimStatus::AbortedNan) {
            log(LogLevel::Error, "optimization aborted on NaN");
            return kExitNumeric;
        }
    return kExitOk;
}

// --------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& scene_path, const std::string& index_path,
                 const std::vector<std::string>& pose_files, const std::string& out_csv,
                 int jobs) {
    HandDescription desc = HandDescription::default_hand();
    std::vector<std::string> manifests =
        index_path.empty() ? std::vector<std::string>{scene_path} : read_index(index_path);

    std::vector<std::vector<std::string>> rows(manifests.size());
    parallel_for(static_cast<int>(manifests.size()), jobs, [&](int i) {
        LoadedScene ls = load_scene_checked(manifests[i]);
        MeshQuery query(ls.scene.object);

        // Explicit pose files, or the scene's init plus refined when present.
        std::vector<std::pair<std::string, HandPose>> poses;
        if (!pose_files.empty()) {
            for (const auto& pf : pose_files)
                poses.emplace_back(fs::path(pf).stem().string(), load_pose(pf));
        } else {
            poses.emplace_back("init", ls.scene.init_pose);
            fs::path refined = fs::path(ls.dir) / "refined.json";
            if (fs::exists(refined)) poses.emplace_back("refined", load_pose(refined.string()));
        }
        for (const auto& [frame, pose] : poses)
            rows[i].push_back(
                metrics_csv_row(ls.id, frame, evaluate_pose(desc, ls.scene, query, pose)));
    });

    std::string csv = "scene_id,frame,mpjpe_mm,pd_mm,ciou,cd_mm,iou\n";
    for (const auto& scene_rows : rows)  // manifest order == sorted scene id order
        for (const auto& row : scene_rows) csv += row + "\n";
    if (out_csv.empty())
        std::cout << csv;
    else
        write_file(out_csv, csv);
    return kExitOk;
}

// ----------------------------------------------------------------- ablate

int cmd_ablate(const std::string& index_path, const std::string& out_csv, OptimFlags base,
               int jobs) {
    HandDescription desc = HandDescription::default_hand();
    SensorLayout layout = SensorLayout::default_layout(desc);
    base.finalize();
    std::vector<std::string> manifests = read_index(index_path);

    struct Variant {
        const char* name;
        bool no_b, no_e, no_r, no_o, fixed;
    };
    const Variant variants[] = {
        {"full", false, false, false, false, false},
        {"no_barrier", true, false, false, false, false},
        {"no_relative", false, true, false, false, false},
        {"no_Lr", false, false, true, false, false},
        {"no_Lo", false, false, false, true, false},
        {"fixed_force", false, false, false, false, true},
    };
    const int n_scenes = static_cast<int>(manifests.size());
    const int n_variants = static_cast<int>(std::size(variants));

    // metric[variant][scene]
    std::vector<std::vector<MetricsReport>> reports(n_variants,
                                                    std::vector<MetricsReport>(n_scenes));
    parallel_for(n_scenes, jobs, [&](int i) {
        LoadedScene ls = load_scene_checked(manifests[i]);
        MeshQuery query(ls.scene.object);
        for (int v = 0; v < n_variants; ++v) {
            OptimFlags of = base;
            of.cfg.disable_barrier |= variants[v].no_b;
            of.cfg.disable_relative |= variants[v].no_e;
            of.cfg.disable_lr |= variants[v].no_r;
            of.cfg.disable_lo |= variants[v].no_o;
            of.fixed_force_mode |= variants[v].fixed;
            OptimizeOutcome out = run_optimize(ls, desc, layout, of);
            reports[v][i] = evaluate_pose(desc, ls.scene, query, out.result.final);
        }
        log(LogLevel::Info, "ablated " + ls.id);
    });

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    std::string csv = "config,median_mpjpe_mm,median_pd_mm,median_ciou\n";
    for (int v = 0; v < n_variants; ++v) {
        std::vector<double> mp, pd, ci;
        for (const auto& r : reports[v]) {
            mp.push_back(r.mpjpe_mm);
            pd.push_back(r.pd_mm);
            ci.push_back(r.ciou);
        }
        csv += std::string(variants[v].name) + "," + format_double(median(mp)) + "," +
               format_double(median(pd)) + "," + format_double(median(ci)) + "\n";
    }
    if (out_csv.empty())
        std::cout << csv;
    else
        write_file(out_csv, csv);
    return kExitOk;
}

// ---------------------------------------------------------------- inspect

int cmd_inspect(const std::string& scene_path) {
    HandDescription desc = HandDescription::default_hand();
    SensorLayout layout = SensorLayout::default_layout(desc);
    LoadedScene ls = load_scene_checked(scene_path);
    MeshQuery query(ls.scene.object);

    json out;
    out["scene_id"] = ls.id;
    out["object"] = {{"kind", object_kind_to_string(ls.scene.spec.kind)},
                     {"vertices", ls.scene.object.vertices.size()},
                     {"triangles", ls.scene.object.triangles.size()},
                     {"watertight", ls.scene.object.is_watertight()}};
    int marked = 0;
    for (uint8_t f : ls.scene.gt_contact_mask.flags) marked += f;
    out["gt_contact_vertices"] = marked;

    if (ls.has_tactile) {
        double mx = 0, sum = 0;
        int active = 0;
        for (double r : ls.scene.tactile.readings) {
            mx = std::max(mx, r);
            sum += r;
            active += r > 0;
        }
        out["tactile"] = {{"sensors", ls.scene.tactile.readings.size()},
                          {"active", active},
                          {"max", mx},
                          {"mean", sum / ls.scene.tactile.readings.size()}};
    } else {
        out["tactile"] = nullptr;
    }

    MetricsReport init = evaluate_pose(desc, ls.scene, query, ls.scene.init_pose);
    out["init"] = {{"mpjpe_mm", init.mpjpe_mm}, {"pd_mm", init.pd_mm}, {"ciou", init.ciou}};

    PointCloud cloud;
    cloud.points = ls.scene.object.vertices;
    SpatialIndex index(cloud);
    RegionForces forces = scene_forces(ls, desc, layout, false, index);
    HandState state = forward_kinematics(desc, ls.scene.init_pose);
    DfFieldConfig dcfg;
    HandPoints hand = pairing_points(desc, state, dcfg);
    std::vector<PointPair> pairs = establish_pairs(hand, index, forces, dcfg);
    EnergyBreakdown energy = total_energy(pairs, dcfg);
    out["init_energy"] = {{"relative", energy.relative},
                          {"barrier", energy.barrier},
                          {"total", energy.total},
                          {"pair_count", pairs.size()}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DF-Field synthetic grasp pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    int jobs = 1;
    std::string config_path;
    app.add_option("--jobs", jobs, "scene-level parallelism")->capture_default_str();
    app.add_option("--config", config_path, "flat key=value config file; flags win");

    // generate
    auto* gen = app.add_subcommand("generate", "create synthetic scenes");
    std::string gen_out, gen_kind = "box", gen_spec_file;
    int gen_count = 1;
    uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    SceneSpec gen_base;
    std::vector<double> gen_dims{55, 48, 42}, gen_approach{0, 0, -1};
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--count", gen_count, "number of scenes");
    gen->add_option("--seed", gen_seed, "base seed; scene i uses seed+i")
        ->each([&](const std::string&) { gen_seed_set = true; });
    gen->add_option("--kind", gen_kind, "sphere | box | cylinder | superellipsoid");
    gen->add_option("--dims", gen_dims, "object dimensions, mm")->expected(1, 3);
    gen->add_option("--level", gen_base.level, "tessellation level");
    gen->add_option("--approach", gen_approach, "approach direction")->expected(3);
    gen->add_option("--sigma-trans", gen_base.sigma_trans_mm, "translation noise, mm");
    gen->add_option("--sigma-rot", gen_base.sigma_rot_rad, "global rotation noise, rad");
    gen->add_option("--sigma-joint", gen_base.sigma_joint_rad, "joint noise, rad");
    gen->add_option("--spec", gen_spec_file, "JSON SceneSpec file (inline flags override)");

    // optimize
    auto* opt = app.add_subcommand("optimize", "refine a scene's initial pose");
    std::string opt_scene, opt_index, opt_out, opt_pose_out;
    bool opt_timing = false;
    OptimFlags opt_flags;
    opt->add_option("--scene", opt_scene, "scene manifest.json");
    opt->add_option("--index", opt_index, "index.json for batch optimization");
    opt->add_option("--out", opt_out, "result JSON path (single scene)");
    opt->add_option("--pose-out", opt_pose_out, "refined pose JSON path (single scene)");
    opt->add_flag("--emit-timing", opt_timing, "include wall_ms in result JSON");
    add_optim_flags(opt, opt_flags);

    // evaluate
    auto* eva = app.add_subcommand("evaluate", "metric rows for poses against a scene");
    std::string eva_scene, eva_index, eva_out;
    std::vector<std::string> eva_poses;
    eva->add_option("--scene", eva_scene, "scene manifest.json");
    eva->add_option("--index", eva_index, "index.json for batch evaluation");
    eva->add_option("--pose", eva_poses, "pose JSON file(s); default init + refined");
    eva->add_option("--out", eva_out, "CSV path (stdout when omitted)");

    // ablate
    auto* abl = app.add_subcommand("ablate", "per-term ablation medians over an index");
    std::string abl_index, abl_out;
    OptimFlags abl_flags;
    abl->add_option("--index", abl_index, "index.json")->required();
    abl->add_option("--out", abl_out, "CSV path (stdout when omitted)");
    add_optim_flags(abl, abl_flags);

    // inspect
    auto* ins = app.add_subcommand("inspect", "print a scene summary as JSON");
    std::string ins_scene;
    ins->add_option("--scene", ins_scene, "scene manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        std::map<std::string, std::string> file_cfg;
        if (!config_path.empty()) file_cfg = read_config_file(config_path);
        auto config_uint = [&](const char* key, uint64_t& target, bool flag_set) {
            if (!flag_set && file_cfg.count(key)) target = std::stoull(file_cfg.at(key));
        };
        if (file_cfg.count("jobs") && !app.count("--jobs"))
            jobs = std::stoi(file_cfg.at("jobs"));

        if (gen->parsed()) {
            config_uint("seed", gen_seed, gen_seed_set);
            if (!gen_seed_set && !file_cfg.count("seed"))
                throw std::runtime_error("generate requires --seed (or seed= in the config)");
            if (!gen_spec_file.empty()) {
                std::ifstream in(gen_spec_file);
                if (!in) throw std::runtime_error("cannot open spec file: " + gen_spec_file);
                // Reuse the scene manifest spec schema.
                json j = json::parse(in);
                gen_base.kind = object_kind_from_string(j.at("kind"));
                const auto& d = j.at("dims_mm");
                gen_base.dims_mm = Vec3(d.at(0), d.at(1), d.at(2));
                if (j.contains("level")) gen_base.level = j.at("level");
                if (!gen->count("--kind")) gen_kind = object_kind_to_string(gen_base.kind);
                if (!gen->count("--dims"))
                    gen_dims = {gen_base.dims_mm.x(), gen_base.dims_mm.y(), gen_base.dims_mm.z()};
            }
            gen_base.kind = object_kind_from_string(gen_kind);
            gen_dims.resize(3, 0.0);
            gen_base.dims_mm = Vec3(gen_dims[0], gen_dims[1], gen_dims[2]);
            gen_base.approach = Vec3(gen_approach[0], gen_approach[1], gen_approach[2]);
            // Validate the whole spec before touching the filesystem: an
            // invalid kind or dimension must not leave partial output.
            make_object(gen_base.kind, gen_base.dims_mm, gen_base.level);
            return cmd_generate(gen_out, gen_count, gen_seed, gen_base, jobs);
        }
        if (opt->parsed()) {
            opt_flags.apply_config(file_cfg);
            // Re-apply flag values on top of the config file.
            CLI11_PARSE(app, argc, argv);
            if (opt_scene.empty() && opt_index.empty())
                throw std::runtime_error("optimize needs --scene or --index");
            return cmd_optimize(opt_scene, opt_index, opt_out, opt_pose_out, opt_flags, jobs,
                                opt_timing);
        }
        if (eva->parsed()) {
            if (eva_scene.empty() && eva_index.empty())
                throw std::runtime_error("evaluate needs --scene or --index");
            return cmd_evaluate(eva_scene, eva_index, eva_poses, eva_out, jobs);
        }
        if (abl->parsed()) {
            abl_flags.apply_config(file_cfg);
            CLI11_PARSE(app, argc, argv);
            return cmd_ablate(abl_index, abl_out, abl_flags, jobs);
        }
        if (ins->parsed()) return cmd_inspect(ins_scene);
    } catch (const std::exception& e) {
        log(LogLevel::Error, e.what());
        return kExitInput;
    }
    return kExitOk;
}
