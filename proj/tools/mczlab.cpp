// mczlab: batch front end for the grid / kernel / operator / decomposition /
// verification library. Subcommands mirror the library operations; every
// config field can be overridden by a flag of the same name.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mcz/mcz.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using mcz::Json;

struct FlagOverrides {
    std::optional<std::string> kernel, out, scenario, box, N;
    std::optional<int> n, m, j, t_count;
    std::optional<double> h, eps, t_min, t_max, t, c, budget;
    std::optional<std::uint64_t> seed;
    std::optional<bool> include_pi, pv, allow_unbounded;
};

Json load_config(const std::string& path) {
    auto text = mcz::read_file(path);
    Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw mcz::config_error("config is not valid JSON: " + path);
    if (!j.is_object()) throw mcz::config_error("config must be a JSON object: " + path);
    return j;
}

std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    std::string cur;
    for (char ch : s + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(mcz::parse_double(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    return out;
}

void merge_flags(Json& cfg, const FlagOverrides& f) {
    if (f.kernel) cfg["kernel"] = *f.kernel;
    if (f.out) cfg["out"] = *f.out;
    if (f.scenario) cfg["scenario"] = *f.scenario;
    if (f.box) cfg["box"] = parse_number_list(*f.box);
    if (f.N) {
        Json arr = Json::array();
        for (double v : parse_number_list(*f.N)) arr.push_back(static_cast<int>(v));
        cfg["N"] = std::move(arr);
    }
    if (f.n) cfg["n"] = *f.n;
    if (f.m) cfg["m"] = *f.m;
    if (f.j) cfg["j"] = *f.j;
    if (f.t_count) cfg["t_count"] = *f.t_count;
    if (f.h) cfg["h"] = *f.h;
    if (f.eps) cfg["eps"] = *f.eps;
    if (f.t_min) cfg["t_min"] = *f.t_min;
    if (f.t_max) cfg["t_max"] = *f.t_max;
    if (f.t) cfg["t"] = *f.t;
    if (f.c) cfg["c"] = *f.c;
    if (f.budget) cfg["budget"] = *f.budget;
    if (f.seed) cfg["seed"] = *f.seed;
    if (f.include_pi) cfg["include_pi"] = *f.include_pi;
    if (f.pv) cfg["pv"] = *f.pv;
    if (f.allow_unbounded) cfg["allow_unbounded"] = *f.allow_unbounded;
}

template <typename T>
T field(const Json& cfg, const std::string& key, const T& fallback) {
    if (!cfg.contains(key)) return fallback;
    return cfg.at(key).get<T>();
}

template <typename T>
T require(const Json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw mcz::config_error("missing config field: " + key);
    return cfg.at(key).get<T>();
}

mcz::KernelSpec make_kernel(const Json& cfg) {
    const std::string name = require<std::string>(cfg, "kernel");
    const int n = field(cfg, "n", 1);
    const int m = field(cfg, "m", 1);
    if (name == "homogeneous") return mcz::make_homogeneous_model(n, m, field(cfg, "c", 1.0));
    if (name == "tensor-hilbert") {
        if (n != 1) throw mcz::config_error("tensor-hilbert requires n = 1");
        return mcz::make_tensor_hilbert(m, field(cfg, "include_pi", true));
    }
    if (name == "riesz") return mcz::make_multilinear_riesz(n, m, field(cfg, "j", 1));
    throw mcz::config_error("unknown kernel: " + name);
}

mcz::Box box_from(const Json& cfg, int n) {
    auto v = require<std::vector<double>>(cfg, "box");
    if (static_cast<int>(v.size()) != 2 * n)
        throw mcz::config_error("box needs 2n numbers (lo..., hi...)");
    mcz::Box b;
    b.lo.assign(v.begin(), v.begin() + n);
    b.hi.assign(v.begin() + n, v.end());
    for (int a = 0; a < n; ++a)
        if (!(b.lo[a] < b.hi[a])) throw mcz::config_error("box corners must satisfy lo < hi");
    return b;
}

mcz::GridSpec grid_from(const Json& cfg) {
    const int n = field(cfg, "n", 1);
    const double h = require<double>(cfg, "h");
    if (!mcz::is_dyadic_power(h)) throw mcz::config_error("h must be a power of two");
    return mcz::GridSpec::from_box(n, h, box_from(cfg, n));
}

mcz::TruncationPolicy policy_from(const Json& cfg) {
    mcz::TruncationPolicy p;
    p.eps_cells = field(cfg, "eps", 2.0);
    p.pv_pairing = field(cfg, "pv", true);
    p.report_tail = field(cfg, "report_tail", true);
    p.validate();
    return p;
}

std::vector<double> tgrid_from(const Json& cfg) {
    const double lo = require<double>(cfg, "t_min");
    const double hi = require<double>(cfg, "t_max");
    const int count = require<int>(cfg, "t_count");
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw mcz::config_error("bad t-grid specification");
    return mcz::log_spaced(lo, hi, count);
}

mcz::GridFunction function_from(const Json& spec, const mcz::GridSpec& g) {
    if (spec.contains("file")) {
        auto text = mcz::read_file(spec.at("file").get<std::string>());
        return mcz::grid_function_from_text(text);
    }
    auto v = require<std::vector<double>>(spec, "box");
    if (static_cast<int>(v.size()) != 2 * g.n) throw mcz::config_error("function box needs 2n numbers");
    mcz::Box b;
    b.lo.assign(v.begin(), v.begin() + g.n);
    b.hi.assign(v.begin() + g.n, v.end());
    return mcz::indicator(g, b, field(spec, "height", 1.0));
}

std::vector<mcz::AtomicMeasure> measures_from(const Json& cfg) {
    std::vector<mcz::AtomicMeasure> out;
    for (const auto& slot : require<Json>(cfg, "atoms")) {
        std::vector<mcz::Atom> atoms;
        for (const auto& a : slot)
            atoms.push_back(mcz::Atom{a.at("x").get<mcz::Point>(), a.at("w").get<double>()});
        out.push_back(mcz::AtomicMeasure(std::move(atoms)));
    }
    return out;
}

std::string out_path(const Json& cfg, const std::string& name) {
    const std::string dir = field<std::string>(cfg, "out", ".");
    std::filesystem::create_directories(dir);
    return dir + "/" + name;
}

void write_json(const Json& cfg, const std::string& name, const Json& payload) {
    mcz::write_file(out_path(cfg, name), payload.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

int cmd_kernel_check(const Json& cfg) {
    auto kernel = make_kernel(cfg);
    mcz::SamplerConfig sc;
    sc.seed = field<std::uint64_t>(cfg, "seed", 20150621);
    sc.samples = field(cfg, "samples", 256);
    Json rep;
    rep["kernel"] = kernel.name();
    rep["n"] = kernel.n;
    rep["m"] = kernel.m;
    rep["size_constant_estimate"] = mcz::check_size(kernel, sc);
    auto sm = mcz::check_smoothness(kernel, sc);
    Json smj;
    smj["zero_kernel"] = sm.zero_kernel;
    if (!sm.zero_kernel) {
        smj["delta"] = sm.delta();
        smj["constant"] = sm.constant();
        smj["x_delta"] = sm.x_fit.delta;
        Json ys = Json::array();
        for (const auto& yf : sm.y_fits) ys.push_back(yf.delta);
        smj["y_deltas"] = std::move(ys);
    }
    rep["smoothness"] = std::move(smj);
    Json decl;
    if (kernel.size_constant) decl["C_K"] = *kernel.size_constant;
    if (kernel.holder_exponent) decl["delta"] = *kernel.holder_exponent;
    if (kernel.operator_norm) decl["operator_norm"] = *kernel.operator_norm;
    decl["is_known_bounded"] = kernel.is_known_bounded;
    decl["note"] = kernel.boundedness_note;
    rep["declared"] = std::move(decl);
    rep["provenance"] = Json{{"seed", sc.seed}, {"samples", sc.samples}};
    write_json(cfg, "kernel_check.json", rep);
    return 0;
}

int cmd_whitney(const Json& cfg) {
    auto g = grid_from(cfg);
    mcz::CellSet s(g);
    for (const auto& bj : require<Json>(cfg, "set_boxes")) {
        auto v = bj.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != 2 * g.n) throw mcz::config_error("set box needs 2n numbers");
        mcz::Box b;
        b.lo.assign(v.begin(), v.begin() + g.n);
        b.hi.assign(v.begin() + g.n, v.end());
        s = s.unite(mcz::cells_of_box(g, b));
    }
    auto w = mcz::whitney(s);
    Json rep;
    rep["cubes"] = mcz::cubes_to_json(w.cubes);
    rep["remainder_cells"] = w.remainder.count();
    rep["resolution_insufficient"] = w.resolution_insufficient;
    double cube_meas = 0.0;
    for (const auto& q : w.cubes) cube_meas += std::pow(q.side(), g.n);
    rep["cube_measure"] = cube_meas;
    rep["remainder_measure"] = mcz::measure(w.remainder);
    rep["set_measure"] = mcz::measure(s);
    write_json(cfg, "whitney.json", rep);
    return 0;
}

int cmd_maximal(const Json& cfg) {
    auto g = grid_from(cfg);
    auto f = function_from(require<Json>(cfg, "function"), g);
    auto mf = mcz::maximal_function(f);
    mcz::write_file(out_path(cfg, "maximal.txt"), mcz::to_text(mf));
    mcz::write_file(out_path(cfg, "maximal.json"), mcz::to_json(mf).dump() + "\n");
    return 0;
}

int cmd_apply(const Json& cfg) {
    auto kernel = make_kernel(cfg);
    auto g = grid_from(cfg);
    std::vector<mcz::GridFunction> fs;
    for (const auto& spec : require<Json>(cfg, "functions")) fs.push_back(function_from(spec, g));
    std::vector<mcz::Point> targets;
    for (const auto& tj : require<Json>(cfg, "targets")) targets.push_back(tj.get<mcz::Point>());
    auto res = mcz::apply_functions(kernel, fs, targets, policy_from(cfg), field(cfg, "budget", 1e9));
    std::string csv;
    for (int a = 0; a < g.n; ++a) csv += "x" + std::to_string(a + 1) + ",";
    csv += "value,tail_bound\n";
    for (std::size_t i = 0; i < targets.size(); ++i) {
        std::vector<std::string> row;
        for (double c : targets[i]) row.push_back(mcz::format_double(c));
        row.push_back(mcz::format_double(res.values[i]));
        row.push_back(mcz::format_double(res.tail_bounds[i]));
        csv += mcz::to_csv_row(row);
    }
    mcz::write_file(out_path(cfg, "apply.csv"), csv);
    return 0;
}

int cmd_ball_system(const Json& cfg) {
    auto g = grid_from(cfg);
    const double t = require<double>(cfg, "t");
    const int m = field(cfg, "m", 1);
    auto sys = mcz::build_ball_system(measures_from(cfg), t, m, g);
    write_json(cfg, "ball_system.json", mcz::to_json(sys));
    return 0;
}

int cmd_verify(const Json& cfg) {
    const std::string scenario = require<std::string>(cfg, "scenario");
    auto kernel = make_kernel(cfg);
    if (scenario == "theorem1") {
        auto g = grid_from(cfg);
        std::vector<mcz::GridFunction> fs;
        for (const auto& spec : require<Json>(cfg, "functions")) fs.push_back(function_from(spec, g));
        mcz::Theorem1Config tc;
        tc.policy = policy_from(cfg);
        tc.tuple_budget = field(cfg, "budget", 1e9);
        tc.seed = field<std::uint64_t>(cfg, "seed", 20150621);
        tc.allow_unbounded_kernel = field(cfg, "allow_unbounded", false);
        if (cfg.contains("N")) tc.N_list = cfg.at("N").get<std::vector<int>>();
        tc.lemma_rest_stride = field(cfg, "lemma_rest_stride", 4);
        auto tgrid = tgrid_from(cfg);
        auto ledger = mcz::theorem1_ledger(fs, tgrid, kernel, tc);
        write_json(cfg, "ledger.json", ledger.to_json());
        // distribution sidecar for |T(f_1,...,f_m)|
        auto targets = mcz::cell_center_targets(g);
        auto vals = mcz::apply_functions(kernel, fs, targets, tc.policy, tc.tuple_budget).values;
        for (auto& v : vals) v = std::fabs(v);
        auto dist = mcz::distribution_function(mcz::GridFunction(g, vals), tgrid);
        mcz::write_file(out_path(cfg, "distribution.csv"), mcz::distribution_csv(dist));
        return ledger.all_pass() ? 0 : 3;
    }
    if (scenario == "theorem2") {
        mcz::Theorem2Config tc;
        tc.policy = policy_from(cfg);
        tc.tuple_budget = field(cfg, "budget", 1e9);
        tc.seed = field<std::uint64_t>(cfg, "seed", 20150621);
        tc.allow_unbounded_kernel = field(cfg, "allow_unbounded", false);
        auto g = grid_from(cfg);
        tc.grid = g;
        std::vector<mcz::GridFunction> fs;
        if (cfg.contains("functions"))
            for (const auto& spec : cfg.at("functions")) fs.push_back(function_from(spec, g));
        auto ledger = mcz::theorem2_ledger(measures_from(cfg), fs, require<double>(cfg, "t"), kernel, tc);
        write_json(cfg, "ledger.json", ledger.to_json());
        return ledger.all_pass() ? 0 : 3;
    }
    if (scenario == "lemma1") {
        auto g = grid_from(cfg);
        std::vector<mcz::SetCollection> colls;
        for (const auto& cj : require<Json>(cfg, "collections")) {
            mcz::SetCollection coll;
            coll.omega = mcz::CellSet(g);
            for (const auto& sj : cj) {
                mcz::ProbeSet ps;
                auto v = sj.at("box").get<std::vector<double>>();
                mcz::Box b;
                b.lo.assign(v.begin(), v.begin() + g.n);
                b.hi.assign(v.begin() + g.n, v.end());
                ps.cells = mcz::cells_of_box(g, b);
                ps.center = sj.at("center").get<mcz::Point>();
                ps.radius = sj.at("radius").get<double>();
                ps.is_cube = false;
                ps.bounds = b;
                coll.sets.push_back(ps);
                coll.omega = coll.omega.unite(coll.sets.back().cells);
            }
            colls.push_back(std::move(coll));
        }
        mcz::CellSet omega_star(g);
        for (const auto& bj : require<Json>(cfg, "omega_star")) {
            auto v = bj.get<std::vector<double>>();
            mcz::Box b;
            b.lo.assign(v.begin(), v.begin() + g.n);
            b.hi.assign(v.begin() + g.n, v.end());
            omega_star = omega_star.unite(mcz::cells_of_box(g, b));
        }
        mcz::Lemma1Config lc;
        lc.tuple_budget = field(cfg, "budget", 1e9);
        lc.rest_stride = field(cfg, "lemma_rest_stride", 1);
        auto res = mcz::lemma1_sum(colls, kernel, omega_star.complement(), lc);
        Json rep;
        rep["sum"] = res.sum;
        rep["ratio"] = res.ratio;
        rep["skipped_probes"] = res.skipped_probes;
        double omega_total = 0.0;
        for (const auto& c : colls) omega_total += mcz::measure(c.omega);
        rep["omega_total"] = omega_total;
        rep["provenance"] = Json{{"seed", field<std::uint64_t>(cfg, "seed", 20150621)},
                                 {"h", g.h},
                                 {"kernel", kernel.name()}};
        write_json(cfg, "lemma1.json", rep);
        return 0;
    }
    throw mcz::config_error("unknown scenario: " + scenario);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale laboratory for multilinear singular-integral estimates"};
    app.set_version_flag("--version", std::string("mczlab ") + kVersion);
    app.require_subcommand(1);

    std::string config_path;
    FlagOverrides fl;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--kernel", fl.kernel, "kernel name: homogeneous | tensor-hilbert | riesz");
    app.add_option("--n", fl.n, "space dimension");
    app.add_option("--m", fl.m, "multilinearity degree");
    app.add_option("--c", fl.c, "homogeneous model constant");
    app.add_option("--j", fl.j, "riesz direction (1-based)");
    app.add_option("--include-pi", fl.include_pi, "tensor-hilbert: include the 1/pi factors");
    app.add_option("--h", fl.h, "cell width (a power of two)");
    app.add_option("--box", fl.box, "extent box, 2n comma-separated numbers: lo...,hi...");
    app.add_option("--eps", fl.eps, "exclusion radius in cells");
    app.add_option("--pv", fl.pv, "exact per-cell path for 1D tensor kernels");
    app.add_option("--t-min", fl.t_min, "threshold grid lower end");
    app.add_option("--t-max", fl.t_max, "threshold grid upper end");
    app.add_option("--t-count", fl.t_count, "threshold grid size");
    app.add_option("--t", fl.t, "single threshold (theorem2 / ball-system)");
    app.add_option("--N", fl.N, "truncation sizes, comma separated");
    app.add_option("--seed", fl.seed, "sampler seed");
    app.add_option("--budget", fl.budget, "quadrature tuple budget");
    app.add_option("--out", fl.out, "output directory");
    app.add_option("--scenario", fl.scenario, "verify scenario: theorem1 | theorem2 | lemma1");

    auto* sub_kernel = app.add_subcommand("kernel-check", "sample the kernel size and smoothness conditions");
    auto* sub_whitney = app.add_subcommand("whitney", "decompose a cell set into Whitney cubes");
    auto* sub_maximal = app.add_subcommand("maximal", "evaluate the uncentered maximal function");
    auto* sub_apply = app.add_subcommand("apply", "evaluate the operator at targets");
    auto* sub_ball = app.add_subcommand("ball-system", "build a disjointified ball system");
    auto* sub_verify = app.add_subcommand("verify", "replay an inequality ledger scenario");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        Json cfg = config_path.empty() ? Json::object() : load_config(config_path);
        merge_flags(cfg, fl);
        if (sub_kernel->parsed()) return cmd_kernel_check(cfg);
        if (sub_whitney->parsed()) return cmd_whitney(cfg);
        if (sub_maximal->parsed()) return cmd_maximal(cfg);
        if (sub_apply->parsed()) return cmd_apply(cfg);
        if (sub_ball->parsed()) return cmd_ball_system(cfg);
        if (sub_verify->parsed()) return cmd_verify(cfg);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const mcz::budget_error& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 4;
    } catch (const mcz::evaluator_error& e) {
        std::cerr << "evaluator error: " << e.what() << "\n";
        return 2;
    } catch (const mcz::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
