#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcap/area_tracer.hpp"
#include "lcap/capacity.hpp"
#include "lcap/io.hpp"
#include "lcap/optimality.hpp"
#include "lcap/parallel.hpp"

namespace lcap::cli {

inline constexpr const char* version = "1.0.0";

enum exit_code : int { ok = 0, usage = 2, numerical = 3 };

struct RunOptions {
    std::string subcommand;
    std::vector<std::string> protocols;
    std::string k_axis = "10";
    std::string alpha_axis = "4";
    std::optional<double> d, theta, lambda, node_density, side, cutoff;
    bool fixed_theta = false;
    std::size_t samples = 500;
    std::uint64_t seed = 1;
    std::string estimator = "typical";

    std::optional<double> dt, closure_tol, newton_tol;
    std::optional<std::size_t> max_steps;
    std::optional<int> newton_max_iters;
    bool no_corrector = false;

    std::optional<double> truncation_radius, fd_step;
    std::string method = "finite_difference";

    unsigned workers = 1;
    std::string out, ratio_out, dump_boundary, meta;
};

inline ProtocolSpec resolve_protocol(const RunOptions& o, ProtocolKind kind) {
    ProtocolSpec s = ProtocolSpec::defaults(kind);
    if (o.d && s.d) s.d = o.d;
    if (o.theta && s.theta) s.theta = o.theta;
    if (o.lambda && s.lambda) s.lambda = o.lambda;
    if (o.node_density && s.node_density) s.node_density = o.node_density;
    if (o.fixed_theta) s.theta_reference_alpha.reset();
    s.validate();
    return s;
}

inline TracerConfig resolve_tracer(const RunOptions& o) {
    TracerConfig c;
    if (o.dt) c.dt = *o.dt;
    if (o.closure_tol) c.closure_tol = *o.closure_tol;
    if (o.newton_tol) c.newton_tol = *o.newton_tol;
    if (o.max_steps) c.max_steps = *o.max_steps;
    if (o.newton_max_iters) c.newton_max_iters = *o.newton_max_iters;
    c.corrector_enabled = !o.no_corrector;
    c.validate();
    return c;
}

inline nlohmann::json to_json(const ProtocolSpec& s) {
    nlohmann::json j{{"kind", to_string(s.kind)}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("d", s.d);
    put("theta", s.theta);
    put("lambda", s.lambda);
    put("node_density", s.node_density);
    put("theta_reference_alpha", s.theta_reference_alpha);
    return j;
}

inline nlohmann::json to_json(const TracerConfig& c) {
    return {{"dt", c.dt},
            {"max_steps", c.max_steps},
            {"closure_tol", c.closure_tol},
            {"newton_tol", c.newton_tol},
            {"newton_max_iters", c.newton_max_iters},
            {"corrector_enabled", c.corrector_enabled},
            {"auto_dt_fraction", c.auto_dt_fraction}};
}

/// Everything that determines the numbers in the outputs. Worker count and
/// file paths are left out: they do not change results.
struct Resolved {
    std::vector<ProtocolSpec> protocols;
    std::vector<double> K, alpha;
    TracerConfig tracer;
    Estimator estimator = Estimator::typical;
    GradientMethod method = GradientMethod::finite_difference;
    nlohmann::json json;
};

inline Resolved resolve(const RunOptions& o) {
    Resolved r;
    require(!o.protocols.empty(), "no protocol given");
    for (const std::string& name : o.protocols) r.protocols.push_back(resolve_protocol(o, parse_protocol(name)));
    r.K = parse_axis(o.k_axis);
    r.alpha = parse_axis(o.alpha_axis);
    for (double K : r.K)
        for (double a : r.alpha) SirParams{K, a}.validate();
    r.tracer = resolve_tracer(o);
    r.estimator = parse_estimator(o.estimator);
    if (o.method == "finite_difference") r.method = GradientMethod::finite_difference;
    else if (o.method == "boundary_integral") r.method = GradientMethod::boundary_integral;
    else throw Error(ErrorKind::invalid_argument, "unknown gradient method: " + o.method);
    if (o.side) require(*o.side > 0.0, "side must be positive");
    if (o.cutoff) require(*o.cutoff > 0.0, "cutoff must be positive");
    require(o.samples >= 1, "samples must be at least 1");

    nlohmann::json protocols = nlohmann::json::array();
    for (const ProtocolSpec& s : r.protocols) protocols.push_back(to_json(s));
    r.json = {{"subcommand", o.subcommand},
              {"protocols", protocols},
              {"K", r.K},
              {"alpha", r.alpha},
              {"side", o.side ? nlohmann::json(*o.side) : nlohmann::json("default")},
              {"cutoff", o.cutoff ? nlohmann::json(*o.cutoff) : nlohmann::json("default")},
              {"seed", o.seed},
              {"tracer", to_json(r.tracer)}};
    if (o.subcommand == "capacity" || o.subcommand == "sweep") {
        r.json["samples"] = o.samples;
        r.json["estimator"] = to_string(r.estimator);
    }
    if (o.subcommand == "trace") r.json["estimator"] = to_string(r.estimator);
    if (o.subcommand == "optimality") {
        r.json["method"] = to_string(r.method);
        r.json["truncation_radius"] = o.truncation_radius ? nlohmann::json(*o.truncation_radius) : nlohmann::json("default");
        r.json["fd_step"] = o.fd_step ? nlohmann::json(*o.fd_step) : nlohmann::json("default");
    }
    return r;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << content;
    if (!f) throw std::runtime_error("failed writing " + path);
}

/// Writes to `path`, or to `fallback` when path is empty.
inline void emit(const std::string& path, const std::string& content, std::ostream& fallback) {
    if (path.empty()) fallback << content;
    else write_file(path, content);
}

inline int run_trace(const RunOptions& o, const Resolved& r, const OutputStamp& stamp, std::ostream& out,
                     nlohmann::json& meta) {
    require(r.protocols.size() == 1 && r.K.size() == 1 && r.alpha.size() == 1,
            "trace takes one protocol and single K and alpha values");
    const ProtocolSpec& spec = r.protocols.front();
    const SirParams params{r.K.front(), r.alpha.front()};
    const MapExtent extent = o.side ? MapExtent(*o.side) : default_extent(spec);
    RandomSource rng = derive_rng(o.seed, 0);
    const SlotSample slot = draw_slot(spec, params.alpha, extent, rng, r.estimator);
    const FieldContext ctx(slot.set, params, o.cutoff);
    const std::size_t i = is_grid(spec.kind) ? ctx.nearest_to({0.0, 0.0}) : slot.measured;
    const BoundaryTrace trace = trace_boundary(ctx, i, r.tracer);

    nlohmann::json summary = trace_summary(trace);
    summary["protocol"] = to_string(spec.kind);
    summary["K"] = params.K;
    summary["alpha"] = params.alpha;
    summary["transmitters"] = ctx.size();
    summary["seed"] = o.seed;
    summary["config_hash"] = stamp.config_hash;
    emit(o.out, summary.dump(2) + "\n", out);
    if (!o.dump_boundary.empty()) {
        std::ostringstream csv;
        write_trace_csv(csv, trace, stamp);
        write_file(o.dump_boundary, csv.str());
        nlohmann::json side{{"area", trace.area}, {"steps", trace.steps}, {"closed", trace.closed},
                            {"seed", o.seed}, {"config_hash", stamp.config_hash}};
        write_file(o.dump_boundary + ".json", side.dump(2) + "\n");
        meta["outputs"].push_back(o.dump_boundary);
        meta["outputs"].push_back(o.dump_boundary + ".json");
    }
    return ok;
}

inline int run_sweep(const RunOptions& o, const Resolved& r, const OutputStamp& stamp, std::ostream& out,
                     nlohmann::json& meta) {
    SweepRequest req;
    req.protocols = r.protocols;
    req.K_values = r.K;
    req.alpha_values = r.alpha;
    req.side = o.side;
    req.samples = o.samples;
    req.seed = o.seed;
    req.tracer = r.tracer;
    req.mc.workers = o.workers;
    req.mc.estimator = r.estimator;
    req.mc.cutoff = o.cutoff;
    const SweepTable table = sweep(req);

    std::ostringstream csv;
    write_capacity_csv(csv, table.rows, stamp);
    emit(o.out, csv.str(), out);
    if (!o.ratio_out.empty()) {
        std::ostringstream ratios;
        write_ratio_csv(ratios, table.ratios, stamp);
        write_file(o.ratio_out, ratios.str());
        meta["outputs"].push_back(o.ratio_out);
    }
    return ok;
}

inline int run_optimality(const RunOptions& o, const Resolved& r, const OutputStamp& stamp, std::ostream& out) {
    std::vector<OptimalityRow> rows;
    for (const ProtocolSpec& spec : r.protocols) {
        require(is_grid(spec.kind), "optimality applies to grid patterns only");
        const MapExtent extent = o.side ? MapExtent(*o.side) : default_extent(spec);
        for (double K : r.K)
            for (double a : r.alpha) {
                const SirParams params{K, a};
                const FieldContext ctx(generate_grid(grid_kind_of(spec.kind), *spec.d, extent), params, o.cutoff);
                DeformationOptions opts;
                opts.truncation_radius = o.truncation_radius.value_or(6.0 * *spec.d);
                opts.fd_step = o.fd_step.value_or(*spec.d * 1e-4);
                opts.method = r.method;
                opts.workers = o.workers;
                rows.push_back({spec.kind, params, r.method, deformation_matrices(ctx, r.tracer, opts)});
            }
    }
    std::ostringstream csv;
    write_optimality_csv(csv, rows, stamp);
    emit(o.out, csv.str(), out);
    return ok;
}

inline void add_common(CLI::App* sub, RunOptions& o) {
    sub->add_option("--k", o.k_axis, "SIR threshold K: value, list a,b,c or start:stop:step");
    sub->add_option("--alpha", o.alpha_axis, "attenuation exponent: value, list or start:stop:step");
    sub->add_option("--d", o.d, "grid spacing / exclusion distance (m)");
    sub->add_option("--side", o.side, "map side (m); default 40 characteristic spacings");
    sub->add_option("--cutoff", o.cutoff, "interference cutoff radius (m); default 40 mean spacings");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--dt", o.dt, "tracer step (m); default 1% of the seed radius");
    sub->add_option("--max-steps", o.max_steps, "tracer step limit");
    sub->add_option("--closure-tol", o.closure_tol, "tracer closure distance (m); default dt");
    sub->add_option("--newton-tol", o.newton_tol, "relative SIR tolerance of the corrector");
    sub->add_option("--newton-max-iters", o.newton_max_iters, "corrector iteration limit");
    sub->add_flag("--no-corrector", o.no_corrector, "disable the Newton corrector");
    sub->add_option("--workers", o.workers, "worker threads (env LCAP_WORKERS)");
    sub->add_option("--out", o.out, "main output file; stdout when omitted");
    sub->add_option("--meta", o.meta, "metadata sidecar; default <out>.meta.json");
}

inline void add_protocol_params(CLI::App* sub, RunOptions& o) {
    sub->add_option("--theta", o.theta, "CSMA carrier-sense threshold (at alpha = 4 unless --fixed-theta)");
    sub->add_option("--lambda", o.lambda, "ALOHA transmitter density (1/m^2)");
    sub->add_option("--node-density", o.node_density, "node population density for coloring and CSMA (1/m^2)");
    sub->add_flag("--fixed-theta", o.fixed_theta, "use theta as given at every alpha");
    sub->add_option("--estimator", o.estimator, "typical | nearest_center");
}

inline void print_error(std::ostream& err, std::string_view kind, std::string_view message) {
    err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunOptions o;
    o.workers = default_workers();
    std::string protocol = "triangular";
    std::string protocols = "triangular,square,hexagonal,aloha,coloring,csma";
    std::string grids = "triangular,square,hexagonal";

    CLI::App app{"Local capacity of wireless ad hoc networks under grid, ALOHA, coloring and CSMA access"};
    app.set_config("--config", "", "structured config file (TOML/INI); flags override it");
    app.set_version_flag("--version", version);
    app.require_subcommand(1, 1);

    auto* trace = app.add_subcommand("trace", "trace one reception-area boundary");
    trace->add_option("--protocol", protocol, "triangular|square|hexagonal|aloha|coloring|csma");
    add_common(trace, o);
    add_protocol_params(trace, o);
    trace->add_option("--dump-boundary", o.dump_boundary, "write the boundary polyline as k,x,y CSV");

    auto* capacity = app.add_subcommand("capacity", "capacity of one protocol");
    capacity->add_option("--protocol", protocol, "triangular|square|hexagonal|aloha|coloring|csma");
    add_common(capacity, o);
    add_protocol_params(capacity, o);
    capacity->add_option("--samples", o.samples, "Monte Carlo samples");
    capacity->add_option("--ratio-out", o.ratio_out, "ratio-to-triangular CSV");

    auto* sweep_cmd = app.add_subcommand("sweep", "capacities over protocols and K, alpha axes");
    sweep_cmd->add_option("--protocols", protocols, "comma-separated protocol list");
    add_common(sweep_cmd, o);
    add_protocol_params(sweep_cmd, o);
    sweep_cmd->add_option("--samples", o.samples, "Monte Carlo samples");
    sweep_cmd->add_option("--ratio-out", o.ratio_out, "ratio-to-triangular CSV");

    auto* opt = app.add_subcommand("optimality", "deformation matrices D and T on grid patterns");
    opt->add_option("--protocols", grids, "comma-separated grid list");
    add_common(opt, o);
    opt->add_option("--truncation-radius", o.truncation_radius, "perturb transmitters within this radius (m); default 6 d");
    opt->add_option("--fd-step", o.fd_step, "finite-difference step (m); default d / 1e4");
    opt->add_option("--method", o.method, "finite_difference | boundary_integral");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        print_error(err, "usage", e.what());
        return usage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        CLI::App* chosen = app.get_subcommands().front();
        o.subcommand = chosen->get_name();
        if (chosen == trace || chosen == capacity) {
            o.protocols = {protocol};
        } else {
            const std::string& list = chosen == sweep_cmd ? protocols : grids;
            std::stringstream ss(list);
            for (std::string item; std::getline(ss, item, ',');)
                if (!item.empty()) o.protocols.push_back(item);
        }
        require(o.workers >= 1, "workers must be at least 1");
        const Resolved r = resolve(o);
        const OutputStamp stamp{o.seed, config_hash(r.json)};

        nlohmann::json meta{{"tool", "lcap"}, {"version", version}, {"config", r.json},
                            {"config_hash", stamp.config_hash}, {"seed", o.seed}, {"workers", o.workers},
                            {"outputs", nlohmann::json::array()}};
        if (!o.out.empty()) meta["outputs"].push_back(o.out);

        int code = ok;
        if (chosen == trace) code = run_trace(o, r, stamp, out, meta);
        else if (chosen == opt) code = run_optimality(o, r, stamp, out);
        else code = run_sweep(o, r, stamp, out, meta);

        meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const std::string meta_path = !o.meta.empty() ? o.meta : (!o.out.empty() ? o.out + ".meta.json" : "");
        if (!meta_path.empty()) write_file(meta_path, meta.dump(2) + "\n");
        return code;
    } catch (const Error& e) {
        print_error(err, e.is_usage() ? "usage" : to_string(e.kind()), e.what());
        return e.is_usage() ? usage : numerical;
    } catch (const std::exception& e) {
        print_error(err, "runtime", e.what());
        return numerical;
    }
}

} // namespace lcap::cli
