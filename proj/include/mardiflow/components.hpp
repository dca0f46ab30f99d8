#pragma once

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include "mardiflow/cahn_hilliard.hpp"
#include "mardiflow/data.hpp"
#include "mardiflow/engine.hpp"

// In-process solver realizations shipped with the tool, keyed by their
// builtin: locator.

namespace mardiflow::components {

inline constexpr const char* kCahnHilliardLocator = "builtin:cahn-hilliard-2d";
inline constexpr const char* kTimeAverageLocator = "builtin:time-average";

namespace detail {

inline long scalar_as_long(const StageContext& ctx, const std::string& name) {
    double v = ctx.scalar(name);
    long rounded = std::lround(v);
    if (static_cast<double>(rounded) != v)
        throw std::runtime_error("input \"" + name + "\" must be an integer");
    return rounded;
}

}  // namespace detail

inline ch::Params cahn_hilliard_params_from(const StageContext& ctx) {
    ch::Params p;
    p.nx = static_cast<int>(detail::scalar_as_long(ctx, "nx"));
    p.ny = static_cast<int>(detail::scalar_as_long(ctx, "ny"));
    p.dx = ctx.scalar("dx");
    p.dt = ctx.scalar("dt");
    p.n_steps = detail::scalar_as_long(ctx, "n_steps");
    p.snapshot_interval = detail::scalar_as_long(ctx, "snapshot_interval");
    p.c0 = ctx.scalar("c0");
    p.noise_amplitude = ctx.scalar("noise_amplitude");
    p.seed = static_cast<std::uint64_t>(detail::scalar_as_long(ctx, "seed"));
    p.RT = ctx.scalar("RT");
    p.L = ctx.scalar("L");
    p.a_c = ctx.scalar("a_c");
    p.D_A = ctx.scalar("D_A");
    p.D_B = ctx.scalar("D_B");
    return p;
}

// Level-2 realization of the Cahn-Hilliard component: runs the explicit
// solver, emits per-sample images and field dumps, and fills the two output
// ports (final field as "snapshots", energy/mean series as "energy_series").
inline StageOutputs run_cahn_hilliard(const StageContext& ctx) {
    ch::Params p = cahn_hilliard_params_from(ctx);
    ch::validate(p);

    const double dt_max = ch::stable_dt_bound(p);
    if (p.dt > 0.5 * dt_max) {
        std::fprintf(stderr,
                     "[warn] dt = %g exceeds half the linear stability bound (dt_max = %g); "
                     "the run may blow up\n",
                     p.dt, dt_max);
    }

    ch::SimulationResult sim =
        ch::run_simulation(p, ctx.out_dir / "artifacts", ctx.file_prefix());

    const std::string field_rel = ctx.artifact_rel("snapshots", ".csv");
    ch::write_field_csv(sim.final_field, ctx.artifact_abs(field_rel));

    const std::string series_rel = ctx.artifact_rel("energy_series", ".csv");
    {
        std::ofstream out(ctx.artifact_abs(series_rel), std::ios::binary);
        if (!out) throw IoFailure("cannot write " + series_rel);
        out << "t,free_energy,mean_concentration\n";
        char buf[128];
        for (const auto& s : sim.series) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", s.t, s.free_energy,
                          s.mean_concentration);
            out << buf;
        }
    }
    return {{"snapshots", field_rel}, {"energy_series", series_rel}};
}

// Post-processing component: time average of a sampled trajectory over
// [0, t_end] — the conversion-rate objective for reactor-style series.
inline StageOutputs run_time_average(const StageContext& ctx) {
    TimeSeries series = load_time_series(ctx.path_input("series"));
    double t_end = ctx.scalar("t_end");
    double objective = time_average_objective(series, t_end);

    const std::string rel = ctx.artifact_rel("objective", ".txt");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g\n", objective);
    mardiflow::detail::write_text_file(ctx.artifact_abs(rel), buf);
    return {{"objective", rel}};
}

inline RunnerRegistry builtin_registry() {
    RunnerRegistry registry;
    registry.add(kCahnHilliardLocator, run_cahn_hilliard);
    registry.add(kTimeAverageLocator, run_time_average);
    return registry;
}

}  // namespace mardiflow::components
