#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

// 2D Cahn-Hilliard spinodal decomposition for a binary A-B alloy.
//
// The order parameter c is the local concentration of B atoms. Free energy
//   G = sum over cells of [ g_chem(c) + (a_c/2)|grad c|^2 ] dx^2
//   g_chem(c) = RT [ c ln c + (1-c) ln(1-c) ] + L c (1-c)
// evolves by conserved dynamics  dc/dt = div( M(c) grad mu ),
//   mu = RT [ ln c - ln(1-c) ] + L (1-2c) - a_c lap(c)
//   M(c) = [ D_A/RT c + D_B/RT (1-c) ] c (1-c)
// discretized with a 5-point periodic Laplacian, face-centered fluxes with
// arithmetic-mean mobility, and explicit first-order Euler time stepping.

namespace mardiflow::ch {

struct InvalidParams : std::runtime_error {
    std::string field;
    InvalidParams(std::string field_, const std::string& what)
        : std::runtime_error("invalid parameter " + field_ + ": " + what),
          field(std::move(field_)) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(double c)
        : std::runtime_error("concentration " + std::to_string(c) + " outside (0,1)") {}
};

// An updated cell left (0,1); almost always an unstable dt.
struct FieldOutOfRange : std::runtime_error {
    int i, j;
    double value;
    long step;
    FieldOutOfRange(int i_, int j_, double value_, long step_ = -1)
        : std::runtime_error("field value " + std::to_string(value_) + " at cell (" +
                             std::to_string(i_) + "," + std::to_string(j_) + ")" +
                             (step_ >= 0 ? " left (0,1) at step " + std::to_string(step_)
                                         : " left (0,1)") +
                             "; reduce dt"),
          i(i_), j(j_), value(value_), step(step_) {}
};

// All physical and numerical parameters, nondimensionalized. The defaults
// put c0 = 0.5 inside the spinodal (L > 2 RT) so a noisy quench separates.
struct Params {
    int nx = 128;
    int ny = 128;
    double dx = 1.0;
    double dt = 0.01;
    long n_steps = 10000;
    long snapshot_interval = 500;
    double c0 = 0.5;
    double noise_amplitude = 0.01;
    std::uint64_t seed = 0;
    double RT = 1.0;   // R and T only ever appear as their product
    double L = 3.0;    // atomic interaction parameter
    double a_c = 1.0;  // gradient energy coefficient
    double D_A = 1.0;
    double D_B = 1.0;
};

inline void validate(const Params& p) {
    if (p.nx < 8) throw InvalidParams("nx", "need at least 8 grid points");
    if (p.ny < 8) throw InvalidParams("ny", "need at least 8 grid points");
    if (!(p.dx > 0.0)) throw InvalidParams("dx", "must be > 0");
    if (!(p.dt > 0.0)) throw InvalidParams("dt", "must be > 0");
    if (p.n_steps < 0) throw InvalidParams("n_steps", "must be >= 0");
    if (p.snapshot_interval < 1) throw InvalidParams("snapshot_interval", "must be >= 1");
    if (!(p.noise_amplitude >= 0.0)) throw InvalidParams("noise_amplitude", "must be >= 0");
    if (!(p.c0 - p.noise_amplitude > 0.0) || !(p.c0 + p.noise_amplitude < 1.0))
        throw InvalidParams("c0", "c0 +- noise_amplitude must stay inside (0,1)");
    if (!(p.RT > 0.0)) throw InvalidParams("RT", "must be > 0");
    if (!(p.a_c > 0.0)) throw InvalidParams("a_c", "must be > 0");
    if (!(p.D_A > 0.0)) throw InvalidParams("D_A", "must be > 0");
    if (!(p.D_B > 0.0)) throw InvalidParams("D_B", "must be > 0");
}

// Periodic nx-by-ny grid of concentration values, row-major (j*nx + i).
class Field {
  public:
    Field() = default;
    Field(int nx, int ny, double fill = 0.0)
        : nx_(nx), ny_(ny), cells_(static_cast<std::size_t>(nx) * ny, fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return cells_.size(); }

    double& at(int i, int j) { return cells_[static_cast<std::size_t>(j) * nx_ + i]; }
    double at(int i, int j) const { return cells_[static_cast<std::size_t>(j) * nx_ + i]; }

    const std::vector<double>& cells() const { return cells_; }
    std::vector<double>& cells() { return cells_; }

    // Neumaier-compensated sum; the mass-conservation check needs the
    // measurement itself to be far below the 1e-12 per-cell budget.
    double sum() const {
        double s = 0.0, comp = 0.0;
        for (double v : cells_) {
            double t = s + v;
            comp += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
            s = t;
        }
        return s + comp;
    }

    double mean() const { return sum() / static_cast<double>(cells_.size()); }

    double variance() const {
        double m = mean();
        double s = 0.0;
        for (double v : cells_) s += (v - m) * (v - m);
        return s / static_cast<double>(cells_.size());
    }

    bool operator==(const Field&) const = default;

  private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<double> cells_;
};

namespace detail {

// i-th element of the SplitMix64 stream for `seed`. Indexing is per cell, so
// the initial field does not depend on traversal order.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t i) {
    std::uint64_t z = seed + (i + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double uniform_pm1(std::uint64_t bits) {
    return 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
}

// Wrapped neighbor indices along one axis.
inline void wrap_tables(int n, std::vector<int>& plus, std::vector<int>& minus) {
    plus.resize(n);
    minus.resize(n);
    for (int i = 0; i < n; ++i) {
        plus[i] = i + 1 == n ? 0 : i + 1;
        minus[i] = i == 0 ? n - 1 : i - 1;
    }
}

}  // namespace detail

// c = c0 + noise_amplitude * u with u i.i.d. uniform in [-1,1), drawn from a
// per-cell deterministic stream.
inline Field init_field(const Params& p) {
    validate(p);
    Field f(p.nx, p.ny);
    auto& cells = f.cells();
    for (std::size_t idx = 0; idx < cells.size(); ++idx)
        cells[idx] = p.c0 + p.noise_amplitude * detail::uniform_pm1(detail::splitmix64_at(p.seed, idx));
    return f;
}

// Chemical free energy density g_chem(c).
inline double chem_energy(double c, const Params& p) {
    if (!(c > 0.0) || !(c < 1.0)) throw DomainError(c);
    return p.RT * (c * std::log(c) + (1.0 - c) * std::log(1.0 - c)) + p.L * c * (1.0 - c);
}

// d2 g_chem / dc2, used by the dispersion relation and the dt bound.
inline double chem_energy_curvature(double c, const Params& p) {
    return p.RT * (1.0 / c + 1.0 / (1.0 - c)) - 2.0 * p.L;
}

// Diffusion mobility of the B atom; vanishes at both pure phases.
inline double mobility(double c, const Params& p) {
    return (p.D_A / p.RT * c + p.D_B / p.RT * (1.0 - c)) * c * (1.0 - c);
}

// Diffusion potential mu = g_chem'(c) - a_c lap(c) on the periodic grid.
inline Field diffusion_potential(const Field& f, const Params& p) {
    const int nx = f.nx(), ny = f.ny();
    Field mu(nx, ny);
    std::vector<int> ip, im, jp, jm;
    detail::wrap_tables(nx, ip, im);
    detail::wrap_tables(ny, jp, jm);
    const double inv_dx2 = 1.0 / (p.dx * p.dx);

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double c = f.at(i, j);
            if (!(c > 0.0) || !(c < 1.0)) throw DomainError(c);
            const double lap = (f.at(ip[i], j) + f.at(im[i], j) + f.at(i, jp[j]) +
                                f.at(i, jm[j]) - 4.0 * c) * inv_dx2;
            mu.at(i, j) = p.RT * (std::log(c) - std::log(1.0 - c)) + p.L * (1.0 - 2.0 * c) -
                          p.a_c * lap;
        }
    }
    return mu;
}

// One explicit Euler step of dc/dt = div(M grad mu) in conservative flux
// form: each face flux enters its two adjacent cells with opposite sign, so
// the total concentration telescopes.
inline Field step(const Field& f, const Params& p) {
    const int nx = f.nx(), ny = f.ny();
    const Field mu = diffusion_potential(f, p);

    std::vector<int> ip, im, jp, jm;
    detail::wrap_tables(nx, ip, im);
    detail::wrap_tables(ny, jp, jm);

    std::vector<double> mob(f.size());
    for (std::size_t idx = 0; idx < mob.size(); ++idx) mob[idx] = mobility(f.cells()[idx], p);
    auto mob_at = [&](int i, int j) { return mob[static_cast<std::size_t>(j) * nx + i]; };

    const double inv_dx = 1.0 / p.dx;
    // flux_x(i,j): face between (i,j) and (i+1,j); flux_y: between (i,j) and (i,j+1)
    Field flux_x(nx, ny), flux_y(nx, ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            flux_x.at(i, j) = 0.5 * (mob_at(i, j) + mob_at(ip[i], j)) *
                              (mu.at(ip[i], j) - mu.at(i, j)) * inv_dx;
            flux_y.at(i, j) = 0.5 * (mob_at(i, j) + mob_at(i, jp[j])) *
                              (mu.at(i, jp[j]) - mu.at(i, j)) * inv_dx;
        }
    }

    Field next(nx, ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double div = (flux_x.at(i, j) - flux_x.at(im[i], j) + flux_y.at(i, j) -
                                flux_y.at(i, jm[j])) * inv_dx;
            const double c_new = f.at(i, j) + p.dt * div;
            if (!(c_new > 0.0) || !(c_new < 1.0)) throw FieldOutOfRange(i, j, c_new);
            next.at(i, j) = c_new;
        }
    }
    return next;
}

// G = sum [ g_chem + (a_c/2)|grad c|^2 ] dx^2, gradient by central differences.
inline double total_free_energy(const Field& f, const Params& p) {
    const int nx = f.nx(), ny = f.ny();
    std::vector<int> ip, im, jp, jm;
    detail::wrap_tables(nx, ip, im);
    detail::wrap_tables(ny, jp, jm);
    const double inv_2dx = 1.0 / (2.0 * p.dx);

    double sum = 0.0, comp = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double gx = (f.at(ip[i], j) - f.at(im[i], j)) * inv_2dx;
            const double gy = (f.at(i, jp[j]) - f.at(i, jm[j])) * inv_2dx;
            const double e = chem_energy(f.at(i, j), p) + 0.5 * p.a_c * (gx * gx + gy * gy);
            double t = sum + e;
            comp += std::abs(sum) >= std::abs(e) ? (sum - t) + e : (e - t) + sum;
            sum = t;
        }
    }
    return (sum + comp) * p.dx * p.dx;
}

// Linearized explicit-stability bound about c0 at the grid's largest
// resolvable wavenumber; dt above ~0.5 of this invites blow-up.
inline double stable_dt_bound(const Params& p) {
    const double k2_max = 8.0 / (p.dx * p.dx);
    const double m0 = mobility(p.c0, p);
    return 2.0 / (m0 * k2_max * (std::abs(chem_energy_curvature(p.c0, p)) + p.a_c * k2_max));
}

// ---------------------------------------------------------------------------
// File outputs

// Full-precision CSV dump, one row per grid row (fixed j), 17 significant
// digits so values round-trip exactly.
inline void write_field_csv(const Field& f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write field dump: " + path.string());
    char buf[64];
    for (int j = 0; j < f.ny(); ++j) {
        for (int i = 0; i < f.nx(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", f.at(i, j));
            out << buf << (i + 1 == f.nx() ? "" : ",");
        }
        out << "\n";
    }
}

inline Field read_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read field dump: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            row.push_back(std::stod(line.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty field dump: " + path.string());
    Field f(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
    for (int j = 0; j < f.ny(); ++j) {
        if (rows[j].size() != static_cast<std::size_t>(f.nx()))
            throw std::runtime_error("ragged field dump: " + path.string());
        for (int i = 0; i < f.nx(); ++i) f.at(i, j) = rows[j][i];
    }
    return f;
}

// 8-bit binary PGM (P5); c in [0,1] maps linearly to [0,255], row j of the
// grid is raster row j.
inline void write_field_pgm(const Field& f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image: " + path.string());
    out << "P5\n" << f.nx() << " " << f.ny() << "\n255\n";
    std::vector<unsigned char> row(f.nx());
    for (int j = 0; j < f.ny(); ++j) {
        for (int i = 0; i < f.nx(); ++i) {
            double v = f.at(i, j);
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            row[i] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

// ---------------------------------------------------------------------------
// Whole-run driver

struct SeriesPoint {
    double t = 0.0;
    double free_energy = 0.0;
    double mean_concentration = 0.0;
};

struct Snapshot {
    long step = 0;
    std::filesystem::path csv;
    std::filesystem::path pgm;
};

struct SimulationResult {
    Field final_field;
    std::vector<SeriesPoint> series;
    std::vector<Snapshot> snapshots;
};

// Initializes the field, advances n_steps Euler steps, and every
// snapshot_interval steps (plus step 0 and the final step) writes a PGM
// image and a CSV field dump under out_dir. The returned series carries the
// total free energy and mean concentration at the same cadence.
inline SimulationResult run_simulation(const Params& p, const std::filesystem::path& out_dir,
                                       const std::string& prefix = {}) {
    validate(p);
    std::filesystem::create_directories(out_dir);

    SimulationResult result;
    Field f = init_field(p);

    auto sample = [&](long step_no, const Field& field) {
        char name[64];
        std::snprintf(name, sizeof(name), "%ssnapshot_%06ld", prefix.c_str(), step_no);
        Snapshot snap;
        snap.step = step_no;
        snap.csv = out_dir / (std::string(name) + ".csv");
        snap.pgm = out_dir / (std::string(name) + ".pgm");
        write_field_csv(field, snap.csv);
        write_field_pgm(field, snap.pgm);
        result.snapshots.push_back(snap);
        result.series.push_back(
            {static_cast<double>(step_no) * p.dt, total_free_energy(field, p), field.mean()});
    };

    sample(0, f);
    for (long s = 1; s <= p.n_steps; ++s) {
        try {
            f = step(f, p);
        } catch (const FieldOutOfRange& e) {
            throw FieldOutOfRange(e.i, e.j, e.value, s);
        }
        if (s % p.snapshot_interval == 0 || s == p.n_steps) sample(s, f);
    }
    result.final_field = std::move(f);
    return result;
}

}  // namespace mardiflow::ch
