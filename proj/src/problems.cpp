#include "flexamg/problems.hpp"

#include "flexamg/error.hpp"
#include "flexamg/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace flexamg {

namespace {

std::size_t grid_points(std::size_t nd, std::size_t max_points) {
    if (nd == 0) throw ValidationError("grid size Nd must be at least 1");
    if (nd > 1024 || nd * nd * nd > max_points)
        throw CapacityError("grid with Nd=" + std::to_string(nd) + " exceeds the cap of " +
                            std::to_string(max_points) + " points");
    return nd * nd * nd;
}

SparseMatrix stencil_7pt(std::size_t nd, double cx, double cy, double cz, const Vector *extra_diag,
                         double scale, double shift) {
    const std::size_t n = nd * nd * nd;
    const std::size_t sy = nd, sz = nd * nd;
    std::vector<std::size_t> ptr(n + 1, 0), col;
    Vector val;
    col.reserve(7 * n);
    val.reserve(7 * n);
    const double diag = 2.0 * (cx + cy + cz);
    for (std::size_t z = 0; z < nd; ++z)
        for (std::size_t y = 0; y < nd; ++y)
            for (std::size_t x = 0; x < nd; ++x) {
                const std::size_t i = x + sy * y + sz * z;
                auto push = [&](std::size_t j, double v) {
                    col.push_back(j);
                    val.push_back(v);
                };
                if (z > 0) push(i - sz, -scale * cz);
                if (y > 0) push(i - sy, -scale * cy);
                if (x > 0) push(i - 1, -scale * cx);
                push(i, shift + scale * (diag + (extra_diag ? (*extra_diag)[i] : 0.0)));
                if (x + 1 < nd) push(i + 1, -scale * cx);
                if (y + 1 < nd) push(i + sy, -scale * cy);
                if (z + 1 < nd) push(i + sz, -scale * cz);
                ptr[i + 1] = col.size();
            }
    return SparseMatrix(n, n, std::move(ptr), std::move(col), std::move(val));
}

} // namespace

SparseMatrix build_anisotropic_poisson(const PoissonSpec &spec, std::size_t max_points) {
    for (double c : {spec.c1, spec.c2, spec.c3})
        if (!(c >= 1e-5 && c <= 1.0))
            throw ValidationError("anisotropy coefficients must lie in [1e-5, 1]");
    grid_points(spec.nd, max_points);
    return stencil_7pt(spec.nd, spec.c1, spec.c2, spec.c3, nullptr, 1.0, 0.0);
}

Vector timestep_reaction(const TimestepSpec &spec, std::size_t k, std::size_t n) {
    // The reaction term grows relative to the diffusion coupling as steps
    // advance, so diagonal dominance improves with k. Even steps (conduction)
    // use the mirrored spatial profile of odd steps (radiation).
    const double magnitude =
        spec.reaction_scale * std::pow(spec.decay, -static_cast<double>(k - 1));
    const double phase = (k % 2 == 0) ? std::numbers::pi : 0.0;
    Vector c(n);
    for (std::size_t i = 0; i < n; ++i)
        c[i] = magnitude *
               (1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(n) + phase));
    return c;
}

namespace {

void check_timestep_spec(const TimestepSpec &spec) {
    if (spec.k_max < 1) throw ValidationError("timestep sequence needs k_max >= 1");
    if (!(spec.dt > 0.0)) throw ValidationError("timestep dt must be positive");
    if (!(spec.reaction_scale >= 0.0)) throw ValidationError("reaction_scale must be non-negative");
    if (!(spec.decay > 0.0 && spec.decay <= 1.0)) throw ValidationError("decay must lie in (0, 1]");
}

} // namespace

SparseMatrix build_timestep_matrix(const TimestepSpec &spec, std::size_t k, std::size_t max_points) {
    check_timestep_spec(spec);
    if (k < 1) throw ValidationError("timestep index is 1-based");
    const std::size_t n = grid_points(spec.nd, max_points);
    const Vector c = timestep_reaction(spec, k, n);
    return stencil_7pt(spec.nd, 1.0, 1.0, 1.0, &c, spec.dt, 1.0);
}

std::vector<SparseMatrix> build_timestep_sequence(const TimestepSpec &spec, std::size_t max_points) {
    check_timestep_spec(spec);
    std::vector<SparseMatrix> seq;
    seq.reserve(spec.k_max);
    for (std::size_t k = 1; k <= spec.k_max; ++k) seq.push_back(build_timestep_matrix(spec, k, max_points));
    return seq;
}

double diagonal_dominance_ratio(const SparseMatrix &A) {
    if (!A.is_square()) throw DimensionError("diagonal_dominance_ratio: matrix is not square");
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < A.nrows(); ++i)
        for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k)
            (A.col(k) == i ? diag : off) += std::abs(A.value(k));
    if (off == 0.0) return std::numeric_limits<double>::infinity();
    return diag / off;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Vector v(n);
    for (auto &x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

Vector zero_vector(std::size_t n) { return Vector(n, 0.0); }

} // namespace flexamg
