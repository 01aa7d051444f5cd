#pragma once

#include "flexamg/sparse.hpp"

#include <cstdint>
#include <vector>

namespace flexamg {

/// Largest grid the problem builders accept (Nd^3 rows).
inline constexpr std::size_t kMaxGridPoints = std::size_t{1} << 24;

/// -div(D grad u) on the unit cube, D = diag(c1, c2, c3), Nd points per axis.
struct PoissonSpec {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
    std::size_t nd = 1;
};

/// Synthetic backward-Euler sequence A(k) = M + dt (K + C(k)), k = 1..k_max.
struct TimestepSpec {
    std::size_t nd = 16;
    std::size_t k_max = 20;
    double dt = 100.0;
    double reaction_scale = 0.01;
    double decay = 0.74;
};

/// 7-point stencil with homogeneous Dirichlet boundaries, 1/h^2 dropped,
/// lexicographic x-fastest ordering.
SparseMatrix build_anisotropic_poisson(const PoissonSpec &spec,
                                       std::size_t max_points = kMaxGridPoints);

/// Reaction diagonal of step k (1-based) for an n-row system.
Vector timestep_reaction(const TimestepSpec &spec, std::size_t k, std::size_t n);

SparseMatrix build_timestep_matrix(const TimestepSpec &spec, std::size_t k,
                                   std::size_t max_points = kMaxGridPoints);
std::vector<SparseMatrix> build_timestep_sequence(const TimestepSpec &spec,
                                                  std::size_t max_points = kMaxGridPoints);

/// sum |a_ii| / sum_{i != j} |a_ij|; +infinity when the off-diagonal sum is 0.
double diagonal_dominance_ratio(const SparseMatrix &A);

/// Entries uniform in [-1, 1] drawn from a seeded mt19937_64 stream.
Vector random_vector(std::size_t n, std::uint64_t seed);
Vector zero_vector(std::size_t n);

} // namespace flexamg
