#pragma once

#include "flexamg/sparse.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace flexamg {

/// Row i lists column j iff -a_ij >= theta * max_{k != i}(-a_ik), taken over
/// negative off-diagonals only.
struct StrengthGraph {
    double theta = 0.25;
    std::vector<std::vector<std::size_t>> strong;

    std::size_t size() const noexcept { return strong.size(); }
    /// Column-wise view: rows that strongly depend on each point.
    std::vector<std::vector<std::size_t>> transposed() const;
};

enum class PointType : std::uint8_t { F = 0, C = 1 };

struct CfSplitting {
    std::vector<PointType> marks;

    std::size_t num_coarse() const noexcept;
    bool is_coarse(std::size_t i) const noexcept { return marks[i] == PointType::C; }
};

StrengthGraph strength_of_connection(const SparseMatrix &A, double theta);

/// Parallel maximal independent set coarsening with seeded weights
/// |S^T_i| + hash(seed, i) / 2^64. Points that influence nobody start as F;
/// F points left without a strong C neighbor are promoted afterwards.
CfSplitting cf_split_pmis(const StrengthGraph &S, std::uint64_t seed);

/// Direct interpolation with negative-coupling normalization. C rows are unit
/// rows; rows with no strong connections are zero rows. An F point with strong
/// connections but no strong C neighbor is promoted to C in `split`.
SparseMatrix build_interpolation(const SparseMatrix &A, const StrengthGraph &S, CfSplitting &split);

struct SetupParams {
    double theta = 0.25;
    std::size_t coarse_size_max = 16;
    std::size_t partition_blocks = 8;
    std::uint64_t seed = 0;
    /// Coarsening that keeps more than this fraction of rows stops the hierarchy.
    double stall_ratio = 0.95;
    std::size_t dense_cap = kDenseEntryCap;
    /// Check A symmetry up front and every Galerkin operator after.
    bool check_symmetry = false;
};

struct Level {
    SparseMatrix A;
    SparseMatrix P;  // to this level from level-1; empty on level 0
    SparseMatrix R;  // P^T
    CfSplitting split;
    BlockPartition partition;
    Vector diag;
    Vector l1_diag;
    /// Per block: C rows ascending followed by F rows ascending.
    std::vector<std::size_t> cf_order;
    /// Per block: number of C rows at the front of its slice of cf_order.
    std::vector<std::size_t> cf_block_coarse;
};

/// Levels are indexed by grid level: levels[0] is the coarsest,
/// levels[top()] the input matrix.
class Hierarchy {
public:
    std::vector<Level> levels;
    LuFactors coarse_lu;
    SetupParams params;
    std::vector<std::string> log;

    std::size_t num_levels() const noexcept { return levels.size(); }
    std::size_t top() const noexcept { return levels.size() - 1; }
    const Level &level(std::size_t l) const { return levels.at(l); }

    /// nnz(A_l) / nnz(A_top) for every level.
    std::vector<double> level_complexity() const;
    double operator_complexity() const;
    /// Hash of every stored array; equal hierarchies give equal fingerprints.
    std::uint64_t fingerprint() const;
};

Hierarchy build_hierarchy(const SparseMatrix &A, const SetupParams &params = {});

} // namespace flexamg
