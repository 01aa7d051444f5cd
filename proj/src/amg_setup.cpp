#include "flexamg/amg_setup.hpp"

#include "flexamg/error.hpp"
#include "flexamg/rng.hpp"
#include "flexamg/smoothers.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

namespace flexamg {

std::vector<std::vector<std::size_t>> StrengthGraph::transposed() const {
    std::vector<std::vector<std::size_t>> t(strong.size());
    for (std::size_t i = 0; i < strong.size(); ++i)
        for (std::size_t j : strong[i]) t[j].push_back(i);
    return t;
}

std::size_t CfSplitting::num_coarse() const noexcept {
    return static_cast<std::size_t>(std::count(marks.begin(), marks.end(), PointType::C));
}

StrengthGraph strength_of_connection(const SparseMatrix &A, double theta) {
    if (!A.is_square()) throw DimensionError("strength_of_connection: matrix is not square");
    StrengthGraph S{theta, std::vector<std::vector<std::size_t>>(A.nrows())};
    for (std::size_t i = 0; i < A.nrows(); ++i) {
        double max_neg = 0.0;
        for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k)
            if (A.col(k) != i) max_neg = std::max(max_neg, -A.value(k));
        if (max_neg <= 0.0) continue;
        const double threshold = theta * max_neg;
        for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k)
            if (A.col(k) != i && -A.value(k) > 0.0 && -A.value(k) >= threshold)
                S.strong[i].push_back(A.col(k));
    }
    return S;
}

CfSplitting cf_split_pmis(const StrengthGraph &S, std::uint64_t seed) {
    enum class State : std::uint8_t { Undecided, C, F };
    const std::size_t n = S.size();
    const auto ST = S.transposed();
    std::vector<double> weight(n);
    std::vector<State> state(n, State::Undecided);
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = static_cast<double>(ST[i].size()) +
                    static_cast<double>(hash_combine(seed, i) >> 11) * 0x1.0p-53;
        if (ST[i].empty()) state[i] = State::F;
    }
    auto beats = [&](std::size_t i, std::size_t j) {
        return weight[i] > weight[j] || (weight[i] == weight[j] && i > j);
    };

    std::vector<std::size_t> undecided, selected;
    for (std::size_t i = 0; i < n; ++i)
        if (state[i] == State::Undecided) undecided.push_back(i);
    while (!undecided.empty()) {
        selected.clear();
        for (std::size_t i : undecided) {
            bool local_max = true;
            for (const auto *nbrs : {&S.strong[i], &ST[i]}) {
                for (std::size_t j : *nbrs)
                    if (state[j] == State::Undecided && beats(j, i)) {
                        local_max = false;
                        break;
                    }
                if (!local_max) break;
            }
            if (local_max) selected.push_back(i);
        }
        for (std::size_t c : selected) state[c] = State::C;
        for (std::size_t c : selected)
            for (std::size_t j : ST[c])
                if (state[j] == State::Undecided) state[j] = State::F;
        std::erase_if(undecided, [&](std::size_t i) { return state[i] != State::Undecided; });
    }

    CfSplitting split;
    split.marks.resize(n);
    for (std::size_t i = 0; i < n; ++i) split.marks[i] = state[i] == State::C ? PointType::C : PointType::F;
    // F points with strong connections need a strong C neighbor.
    for (std::size_t i = 0; i < n; ++i) {
        if (split.marks[i] == PointType::C || S.strong[i].empty()) continue;
        const bool has_c = std::any_of(S.strong[i].begin(), S.strong[i].end(),
                                       [&](std::size_t j) { return split.is_coarse(j); });
        if (!has_c) split.marks[i] = PointType::C;
    }
    return split;
}

SparseMatrix build_interpolation(const SparseMatrix &A, const StrengthGraph &S, CfSplitting &split) {
    const std::size_t n = A.nrows();
    if (S.size() != n || split.marks.size() != n)
        throw DimensionError("build_interpolation: strength graph or splitting size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (split.is_coarse(i) || S.strong[i].empty()) continue;
        const bool has_c = std::any_of(S.strong[i].begin(), S.strong[i].end(),
                                       [&](std::size_t j) { return split.is_coarse(j); });
        if (!has_c) split.marks[i] = PointType::C;
    }
    std::vector<std::size_t> coarse_index(n, 0);
    std::size_t nc = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (split.is_coarse(i)) coarse_index[i] = nc++;

    std::vector<std::size_t> ptr(n + 1, 0), col;
    Vector val;
    for (std::size_t i = 0; i < n; ++i) {
        if (split.is_coarse(i)) {
            col.push_back(coarse_index[i]);
            val.push_back(1.0);
        } else if (!S.strong[i].empty()) {
            double aii = 0.0, neg_sum = 0.0, c_sum = 0.0;
            for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k) {
                if (A.col(k) == i)
                    aii = A.value(k);
                else if (A.value(k) < 0.0)
                    neg_sum += A.value(k);
            }
            for (std::size_t j : S.strong[i])
                if (split.is_coarse(j)) c_sum += A.at(i, j);
            if (aii == 0.0) throw SingularMatrixError("build_interpolation: zero diagonal in row " +
                                                          std::to_string(i),
                                                      i);
            const double scale = neg_sum / c_sum;
            // S.strong[i] is sorted, and coarse_index is monotone in the row index.
            for (std::size_t j : S.strong[i]) {
                if (!split.is_coarse(j)) continue;
                col.push_back(coarse_index[j]);
                val.push_back(-(A.at(i, j) * scale) / aii);
            }
        }
        ptr[i + 1] = col.size();
    }
    return SparseMatrix(n, nc, std::move(ptr), std::move(col), std::move(val));
}

namespace {

void finish_level(Level &lvl, std::size_t blocks) {
    const std::size_t n = lvl.A.nrows();
    lvl.diag = lvl.A.diagonal();
    lvl.partition = BlockPartition::uniform(n, blocks);
    lvl.l1_diag = compute_l1_diagonal(lvl.A, lvl.partition);
    if (lvl.split.marks.size() != n) lvl.split.marks.assign(n, PointType::F);
    lvl.cf_order.clear();
    lvl.cf_block_coarse.clear();
    for (std::size_t b = 0; b < lvl.partition.num_blocks(); ++b) {
        std::size_t coarse = 0;
        for (std::size_t i = lvl.partition.begin(b); i < lvl.partition.end(b); ++i)
            if (lvl.split.is_coarse(i)) {
                lvl.cf_order.push_back(i);
                ++coarse;
            }
        for (std::size_t i = lvl.partition.begin(b); i < lvl.partition.end(b); ++i)
            if (!lvl.split.is_coarse(i)) lvl.cf_order.push_back(i);
        lvl.cf_block_coarse.push_back(coarse);
    }
}

} // namespace

Hierarchy build_hierarchy(const SparseMatrix &A, const SetupParams &params) {
    if (!A.is_square()) throw DimensionError("build_hierarchy: matrix is not square");
    if (!(params.theta > 0.0 && params.theta < 1.0)) throw ValidationError("theta must lie in (0, 1)");
    if (params.check_symmetry && !A.is_symmetric(1e-12))
        throw ValidationError("build_hierarchy: input matrix is not symmetric");

    Hierarchy H;
    H.params = params;
    std::vector<Level> fine_first;
    SparseMatrix current = A;
    std::size_t depth = 0;
    while (current.nrows() > params.coarse_size_max) {
        const StrengthGraph S = strength_of_connection(current, params.theta);
        CfSplitting split = cf_split_pmis(S, hash_combine(params.seed, depth));
        SparseMatrix P = build_interpolation(current, S, split);
        const std::size_t n = current.nrows(), nc = P.ncols();
        if (nc == 0 || static_cast<double>(nc) > params.stall_ratio * static_cast<double>(n)) {
            H.log.push_back("coarsening stalled at " + std::to_string(n) + " rows (" +
                            std::to_string(nc) + " coarse points)");
            break;
        }
        SparseMatrix R = transpose(P);
        SparseMatrix Ac = triple_product(R, current, P);
        if (params.check_symmetry && !Ac.is_symmetric(1e-10))
            throw ValidationError("Galerkin operator at depth " + std::to_string(depth + 1) +
                                  " lost symmetry");
        Level lvl;
        lvl.A = std::move(current);
        lvl.P = std::move(P);
        lvl.R = std::move(R);
        lvl.split = std::move(split);
        fine_first.push_back(std::move(lvl));
        current = std::move(Ac);
        ++depth;
    }
    const std::size_t nc = current.nrows();
    if (nc != 0 && nc > params.dense_cap / nc)
        throw CapacityError("coarsest level has " + std::to_string(nc) +
                            " rows, too many for the dense solver; raise theta or the dense cap");
    Level coarsest;
    coarsest.A = std::move(current);
    fine_first.push_back(std::move(coarsest));

    H.levels.assign(std::make_move_iterator(fine_first.rbegin()),
                    std::make_move_iterator(fine_first.rend()));
    for (auto &lvl : H.levels) finish_level(lvl, params.partition_blocks);
    H.coarse_lu = dense_lu_factor(H.levels.front().A.to_dense(params.dense_cap));
    return H;
}

std::vector<double> Hierarchy::level_complexity() const {
    std::vector<double> c(levels.size());
    const double top_nnz = static_cast<double>(levels.back().A.nnz());
    for (std::size_t l = 0; l < levels.size(); ++l) c[l] = static_cast<double>(levels[l].A.nnz()) / top_nnz;
    return c;
}

double Hierarchy::operator_complexity() const {
    double s = 0.0;
    for (double c : level_complexity()) s += c;
    return s;
}

namespace {

struct Fnv {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void bytes(const void *p, std::size_t len) {
        const auto *b = static_cast<const unsigned char *>(p);
        for (std::size_t k = 0; k < len; ++k) {
            h ^= b[k];
            h *= 0x100000001b3ULL;
        }
    }
    template <class T>
    void span(std::span<const T> s) {
        const std::uint64_t len = s.size();
        bytes(&len, sizeof len);
        bytes(s.data(), s.size_bytes());
    }
    void matrix(const SparseMatrix &M) {
        const std::uint64_t dims[2] = {M.nrows(), M.ncols()};
        bytes(dims, sizeof dims);
        span(M.row_ptr());
        span(M.col_idx());
        span(M.values());
    }
};

} // namespace

std::uint64_t Hierarchy::fingerprint() const {
    Fnv f;
    for (const auto &lvl : levels) {
        f.matrix(lvl.A);
        f.matrix(lvl.P);
        f.matrix(lvl.R);
        f.span(std::span<const PointType>(lvl.split.marks));
        f.span(lvl.partition.boundaries());
        f.span(std::span<const double>(lvl.l1_diag));
    }
    f.span(coarse_lu.lu.data());
    f.span(std::span<const std::size_t>(coarse_lu.perm));
    return f.h;
}

} // namespace flexamg
