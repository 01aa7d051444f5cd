#include "flexamg/cycle.hpp"

#include "flexamg/error.hpp"
#include "flexamg/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace flexamg {

std::size_t standard_cutoff(std::size_t l_top, std::size_t n_flex) {
    if (l_top <= 1) return 0;
    if (n_flex == 0) throw ValidationError("flexible level count must be positive");
    return l_top + 1 > n_flex ? std::max<std::size_t>(1, l_top + 1 - n_flex) : 1;
}

namespace {

[[noreturn]] void fail(std::size_t idx, const std::string &msg) {
    throw ValidationError("instruction " + std::to_string(idx) + ": " + msg);
}

bool finite_smoother(const SmootherSpec &s) {
    return std::isfinite(s.omega) && std::isfinite(s.omega_i) && std::isfinite(s.omega_o);
}

} // namespace

void validate_program(const FlexProgram &prog, std::size_t num_levels, std::size_t depth_cap) {
    if (num_levels == 0) throw ValidationError("program: empty hierarchy");
    if (prog.l_top >= num_levels)
        throw ValidationError("program: top level L" + std::to_string(prog.l_top) +
                              " exceeds hierarchy top L" + std::to_string(num_levels - 1));
    if (prog.l_std > prog.l_top) throw ValidationError("program: l_std above l_top");
    if (prog.instrs.size() > depth_cap)
        throw ValidationError("program: " + std::to_string(prog.instrs.size()) +
                              " instructions exceed the cap of " + std::to_string(depth_cap));
    std::size_t cur = prog.l_top;
    bool solved = false;  // StdVSolve done during the current visit of l_std
    for (std::size_t k = 0; k < prog.instrs.size(); ++k) {
        const Instruction &in = prog.instrs[k];
        switch (in.kind) {
        case InstrKind::Relax:
            if (in.level != cur) fail(k, "relax at L" + std::to_string(in.level) + " while at L" + std::to_string(cur));
            if (cur == prog.l_std) fail(k, "relax at the standard-cycle level");
            if (!finite_smoother(in.smoother)) fail(k, "non-finite smoother weight");
            break;
        case InstrKind::Restrict:
            if (in.level != cur) fail(k, "restrict from L" + std::to_string(in.level) + " while at L" + std::to_string(cur));
            if (cur <= prog.l_std) fail(k, "restrict below the standard-cycle level");
            cur -= 1;
            solved = false;
            break;
        case InstrKind::StdVSolve:
            if (in.level != prog.l_std) fail(k, "vsolve outside the standard-cycle level");
            if (cur != prog.l_std) fail(k, "vsolve at L" + std::to_string(in.level) + " while at L" + std::to_string(cur));
            if (solved) fail(k, "repeated vsolve");
            solved = true;
            break;
        case InstrKind::CoarseCorrection:
            if (!std::isfinite(in.alpha)) fail(k, "non-finite correction weight");
            if (in.level != cur + 1 || in.level > prog.l_top)
                fail(k, "correction into L" + std::to_string(in.level) + " while at L" + std::to_string(cur) + " (unbalanced)");
            if (cur == prog.l_std && !solved) fail(k, "correction without vsolve at the standard-cycle level");
            cur += 1;
            break;
        }
    }
    if (cur != prog.l_top) throw ValidationError("program: unbalanced, ends at L" + std::to_string(cur));
}

void validate_program(const FlexProgram &prog, const Hierarchy &h, std::size_t depth_cap) {
    validate_program(prog, h.num_levels(), depth_cap);
    if (prog.l_top != h.top())
        throw ValidationError("program: top level L" + std::to_string(prog.l_top) +
                              " does not match hierarchy top L" + std::to_string(h.top()));
}

CycleState::CycleState(const Hierarchy &h) {
    const std::size_t nl = h.num_levels();
    x.resize(nl);
    b.resize(nl);
    r.resize(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        const std::size_t n = h.levels[l].A.nrows();
        x[l].assign(n, 0.0);
        b[l].assign(n, 0.0);
        r[l].assign(n, 0.0);
    }
}

namespace {

const SmootherSpec kStdPre{SmootherKind::GSF, SmootherVariant::L1, Ordering::Lex};
const SmootherSpec kStdPost{SmootherKind::GSB, SmootherVariant::L1, Ordering::Lex};

void do_restrict(const Hierarchy &h, std::size_t l, CycleState &s) {
    const Level &lv = h.levels[l];
    residual(lv.A, s.x[l], s.b[l], s.r[l]);
    spmv(lv.R, s.r[l], s.b[l - 1]);
    std::fill(s.x[l - 1].begin(), s.x[l - 1].end(), 0.0);
}

void do_correct(const Hierarchy &h, std::size_t l, double alpha, CycleState &s) {
    spmv(h.levels[l].P, s.x[l - 1], s.r[l]);
    axpy_inplace(alpha, s.r[l], s.x[l]);
}

void coarse_solve(const Hierarchy &h, CycleState &s) {
    s.x[0] = dense_lu_solve(h.coarse_lu, s.b[0]);
}

// V(1,1) on state.x[l], state.b[l].
void v_cycle_at(const Hierarchy &h, std::size_t l, CycleState &s) {
    if (l == 0) {
        coarse_solve(h, s);
        return;
    }
    apply_smoother(h.levels[l], s.x[l], s.b[l], kStdPre, s.ws);
    do_restrict(h, l, s);
    v_cycle_at(h, l - 1, s);
    do_correct(h, l, 1.0, s);
    apply_smoother(h.levels[l], s.x[l], s.b[l], kStdPost, s.ws);
}

void run_program(const FlexProgram &prog, const Hierarchy &h, CycleState &s) {
    for (const Instruction &in : prog.instrs) {
        switch (in.kind) {
        case InstrKind::Relax: apply_smoother(h.levels[in.level], s.x[in.level], s.b[in.level], in.smoother, s.ws); break;
        case InstrKind::Restrict: do_restrict(h, in.level, s); break;
        case InstrKind::CoarseCorrection: do_correct(h, in.level, in.alpha, s); break;
        case InstrKind::StdVSolve: v_cycle_at(h, in.level, s); break;
        }
    }
}

void check_top(const Hierarchy &h, std::size_t level, std::size_t nx, std::size_t nb) {
    if (level >= h.num_levels()) throw DimensionError("level outside the hierarchy");
    const std::size_t n = h.levels[level].A.nrows();
    if (nx != n || nb != n) throw DimensionError("vector length does not match the level size");
}

} // namespace

void execute_cycle(const FlexProgram &prog, const Hierarchy &h, std::span<double> x,
                   std::span<const double> b, CycleState &state) {
    check_top(h, prog.l_top, x.size(), b.size());
    const std::size_t L = prog.l_top;
    std::copy(x.begin(), x.end(), state.x[L].begin());
    std::copy(b.begin(), b.end(), state.b[L].begin());
    run_program(prog, h, state);
    std::copy(state.x[L].begin(), state.x[L].end(), x.begin());
}

Vector execute_cycle(const FlexProgram &prog, const Hierarchy &h, std::span<const double> x,
                     std::span<const double> b) {
    CycleState state(h);
    Vector out(x.begin(), x.end());
    execute_cycle(prog, h, out, b, state);
    return out;
}

void standard_v_cycle(const Hierarchy &h, std::size_t level, std::span<double> x,
                      std::span<const double> b, CycleState &state) {
    check_top(h, level, x.size(), b.size());
    std::copy(x.begin(), x.end(), state.x[level].begin());
    std::copy(b.begin(), b.end(), state.b[level].begin());
    v_cycle_at(h, level, state);
    std::copy(state.x[level].begin(), state.x[level].end(), x.begin());
}

Vector standard_v_cycle(const Hierarchy &h, std::size_t level, std::span<const double> x,
                        std::span<const double> b) {
    CycleState state(h);
    Vector out(x.begin(), x.end());
    standard_v_cycle(h, level, out, b, state);
    return out;
}

FlexProgram v_cycle_program(std::size_t l_top, const SmootherSpec &pre, const SmootherSpec &post,
                            std::size_t nu_pre, std::size_t nu_post) {
    FlexProgram p;
    p.l_top = l_top;
    p.l_std = 0;
    if (l_top == 0) {
        p.instrs.push_back(Instruction::vsolve(0));
        return p;
    }
    for (std::size_t l = l_top; l >= 1; --l) {
        for (std::size_t k = 0; k < nu_pre; ++k) p.instrs.push_back(Instruction::relax(l, pre));
        p.instrs.push_back(Instruction::restrict_from(l));
    }
    p.instrs.push_back(Instruction::vsolve(0));
    for (std::size_t l = 1; l <= l_top; ++l) {
        p.instrs.push_back(Instruction::correct(l, 1.0));
        for (std::size_t k = 0; k < nu_post; ++k) p.instrs.push_back(Instruction::relax(l, post));
    }
    return p;
}

namespace {

double work_units(const FlexProgram &prog, std::span<const double> smooth,
                  std::span<const double> restrict_cost, std::span<const double> correct_cost) {
    auto at = [](std::span<const double> c, std::size_t l) {
        if (c.empty()) return 0.0;
        if (l >= c.size()) throw DimensionError("work units: no complexity for level " + std::to_string(l));
        return c[l];
    };
    double wu = 0.0;
    for (const Instruction &in : prog.instrs) {
        switch (in.kind) {
        case InstrKind::Relax: wu += in.smoother.sweeps() * at(smooth, in.level); break;
        case InstrKind::Restrict: wu += at(restrict_cost, in.level); break;
        case InstrKind::CoarseCorrection: wu += at(correct_cost, in.level); break;
        case InstrKind::StdVSolve:
            for (std::size_t l = 1; l <= in.level; ++l)
                wu += 2.0 * at(smooth, l) + at(restrict_cost, l) + at(correct_cost, l);
            break;
        }
    }
    return wu;
}

} // namespace

double cycle_work_units(const FlexProgram &prog, std::span<const double> complexity) {
    return work_units(prog, complexity, {}, {});
}

double cycle_work_units(const FlexProgram &prog, const Hierarchy &h, const WorkUnitOptions &opts) {
    const std::vector<double> c = h.level_complexity();
    if (!opts.include_transfers) return work_units(prog, c, {}, {});
    const double top = static_cast<double>(h.levels[h.top()].A.nnz());
    std::vector<double> rc(h.num_levels(), 0.0), pc(h.num_levels(), 0.0);
    for (std::size_t l = 1; l < h.num_levels(); ++l) {
        rc[l] = static_cast<double>(h.levels[l].A.nnz() + h.levels[l].R.nnz()) / top;
        pc[l] = static_cast<double>(h.levels[l].P.nnz()) / top;
    }
    return work_units(prog, c, rc, pc);
}

DenseMatrix assemble_iteration_matrix(const FlexProgram &prog, const Hierarchy &h, std::size_t cap) {
    const std::size_t n = h.levels.at(prog.l_top).A.nrows();
    DenseMatrix E(n, n, cap);
    CycleState state(h);
    const Vector zero(n, 0.0);
    Vector e(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        execute_cycle(prog, h, e, zero, state);
        E.set_column(j, e);
    }
    return E;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_eigen(const DenseMatrix &E) {
    return Eigen::Map<const RowMat>(E.data().data(), static_cast<Eigen::Index>(E.nrows()),
                                    static_cast<Eigen::Index>(E.ncols()));
}

double max_modulus(const Eigen::MatrixXd &H) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(H, false);
    double m = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) m = std::max(m, std::abs(es.eigenvalues()[i]));
    return m;
}

SpectralEstimate power_run(const Eigen::Map<const RowMat> &E, const SpectralOptions &opts, std::uint64_t seed) {
    const Eigen::Index n = E.rows();
    const Eigen::Index k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::max<std::size_t>(opts.subspace, 1)), n);
    Rng rng(seed);
    Eigen::MatrixXd Q(n, k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i < n; ++i) Q(i, j) = rng.uniform(-1.0, 1.0);
    Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ() * Eigen::MatrixXd::Identity(n, k);
    const double scale = E.cwiseAbs().maxCoeff();
    SpectralEstimate out;
    if (scale == 0.0) return out;
    double prev = -1.0;
    int calm = 0;
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        Eigen::MatrixXd Z = E * Q;
        const Eigen::MatrixXd H = Q.transpose() * Z;
        const double est = max_modulus(H);
        out.radius = est;
        out.iterations = it;
        if (Z.norm() <= 1e-300) {
            out.radius = 0.0;
            return out;
        }
        if (prev >= 0.0 && std::abs(est - prev) <= opts.tol * std::max(est, 1e-14 * scale)) {
            if (++calm >= 3) return out;
        } else {
            calm = 0;
        }
        prev = est;
        Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Z).householderQ() * Eigen::MatrixXd::Identity(n, k);
    }
    out.approximate = true;
    return out;
}

} // namespace

SpectralEstimate spectral_radius(const DenseMatrix &E, const SpectralOptions &opts) {
    if (E.nrows() != E.ncols()) throw DimensionError("spectral_radius: matrix is not square");
    SpectralEstimate best;
    if (E.nrows() == 0) return best;
    const auto M = as_eigen(E);
    const std::size_t runs = std::max<std::size_t>(opts.restarts, 1);
    for (std::size_t r = 0; r < runs; ++r) {
        const SpectralEstimate s = power_run(M, opts, hash_combine(opts.seed, r));
        if (r == 0 || s.radius > best.radius) {
            const bool approx = best.approximate || s.approximate;
            best = s;
            best.approximate = approx;
        } else {
            best.approximate = best.approximate || s.approximate;
        }
    }
    return best;
}

std::vector<std::complex<double>> eigenvalues(const DenseMatrix &E) {
    if (E.nrows() != E.ncols()) throw DimensionError("eigenvalues: matrix is not square");
    std::vector<std::complex<double>> out;
    if (E.nrows() == 0) return out;
    const Eigen::MatrixXd M = as_eigen(E);
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    if (es.info() != Eigen::Success) throw Error("eigenvalues: decomposition did not converge");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()[i]);
    std::stable_sort(out.begin(), out.end(), [](auto a, auto b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return out;
}

double measure_asymptotic_rate(const FlexProgram &prog, const Hierarchy &h, std::size_t iterations,
                               std::size_t tail, std::uint64_t seed) {
    const SparseMatrix &A = h.levels.at(prog.l_top).A;
    const std::size_t n = A.nrows();
    CycleState state(h);
    Vector x(n), r(n);
    const Vector zero(n, 0.0);
    Rng rng(seed);
    for (double &v : x) v = rng.uniform(-1.0, 1.0);
    tail = std::clamp<std::size_t>(tail, 1, std::max<std::size_t>(iterations, 1));
    double log_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < iterations; ++k) {
        spmv(A, x, r);
        const double before = norm2(r);
        if (before == 0.0) return 0.0;
        for (double &v : x) v /= before;
        execute_cycle(prog, h, x, zero, state);
        spmv(A, x, r);
        const double ratio = norm2(r);  // previous residual normalized to 1
        if (!std::isfinite(ratio)) return std::numeric_limits<double>::infinity();
        if (ratio == 0.0) return 0.0;
        if (k + tail >= iterations) {
            log_sum += std::log(ratio);
            ++counted;
        }
    }
    return counted == 0 ? 0.0 : std::exp(log_sum / static_cast<double>(counted));
}

double convergence_rate(double r_first, double r_last, std::size_t N) {
    if (N == 0 || r_first == 0.0) return 0.0;
    return std::pow(r_last / r_first, 1.0 / static_cast<double>(N));
}

SolveStats run_solver(const FlexProgram &prog, const Hierarchy &h, std::span<const double> b,
                      std::span<const double> x0, const SolveOptions &opts) {
    validate_program(prog, h);
    const SparseMatrix &A = h.levels[prog.l_top].A;
    if (b.size() != A.nrows() || x0.size() != A.nrows())
        throw DimensionError("run_solver: vector length does not match the matrix");
    SolveStats st;
    st.x.assign(x0.begin(), x0.end());
    Vector r(A.nrows());
    residual(A, st.x, b, r);
    const double r0 = norm2(r);
    st.history.push_back(r0);
    const double target = opts.mode == ToleranceMode::Relative ? opts.tol * r0 : opts.tol;
    const double wu = cycle_work_units(prog, h);
    CycleState state(h);
    double rk = r0;
    if (r0 == 0.0 || rk <= target) {
        st.converged = true;
        return st;
    }
    while (st.N < opts.max_iter) {
        execute_cycle(prog, h, st.x, b, state);
        ++st.N;
        residual(A, st.x, b, r);
        rk = norm2(r);
        st.history.push_back(rk);
        if (!std::isfinite(rk) || rk > kDivergenceFactor * r0) {
            st.diverged = true;
            break;
        }
        if (rk <= target) {
            st.converged = true;
            break;
        }
    }
    st.wu_total = wu * static_cast<double>(st.N);
    st.rho = st.diverged ? kDivergedRho : convergence_rate(r0, rk, st.N);
    return st;
}

} // namespace flexamg
