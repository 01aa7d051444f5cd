#include "flexamg/krylov.hpp"

#include "flexamg/error.hpp"
#include "flexamg/rng.hpp"

#include <cmath>

namespace flexamg {

std::string to_string(PrecondKind k) {
    switch (k) {
    case PrecondKind::None: return "none";
    case PrecondKind::Diagonal: return "diagonal";
    case PrecondKind::Amg: return "amg";
    }
    return "?";
}

Preconditioner Preconditioner::none() { return {}; }

Preconditioner Preconditioner::diagonal(const SparseMatrix &A) {
    Preconditioner M;
    M.kind_ = PrecondKind::Diagonal;
    M.inv_diag_ = A.diagonal();
    for (std::size_t i = 0; i < M.inv_diag_.size(); ++i) {
        if (M.inv_diag_[i] == 0.0) throw SingularMatrixError("diagonal preconditioner: zero diagonal", i);
        M.inv_diag_[i] = 1.0 / M.inv_diag_[i];
    }
    return M;
}

Preconditioner Preconditioner::amg(FlexProgram prog, std::shared_ptr<const Hierarchy> h) {
    if (!h) throw ValidationError("amg preconditioner needs a hierarchy");
    validate_program(prog, *h);
    Preconditioner M;
    M.kind_ = PrecondKind::Amg;
    M.prog_ = std::move(prog);
    M.h_ = std::move(h);
    return M;
}

double Preconditioner::work_units() const {
    // Diagonal scaling is a vector operation and is not counted.
    return kind_ == PrecondKind::Amg ? cycle_work_units(prog_, *h_) : 0.0;
}

namespace {

using Monitor = std::function<bool(const std::vector<double> &history)>;

PcgStats pcg_core(const SparseMatrix &A, std::span<const double> b, std::span<const double> x0,
                  const Preconditioner &M, double target, std::size_t max_iter, const Monitor &stop) {
    const std::size_t n = A.nrows();
    if (!A.is_square() || b.size() != n || x0.size() != n) throw DimensionError("pcg: size mismatch");
    PcgStats st;
    st.wu_per_iter = 1.0 + M.work_units();
    st.x.assign(x0.begin(), x0.end());
    Vector r = residual(A, st.x, b), z(n), p(n), Ap(n);
    std::unique_ptr<CycleState> cs;
    if (M.kind() == PrecondKind::Amg) cs = std::make_unique<CycleState>(*M.hierarchy());
    auto precondition = [&](const Vector &rr, Vector &zz) {
        switch (M.kind()) {
        case PrecondKind::None: zz = rr; break;
        case PrecondKind::Diagonal:
            for (std::size_t i = 0; i < n; ++i) zz[i] = M.inverse_diagonal()[i] * rr[i];
            break;
        case PrecondKind::Amg:
            std::fill(zz.begin(), zz.end(), 0.0);
            execute_cycle(M.program(), *M.hierarchy(), zz, rr, *cs);
            break;
        }
    };
    double rn = norm2(r);
    st.history.push_back(rn);
    if (rn <= target) {
        st.converged = true;
        return st;
    }
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    while (st.N < max_iter) {
        if (!(rz > 0.0)) {
            st.breakdown = true;
            break;
        }
        spmv(A, p, Ap);
        const double pAp = dot(p, Ap);
        if (!(pAp > 1e-14 * norm2(p) * norm2(Ap))) {
            st.breakdown = true;
            break;
        }
        const double alpha = rz / pAp;
        axpy_inplace(alpha, p, st.x);
        axpy_inplace(-alpha, Ap, r);
        ++st.N;
        rn = norm2(r);
        st.history.push_back(rn);
        if (!std::isfinite(rn)) {
            st.diverged = true;
            break;
        }
        if (rn <= target) {
            st.converged = true;
            break;
        }
        if (stop && stop(st.history)) break;
        precondition(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (st.diverged)
        st.rho = kDivergedRho;
    else if (st.N == 0)
        st.rho = 1.0;  // broke down before any progress
    else
        st.rho = convergence_rate(st.history.front(), st.history.back(), st.N);
    st.wu_total = static_cast<double>(st.N) * st.wu_per_iter;
    return st;
}

} // namespace

PcgStats pcg(const SparseMatrix &A, std::span<const double> b, std::span<const double> x0,
             const Preconditioner &M, const PcgOptions &opts) {
    if (!(opts.tol_rel > 0.0)) throw ValidationError("pcg: tolerance must be positive");
    const double r0 = norm2(residual(A, x0, b));
    return pcg_core(A, b, x0, M, opts.tol_rel * r0, opts.max_iter, {});
}

PcgStats pcg(const SparseMatrix &A, std::span<const double> b, const Preconditioner &M, const PcgOptions &opts) {
    const Vector x0(b.size(), 0.0);
    return pcg(A, b, x0, M, opts);
}

const std::vector<ReferenceSolver> &reference_solvers() {
    using K = SmootherKind;
    using V = SmootherVariant;
    static const std::vector<ReferenceSolver> table = [] {
        const SmootherSpec l1_gsf{K::GSF, V::L1, Ordering::Lex};
        const SmootherSpec l1_gsb{K::GSB, V::L1, Ordering::Lex};
        SmootherSpec l1_gsf_cf = l1_gsf;
        l1_gsf_cf.ordering = Ordering::CF;
        const SmootherSpec h_gsf_cf{K::GSF, V::Weighted, Ordering::CF, 1.0, 1.1, 0.9};
        const SmootherSpec h_gsf{K::GSF, V::Weighted, Ordering::Lex, 1.0, 1.1, 0.9};
        const SmootherSpec l1_jac_cf{K::Jacobi, V::L1, Ordering::CF};
        const SmootherSpec l1_jac{K::Jacobi, V::L1, Ordering::Lex};
        return std::vector<ReferenceSolver>{
            {"default", l1_gsf, 1, l1_gsb, 1},
            {"tuned1", l1_gsf_cf, 1, l1_gsf_cf, 1},
            {"tuned2", h_gsf_cf, 1, h_gsf_cf, 1},
            {"tuned3", l1_gsf, 1, l1_gsf, 1},
            {"tuned4", l1_jac_cf, 1, l1_jac_cf, 1},
            {"tuned5", h_gsf, 1, h_gsf, 1},
            {"tuned6", l1_gsf, 2, l1_gsb, 1},
            // Fastest hand-tuned preconditioner for the time-stepping problem.
            {"pcg-tuned", l1_jac, 1, l1_jac, 1},
        };
    }();
    return table;
}

const ReferenceSolver &reference_solver(std::string_view name) {
    std::string key(name);
    // "tuned 6" and "tuned-6" name the same row.
    std::erase_if(key, [](char c) { return c == ' ' || c == '_'; });
    if (key.size() == 7 && key.starts_with("tuned-")) key.erase(5, 1);
    for (const ReferenceSolver &r : reference_solvers())
        if (r.name == key) return r;
    throw ValidationError("unknown reference solver '" + std::string(name) + "'");
}

FlexProgram reference_solver_program(std::string_view name, const Hierarchy &h) {
    const ReferenceSolver &r = reference_solver(name);
    return v_cycle_program(h.top(), r.pre, r.post, r.nu_pre, r.nu_post);
}

FlexProgram retarget_program(const FlexProgram &prog, std::size_t new_top) {
    if (new_top == prog.l_top) return prog;
    const long shift = static_cast<long>(new_top) - static_cast<long>(prog.l_top);
    if (static_cast<long>(prog.l_std) + shift < 0)
        throw ValidationError("cannot retarget a program to " + std::to_string(new_top + 1) + " levels");
    FlexProgram out = prog;
    out.l_top = new_top;
    out.l_std = static_cast<std::size_t>(static_cast<long>(prog.l_std) + shift);
    for (Instruction &in : out.instrs) in.level = static_cast<std::size_t>(static_cast<long>(in.level) + shift);
    return out;
}

HybridStats hybrid_solve(const SparseMatrix &A, std::span<const double> b, const ProgramFactory &make_program,
                         const HybridConfig &cfg, const PcgOptions &opts, const SetupParams &setup) {
    if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw ValidationError("hybrid threshold must lie in [0, 1]");
    if (cfg.window == 0) throw ValidationError("hybrid check window must be positive");
    if (!(opts.tol_rel > 0.0)) throw ValidationError("pcg: tolerance must be positive");
    const Vector x0(b.size(), 0.0);
    const double r0 = norm2(b);
    const double target = opts.tol_rel * r0;
    bool want_switch = false;
    // A windowed rate can exceed 1 only through CG's non-monotone 2-norm, so a
    // threshold of 1 disables switching.
    auto monitor = [&](const std::vector<double> &h) {
        const std::size_t k = h.size() - 1;
        if (cfg.threshold >= 1.0 || k % cfg.window != 0) return false;
        const double rate = std::pow(h[k] / h[k - cfg.window], 1.0 / static_cast<double>(cfg.window));
        want_switch = rate > cfg.threshold;
        return want_switch;
    };
    HybridStats out;
    PcgStats diag = pcg_core(A, b, x0, Preconditioner::diagonal(A), target, opts.max_iter, monitor);
    out.diagonal_iterations = diag.N;
    if (!want_switch || diag.converged) {
        out.stats = std::move(diag);
        return out;
    }
    out.switched = true;
    out.switch_iteration = diag.N;
    auto h = std::make_shared<const Hierarchy>(build_hierarchy(A, setup));
    const Preconditioner M = Preconditioner::amg(make_program(*h), h);
    PcgStats amg = pcg_core(A, b, diag.x, M, target, opts.max_iter - diag.N, {});
    out.amg_iterations = amg.N;
    PcgStats &st = out.stats;
    st.history = diag.history;
    st.history.insert(st.history.end(), amg.history.begin() + 1, amg.history.end());
    st.N = diag.N + amg.N;
    st.x = std::move(amg.x);
    st.converged = amg.converged;
    st.diverged = amg.diverged;
    st.breakdown = amg.breakdown;
    st.wu_per_iter = amg.wu_per_iter;
    st.wu_total = diag.wu_total + amg.wu_total;
    st.rho = st.diverged ? kDivergedRho : convergence_rate(st.history.front(), st.history.back(), st.N);
    return out;
}

std::vector<TimestepRecord> run_timesteps(const TimestepSpec &spec, TimestepSolver solver,
                                          const ProgramFactory &make_program, const HybridConfig &cfg,
                                          const PcgOptions &opts, const SetupParams &setup, std::uint64_t seed) {
    const auto mats = build_timestep_sequence(spec);
    std::vector<TimestepRecord> out;
    for (std::size_t k = 1; k <= mats.size(); ++k) {
        const SparseMatrix &A = mats[k - 1];
        // One right-hand side for the whole sequence keeps steps comparable.
        const Vector b = random_vector(A.nrows(), seed);
        TimestepRecord rec;
        rec.k = k;
        rec.odd = k % 2 == 1;
        rec.eta = diagonal_dominance_ratio(A);
        PcgStats st;
        switch (solver) {
        case TimestepSolver::Diagonal: st = pcg(A, b, Preconditioner::diagonal(A), opts); break;
        case TimestepSolver::Amg: {
            auto h = std::make_shared<const Hierarchy>(build_hierarchy(A, setup));
            st = pcg(A, b, Preconditioner::amg(make_program(*h), h), opts);
            break;
        }
        case TimestepSolver::Hybrid: {
            HybridStats hs = hybrid_solve(A, b, make_program, cfg, opts, setup);
            rec.switched = hs.switched;
            st = std::move(hs.stats);
            break;
        }
        }
        rec.N = st.N;
        rec.wu_total = st.wu_total;
        rec.rho = st.rho;
        rec.converged = st.converged;
        out.push_back(rec);
    }
    return out;
}

} // namespace flexamg
