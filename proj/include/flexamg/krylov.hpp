#pragma once

#include "flexamg/cycle.hpp"
#include "flexamg/problems.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace flexamg {

enum class PrecondKind : std::uint8_t { None, Diagonal, Amg };

std::string to_string(PrecondKind k);

/// z = M^{-1} r. The AMG form applies one cycle from a zero guess.
class Preconditioner {
public:
    static Preconditioner none();
    static Preconditioner diagonal(const SparseMatrix &A);
    static Preconditioner amg(FlexProgram prog, std::shared_ptr<const Hierarchy> h);

    PrecondKind kind() const noexcept { return kind_; }
    const FlexProgram &program() const { return prog_; }
    const std::shared_ptr<const Hierarchy> &hierarchy() const { return h_; }
    const Vector &inverse_diagonal() const { return inv_diag_; }
    /// Work units per application, counted like cycle_work_units.
    double work_units() const;

private:
    PrecondKind kind_ = PrecondKind::None;
    Vector inv_diag_;
    FlexProgram prog_;
    std::shared_ptr<const Hierarchy> h_;
};

struct PcgOptions {
    double tol_rel = 1e-6;
    std::size_t max_iter = 500;
};

struct PcgStats : SolveStats {
    /// p^T A p or r^T z lost positivity.
    bool breakdown = false;
    double wu_per_iter = 0.0;
};

/// Preconditioned CG; stops at ||r_k|| <= tol_rel ||r_0||. wu_total counts one
/// operator application plus one preconditioner application per iteration.
PcgStats pcg(const SparseMatrix &A, std::span<const double> b, const Preconditioner &M,
             const PcgOptions &opts = {});
PcgStats pcg(const SparseMatrix &A, std::span<const double> b, std::span<const double> x0,
             const Preconditioner &M, const PcgOptions &opts = {});

struct ReferenceSolver {
    std::string name;
    SmootherSpec pre;
    std::size_t nu_pre = 1;
    SmootherSpec post;
    std::size_t nu_post = 1;
};

/// The default and tuned V(1,1)-type reference configurations.
const std::vector<ReferenceSolver> &reference_solvers();
const ReferenceSolver &reference_solver(std::string_view name);
/// Full recursive cycle over every level with a dense solve on level 0.
FlexProgram reference_solver_program(std::string_view name, const Hierarchy &h);

/// Moves a program to a hierarchy with a different number of levels by
/// shifting every level index; the standard region absorbs the difference.
FlexProgram retarget_program(const FlexProgram &prog, std::size_t new_top);

struct HybridConfig {
    double threshold = 0.65;
    std::size_t window = 5;
};

struct HybridStats {
    PcgStats stats;
    bool switched = false;
    /// Diagonal-preconditioned iterations done before the switch.
    std::size_t switch_iteration = 0;
    std::size_t diagonal_iterations = 0;
    std::size_t amg_iterations = 0;
};

/// Diagonal PCG until the windowed rate exceeds the threshold, then one AMG
/// setup and a restart from the current iterate. `make_program` builds the
/// AMG cycle for the freshly built hierarchy.
using ProgramFactory = std::function<FlexProgram(const Hierarchy &)>;
HybridStats hybrid_solve(const SparseMatrix &A, std::span<const double> b, const ProgramFactory &make_program,
                         const HybridConfig &cfg = {}, const PcgOptions &opts = {},
                         const SetupParams &setup = {});

struct TimestepRecord {
    std::size_t k = 0;
    bool odd = true;
    std::size_t N = 0;
    double wu_total = 0.0;
    double rho = 0.0;
    bool converged = false;
    bool switched = false;
    double eta = 0.0;
};

enum class TimestepSolver : std::uint8_t { Diagonal, Amg, Hybrid };

/// Solves every step of the surrogate sequence with a random right-hand side.
std::vector<TimestepRecord> run_timesteps(const TimestepSpec &spec, TimestepSolver solver,
                                          const ProgramFactory &make_program, const HybridConfig &cfg,
                                          const PcgOptions &opts, const SetupParams &setup, std::uint64_t seed);

} // namespace flexamg
