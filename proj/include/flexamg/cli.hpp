#pragma once

#include "flexamg/problems.hpp"
#include "flexamg/sparse.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace flexamg {

/// A problem named on the command line:
///   poisson:<Nd>[:c1,c2,c3]
///   timestep:<Nd>:<k>[:reaction_scale,decay,dt]
///   mtx:<path>
struct ProblemSpec {
    enum class Kind : std::uint8_t { Poisson, Timestep, File } kind = Kind::Poisson;
    PoissonSpec poisson;
    TimestepSpec timestep;
    std::size_t step = 1;
    std::string path;
    std::string text;

    SparseMatrix build() const;
};

ProblemSpec parse_problem(std::string_view text);

/// Exit codes: 0 success, 2 invalid input, 1 runtime failure.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
int run_cli(int argc, char **argv);

} // namespace flexamg
