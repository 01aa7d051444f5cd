#include "flexamg/cli.hpp"

#include "flexamg/error.hpp"
#include "flexamg/evolve.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace flexamg {

namespace {

using Json = nlohmann::json;

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

double parse_double(const std::string &s, std::string_view what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ValidationError("bad number '" + s + "' for " + std::string(what));
    return v;
}

std::size_t parse_size(const std::string &s, std::string_view what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ValidationError("bad count '" + s + "' for " + std::string(what));
    return std::stoull(s);
}

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string read_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <class F>
void with_output(const std::string &path, std::ostream &fallback, F &&fn) {
    if (path.empty()) {
        fn(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path + "'");
    fn(f);
    if (!f) throw Error("write to '" + path + "' failed");
}

// Where the cycle comes from: a reference name or a DSL file.
struct CycleSource {
    std::string solver;
    std::string cycle_file;

    void add_to(CLI::App *app) {
        app->add_option("--solver", solver, "reference solver name (default, tuned1..tuned6, pcg-tuned)");
        app->add_option("--cycle", cycle_file, "cycle DSL file");
    }
    std::string label() const { return cycle_file.empty() ? (solver.empty() ? "default" : solver) : cycle_file; }
    ProgramFactory factory() const {
        if (!solver.empty() && !cycle_file.empty()) throw ValidationError("give either --solver or --cycle, not both");
        if (cycle_file.empty()) {
            const std::string name = solver.empty() ? "default" : solver;
            reference_solver(name);  // reject unknown names before any setup
            return [name](const Hierarchy &h) { return reference_solver_program(name, h); };
        }
        const FlexProgram prog = program_from_text(read_file(cycle_file));
        return [prog](const Hierarchy &h) { return retarget_program(prog, h.top()); };
    }
};

const char *kProxy = "poisson:32:1e-3,1,1";

struct Options {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string config;

    // shared by several subcommands
    std::vector<std::string> problems;
    std::string out;
    CycleSource cycle;
    std::optional<double> tol;
    std::optional<std::size_t> max_iter;
    std::string tol_mode = "absolute";
    bool krylov = false;
    double theta = 0.25;

    // spectrum
    std::size_t cap = kDenseEntryCap;
    // export-dot
    std::string name = "cycle";
    // timesteps / hybrid
    TimestepSpec ts;
    std::string precond = "hybrid";
    double threshold = 0.65;
    std::size_t window = 5;
    // evolve
    std::string preset = "desk";
    std::optional<std::size_t> mu, lambda, rho0, generations, n_flex, depth_cap, init_depth;
    std::optional<double> pc;
    std::string fitness = "work_units";
    bool include_zero = false;
    std::size_t runs = 1;
    std::string out_dir = "evolve_out";
};

SetupParams setup_of(const Options &o) {
    SetupParams p;
    p.theta = o.theta;
    p.seed = o.seed;
    return p;
}

std::vector<ProblemSpec> problems_of(const Options &o, std::string_view fallback) {
    std::vector<ProblemSpec> out;
    if (o.problems.empty()) out.push_back(parse_problem(fallback));
    for (const std::string &s : o.problems) out.push_back(parse_problem(s));
    return out;
}

ToleranceMode tol_mode_of(const std::string &s) {
    if (s == "absolute" || s == "abs") return ToleranceMode::Absolute;
    if (s == "relative" || s == "rel") return ToleranceMode::Relative;
    throw ValidationError("tolerance mode must be absolute or relative");
}

int cmd_gen_problem(const Options &o, std::ostream &out) {
    if (o.problems.size() != 1) throw ValidationError("gen-problem needs exactly one --problem");
    if (o.out.empty()) throw ValidationError("gen-problem needs --out");
    const SparseMatrix A = parse_problem(o.problems[0]).build();
    write_matrix_market(o.out, A);
    out << "rows," << A.nrows() << "\nnnz," << A.nnz() << '\n';
    return 0;
}

int cmd_hierarchy_info(const Options &o, std::ostream &out) {
    const auto probs = problems_of(o, kProxy);
    with_output(o.out, out, [&](std::ostream &os) {
        os << "problem,level,rows,nnz,complexity,coarse_points\n";
        for (const ProblemSpec &p : probs) {
            const Hierarchy h = build_hierarchy(p.build(), setup_of(o));
            const auto c = h.level_complexity();
            for (std::size_t l = h.num_levels(); l-- > 0;) {
                const Level &lv = h.level(l);
                std::size_t coarse = 0;
                for (PointType t : lv.split.marks) coarse += t == PointType::C;
                os << csv_field(p.text) << ',' << l << ',' << lv.A.nrows() << ',' << lv.A.nnz() << ',' << num(c[l]) << ','
                   << (l == 0 ? 0 : coarse) << '\n';
            }
            char fp[17];
            std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(h.fingerprint()));
            os << "# " << p.text << " operator_complexity=" << num(h.operator_complexity()) << " fingerprint=" << fp
               << '\n';
        }
    });
    return 0;
}

int cmd_eval(const Options &o, std::ostream &out) {
    const auto probs = problems_of(o, kProxy);
    const ProgramFactory make = o.cycle.factory();
    with_output(o.out, out, [&](std::ostream &os) {
        os << "solver,problem,N,rho,wu_total,converged\n";
        for (const ProblemSpec &p : probs) {
            const SparseMatrix A = p.build();
            auto h = std::make_shared<const Hierarchy>(build_hierarchy(A, setup_of(o)));
            const FlexProgram prog = make(*h);
            const Vector b = random_vector(A.nrows(), o.seed);
            SolveStats st;
            if (o.krylov) {
                st = pcg(A, b, Preconditioner::amg(prog, h), {o.tol.value_or(1e-6), o.max_iter.value_or(500)});
            } else {
                const Vector x0(A.nrows(), 0.0);
                st = run_solver(prog, *h, b, x0,
                                {o.tol.value_or(1e-8), o.max_iter.value_or(100), tol_mode_of(o.tol_mode)});
            }
            os << csv_field(o.cycle.label()) << ',' << csv_field(p.text) << ',' << st.N << ',' << num(st.rho) << ',' << num(st.wu_total)
               << ',' << (st.converged ? 1 : 0) << '\n';
        }
    });
    return 0;
}

int cmd_spectrum(const Options &o, std::ostream &out) {
    if (o.problems.size() > 1) throw ValidationError("spectrum takes one --problem");
    const ProblemSpec p = problems_of(o, "poisson:10:1e-3,1,1").front();
    const Hierarchy h = build_hierarchy(p.build(), setup_of(o));
    const FlexProgram prog = o.cycle.factory()(h);
    const DenseMatrix E = assemble_iteration_matrix(prog, h, o.cap);
    const auto ev = eigenvalues(E);
    with_output(o.out, out, [&](std::ostream &os) {
        os << "re,im\n";
        for (const auto &z : ev) os << num(z.real()) << ',' << num(z.imag()) << '\n';
    });
    if (!o.out.empty()) out << "spectral_radius," << num(ev.empty() ? 0.0 : std::abs(ev.front())) << '\n';
    return 0;
}

int cmd_export_dot(const Options &o, std::ostream &out) {
    FlexProgram prog;
    if (!o.cycle.cycle_file.empty() && o.cycle.solver.empty()) {
        prog = program_from_text(read_file(o.cycle.cycle_file));
    } else {
        const Hierarchy h = build_hierarchy(problems_of(o, kProxy).front().build(), setup_of(o));
        prog = o.cycle.factory()(h);
    }
    with_output(o.out, out, [&](std::ostream &os) { os << program_to_dot(prog, o.name); });
    return 0;
}

TimestepSolver timestep_solver_of(const std::string &s) {
    if (s == "diagonal") return TimestepSolver::Diagonal;
    if (s == "amg") return TimestepSolver::Amg;
    if (s == "hybrid") return TimestepSolver::Hybrid;
    throw ValidationError("--precond must be diagonal, amg or hybrid");
}

int cmd_timesteps(const Options &o, std::ostream &out) {
    const auto recs = run_timesteps(o.ts, timestep_solver_of(o.precond), o.cycle.factory(), {o.threshold, o.window},
                                    {o.tol.value_or(1e-6), o.max_iter.value_or(1000)}, setup_of(o), o.seed);
    with_output(o.out, out, [&](std::ostream &os) {
        os << "k,parity,N,wu_total,switched,eta\n";
        for (const TimestepRecord &r : recs)
            os << r.k << ',' << (r.odd ? "odd" : "even") << ',' << r.N << ',' << num(r.wu_total) << ','
               << (r.switched ? 1 : 0) << ',' << num(r.eta) << '\n';
    });
    return 0;
}

int cmd_hybrid(const Options &o, std::ostream &out) {
    const auto probs = problems_of(o, "timestep:16:1");
    const ProgramFactory make = o.cycle.factory();
    with_output(o.out, out, [&](std::ostream &os) {
        os << "problem,N,rho,wu_total,converged,switched,switch_iteration,diagonal_iterations,amg_iterations\n";
        for (const ProblemSpec &p : probs) {
            const SparseMatrix A = p.build();
            const Vector b = random_vector(A.nrows(), o.seed);
            const HybridStats hs = hybrid_solve(A, b, make, {o.threshold, o.window},
                                                {o.tol.value_or(1e-6), o.max_iter.value_or(1000)}, setup_of(o));
            os << csv_field(p.text) << ',' << hs.stats.N << ',' << num(hs.stats.rho) << ',' << num(hs.stats.wu_total) << ','
               << (hs.stats.converged ? 1 : 0) << ',' << (hs.switched ? 1 : 0) << ',' << hs.switch_iteration << ','
               << hs.diagonal_iterations << ',' << hs.amg_iterations << '\n';
        }
    });
    return 0;
}

int cmd_evolve(const Options &o, std::ostream &out) {
    EvoParams params;
    if (o.preset == "desk")
        params = EvoParams::desk();
    else if (o.preset != "full")
        throw ValidationError("--preset must be desk or full");
    params.seed = o.seed;
    params.workers = o.workers;
    params.fitness_mode = parse_fitness_mode(o.fitness);
    params.include_zero_weight = o.include_zero;
    if (o.mu) params.mu = *o.mu;
    if (o.lambda) params.lambda = *o.lambda;
    if (o.rho0) params.rho0 = *o.rho0;
    if (o.generations) params.t_max = *o.generations;
    if (o.pc) params.pc = *o.pc;
    if (o.n_flex) params.n_flex = *o.n_flex;
    if (o.depth_cap) params.depth_cap = *o.depth_cap;
    if (o.init_depth) params.init_depth = *o.init_depth;
    params.validate();
    if (o.runs == 0) throw ValidationError("--runs must be positive");

    GrammarParams gp;
    gp.n_flex = params.n_flex;
    gp.depth_cap = params.depth_cap;
    gp.include_zero_weight = params.include_zero_weight;
    const Grammar g(gp);

    std::vector<EvalProblem> probs;
    const auto specs = problems_of(o, o.krylov ? "timestep:16:1" : kProxy);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        EvalProblem p = make_eval_problem(specs[i].text, specs[i].build(),
                                          o.krylov ? EvalSolver::Pcg : EvalSolver::Stationary,
                                          hash_combine(o.seed, i), setup_of(o));
        p.stationary = {o.tol.value_or(1e-8), o.max_iter.value_or(100), tol_mode_of(o.tol_mode)};
        p.krylov = {o.tol.value_or(1e-6), o.max_iter.value_or(100)};
        probs.push_back(std::move(p));
    }

    namespace fs = std::filesystem;
    const fs::path dir(o.out_dir);
    fs::create_directories(dir / "cycles");
    std::vector<std::vector<Individual>> fronts;
    std::size_t id_offset = 0;
    out << "run,gen,hypervolume,front_size\n";
    for (std::size_t r = 0; r < o.runs; ++r) {
        EvoParams pr = params;
        if (o.runs > 1) pr.seed = hash_combine(params.seed, r);
        const std::string log_name = o.runs > 1 ? "generations_run" + std::to_string(r) + ".jsonl" : "generations.jsonl";
        std::ofstream log(dir / log_name);
        if (!log) throw Error("cannot write '" + (dir / log_name).string() + "'");
        EvolveResult res = evolve(g, probs, pr, [&](const GenerationReport &rep) {
            std::vector<Individual> shifted = *rep.evaluated;
            for (Individual &i : shifted) i.id += id_offset;
            write_generation_jsonl(log, rep.gen, shifted);
            out << r << ',' << rep.gen << ',' << num(rep.hypervolume) << ','
                << pareto_front(*rep.population).size() << '\n';
        });
        for (Individual &i : res.front) i.id += id_offset;
        id_offset += res.evaluations;
        fronts.push_back(std::move(res.front));
    }
    const std::vector<Individual> front = merge_fronts(fronts);
    {
        std::ofstream csv(dir / "front.csv");
        write_front_csv(csv, front);
    }
    for (const Individual &i : front) {
        const std::string stem = "ind" + std::to_string(i.id);
        std::ofstream(dir / "cycles" / (stem + ".cycle")) << program_to_text(i.phenotype);
        std::ofstream(dir / "cycles" / (stem + ".dot")) << program_to_dot(i.phenotype, stem);
    }
    out << "front\n";
    write_front_csv(out, front);
    return 0;
}

// Values from the JSON config fill options not given on the command line.
void apply_config_object(CLI::App &app, const Json &obj, const std::string &path, const std::string &where) {
    if (!obj.is_object()) throw ValidationError(path + ": " + where + ": expected an object");
    for (const auto &[key, val] : obj.items()) {
        const std::string at = where + "/" + key;
        if (val.is_object()) {
            CLI::App *sub = nullptr;
            try {
                sub = app.get_subcommand(key);
            } catch (const CLI::OptionNotFound &) {
                throw ValidationError(path + ": " + at + ": unknown subcommand");
            }
            if (sub->parsed()) apply_config_object(*sub, val, path, at);
            continue;
        }
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        CLI::Option *opt = app.get_option_no_throw("--" + name);
        if (opt == nullptr) throw ValidationError(path + ": " + at + ": unknown option");
        if (opt->count() > 0) continue;
        std::vector<std::string> items;
        auto text = [](const Json &v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (val.is_array())
            for (const Json &v : val) items.push_back(text(v));
        else
            items.push_back(text(val));
        try {
            opt->clear();
            for (const std::string &s : items) opt->add_result(s);
            opt->run_callback();
        } catch (const CLI::Error &e) {
            throw ValidationError(path + ": " + at + ": " + e.what());
        }
    }
}

void apply_config(CLI::App &app, const std::string &path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const Json::exception &e) {
        throw ValidationError(path + ": " + e.what());
    }
    apply_config_object(app, doc, path, "");
}

} // namespace

SparseMatrix ProblemSpec::build() const {
    switch (kind) {
    case Kind::Poisson: return build_anisotropic_poisson(poisson);
    case Kind::Timestep: return build_timestep_matrix(timestep, step);
    case Kind::File: return read_matrix_market(path);
    }
    return {};
}

ProblemSpec parse_problem(std::string_view text) {
    ProblemSpec p;
    p.text = std::string(text);
    const auto parts = split(text, ':');
    const std::string &kind = parts[0];
    if (kind == "mtx") {
        if (parts.size() < 2 || text.size() <= 4) throw ValidationError("mtx problem needs a path");
        p.kind = ProblemSpec::Kind::File;
        p.path = std::string(text.substr(4));
        return p;
    }
    if (kind == "poisson") {
        if (parts.size() < 2 || parts.size() > 3) throw ValidationError("expected poisson:<Nd>[:c1,c2,c3]");
        p.poisson.nd = parse_size(parts[1], "Nd");
        if (parts.size() == 3) {
            const auto c = split(parts[2], ',');
            if (c.size() != 3) throw ValidationError("poisson needs three anisotropy coefficients");
            p.poisson.c1 = parse_double(c[0], "c1");
            p.poisson.c2 = parse_double(c[1], "c2");
            p.poisson.c3 = parse_double(c[2], "c3");
        }
        return p;
    }
    if (kind == "timestep") {
        if (parts.size() < 3 || parts.size() > 4)
            throw ValidationError("expected timestep:<Nd>:<k>[:reaction_scale,decay,dt]");
        p.kind = ProblemSpec::Kind::Timestep;
        p.timestep.nd = parse_size(parts[1], "Nd");
        p.step = parse_size(parts[2], "k");
        p.timestep.k_max = std::max<std::size_t>(p.step, 1);
        if (parts.size() == 4) {
            const auto c = split(parts[3], ',');
            if (c.size() != 3) throw ValidationError("timestep parameters are reaction_scale,decay,dt");
            p.timestep.reaction_scale = parse_double(c[0], "reaction_scale");
            p.timestep.decay = parse_double(c[1], "decay");
            p.timestep.dt = parse_double(c[2], "dt");
        }
        return p;
    }
    throw ValidationError("unknown problem kind '" + kind + "'");
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    Options o;
    CLI::App app{"flexible AMG cycle search"};
    app.require_subcommand(1);
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--workers", o.workers, "evaluation threads")->check(CLI::PositiveNumber);
    app.add_option("--config", o.config, "JSON config file");

    auto problem_opt = [&](CLI::App *s) {
        s->add_option("--problem", o.problems, "poisson:<Nd>[:c1,c2,c3] | timestep:<Nd>:<k> | mtx:<path>");
    };
    auto solve_opts = [&](CLI::App *s) {
        s->add_option("--tol", o.tol, "stopping tolerance");
        s->add_option("--max-iter", o.max_iter, "iteration cap");
    };

    CLI::App *gen = app.add_subcommand("gen-problem", "write a test matrix in Matrix Market format");
    problem_opt(gen);
    gen->add_option("--out", o.out, "output .mtx path");

    CLI::App *info = app.add_subcommand("hierarchy-info", "print the AMG hierarchy of a problem");
    problem_opt(info);
    info->add_option("--out", o.out);
    info->add_option("--theta", o.theta, "strength threshold");

    CLI::App *eval = app.add_subcommand("eval", "run a cycle on problems and write solve statistics");
    problem_opt(eval);
    solve_opts(eval);
    o.cycle.add_to(eval);
    eval->add_option("--tol-mode", o.tol_mode, "absolute or relative");
    eval->add_flag("--krylov", o.krylov, "use the cycle as a CG preconditioner");
    eval->add_option("--out", o.out);
    eval->add_option("--theta", o.theta);

    CLI::App *spec = app.add_subcommand("spectrum", "iteration-matrix eigenvalues");
    problem_opt(spec);
    o.cycle.add_to(spec);
    spec->add_option("--cap", o.cap, "dense entry cap");
    spec->add_option("--out", o.out);

    CLI::App *dot = app.add_subcommand("export-dot", "write a cycle as Graphviz DOT");
    problem_opt(dot);
    o.cycle.add_to(dot);
    dot->add_option("--name", o.name, "graph name");
    dot->add_option("--out", o.out);

    CLI::App *ts = app.add_subcommand("timesteps", "solve the surrogate time-step sequence");
    solve_opts(ts);
    o.cycle.add_to(ts);
    ts->add_option("--nd", o.ts.nd);
    ts->add_option("--kmax", o.ts.k_max);
    ts->add_option("--dt", o.ts.dt);
    ts->add_option("--reaction-scale", o.ts.reaction_scale);
    ts->add_option("--decay", o.ts.decay);
    ts->add_option("--precond", o.precond, "diagonal, amg or hybrid");
    ts->add_option("--threshold", o.threshold);
    ts->add_option("--window", o.window);
    ts->add_option("--out", o.out);

    CLI::App *hy = app.add_subcommand("hybrid", "diagonal-to-AMG switching CG");
    problem_opt(hy);
    solve_opts(hy);
    o.cycle.add_to(hy);
    hy->add_option("--threshold", o.threshold);
    hy->add_option("--window", o.window);
    hy->add_option("--out", o.out);

    CLI::App *evo = app.add_subcommand("evolve", "grammar-guided search for cycles");
    problem_opt(evo);
    solve_opts(evo);
    evo->add_option("--tol-mode", o.tol_mode);
    evo->add_flag("--krylov", o.krylov, "score cycles as CG preconditioners");
    evo->add_option("--preset", o.preset, "desk or full");
    evo->add_option("--mu", o.mu);
    evo->add_option("--lambda", o.lambda);
    evo->add_option("--rho0", o.rho0);
    evo->add_option("--pc", o.pc);
    evo->add_option("--generations", o.generations);
    evo->add_option("--fitness", o.fitness, "work_units or wall_clock");
    evo->add_option("--n-flex", o.n_flex);
    evo->add_option("--depth-cap", o.depth_cap);
    evo->add_option("--init-depth", o.init_depth);
    evo->add_flag("--include-zero-weight", o.include_zero);
    evo->add_option("--runs", o.runs, "independent runs merged into one front");
    evo->add_option("--out-dir", o.out_dir);
    evo->add_option("--theta", o.theta);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    try {
        if (!o.config.empty()) apply_config(app, o.config);
        if (o.workers == 0) throw ValidationError("--workers must be positive");
        if (gen->parsed()) return cmd_gen_problem(o, out);
        if (info->parsed()) return cmd_hierarchy_info(o, out);
        if (eval->parsed()) return cmd_eval(o, out);
        if (spec->parsed()) return cmd_spectrum(o, out);
        if (dot->parsed()) return cmd_export_dot(o, out);
        if (ts->parsed()) return cmd_timesteps(o, out);
        if (hy->parsed()) return cmd_hybrid(o, out);
        if (evo->parsed()) return cmd_evolve(o, out);
    } catch (const ValidationError &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const DimensionError &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const CapacityError &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int run_cli(int argc, char **argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace flexamg
