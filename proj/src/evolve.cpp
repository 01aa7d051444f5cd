#include "flexamg/evolve.hpp"

#include "flexamg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace flexamg {

std::string to_string(FitnessMode m) { return m == FitnessMode::WorkUnits ? "work_units" : "wall_clock"; }

FitnessMode parse_fitness_mode(std::string_view s) {
    if (s == "work_units") return FitnessMode::WorkUnits;
    if (s == "wall_clock") return FitnessMode::WallClock;
    throw ValidationError("unknown fitness mode '" + std::string(s) + "'");
}

EvalProblem make_eval_problem(std::string name, const SparseMatrix &A, EvalSolver solver, std::uint64_t seed,
                              const SetupParams &setup) {
    EvalProblem p;
    p.name = std::move(name);
    p.h = std::make_shared<const Hierarchy>(build_hierarchy(A, setup));
    p.b = random_vector(A.nrows(), seed);
    p.x0.assign(A.nrows(), 0.0);
    p.solver = solver;
    return p;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RunResult {
    double T = 0.0;
    std::size_t N = 0;
    double rho = 0.0;
    double cycle_wu = 0.0;
    bool converged = false;
    bool failed = false;
};

RunResult run_once(const FlexProgram &prog, const EvalProblem &p) {
    RunResult r;
    if (p.solver == EvalSolver::Stationary) {
        const SolveStats st = run_solver(prog, *p.h, p.b, p.x0, p.stationary);
        r = {st.wu_total, st.N, st.rho, cycle_work_units(prog, *p.h), st.converged, st.diverged};
    } else {
        const SparseMatrix &A = p.h->levels.back().A;
        const PcgStats st = pcg(A, p.b, p.x0, Preconditioner::amg(prog, p.h), p.krylov);
        // Loss of positivity is scored like divergence.
        r = {st.wu_total, st.N, st.rho, st.wu_per_iter, st.converged, st.diverged || st.breakdown};
    }
    return r;
}

double seconds_of(const FlexProgram &prog, const EvalProblem &p, RunResult &r) {
    std::array<double, 3> t{};
    for (double &s : t) {
        const auto a = std::chrono::steady_clock::now();
        r = run_once(prog, p);
        s = std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
    }
    std::sort(t.begin(), t.end());
    return t[1];
}

std::vector<FlexProgram> decode_all(const Grammar &g, const TreeNode &tree, std::span<const EvalProblem> problems) {
    std::vector<FlexProgram> out;
    out.reserve(problems.size());
    for (const EvalProblem &p : problems) out.push_back(genotype_to_program(g, tree, *p.h));
    return out;
}

std::string phenotype_key(const std::vector<FlexProgram> &progs) {
    std::string key;
    for (const FlexProgram &p : progs) {
        key += program_to_text(p);
        key += '\x1e';
    }
    return key;
}

Fitness evaluate_decoded(const std::vector<FlexProgram> &progs, std::span<const EvalProblem> problems,
                         FitnessMode mode) {
    if (problems.empty()) throw ValidationError("evaluation needs at least one problem");
    double T = 0.0, N = 0.0, rho = 0.0, wu = 0.0, cyc = 0.0;
    bool converged = true, failed = false;
    for (std::size_t i = 0; i < problems.size(); ++i) {
        RunResult r;
        if (mode == FitnessMode::WallClock) {
            const double s = seconds_of(progs[i], problems[i], r);
            T += s;
            cyc += r.N > 0 ? s / static_cast<double>(r.N) : s;
        } else {
            r = run_once(progs[i], problems[i]);
            T += r.T;
            cyc += r.cycle_wu;
        }
        wu += r.T;
        N += static_cast<double>(r.N);
        rho += r.rho;
        converged = converged && r.converged;
        failed = failed || r.failed;
    }
    const double m = static_cast<double>(problems.size());
    Fitness f;
    f.N = N / m;
    f.wu_total = wu / m;
    f.converged = converged && !failed;
    if (failed) {
        f.cost_per_iter = kInf;
        f.rho = kDivergedRho;
        return f;
    }
    f.cost_per_iter = f.N > 0.0 ? (T / m) / f.N : cyc / m;
    f.rho = rho / m;
    return f;
}

} // namespace

Fitness evaluate_program(const Grammar &g, const TreeNode &tree, std::span<const EvalProblem> problems,
                         FitnessMode mode) {
    return evaluate_decoded(decode_all(g, tree, problems), problems, mode);
}

const Fitness *EvalCache::find(const std::string &key) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), key,
                               [](const auto &e, const std::string &k) { return e.first < k; });
    return it != entries.end() && it->first == key ? &it->second : nullptr;
}

void EvalCache::insert(const std::string &key, const Fitness &f) {
    auto it = std::lower_bound(entries.begin(), entries.end(), key,
                               [](const auto &e, const std::string &k) { return e.first < k; });
    if (it != entries.end() && it->first == key) return;
    entries.insert(it, {key, f});
}

void evaluate_population(const Grammar &g, std::vector<Individual> &pop, std::span<const EvalProblem> problems,
                         FitnessMode mode, std::size_t workers, EvalCache *cache) {
    if (problems.empty()) throw ValidationError("evaluation needs at least one problem");
    const bool wall = mode == FitnessMode::WallClock;
    if (wall) workers = 1;  // timings are only comparable without contention
    struct Task {
        std::vector<FlexProgram> progs;
        std::string key;
        Fitness f;
    };
    std::vector<Task> tasks;
    std::vector<std::size_t> task_of(pop.size());
    std::vector<std::pair<std::string, std::size_t>> seen;  // key -> task, this batch
    for (std::size_t i = 0; i < pop.size(); ++i) {
        Individual &ind = pop[i];
        std::vector<FlexProgram> progs = decode_all(g, ind.genotype, problems);
        ind.phenotype = progs.front();
        ind.hash = genotype_hash(ind.genotype);
        std::string key = phenotype_key(progs);
        if (!wall) {
            if (const Fitness *f = cache ? cache->find(key) : nullptr) {
                ind.fitness = *f;
                ++cache->hits;
                task_of[i] = SIZE_MAX;
                continue;
            }
            auto it = std::find_if(seen.begin(), seen.end(), [&](const auto &s) { return s.first == key; });
            if (it != seen.end()) {
                task_of[i] = it->second;
                continue;
            }
            seen.emplace_back(key, tasks.size());
        }
        task_of[i] = tasks.size();
        tasks.push_back({std::move(progs), std::move(key), {}});
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto work = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
            try {
                tasks[t].f = evaluate_decoded(tasks[t].progs, problems, mode);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min(std::max<std::size_t>(workers, 1), tasks.size());
    if (nthreads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(work);
        for (std::thread &th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (task_of[i] != SIZE_MAX) pop[i].fitness = tasks[task_of[i]].f;
    if (cache && !wall) {
        cache->misses += tasks.size();
        for (const Task &t : tasks) cache->insert(t.key, t.f);
    }
}

bool dominates(const Objectives &a, const Objectives &b) {
    return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Objectives> pts) {
    const std::size_t n = pts.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (dominates(pts[i], pts[j]))
                dominated[i].push_back(j);
            else if (dominates(pts[j], pts[i]))
                ++count[i];
        }
        if (count[i] == 0) current.push_back(i);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : current)
            for (std::size_t j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

std::vector<double> crowding_distance(std::span<const Objectives> pts, std::span<const std::size_t> front) {
    const std::size_t m = front.size();
    std::vector<double> d(m, 0.0);
    // Repeated points share the first occurrence's distance; the copies get 0
    // so clones cannot push distinct members out of a truncated front.
    std::vector<std::size_t> uniq;
    for (std::size_t i = 0; i < m; ++i) {
        bool repeat = false;
        for (std::size_t u : uniq) repeat = repeat || pts[front[u]] == pts[front[i]];
        if (!repeat) uniq.push_back(i);
    }
    const std::size_t q = uniq.size();
    if (q <= 2) {
        for (std::size_t u : uniq) d[u] = kInf;
        return d;
    }
    std::vector<std::size_t> order(uniq);
    for (std::size_t k = 0; k < 2; ++k) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return pts[front[a]][k] < pts[front[b]][k]; });
        const double lo = pts[front[order.front()]][k], hi = pts[front[order.back()]][k];
        const double range = hi - lo;
        if (!std::isfinite(range) || range <= 0.0) continue;
        d[order.front()] = d[order.back()] = kInf;
        for (std::size_t i = 1; i + 1 < q; ++i) {
            const double gap = pts[front[order[i + 1]]][k] - pts[front[order[i - 1]]][k];
            if (std::isfinite(gap)) d[order[i]] += gap / range;
        }
    }
    return d;
}

std::vector<std::size_t> nsga2_select(std::span<const Objectives> pts, std::size_t mu) {
    std::vector<std::size_t> out;
    for (const auto &front : non_dominated_sort(pts)) {
        if (out.size() >= mu) break;
        if (out.size() + front.size() <= mu) {
            out.insert(out.end(), front.begin(), front.end());
            continue;
        }
        const std::vector<double> cd = crowding_distance(pts, front);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
        for (std::size_t k = 0; out.size() < mu; ++k) out.push_back(front[order[k]]);
    }
    return out;
}

namespace {

std::vector<Objectives> objectives_of(const std::vector<Individual> &pop) {
    std::vector<Objectives> pts;
    pts.reserve(pop.size());
    for (const Individual &i : pop) pts.push_back(objectives(i.fitness));
    return pts;
}

} // namespace

std::vector<Individual> nsga2_select(const std::vector<Individual> &parents, const std::vector<Individual> &offspring,
                                     std::size_t mu) {
    std::vector<Individual> all = parents;
    all.insert(all.end(), offspring.begin(), offspring.end());
    const auto pts = objectives_of(all);
    std::vector<Individual> out;
    for (std::size_t i : nsga2_select(pts, mu)) out.push_back(all[i]);
    return out;
}

double hypervolume(std::span<const Objectives> pts, const Objectives &ref) {
    std::vector<Objectives> in;
    for (const Objectives &p : pts)
        if (p[0] < ref[0] && p[1] < ref[1]) in.push_back(p);
    std::sort(in.begin(), in.end());
    double hv = 0.0, best_rho = ref[1];
    for (const Objectives &p : in) {
        if (p[1] >= best_rho) continue;
        hv += (ref[0] - p[0]) * (best_rho - p[1]);
        best_rho = p[1];
    }
    return hv;
}

std::vector<Individual> pareto_front(const std::vector<Individual> &pop) {
    const auto pts = objectives_of(pop);
    std::vector<Individual> out;
    if (pop.empty()) return out;
    std::vector<std::string> keys;
    const auto fronts = non_dominated_sort(pts);
    for (std::size_t i : fronts.front()) {
        std::string key = program_to_text(pop[i].phenotype);
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
        keys.push_back(std::move(key));
        out.push_back(pop[i]);
    }
    std::stable_sort(out.begin(), out.end(), [](const Individual &a, const Individual &b) {
        return objectives(a.fitness) < objectives(b.fitness);
    });
    return out;
}

std::vector<Individual> merge_fronts(const std::vector<std::vector<Individual>> &fronts) {
    std::vector<Individual> all;
    for (const auto &f : fronts) all.insert(all.end(), f.begin(), f.end());
    return pareto_front(all);
}

EvoParams EvoParams::desk() {
    EvoParams p;
    p.mu = p.lambda = 32;
    p.rho0 = 128;
    p.t_max = 20;
    return p;
}

void EvoParams::validate() const {
    if (mu == 0 || lambda == 0 || rho0 == 0) throw ValidationError("population sizes must be positive");
    if (rho0 < mu) throw ValidationError("initial population must hold at least mu individuals");
    if (!(pc >= 0.0 && pc <= 1.0)) throw ValidationError("crossover probability must lie in [0, 1]");
    if (workers == 0) throw ValidationError("workers must be positive");
    if (init_depth < 2) throw ValidationError("init_depth too small");
}

namespace {

struct Ranking {
    std::vector<std::size_t> rank;
    std::vector<double> crowd;
};

Ranking rank_population(const std::vector<Individual> &pop) {
    const auto pts = objectives_of(pop);
    Ranking r{std::vector<std::size_t>(pop.size()), std::vector<double>(pop.size())};
    const auto fronts = non_dominated_sort(pts);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        const auto cd = crowding_distance(pts, fronts[f]);
        for (std::size_t k = 0; k < fronts[f].size(); ++k) {
            r.rank[fronts[f][k]] = f;
            r.crowd[fronts[f][k]] = cd[k];
        }
    }
    return r;
}

std::size_t tournament(const Ranking &r, Rng &rng) {
    const std::size_t a = rng.index(r.rank.size()), b = rng.index(r.rank.size());
    if (r.rank[a] != r.rank[b]) return r.rank[a] < r.rank[b] ? a : b;
    return r.crowd[b] > r.crowd[a] ? b : a;
}

double front_hypervolume(const std::vector<Individual> &pop, const Objectives &ref) {
    const auto pts = objectives_of(pop);
    return hypervolume(pts, ref);
}

} // namespace

EvolveResult evolve(const Grammar &g, std::span<const EvalProblem> problems, const EvoParams &params,
                    const std::function<void(const GenerationReport &)> &on_generation) {
    params.validate();
    if (problems.empty()) throw ValidationError("evolution needs at least one problem");
    Rng rng(params.seed);
    EvalCache cache;
    EvolveResult res;
    std::size_t next_id = 0;
    const bool cached = params.fitness_mode == FitnessMode::WorkUnits;

    std::vector<Individual> pop(params.rho0);
    for (Individual &ind : pop) {
        ind.id = next_id++;
        ind.genotype = random_derivation(g, params.init_depth, rng);
    }
    evaluate_population(g, pop, problems, params.fitness_mode, params.workers, cached ? &cache : nullptr);
    res.evaluations += pop.size();
    const std::vector<Individual> initial = pop;
    if (params.t_max == 0) pop = nsga2_select(pop, {}, params.mu);
    res.hypervolume.push_back(front_hypervolume(pop, params.hv_ref));
    if (on_generation) on_generation({0, &initial, &pop, res.hypervolume.back()});

    for (std::size_t t = 0; t < params.t_max; ++t) {
        const Ranking rk = rank_population(pop);
        std::vector<Individual> off;
        off.reserve(params.lambda);
        auto child = [&](TreeNode tree) {
            Individual ind;
            ind.id = next_id++;
            ind.genotype = std::move(tree);
            off.push_back(std::move(ind));
        };
        while (off.size() < params.lambda) {
            if (rng.uniform01() < params.pc) {
                const std::size_t a = tournament(rk, rng), b = tournament(rk, rng);
                CrossoverResult c = crossover(g, pop[a].genotype, pop[b].genotype, rng);
                child(std::move(c.a));
                if (off.size() < params.lambda) child(std::move(c.b));
            } else {
                child(mutate(g, pop[tournament(rk, rng)].genotype, rng, params.init_depth));
            }
        }
        evaluate_population(g, off, problems, params.fitness_mode, params.workers, cached ? &cache : nullptr);
        res.evaluations += off.size();
        pop = nsga2_select(pop, off, params.mu);
        res.hypervolume.push_back(front_hypervolume(pop, params.hv_ref));
        if (on_generation) on_generation({t + 1, &off, &pop, res.hypervolume.back()});
    }
    res.cache_hits = cache.hits;
    res.front = pareto_front(pop);
    res.population = std::move(pop);
    return res;
}

namespace {

// JSON has no infinity; unbounded costs are written as null.
nlohmann::ordered_json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

std::string csv_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_generation_jsonl(std::ostream &out, std::size_t gen, const std::vector<Individual> &inds) {
    for (const Individual &i : inds) {
        nlohmann::ordered_json j;
        j["gen"] = gen;
        j["id"] = i.id;
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(i.hash));
        j["hash"] = hash;
        j["cost_per_iter"] = number_or_null(i.fitness.cost_per_iter);
        j["rho"] = i.fitness.rho;
        j["N"] = i.fitness.N;
        j["converged"] = i.fitness.converged;
        j["wu_total"] = number_or_null(i.fitness.wu_total);
        out << j.dump() << '\n';
    }
}

void write_front_csv(std::ostream &out, const std::vector<Individual> &front) {
    out << "id,cost_per_iter,rho,N,wu_total\n";
    for (const Individual &i : front)
        out << i.id << ',' << csv_number(i.fitness.cost_per_iter) << ',' << csv_number(i.fitness.rho) << ','
            << csv_number(i.fitness.N) << ',' << csv_number(i.fitness.wu_total) << '\n';
}

} // namespace flexamg
