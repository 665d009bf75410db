#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "commands.hpp"
#include "rbridge/io/checkpoint.hpp"
#include "rbridge/io/config.hpp"
#include "rbridge/io/csv.hpp"
#include "rbridge/io/hash.hpp"
#include "rbridge/io/run_config.hpp"
#include "rbridge/rbridge.hpp"

namespace fs = std::filesystem;

namespace rbridge::cli {

namespace {

using Matrix = Eigen::MatrixXd;

constexpr std::uint64_t kTrainStream = 0;
constexpr std::uint64_t kValidationStream = 1;
constexpr std::uint64_t kCheckStreamBase = 0xC4EC'0000'0000'0000ULL;
constexpr std::uint64_t kComparisonSeedMix = 0xA5A5'5A5A'C3C3'3C3CULL;
constexpr double kEntropyThreshold = 0.05;
constexpr double kEntropyFraction = 0.95;

io::KeyValueConfig load_config(const Options& o, RunContext& ctx) {
    io::KeyValueConfig kv;
    if (!o.config_text.empty()) {
        kv = io::KeyValueConfig::parse(o.config_text, "manifest");
    } else if (!o.config_path.empty()) {
        ctx.record_input(o.config_path);
        kv = io::KeyValueConfig::load(o.config_path);
    }
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
        }
        kv.set(std::string(io::detail::trim(std::string_view(s).substr(0, eq))),
               std::string(io::detail::trim(std::string_view(s).substr(eq + 1))));
    }
    if (o.seed) {
        kv.set("seed", std::to_string(*o.seed));
    }
    return kv;
}

io::RunConfig finish_config(io::KeyValueConfig& kv, RunContext& ctx) {
    io::RunConfig rc = io::build_run_config(kv);
    ctx.config_text = kv.resolved_text();
    ctx.seed = rc.seed;
    return rc;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

AtomsPtr atoms_of(const Distribution& d) {
    return d.is_atoms() ? std::make_shared<const FiniteAtoms>(d.as_atoms()) : nullptr;
}

bool single_point(const Distribution& d) { return d.is_atoms() && d.as_atoms().size() == 1; }

Matrix to_matrix(const std::vector<Vector>& pts, std::size_t dim) {
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m.col(static_cast<Eigen::Index>(i)) = pts[i];
    }
    return m;
}

std::vector<double> row_of(const Matrix& m, Eigen::Index r) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        out[static_cast<std::size_t>(c)] = m(r, c);
    }
    return out;
}

std::string loss_csv(const std::vector<double>& curve) {
    std::string out = "step,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out += std::to_string(i + 1) + "," + io::format_double(curve[i]) + "\n";
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v, double mean) {
    if (v.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    const auto n = static_cast<double>(v.size());
    return std::sqrt(ss / (n - 1.0) / n);
}

std::size_t nearest_atom(const FiniteAtoms& atoms, const Vector& z) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const double d = (atoms.points[k] - z).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

json atom_frequencies(const FiniteAtoms& atoms, const std::vector<sim::BridgePath>& paths) {
    std::vector<std::size_t> counts(atoms.size(), 0);
    for (const auto& p : paths) {
        ++counts[nearest_atom(atoms, p.states.back())];
    }
    json out = json::array();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        out.push_back({{"atom", to_json(atoms.points[k])},
                       {"weight", atoms.weights[k]},
                       {"frequency", paths.empty() ? 0.0 : static_cast<double>(counts[k]) / static_cast<double>(paths.size())}});
    }
    return out;
}

} // namespace

void cmd_train(const Options& o, RunContext& ctx) {
    auto kv = load_config(o, ctx);
    if (o.steps) {
        kv.set("train.steps", std::to_string(*o.steps));
    }
    const io::RunConfig rc = finish_config(kv, ctx);
    const Coupling& coupling = *rc.coupling;

    RngStream rng(rc.seed, kTrainStream);
    nn::TrainResult result;
    try {
        if (rc.gaussian_driver()) {
            result = nn::train(rc.train, coupling, rc.kernel(), rng);
        } else {
            result = nn::train_levy(rc.train, coupling, rc.family(), rng);
        }
    } catch (const nn::TrainingDivergence& e) {
        // the last periodic checkpoint is kept as the run's model
        ctx.write_output("model.rbrg", io::serialize_checkpoint(e.checkpoint()));
        ctx.write_output("loss.csv", loss_csv(e.loss_curve()));
        ctx.results["diverged_at_step"] = e.step();
        throw;
    }
    ctx.write_output("model.rbrg", io::serialize_checkpoint(result.params));
    ctx.write_output("loss.csv", loss_csv(result.loss_curve));
    ctx.results["steps"] = result.loss_curve.size();
    ctx.results["final_loss"] = result.loss_curve.empty() ? 0.0 : result.loss_curve.back();
    if (!rc.gaussian_driver()) {
        ctx.results["skipped_pairs"] = result.skipped_pairs;
    }

    const AtomsPtr atoms = atoms_of(rc.target);
    if (atoms && rc.validation_size > 0) {
        RngStream vrng(rc.seed, kValidationStream);
        std::visit(
            [&](const auto& driver) {
                const auto items = nn::make_validation_set(coupling, driver, rc.horizon, rc.validation_size, vrng);
                const auto model = nn::summarize(nn::squared_errors(result.params, items));
                const auto exact = nn::summarize(nn::filter_squared_errors(driver, atoms, rc.horizon, items));
                ctx.results["validation"] = {{"size", items.size()},
                                             {"model_mse", model.mean},
                                             {"model_se", model.standard_error},
                                             {"filter_mse", exact.mean},
                                             {"filter_se", exact.standard_error},
                                             {"ratio", exact.mean > 0.0 ? model.mean / exact.mean : INFINITY},
                                             {"fixed_start", single_point(rc.reference)}};
            },
            *rc.driver);
    }
}

void cmd_generate(const Options& o, RunContext& ctx) {
    if (o.checkpoint.empty()) {
        throw UsageError("generate requires --checkpoint PATH");
    }
    auto kv = load_config(o, ctx);
    ctx.record_input(o.checkpoint);
    const nn::ModelParams params = io::read_checkpoint(o.checkpoint);

    // unset keys follow the checkpoint; explicit ones must agree with it
    if (!kv.has("dim")) {
        kv.set("dim", std::to_string(params.dim));
    }
    if (!kv.has("target.kind")) {
        kv.set("target.kind", "gaussian");
    }
    if (!kv.has("bridge.T")) {
        kv.set("bridge.T", io::detail::shortest(params.horizon));
    }
    if (!kv.has("driver.sigma")) {
        std::string s;
        for (Eigen::Index i = 0; i < params.sigma.size(); ++i) {
            s += (i ? "," : "") + io::detail::shortest(params.sigma[i]);
        }
        kv.set("driver.sigma", s);
    }
    if (o.steps) {
        kv.set("grid.steps", std::to_string(*o.steps));
    }
    if (o.paths) {
        kv.set("sim.paths", std::to_string(*o.paths));
    }
    const io::RunConfig rc = finish_config(kv, ctx);
    const std::string mode = o.mode.value_or("learned");
    if (mode != "learned" && mode != "deterministic") {
        throw UsageError("generate --mode must be learned or deterministic, got '" + mode + "'");
    }
    if (!rc.gaussian_driver()) {
        throw ConfigError("generate simulates the Euler recursion and needs a Gaussian driver");
    }

    const std::size_t n = rc.sim_paths;
    sim::SimConfig cfg{rc.grid(), sim::Mode::learned_drift, rc.sigma(), rc.seed, n, rc.noise_refinement};
    const Matrix x0 = to_matrix(sim::draw_initial_states(rc.reference, n, rc.seed), rc.dim);
    Matrix samples;
    if (mode == "learned") {
        samples = sim::simulate_learned_terminal(params, cfg, x0);
    } else {
        cfg.mode = sim::Mode::deterministic_map;
        samples.resize(x0.rows(), x0.cols());
        parallel_for(n, [&](std::size_t i) {
            const auto c = static_cast<Eigen::Index>(i);
            samples.col(c) = sim::deterministic_map(params, cfg, x0.col(c)).states.back();
        });
    }
    // n = 0 still has to pass the checkpoint checks
    if (n == 0) {
        (void)sim::deterministic_map(params, cfg, Vector::Zero(static_cast<Eigen::Index>(rc.dim)));
    }
    ctx.write_output("samples.csv", io::samples_to_csv(samples, rc.dim));
    ctx.results["paths"] = n;
    ctx.results["steps"] = rc.grid_steps;
    ctx.results["mode"] = mode;

    if (!o.against.empty()) {
        ctx.record_input(o.against);
        const Matrix ref = io::read_samples(o.against);
        if (static_cast<std::size_t>(ref.rows()) != rc.dim) {
            throw UsageError("--against samples have dimension " + std::to_string(ref.rows()) + ", model has " +
                             std::to_string(rc.dim));
        }
        const double ed = eval::energy_distance(eval::SampleSet(samples), eval::SampleSet(ref));
        json metrics = {{"metric", "energy"}, {"value", ed}, {"n_a", samples.cols()}, {"n_b", ref.cols()}};
        ctx.write_output("metrics.json", metrics.dump(2) + "\n");
        ctx.results["energy_distance"] = ed;
    }
}

void cmd_bridge_sim(const Options& o, RunContext& ctx) {
    auto kv = load_config(o, ctx);
    if (o.steps) {
        kv.set("grid.steps", std::to_string(*o.steps));
    }
    if (o.paths) {
        kv.set("sim.paths", std::to_string(*o.paths));
    }
    if (o.mode) {
        kv.set("sim.mode", *o.mode);
    }
    const io::RunConfig rc = finish_config(kv, ctx);
    const std::string mode = rc.sim_mode;
    static const std::set<std::string> modes = {"exact-filter", "levy-exact", "deterministic", "anticipative"};
    if (modes.count(mode) == 0) {
        throw UsageError("unknown bridge-sim mode '" + mode +
                         "' (available: exact-filter, levy-exact, deterministic, anticipative)");
    }
    const AtomsPtr prior = atoms_of(rc.target);
    if (!prior && mode != "anticipative") {
        throw ConfigError("bridge-sim --mode " + mode + " needs a finite target (target.kind = atoms or dirac)");
    }
    if ((mode == "levy-exact") == rc.gaussian_driver()) {
        throw ConfigError("bridge-sim --mode " + mode + " does not match driver.kind '" + rc.driver_kind + "'");
    }

    const std::size_t n = rc.sim_paths;
    const TimeGrid grid = rc.grid();
    const std::vector<Vector> xs = sim::draw_initial_states(rc.reference, n, rc.seed);
    sim::SimConfig cfg{grid, sim::Mode::exact_filter_drift, rc.sigma(), rc.seed, n, rc.noise_refinement};

    const auto simulate = [&](const std::string& which, std::uint64_t seed) {
        return sim::run_paths(n, seed, [&](std::size_t i, RngStream& rng) {
            if (which == "exact-filter") {
                return sim::simulate_exact_filter(rc.kernel(), prior, cfg, xs[i], rng);
            }
            if (which == "anticipative") {
                return gaussian::sample_bridge_anticipative(rc.kernel(), xs[i], rc.target, grid, rng);
            }
            if (which == "deterministic") {
                return sim::deterministic_map(rc.kernel(), prior, cfg, xs[i]);
            }
            return sim::simulate_levy_exact(rc.family(), prior, cfg, xs[i], rng);
        });
    };
    const std::vector<sim::BridgePath> paths = simulate(mode, rc.seed);

    Matrix terminal(static_cast<Eigen::Index>(rc.dim), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        terminal.col(static_cast<Eigen::Index>(i)) = paths[i].states.back();
    }
    ctx.write_output("terminal.csv", io::samples_to_csv(terminal, rc.dim));

    std::string ndjson;
    for (std::size_t i = 0; i < std::min(n, rc.trajectory_paths); ++i) {
        for (std::size_t r = 0; r < paths[i].states.size(); ++r) {
            ndjson += json{{"path_id", i}, {"node_index", r}, {"t", paths[i].times[r]}, {"state", to_json(paths[i].states[r])}}
                          .dump() +
                      "\n";
        }
    }
    ctx.write_output("trajectories.ndjson", ndjson);
    ctx.results["mode"] = mode;
    ctx.results["paths"] = n;
    ctx.results["steps"] = rc.grid_steps;
    if (prior) {
        ctx.results["terminal_atom_frequencies"] = atom_frequencies(*prior, paths);
    }

    if (mode == "levy-exact") {
        // subordinator paths never decrease in any coordinate
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 1; r < paths[i].states.size(); ++r) {
                if ((paths[i].states[r].array() < paths[i].states[r - 1].array()).any()) {
                    throw ModelFailure("levy-exact path " + std::to_string(i) + " decreases at node " + std::to_string(r));
                }
            }
        }
        ctx.results["monotone"] = true;
    }

    if ((mode == "exact-filter" || mode == "anticipative") && prior && n >= 2) {
        const std::string other = mode == "exact-filter" ? "anticipative" : "exact-filter";
        const std::vector<sim::BridgePath> cross = simulate(other, rc.seed ^ kComparisonSeedMix);
        const std::size_t m = grid.steps();
        const double critical = eval::ks_critical_value(n, n, 0.01);
        json nodes = json::array();
        bool all_pass = true;
        for (std::size_t node : {std::max<std::size_t>(1, m / 4), std::max<std::size_t>(1, m / 2), std::max<std::size_t>(1, 3 * m / 4)}) {
            json coords = json::array();
            for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(rc.dim); ++c) {
                std::vector<double> a;
                std::vector<double> b;
                a.reserve(n);
                b.reserve(n);
                for (std::size_t i = 0; i < n; ++i) {
                    a.push_back(paths[i].states[node][c]);
                    b.push_back(cross[i].states[node][c]);
                }
                const double stat = eval::ks_two_sample(std::move(a), std::move(b));
                all_pass = all_pass && stat < critical;
                coords.push_back({{"coordinate", c}, {"statistic", stat}, {"pass", stat < critical}});
            }
            nodes.push_back({{"node_index", node}, {"t", grid.node(node)}, {"coordinates", coords}});
        }
        json report = {{"modes", {mode, other}}, {"paths_per_mode", n}, {"alpha", 0.01},
                       {"critical_value", critical}, {"nodes", nodes}, {"pass", all_pass}};
        ctx.write_output("ks_report.json", report.dump(2) + "\n");
        ctx.results["ks_pass"] = all_pass;
    }
}

void cmd_evaluate(const Options& o, RunContext& ctx) {
    if (o.a.empty() || o.b.empty()) {
        throw UsageError("evaluate requires --a PATH and --b PATH");
    }
    static const std::vector<std::string> available = {"energy", "mmd", "ks"};
    const std::vector<std::string> metrics = o.metrics.empty() ? std::vector<std::string>{"energy"} : o.metrics;
    for (const auto& name : metrics) {
        if (std::find(available.begin(), available.end(), name) == available.end()) {
            throw UsageError("unknown metric '" + name + "'; available metrics: energy, mmd, ks");
        }
    }
    auto kv = load_config(o, ctx);
    if (o.permutations) {
        kv.set("eval.permutations", std::to_string(*o.permutations));
    }
    const io::RunConfig rc = finish_config(kv, ctx);

    ctx.record_input(o.a);
    ctx.record_input(o.b);
    const eval::SampleSet a(io::read_samples(o.a), "A");
    const eval::SampleSet b(io::read_samples(o.b), "B");
    if (a.dim() != b.dim()) {
        throw UsageError("dimension mismatch: A has " + std::to_string(a.dim()) + " columns, B has " +
                         std::to_string(b.dim()));
    }
    eval::SampleSet b1;
    eval::SampleSet b2;
    if (o.split_b) {
        const Eigen::Index half = b.points.cols() / 2;
        b1 = eval::SampleSet(b.points.leftCols(half), "B1");
        b2 = eval::SampleSet(b.points.rightCols(b.points.cols() - half), "B2");
    }

    json entries = json::array();
    for (std::size_t k = 0; k < metrics.size(); ++k) {
        const std::string& name = metrics[k];
        json entry = {{"metric", name}};
        std::function<double(const eval::SampleSet&, const eval::SampleSet&)> stat;
        if (name == "energy") {
            stat = [](const eval::SampleSet& p, const eval::SampleSet& q) { return eval::energy_distance(p, q); };
        } else if (name == "mmd") {
            const double h = eval::median_bandwidth(a, b);
            entry["bandwidth"] = h;
            stat = [h](const eval::SampleSet& p, const eval::SampleSet& q) { return eval::mmd_rbf(p, q, h); };
        } else {
            stat = [](const eval::SampleSet& p, const eval::SampleSet& q) {
                double worst = 0.0;
                for (Eigen::Index r = 0; r < p.points.rows(); ++r) {
                    worst = std::max(worst, eval::ks_two_sample(row_of(p.points, r), row_of(q.points, r)));
                }
                return worst;
            };
            entry["critical_value"] = eval::ks_critical_value(a.size(), b.size(), 0.01);
        }
        const double value = stat(a, b);
        entry["value"] = value;
        entry["n_a"] = a.size();
        entry["n_b"] = b.size();
        entry["seed"] = rc.seed;
        if (rc.permutations > 0) {
            RngStream rng(rc.seed, k);
            entry["permutations"] = rc.permutations;
            entry["permutation_p_value"] = eval::permutation_p_value(a, b, stat, rc.permutations, rng);
        }
        if (o.split_b) {
            const double base = stat(b1, b2);
            entry["baseline"] = {{"value", base}, {"n_a", b1.size()}, {"n_b", b2.size()}};
            entry["ratio"] = base > 0.0 ? value / base : INFINITY;
        }
        entries.push_back(entry);
    }
    json report = {{"a", fs::path(o.a).filename().string()},
                   {"b", fs::path(o.b).filename().string()},
                   {"dim", a.dim()},
                   {"metrics", entries}};
    ctx.write_output("report.json", report.dump(2) + "\n");
    ctx.results["metrics"] = entries;
}

void cmd_diagnose(const Options& o, RunContext& ctx) {
    auto kv = load_config(o, ctx);
    if (o.steps) {
        kv.set("grid.steps", std::to_string(*o.steps));
    }
    if (o.paths) {
        kv.set("diagnose.paths", std::to_string(*o.paths));
    }
    const io::RunConfig rc = finish_config(kv, ctx);
    const gaussian::GaussianKernel& kernel = rc.kernel();
    const AtomsPtr prior = atoms_of(rc.target);
    if (!prior) {
        throw ConfigError("diagnose needs a finite prior (target.kind = atoms or dirac)");
    }
    const std::size_t n = rc.diagnose_paths;
    if (n == 0) {
        throw UsageError("diagnose needs at least one path");
    }
    const TimeGrid grid = rc.grid();
    const double horizon = rc.horizon;
    const std::vector<Vector> xs = sim::draw_initial_states(rc.reference, n, rc.seed);
    const sim::SimConfig cfg{grid, sim::Mode::exact_filter_drift, rc.sigma(), rc.seed, n, rc.noise_refinement};

    struct Trace {
        std::vector<double> entropy;
        std::vector<Vector> variance;
    };
    const auto traces = sim::run_paths(n, rc.seed, [&](std::size_t i, RngStream& rng) {
        const auto path = sim::simulate_exact_filter(kernel, prior, cfg, xs[i], rng);
        Trace tr;
        for (std::size_t r = 0; r < path.states.size(); ++r) {
            const auto post = filter::posterior_update(kernel, xs[i], path.states[r], path.times[r], horizon, prior);
            tr.entropy.push_back(filter::entropy(post));
            tr.variance.push_back(filter::conditional_variance(post));
        }
        return tr;
    });

    const std::size_t nodes = traces.front().entropy.size();
    const auto d = static_cast<Eigen::Index>(rc.dim);
    std::string ndjson;
    for (std::size_t r = 0; r < nodes; ++r) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = traces[i].entropy[r];
        }
        const double s_mean = mean_of(s);
        Vector v_mean(d);
        Vector v_se(d);
        for (Eigen::Index c = 0; c < d; ++c) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = traces[i].variance[r][c];
            }
            v_mean[c] = mean_of(v);
            v_se[c] = standard_error(v, v_mean[c]);
        }
        ndjson += json{{"node_index", r},
                       {"t", grid.node(r)},
                       {"entropy_mean", s_mean},
                       {"entropy_se", standard_error(s, s_mean)},
                       {"variance_mean", to_json(v_mean)},
                       {"variance_se", to_json(v_se)}}
                      .dump() +
                  "\n";
    }
    ctx.write_output("diagnose.ndjson", ndjson);

    std::size_t below = 0;
    for (const auto& tr : traces) {
        below += tr.entropy.back() < kEntropyThreshold ? 1 : 0;
    }
    const double fraction = static_cast<double>(below) / static_cast<double>(n);

    json checks = json::array();
    bool entropy_ok = true;
    bool variance_ok = true;
    for (std::size_t j = 0; j < rc.diagnose_pairs.size(); ++j) {
        const double u = rc.diagnose_pairs[j][0] * horizon;
        const double t = rc.diagnose_pairs[j][1] * horizon;
        RngStream rng(rc.seed, kCheckStreamBase + j);
        const auto v = filter::supermartingale_check(kernel, xs.front(), prior, u, t, horizon, rc.check_paths, rng);
        entropy_ok = entropy_ok && v.entropy_pass;
        variance_ok = variance_ok && v.variance_pass;
        checks.push_back({{"u", v.u},
                          {"t", v.t},
                          {"entropy_anchor", v.entropy_anchor},
                          {"entropy_mean", v.entropy_mean},
                          {"entropy_se", v.entropy_se},
                          {"entropy_pass", v.entropy_pass},
                          {"variance_anchor", to_json(v.variance_anchor)},
                          {"variance_mean", to_json(v.variance_mean)},
                          {"variance_se", to_json(v.variance_se)},
                          {"variance_pass", v.variance_pass}});
    }
    json verdicts = {{"supermartingale_checks", checks},
                     {"check_paths", rc.check_paths},
                     {"entropy_verdict", entropy_ok ? "PASS" : "FAIL"},
                     {"variance_verdict", variance_ok ? "PASS" : "FAIL"},
                     {"terminal_entropy",
                      {{"t", grid.node(grid.steps())},
                       {"threshold", kEntropyThreshold},
                       {"fraction_below", fraction},
                       {"required_fraction", kEntropyFraction},
                       {"pass", fraction >= kEntropyFraction}}}};
    ctx.write_output("verdicts.json", verdicts.dump(2) + "\n");
    ctx.results["entropy_verdict"] = entropy_ok ? "PASS" : "FAIL";
    ctx.results["variance_verdict"] = variance_ok ? "PASS" : "FAIL";
    ctx.results["terminal_entropy_fraction_below"] = fraction;
}

} // namespace rbridge::cli
