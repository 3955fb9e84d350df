#include "mdm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "mdm/errors.hpp"
#include "mdm/random.hpp"
#include "mdm/recursive.hpp"

namespace mdm {

namespace {

using nlohmann::json;

constexpr int kFullScaleRuns = 10000;

bool is_recursive(Method m) { return m == Method::uw_re || m == Method::sw_re; }

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::uw_nr: return "uw-nr";
        case Method::sw_nr: return "sw-nr";
        case Method::we_nr: return "we-nr";
        case Method::uw_re: return "uw-re";
        case Method::sw_re: return "sw-re";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::uw_nr, Method::sw_nr, Method::we_nr, Method::uw_re,
                     Method::sw_re})
        if (method_name(m) == name) return m;
    throw Error("harness: unknown method '" + name + "'");
}

namespace {

Eigen::MatrixXd scalar_matrix(double v) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = v;
    return m;
}

std::vector<Eigen::VectorXd> sine_controls(const LtvModel& model) {
    std::vector<Eigen::VectorXd> u(model.tau());
    for (int k = 0; k < model.tau(); ++k)
        u[k] = Eigen::VectorXd::Constant(model.n_u[k],
                                         std::sin(static_cast<double>(k) / model.tau()));
    return u;
}

/// Default recursive initialization: diagonal entries 0.5, off-diagonals 0,
/// prior covariance 10 I.
void default_rls_init(Scenario& s) {
    const UniqueCovMap params(s.model.n_w, s.model.n_v);
    s.rls_init_estimate =
        params.pack(0.5 * Eigen::MatrixXd::Identity(s.model.n_w, s.model.n_w),
                    0.5 * Eigen::MatrixXd::Identity(s.model.n_v, s.model.n_v));
    s.rls_init_cov = 10.0 * Eigen::MatrixXd::Identity(params.size(), params.size());
}

} // namespace

Scenario builtin_model_1(int tau) {
    if (tau < 2) throw Error("harness: builtin-1 needs tau >= 2");
    Scenario s;
    std::vector<Eigen::MatrixXd> F, G, E, H, D;
    for (int k = 0; k < tau; ++k) {
        F.push_back(scalar_matrix(0.8 - 0.1 * std::sin(7.0 * M_PI * k / tau)));
        G.push_back(scalar_matrix(1.0));
        E.push_back(scalar_matrix(1.0));
    }
    for (int k = 0; k <= tau; ++k) {
        H.push_back(scalar_matrix(1.0 + 0.99 * std::sin(100.0 * M_PI * k / tau)));
        D.push_back(scalar_matrix(1.0));
    }
    s.model = make_model(1, 1, 1, std::move(F), std::move(G), std::move(E), std::move(H),
                         std::move(D));
    s.noise.Q = scalar_matrix(2.0);
    s.noise.R = scalar_matrix(1.0);
    s.controls = sine_controls(s.model);
    s.L = 1;
    s.N = 1;
    s.x0_mean = Eigen::VectorXd::Ones(1);
    s.x0_var = Eigen::MatrixXd::Identity(1, 1);
    default_rls_init(s);
    return s;
}

Scenario builtin_model_2(int tau) {
    if (tau < 3) throw Error("harness: builtin-2 needs tau >= 3");
    Scenario s;
    std::vector<Eigen::MatrixXd> F, G, E, H, D;
    for (int k = 0; k < tau; ++k) {
        F.push_back(scalar_matrix(1.0 + 0.1 * std::sin(20.0 * M_PI * k / tau)));
        G.push_back(scalar_matrix(1.0));
        E.push_back(scalar_matrix(-1.0));
    }
    // Sensor availability switches at floor(tau/3) and floor(2*tau/3).
    for (int k = 0; k <= tau; ++k) {
        if (k < tau / 3) {
            H.push_back(scalar_matrix(1.0));
            D.push_back((Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished());
        } else if (k < 2 * tau / 3) {
            H.push_back(scalar_matrix(1.0));
            D.push_back((Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished());
        } else {
            H.push_back((Eigen::MatrixXd(2, 1) << 1.0, 1.0).finished());
            D.push_back(Eigen::MatrixXd::Identity(2, 2));
        }
    }
    s.model = make_model(1, 1, 2, std::move(F), std::move(G), std::move(E), std::move(H),
                         std::move(D));
    s.noise.Q = scalar_matrix(3.0);
    s.noise.R = (Eigen::MatrixXd(2, 2) << 2.0, -1.0, -1.0, 1.0).finished();
    s.controls = sine_controls(s.model);
    s.L = 2;
    s.N = 1;
    s.x0_mean = Eigen::VectorXd::Ones(1);
    s.x0_var = Eigen::MatrixXd::Identity(1, 1);
    default_rls_init(s);
    return s;
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw Error(std::string("harness: ") + what + " must be an array of rows");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw Error(std::string("harness: ragged rows in ") + what);
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw Error(std::string("harness: ") + what + " must be an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

/// A matrix sequence entry is either one matrix (broadcast over all steps)
/// or an array of per-step matrices of the required length.
std::vector<Eigen::MatrixXd> matrix_seq_from_json(const json& j, int count,
                                                  const char* what) {
    if (j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() &&
        j.front().front().is_array()) {
        if (static_cast<int>(j.size()) != count)
            throw Error(std::string("harness: ") + what + " must have " +
                        std::to_string(count) + " per-step matrices");
        std::vector<Eigen::MatrixXd> seq;
        seq.reserve(count);
        for (const auto& e : j) seq.push_back(matrix_from_json(e, what));
        return seq;
    }
    return std::vector<Eigen::MatrixXd>(count, matrix_from_json(j, what));
}

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("harness: cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const std::exception& e) {
        throw Error("harness: failed to parse '" + path + "': " + e.what());
    }
}

} // namespace

Scenario load_scenario(const std::string& path) {
    const json j = parse_file(path);
    for (const char* key : {"n_x", "n_w", "n_v", "tau", "F", "G", "E", "H", "D", "Q", "R"})
        if (!j.contains(key)) throw Error("harness: model file misses key '" + std::string(key) + "'");

    Scenario s;
    const int n_x = j["n_x"].get<int>();
    const int n_w = j["n_w"].get<int>();
    const int n_v = j["n_v"].get<int>();
    const int tau = j["tau"].get<int>();
    s.model = make_model(n_x, n_w, n_v, matrix_seq_from_json(j["F"], tau, "F"),
                         matrix_seq_from_json(j["G"], tau, "G"),
                         matrix_seq_from_json(j["E"], tau, "E"),
                         matrix_seq_from_json(j["H"], tau + 1, "H"),
                         matrix_seq_from_json(j["D"], tau + 1, "D"));
    s.noise.Q = matrix_from_json(j["Q"], "Q");
    s.noise.R = matrix_from_json(j["R"], "R");
    s.L = j.value("L", 1);
    s.N = j.value("N", 1);
    s.x0_mean = j.contains("x0_mean") ? vector_from_json(j["x0_mean"], "x0_mean")
                                      : Eigen::VectorXd::Zero(n_x).eval();
    s.x0_var = j.contains("x0_var") ? matrix_from_json(j["x0_var"], "x0_var")
                                    : Eigen::MatrixXd::Identity(n_x, n_x).eval();
    if (j.contains("controls") && j["controls"].is_array()) {
        const json& cj = j["controls"];
        if (static_cast<int>(cj.size()) != tau)
            throw Error("harness: controls must have tau entries");
        for (const auto& e : cj) s.controls.push_back(vector_from_json(e, "controls"));
    } else if (j.value("controls", "zero") == std::string("sin")) {
        s.controls = sine_controls(s.model);
    } else {
        for (int k = 0; k < tau; ++k)
            s.controls.push_back(Eigen::VectorXd::Zero(s.model.n_u[k]));
    }
    default_rls_init(s);
    if (j.contains("rls_init_estimate"))
        s.rls_init_estimate = vector_from_json(j["rls_init_estimate"], "rls_init_estimate");
    if (j.contains("rls_init_cov"))
        s.rls_init_cov = matrix_from_json(j["rls_init_cov"], "rls_init_cov");

    const auto report = validate(s.model);
    if (!report.ok())
        throw Error("harness: model file '" + path + "' invalid: " + report.to_string());
    return s;
}

ExperimentConfig load_config(const std::string& path) {
    const json j = parse_file(path);
    ExperimentConfig cfg;
    if (j.contains("model")) {
        if (j["model"].is_object())
            cfg.model = j["model"].at("path").get<std::string>();
        else
            cfg.model = j["model"].get<std::string>();
    }
    cfg.tau = j.value("tau", cfg.tau);
    cfg.mc_runs = j.value("mc", cfg.mc_runs);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("L")) cfg.L = j["L"].get<int>();
    if (j.contains("N")) cfg.N = j["N"].get<int>();
    if (j.contains("methods"))
        for (const auto& m : j["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
    if (j.contains("we_seed")) cfg.we_seed = parse_method(j["we_seed"].get<std::string>());
    if (j.contains("rls_init")) {
        const json& r = j["rls_init"];
        if (r.contains("estimate"))
            cfg.rls_init_estimate = vector_from_json(r["estimate"], "rls_init.estimate");
        if (r.contains("covariance"))
            cfg.rls_init_cov = matrix_from_json(r["covariance"], "rls_init.covariance");
        else if (r.contains("covariance_scale") && cfg.rls_init_estimate) {
            const auto n = cfg.rls_init_estimate->size();
            cfg.rls_init_cov =
                r["covariance_scale"].get<double>() * Eigen::MatrixXd::Identity(n, n);
        }
    }
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.full_scale = j.value("full_scale", cfg.full_scale);
    cfg.psd_projection = j.value("project_psd", cfg.psd_projection);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.timing_repeats = j.value("timing_repeats", cfg.timing_repeats);
    return cfg;
}

SummaryStats summarize(const std::vector<Eigen::VectorXd>& estimates) {
    if (estimates.empty()) throw DataError("harness: summarize needs at least one estimate");
    const Eigen::Index p = estimates.front().size();
    SummaryStats stats;
    stats.mean = Eigen::VectorXd::Zero(p);
    for (const auto& e : estimates) stats.mean += e;
    stats.mean /= static_cast<double>(estimates.size());
    if (estimates.size() < 2)
        throw DataError("harness: sample covariance needs at least two runs");
    stats.cov_diag = Eigen::VectorXd::Zero(p);
    for (const auto& e : estimates)
        stats.cov_diag += (e - stats.mean).cwiseAbs2();
    stats.cov_diag /= static_cast<double>(estimates.size() - 1);
    return stats;
}

namespace {

struct Welford {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void update(double x) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    double std_dev() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : std::nan(""); }
};

/// Applies per-run payloads strictly in run order so that floating-point
/// accumulation does not depend on thread scheduling.
template <typename Payload>
class OrderedReducer {
public:
    template <typename Fn>
    void submit(int run, Payload&& payload, Fn&& apply) {
        std::lock_guard<std::mutex> lock(mu_);
        pending_.emplace(run, std::move(payload));
        while (!pending_.empty() && pending_.begin()->first == cursor_) {
            apply(pending_.begin()->second);
            pending_.erase(pending_.begin());
            ++cursor_;
        }
    }

private:
    std::mutex mu_;
    std::map<int, Payload> pending_;
    int cursor_ = 0;
};

struct MethodOutputs {
    std::vector<Eigen::VectorXd> estimates;
    std::vector<Eigen::VectorXd> est_cov_diags; ///< batch methods only
    std::vector<std::vector<Welford>> trace;    ///< recursive: steps x params
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Scenario resolve_scenario(const ExperimentConfig& config) {
    Scenario s;
    if (config.model == "builtin-1")
        s = builtin_model_1(config.tau);
    else if (config.model == "builtin-2")
        s = builtin_model_2(config.tau);
    else
        s = load_scenario(config.model);
    if (config.L) s.L = *config.L;
    if (config.N) s.N = *config.N;
    if (config.rls_init_estimate) s.rls_init_estimate = *config.rls_init_estimate;
    if (config.rls_init_cov) s.rls_init_cov = *config.rls_init_cov;
    if (s.L < 1 || s.N < 0 || s.model.tau() < s.N + s.L)
        throw Error("harness: need L >= 1, N >= 0 and tau >= N + L");
    return s;
}

std::vector<Method> default_methods(const std::string& model) {
    if (model == "builtin-1") return {Method::uw_nr, Method::sw_nr, Method::we_nr};
    if (model == "builtin-2")
        return {Method::uw_nr, Method::uw_re, Method::sw_nr, Method::sw_re};
    return {Method::uw_nr, Method::sw_nr};
}

} // namespace

ResultTable run_experiment(const ExperimentConfig& config) {
    const Scenario scenario = resolve_scenario(config);
    const std::vector<Method> methods =
        config.methods.empty() ? default_methods(config.model) : config.methods;
    if (methods.empty()) throw Error("harness: method list is empty");
    const int mc = config.full_scale ? kFullScaleRuns : config.mc_runs;
    if (mc < 1) throw Error("harness: need at least one Monte-Carlo run");

    const UniqueCovMap params(scenario.model.n_w, scenario.model.n_v);
    const Eigen::VectorXd true_values = params.pack(scenario.noise.Q, scenario.noise.R);
    const int p = params.size();
    const int steps = scenario.model.tau() - scenario.L + 2 - scenario.N;

    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j)
            if (methods[i] == methods[j])
                throw Error("harness: duplicate method '" + method_name(methods[i]) + "'");
    if (config.we_seed != Method::uw_nr && config.we_seed != Method::sw_nr)
        throw Error("harness: we_seed must be uw-nr or sw-nr");

    std::map<Method, MethodOutputs> outputs;
    std::vector<MethodOutputs*> slots; // aligned with `methods`; fixed before threads start
    for (Method m : methods) {
        MethodOutputs& out = outputs[m];
        out.estimates.resize(mc);
        if (!is_recursive(m))
            out.est_cov_diags.resize(mc);
        else
            out.trace.assign(steps, std::vector<Welford>(p));
        slots.push_back(&out);
    }

    using TracePayload = std::vector<std::pair<Method, std::vector<Eigen::VectorXd>>>;
    OrderedReducer<TracePayload> trace_reducer;

    std::atomic<int> next_run{0};
    std::atomic<bool> failed{false};
    std::mutex error_mu;
    std::string error_msg;

    auto run_methods = [&](const RegressionSystem& sys)
        -> std::map<Method, std::pair<EstimateReport, std::vector<Eigen::VectorXd>>> {
        std::map<Method, std::pair<EstimateReport, std::vector<Eigen::VectorXd>>> result;
        std::optional<EstimateReport> uw, sw;
        auto get_uw = [&]() -> const EstimateReport& {
            if (!uw) uw = estimate_unweighted(sys);
            return *uw;
        };
        auto get_sw = [&]() -> const EstimateReport& {
            if (!sw) sw = estimate_semiweighted(sys);
            return *sw;
        };
        for (Method m : methods) {
            switch (m) {
                case Method::uw_nr:
                    result.emplace(m, std::make_pair(get_uw(), std::vector<Eigen::VectorXd>{}));
                    break;
                case Method::sw_nr:
                    result.emplace(m, std::make_pair(get_sw(), std::vector<Eigen::VectorXd>{}));
                    break;
                case Method::we_nr: {
                    const EstimateReport& seed =
                        config.we_seed == Method::sw_nr ? get_sw() : get_uw();
                    result.emplace(m, std::make_pair(estimate_weighted(sys, seed),
                                                     std::vector<Eigen::VectorXd>{}));
                    break;
                }
                case Method::uw_re:
                case Method::sw_re: {
                    const RlsState init = rls_init(scenario.rls_init_estimate,
                                                   scenario.rls_init_cov,
                                                   m == Method::uw_re
                                                       ? RlsWeighting::unweighted
                                                       : RlsWeighting::semiweighted);
                    RlsRun run = rls_run(sys, init);
                    result.emplace(m, std::make_pair(std::move(run.report),
                                                     std::move(run.trace)));
                    break;
                }
            }
        }
        return result;
    };

    // Payloads applied under the reducer mutex, keyed by method index.
    auto worker = [&]() {
        while (!failed.load()) {
            const int r = next_run.fetch_add(1);
            if (r >= mc) break;
            try {
                const Trajectory traj =
                    simulate(scenario.model, scenario.noise, scenario.x0_mean,
                             scenario.x0_var, scenario.controls,
                             child_seed(config.seed, static_cast<std::uint64_t>(r)));
                const RegressionSystem sys =
                    build_regression(scenario.model, traj, scenario.L, scenario.N);
                auto results = run_methods(sys);

                TracePayload traces;
                for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                    const Method m = methods[mi];
                    auto& pair = results.at(m);
                    EstimateReport rep = config.psd_projection
                                             ? project_psd(pair.first, params)
                                             : std::move(pair.first);
                    slots[mi]->estimates[r] = rep.estimate;
                    if (!is_recursive(m)) slots[mi]->est_cov_diags[r] = rep.est_cov_diag();
                    if (is_recursive(m)) traces.emplace_back(m, std::move(pair.second));
                }
                if (!traces.empty())
                    trace_reducer.submit(r, std::move(traces), [&](TracePayload& payload) {
                        for (auto& [m, trace] : payload) {
                            const std::size_t mi = static_cast<std::size_t>(
                                std::find(methods.begin(), methods.end(), m) -
                                methods.begin());
                            for (int i = 0; i < steps; ++i)
                                for (int c = 0; c < p; ++c)
                                    slots[mi]->trace[i][c].update(trace[i][c]);
                        }
                    });
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!failed.exchange(true))
                    error_msg = "harness: MC run " + std::to_string(r) + ": " + e.what();
            }
        }
    };

    unsigned n_threads = config.threads > 0
                             ? static_cast<unsigned>(config.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(mc));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) throw Error(error_msg);

    // Timing pass: single-threaded medians over repeats on a dedicated
    // dataset, so the ratios are not polluted by Monte-Carlo parallelism.
    std::map<Method, double> seconds;
    {
        const Trajectory traj =
            simulate(scenario.model, scenario.noise, scenario.x0_mean, scenario.x0_var,
                     scenario.controls, child_seed(config.seed, static_cast<std::uint64_t>(mc)));
        const RegressionSystem sys =
            build_regression(scenario.model, traj, scenario.L, scenario.N);
        std::optional<EstimateReport> we_seed_report;
        if (std::count(methods.begin(), methods.end(), Method::we_nr))
            we_seed_report = config.we_seed == Method::sw_nr ? estimate_semiweighted(sys)
                                                             : estimate_unweighted(sys);
        const int repeats = std::max(1, config.timing_repeats);
        std::map<Method, std::vector<double>> samples;
        for (int rep = 0; rep < repeats; ++rep) {
            for (Method m : methods) {
                const auto t0 = std::chrono::steady_clock::now();
                switch (m) {
                    case Method::uw_nr: estimate_unweighted(sys); break;
                    case Method::sw_nr: estimate_semiweighted(sys); break;
                    case Method::we_nr: estimate_weighted(sys, *we_seed_report); break;
                    case Method::uw_re:
                        rls_run(sys, rls_init(scenario.rls_init_estimate,
                                              scenario.rls_init_cov,
                                              RlsWeighting::unweighted));
                        break;
                    case Method::sw_re:
                        rls_run(sys, rls_init(scenario.rls_init_estimate,
                                              scenario.rls_init_cov,
                                              RlsWeighting::semiweighted));
                        break;
                }
                samples[m].push_back(std::chrono::duration<double>(
                                         std::chrono::steady_clock::now() - t0)
                                         .count());
            }
        }
        for (Method m : methods) seconds[m] = median(samples[m]);
    }
    const bool have_uw = std::count(methods.begin(), methods.end(), Method::uw_nr) > 0;
    const double baseline = have_uw ? seconds[Method::uw_nr] : 1.0;

    ResultTable table;
    table.uw_nr_seconds = have_uw ? baseline : std::nan("");
    for (int c = 0; c < p; ++c) table.parameter_labels.push_back(params.label(c));
    for (Method m : methods) {
        const MethodOutputs& out = outputs[m];
        Eigen::VectorXd mean(p), cov = Eigen::VectorXd::Constant(p, std::nan(""));
        if (mc >= 2) {
            const SummaryStats stats = summarize(out.estimates);
            mean = stats.mean;
            cov = stats.cov_diag;
        } else {
            mean = out.estimates.front();
        }
        Eigen::VectorXd est_cov_mean = Eigen::VectorXd::Constant(p, std::nan(""));
        if (!is_recursive(m)) {
            est_cov_mean.setZero();
            for (const auto& d : out.est_cov_diags) est_cov_mean += d;
            est_cov_mean /= static_cast<double>(mc);
        }
        for (int c = 0; c < p; ++c) {
            ResultRow row;
            row.method = m;
            row.parameter = params.label(c);
            row.true_value = true_values[c];
            row.sample_mean = mean[c];
            row.sample_cov = cov[c];
            row.est_cov_mean = est_cov_mean[c];
            row.time_rel = have_uw ? seconds[m] / baseline : seconds[m];
            table.rows.push_back(std::move(row));
        }
    }

    // Artifacts.
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    {
        std::ofstream f(fs::path(config.out_dir) / "results.csv");
        f << "method,parameter,true,s_mean,s_cov,est_cov,time_rel\n";
        for (const auto& row : table.rows)
            f << method_name(row.method) << ',' << row.parameter << ','
              << fmt(row.true_value) << ',' << fmt(row.sample_mean) << ','
              << fmt(row.sample_cov) << ',' << fmt(row.est_cov_mean) << ','
              << fmt(row.time_rel) << '\n';
    }
    {
        std::ofstream f(fs::path(config.out_dir) / "estimates.csv");
        f << "run,method,parameter,estimate\n";
        for (int r = 0; r < mc; ++r)
            for (Method m : methods)
                for (int c = 0; c < p; ++c)
                    f << r << ',' << method_name(m) << ',' << params.label(c) << ','
                      << fmt(outputs[m].estimates[r][c]) << '\n';
    }
    {
        std::ofstream f(fs::path(config.out_dir) / "trace.csv");
        f << "k,method,parameter,mean,std\n";
        for (Method m : methods) {
            if (!is_recursive(m)) continue;
            for (int i = 0; i < steps; ++i)
                for (int c = 0; c < p; ++c)
                    f << scenario.N + i << ',' << method_name(m) << ',' << params.label(c)
                      << ',' << fmt(outputs[m].trace[i][c].mean) << ','
                      << fmt(outputs[m].trace[i][c].std_dev()) << '\n';
        }
    }
    {
        json manifest;
        manifest["model"] = config.model;
        manifest["tau"] = scenario.model.tau();
        manifest["mc_runs"] = mc;
        manifest["seed"] = config.seed;
        manifest["L"] = scenario.L;
        manifest["N"] = scenario.N;
        json method_list = json::array();
        for (Method m : methods) method_list.push_back(method_name(m));
        manifest["methods"] = method_list;
        manifest["we_seed"] = method_name(config.we_seed);
        manifest["full_scale"] = config.full_scale;
        manifest["project_psd"] = config.psd_projection;
        manifest["threads"] = n_threads;
        manifest["timing_repeats"] = config.timing_repeats;
        manifest["parameters"] = table.parameter_labels;
        std::vector<double> tv(true_values.data(), true_values.data() + p);
        manifest["true_values"] = tv;
        json timing;
        for (Method m : methods) timing[method_name(m)] = seconds[m];
        manifest["timing_seconds"] = timing;
        std::ofstream f(fs::path(config.out_dir) / "manifest.json");
        f << manifest.dump(2) << '\n';
    }
    return table;
}

} // namespace mdm
