#include "pdsim/cli.hpp"

#include "pdsim/csv.hpp"
#include "pdsim/diagnostics.hpp"
#include "pdsim/errors.hpp"
#include "pdsim/estimation.hpp"
#include "pdsim/model_spec.hpp"
#include "pdsim/service.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <thread>

namespace pdsim::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Flags that override values from the parameter file.
struct Overrides {
    std::optional<std::string> model;
    std::optional<std::string> filter;
    std::optional<int> n_obs;
    std::optional<int> m;
    std::optional<double> dt;
    std::optional<std::uint64_t> seed;

    void apply(json& doc) const
    {
        if (model) {
            doc["model"] = *model;
            if (!filter && !doc.contains("filter")) doc["filter"] = *model == "ss" ? "kf" : "ekf";
        }
        if (filter) doc["filter"] = *filter;
        if (n_obs) doc["n_obs"] = *n_obs;
        if (m) doc["m"] = *m;
        if (dt) doc["dt"] = *dt;
        if (seed) doc["seed"] = *seed;
    }
};

void add_overrides(CLI::App& cmd, Overrides& o)
{
    cmd.add_option("--model", o.model, "Model (ss or pd)")->check(CLI::IsMember({"ss", "pd"}));
    cmd.add_option("--n-obs", o.n_obs, "Number of observations (trading days)");
    cmd.add_option("--m", o.m, "Number of contracts");
    cmd.add_option("--dt", o.dt, "Time step in years");
    cmd.add_option("--seed", o.seed, "Random seed");
}

json read_json(const fs::path& path)
{
    const std::string text = csv::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": malformed JSON: " + e.what(), "params");
    }
}

std::vector<std::string> load_spec(const fs::path& file, const Overrides& o, ModelSpec& spec,
                                   json& effective)
{
    json doc = read_json(file);
    if (!doc.is_object()) throw SchemaError("parameter file must hold a JSON object", "params");
    o.apply(doc);
    spec = parse_model_spec(doc);
    auto warnings = validate(spec);
    effective = to_json(spec);
    return warnings;
}

void warn(std::ostream& err, const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create output directory " + dir.string(), "out");
}

int cmd_simulate(const fs::path& params, const Overrides& o, const fs::path& out_dir,
                 std::ostream& out, std::ostream& err)
{
    ModelSpec spec;
    json effective;
    warn(err, load_spec(params, o, spec, effective));
    const sim::SimulatedPanel panel = sim::simulate(spec.params, spec.errors, spec.config);

    ensure_dir(out_dir);
    csv::write_file_atomic(out_dir / "prices.csv", csv::prices_csv(panel));
    csv::write_file_atomic(out_dir / "maturities.csv", csv::maturities_csv(panel));
    csv::write_file_atomic(out_dir / "states.csv", csv::states_csv(panel));
    csv::write_file_atomic(out_dir / "spec.json", effective.dump(2) + "\n");
    out << "simulated " << spec.config.n_obs << " x " << spec.config.m << " "
        << to_string(spec.config.model_kind) << " panel (seed " << spec.config.seed << ") -> "
        << out_dir.string() << '\n';
    return ok;
}

int cmd_estimate(const std::string& filter_name, const fs::path& in_dir, const fs::path& out_dir,
                 double level, std::ostream& out, std::ostream& err)
{
    Overrides o;
    o.filter = filter_name;
    ModelSpec spec;
    json effective;
    warn(err, load_spec(in_dir / "spec.json", o, spec, effective));

    const csv::Table prices = csv::read_table(csv::read_file(in_dir / "prices.csv"), "prices.csv");
    const csv::Table maturities =
        csv::read_table(csv::read_file(in_dir / "maturities.csv"), "maturities.csv");
    if (prices.values.cols() != spec.config.m)
        throw InvalidInput("prices.csv has " + std::to_string(prices.values.cols()) +
                               " contracts but spec.json says m = " +
                               std::to_string(spec.config.m),
                           "m");
    if (prices.values.rows() < 1)
        throw InvalidInput("prices.csv has no observations", "prices");

    const estimation::Estimate est =
        estimation::estimate(spec.params, spec.errors, spec.config.filter_kind, prices.values,
                             maturities.values, spec.config.dt, level);

    const auto& fo = est.output;
    Eigen::MatrixXd states(fo.a_filt.rows(), 5);
    for (Eigen::Index t = 0; t < states.rows(); ++t) {
        const auto& p = fo.P_filt[static_cast<std::size_t>(t)];
        states.row(t) << fo.a_filt(t, 0), fo.a_filt(t, 1), p(0, 0), p(0, 1), p(1, 1);
    }
    const Eigen::Index m = est.fitted_prices.cols();
    Eigen::MatrixXd bands(est.bands.lower.rows(), 2 * m);
    std::vector<std::string> band_cols;
    for (Eigen::Index j = 0; j < m; ++j) {
        bands.col(2 * j) = est.bands.lower.col(j);
        bands.col(2 * j + 1) = est.bands.upper.col(j);
        band_cols.push_back("C" + std::to_string(j + 1) + "_lower");
        band_cols.push_back("C" + std::to_string(j + 1) + "_upper");
    }

    json rmse = json::array();
    for (Eigen::Index j = 0; j < est.rmse.size(); ++j) rmse.push_back(est.rmse(j));
    const json summary = {{"model", std::string(to_string(spec.config.model_kind))},
                          {"filter", std::string(to_string(spec.config.filter_kind))},
                          {"level", level},
                          {"n_obs", fo.y_fit.rows()},
                          {"m", m},
                          {"loglik", fo.loglik},
                          {"rmse", rmse}};

    ensure_dir(out_dir);
    using csv::NumberStyle;
    csv::write_file_atomic(out_dir / "states_est.csv",
                           csv::write_table({"chi", "xi", "var_chi", "cov_chi_xi", "var_xi"},
                                            states, NumberStyle::shortest));
    csv::write_file_atomic(out_dir / "prices_fit.csv",
                           csv::write_table(csv::contract_columns(m), est.fitted_prices,
                                            NumberStyle::shortest));
    csv::write_file_atomic(out_dir / "bands.csv",
                           csv::write_table(band_cols, bands, NumberStyle::shortest));
    csv::write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
    out << to_string(spec.config.filter_kind) << ": loglik " << std::setprecision(10)
        << fo.loglik << " -> " << out_dir.string() << '\n';
    return ok;
}

int cmd_coverage(const fs::path& params, const Overrides& o, std::size_t n_traj, double level,
                 double threshold, unsigned threads, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err)
{
    ModelSpec spec;
    json effective;
    warn(err, load_spec(params, o, spec, effective));
    const auto report = diagnostics::coverage_rate(spec.params, spec.errors, spec.config, n_traj,
                                                   level, threshold, {}, threads);
    ensure_dir(out_dir);
    csv::write_file_atomic(out_dir / "coverage.json", diagnostics::to_json_text(report));

    out << "trajectories   " << report.n_traj << '\n'
        << "seed           " << report.seed << '\n'
        << "level          " << report.level << '\n'
        << "coverage rate  " << report.coverage_rate << '\n'
        << "threshold      " << report.threshold << '\n'
        << "result         " << (report.pass ? "PASS" : "FAIL") << '\n';
    return report.pass ? ok : coverage_failed;
}

std::atomic<bool> stop_requested{false};

extern "C" void on_signal(int)
{
    stop_requested.store(true);
}

int cmd_serve(const std::string& addr, std::ostream& out, std::ostream& err)
{
    const auto parsed = service::parse_address(addr);
    if (!parsed) {
        err << "error: addr: expected host:port, got '" << addr << "'\n";
        return invalid_input;
    }
    service::Service svc(service::ServiceConfig::from_env());
    service::HttpServer server(svc);
    if (!server.bind(parsed->first, parsed->second)) {
        err << "error: cannot bind " << addr << '\n';
        return bind_failed;
    }
    out << "listening on " << parsed->first << ':' << server.port() << std::endl;

    stop_requested.store(false);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::jthread watcher([&server](std::stop_token st) {
        while (!st.stop_requested() && !stop_requested.load())
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    });
    server.run();
    watcher.request_stop();
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Simulation and filtering of two-factor commodity futures models", "pdsim"};
    app.require_subcommand(1);

    Overrides sim_overrides;
    fs::path sim_params;
    fs::path sim_out;
    auto* simulate = app.add_subcommand("simulate", "Simulate a futures panel");
    simulate->add_option("--params", sim_params, "Parameter file (JSON)")->required();
    simulate->add_option("--filter", sim_overrides.filter, "Filter recorded in spec.json")
        ->check(CLI::IsMember({"kf", "ekf", "ukf"}));
    add_overrides(*simulate, sim_overrides);
    simulate->add_option("--out", sim_out, "Output directory")->required();

    std::string est_filter;
    fs::path est_in;
    fs::path est_out;
    double est_level = 0.95;
    auto* estimate = app.add_subcommand("estimate", "Filter a simulated panel");
    estimate->add_option("--filter", est_filter, "kf, ekf or ukf")
        ->required()
        ->check(CLI::IsMember({"kf", "ekf", "ukf"}));
    estimate->add_option("--in", est_in, "Directory written by simulate")->required();
    estimate->add_option("--out", est_out, "Output directory")->required();
    estimate->add_option("--level", est_level, "Confidence level of the bands");

    Overrides cov_overrides;
    fs::path cov_params;
    fs::path cov_out = ".";
    std::size_t n_traj = 100;
    double cov_level = 0.95;
    double cov_threshold = 0.95;
    unsigned threads = 0;
    auto* coverage = app.add_subcommand("coverage", "Coverage-rate quality check");
    coverage->add_option("--params", cov_params, "Parameter file (JSON)")->required();
    coverage->add_option("--n-traj", n_traj, "Number of simulated trajectories");
    coverage->add_option("--filter", cov_overrides.filter, "Filter override")
        ->check(CLI::IsMember({"kf", "ekf", "ukf"}));
    add_overrides(*coverage, cov_overrides);
    coverage->add_option("--level", cov_level, "Band confidence level");
    coverage->add_option("--threshold", cov_threshold, "Required coverage rate");
    coverage->add_option("--threads", threads, "Worker threads (0 = hardware)");
    coverage->add_option("--out", cov_out, "Directory for coverage.json");

    std::string addr = service::default_address();
    auto* serve = app.add_subcommand("serve", "Run the JSON/CSV HTTP service");
    serve->add_option("--addr", addr, "host:port (default $PDSIM_ADDR or 127.0.0.1:8080)");

    std::vector<const char*> argv{"pdsim"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : invalid_input;
    }

    try {
        if (*simulate) return cmd_simulate(sim_params, sim_overrides, sim_out, out, err);
        if (*estimate) return cmd_estimate(est_filter, est_in, est_out, est_level, out, err);
        if (*coverage)
            return cmd_coverage(cov_params, cov_overrides, n_traj, cov_level, cov_threshold,
                                threads, cov_out, out, err);
        if (*serve) return cmd_serve(addr, out, err);
    } catch (const SchemaError& e) {
        err << "error: " << e.field() << ": " << e.what() << '\n';
        return invalid_input;
    } catch (const InvalidInput& e) {
        err << "error: " << e.field() << ": " << e.what() << '\n';
        return invalid_input;
    } catch (const NumericalFailure& e) {
        err << "error: numerical failure";
        if (e.time_index()) err << " at observation " << *e.time_index();
        err << ": " << e.what() << '\n';
        return numerical_failure;
    } catch (const NotPositiveDefinite& e) {
        err << "error: params: " << e.what() << '\n';
        return invalid_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    }
    return invalid_input;
}

} // namespace pdsim::cli
