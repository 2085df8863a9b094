// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails.

#include "fixtures.hpp"
#include "oracles.hpp"

#include "pdsim/cli.hpp"
#include "pdsim/csv.hpp"
#include "pdsim/diagnostics.hpp"
#include "pdsim/estimation.hpp"
#include "pdsim/filters.hpp"
#include "pdsim/mathcore.hpp"
#include "pdsim/service.hpp"
#include "pdsim/simulator.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace pdsim;
using nlohmann::json;

namespace {

// Pinned tolerances and sizes.
constexpr std::size_t mc_paths = 1000000;
constexpr double mc_euler_step = 1e-3;
constexpr double mc_se_multiple = 3.0;
constexpr double pricing_runtime_s = 120.0;

constexpr double ekf_kf_gap = 1e-10;
constexpr double ukf_kf_gap = 1e-6;
constexpr int equivalence_n = 500;
constexpr int equivalence_m = 5;

constexpr int jacobian_draws = 100;
constexpr double jacobian_rel = 1e-6;
constexpr double jacobian_fd_step = 1e-5;

constexpr int expm_draws = 100;
constexpr double expm_identity_rel = 1e-10;
constexpr double expm_series_rel = 1e-12;

constexpr std::size_t transition_draws = 1000000;
constexpr int transition_substeps = 64;
constexpr double transition_se_multiple = 5.0;
constexpr double composition_tol = 1e-12;

constexpr std::uint64_t coverage_seed = 20240601;
constexpr int coverage_n_obs = 1000;
constexpr int coverage_m = 5;
constexpr std::size_t coverage_n_traj = 100;
constexpr double coverage_runtime_s = 300.0;

constexpr int hygiene_panels = 10;
constexpr double symmetry_tol = 1e-12;
constexpr double psd_tol = 1e-9;

const std::vector<double> tau_grid{0.1, 0.25, 0.5, 1.0};

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;

void report(const char* name, bool pass, const std::string& detail)
{
    std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double max_abs(const Eigen::MatrixXd& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void pricing_oracle_pd()
{
    const auto t0 = clock_type::now();
    const auto p = fixtures::pd_set();
    const auto& b = p.base;
    const Eigen::Vector2d x(0.1, 0.7);
    const auto sde = oracle::risk_neutral(b.kappa, b.gamma, b.mu_xi, b.sigma_chi, b.sigma_xi,
                                          b.rho, b.lambda_chi, b.lambda_xi);
    const double* a = p.coeffs.alpha.data();
    const auto mc = oracle::euler_expectation(
        sde, x(0), x(1), tau_grid, mc_euler_step, mc_paths, 1001,
        [a](double c, double xi) { return oracle::poly2(a, c, xi); });
    bool pass = true;
    std::string detail = "|z| =";
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        const double z = (pd::futures_price(p, x, tau_grid[i]) - mc[i].mean) / mc[i].se;
        pass = pass && std::abs(z) < mc_se_multiple;
        detail += fmt(" %.2f", std::abs(z));
    }
    const double secs = seconds_since(t0);
    pass = pass && secs < pricing_runtime_s;
    report("pd pricing oracle", pass, detail + fmt(" (limit 3), %.1fs", secs));
}

void pricing_oracle_ss()
{
    const auto t0 = clock_type::now();
    const auto p = fixtures::a_oracle_set();
    const Eigen::Vector2d x(0.2, 0.5);
    const auto sde = oracle::risk_neutral(p.kappa, p.gamma, p.mu_xi, p.sigma_chi, p.sigma_xi,
                                          p.rho, p.lambda_chi, p.lambda_xi);
    const auto mc = oracle::euler_expectation(sde, x(0), x(1), tau_grid, mc_euler_step, mc_paths,
                                              2002,
                                              [](double c, double xi) { return std::exp(c + xi); });
    Eigen::VectorXd taus(static_cast<Eigen::Index>(tau_grid.size()));
    for (std::size_t i = 0; i < tau_grid.size(); ++i) taus(static_cast<Eigen::Index>(i)) = tau_grid[i];
    const auto lm = ss::build_measurement(p, taus);
    const Eigen::VectorXd model = lm.d + lm.F * x;
    bool pass = true;
    std::string detail = "|z| =";
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        // Delta method: se(log mean) = se(mean) / mean.
        const double se = mc[i].se / mc[i].mean;
        const double z = (model(static_cast<Eigen::Index>(i)) - std::log(mc[i].mean)) / se;
        pass = pass && std::abs(z) < mc_se_multiple;
        detail += fmt(" %.2f", std::abs(z));
    }
    const double secs = seconds_since(t0);
    pass = pass && secs < pricing_runtime_s;
    report("ss log-futures oracle", pass, detail + fmt(" (limit 3), %.1fs", secs));
}

void filter_equivalence()
{
    const auto p = fixtures::pd_linear_set();
    const auto errs = fixtures::errors(equivalence_m, 0.05, 0.02);
    const auto cfg =
        fixtures::config(ModelKind::pd, FilterKind::ekf, equivalence_n, equivalence_m, 314);
    const auto sim = sim::simulate(p, errs, cfg);
    const auto panel = estimation::observation_panel(ModelKind::pd, sim.prices, sim.maturities,
                                                     cfg.dt);
    const auto tr = ss::build_transition(p.base, cfg.dt);
    const auto init = filters::default_init(p.base);

    // Kalman filter on the closed-form linear pricing map.
    const auto& b = p.base;
    const auto& a = p.coeffs.alpha;
    const filters::LinearMeasurementFn lin = [&](const Eigen::VectorXd& taus) {
        ss::LinearMeasurement lm;
        lm.d.resize(taus.size());
        lm.F.resize(taus.size(), 2);
        for (Eigen::Index i = 0; i < taus.size(); ++i) {
            const auto c = oracle::linear_price_coeffs(a(0), a(1), a(2), b.kappa, b.gamma,
                                                       b.mu_xi, b.lambda_chi, b.lambda_xi,
                                                       taus(i));
            lm.d(i) = c(0);
            lm.F(i, 0) = c(1);
            lm.F(i, 1) = c(2);
        }
        return lm;
    };
    const auto kf = filters::linear_kalman_filter(tr, lin, panel, errs.covariance(), init);
    const auto ekf = filters::extended_kalman_filter(tr, p, panel, errs, init);
    const auto ukf = filters::unscented_kalman_filter(tr, p, panel, errs, init);
    const double g_ekf = max_abs(ekf.a_filt - kf.a_filt);
    const double g_ukf = max_abs(ukf.a_filt - kf.a_filt);
    char buf[160];
    std::snprintf(buf, sizeof buf, "max|EKF-KF| = %.2e (limit 1e-10), max|UKF-KF| = %.2e (limit 1e-6)",
                  g_ekf, g_ukf);
    report("filter equivalence", g_ekf < ekf_kf_gap && g_ukf < ukf_kf_gap, buf);
}

void jacobian_check()
{
    const auto p = fixtures::pd_set();
    std::mt19937_64 g(4242);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    double worst = 0.0;
    for (int k = 0; k < jacobian_draws; ++k) {
        const Eigen::Vector2d x(ux(g), ux(g));
        Eigen::VectorXd tau(1);
        tau << ut(g);
        const Eigen::MatrixXd j = pd::measurement_jacobian(p, x, tau);
        const Eigen::MatrixXd fd = oracle::central_jacobian(
            [&](const Eigen::Vector2d& y) { return pd::measurement(p, y, tau); }, x,
            jacobian_fd_step);
        worst = std::max(worst, (j - fd).norm() / j.norm());
    }
    report("jacobian check", worst < jacobian_rel,
           fmt("worst relative error %.2e (limit 1e-6)", worst));
}

void expm_check()
{
    std::mt19937_64 g(777);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double semigroup = 0.0, inverse = 0.0, series = 0.0;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(6, 6);
    for (int k = 0; k < expm_draws; ++k) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = i; j < 6; ++j) a(i, j) = u(g);
        const Eigen::MatrixXd ea = math::expm(a);
        const Eigen::MatrixXd e2 = math::expm(2.0 * a);
        semigroup = std::max(semigroup, (e2 - ea * ea).norm() / e2.norm());
        inverse = std::max(inverse, (ea * math::expm(-a) - id).norm() / id.norm());
        const Eigen::MatrixXd ref = oracle::expm_series(a);
        series = std::max(series, (ea - ref).norm() / ref.norm());
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "semigroup %.2e, inverse %.2e (limit 1e-10), series %.2e (limit 1e-12)",
                  semigroup, inverse, series);
    report("expm check", semigroup < expm_identity_rel && inverse < expm_identity_rel &&
                             series < expm_series_rel,
           buf);
}

void exact_discretization()
{
    const auto p = fixtures::ss_set();
    const double dt = 1.0 / 360.0;
    const auto tr = ss::build_transition(p, dt);
    const auto tr2 = ss::build_transition(p, 2.0 * dt);

    // Fine-step Euler integration of the real-measure SDE over one step.
    const auto sde =
        oracle::real_measure(p.kappa, p.gamma, p.mu_xi, p.sigma_chi, p.sigma_xi, p.rho);
    const auto euler = oracle::sample_covariance(oracle::euler_transitions(
        sde, 0.0, p.mu_xi / p.gamma, dt, transition_substeps, transition_draws, 3003));

    // One-step transitions produced by the simulator itself.
    const auto cfg = fixtures::config(ModelKind::ss, FilterKind::kf,
                                      static_cast<int>(transition_draws) + 1, 1, 3004);
    const auto panel = sim::simulate(p, fixtures::errors(1), cfg);
    const Eigen::Index n = panel.states.rows() - 1;
    Eigen::MatrixXd w(n, 2);
    for (Eigen::Index t = 0; t < n; ++t)
        w.row(t) = (panel.states.row(t + 1).transpose() - tr.c -
                    tr.E * panel.states.row(t).transpose())
                       .transpose();
    const auto simulated = oracle::sample_covariance(w);

    double worst_z = 0.0;
    for (const auto* est : {&euler, &simulated})
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j)
                worst_z = std::max(worst_z,
                                   std::abs(est->cov(i, j) - tr.Sigma_w(i, j)) / est->se(i, j));
    const double comp = max_abs(tr2.E - tr.E * tr.E);
    char buf[160];
    std::snprintf(buf, sizeof buf, "worst |z| %.2f (limit 5), |E(2dt)-E(dt)^2| = %.1e (limit 1e-12)",
                  worst_z, comp);
    report("exact discretization", worst_z < transition_se_multiple && comp < composition_tol,
           buf);
}

void coverage_test()
{
    const auto t0 = clock_type::now();
    const auto cfg = fixtures::config(ModelKind::ss, FilterKind::kf, coverage_n_obs, coverage_m,
                                      coverage_seed);
    const auto r = diagnostics::coverage_rate(fixtures::ss_set(), fixtures::errors(coverage_m),
                                              cfg, coverage_n_traj, 0.95, 0.95);
    const double secs = seconds_since(t0);
    csv::write_file_atomic("coverage_acceptance.json", diagnostics::to_json_text(r));
    char buf[160];
    std::snprintf(buf, sizeof buf, "rate %.2f (must exceed 0.95), seed %llu, %.1fs",
                  r.coverage_rate, static_cast<unsigned long long>(r.seed), secs);
    report("coverage rate", r.pass && secs < coverage_runtime_s, buf);
}

void cross_interface()
{
    bool same = true;
    std::string detail;
    for (const char* model : {"ss", "pd"}) {
        json spec = json::parse(R"({
            "params": {"kappa": 0.5, "gamma": 0.3, "mu_xi": 0.2, "sigma_chi": 0.4,
                       "sigma_xi": 0.2, "rho": 0.0, "lambda_chi": 0.05, "lambda_xi": 0.02},
            "errors": {"sigma_first": 0.03, "sigma_last": 0.01},
            "n_obs": 250, "m": 5, "seed": 8675309
        })");
        spec["model"] = model;
        if (std::string(model) == "pd") spec["coeffs"] = {1, 1, 1, 0.5, 0.3, 0.2};
        const auto dir = fixtures::scratch_dir(std::string("acceptance_") + model);
        std::ofstream(dir / "params.json") << spec.dump(2);
        std::ostringstream out, err;
        const int code = cli::run({"simulate", "--params", (dir / "params.json").string(), "--out",
                                   (dir / "out").string()},
                                  out, err);
        service::Service svc;
        const auto sim = svc.simulate(spec.dump());
        if (code != 0 || sim.status != 200) {
            same = false;
            detail += std::string(model) + ": run failed; ";
            continue;
        }
        const std::string token = json::parse(sim.body)["token"];
        for (const char* what : {"prices", "maturities"}) {
            const std::string a = csv::read_file(dir / "out" / (std::string(what) + ".csv"));
            const std::string b = svc.export_csv(what, token).body;
            const bool eq = a == b;
            same = same && eq;
            detail += std::string(model) + "/" + what + (eq ? " identical; " : " DIFFER; ");
        }
    }
    report("cross-interface determinism", same, detail);
}

void covariance_hygiene()
{
    std::mt19937_64 g(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_asym = 0.0, worst_psd = 0.0;
    std::size_t checked = 0;
    for (int k = 0; k < hygiene_panels; ++k) {
        ss::SSParams b;
        b.kappa = 0.2 + 2.5 * u(g);
        b.gamma = 0.05 + 0.9 * b.kappa * u(g);
        b.mu_xi = -0.5 + 1.5 * u(g);
        b.sigma_chi = 0.05 + 0.8 * u(g);
        b.sigma_xi = 0.05 + 0.5 * u(g);
        b.lambda_chi = -0.2 + 0.4 * u(g);
        b.lambda_xi = -0.2 + 0.4 * u(g);
        const int m = 1 + static_cast<int>(6 * u(g));
        const ss::MeasurementErrorSpec errs{m, 0.002 + 0.08 * u(g), 0.002 + 0.08 * u(g)};
        const int which = k % 3;
        sim::ModelParams params;
        FilterKind filter = FilterKind::kf;
        if (which == 0) {
            b.rho = -0.9 + 1.8 * u(g);
            params = b;
        } else {
            b.rho = 0.0;
            pd::PDParams pdp;
            pdp.base = b;
            for (int i = 0; i < 6; ++i) pdp.coeffs.alpha(i) = -1.0 + 2.0 * u(g);
            params = pdp;
            filter = which == 1 ? FilterKind::ekf : FilterKind::ukf;
        }
        const auto cfg = fixtures::config(which == 0 ? ModelKind::ss : ModelKind::pd, filter, 400,
                                          m, 5000 + k);
        const auto sim = sim::simulate(params, errs, cfg);
        const auto panel =
            estimation::observation_panel(cfg.model_kind, sim.prices, sim.maturities, cfg.dt);
        const auto out = estimation::run_filter(params, errs, filter, panel);
        const auto check = [&](const Eigen::MatrixXd& c) {
            const double scale = std::max(1.0, max_abs(c));
            worst_asym = std::max(worst_asym, max_abs(c - c.transpose()) / scale);
            const double tr = c.trace();
            const double mn =
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff();
            worst_psd = std::max(worst_psd, -mn / tr);
            ++checked;
        };
        for (const auto& c : out.P_pred) check(c);
        for (const auto& c : out.P_filt) check(c);
        for (const auto& c : out.innovation_cov) check(c);
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%zu matrices: max asymmetry %.1e (limit 1e-12), worst -min_eig/trace %.1e "
                  "(limit 1e-9)",
                  checked, worst_asym, worst_psd);
    report("covariance hygiene", worst_asym <= symmetry_tol && worst_psd <= psd_tol, buf);
}

void guarded(const char* name, const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

} // namespace

int main()
{
    guarded("pd pricing oracle", pricing_oracle_pd);
    guarded("ss log-futures oracle", pricing_oracle_ss);
    guarded("filter equivalence", filter_equivalence);
    guarded("jacobian check", jacobian_check);
    guarded("expm check", expm_check);
    guarded("exact discretization", exact_discretization);
    guarded("coverage rate", coverage_test);
    guarded("cross-interface determinism", cross_interface);
    guarded("covariance hygiene", covariance_hygiene);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
