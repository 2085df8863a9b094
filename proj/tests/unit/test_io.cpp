#include "doctest.h"

#include "fixtures.hpp"

#include "pdsim/csv.hpp"
#include "pdsim/errors.hpp"
#include "pdsim/model_spec.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace pdsim;
using nlohmann::json;

namespace {

json ss_doc()
{
    return json::parse(R"({
        "model": "ss",
        "params": {"kappa": 0.5, "gamma": 0.3, "mu_xi": 1.0, "sigma_chi": 0.4,
                   "sigma_xi": 0.2, "rho": 0.3, "lambda_chi": 0.05, "lambda_xi": 0.02},
        "errors": {"sigma_first": 0.03, "sigma_last": 0.01},
        "n_obs": 10, "m": 5, "seed": 4
    })");
}

std::string schema_field(const json& doc)
{
    try {
        parse_model_spec(doc);
    } catch (const SchemaError& e) {
        return e.field();
    }
    return "<none>";
}

std::string invalid_field(const json& doc)
{
    try {
        validate(parse_model_spec(doc));
    } catch (const InvalidInput& e) {
        return e.field();
    }
    return "<none>";
}

int count_lines(const std::string& s)
{
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("shortest formatting round-trips")
{
    for (double v : {0.1, 1.0 / 3.0, 2.5e-300, -7.0, 123456.789, 0.0}) {
        const std::string s = csv::format_shortest(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(csv::format_shortest(0.1) == "0.1");
    CHECK(csv::format_shortest(2.0) == "2");
    CHECK(csv::format_significant(1.0 / 12.0, 10) == "0.08333333333");
    CHECK(csv::format_significant(0.25, 10) == "0.25");
}

TEST_CASE("table layout")
{
    Eigen::MatrixXd v(2, 2);
    v << 1.5, 2.0, -0.25, 3.0;
    const std::string t = csv::write_table({"C1", "C2"}, v, csv::NumberStyle::shortest);
    CHECK(t == "obs,C1,C2\n1,1.5,2\n2,-0.25,3\n");
    CHECK(t.find('\r') == std::string::npos);
    const auto cols = csv::contract_columns(3);
    CHECK(cols == std::vector<std::string>{"C1", "C2", "C3"});
}

TEST_CASE("simulated panel exports")
{
    const auto errs = fixtures::errors(5);
    const auto panel = sim::simulate(fixtures::ss_set(), errs,
                                     fixtures::config(ModelKind::ss, FilterKind::kf, 10, 5, 1));
    const std::string prices = csv::prices_csv(panel);
    const std::string mats = csv::maturities_csv(panel);
    const std::string states = csv::states_csv(panel);
    CHECK(count_lines(prices) == 11);
    CHECK(count_lines(mats) == 11);
    CHECK(prices.rfind("obs,C1,C2,C3,C4,C5\n", 0) == 0);
    CHECK(states.rfind("obs,chi,xi\n", 0) == 0);
    CHECK(mats.find("\n1,0.08333333333,0.1666666667,0.25,0.3333333333,0.4166666667\n") !=
          std::string::npos);

    const auto back = csv::read_table(prices);
    CHECK(back.columns == csv::contract_columns(5));
    CHECK(back.values == panel.prices);
    const auto mback = csv::read_table(mats);
    CHECK((mback.values - panel.maturities).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("malformed tables are rejected")
{
    CHECK_THROWS_AS(csv::read_table("", "x.csv"), InvalidInput);
    CHECK_THROWS_AS(csv::read_table("t,C1\n1,2\n"), InvalidInput);
    CHECK_THROWS_AS(csv::read_table("obs,C1\n2,2\n"), InvalidInput);
    CHECK_THROWS_AS(csv::read_table("obs,C1,C2\n1,2\n"), InvalidInput);
    CHECK_THROWS_AS(csv::read_table("obs,C1\n1,abc\n"), InvalidInput);
    try {
        csv::read_table("obs,C1\n1,abc\n", "prices.csv");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("prices.csv") != std::string::npos);
    }
}

TEST_CASE("atomic writes replace the file")
{
    const auto dir = fixtures::scratch_dir("io_atomic");
    const auto file = dir / "a.csv";
    csv::write_file_atomic(file, "one\n");
    csv::write_file_atomic(file, "two\n");
    CHECK(csv::read_file(file) == "two\n");
    CHECK(std::distance(std::filesystem::directory_iterator(dir),
                        std::filesystem::directory_iterator()) == 1);
    CHECK_THROWS(csv::read_file(dir / "missing.csv"));
}

TEST_CASE("spec parsing fills defaults")
{
    const ModelSpec s = parse_model_spec(ss_doc());
    CHECK(s.config.model_kind == ModelKind::ss);
    CHECK(s.config.filter_kind == FilterKind::kf);
    CHECK(s.config.dt == doctest::Approx(1.0 / 360.0));
    CHECK(s.config.seed == 4);
    CHECK(s.errors.m == 5);
    CHECK(validate(s).empty());

    json pd = ss_doc();
    pd["model"] = "pd";
    pd["params"]["rho"] = 0.0;
    pd["coeffs"] = {1, 1, 1, 0.5, 0.3, 0.2};
    const ModelSpec q = parse_model_spec(pd);
    CHECK(q.config.filter_kind == FilterKind::ekf);
    CHECK(std::get<pd::PDParams>(q.params).coeffs.alpha(3) == 0.5);

    json one = ss_doc();
    one["errors"].erase("sigma_last");
    CHECK(parse_model_spec(one).errors.sigma_last == 0.03);
}

TEST_CASE("spec round-trips through its canonical JSON")
{
    const ModelSpec s = parse_model_spec(ss_doc());
    const json canon = to_json(s);
    CHECK(to_json(parse_model_spec(canon)) == canon);
    CHECK(canon["filter"] == "kf");
    CHECK(canon.contains("dt"));
}

TEST_CASE("schema errors name the field")
{
    json d = ss_doc();
    d.erase("model");
    CHECK(schema_field(d) == "model");
    d = ss_doc();
    d["model"] = "heston";
    CHECK(schema_field(d) == "model");
    d = ss_doc();
    d["params"].erase("kappa");
    CHECK(schema_field(d) == "params.kappa");
    d = ss_doc();
    d["params"]["rho"] = "high";
    CHECK(schema_field(d) == "params.rho");
    d = ss_doc();
    d["n_obs"] = 2.5;
    CHECK(schema_field(d) == "n_obs");
    d = ss_doc();
    d["filter"] = "pf";
    CHECK(schema_field(d) == "filter");
    d = ss_doc();
    d["model"] = "pd";
    CHECK(schema_field(d) == "coeffs");
    d["coeffs"] = {1, 2, 3};
    CHECK(schema_field(d) == "coeffs");
    d = ss_doc();
    d["seed"] = -1;
    CHECK(schema_field(d) == "seed");
}

TEST_CASE("invariant violations name the field")
{
    json d = ss_doc();
    d["params"]["rho"] = 1.5;
    CHECK(invalid_field(d) == "rho");
    d = ss_doc();
    d["filter"] = "ukf";
    CHECK(invalid_field(d) == "filter");
    d = ss_doc();
    d["errors"]["sigma_first"] = 0.0;
    CHECK(invalid_field(d) == "errors.sigma_first");
    d = ss_doc();
    d["m"] = 0;
    CHECK(invalid_field(d) == "m");
    d = ss_doc();
    d["n_obs"] = 1;
    CHECK(invalid_field(d) == "n_obs");
}

TEST_CASE("schema document lists the required fields")
{
    const json& s = model_spec_schema();
    CHECK(s["required"].size() == 5);
    CHECK(s["properties"]["params"]["required"].size() == 8);
}
