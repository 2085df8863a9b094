#pragma once

#include "pdsim/simulator.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace pdsim::csv {

// Export format shared by the CLI and the service: UTF-8, LF line endings,
// header row "obs,<columns>", 1-based observation index, '.' decimal point.

/// Shortest decimal string that parses back to the same double.
std::string format_shortest(double v);

/// Rounded to `digits` significant digits (printf %.<digits>g).
std::string format_significant(double v, int digits);

enum class NumberStyle { shortest, ten_significant };

std::string write_table(const std::vector<std::string>& columns, const Eigen::MatrixXd& values,
                        NumberStyle style);

/// "C1".."Cm".
std::vector<std::string> contract_columns(Eigen::Index m);

std::string prices_csv(const sim::SimulatedPanel& panel);
/// Maturities in years with 10 significant digits.
std::string maturities_csv(const sim::SimulatedPanel& panel);
std::string states_csv(const sim::SimulatedPanel& panel);

struct Table {
    std::vector<std::string> columns; ///< without "obs"
    Eigen::MatrixXd values;
};

/// Parses a table written by write_table. Checks the header starts with
/// "obs", that obs runs 1..n, and that every row has the header's width.
/// Throws InvalidInput naming the source on malformed input.
Table read_table(const std::string& text, const std::string& source = "csv");

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace pdsim::csv
