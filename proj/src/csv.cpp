#include "pdsim/csv.hpp"

#include "pdsim/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace pdsim::csv {

namespace {

std::string to_chars_or_throw(double v, auto&&... format)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, format...);
    if (res.ec != std::errc{}) throw InvalidInput("cannot format number");
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_number(const std::string& s, const std::string& source, std::size_t line)
{
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw InvalidInput(source + ": line " + std::to_string(line) + ": bad number '" + s + "'",
                           source);
    return v;
}

} // namespace

std::string format_shortest(double v)
{
    return to_chars_or_throw(v);
}

std::string format_significant(double v, int digits)
{
    return to_chars_or_throw(v, std::chars_format::general, digits);
}

std::string write_table(const std::vector<std::string>& columns, const Eigen::MatrixXd& values,
                        NumberStyle style)
{
    if (static_cast<Eigen::Index>(columns.size()) != values.cols())
        throw InvalidInput("column names do not match the table width");
    std::string out = "obs";
    for (const auto& c : columns) out += "," + c;
    out += '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        out += std::to_string(i + 1);
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out += ',';
            out += style == NumberStyle::shortest ? format_shortest(values(i, j))
                                                  : format_significant(values(i, j), 10);
        }
        out += '\n';
    }
    return out;
}

std::vector<std::string> contract_columns(Eigen::Index m)
{
    std::vector<std::string> c;
    for (Eigen::Index j = 1; j <= m; ++j) c.push_back("C" + std::to_string(j));
    return c;
}

std::string prices_csv(const sim::SimulatedPanel& panel)
{
    return write_table(contract_columns(panel.prices.cols()), panel.prices, NumberStyle::shortest);
}

std::string maturities_csv(const sim::SimulatedPanel& panel)
{
    return write_table(contract_columns(panel.maturities.cols()), panel.maturities,
                       NumberStyle::ten_significant);
}

std::string states_csv(const sim::SimulatedPanel& panel)
{
    return write_table({"chi", "xi"}, panel.states, NumberStyle::shortest);
}

Table read_table(const std::string& text, const std::string& source)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(source + ": empty file", source);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line);
    if (header.empty() || header.front() != "obs")
        throw InvalidInput(source + ": header must start with 'obs'", source);

    Table t;
    t.columns.assign(header.begin() + 1, header.end());
    const auto width = t.columns.size();
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != width + 1)
            throw InvalidInput(source + ": line " + std::to_string(line_no) + " has " +
                                   std::to_string(cells.size()) + " fields, expected " +
                                   std::to_string(width + 1),
                               source);
        const double obs = parse_number(cells[0], source, line_no);
        if (obs != static_cast<double>(rows.size() + 1))
            throw InvalidInput(source + ": obs column must run 1..n", source);
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j)
            row.push_back(parse_number(cells[j], source, line_no));
        rows.push_back(std::move(row));
    }

    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return t;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string(), path.filename().string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace pdsim::csv
