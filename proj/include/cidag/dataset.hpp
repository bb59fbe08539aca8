#pragma once

// Column-major numeric table loaded from CSV. Rows with any missing cell are
// dropped at construction and counted.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cidag/error.hpp"
#include "cidag/graph.hpp"

namespace cidag {

inline constexpr std::size_t min_dataset_rows = 4;

class DatasetTable {
public:
    using Cell = std::optional<double>;

    DatasetTable() = default;

    /// rows[r][c] belongs to column names[c]; std::nullopt marks a gap.
    DatasetTable(std::vector<std::string> names, const std::vector<std::vector<Cell>>& rows) {
        std::vector<std::string> sorted = names;
        std::sort(sorted.begin(), sorted.end());
        if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end())
            throw DataError("duplicate column '" + *dup + "'");
        for (const auto& n : names)
            if (!is_valid_name(n)) throw DataError("invalid column name '" + n + "'");

        std::vector<const std::vector<Cell>*> complete;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != names.size())
                throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                                " cells, expected " + std::to_string(names.size()));
            bool ok = std::all_of(rows[r].begin(), rows[r].end(),
                                  [](const Cell& c) { return c && std::isfinite(*c); });
            if (ok)
                complete.push_back(&rows[r]);
            else
                ++dropped_;
        }
        if (complete.size() < min_dataset_rows)
            throw DataError("dataset needs at least " + std::to_string(min_dataset_rows) + " complete rows, got " +
                            std::to_string(complete.size()));

        names_ = std::move(names);
        data_.resize(static_cast<Eigen::Index>(complete.size()), static_cast<Eigen::Index>(names_.size()));
        for (std::size_t r = 0; r < complete.size(); ++r)
            for (std::size_t c = 0; c < names_.size(); ++c)
                data_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *(*complete[r])[c];
    }

    DatasetTable(std::vector<std::string> names, Eigen::MatrixXd data) : names_(std::move(names)), data_(std::move(data)) {
        if (static_cast<std::size_t>(data_.cols()) != names_.size())
            throw DataError("column count does not match the number of names");
        if (static_cast<std::size_t>(data_.rows()) < min_dataset_rows)
            throw DataError("dataset needs at least " + std::to_string(min_dataset_rows) + " rows");
        if (!data_.allFinite()) throw DataError("dataset contains non-finite values");
    }

    std::size_t row_count() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    std::size_t dropped_rows() const noexcept { return dropped_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const Eigen::MatrixXd& matrix() const noexcept { return data_; }

    std::optional<std::size_t> find(std::string_view name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }
    bool has_column(std::string_view name) const { return find(name).has_value(); }

    Eigen::VectorXd column(std::string_view name) const {
        auto c = find(name);
        if (!c) throw UnknownVariable(std::string(name));
        return data_.col(static_cast<Eigen::Index>(*c));
    }

    /// Names from `wanted` that have no column, in input order.
    std::vector<std::string> missing(const std::vector<std::string>& wanted) const {
        std::vector<std::string> out;
        for (const auto& w : wanted)
            if (!has_column(w)) out.push_back(w);
        return out;
    }

private:
    std::vector<std::string> names_;
    Eigen::MatrixXd data_;
    std::size_t dropped_ = 0;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null";
}

} // namespace detail

inline DatasetTable read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> names;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (detail::trim(line).empty()) continue;
        for (auto f : detail::split_csv_line(line)) names.emplace_back(detail::trim(f));
        break;
    }
    if (names.empty()) throw ParseError(line_no ? line_no : 1, 1, "CSV header row is missing");

    std::vector<std::vector<DatasetTable::Cell>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != names.size())
            throw ParseError(line_no, 1, "expected " + std::to_string(names.size()) + " fields, found " +
                                             std::to_string(fields.size()));
        std::vector<DatasetTable::Cell> row;
        row.reserve(fields.size());
        std::size_t column = 1;
        for (auto raw : fields) {
            auto f = detail::trim(raw);
            if (detail::is_missing_token(f)) {
                row.emplace_back(std::nullopt);
            } else {
                double v = 0;
                if (!f.empty() && f.front() == '+') f.remove_prefix(1);
                auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
                if (ec != std::errc() || ptr != f.data() + f.size())
                    throw ParseError(line_no, column, "not a number: '" + std::string(f) + "'");
                row.emplace_back(v);
            }
            column += raw.size() + 1;
        }
        rows.push_back(std::move(row));
    }
    return DatasetTable(std::move(names), rows);
}

inline DatasetTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_csv(in);
}

inline DatasetTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

/// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline void write_csv(std::ostream& out, const DatasetTable& t) {
    for (std::size_t c = 0; c < t.names().size(); ++c) out << (c ? "," : "") << t.names()[c];
    out << '\n';
    const auto& m = t.matrix();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_number(m(r, c));
        out << '\n';
    }
}

inline std::string to_csv(const DatasetTable& t) {
    std::ostringstream out;
    write_csv(out, t);
    return out.str();
}

inline std::string dataset_digest(const DatasetTable& t) { return hex64(fnv1a64(to_csv(t))); }

} // namespace cidag
