// io.hpp — bit-stable artifact writers: fixed column order, %.17g, LF only.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ripple/errors.hpp"

namespace ripple::io {

/// A CSV cell: number (17 significant digits), integer, text, or empty.
using Cell = std::variant<std::monostate, double, long long, std::string>;

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_cell(const Cell& c) {
    switch (c.index()) {
    case 0: return {};
    case 1: return format_double(std::get<double>(c));
    case 2: return std::to_string(std::get<long long>(c));
    default: return std::get<std::string>(c);
    }
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != header_.size()) throw NumericalError("csv: row width does not match the header");
        rows_.push_back(cells);
    }
    std::size_t size() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        std::vector<std::string> tmp;
        for (const auto& r : rows_) {
            tmp.clear();
            for (const auto& c : r) tmp.push_back(format_cell(c));
            append_line(out, tmp);
        }
        return out;
    }

private:
    static void append_line(std::string& out, const std::vector<std::string>& f) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i) out += ',';
            out += f[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCategory::config, "cannot open " + path.string() + " for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw Error(ErrorCategory::config, "write to " + path.string() + " failed");
}

inline void write_csv(const std::filesystem::path& path, const CsvWriter& w) { write_text(path, w.str()); }

/// Pretty JSON with sorted keys (nlohmann objects are ordered maps) and a trailing LF.
inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

/// JSON cannot hold NaN or inf; those become null.
inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace ripple::io
