#pragma once

// CSV/JSON emission helpers for the command-line tool. All floating-point
// fields go through fmt17 (17 significant digits, '.' decimal separator) so
// identical runs produce byte-identical artifacts.

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qbattery/errors.hpp"

namespace qbcli {

using Json = nlohmann::ordered_json;

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
        if (!out_) throw qbattery::InvalidArgument("cannot open output file '" + path + "'");
        for (size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
        width_ = columns.size();
    }

    void row(const std::vector<std::optional<double>>& values) {
        if (values.size() != width_)
            throw qbattery::InvalidArgument("CSV row width mismatch");
        for (size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ",";
            if (values[i]) out_ << fmt17(*values[i]);
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
    size_t width_ = 0;
};

inline void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw qbattery::InvalidArgument("cannot open output file '" + path + "'");
    out << j.dump(2) << "\n";
}

}  // namespace qbcli
