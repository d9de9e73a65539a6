#pragma once

// Trajectory serialization: CSV with columns lambda, x0..x{n-1}, v0..v{n-1}
// (17 significant digits, enough to round-trip doubles) and a JSON form used
// by the command-line reports.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "varpath/dynamics.hpp"

namespace varpath {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    const int n = traj.xs.empty() ? 0 : static_cast<int>(traj.xs.front().size());
    out << "lambda";
    for (int a = 0; a < n; ++a) out << ",x" << a;
    for (int a = 0; a < n; ++a) out << ",v" << a;
    out << "\n";
    for (size_t i = 0; i < traj.samples(); ++i) {
        out << format_real(traj.lambdas[i]);
        for (int a = 0; a < n; ++a) out << "," << format_real(traj.xs[i][a]);
        for (int a = 0; a < n; ++a) out << "," << format_real(traj.vs[i][a]);
        out << "\n";
    }
    return out.str();
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw NumericsError("cannot open trajectory output file: " + path);
    f << trajectory_csv(traj);
    if (!f) throw NumericsError("failed writing trajectory file: " + path);
}

inline Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NumericsError("cannot open trajectory file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw NumericsError("trajectory file is empty: " + path);
    size_t cols = 1;
    for (char c : line) cols += (c == ',');
    if (cols < 3 || cols % 2 == 0)
        throw NumericsError("trajectory header must have 1 + 2*dim columns: " + path);
    const size_t n = (cols - 1) / 2;
    Trajectory traj;
    traj.method = "file";
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        Vec vals;
        vals.reserve(cols);
        while (std::getline(row, cell, ',')) {
            try {
                size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw NumericsError("bad number \"" + cell + "\" at line " +
                                    std::to_string(lineno) + " of " + path);
            }
        }
        if (vals.size() != cols)
            throw NumericsError("wrong column count at line " + std::to_string(lineno) + " of " +
                                path);
        traj.lambdas.push_back(vals[0]);
        traj.xs.emplace_back(vals.begin() + 1, vals.begin() + 1 + n);
        traj.vs.emplace_back(vals.begin() + 1 + n, vals.end());
    }
    return traj;
}

inline nlohmann::ordered_json trajectory_json(const Trajectory& traj) {
    nlohmann::ordered_json j;
    j["method"] = traj.method;
    j["samples"] = traj.samples();
    j["steps_accepted"] = traj.steps_accepted;
    j["steps_rejected"] = traj.steps_rejected;
    j["max_scaled_error"] = traj.max_scaled_error;
    j["lambda"] = traj.lambdas;
    j["x"] = traj.xs;
    j["v"] = traj.vs;
    return j;
}

}  // namespace varpath
