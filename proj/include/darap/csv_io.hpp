#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "darap/mesh.hpp"

namespace darap {

// Target-normal CSV: one "nx,ny,nz" row per vertex, mesh vertex order.
inline MatX3 load_normals_csv(const std::string& path, Eigen::Index expected_rows = -1) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open normals CSV: " + path);
    std::vector<Vec3> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Vec3 v;
        char comma;
        if (!(ss >> v[0] >> comma >> v[1] >> comma >> v[2]))
            throw data_error("normals CSV parse error at line " + std::to_string(line_no) + " of " + path);
        rows.push_back(v);
    }
    if (expected_rows >= 0 && static_cast<Eigen::Index>(rows.size()) != expected_rows)
        throw data_error("normals CSV row count mismatch: expected " + std::to_string(expected_rows) +
                         ", got " + std::to_string(rows.size()));
    MatX3 out(static_cast<Eigen::Index>(rows.size()), 3);
    for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i];
    return out;
}

inline void save_normals_csv(const MatX3& normals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open file for writing: " + path);
    char buf[128];
    for (Eigen::Index i = 0; i < normals.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", normals(i, 0), normals(i, 1), normals(i, 2));
        out << buf;
    }
}

// Mask file: one 0/1 per line, |V| lines; 1 = stylized region.
inline std::vector<char> load_mask(const std::string& path, Eigen::Index expected_rows) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open mask file: " + path);
    std::vector<char> mask;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] != '0' && line[0] != '1')
            throw data_error("mask file entries must be 0 or 1: " + path);
        mask.push_back(line[0] == '1' ? 1 : 0);
    }
    if (static_cast<Eigen::Index>(mask.size()) != expected_rows)
        throw data_error("mask row count mismatch: expected " + std::to_string(expected_rows) +
                         ", got " + std::to_string(mask.size()));
    return mask;
}

// Rotation field debug dump: 9 values per row, row-major.
inline void save_rotations_csv(const std::vector<Mat3>& rotations, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open file for writing: " + path);
    for (const Mat3& r : rotations) {
        char buf[384];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2));
        out << buf;
    }
}

}  // namespace darap
