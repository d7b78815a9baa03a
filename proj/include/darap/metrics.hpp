#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "darap/mesh.hpp"

namespace darap {

struct AreaRatioStats {
    double mean = 0.0;
    double std_dev = 0.0;  // population std
    struct Bin {
        double left, right;  // last bin is the overflow bin, right = +inf
        long count;
    };
    std::vector<Bin> histogram;
    long n_faces = 0;

    void write_csv(std::ostream& os) const {
        os << "mean,std,n\n" << mean << ',' << std_dev << ',' << n_faces << '\n';
        os << "bin_left,bin_right,count\n";
        for (const auto& b : histogram) os << b.left << ',' << b.right << ',' << b.count << '\n';
    }
};

// Per-face deformed/source area ratios. Expects the paper's normalization to
// already be applied (source in the side-2 cube, deformed bbox-diagonal
// restored); asserts it rather than re-applying. Histogram is fixed-width
// over [0, 3] plus an overflow bin.
inline AreaRatioStats area_ratio_stats(const Mesh& source, const Mesh& deformed, int bins = 60,
                                       bool check_normalization = true) {
    if (source.F.rows() != deformed.F.rows() || source.V.rows() != deformed.V.rows() ||
        source.F != deformed.F)
        throw data_error("area_ratio_stats: meshes must share connectivity");
    if (check_normalization) {
        auto [lo, hi] = bounding_box(source);
        if (std::abs((hi - lo).maxCoeff() - 2.0) > 1e-6)
            throw data_error("area_ratio_stats: source is not normalized to a side-2 cube");
        if (std::abs(bbox_diagonal(deformed) - bbox_diagonal(source)) > 1e-6 * bbox_diagonal(source))
            throw data_error("area_ratio_stats: deformed bbox diagonal not restored to source's");
    }
    const Eigen::VectorXd a_src = face_areas(source);
    const Eigen::VectorXd a_def = face_areas(deformed);

    AreaRatioStats stats;
    stats.n_faces = static_cast<long>(source.F.rows());
    Eigen::VectorXd ratio(source.F.rows());
    for (Eigen::Index f = 0; f < source.F.rows(); ++f) {
        if (a_src[f] <= 0) throw data_error("area_ratio_stats: zero source face area at " + std::to_string(f));
        ratio[f] = a_def[f] / a_src[f];
    }
    stats.mean = ratio.mean();
    stats.std_dev = std::sqrt((ratio.array() - stats.mean).square().mean());

    const double span = 3.0, width = span / bins;
    stats.histogram.resize(static_cast<size_t>(bins) + 1);
    for (int b = 0; b < bins; ++b) stats.histogram[static_cast<size_t>(b)] = {b * width, (b + 1) * width, 0};
    stats.histogram.back() = {span, std::numeric_limits<double>::infinity(), 0};
    for (Eigen::Index f = 0; f < ratio.size(); ++f) {
        int b = static_cast<int>(ratio[f] / width);
        if (ratio[f] >= span || b >= bins) b = bins;
        if (b < 0) b = 0;
        stats.histogram[static_cast<size_t>(b)].count += 1;
    }
    return stats;
}

struct DisplacementStats {
    double mean = 0.0, max = 0.0;
    Eigen::VectorXd per_vertex;
};

inline DisplacementStats displacement_stats(const Mesh& source, const Mesh& deformed) {
    if (source.V.rows() != deformed.V.rows())
        throw data_error("displacement_stats: vertex count mismatch");
    DisplacementStats s;
    s.per_vertex = (deformed.V - source.V).rowwise().norm();
    s.mean = s.per_vertex.mean();
    s.max = s.per_vertex.maxCoeff();
    return s;
}

// Area-weighted mean angle of face normals to the nearest signed axis.
inline double axis_deviation(const Mesh& mesh) {
    double weighted = 0.0, total = 0.0;
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        const Vec3 a = mesh.V.row(mesh.F(f, 0)), b = mesh.V.row(mesh.F(f, 1)), c = mesh.V.row(mesh.F(f, 2));
        const Vec3 cr = (b - a).cross(c - a);
        const double area = 0.5 * cr.norm();
        if (area <= 0) throw data_error("axis_deviation: zero-area face " + std::to_string(f));
        const Vec3 n = cr.normalized();
        const double align = std::min(1.0, n.cwiseAbs().maxCoeff());
        weighted += area * std::acos(align);
        total += area;
    }
    return weighted / total;
}

}  // namespace darap
