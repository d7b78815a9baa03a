// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "darap/darap.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace darap;

namespace {

int failures = 0;

void report(int criterion, const std::string& label, bool ok, double seconds,
            const std::string& detail = "") {
    std::printf("%s  criterion %2d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", criterion,
                label.c_str(), seconds, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <typename F>
void run_criterion(int criterion, const std::string& label, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(criterion, label, ok, s, detail);
}

// 1. Identity fixed point on tetrahedron / 642-vertex icosphere / 10k organic.
bool criterion_identity(std::string& detail) {
    const std::vector<std::pair<std::string, Mesh>> meshes = {
        {"tetrahedron", fixtures::tetrahedron()},
        {"icosphere3", fixtures::icosphere(3)},
        {"organic5", fixtures::organic(5)}};
    for (const auto& [name, m] : meshes) {
        const auto ops = build_operators(m);
        const TargetNormals targets = vertex_normals(m);
        const double diag = bbox_diagonal(m);
        for (double lambda : {0.1, 1.0, 8.0, 100.0}) {
            DeformConfig config;
            config.lambda = lambda;
            const double dev = (deform(m, *ops, targets, config).deformed.V - m.V)
                                   .rowwise()
                                   .norm()
                                   .maxCoeff();
            if (!(dev < 1e-6 * diag)) {
                detail = name + " lambda=" + std::to_string(lambda) +
                         " deviation=" + std::to_string(dev / diag) + " diag";
                return false;
            }
        }
    }
    return true;
}

// 2. Dense-oracle equivalence on all fixtures <= 500 vertices.
bool criterion_dense_oracles(std::string& detail) {
    const std::vector<std::pair<std::string, Mesh>> meshes = {
        {"tetrahedron", fixtures::tetrahedron()},  {"cube", fixtures::cube()},
        {"equilateral", fixtures::equilateral_pair()}, {"grid6", fixtures::flat_grid(6)},
        {"icosphere1", fixtures::icosphere(1)},    {"icosphere2", fixtures::icosphere(2)}};
    std::mt19937 rng(2024);
    for (const auto& [name, m] : meshes) {
        const auto ops = build_operators(m);
        RotationField rot(static_cast<size_t>(m.num_vertices()));
        for (auto& r : rot) r = fixtures::random_rotation(rng);
        const MatX3 rhs = assemble_rhs(*ops, m, rot);
        const MatX3 dense_rhs = oracles::dense_rhs(m, rot);
        const double rhs_err = (rhs - dense_rhs).cwiseAbs().maxCoeff();
        if (!(rhs_err < 1e-12 * (1.0 + dense_rhs.cwiseAbs().maxCoeff()))) {
            detail = name + " rhs error " + std::to_string(rhs_err);
            return false;
        }
        const Vec3 c = ops->mass_centroid(m.V);
        const MatX3 v = global_step(*ops, rhs, c);
        const MatX3 vd = oracles::dense_pinned_solve(m, rhs, ops->pinned_vertex, ops->masses, c);
        const double gerr = (v - vd).norm() / vd.norm();
        if (!(gerr < 1e-8)) {
            detail = name + " global rel error " + std::to_string(gerr);
            return false;
        }
        const GradientOperators g = build_gradient_ops(m);
        std::vector<Mat3> jac(static_cast<size_t>(m.num_faces()));
        std::normal_distribution<double> gauss;
        for (auto& j : jac) {
            j = Mat3::Identity();
            for (int i = 0; i < 9; ++i) j(i) += 0.2 * gauss(rng);
        }
        const MatX3 nv = njf_poisson(m, g, *ops, jac, c);
        const MatX3 nd = oracles::dense_njf_solve(m, jac, ops->pinned_vertex, ops->masses, c);
        const double nerr = (nv - nd).norm() / nd.norm();
        if (!(nerr < 1e-8)) {
            detail = name + " njf rel error " + std::to_string(nerr);
            return false;
        }
    }
    return true;
}

// 3. Procrustes correctness on 1000 random single-vertex instances.
bool criterion_procrustes(std::string& detail) {
    std::mt19937 rng(77);
    std::normal_distribution<double> gauss;
    std::mt19937 rot_rng(78);
    for (int inst = 0; inst < 1000; ++inst) {
        std::vector<std::pair<Vec3, double>> edges;
        const int ne = 4 + inst % 9;
        for (int e = 0; e < ne; ++e)
            edges.push_back({Vec3(gauss(rng), gauss(rng), gauss(rng)), 0.05 + std::abs(gauss(rng))});
        const Vec3 u = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        const Vec3 uhat = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        const double nw = 0.1 + std::abs(gauss(rng));
        Mat3 x = Mat3::Zero();
        for (const auto& [edge, w] : edges) x += w * edge * edge.transpose();
        x += nw * u * uhat.transpose();
        const Mat3 r = detail::procrustes_rotation(x, nullptr, nullptr, nullptr);
        if (!((r.transpose() * r - Mat3::Identity()).norm() < 1e-8)) {
            detail = "orthogonality failure at instance " + std::to_string(inst);
            return false;
        }
        const double e_star = oracles::procrustes_energy(r, edges, u, uhat, nw);
        if (e_star > oracles::procrustes_energy(Mat3::Identity(), edges, u, uhat, nw) + 1e-9) {
            detail = "identity beats solver at instance " + std::to_string(inst);
            return false;
        }
        for (int t = 0; t < 100; ++t) {
            if (e_star >
                oracles::procrustes_energy(fixtures::random_rotation(rot_rng), edges, u, uhat, nw) + 1e-9) {
                detail = "random rotation beats solver at instance " + std::to_string(inst);
                return false;
            }
        }
        // Brute-force agreement on a subsample (the search is the slow part).
        if (inst % 25 == 0) {
            const Mat3 rb = oracles::brute_force_rotation(edges, u, uhat, nw);
            if (!(oracles::rotation_angle_between(r, rb) < 1e-3)) {
                detail = "brute-force disagreement " +
                         std::to_string(oracles::rotation_angle_between(r, rb)) + " rad at instance " +
                         std::to_string(inst);
                return false;
            }
        }
    }
    return true;
}

// 4. Gradient exactness: 20 random directions x 2 meshes x lambda in {1, 8}.
bool criterion_gradients(std::string& detail) {
    const std::vector<std::pair<std::string, Mesh>> meshes = {
        {"icosphere1", fixtures::icosphere(1)}, {"grid6", fixtures::flat_grid(6)}};
    std::mt19937 rng(301);
    std::normal_distribution<double> gauss;
    for (const auto& [name, m] : meshes) {
        const auto ops = build_operators(m);
        TargetNormals targets = vertex_normals(m);
        for (Eigen::Index i = 0; i < targets.size(); ++i) targets(i) += 0.25 * gauss(rng);
        MatX3 w(m.num_vertices(), 3);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = gauss(rng);
        for (double lambda : {1.0, 8.0}) {
            DeformConfig config;
            config.lambda = lambda;
            LocalStepCache cache;
            MatX3 pre;
            deform(m, *ops, targets, config, &cache, &pre);
            const MatX3 grad = vjp_deform(m, *ops, config, cache, pre, w);
            const double h = 1e-4;
            for (int d = 0; d < 20; ++d) {
                MatX3 dir(m.num_vertices(), 3);
                for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = gauss(rng);
                dir /= dir.norm();
                const auto loss_at = [&](const TargetNormals& t) {
                    return (w.array() * deform(m, *ops, t, config).deformed.V.array()).sum();
                };
                const double fd =
                    (loss_at(targets + h * dir) - loss_at(targets - h * dir)) / (2.0 * h);
                const double an = (grad.array() * dir.array()).sum();
                const double rel = std::abs(an - fd) / std::max(1e-12, std::abs(fd));
                if (!(rel < 1e-4)) {
                    detail = name + " lambda=" + std::to_string(lambda) + " dir " +
                             std::to_string(d) + " rel " + std::to_string(rel);
                    return false;
                }
            }
        }
    }
    return true;
}

// 5. Rigid-motion equivariance of deform on every fixture.
bool criterion_equivariance(std::string& detail) {
    const std::vector<std::pair<std::string, Mesh>> meshes = {
        {"tetrahedron", fixtures::tetrahedron()}, {"cube", fixtures::cube()},
        {"grid5", fixtures::flat_grid(5)},        {"icosphere2", fixtures::icosphere(2)},
        {"organic2", fixtures::organic(2)}};
    std::mt19937 rng(55);
    for (const auto& [name, m] : meshes) {
        const Mat3 q = fixtures::random_rotation(rng);
        const Vec3 t(0.3, -1.1, 2.0);
        Mesh mq = m;
        mq.V = (m.V * q.transpose()).rowwise() + t.transpose();
        const TargetNormals targets =
            fixtures::random_unit_rows(m.num_vertices(), 900 + static_cast<unsigned>(m.num_vertices()));
        const TargetNormals tq = targets * q.transpose();
        const auto ops = build_operators(m);
        const auto opsq = build_operators(mq);
        const MatX3 a = deform(m, *ops, targets, {}).deformed.V;
        const MatX3 b = deform(mq, *opsq, tq, {}).deformed.V;
        const MatX3 expected = (a * q.transpose()).rowwise() + t.transpose();
        const double err = (b - expected).cwiseAbs().maxCoeff() / bbox_diagonal(m);
        if (!(err < 1e-8)) {
            detail = name + " equivariance error " + std::to_string(err);
            return false;
        }
    }
    return true;
}

// 6. Lambda semantics: zero recovers source, 1e6 aligns, sweep monotone.
bool criterion_lambda(std::string& detail) {
    const Mesh m = fixtures::icosphere(2);
    const auto ops = build_operators(m);
    const MatX3 normals = vertex_normals(m);
    const TargetNormals targets = fixtures::random_unit_rows(m.num_vertices(), 606);
    DeformConfig c0;
    c0.lambda = 0.0;
    const double dev0 = (deform(m, *ops, targets, c0).deformed.V - m.V).cwiseAbs().maxCoeff();
    if (!(dev0 < 1e-6 * bbox_diagonal(m))) {
        detail = "lambda=0 deviation " + std::to_string(dev0);
        return false;
    }
    const auto mean_angle = [&](double lambda, double* max_angle) {
        DeformConfig config;
        config.lambda = lambda;
        const RotationField rot = local_step(*ops, m, normals, targets, config);
        double sum = 0.0, mx = 0.0;
        for (Eigen::Index k = 0; k < m.num_vertices(); ++k) {
            const Vec3 ru = rot[static_cast<size_t>(k)] * normals.row(k).transpose();
            const double a = std::acos(std::clamp(ru.dot(targets.row(k).normalized().transpose()), -1.0, 1.0));
            sum += a;
            mx = std::max(mx, a);
        }
        if (max_angle) *max_angle = mx;
        return sum / static_cast<double>(m.num_vertices());
    };
    double mx = 0.0;
    mean_angle(1e6, &mx);
    if (!(mx < 1e-3)) {
        detail = "lambda=1e6 max angle " + std::to_string(mx);
        return false;
    }
    double prev = mean_angle(0.0, nullptr);
    for (double lambda : {1.0, 8.0, 100.0, 1e6}) {
        const double cur = mean_angle(lambda, nullptr);
        if (cur > prev + 1e-12) {
            detail = "sweep not monotone at lambda=" + std::to_string(lambda);
            return false;
        }
        prev = cur;
    }
    return true;
}

// 7. Cubify stylization at desk scale, deterministic.
bool criterion_cubify(std::string& detail) {
    const Mesh m = fixtures::icosphere(2);
    const auto ops = build_operators(m);
    OptimizeConfig config;
    config.lambda = 8.0;
    config.learning_rate = 0.002;
    config.epochs = 300;
    config.seed = 1;
    const auto make_source = [&] {
        return std::make_shared<NormalMatchSource>(cubify_targets(m), ops->masses, m.F);
    };
    const OptimizeResult a = optimize(m, *ops, {make_source()}, config);
    const OptimizeResult b = optimize(m, *ops, {make_source()}, config);
    for (size_t i = 0; i < a.trace.size(); ++i) {
        if (a.trace[i].loss != b.trace[i].loss || a.trace[i].grad_norm != b.trace[i].grad_norm) {
            detail = "trace differs between identical runs at row " + std::to_string(i);
            return false;
        }
    }
    const double first = a.trace[1].loss, last = a.trace.back().loss;
    if (!(last < 0.5 * first)) {
        detail = "loss " + std::to_string(first) + " -> " + std::to_string(last);
        return false;
    }
    const double dev_src = axis_deviation(m), dev_out = axis_deviation(a.deformed);
    if (!(dev_out < dev_src)) {
        detail = "axis deviation did not improve";
        return false;
    }
    // Golden value frozen from the first verified build of this configuration.
    const double golden = 0.303430;
    if (std::abs(dev_out - golden) > 1e-4) {
        detail = "axis deviation drifted from golden: " + std::to_string(dev_out) + " vs " +
                 std::to_string(golden);
        return false;
    }
    detail = "axis deviation " + std::to_string(dev_src) + " -> " + std::to_string(dev_out);
    return true;
}

// 8. Mask containment during optimization, every epoch.
bool criterion_mask(std::string& detail) {
    const Mesh m = fixtures::icosphere(2);
    const auto ops = build_operators(m);
    OptimizeConfig config;
    config.epochs = 25;
    config.learning_rate = 0.01;
    config.mask.assign(static_cast<size_t>(m.num_vertices()), 0);
    for (Eigen::Index k = 0; k < m.num_vertices(); ++k)
        if (m.V(k, 2) > 0) config.mask[static_cast<size_t>(k)] = 1;
    bool ok = true;
    std::string why;
    const EpochObserver observer = [&](const EpochInfo& info) {
        for (Eigen::Index k = 0; k < m.num_vertices(); ++k) {
            if (config.mask[static_cast<size_t>(k)]) continue;
            if ((info.rotations[static_cast<size_t>(k)] - Mat3::Identity()).cwiseAbs().maxCoeff() != 0.0) {
                ok = false;
                why = "non-identity rotation outside mask at epoch " + std::to_string(info.epoch);
            }
            if (info.target_gradient.row(k).cwiseAbs().maxCoeff() != 0.0) {
                ok = false;
                why = "nonzero gradient outside mask at epoch " + std::to_string(info.epoch);
            }
        }
    };
    auto src = std::make_shared<NormalMatchSource>(cubify_targets(m), ops->masses, m.F);
    optimize(m, *ops, {src}, config, {}, observer);
    detail = why;
    return ok;
}

// 9. dARAP global solve is faster than the NJF Poisson solve (>= 10k faces).
// Timing repeats are interleaved and the slowest 20% discarded per stage so
// scheduler spikes on shared hardware cannot flip the small real gap.
bool criterion_benchmark(std::string& detail) {
    const Mesh m = fixtures::icosphere(5);  // 10242 vertices, 20480 faces, F/V ~ 2
    const auto ops = build_operators(m);
    const GradientOperators g = build_gradient_ops(m);

    std::mt19937 rng(7);
    std::normal_distribution<double> gauss;
    const MatX3 source_normals = vertex_normals(m);
    TargetNormals targets(m.num_vertices(), 3);
    for (Eigen::Index i = 0; i < targets.rows(); ++i)
        targets.row(i) = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized().transpose();
    const RotationField rotations = local_step(*ops, m, source_normals, targets, {});
    std::vector<Mat3> jacobians(static_cast<size_t>(m.num_faces()));
    for (auto& j : jacobians) {
        j = Mat3::Identity();
        for (int i = 0; i < 9; ++i) j(i) += 0.1 * gauss(rng);
    }
    const Vec3 centroid = ops->mass_centroid(m.V);
    double checksum = 0.0;
    const auto darap_body = [&] {
        const MatX3 v = global_step(*ops, assemble_rhs(*ops, m, rotations), centroid);
        checksum += v(v.rows() / 2, 0);
    };
    const auto njf_body = [&] {
        const MatX3 v = njf_poisson(m, g, *ops, jacobians, centroid);
        checksum += v(v.rows() / 2, 0);
    };

    using clock = std::chrono::steady_clock;
    const auto once = [&](const std::function<void()>& body) {
        const auto t0 = clock::now();
        body();
        return std::chrono::duration<double>(clock::now() - t0).count();
    };
    darap_body();
    njf_body();  // warm-up
    const int repeats = 50;
    std::vector<double> td, tn;
    for (int r = 0; r < repeats; ++r) {
        td.push_back(once(darap_body));
        tn.push_back(once(njf_body));
    }
    const auto trimmed_mean = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const size_t keep = v.size() - v.size() / 5;
        double sum = 0.0;
        for (size_t i = 0; i < keep; ++i) sum += v[i];
        return sum / static_cast<double>(keep);
    };
    const double darap_mean = trimmed_mean(td), njf_mean = trimmed_mean(tn);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "darap_global %.4fs vs njf_poisson %.4fs (trimmed mean of %d interleaved repeats)",
                  darap_mean, njf_mean, repeats);
    detail = buf;
    return std::isfinite(checksum) && darap_mean > 0 && darap_mean < njf_mean;
}

// 10. Area-ratio metrics on identity and scaled-then-restored pairs.
bool criterion_metrics(std::string& detail) {
    const Mesh m = normalize_unit_cube(fixtures::organic(3)).first;
    const AreaRatioStats id = area_ratio_stats(m, m);
    if (!(std::abs(id.mean - 1.0) < 1e-9 && id.std_dev < 1e-9)) {
        detail = "identity pair mean/std off";
        return false;
    }
    Mesh scaled = m;
    scaled.V *= 2.0;
    const Mesh restored = restore_bbox_diagonal(scaled, m);
    const AreaRatioStats rs = area_ratio_stats(m, restored);
    if (!(std::abs(rs.mean - 1.0) < 1e-9)) {
        detail = "restored pair mean " + std::to_string(rs.mean);
        return false;
    }
    long total = 0;
    for (const auto& b : rs.histogram) total += b.count;
    if (total != rs.n_faces) {
        detail = "histogram does not conserve n_faces";
        return false;
    }
    return true;
}

// 11. Wire-protocol conformance against the out-of-process stub.
bool criterion_protocol(std::string& detail) {
    namespace fs = std::filesystem;
    const Mesh m = fixtures::icosphere(1);
    const auto ops = build_operators(m);
    const fs::path tmp = fs::temp_directory_path() / "darap_acceptance";
    fs::create_directories(tmp);
    const std::string target_obj = (tmp / "target.obj").string();
    Mesh target = m;
    target.V *= 1.25;
    save_obj(target, target_obj);

    OptimizeConfig config;
    config.epochs = 20;
    config.learning_rate = 0.01;
    auto in_proc = std::make_shared<VertexMatchSource>(target.V);
    auto ext = std::make_shared<ExternalGuidanceSource>(
        std::string(GUIDANCE_STUB_PATH) + " vertex-match " + target_obj);
    const OptimizeResult ra = optimize(m, *ops, {in_proc}, config);
    const OptimizeResult rb = optimize(m, *ops, {ext}, config);
    if (ra.trace.size() != rb.trace.size()) {
        detail = "trace length mismatch";
        return false;
    }
    for (size_t i = 0; i < ra.trace.size(); ++i) {
        if (std::abs(ra.trace[i].loss - rb.trace[i].loss) > 1e-10 * (1.0 + std::abs(ra.trace[i].loss)) ||
            std::abs(ra.trace[i].grad_norm - rb.trace[i].grad_norm) >
                1e-10 * (1.0 + ra.trace[i].grad_norm)) {
            detail = "trace row " + std::to_string(i) + " differs beyond 1e-10";
            return false;
        }
    }

    // NaN stub through the CLI must exit with the protocol code.
    const std::string src_obj = (tmp / "src.obj").string();
    save_obj(m, src_obj);
    const std::string cmd = std::string(DARAP_CLI_PATH) + " stylize --mesh " + src_obj + " --out " +
                            (tmp / "out.obj").string() + " --driver external --external-cmd '" +
                            GUIDANCE_STUB_PATH + " nan' --epochs 2 2> /dev/null";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (code != 4) {
        detail = "NaN stub exit code " + std::to_string(code) + ", expected 4";
        return false;
    }
    return true;
}

}  // namespace

int main() {
    run_criterion(1, "identity fixed point across lambda", criterion_identity);
    run_criterion(2, "dense-oracle equivalence", criterion_dense_oracles);
    run_criterion(3, "Procrustes correctness (1000 instances)", criterion_procrustes);
    run_criterion(4, "gradient exactness vs finite differences", criterion_gradients);
    run_criterion(5, "rigid-motion equivariance", criterion_equivariance);
    run_criterion(6, "lambda semantics and monotonicity", criterion_lambda);
    run_criterion(7, "cubify stylization, deterministic", criterion_cubify);
    run_criterion(8, "mask containment every epoch", criterion_mask);
    run_criterion(9, "global solve beats NJF baseline", criterion_benchmark);
    run_criterion(10, "area-ratio metrics", criterion_metrics);
    run_criterion(11, "guidance wire-protocol conformance", criterion_protocol);
    if (failures) {
        std::printf("%d criterion(s) FAILED\n", failures);
        return 1;
    }
    std::printf("all 11 criteria passed\n");
    return 0;
}
