#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "darap/autodiff.hpp"
#include "darap/deform.hpp"
#include "darap/guidance_process.hpp"

namespace darap {

// ---------------------------------------------------------------------------
// Target-normal generators

// Snap each vertex normal to the nearest signed coordinate axis. Ties break
// x before y before z; a zero component snaps to the positive sign.
inline TargetNormals cubify_targets(const Mesh& mesh) {
    const MatX3 normals = vertex_normals(mesh);
    TargetNormals targets = TargetNormals::Zero(mesh.num_vertices(), 3);
    for (Eigen::Index k = 0; k < normals.rows(); ++k) {
        int axis = 0;
        double best = std::abs(normals(k, 0));
        for (int a = 1; a < 3; ++a) {
            if (std::abs(normals(k, a)) > best) {
                best = std::abs(normals(k, a));
                axis = a;
            }
        }
        targets(k, axis) = normals(k, axis) < 0 ? -1.0 : 1.0;
    }
    return targets;
}

// Piecewise-constant normal-to-normal map over a spherical triangulation.
struct SphericalField {
    Mesh sphere;     // vertices on the unit sphere
    MatX3 face_dirs; // one unit target direction per sphere face

    Vec3 lookup(const Vec3& u) const {
        constexpr double tol = -1e-10;
        for (Eigen::Index f = 0; f < sphere.F.rows(); ++f) {
            const Vec3 a = sphere.V.row(sphere.F(f, 0)).normalized();
            const Vec3 b = sphere.V.row(sphere.F(f, 1)).normalized();
            const Vec3 c = sphere.V.row(sphere.F(f, 2)).normalized();
            if (a.cross(b).dot(u) >= tol && b.cross(c).dot(u) >= tol && c.cross(a).dot(u) >= tol)
                return face_dirs.row(f);
        }
        throw data_error("spherical field table gap: direction not covered");
    }
};

inline TargetNormals field_targets(const Mesh& mesh, const SphericalField& table) {
    const MatX3 normals = vertex_normals(mesh);
    TargetNormals targets(mesh.num_vertices(), 3);
    for (Eigen::Index k = 0; k < normals.rows(); ++k)
        targets.row(k) = table.lookup(normals.row(k)).transpose();
    return targets;
}

inline TargetNormals field_targets(const Mesh& mesh, const std::function<Vec3(const Vec3&)>& table) {
    const MatX3 normals = vertex_normals(mesh);
    TargetNormals targets(mesh.num_vertices(), 3);
    for (Eigen::Index k = 0; k < normals.rows(); ++k)
        targets.row(k) = table(normals.row(k)).transpose();
    return targets;
}

// ---------------------------------------------------------------------------
// Per-source weight schedules (piecewise-linear ramps, constant extension)

struct GuidanceSchedule {
    struct Segment {
        int start_epoch, end_epoch;
        double start_weight, end_weight;
    };
    struct Source {
        std::string name;
        std::vector<Segment> segments;  // epoch-ordered, non-overlapping
    };
    std::vector<Source> sources;

    // Constant 1.0 for sources without an entry.
    double weight_or_default(const std::string& name, int epoch) const {
        for (const auto& s : sources)
            if (s.name == name) return eval_segments(s.segments, epoch);
        return 1.0;
    }

    static double eval_segments(const std::vector<Segment>& segs, int epoch) {
        if (segs.empty()) return 1.0;
        if (epoch <= segs.front().start_epoch) return segs.front().start_weight;
        double last = segs.front().start_weight;
        for (const auto& s : segs) {
            if (epoch < s.start_epoch) return last;  // gap: hold previous end value
            if (epoch <= s.end_epoch) {
                const double t = (s.end_epoch == s.start_epoch)
                                     ? 1.0
                                     : static_cast<double>(epoch - s.start_epoch) / (s.end_epoch - s.start_epoch);
                return s.start_weight + t * (s.end_weight - s.start_weight);
            }
            last = s.end_weight;
        }
        return last;
    }
};

inline double schedule_weight(const GuidanceSchedule& schedule, const std::string& source, int epoch) {
    for (const auto& s : schedule.sources)
        if (s.name == source) return GuidanceSchedule::eval_segments(s.segments, epoch);
    throw data_error("schedule_weight: unknown source '" + source + "'");
}

inline MatX3 combine_gradients(const std::vector<MatX3>& grads, const std::vector<double>& weights) {
    if (grads.empty() || grads.size() != weights.size())
        throw data_error("combine_gradients: shape mismatch");
    MatX3 out = MatX3::Zero(grads[0].rows(), 3);
    for (size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].rows() != out.rows()) throw data_error("combine_gradients: shape mismatch");
        out += weights[i] * grads[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Guidance sources: scalar loss + gradient w.r.t. deformed vertex positions

class GuidanceSource {
  public:
    virtual ~GuidanceSource() = default;
    virtual std::string name() const = 0;
    virtual void init(const Mesh& /*source*/, double /*lambda*/) {}
    // Returns {loss, dLoss/dVhat} for the current deformed vertices.
    virtual std::pair<double, MatX3> eval(int epoch, const MatX3& deformed_vertices) = 0;
    virtual void finish() {}
};

// 1/2 sum_k a_k |n_k(Vhat) - t_k|^2 over area-weighted deformed vertex
// normals. The unnormalized normal m_k is half the sum of incident corner
// cross products, which makes the gradient a plain cross-product adjoint.
class NormalMatchSource final : public GuidanceSource {
  public:
    NormalMatchSource(MatX3 target_field, Eigen::VectorXd masses, MatX3i faces)
        : targets_(std::move(target_field)), masses_(std::move(masses)), faces_(std::move(faces)) {}

    std::string name() const override { return "normal-match"; }

    std::pair<double, MatX3> eval(int /*epoch*/, const MatX3& v) override {
        const Eigen::Index n = v.rows(), nf = faces_.rows();
        MatX3 m = MatX3::Zero(n, 3);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const Vec3 a = v.row(faces_(f, 0)), b = v.row(faces_(f, 1)), c = v.row(faces_(f, 2));
            const Vec3 cr = 0.5 * (b - a).cross(c - a);
            for (int s = 0; s < 3; ++s) m.row(faces_(f, s)) += cr.transpose();
        }
        double loss = 0.0;
        MatX3 dm = MatX3::Zero(n, 3);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double len = m.row(k).norm();
            if (len <= 1e-12) continue;  // degenerate star: no contribution
            const Vec3 nk = m.row(k) / len;
            const Vec3 diff = nk - targets_.row(k).transpose();
            loss += 0.5 * masses_[k] * diff.squaredNorm();
            const Vec3 dn = masses_[k] * diff;
            dm.row(k) = ((dn - nk.dot(dn) * nk) / len).transpose();
        }
        MatX3 grad = MatX3::Zero(n, 3);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const Vec3 g = 0.5 * (dm.row(faces_(f, 0)) + dm.row(faces_(f, 1)) + dm.row(faces_(f, 2))).transpose();
            const Vec3 a = v.row(faces_(f, 0)), b = v.row(faces_(f, 1)), c = v.row(faces_(f, 2));
            const Vec3 e1 = b - a, e2 = c - a;
            const Vec3 bg = e2.cross(g), ga = g.cross(e1);
            grad.row(faces_(f, 1)) += bg.transpose();
            grad.row(faces_(f, 2)) += ga.transpose();
            grad.row(faces_(f, 0)) -= (bg + ga).transpose();
        }
        return {loss, grad};
    }

  private:
    MatX3 targets_;
    Eigen::VectorXd masses_;
    MatX3i faces_;
};

// 1/2 |Vhat - T|^2 against a fixed target vertex array.
class VertexMatchSource final : public GuidanceSource {
  public:
    explicit VertexMatchSource(MatX3 target_vertices) : target_(std::move(target_vertices)) {}
    std::string name() const override { return "vertex-match"; }
    std::pair<double, MatX3> eval(int /*epoch*/, const MatX3& v) override {
        if (v.rows() != target_.rows()) throw data_error("vertex-match: vertex count mismatch");
        const MatX3 diff = v - target_;
        return {0.5 * diff.squaredNorm(), diff};
    }

  private:
    MatX3 target_;
};

// Out-of-process guidance speaking newline-delimited JSON on stdin/stdout.
class ExternalGuidanceSource final : public GuidanceSource {
  public:
    explicit ExternalGuidanceSource(std::string command, double timeout_seconds = 120.0)
        : command_(std::move(command)), timeout_(timeout_seconds) {}

    std::string name() const override { return "external"; }

    void init(const Mesh& source, double lambda) override {
        proc_ = std::make_unique<LineProcess>(command_);
        nlohmann::json msg;
        msg["type"] = "init";
        msg["meta"] = {{"lambda", lambda}};
        auto& verts = msg["vertices"] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < source.V.rows(); ++i)
            verts.push_back({source.V(i, 0), source.V(i, 1), source.V(i, 2)});
        auto& faces = msg["faces"] = nlohmann::json::array();
        for (Eigen::Index f = 0; f < source.F.rows(); ++f)
            faces.push_back({source.F(f, 0), source.F(f, 1), source.F(f, 2)});
        proc_->write_line(msg.dump());
    }

    std::pair<double, MatX3> eval(int epoch, const MatX3& v) override {
        if (!proc_) throw protocol_error("external guidance used before init");
        nlohmann::json msg;
        msg["type"] = "step";
        msg["epoch"] = epoch;
        auto& verts = msg["vertices"] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.rows(); ++i) verts.push_back({v(i, 0), v(i, 1), v(i, 2)});
        proc_->write_line(msg.dump());

        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(proc_->read_line(timeout_));
        } catch (const nlohmann::json::exception& e) {
            throw protocol_error(std::string("external guidance: bad JSON reply: ") + e.what());
        }
        if (reply.value("type", "") != "grad")
            throw protocol_error("external guidance: unexpected message type '" +
                                 reply.value("type", "") + "'");
        if (reply.value("epoch", -1) != epoch)
            throw protocol_error("external guidance: epoch mismatch in reply");
        double loss = 0.0;
        MatX3 grad(v.rows(), 3);
        try {
            loss = reply.at("loss").get<double>();
            const auto& grad_json = reply.at("grad");
            if (static_cast<Eigen::Index>(grad_json.size()) != v.rows())
                throw protocol_error("external guidance: gradient shape mismatch: expected " +
                                     std::to_string(v.rows()) + " rows, got " +
                                     std::to_string(grad_json.size()));
            for (Eigen::Index i = 0; i < v.rows(); ++i)
                for (int c = 0; c < 3; ++c)
                    grad(i, c) = grad_json[static_cast<size_t>(i)][static_cast<size_t>(c)].get<double>();
        } catch (const nlohmann::json::exception& e) {
            // NaN/Inf serialize as null, missing fields, wrong shapes: all
            // malformed replies, not internal errors.
            throw protocol_error(std::string("external guidance: malformed reply: ") + e.what());
        }
        if (!std::isfinite(loss) || !grad.allFinite())
            throw protocol_error("external guidance: non-finite loss or gradient");
        return {loss, grad};
    }

    void finish() override {
        if (proc_) {
            try {
                proc_->write_line("{\"type\":\"close\"}");
            } catch (const protocol_error&) {
            }
            proc_.reset();
        }
    }

  private:
    std::string command_;
    double timeout_;
    std::unique_ptr<LineProcess> proc_;
};

// ---------------------------------------------------------------------------
// Optimization loop

struct OptimizeConfig {
    double lambda = 8.0;
    double learning_rate = 0.002;
    int epochs = 2500;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    int updates_per_epoch = 1;  // 2 = apply the epoch's gradient twice
    std::vector<char> mask;
    bool restore_bbox = false;
    unsigned seed = 0;  // forwarded to stochastic sources; built-ins are deterministic
};

struct TraceRow {
    int epoch;
    std::string source;
    double weight, loss, grad_norm;
};

inline void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& os) {
    os << "epoch,source,weight,loss,grad_norm\n";
    char buf[192];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g,%.17g\n", r.epoch, r.source.c_str(),
                      r.weight, r.loss, r.grad_norm);
        os << buf;
    }
}

struct OptimizeResult {
    TargetNormals targets;
    Mesh deformed;
    RotationField rotations;
    std::vector<TraceRow> trace;
};

struct EpochInfo {
    int epoch;
    const RotationField& rotations;
    const MatX3& target_gradient;
    const MatX3& deformed_vertices;
};
using EpochObserver = std::function<void(const EpochInfo&)>;

// Gradient descent on raw target normals, initialized to the source vertex
// normals, with Adam updates at a constant learning rate. Each epoch runs one
// forward deform, queries every source for dLoss/dVhat, combines with
// schedule weights, and backpropagates through dARAP.
inline OptimizeResult optimize(const Mesh& mesh, const SurfaceOperators& ops,
                               const std::vector<std::shared_ptr<GuidanceSource>>& sources,
                               const OptimizeConfig& config, const GuidanceSchedule& schedule = {},
                               const EpochObserver& observer = {}) {
    if (sources.empty()) throw data_error("optimize: at least one guidance source required");
    if (config.learning_rate <= 0 || config.epochs < 1)
        throw data_error("optimize: learning_rate must be > 0 and epochs >= 1");

    DeformConfig dc;
    dc.lambda = config.lambda;
    dc.mask = config.mask;
    dc.restore_bbox = config.restore_bbox;

    OptimizeResult result;
    result.targets = vertex_normals(mesh);  // initial guess: source normals
    MatX3 adam_m = MatX3::Zero(mesh.num_vertices(), 3);
    MatX3 adam_v = MatX3::Zero(mesh.num_vertices(), 3);
    long adam_t = 0;

    for (const auto& src : sources) src->init(mesh, config.lambda);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        LocalStepCache cache;
        MatX3 pre_restore;
        const DeformResult fwd = deform(mesh, ops, result.targets, dc, &cache, &pre_restore);

        MatX3 upstream = MatX3::Zero(mesh.num_vertices(), 3);
        double total_loss = 0.0;
        for (const auto& src : sources) {
            std::pair<double, MatX3> lg;
            try {
                lg = src->eval(epoch, fwd.deformed.V);
            } catch (const protocol_error& e) {
                throw protocol_error("guidance source '" + src->name() + "' failed at epoch " +
                                     std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(lg.first) || !lg.second.allFinite())
                throw protocol_error("guidance source '" + src->name() +
                                     "' returned non-finite values at epoch " + std::to_string(epoch));
            const double w = schedule.weight_or_default(src->name(), epoch);
            result.trace.push_back({epoch, src->name(), w, lg.first, lg.second.norm()});
            upstream += w * lg.second;
            total_loss += w * lg.first;
        }

        const MatX3 grad = vjp_deform(mesh, ops, dc, cache, pre_restore, upstream);
        result.trace.push_back({epoch, "total", 1.0, total_loss, grad.norm()});
        if (observer) observer({epoch, fwd.rotations, grad, fwd.deformed.V});

        for (int u = 0; u < config.updates_per_epoch; ++u) {
            ++adam_t;
            adam_m = config.beta1 * adam_m + (1.0 - config.beta1) * grad;
            adam_v = config.beta2 * adam_v.array().matrix() +
                     (1.0 - config.beta2) * grad.array().square().matrix();
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam_t));
            result.targets.array() -= config.learning_rate * (adam_m.array() / bc1) /
                                      ((adam_v.array() / bc2).sqrt() + config.adam_eps);
        }
    }

    for (const auto& src : sources) src->finish();

    const DeformResult final_fwd = deform(mesh, ops, result.targets, dc);
    result.deformed = final_fwd.deformed;
    result.rotations = final_fwd.rotations;
    return result;
}

}  // namespace darap
